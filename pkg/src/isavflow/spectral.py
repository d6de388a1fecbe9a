"""Periodic grid, real-FFT transforms, and diagonal spectral operators.

Everything here works on uniform nx-by-ny grids with periodic boundary
conditions. Linear operators (the Laplacian-based stiffness and mobility
operators) are diagonal in Fourier space, so applying them is a forward
transform, a pointwise multiply by a per-mode symbol, and an inverse
transform. Real fields are kept real by construction through the
rfft2/irfft2 pair; all symbols used in this package are even functions
of the wavenumber.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

__all__ = [
    "Grid",
    "Field",
    "OperatorSymbols",
    "FieldNorms",
    "make_grid",
    "operator_symbols",
    "apply_symbol",
    "inner",
    "norms",
    "quad_form_hat",
    "dealias_mask",
    "resample",
]


@dataclass(frozen=True)
class Grid:
    """Uniform periodic grid on [0, lx) x [0, ly).

    nx, ny must be even and at least 4 so the Nyquist mode is well-defined.
    Wavenumbers follow the standard FFT ordering: index j maps to
    k_j = 2*pi/l * (j if j <= n/2 else j - n).
    """

    nx: int
    ny: int
    lx: float
    ly: float

    def __post_init__(self):
        for name, n in (("nx", self.nx), ("ny", self.ny)):
            if int(n) != n or n < 4:
                raise ValueError(f"{name} must be an integer >= 4, got {n}")
            if n % 2 != 0:
                raise ValueError(f"{name} must be even, got {n}")
        for name, l in (("lx", self.lx), ("ly", self.ly)):
            if not (l > 0):
                raise ValueError(f"{name} must be positive, got {l}")
        object.__setattr__(self, "hx", self.lx / self.nx)
        object.__setattr__(self, "hy", self.ly / self.ny)
        # Signed wavenumbers in FFT ordering; the y axis also gets the
        # half-spectrum layout used by rfft2.
        kx = 2.0 * np.pi * np.fft.fftfreq(self.nx, d=self.hx)
        ky = 2.0 * np.pi * np.fft.fftfreq(self.ny, d=self.hy)
        ky_half = 2.0 * np.pi * np.fft.rfftfreq(self.ny, d=self.hy)
        object.__setattr__(self, "kx", kx)
        object.__setattr__(self, "ky", ky)
        object.__setattr__(self, "ky_half", ky_half)
        object.__setattr__(self, "lap_sym", kx[:, None] ** 2 + ky_half[None, :] ** 2)
        # Parseval weights for the rfft2 half-spectrum: interior columns
        # stand for a conjugate pair, the ky=0 and Nyquist columns do not.
        w = np.full((self.nx, self.ny // 2 + 1), 2.0)
        w[:, 0] = 1.0
        w[:, -1] = 1.0
        object.__setattr__(self, "mode_weight", w)
        object.__setattr__(self, "cell_area", self.hx * self.hy)
        object.__setattr__(self, "spectral_scale", self.hx * self.hy / (self.nx * self.ny))

    @property
    def shape(self):
        return (self.nx, self.ny)

    @property
    def spectral_shape(self):
        return (self.nx, self.ny // 2 + 1)

    def nodes(self):
        """Node coordinate arrays X, Y of shape (nx, ny)."""
        x = np.arange(self.nx) * self.hx
        y = np.arange(self.ny) * self.hy
        return np.meshgrid(x, y, indexing="ij")

    def forward(self, values: np.ndarray) -> np.ndarray:
        return np.fft.rfft2(values)

    def inverse(self, hat: np.ndarray) -> np.ndarray:
        return np.fft.irfft2(hat, s=self.shape)

    def quad(self, values: np.ndarray) -> float:
        """Nodal quadrature of a gridded integrand over the domain."""
        return float(self.cell_area * values.sum())


def make_grid(nx: int, ny: int, lx: float, ly: float) -> Grid:
    """Build a periodic grid, rejecting odd or tiny sizes."""
    return Grid(nx, ny, lx, ly)


@dataclass
class Field:
    """Real scalar field sampled at the grid nodes, shape (nx, ny).

    Values are stored row-major over (x, y); NaN/Inf entries are rejected
    at construction, which also covers every transform round-trip since
    those return new Fields.
    """

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != self.grid.shape:
            raise ValueError(f"field shape {v.shape} does not match grid {self.grid.shape}")
        if not np.isfinite(v).all():
            raise ValueError("field contains NaN or Inf entries")
        self.values = v

    def copy(self) -> "Field":
        return Field(self.grid, self.values.copy())

    def __add__(self, other: "Field") -> "Field":
        _require_same_grid(self, other)
        return Field(self.grid, self.values + other.values)

    def __sub__(self, other: "Field") -> "Field":
        _require_same_grid(self, other)
        return Field(self.grid, self.values - other.values)

    def __mul__(self, c: float) -> "Field":
        return Field(self.grid, self.values * c)

    __rmul__ = __mul__


def _require_same_grid(u: Field, v: Field):
    if u.grid != v.grid:
        raise ValueError("fields live on different grids")


@dataclass(frozen=True)
class OperatorSymbols:
    """Per-mode symbols of the operators used by the schemes.

    lap is the symbol of -Laplacian (|k|^2), g_sym the mobility
    gamma*|k|^(2*alpha), and sqrt_l / sqrt_g their square roots (used for
    seminorms). Arrays are laid out on the rfft2 half-spectrum,
    shape (nx, ny//2 + 1).
    """

    alpha: float
    gamma: float
    lap: np.ndarray
    g_sym: np.ndarray
    sqrt_l: np.ndarray
    sqrt_g: np.ndarray


def operator_symbols(grid: Grid, alpha: float, gamma: float) -> OperatorSymbols:
    """Symbols of -Laplacian and the dissipation operator gamma*(-Lap)^alpha.

    For alpha = 0 the zero mode of g_sym is gamma (the operator is gamma*I);
    for alpha > 0 it vanishes, which is what conserves the mean.
    """
    if not (0.0 <= alpha <= 1.0):
        raise ValueError(f"alpha must lie in [0, 1], got {alpha}")
    if not (gamma > 0):
        raise ValueError(f"gamma must be positive, got {gamma}")
    lap = grid.lap_sym
    with np.errstate(divide="ignore"):
        g_sym = gamma * lap**alpha if alpha != 0.0 else gamma * np.ones_like(lap)
        sqrt_g = np.sqrt(gamma) * lap ** (alpha / 2.0) if alpha != 0.0 else np.sqrt(gamma) * np.ones_like(lap)
    return OperatorSymbols(
        alpha=alpha,
        gamma=gamma,
        lap=lap,
        g_sym=g_sym,
        sqrt_l=np.sqrt(lap),
        sqrt_g=sqrt_g,
    )


def apply_symbol(field: Field, symbol: np.ndarray, sign: float = 1.0) -> Field:
    """Apply a diagonal spectral operator: inverse(symbol * forward(u)) * sign.

    The symbol must be even under k -> -k, which on the half-spectrum layout
    constrains only the self-conjugate ky=0 and ky=Nyquist columns (entries
    at +-kx equal). Every operator built here is a function of |k|^2 and
    satisfies this automatically; the rfft2/irfft2 pair then keeps real
    fields real by construction, with no imaginary residue to discard.
    """
    g = field.grid
    if symbol.shape != g.spectral_shape:
        raise ValueError(
            f"symbol shape {symbol.shape} does not match spectral layout {g.spectral_shape}"
        )
    out = g.inverse(symbol * g.forward(field.values))
    return Field(g, sign * out)


def inner(u: Field, v: Field) -> float:
    """L2 inner product by nodal quadrature, hx*hy * sum(u*v)."""
    _require_same_grid(u, v)
    return u.grid.quad(u.values * v.values)


def quad_form_hat(grid: Grid, hat: np.ndarray, symbol: np.ndarray | None = None) -> float:
    """Quadratic form sum_k symbol_k |u_hat_k|^2 in quadrature normalization.

    With symbol None this equals inner(u, u) by Parseval.
    """
    p = grid.mode_weight * (hat.real**2 + hat.imag**2)
    if symbol is not None:
        p = symbol * p
    return float(grid.spectral_scale * p.sum())


class FieldNorms(NamedTuple):
    l2: float
    grad_l2: float
    h1: float
    g_half: float


def norms(u: Field, sym: OperatorSymbols) -> FieldNorms:
    """L2 norm, gradient seminorm, H1 norm, and the mobility seminorm of u."""
    hat = u.grid.forward(u.values)
    l2_sq = quad_form_hat(u.grid, hat)
    grad_sq = quad_form_hat(u.grid, hat, sym.lap)
    g_half_sq = quad_form_hat(u.grid, hat, sym.g_sym)
    return FieldNorms(
        l2=np.sqrt(l2_sq),
        grad_l2=np.sqrt(grad_sq),
        h1=np.sqrt(l2_sq + grad_sq),
        g_half=np.sqrt(g_half_sq),
    )


def dealias_mask(grid: Grid) -> np.ndarray:
    """2/3-rule mask on the half-spectrum (off by default everywhere)."""
    cut_x = (2.0 / 3.0) * np.abs(grid.kx).max()
    cut_y = (2.0 / 3.0) * np.abs(grid.ky).max()
    mx = np.abs(grid.kx)[:, None] <= cut_x
    my = np.abs(grid.ky_half)[None, :] <= cut_y
    return (mx & my).astype(float)


def _axis_map(n_src: int, n_dst: int) -> np.ndarray:
    """Mode-copy matrix (n_dst x n_src) between FFT orderings of even sizes.

    Downsampling folds the +-Nyquist pair of the source into the single
    Nyquist bin of the target; upsampling splits the source Nyquist bin in
    half between the +-Nyquist bins of the target. Both keep real fields
    real and reproduce nodal values of the trigonometric interpolant.
    """
    R = np.zeros((n_dst, n_src))
    if n_dst == n_src:
        np.fill_diagonal(R, 1.0)
        return R
    if n_dst < n_src:
        m = n_dst
        for j in range(m // 2):
            R[j, j] = 1.0
        R[m // 2, m // 2] = 1.0
        R[m // 2, n_src - m // 2] = 1.0
        for q in range(1, m // 2):
            R[m // 2 + q, n_src - m // 2 + q] = 1.0
        return R
    n = n_src
    for j in range(n // 2):
        R[j, j] = 1.0
    R[n // 2, n // 2] = 0.5
    R[n_dst - n // 2, n // 2] = 0.5
    for j in range(n // 2 + 1, n):
        R[n_dst - n + j, j] = 1.0
    return R


def resample(field: Field, new_grid: Grid) -> Field:
    """Spectral restriction/interpolation of a field onto another grid.

    Both grids must cover the same physical domain. The result samples the
    trigonometric interpolant of the input at the new grid's nodes.
    """
    g = field.grid
    if not (np.isclose(g.lx, new_grid.lx) and np.isclose(g.ly, new_grid.ly)):
        raise ValueError("resample requires matching domain lengths")
    if g.shape == new_grid.shape:
        return Field(new_grid, field.values.copy())
    hat = np.fft.fft2(field.values)
    Rx = _axis_map(g.nx, new_grid.nx)
    Ry = _axis_map(g.ny, new_grid.ny)
    hat_new = Rx @ hat @ Ry.T
    scale = (new_grid.nx * new_grid.ny) / (g.nx * g.ny)
    out = np.fft.ifft2(hat_new) * scale
    return Field(new_grid, out.real)
