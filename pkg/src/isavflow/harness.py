"""Experiment drivers: single runs, convergence studies, scheme comparisons.

Runs emit one CSV row per recorded step with a fixed column order and
optional plain-text field snapshots that round-trip bit-exactly. A
convergence study sweeps the time step or the grid against a reference
solution and reports H1 errors with observed orders; a comparison study
runs two configs that differ only in the scheme and merges their series
for side-by-side plotting.
"""

from __future__ import annotations

import csv
import math
import os
from dataclasses import dataclass, replace

import numpy as np

from .config import ConfigError, RunConfig, initial_field
from .diagnostics import h1_error, record_step
from .potentials import NonPositiveBulkEnergyError
from .schemes import (
    EnergyLawViolation,
    ModelParams,
    Scheme,
    SchemeState,
    bootstrap_bdf,
    make_initial_state,
    step,
    step_isav_be,
)
from .spectral import Field, Grid, make_grid

__all__ = [
    "SchemeRuntimeError",
    "SimulationResult",
    "run_simulation",
    "convergence_study",
    "compare_schemes",
    "write_series_csv",
    "write_snapshot",
    "read_snapshot",
    "resolve_outdir",
]

SERIES_COLUMNS = (
    "step", "t", "E_orig", "E_mod", "E2", "D_be", "D_bdf",
    "r_drift", "mass", "min_phi", "max_phi",
)

OUTDIR_ENV = "ISAVFLOW_OUTDIR"


class SchemeRuntimeError(RuntimeError):
    """A scheme failed mid-run (nonpositive bulk integral or a violated
    energy-law assertion); carries the failing step index."""

    def __init__(self, step_index: int, cause: Exception):
        super().__init__(f"scheme failed at step {step_index}: {cause}")
        self.step_index = step_index
        self.cause = cause


@dataclass
class SimulationResult:
    config: RunConfig
    records: list
    final_state: SchemeState
    grid: Grid
    series_path: str | None = None
    snapshot_paths: list | None = None


def resolve_outdir(outdir=None) -> str:
    """Directory for relative output paths; the environment wins over the
    caller, which wins over the working directory."""
    return os.environ.get(OUTDIR_ENV) or (str(outdir) if outdir is not None else ".")


def _resolve(path: str, outdir: str) -> str:
    return path if os.path.isabs(path) else os.path.join(outdir, path)


def _fmt(x) -> str:
    if x is None:
        return ""
    return repr(float(x))


def write_series_csv(path, records) -> None:
    """Fixed-order, locale-free CSV of step records."""
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(SERIES_COLUMNS)
        for r in records:
            w.writerow(
                [r.step, _fmt(r.t), _fmt(r.E_orig), _fmt(r.E_mod), _fmt(r.E2),
                 _fmt(r.D_be), _fmt(r.D_bdf), _fmt(r.r_drift), _fmt(r.mass),
                 _fmt(r.min_phi), _fmt(r.max_phi)]
            )


def write_snapshot(path, field: Field, t: float) -> None:
    """Plain-text field dump: header 'nx ny lx ly t', then row-major values
    at 17 significant digits, which round-trips float64 exactly."""
    g = field.grid
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    with open(path, "w") as fh:
        fh.write(f"{g.nx} {g.ny} {g.lx:.17g} {g.ly:.17g} {t:.17g}\n")
        for row in field.values:
            fh.write(" ".join(f"{v:.17g}" for v in row) + "\n")


def read_snapshot(path):
    """Inverse of write_snapshot; returns (Field, t)."""
    with open(path) as fh:
        head = fh.readline().split()
        nx, ny = int(head[0]), int(head[1])
        lx, ly, t = float(head[2]), float(head[3]), float(head[4])
        values = np.loadtxt(fh, ndmin=2)
    grid = make_grid(nx, ny, lx, ly)
    if values.shape != (nx, ny):
        raise ValueError(f"snapshot body shape {values.shape} does not match header {(nx, ny)}")
    return Field(grid, values), t


def _initial_states(cfg: RunConfig, params: ModelParams, grid, sym, record=True):
    """Initial state, plus the bootstrap step for the three-level schemes.

    BDF runs take their first step with the first-order improved scheme
    (stabilization only for the improved target, never asserted) and then
    promote to a two-level state. Returns (state, records, steps_done).
    """
    phi0 = initial_field(cfg.init, grid)
    scheme = Scheme(cfg.scheme)
    if not scheme.is_bdf:
        state = make_initial_state(scheme, phi0, params.potential)
        recs = [record_step(state, params, sym)] if record else []
        return state, recs, 0
    be_params = replace(
        params,
        S=params.S if scheme.is_improved else 0.0,
        assert_energy=False,
    )
    be_state = make_initial_state(Scheme.ISAV_BE, phi0, params.potential)
    recs = [record_step(be_state, params, sym)] if record else []
    be1, _ = step_isav_be(be_state, be_params, sym, record=record)
    state = bootstrap_bdf(be1, params, scheme)
    if record:
        recs.append(record_step(state, params, sym))
    return state, recs, 1


def _snapshot_steps(cfg: RunConfig) -> dict:
    """Map requested snapshot times to their nearest step index."""
    n_total = cfg.n_steps()
    out = {}
    for t in cfg.outputs["field_snapshot_times"]:
        idx = int(round(t / cfg.tau))
        if 0 <= idx <= n_total and abs(idx * cfg.tau - t) <= 0.5 * cfg.tau + 1e-12:
            out[idx] = t
    return out


def run_simulation(cfg: RunConfig, outdir=None, write_outputs=True) -> SimulationResult:
    """Integrate from t=0 to t_end, recording diagnostics along the way.

    With the default record_every=1 the series holds n_steps+1 rows
    including t=0. A nonpositive bulk integral aborts the run; the rows
    accumulated so far are still written before the error propagates with
    the failing step index.
    """
    grid = cfg.make_grid()
    pot = cfg.make_potential()
    params = ModelParams(
        alpha=cfg.model["alpha"],
        gamma=cfg.model["gamma"],
        S=cfg.S,
        tau=cfg.tau,
        potential=pot,
        assert_energy=cfg.assert_energy,
    )
    sym = params.symbols(grid)
    out_base = resolve_outdir(outdir)
    every = cfg.outputs["record_every"]
    snap_at = _snapshot_steps(cfg) if write_outputs else {}
    snap_dir = _resolve(cfg.outputs["snapshot_dir"], out_base)
    series_path = _resolve(cfg.outputs["series_path"], out_base) if write_outputs else None
    n_total = cfg.n_steps()

    snapshot_paths = []

    def maybe_snapshot(step_index, field):
        if step_index in snap_at:
            path = os.path.join(snap_dir, f"phi_step{step_index:06d}.txt")
            write_snapshot(path, field, step_index * cfg.tau)
            snapshot_paths.append(path)

    try:
        state, records, done = _initial_states(cfg, params, grid, sym)
    except (NonPositiveBulkEnergyError, EnergyLawViolation) as exc:
        raise SchemeRuntimeError(0, exc) from exc
    if done == 0:
        maybe_snapshot(0, state.phi_n)
    else:
        maybe_snapshot(0, state.phi_nm1)
        maybe_snapshot(1, state.phi_n)
    error = None
    for n in range(done + 1, n_total + 1):
        try:
            state, rec = step(state, params, sym)
        except (NonPositiveBulkEnergyError, EnergyLawViolation) as exc:
            error = SchemeRuntimeError(n, exc)
            break
        if n % every == 0 or n == n_total:
            records.append(rec)
        maybe_snapshot(n, state.phi_n)
    if write_outputs:
        write_series_csv(series_path, records)
    if error is not None:
        raise error
    return SimulationResult(
        config=cfg,
        records=records,
        final_state=state,
        grid=grid,
        series_path=series_path,
        snapshot_paths=snapshot_paths or None,
    )


def _final_field(cfg: RunConfig) -> Field:
    """Fast path: integrate without records or outputs, return phi(t_end)."""
    grid = cfg.make_grid()
    pot = cfg.make_potential()
    params = ModelParams(
        alpha=cfg.model["alpha"], gamma=cfg.model["gamma"],
        S=cfg.S, tau=cfg.tau, potential=pot,
    )
    sym = params.symbols(grid)
    try:
        state, _, done = _initial_states(cfg, params, grid, sym, record=False)
    except (NonPositiveBulkEnergyError, EnergyLawViolation) as exc:
        raise SchemeRuntimeError(0, exc) from exc
    for n in range(done + 1, cfg.n_steps() + 1):
        try:
            state, _ = step(state, params, sym, record=False)
        except (NonPositiveBulkEnergyError, EnergyLawViolation) as exc:
            raise SchemeRuntimeError(n, exc) from exc
    return state.phi_n


def _order_rows(labels, errors):
    rows = []
    prev = None
    for label, err in zip(labels, errors):
        order = None if prev is None or err == 0 else math.log2(prev / err)
        rows.append({"resolution": label, "h1_error": err, "order": order})
        prev = err
    return rows


def convergence_study(base_cfg: RunConfig, taus=None, grids=None,
                      ref_tau=1e-5, ref_grid_n=64, out_path=None):
    """H1-error table against a reference run.

    Temporal mode (taus given): every member shares the grid of base_cfg;
    the reference is the three-level SAV scheme at ref_tau on that grid.
    Spatial mode (grids given): every member runs at base_cfg.tau on an
    n-by-n grid; the reference is the *same* scheme at the same tau on a
    ref_grid_n^2 grid, so the temporal discretization error cancels exactly
    and the table isolates spatial accuracy.
    Orders are log2(e_coarse / e_fine) between consecutive rows.
    """
    if (taus is None) == (grids is None):
        raise ConfigError("convergence: give exactly one of taus or grids")
    if taus is not None:
        steps_ref = base_cfg.t_end / ref_tau
        if abs(steps_ref - round(steps_ref)) > 1e-6:
            raise ConfigError("convergence: t_end must be an integer multiple of ref_tau")
        ref_cfg = replace(base_cfg, scheme=Scheme.SAV_BDF.value, tau=ref_tau)
        ref = _final_field(ref_cfg)
        labels, errors = [], []
        for tau in taus:
            cfg = replace(base_cfg, tau=float(tau))
            steps = cfg.t_end / cfg.tau
            if abs(steps - round(steps)) > 1e-9 * max(1.0, steps):
                raise ConfigError(f"convergence: t_end is not a multiple of tau={tau}")
            labels.append(int(round(steps)))
            errors.append(h1_error(_final_field(cfg), ref))
    else:
        ref_cfg = replace(
            base_cfg,
            grid={**base_cfg.grid, "nx": int(ref_grid_n), "ny": int(ref_grid_n)},
        )
        ref = _final_field(ref_cfg)
        labels, errors = [], []
        for n in grids:
            cfg = replace(base_cfg, grid={**base_cfg.grid, "nx": int(n), "ny": int(n)})
            labels.append(int(n))
            errors.append(h1_error(_final_field(cfg), ref))
    rows = _order_rows(labels, errors)
    if out_path is not None:
        os.makedirs(os.path.dirname(out_path) or ".", exist_ok=True)
        with open(out_path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["resolution", "h1_error", "order"])
            for r in rows:
                w.writerow([r["resolution"], _fmt(r["h1_error"]), _fmt(r["order"])])
    return rows


def _comparable_dict(cfg: RunConfig) -> dict:
    d = cfg.to_dict()
    d.pop("scheme")
    d.pop("outputs")
    return d


def compare_schemes(cfg_a: RunConfig, cfg_b: RunConfig, out_path=None):
    """Run two configs that differ only in the scheme; merge their series.

    The merged table holds step, t, then every series column suffixed by
    the scheme name, aligned row by row (both runs share tau and t_end by
    construction).
    """
    if cfg_a.scheme == cfg_b.scheme:
        raise ConfigError("compare: the two configs use the same scheme")
    if cfg_a.tau != cfg_b.tau or cfg_a.t_end != cfg_b.t_end:
        raise ConfigError("compare: tau and t_end must match between the configs")
    if _comparable_dict(cfg_a) != _comparable_dict(cfg_b):
        raise ConfigError("compare: configs must be identical apart from the scheme")
    res_a = run_simulation(cfg_a, write_outputs=False)
    res_b = run_simulation(cfg_b, write_outputs=False)
    tag_a = cfg_a.scheme.replace("-", "_")
    tag_b = cfg_b.scheme.replace("-", "_")
    data_cols = SERIES_COLUMNS[2:]
    header = ["step", "t"] + [f"{c}_{tag_a}" for c in data_cols] + [f"{c}_{tag_b}" for c in data_cols]
    rows = []
    for ra, rb in zip(res_a.records, res_b.records):
        row = {"step": ra.step, "t": ra.t}
        for c in data_cols:
            row[f"{c}_{tag_a}"] = getattr(ra, c)
            row[f"{c}_{tag_b}"] = getattr(rb, c)
        rows.append(row)
    if out_path is not None:
        os.makedirs(os.path.dirname(out_path) or ".", exist_ok=True)
        with open(out_path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(header)
            for row in rows:
                w.writerow([row["step"]] + [_fmt(row[c]) for c in header[1:]])
    return rows
