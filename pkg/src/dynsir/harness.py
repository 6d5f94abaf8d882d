"""Ensemble orchestration: aligned averaging and convergence reporting.

Limit curves and simulated epidemics each carry an arbitrary time origin
(the curves by translation invariance, the simulations by the random early
delay before takeoff).  Both are pinned the same way: the origin is moved to
the first time the population infected fraction crosses `pin_level`.  A
conditioned ensemble is then averaged on a common grid of offsets u around
its pin, and compared to the pinned limit curve by sup-distance per
compartment per type.

The convergence report runs that comparison over increasing population
sizes and checks the distances do not grow, with a two-standard-error slack
so single Monte Carlo fluctuations never fail the assertion.  All report
artifacts are deterministic functions of the configuration: run seeds derive
from (master_seed, n, run index) and the writers emit no timestamps.
"""

from __future__ import annotations

import csv
import math
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .branching import spectral_radius
from .errors import AlignmentError, ConditioningError, NumericalError
from .limits import LimitCurves, ode_mixed
from .params import ModelSpec, limit_r0_matrix
from .rng import STREAM_RUN, derive_seed
from .simulate import (
    DEFAULT_THRESHOLD_EXPONENT,
    Trajectory,
    condition_on_outbreak,
    curves_at,
)

_COMPS = ("s", "i", "r")


@dataclass(frozen=True)
class ExperimentConfig:
    """One convergence experiment: model, sizes, budget, alignment choices."""

    spec: ModelSpec
    n_list: tuple[int, ...]
    runs_per_n: int
    master_seed: int
    threshold_exponent: float = DEFAULT_THRESHOLD_EXPONENT
    pin_level: float = 0.01
    window: tuple[float, float] = (-2.0, 8.0)
    grid_step: float = 0.01

    def __post_init__(self):
        ns = tuple(int(n) for n in self.n_list)
        if not ns or any(n <= 0 for n in ns):
            raise ValueError("n_list must hold positive integers")
        if any(b <= a for a, b in zip(ns, ns[1:])):
            raise ValueError("n_list must be strictly increasing")
        object.__setattr__(self, "n_list", ns)
        if int(self.runs_per_n) < 1:
            raise ValueError("runs_per_n must be >= 1")
        object.__setattr__(self, "runs_per_n", int(self.runs_per_n))
        if not 0.0 < self.pin_level < 1.0:
            raise ValueError("pin_level must lie in (0, 1)")
        lo, hi = self.window
        if not hi > lo:
            raise ValueError("comparison window must be nonempty")
        object.__setattr__(self, "window", (float(lo), float(hi)))
        if self.grid_step <= 0.0:
            raise ValueError("grid_step must be > 0")

    def u_grid(self) -> np.ndarray:
        lo, hi = self.window
        m = int(round((hi - lo) / self.grid_step))
        return lo + self.grid_step * np.arange(m + 1)


def align_trajectory(traj: Trajectory, pin_level: float = 0.01) -> float:
    """Time origin shift: first time the infected fraction reaches pin_level.

    Returns t*; the aligned curves are the trajectory's curves evaluated at
    t* + u.  Meant for outbreak trajectories; a run that never climbs to the
    level cannot be aligned.

    Raises:
        AlignmentError: the infected count never reached pin_level * n.
    """
    # integer head count needed; the epsilon swallows float dust in level*n
    need = pin_level * traj.n - 1e-9
    delta = np.where(traj.kinds == 0, 1, -1)
    infected = np.cumsum(delta)
    above = np.nonzero(infected >= need)[0]
    if above.size == 0:
        raise AlignmentError(
            f"infected count peaked at {int(infected.max(initial=0))} of n={traj.n}, "
            f"never reaching pin level {pin_level}")
    return float(traj.times[int(above[0])])


@dataclass(frozen=True)
class SizeStats:
    """Aligned-ensemble summary for one population size."""

    n: int
    runs: int
    discards: int
    acceptance_fraction: float
    mean: dict[str, np.ndarray]          # comp -> (k, len(u_grid))
    se: dict[str, np.ndarray]            # pointwise MC standard errors
    sup_dist: dict[str, np.ndarray]      # comp -> (k,) sup |mean - limit|
    se_at_sup: dict[str, np.ndarray]     # comp -> (k,) SE at the argmax point
    per_run_sup_quantiles: tuple[float, float, float]  # 10/50/90% of per-run sups
    final_mean: float                    # mean fraction ever infected
    final_se: float
    events_mean: float
    events_max: int
    wall_clock_s: float                  # never serialized; CSVs stay deterministic


@dataclass(frozen=True)
class ConvergenceReport:
    """Distances to the pinned limit curve across population sizes.

    `monotone_ok` asserts sup-distances are nonincreasing in n per
    compartment, with slack 2 * sqrt(se_a^2 + se_b^2) between consecutive
    sizes, so the check is statistical rather than noise-brittle.
    """

    config: ExperimentConfig
    u_grid: np.ndarray
    limit_pin_time: float
    limit: dict[str, np.ndarray]         # comp -> (k, len(u_grid))
    stats: tuple[SizeStats, ...]
    monotone_ok: bool
    monotone_detail: dict[str, list[bool]] = field(repr=False, default=None)


def pinned_limit(spec: ModelSpec, pin_level: float, u_grid: np.ndarray,
                  h: float = 1e-3) -> tuple[LimitCurves, float]:
    """Limit curves integrated far enough to cover pin + window."""
    t_max = 40.0
    last_exc: Exception | None = None
    for _ in range(4):
        curves = ode_mixed(spec, grid=(t_max, h))
        try:
            t_pin = curves.pin_time(pin_level)
        except ValueError as exc:   # level not reached yet; integrate longer
            last_exc = exc
            t_max *= 2.0
            continue
        if t_pin + float(u_grid[-1]) <= t_max:
            return curves, t_pin
        t_max *= 2.0
    reason = str(last_exc) if last_exc else "pin plus window exceeds the horizon"
    raise NumericalError(
        f"could not pin the limit curve at level {pin_level} with the "
        f"comparison window inside t={t_max / 2:g}: {reason}")


def aligned_ensemble(spec: ModelSpec, n: int, runs: int, master_seed: int,
                     u_grid: np.ndarray, *,
                     threshold_exponent: float = DEFAULT_THRESHOLD_EXPONENT,
                     pin_level: float = 0.01,
                     model: str = "M3",
                     max_restarts: int = 1000,
                     limit_samples: dict[str, np.ndarray] | None = None,
                     progress=None):
    """Conditioned, aligned ensemble at one size; returns raw aggregates.

    Per run: condition on an outbreak, pin at the level crossing, sample the
    step curves on t* + u_grid.  Returns (mean, se, per_run_sups, discards,
    events, finals) where per_run_sups holds one overall sup-distance to
    `limit_samples` per run (empty when no limit was passed) and finals the
    per-run fraction of the population ever infected.
    """
    k = spec.k
    m = len(u_grid)
    sums = {c: np.zeros((k, m)) for c in _COMPS}
    sumsq = {c: np.zeros((k, m)) for c in _COMPS}
    per_run_sups: list[float] = []
    events: list[int] = []
    finals: list[float] = []
    discards = 0
    for run in range(runs):
        run_seed = derive_seed(master_seed, STREAM_RUN, n, run)
        traj = condition_on_outbreak(spec, n, run_seed, threshold_exponent,
                                     max_restarts, model=model)
        discards += traj.discards
        t_star = align_trajectory(traj, pin_level)
        s, i, r = curves_at(traj, t_star + u_grid)
        run_sup = 0.0
        for comp, arr in zip(_COMPS, (s, i, r)):
            sums[comp] += arr
            sumsq[comp] += arr * arr
            if limit_samples is not None:
                run_sup = max(run_sup, float(np.max(np.abs(arr - limit_samples[comp]))))
        if limit_samples is not None:
            per_run_sups.append(run_sup)
        events.append(traj.event_count)
        finals.append(traj.final_fraction())
        if progress is not None and (run + 1) % 50 == 0:
            progress(f"  n={n}: {run + 1}/{runs} runs")
    mean = {c: sums[c] / runs for c in _COMPS}
    se = {}
    for c in _COMPS:
        if runs > 1:
            var = np.maximum(sumsq[c] - runs * mean[c] ** 2, 0.0) / (runs - 1)
            se[c] = np.sqrt(var / runs)
        else:
            se[c] = np.zeros((k, m))
    return mean, se, per_run_sups, discards, events, finals


def run_convergence(config: ExperimentConfig, *, max_restarts: int = 1000,
                    progress=None) -> ConvergenceReport:
    """Conditioned Model-3 ensembles at each size, compared to the limit.

    Raises:
        ConditioningError: subcritical model (conditioning cannot succeed),
            or some size exhausted its restarts.
    """
    spec = config.spec
    rho = spectral_radius(limit_r0_matrix(spec))
    if rho <= 1.0:
        raise ConditioningError(
            f"convergence experiment needs a supercritical model; spectral "
            f"radius of the reproduction matrix is {rho:.4f}", discards=0)

    u = config.u_grid()
    curves, t_pin = pinned_limit(spec, config.pin_level, u)
    limit_samples = {c: curves.sample(c, t_pin + u) for c in _COMPS}

    stats: list[SizeStats] = []
    for n in config.n_list:
        t0 = time.perf_counter()
        mean, se, run_sups, discards, events, finals = aligned_ensemble(
            spec, n, config.runs_per_n, config.master_seed, u,
            threshold_exponent=config.threshold_exponent,
            pin_level=config.pin_level, model="M3",
            max_restarts=max_restarts, limit_samples=limit_samples,
            progress=progress)
        wall = time.perf_counter() - t0
        sup_dist = {}
        se_at_sup = {}
        for c in _COMPS:
            gap = np.abs(mean[c] - limit_samples[c])
            idx = np.argmax(gap, axis=1)
            sup_dist[c] = gap[np.arange(spec.k), idx]
            se_at_sup[c] = se[c][np.arange(spec.k), idx]
        q10, q50, q90 = np.quantile(run_sups, [0.1, 0.5, 0.9])
        fin = np.asarray(finals)
        final_se = float(fin.std(ddof=1) / math.sqrt(len(fin))) if len(fin) > 1 else 0.0
        stats.append(SizeStats(
            n=n, runs=config.runs_per_n, discards=discards,
            acceptance_fraction=config.runs_per_n / (config.runs_per_n + discards),
            mean=mean, se=se, sup_dist=sup_dist, se_at_sup=se_at_sup,
            per_run_sup_quantiles=(float(q10), float(q50), float(q90)),
            final_mean=float(fin.mean()), final_se=final_se,
            events_mean=float(np.mean(events)), events_max=int(np.max(events)),
            wall_clock_s=wall))
        if progress is not None:
            worst = max(float(np.max(sup_dist[c])) for c in _COMPS)
            progress(f"n={n}: worst sup-distance {worst:.4f}, "
                     f"acceptance {stats[-1].acceptance_fraction:.3f}, {wall:.1f}s")

    detail: dict[str, list[bool]] = {c: [] for c in _COMPS}
    for prev, nxt in zip(stats, stats[1:]):
        for c in _COMPS:
            nu_p = int(np.argmax(prev.sup_dist[c]))
            nu_n = int(np.argmax(nxt.sup_dist[c]))
            d_p, d_n = prev.sup_dist[c][nu_p], nxt.sup_dist[c][nu_n]
            slack = 2.0 * math.hypot(prev.se_at_sup[c][nu_p], nxt.se_at_sup[c][nu_n])
            detail[c].append(bool(d_n <= d_p + slack))
    monotone_ok = all(all(v) for v in detail.values())
    return ConvergenceReport(config=config, u_grid=u, limit_pin_time=t_pin,
                             limit=limit_samples, stats=tuple(stats),
                             monotone_ok=monotone_ok, monotone_detail=detail)


# ---------------------------------------------------------------------------
# deterministic writers
# ---------------------------------------------------------------------------

def _fmt(x: float) -> str:
    return f"{x:.12g}"


def write_convergence_csvs(report: ConvergenceReport, out_dir,
                           stem: str = "convergence") -> list[Path]:
    """One curves CSV per size plus a summary CSV; 12 significant digits.

    Output is a pure function of the report content: no timestamps, no
    wall-clock columns, fixed column order.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    k = report.config.spec.k
    paths = []
    for st in report.stats:
        path = out / f"{stem}_curves_n{st.n}.csv"
        header = ["u"]
        for nu in range(k):
            for c in _COMPS:
                header += [f"{c}_mean_{nu}", f"{c}_se_{nu}"]
            for c in _COMPS:
                header.append(f"limit_{c}_{nu}")
        with path.open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            for col, uval in enumerate(report.u_grid):
                row = [_fmt(uval)]
                for nu in range(k):
                    for c in _COMPS:
                        row += [_fmt(st.mean[c][nu, col]), _fmt(st.se[c][nu, col])]
                    for c in _COMPS:
                        row.append(_fmt(report.limit[c][nu, col]))
                w.writerow(row)
        paths.append(path)

    path = out / f"{stem}_summary.csv"
    header = ["n", "runs", "discards", "acceptance_fraction",
              "final_mean", "final_se", "events_mean", "events_max"]
    for c in _COMPS:
        for nu in range(k):
            header += [f"sup_{c}_{nu}", f"se_sup_{c}_{nu}"]
    header += ["per_run_sup_q10", "per_run_sup_q50", "per_run_sup_q90"]
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for st in report.stats:
            row = [st.n, st.runs, st.discards, _fmt(st.acceptance_fraction),
                   _fmt(st.final_mean), _fmt(st.final_se),
                   _fmt(st.events_mean), st.events_max]
            for c in _COMPS:
                for nu in range(k):
                    row += [_fmt(st.sup_dist[c][nu]), _fmt(st.se_at_sup[c][nu])]
            row += [_fmt(q) for q in st.per_run_sup_quantiles]
            w.writerow(row)
    paths.append(path)
    return paths


def write_report_text(report: ConvergenceReport, path) -> Path:
    """Human-readable summary; deterministic (no timings, no timestamps)."""
    cfg = report.config
    lines = [
        "convergence of conditioned ensembles to the pinned limit curve",
        f"sizes: {', '.join(str(n) for n in cfg.n_list)}; "
        f"runs per size: {cfg.runs_per_n}",
        f"pin level {cfg.pin_level:g}; window [{cfg.window[0]:g}, {cfg.window[1]:g}] "
        f"step {cfg.grid_step:g}; limit pinned at t={report.limit_pin_time:.6g}",
        "",
    ]
    for st in report.stats:
        lines.append(
            f"n={st.n}: acceptance {st.acceptance_fraction:.4f} "
            f"({st.discards} discards), final fraction {st.final_mean:.5f} "
            f"(se {st.final_se:.5f}), events mean {st.events_mean:.1f} "
            f"max {st.events_max}")
        for c in _COMPS:
            per_type = ", ".join(
                f"type {nu}: {st.sup_dist[c][nu]:.5f} (se {st.se_at_sup[c][nu]:.5f})"
                for nu in range(cfg.spec.k))
            lines.append(f"  sup |mean {c} - limit {c}|: {per_type}")
        q10, q50, q90 = st.per_run_sup_quantiles
        lines.append(f"  per-run sup-distance quantiles 10/50/90%: "
                     f"{q10:.5f} / {q50:.5f} / {q90:.5f}")
    lines.append("")
    lines.append(f"distances nonincreasing in n (2 SE slack): {report.monotone_ok}")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("\n".join(lines) + "\n")
    return path
