"""Event-driven stochastic simulation of the k-type dynamic-network epidemic.

Three constructions of one process law, exchangeable in distribution:

Model 1 keeps the network explicit.  An edge chain between an infective of
type a and a susceptible of type b flips on at lambda_n[a,b], off at
mu_n[a,b], and fires contacts at beta_n[a,b] while on.  Chains are
materialized lazily, only for (infective, susceptible) pairs: such a pair has
never had an infectious endpoint before, so its chain is untouched and its
state at materialization is an exact equilibrium Bernoulli draw.  Once the
susceptible endpoint leaves S, or the infective recovers, the chain can never
transmit again and is dropped.  Scheduling is event-driven over edge flips,
contact points, and recoveries, with events beyond the infector's recovery
never entering the queue.

Model 2 re-equilibrates the infector-infectee edge at each infection.  That
edge joins two non-susceptibles from then on and contacts toward
non-susceptibles are inert, so the reset is unobservable; the variant runs
the Model 1 engine under its own random stream and tag.

Model 3 discards the network.  Each infection draws an infectious period
Q ~ Exp(gamma_a), then toward every type j a count
C_j ~ Binomial(n_j, F_e(Q)) of first contacts, with iid times distributed as
the equilibrium excess law conditioned to [0, Q] and distinct uniform
targets.  A contact infects its target iff the target is still susceptible
at that moment; a contact aimed at the infector itself is inert.  Work is
proportional to contacts generated, not to n^2, so this is the engine for
large populations.

Determinism: every trajectory is a pure function of (spec, n, seed, model
tag).  Per-individual substreams are consumed eagerly at the moment of
infection, in a fixed draw order, so the event log does not depend on queue
iteration details.  Simultaneous events are ordered by queue insertion and
counted in `tie_count`.
"""

from __future__ import annotations

import csv
import gzip
import heapq
import io
import math
import warnings
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .branching import spectral_radius
from .contact import IppParams, ipp_params, sample_excess_truncated
from .errors import ConditioningError
from .params import ModelSpec, limit_r0_matrix, realize_rates
from .rng import (
    STREAM_ATTEMPT,
    STREAM_INDIVIDUAL,
    STREAM_MODEL1,
    STREAM_MODEL2,
    STREAM_MODEL3,
    STREAM_RUN,
    binomial_draw,
    derive_seed,
    np_substream,
    substream,
)

EVENT_INFECTION = 0
EVENT_RECOVERY = 1
EVENT_NAMES = ("infection", "recovery")

# outbreak threshold floor(n ** DEFAULT_THRESHOLD_EXPONENT); the exponent is
# the decay-rate constant separating minor from major outbreaks for k > 1,
# reused as the default for every k
DEFAULT_THRESHOLD_EXPONENT = 17.0 / 24.0

# pair-resolved simulation is O(n) work per infection; beyond this size the
# batch construction is the intended engine
MODEL1_DEFAULT_CAP = 2000

# Model 1 queue entry kinds (heap payload tag)
_RECOVER = 0
_FLIP_ON = 1   # edge currently off, turns on at this time
_FLIP_OFF = 2  # edge currently on, turns off at this time
_CONTACT = 3   # edge on and the contact clock fired first


@dataclass(frozen=True)
class Trajectory:
    """One realized epidemic: an ordered event log plus summary fields.

    `times` is nondecreasing; `kinds[e]` is 0 for an infection and 1 for a
    recovery; `type_idx[e]` is the type of the individual the event happened
    to.  `outbreak` and `crossing_time` refer to `threshold` =
    floor(n ** threshold_exponent) total infections; `crossing_time` is the
    time of the threshold-th infection, None when the threshold was never
    reached.  `discards` is filled by the conditioner.  `truncated` marks
    logs cut short by a horizon or an early-stop count; summary fields then
    describe the truncated log only.
    """

    model_tag: str
    n: int
    seed: int
    n_per_type: np.ndarray
    initial_type: int
    times: np.ndarray
    kinds: np.ndarray
    type_idx: np.ndarray
    ever_infected: int
    threshold: int
    outbreak: bool
    crossing_time: float | None
    tie_count: int
    discards: int | None = None
    truncated: bool = False

    @property
    def k(self) -> int:
        return len(self.n_per_type)

    @property
    def event_count(self) -> int:
        return len(self.times)

    def infection_counts(self) -> np.ndarray:
        """Total infections per type over the whole log."""
        inf_types = self.type_idx[self.kinds == EVENT_INFECTION]
        return np.bincount(inf_types, minlength=self.k).astype(np.int64)

    def final_fraction(self) -> float:
        """Fraction of the population ever infected."""
        return self.ever_infected / self.n

    def curves_at(self, time_grid) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        return curves_at(self, time_grid)


def curves_at(traj: Trajectory, time_grid) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Per-type compartment fractions (s, i, r) sampled on a time grid.

    Each returned array has shape (k, len(grid)).  The step functions are
    right-continuous; times before zero report the time-zero state, in which
    the single initial infective is already counted, so
    s_nu(t < 0) = 1 - delta(nu, initial_type)/n_nu.
    """
    grid = np.atleast_1d(np.asarray(time_grid, dtype=float))
    clamped = np.maximum(grid, 0.0)
    pos = np.searchsorted(traj.times, clamped, side="right")
    k = traj.k
    s = np.empty((k, len(grid)))
    i = np.empty((k, len(grid)))
    r = np.empty((k, len(grid)))
    for nu in range(k):
        mine = traj.type_idx == nu
        cum_inf = np.concatenate(([0], np.cumsum(mine & (traj.kinds == EVENT_INFECTION))))
        cum_rec = np.concatenate(([0], np.cumsum(mine & (traj.kinds == EVENT_RECOVERY))))
        n_nu = traj.n_per_type[nu]
        ci = cum_inf[pos]
        cr = cum_rec[pos]
        s[nu] = (n_nu - ci) / n_nu
        i[nu] = (ci - cr) / n_nu
        r[nu] = cr / n_nu
    return s, i, r


def _finalize(model_tag, n, seed, counts, initial_type, times, kinds, etypes,
              threshold_exponent, truncated) -> Trajectory:
    """Sort the raw event lists into a Trajectory and fill the summaries."""
    t = np.asarray(times, dtype=float)
    kd = np.asarray(kinds, dtype=np.int8)
    ty = np.asarray(etypes, dtype=np.int16)
    # stable sort: ties keep insertion order, and are counted
    order = np.argsort(t, kind="stable")
    t, kd, ty = t[order], kd[order], ty[order]
    tie_count = int(np.sum(np.diff(t) == 0.0)) if len(t) > 1 else 0

    ever = int(np.sum(kd == EVENT_INFECTION))
    threshold = int(math.floor(n ** threshold_exponent))
    outbreak = ever >= threshold
    crossing = None
    if outbreak:
        crossing = float(t[kd == EVENT_INFECTION][threshold - 1])
    for a in (t, kd, ty):
        a.setflags(write=False)
    return Trajectory(model_tag=model_tag, n=int(n), seed=int(seed),
                      n_per_type=counts, initial_type=int(initial_type),
                      times=t, kinds=kd, type_idx=ty, ever_infected=ever,
                      threshold=threshold, outbreak=outbreak,
                      crossing_time=crossing, tie_count=tie_count,
                      truncated=truncated)


def _initial_individual(counts, offsets, initial_type, rng) -> int:
    k = len(counts)
    if not 0 <= initial_type < k:
        raise ValueError(f"initial_type {initial_type} out of range for k={k}")
    if counts[initial_type] == 0:
        raise ValueError(
            f"no individuals of type {initial_type} at this population size")
    return int(offsets[initial_type]) + rng.randrange(int(counts[initial_type]))


# ---------------------------------------------------------------------------
# Model 1 / Model 2: pair-resolved dynamic network
# ---------------------------------------------------------------------------

def simulate_model1(spec: ModelSpec, n: int, seed: int,
                    horizon: float | None = None,
                    reset_on_infection: bool = False,
                    *, initial_type: int = 0,
                    exact_cap: int = MODEL1_DEFAULT_CAP,
                    threshold_exponent: float = DEFAULT_THRESHOLD_EXPONENT,
                    ) -> Trajectory:
    """Pair-resolved simulation; tag M1, or M2 when `reset_on_infection`.

    One initial infective of `initial_type`, infected at time zero, chosen
    uniformly within its type.  Runs until no infectives remain, or until no
    scheduled event precedes `horizon`.  Work is O(n) per infection, so the
    engine refuses n > exact_cap (default 2000) and points at the batch
    construction instead.

    The `reset_on_infection` variant differs only in its random stream: the
    edge it would re-equilibrate connects two non-susceptibles and can never
    transmit again, so the reset has no observable effect.
    """
    if n > exact_cap:
        raise ValueError(
            f"pair-resolved engine capped at n={exact_cap}; "
            f"use simulate_model3 for n={n}")
    rr = realize_rates(spec, n)
    counts = rr.n_per_type
    offsets = np.concatenate(([0], np.cumsum(counts)))
    k = spec.k
    tag = STREAM_MODEL2 if reset_on_infection else STREAM_MODEL1
    model_tag = "M2" if reset_on_infection else "M1"

    status = np.zeros(n, dtype=np.int8)  # 0 S, 1 I, 2 R
    type_of = np.repeat(np.arange(k, dtype=np.int16), counts)
    recovery_at = np.full(n, np.inf)
    gens: dict[int, np.random.Generator] = {}

    times: list[float] = []
    kinds: list[int] = []
    etypes: list[int] = []
    heap: list[tuple[float, int, int, int, int]] = []  # (t, seq, kind, u, v)
    seq = 0
    infectives = 0

    lam_n, mu_n, beta_n = rr.lambda_n, rr.mu_n, rr.beta_n
    gamma = rr.gamma

    def push(t, kind, u, v):
        nonlocal seq
        heapq.heappush(heap, (t, seq, kind, u, v))
        seq += 1

    def infect(u: int, t: float):
        nonlocal infectives
        a = int(type_of[u])
        status[u] = 1
        infectives += 1
        times.append(t)
        kinds.append(EVENT_INFECTION)
        etypes.append(a)
        g = np_substream(seed, tag, STREAM_INDIVIDUAL, u)
        gens[u] = g
        rec = t + g.exponential(1.0 / gamma[a])
        recovery_at[u] = rec
        cap = rec if horizon is None else min(rec, horizon)
        if horizon is None or rec <= horizon:
            push(rec, _RECOVER, u, -1)
        # materialize this infective's pair chains, one type block at a time;
        # fixed draw order per block: equilibrium states, then on-pair races
        # (off clocks before contact clocks), then off-pair arrival clocks
        for j in range(k):
            bp = beta_n[a, j]
            if bp == 0.0:
                continue
            lp, mp = lam_n[a, j], mu_n[a, j]
            block = status[offsets[j]:offsets[j + 1]]
            sus = np.nonzero(block == 0)[0] + offsets[j]
            if len(sus) == 0:
                continue
            on = g.random(len(sus)) < lp / (lp + mp)
            on_idx = sus[on]
            off_idx = sus[~on]
            if len(on_idx):
                t_off = t + g.exponential(1.0 / mp, len(on_idx))
                t_con = t + g.exponential(1.0 / bp, len(on_idx))
                for v, toff, tcon in zip(on_idx, t_off, t_con):
                    if tcon <= toff:
                        if tcon < cap:
                            push(tcon, _CONTACT, u, int(v))
                    elif toff < cap:
                        push(toff, _FLIP_OFF, u, int(v))
            if len(off_idx):
                t_on = t + g.exponential(1.0 / lp, len(off_idx))
                for v, ton in zip(off_idx, t_on):
                    if ton < cap:
                        push(ton, _FLIP_ON, u, int(v))

    run_rng = substream(seed, tag, STREAM_RUN)
    u0 = _initial_individual(counts, offsets, initial_type, run_rng)
    infect(u0, 0.0)

    while heap and infectives > 0:
        t, _, kind, u, v = heapq.heappop(heap)
        if kind == _RECOVER:
            status[u] = 2
            infectives -= 1
            del gens[u]
            times.append(t)
            kinds.append(EVENT_RECOVERY)
            etypes.append(int(type_of[u]))
            continue
        # pair event: dead unless u still infectious and v still susceptible
        if status[u] != 1 or status[v] != 0:
            continue
        if kind == _CONTACT:
            infect(v, t)
            continue
        a, b = int(type_of[u]), int(type_of[v])
        g = gens[u]
        cap = recovery_at[u] if horizon is None else min(recovery_at[u], horizon)
        if kind == _FLIP_ON:
            toff = t + g.exponential(1.0 / mu_n[a, b])
            tcon = t + g.exponential(1.0 / beta_n[a, b])
            if tcon <= toff:
                if tcon < cap:
                    push(tcon, _CONTACT, u, v)
            elif toff < cap:
                push(toff, _FLIP_OFF, u, v)
        else:  # _FLIP_OFF
            ton = t + g.exponential(1.0 / lam_n[a, b])
            if ton < cap:
                push(ton, _FLIP_ON, u, v)

    return _finalize(model_tag, n, seed, counts, initial_type, times, kinds,
                     etypes, threshold_exponent, truncated=horizon is not None)


def simulate_model2(spec: ModelSpec, n: int, seed: int,
                    horizon: float | None = None, **kwargs) -> Trajectory:
    """The reset-at-infection variant: Model 1 engine, own stream, tag M2."""
    return simulate_model1(spec, n, seed, horizon, reset_on_infection=True,
                           **kwargs)


# ---------------------------------------------------------------------------
# Model 3: per-infection contact batches
# ---------------------------------------------------------------------------

def _channels(rr) -> list[list[tuple[IppParams, float, float] | None]]:
    """Per ordered pair (a, j): (ipp, w1, counts_j) or None when inert."""
    k = len(rr.n_per_type)
    out: list[list[tuple[IppParams, float, float] | None]] = []
    for a in range(k):
        row: list[tuple[IppParams, float, float] | None] = []
        for j in range(k):
            bp = float(rr.beta_n[a, j])
            if bp == 0.0:
                row.append(None)
                continue
            ipp = ipp_params(bp, float(rr.lambda_n[a, j]), float(rr.mu_n[a, j]))
            row.append((ipp, ipp.excess_w1, float(rr.n_per_type[j])))
        out.append(row)
    return out


def simulate_model3(spec: ModelSpec, n: int, seed: int,
                    *, horizon: float | None = None,
                    initial_type: int = 0,
                    threshold_exponent: float = DEFAULT_THRESHOLD_EXPONENT,
                    stop_at_ever: int | None = None) -> Trajectory:
    """Batch-construction simulation; tag M3.

    Per infection of a type-a individual: infectious period Q ~ Exp(gamma_a)
    and, toward each type j, an exact Binomial(n_j, F_e(Q)) count of first
    contacts at iid times drawn from the equilibrium excess law conditioned
    to [0, Q], aimed at distinct targets sampled without replacement.  All of
    an individual's randomness is consumed at its infection, from its own
    substream, in that fixed order.

    `stop_at_ever` halts once that many individuals were ever infected,
    leaving pending contacts unprocessed; the trajectory is marked truncated.
    Used to probe outbreak indicators cheaply at large n.
    """
    rr = realize_rates(spec, n)
    counts = rr.n_per_type
    offsets = np.concatenate(([0], np.cumsum(counts)))
    k = spec.k
    chan = _channels(rr)
    gamma = rr.gamma
    type_of = np.repeat(np.arange(k, dtype=np.int16), counts)

    status = np.zeros(n, dtype=np.int8)
    times: list[float] = []
    kinds: list[int] = []
    etypes: list[int] = []
    heap: list[tuple[float, int, int]] = []  # (t, seq, target)
    seq = 0
    ever = 0

    def infect(u: int, t: float):
        nonlocal seq, ever
        a = int(type_of[u])
        status[u] = 1
        ever += 1
        times.append(t)
        kinds.append(EVENT_INFECTION)
        etypes.append(a)
        rng_u = substream(seed, STREAM_MODEL3, STREAM_INDIVIDUAL, u)
        q = rng_u.expovariate(float(gamma[a]))
        rec = t + q
        if horizon is None or rec <= horizon:
            times.append(rec)
            kinds.append(EVENT_RECOVERY)
            etypes.append(a)
        for j in range(k):
            ch = chan[a][j]
            if ch is None:
                continue
            ipp, w1, nj = ch
            # excess-law mass on [0, q]; scalar math avoids array overhead,
            # clamped because rounding can stray a ulp outside [0, 1]
            p_hit = 1.0 - (w1 * math.exp(-ipp.r1 * q)
                           + (1.0 - w1) * math.exp(-ipp.r2 * q))
            c = binomial_draw(rng_u, int(nj), min(1.0, max(0.0, p_hit)))
            if c == 0:
                continue
            taus = [sample_excess_truncated(ipp, q, rng_u) for _ in range(c)]
            targets = rng_u.sample(range(int(nj)), c)
            base = int(offsets[j])
            for tau, tgt in zip(taus, targets):
                v = base + tgt
                if v == u:
                    continue  # self-contact is inert
                tc = t + tau
                if horizon is None or tc <= horizon:
                    heapq.heappush(heap, (tc, seq, v))
                    seq += 1

    run_rng = substream(seed, STREAM_MODEL3, STREAM_RUN)
    u0 = _initial_individual(counts, offsets, initial_type, run_rng)
    infect(u0, 0.0)

    stopped = False
    while heap:
        if stop_at_ever is not None and ever >= stop_at_ever:
            stopped = True
            break
        t, _, v = heapq.heappop(heap)
        if status[v] == 0:
            infect(v, t)

    # recovery entries were appended out of order; _finalize sorts stably
    return _finalize("M3", n, seed, counts, initial_type, times, kinds, etypes,
                     threshold_exponent,
                     truncated=stopped or horizon is not None)


_ENGINES = {
    "M1": lambda spec, n, seed, **kw: simulate_model1(spec, n, seed, **kw),
    "M2": lambda spec, n, seed, **kw: simulate_model1(
        spec, n, seed, reset_on_infection=True, **kw),
    "M3": lambda spec, n, seed, **kw: simulate_model3(spec, n, seed, **kw),
}


# ---------------------------------------------------------------------------
# outbreak conditioning
# ---------------------------------------------------------------------------

def condition_on_outbreak(spec: ModelSpec, n: int, seed: int,
                          threshold_exponent: float = DEFAULT_THRESHOLD_EXPONENT,
                          max_restarts: int = 1000,
                          *, model: str = "M3",
                          initial_type: int = 0) -> Trajectory:
    """First simulated trajectory whose infection total reaches the threshold.

    Attempts run under seeds derived from (seed, attempt index), so the
    accepted trajectory and the number of discarded ones are a pure function
    of the arguments.  The returned trajectory has `outbreak` True,
    `crossing_time` set against floor(n ** threshold_exponent), and
    `discards` = number of sub-threshold attempts thrown away.

    Raises:
        ConditioningError: after max_restarts sub-threshold attempts
            (carries the discard count); a subcritical model warns first,
            since every attempt is then likely to die out.
    """
    try:
        rho = spectral_radius(limit_r0_matrix(spec))
    except ValueError:
        rho = None  # no classified limit; let the restarts speak
    if rho is not None and rho <= 1.0:
        warnings.warn(
            f"conditioning on an outbreak with limiting spectral radius "
            f"{rho:.4f} <= 1; restarts will likely be exhausted",
            stacklevel=2)
    engine = _ENGINES.get(model)
    if engine is None:
        raise ValueError(f"unknown model tag {model!r}; expected M1, M2 or M3")
    threshold = int(math.floor(n ** threshold_exponent))
    for attempt in range(max_restarts):
        run_seed = derive_seed(seed, STREAM_ATTEMPT, attempt)
        traj = engine(spec, n, run_seed,
                      threshold_exponent=threshold_exponent,
                      initial_type=initial_type)
        if traj.ever_infected >= threshold:
            return replace(traj, discards=attempt)
    raise ConditioningError(
        f"no outbreak reaching {threshold} infections in {max_restarts} "
        f"attempts (n={n}, model {model})", discards=max_restarts)


# ---------------------------------------------------------------------------
# event-log export
# ---------------------------------------------------------------------------

def write_events_csv(trajectories, path, *, compress: bool | None = None) -> None:
    """Write event logs as CSV rows (run_id, time, event_kind, type_index).

    Accepts one Trajectory or an iterable; run_id is the position in the
    iterable.  Times are written in shortest round-trip form, so identical
    trajectories serialize byte-identically.  `compress` gzips the output;
    None infers it from a `.gz` suffix.  The gzip header timestamp is pinned
    to zero to keep compressed output reproducible too.
    """
    if isinstance(trajectories, Trajectory):
        trajectories = [trajectories]
    path = Path(path)
    if compress is None:
        compress = path.suffix == ".gz"
    raw = path.open("wb")
    try:
        if compress:
            stream = gzip.GzipFile(fileobj=raw, mode="wb", filename="", mtime=0)
        else:
            stream = raw
        text = io.TextIOWrapper(stream, encoding="utf-8", newline="")
        writer = csv.writer(text, lineterminator="\n")
        writer.writerow(["run_id", "time", "event_kind", "type_index"])
        for run_id, traj in enumerate(trajectories):
            for t, kd, ty in zip(traj.times, traj.kinds, traj.type_idx):
                writer.writerow([run_id, repr(float(t)), EVENT_NAMES[kd], int(ty)])
        text.flush()
        text.detach()
        if compress:
            stream.close()
    finally:
        raw.close()
