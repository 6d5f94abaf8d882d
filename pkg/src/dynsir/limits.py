"""Deterministic epidemic curves in the large-population limit.

Five routes to the same object:

* ``ode_weak``        mass-action system for channels whose contact kernel
                      collapses to R0 * gamma * e^{-gamma t};
* ``ode_strong_single`` / ``ode_strong_multi``
                      closed ODE systems carrying per-channel link densities
                      l_c (stock held at infection) and l_d (links formed
                      afterwards) for slow-edge channels;
* ``ode_mixed``       both kinds of channel at once;
* ``renewal_solve``   direct marching of the nonlinear renewal equation
                      -log s_nu(t) = sum_i w[nu,i] int (1-s_i(t-u)) g_i,nu(u) du;
* ``psi_fixed_point`` the scale-free fixed point psi with
                      s_nu(t) = psi_nu(c e^{alpha t}).

All of them produce (or can be asked to produce) a ``LimitCurves`` bundle on a
uniform time grid, which the comparison helpers pin at a common prevalence
level and line up with an optimal time shift.
"""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize_scalar

from dynsir.branching import malthusian_from, perron_vectors, spectral_radius
from dynsir.contact import Kernel, limit_kernels
from dynsir.errors import NumericalError
from dynsir.params import ModelSpec, RegimeReport, classify_regime

PIN_LEVEL = 0.01
DEFAULT_WINDOW = (-2.0, 8.0)
DEFAULT_GRID = (40.0, 1e-3)

_CONSERVATION_TOL = 1e-9
_RESIDUAL_TOL = 1e-6
_MONOTONE_SLACK = 1e-10


# ---------------------------------------------------------------------------
# curve container


@dataclass
class LimitCurves:
    """Compartment fractions on a uniform time grid.

    ``s``, ``i``, ``r`` have shape (k, T); per-type fractions of that type's
    own subpopulation.  Slow-edge channels additionally carry link densities
    ``l_c``/``l_d`` keyed by (source type, partner type).  ``method`` records
    which route produced the curves: one of weak_ode, strong_ode, mixed_ode,
    renewal, psi.
    """

    method: str
    t: np.ndarray
    p: np.ndarray
    s: np.ndarray
    i: np.ndarray
    r: np.ndarray
    l_c: dict[tuple[int, int], np.ndarray] = field(default_factory=dict)
    l_d: dict[tuple[int, int], np.ndarray] = field(default_factory=dict)

    @property
    def k(self) -> int:
        return self.s.shape[0]

    def total_i(self) -> np.ndarray:
        """Population-wide infected fraction sum_nu p_nu i_nu(t)."""
        return self.p @ self.i

    def l_total(self, pair: tuple[int, int]) -> np.ndarray:
        return self.l_c[pair] + self.l_d[pair]

    def pin_time(self, level: float = PIN_LEVEL) -> float:
        """First time the population infected fraction crosses ``level``."""
        a = self.total_i()
        above = np.nonzero(a >= level)[0]
        if above.size == 0:
            raise ValueError(f"infected fraction never reaches the pin level {level}")
        m = int(above[0])
        if m == 0:
            return float(self.t[0])
        t0, t1 = self.t[m - 1], self.t[m]
        a0, a1 = a[m - 1], a[m]
        return float(t0 + (level - a0) / (a1 - a0) * (t1 - t0))

    def sample(self, comp: str, times: np.ndarray) -> np.ndarray:
        """Linear interpolation of one compartment at arbitrary times, shape (k, len)."""
        arr = getattr(self, comp)
        times = np.asarray(times, dtype=float)
        return np.vstack([np.interp(times, self.t, arr[nu]) for nu in range(self.k)])

    def validate(self, residual_rates: dict[tuple[int, int], tuple[float, float, float, float]] | None = None) -> None:
        """Conservation, range, and monotonicity checks; raises NumericalError.

        ``residual_rates`` maps a slow-edge pair to (lam, mu, beta, gamma_src)
        and switches on the per-pair link-count identity
        (lam/mu) i_src = l_c + (1 + beta/mu) l_d, which the exact flow
        preserves; a large residual means the integrator step is too coarse.
        """
        drift = float(np.max(np.abs(self.s + self.i + self.r - 1.0)))
        if drift > _CONSERVATION_TOL:
            raise NumericalError(
                f"conservation drift {drift:.3e} exceeds {_CONSERVATION_TOL:.0e}; "
                "reduce the step size")
        for name in ("s", "i", "r"):
            arr = getattr(self, name)
            if np.min(arr) < -1e-9 or np.max(arr) > 1.0 + 1e-9:
                raise NumericalError(f"{name} leaves [0, 1]")
        if np.max(np.diff(self.s, axis=1)) > _MONOTONE_SLACK:
            raise NumericalError("s is not nonincreasing")
        if np.min(np.diff(self.r, axis=1)) < -_MONOTONE_SLACK:
            raise NumericalError("r is not nondecreasing")
        for pair, arr in {**self.l_c, **self.l_d}.items():
            if np.min(arr) < -1e-9:
                raise NumericalError(f"link density {pair} goes negative")
        if residual_rates:
            for pair, (lam, mu, beta, gam) in residual_rates.items():
                src = pair[0]
                rho = (lam / mu) * self.i[src] - self.l_c[pair] \
                    - (1.0 + beta / mu) * self.l_d[pair]
                worst = float(np.max(np.abs(rho)))
                if worst > _RESIDUAL_TOL:
                    raise NumericalError(
                        f"link-count identity residual {worst:.3e} for pair {pair} "
                        f"exceeds {_RESIDUAL_TOL:.0e}; reduce the step size")


def write_curves_csv(curves: LimitCurves, path) -> None:
    """Deterministic CSV export, 12 significant digits, no metadata rows."""
    header = ["t"]
    for name in ("s", "i", "r"):
        header += [f"{name}_{nu}" for nu in range(curves.k)]
    pairs = sorted(curves.l_c)
    header += [f"l_c_{a}_{b}" for a, b in pairs] + [f"l_d_{a}_{b}" for a, b in pairs]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        cols = [curves.t]
        for name in ("s", "i", "r"):
            cols += [getattr(curves, name)[nu] for nu in range(curves.k)]
        cols += [curves.l_c[pr] for pr in pairs] + [curves.l_d[pr] for pr in pairs]
        for row in zip(*cols):
            w.writerow([f"{v:.12g}" for v in row])


# ---------------------------------------------------------------------------
# fixed-step integrator


def _rk4_path(f, y0: np.ndarray, t_max: float, h: float) -> tuple[np.ndarray, np.ndarray]:
    n_steps = int(round(t_max / h))
    if n_steps < 1 or abs(n_steps * h - t_max) > 1e-9 * max(1.0, abs(t_max)):
        raise ValueError("t_max must be a positive multiple of the step size h")
    t = h * np.arange(n_steps + 1)
    out = np.empty((n_steps + 1, y0.size))
    y = np.array(y0, dtype=float)
    out[0] = y
    for m in range(n_steps):
        k1 = f(y)
        k2 = f(y + (0.5 * h) * k1)
        k3 = f(y + (0.5 * h) * k2)
        k4 = f(y + h * k3)
        y = y + (h / 6.0) * (k1 + 2.0 * (k2 + k3) + k4)
        out[m + 1] = y
    return t, out


def _dominant_direction(a: np.ndarray) -> tuple[float, np.ndarray]:
    """Growth rate and nonnegative direction of the leading eigenpair."""
    vals, vecs = np.linalg.eig(a)
    idx = int(np.argmax(vals.real))
    lead = vals[idx]
    if abs(lead.imag) > 1e-8 * max(1.0, abs(lead.real)):
        raise NumericalError("leading eigenvalue of the linearization is not real")
    growth = float(lead.real)
    if growth <= 0.0:
        raise NumericalError(
            "linearization is not supercritical; the exponential seed direction "
            "is undefined")
    v = vecs[:, idx].real
    if v.sum() < 0.0:
        v = -v
    if np.min(v) < -1e-8 * np.max(np.abs(v)):
        raise NumericalError("leading eigenvector of the linearization is not nonnegative")
    return growth, np.clip(v, 0.0, None)


# ---------------------------------------------------------------------------
# the shared compartment+links vector field

# State layout: [s(k), i(k), r(k), l_c(pairs), l_d(pairs)].  Homogeneous
# channels act through B_h[j, i] = (p_i/p_j) R0[i, j] gamma_i; slow-edge
# channels through per-pair link densities.


class _LimitSystem:
    def __init__(self, p, gamma, b_h, pairs, pair_rates):
        self.p = np.asarray(p, dtype=float)
        self.gamma = np.asarray(gamma, dtype=float)
        self.b_h = np.asarray(b_h, dtype=float)
        self.k = self.p.size
        self.pairs = list(pairs)
        n_pairs = len(self.pairs)
        self.src = np.array([a for a, _ in self.pairs], dtype=int)
        self.dst = np.array([b for _, b in self.pairs], dtype=int)
        self.lam = np.array([pair_rates[pr][0] for pr in self.pairs], dtype=float)
        self.mu = np.array([pair_rates[pr][1] for pr in self.pairs], dtype=float)
        self.beta = np.array([pair_rates[pr][2] for pr in self.pairs], dtype=float)
        self.gam_src = self.gamma[self.src] if n_pairs else np.empty(0)
        self.decay = self.mu + self.beta + self.gam_src
        # (p_src / p_dst) beta, the force weight of one unit of link density
        self.w_beta = self.p[self.src] / self.p[self.dst] * self.beta \
            if n_pairs else np.empty(0)
        self.n_pairs = n_pairs
        self.size = 3 * self.k + 2 * n_pairs

    def unpack(self, y):
        k, np_ = self.k, self.n_pairs
        return (y[:k], y[k:2 * k], y[2 * k:3 * k],
                y[3 * k:3 * k + np_], y[3 * k + np_:])

    def force(self, i_vec, lc, ld):
        f = self.b_h @ i_vec
        if self.n_pairs:
            np.add.at(f, self.dst, self.w_beta * (lc + ld))
        return f

    def rhs(self, y):
        s, i_vec, r, lc, ld = self.unpack(y)
        f = self.force(i_vec, lc, ld)
        sf = s * f
        out = np.empty_like(y)
        k, np_ = self.k, self.n_pairs
        out[:k] = -sf
        out[k:2 * k] = sf - self.gamma * i_vec
        out[2 * k:3 * k] = self.gamma * i_vec
        if np_:
            out[3 * k:3 * k + np_] = (self.lam / self.mu) * sf[self.src] - self.decay * lc
            out[3 * k + np_:] = self.lam * i_vec[self.src] - self.decay * ld
        return out

    def linearization(self) -> np.ndarray:
        """Jacobian of the (i, l_c, l_d) block at the disease-free state."""
        k, np_ = self.k, self.n_pairs
        n = k + 2 * np_
        a = np.zeros((n, n))
        a[:k, :k] = self.b_h - np.diag(self.gamma)
        for q in range(np_):
            wcol = k + q
            # force contribution of this pair's links onto its target type
            a[self.dst[q], wcol] += self.w_beta[q]
            a[self.dst[q], wcol + np_] += self.w_beta[q]
        for q in range(np_):
            row = k + q
            src = self.src[q]
            coef = self.lam[q] / self.mu[q]
            # l_c gains coef * F_src; F_src is linear in (i, l_c, l_d)
            a[row, :k] += coef * self.b_h[src]
            for q2 in range(np_):
                if self.dst[q2] == src:
                    a[row, k + q2] += coef * self.w_beta[q2]
                    a[row, k + np_ + q2] += coef * self.w_beta[q2]
            a[row, row] -= self.decay[q]
            rowd = k + np_ + q
            a[rowd, src] += self.lam[q]
            a[rowd, rowd] -= self.decay[q]
        return a

    def seed_state(self, eps: float) -> np.ndarray:
        """Exponentially consistent small seed along the leading direction.

        i components sum to eps; s and r are offset so that the state sits on
        the invariant growth path (conservation holds exactly).
        """
        growth, v = _dominant_direction(self.linearization())
        k, np_ = self.k, self.n_pairs
        vi = v[:k]
        tot = vi.sum()
        if tot <= 0.0:
            raise NumericalError("leading direction carries no infectives")
        v = v / tot
        vi = v[:k]
        y = np.zeros(self.size)
        y[:k] = 1.0 - eps * (growth + self.gamma) * vi / growth
        y[k:2 * k] = eps * vi
        y[2 * k:3 * k] = eps * self.gamma * vi / growth
        if np_:
            y[3 * k:3 * k + np_] = eps * v[k:k + np_]
            y[3 * k + np_:] = eps * v[k + np_:]
        return y

    def explicit_state(self, init: dict) -> np.ndarray:
        k, np_ = self.k, self.n_pairs
        y = np.zeros(self.size)
        for idx, name in enumerate(("s", "i", "r")):
            y[idx * k:(idx + 1) * k] = np.broadcast_to(
                np.asarray(init[name], dtype=float), (k,))
        lc = init.get("l_c", {})
        ld = init.get("l_d", {})
        for q, pr in enumerate(self.pairs):
            y[3 * k + q] = float(lc.get(pr, 0.0))
            y[3 * k + np_ + q] = float(ld.get(pr, 0.0))
        return y

    def integrate(self, init, t_max, h, eps, method) -> LimitCurves:
        y0 = self.explicit_state(init) if init is not None else self.seed_state(eps)
        t, path = _rk4_path(self.rhs, y0, t_max, h)
        k, np_ = self.k, self.n_pairs
        path = path.T
        curves = LimitCurves(
            method=method, t=t, p=self.p.copy(),
            s=path[:k], i=path[k:2 * k], r=path[2 * k:3 * k],
            l_c={pr: path[3 * k + q] for q, pr in enumerate(self.pairs)},
            l_d={pr: path[3 * k + np_ + q] for q, pr in enumerate(self.pairs)})
        rates = {pr: (self.lam[q], self.mu[q], self.beta[q], self.gam_src[q])
                 for q, pr in enumerate(self.pairs)}
        curves.validate(residual_rates=rates)
        return curves


# ---------------------------------------------------------------------------
# public ODE routes


def ode_weak(r0, gamma, p, init: dict | None = None,
             grid: tuple[float, float] = DEFAULT_GRID,
             seed_amplitude: float = 1e-6) -> LimitCurves:
    """Mass-action limit curves for fully homogeneous channel structure.

    ``r0`` is the (k, k) reproduction matrix (entry [i, j]: mean offspring of
    type j born to one type-i infective), ``gamma`` the recovery rates,
    ``p`` the type fractions.  The force on type j is
    sum_i (p_i/p_j) r0[i, j] gamma_i i_i(t).
    """
    r0 = np.atleast_2d(np.asarray(r0, dtype=float))
    k = r0.shape[0]
    p = np.broadcast_to(np.asarray(p, dtype=float), (k,))
    gamma = np.broadcast_to(np.asarray(gamma, dtype=float), (k,))
    b_h = (p[:, None] / p[None, :] * r0 * gamma[:, None]).T
    system = _LimitSystem(p, gamma, b_h, [], {})
    t_max, h = grid
    return system.integrate(init, t_max, h, seed_amplitude, "weak_ode")


def ode_strong_single(lam: float, mu: float, beta: float, gamma: float,
                      init: dict | None = None,
                      grid: tuple[float, float] = DEFAULT_GRID,
                      seed_amplitude: float = 1e-6) -> LimitCurves:
    """One-type slow-edge limit system.

        s' = -beta l s                l = l_c + l_d
        i' = beta l s - gamma i
        l_c' = (lam/mu) beta l s - (mu + beta + gamma) l_c
        l_d' = lam i - (mu + beta + gamma) l_d

    l_c is the link stock a fresh infective carries over from its susceptible
    past, l_d the links it forms afterwards; both feed the force until they
    dissolve, fire, or the infective recovers.
    """
    system = _LimitSystem([1.0], [gamma], np.zeros((1, 1)), [(0, 0)],
                          {(0, 0): (lam, mu, beta)})
    t_max, h = grid
    return system.integrate(init, t_max, h, seed_amplitude, "strong_ode")


def _partition_channels(spec: ModelSpec, report: RegimeReport):
    """Split channels into homogeneous-limit and slow-edge sets.

    Returns (b_h, pairs, pair_rates); raises ValueError when any nonzero
    channel has no usable limit.
    """
    k = spec.k
    b_h = np.zeros((k, k))
    pairs: list[tuple[int, int]] = []
    pair_rates: dict[tuple[int, int], tuple[float, float, float]] = {}
    bad = []
    for i in range(k):
        for j in range(k):
            pr = report.pair(i, j)
            if pr.zero_channel:
                continue
            if not pr.constraints_ok or pr.degenerate:
                bad.append((i, j))
                continue
            if pr.homogeneous:
                b_h[j, i] = spec.p[i] / spec.p[j] * pr.limit_r0 * spec.gamma[i]
            else:
                pairs.append((i, j))
                pair_rates[(i, j)] = (float(spec.lam[i, j]), float(spec.mu[i, j]),
                                      float(spec.beta[i, j]))
    if bad:
        raise ValueError(f"channels {bad} have no nondegenerate limit; "
                         "no deterministic curve exists for this parameter point")
    return b_h, pairs, pair_rates


def ode_strong_multi(spec: ModelSpec, init: dict | None = None,
                     grid: tuple[float, float] = DEFAULT_GRID,
                     seed_amplitude: float = 1e-6,
                     report: RegimeReport | None = None) -> LimitCurves:
    """Multi-type slow-edge system; every nonzero channel must be slow-edge."""
    if report is None:
        report = classify_regime(spec)
    b_h, pairs, pair_rates = _partition_channels(spec, report)
    if np.any(b_h != 0.0):
        raise ValueError("some channels have a homogeneous limit; use ode_mixed")
    system = _LimitSystem(spec.p, spec.gamma, b_h, pairs, pair_rates)
    t_max, h = grid
    return system.integrate(init, t_max, h, seed_amplitude, "strong_ode")


def ode_mixed(spec: ModelSpec, nonhomogeneous: set[tuple[int, int]] | None = None,
              init: dict | None = None,
              grid: tuple[float, float] = DEFAULT_GRID,
              seed_amplitude: float = 1e-6,
              report: RegimeReport | None = None) -> LimitCurves:
    """Limit curves with homogeneous and slow-edge channels side by side.

    The channel partition is read off the regime classification; passing
    ``nonhomogeneous`` explicitly just asserts it and errors on mismatch.
    """
    if report is None:
        report = classify_regime(spec)
    b_h, pairs, pair_rates = _partition_channels(spec, report)
    if nonhomogeneous is not None and set(nonhomogeneous) != set(pairs):
        raise ValueError(
            f"requested slow-edge partition {sorted(nonhomogeneous)} does not match "
            f"the classification {sorted(pairs)}")
    system = _LimitSystem(spec.p, spec.gamma, b_h, pairs, pair_rates)
    t_max, h = grid
    return system.integrate(init, t_max, h, seed_amplitude, "mixed_ode")


# ---------------------------------------------------------------------------
# infectious-period laws for the renewal back end


@dataclass(frozen=True)
class ExponentialPeriod:
    rate: float


@dataclass(frozen=True)
class DeterministicPeriod:
    length: float


def _renewal_weights(r0_hat: np.ndarray, kernels) -> np.ndarray:
    """Multipliers w[nu, i] on the unnormalized kernels g_{i, nu}."""
    k = len(kernels)
    r0_hat = np.atleast_2d(np.asarray(r0_hat, dtype=float))
    w = np.zeros((k, k))
    for nu in range(k):
        for i in range(k):
            mass = kernels[i][nu].mass
            if mass > 0.0:
                w[nu, i] = r0_hat[nu, i] / mass
            elif r0_hat[nu, i] != 0.0:
                raise ValueError(f"r0_hat[{nu},{i}] nonzero but kernel ({i},{nu}) has no mass")
    return w


def _growth_data(w: np.ndarray, kernels):
    k = len(kernels)

    def mhat(s: float) -> np.ndarray:
        return np.array([[w[nu, i] * kernels[i][nu].laplace(s) for i in range(k)]
                         for nu in range(k)])

    alpha = malthusian_from(mhat)
    _, eta = perron_vectors(mhat(alpha))
    return alpha, np.asarray(eta, dtype=float)


def _recovered_from_s(t: np.ndarray, x: np.ndarray, periods, alpha: float,
                      seed: np.ndarray) -> np.ndarray:
    """r_nu(t) = int x_nu(t - u) dF_Q_nu(u) with exponential history on t < 0.

    ``x`` is 1 - s on the grid; ``seed`` its amplitude vector at t = 0 so the
    history reads x_nu(t) = seed_nu e^{alpha t} for t <= 0.  Exponential
    periods march r' = gamma (x - r) with the exact one-step propagator for
    piecewise-linear x, which keeps r <= x (so i = x - r stays nonnegative).
    """
    k, n = x.shape
    h = float(t[1] - t[0])
    r = np.empty_like(x)
    for nu in range(k):
        per = periods[nu]
        if isinstance(per, DeterministicPeriod):
            shifted = t - per.length
            inside = shifted >= 0.0
            vals = np.empty(n)
            vals[inside] = np.interp(shifted[inside], t, x[nu])
            vals[~inside] = seed[nu] * np.exp(alpha * shifted[~inside])
            r[nu] = vals
            continue
        gam = per.rate
        z = gam * h
        decay = math.exp(-z)
        w_new = 1.0 - (1.0 - decay) / z
        w_old = (1.0 - decay) / z - decay
        row = np.empty(n)
        row[0] = seed[nu] * gam / (alpha + gam)
        prev = row[0]
        xr = x[nu]
        for idx in range(1, n):
            prev = decay * prev + w_new * xr[idx] + w_old * xr[idx - 1]
            row[idx] = prev
        r[nu] = row
    return r


def renewal_solve(r0_hat, kernels, grid: tuple[float, float] = DEFAULT_GRID,
                  seed_amplitude: float = 1e-6, *,
                  gamma=None, periods=None, p=None,
                  tail_eps: float = 1e-10) -> LimitCurves:
    """March the nonlinear renewal equation for s, then recover r by mixing
    over the infectious-period law; i = 1 - s - r.

    ``r0_hat[nu, i]`` weights the (unnormalized) kernel of channel (i, nu);
    history left of the grid follows the exponential ansatz along the leading
    growth direction with peak amplitude ``seed_amplitude``.  Kernels are
    truncated where their remaining mass drops below ``tail_eps``; the grid
    must be long enough to hold the truncated support.
    """
    k = len(kernels)
    t_max, h = grid
    w = _renewal_weights(r0_hat, kernels)
    if p is None:
        p = np.full(k, 1.0 / k)
    p = np.asarray(p, dtype=float)
    if periods is None:
        if gamma is None:
            raise ValueError("pass either gamma or periods for the recovery mixture")
        gam = np.broadcast_to(np.asarray(gamma, dtype=float), (k,))
        periods = [ExponentialPeriod(float(g)) for g in gam]

    alpha, eta = _growth_data(w, kernels)
    seed = seed_amplitude * eta / np.max(eta)

    n_steps = int(round(t_max / h))
    t = h * np.arange(n_steps + 1)
    active = [(i, nu) for i in range(k) for nu in range(k) if w[nu, i] > 0.0]
    gvals: dict[tuple[int, int], np.ndarray] = {}
    mlen: dict[tuple[int, int], int] = {}
    for i, nu in active:
        kern = kernels[i][nu]
        u_max = kern.horizon(tail_eps)
        if u_max > t_max:
            raise NumericalError(
                f"kernel ({i},{nu}) truncation horizon {u_max:.2f} exceeds the grid "
                f"length {t_max:.2f}; extend the grid")
        m = int(math.ceil(u_max / h))
        mlen[(i, nu)] = m
        gvals[(i, nu)] = w[nu, i] * np.asarray(kern.density(h * np.arange(m + 1)))

    x = np.zeros((k, n_steps + 1))
    for n in range(n_steps + 1):
        base = np.zeros(k)
        head = np.zeros((k, k))  # head[nu, i]: weight on the unknown x_i(t_n)
        for i, nu in active:
            g = gvals[(i, nu)]
            m = mlen[(i, nu)]
            q = min(n, m)
            if q > 0:
                seg = g[1:q + 1] * x[i, n - 1::-1][:q]
                contrib = h * (seg.sum() - 0.5 * seg[-1])
            else:
                contrib = 0.0
            if n > 0:
                head[nu, i] = 0.5 * h * g[0]
            if n < m:
                kern = kernels[i][nu]
                contrib += seed[i] * math.exp(alpha * t[n]) * w[nu, i] * (
                    kern.laplace_tail(alpha, t[n]) - kern.laplace_tail(alpha, h * m))
            base[nu] += contrib
        guess = x[:, n - 1] if n > 0 else seed.copy()
        for _ in range(60):
            new = -np.expm1(-(base + head @ guess))
            if np.max(np.abs(new - guess)) < 1e-14:
                guess = new
                break
            guess = new
        else:
            raise NumericalError("within-step fixed point did not converge")
        x[:, n] = guess

    s = 1.0 - x
    r = _recovered_from_s(t, x, periods, alpha, seed)
    i_arr = 1.0 - s - r
    curves = LimitCurves(method="renewal", t=t, p=p, s=s, i=i_arr, r=r)
    curves.validate()
    return curves


def renewal_from_spec(spec: ModelSpec, grid: tuple[float, float] = DEFAULT_GRID,
                      seed_amplitude: float = 1e-6,
                      tail_eps: float = 1e-10,
                      report: RegimeReport | None = None) -> LimitCurves:
    """Renewal route straight from a parameter point in a nondegenerate regime."""
    kernels = limit_kernels(spec, report)
    k = spec.k
    r0_hat = np.array([[spec.p[i] / spec.p[nu] * kernels[i][nu].mass
                        for i in range(k)] for nu in range(k)])
    return renewal_solve(r0_hat, kernels, grid, seed_amplitude,
                         gamma=spec.gamma, p=spec.p, tail_eps=tail_eps)


# ---------------------------------------------------------------------------
# scale-free fixed point


@dataclass
class PsiCurves:
    """The scale-free description s_nu(t) = psi_nu(c e^{alpha t}).

    ``z_grid`` is geometric; ``psi`` holds one row per type, pinned so that
    psi[pin_type](1) = 1/2.  The plateau at large argument is the final size.
    """

    z_grid: np.ndarray
    psi: np.ndarray
    alpha_hat: float
    pin_type: int
    sweeps: int

    @property
    def k(self) -> int:
        return self.psi.shape[0]

    @property
    def plateau(self) -> np.ndarray:
        return self.psi[:, -1].copy()

    def evaluate(self, nu: int, z) -> np.ndarray:
        """psi_nu at arbitrary positive arguments (log-linear interpolation)."""
        z = np.asarray(z, dtype=float)
        out = np.empty(z.shape)
        logz = np.log(z)
        lo = np.log(self.z_grid[0])
        hi = np.log(self.z_grid[-1])
        row = self.psi[nu]
        inside = (logz >= lo) & (logz <= hi)
        out[inside] = np.interp(logz[inside], np.log(self.z_grid), row)
        left = logz < lo
        # near zero, 1 - psi decays linearly in the argument
        out[left] = 1.0 - (1.0 - row[0]) * np.exp(logz[left] - lo)
        out[logz > hi] = row[-1]
        return out

    def s_of_time(self, t: np.ndarray, scale: float = 1.0) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        return np.vstack([self.evaluate(nu, scale * np.exp(self.alpha_hat * t))
                          for nu in range(self.k)])

    def to_limit_curves(self, grid: tuple[float, float], gamma=None, periods=None,
                        p=None, tail_eps: float = 1e-10,
                        start_amplitude: float = 1e-6) -> LimitCurves:
        """Materialize a time-grid bundle; r is re-mixed over the period law.

        The time origin is chosen so the pinned type's 1 - s equals
        ``start_amplitude`` at t = 0 (deep in the exponential phase).
        """
        t_max, h = grid
        k = self.k
        if p is None:
            p = np.full(k, 1.0 / k)
        p = np.asarray(p, dtype=float)
        if periods is None:
            if gamma is None:
                raise ValueError("pass either gamma or periods")
            gam = np.broadcast_to(np.asarray(gamma, dtype=float), (k,))
            periods = [ExponentialPeriod(float(g)) for g in gam]
        # find z0 with 1 - psi[pin](z0) = start_amplitude
        row = self.psi[self.pin_type]
        deficit = 1.0 - row
        idx = np.searchsorted(deficit, start_amplitude)
        idx = min(max(idx, 1), row.size - 1)
        lz = np.log(self.z_grid)
        frac = (start_amplitude - deficit[idx - 1]) / (deficit[idx] - deficit[idx - 1])
        z0 = math.exp(lz[idx - 1] + frac * (lz[idx] - lz[idx - 1]))
        t = h * np.arange(int(round(t_max / h)) + 1)
        s = self.s_of_time(t, scale=z0)
        x = 1.0 - s
        r = _recovered_from_s(t, x, periods, self.alpha_hat, x[:, 0].copy())
        i_arr = 1.0 - s - r
        curves = LimitCurves(method="psi", t=t, p=p, s=s, i=i_arr, r=r)
        curves.validate()
        return curves


def psi_fixed_point(r0_hat, kernels, malthusian_hat: float | None = None,
                    s_grid: np.ndarray | None = None, *,
                    pin_type: int = 0, tol: float = 1e-10,
                    max_sweeps: int = 10000, quad_panels: int = 800,
                    tail_eps: float = 1e-10) -> PsiCurves:
    """Solve psi_nu(z) = exp(-sum_i w[nu,i] int (1 - psi_i(z e^{-alpha u})) g_i,nu(u) du).

    Every positive solution is a time shift of every other; the sweep pins
    psi[pin_type](1) = 1/2 after each pass.  Geometric default grid from 1e-6
    to 1e3, 40 points per decade.
    """
    k = len(kernels)
    w = _renewal_weights(r0_hat, kernels)
    if malthusian_hat is None:
        malthusian_hat, _ = _growth_data(w, kernels)
    alpha = float(malthusian_hat)
    if s_grid is None:
        # the plateau settles only like z^{-1/2}, so the grid reaches far to
        # the right; point density sets the log-linear interpolation floor
        n_pts = 20 * 80 + 1
        s_grid = np.geomspace(1e-8, 1e12, n_pts)
    z = np.asarray(s_grid, dtype=float)
    logz = np.log(z)

    _, eta = _growth_data(w, kernels)
    coef = math.log(2.0) * eta / eta[pin_type]
    psi = np.exp(-coef[:, None] * z[None, :])

    # Simpson nodes per channel, folded with the kernel density and weight
    active = [(i, nu) for i in range(k) for nu in range(k) if w[nu, i] > 0.0]
    nodes: dict[tuple[int, int], tuple[np.ndarray, np.ndarray]] = {}
    for i, nu in active:
        kern = kernels[i][nu]
        u_max = kern.horizon(tail_eps)
        u = np.linspace(0.0, u_max, quad_panels + 1)
        du = u[1] - u[0]
        sw = np.ones(quad_panels + 1)
        sw[1:-1:2] = 4.0
        sw[2:-1:2] = 2.0
        sw *= du / 3.0
        nodes[(i, nu)] = (u, sw * np.asarray(kern.density(u)) * w[nu, i])

    def eval_rows(rows: np.ndarray, args_log: np.ndarray, nu: int) -> np.ndarray:
        lo = logz[0]
        out = np.interp(args_log, logz, rows[nu])
        left = args_log < lo
        if np.any(left):
            out[left] = 1.0 - (1.0 - rows[nu][0]) * np.exp(args_log[left] - lo)
        return out

    lz0 = logz[0]
    for sweep in range(1, max_sweeps + 1):
        expo = np.zeros((k, z.size))
        for i, nu in active:
            u, qw = nodes[(i, nu)]
            args_log = logz[:, None] - alpha * u[None, :]
            vals = eval_rows(psi, args_log.ravel(), i).reshape(args_log.shape)
            expo[nu] += (1.0 - vals) @ qw
        new_psi = np.exp(-expo)
        # re-pin: psi[pin_type] is monotone decreasing in z
        row = new_psi[pin_type]
        if not (row[0] > 0.5 > row[-1]):
            raise NumericalError("pin level 1/2 left the grid; widen s_grid")
        jdx = int(np.searchsorted(-row, -0.5))
        jdx = min(max(jdx, 1), row.size - 1)
        frac = (row[jdx - 1] - 0.5) / (row[jdx - 1] - row[jdx])
        log_zstar = logz[jdx - 1] + frac * (logz[jdx] - logz[jdx - 1])
        shifted_log = logz + log_zstar
        pinned = np.empty_like(new_psi)
        for nu in range(k):
            out = np.interp(shifted_log, logz, new_psi[nu])
            left = shifted_log < lz0
            if np.any(left):
                out[left] = 1.0 - (1.0 - new_psi[nu][0]) * np.exp(shifted_log[left] - lz0)
            right = shifted_log > logz[-1]
            if np.any(right):
                out[right] = new_psi[nu][-1]
            pinned[nu] = out
        delta = float(np.max(np.abs(pinned - psi)))
        psi = pinned
        if delta < tol:
            return PsiCurves(z_grid=z, psi=psi, alpha_hat=alpha,
                            pin_type=pin_type, sweeps=sweep)
    raise NumericalError(f"fixed-point sweeps did not converge within {max_sweeps}")


def psi_from_spec(spec: ModelSpec, report: RegimeReport | None = None,
                  **kwargs) -> PsiCurves:
    kernels = limit_kernels(spec, report)
    k = spec.k
    r0_hat = np.array([[spec.p[i] / spec.p[nu] * kernels[i][nu].mass
                        for i in range(k)] for nu in range(k)])
    return psi_fixed_point(r0_hat, kernels, **kwargs)


# ---------------------------------------------------------------------------
# closed-form checks


@dataclass(frozen=True)
class FinalSize:
    s_inf: np.ndarray
    attack: np.ndarray


def final_size(r0, p=None, tol: float = 1e-13, max_iter: int = 100000) -> FinalSize:
    """Smallest root of -log s_j = sum_i a[j, i] (1 - s_i).

    With ``p`` given, a[j, i] = (p_i/p_j) r0[i, j] (the force weighting of the
    limit curves); without it, a = r0 transposed, which is the same thing for
    one type or uniform p.  Subcritical points get s_inf = 1 and a warning.
    """
    r0 = np.atleast_2d(np.asarray(r0, dtype=float))
    k = r0.shape[0]
    if p is None:
        a = r0.T.copy()
    else:
        p = np.asarray(p, dtype=float)
        a = (p[:, None] / p[None, :] * r0).T
    if spectral_radius(a) <= 1.0 + 1e-12:
        warnings.warn("reproduction matrix is not supercritical; final size is zero",
                      stacklevel=2)
        ones = np.ones(k)
        return FinalSize(s_inf=ones, attack=np.zeros(k))
    s = np.zeros(k)
    for _ in range(max_iter):
        new = np.exp(-a @ (1.0 - s))
        if np.max(np.abs(new - s)) < tol:
            s = new
            break
        s = new
    else:
        raise NumericalError("final-size iteration did not converge")
    resid = np.max(np.abs(-np.log(s) - a @ (1.0 - s)))
    if resid > 1e-10:
        raise NumericalError(f"final-size identity residual {resid:.3e}")
    return FinalSize(s_inf=s, attack=1.0 - s)


def i_max_closed_form(r0: float) -> float:
    """Peak infected fraction of the one-type mass-action curve."""
    if r0 <= 1.0:
        raise ValueError("peak formula requires a supercritical r0 > 1")
    return 1.0 - (1.0 + math.log(r0)) / r0


def peak_thresholds(lam: float, mu: float, beta: float, gamma: float) -> tuple[float, float]:
    """(s_hi, s_lo): the susceptible fraction at the infection peak of the
    one-type slow-edge curve lies inside this window.

    s_hi = (mu + beta) gamma / (lam beta), s_lo = mu gamma / (lam beta);
    s_lo also equals (mu + gamma) / (R0 (mu + beta + gamma)) for the
    slow-edge R0, an identity we keep checked.
    """
    s_hi = (mu + beta) * gamma / (lam * beta)
    s_lo = mu * gamma / (lam * beta)
    r0 = lam * beta * (mu + gamma) / (mu * gamma * (beta + mu + gamma))
    alt = (mu + gamma) / (r0 * (mu + beta + gamma))
    if not math.isclose(s_lo, alt, rel_tol=1e-9):
        raise NumericalError("threshold identity failed; inconsistent rates")
    return s_hi, s_lo


# ---------------------------------------------------------------------------
# curve comparison


@dataclass(frozen=True)
class CurveGap:
    shift: float
    per_comp: dict[str, float]

    @property
    def overall(self) -> float:
        return max(self.per_comp.values())


def sup_gap_after_shift(a: LimitCurves, b: LimitCurves,
                        comps: tuple[str, ...] = ("s", "i", "r"),
                        window: tuple[float, float] = DEFAULT_WINDOW,
                        level: float = PIN_LEVEL,
                        du: float = 1e-3,
                        max_shift: float = 1.0) -> CurveGap:
    """Pin both curve bundles at the same prevalence level, then report the
    smallest sup-distance achievable with a small extra time shift of b."""
    ta = a.pin_time(level)
    tb = b.pin_time(level)
    u = np.arange(window[0], window[1] + 0.5 * du, du)
    ref = {c: a.sample(c, ta + u) for c in comps}

    def gap(delta: float) -> float:
        worst = 0.0
        for c in comps:
            cur = b.sample(c, tb + u + delta)
            worst = max(worst, float(np.max(np.abs(cur - ref[c]))))
        return worst

    coarse = np.linspace(-max_shift, max_shift, 81)
    best = min(coarse, key=gap)
    span = coarse[1] - coarse[0]
    res = minimize_scalar(gap, bounds=(best - span, best + span), method="bounded",
                          options={"xatol": 1e-10})
    delta = float(res.x) if res.fun <= gap(best) else float(best)
    per = {}
    for c in comps:
        cur = b.sample(c, tb + u + delta)
        per[c] = float(np.max(np.abs(cur - ref[c])))
    return CurveGap(shift=delta, per_comp=per)
