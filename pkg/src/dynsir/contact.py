"""Interrupted-Poisson-process contact mathematics.

While an edge between an infective and a partner is present, contacts fall at
rate beta; the edge itself blinks on at rate lam and off at rate mu.  Seen
from the infective, contact times toward one partner form an interrupted
Poisson process whose interarrival law is hyperexponential with rates

    r1, r2 = ((beta + lam + mu) +- sqrt((beta + lam + mu)^2 - 4 beta lam)) / 2

mixed with weight p_mix = (beta - r2)/(r1 - r2).  Two algebraic identities
pin the parameterization: r1 * r2 = beta * lam and
p_mix * r2 + (1 - p_mix) * r1 = lam + mu.

This module also carries the infection-age kernels built from these laws:
the finite-population kernel n_j * f_excess(t) * exp(-gamma t), its
homogeneous large-n limit R0 * gamma * exp(-gamma t), and the two-phase
limit kernel of the slow-edge regime (kappa_beta = 0, kappa_lam = -1,
kappa_mu = 0), plus the Laplace-transform matrices driving growth-rate and
renewal computations.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from dynsir.params import ModelSpec, RegimeReport, classify_regime, limit_r0_matrix


@dataclass(frozen=True)
class IppParams:
    """Hyperexponential interarrival parameters of one contact channel."""

    beta: float
    lam: float
    mu: float
    r1: float
    r2: float
    p_mix: float

    @property
    def excess_norm(self) -> float:
        """Normalizer p_mix*r2 + (1-p_mix)*r1 of the excess law (= lam + mu)."""
        return self.p_mix * self.r2 + (1.0 - self.p_mix) * self.r1

    @property
    def excess_w1(self) -> float:
        """Weight of the Exp(r1) component in the excess-time mixture."""
        return self.p_mix * self.r2 / self.excess_norm


def ipp_params(beta: float, lam: float, mu: float) -> IppParams:
    """Solve the interarrival quadratic for one channel.

    Requires beta > 0 and lam > 0; mu = 0 is allowed and collapses to a pure
    Poisson stream (the Exp(beta) component takes all the mixture weight).
    The double root beta = lam with mu = 0 gets p_mix = 1/2, its limit value.
    """
    if beta <= 0.0 or lam <= 0.0 or mu < 0.0:
        raise ValueError("ipp_params requires beta > 0, lam > 0, mu >= 0")
    s = beta + lam + mu
    disc = s * s - 4.0 * beta * lam  # = (beta-lam)^2 + mu^2 + 2mu(beta+lam) >= 0
    root = math.sqrt(max(disc, 0.0))
    r1 = 0.5 * (s + root)
    r2 = 0.5 * (s - root)
    if root == 0.0:
        p = 0.5
    else:
        p = (beta - r2) / (r1 - r2)
    return IppParams(beta=beta, lam=lam, mu=mu, r1=r1, r2=r2, p_mix=p)


def mean_interarrival(beta: float, lam: float, mu: float) -> float:
    """Mean time between contacts, (1/beta) * (lam + mu)/lam."""
    if lam <= 0.0:
        raise ValueError("edge never forms: lam must be > 0 for a finite mean interarrival")
    if beta <= 0.0:
        raise ValueError("mean_interarrival requires beta > 0")
    return (lam + mu) / (beta * lam)


def excess_pdf(t, ipp: IppParams):
    """Density of the equilibrium excess (first-contact) time at t >= 0."""
    t = np.asarray(t, dtype=float)
    num = ipp.r1 * ipp.r2 * (ipp.p_mix * np.exp(-ipp.r1 * t)
                             + (1.0 - ipp.p_mix) * np.exp(-ipp.r2 * t))
    out = num / ipp.excess_norm
    return float(out) if out.ndim == 0 else out


def excess_cdf(t, ipp: IppParams):
    """Distribution function of the equilibrium excess time at t >= 0."""
    t = np.asarray(t, dtype=float)
    num = (ipp.p_mix * ipp.r2 * -np.expm1(-ipp.r1 * t)
           + (1.0 - ipp.p_mix) * ipp.r1 * -np.expm1(-ipp.r2 * t))
    out = num / ipp.excess_norm
    return float(out) if out.ndim == 0 else out


def sample_excess(ipp: IppParams, rng, size: int | None = None):
    """Exact draws of the excess time: Exp(r1) w.p. excess_w1, else Exp(r2)."""
    w1 = ipp.excess_w1
    if size is None:
        r = ipp.r1 if rng.random() < w1 else ipp.r2
        return rng.expovariate(r)
    return np.array([sample_excess(ipp, rng) for _ in range(size)])


def sample_excess_truncated(ipp: IppParams, q: float, rng) -> float:
    """Draw the excess time conditioned on landing in [0, q].

    Picks the mixture component with probability proportional to its mass on
    [0, q], then inverts that exponential's truncated CDF.  Exact; two
    uniforms consumed.
    """
    w1 = ipp.excess_w1
    m1 = w1 * -math.expm1(-ipp.r1 * q)
    m2 = (1.0 - w1) * -math.expm1(-ipp.r2 * q)
    r = ipp.r1 if rng.random() * (m1 + m2) < m1 else ipp.r2
    # inverse CDF of Exp(r) truncated to [0, q]
    return -math.log1p(rng.random() * math.expm1(-r * q)) / r


def r0_n(beta: float, lam: float, mu: float, gamma: float, n_j: int) -> float:
    """Finite-population mean offspring count toward one partner type.

    n_j partners, each first contacted after an excess time, counted only if
    the contact lands before the infector's Exp(gamma) recovery.
    """
    num = n_j * beta * lam * (lam + mu + gamma)
    den = (lam + mu) * (gamma * gamma + gamma * (beta + lam + mu) + beta * lam)
    return num / den


# ---------------------------------------------------------------------------
# infection-age kernels
# ---------------------------------------------------------------------------

class Kernel:
    """Closed-form unnormalized infection-age intensity on [0, inf).

    `mass` is the total integral (the reproduction number of the channel);
    `laplace(s)` is the unnormalized transform, so laplace(0) == mass.
    """

    mass: float

    def density(self, t):
        raise NotImplementedError

    def cdf_mass(self, t):
        """Integral of the density over [0, t]."""
        raise NotImplementedError

    def laplace(self, s: float) -> float:
        raise NotImplementedError

    def laplace_tail(self, s: float, w: float) -> float:
        """Partial transform integral_w^inf e^{-su} g(u) du; laplace_tail(s, 0) == laplace(s)."""
        raise NotImplementedError

    def horizon(self, eps: float) -> float:
        """Smallest t with tail mass <= eps, by bisection on the closed CDF."""
        if self.mass <= eps:
            return 0.0
        hi = 1.0
        while self.mass - self.cdf_mass(hi) > eps:
            hi *= 2.0
            if hi > 1e9:
                raise ValueError("kernel tail does not decay below the requested mass")
        lo = hi * 0.5 if hi > 1.0 else 0.0
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if self.mass - self.cdf_mass(mid) > eps:
                lo = mid
            else:
                hi = mid
        return hi


@dataclass(frozen=True)
class HomogeneousKernel(Kernel):
    """Exponential kernel R0 * gamma * exp(-gamma t)."""

    gamma: float
    r0: float

    @property
    def mass(self) -> float:  # type: ignore[override]
        return self.r0

    def density(self, t):
        t = np.asarray(t, dtype=float)
        out = self.r0 * self.gamma * np.exp(-self.gamma * t)
        return float(out) if out.ndim == 0 else out

    def cdf_mass(self, t):
        t = np.asarray(t, dtype=float)
        out = self.r0 * -np.expm1(-self.gamma * t)
        return float(out) if out.ndim == 0 else out

    def laplace(self, s: float) -> float:
        return self.r0 * self.gamma / (s + self.gamma)

    def laplace_tail(self, s: float, w: float) -> float:
        return self.r0 * self.gamma * math.exp(-(s + self.gamma) * w) / (s + self.gamma)


@dataclass(frozen=True)
class SixBKernel(Kernel):
    """Two-phase kernel of the slow-edge regime.

    g(t) = (lam*beta/mu) e^{-(mu+beta+gamma) t}
         + (lam*beta/(mu+beta)) (1 - e^{-(mu+beta) t}) e^{-gamma t},
    i.e. a fresh-edge burst plus a re-equilibrated tail; collapses to
    (A - B) e^{-d t} + B e^{-gamma t} with A = lam*beta/mu,
    B = lam*beta/(mu+beta), d = mu + beta + gamma.
    """

    lam: float
    mu: float
    beta: float
    gamma: float

    @property
    def _ab(self) -> tuple[float, float, float]:
        a = self.lam * self.beta / self.mu
        b = self.lam * self.beta / (self.mu + self.beta)
        return a, b, self.mu + self.beta + self.gamma

    @property
    def mass(self) -> float:  # type: ignore[override]
        a, b, d = self._ab
        return (a - b) / d + b / self.gamma

    def density(self, t):
        a, b, d = self._ab
        t = np.asarray(t, dtype=float)
        out = (a - b) * np.exp(-d * t) + b * np.exp(-self.gamma * t)
        return float(out) if out.ndim == 0 else out

    def cdf_mass(self, t):
        a, b, d = self._ab
        t = np.asarray(t, dtype=float)
        out = (a - b) / d * -np.expm1(-d * t) + b / self.gamma * -np.expm1(-self.gamma * t)
        return float(out) if out.ndim == 0 else out

    def laplace(self, s: float) -> float:
        a, b, d = self._ab
        return (a - b) / (s + d) + b / (s + self.gamma)

    def laplace_tail(self, s: float, w: float) -> float:
        a, b, d = self._ab
        return ((a - b) * math.exp(-(s + d) * w) / (s + d)
                + b * math.exp(-(s + self.gamma) * w) / (s + self.gamma))


@dataclass(frozen=True)
class FiniteNKernel(Kernel):
    """Finite-population kernel n_j * f_excess(t) * exp(-gamma t)."""

    ipp: IppParams
    gamma: float
    n_j: int

    @property
    def _parts(self) -> tuple[float, float, float]:
        scale = self.n_j * self.ipp.r1 * self.ipp.r2 / self.ipp.excess_norm
        return scale * self.ipp.p_mix, scale * (1.0 - self.ipp.p_mix), self.gamma

    @property
    def mass(self) -> float:  # type: ignore[override]
        return self.laplace(0.0)

    def density(self, t):
        c1, c2, g = self._parts
        t = np.asarray(t, dtype=float)
        out = c1 * np.exp(-(self.ipp.r1 + g) * t) + c2 * np.exp(-(self.ipp.r2 + g) * t)
        return float(out) if out.ndim == 0 else out

    def cdf_mass(self, t):
        c1, c2, g = self._parts
        t = np.asarray(t, dtype=float)
        out = (c1 / (self.ipp.r1 + g) * -np.expm1(-(self.ipp.r1 + g) * t)
               + c2 / (self.ipp.r2 + g) * -np.expm1(-(self.ipp.r2 + g) * t))
        return float(out) if out.ndim == 0 else out

    def laplace(self, s: float) -> float:
        c1, c2, g = self._parts
        return c1 / (s + self.ipp.r1 + g) + c2 / (s + self.ipp.r2 + g)

    def laplace_tail(self, s: float, w: float) -> float:
        c1, c2, g = self._parts
        return (c1 * math.exp(-(s + self.ipp.r1 + g) * w) / (s + self.ipp.r1 + g)
                + c2 * math.exp(-(s + self.ipp.r2 + g) * w) / (s + self.ipp.r2 + g))


@dataclass(frozen=True)
class BoxKernel(Kernel):
    """Flat kernel: contacts at a constant rate over a fixed length.

    The shape a constant contact rate produces when the infectious period is
    deterministic; mostly useful as an independent cross-check against the
    exponential-period kernels.
    """

    rate: float
    length: float

    @property
    def mass(self) -> float:  # type: ignore[override]
        return self.rate * self.length

    def density(self, t):
        # midpoint value at the jump keeps trapezoid sums second order there
        t = np.asarray(t, dtype=float)
        out = np.where(t < self.length, self.rate,
                       np.where(t == self.length, 0.5 * self.rate, 0.0)) * (t >= 0.0)
        return float(out) if out.ndim == 0 else out

    def cdf_mass(self, t):
        t = np.asarray(t, dtype=float)
        out = self.rate * np.clip(t, 0.0, self.length)
        return float(out) if out.ndim == 0 else out

    def laplace(self, s: float) -> float:
        if s == 0.0:
            return self.rate * self.length
        return self.rate * -math.expm1(-s * self.length) / s

    def laplace_tail(self, s: float, w: float) -> float:
        w = min(w, self.length)
        if s == 0.0:
            return self.rate * (self.length - w)
        return self.rate * (math.exp(-s * w) - math.exp(-s * self.length)) / s


def finite_kernel(beta: float, lam: float, mu: float, gamma: float, n_j: int) -> FiniteNKernel:
    """The finite-n kernel for one channel at already-realized rates."""
    return FiniteNKernel(ipp=ipp_params(beta, lam, mu), gamma=gamma, n_j=n_j)


def limit_kernel(spec: ModelSpec, i: int, j: int,
                 report: RegimeReport | None = None) -> Kernel:
    """Limiting kernel of the (i, j) channel; errors on degenerate regimes."""
    if report is None:
        report = classify_regime(spec)
    pr = report.pair(i, j)
    gamma_i = float(spec.gamma[i])
    if pr.zero_channel:
        return HomogeneousKernel(gamma=gamma_i, r0=0.0)
    if not pr.constraints_ok or pr.limit_r0 is None:
        raise ValueError(f"pair ({i},{j}) has no nondegenerate limit kernel: {pr.diagnostic}")
    if pr.homogeneous:
        return HomogeneousKernel(gamma=gamma_i, r0=pr.limit_r0)
    return SixBKernel(lam=float(spec.lam[i, j]), mu=float(spec.mu[i, j]),
                      beta=float(spec.beta[i, j]), gamma=gamma_i)


def limit_kernels(spec: ModelSpec, report: RegimeReport | None = None) -> list[list[Kernel]]:
    """All k^2 limiting kernels, row i = infector type, column j = partner type."""
    if report is None:
        report = classify_regime(spec)
    return [[limit_kernel(spec, i, j, report) for j in range(spec.k)]
            for i in range(spec.k)]


def ml_matrix(kernels: list[list[Kernel]], s: float) -> np.ndarray:
    """Unnormalized Laplace matrix M[i,j](s) = integral e^{-su} G[i,j](du)."""
    k = len(kernels)
    return np.array([[kernels[i][j].laplace(s) for j in range(k)] for i in range(k)])


def ml_hat_matrix(kernels: list[list[Kernel]], p: np.ndarray, s: float) -> np.ndarray:
    """Backward variant: row j bears type-i counts (p_i/p_j) M[i,j](s)."""
    m = ml_matrix(kernels, s)
    p = np.asarray(p, dtype=float)
    return (m / p[np.newaxis, :]).T * p[np.newaxis, :]


def laplace_ml(spec: ModelSpec, s: float,
               kernels: list[list[Kernel]] | None = None) -> np.ndarray:
    """Forward Laplace matrix of the limiting kernels; laplace_ml(spec, 0) = R0."""
    if kernels is None:
        kernels = limit_kernels(spec)
    return ml_matrix(kernels, s)


def laplace_ml_hat(spec: ModelSpec, s: float,
                   kernels: list[list[Kernel]] | None = None) -> np.ndarray:
    """Backward Laplace matrix, similar to the forward one via diag(p)."""
    if kernels is None:
        kernels = limit_kernels(spec)
    return ml_hat_matrix(kernels, spec.p, s)


def limit_r0(spec: ModelSpec) -> np.ndarray:
    """Alias for the limiting R0 matrix (= laplace_ml(spec, 0))."""
    return limit_r0_matrix(spec)
