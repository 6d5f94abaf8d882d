"""Growth-rate and extinction numerics for the early epidemic phase.

While susceptibles are plentiful the infected population is well approximated
by a multi-type general branching process: a type-i individual lives
Exp(gamma_i) and births type-j cases along the infection-age kernel
G[i,j].  Everything here reduces to the unnormalized Laplace matrix
M(s)[i,j] = integral e^{-su} G[i,j](du):

  * the Malthusian growth rate m solves spectralRadius(M(m)) = 1;
  * zeta, eta are the left/right Perron vectors of M(m), normalized
    zeta.1 = zeta.eta = 1;
  * the backward (who-infected-whom, time-reversed) process swaps roles via
    p-weighting, Mhat(s) = D^-1 M(s)^T D with D = diag(p), so its growth rate
    matches the forward one and its Perron pair is computed independently as
    a cross-check;
  * m_star = sum_l zeta_l zetahat_l / p_l calibrates the random time shift
    between the forward and backward descriptions;
  * extinction probabilities come from the embedded offspring counts, which
    are mixed Poissons over the infectious period: homogeneous channels give
    the closed-form generating function 1/(1 + sum_j R0[i,j](1-z_j)), and
    two-phase channels are integrated over the lifetime by 64-point
    Gauss-Laguerre quadrature.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from numpy.polynomial.laguerre import laggauss

from dynsir.contact import Kernel, SixBKernel, limit_kernels, ml_hat_matrix, ml_matrix
from dynsir.errors import NumericalError
from dynsir.params import ModelSpec, classify_regime

_RADIUS_TOL = 1e-13
_RADIUS_MAX_ITER = 500000


def spectral_radius(a: np.ndarray) -> float:
    """Perron root of a nonnegative square matrix by shifted power iteration.

    The +cI shift keeps the iteration convergent for periodic patterns;
    tolerance 1e-13 on successive radius estimates.
    """
    a = np.asarray(a, dtype=float)
    k = a.shape[0]
    if k == 1:
        return float(a[0, 0])
    if not np.any(a):
        return 0.0
    shift = max(float(a.sum(axis=1).max()), 1e-3)
    x = np.full(k, 1.0 / k)
    est = 0.0
    for _ in range(_RADIUS_MAX_ITER):
        y = a @ x + shift * x
        norm = float(y.sum())  # positive for nonnegative a and positive x
        x = y / norm
        new = norm - shift
        if abs(new - est) <= _RADIUS_TOL * max(1.0, abs(new)):
            return new
        est = new
    raise NumericalError("power iteration for the spectral radius did not converge")


def _strong_components(pattern: np.ndarray) -> list[list[int]]:
    """Strongly connected components of the positivity digraph (tiny k)."""
    k = pattern.shape[0]

    def reachable(start: int, adj: np.ndarray) -> set[int]:
        seen = {start}
        stack = [start]
        while stack:
            u = stack.pop()
            for v in range(k):
                if adj[u, v] and v not in seen:
                    seen.add(v)
                    stack.append(v)
        return seen

    fwd = [reachable(i, pattern) for i in range(k)]
    bwd = [reachable(i, pattern.T) for i in range(k)]
    comps: list[list[int]] = []
    assigned = [False] * k
    for i in range(k):
        if assigned[i]:
            continue
        comp = sorted(fwd[i] & bwd[i])
        for v in comp:
            assigned[v] = True
        comps.append(comp)
    return comps


def perron_vectors(a: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Left and right Perron vectors (zeta, eta) with zeta.1 = zeta.eta = 1.

    Requires an irreducible nonnegative matrix (strong connectivity of the
    positivity pattern); power iteration on the matrix and its transpose.

    Raises:
        ValueError: naming the disconnected blocks if the pattern is reducible.
    """
    a = np.asarray(a, dtype=float)
    k = a.shape[0]
    if k == 1:
        return np.array([1.0]), np.array([1.0])
    comps = _strong_components(a > 0.0)
    if len(comps) != 1:
        blocks = ", ".join("{" + ",".join(map(str, c)) + "}" for c in comps)
        raise ValueError(f"matrix positivity pattern is reducible; blocks: {blocks}")
    shift = max(float(a.sum(axis=1).max()), 1e-3)
    eta = np.full(k, 1.0 / k)
    zeta = np.full(k, 1.0 / k)
    for _ in range(_RADIUS_MAX_ITER):
        y = a @ eta + shift * eta
        z = a.T @ zeta + shift * zeta
        eta_new = y / y.sum()
        zeta_new = z / z.sum()
        delta = max(np.abs(eta_new - eta).max(), np.abs(zeta_new - zeta).max())
        eta, zeta = eta_new, zeta_new
        if delta <= _RADIUS_TOL:
            break
    else:
        raise NumericalError("Perron power iteration did not converge")
    zeta = zeta / zeta.sum()
    eta = eta / float(zeta @ eta)
    rho = spectral_radius(a)
    resid = max(float(np.abs(a @ eta - rho * eta).max()),
                float(np.abs(a.T @ zeta - rho * zeta).max()))
    if resid > 1e-9 * max(1.0, rho):
        raise NumericalError(f"Perron residual {resid:g} too large")
    return zeta, eta


def malthusian_from(ml: Callable[[float], np.ndarray]) -> float:
    """Root s* > 0 of spectralRadius(ml(s)) = 1.

    The radius is strictly decreasing in s.  Doubling bracket, bisection to
    width 1e-6, then secant polish to 1e-12.

    Raises:
        NumericalError: if the process is critical or subcritical
            (radius at s=0 not above 1), or the polish fails.
    """
    rho0 = spectral_radius(ml(0.0))
    if rho0 <= 1.0 + 1e-12:
        raise NumericalError(
            f"no positive Malthusian parameter: spectral radius at s=0 is {rho0:.6g} <= 1")
    lo, hi = 0.0, 1.0
    while spectral_radius(ml(hi)) >= 1.0:
        lo = hi
        hi *= 2.0
        if hi > 1e18:
            raise NumericalError("Malthusian bracket exceeded 1e18")
    for _ in range(64):
        if hi - lo <= 1e-6:
            break
        mid = 0.5 * (lo + hi)
        if spectral_radius(ml(mid)) >= 1.0:
            lo = mid
        else:
            hi = mid
    s0, s1 = lo, hi
    f0 = spectral_radius(ml(s0)) - 1.0
    f1 = spectral_radius(ml(s1)) - 1.0
    for _ in range(100):
        if f1 == f0:
            break
        s2 = s1 - f1 * (s1 - s0) / (f1 - f0)
        if not (lo - 1e-6 <= s2 <= hi + 1e-6):
            s2 = 0.5 * (s0 + s1)  # secant left the bracket; fall back
        f2 = spectral_radius(ml(s2)) - 1.0
        s0, f0, s1, f1 = s1, f1, s2, f2
        if abs(s1 - s0) <= 1e-12 * max(1.0, abs(s1)) and abs(f1) <= 1e-12:
            break
    if abs(f1) > 1e-10:
        raise NumericalError(f"Malthusian polish stalled: |radius-1| = {abs(f1):g}")
    return s1


def m_star(zeta: np.ndarray, zeta_hat: np.ndarray, p: np.ndarray) -> float:
    """Time-shift calibration constant sum_l zeta_l * zetahat_l / p_l."""
    return float(np.sum(np.asarray(zeta) * np.asarray(zeta_hat) / np.asarray(p)))


# ---------------------------------------------------------------------------
# extinction probabilities
# ---------------------------------------------------------------------------

def _sixb_mean_count(kern: SixBKernel, q) -> np.ndarray:
    """Conditional mean offspring toward one channel given lifetime q.

    Integral of the conditional birth intensity over [0, q]:
    lam*beta^2 (1-e^{-(mu+beta)q}) / (mu (mu+beta)^2) + lam*beta*q/(mu+beta).
    """
    lam, mu, beta = kern.lam, kern.mu, kern.beta
    q = np.asarray(q, dtype=float)
    return (lam * beta * beta * -np.expm1(-(mu + beta) * q) / (mu * (mu + beta) ** 2)
            + lam * beta * q / (mu + beta))


def extinction_probabilities(spec: ModelSpec,
                             kernels: Sequence[Sequence[Kernel]] | None = None,
                             tol: float = 1e-12, max_iter: int = 100000) -> np.ndarray:
    """Extinction probability of the forward process from one case of each type.

    Offspring counts given the lifetime are independent Poissons across
    partner types; rows whose channels are all homogeneous use the closed-form
    generating function, rows with a two-phase channel integrate the
    conditional generating function over the Exp(gamma_i) lifetime with
    64-point Gauss-Laguerre.  Monotone iteration from 0 converges to the
    smallest fixed point (the vector of ones when not supercritical).
    """
    if kernels is None:
        kernels = limit_kernels(spec)
    k = spec.k
    r0 = ml_matrix(list(kernels), 0.0)
    nodes, weights = laggauss(64)

    def phi(q: np.ndarray) -> np.ndarray:
        out = np.empty(k)
        deficit = 1.0 - q
        for i in range(k):
            row = kernels[i]
            if all(not isinstance(kern, SixBKernel) for kern in row):
                out[i] = 1.0 / (1.0 + float(r0[i] @ deficit))
                continue
            gamma_i = float(spec.gamma[i])
            qq = nodes / gamma_i  # lifetime values; Exp(gamma) mass absorbed
            expo = np.zeros_like(qq)
            for j in range(k):
                kern = row[j]
                if isinstance(kern, SixBKernel):
                    expo += _sixb_mean_count(kern, qq) * deficit[j]
                else:
                    expo += kern.mass * gamma_i * qq * deficit[j]
            out[i] = float(weights @ np.exp(-expo))
        return out

    q = np.zeros(k)
    for _ in range(max_iter):
        q_new = phi(q)
        if np.abs(q_new - q).max() < tol:
            return q_new
        q = q_new
    raise NumericalError("extinction probability iteration did not converge")


# ---------------------------------------------------------------------------
# bundled summary
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class BranchingSummary:
    """Forward and backward growth quantities of one model's limit."""

    r0: np.ndarray
    malthusian: float
    malthusian_hat: float
    zeta: np.ndarray
    eta: np.ndarray
    zeta_hat: np.ndarray
    eta_hat: np.ndarray
    m_star: float
    extinction: np.ndarray


def branching_summary(spec: ModelSpec,
                      kernels: Sequence[Sequence[Kernel]] | None = None) -> BranchingSummary:
    """Compute growth rates, Perron pairs, m_star and extinction for a spec.

    The backward quantities are obtained from their own root-find and power
    iteration rather than by transforming the forward ones, so the documented
    identities (equal growth rates, matching radii) stay testable.
    """
    if kernels is None:
        report = classify_regime(spec)
        kernels = limit_kernels(spec, report)
    kernels = list(kernels)
    p = spec.p
    mal = malthusian_from(lambda s: ml_matrix(kernels, s))
    mal_hat = malthusian_from(lambda s: ml_hat_matrix(kernels, p, s))
    zeta, eta = perron_vectors(ml_matrix(kernels, mal))
    zeta_hat, eta_hat = perron_vectors(ml_hat_matrix(kernels, p, mal_hat))
    ms = m_star(zeta, zeta_hat, p)
    q = extinction_probabilities(spec, kernels)
    return BranchingSummary(r0=ml_matrix(kernels, 0.0), malthusian=mal,
                            malthusian_hat=mal_hat, zeta=zeta, eta=eta,
                            zeta_hat=zeta_hat, eta_hat=eta_hat, m_star=ms,
                            extinction=q)
