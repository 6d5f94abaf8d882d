"""Model parameterization: type structure, size-scaled rates, regime classes.

The population holds k types with asymptotic fractions p_i.  Between an
infective of type i and a partner of type j, edges appear at rate
lambda_n[i,j], vanish at rate mu_n[i,j], and transmit while present at rate
beta_n[i,j].  All three rates scale as powers of the partner-side count:

    lambda_n[i,j] = lam[i,j]  * n_j ** kappa_lam[i,j]
    mu_n[i,j]     = mu[i,j]   * n_j ** kappa_mu[i,j]
    beta_n[i,j]   = beta[i,j] * n_j ** kappa_beta[i,j]     (kappa_beta <= 0)

Nine asymptotic regimes arise from the signs of (kappa_lam, kappa_mu).  Each
carries equality constraints pinning a finite, nonzero reproduction number
and strict inequality constraints that make the branching approximation error
decay fast enough; the inequality threshold is 1/3 for k = 1 and 17/24 for
k > 1.  `classify_regime` reports, per ordered pair, the matched case, the
constraint outcome, and the limiting reproduction number (or a degeneracy
flag), and marks the single non-homogeneous case: kappa_beta = 0,
kappa_lam = -1, kappa_mu = 0, where edge turnover stays on the epidemic's own
time scale and the infection-age kernel keeps a genuinely two-phase shape.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

# classification tolerances: equality constraints on exponents hold up to
# float representation noise; inequality constraints are strict, and values
# exactly on a threshold count as failures
_EQ_TOL = 1e-12


def _as_matrix(x, k: int, name: str) -> np.ndarray:
    a = np.asarray(x, dtype=float)
    if a.ndim == 0:
        a = np.full((k, k), float(a))
    if a.shape != (k, k):
        raise ValueError(f"{name} must be a scalar or a {k}x{k} matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError(f"{name} must be finite")
    return a


def _as_vector(x, k: int, name: str) -> np.ndarray:
    a = np.asarray(x, dtype=float)
    if a.ndim == 0:
        a = np.full(k, float(a))
    if a.shape != (k,):
        raise ValueError(f"{name} must be a scalar or a length-{k} vector, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError(f"{name} must be finite")
    return a


@dataclass(frozen=True, eq=False)
class ModelSpec:
    """Immutable parameter bundle for the k-type dynamic-network epidemic.

    Scalars are accepted anywhere a matrix or vector is expected and are
    broadcast, so single-type models read naturally:

        ModelSpec(k=1, p=1.0, lam=3.0, mu=1.0, beta=1.0, gamma=1.0,
                  kappa_lam=-1.0, kappa_mu=0.0, kappa_beta=0.0)

    Invariants enforced here: p sums to 1 within 1e-12 with every entry
    positive; lam and mu are symmetric positive matrices; beta is nonnegative;
    gamma is positive; kappa_beta is nonpositive.
    """

    k: int
    p: np.ndarray
    lam: np.ndarray
    mu: np.ndarray
    beta: np.ndarray
    gamma: np.ndarray
    kappa_lam: np.ndarray = field(default=0.0)  # type: ignore[assignment]
    kappa_mu: np.ndarray = field(default=0.0)  # type: ignore[assignment]
    kappa_beta: np.ndarray = field(default=0.0)  # type: ignore[assignment]

    def __post_init__(self):
        k = int(self.k)
        if k < 1:
            raise ValueError("k must be >= 1")
        object.__setattr__(self, "k", k)
        p = _as_vector(self.p, k, "p")
        if abs(p.sum() - 1.0) > 1e-12:
            raise ValueError(f"p must sum to 1 within 1e-12, got sum {p.sum()!r}")
        if np.any(p <= 0.0):
            raise ValueError("every p_i must be > 0")
        lam = _as_matrix(self.lam, k, "lam")
        mu = _as_matrix(self.mu, k, "mu")
        beta = _as_matrix(self.beta, k, "beta")
        gamma = _as_vector(self.gamma, k, "gamma")
        kl = _as_matrix(self.kappa_lam, k, "kappa_lam")
        km = _as_matrix(self.kappa_mu, k, "kappa_mu")
        kb = _as_matrix(self.kappa_beta, k, "kappa_beta")
        if not np.array_equal(lam, lam.T):
            raise ValueError("lam must be symmetric (exactly)")
        if not np.array_equal(mu, mu.T):
            raise ValueError("mu must be symmetric (exactly)")
        if np.any(lam <= 0.0):
            raise ValueError("lam entries must be > 0")
        if np.any(mu <= 0.0):
            raise ValueError("mu entries must be > 0")
        if np.any(beta < 0.0):
            raise ValueError("beta entries must be >= 0")
        if np.any(gamma <= 0.0):
            raise ValueError("gamma entries must be > 0")
        if np.any(kb > 0.0):
            raise ValueError("kappa_beta entries must be <= 0")
        for name, arr in (
            ("p", p), ("lam", lam), ("mu", mu), ("beta", beta), ("gamma", gamma),
            ("kappa_lam", kl), ("kappa_mu", km), ("kappa_beta", kb),
        ):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)


def largest_remainder_counts(p: np.ndarray, n: int) -> np.ndarray:
    """Round the quotas p_i * n to integers summing exactly to n.

    Floors first, then hands the leftover units to the largest fractional
    remainders; remainder ties go to the lowest type index.
    """
    quotas = np.asarray(p, dtype=float) * n
    base = np.floor(quotas).astype(np.int64)
    leftover = n - int(base.sum())
    if leftover:
        # stable sort on -remainder keeps the lowest index first among ties
        order = np.argsort(-(quotas - base), kind="stable")
        base[order[:leftover]] += 1
    return base


@dataclass(frozen=True, eq=False)
class RealizedRates:
    """Rates and counts of one finite population of total size n."""

    n: int
    n_per_type: np.ndarray  # length k, sums to n
    lambda_n: np.ndarray    # k x k
    mu_n: np.ndarray        # k x k
    beta_n: np.ndarray      # k x k
    gamma: np.ndarray       # length k


def realize_rates(spec: ModelSpec, n: int) -> RealizedRates:
    """Materialize per-type counts and the size-scaled rate matrices.

    Counts come from `largest_remainder_counts`; each rate column j is scaled
    by n_j = n_per_type[j] raised to that pair's exponent.

    Raises:
        ValueError: if n < k (some type would necessarily be empty).
    """
    if n < spec.k:
        raise ValueError(f"population n={n} smaller than the number of types k={spec.k}")
    counts = largest_remainder_counts(spec.p, n)
    nj = counts.astype(float)[np.newaxis, :]  # broadcast over rows
    lam_n = spec.lam * nj ** spec.kappa_lam
    mu_n = spec.mu * nj ** spec.kappa_mu
    beta_n = spec.beta * nj ** spec.kappa_beta
    if np.any(~np.isfinite(lam_n)) or np.any(~np.isfinite(mu_n)) or np.any(~np.isfinite(beta_n)):
        raise ValueError("realized rates overflow; exponents too large for this n")
    if np.any(mu_n <= 0.0):
        raise ValueError("realized mu_n must be strictly positive")
    counts.setflags(write=False)
    for a in (lam_n, mu_n, beta_n):
        a.setflags(write=False)
    return RealizedRates(n=int(n), n_per_type=counts, lambda_n=lam_n, mu_n=mu_n,
                         beta_n=beta_n, gamma=spec.gamma)


# ---------------------------------------------------------------------------
# regime classification
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PairRegime:
    """Classification outcome for one ordered pair (i, j).

    `scaling_ok` means the case's equality constraints hold, so the finite-n
    reproduction number has a finite positive limit; `rate_ok` means the
    strict inequality (approximation-rate) constraints hold as well.
    `limit_gamma_r0` is the table value gamma_i * R0[i,j] when scaling_ok,
    else None with `degenerate` set to "zero" or "infinite" (direction of the
    limit) or "finite" in the rare corner where the limit exists but no
    sub-case covers it.
    """

    i: int
    j: int
    case_label: str
    constraints_ok: bool
    scaling_ok: bool
    rate_ok: bool
    homogeneous: bool
    zero_channel: bool
    limit_gamma_r0: float | None
    limit_r0: float | None
    degenerate: str | None
    diagnostic: str | None


@dataclass(frozen=True)
class RegimeReport:
    """Per-pair regime classification plus the global verdict flags.

    overall_ok: every pair either carries no contact channel (beta = 0) or
        admits a finite positive limiting reproduction number.
    tv_rate_ok: every active pair also satisfies the strict decay
        inequalities for the chosen k (threshold 1/3 when k = 1, 17/24
        otherwise).
    """

    k: int
    threshold: float
    pairs: tuple[PairRegime, ...]
    overall_ok: bool
    tv_rate_ok: bool

    def pair(self, i: int, j: int) -> PairRegime:
        return self.pairs[i * self.k + j]

    @property
    def all_constraints_ok(self) -> bool:
        return all(pr.zero_channel or pr.constraints_ok for pr in self.pairs)

    @property
    def any_nonhomogeneous(self) -> bool:
        return any(not pr.homogeneous for pr in self.pairs)


def _leading(terms: list[tuple[float, float]]) -> tuple[float, float]:
    """Leading (exponent, coefficient) of a sum of coef * n**exp terms.

    Coefficients of terms sharing the maximal exponent add; zero-coefficient
    terms are ignored.
    """
    live = [(e, c) for e, c in terms if c != 0.0]
    e_max = max(e for e, _ in live)
    return e_max, sum(c for e, c in live if e == e_max)


def _limit_growth(lam: float, mu: float, beta: float, gamma: float,
                  a: float, b: float, c: float) -> tuple[float, float]:
    """Growth exponent and (if zero) the limit of the finite-n gamma * R0.

    The finite-n mean offspring count toward one partner type is
    n * beta_n * lam_n * (lam_n + mu_n + gamma) divided by
    (lam_n + mu_n) * (gamma^2 + gamma(beta_n + lam_n + mu_n) + beta_n lam_n);
    every factor is a sum of powers of n, so its asymptotics reduce to
    leading-exponent bookkeeping with coefficients added on exponent ties.
    Returns (e, v): the expression behaves like v * n**e, and e == 0 gives the
    finite positive limit v for gamma * R0.
    """
    e_top, c_top = _leading([(a, lam), (b, mu), (0.0, gamma)])
    e_d1, c_d1 = _leading([(a, lam), (b, mu)])
    e_d2, c_d2 = _leading([
        (0.0, gamma * gamma),
        (c, gamma * beta),
        (a, gamma * lam),
        (b, gamma * mu),
        (c + a, beta * lam),
    ])
    e = 1.0 + c + a + e_top - e_d1 - e_d2
    v = beta * lam * c_top / (c_d1 * c_d2)
    return e, v


def _eq(x: float, target: float) -> bool:
    return abs(x - target) <= _EQ_TOL


def _classify_pair(i: int, j: int, lam: float, mu: float, beta: float, gamma: float,
                   a: float, b: float, c: float, thr: float) -> PairRegime:
    """Match one ordered pair against the nine-case table."""
    if beta == 0.0:
        return PairRegime(i, j, case_label="zero", constraints_ok=True, scaling_ok=True,
                          rate_ok=True, homogeneous=True, zero_channel=True,
                          limit_gamma_r0=0.0, limit_r0=0.0, degenerate=None, diagnostic=None)

    label: str
    scaling: list[tuple[bool, str]] = []   # equality constraints
    rate: list[tuple[bool, str]] = []      # strict inequality constraints
    value: float | None = None
    homogeneous = True
    subcase_ok = True
    diag_extra: str | None = None

    if a > 0.0 and b > 0.0:
        gap = a - b
        if _eq(gap, 0.0):
            label = "1b"
            scaling = [(_eq(c, -1.0), "case 1b requires kappa_beta = -1")]
            value = lam * beta / (lam + mu)
        elif gap < -thr:
            label = "1a"
            # the rate condition kappa_lam - kappa_mu < -thr selected this branch
            scaling = [(_eq(1.0 + a + c - b, 0.0),
                        "case 1a requires 1 + kappa_lam + kappa_beta - kappa_mu = 0")]
            value = lam * beta / mu
        elif gap > thr:
            label = "1c"
            scaling = [(_eq(c, -1.0), "case 1c requires kappa_beta = -1")]
            value = beta
        else:
            label = "1"
            subcase_ok = False
            diag_extra = (f"case 1 covers kappa_lam - kappa_mu = 0, < -{thr:g} or > {thr:g}; "
                          f"got {gap:g}")
    elif a > 0.0 and b < 0.0:
        label = "2"
        scaling = [(_eq(c, -1.0), "case 2 requires kappa_beta = -1")]
        rate = [(b - a < -thr, f"case 2 requires kappa_mu - kappa_lam < -{thr:g}")]
        value = beta
    elif a > 0.0 and b == 0.0:
        label = "3"
        scaling = [(_eq(c, -1.0), "case 3 requires kappa_beta = -1")]
        value = beta
    elif a < 0.0 and b > 0.0:
        # as printed this case's constraints are mutually inconsistent (the
        # equality forces kappa_mu < 0), so it can never pass; kept verbatim
        label = "4"
        scaling = [(_eq(1.0 + a + c - b, 0.0),
                    "case 4 requires 1 + kappa_lam + kappa_beta - kappa_mu = 0")]
        rate = [
            (a < -(1.0 + thr), f"case 4 requires kappa_lam < -{1.0 + thr:g}"),
            (c < -(1.0 + thr), f"case 4 requires kappa_beta < -{1.0 + thr:g}"),
        ]
        value = lam * beta / mu
    elif a < 0.0 and b < 0.0:
        if _eq(a - b, 0.0):
            label = "5a"
            scaling = [(_eq(c, -1.0), "case 5a requires kappa_beta = -1")]
            rate = [(a < -thr, f"case 5a requires kappa_lam = kappa_mu < -{thr:g}")]
            value = beta * lam / (lam + mu)
        elif a > b:
            label = "5b"
            scaling = [(_eq(c, -1.0), "case 5b requires kappa_beta = -1")]
            rate = [
                (a < -thr, f"case 5b requires kappa_lam < -{thr:g}"),
                (b - a < -thr, f"case 5b requires kappa_mu - kappa_lam < -{thr:g}"),
            ]
            value = beta
        else:
            label = "5c"
            scaling = [(_eq(1.0 + c + a - b, 0.0),
                        "case 5c requires 1 + kappa_beta + kappa_lam - kappa_mu = 0")]
            rate = [
                (b - a > thr, f"case 5c requires kappa_mu - kappa_lam > {thr:g}"),
                (a < -thr, f"case 5c requires kappa_lam < -{thr:g}"),
                (c < -thr, f"case 5c requires kappa_beta < -{thr:g}"),
            ]
            value = beta * lam / mu
    elif a < 0.0 and b == 0.0:
        if _eq(c, 0.0) and _eq(a, -1.0):
            label = "6b"
            homogeneous = False
            value = lam * beta * (mu + gamma) / (mu * (beta + mu + gamma))
        else:
            label = "6a"
            scaling = [(_eq(a + c, -1.0), "case 6a requires kappa_lam + kappa_beta = -1")]
            rate = [
                (c < -thr, f"case 6a requires kappa_beta < -{thr:g}"),
                (a < -thr, f"case 6a requires kappa_lam < -{thr:g}"),
            ]
            value = lam * beta / mu
    elif a == 0.0 and b > 0.0:
        label = "7"
        scaling = [(_eq(1.0 + c, b), "case 7 requires 1 + kappa_beta = kappa_mu")]
        rate = [(b > thr, f"case 7 requires kappa_mu > {thr:g}")]
        value = lam * beta / mu
    elif a == 0.0 and b < 0.0:
        label = "8"
        scaling = [(_eq(c, -1.0), "case 8 requires kappa_beta = -1")]
        rate = [(b < -thr, f"case 8 requires kappa_mu < -{thr:g}")]
        value = beta
    else:
        label = "9"
        scaling = [(_eq(c, -1.0), "case 9 requires kappa_beta = -1")]
        value = beta * lam / (lam + mu)

    scaling_ok = subcase_ok and all(ok for ok, _ in scaling)
    rate_ok = subcase_ok and all(ok for ok, _ in rate)
    constraints_ok = scaling_ok and rate_ok

    diagnostic = None
    if not constraints_ok:
        failed = [msg for ok, msg in scaling + rate if not ok and msg]
        if diag_extra:
            failed.insert(0, diag_extra)
        diagnostic = "; ".join(failed) if failed else "constraints not satisfied"

    growth_e, growth_v = _limit_growth(lam, mu, beta, gamma, a, b, c)
    if scaling_ok:
        gamma_r0 = value
        degenerate = None
    else:
        gamma_r0 = None
        if growth_e > _EQ_TOL:
            degenerate = "infinite"
        elif growth_e < -_EQ_TOL:
            degenerate = "zero"
        else:
            degenerate = "finite"  # limit exists but outside every sub-case
            diagnostic = (diagnostic or "") + (
                f" [finite-n reproduction number still converges, to {growth_v / gamma:g}]")

    return PairRegime(i=i, j=j, case_label=label, constraints_ok=constraints_ok,
                      scaling_ok=scaling_ok, rate_ok=rate_ok, homogeneous=homogeneous,
                      zero_channel=False, limit_gamma_r0=gamma_r0,
                      limit_r0=None if gamma_r0 is None else gamma_r0 / gamma,
                      degenerate=degenerate, diagnostic=diagnostic)


def classify_regime(spec: ModelSpec) -> RegimeReport:
    """Classify every ordered type pair against the nine scaling cases.

    Equality constraints are checked to 1e-12; inequality constraints are
    strict, with boundary values counted as failures.  Pairs with beta = 0
    carry no contact channel and pass trivially with R0 = 0.
    """
    thr = 1.0 / 3.0 if spec.k == 1 else 17.0 / 24.0
    pairs = []
    for i in range(spec.k):
        for j in range(spec.k):
            pairs.append(_classify_pair(
                i, j,
                float(spec.lam[i, j]), float(spec.mu[i, j]), float(spec.beta[i, j]),
                float(spec.gamma[i]),
                float(spec.kappa_lam[i, j]), float(spec.kappa_mu[i, j]),
                float(spec.kappa_beta[i, j]), thr))
    overall_ok = all(pr.zero_channel or pr.scaling_ok for pr in pairs)
    tv_rate_ok = all(pr.zero_channel or pr.rate_ok for pr in pairs)
    return RegimeReport(k=spec.k, threshold=thr, pairs=tuple(pairs),
                        overall_ok=overall_ok, tv_rate_ok=tv_rate_ok)


def limit_r0_matrix(spec: ModelSpec, report: RegimeReport | None = None) -> np.ndarray:
    """The k x k limiting reproduction matrix R0[i,j].

    The classification tables list gamma_i * R0[i,j]; this divides out the
    infector's recovery rate.  Zero-channel pairs contribute 0.

    Raises:
        ValueError: if any active pair fails its case constraints.
    """
    if report is None:
        report = classify_regime(spec)
    r0 = np.zeros((spec.k, spec.k))
    bad = []
    for pr in report.pairs:
        if pr.zero_channel:
            continue
        if not pr.constraints_ok or pr.limit_r0 is None:
            bad.append(f"pair ({pr.i},{pr.j}) case {pr.case_label}: {pr.diagnostic}")
        else:
            r0[pr.i, pr.j] = pr.limit_r0
    if bad:
        raise ValueError("limit_r0_matrix undefined; " + " | ".join(bad))
    return r0
