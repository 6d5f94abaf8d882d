"""Deterministic seed derivation and exact discrete sampling helpers.

Reproducibility contract: every stochastic routine in this package is a pure
function of its inputs plus one explicit 64-bit master seed.  Substreams
(per run, per model variant, per infected individual) are derived with
`derive_seed`, a splitmix64 chain over integer or string labels, and fed to
independent `random.Random` instances.  Nothing ever touches the global RNG,
so identical inputs give byte-identical outputs on any platform.
"""

from __future__ import annotations

import math
import random

import numpy as np

_MASK64 = (1 << 64) - 1

# stream labels used when deriving substreams; distinct constants keep the
# derivation tree collision-free and self-documenting at call sites
STREAM_RUN = 0x52554E        # ensemble run index
STREAM_INDIVIDUAL = 0x494E44  # per-individual contact batch
STREAM_ATTEMPT = 0x415454    # conditioning restart counter
STREAM_MODEL1 = 0x4D31
STREAM_MODEL2 = 0x4D32
STREAM_MODEL3 = 0x4D33


def _splitmix64(z: int) -> int:
    z = (z + 0x9E3779B97F4A7C15) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def derive_seed(*parts: int | str) -> int:
    """Hash a path of labels into a 64-bit substream seed.

    Each part is folded into a splitmix64 chain; integers are absorbed
    directly, strings byte-by-byte (UTF-8).  The empty call returns the chain
    applied to the initial state, so `derive_seed(s)` != s in general.
    """
    state = 0x5DEECE66D  # arbitrary nonzero start
    for part in parts:
        if isinstance(part, str):
            state = _splitmix64(state ^ 0x53)
            for b in part.encode("utf-8"):
                state = _splitmix64(state ^ b)
        else:
            state = _splitmix64(state ^ (int(part) & _MASK64))
    return _splitmix64(state)


def substream(*parts: int | str) -> random.Random:
    """A fresh `random.Random` seeded from the derivation chain."""
    return random.Random(derive_seed(*parts))


def np_substream(*parts: int | str) -> np.random.Generator:
    """A numpy Generator seeded from the same chain, for vectorized draws.

    PCG64 under a fixed integer seed; used where a routine needs whole
    vectors of uniforms or exponentials at once.  Lives beside `substream`
    so the two families never share a seed path by accident: callers pick
    one family per stream label.
    """
    return np.random.Generator(np.random.PCG64(derive_seed(*parts)))


def binomial_draw(rng: random.Random, n: int, p: float) -> int:
    """One exact Binomial(n, p) draw by CDF inversion.

    Small means invert from 0 with the ratio recursion
    P(k+1)/P(k) = ((n-k)/(k+1)) * p/(1-p); large means walk outward from the
    mode (log pmf at the mode via lgamma) so no long left tail is summed.
    Exact up to float rounding of the pmf; one uniform consumed per draw.
    """
    if n < 0:
        raise ValueError("binomial_draw: n must be >= 0")
    if p <= 0.0:
        if p < 0.0:
            raise ValueError("binomial_draw: p must be in [0, 1]")
        return 0
    if p >= 1.0:
        if p > 1.0:
            raise ValueError("binomial_draw: p must be in [0, 1]")
        return n
    if n == 0:
        return 0

    u = rng.random()
    odds = p / (1.0 - p)

    if n * p <= 30.0:
        # inversion from zero
        pk = math.exp(n * math.log1p(-p))
        cdf = pk
        k = 0
        while u > cdf and k < n:
            pk *= (n - k) / (k + 1) * odds
            k += 1
            cdf += pk
        return k

    # two-sided inversion centred on the mode
    m = int((n + 1) * p)
    if m > n:
        m = n
    log_pm = (
        math.lgamma(n + 1)
        - math.lgamma(m + 1)
        - math.lgamma(n - m + 1)
        + m * math.log(p)
        + (n - m) * math.log1p(-p)
    )
    pm = math.exp(log_pm)
    cdf = pm
    if u <= cdf:
        return m
    lo, hi = m, m
    p_lo, p_hi = pm, pm
    while lo > 0 or hi < n:
        if hi < n:
            p_hi *= (n - hi) / (hi + 1) * odds
            hi += 1
            cdf += p_hi
            if u <= cdf:
                return hi
        if lo > 0:
            p_lo *= lo / (n - lo + 1) / odds
            lo -= 1
            cdf += p_lo
            if u <= cdf:
                return lo
    # float rounding left a sliver of mass unaccounted; u fell in it
    return hi
