"""How one flipping edge turns into a contact time distribution.

An infective and a susceptible share a potential edge that switches on and
off as a two-state chain while transmission runs as a Poisson process on
top.  Watching only for the first effective contact collapses all of that
into a single waiting time whose law is a two-term exponential mixture.
This script computes the mixture, checks the algebra that makes it tick,
draws from it, and shows the finite-population kernel sliding into its
large-n limit.
"""

import random

import numpy as np
from scipy import stats

from dynsir import (
    SixBKernel,
    excess_cdf,
    excess_pdf,
    finite_kernel,
    ipp_params,
    mean_interarrival,
    sample_excess,
)

beta, lam, mu = 1.0, 3.0, 1.0
ipp = ipp_params(beta, lam, mu)

print(f"rates: transmission {beta}, edge on {lam}, edge off {mu}")
print(f"mixture decay rates r1 = {ipp.r1:.6f}, r2 = {ipp.r2:.6f}, "
      f"fast-phase weight p = {ipp.p_mix:.6f}")

# two identities pin the roots to the rates; they hold to machine precision
print(f"  r1 * r2      = {ipp.r1 * ipp.r2:.12f}   (= beta*lambda = {beta * lam})")
print(f"  p*r2+(1-p)r1 = {ipp.p_mix * ipp.r2 + (1 - ipp.p_mix) * ipp.r1:.12f}"
      f"   (= lambda+mu = {lam + mu})")
print(f"mean time to first contact: {mean_interarrival(beta, lam, mu):.6f}")

# ---------------------------------------------------------------------------
# the sampler against its own closed-form law
# ---------------------------------------------------------------------------

rng = random.Random(7)
draws = sample_excess(ipp, rng, size=200_000)
ks = stats.kstest(draws, lambda t: excess_cdf(t, ipp))
print(f"\n200k draws vs closed-form cdf: KS statistic {ks.statistic:.5f}")

grid = np.array([0.1, 0.5, 1.0, 2.0])
emp = np.array([(draws <= t).mean() for t in grid])
print("      t   empirical   exact")
for t, e in zip(grid, emp):
    print(f"   {t:4.1f}   {e:.5f}    {excess_cdf(t, ipp):.5f}")

# ---------------------------------------------------------------------------
# from n partners to the limit kernel
# ---------------------------------------------------------------------------
# With edge formation slowed as 3/n, each of the n partners contributes a
# thinned copy of the excess law; summed over partners the intensity tends
# to a two-phase density with total mass R0 = 2.

limit = SixBKernel(lam, mu, beta, 1.0)
print(f"\nlimit kernel mass (= R0): {limit.mass:.6f}")
for n in (100, 10_000, 1_000_000):
    fin = finite_kernel(beta, lam / n, mu, 1.0, n)
    t_probe = np.array([0.5, 1.0, 3.0])
    gap = np.max(np.abs(fin.density(t_probe) - limit.density(t_probe)))
    print(f"  n = {n:>9,d}: mass {fin.mass:.6f}, "
          f"max density gap on probe times {gap:.2e}")

print("\nthe limit density mixes the recovery and contact exponentials; its "
      "Laplace transform root sets the growth rate (see demo 03).")

# quick look at the excess density itself
ts = np.array([0.0, 0.25, 0.5, 1.0, 2.0, 4.0])
print("\n  t      excess pdf")
for t in ts:
    print(f"  {t:4.2f}   {excess_pdf(t, ipp):.6f}")
