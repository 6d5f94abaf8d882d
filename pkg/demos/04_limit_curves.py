"""
Three roads to the same epidemic curve
======================================

The large-population limit of the lingering-edge model can be computed
three independent ways: integrating an ODE system that tracks susceptible
mass, infected mass, and two kinds of live transmission links; marching a
renewal (convolution) equation driven by the contact kernel; and solving a
fixed-point equation for the susceptible curve as a function of the
exponentially growing infection pressure.  The three agree up to a time
shift, which is the only freedom the limit leaves.  This script runs all
three, lines them up, and reads off final size and peak.
"""

import numpy as np

from dynsir import (
    ModelSpec,
    final_size,
    i_max_closed_form,
    ode_strong_single,
    peak_thresholds,
    psi_from_spec,
    renewal_from_spec,
    sup_gap_after_shift,
)

spec = ModelSpec(k=1, p=1.0, lam=3.0, mu=1.0, beta=1.0, gamma=1.0,
                 kappa_lam=-1.0, kappa_mu=0.0, kappa_beta=0.0)
grid = (40.0, 1e-3)

# road 1: the link-resolved ODE system
ode = ode_strong_single(3.0, 1.0, 1.0, 1.0, grid=grid)
ode.validate(residual_rates={(0, 0): (3.0, 1.0, 1.0, 1.0)})

# road 2: the renewal march over the contact kernel
ren = renewal_from_spec(spec, grid=grid)

# road 3: the fixed-point transform, mapped back to time
psi = psi_from_spec(spec)
psi_curves = psi.to_limit_curves(grid, gamma=1.0)

gap_ode_ren = sup_gap_after_shift(ren, ode)
gap_ren_psi = sup_gap_after_shift(ren, psi_curves, comps=("s",))
print("pairwise sup-distances after aligning the time origin:")
print(f"  ODE vs renewal     {gap_ode_ren.overall:.2e} "
      f"(shift {gap_ode_ren.shift:+.4f})")
print(f"  renewal vs psi     {gap_ren_psi.per_comp['s']:.2e} "
      f"(shift {gap_ren_psi.shift:+.4f})")

# ---------------------------------------------------------------------------
# landmarks of the curve
# ---------------------------------------------------------------------------

fs = final_size(2.0)
peak_idx = int(np.argmax(ode.i[0]))
s_hi, s_lo = peak_thresholds(3.0, 1.0, 1.0, 1.0)
print(f"\nfinal susceptible fraction: {fs.s_inf[0]:.6f} "
      f"(ODE tail gives {ode.s[0, -1]:.6f})")
print(f"attack rate:                {fs.attack[0]:.6f}")
print(f"peak infected fraction:     {ode.i[0, peak_idx]:.6f} "
      f"at s = {ode.s[0, peak_idx]:.6f}")
print(f"  peak must fall while s crosses ({s_lo:.4f}, {s_hi:.4f}); "
      "the link variables lag the classical threshold s = 1/R0")
print(f"  (a memoryless epidemic with the same R0 would peak at i = "
      f"{i_max_closed_form(2.0):.6f}, s = 0.5)")

# ---------------------------------------------------------------------------
# the two link populations
# ---------------------------------------------------------------------------
# l_c: links an infective already had when infected; l_d: links formed
# afterwards.  Their weighted sum is pinned to the infected mass.

lc, ld = ode.l_c[(0, 0)], ode.l_d[(0, 0)]
t = ode.t
for when in (8.0, ode.t[peak_idx], 12.0):
    j = int(np.searchsorted(t, when))
    print(f"  t = {t[j]:5.2f}: i = {ode.i[0, j]:.4f}, "
          f"l_c = {lc[j]:.4f}, l_d = {ld[j]:.4f}, "
          f"identity residual {3 * ode.i[0, j] - lc[j] - 2 * ld[j]:+.1e}")
print("\nthe identity 3*i = l_c + 2*l_d holds along the whole flow; it is "
      "the conservation law the lingering edges impose.")
