"""Deterministic limit curves: ODE routes, renewal route, psi route."""

import math
import warnings

import numpy as np
import pytest

from dynsir import (
    BoxKernel,
    DeterministicPeriod,
    ModelSpec,
    NumericalError,
    final_size,
    i_max_closed_form,
    limit_kernels,
    ode_mixed,
    ode_strong_multi,
    ode_strong_single,
    ode_weak,
    peak_thresholds,
    psi_from_spec,
    renewal_from_spec,
    renewal_solve,
    sup_gap_after_shift,
    write_curves_csv,
)

GRID = (40.0, 1e-3)


@pytest.fixture(scope="module")
def weak_r2():
    return ode_weak(2.0, 1.0, 1.0, grid=GRID)


@pytest.fixture(scope="module")
def strong_canonical():
    return ode_strong_single(3.0, 1.0, 1.0, 1.0, grid=GRID)


class TestWeakRoute:
    def test_conservation_and_validation(self, weak_r2):
        weak_r2.validate()
        drift = np.max(np.abs(weak_r2.s + weak_r2.i + weak_r2.r - 1.0))
        assert drift <= 1e-9

    def test_peak_matches_closed_form(self, weak_r2):
        want = i_max_closed_form(2.0)
        assert float(weak_r2.i.max()) == pytest.approx(want, abs=1e-4)

    def test_final_size_matches_fixed_point(self, weak_r2):
        fs = final_size(2.0)
        assert weak_r2.s[0, -1] == pytest.approx(fs.s_inf[0], abs=1e-4)

    def test_two_type_force_coupling(self):
        # one-way channel 0 -> 1 only: type 1 epidemic needs type 0 cases
        r0 = np.array([[1.8, 0.9], [0.0, 1.6]])
        curves = ode_weak(r0, 1.0, (0.5, 0.5), grid=(40.0, 1e-2))
        curves.validate()
        assert curves.r[1, -1] > 0.1


class TestStrongRoute:
    def test_validation_with_link_identity(self, strong_canonical):
        strong_canonical.validate(residual_rates={(0, 0): (3.0, 1.0, 1.0, 1.0)})

    def test_link_densities_nonnegative(self, strong_canonical):
        assert strong_canonical.l_c[(0, 0)].min() >= 0.0
        assert strong_canonical.l_d[(0, 0)].min() >= 0.0

    def test_final_size_agrees_with_weak_route_value(self, strong_canonical):
        """Both routes share R0 = 2, so s(inf) must agree even though the
        transients differ."""
        fs = final_size(2.0)
        assert strong_canonical.s[0, -1] == pytest.approx(fs.s_inf[0], abs=2e-4)

    def test_peak_s_between_thresholds(self, strong_canonical):
        s_hi, s_lo = peak_thresholds(3.0, 1.0, 1.0, 1.0)
        idx = int(np.argmax(strong_canonical.i[0]))
        s_at_peak = float(strong_canonical.s[0, idx])
        assert s_lo <= s_at_peak <= s_hi

    def test_multi_reduces_to_single(self, spec_slow_edge):
        single = ode_strong_single(3.0, 1.0, 1.0, 1.0, grid=(20.0, 1e-2))
        multi = ode_strong_multi(spec_slow_edge, grid=(20.0, 1e-2))
        assert np.max(np.abs(single.s - multi.s)) <= 1e-12
        assert np.max(np.abs(single.i - multi.i)) <= 1e-12
        assert np.max(np.abs(single.l_c[(0, 0)] - multi.l_c[(0, 0)])) <= 1e-12

    def test_multi_rejects_homogeneous_channels(self, spec_homogeneous):
        with pytest.raises(ValueError, match="ode_mixed"):
            ode_strong_multi(spec_homogeneous)

    def test_richardson_step_halving_is_fourth_order(self):
        ref = ode_strong_single(3.0, 1.0, 1.0, 1.0, grid=(10.0, 0.00125))
        errs = []
        for h in (0.02, 0.01):
            cur = ode_strong_single(3.0, 1.0, 1.0, 1.0, grid=(10.0, h))
            step = int(round(0.02 / h))
            ref_step = int(round(0.02 / 0.00125))
            sub = cur.i[0, ::step]
            errs.append(np.max(np.abs(sub - ref.i[0, ::ref_step])))
        ratio = errs[0] / errs[1]
        assert 10.0 < ratio < 22.0


class TestMixedRoute:
    def test_matches_strong_when_all_channels_slow(self, spec_slow_edge):
        a = ode_strong_multi(spec_slow_edge, grid=(20.0, 1e-2))
        b = ode_mixed(spec_slow_edge, grid=(20.0, 1e-2))
        assert np.max(np.abs(a.i - b.i)) <= 1e-12

    def test_matches_weak_when_all_channels_homogeneous(self, spec_homogeneous):
        a = ode_weak(1.5, 1.0, 1.0, grid=(20.0, 1e-2))
        b = ode_mixed(spec_homogeneous, grid=(20.0, 1e-2))
        assert np.max(np.abs(a.i - b.i)) <= 1e-12

    def test_two_type_mixed_validates(self, spec_two_type):
        curves = ode_mixed(spec_two_type, grid=(30.0, 1e-2))
        curves.validate(residual_rates={
            (0, 0): (3.0, 1.0, 1.0, 1.0), (1, 1): (3.0, 1.0, 1.0, 1.2)})

    def test_partition_assertion(self, spec_two_type):
        with pytest.raises(ValueError, match="partition"):
            ode_mixed(spec_two_type, nonhomogeneous={(0, 1)}, grid=(10.0, 1e-2))


class TestCurveContainer:
    def test_pin_time_interpolates(self, weak_r2):
        t = weak_r2.pin_time(0.01)
        val = weak_r2.total_i()
        idx = np.searchsorted(weak_r2.t, t)
        assert val[idx - 1] < 0.01 <= val[idx] + 1e-12

    def test_pin_level_never_reached(self):
        curves = ode_weak(1.2, 1.0, 1.0, grid=(0.5, 1e-2))
        with pytest.raises(ValueError, match="never reaches"):
            curves.pin_time(0.5)

    def test_sample_endpoints(self, weak_r2):
        out = weak_r2.sample("s", np.array([0.0, 40.0]))
        assert out[0, 0] == weak_r2.s[0, 0]
        assert out[0, 1] == weak_r2.s[0, -1]

    def test_validate_catches_conservation_break(self, spec_slow_edge):
        curves = ode_mixed(spec_slow_edge, grid=(5.0, 1e-2))
        curves.r = curves.r + 1e-6
        with pytest.raises(NumericalError, match="conservation"):
            curves.validate()

    def test_csv_writer_deterministic(self, strong_canonical, tmp_path):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        write_curves_csv(strong_canonical, a)
        write_curves_csv(strong_canonical, b)
        assert a.read_bytes() == b.read_bytes()
        header = a.read_text().splitlines()[0]
        assert header.startswith("t,s_0,i_0,r_0")
        assert "l_c_0_0" in header


class TestRenewalRoute:
    def test_matches_weak_ode_homogeneous(self, spec_homogeneous):
        ren = renewal_from_spec(spec_homogeneous, grid=(40.0, 1e-2))
        ode = ode_mixed(spec_homogeneous, grid=(40.0, 1e-2))
        gap = sup_gap_after_shift(ode, ren)
        assert gap.overall < 2e-3

    def test_matches_strong_ode_slow_edge(self, spec_slow_edge):
        ren = renewal_from_spec(spec_slow_edge, grid=(40.0, 1e-2))
        ode = ode_mixed(spec_slow_edge, grid=(40.0, 1e-2))
        assert sup_gap_after_shift(ode, ren).overall < 2e-3

    def test_grid_too_short_for_kernel_raises(self, spec_slow_edge):
        with pytest.raises(NumericalError, match="extend the grid"):
            renewal_from_spec(spec_slow_edge, grid=(10.0, 1e-2))

    def test_box_kernel_with_deterministic_period(self):
        """Constant contact rate over a fixed infectious window: the final
        size still solves the classical fixed point with R0 = rate * length.

        The kernel jump makes the quadrature first order in h, so the check
        is convergence under step halving rather than a tight single-h gap.
        """
        r0 = 1.8
        kern = BoxKernel(rate=r0 / 1.5, length=1.5)
        want = final_size(r0).s_inf[0]
        errs = []
        for h in (1e-2, 5e-3):
            curves = renewal_solve(np.array([[r0]]), [[kern]], grid=(60.0, h),
                                   periods=[DeterministicPeriod(1.5)])
            curves.validate()
            errs.append(abs(float(curves.s[0, -1]) - want))
        assert errs[0] < 2e-3
        assert errs[1] < 0.7 * errs[0]


@pytest.fixture(scope="module")
def psi_canonical(spec_slow_edge):
    return psi_from_spec(spec_slow_edge)


class TestPsiRoute:

    def test_plateau_is_final_size(self, psi_canonical):
        fs = final_size(2.0)
        assert psi_canonical.plateau[0] == pytest.approx(fs.s_inf[0], abs=1e-5)

    def test_pinned_at_half(self, psi_canonical):
        assert psi_canonical.evaluate(0, np.array([1.0]))[0] == pytest.approx(0.5, abs=1e-9)

    def test_monotone_decreasing_in_argument(self, psi_canonical):
        assert np.all(np.diff(psi_canonical.psi[0]) <= 1e-12)

    def test_s_curve_matches_renewal(self, spec_slow_edge, psi_canonical):
        ren = renewal_from_spec(spec_slow_edge, grid=(40.0, 1e-2))
        curves = psi_canonical.to_limit_curves((40.0, 1e-2), gamma=1.0)
        gap = sup_gap_after_shift(ren, curves, comps=("s",))
        assert gap.per_comp["s"] < 5e-3


class TestFinalSize:
    def test_r0_two_reference_value(self):
        fs = final_size(2.0)
        assert fs.attack[0] == pytest.approx(0.7968121300200202, abs=1e-9)
        assert fs.s_inf[0] + fs.attack[0] == pytest.approx(1.0, rel=1e-15)

    def test_fixed_point_identity(self):
        fs = final_size(2.0)
        assert -math.log(fs.s_inf[0]) == pytest.approx(2.0 * fs.attack[0], abs=1e-10)

    def test_subcritical_warns_and_returns_zero_attack(self):
        with pytest.warns(UserWarning, match="not supercritical"):
            fs = final_size(0.8)
        assert fs.attack[0] == 0.0

    def test_multi_type_identity_with_weights(self, spec_two_type):
        from dynsir import limit_r0_matrix
        r0 = limit_r0_matrix(spec_two_type)
        p = spec_two_type.p
        fs = final_size(r0, p=p)
        a = (p[:, None] / p[None, :] * r0).T
        resid = -np.log(fs.s_inf) - a @ (1.0 - fs.s_inf)
        assert np.max(np.abs(resid)) < 1e-10

    def test_matches_strong_ode_tail(self, spec_slow_edge):
        curves = ode_mixed(spec_slow_edge, grid=(60.0, 1e-2))
        fs = final_size(2.0)
        assert curves.s[0, -1] == pytest.approx(fs.s_inf[0], abs=1e-4)


class TestClosedFormPeaks:
    def test_i_max_value(self):
        want = 1.0 - 0.5 + 0.5 * math.log(0.5)
        assert i_max_closed_form(2.0) == pytest.approx(want, rel=1e-15)

    def test_i_max_requires_supercritical(self):
        with pytest.raises(ValueError):
            i_max_closed_form(1.0)

    def test_threshold_window_for_canonical_point(self):
        s_hi, s_lo = peak_thresholds(3.0, 1.0, 1.0, 1.0)
        assert s_hi == pytest.approx(2.0 / 3.0, rel=1e-12)
        assert s_lo == pytest.approx(1.0 / 3.0, rel=1e-12)
