"""Growth rates, Perron structure, and extinction probabilities."""

import math
import random

import numpy as np
import pytest

from dynsir import (
    HomogeneousKernel,
    ModelSpec,
    branching_summary,
    extinction_probabilities,
    limit_kernels,
    m_star,
    malthusian_from,
    ml_matrix,
    perron_vectors,
    spectral_radius,
)
from dynsir.errors import NumericalError


class TestSpectralRadius:
    def test_scalar(self):
        assert spectral_radius(np.array([[2.5]])) == 2.5

    def test_known_two_by_two(self):
        a = np.array([[2.0, 1.0], [1.0, 2.0]])
        assert spectral_radius(a) == pytest.approx(3.0, rel=1e-12)

    def test_zero_matrix(self):
        assert spectral_radius(np.zeros((3, 3))) == 0.0

    def test_periodic_pattern_converges(self):
        # plain power iteration would oscillate on this one
        a = np.array([[0.0, 2.0], [0.5, 0.0]])
        assert spectral_radius(a) == pytest.approx(1.0, rel=1e-10)

    def test_matches_eigvals_on_random_matrices(self):
        rng = np.random.default_rng(77)
        for _ in range(20):
            a = rng.random((4, 4))
            want = max(abs(np.linalg.eigvals(a)))
            assert spectral_radius(a) == pytest.approx(want, rel=1e-9)


class TestPerronVectors:
    def test_symmetric_equal_rows(self):
        a = np.array([[1.0, 1.0], [1.0, 1.0]])
        zeta, eta = perron_vectors(a)
        assert np.allclose(zeta, [0.5, 0.5], atol=1e-10)

    def test_normalization(self):
        a = np.array([[2.0, 0.5], [1.5, 1.0]])
        zeta, eta = perron_vectors(a)
        assert zeta.sum() == pytest.approx(1.0, abs=1e-12)
        assert float(zeta @ eta) == pytest.approx(1.0, abs=1e-10)

    def test_eigen_equations(self):
        a = np.array([[2.0, 0.5], [1.5, 1.0]])
        zeta, eta = perron_vectors(a)
        rho = spectral_radius(a)
        assert np.allclose(a @ eta, rho * eta, atol=1e-9)
        assert np.allclose(zeta @ a, rho * zeta, atol=1e-9)

    def test_reducible_pattern_rejected(self):
        a = np.diag([1.0, 2.0])
        with pytest.raises(ValueError, match="reducible"):
            perron_vectors(a)


class TestMalthusian:
    def test_homogeneous_closed_form(self, spec_homogeneous):
        # exponential kernel: growth solves R0*gamma/(m+gamma) = 1
        kernels = limit_kernels(spec_homogeneous)
        m = malthusian_from(lambda s: ml_matrix(kernels, s))
        assert m == pytest.approx(0.5, abs=1e-10)

    def test_slow_edge_quadratic_root(self, spec_slow_edge):
        """1.5/(s+3) + 1.5/(s+1) = 1 reduces to s^2 + s - 3 = 0."""
        kernels = limit_kernels(spec_slow_edge)
        m = malthusian_from(lambda s: ml_matrix(kernels, s))
        assert m == pytest.approx((-1.0 + math.sqrt(13.0)) / 2.0, abs=1e-10)

    def test_subcritical_raises(self):
        kern = [[HomogeneousKernel(gamma=1.0, r0=0.8)]]
        with pytest.raises(NumericalError, match="Malthusian"):
            malthusian_from(lambda s: ml_matrix(kern, s))

    def test_critical_raises(self):
        kern = [[HomogeneousKernel(gamma=1.0, r0=1.0)]]
        with pytest.raises(NumericalError):
            malthusian_from(lambda s: ml_matrix(kern, s))


def test_m_star_single_type_is_one():
    assert m_star(np.array([1.0]), np.array([1.0]), np.array([1.0])) == 1.0


class TestExtinction:
    def test_homogeneous_closed_form(self, spec_homogeneous):
        # linear-fractional offspring pgf: q = 1/R0
        q = extinction_probabilities(spec_homogeneous)
        assert q[0] == pytest.approx(1.0 / 1.5, abs=1e-10)

    def test_subcritical_is_certain(self, spec_subcritical):
        q = extinction_probabilities(spec_subcritical)
        assert q[0] == pytest.approx(1.0, abs=1e-9)

    def test_slow_edge_fixed_point_property(self, spec_slow_edge):
        """q must satisfy the generating-function equation; re-check by
        simulating the embedded offspring counts directly."""
        q = float(extinction_probabilities(spec_slow_edge)[0])
        assert 0.0 < q < 1.0
        # MC verification of the offspring law: lifetime Exp(1), counts from
        # the integrated two-phase intensity, children go extinct iid w.p. q
        lam, mu, beta, gamma = 3.0, 1.0, 1.0, 1.0
        rng = random.Random(2718)
        hits = 0
        reps = 200000
        for _ in range(reps):
            t = rng.expovariate(gamma)
            mean = (lam * beta * beta * -math.expm1(-(mu + beta) * t)
                    / (mu * (mu + beta) ** 2) + lam * beta * t / (mu + beta))
            # P(all offspring die out) for Poisson(mean) children
            if rng.random() < math.exp(-mean * (1.0 - q)):
                hits += 1
        est = hits / reps
        assert abs(est - q) < 4.0 * math.sqrt(q * (1.0 - q) / reps)

    def test_frozen_reference_value(self, spec_slow_edge):
        # 20-digit quadrature oracle: 0.44001199571619053602; the iteration
        # stops at successive-difference 1e-12, so allow its truncation
        q = float(extinction_probabilities(spec_slow_edge)[0])
        assert q == pytest.approx(0.4400119957161905, abs=1e-10)


class TestBranchingSummary:
    def test_forward_backward_growth_agree(self, spec_two_type):
        s = branching_summary(spec_two_type)
        assert s.malthusian == pytest.approx(s.malthusian_hat, abs=1e-8)

    def test_single_type_vectors_trivial(self, spec_slow_edge):
        s = branching_summary(spec_slow_edge)
        assert s.zeta[0] == 1.0 and s.eta[0] == 1.0
        assert s.m_star == pytest.approx(1.0)

    def test_two_type_extinction_vector(self, spec_two_type):
        s = branching_summary(spec_two_type)
        assert s.extinction.shape == (2,)
        assert np.all(s.extinction > 0.0) and np.all(s.extinction < 1.0)

    def test_r0_field_matches_kernel_masses(self, spec_slow_edge):
        s = branching_summary(spec_slow_edge)
        assert s.r0[0, 0] == pytest.approx(2.0, rel=1e-12)
