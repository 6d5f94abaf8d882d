"""Seed derivation and the exact binomial sampler."""

import math
import random

import numpy as np
import pytest
from scipy import stats

from dynsir import binomial_draw, derive_seed, np_substream, substream


class TestDeriveSeed:
    def test_deterministic_across_calls(self):
        assert derive_seed(42, "run", 7) == derive_seed(42, "run", 7)

    def test_distinct_paths_distinct_seeds(self):
        seen = {derive_seed(a, b) for a in range(50) for b in range(50)}
        assert len(seen) == 2500

    def test_order_matters(self):
        assert derive_seed(1, 2) != derive_seed(2, 1)

    def test_string_labels_differ_from_their_codepoints(self):
        # "A" must not collide with the integer 65
        assert derive_seed("A") != derive_seed(65)

    def test_fits_in_64_bits(self):
        for parts in [(0,), (2**63,), ("x", "y", 3)]:
            s = derive_seed(*parts)
            assert 0 <= s < 2**64

    def test_prefix_extension_changes_seed(self):
        assert derive_seed(5) != derive_seed(5, 0)


def test_substream_reproducible_and_isolated():
    a = substream(123, "m")
    b = substream(123, "m")
    c = substream(124, "m")
    xs = [a.random() for _ in range(10)]
    assert xs == [b.random() for _ in range(10)]
    assert xs != [c.random() for _ in range(10)]
    assert isinstance(a, random.Random)


def test_np_substream_reproducible():
    g1 = np_substream(9, "vec")
    g2 = np_substream(9, "vec")
    assert np.array_equal(g1.random(100), g2.random(100))


def test_np_and_scalar_streams_are_independent_families():
    # same label path, different generator families; draws must not coincide
    s = substream(7).random()
    v = float(np_substream(7).random())
    assert s != v


class TestBinomialDraw:
    def test_edge_cases(self):
        rng = random.Random(0)
        assert binomial_draw(rng, 0, 0.5) == 0
        assert binomial_draw(rng, 10, 0.0) == 0
        assert binomial_draw(rng, 10, 1.0) == 10

    def test_rejects_bad_arguments(self):
        rng = random.Random(0)
        with pytest.raises(ValueError):
            binomial_draw(rng, -1, 0.5)
        with pytest.raises(ValueError):
            binomial_draw(rng, 5, -0.1)
        with pytest.raises(ValueError):
            binomial_draw(rng, 5, 1.5)

    def test_range(self):
        rng = random.Random(3)
        for _ in range(2000):
            assert 0 <= binomial_draw(rng, 17, 0.3) <= 17

    @pytest.mark.parametrize("n,p", [(8, 0.25), (50, 0.9), (400, 0.5), (1000, 0.02)])
    def test_matches_binomial_law(self, n, p):
        """Chi-squared goodness of fit against the exact pmf.

        Exercises both the small-mean inversion and the mode-centred walk
        (n*p = 2, 45, 200, 20).
        """
        rng = random.Random(derive_seed("binomial-gof", n))
        draws = np.array([binomial_draw(rng, n, p) for _ in range(20000)])
        ks = np.arange(n + 1)
        pmf = stats.binom.pmf(ks, n, p)
        keep = pmf * draws.size >= 5.0
        obs = np.bincount(draws, minlength=n + 1)[keep].astype(float)
        obs = np.append(obs, draws.size - obs.sum())
        exp = pmf[keep] * draws.size
        exp = np.append(exp, max(draws.size - exp.sum(), 1e-9))
        chi2 = float(np.sum((obs - exp) ** 2 / np.maximum(exp, 1e-12)))
        dof = max(len(exp) - 1, 1)
        assert stats.chi2.sf(chi2, dof) > 1e-4

    def test_mean_of_large_n(self):
        rng = random.Random(11)
        m = np.mean([binomial_draw(rng, 10**6, 0.3) for _ in range(200)])
        assert abs(m - 3e5) < 5 * math.sqrt(10**6 * 0.3 * 0.7 / 200)
