import math
import warnings

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from dmimo.errors import InsufficientSamplesError
from dmimo.metrics import SinrDistribution, SinrSample, availability, empirical_quantile, sinr

from conftest import crandn


def test_sample_db():
    s = SinrSample(0, 1, 1000.0)
    assert s.sinr_db == pytest.approx(30.0, abs=1e-12)


def test_single_ac_sinr(rng):
    h = crandn(rng, 1, 8)
    g = crandn(rng, 8, 1)
    expected = abs((h @ g)[0, 0]) ** 2 * 2.0 / 0.5
    assert sinr(h, g, [2.0], [0.5])[0] == pytest.approx(expected)


def test_hand_example():
    # unit effective gains, cross gains 1, P = 1, sigma2 = 1 -> 1 / (1 + 1)
    h = np.array([[1.0, 0.0], [0.0, 1.0]])
    g = np.array([[1.0, 1.0], [1.0, 1.0]])
    np.testing.assert_allclose(sinr(h, g, [1.0, 1.0], [1.0, 1.0]), [0.5, 0.5])


def test_batched_matches_single(rng):
    h = crandn(rng, 5, 3, 8)
    g = crandn(rng, 5, 8, 3)
    p = rng.random((5, 3))
    s2 = rng.random((5, 3))
    out = sinr(h, g, p, s2)
    for b in range(5):
        np.testing.assert_allclose(out[b], sinr(h[b], g[b], p[b], s2[b]), rtol=1e-13)


def test_phase_invariance(rng):
    h = crandn(rng, 3, 8)
    g = crandn(rng, 8, 3)
    g2 = g * np.exp(1j * np.array([0.3, -2.0, 1.1]))
    np.testing.assert_allclose(sinr(h, g, np.ones(3), np.ones(3)),
                               sinr(h, g2, np.ones(3), np.ones(3)), rtol=1e-12)


def test_noise_monotonicity(rng):
    h = crandn(rng, 3, 8)
    g = crandn(rng, 8, 3)
    a = sinr(h, g, np.ones(3), np.ones(3))
    b = sinr(h, g, np.ones(3), np.array([1.0, 2.0, 1.0]))
    assert b[1] < a[1] and b[0] == a[0] and b[2] == a[2]


def test_linear_without_interference(rng):
    h = np.diag(rng.random(3) + 0.5).astype(complex)
    g = np.eye(3, dtype=complex)
    a = sinr(h, g, np.array([1.0, 1.0, 1.0]), np.ones(3))
    b = sinr(h, g, np.array([3.0, 1.0, 1.0]), np.ones(3))
    assert b[0] == pytest.approx(3 * a[0], rel=1e-14)


def test_quantile_examples():
    x = np.arange(1, 11, dtype=float)
    assert empirical_quantile(x, 0.2) == 2
    assert empirical_quantile(x, 1.0) == 10
    with pytest.raises(InsufficientSamplesError):
        empirical_quantile(x, 0.05)
    with pytest.warns(RuntimeWarning):
        empirical_quantile(x, 0.5)
    with pytest.raises(ValueError):
        empirical_quantile(x, 0.0)


def test_quantile_index_guard():
    # 1e-5 * 4e6 = 40 in floating point must give the 40th order statistic
    x = np.arange(4_000_000, dtype=float)
    assert empirical_quantile(x, 1e-5, assume_sorted=True) == 39.0


def test_uniform_tail_quantile():
    x = np.random.default_rng(31).random(1_000_000)
    q = empirical_quantile(x, 1e-5)
    assert 2e-6 <= q <= 3e-5


@given(st.lists(st.floats(1e-6, 1e6), min_size=20, max_size=200), st.floats(0.05, 1.0),
       st.floats(0.05, 1.0), st.randoms())
def test_quantile_properties(vals, p1, p2, rnd):
    x = np.array(vals)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        lo, hi = sorted((p1, p2))
        assert empirical_quantile(x, lo) <= empirical_quantile(x, hi)
        assert empirical_quantile(x, 1.0) == x.max()
        y = list(vals)
        rnd.shuffle(y)
        assert empirical_quantile(np.array(y), lo) == empirical_quantile(x, lo)


def test_distribution_stats():
    d = SinrDistribution(np.full((100, 4), 10.0))
    assert d.n == 400
    assert availability(d, 1e-2) == pytest.approx(10.0)
    assert d.median_db() == pytest.approx(10.0)
    assert d.mean_db() == pytest.approx(10.0)
    assert d.drop_id.tolist()[:5] == [0, 0, 0, 0, 1]
    assert d.ac_id.tolist()[:5] == [0, 1, 2, 3, 0]
    assert [s.ac_id for s in list(d)[:2]] == [0, 1]


def test_availability_median():
    x = np.random.default_rng(1).random(1001) + 0.5
    d = SinrDistribution(x)
    assert availability(d, 0.5) == pytest.approx(10 * math.log10(np.sort(x)[500]))


def test_dominance():
    rng = np.random.default_rng(2)
    b = rng.exponential(size=(200_000, 4))
    a = b * (1 + rng.random(b.shape))
    assert availability(SinrDistribution(a), 1e-5) >= availability(SinrDistribution(b), 1e-5)


def test_cdf_points():
    d = SinrDistribution(np.arange(1, 100_001, dtype=float))
    x, F = d.cdf_points()
    assert len(x) == 10_000 and F[-1] == 1.0
    assert np.all(np.diff(x) > 0) and np.all(np.diff(F) > 0)
    x2, F2 = SinrDistribution(np.array([3.0, 1.0])).cdf_points()
    np.testing.assert_allclose(F2, [0.5, 1.0])


def test_merge_order_independent():
    rng = np.random.default_rng(3)
    s = rng.random((30, 2))
    whole = SinrDistribution(s)
    parts = [SinrDistribution(s[i:i + 10], np.repeat(np.arange(i, i + 10), 2),
                              np.tile([0, 1], 10)) for i in (20, 0, 10)]
    merged = SinrDistribution.merge(parts)
    np.testing.assert_array_equal(merged.sinr_linear, whole.sinr_linear)
    np.testing.assert_array_equal(merged.drop_id, whole.drop_id)
    assert merged.quantile(0.1) == whole.quantile(0.1)
