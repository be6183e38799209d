import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from dmimo.channel import build_channel
from dmimo.csi import EstimationContext, estimate_all, estimate_channel, estimate_from_normals, shrinkage
from dmimo.noise import thermal_noise_power
from dmimo.scenario import default_config, drop_acs

S2 = thermal_noise_power(10e6, 7.0)


def ctx(T=4, p_ac=0.1, J=1):
    return EstimationContext(p_ac=p_ac, T=T, sigma_ap2=np.full(J, S2))


def error_variance(beta, p_ac, T, s2):
    # E|c(h+z) - h|^2 = (1-c)^2 beta + c^2 s2/(p_ac T),  c = gT/(1+gT),  gT = p_ac beta T / s2
    # = beta/(1+gT)^2 + beta gT/(1+gT)^2 = beta/(1+gT)
    gT = p_ac * beta * T / s2
    return beta / (1 + gT)


def test_from_config():
    c = EstimationContext.from_config(default_config(J=16, csi="estimated"))
    assert c.T == 4 and c.p_ac == pytest.approx(0.1)
    np.testing.assert_allclose(c.sigma_ap2, np.full(16, S2))


def test_shrinkage_half():
    beta = S2 / (0.1 * 4)          # gT = 1
    assert shrinkage(beta, 0.1, 4, S2) == pytest.approx(0.5)


def test_high_snr_estimate_close(rng):
    beta = 1e12 * S2 / (0.1 * 4)   # gT = 1e12
    h = (rng.standard_normal(16) + 1j * rng.standard_normal(16)) * np.sqrt(beta / 2)
    hh = estimate_channel(h, beta, ctx(), 0, rng)
    assert np.linalg.norm(hh - h) / np.linalg.norm(h) < 1e-5


def test_error_variance_closed_form():
    rng = np.random.default_rng(21)
    n = 1_000_000
    for gT in (0.3, 1.0, 10.0):
        beta = gT * S2 / (0.1 * 4)
        h = (rng.standard_normal(n) + 1j * rng.standard_normal(n)) * np.sqrt(beta / 2)
        hh = estimate_channel(h, beta, ctx(), 0, rng)
        mse = np.mean(np.abs(hh - h) ** 2)
        assert mse == pytest.approx(error_variance(beta, 0.1, 4, S2), rel=0.01)
        assert mse == pytest.approx(beta / (1 + gT), rel=0.01)


def test_mse_monotone_in_T():
    n = 200_000
    beta = 2 * S2 / 0.1
    base = np.random.default_rng(22)
    h = (base.standard_normal(n) + 1j * base.standard_normal(n)) * np.sqrt(beta / 2)
    z = base.standard_normal((1, n, 2))
    mses = []
    for T in (1, 2, 4, 8, 16, 64):
        hh = estimate_from_normals(h[None], np.array([[beta]]), ctx(T=T), n, z)[0]
        mses.append(np.mean(np.abs(hh - h) ** 2))
    assert all(a >= b for a, b in zip(mses, mses[1:]))


def test_orthogonality():
    rng = np.random.default_rng(23)
    n = 1_000_000
    beta = S2 / 0.1
    h = (rng.standard_normal(n) + 1j * rng.standard_normal(n)) * np.sqrt(beta / 2)
    hh = estimate_channel(h, beta, ctx(), 0, rng)
    e = hh - h
    corr = np.mean(e * hh.conj()) / np.sqrt(np.mean(np.abs(e) ** 2) * np.mean(np.abs(hh) ** 2))
    assert abs(corr) < 0.01


@given(st.floats(1e-14, 1e-6), st.integers(1, 32))
def test_shrinkage_identity(beta, T):
    rng = np.random.default_rng(0)
    h = rng.standard_normal(8) + 1j * rng.standard_normal(8)
    n = rng.standard_normal((1, 8, 2))
    c = ctx(T=T)
    hh = estimate_from_normals(h[None], np.array([[beta]]), c, 8, n)[0]
    z = (n[0, :, 0] + 1j * n[0, :, 1]) * np.sqrt(S2 / (2 * 0.1 * T))
    coef = shrinkage(beta, 0.1, T, S2)
    assert coef < 1
    np.testing.assert_allclose(hh, coef * (h + z), rtol=1e-13)
    assert np.linalg.norm(hh) <= np.linalg.norm(h + z)


def test_estimate_all(rng):
    cfg = default_config(J=4)
    real = build_channel(cfg, drop_acs(4, cfg.hall, rng), rng)
    out = estimate_all(real, cfg, rng)
    assert out.h_hat is real.h

    cfg_e = default_config(J=4, csi="estimated")
    a = estimate_all(real, cfg_e, np.random.default_rng(9))
    b = estimate_all(real, cfg_e, np.random.default_rng(9))
    np.testing.assert_array_equal(a.h_hat, b.h_hat)
    assert a.h_hat.shape == real.h.shape and not np.array_equal(a.h_hat, real.h)


def test_ac_estimation_noise_independent():
    # two ACs with the same true channel: their estimation errors are uncorrelated
    rng = np.random.default_rng(24)
    n = 200_000
    beta = S2 / 0.1
    h = np.ones((2, n), dtype=complex) * np.sqrt(beta)
    hh = estimate_from_normals(h, np.full((2, 1), beta), ctx(), n, rng.standard_normal((2, n, 2)))
    e0, e1 = hh[0] - hh[0].mean(), hh[1] - hh[1].mean()
    assert abs(np.mean(e0 * e1.conj())) / np.mean(np.abs(e0) ** 2) < 0.01


def test_rejects_nonpositive_beta(rng):
    with pytest.raises(ValueError):
        estimate_channel(np.ones(2), 0.0, ctx(), 0, rng)
