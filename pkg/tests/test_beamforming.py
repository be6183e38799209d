import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from dmimo.beamforming import anchors, associate, build_precoder, mrt, precoder_batch, zf
from dmimo.errors import DegenerateChannelError, PrecoderError

from conftest import crandn


def test_associate_examples():
    assert associate(np.array([[0.1, 0.5]])).anchor.tolist() == [1]
    assert associate(np.array([[0.3, 0.3]])).anchor.tolist() == [0]
    a = associate(np.array([[1.0], [2.0], [3.0]]))
    assert a.anchor.tolist() == [0, 0, 0] and a.served_sets == ((0, 1, 2),)


@given(st.lists(st.floats(1e-12, 1.0), min_size=6, max_size=6), st.floats(1e-3, 1e3))
def test_association_scale_invariant(vals, c):
    beta = np.array(vals).reshape(2, 3)
    scaled = beta * np.array([[c], [1.0]])
    assert anchors(beta).tolist() == anchors(scaled).tolist()
    sets = associate(beta).served_sets
    assert sorted(k for s in sets for k in s) == [0, 1]


def test_mrt_examples():
    np.testing.assert_allclose(mrt(np.array([3.0, 4.0])), [0.6, 0.8])
    assert abs(np.array([3.0, 4.0]) @ mrt(np.array([3.0, 4.0])) - 5) < 1e-12
    np.testing.assert_allclose(mrt(np.array([1.0])), [1.0])
    with pytest.raises(DegenerateChannelError):
        mrt(np.zeros(3))


def test_mrt_optimal(rng):
    h = crandn(rng, 16)
    g = mrt(h)
    u = crandn(rng, 1000, 16)
    u /= np.linalg.norm(u, axis=1, keepdims=True)
    assert np.all(abs(h @ g) >= np.abs(u @ h) - 1e-12)


def test_zf_identity():
    G = zf(np.eye(2, dtype=complex))
    np.testing.assert_allclose(G, np.eye(2), atol=1e-15)


def test_zf_orthogonal_rows_match_mrt(rng):
    q, _ = np.linalg.qr(crandn(rng, 8, 8))
    H = q[:3] * np.array([[1.0], [2.0], [0.5]])
    G = zf(H)
    M = mrt(H).T
    for k in range(3):
        assert abs(abs(np.vdot(G[:, k], M[:, k])) - 1) < 1e-12


def test_zf_nulling_random(rng):
    H = crandn(rng, 4, 64)
    G = zf(H)
    A = np.abs(H @ G) ** 2
    off = A[~np.eye(4, dtype=bool)]
    assert off.max() < 1e-20 * np.diag(A).max()
    np.testing.assert_allclose(np.linalg.norm(G, axis=0), 1, atol=1e-12)


def test_zf_errors():
    with pytest.raises(PrecoderError):
        zf(np.ones((3, 2), dtype=complex))
    with pytest.raises(DegenerateChannelError):
        zf(np.zeros((2, 4), dtype=complex))


def test_zf_condition_reported(rng):
    H = crandn(rng, 2, 4)
    H[1] = H[0] + 1e-9 * H[1]
    G, c = zf(H, return_cond=True)
    assert c == pytest.approx(np.linalg.cond(H), rel=1e-3)
    assert c > 1e8 and np.all(np.isfinite(G))


def test_single_served_zf_is_mrt(rng):
    h = crandn(rng, 1, 16)
    np.testing.assert_allclose(zf(h)[:, 0], mrt(h[0]), atol=1e-13)


def _drop(rng, K, J, N=64):
    beta = rng.uniform(0.1, 1.0, (K, J))
    M = N // J
    h = crandn(rng, K, N) * np.repeat(np.sqrt(beta), M, axis=1)
    return h, beta


@pytest.mark.parametrize("J", [1, 4, 16])
@pytest.mark.parametrize("mode,scheme", [("JT", "MRT"), ("JT", "ZF"), ("SAT", "MRT"),
                                         ("SAT", "ZF"), ("SAT", "CZF")])
def test_unit_norm_and_support(rng, J, mode, scheme):
    h, beta = _drop(rng, 4, J)
    G, _ = precoder_batch(mode, scheme, h, anchors(beta), J)
    assert G.shape == (64, 4)
    np.testing.assert_allclose(np.linalg.norm(G, axis=0), 1, atol=1e-12)
    if mode == "SAT":
        M = 64 // J
        for k, j in enumerate(anchors(beta)):
            mask = np.ones(64, bool)
            mask[j * M:(j + 1) * M] = False
            assert not np.any(G[mask, k])


@pytest.mark.parametrize("scheme", ["MRT", "ZF", "CZF"])
def test_sat_equals_jt_for_one_ap(rng, scheme):
    h, beta = _drop(rng, 4, 1)
    a = anchors(beta)
    G_sat, _ = precoder_batch("SAT", scheme, h, a, 1)
    G_jt, _ = precoder_batch("JT", "ZF" if scheme == "CZF" else scheme, h, a, 1)
    np.testing.assert_array_equal(G_sat, G_jt)


def test_jt_czf_is_zf(rng):
    h, beta = _drop(rng, 4, 4)
    a = anchors(beta)
    np.testing.assert_array_equal(precoder_batch("JT", "CZF", h, a, 4)[0],
                                  precoder_batch("JT", "ZF", h, a, 4)[0])


def test_sat_czf_nulls_everyone(rng):
    # J=16, M=4, K=4 square systems per AP
    for _ in range(50):
        h, beta = _drop(rng, 4, 16)
        a = anchors(beta)
        G, _ = precoder_batch("SAT", "CZF", h, a, 16)
        A = np.abs(h @ G) ** 2
        for k in range(4):
            for m in range(4):
                if m != k:
                    assert A[m, k] < 1e-20 * A[k, k]


def test_sat_zf_nulls_within_served_set(rng):
    h, beta = _drop(rng, 4, 4)
    beta[:, 0] = 10.0       # every AC anchored at AP 0
    G, _ = precoder_batch("SAT", "ZF", h, anchors(beta), 4)
    A = np.abs(h @ G) ** 2
    assert A[~np.eye(4, dtype=bool)].max() < 1e-15 * np.diag(A).min()


def test_dimension_errors(rng):
    h, beta = _drop(rng, 5, 16)
    with pytest.raises(PrecoderError, match="CZF at AP"):
        precoder_batch("SAT", "CZF", h, anchors(beta), 16)
    beta[:, 3] = 10.0
    with pytest.raises(PrecoderError, match="M >= \\|S_j\\|"):
        precoder_batch("SAT", "ZF", h, anchors(beta), 16)
    h2, beta2 = _drop(rng, 8, 1, N=4)
    with pytest.raises(PrecoderError):
        precoder_batch("JT", "ZF", h2, anchors(beta2), 1)


def test_batch_matches_single(rng):
    hs, bs = zip(*[_drop(rng, 4, 4) for _ in range(6)])
    H, B = np.stack(hs), np.stack(bs)
    for mode, scheme in [("SAT", "ZF"), ("SAT", "CZF"), ("JT", "ZF"), ("SAT", "MRT")]:
        Gb, cb = precoder_batch(mode, scheme, H, anchors(B), 4)
        for i in range(6):
            Gi, ci = precoder_batch(mode, scheme, H[i], anchors(B[i]), 4)
            np.testing.assert_allclose(Gb[i], Gi, atol=1e-14)


def test_build_precoder(rng):
    h, beta = _drop(rng, 4, 4)
    pm = build_precoder("JT", "ZF", h, associate(beta))
    assert pm.g.shape == (64, 4) and pm.condition_number >= 1
    assert np.isnan(build_precoder("JT", "MRT", h, associate(beta)).condition_number)
