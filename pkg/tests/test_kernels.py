"""Both kernel backends agree; the compiled one is optional."""
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from dmimo import _pykernels, kernels

from conftest import crandn

needs_ext = pytest.mark.skipif("cython" not in kernels.available_backends(),
                               reason="compiled kernels not built")


def test_backend_name():
    assert kernels.BACKEND in ("cython", "python")
    with pytest.raises(ValueError):
        kernels.zf_columns(np.ones((1, 1, 1)), backend="fortran")


@needs_ext
@given(st.integers(0, 2**32 - 1), st.integers(1, 8), st.integers(0, 24))
def test_zf_columns_agree(seed, K, extra):
    rng = np.random.default_rng(seed)
    H = crandn(rng, 5, K, K + extra)
    Gc, cc, okc = kernels.zf_columns(H, backend="cython")
    Gp, cp, okp = kernels.zf_columns(H, backend="python")
    assert okc.all() and okp.all()
    np.testing.assert_allclose(Gc, Gp, atol=1e-9 * np.max(cp))
    np.testing.assert_allclose(cc, cp, rtol=1e-8)


@pytest.mark.parametrize("backend_name", kernels.available_backends())
def test_zf_columns_rank_deficient(backend_name):
    H = np.zeros((1, 2, 4), dtype=complex)
    H[0, 0, 0] = 1.0
    _, cond, ok = kernels.zf_columns(H, backend=backend_name)
    assert not ok[0] and np.isinf(cond[0])


@pytest.mark.parametrize("backend_name", kernels.available_backends())
def test_zf_columns_square_unitary(backend_name, rng):
    q, _ = np.linalg.qr(crandn(rng, 4, 4))
    G, cond, ok = kernels.zf_columns(q[None], backend=backend_name)
    np.testing.assert_allclose(G[0], q.conj().T, atol=1e-13)
    assert cond[0] == pytest.approx(1.0)


@needs_ext
def test_cross_gains_agree(rng):
    h = crandn(rng, 7, 4, 16)
    g = crandn(rng, 7, 16, 4)
    np.testing.assert_allclose(kernels.cross_gains(h, g, backend="cython"),
                               _pykernels.cross_gains(h, g), rtol=1e-12)


@needs_ext
def test_sinr_agree(rng):
    A = rng.random((9, 3, 3))
    p = rng.random((9, 3))
    s = rng.random((9, 3))
    np.testing.assert_allclose(kernels.sinr_from_gains(A, p, s, backend="cython"),
                               _pykernels.sinr_from_gains(A, p, s), rtol=1e-14)


@needs_ext
def test_power_iteration_agree(rng):
    D = rng.random((20, 5, 5))
    wc, ic, okc = kernels.power_iteration(D, backend="cython")
    wp, ip, okp = kernels.power_iteration(D, backend="python")
    assert okc.all() and okp.all()
    np.testing.assert_allclose(wc, wp, atol=1e-14)
    np.testing.assert_array_equal(ic, ip)


@pytest.mark.parametrize("backend_name", kernels.available_backends())
def test_power_iteration_zero_matrix(backend_name):
    w, its, ok = kernels.power_iteration(np.zeros((1, 3, 3)), backend=backend_name)
    assert not ok[0]


def test_env_forces_python(monkeypatch):
    import importlib
    monkeypatch.setenv("DMIMO_KERNELS", "python")
    mod = importlib.reload(kernels)
    try:
        assert mod.BACKEND == "python"
    finally:
        monkeypatch.delenv("DMIMO_KERNELS")
        importlib.reload(kernels)
