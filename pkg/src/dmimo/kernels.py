"""Kernel backend selection.

The compiled extension is used when it imports; setting ``DMIMO_KERNELS=python``
forces the numpy fallback. ``BACKEND`` names the active implementation.

The batched cross-gain product is a plain complex matmul, where numpy's BLAS
call beats the compiled loop (see ``benchmarks/bench_kernels.py``), so it
defaults to the numpy version under either backend. Pass ``backend=`` to any
wrapper to force one implementation.
"""
import os

import numpy as np

from . import _pykernels

_impl = _pykernels
BACKEND = "python"
if os.environ.get("DMIMO_KERNELS", "").lower() not in ("python", "py", "numpy"):
    try:
        from . import _ckernels as _impl  # type: ignore[no-redef]
        BACKEND = "cython"
    except ImportError:  # extension not built
        _impl = _pykernels


def available_backends() -> tuple[str, ...]:
    try:
        from . import _ckernels  # noqa: F401
    except ImportError:
        return ("python",)
    return ("python", "cython")


def _select(backend, default=None):
    if backend is None:
        return default if default is not None else _impl
    if backend == "python":
        return _pykernels
    if backend == "cython":
        from . import _ckernels
        return _ckernels
    raise ValueError(f"unknown kernel backend {backend!r}")


def _c3(x, dtype):
    return np.ascontiguousarray(x, dtype=dtype)


def cross_gains(h, g, backend=None):
    """``|h_k g_m|^2`` for channels ``(B, K, N)`` and precoders ``(B, N, K)``."""
    impl = _select(backend, _pykernels)
    return impl.cross_gains(_c3(h, np.complex128), _c3(g, np.complex128))


def sinr_from_gains(A, p, sigma2, backend=None):
    """SINR per AC from gains ``A (B, K, K)``, powers and noise ``(B, K)``."""
    impl = _select(backend)
    return impl.sinr_from_gains(_c3(A, np.float64), _c3(p, np.float64), _c3(sigma2, np.float64))


def power_iteration(D, tol=1e-12, max_iter=10_000, backend=None):
    """Dominant eigenvectors of ``D (B, n, n)``: ``(w, iterations, converged)``."""
    impl = _select(backend)
    return impl.power_iteration(_c3(D, np.float64), float(tol), int(max_iter))


def zf_columns(H, backend=None):
    """Unit-norm pseudo-inverse columns for ``(B, K, N)`` channels: ``(G, cond, ok)``."""
    impl = _select(backend)
    return impl.zf_columns(_c3(H, np.complex128))
