"""Pure numpy versions of the compiled kernels in ``_ckernels.pyx``."""
import numpy as np


def cross_gains(h, g):
    return np.abs(np.matmul(h, g)) ** 2


def sinr_from_gains(A, p, sigma2):
    K = A.shape[-1]
    off = ~np.eye(K, dtype=bool)
    signal = np.diagonal(A, axis1=-2, axis2=-1) * p
    interf = np.einsum("bkm,bm->bk", np.where(off, A, 0.0), p)
    return signal / (sigma2 + interf)


def power_iteration(D, tol, max_iter):
    D = np.asarray(D, dtype=float)
    B, n = D.shape[:2]
    w = np.ones((B, n))
    its = np.zeros(B, dtype=np.int64)
    ok = np.zeros(B, dtype=bool)
    active = np.arange(B)
    rows = np.arange(B)
    for _ in range(max_iter):
        if active.size == 0:
            break
        v = np.einsum("bij,bj->bi", D[active], w[active])
        piv = v[rows[: active.size], np.argmax(np.abs(v), axis=1)]
        dead = piv == 0.0
        piv = np.where(dead, 1.0, piv)
        v = v / piv[:, None]
        diff = np.max(np.abs(v - w[active]), axis=1)
        live = ~dead
        w[active[live]] = v[live]
        its[active[live]] += 1
        done = live & (diff < tol)
        ok[active[done]] = True
        active = active[live & ~done]
    return w, its, ok


def zf_columns(H):
    K, N = H.shape[-2:]
    if K > N:
        raise ValueError("zero forcing needs K <= N")
    U, s, Vh = np.linalg.svd(H, full_matrices=False)
    ok = s[..., -1] > 0
    with np.errstate(divide="ignore", invalid="ignore"):
        # pinv(H) = V diag(1/s) U^H
        G = np.matmul(np.swapaxes(Vh.conj(), -1, -2) / s[..., None, :],
                      np.swapaxes(U.conj(), -1, -2))
        G = G / np.linalg.norm(G, axis=-2, keepdims=True)
        cond = np.where(ok, s[..., 0] / s[..., -1], np.inf)
    return G, cond, ok
