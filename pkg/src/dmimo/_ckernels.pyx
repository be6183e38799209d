# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot loops; semantics mirror :mod:`dmimo._pykernels`."""
import numpy as np

cimport cython
from libc.math cimport fabs, sqrt, INFINITY


def cross_gains(const double complex[:, :, ::1] h, const double complex[:, :, ::1] g):
    """``A[b, k, m] = |h[b, k, :] @ g[b, :, m]|**2``."""
    cdef Py_ssize_t B = h.shape[0], K = h.shape[1], N = h.shape[2], M = g.shape[2]
    if g.shape[0] != B or g.shape[1] != N:
        raise ValueError("shape mismatch between channels and precoders")
    out = np.empty((B, K, M), dtype=np.float64)
    cdef double[:, :, ::1] A = out
    cdef double[::1] re = np.empty(M, dtype=np.float64)
    cdef double[::1] im = np.empty(M, dtype=np.float64)
    cdef const double[:, :, ::1] gv = np.asarray(g).view(np.float64).reshape(B, N, 2 * M)
    cdef Py_ssize_t b, k, m, n
    cdef double hr, hi, gr, gi
    with nogil:
        for b in range(B):
            for k in range(K):
                for m in range(M):
                    re[m] = 0.0
                    im[m] = 0.0
                # row of g is contiguous in m: accumulate all M products at once
                for n in range(N):
                    hr = h[b, k, n].real
                    hi = h[b, k, n].imag
                    for m in range(M):
                        gr = gv[b, n, 2 * m]
                        gi = gv[b, n, 2 * m + 1]
                        re[m] += hr * gr - hi * gi
                        im[m] += hr * gi + hi * gr
                for m in range(M):
                    A[b, k, m] = re[m] * re[m] + im[m] * im[m]
    return out


def sinr_from_gains(const double[:, :, ::1] A, const double[:, ::1] p,
                    const double[:, ::1] sigma2):
    """Per-AC SINR from gain matrices, powers and noise powers."""
    cdef Py_ssize_t B = A.shape[0], K = A.shape[1]
    out = np.empty((B, K), dtype=np.float64)
    cdef double[:, ::1] s = out
    cdef Py_ssize_t b, k, m
    cdef double interf
    with nogil:
        for b in range(B):
            for k in range(K):
                interf = 0.0
                for m in range(K):
                    if m != k:
                        interf += A[b, k, m] * p[b, m]
                s[b, k] = A[b, k, k] * p[b, k] / (sigma2[b, k] + interf)
    return out


def power_iteration(const double[:, :, ::1] D, double tol, Py_ssize_t max_iter):
    """Dominant eigenvector of each ``D[b]`` by power iteration.

    Iterates are scaled so that their largest-magnitude entry equals one;
    iteration stops once successive iterates differ by less than ``tol`` in
    max-norm. Returns ``(w, iterations, converged)``.
    """
    cdef Py_ssize_t B = D.shape[0], n = D.shape[1]
    w_out = np.ones((B, n), dtype=np.float64)
    it_out = np.zeros(B, dtype=np.int64)
    ok_out = np.zeros(B, dtype=np.bool_)
    cdef double[:, ::1] w = w_out
    cdef long long[::1] its = it_out
    cdef unsigned char[::1] ok = ok_out.view(np.uint8)
    cdef double[::1] v = np.empty(n, dtype=np.float64)
    cdef Py_ssize_t b, i, j, it
    cdef double acc, piv, diff, d
    with nogil:
        for b in range(B):
            for it in range(max_iter):
                piv = 0.0
                for i in range(n):
                    acc = 0.0
                    for j in range(n):
                        acc += D[b, i, j] * w[b, j]
                    v[i] = acc
                    if fabs(acc) > fabs(piv):
                        piv = acc
                if piv == 0.0:
                    break
                diff = 0.0
                for i in range(n):
                    d = v[i] / piv
                    if fabs(d - w[b, i]) > diff:
                        diff = fabs(d - w[b, i])
                    w[b, i] = d
                its[b] = it + 1
                if diff < tol:
                    ok[b] = 1
                    break
    return w_out, it_out, ok_out




# Complex matrices below are held as separate real and imaginary arrays with
# one matrix column per row (``Xr[col, i]``), so the inner loops run over
# contiguous doubles.

cdef double _jacobi_cond(double[:, ::1] Wr, double[:, ::1] Wi, Py_ssize_t K) noexcept nogil:
    """2-norm condition number of the K x K matrix W (one-sided Jacobi, in place)."""
    cdef Py_ssize_t sweep, p, q, i
    cdef double alpha, beta, gr, gi, ag, zeta, t, c, s, phr, phi
    cdef double pr, pi, qr, qi, smax, smin, nrm
    cdef bint rotated
    for sweep in range(60):
        rotated = False
        for p in range(K - 1):
            for q in range(p + 1, K):
                alpha = 0.0
                beta = 0.0
                gr = 0.0
                gi = 0.0
                for i in range(K):
                    alpha += Wr[p, i] * Wr[p, i] + Wi[p, i] * Wi[p, i]
                    beta += Wr[q, i] * Wr[q, i] + Wi[q, i] * Wi[q, i]
                    gr += Wr[p, i] * Wr[q, i] + Wi[p, i] * Wi[q, i]
                    gi += Wr[p, i] * Wi[q, i] - Wi[p, i] * Wr[q, i]
                ag = sqrt(gr * gr + gi * gi)
                if ag <= 1e-13 * sqrt(alpha * beta):
                    continue
                rotated = True
                phr = gr / ag
                phi = gi / ag
                zeta = (beta - alpha) / (2.0 * ag)
                if zeta >= 0:
                    t = 1.0 / (zeta + sqrt(1.0 + zeta * zeta))
                else:
                    t = -1.0 / (-zeta + sqrt(1.0 + zeta * zeta))
                c = 1.0 / sqrt(1.0 + t * t)
                s = c * t
                for i in range(K):
                    pr = Wr[p, i]
                    pi = Wi[p, i]
                    # column q times conj(phase)
                    qr = Wr[q, i] * phr + Wi[q, i] * phi
                    qi = Wi[q, i] * phr - Wr[q, i] * phi
                    Wr[p, i] = c * pr - s * qr
                    Wi[p, i] = c * pi - s * qi
                    Wr[q, i] = s * pr + c * qr
                    Wi[q, i] = s * pi + c * qi
        if not rotated:
            break
    smax = 0.0
    smin = INFINITY
    for p in range(K):
        nrm = 0.0
        for i in range(K):
            nrm += Wr[p, i] * Wr[p, i] + Wi[p, i] * Wi[p, i]
        nrm = sqrt(nrm)
        if nrm > smax:
            smax = nrm
        if nrm < smin:
            smin = nrm
    if smin == 0.0:
        return INFINITY
    return smax / smin


cdef inline void _reflect(double[:, ::1] Vr, double[:, ::1] Vi, double vn2, Py_ssize_t k,
                          double[:, ::1] Xr, double[:, ::1] Xi, Py_ssize_t j,
                          Py_ssize_t N) noexcept nogil:
    """Apply ``I - 2 v v^H / |v|^2`` (v = column k of V, rows k..N-1) to column j of X."""
    cdef Py_ssize_t i
    cdef double sr = 0.0, si = 0.0
    for i in range(k, N):
        sr += Vr[k, i] * Xr[j, i] + Vi[k, i] * Xi[j, i]
        si += Vr[k, i] * Xi[j, i] - Vi[k, i] * Xr[j, i]
    sr = 2.0 * sr / vn2
    si = 2.0 * si / vn2
    for i in range(k, N):
        Xr[j, i] -= sr * Vr[k, i] - si * Vi[k, i]
        Xi[j, i] -= sr * Vi[k, i] + si * Vr[k, i]


def zf_columns(const double complex[:, :, ::1] H):
    """Unit-norm columns of ``pinv(H[b])`` for a stack of K x N channel matrices.

    Householder QR of ``H^H = Q R`` gives ``pinv(H) = Q R^{-H}``, evaluated by
    applying the reflectors to ``[R^{-H}; 0]``. Returns ``(G, cond, ok)`` with
    ``cond`` the 2-norm condition number of ``H[b]`` and ``ok`` false where
    ``H[b]`` is exactly rank deficient.
    """
    cdef Py_ssize_t B = H.shape[0], K = H.shape[1], N = H.shape[2]
    if K > N:
        raise ValueError("zero forcing needs K <= N")
    G_out = np.zeros((B, N, K), dtype=np.complex128)
    cond_out = np.empty(B, dtype=np.float64)
    ok_out = np.ones(B, dtype=np.bool_)
    cdef double[:, :, ::1] G = G_out.view(np.float64)
    cdef double[::1] cond = cond_out
    cdef unsigned char[::1] ok = ok_out.view(np.uint8)
    cdef double[:, ::1] Ar = np.empty((K, N)), Ai = np.empty((K, N))
    cdef double[:, ::1] Vr = np.empty((K, N)), Vi = np.empty((K, N))
    cdef double[:, ::1] Rr = np.empty((K, K)), Ri = np.empty((K, K))
    cdef double[::1] vn2 = np.empty(K)
    cdef Py_ssize_t b, i, j, k, n
    cdef double xnorm, ax0, phr, phi, alr, ali, nrm, tr, ti, dr, di, den
    cdef bint bad
    with nogil:
        for b in range(B):
            bad = False
            for k in range(K):
                for n in range(N):
                    Ar[k, n] = H[b, k, n].real
                    Ai[k, n] = -H[b, k, n].imag
            for k in range(K):
                xnorm = 0.0
                for i in range(k, N):
                    xnorm += Ar[k, i] * Ar[k, i] + Ai[k, i] * Ai[k, i]
                xnorm = sqrt(xnorm)
                if xnorm == 0.0:
                    bad = True
                    break
                ax0 = sqrt(Ar[k, k] * Ar[k, k] + Ai[k, k] * Ai[k, k])
                if ax0 > 0.0:
                    phr = Ar[k, k] / ax0
                    phi = Ai[k, k] / ax0
                else:
                    phr = 1.0
                    phi = 0.0
                alr = -phr * xnorm
                ali = -phi * xnorm
                for i in range(k, N):
                    Vr[k, i] = Ar[k, i]
                    Vi[k, i] = Ai[k, i]
                Vr[k, k] -= alr
                Vi[k, k] -= ali
                vn2[k] = 2.0 * xnorm * (xnorm + ax0)
                for j in range(k + 1, K):
                    _reflect(Vr, Vi, vn2[k], k, Ar, Ai, j, N)
                Rr[k, k] = alr          # R stored row-wise: Rr[k, j] = R[k, j]
                Ri[k, k] = ali
                for j in range(k + 1, K):
                    Rr[k, j] = Ar[j, k]
                    Ri[k, j] = Ai[j, k]
                    Rr[j, k] = 0.0
                    Ri[j, k] = 0.0
            if bad:
                ok[b] = 0
                cond[b] = INFINITY
                continue
            # A <- [R^{-H}; 0] column by column (forward substitution with R^H)
            for j in range(K):
                for i in range(N):
                    Ar[j, i] = 0.0
                    Ai[j, i] = 0.0
                for i in range(j, K):
                    tr = 1.0 if i == j else 0.0
                    ti = 0.0
                    for k in range(j, i):
                        # conj(R[k, i]) * X[k, j]
                        tr -= Rr[k, i] * Ar[j, k] + Ri[k, i] * Ai[j, k]
                        ti -= Rr[k, i] * Ai[j, k] - Ri[k, i] * Ar[j, k]
                    # divide by conj(R[i, i])
                    dr = Rr[i, i]
                    di = -Ri[i, i]
                    den = dr * dr + di * di
                    Ar[j, i] = (tr * dr + ti * di) / den
                    Ai[j, i] = (ti * dr - tr * di) / den
            for k in range(K - 1, -1, -1):
                for j in range(K):
                    _reflect(Vr, Vi, vn2[k], k, Ar, Ai, j, N)
            for j in range(K):
                nrm = 0.0
                for n in range(N):
                    nrm += Ar[j, n] * Ar[j, n] + Ai[j, n] * Ai[j, n]
                nrm = 1.0 / sqrt(nrm)
                for n in range(N):
                    G[b, n, 2 * j] = Ar[j, n] * nrm
                    G[b, n, 2 * j + 1] = Ai[j, n] * nrm
            # the Jacobi sweep works on the columns of R
            for j in range(K):
                for i in range(K):
                    Ar[j, i] = Rr[i, j]
                    Ai[j, i] = Ri[i, j]
            cond[b] = _jacobi_cond(Ar, Ai, K)
    return G_out, cond_out, ok_out
