"""Equal and max-min power allocation under a total power budget.

Max-min allocation maximizes the smallest *estimated* SINR

    SINR_k = P_k / (f_k + sum_{m != k} R_km P_m)

subject to ``sum_k q_k P_k <= p_ap``. The optimum is read off the dominant
eigenvector ``w`` of the augmented nonnegative matrix

    D = [[R,          f         ],
         [q^T R / p_ap, q^T f / p_ap]]

as ``P_k = w_k / w_{K+1}``; the common SINR at the optimum is ``1 / lambda_max``.
:func:`mpa_oracle` solves the same problem by bisection on the target SINR and
shares no code with the eigenvector route.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Mapping

import numpy as np

from . import kernels
from .errors import DegenerateChannelError, NumericalError

POWER_ITER_TOL = 1e-12
POWER_ITER_MAX = 10_000


@dataclass(frozen=True)
class MpaInstance:
    R: np.ndarray   # (K, K) normalized cross gains, zero diagonal
    f: np.ndarray   # (K,) noise-to-signal-gain ratios
    q: np.ndarray   # (K,) squared beamformer norms
    p_ap: float

    @property
    def K(self) -> int:
        return len(self.f)

    def to_dict(self) -> dict[str, Any]:
        return {"R": np.asarray(self.R).tolist(), "f": np.asarray(self.f).tolist(),
                "q": np.asarray(self.q).tolist(), "p_ap": float(self.p_ap)}

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "MpaInstance":
        R = np.asarray(d["R"], dtype=float)
        f = np.asarray(d["f"], dtype=float)
        q = np.asarray(d.get("q", np.ones_like(f)), dtype=float)
        inst = cls(R=R, f=f, q=q, p_ap=float(d["p_ap"]))
        inst.check()
        return inst

    def check(self) -> None:
        K = len(self.f)
        if self.R.shape != (K, K) or self.q.shape != (K,):
            raise ValueError("R must be K x K and f, q length K")
        if np.any(self.R < 0) or np.any(np.diag(self.R) != 0):
            raise ValueError("R must be nonnegative with a zero diagonal")
        if np.any(self.f <= 0) or np.any(self.q <= 0) or not self.p_ap > 0:
            raise ValueError("f, q and p_ap must be positive")


def epa(K: int, p_ap: float) -> np.ndarray:
    if K < 1:
        raise ValueError("K must be >= 1")
    return np.full(int(K), p_ap / K)


def estimated_sinr(R, f, p):
    """SINR implied by an instance for powers ``p`` (batched over leading dims)."""
    R = np.asarray(R)
    p = np.asarray(p)
    interf = np.einsum("...km,...m->...k", R, p) - np.diagonal(R, axis1=-2, axis2=-1) * p
    return p / (np.asarray(f) + interf)


def mpa_terms(A_hat, sigma2):
    """``(R, f)`` from estimated gain matrices ``A_hat[..., k, m] = |h_k g_m|^2``."""
    A_hat = np.asarray(A_hat, dtype=float)
    d = np.diagonal(A_hat, axis1=-2, axis2=-1)
    if np.any(d <= 0):
        bad = np.argwhere(d <= 0)[0]
        raise DegenerateChannelError(f"zero useful gain |h_k g_k|^2 for AC k={int(bad[-1])}")
    R = A_hat / d[..., :, None]
    K = A_hat.shape[-1]
    R[..., np.arange(K), np.arange(K)] = 0.0
    return R, np.asarray(sigma2) / d


def build_mpa_instance(h_hat, g, noise, p_ap: float) -> MpaInstance:
    """Assemble the max-min instance of one drop from estimated channels."""
    h_hat = np.asarray(h_hat, dtype=complex)
    g = np.asarray(g, dtype=complex)
    A = kernels.cross_gains(h_hat[None], g[None])[0]
    sigma2 = np.broadcast_to(noise.sigma_k2 if hasattr(noise, "sigma_k2") else noise,
                             (A.shape[0],))
    R, f = mpa_terms(A, sigma2)
    q = np.sum(np.abs(g) ** 2, axis=0)
    return MpaInstance(R=R, f=f, q=q, p_ap=float(p_ap))


def augmented_matrix(R, f, q, p_ap):
    R = np.asarray(R, dtype=float)
    f = np.asarray(f, dtype=float)
    q = np.asarray(q, dtype=float)
    K = f.shape[-1]
    D = np.empty(R.shape[:-2] + (K + 1, K + 1))
    D[..., :K, :K] = R
    D[..., :K, K] = f
    D[..., K, :K] = np.einsum("...k,...km->...m", q, R) / p_ap
    D[..., K, K] = np.einsum("...k,...k->...", q, f) / p_ap
    return D


def mpa_solve_batch(R, f, q, p_ap, tol=POWER_ITER_TOL, max_iter=POWER_ITER_MAX,
                    backend=None):
    """Max-min powers for a stack of instances ``R (B, K, K)``, ``f, q (B, K)``.

    Instances whose ``R`` is exactly zero use the interference-free closed form
    ``P_k = f_k p_ap / sum(q f)``; the rest go through power iteration on the
    augmented matrix.
    """
    R = np.asarray(R, dtype=float)
    f = np.asarray(f, dtype=float)
    q = np.asarray(q, dtype=float)
    B, K = f.shape
    p = np.empty((B, K))
    decoupled = ~np.any(R != 0, axis=(1, 2))
    if decoupled.any():
        fd, qd = f[decoupled], q[decoupled]
        p[decoupled] = fd * p_ap / np.sum(qd * fd, axis=1, keepdims=True)
    rest = np.flatnonzero(~decoupled)
    if rest.size:
        D = augmented_matrix(R[rest], f[rest], q[rest], p_ap)
        w, its, ok = kernels.power_iteration(D, tol, max_iter, backend=backend)
        if not ok.all():
            bad = int(np.flatnonzero(~ok)[0])
            raise NumericalError(
                f"power iteration did not converge after {int(its[bad])} iterations "
                f"(instance {int(rest[bad])})")
        w = np.where(w[:, K:] < 0, -w, w)
        pr = w[:, :K] / w[:, K:]
        if np.any(pr < -1e-9 * p_ap):
            raise NumericalError("max-min power allocation produced a negative power")
        p[rest] = np.maximum(pr, 0.0)
    return p


def mpa_solve(inst: MpaInstance, backend=None) -> np.ndarray:
    return mpa_solve_batch(inst.R[None], inst.f[None], inst.q[None], inst.p_ap,
                           backend=backend)[0]


def _fixed_point(R, f, t, q, p_ap, max_iter, rtol):
    """Least fixed point of ``p = t (R p + f)``; ``None`` if above budget or divergent."""
    p = np.zeros_like(f)
    for _ in range(max_iter):
        nxt = t * (R @ p + f)
        if q @ nxt > p_ap * (1.0 + 1e-15):
            return None  # iterates increase monotonically: budget already exceeded
        if np.max(np.abs(nxt - p)) <= rtol * np.max(nxt):
            return nxt
        p = nxt
    return None


def mpa_oracle(inst: MpaInstance, tol: float = 1e-10, max_iter: int = 100_000) -> np.ndarray:
    """Max-min powers by bisection on the common target SINR ``t``.

    For each candidate ``t`` the fixed point ``p = t (R p + f)`` is found by
    plain iteration from zero; ``t`` is feasible when it converges within the
    budget. Bisection stops when the bracket is narrower than ``tol``
    relative to its upper end; the allocation at the lower end is returned.
    """
    R = np.asarray(inst.R, dtype=float)
    f = np.asarray(inst.f, dtype=float)
    q = np.asarray(inst.q, dtype=float)
    lo, hi = 0.0, inst.p_ap / float(q @ f)   # p >= t f  =>  t <= p_ap / q.f
    best = np.zeros_like(f)
    if not np.any(R):
        return hi * f
    while hi - lo > tol * hi:
        t = 0.5 * (lo + hi)
        p = _fixed_point(R, f, t, q, inst.p_ap, max_iter, rtol=1e-14)
        if p is None:
            hi = t
        else:
            lo, best = t, p
    return best


def random_instance(rng: np.random.Generator, K: int, zero_r: bool = False,
                    p_ap: float = 1.0) -> MpaInstance:
    """Test instance: R off-diagonal ~ U(0, 0.5), f log-uniform on [1e-3, 1], q ~ U(0.5, 2)."""
    R = np.zeros((K, K)) if zero_r else rng.uniform(0.0, 0.5, (K, K))
    np.fill_diagonal(R, 0.0)
    f = 10.0 ** rng.uniform(-3.0, 0.0, K)
    q = rng.uniform(0.5, 2.0, K)
    return MpaInstance(R=R, f=f, q=q, p_ap=float(p_ap))
