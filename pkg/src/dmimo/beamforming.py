"""AC-AP association and unit-norm MRT / ZF / CZF beamformers.

Every function accepts arrays with arbitrary leading batch dimensions, so the
engine can build precoders for a whole block of drops at once. Channel
matrices are ``(..., K, N)`` with one row per AC; precoders are
``(..., N, K)`` with one column per AC.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import DegenerateChannelError, PrecoderError

COND_REPORT_THRESHOLD = 1e12


@dataclass(frozen=True)
class Association:
    anchor: np.ndarray            # (K,) 0-based AP index per AC
    served_sets: tuple[tuple[int, ...], ...]


@dataclass(frozen=True)
class PrecodingMatrix:
    g: np.ndarray                 # (M_TOT, K) complex
    condition_number: float = float("nan")


def anchors(beta: np.ndarray) -> np.ndarray:
    """Strongest-link AP per AC; ties go to the lowest AP index."""
    return np.argmax(beta, axis=-1)


def associate(beta) -> Association:
    beta = np.asarray(beta, dtype=float)
    if beta.ndim != 2:
        raise ValueError("beta must be a K x J matrix")
    anchor = anchors(beta)
    J = beta.shape[1]
    served = tuple(tuple(int(k) for k in np.flatnonzero(anchor == j)) for j in range(J))
    return Association(anchor=anchor, served_sets=served)


def mrt(h: np.ndarray) -> np.ndarray:
    """Matched beamformer ``h^H / ||h||`` for one or many row vectors."""
    h = np.asarray(h, dtype=complex)
    norm = np.linalg.norm(h, axis=-1, keepdims=True)
    if np.any(norm == 0):
        raise DegenerateChannelError("MRT of a zero channel vector")
    return h.conj() / norm


def zf(H: np.ndarray, return_cond: bool = False):
    """Unit-norm zero-forcing columns of ``H^H (H H^H)^-1``.

    No regularization is applied, so ill-conditioned draws are kept as they
    are; the 2-norm condition number is available through ``return_cond``.
    Exactly rank-deficient channels raise :class:`DegenerateChannelError`.
    """
    H = np.asarray(H, dtype=complex)
    K, N = H.shape[-2:]
    if K > N:
        raise PrecoderError(f"zero forcing needs K <= N (K={K}, N={N})")
    lead = H.shape[:-2]
    G, cond, ok = kernels.zf_columns(H.reshape((-1, K, N)))
    if not ok.all():
        raise DegenerateChannelError("channel matrix is rank deficient")
    G = G.reshape(lead + (N, K))
    if return_cond:
        return G, (cond.reshape(lead) if lead else float(cond[0]))
    return G


def _embed_sat_mrt(h_hat, anchor, J, M):
    lead = h_hat.shape[:-2]
    owner = np.repeat(np.arange(J), M)
    sel = owner[None, :] == anchor[..., :, None]       # (..., K, M_TOT)
    hk = np.where(sel, h_hat, 0)
    G = np.swapaxes(mrt(hk), -1, -2)
    return G, np.full(lead, np.nan) if lead else np.nan


def _flat(h_hat, anchor):
    lead = h_hat.shape[:-2]
    K, N = h_hat.shape[-2:]
    return lead, h_hat.reshape((-1, K, N)), np.asarray(anchor).reshape((-1, K))


def _sat_zf(h_hat, anchor, J, M, coordinated):
    lead, H, A = _flat(h_hat, anchor)
    B, K, N = H.shape
    G = np.zeros((B, N, K), dtype=complex)
    cond = np.full(B, 1.0)
    weights = 1 << np.arange(K, dtype=np.int64) if K < 63 else None
    for j in range(J):
        blk = slice(j * M, (j + 1) * M)
        members = A == j                                 # (B, K)
        active = members.any(axis=1)
        if not active.any():
            continue
        if coordinated:
            if M < K:
                raise PrecoderError(
                    f"CZF at AP {j} needs M >= K (M={M}, K={K})")
            idx = np.flatnonzero(active)
            Gj, cj = zf(H[idx, :, blk], return_cond=True)   # (n, M, K)
            Gj = Gj * members[idx][:, None, :]
            G[idx, blk, :] += Gj
            cond[idx] = np.maximum(cond[idx], cj)
            continue
        # plain ZF over the served set; group drops by identical served sets
        if weights is not None:
            codes = members.astype(np.int64) @ weights
            keys, inverse, counts = np.unique(codes, return_inverse=True, return_counts=True)
            order = np.argsort(inverse, kind="stable")
            bounds = np.concatenate([[0], np.cumsum(counts)])
            groups = [(np.flatnonzero(members[order[bounds[i]]]), order[bounds[i]:bounds[i + 1]])
                      for i, c in enumerate(keys) if c]
        else:
            groups = [(np.flatnonzero(members[b]), np.array([b])) for b in np.flatnonzero(active)]
        for rows, idx in groups:
            if len(rows) > M:
                raise PrecoderError(
                    f"ZF at AP {j} needs M >= |S_j| (M={M}, |S_j|={len(rows)})")
            sub = H[np.ix_(idx, rows, np.arange(blk.start, blk.stop))]
            Gs, cs = zf(sub, return_cond=True)            # (n, M, |S|)
            G[np.ix_(idx, np.arange(blk.start, blk.stop), rows)] = Gs
            cond[idx] = np.maximum(cond[idx], cs)
    G = G.reshape(lead + (N, K))
    cond = cond.reshape(lead) if lead else float(cond[0])
    return G, cond


def precoder_batch(mode: str, scheme: str, h_hat: np.ndarray, anchor: np.ndarray,
                   J: int):
    """Precoders for ``(..., K, M_TOT)`` estimates; returns ``(G, cond)``.

    ``cond`` is the largest condition number over the ZF systems solved for
    each drop (NaN for MRT).
    """
    h_hat = np.asarray(h_hat, dtype=complex)
    K, N = h_hat.shape[-2:]
    if N % J:
        raise PrecoderError(f"M_TOT={N} is not a multiple of J={J}")
    M = N // J
    lead = h_hat.shape[:-2]
    if mode == "JT" or J == 1:
        if scheme == "MRT":
            G = np.swapaxes(mrt(h_hat), -1, -2)
            return G, (np.full(lead, np.nan) if lead else np.nan)
        if scheme in ("ZF", "CZF"):
            if K > N:
                raise PrecoderError(f"JT-ZF needs M_TOT >= K (M_TOT={N}, K={K})")
            G, cond = zf(h_hat, return_cond=True)
            return G, (cond if lead else float(cond))
    elif mode == "SAT":
        if scheme == "MRT":
            return _embed_sat_mrt(h_hat, anchor, J, M)
        if scheme in ("ZF", "CZF"):
            return _sat_zf(h_hat, anchor, J, M, coordinated=scheme == "CZF")
    raise PrecoderError(f"unsupported mode/scheme {mode}/{scheme}")


def build_precoder(mode: str, scheme: str, h_hat: np.ndarray,
                   assoc: Association) -> PrecodingMatrix:
    J = len(assoc.served_sets)
    G, cond = precoder_batch(mode, scheme, h_hat, assoc.anchor, J)
    return PrecodingMatrix(g=G, condition_number=float(cond))
