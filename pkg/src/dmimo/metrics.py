"""True-channel SINR and tail statistics of pooled SINR samples."""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Iterator

import numpy as np

from . import kernels
from .errors import InsufficientSamplesError

AVAILABILITY_LEVELS = (1e-3, 1e-4, 1e-5)


@dataclass(frozen=True)
class SinrSample:
    drop_id: int
    ac_id: int
    sinr_linear: float

    @property
    def sinr_db(self) -> float:
        return 10.0 * math.log10(self.sinr_linear)


def sinr(h, g, p, sigma2) -> np.ndarray:
    """SINR of every AC for true channels ``h`` and precoders ``g``.

    Works on one drop (``h`` K x N, ``g`` N x K, ``p`` and ``sigma2`` length K)
    or a stack of drops with a leading batch axis. The same formula covers SAT:
    its precoder columns are zero outside the anchor AP's antenna block.
    """
    h = np.asarray(h)
    single = h.ndim == 2
    if single:
        h, g, p, sigma2 = h[None], np.asarray(g)[None], np.asarray(p)[None], np.asarray(sigma2)[None]
    A = kernels.cross_gains(h, g)
    sigma2 = np.broadcast_to(sigma2, A.shape[:2])
    out = kernels.sinr_from_gains(A, np.broadcast_to(p, A.shape[:2]), sigma2)
    return out[0] if single else out


def _order_index(n: int, p: float) -> int:
    # guard against p*n landing a hair above an integer (e.g. 1e-5 * 4e6)
    return max(1, math.ceil(p * n * (1.0 - 1e-12)))


def empirical_quantile(samples, p: float, assume_sorted: bool = False) -> float:
    """Lower order statistic at 1-based index ``ceil(p n)``.

    Raises :class:`InsufficientSamplesError` when ``p n < 1`` and warns when
    fewer than 10 samples lie at or below the requested level.
    """
    x = np.asarray(samples, dtype=float).ravel()
    n = x.size
    if not 0.0 < p <= 1.0:
        raise ValueError("quantile level must lie in (0, 1]")
    if p * n < 1.0 - 1e-12:
        raise InsufficientSamplesError(f"p*n = {p * n:g} < 1 (p={p:g}, n={n})")
    if p * n < 10:
        warnings.warn(f"tail estimate from p*n = {p * n:g} < 10 samples is unstable",
                      RuntimeWarning, stacklevel=2)
    i = _order_index(n, p) - 1
    if assume_sorted:
        return float(x[i])
    return float(np.partition(x, i)[i])


class SinrDistribution:
    """Pooled (drop, AC) SINR samples held as flat arrays."""

    def __init__(self, sinr_linear, drop_id=None, ac_id=None):
        s = np.asarray(sinr_linear, dtype=float)
        if s.ndim == 2:
            n_drops, K = s.shape
            if drop_id is None:
                drop_id = np.repeat(np.arange(n_drops), K)
            if ac_id is None:
                ac_id = np.tile(np.arange(K), n_drops)
            s = s.ravel()
        self.sinr_linear = s
        self.drop_id = np.asarray(drop_id if drop_id is not None else np.arange(s.size))
        self.ac_id = np.asarray(ac_id if ac_id is not None else np.zeros(s.size, dtype=int))
        self._sorted: np.ndarray | None = None

    @property
    def n(self) -> int:
        return self.sinr_linear.size

    @property
    def sinr_db(self) -> np.ndarray:
        return 10.0 * np.log10(self.sinr_linear)

    @property
    def sorted_linear(self) -> np.ndarray:
        if self._sorted is None:
            self._sorted = np.sort(self.sinr_linear)
        return self._sorted

    def __iter__(self) -> Iterator[SinrSample]:
        for d, a, s in zip(self.drop_id, self.ac_id, self.sinr_linear):
            yield SinrSample(int(d), int(a), float(s))

    def quantile(self, p: float) -> float:
        return empirical_quantile(self.sorted_linear, p, assume_sorted=True)

    def median_db(self) -> float:
        return 10.0 * math.log10(self.quantile(0.5))

    def mean_db(self) -> float:
        return 10.0 * math.log10(float(np.mean(self.sinr_linear)))

    def cdf_points(self, max_points: int = 10_000) -> tuple[np.ndarray, np.ndarray]:
        """Evenly spaced points of the empirical CDF, ``(sinr_db, F)``."""
        s = self.sorted_linear
        n = s.size
        m = min(n, max_points)
        idx = np.unique(np.round(np.linspace(0, n - 1, m)).astype(np.int64))
        return 10.0 * np.log10(s[idx]), (idx + 1) / n

    @classmethod
    def merge(cls, parts: list["SinrDistribution"]) -> "SinrDistribution":
        order = sorted(parts, key=lambda d: (int(d.drop_id[0]) if d.n else -1))
        return cls(np.concatenate([d.sinr_linear for d in order]),
                   np.concatenate([d.drop_id for d in order]),
                   np.concatenate([d.ac_id for d in order]))


def availability(dist: SinrDistribution, level: float = 1e-5) -> float:
    """SINR (dB) reached with probability ``1 - level``."""
    return 10.0 * math.log10(dist.quantile(level))
