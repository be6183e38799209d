"""MMSE channel estimation from orthogonal uplink pilots (TDD).

The estimate of block ``h_kj`` is ``c (h_kj + z_kj)`` with shrinkage
``c = gT / (1 + gT)``, pilot SNR ``g = p_ac beta_kj / sigma_ap2`` and
``z_kj ~ CN(0, sigma_ap2 / (p_ac T) I)``. Pilots are orthogonal, so every
(AC, AP) block is estimated independently.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import TYPE_CHECKING

import numpy as np

from .channel import ChannelRealization
from .noise import thermal_noise_power

if TYPE_CHECKING:
    from .scenario import ScenarioConfig


@dataclass(frozen=True)
class EstimationContext:
    p_ac: float
    T: int
    sigma_ap2: np.ndarray  # (J,) noise power at each AP, W

    @classmethod
    def from_config(cls, cfg: "ScenarioConfig") -> "EstimationContext":
        # same receiver chain at every AP, thermal noise only
        s2 = thermal_noise_power(cfg.budget.bandwidth_hz, cfg.budget.noise_figure_db)
        return cls(p_ac=cfg.budget.p_ac, T=int(cfg.budget.T),
                   sigma_ap2=np.full(cfg.deployment.J, s2))


def shrinkage(beta, p_ac: float, T: int, sigma_ap2):
    """MMSE shrinkage factor ``gT / (1 + gT)``."""
    gT = p_ac * np.asarray(beta) * T / sigma_ap2
    return gT / (1.0 + gT)


def estimate_from_normals(h: np.ndarray, beta: np.ndarray, ctx: EstimationContext,
                          M: int, n: np.ndarray) -> np.ndarray:
    """Vectorised estimator over ``(..., K, J*M)`` channels.

    ``beta`` is ``(..., K, J)`` and ``n`` holds real normals ``(..., K, J*M, 2)``.
    """
    sigma_ap2 = np.asarray(ctx.sigma_ap2)
    c = np.repeat(shrinkage(beta, ctx.p_ac, ctx.T, sigma_ap2), M, axis=-1)
    z_std = np.repeat(np.sqrt(sigma_ap2 / (2.0 * ctx.p_ac * ctx.T)), M)
    z = (n[..., 0] + 1j * n[..., 1]) * z_std
    return c * (h + z)


def estimate_channel(h_kj: np.ndarray, beta_kj: float, ctx: EstimationContext, j: int,
                     rng: np.random.Generator) -> np.ndarray:
    """Estimate one (AC, AP) block of length M."""
    if not beta_kj > 0:
        raise ValueError("large-scale gain must be positive")
    h_kj = np.asarray(h_kj, dtype=complex)
    s2 = float(ctx.sigma_ap2[j])
    c = shrinkage(beta_kj, ctx.p_ac, ctx.T, s2)
    z = (rng.standard_normal(h_kj.shape) + 1j * rng.standard_normal(h_kj.shape)) \
        * math.sqrt(s2 / (2.0 * ctx.p_ac * ctx.T))
    return c * (h_kj + z)


def estimate_all(real: ChannelRealization, cfg: "ScenarioConfig",
                 rng: np.random.Generator) -> ChannelRealization:
    if cfg.csi == "perfect":
        return replace(real, h_hat=real.h)
    ctx = EstimationContext.from_config(cfg)
    n = rng.standard_normal(real.h.shape + (2,))
    h_hat = estimate_from_normals(real.h, real.beta, ctx, cfg.deployment.M, n)
    return replace(real, h_hat=h_hat)
