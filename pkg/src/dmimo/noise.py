"""Thermal noise floor and Bernoulli-gated impulsive noise at the ACs."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any, Mapping

import numpy as np

from .errors import ConfigError

THERMAL_PSD_DBM_HZ = -174.0


@dataclass(frozen=True)
class ImpulsiveNoiseParams:
    gamma_linear: float = 1000.0  # impulsive-to-thermal power ratio (30 dB)
    epsilon: float = 0.0          # per-transmission event probability

    def check(self) -> list[tuple[str, str]]:
        errs = []
        if not (math.isfinite(self.gamma_linear) and self.gamma_linear >= 0):
            errs.append(("gamma_db", "impulsive power ratio must be >= 0"))
        if not 0.0 <= self.epsilon <= 1.0:
            errs.append(("epsilon", "must lie in [0, 1]"))
        return errs

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "ImpulsiveNoiseParams":
        if not isinstance(d, Mapping):
            raise ConfigError("expected an object", "impulsive")
        unknown = sorted(set(d) - {"gamma_db", "epsilon"})
        if unknown:
            raise ConfigError(f"unknown key(s): {', '.join(unknown)}", f"impulsive.{unknown[0]}")
        kw = {}
        if "gamma_db" in d:
            kw["gamma_linear"] = 10.0 ** (float(d["gamma_db"]) / 10.0)
        if "epsilon" in d:
            kw["epsilon"] = float(d["epsilon"])
        return cls(**kw)

    def to_dict(self) -> dict[str, float]:
        gamma_db = 10.0 * math.log10(self.gamma_linear) if self.gamma_linear > 0 else float("-inf")
        return {"gamma_db": gamma_db, "epsilon": self.epsilon}


@dataclass(frozen=True)
class NoiseVector:
    sigma_w2: float          # thermal noise power incl. noise figure, W
    sigma_ki2: np.ndarray    # (K,) impulsive power per AC, W

    @property
    def sigma_k2(self) -> np.ndarray:
        return self.sigma_w2 + self.sigma_ki2

    @property
    def events(self) -> np.ndarray:
        return self.sigma_ki2 > 0


def thermal_noise_power(bandwidth_hz: float, noise_figure_db: float) -> float:
    """Thermal noise power in watts over ``bandwidth_hz``."""
    if not bandwidth_hz > 0:
        raise ValueError("bandwidth must be positive")
    dbm = THERMAL_PSD_DBM_HZ + 10.0 * math.log10(bandwidth_hz) + noise_figure_db
    return 10.0 ** ((dbm - 30.0) / 10.0)


def impulsive_from_uniforms(params: ImpulsiveNoiseParams, sigma_w2: float, u):
    """Impulsive powers from pre-drawn uniforms: an event occurs iff ``u < epsilon``."""
    return params.gamma_linear * sigma_w2 * (np.asarray(u) < params.epsilon)


def sample_impulsive(params: ImpulsiveNoiseParams, sigma_w2: float, K: int,
                     rng: np.random.Generator) -> NoiseVector:
    return NoiseVector(sigma_w2=sigma_w2,
                       sigma_ki2=impulsive_from_uniforms(params, sigma_w2, rng.random(K)))
