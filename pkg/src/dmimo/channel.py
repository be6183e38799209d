"""Large-scale gains and Rayleigh fading for AC-AP links.

Path loss follows the log-distance form ``A + B log10(d_3d) + C log10(f_GHz)``
with separate LOS/NLOS coefficient triples, log-normal shadowing per state,
and an exponential LOS probability ``exp(-d_2d / los_decay_m)``. The default
constants are those of the dense-clutter indoor-factory model; every constant
can be overridden from the configuration file.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Any, Mapping

import numpy as np

from .errors import ConfigError

if TYPE_CHECKING:
    from .scenario import ScenarioConfig


@dataclass(frozen=True)
class PathLossTriple:
    a: float  # intercept, dB
    b: float  # distance coefficient, dB per decade of metres
    c: float  # frequency coefficient, dB per decade of GHz

    def __call__(self, d_3d, f_ghz):
        return self.a + self.b * np.log10(d_3d) + self.c * np.log10(f_ghz)


@dataclass(frozen=True)
class ChannelModelParams:
    pl_los: PathLossTriple = field(default_factory=lambda: PathLossTriple(31.84, 21.50, 19.00))
    pl_nlos: PathLossTriple = field(default_factory=lambda: PathLossTriple(33.63, 21.90, 20.00))
    shadow_sigma_los_db: float = 4.3
    shadow_sigma_nlos_db: float = 4.0
    # P_LOS(20 m) = 0.1
    los_decay_m: float = 20.0 / math.log(10.0)
    d_min_m: float = 1.0

    def check(self) -> list[tuple[str, str]]:
        errs = []
        for name in ("pl_los", "pl_nlos"):
            t = getattr(self, name)
            if not all(math.isfinite(x) for x in (t.a, t.b, t.c)):
                errs.append((name, "coefficients must be finite"))
        for name in ("shadow_sigma_los_db", "shadow_sigma_nlos_db"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v >= 0):
                errs.append((name, "must be finite and >= 0"))
        if not self.los_decay_m > 0:
            errs.append(("los_decay_m", "must be > 0"))
        if not (math.isfinite(self.d_min_m) and self.d_min_m > 0):
            errs.append(("d_min_m", "must be > 0"))
        return errs

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "ChannelModelParams":
        allowed = {"pl_los", "pl_nlos", "shadow_sigma_los_db", "shadow_sigma_nlos_db",
                   "los_decay_m", "d_min_m"}
        if not isinstance(d, Mapping):
            raise ConfigError("expected an object", "channel")
        unknown = sorted(set(d) - allowed)
        if unknown:
            raise ConfigError(f"unknown key(s): {', '.join(unknown)}", f"channel.{unknown[0]}")
        kw: dict[str, Any] = {}
        for name in ("pl_los", "pl_nlos"):
            if name in d:
                t = d[name]
                if not isinstance(t, Mapping) or set(t) != {"a", "b", "c"}:
                    raise ConfigError("expected exactly the keys a, b, c", f"channel.{name}")
                kw[name] = PathLossTriple(float(t["a"]), float(t["b"]), float(t["c"]))
        for name in ("shadow_sigma_los_db", "shadow_sigma_nlos_db", "los_decay_m", "d_min_m"):
            if name in d:
                kw[name] = float(d[name])
        return cls(**kw)

    def to_dict(self) -> dict[str, Any]:
        return {
            "pl_los": {"a": self.pl_los.a, "b": self.pl_los.b, "c": self.pl_los.c},
            "pl_nlos": {"a": self.pl_nlos.a, "b": self.pl_nlos.b, "c": self.pl_nlos.c},
            "shadow_sigma_los_db": self.shadow_sigma_los_db,
            "shadow_sigma_nlos_db": self.shadow_sigma_nlos_db,
            "los_decay_m": self.los_decay_m,
            "d_min_m": self.d_min_m,
        }


@dataclass(frozen=True)
class LargeScaleTable:
    beta: np.ndarray  # (K, J) linear power gains
    los: np.ndarray   # (K, J) bool


@dataclass
class ChannelRealization:
    """True channels ``h`` (K x M_TOT), their large-scale table and estimates.

    Row ``k`` of ``h`` is the concatenation of the per-AP blocks; antenna ``m``
    of AP ``j`` is column ``j*M + m``. ``h_hat`` stays ``None`` until the CSI
    stage fills it.
    """

    h: np.ndarray
    large_scale: LargeScaleTable
    h_hat: np.ndarray | None = None

    @property
    def beta(self) -> np.ndarray:
        return self.large_scale.beta


def los_probability(d_2d, params: ChannelModelParams):
    d_2d = np.asarray(d_2d, dtype=float)
    if np.any(d_2d < 0):
        raise ValueError("distance must be non-negative")
    return np.exp(-d_2d / params.los_decay_m)


def path_loss_db(d_3d, f_ghz, los, params: ChannelModelParams):
    """Path loss in dB; NLOS is floored at the LOS value for the same link."""
    d = np.maximum(np.asarray(d_3d, dtype=float), params.d_min_m)
    pl_los = params.pl_los(d, f_ghz)
    pl_nlos = np.maximum(params.pl_nlos(d, f_ghz), pl_los)
    return np.where(los, pl_los, pl_nlos)


def link_distances(ap_positions: np.ndarray, ac_positions: np.ndarray):
    """Horizontal and 3D distances, shape ``(..., K, J)``.

    ``ac_positions`` is ``(..., K, 3)``, ``ap_positions`` is ``(J, 3)``.
    """
    diff = ac_positions[..., :, None, :] - ap_positions[None, :, :]
    d2 = np.hypot(diff[..., 0], diff[..., 1])
    d3 = np.sqrt(d2 ** 2 + diff[..., 2] ** 2)
    return d2, d3


def large_scale_from_variates(d_2d, d_3d, f_ghz, params: ChannelModelParams,
                              los_u, shadow_n):
    """Map pre-drawn uniforms/normals to ``(beta, los)`` arrays.

    ``los_u`` are Uniform[0, 1) draws (LOS iff ``u < P_LOS``), ``shadow_n`` are
    standard normals scaled by the state's shadowing sigma.
    """
    los = np.asarray(los_u) < los_probability(d_2d, params)
    pl = path_loss_db(d_3d, f_ghz, los, params)
    sigma = np.where(los, params.shadow_sigma_los_db, params.shadow_sigma_nlos_db)
    beta = 10.0 ** (-(pl + sigma * shadow_n) / 10.0)
    return beta, los


def large_scale_gain(ap, ac, f_ghz: float, params: ChannelModelParams,
                     rng: np.random.Generator) -> tuple[float, bool]:
    """Draw the LOS state and shadowing of one link and return ``(beta, los)``."""
    ap = np.asarray(ap, dtype=float)
    ac = np.asarray(ac, dtype=float)
    d_2d = float(np.hypot(*(ac[:2] - ap[:2])))
    d_3d = float(np.linalg.norm(ac - ap))
    beta, los = large_scale_from_variates(d_2d, d_3d, f_ghz, params,
                                          rng.random(), rng.standard_normal())
    return float(beta), bool(los)


def fading_from_normals(beta: np.ndarray, n: np.ndarray, M: int) -> np.ndarray:
    """Scale unit complex Gaussians into Rayleigh blocks.

    ``beta`` is ``(..., K, J)``; ``n`` is real normals of shape
    ``(..., K, J*M, 2)`` (real/imag parts). Returns ``(..., K, J*M)`` complex.
    """
    g = (n[..., 0] + 1j * n[..., 1]) * math.sqrt(0.5)
    scale = np.repeat(np.sqrt(beta), M, axis=-1)
    return g * scale


def build_channel(cfg: "ScenarioConfig", ac_positions: np.ndarray,
                  rng: np.random.Generator) -> ChannelRealization:
    """One drop of large-scale gains plus i.i.d. Rayleigh fading."""
    dep = cfg.deployment
    K, J = ac_positions.shape[0], dep.J
    d2, d3 = link_distances(dep.ap_positions, ac_positions)
    beta, los = large_scale_from_variates(
        d2, d3, cfg.budget.carrier_ghz, cfg.channel_params,
        rng.random((K, J)), rng.standard_normal((K, J)))
    h = fading_from_normals(beta, rng.standard_normal((K, dep.M_TOT, 2)), dep.M)
    return ChannelRealization(h=h, large_scale=LargeScaleTable(beta=beta, los=los))
