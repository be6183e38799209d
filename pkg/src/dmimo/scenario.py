"""Factory geometry, AP deployments, AC drops and the scenario configuration.

All powers are kept in watts internally; dBm/dB values only appear when a
configuration is read from or written to a file.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Mapping

import numpy as np

from .channel import ChannelModelParams
from .errors import ConfigError
from .noise import ImpulsiveNoiseParams

MODES = ("SAT", "JT")
SCHEMES = ("MRT", "ZF", "CZF")
POWER_RULES = ("EPA", "MPA")
CSI_MODES = ("perfect", "estimated")


# ---------------------------------------------------------------------------
# unit conversions

def db_to_linear(x_db):
    return 10.0 ** (np.asarray(x_db, dtype=float) / 10.0)


def linear_to_db(x):
    return 10.0 * np.log10(x)


def dbm_to_watt(p_dbm):
    return 10.0 ** ((np.asarray(p_dbm, dtype=float) - 30.0) / 10.0)


def watt_to_dbm(p_w):
    return 10.0 * np.log10(p_w) + 30.0


# ---------------------------------------------------------------------------
# domain types

@dataclass(frozen=True)
class HallGeometry:
    length_m: float = 100.0
    width_m: float = 50.0
    height_m: float = 6.0
    ap_height_m: float = 6.0
    ac_height_m: float = 2.0

    def check(self) -> list[tuple[str, str]]:
        errs = []
        for name in ("length_m", "width_m", "height_m", "ap_height_m", "ac_height_m"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                errs.append((f"hall.{name}", "must be strictly positive"))
        if self.ap_height_m > self.height_m:
            errs.append(("hall.ap_height_m", "must not exceed hall height"))
        if self.ac_height_m >= self.ap_height_m:
            errs.append(("hall.ac_height_m", "must be below the AP height"))
        return errs


@dataclass(frozen=True)
class Deployment:
    """AP layout: ``J`` APs with ``M`` antennas each, ``M * J == M_TOT``.

    ``ap_positions`` is a (J, 3) array; AP ``j`` owns global antenna columns
    ``j*M .. (j+1)*M - 1``.
    """

    J: int
    M: int
    M_TOT: int
    ap_positions: np.ndarray = field(repr=False, compare=False)
    grid: tuple[int, int] = (1, 1)

    def check(self, hall: HallGeometry) -> list[tuple[str, str]]:
        errs = []
        if self.M * self.J != self.M_TOT:
            errs.append(("deployment", f"J must divide M_TOT (M * J = {self.M * self.J} != M_TOT = {self.M_TOT})"))
        pos = np.asarray(self.ap_positions)
        if pos.shape != (self.J, 3):
            errs.append(("deployment.ap_positions", f"expected shape ({self.J}, 3)"))
        else:
            inside = (
                (pos[:, 0] >= 0) & (pos[:, 0] <= hall.length_m)
                & (pos[:, 1] >= 0) & (pos[:, 1] <= hall.width_m)
                & np.isclose(pos[:, 2], hall.ap_height_m)
            )
            if not inside.all():
                errs.append(("deployment.ap_positions", "APs must lie inside the hall at ap_height_m"))
        return errs

    def block(self, j: int) -> slice:
        """Global antenna indices of AP ``j`` (0-based)."""
        return slice(j * self.M, (j + 1) * self.M)


@dataclass(frozen=True)
class RadioBudget:
    """Link budget on the simulated sub-band (watts, hertz)."""

    p_ap_total: float = 10.0 ** ((21.0 - 30.0) / 10.0)
    p_ac: float = 10.0 ** ((20.0 - 30.0) / 10.0)
    bandwidth_hz: float = 10e6
    carrier_hz: float = 3.5e9
    noise_figure_db: float = 7.0
    T: int = 4

    @property
    def carrier_ghz(self) -> float:
        return self.carrier_hz / 1e9

    def check(self) -> list[tuple[str, str]]:
        errs = []
        for name in ("p_ap_total", "p_ac", "bandwidth_hz", "carrier_hz"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                errs.append((f"budget.{name}", "must be strictly positive"))
        if not math.isfinite(self.noise_figure_db):
            errs.append(("budget.noise_figure_db", "must be finite"))
        if int(self.T) != self.T or self.T < 1:
            errs.append(("budget.T", "pilot length must be an integer >= 1"))
        return errs


@dataclass(frozen=True)
class ScenarioConfig:
    hall: HallGeometry
    deployment: Deployment
    budget: RadioBudget
    K: int = 4
    mode: str = "JT"
    scheme: str = "ZF"
    power_rule: str = "EPA"
    csi: str = "perfect"
    impulsive: ImpulsiveNoiseParams = field(default_factory=ImpulsiveNoiseParams)
    channel_params: ChannelModelParams = field(default_factory=ChannelModelParams)

    @property
    def J(self) -> int:
        return self.deployment.J

    @property
    def M(self) -> int:
        return self.deployment.M

    @property
    def M_TOT(self) -> int:
        return self.deployment.M_TOT


# ---------------------------------------------------------------------------
# operations

def grid_shape(J: int, length_m: float, width_m: float) -> tuple[int, int]:
    """Pick the ``a x b`` grid (``a`` cells along the length) for ``J`` APs.

    Cells are made as square as possible; among equally square options the
    grid with the most balanced ``a``/``b`` wins (J=4 -> 2x2, J=16 -> 4x4).
    """
    if int(J) != J or J < 1:
        raise ConfigError("number of APs must be a positive integer", "deployment.J")
    J = int(J)
    best = None
    for a in range(1, J + 1):
        if J % a:
            continue
        b = J // a
        cell_skew = abs(math.log((length_m / a) / (width_m / b)))
        grid_skew = abs(math.log(a / b))
        key = (round(cell_skew, 12), round(grid_skew, 12), -a)
        if best is None or key < best[0]:
            best = (key, (a, b))
    return best[1]


def place_aps(J: int, hall: HallGeometry, M_TOT: int) -> Deployment:
    """Put ``J`` APs at the centroids of a regular grid of congruent cells."""
    if int(M_TOT) != M_TOT or M_TOT < 1:
        raise ConfigError("M_TOT must be a positive integer", "deployment.M_TOT")
    if int(J) != J or J < 1:
        raise ConfigError("J must be a positive integer", "deployment.J")
    J, M_TOT = int(J), int(M_TOT)
    if M_TOT % J:
        raise ConfigError(f"J must divide M_TOT (J={J}, M_TOT={M_TOT})", "deployment.J")
    a, b = grid_shape(J, hall.length_m, hall.width_m)
    dx, dy = hall.length_m / a, hall.width_m / b
    # row-major over y then x: AP index j = iy * a + ix
    xs = (np.arange(a) + 0.5) * dx
    ys = (np.arange(b) + 0.5) * dy
    gx, gy = np.meshgrid(xs, ys)
    pos = np.column_stack([gx.ravel(), gy.ravel(), np.full(J, hall.ap_height_m)])
    return Deployment(J=J, M=M_TOT // J, M_TOT=M_TOT, ap_positions=pos, grid=(a, b))


def positions_from_uniforms(u: np.ndarray, hall: HallGeometry) -> np.ndarray:
    """Map ``(..., K, 2)`` uniforms on [0, 1) to AC positions ``(..., K, 3)``."""
    u = np.asarray(u, dtype=float)
    out = np.empty(u.shape[:-1] + (3,))
    out[..., 0] = u[..., 0] * hall.length_m
    out[..., 1] = u[..., 1] * hall.width_m
    out[..., 2] = hall.ac_height_m
    return out


def drop_acs(K: int, hall: HallGeometry, rng: np.random.Generator) -> np.ndarray:
    """Drop ``K`` ACs uniformly on the floor rectangle at ``ac_height_m``."""
    if int(K) != K or K < 1:
        raise ConfigError("K must be an integer >= 1", "K")
    return positions_from_uniforms(rng.random((int(K), 2)), hall)


def validate_config(cfg: ScenarioConfig) -> ScenarioConfig:
    """Check every invariant; raise one ConfigError listing all violations."""
    errs: list[tuple[str, str]] = []
    errs += cfg.hall.check()
    errs += cfg.budget.check()
    if not errs:
        errs += cfg.deployment.check(cfg.hall)
    errs += [(f"impulsive.{f}", m) for f, m in cfg.impulsive.check()]
    errs += [(f"channel.{f}", m) for f, m in cfg.channel_params.check()]
    if int(cfg.K) != cfg.K or cfg.K < 1:
        errs.append(("K", "K must be an integer >= 1"))
    for name, allowed in (("mode", MODES), ("scheme", SCHEMES),
                          ("power_rule", POWER_RULES), ("csi", CSI_MODES)):
        if getattr(cfg, name) not in allowed:
            errs.append((name, f"must be one of {', '.join(allowed)}"))
    if cfg.csi == "estimated" and cfg.budget.T < cfg.K:
        errs.append(("budget.T", f"T >= K required for orthogonal pilots (T={cfg.budget.T}, K={cfg.K})"))
    if cfg.scheme == "CZF" and cfg.mode != "SAT":
        errs.append(("scheme", "CZF requires mode SAT (under JT it coincides with ZF)"))
    if cfg.scheme == "ZF" and cfg.mode == "JT" and cfg.K > cfg.deployment.M_TOT:
        errs.append(("K", f"JT-ZF needs M_TOT >= K (M_TOT={cfg.deployment.M_TOT}, K={cfg.K})"))
    if errs:
        raise ConfigError("; ".join(f"{f}: {m}" for f, m in errs)) from None
    return cfg


# ---------------------------------------------------------------------------
# construction helpers and file I/O

def default_config(**changes: Any) -> ScenarioConfig:
    """Baseline scenario (K=4, J=4, JT, ZF, EPA, perfect CSI, T=4), validated.

    Keyword arguments are applied with :func:`evolve`.
    """
    hall = HallGeometry()
    cfg = ScenarioConfig(hall=hall, deployment=place_aps(4, hall, 64), budget=RadioBudget())
    return validate_config(evolve(cfg, **changes)) if changes else cfg


_EVOLVE_BUDGET = {"T", "p_ap_total", "p_ac", "bandwidth_hz", "carrier_hz", "noise_figure_db"}
_EVOLVE_TOP = {"K", "mode", "scheme", "power_rule", "csi", "impulsive", "channel_params",
               "hall", "budget"}


def evolve(cfg: ScenarioConfig, **changes: Any) -> ScenarioConfig:
    """Return a copy of ``cfg`` with selected fields changed.

    Accepts top-level fields plus the shortcuts ``J``, ``M_TOT``, ``T`` (and the
    other budget fields), ``epsilon`` and ``gamma_db``. Changing ``J`` or
    ``M_TOT`` re-places the APs.
    """
    top: dict[str, Any] = {}
    budget: dict[str, Any] = {}
    imp: dict[str, Any] = {}
    J = cfg.deployment.J
    M_TOT = cfg.deployment.M_TOT
    for key, val in changes.items():
        if key in _EVOLVE_TOP:
            top[key] = val
        elif key in _EVOLVE_BUDGET:
            budget[key] = val
        elif key == "J":
            J = int(val)
        elif key == "M_TOT":
            M_TOT = int(val)
        elif key == "epsilon":
            imp["epsilon"] = float(val)
        elif key == "gamma_db":
            imp["gamma_linear"] = float(db_to_linear(float(val)))
        else:
            raise ConfigError(f"unknown field {key!r}", key)
    if "K" in top:
        top["K"] = int(top["K"])
    hall = top.get("hall", cfg.hall)
    if budget:
        top["budget"] = replace(top.get("budget", cfg.budget), **budget)
    if imp:
        top["impulsive"] = replace(top.get("impulsive", cfg.impulsive), **imp)
    if J != cfg.deployment.J or M_TOT != cfg.deployment.M_TOT or "hall" in top:
        top["deployment"] = place_aps(J, hall, M_TOT)
    return replace(cfg, **top)


_SECTIONS = {
    "hall": {"length_m", "width_m", "height_m", "ap_height_m", "ac_height_m"},
    "deployment": {"J", "M_TOT"},
    "budget": {"p_ap_dbm", "p_ac_dbm", "bandwidth_hz", "carrier_hz", "noise_figure_db", "T"},
}
_TOP_KEYS = {"hall", "deployment", "budget", "K", "mode", "scheme", "power_rule", "csi",
             "impulsive", "channel"}


def _check_keys(d: Mapping, allowed: set, where: str) -> None:
    if not isinstance(d, Mapping):
        raise ConfigError("expected an object", where or None)
    unknown = sorted(set(d) - allowed)
    if unknown:
        prefix = f"{where}." if where else ""
        raise ConfigError(f"unknown key(s): {', '.join(unknown)}", prefix + unknown[0])


def config_from_dict(d: Mapping[str, Any]) -> ScenarioConfig:
    """Build a validated config from the JSON-compatible file layout.

    Missing keys fall back to the baseline scenario; unknown keys are errors.
    """
    _check_keys(d, _TOP_KEYS, "")
    for sec, keys in _SECTIONS.items():
        if sec in d:
            _check_keys(d[sec], keys, sec)
    base = default_config()
    try:
        hall = replace(base.hall, **{k: float(v) for k, v in d.get("hall", {}).items()})
        dep = d.get("deployment", {})
        b = dict(d.get("budget", {}))
        bkw: dict[str, Any] = {}
        if "p_ap_dbm" in b:
            bkw["p_ap_total"] = dbm_to_watt(float(b.pop("p_ap_dbm")))
        if "p_ac_dbm" in b:
            bkw["p_ac"] = dbm_to_watt(float(b.pop("p_ac_dbm")))
        if "T" in b:
            T = b.pop("T")
            if isinstance(T, bool) or not isinstance(T, (int, float)) or int(T) != T:
                raise ConfigError("pilot length must be an integer", "budget.T")
            bkw["T"] = int(T)
        bkw.update({k: float(v) for k, v in b.items()})
        budget = replace(base.budget, **bkw)
        imp = ImpulsiveNoiseParams.from_dict(d.get("impulsive", {}))
        chan = ChannelModelParams.from_dict(d.get("channel", {}))
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc)) from None
    errs = hall.check()
    if errs:
        raise ConfigError("; ".join(f"{f}: {m}" for f, m in errs))
    K = d.get("K", base.K)
    if isinstance(K, bool) or not isinstance(K, (int, float)) or int(K) != K:
        raise ConfigError("K must be an integer", "K")
    deployment = place_aps(dep.get("J", base.J), hall, dep.get("M_TOT", base.M_TOT))
    cfg = ScenarioConfig(
        hall=hall,
        deployment=deployment,
        budget=budget,
        K=int(K),
        mode=d.get("mode", base.mode),
        scheme=d.get("scheme", base.scheme),
        power_rule=d.get("power_rule", base.power_rule),
        csi=d.get("csi", base.csi),
        impulsive=imp,
        channel_params=chan,
    )
    return validate_config(cfg)


def config_to_dict(cfg: ScenarioConfig) -> dict[str, Any]:
    """Inverse of :func:`config_from_dict` with every default materialized."""
    b = cfg.budget
    return {
        "hall": {
            "length_m": cfg.hall.length_m,
            "width_m": cfg.hall.width_m,
            "height_m": cfg.hall.height_m,
            "ap_height_m": cfg.hall.ap_height_m,
            "ac_height_m": cfg.hall.ac_height_m,
        },
        "deployment": {"J": cfg.deployment.J, "M_TOT": cfg.deployment.M_TOT},
        "budget": {
            "p_ap_dbm": float(watt_to_dbm(b.p_ap_total)),
            "p_ac_dbm": float(watt_to_dbm(b.p_ac)),
            "bandwidth_hz": b.bandwidth_hz,
            "carrier_hz": b.carrier_hz,
            "noise_figure_db": b.noise_figure_db,
            "T": int(b.T),
        },
        "K": cfg.K,
        "mode": cfg.mode,
        "scheme": cfg.scheme,
        "power_rule": cfg.power_rule,
        "csi": cfg.csi,
        "impulsive": cfg.impulsive.to_dict(),
        "channel": cfg.channel_params.to_dict(),
    }


def load_config(path: str | Path) -> ScenarioConfig:
    try:
        with open(path) as fh:
            data = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"not valid JSON: {exc}") from None
    return config_from_dict(data)
