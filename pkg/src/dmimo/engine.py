"""Monte Carlo campaigns: per-drop pipeline, seeding, parallel blocks, sweeps.

Every drop owns a Philox stream keyed by ``derive_seed(master_seed, drop)``.
A drop reads its variates in a fixed layout (uniforms, then channel normals,
then pilot-noise normals), so two configurations run with the same master seed
see the same AC positions, fading and impulsive events wherever their
dimensions agree. The pipeline itself is vectorised over
blocks of drops; since each drop's variates depend only on its own key, the
block size and the number of worker processes never change the result.
"""
from __future__ import annotations

import logging
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np

from . import kernels
from .beamforming import COND_REPORT_THRESHOLD, anchors, precoder_batch
from .channel import fading_from_normals, large_scale_from_variates, link_distances
from .csi import EstimationContext, estimate_from_normals
from .errors import ConfigError, DmimoError, DropError, NumericalError
from .metrics import SinrDistribution
from .noise import impulsive_from_uniforms, thermal_noise_power
from .power import mpa_solve_batch, mpa_terms
from .scenario import ScenarioConfig, evolve, positions_from_uniforms, validate_config

log = logging.getLogger(__name__)

BLOCK_SIZE = 2048
SWEEP_PARAMETERS = ("K", "epsilon", "J", "scheme", "mode", "power_rule", "csi")
_MASK64 = (1 << 64) - 1
_DROP_FAILURES = (DmimoError, ArithmeticError, ValueError, np.linalg.LinAlgError)


def derive_seed(master_seed: int, drop_index: int) -> int:
    """128-bit Philox key for one drop: master seed in the high word, index in the low.

    The packing is injective, so distinct drops never share a stream; Philox's
    keyed rounds do the bit mixing.
    """
    if drop_index < 0 or drop_index > _MASK64:
        raise ValueError("drop index out of range")
    return ((int(master_seed) & _MASK64) << 64) | int(drop_index)


def default_workers() -> int:
    try:
        return max(1, int(os.environ.get("DMIMO_WORKERS", "1")))
    except ValueError:
        return 1


class _DropStream:
    """One reusable Philox generator re-keyed per drop."""

    def __init__(self):
        self.bitgen = np.random.Philox(key=0)
        self.gen = np.random.Generator(self.bitgen)

    def seek(self, key: int) -> np.random.Generator:
        self.bitgen.state = {
            "bit_generator": "Philox",
            "state": {
                "counter": np.zeros(4, dtype=np.uint64),
                "key": np.array([key & _MASK64, key >> 64], dtype=np.uint64),
            },
            "buffer": np.zeros(4, dtype=np.uint64),
            "buffer_pos": 4,
            "has_uint32": 0,
            "uinteger": 0,
        }
        return self.gen


@dataclass
class DropResult:
    sinr: np.ndarray                         # (K,) linear
    diagnostics: dict[str, float] = field(default_factory=dict)


@dataclass
class BlockResult:
    sinr: np.ndarray                         # (B, K)
    diagnostics: dict[str, np.ndarray]


@dataclass
class CampaignResult:
    distribution: SinrDistribution
    config: ScenarioConfig
    master_seed: int
    n_drops: int
    wall_time: float
    diagnostics: dict[str, np.ndarray]
    failed_drops: list[int] = field(default_factory=list)


def _layout(cfg: ScenarioConfig):
    K, J, N = cfg.K, cfg.deployment.J, cfg.deployment.M_TOT
    return K * (2 + J + 1), K * J + 2 * K * N, 2 * K * N


def draw_variates(cfg: ScenarioConfig, keys: Sequence[int]):
    """Per-drop uniforms, normals and pilot-noise normals, one row per key."""
    nu, nn, ne = _layout(cfg)
    B = len(keys)
    U = np.empty((B, nu))
    N = np.empty((B, nn))
    E = np.empty((B, ne)) if cfg.csi == "estimated" else None
    stream = _DropStream()
    for b, key in enumerate(keys):
        gen = stream.seek(key)
        gen.random(out=U[b])
        gen.standard_normal(out=N[b])
        if E is not None:
            gen.standard_normal(out=E[b])
    return U, N, E


@dataclass
class BlockRealization:
    """Everything random about a block of drops, before precoding."""
    h: np.ndarray              # (B, K, M_TOT) true channels
    h_hat: np.ndarray          # (B, K, M_TOT) estimates (``h`` itself under perfect CSI)
    beta: np.ndarray           # (B, K, J)
    los: np.ndarray            # (B, K, J)
    sigma_w2: float
    sigma_ki2: np.ndarray      # (B, K)

    @property
    def sigma2(self) -> np.ndarray:
        return self.sigma_w2 + self.sigma_ki2


def realize_block(cfg: ScenarioConfig, keys: Sequence[int]) -> BlockRealization:
    """AC drops, channels, impulsive noise and channel estimates for a block of keys."""
    U, Nrm, E = draw_variates(cfg, keys)
    B = len(keys)
    K, dep, bud = cfg.K, cfg.deployment, cfg.budget
    J, M, N = dep.J, dep.M, dep.M_TOT

    pos = positions_from_uniforms(U[:, :2 * K].reshape(B, K, 2), cfg.hall)
    d2, d3 = link_distances(dep.ap_positions, pos)
    beta, los = large_scale_from_variates(
        d2, d3, bud.carrier_ghz, cfg.channel_params,
        U[:, 2 * K:2 * K + K * J].reshape(B, K, J), Nrm[:, :K * J].reshape(B, K, J))
    h = fading_from_normals(beta, Nrm[:, K * J:].reshape(B, K, N, 2), M)

    sigma_w2 = thermal_noise_power(bud.bandwidth_hz, bud.noise_figure_db)
    sigma_ki2 = impulsive_from_uniforms(cfg.impulsive, sigma_w2, U[:, 2 * K + K * J:])

    if E is None:
        h_hat = h
    else:
        ctx = EstimationContext.from_config(cfg)
        h_hat = estimate_from_normals(h, beta, ctx, M, E.reshape(B, K, N, 2))
    return BlockRealization(h=h, h_hat=h_hat, beta=beta, los=los, sigma_w2=sigma_w2,
                            sigma_ki2=sigma_ki2)


def simulate_block(cfg: ScenarioConfig, keys: Sequence[int]) -> BlockResult:
    """Run the full per-drop pipeline for a block of drop keys."""
    r = realize_block(cfg, keys)
    h, h_hat, beta, los, sigma_ki2, sigma2 = r.h, r.h_hat, r.beta, r.los, r.sigma_ki2, r.sigma2
    B, K, J, bud = len(keys), cfg.K, cfg.deployment.J, cfg.budget

    G, cond = precoder_batch(cfg.mode, cfg.scheme, h_hat, anchors(beta), J)

    if cfg.power_rule == "EPA":
        P = np.full((B, K), bud.p_ap_total / K)
    else:
        A_hat = kernels.cross_gains(h_hat, G)
        R, f = mpa_terms(A_hat, sigma2)
        q = np.sum(np.abs(G) ** 2, axis=-2)
        P = mpa_solve_batch(R, f, q, bud.p_ap_total)

    A = kernels.cross_gains(h, G)
    sinr = kernels.sinr_from_gains(A, P, sigma2)
    if not np.all(np.isfinite(sinr) & (sinr > 0)):
        raise NumericalError("non-positive or non-finite SINR")

    off = ~np.eye(K, dtype=bool)
    signal = np.diagonal(A, axis1=-2, axis2=-1)
    cross_ratio = np.max(np.where(off, A, 0.0) / signal[:, :, None], axis=(1, 2)) if K > 1 \
        else np.zeros(B)
    diag = {
        "zf_condition_number": np.asarray(cond, dtype=float).reshape(B),
        "n_impulsive_events": np.count_nonzero(sigma_ki2 > 0, axis=1),
        "n_los_links": np.count_nonzero(los, axis=(1, 2)),
        "min_power": P.min(axis=1),
        "max_power": P.max(axis=1),
        "max_cross_to_signal": cross_ratio,
    }
    return BlockResult(sinr=sinr, diagnostics=diag)


def run_drop(cfg: ScenarioConfig, drop_seed: int) -> DropResult:
    """One drop, deterministic in ``(cfg, drop_seed)``."""
    res = simulate_block(cfg, [drop_seed])
    return DropResult(sinr=res.sinr[0],
                      diagnostics={k: v[0].item() for k, v in res.diagnostics.items()})


def _run_range(args) -> tuple[int, BlockResult | None, list[int]]:
    cfg, master_seed, start, stop, skip_failed = args
    keys = [derive_seed(master_seed, i) for i in range(start, stop)]
    try:
        return start, simulate_block(cfg, keys), []
    except _DROP_FAILURES:
        pass
    # locate the failing drop(s) one at a time
    parts, failed = [], []
    for i, key in zip(range(start, stop), keys):
        try:
            parts.append((i, simulate_block(cfg, [key])))
        except _DROP_FAILURES as exc:
            if not skip_failed:
                raise DropError(i, exc) from exc
            failed.append(i)
    if not parts:
        return start, None, failed
    res = BlockResult(
        sinr=np.concatenate([p.sinr for _, p in parts]),
        diagnostics={k: np.concatenate([p.diagnostics[k] for _, p in parts])
                     for k in parts[0][1].diagnostics},
    )
    return start, res, failed


def run_campaign(cfg: ScenarioConfig, n_drops: int, master_seed: int,
                 workers: int | None = None, skip_failed: bool = False,
                 block_size: int = BLOCK_SIZE) -> CampaignResult:
    """Run ``n_drops`` drops and pool their SINRs.

    The outcome depends only on ``(cfg, n_drops, master_seed)``; ``workers``
    and ``block_size`` only affect speed. Failing drops abort the campaign
    unless ``skip_failed`` is set, in which case they are listed in
    ``failed_drops`` and left out of the distribution.
    """
    if int(n_drops) != n_drops or n_drops < 1:
        raise ConfigError("drops must be >= 1", "n_drops")
    validate_config(cfg)
    workers = default_workers() if workers is None else max(1, int(workers))
    t0 = time.perf_counter()
    tasks = [(cfg, master_seed, s, min(s + block_size, n_drops), skip_failed)
             for s in range(0, n_drops, block_size)]
    if workers == 1 or len(tasks) == 1:
        outs = [_run_range(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            outs = list(pool.map(_run_range, tasks))
    outs.sort(key=lambda o: o[0])

    failed = sorted(i for _, _, fl in outs for i in fl)
    blocks = [r for _, r, _ in outs if r is not None]
    if not blocks:
        raise NumericalError("every drop failed")
    sinr = np.concatenate([b.sinr for b in blocks])
    diag = {k: np.concatenate([b.diagnostics[k] for b in blocks]) for k in blocks[0].diagnostics}
    drops = np.setdiff1d(np.arange(n_drops), failed) if failed else np.arange(n_drops)
    K = cfg.K
    dist = SinrDistribution(sinr.ravel(), np.repeat(drops, K), np.tile(np.arange(K), drops.size))
    n_ill = int(np.count_nonzero(diag["zf_condition_number"] > COND_REPORT_THRESHOLD))
    if n_ill:
        log.info("%d drops with ZF condition number above %.0e", n_ill, COND_REPORT_THRESHOLD)
    return CampaignResult(distribution=dist, config=cfg, master_seed=int(master_seed),
                          n_drops=int(n_drops), wall_time=time.perf_counter() - t0,
                          diagnostics=diag, failed_drops=failed)


@dataclass
class SweepEntry:
    value: Any
    result: CampaignResult | None
    error: str | None = None


def sweep_config(base_cfg: ScenarioConfig, parameter: str, value: Any) -> ScenarioConfig:
    if parameter not in SWEEP_PARAMETERS:
        raise ConfigError(f"unsupported sweep parameter {parameter!r}", "param")
    return validate_config(evolve(base_cfg, **{parameter: value}))


def run_sweep(base_cfg: ScenarioConfig, parameter: str, values: Sequence[Any],
              n_drops: int, master_seed: int, workers: int | None = None) -> list[SweepEntry]:
    """One campaign per value, all with the same master seed (common random numbers)."""
    if parameter not in SWEEP_PARAMETERS:
        raise ConfigError(f"unsupported sweep parameter {parameter!r}", "param")
    out = []
    for v in values:
        try:
            cfg = sweep_config(base_cfg, parameter, v)
        except ConfigError as exc:
            log.warning("sweep value %s=%r rejected: %s", parameter, v, exc)
            out.append(SweepEntry(v, None, str(exc)))
            continue
        out.append(SweepEntry(v, run_campaign(cfg, n_drops, master_seed, workers)))
    return out
