"""Monte Carlo simulator for downlink distributed MIMO in an indoor factory.

Typical use::

    from dmimo import default_config, run_campaign, availability
    cfg = default_config(J=16, scheme="ZF", power_rule="MPA", csi="estimated")
    res = run_campaign(cfg, n_drops=100_000, master_seed=1)
    print(availability(res.distribution, 1e-5))
"""
from .engine import derive_seed, run_campaign, run_drop, run_sweep
from .errors import ConfigError, NumericalError, PrecoderError
from .kernels import BACKEND as KERNEL_BACKEND
from .metrics import SinrDistribution, availability, empirical_quantile, sinr
from .scenario import ScenarioConfig, config_from_dict, default_config, evolve, validate_config

__version__ = "0.1.0"

__all__ = [
    "ConfigError", "KERNEL_BACKEND", "NumericalError", "PrecoderError", "ScenarioConfig",
    "SinrDistribution", "availability", "config_from_dict", "default_config", "derive_seed",
    "empirical_quantile", "evolve", "run_campaign", "run_drop", "run_sweep", "sinr",
    "validate_config",
]
