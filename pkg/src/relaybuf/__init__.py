"""Performance analysis of energy-buffer-aided incremental relaying.

Closed-form outage, throughput and limiting buffer laws for harvest-store-use
and harvest-use relays, checked against an exact Monte Carlo simulation of
the per-slot protocol and buffer chain.
"""
__version__ = "0.1.0"

from .errors import (ConfigError, ConsistencyError, DomainError, QuadratureError,
                     RelaybufError, StabilityError)
from .params import (BufferPolicy, DerivedConstants, Mode, PolicyKind, SystemParams,
                     derive_constants, load_config, default_scenario, params_from_config)
from .limitdist import LimitingDistribution, StabilityClass, limiting_distribution
from .performance import OutageResult, evaluate, outage, throughput
from .simkernel import SimEstimate, run

__all__ = [
    "ConfigError", "ConsistencyError", "DomainError", "QuadratureError", "RelaybufError",
    "StabilityError", "BufferPolicy", "DerivedConstants", "Mode", "PolicyKind",
    "SystemParams", "derive_constants", "load_config", "default_scenario", "params_from_config",
    "LimitingDistribution", "StabilityClass", "limiting_distribution", "OutageResult",
    "evaluate", "outage", "throughput", "SimEstimate", "run", "__version__",
]
