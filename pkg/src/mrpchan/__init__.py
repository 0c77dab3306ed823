from .config import RunConfig, load_run_config
from .core import (
    ChannelDomainError,
    ConstraintSet,
    InfeasibleConstraintsError,
    MalformedInputError,
    MeasuredTargets,
    MrpchanError,
    RandomStream,
    RpPlacement,
    validate_placement,
)
from .monostatic import ChannelRealization, compose_channel
from .optimizer import GaConfig, OptimizationResult, run_ga
from .scenario import ScenarioConfig, load_scenario
from .stats import ChannelStats, PathList, channel_stats

__all__ = (
    "ChannelDomainError",
    "ChannelRealization",
    "ChannelStats",
    "ConstraintSet",
    "GaConfig",
    "InfeasibleConstraintsError",
    "MalformedInputError",
    "MeasuredTargets",
    "MrpchanError",
    "OptimizationResult",
    "PathList",
    "RandomStream",
    "RpPlacement",
    "RunConfig",
    "ScenarioConfig",
    "channel_stats",
    "compose_channel",
    "load_run_config",
    "load_scenario",
    "run_ga",
    "validate_placement",
)
