"""Change-point detection and restart-based RL for piecewise-stationary MDPs."""

from .agents import (
    AgentEvent,
    OracleRestartAgent,
    RbocpdUcrl2Agent,
    RestartedUcrl2Agent,
    SlidingWindowUcrl2Agent,
    Ucrl2Agent,
)
from .bench import (
    AgentSpec,
    ExperimentConfig,
    emit_outputs,
    run_experiment,
    run_realization,
)
from .envs import (
    GenConfig,
    MdpSpec,
    SwitchingMdp,
    diameter,
    env_step,
    generate_switching,
    make_env,
    optimal_gain,
)

__version__ = "0.1.0"

__all__ = [
    "AgentEvent",
    "AgentSpec",
    "ExperimentConfig",
    "GenConfig",
    "MdpSpec",
    "OracleRestartAgent",
    "RbocpdUcrl2Agent",
    "RestartedUcrl2Agent",
    "SlidingWindowUcrl2Agent",
    "SwitchingMdp",
    "Ucrl2Agent",
    "diameter",
    "emit_outputs",
    "env_step",
    "generate_switching",
    "make_env",
    "optimal_gain",
    "run_experiment",
    "run_realization",
]
