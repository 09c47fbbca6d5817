"""Variability-weighted rewards and actor multi-critic training."""

from ._vwrrl import (
    Environment,
    InputError,
    StateError,
    TrainingError,
    UsageError,
    __version__,
    compute_returns,
    default_config,
    env_names,
    make_env,
    run_cli,
    sparseness,
    train,
    vwr,
)

__all__ = [
    "Environment",
    "InputError",
    "StateError",
    "TrainingError",
    "UsageError",
    "__version__",
    "compute_returns",
    "default_config",
    "env_names",
    "make_env",
    "run_cli",
    "sparseness",
    "train",
    "vwr",
]
