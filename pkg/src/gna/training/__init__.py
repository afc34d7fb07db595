"""Training regimes, schedules, replay buffer, and losses."""

from .buffer import ReplayBuffer
from .losses import free_energy_gradient, local_free_energy, partial_kl_loss
from .loops import (
    TrainRunConfig,
    checkpoint_revert,
    run_limited,
    run_unlimited,
    select_queries,
)
from .schedule import AnnealSchedule

__all__ = [
    "AnnealSchedule",
    "ReplayBuffer",
    "TrainRunConfig",
    "checkpoint_revert",
    "free_energy_gradient",
    "local_free_energy",
    "partial_kl_loss",
    "run_limited",
    "run_unlimited",
    "select_queries",
]
