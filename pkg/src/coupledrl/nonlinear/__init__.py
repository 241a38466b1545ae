"""Nonlinear parameterisations and the lite agents."""

from .agents import Adam, EpisodeStats, LiteAgent, ReplayBuffer, RunState, Schedule, SGD, run_episodes, train_step
from .counterexample import CounterexampleReport, sigmoid_cdf_counterexample
from .network import (
    MLP,
    Batch,
    HeadSpec,
    c51_lite_loss,
    dqn_lite_loss,
    loss_and_grads,
    s51_lite_loss,
    softmax,
)

__all__ = [
    "Adam", "Batch", "CounterexampleReport", "EpisodeStats", "HeadSpec", "LiteAgent", "MLP",
    "ReplayBuffer", "RunState", "SGD", "Schedule", "c51_lite_loss", "dqn_lite_loss",
    "loss_and_grads", "run_episodes", "s51_lite_loss", "sigmoid_cdf_counterexample", "softmax",
    "train_step",
]
