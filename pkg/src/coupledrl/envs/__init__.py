"""Environments, features and the coupled sample stream."""

from .classic_control import Acrobot, CartPole, ClassicControlEnv
from .features import FourierBasis, fourier_features, n_fourier_features
from .finite import FiniteMDP, chain3, gridworld, random_finite, random_policy, uniform_policy
from .sampling import (
    SampleSource,
    TerminalStateError,
    TransitionSample,
    TransitionSampler,
    epsilon_greedy,
    greedy_action,
    sample_transition,
)

ENV_NAMES = ("chain3", "gridworld12", "cartpole", "acrobot", "random_finite")


def make_env(name: str, **params):
    """Build an environment by name.

    ``random_finite`` takes ``n_states``, ``n_actions``, ``n_reward_atoms``,
    ``seed`` and optionally ``gamma``/``r_max``. The classic-control tasks
    accept ``max_steps``.
    """
    if name == "chain3":
        return chain3(**params)
    if name == "gridworld12":
        return gridworld(12, **params)
    if name == "cartpole":
        return CartPole(**params)
    if name == "acrobot":
        return Acrobot(**params)
    if name == "random_finite":
        return random_finite(**params)
    raise ValueError(f"unknown environment {name!r}; choose from {ENV_NAMES}")


__all__ = [
    "Acrobot", "CartPole", "ClassicControlEnv", "ENV_NAMES", "FiniteMDP", "FourierBasis",
    "SampleSource", "TerminalStateError", "TransitionSample", "TransitionSampler", "chain3",
    "epsilon_greedy", "fourier_features", "greedy_action", "gridworld", "make_env",
    "n_fourier_features", "random_finite", "random_policy", "sample_transition", "uniform_policy",
]
