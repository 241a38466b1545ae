"""Finite MDPs: the 3-state chain, the 12x12 gridworld and random test MDPs."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ..dist_core import GeneralDiscrete

MAX_RANDOM_STATES = 64
MAX_RANDOM_ACTIONS = 8
MAX_REWARD_ATOMS = 8


@dataclass(frozen=True, eq=False)
class FiniteMDP:
    """Tabular model ``(X, A, R, P, gamma)``.

    Rewards are stored padded: ``reward_values[x, a, j]`` with probability
    ``reward_probs[x, a, j]`` (zero for padding). Terminal states have value
    zero by convention.
    """

    transition: np.ndarray  # (S, A, S)
    reward_values: np.ndarray  # (S, A, M)
    reward_probs: np.ndarray  # (S, A, M)
    gamma: float
    terminal: np.ndarray = None  # (S,) bool
    start: np.ndarray = None  # (S,)
    episode_cap: Optional[int] = None
    name: str = "finite"
    info: dict = field(default_factory=dict)

    def __post_init__(self):
        P = np.asarray(self.transition, dtype=np.float64)
        S, A, S2 = P.shape
        if S != S2:
            raise ValueError("transition must have shape (S, A, S)")
        if not np.allclose(P.sum(axis=2), 1.0, atol=1e-12, rtol=0):
            raise ValueError("each P(.|x,a) must sum to 1")
        rv = np.asarray(self.reward_values, dtype=np.float64)
        rp = np.asarray(self.reward_probs, dtype=np.float64)
        if rv.shape[:2] != (S, A) or rv.shape != rp.shape:
            raise ValueError("reward arrays must have shape (S, A, M)")
        if not np.allclose(rp.sum(axis=2), 1.0, atol=1e-12, rtol=0) or np.any(rp < 0):
            raise ValueError("reward probabilities must be a distribution per (x, a)")
        if not 0.0 <= self.gamma < 1.0:
            raise ValueError("gamma must lie in [0, 1)")
        terminal = np.zeros(S, bool) if self.terminal is None else np.asarray(self.terminal, bool)
        start = np.full(S, 1.0 / S) if self.start is None else np.asarray(self.start, np.float64)
        for name, val in (("transition", P), ("reward_values", rv), ("reward_probs", rp),
                          ("terminal", terminal), ("start", start)):
            val = np.array(val, copy=True)
            val.setflags(write=False)
            object.__setattr__(self, name, val)

    @property
    def n_states(self) -> int:
        return self.transition.shape[0]

    @property
    def n_actions(self) -> int:
        return self.transition.shape[1]

    @property
    def r_max(self) -> float:
        return float(np.max(np.abs(self.reward_values[self.reward_probs > 0])))

    @property
    def expected_reward(self) -> np.ndarray:
        return np.sum(self.reward_values * self.reward_probs, axis=2)

    def reward_dist(self, x: int, a: int) -> GeneralDiscrete:
        return GeneralDiscrete(self.reward_values[x, a], self.reward_probs[x, a])

    def config(self) -> dict:
        return {"name": self.name, "n_states": self.n_states, "n_actions": self.n_actions,
                "gamma": self.gamma, "episode_cap": self.episode_cap, **self.info}


def _deterministic_rewards(r: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    return r[..., None].astype(np.float64), np.ones(r.shape + (1,))


def chain3(gamma: float = 0.9, episode_cap: int = 20) -> FiniteMDP:
    """Three states in a line; action 0 moves left, 1 moves right.

    Reward +1 for going left in the leftmost state or right in the rightmost
    state (the agent stays put), 0 otherwise. Episodes start in the middle.
    """
    S, A = 3, 2
    P = np.zeros((S, A, S))
    R = np.zeros((S, A))
    for x in range(S):
        P[x, 0, max(x - 1, 0)] = 1.0
        P[x, 1, min(x + 1, S - 1)] = 1.0
    R[0, 0] = 1.0
    R[S - 1, 1] = 1.0
    rv, rp = _deterministic_rewards(R)
    start = np.zeros(S)
    start[1] = 1.0
    return FiniteMDP(P, rv, rp, gamma, start=start, episode_cap=episode_cap, name="chain3",
                     info={"rewards": "left@0:+1, right@2:+1, else 0"})


GRID_MOVES = ((-1, 0), (1, 0), (0, -1), (0, 1))  # up, down, left, right


def gridworld(size: int = 12, gamma: float = 0.99, episode_cap: int = 5000) -> FiniteMDP:
    """Open ``size x size`` grid; start top-left, terminal goal bottom-right.

    Moving into the goal pays +1, every other step pays 0. Bumping a wall
    leaves the agent in place. State index is ``row * size + col``.
    """
    S, A = size * size, 4
    goal = S - 1
    P = np.zeros((S, A, S))
    R = np.zeros((S, A))
    for row in range(size):
        for col in range(size):
            x = row * size + col
            for a, (dr, dc) in enumerate(GRID_MOVES):
                if x == goal:
                    P[x, a, x] = 1.0
                    continue
                r2 = min(max(row + dr, 0), size - 1)
                c2 = min(max(col + dc, 0), size - 1)
                x2 = r2 * size + c2
                P[x, a, x2] = 1.0
                R[x, a] = 1.0 if x2 == goal else 0.0
    rv, rp = _deterministic_rewards(R)
    terminal = np.zeros(S, bool)
    terminal[goal] = True
    start = np.zeros(S)
    start[0] = 1.0
    return FiniteMDP(P, rv, rp, gamma, terminal=terminal, start=start, episode_cap=episode_cap,
                     name=f"gridworld{size}", info={"rewards": "goal:+1, step:0"})


def random_finite(
    n_states: int = 5,
    n_actions: int = 2,
    n_reward_atoms: int = 3,
    seed: int = 0,
    gamma: float = 0.9,
    r_max: float = 1.0,
) -> FiniteMDP:
    """Random MDP with Dirichlet transitions and reward laws on ``[-r_max, r_max]``."""
    if not (1 <= n_states <= MAX_RANDOM_STATES and 1 <= n_actions <= MAX_RANDOM_ACTIONS
            and 1 <= n_reward_atoms <= MAX_REWARD_ATOMS):
        raise ValueError("random_finite size parameters out of range")
    rng = np.random.default_rng(seed)
    P = rng.dirichlet(np.ones(n_states), size=(n_states, n_actions))
    rv = rng.uniform(-r_max, r_max, size=(n_states, n_actions, n_reward_atoms))
    rp = rng.dirichlet(np.ones(n_reward_atoms), size=(n_states, n_actions))
    # renormalise after float rounding so rows sum to 1 within 1e-12
    P /= P.sum(axis=2, keepdims=True)
    rp /= rp.sum(axis=2, keepdims=True)
    return FiniteMDP(P, rv, rp, gamma, name="random_finite",
                     info={"seed": seed, "n_reward_atoms": n_reward_atoms, "r_max": r_max})


def uniform_policy(mdp: FiniteMDP) -> np.ndarray:
    return np.full((mdp.n_states, mdp.n_actions), 1.0 / mdp.n_actions)


def random_policy(mdp: FiniteMDP, seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    return rng.dirichlet(np.ones(mdp.n_actions), size=mdp.n_states)
