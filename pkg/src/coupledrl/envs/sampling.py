"""Seeded sample streams and the transition generator for finite MDPs.

Every random choice in a run is drawn from a :class:`SampleSource`, a PCG64
stream that only ever emits uniform doubles. One double consumes exactly one
64-bit PCG64 output, so the stream position is the draw counter and
``SampleSource.at(seed, t)`` can jump straight to draw ``t``.

Draw budget (fixed, so that coupled learners stay aligned):

* finite MDP reset: 2 draws (start state, first action)
* finite MDP transition: 3 draws (reward, next state, next action)
* epsilon-greedy action: 2 draws (explore coin, random action)
"""

from __future__ import annotations

import copy
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .finite import FiniteMDP

DRAWS_PER_RESET = 2
DRAWS_PER_TRANSITION = 3
DRAWS_PER_EGREEDY = 2


class TerminalStateError(RuntimeError):
    """A transition was requested from a terminal state without a reset."""


class SampleSource:
    """Deterministic uniform stream ``omega_1, omega_2, ...``.

    Args:
        seed: 64-bit integer seed.
        counter: number of draws to skip before the first one returned.
    """

    algorithm = "PCG64"

    def __init__(self, seed: int, counter: int = 0):
        self.seed = int(seed)
        self._bitgen = np.random.PCG64(self.seed)
        if counter:
            self._bitgen.advance(counter)
        self._gen = np.random.Generator(self._bitgen)
        self.counter = int(counter)

    @classmethod
    def at(cls, seed: int, counter: int) -> "SampleSource":
        return cls(seed, counter)

    def clone(self) -> "SampleSource":
        return copy.deepcopy(self)

    def spawn(self, n: int) -> list["SampleSource"]:
        """Independent child streams, derived with :class:`numpy.random.SeedSequence`."""
        children = np.random.SeedSequence(self.seed).spawn(n)
        return [SampleSource(int(c.generate_state(1, np.uint64)[0])) for c in children]

    def uniform(self) -> float:
        self.counter += 1
        return float(self._gen.random())

    def uniforms(self, n: int) -> np.ndarray:
        self.counter += n
        return self._gen.random(n)

    def integer(self, n: int) -> int:
        """Uniform integer in ``[0, n)`` from one draw."""
        return min(int(self.uniform() * n), n - 1)

    def integers(self, n: int, size: int) -> np.ndarray:
        return np.minimum((self.uniforms(size) * n).astype(np.int64), n - 1)

    def categorical(self, probs: np.ndarray) -> int:
        """Inverse-CDF draw from a probability vector (one draw)."""
        return inverse_cdf(probs, self.uniform())

    def __repr__(self) -> str:
        return f"SampleSource(seed={self.seed}, counter={self.counter})"


def inverse_cdf(probs: np.ndarray, u: float) -> int:
    cum = np.cumsum(probs)
    return int(min(np.searchsorted(cum, u * cum[-1], side="right"), len(probs) - 1))


@dataclass(frozen=True)
class TransitionSample:
    """One sampled transition ``(x, a, r, x', a')``.

    ``terminal`` marks that ``x_next`` ends the episode; learners mask the
    discount to zero for such samples.
    """

    x: object
    a: int
    r: float
    x_next: object
    a_next: int
    terminal: bool = False


def sample_transition(
    mdp: FiniteMDP, policy: np.ndarray, source: SampleSource, x: int, a: int
) -> TransitionSample:
    """Draw ``r ~ R(x,a)``, ``x' ~ P(.|x,a)``, ``a' ~ pi(.|x')`` (3 draws)."""
    if mdp.terminal[x]:
        raise TerminalStateError(f"state {x} is terminal; reset first")
    u_r, u_x, u_a = source.uniforms(DRAWS_PER_TRANSITION)
    j = inverse_cdf(mdp.reward_probs[x, a], u_r)
    r = float(mdp.reward_values[x, a, j])
    x_next = inverse_cdf(mdp.transition[x, a], u_x)
    terminal = bool(mdp.terminal[x_next])
    a_next = inverse_cdf(policy[x_next], u_a)
    return TransitionSample(x, a, r, x_next, a_next, terminal)


class TransitionSampler:
    """Generator ``G: omega_1..omega_t -> (x_t, a_t, r_t, x_{t+1}, a_{t+1})``.

    Follows one trajectory of ``mdp`` under a fixed stochastic ``policy`` (an
    ``(S, A)`` table) and resets from the start distribution after terminal
    states or when the episode cap is hit.
    """

    def __init__(self, mdp: FiniteMDP, policy: np.ndarray, source: SampleSource):
        self.mdp = mdp
        self.policy = np.asarray(policy, dtype=np.float64)
        self.source = source
        self.x: Optional[int] = None
        self.a: Optional[int] = None
        self.t_in_episode = 0

    def reset(self) -> None:
        u_x, u_a = self.source.uniforms(DRAWS_PER_RESET)
        self.x = inverse_cdf(self.mdp.start, u_x)
        self.a = inverse_cdf(self.policy[self.x], u_a)
        self.t_in_episode = 0

    def sample(self) -> TransitionSample:
        if self.x is None:
            self.reset()
        t = sample_transition(self.mdp, self.policy, self.source, self.x, self.a)
        self.t_in_episode += 1
        cap = self.mdp.episode_cap
        if t.terminal or (cap is not None and self.t_in_episode >= cap):
            self.x = None
        else:
            self.x, self.a = t.x_next, t.a_next
        return t


def greedy_action(values, tie_tol: float = 1e-9) -> int:
    """Lowest index whose value is within ``tie_tol`` of the maximum.

    NaN values never win; if no value is a number, action 0 is returned.
    """
    v = np.asarray(values, dtype=np.float64)
    if v.size == 0:
        raise ValueError("no actions to choose from")
    v = np.where(np.isnan(v), -np.inf, v)
    best = v.max()
    if best == -np.inf:
        return 0
    return int(np.flatnonzero(v >= best - tie_tol)[0])


def epsilon_greedy(values, epsilon: float, source: SampleSource, tie_tol: float = 1e-9) -> int:
    """Epsilon-greedy choice; always consumes exactly two draws from ``source``.

    Greedy ties (values within ``tie_tol`` of the max) go to the lowest index,
    which keeps coupled learners whose values agree only up to rounding on the
    same action.
    """
    v = np.asarray(values, dtype=np.float64)
    if v.size == 0:
        raise ValueError("no actions to choose from")
    u_explore, u_action = source.uniforms(DRAWS_PER_EGREEDY)
    if u_explore < epsilon:
        return min(int(u_action * v.size), v.size - 1)
    return greedy_action(v, tie_tol)


Policy = Callable[[object, SampleSource], int]
