"""DQN-lite, C51-lite and S51-lite agents: replay memory, target network, SGD/Adam."""

from __future__ import annotations

import copy
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from ..dist_core import Support
from ..envs.sampling import SampleSource, epsilon_greedy
from .network import MLP, Batch, HeadSpec, loss_and_grads

ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8


class SGD:
    def __init__(self, lr: float):
        self.lr = lr

    def step(self, params: list[np.ndarray], grads: list[np.ndarray]) -> None:
        for p, g in zip(params, grads):
            p -= self.lr * g


class Adam:
    """Adam with the usual defaults (beta1 0.9, beta2 0.999, eps 1e-8)."""

    def __init__(self, lr: float, beta1: float = ADAM_BETA1, beta2: float = ADAM_BETA2, eps: float = ADAM_EPS):
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.t = 0
        self.m: Optional[list[np.ndarray]] = None
        self.v: Optional[list[np.ndarray]] = None

    def step(self, params: list[np.ndarray], grads: list[np.ndarray]) -> None:
        if self.m is None:
            self.m = [np.zeros_like(p) for p in params]
            self.v = [np.zeros_like(p) for p in params]
        self.t += 1
        b1, b2 = self.beta1, self.beta2
        lr_t = self.lr * np.sqrt(1 - b2**self.t) / (1 - b1**self.t)
        for p, g, m, v in zip(params, grads, self.m, self.v):
            m *= b1
            m += (1 - b1) * g
            v *= b2
            g = g * g
            g *= 1 - b2
            v += g
            denom = np.sqrt(v)
            denom += self.eps
            np.divide(m, denom, out=denom)
            denom *= lr_t
            p -= denom


def make_optimizer(name: str, lr: float):
    if name == "sgd":
        return SGD(lr)
    if name == "adam":
        return Adam(lr)
    raise ValueError(f"unknown optimizer {name!r}")


class ReplayBuffer:
    """Ring buffer of transitions, sampled uniformly with replacement."""

    def __init__(self, capacity: int, d_in: int, dtype=np.float64):
        self.capacity = capacity
        self.x = np.zeros((capacity, d_in), dtype=dtype)
        self.x_next = np.zeros((capacity, d_in), dtype=dtype)
        self.a = np.zeros(capacity, dtype=np.int64)
        self.r = np.zeros(capacity)
        self.terminal = np.zeros(capacity, dtype=bool)
        self.size = 0
        self.pos = 0

    def __len__(self) -> int:
        return self.size

    def push(self, x, a: int, r: float, x_next, terminal: bool) -> None:
        i = self.pos
        self.x[i] = x
        self.a[i] = a
        self.r[i] = r
        self.x_next[i] = x_next
        self.terminal[i] = terminal
        self.pos = (i + 1) % self.capacity
        self.size = min(self.size + 1, self.capacity)

    def sample(self, batch_size: int, source: SampleSource) -> Batch:
        idx = source.integers(self.size, batch_size)
        return Batch(self.x[idx], self.a[idx], self.r[idx], self.x_next[idx], self.terminal[idx])


@dataclass
class Schedule:
    """Training hyper-parameters shared by all lite agents."""

    optimizer: str = "adam"
    lr: float = 1e-3
    epsilon_start: float = 1.0
    epsilon_end: float = 0.05
    epsilon_decay_steps: int = 10_000
    sync_period: int = 10
    batch_size: int = 128
    capacity: int = 50_000

    def epsilon(self, step: int) -> float:
        frac = min(step / self.epsilon_decay_steps, 1.0) if self.epsilon_decay_steps > 0 else 1.0
        return self.epsilon_start + frac * (self.epsilon_end - self.epsilon_start)


def _s51_matched_head(net: MLP, spec: HeadSpec) -> None:
    """Zero head weights and a bias that encodes the Dirac at the atom nearest 0."""
    K = spec.support.size
    i0 = int(np.argmin(np.abs(spec.support.atoms)))
    pmf = np.zeros(K)
    pmf[i0] = 1.0
    row = pmf if spec.grad_wrt == "pmf" else np.cumsum(pmf)
    net.head_weight[:] = 0.0
    if net.head_bias:
        net.head_bias_vector[:] = np.tile(row, net.n_actions)


class LiteAgent:
    """Online/target network pair plus replay memory and optimizer.

    Args:
        input_fn: maps an observation to the network input (e.g. a Fourier basis).
        d_in: input dimension.
        n_actions: number of discrete actions.
        spec: head description.
        hidden: hidden layer widths; ``()`` gives a linear model.
        schedule: training hyper-parameters.
        gamma: discount.
        init_seed: seed for weight initialisation.
        init: ``"matched"`` starts S51 heads at a proper distribution,
            ``"unconstrained"`` keeps the plain random head.
    """

    def __init__(self, input_fn: Callable, d_in: int, n_actions: int, spec: HeadSpec,
                 hidden: Sequence[int] = (64, 64), schedule: Optional[Schedule] = None,
                 gamma: float = 0.99, init_seed: int = 0, init: str = "matched",
                 dtype=np.float64):
        self.input_fn = input_fn
        self.spec = spec
        self.gamma = gamma
        self.schedule = schedule or Schedule()
        rng = np.random.default_rng(init_seed)
        self.net = MLP(d_in, n_actions, spec.n_out, hidden, rng, dtype=dtype)
        if spec.kind == "s51" and init == "matched":
            _s51_matched_head(self.net, spec)
        self.target_params = self.net.copy_params()
        self.optimizer = make_optimizer(self.schedule.optimizer, self.schedule.lr)
        self.buffer = ReplayBuffer(self.schedule.capacity, d_in, dtype)
        self.env_steps = 0
        self.train_steps = 0

    def values(self, inp: np.ndarray) -> np.ndarray:
        with np.errstate(over="ignore", invalid="ignore"):
            return self.spec.values(self.net.forward(inp).astype(np.float64))[0]

    @property
    def diverged(self) -> bool:
        return not all(np.all(np.isfinite(p)) for p in self.net.params)

    def act(self, inp: np.ndarray, source: SampleSource) -> int:
        eps = self.schedule.epsilon(self.env_steps)
        return epsilon_greedy(self.values(inp), eps, source)

    def learn(self, source: SampleSource) -> Optional[float]:
        """One gradient step from a replay batch, if the buffer holds at least one batch."""
        if len(self.buffer) < self.schedule.batch_size:
            return None
        batch = self.buffer.sample(self.schedule.batch_size, source)
        # a diverging run (e.g. S51-pmf from an improper start) is kept going, not aborted
        with np.errstate(over="ignore", invalid="ignore"):
            loss, grads = loss_and_grads(self.net, self.target_params, batch, self.gamma, self.spec)
            self.optimizer.step(self.net.params, grads)
        self.train_steps += 1
        if self.train_steps % self.schedule.sync_period == 0:
            self.target_params = self.net.copy_params()
        return loss


@dataclass
class EpisodeStats:
    episode: int
    ret: float
    length: int


@dataclass
class RunState:
    """Per-run bookkeeping for :func:`train_step`."""

    source: SampleSource
    obs: Optional[np.ndarray] = None
    inp: Optional[np.ndarray] = None
    ep_return: float = 0.0
    ep_length: int = 0
    episodes: int = 0
    history: list = field(default_factory=list)


def train_step(agent: LiteAgent, env, run: RunState) -> Optional[EpisodeStats]:
    """Act, store the transition, learn once, sync the target on schedule.

    Returns the finished episode's stats when this step ended an episode.
    """
    if run.obs is None or env.done:
        run.obs = env.reset(run.source)
        run.inp = agent.input_fn(run.obs)
        run.ep_return, run.ep_length = 0.0, 0
    a = agent.act(run.inp, run.source)
    obs, r, terminal, truncated = env.step(a)
    inp = agent.input_fn(obs)
    agent.buffer.push(run.inp, a, r, inp, terminal)
    agent.env_steps += 1
    agent.learn(run.source)
    run.obs, run.inp = obs, inp
    run.ep_return += r
    run.ep_length += 1
    if terminal or truncated:
        stats = EpisodeStats(run.episodes, run.ep_return, run.ep_length)
        run.history.append(stats)
        run.episodes += 1
        return stats
    return None


def run_episodes(agent: LiteAgent, env, n_episodes: int, seed: int,
                 callback: Optional[Callable[[EpisodeStats], bool]] = None) -> list[EpisodeStats]:
    """Train for ``n_episodes``; ``callback`` may return True to stop early."""
    run = RunState(SampleSource(seed))
    while run.episodes < n_episodes:
        stats = train_step(agent, env, run)
        if stats is not None and callback is not None and callback(stats):
            break
    return run.history
