"""Coupled runs of an expected-value learner and a distributional learner.

Both learners of a :class:`CoupledPair` consume the very same
:class:`~coupledrl.envs.TransitionSample` at every step. After each step the
harness records ``max |E[Z_t] - Q_t|`` over a probe set (all ``(x, a)`` for
tables, a fixed feature set for linear models). :func:`verify_proposition`
packages each expectation-equivalence claim, and each counterexample, as a
deterministic check over a list of seeds.

Proposition IDs:

=====  ===========================================================
P2     exact distributional operator vs expected operator
P3     projected distributional operator vs expected operator
P4     unprojected mixture update vs SARSA
P5     projected mixture update vs SARSA
P6     CDF-gradient update with ``alpha' = alpha / (2c)`` vs SARSA
P7     PMF-gradient update (counterexample, must diverge)
P8     linear CDF semi-gradient vs linear TD
P9     sigmoid-CDF nonlinear model (counterexample, must diverge)
Cor    control: optimality operators, Q-learning variants, greedy policies
=====  ===========================================================
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Any, Callable, Mapping, Optional, Sequence

import numpy as np

from .config import config_hash
from .dist_core import Categorical, Support, expectation, pmf_direction
from .envs.finite import FiniteMDP, gridworld, random_finite, random_policy
from .envs.sampling import (
    DRAWS_PER_RESET,
    DRAWS_PER_TRANSITION,
    SampleSource,
    TransitionSample,
    TransitionSampler,
    epsilon_greedy,
    inverse_cdf,
)
from .linear import LinearQ, LinearZ, matched_init, semigradient_cdf_update, semigradient_q_update
from .nonlinear.counterexample import sigmoid_cdf_counterexample
from .tabular import (
    CategoricalZTable,
    DiscreteZTable,
    SupportOverflowError,
    bellman_dist,
    bellman_dist_projected,
    bellman_expected,
    cdf_gradient_update,
    mixture_update,
    pmf_gradient_update,
    sarsa_update,
)

PROPOSITIONS = ("P2", "P3", "P4", "P5", "P6", "P7", "P8", "P9", "Cor")
COUNTEREXAMPLES = ("P7", "P9")

TOL_OPERATOR = 1e-10
TOL_SAMPLE = 1e-8
TOL_LINEAR = 1e-7
TOL_DIVERGE = 1e-3


class UnknownPropositionError(KeyError):
    pass


class StreamMisalignmentError(AssertionError):
    """The shared stream advanced by an unexpected number of draws."""


# --------------------------------------------------------------------------- learners


@dataclass
class Learner:
    """A learner state plus its update rule and its probe of mean predictions."""

    name: str
    state: Any
    update: Callable[[Any, TransitionSample], Any]
    means: Callable[[Any], np.ndarray]

    def step(self, t: TransitionSample) -> None:
        self.state = self.update(self.state, t)

    def probe(self) -> np.ndarray:
        return np.asarray(self.means(self.state), dtype=np.float64)


def tabular_expected(q0: np.ndarray, alpha: float, gamma: float, rule: str = "sarsa") -> Learner:
    return Learner(
        "q-learning" if rule == "q_learning" else "sarsa",
        np.array(q0, dtype=np.float64),
        lambda q, t: sarsa_update(q, t, alpha, gamma, rule, inplace=True),
        lambda q: q,
    )


def tabular_distributional(kind: str, q0: np.ndarray, alpha: float, gamma: float,
                           support: Optional[Support] = None, rule: str = "sarsa") -> Learner:
    """Distributional table learner matched in expectation to ``q0``.

    ``kind``: ``mixture`` (unprojected), ``projected_mixture``,
    ``cdf_gradient`` (step ``alpha / (2c)``) or ``pmf_gradient`` (step ``alpha``).
    """
    if kind == "mixture":
        z0 = DiscreteZTable.from_values(q0)
        upd = lambda z, t: mixture_update(z, t, alpha, gamma, projected=False, rule=rule, inplace=True)
    else:
        z0 = CategoricalZTable.from_values(support, q0)
        if kind == "projected_mixture":
            upd = lambda z, t: mixture_update(z, t, alpha, gamma, projected=True, rule=rule, inplace=True)
        elif kind == "cdf_gradient":
            a_prime = alpha / (2 * support.require_spacing())
            upd = lambda z, t: cdf_gradient_update(z, t, a_prime, gamma, rule, inplace=True)
        elif kind == "pmf_gradient":
            upd = lambda z, t: pmf_gradient_update(z, t, alpha, gamma, rule, inplace=True)
        else:
            raise ValueError(f"unknown distributional rule {kind!r}")
    return Learner(kind, z0, upd, lambda z: z.expectations())


def linear_pair(support: Support, features: np.ndarray, probes: np.ndarray, alpha: float, gamma: float,
                rng: np.random.Generator) -> tuple[Learner, Learner]:
    """Matched linear TD and linear CDF learners over a ``(S, A, d)`` feature table.

    ``features[..., 0]`` must be 1 (bias). Means are probed at every table
    feature and at the extra ``probes`` rows.
    """
    S, A, d = features.shape
    if not np.all(features[..., 0] == 1.0):
        raise ValueError("feature component 0 must be the constant 1")
    phi_fn = lambda x, a: features[x, a]
    all_phi = np.concatenate([features.reshape(S * A, d), probes])
    q0, z0 = matched_init(support, d, rng)
    q = Learner("linear-td", q0, lambda m, t: semigradient_q_update(m, t, phi_fn, alpha, gamma),
                lambda m: all_phi @ m.theta)
    zc = support.atoms - np.append(support.atoms[1:], 0.0)
    z = Learner("linear-cdf", z0, lambda m, t: semigradient_cdf_update(m, t, phi_fn, alpha, gamma),
                lambda m: all_phi @ (zc @ m.w))
    return q, z


# --------------------------------------------------------------------------- reports


@dataclass
class EquivalenceReport:
    """Gap trace and verdict of one coupled run.

    ``gaps[t]`` is the max probe gap after ``t`` updates (``gaps[0]`` is the
    initial gap). ``verdict`` is ``equivalent`` when every entry is within
    ``tol``, else ``diverged``.
    """

    name: str
    gaps: np.ndarray
    tol: float
    seed: int
    config_hash: str
    expected_final: Optional[np.ndarray] = None
    dist_final: Optional[np.ndarray] = None
    info: dict = field(default_factory=dict)

    @property
    def steps(self) -> int:
        return len(self.gaps) - 1

    @property
    def max_gap(self) -> float:
        return float(np.max(self.gaps)) if len(self.gaps) else 0.0

    @property
    def first_divergence(self) -> Optional[int]:
        over = np.flatnonzero(self.gaps > self.tol)
        return int(over[0]) if over.size else None

    @property
    def verdict(self) -> str:
        return "equivalent" if self.first_divergence is None else "diverged"

    def to_dict(self, trace: bool = True) -> dict:
        out = {
            "name": self.name,
            "seed": self.seed,
            "config_hash": self.config_hash,
            "steps": self.steps,
            "tol": self.tol,
            "verdict": self.verdict,
            "max_gap": self.max_gap,
            "first_divergence": self.first_divergence,
        }
        if self.first_divergence is not None:
            out["divergence_magnitude"] = float(self.gaps[self.first_divergence])
        if self.info:
            out["info"] = self.info
        if trace:
            out["gaps"] = [float(g) for g in self.gaps]
        return out


@dataclass
class CoupledPair:
    """Expected learner, distributional learner and the shared transition stream."""

    expected: Learner
    dist: Learner
    sampler: TransitionSampler

    def gap(self) -> float:
        return float(np.max(np.abs(self.dist.probe() - self.expected.probe())))


def _check_alignment(before: int, after: int, reset: bool) -> None:
    want = DRAWS_PER_TRANSITION + (DRAWS_PER_RESET if reset else 0)
    if after - before != want:
        raise StreamMisalignmentError(f"stream advanced {after - before} draws, expected {want}")


def run_coupled(pair: CoupledPair, steps: int, tol: float, name: str = "coupled",
                seed: int = 0, cfg_hash: str = "") -> EquivalenceReport:
    """Advance both learners on one stream for ``steps`` samples and trace the gap."""
    gaps = np.empty(steps + 1)
    gaps[0] = pair.gap()
    src = pair.sampler.source
    for i in range(1, steps + 1):
        before, reset = src.counter, pair.sampler.x is None
        t = pair.sampler.sample()
        pair.expected.step(t)
        pair.dist.step(t)
        # learners must not touch the stream; only the sampler's draws are allowed
        _check_alignment(before, src.counter, reset)
        gaps[i] = pair.gap()
    return EquivalenceReport(name, gaps, tol, seed, cfg_hash,
                             pair.expected.probe().copy(), pair.dist.probe().copy())


def seed_variance_gap(reports: Sequence[EquivalenceReport]) -> float:
    """``max |Var_seeds(E[Z_T]) - Var_seeds(Q_T)|`` over probes."""
    e = np.stack([r.dist_final for r in reports])
    q = np.stack([r.expected_final for r in reports])
    return float(np.max(np.abs(e.var(axis=0) - q.var(axis=0))))


# --------------------------------------------------------------------------- control coupling


@dataclass
class ControlTrace:
    actions: list[int]
    episode_lengths: list[int]
    episode_returns: list[float]


class TabularControl:
    """Epsilon-greedy control on a finite MDP from a private copy of the stream.

    Draws per step: 2 for the action, 1 reward, 1 next state; 1 draw for the
    start state at each reset. Draw counts never depend on learned values, so
    two controllers with equal seeds see the same uniforms; they take the same
    actions exactly when their greedy choices agree.
    """

    def __init__(self, mdp: FiniteMDP, learner: Learner, source: SampleSource, epsilon: float,
                 rule: str = "q_learning"):
        self.mdp, self.learner, self.source = mdp, learner, source
        self.epsilon, self.rule = epsilon, rule
        self.trace = ControlTrace([], [], [])

    def _act(self, x: int) -> int:
        a = epsilon_greedy(self.learner.probe()[x], self.epsilon, self.source)
        self.trace.actions.append(a)
        return a

    def episode(self) -> tuple[int, float]:
        mdp = self.mdp
        x = inverse_cdf(mdp.start, self.source.uniform())
        a = self._act(x)
        length, ret = 0, 0.0
        while True:
            u_r, u_x = self.source.uniforms(2)
            r = float(mdp.reward_values[x, a, inverse_cdf(mdp.reward_probs[x, a], u_r)])
            x2 = inverse_cdf(mdp.transition[x, a], u_x)
            terminal = bool(mdp.terminal[x2])
            length += 1
            ret += r
            truncated = mdp.episode_cap is not None and length >= mdp.episode_cap
            if terminal:
                self.learner.step(TransitionSample(x, a, r, x2, 0, True))
                break
            if self.rule == "sarsa":
                a2 = self._act(x2)
                self.learner.step(TransitionSample(x, a, r, x2, a2, False))
            else:
                self.learner.step(TransitionSample(x, a, r, x2, 0, False))
                a2 = None if truncated else self._act(x2)
            if truncated:
                break
            x, a = x2, a2
        self.trace.episode_lengths.append(length)
        self.trace.episode_returns.append(ret)
        return length, ret

    def run(self, episodes: int) -> ControlTrace:
        for _ in range(episodes):
            self.episode()
        return self.trace


def coupled_control(mdp: FiniteMDP, expected: Learner, dist: Learner, seed: int, episodes: int,
                    epsilon: float, rule: str = "q_learning") -> tuple[ControlTrace, ControlTrace]:
    """Run both learners as epsilon-greedy controllers on identically seeded streams."""
    a = TabularControl(mdp, expected, SampleSource(seed), epsilon, rule).run(episodes)
    b = TabularControl(mdp, dist, SampleSource(seed), epsilon, rule).run(episodes)
    return a, b


def gridworld_coupling(seed: int = 0, episodes: int = 200, alpha: float = 0.1, epsilon: float = 0.1,
                       n_atoms: int = 51, q_init: float = 1.0) -> tuple[ControlTrace, ControlTrace]:
    """Q-learning vs tabular CDF-gradient distributional Q-learning on the 12x12 grid.

    Values start optimistic at ``q_init`` (distributions at the projected
    Dirac there), which drives systematic exploration of the grid.
    """
    mdp = gridworld()
    bound = mdp.r_max / (1 - mdp.gamma)
    support = Support.uniform(-bound, bound, n_atoms)
    q0 = np.full((mdp.n_states, mdp.n_actions), q_init)
    return coupled_control(
        mdp,
        tabular_expected(q0, alpha, mdp.gamma, "q_learning"),
        tabular_distributional("cdf_gradient", q0, alpha, mdp.gamma, support, "q_learning"),
        seed, episodes, epsilon,
    )


def lite_coupled_gap(seed: int = 0, steps: int = 1000, hidden: Sequence[int] = (64, 64),
                     lr: float = 1e-3, n_atoms: int = 51) -> EquivalenceReport:
    """DQN-lite vs S51-lite-cdf on CartPole from matched starts (negative control).

    Both networks share the hidden-layer draw; the DQN head starts at 0 and the
    S51 head at the Dirac on atom 0, so every state has mean 0 under both.
    Each agent drives its own copy of the task from an identically seeded
    stream. The gap is probed at the first agent's current observation.
    """
    from .envs.classic_control import CartPole
    from .nonlinear.agents import LiteAgent, RunState, Schedule, train_step
    from .nonlinear.network import HeadSpec

    env_a, env_b = CartPole(), CartPole()
    bound = env_a.r_max / (1 - 0.99)
    support = Support.uniform(-bound, bound, n_atoms)
    sched = Schedule(lr=lr)
    ident = lambda obs: np.asarray(obs, dtype=np.float64)
    a = LiteAgent(ident, 4, 2, HeadSpec("dqn"), hidden, sched, 0.99, init_seed=seed)
    b = LiteAgent(ident, 4, 2, HeadSpec("s51", support, "cdf"), hidden, sched, 0.99, init_seed=seed)
    a.net.head_weight[:] = 0.0
    a.net.head_bias_vector[:] = 0.0
    a.target_params = a.net.copy_params()
    run_a, run_b = RunState(SampleSource(seed)), RunState(SampleSource(seed))
    gaps = np.empty(steps + 1)
    gaps[0] = abs(float(np.max(np.abs(b.values(np.zeros(4)) - a.values(np.zeros(4))))))
    for i in range(1, steps + 1):
        train_step(a, env_a, run_a)
        train_step(b, env_b, run_b)
        gaps[i] = float(np.max(np.abs(b.values(run_a.inp) - a.values(run_a.inp))))
    cfg = {"seed": seed, "steps": steps, "hidden": list(hidden), "lr": lr, "n_atoms": n_atoms}
    return EquivalenceReport("dqn-lite vs s51-lite-cdf", gaps, TOL_DIVERGE, seed, config_hash(cfg))


# --------------------------------------------------------------------------- propositions


@dataclass
class PropositionReport:
    """Aggregate over seeds. Counterexamples pass when divergence is detected."""

    id: str
    description: str
    expect: str  # "equivalent" or "diverged"
    runs: list[EquivalenceReport]
    config: dict
    checks: dict = field(default_factory=dict)
    error: Optional[str] = None

    @property
    def config_hash(self) -> str:
        return config_hash(self.config)

    @property
    def passed(self) -> bool:
        if self.error is not None:
            return False
        runs_ok = all(r.verdict == self.expect for r in self.runs)
        return runs_ok and all(bool(v) for v in self.checks.values())

    def to_dict(self, trace: bool = True) -> dict:
        return {
            "id": self.id,
            "description": self.description,
            "config_hash": self.config_hash,
            "config": {k: self.config[k] for k in sorted(self.config)},
            "expect": self.expect,
            "passed": self.passed,
            "error": self.error,
            "checks": {k: bool(v) for k, v in self.checks.items()},
            "runs": [r.to_dict(trace) for r in self.runs],
        }

    def to_json(self, trace: bool = True) -> str:
        return json.dumps(self.to_dict(trace), indent=2, sort_keys=True) + "\n"


DEFAULTS: dict[str, dict[str, Any]] = {
    "P2": {"iterations": 2, "n_states": 6, "n_actions": 3, "n_reward_atoms": 4, "gamma": 0.9},
    "P3": {"iterations": 200, "n_states": 6, "n_actions": 3, "n_reward_atoms": 4, "gamma": 0.9,
           "n_atoms": 51},
    "P4": {"steps": 50, "n_states": 5, "n_actions": 2, "n_reward_atoms": 3, "gamma": 0.9, "alpha": 0.1},
    "P5": {"steps": 10_000, "n_states": 5, "n_actions": 2, "n_reward_atoms": 3, "gamma": 0.9,
           "alpha": 0.1, "n_atoms": 41},
    "P6": {"steps": 10_000, "n_states": 5, "n_actions": 2, "n_reward_atoms": 3, "gamma": 0.9,
           "alpha": 0.1, "n_atoms": 41},
    "P7": {"steps": 10, "alpha": 0.5},
    "P8": {"steps": 5_000, "n_states": 6, "n_actions": 3, "n_reward_atoms": 3, "gamma": 0.9,
           "alpha": 0.05, "d": 8, "n_atoms": 11, "n_probes": 32},
    "P9": {"alpha": 1.0},
    "Cor": {"iterations": 200, "exact_iterations": 2, "steps": 10_000, "episodes": 20,
            "n_states": 5, "n_actions": 3, "n_reward_atoms": 3, "gamma": 0.9, "alpha": 0.1,
            "epsilon": 0.2, "n_atoms": 41},
}


def _random_mdp(cfg: Mapping, seed: int, r_max: float = 1.0) -> FiniteMDP:
    return random_finite(cfg["n_states"], cfg["n_actions"], cfg["n_reward_atoms"], seed=seed,
                         gamma=cfg["gamma"], r_max=r_max)


def _bracketing_support(mdp: FiniteMDP, n_atoms: int) -> Support:
    bound = mdp.r_max / (1 - mdp.gamma)
    return Support.uniform(-bound, bound, n_atoms)


def _q0(mdp: FiniteMDP, seed: int) -> np.ndarray:
    # random start inside the value range, so that equivalence is not trivial
    bound = mdp.r_max / (1 - mdp.gamma)
    return np.random.default_rng([seed, 1]).uniform(-0.5 * bound, 0.5 * bound, (mdp.n_states, mdp.n_actions))


def operator_gaps(mdp: FiniteMDP, policy, mode: str, iterations: int, support: Optional[Support],
                  q0: np.ndarray) -> np.ndarray:
    """Gap trace of ``T`` (or ``T*``) iterated against ``T_D`` (support None) or ``T_C``."""
    q = q0.copy()
    z = DiscreteZTable.from_values(q0) if support is None else CategoricalZTable.from_values(support, q0)
    gaps = [float(np.max(np.abs(z.expectations() - q)))]
    for _ in range(iterations):
        q = bellman_expected(q, mdp, policy, mode)
        z = bellman_dist(z, mdp, policy, mode) if support is None else bellman_dist_projected(z, mdp, policy, mode)
        gaps.append(float(np.max(np.abs(z.expectations() - q))))
    return np.array(gaps)


def _operator_run(pid, cfg, seed, mode, projected) -> EquivalenceReport:
    mdp = _random_mdp(cfg, seed)
    policy = random_policy(mdp, seed) if mode == "evaluation" else None
    support = _bracketing_support(mdp, cfg["n_atoms"]) if projected else None
    iters = cfg["iterations"] if projected or "exact_iterations" not in cfg else cfg["exact_iterations"]
    gaps = operator_gaps(mdp, policy, mode, iters, support, _q0(mdp, seed))
    name = f"{'T_C' if projected else 'T_D'} vs {'T*' if mode == 'optimality' else 'T'}"
    return EquivalenceReport(name, gaps, TOL_OPERATOR, seed, config_hash(cfg))


def _sample_run(cfg, seed, kind, rule="sarsa", tol=TOL_SAMPLE) -> EquivalenceReport:
    mdp = _random_mdp(cfg, seed)
    policy = random_policy(mdp, seed)
    support = _bracketing_support(mdp, cfg["n_atoms"]) if "n_atoms" in cfg else None
    q0 = _q0(mdp, seed)
    pair = CoupledPair(
        tabular_expected(q0, cfg["alpha"], mdp.gamma, rule),
        tabular_distributional(kind, q0, cfg["alpha"], mdp.gamma, support, rule),
        TransitionSampler(mdp, policy, SampleSource(seed)),
    )
    name = f"{pair.expected.name} vs {kind}"
    return run_coupled(pair, cfg["steps"], tol, name, seed, config_hash(cfg))


def pmf_counterexample_mdp() -> FiniteMDP:
    """One decision state, one action, moving to a terminal state with reward 1."""
    P = np.zeros((2, 1, 2))
    P[:, 0, 1] = 1.0
    rv = np.array([[[1.0]], [[0.0]]])
    rp = np.ones((2, 1, 1))
    start = np.array([1.0, 0.0])
    return FiniteMDP(P, rv, rp, 0.9, terminal=np.array([False, True]), start=start, name="pmf_counterexample")


def pmf_golden(alpha: float) -> dict:
    """The worked PMF-gradient example on atoms (0, 1, 2)."""
    support = Support.integer(0, 2)
    F = np.array([1 / 3, 2 / 3, 1.0])
    Ft = np.array([0.5, 0.5, 1.0])
    v = pmf_direction(F, Ft, support.require_spacing())
    p1 = np.diff(F, prepend=0.0) + alpha * v
    return {"gradient": v, "E_before": float(support.atoms @ np.diff(F, prepend=0.0)),
            "E_after": float(support.atoms @ p1)}


def _p7(cfg, seeds) -> PropositionReport:
    alpha = cfg["alpha"]
    checks = {}
    for a in (0.1, 0.5, 1.0):
        g = pmf_golden(a)
        checks[f"gradient_(0,-1/3,0)_alpha={a}"] = np.max(np.abs(g["gradient"] - [0, -1 / 3, 0])) <= 1e-12
        checks[f"E_after=1-alpha/3_alpha={a}"] = abs(g["E_after"] - (1 - a / 3)) <= 1e-12
    runs = []
    mdp = pmf_counterexample_mdp()
    support = Support.integer(0, 2)
    for seed in seeds:
        q0 = np.array([[1.0], [0.0]])
        z = tabular_distributional("pmf_gradient", q0, alpha, mdp.gamma, support)
        z.state.masses[0, 0] = [1 / 3, 1 / 3, 1 / 3]
        pair = CoupledPair(tabular_expected(q0, alpha, mdp.gamma), z,
                           TransitionSampler(mdp, np.ones((2, 1)), SampleSource(seed)))
        rep = run_coupled(pair, cfg["steps"], TOL_DIVERGE, "sarsa vs pmf_gradient", seed, config_hash(cfg))
        rep.info = {"E_Z1": float(_pmf_first_mean(alpha)), "Q1": 1.0}
        runs.append(rep)
    return PropositionReport("P7", "PMF-gradient update breaks expectation equivalence", "diverged",
                             runs, cfg, checks)


def _pmf_first_mean(alpha: float) -> float:
    """Mean after one PMF step from ``(1/3, 1/3, 1/3)`` towards the Dirac at 1."""
    F = np.array([1 / 3, 2 / 3, 1.0])
    Ft = np.array([0.0, 1.0, 1.0])
    p1 = np.diff(F, prepend=0.0) + alpha * pmf_direction(F, Ft, 1.0)
    return float(np.arange(3) @ p1)


def _p8(cfg, seeds) -> PropositionReport:
    runs = []
    for seed in seeds:
        rng = np.random.default_rng([seed, 8])
        K = cfg["n_atoms"]
        half = (K - 1) // 2
        support = Support.integer(-half, K - 1 - half)
        # rewards small enough that the 1-spaced grid brackets every return
        r_max = min(-support.lo, support.hi) * (1 - cfg["gamma"])
        mdp = _random_mdp(cfg, seed, r_max=r_max)
        policy = random_policy(mdp, seed)
        d = cfg["d"]
        feats = rng.uniform(-1, 1, (mdp.n_states, mdp.n_actions, d)) / np.sqrt(d)
        feats[..., 0] = 1.0
        probes = rng.standard_normal((cfg["n_probes"], d))
        q, z = linear_pair(support, feats, probes, cfg["alpha"], mdp.gamma, rng)
        pair = CoupledPair(q, z, TransitionSampler(mdp, policy, SampleSource(seed)))
        rep = run_coupled(pair, cfg["steps"], TOL_LINEAR, "linear-td vs linear-cdf", seed, config_hash(cfg))
        mass = pair.dist.state.w[-1] @ feats.reshape(-1, d).T
        rep.info = {"max_mass_error": float(np.max(np.abs(mass - 1.0)))}
        runs.append(rep)
    checks = {"mass_invariant": all(r.info["max_mass_error"] <= 1e-9 for r in runs)}
    if len(runs) > 1:
        checks["seed_variance_equal"] = seed_variance_gap(runs) <= 1e-12
    return PropositionReport("P8", "linear CDF semi-gradient keeps linear TD means", "equivalent",
                             runs, cfg, checks)


def _p9(cfg, seeds) -> PropositionReport:
    rep = sigmoid_cdf_counterexample(cfg["alpha"])
    checks = {
        "gradient_1=2/27": abs(rep.gradients[0] - 2 / 27) <= 1e-12,
        "gradient_2=-4/27": abs(rep.gradients[1] + 4 / 27) <= 1e-12,
        "E_Z0=Q0=0": abs(rep.E_Z0) <= 1e-12 and rep.Q0 == 0.0,
        "Q1=0": rep.Q1 == 0.0,
        "|E_Z1|_in_[0.04,0.06]": 0.04 <= abs(rep.E_Z1) <= 0.06,
    }
    gaps = np.array([abs(rep.E_Z0 - rep.Q0), abs(rep.E_Z1 - rep.Q1)])
    runs = [EquivalenceReport("linear-td vs sigmoid-cdf", gaps, TOL_DIVERGE, s, config_hash(cfg),
                              info={"gradients": [float(g) for g in rep.gradients], "E_Z1": rep.E_Z1,
                                    "Q1": rep.Q1}) for s in seeds]
    return PropositionReport("P9", "sigmoid-CDF representation breaks expectation equivalence", "diverged",
                             runs, cfg, checks)


def _cor(cfg, seeds) -> PropositionReport:
    runs, checks = [], {}
    exact_cfg = dict(cfg, iterations=cfg["exact_iterations"])
    for seed in seeds:
        runs.append(_operator_run("Cor", cfg, seed, "optimality", projected=True))
        runs.append(_operator_run("Cor", exact_cfg, seed, "optimality", projected=False))
        runs.append(_sample_run(cfg, seed, "projected_mixture", "q_learning"))
        runs.append(_sample_run(cfg, seed, "cdf_gradient", "q_learning"))
        mdp = _random_mdp(cfg, seed)
        mdp = FiniteMDP(mdp.transition, mdp.reward_values, mdp.reward_probs, mdp.gamma,
                        terminal=mdp.terminal, start=mdp.start, episode_cap=50, name=mdp.name)
        support = _bracketing_support(mdp, cfg["n_atoms"])
        q0 = _q0(mdp, seed)
        a, b = coupled_control(
            mdp,
            tabular_expected(q0, cfg["alpha"], mdp.gamma, "q_learning"),
            tabular_distributional("cdf_gradient", q0, cfg["alpha"], mdp.gamma, support, "q_learning"),
            seed, cfg["episodes"], cfg["epsilon"],
        )
        checks[f"greedy_actions_identical_seed={seed}"] = a.actions == b.actions
    return PropositionReport("Cor", "optimality operators, Q-learning variants and greedy control", "equivalent",
                             runs, cfg, checks)


def verify_proposition(pid: str, seeds: Sequence[int] = (0,), config: Optional[Mapping] = None) -> PropositionReport:
    """Run the check for ``pid`` over ``seeds``; ``config`` overrides :data:`DEFAULTS`."""
    if pid not in PROPOSITIONS:
        raise UnknownPropositionError(f"unknown proposition {pid!r}; choose from {', '.join(PROPOSITIONS)}")
    cfg = dict(DEFAULTS[pid])
    for k, v in (config or {}).items():
        if k not in cfg:
            raise KeyError(f"{pid} has no parameter {k!r}")
        cfg[k] = type(cfg[k])(v)
    seeds = [int(s) for s in seeds]
    if pid == "P7":
        return _p7(cfg, seeds)
    if pid == "P8":
        return _p8(cfg, seeds)
    if pid == "P9":
        return _p9(cfg, seeds)
    if pid == "Cor":
        return _cor(cfg, seeds)
    desc = {
        "P2": "exact distributional operator keeps expected-operator means",
        "P3": "projected distributional operator keeps expected-operator means",
        "P4": "unprojected mixture update keeps SARSA means",
        "P5": "projected mixture update keeps SARSA means",
        "P6": "CDF-gradient update with alpha' = alpha/(2c) keeps SARSA means",
    }[pid]
    runs = []
    try:
        for seed in seeds:
            if pid in ("P2", "P3"):
                runs.append(_operator_run(pid, cfg, seed, "evaluation", projected=(pid == "P3")))
            else:
                kind = {"P4": "mixture", "P5": "projected_mixture", "P6": "cdf_gradient"}[pid]
                runs.append(_sample_run(cfg, seed, kind))
    except SupportOverflowError as exc:
        return PropositionReport(pid, desc, "equivalent", runs, cfg, error=f"seed {seed}: {exc}")
    checks = {}
    if len(runs) > 1 and pid in ("P4", "P5", "P6"):
        checks["seed_variance_equal"] = seed_variance_gap(runs) <= 1e-12
    return PropositionReport(pid, desc, "equivalent", runs, cfg, checks)


__all__ = [
    "COUNTEREXAMPLES", "ControlTrace", "CoupledPair", "DEFAULTS", "EquivalenceReport", "Learner",
    "PROPOSITIONS", "PropositionReport", "StreamMisalignmentError", "TabularControl",
    "UnknownPropositionError", "coupled_control", "gridworld_coupling", "linear_pair", "lite_coupled_gap",
    "operator_gaps",
    "pmf_counterexample_mdp", "pmf_golden", "run_coupled", "seed_variance_gap", "tabular_distributional",
    "tabular_expected", "verify_proposition",
]
