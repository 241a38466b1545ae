"""Episode runners behind the ``run``/``sweep``/``replay`` commands.

Each (config, algorithm, seed) triple maps to a list of :class:`RunRecord`
rows, one per episode, and is a pure function of its inputs (the wall-clock
column aside, which is 0 unless ``clock = on``).
"""

from __future__ import annotations

import csv
import io
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .config import TABULAR_ALGORITHMS, ConfigError, ExperimentConfig
from .dist_core import Support
from .envs import ClassicControlEnv, FiniteMDP, FourierBasis, SampleSource, make_env
from .harness import TabularControl, tabular_distributional, tabular_expected
from .nonlinear.agents import LiteAgent, RunState, Schedule, train_step
from .nonlinear.network import HeadSpec

CSV_HEADER = ("seed", "episode", "return", "length", "wallclock_ms", "config_hash")

FINITE_ENVS = ("chain3", "gridworld12", "random_finite")
CONTROL_ENVS = ("cartpole", "acrobot")


@dataclass(frozen=True)
class RunRecord:
    seed: int
    episode: int
    ret: float
    length: int
    wallclock_ms: float
    config_hash: str

    def row(self) -> tuple:
        return (self.seed, self.episode, repr(float(self.ret)), self.length,
                f"{self.wallclock_ms:.3f}", self.config_hash)

    def to_dict(self) -> dict:
        return dict(zip(CSV_HEADER, (self.seed, self.episode, float(self.ret), self.length,
                                     round(self.wallclock_ms, 3), self.config_hash)))


def records_to_csv(records: Sequence[RunRecord]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for r in records:
        w.writerow(r.row())
    return buf.getvalue()


def read_csv(text: str) -> list[dict]:
    rows = list(csv.reader(io.StringIO(text)))
    if not rows or tuple(rows[0]) != CSV_HEADER:
        raise ValueError("not a run CSV (unexpected header)")
    return [dict(zip(CSV_HEADER, r)) for r in rows[1:]]


def validate(cfg: ExperimentConfig) -> None:
    """Cross-field checks that need the environment list."""
    tabular = [a for a in cfg.algorithms if a in TABULAR_ALGORITHMS]
    if cfg.env in FINITE_ENVS:
        if len(tabular) != len(cfg.algorithms):
            raise ConfigError(f"env {cfg.env} only supports tabular algorithms {TABULAR_ALGORITHMS}")
    elif cfg.env in CONTROL_ENVS:
        if tabular:
            raise ConfigError(f"tabular algorithms need a finite env, not {cfg.env}")
        if cfg.features == "tabular":
            raise ConfigError("features must be fourier or mlp for classic-control tasks")
    else:
        raise ConfigError(f"unknown env {cfg.env!r}")


def n_input_features(cfg: ExperimentConfig, env) -> int:
    if cfg.features == "fourier":
        return FourierBasis(env.obs_bounds, cfg.fourier_order).n_features
    return env.obs_dim


def build_env(cfg: ExperimentConfig, seed: int):
    if cfg.env == "random_finite":
        return make_env("random_finite", seed=seed)
    return make_env(cfg.env)


def build_lite_agent(cfg: ExperimentConfig, algorithm: str, env: ClassicControlEnv, seed: int) -> LiteAgent:
    support = Support.uniform(cfg.v_min, cfg.v_max, cfg.n_atoms)
    spec = {
        "dqn-lite": HeadSpec("dqn"),
        "c51-lite": HeadSpec("c51", support),
        "s51-lite-cdf": HeadSpec("s51", support, "cdf"),
        "s51-lite-pmf": HeadSpec("s51", support, "pmf"),
    }[algorithm]
    if cfg.features == "fourier":
        input_fn = FourierBasis(env.obs_bounds, cfg.fourier_order)
        d_in, hidden = input_fn.n_features, ()
    else:
        input_fn = lambda obs: np.asarray(obs, dtype=np.float64)
        d_in, hidden = env.obs_dim, cfg.hidden
    schedule = Schedule(
        optimizer=cfg.optimizer, lr=cfg.lr, epsilon_start=cfg.epsilon_start, epsilon_end=cfg.epsilon_end,
        epsilon_decay_steps=cfg.epsilon_decay_steps, sync_period=cfg.sync_period,
        batch_size=cfg.batch_size, capacity=cfg.capacity,
    )
    return LiteAgent(input_fn, d_in, env.n_actions, spec, hidden, schedule, cfg.gamma, init_seed=seed,
                     init=cfg.init, dtype=np.dtype(cfg.dtype))


def build_tabular(cfg: ExperimentConfig, algorithm: str, mdp: FiniteMDP):
    q0 = np.full((mdp.n_states, mdp.n_actions), cfg.q_init)
    support = Support.uniform(cfg.v_min, cfg.v_max, cfg.n_atoms)
    if not support.brackets(mdp.r_max, mdp.gamma):
        raise ConfigError(f"support [{cfg.v_min}, {cfg.v_max}] does not bracket returns of {mdp.name}")
    rule = "sarsa" if algorithm == "sarsa" else "q_learning"
    if algorithm in ("q-learning", "sarsa"):
        return tabular_expected(q0, cfg.alpha, mdp.gamma, rule), rule
    kind = {"tabular-cdf": "cdf_gradient", "tabular-pmf": "pmf_gradient",
            "tabular-mixture": "projected_mixture"}[algorithm]
    return tabular_distributional(kind, q0, cfg.alpha, mdp.gamma, support, rule), rule


def run_seed(cfg: ExperimentConfig, algorithm: str, seed: int) -> list[RunRecord]:
    """All episodes of one algorithm under one seed."""
    env = build_env(cfg, seed)
    h = cfg.hash
    clock = cfg.clock == "on"
    t0 = time.perf_counter()
    out: list[RunRecord] = []

    def ms() -> float:
        return (time.perf_counter() - t0) * 1e3 if clock else 0.0

    if isinstance(env, FiniteMDP):
        learner, rule = build_tabular(cfg, algorithm, env)
        ctl = TabularControl(env, learner, SampleSource(seed), cfg.epsilon, rule)
        for ep in range(cfg.episodes):
            length, ret = ctl.episode()
            out.append(RunRecord(seed, ep, ret, length, ms(), h))
        return out
    agent = build_lite_agent(cfg, algorithm, env, seed)
    run = RunState(SampleSource(seed))
    stop = cfg.early_stop == "on"
    while run.episodes < cfg.episodes:
        stats = train_step(agent, env, run)
        if stats is not None:
            out.append(RunRecord(seed, stats.episode, stats.ret, stats.length, ms(), h))
            if stop and len(out) >= cfg.stop_window and \
                    np.mean([r.ret for r in out[-cfg.stop_window:]]) >= cfg.stop_return:
                break
    return out


def _run_seed_args(args):
    return run_seed(*args)


def run_algorithm(cfg: ExperimentConfig, algorithm: str, jobs: int = 1) -> list[RunRecord]:
    """All seeds, merged in seed order whatever the worker count."""
    tasks = [(cfg, algorithm, s) for s in cfg.seeds]
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            parts = list(pool.map(_run_seed_args, tasks))
    else:
        parts = [run_seed(*t) for t in tasks]
    return [r for part in parts for r in part]


def final_mean(records: Sequence[RunRecord], window: int = 100) -> float:
    """Mean over seeds of each seed's last-``window`` episode mean return."""
    by_seed: dict[int, list[float]] = {}
    for r in records:
        by_seed.setdefault(r.seed, []).append(r.ret)
    return float(np.mean([np.mean(v[-window:]) for v in by_seed.values()]))


def reached(returns: Sequence[float], threshold: float, window: int = 100) -> Optional[int]:
    """First episode index at which the trailing ``window`` mean is ``>= threshold``."""
    r = np.asarray(returns, dtype=np.float64)
    if r.size < window:
        return None
    means = np.convolve(r, np.ones(window) / window, mode="valid")
    hit = np.flatnonzero(means >= threshold)
    return int(hit[0]) + window - 1 if hit.size else None
