"""Tabular expected and distributional update rules.

Value tables are plain ``(S, A)`` arrays. Return-distribution tables come in
two flavours: :class:`CategoricalZTable` keeps every entry on one shared
:class:`~coupledrl.dist_core.Support` (used by the projected rules), and
:class:`DiscreteZTable` keeps exact, unprojected mixtures of Diracs.

Sample-based rules take a :class:`~coupledrl.envs.TransitionSample` and change
only the ``(x_t, a_t)`` entry. They return a new table unless ``inplace=True``.
Terminal samples use a zero discount, and a terminal state's return is the
Dirac at 0. ``rule="q_learning"`` swaps the sampled next action for the greedy
one (``max`` for values, argmax of the mean for distributions, lowest index
on ties).
"""

from __future__ import annotations

from typing import Literal, Optional

import numpy as np

from .dist_core import (
    Categorical,
    GeneralDiscrete,
    Support,
    cdf_direction,
    pmf_direction,
    project_masses,
)
from .envs.finite import FiniteMDP
from .envs.sampling import TransitionSample, greedy_action

Mode = Literal["evaluation", "optimality"]
Rule = Literal["sarsa", "q_learning"]

SUPPORT_CAP = 100_000


class SupportOverflowError(RuntimeError):
    """An unprojected distribution outgrew the atom cap."""


class BracketError(ValueError):
    """The atom grid does not bracket the attainable returns."""


class CategoricalZTable:
    """``(S, A, K)`` masses on a shared support (masses may be signed)."""

    def __init__(self, support: Support, masses: np.ndarray):
        self.support = support
        self.masses = np.array(masses, dtype=np.float64)
        if self.masses.ndim != 3 or self.masses.shape[2] != support.size:
            raise ValueError("masses must have shape (S, A, K)")

    @classmethod
    def from_values(cls, support: Support, q: np.ndarray) -> "CategoricalZTable":
        """Per-entry projection of the Dirac at ``q[x, a]``, so that ``E[Z] = q``."""
        q = np.asarray(q, dtype=np.float64)
        S, A = q.shape
        m = np.zeros((S, A, support.size))
        for x in range(S):
            for a in range(A):
                m[x, a] = project_masses([q[x, a]], [1.0], support.atoms)
        return cls(support, m)

    @property
    def shape(self) -> tuple[int, int]:
        return self.masses.shape[:2]

    def expectations(self) -> np.ndarray:
        return self.masses @ self.support.atoms

    def cdfs(self) -> np.ndarray:
        return np.cumsum(self.masses, axis=2)

    def dist(self, x: int, a: int) -> Categorical:
        return Categorical(self.support, self.masses[x, a], check=False)

    def copy(self) -> "CategoricalZTable":
        return CategoricalZTable(self.support, self.masses.copy())


class DiscreteZTable:
    """Exact per-entry mixtures of Diracs."""

    def __init__(self, dists):
        self.dists = [list(row) for row in dists]

    @classmethod
    def from_values(cls, q: np.ndarray) -> "DiscreteZTable":
        return cls([[GeneralDiscrete.dirac(v) for v in row] for row in np.asarray(q, dtype=np.float64)])

    @property
    def shape(self) -> tuple[int, int]:
        return len(self.dists), len(self.dists[0])

    def expectations(self) -> np.ndarray:
        return np.array([[float(np.dot(d.mass, d.locations)) for d in row] for row in self.dists])

    def max_atoms(self) -> int:
        return max(d.size for row in self.dists for d in row)

    def copy(self) -> "DiscreteZTable":
        return DiscreteZTable(self.dists)


def _next_action_weights(mdp: FiniteMDP, policy, mode: Mode, means: np.ndarray) -> np.ndarray:
    """``(S, A)`` weights over next actions: the policy, or one-hot greedy."""
    if mode == "evaluation":
        if policy is None:
            raise ValueError("evaluation mode needs a policy")
        return np.asarray(policy, dtype=np.float64)
    if mode != "optimality":
        raise ValueError(f"unknown mode {mode!r}")
    w = np.zeros_like(means)
    for x in range(means.shape[0]):
        w[x, greedy_action(means[x])] = 1.0
    return w


def check_bracket(support: Support, mdp: FiniteMDP) -> None:
    if not support.brackets(mdp.r_max, mdp.gamma):
        bound = mdp.r_max / (1 - mdp.gamma)
        raise BracketError(
            f"support [{support.lo}, {support.hi}] does not bracket [-{bound}, {bound}]"
        )


# --------------------------------------------------------------------------- operators


def bellman_expected(q: np.ndarray, mdp: FiniteMDP, policy=None, mode: Mode = "evaluation") -> np.ndarray:
    """One application of ``T^pi`` (evaluation) or ``T*`` (optimality)."""
    q = np.asarray(q, dtype=np.float64)
    if mode == "evaluation":
        if policy is None:
            raise ValueError("evaluation mode needs a policy")
        v = np.sum(np.asarray(policy) * q, axis=1)
    elif mode == "optimality":
        v = q.max(axis=1)
    else:
        raise ValueError(f"unknown mode {mode!r}")
    v = np.where(mdp.terminal, 0.0, v)
    return mdp.expected_reward + mdp.gamma * mdp.transition @ v


def bellman_dist(
    z: DiscreteZTable, mdp: FiniteMDP, policy=None, mode: Mode = "evaluation", cap: int = SUPPORT_CAP
) -> DiscreteZTable:
    """Exact distributional Bellman operator on unprojected tables.

    Raises :class:`SupportOverflowError` once an entry needs more than ``cap``
    distinct atoms; project instead (:func:`bellman_dist_projected`).
    """
    S, A = mdp.n_states, mdp.n_actions
    w_next = _next_action_weights(mdp, policy, mode, z.expectations())
    zero = GeneralDiscrete.dirac(0.0)
    # law of Z(X', A') given x', as (locations, masses)
    nxt = []
    for x2 in range(S):
        if mdp.terminal[x2]:
            nxt.append((zero.locations, zero.mass))
            continue
        locs, ms = [], []
        for a2 in range(A):
            if w_next[x2, a2] > 0:
                d = z.dists[x2][a2]
                locs.append(d.locations)
                ms.append(w_next[x2, a2] * d.mass)
        nxt.append((np.concatenate(locs), np.concatenate(ms)))
    out = []
    for x in range(S):
        row = []
        for a in range(A):
            locs, ms = [], []
            for r, pr in zip(mdp.reward_values[x, a], mdp.reward_probs[x, a]):
                if pr == 0:
                    continue
                for x2 in np.flatnonzero(mdp.transition[x, a]):
                    l2, m2 = nxt[x2]
                    locs.append(r + mdp.gamma * l2)
                    ms.append(pr * mdp.transition[x, a, x2] * m2)
            d = GeneralDiscrete(np.concatenate(locs), np.concatenate(ms))
            if d.size > cap:
                raise SupportOverflowError(
                    f"entry ({x}, {a}) needs {d.size} atoms (cap {cap}); use the projected operator"
                )
            row.append(d)
        out.append(row)
    return DiscreteZTable(out)


def bellman_dist_projected(
    z: CategoricalZTable, mdp: FiniteMDP, policy=None, mode: Mode = "evaluation",
    require_bracket: bool = True,
) -> CategoricalZTable:
    """``Pi_C T_D``: distributional backup followed by Cramer projection per entry."""
    support = z.support
    if require_bracket:
        check_bracket(support, mdp)
    w_next = _next_action_weights(mdp, policy, mode, z.expectations())
    atoms = support.atoms
    # mixture over next actions, then over next states; shifting by r commutes with mixing
    per_state = np.einsum("sa,sak->sk", w_next, z.masses)
    dirac0 = project_masses([0.0], [1.0], atoms)
    per_state[mdp.terminal] = dirac0
    mixed = np.einsum("xay,yk->xak", mdp.transition, per_state)
    out = np.zeros_like(z.masses)
    for x in range(mdp.n_states):
        for a in range(mdp.n_actions):
            for r, pr in zip(mdp.reward_values[x, a], mdp.reward_probs[x, a]):
                if pr > 0:
                    out[x, a] += project_masses(r + mdp.gamma * atoms, pr * mixed[x, a], atoms)
    return CategoricalZTable(support, out)


# --------------------------------------------------------------------------- sample-based rules


def _discount(t: TransitionSample, gamma: float) -> float:
    return 0.0 if t.terminal else gamma


def sarsa_update(
    q: np.ndarray, t: TransitionSample, alpha: float, gamma: float,
    rule: Rule = "sarsa", inplace: bool = False,
) -> np.ndarray:
    """``Q(x,a) <- (1 - alpha) Q(x,a) + alpha (r + gamma Q(x', a'))``."""
    out = q if inplace else np.array(q, dtype=np.float64, copy=True)
    g = _discount(t, gamma)
    if g == 0.0:
        boot = 0.0
    elif rule == "q_learning":
        boot = out[t.x_next].max()
    else:
        boot = out[t.x_next, t.a_next]
    out[t.x, t.a] = (1 - alpha) * out[t.x, t.a] + alpha * (t.r + g * boot)
    return out


def _bootstrap_action(means_next: np.ndarray, t: TransitionSample, rule: Rule) -> int:
    return greedy_action(means_next) if rule == "q_learning" else t.a_next


def projected_target(z: CategoricalZTable, t: TransitionSample, gamma: float, rule: Rule = "sarsa") -> np.ndarray:
    """Masses of ``Pi_C (r + gamma Z(x', a'))``; ``Pi_C delta_r`` for terminal samples."""
    atoms = z.support.atoms
    g = _discount(t, gamma)
    if g == 0.0:
        return project_masses([t.r], [1.0], atoms)
    a2 = _bootstrap_action(z.masses[t.x_next] @ atoms, t, rule)
    return project_masses(t.r + g * atoms, z.masses[t.x_next, a2], atoms)


def mixture_update(
    z, t: TransitionSample, alpha: float, gamma: float, projected: bool,
    rule: Rule = "sarsa", inplace: bool = False, cap: int = SUPPORT_CAP,
):
    """Mix the ``(x_t, a_t)`` law towards the sampled target ``r + gamma Z(x', a')``.

    With ``projected=True`` the target is Cramer-projected and ``z`` must be a
    :class:`CategoricalZTable`; otherwise ``z`` is a :class:`DiscreteZTable`
    and the new entry is the exact mixture.
    """
    out = z if inplace else z.copy()
    if projected:
        if not isinstance(z, CategoricalZTable):
            raise TypeError("projected mixture needs a CategoricalZTable")
        target = projected_target(z, t, gamma, rule)
        out.masses[t.x, t.a] = (1 - alpha) * z.masses[t.x, t.a] + alpha * target
        return out
    if not isinstance(z, DiscreteZTable):
        raise TypeError("unprojected mixture needs a DiscreteZTable")
    g = _discount(t, gamma)
    old = z.dists[t.x][t.a]
    if g == 0.0:
        target = GeneralDiscrete.dirac(t.r)
    else:
        row = z.dists[t.x_next]
        if rule == "q_learning":
            a2 = greedy_action([float(np.dot(d.mass, d.locations)) for d in row])
        else:
            a2 = t.a_next
        target = row[a2].affine(t.r, g)
    new = GeneralDiscrete(
        np.concatenate([old.locations, target.locations]),
        np.concatenate([(1 - alpha) * old.mass, alpha * target.mass]),
    )
    if new.size > cap:
        raise SupportOverflowError(f"entry ({t.x}, {t.a}) needs {new.size} atoms (cap {cap})")
    out.dists[t.x][t.a] = new
    return out


def cdf_gradient_update(
    z: CategoricalZTable, t: TransitionSample, alpha_prime: float, gamma: float,
    rule: Rule = "sarsa", inplace: bool = False,
) -> CategoricalZTable:
    """``F(x,a) <- F(x,a) + alpha' 2c (F_target - F(x,a))``.

    With ``alpha' = alpha / (2c)`` this coincides with the projected mixture
    update of step ``alpha``.
    """
    c = z.support.require_spacing()
    out = z if inplace else z.copy()
    target_cdf = np.cumsum(projected_target(z, t, gamma, rule))
    F = np.cumsum(z.masses[t.x, t.a])
    F_new = F + alpha_prime * cdf_direction(F, target_cdf, c)
    out.masses[t.x, t.a] = np.diff(F_new, prepend=0.0)
    return out


def pmf_gradient_update(
    z: CategoricalZTable, t: TransitionSample, alpha: float, gamma: float,
    rule: Rule = "sarsa", inplace: bool = False,
) -> CategoricalZTable:
    """``P(x,a) <- P(x,a) + alpha * pmf-direction(Z(x,a), target)``; not mean-preserving."""
    c = z.support.require_spacing()
    out = z if inplace else z.copy()
    target_cdf = np.cumsum(projected_target(z, t, gamma, rule))
    F = np.cumsum(z.masses[t.x, t.a])
    out.masses[t.x, t.a] = z.masses[t.x, t.a] + alpha * pmf_direction(F, target_cdf, c)
    return out


def q_policy_evaluation(mdp: FiniteMDP, policy: np.ndarray) -> np.ndarray:
    """``Q^pi`` by a direct linear solve of ``(I - gamma P_pi) q = r``."""
    S, A = mdp.n_states, mdp.n_actions
    n = S * A
    # P_pi[(x,a), (x',a')] = P(x'|x,a) pi(a'|x') with terminal next states contributing 0
    pi = np.where(mdp.terminal[:, None], 0.0, np.asarray(policy))
    P_pi = np.einsum("xay,yb->xayb", mdp.transition, pi).reshape(n, n)
    r = mdp.expected_reward.reshape(n)
    return np.linalg.solve(np.eye(n) - mdp.gamma * P_pi, r).reshape(S, A)


def max_cramer_distance(z1: CategoricalZTable, z2: CategoricalZTable) -> float:
    """``sup_{x,a} l2(Z1(x,a), Z2(x,a))``."""
    diff = (z1.cdfs() - z2.cdfs())[..., :-1]
    gaps = np.diff(z1.support.atoms)
    return float(np.sqrt(np.max(np.sum(gaps * diff * diff, axis=2))))


def make_ztable(support: Optional[Support], q0: np.ndarray):
    """Distribution table matching ``q0`` in expectation, categorical if a support is given."""
    if support is None:
        return DiscreteZTable.from_values(q0)
    return CategoricalZTable.from_values(support, q0)
