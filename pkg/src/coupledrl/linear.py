"""Linear value and CDF approximators with semi-gradient TD updates.

``LinearQ`` predicts ``theta . phi``. ``LinearZ`` predicts CDF values at the
atoms, ``F(z_i) = (W phi)_i``, extended as a step function: 0 below ``z_1`` and
``F(z_k)`` on ``[z_k, z_{k+1})``. Predictions may be improper (non-monotone,
outside ``[0, 1]``, total mass different from 1).

The mean of a linear CDF prediction is ``z . diff(W phi)``, i.e. the row
vector ``z^T C^{-1}`` applied to ``W phi`` with ``C`` the lower-triangular ones
matrix.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .dist_core import Support, pmf_cdf_convert, project_masses
from .envs.sampling import TransitionSample

PhiFn = Callable[[object, int], np.ndarray]


@dataclass
class LinearQ:
    theta: np.ndarray

    def __post_init__(self):
        self.theta = np.asarray(self.theta, dtype=np.float64)


@dataclass
class LinearZ:
    w: np.ndarray  # (K, d)
    support: Support

    def __post_init__(self):
        self.w = np.asarray(self.w, dtype=np.float64)
        if self.w.ndim != 2 or self.w.shape[0] != self.support.size:
            raise ValueError("w must have shape (K, d)")

    def expectation_map(self) -> np.ndarray:
        """Row vector ``z^T C^{-1} W``: the mean is this dotted with ``phi``."""
        z = self.support.atoms
        zc = z - np.append(z[1:], 0.0)  # z^T C^{-1}
        return zc @ self.w


@dataclass(frozen=True)
class ExtendedCDF:
    """CDF values at the atoms plus the step extension to the real line."""

    support: Support
    values: np.ndarray

    def __call__(self, y) -> np.ndarray:
        idx = np.searchsorted(self.support.atoms, np.asarray(y, dtype=np.float64), side="right")
        return np.concatenate(([0.0], self.values))[idx]

    @property
    def pmf(self) -> np.ndarray:
        return pmf_cdf_convert(self.values, "to_pmf")

    @property
    def total_mass(self) -> float:
        return float(self.values[-1])

    @property
    def proper(self) -> bool:
        v = self.values
        return bool(np.all(np.diff(v, prepend=0.0) >= 0) and abs(v[-1] - 1.0) <= 1e-9)


def _check_dim(vec: np.ndarray, phi: np.ndarray) -> np.ndarray:
    phi = np.asarray(phi, dtype=np.float64)
    if phi.shape[-1] != vec.shape[-1]:
        raise ValueError(f"feature dimension {phi.shape[-1]} != parameter dimension {vec.shape[-1]}")
    return phi


def linear_q_predict(m: LinearQ, phi) -> float:
    phi = _check_dim(m.theta, phi)
    return float(m.theta @ phi)


def linear_cdf_predict(m: LinearZ, phi) -> ExtendedCDF:
    phi = _check_dim(m.w, phi)
    return ExtendedCDF(m.support, m.w @ phi)


def expectation_from_linear_cdf(m: LinearZ, phi) -> float:
    phi = _check_dim(m.w, phi)
    return float(m.support.atoms @ pmf_cdf_convert(m.w @ phi, "to_pmf"))


def _discount(t: TransitionSample, gamma: float) -> float:
    return 0.0 if t.terminal else gamma


def semigradient_q_update(m: LinearQ, t: TransitionSample, phi_fn: PhiFn, alpha: float, gamma: float) -> LinearQ:
    """``theta <- theta + alpha (r + gamma theta.phi' - theta.phi) phi``."""
    phi = _check_dim(m.theta, phi_fn(t.x, t.a))
    g = _discount(t, gamma)
    boot = 0.0 if g == 0.0 else m.theta @ phi_fn(t.x_next, t.a_next)
    td = t.r + g * boot - m.theta @ phi
    return LinearQ(m.theta + alpha * td * phi)


def projected_target_cdf(m: LinearZ, t: TransitionSample, phi_fn: PhiFn, gamma: float) -> np.ndarray:
    """CDF of ``Pi_C (r + gamma Z(x', a'))`` for the linear prediction at ``(x', a')``.

    Signed masses are projected as they are, so the target keeps the total
    mass of the next prediction. Terminal samples give ``Pi_C delta_r``.
    """
    m.support.require_spacing()
    atoms = m.support.atoms
    g = _discount(t, gamma)
    if g == 0.0:
        return np.cumsum(project_masses([t.r], [1.0], atoms))
    p_next = pmf_cdf_convert(m.w @ phi_fn(t.x_next, t.a_next), "to_pmf")
    return np.cumsum(project_masses(t.r + g * atoms, p_next, atoms))


def semigradient_cdf_update(m: LinearZ, t: TransitionSample, phi_fn: PhiFn, alpha: float, gamma: float) -> LinearZ:
    """``W <- W + alpha (F_target - W phi) phi^T``."""
    phi = _check_dim(m.w, phi_fn(t.x, t.a))
    target = projected_target_cdf(m, t, phi_fn, gamma)
    return LinearZ(m.w + alpha * np.outer(target - m.w @ phi, phi), m.support)


def matched_init(support: Support, n_features: int, rng: np.random.Generator | None = None,
                 scale: float = 0.1) -> tuple[LinearQ, LinearZ]:
    """Expectation-matched initial pair for features whose component 0 is a constant 1.

    The last CDF row of ``W`` is the unit vector on the constant feature, so
    every prediction has total mass 1 and keeps it under
    :func:`semigradient_cdf_update`. The first ``K-1`` rows are random (or zero
    when ``rng`` is None) and ``theta`` is set to ``z^T C^{-1} W`` so both
    models predict the same mean for every feature vector.
    """
    K = support.size
    w = np.zeros((K, n_features))
    if rng is not None:
        w[:-1] = scale * rng.standard_normal((K - 1, n_features))
    w[-1, 0] = 1.0
    z = LinearZ(w, support)
    return LinearQ(z.expectation_map()), z


def unconstrained_init(support: Support, n_features: int, rng: np.random.Generator, scale: float = 0.1) -> LinearZ:
    """Plain random ``W`` whose predictions need not have unit mass."""
    return LinearZ(scale * rng.standard_normal((support.size, n_features)), support)
