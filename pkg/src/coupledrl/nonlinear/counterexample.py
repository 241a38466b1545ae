"""Sigmoid-CDF representation where a semi-gradient step breaks mean agreement.

Setup: atoms ``(-1, 0, 1)``, predicted CDF ``[sigmoid(w1 x1), sigmoid(w2 x2), 1]``
at features ``x = (1, 2)`` with ``w = (-ln 2, ln 2 / 2)``, i.e. CDF
``(1/3, 2/3, 1)`` with mean 0. The target CDF ``(0, 1, 1)`` also has mean 0, so
the expected-value learner does not move. One gradient step on the squared
CDF error moves the distributional mean to about -0.05.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

ATOMS = np.array([-1.0, 0.0, 1.0])
W0 = np.array([-math.log(2.0), -math.log(0.5) / 2.0])
PHI = np.array([1.0, 2.0])
TARGET_CDF = np.array([0.0, 1.0, 1.0])


def sigmoid(y):
    return 1.0 / (1.0 + np.exp(-y))


def sigmoid_cdf(w: np.ndarray, phi: np.ndarray = PHI) -> np.ndarray:
    return np.array([sigmoid(w[0] * phi[0]), sigmoid(w[1] * phi[1]), 1.0])


def cdf_mean(cdf: np.ndarray, atoms: np.ndarray = ATOMS) -> float:
    return float(atoms @ np.diff(cdf, prepend=0.0))


def half_sq_error_grad(w: np.ndarray, target: np.ndarray = TARGET_CDF, phi: np.ndarray = PHI) -> np.ndarray:
    """Gradient of ``0.5 * sum_i (psi_i - F_i)^2`` with respect to ``w``."""
    psi = sigmoid_cdf(w, phi)
    s = psi[:2]
    return (psi[:2] - target[:2]) * s * (1.0 - s) * phi


@dataclass(frozen=True)
class CounterexampleReport:
    gradients: np.ndarray
    w1: np.ndarray
    E_Z0: float
    Q0: float
    E_Z1: float
    Q1: float

    @property
    def diverged(self) -> bool:
        return abs(self.E_Z1 - self.Q1) > 1e-3


def sigmoid_cdf_counterexample(alpha: float = 1.0) -> CounterexampleReport:
    """Run the one-step counterexample; ``w1 = w0 - alpha * grad``."""
    cdf0 = sigmoid_cdf(W0)
    E_Z0 = cdf_mean(cdf0)
    # linear value learner theta = 0, which agrees with E[Z0] = 0
    theta = np.zeros(2)
    Q0 = float(theta @ PHI)
    grads = half_sq_error_grad(W0)
    w1 = W0 - alpha * grads
    E_Z1 = cdf_mean(sigmoid_cdf(w1))
    td_error = cdf_mean(TARGET_CDF) - Q0
    theta = theta + alpha * td_error * PHI
    Q1 = float(theta @ PHI)
    return CounterexampleReport(grads, w1, E_Z0, Q0, E_Z1, Q1)
