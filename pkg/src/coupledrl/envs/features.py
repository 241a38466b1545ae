"""Fourier basis features over a bounded box."""

from __future__ import annotations

import itertools

import numpy as np


def fourier_coefficients(order: int, dim: int) -> np.ndarray:
    """All integer vectors in ``{0..order}^dim`` except zero, lexicographic order."""
    if order < 1:
        raise ValueError("order must be >= 1")
    coeffs = np.array(list(itertools.product(range(order + 1), repeat=dim)), dtype=np.float64)
    return coeffs[1:]


class FourierBasis:
    """``phi(s)_j = cos(pi * c_j . s_bar)`` with ``s_bar`` the state rescaled to ``[0,1]^d``.

    The constant (all-zero coefficient) term is left out; agents carry a
    separate bias. Out-of-bounds states are clamped.
    """

    def __init__(self, bounds, order: int):
        self.bounds = np.asarray(bounds, dtype=np.float64)
        if self.bounds.ndim != 2 or self.bounds.shape[1] != 2:
            raise ValueError("bounds must have shape (d, 2)")
        self.order = order
        self.coeffs = fourier_coefficients(order, self.bounds.shape[0])
        self._lo = self.bounds[:, 0]
        self._span = self.bounds[:, 1] - self.bounds[:, 0]

    @property
    def n_features(self) -> int:
        return self.coeffs.shape[0]

    def normalize(self, state) -> np.ndarray:
        s = (np.asarray(state, dtype=np.float64) - self._lo) / self._span
        return np.clip(s, 0.0, 1.0)

    def __call__(self, state) -> np.ndarray:
        """Features for one state ``(d,)`` or a batch ``(B, d)``."""
        return np.cos(np.pi * (self.normalize(state) @ self.coeffs.T))


def fourier_features(state, order: int, bounds) -> np.ndarray:
    return FourierBasis(bounds, order)(state)


def n_fourier_features(order: int, dim: int) -> int:
    return (order + 1) ** dim - 1
