"""Categorical return distributions on a fixed atom grid.

A :class:`Support` is an ascending grid of atoms ``z_1 < ... < z_K``. A
:class:`Categorical` stores a (possibly signed) mass vector on a support, and a
:class:`GeneralDiscrete` stores an arbitrary finite mixture of Diracs, which is
what a Bellman target ``r + gamma * Z`` looks like before projection.

Update directions returned by :func:`grad_cramer_cdf` and :func:`grad_cramer_pmf`
point from the prediction towards the target. They are the *negated* calculus
gradients of the squared Cramer distance and are meant to be added:
``F <- F + step * direction``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Literal, Optional, Union

import numpy as np

MASS_TOL = 1e-12
MERGE_TOL = 1e-12


class SupportMismatchError(ValueError):
    """Two distributions live on different atom grids."""


class SpacingError(ValueError):
    """An operation needs a c-spaced support but got an irregular one."""


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=np.float64, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Support:
    """Strictly ascending atom grid.

    ``spacing`` is set when consecutive atoms are exactly ``c`` apart, either
    because the grid was built with :meth:`uniform` or because the differences
    were found equal to within a relative ``1e-9`` on construction.
    """

    atoms: np.ndarray
    spacing: Optional[float] = None

    def __post_init__(self):
        atoms = _readonly(self.atoms)
        if atoms.ndim != 1 or atoms.size < 2:
            raise ValueError("support needs at least two atoms")
        gaps = np.diff(atoms)
        if not np.all(gaps > 0):
            raise ValueError("support atoms must be strictly ascending")
        spacing = self.spacing
        if spacing is None:
            c = gaps[0]
            if np.all(np.abs(gaps - c) <= 1e-9 * abs(c)):
                spacing = float(c)
        elif not np.all(np.abs(gaps - spacing) <= 1e-9 * abs(spacing)):
            raise SpacingError(f"atoms are not {spacing}-spaced")
        object.__setattr__(self, "atoms", atoms)
        object.__setattr__(self, "spacing", None if spacing is None else float(spacing))

    @classmethod
    def uniform(cls, lo: float, hi: float, n_atoms: int) -> "Support":
        c = (hi - lo) / (n_atoms - 1)
        return cls(lo + c * np.arange(n_atoms), spacing=c)

    @classmethod
    def integer(cls, lo: int, hi: int) -> "Support":
        """1-spaced support ``lo, lo+1, ..., hi``."""
        return cls(np.arange(lo, hi + 1, dtype=np.float64), spacing=1.0)

    @property
    def size(self) -> int:
        return self.atoms.size

    @property
    def lo(self) -> float:
        return float(self.atoms[0])

    @property
    def hi(self) -> float:
        return float(self.atoms[-1])

    def require_spacing(self) -> float:
        if self.spacing is None:
            raise SpacingError("operation requires a c-spaced support")
        return self.spacing

    def brackets(self, r_max: float, gamma: float) -> bool:
        """True when ``[z_1, z_K]`` contains ``[-r_max/(1-gamma), r_max/(1-gamma)]``."""
        bound = r_max / (1.0 - gamma) * (1.0 - 1e-12)  # slack for 1/(1-0.9) rounding up
        return self.lo <= -bound and self.hi >= bound

    def __len__(self) -> int:
        return self.atoms.size

    def __eq__(self, other) -> bool:
        return isinstance(other, Support) and np.array_equal(self.atoms, other.atoms)

    def __hash__(self) -> int:
        return hash(self.atoms.tobytes())


@dataclass(frozen=True, eq=False)
class Categorical:
    """Mass vector on a :class:`Support`.

    Masses may be negative. Pass ``check=False`` to skip the unit-mass check,
    which improper iterates (e.g. from PMF-gradient updates) need.
    """

    support: Support
    mass: np.ndarray
    check: bool = field(default=True, repr=False)

    def __post_init__(self):
        mass = _readonly(self.mass)
        if mass.shape != (self.support.size,):
            raise ValueError(f"mass has shape {mass.shape}, expected ({self.support.size},)")
        if self.check and abs(mass.sum() - 1.0) > MASS_TOL:
            raise ValueError(f"masses sum to {mass.sum()!r}, not 1")
        object.__setattr__(self, "mass", mass)

    @classmethod
    def from_cdf(cls, support: Support, cdf, check: bool = True) -> "Categorical":
        return cls(support, pmf_cdf_convert(cdf, "to_pmf"), check=check)

    @classmethod
    def dirac(cls, support: Support, index: int) -> "Categorical":
        mass = np.zeros(support.size)
        mass[index] = 1.0
        return cls(support, mass)

    @property
    def cdf(self) -> np.ndarray:
        return np.cumsum(self.mass)

    @property
    def total_mass(self) -> float:
        return float(self.mass.sum())

    def to_general(self) -> "GeneralDiscrete":
        return GeneralDiscrete(self.support.atoms, self.mass)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, Categorical)
            and self.support == other.support
            and np.array_equal(self.mass, other.mass)
        )


@dataclass(frozen=True, eq=False)
class GeneralDiscrete:
    """Finite mixture of Diracs at arbitrary locations.

    Locations are sorted on construction and locations closer than
    ``MERGE_TOL`` are merged by summing their masses. Zero-mass atoms are dropped.
    """

    locations: np.ndarray
    mass: np.ndarray

    def __post_init__(self):
        loc = np.asarray(self.locations, dtype=np.float64).ravel()
        m = np.asarray(self.mass, dtype=np.float64).ravel()
        if loc.shape != m.shape:
            raise ValueError("locations and mass must have equal length")
        if np.any(m < 0):
            raise ValueError("GeneralDiscrete masses must be nonnegative")
        loc, m = _merge_atoms(loc, m)
        if loc.size == 0:
            raise ValueError("GeneralDiscrete needs at least one atom with positive mass")
        if abs(m.sum() - 1.0) > MASS_TOL:
            raise ValueError(f"masses sum to {m.sum()!r}, not 1")
        object.__setattr__(self, "locations", _readonly(loc))
        object.__setattr__(self, "mass", _readonly(m))

    @classmethod
    def dirac(cls, y: float) -> "GeneralDiscrete":
        return cls(np.array([y]), np.array([1.0]))

    @property
    def size(self) -> int:
        return self.locations.size

    def affine(self, shift: float, scale: float) -> "GeneralDiscrete":
        """Law of ``shift + scale * X``; ``scale`` must be nonnegative."""
        if scale < 0:
            raise ValueError("scale must be nonnegative")
        return GeneralDiscrete(shift + scale * self.locations, self.mass)

    def cdf_at(self, y) -> np.ndarray:
        idx = np.searchsorted(self.locations, np.asarray(y, dtype=np.float64), side="right")
        cum = np.concatenate(([0.0], np.cumsum(self.mass)))
        return cum[idx]


def _merge_atoms(loc: np.ndarray, m: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    keep = m > 0
    loc, m = loc[keep], m[keep]
    if loc.size == 0:
        return loc, m
    order = np.argsort(loc, kind="stable")
    loc, m = loc[order], m[order]
    # a new group starts wherever the gap to the previous atom exceeds the tolerance
    starts = np.concatenate(([True], np.diff(loc) > MERGE_TOL))
    group = np.cumsum(starts) - 1
    merged_m = np.bincount(group, weights=m)
    merged_loc = loc[starts]
    return merged_loc, merged_m


Distribution = Union[Categorical, GeneralDiscrete]


def expectation(d: Distribution) -> float:
    """Mean of a categorical or general discrete distribution, ``sum_i m_i y_i``."""
    if isinstance(d, Categorical):
        return float(np.dot(d.mass, d.support.atoms))
    return float(np.dot(d.mass, d.locations))


def _check_same_support(p: Categorical, q: Categorical) -> Support:
    if p.support != q.support:
        raise SupportMismatchError("distributions are on different supports")
    return p.support


def cramer_distance(p: Categorical, q: Categorical) -> float:
    """Cramer (l2) distance between two categoricals on one support."""
    support = _check_same_support(p, q)
    diff = (p.cdf - q.cdf)[:-1]
    return float(np.sqrt(np.sum(np.diff(support.atoms) * diff * diff)))


def cramer_distance_general(p: Distribution, q: Distribution) -> float:
    """Cramer distance between arbitrary finite discrete distributions.

    Integrates the squared CDF difference exactly over the merged breakpoints.
    """
    p_g = p.to_general() if isinstance(p, Categorical) else p
    q_g = q.to_general() if isinstance(q, Categorical) else q
    grid = np.union1d(p_g.locations, q_g.locations)
    if grid.size < 2:
        return 0.0
    # the CDFs are constant on [grid[i], grid[i+1])
    diff = p_g.cdf_at(grid[:-1]) - q_g.cdf_at(grid[:-1])
    return float(np.sqrt(np.sum(np.diff(grid) * diff * diff)))


def project_masses(locations, masses, atoms: np.ndarray) -> np.ndarray:
    """Cramer-project signed point masses onto ``atoms``; returns a mass vector.

    Locations below ``atoms[0]`` or above ``atoms[-1]`` are clamped to the edge
    atom; interior points are split linearly between their two neighbours.
    Masses may be signed, the map is linear in them.
    """
    y = np.asarray(locations, dtype=np.float64).ravel()
    m = np.asarray(masses, dtype=np.float64).ravel()
    K = atoms.size
    y = np.clip(y, atoms[0], atoms[-1])
    # z_i < y <= z_{i+1} -> hi index i+1
    hi = np.clip(np.searchsorted(atoms, y, side="left"), 1, K - 1)
    lo = hi - 1
    width = atoms[hi] - atoms[lo]
    w_lo = (atoms[hi] - y) / width
    w_hi = (y - atoms[lo]) / width
    out = np.bincount(lo, weights=m * w_lo, minlength=K)
    out += np.bincount(hi, weights=m * w_hi, minlength=K)
    return out


def project_masses_batch(locations: np.ndarray, masses: np.ndarray, atoms: np.ndarray) -> np.ndarray:
    """Row-wise :func:`project_masses` for ``(B, n)`` location/mass arrays."""
    y = np.clip(np.asarray(locations, dtype=np.float64), atoms[0], atoms[-1])
    m = np.asarray(masses, dtype=np.float64)
    B = y.shape[0]
    K = atoms.size
    hi = np.clip(np.searchsorted(atoms, y.ravel(), side="left"), 1, K - 1).reshape(y.shape)
    lo = hi - 1
    width = atoms[hi] - atoms[lo]
    w_lo = (atoms[hi] - y) / width
    w_hi = (y - atoms[lo]) / width
    rows = np.repeat(np.arange(B) * K, y.shape[1]).reshape(y.shape)
    out = np.bincount((rows + lo).ravel(), weights=(m * w_lo).ravel(), minlength=B * K)
    out += np.bincount((rows + hi).ravel(), weights=(m * w_hi).ravel(), minlength=B * K)
    return out.reshape(B, K)


def cramer_project(d: Distribution, target: Support) -> Categorical:
    """Cramer projection of ``d`` onto the ``target`` grid."""
    if isinstance(d, Categorical):
        loc, m = d.support.atoms, d.mass
        check = d.check
    else:
        loc, m = d.locations, d.mass
        check = True
    return Categorical(target, project_masses(loc, m, target.atoms), check=check)


def pmf_cdf_convert(v, direction: Literal["to_cdf", "to_pmf"]) -> np.ndarray:
    """Prefix sums (``to_cdf``) or first differences (``to_pmf``) along the last axis."""
    v = np.asarray(v, dtype=np.float64)
    if direction == "to_cdf":
        return np.cumsum(v, axis=-1)
    if direction == "to_pmf":
        return np.diff(v, axis=-1, prepend=0.0)
    raise ValueError(f"unknown direction {direction!r}")


def cdf_direction(F: np.ndarray, F_target: np.ndarray, c: float) -> np.ndarray:
    """``2c (F_target - F)``, elementwise on CDF arrays (last axis = atoms)."""
    return 2.0 * c * (F_target - F)


def pmf_direction(F: np.ndarray, F_target: np.ndarray, c: float) -> np.ndarray:
    """PMF-space direction from CDF arrays.

    Component ``i`` is ``sum_{j >= i, j < K} 2c (F_target_j - F_j)``; the last
    atom's CDF term does not enter the squared Cramer distance.
    """
    d = 2.0 * c * (F_target - F)
    d[..., -1] = 0.0
    return np.flip(np.cumsum(np.flip(d, axis=-1), axis=-1), axis=-1)


def grad_cramer_cdf(p: Categorical, target: Categorical) -> np.ndarray:
    """Update direction for the CDF of ``p`` towards ``target``: ``2c (F' - F)``."""
    c = _check_same_support(p, target).require_spacing()
    return cdf_direction(p.cdf, target.cdf, c)


def grad_cramer_pmf(p: Categorical, target: Categorical) -> np.ndarray:
    """Update direction for the masses of ``p`` towards ``target``.

    Equal to minus the partial derivatives of the squared Cramer distance with
    respect to the masses of ``p``. Unlike :func:`grad_cramer_cdf`, adding it
    does not preserve the mean (nor, in general, the total mass).
    """
    c = _check_same_support(p, target).require_spacing()
    return pmf_direction(p.cdf, target.cdf, c)
