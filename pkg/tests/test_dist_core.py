import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from coupledrl.dist_core import (
    Categorical,
    GeneralDiscrete,
    SpacingError,
    Support,
    SupportMismatchError,
    cdf_direction,
    cramer_distance,
    cramer_distance_general,
    cramer_project,
    expectation,
    grad_cramer_cdf,
    grad_cramer_pmf,
    pmf_cdf_convert,
    pmf_direction,
    project_masses,
)

Z3 = Support.integer(0, 2)


def cat(support, pmf):
    return Categorical(support, np.asarray(pmf, dtype=float))


# -- oracles written independently of the library code -------------------------------------------


def cramer_oracle(locs_p, m_p, locs_q, m_q):
    """Integral of (F_p - F_q)^2 over the real line, by explicit breakpoint sweep."""
    pts = sorted(set(locs_p) | set(locs_q))

    def F(locs, ms, y):
        return sum(m for l, m in zip(locs, ms) if l <= y)

    total = 0.0
    for a, b in zip(pts[:-1], pts[1:]):
        diff = F(locs_p, m_p, a) - F(locs_q, m_q, a)
        total += (b - a) * diff * diff
    return math.sqrt(total)


def project_oracle(y, atoms):
    """Three-case split of one Dirac, written as a loop."""
    out = [0.0] * len(atoms)
    if y <= atoms[0]:
        out[0] = 1.0
        return out
    if y >= atoms[-1]:
        out[-1] = 1.0
        return out
    for i in range(len(atoms) - 1):
        if atoms[i] <= y <= atoms[i + 1]:
            w = (atoms[i + 1] - y) / (atoms[i + 1] - atoms[i])
            out[i] += w
            out[i + 1] += 1 - w
            return out
    raise AssertionError("unreachable")


# -- support -----------------------------------------------------------------------------------------


def test_support_spacing_and_validation():
    assert Support.uniform(-1, 1, 5).spacing == pytest.approx(0.5)
    assert Support([0.0, 1.0, 3.0]).spacing is None
    with pytest.raises(ValueError):
        Support([0.0])
    with pytest.raises(ValueError):
        Support([0.0, 0.0, 1.0])
    with pytest.raises(SpacingError):
        Support([0.0, 1.0, 3.0]).require_spacing()


def test_bracket_condition():
    assert Support.uniform(-10, 10, 21).brackets(1.0, 0.9)
    assert not Support.uniform(-5, 5, 11).brackets(1.0, 0.9)


# -- expectation --------------------------------------------------------------------------------------


def test_expectation_examples():
    assert expectation(Categorical.dirac(Z3, 1)) == 1.0
    assert expectation(cat(Z3, [1 / 3, 1 / 3, 1 / 3])) == pytest.approx(1.0, abs=1e-15)


def test_expectation_random_mixture_matches_weighted_sum():
    rng = np.random.default_rng(0)
    for _ in range(50):
        locs = np.sort(rng.uniform(-5, 5, 5))
        m = rng.dirichlet(np.ones(5))
        oracle = sum(float(a) * float(b) for a, b in zip(locs, m))
        assert abs(expectation(GeneralDiscrete(locs, m)) - oracle) <= 1e-12


# -- Cramer distance ----------------------------------------------------------------------------------


def test_cramer_examples():
    p = Categorical.from_cdf(Z3, [1 / 3, 2 / 3, 1])
    q = Categorical.from_cdf(Z3, [1 / 2, 1 / 2, 1])
    assert cramer_distance(p, p) == 0.0
    assert cramer_distance(p, q) == pytest.approx(math.sqrt(1 / 18), abs=1e-15)
    z01 = Support.integer(0, 1)
    assert cramer_distance(cat(z01, [0.5, 0.5]), Categorical.dirac(z01, 1)) == pytest.approx(0.5)


def test_cramer_support_mismatch():
    with pytest.raises(SupportMismatchError):
        cramer_distance(Categorical.dirac(Z3, 0), Categorical.dirac(Support.integer(0, 3), 0))


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10_000))
def test_cramer_matches_integral_oracle(seed):
    rng = np.random.default_rng(seed)
    K = int(rng.integers(2, 8))
    atoms = np.cumsum(rng.uniform(0.1, 2.0, K))
    s = Support(atoms)
    p, q = rng.dirichlet(np.ones(K)), rng.dirichlet(np.ones(K))
    got = cramer_distance(cat(s, p), cat(s, q))
    assert got == pytest.approx(cramer_oracle(atoms, p, atoms, q), rel=1e-12, abs=1e-14)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10_000))
def test_cramer_metric_axioms(seed):
    rng = np.random.default_rng(seed)
    s = Support.uniform(-2, 2, 9)
    p, q, r = (cat(s, rng.dirichlet(np.ones(9))) for _ in range(3))
    assert cramer_distance(p, q) >= 0
    assert cramer_distance(p, q) == pytest.approx(cramer_distance(q, p), abs=1e-15)
    assert cramer_distance(p, r) <= cramer_distance(p, q) + cramer_distance(q, r) + 1e-12


def test_cramer_general_matches_oracle():
    rng = np.random.default_rng(3)
    for _ in range(20):
        lp, lq = np.sort(rng.normal(size=4)), np.sort(rng.normal(size=6))
        mp, mq = rng.dirichlet(np.ones(4)), rng.dirichlet(np.ones(6))
        got = cramer_distance_general(GeneralDiscrete(lp, mp), GeneralDiscrete(lq, mq))
        assert got == pytest.approx(cramer_oracle(lp, mp, lq, mq), rel=1e-12)


# -- projection -----------------------------------------------------------------------------------------


def test_projection_examples():
    np.testing.assert_array_equal(cramer_project(GeneralDiscrete.dirac(1.0), Z3).mass, [0, 1, 0])
    z01 = Support.integer(0, 1)
    np.testing.assert_allclose(cramer_project(GeneralDiscrete.dirac(0.5), z01).mass, [0.5, 0.5])
    zs = Support.integer(-1, 1)
    np.testing.assert_array_equal(cramer_project(GeneralDiscrete.dirac(-3.0), zs).mass, [1, 0, 0])
    d = GeneralDiscrete([0.3, 1.7], [0.5, 0.5])
    assert expectation(cramer_project(d, Z3)) == pytest.approx(1.0, abs=1e-15)


@settings(max_examples=100, deadline=None)
@given(st.floats(-20, 20, allow_nan=False))
def test_projection_of_dirac_matches_split_rule(y):
    s = Support.uniform(-10, 10, 11)
    got = cramer_project(GeneralDiscrete.dirac(y), s).mass
    np.testing.assert_allclose(got, project_oracle(y, list(s.atoms)), atol=1e-12)


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 10_000))
def test_projection_preserves_expectation_in_bracket(seed):
    rng = np.random.default_rng(seed)
    s = Support(np.cumsum(rng.uniform(0.2, 1.5, 12)))
    n = int(rng.integers(1, 30))
    d = GeneralDiscrete(rng.uniform(s.lo, s.hi, n), rng.dirichlet(np.ones(n)))
    proj = cramer_project(d, s)
    assert proj.mass.min() >= 0
    assert abs(proj.mass.sum() - 1) <= 1e-12
    assert abs(expectation(proj) - expectation(d)) <= 1e-12


def test_projection_clamps_outside_bracket():
    s = Support.integer(0, 2)
    d = GeneralDiscrete([5.0], [1.0])
    assert expectation(cramer_project(d, s)) == 2.0  # mean moves, as the bracket requires


def test_projection_is_closest_categorical():
    rng = np.random.default_rng(7)
    s = Support.uniform(-3, 3, 7)
    for _ in range(30):
        n = int(rng.integers(1, 10))
        d = GeneralDiscrete(rng.uniform(-4, 4, n), rng.dirichlet(np.ones(n)))
        best = cramer_distance_general(cramer_project(d, s), d)
        for _ in range(20):
            q = cat(s, rng.dirichlet(np.ones(7)))
            assert best <= cramer_distance_general(q, d) + 1e-12


def test_project_masses_linear_in_signed_masses():
    atoms = Support.uniform(0, 4, 5).atoms
    y = np.array([0.3, 1.1, 3.9])
    m1, m2 = np.array([0.5, -0.2, 0.7]), np.array([-1.0, 2.0, 0.0])
    np.testing.assert_allclose(
        project_masses(y, 2 * m1 + 3 * m2, atoms),
        2 * project_masses(y, m1, atoms) + 3 * project_masses(y, m2, atoms),
        atol=1e-14,
    )


# -- conversions and directions --------------------------------------------------------------------------


def test_pmf_cdf_round_trip():
    np.testing.assert_allclose(pmf_cdf_convert([1 / 3, 1 / 3, 1 / 3], "to_cdf"), [1 / 3, 2 / 3, 1])
    rng = np.random.default_rng(1)
    for _ in range(20):
        v = rng.normal(size=9)
        np.testing.assert_allclose(pmf_cdf_convert(pmf_cdf_convert(v, "to_cdf"), "to_pmf"), v, atol=1e-13)
        F = np.cumsum(rng.dirichlet(np.ones(9)))
        s = Support.uniform(-2, 2, 9)
        assert s.atoms @ pmf_cdf_convert(F, "to_pmf") == pytest.approx(expectation(Categorical.from_cdf(s, F)))


def test_cdf_direction_examples_and_mixture_identity():
    p = Categorical.from_cdf(Z3, [1 / 3, 2 / 3, 1])
    t = Categorical.from_cdf(Z3, [1 / 2, 1 / 2, 1])
    np.testing.assert_allclose(grad_cramer_cdf(p, t), [1 / 3, -1 / 3, 0], atol=1e-15)
    np.testing.assert_array_equal(grad_cramer_cdf(p, p), 0.0)
    rng = np.random.default_rng(2)
    for _ in range(50):
        s = Support.uniform(-5, 5, int(rng.integers(2, 20)))
        c = s.require_spacing()
        F = np.cumsum(rng.dirichlet(np.ones(s.size)))
        Ft = np.cumsum(rng.dirichlet(np.ones(s.size)))
        alpha = rng.uniform()
        np.testing.assert_allclose(F + alpha / (2 * c) * cdf_direction(F, Ft, c), (1 - alpha) * F + alpha * Ft,
                                   atol=1e-14)


def test_pmf_direction_worked_example():
    p = Categorical.from_cdf(Z3, [1 / 3, 2 / 3, 1])
    t = Categorical.from_cdf(Z3, [1 / 2, 1 / 2, 1])
    v = grad_cramer_pmf(p, t)
    np.testing.assert_allclose(v, [0, -1 / 3, 0], atol=1e-12)
    np.testing.assert_array_equal(grad_cramer_pmf(p, p), 0.0)
    for alpha in (0.1, 0.5, 1.0):
        assert Z3.atoms @ (p.mass + alpha * v) == pytest.approx(1 - alpha / 3, abs=1e-12)


def test_pmf_direction_matches_negated_loss_gradient():
    """Finite differences of sum_{i<K} c (F_i - F'_i)^2 in PMF coordinates."""
    rng = np.random.default_rng(4)
    c, K = 0.5, 6
    p, Ft = rng.dirichlet(np.ones(K)), np.cumsum(rng.dirichlet(np.ones(K)))

    def loss(pm):
        return c * np.sum((np.cumsum(pm) - Ft)[:-1] ** 2)

    h = 1e-6
    fd = np.array([(loss(p + h * e) - loss(p - h * e)) / (2 * h) for e in np.eye(K)])
    np.testing.assert_allclose(pmf_direction(np.cumsum(p), Ft, c), -fd, atol=1e-8)


def test_mass_conservation_cdf_yes_pmf_no():
    p = Categorical.from_cdf(Z3, [1 / 3, 2 / 3, 1])
    t = Categorical.from_cdf(Z3, [1 / 2, 1 / 2, 1])
    # CDF form: last component 2c(F'_K - F_K) = 0, so total mass stays 1
    assert grad_cramer_cdf(p, t)[-1] == 0.0
    # PMF form: the worked direction (0, -1/3, 0) does not sum to zero
    assert grad_cramer_pmf(p, t).sum() == pytest.approx(-1 / 3)


def test_directions_need_c_spacing():
    s = Support([0.0, 1.0, 3.0])
    p = Categorical.dirac(s, 0)
    with pytest.raises(SpacingError):
        grad_cramer_cdf(p, p)
    with pytest.raises(SpacingError):
        grad_cramer_pmf(p, p)


def test_general_discrete_merges_coincident_atoms():
    d = GeneralDiscrete([1.0, 1.0 + 1e-14, 2.0], [0.25, 0.25, 0.5])
    assert d.size == 2
    np.testing.assert_allclose(d.mass, [0.5, 0.5])


def test_categorical_rejects_improper_mass_unless_unchecked():
    with pytest.raises(ValueError):
        cat(Z3, [0.5, 0.6, 0.0])
    Categorical(Z3, np.array([0.5, 0.6, 0.0]), check=False)
    # signed but summing to one is fine
    cat(Z3, [1.5, -1.0, 0.5])
