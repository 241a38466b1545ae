import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from coupledrl.dist_core import Categorical, Support, expectation, pmf_cdf_convert
from coupledrl.envs import SampleSource, TransitionSample, TransitionSampler, random_finite, uniform_policy
from coupledrl.linear import (
    LinearQ,
    LinearZ,
    expectation_from_linear_cdf,
    linear_cdf_predict,
    linear_q_predict,
    matched_init,
    unconstrained_init,
    projected_target_cdf,
    semigradient_cdf_update,
    semigradient_q_update,
)
from coupledrl.tabular import CategoricalZTable, cdf_gradient_update, sarsa_update


def one_hot_phi(S, A):
    def phi(x, a):
        v = np.zeros(S * A)
        v[x * A + a] = 1.0
        return v
    return phi


def test_linear_q_predict():
    assert linear_q_predict(LinearQ(np.zeros(3)), [1.0, 2.0, 3.0]) == 0.0
    assert linear_q_predict(LinearQ([0.0, 1.0, 0.0]), [4.0, 5.0, 6.0]) == 5.0
    rng = np.random.default_rng(0)
    th, ph = rng.normal(size=50), rng.normal(size=50)
    oracle = 0.0
    for a, b in zip(th[::-1], ph[::-1]):
        oracle += a * b
    assert linear_q_predict(LinearQ(th), ph) == pytest.approx(oracle, rel=1e-12)
    with pytest.raises(ValueError):
        linear_q_predict(LinearQ(np.zeros(3)), np.zeros(4))


def test_linear_cdf_predict():
    s = Support.integer(0, 2)
    f = linear_cdf_predict(LinearZ(np.zeros((3, 2)), s), [1.0, 1.0])
    assert not f.proper and f.total_mass == 0.0
    w = np.arange(6.0).reshape(3, 2)
    np.testing.assert_array_equal(linear_cdf_predict(LinearZ(w, s), [0.0, 1.0]).values, w[:, 1])
    rng = np.random.default_rng(1)
    w, phi = rng.normal(size=(3, 4)), rng.normal(size=4)
    pred = linear_cdf_predict(LinearZ(w, s), phi)
    assert pred.pmf.sum() == pytest.approx(pred.total_mass, abs=1e-14)
    # step extension: 0 below z_1, F(z_k) on [z_k, z_{k+1})
    np.testing.assert_array_equal(pred([-0.5, 0.0, 0.99, 2.5]), [0.0, *pred.values[[0, 0, 2]]])


def test_expectation_from_linear_cdf():
    s = Support.integer(0, 2)
    w = np.array([[0.0], [1.0], [1.0]])  # CDF step at z_2 = 1
    assert expectation_from_linear_cdf(LinearZ(w, s), [1.0]) == 1.0
    w = np.array([[1 / 3], [2 / 3], [1.0]])
    assert expectation_from_linear_cdf(LinearZ(w, s), [1.0]) == pytest.approx(1.0, abs=1e-15)
    rng = np.random.default_rng(2)
    s = Support.uniform(-3, 3, 7)
    for _ in range(20):
        m = LinearZ(rng.normal(size=(7, 5)), s)
        phi = rng.normal(size=5)
        pmf = pmf_cdf_convert(m.w @ phi, "to_pmf")
        oracle = expectation(Categorical(s, pmf, check=False))
        assert expectation_from_linear_cdf(m, phi) == pytest.approx(oracle, abs=1e-12)
        assert m.expectation_map() @ phi == pytest.approx(oracle, abs=1e-12)


# -- expected semi-gradient ------------------------------------------------------------------------------


def test_q_update_examples():
    phi = lambda x, a: np.array([1.0, float(x)])
    m = LinearQ([0.5, 0.5])
    # theta . phi = 1 at x = 1, so r = 0.1 zeroes the TD error
    t = TransitionSample(1, 0, 0.1, 1, 0)
    np.testing.assert_allclose(semigradient_q_update(m, t, phi, 0.5, 0.9).theta, m.theta, atol=1e-15)
    t = TransitionSample(1, 0, 2.0, 1, 0, terminal=True)
    new = semigradient_q_update(m, t, phi, 1.0, 0.9)
    # target is r alone: td = 2 - 1 = 1, theta += phi
    np.testing.assert_allclose(new.theta, [1.5, 1.5])


def test_one_hot_q_reduces_to_sarsa():
    mdp = random_finite(seed=0)
    S, A = mdp.n_states, mdp.n_actions
    phi = one_hot_phi(S, A)
    q = np.random.default_rng(0).normal(size=(S, A))
    m = LinearQ(q.reshape(-1).copy())
    sampler = TransitionSampler(mdp, uniform_policy(mdp), SampleSource(0))
    for _ in range(200):
        t = sampler.sample()
        q = sarsa_update(q, t, 0.3, mdp.gamma)
        m = semigradient_q_update(m, t, phi, 0.3, mdp.gamma)
    np.testing.assert_allclose(m.theta.reshape(S, A), q, atol=1e-13)


# -- distributional semi-gradient -------------------------------------------------------------------------


def test_projected_target_examples():
    s = Support.integer(-3, 3)
    phi = lambda x, a: np.array([1.0])
    dirac_cdf = (s.atoms >= 1).astype(float)[:, None]  # Dirac at z = 1
    m = LinearZ(dirac_cdf, s)
    np.testing.assert_array_equal(projected_target_cdf(m, TransitionSample(0, 0, 0.0, 0, 0), phi, 1.0),
                                  dirac_cdf[:, 0])
    shifted = projected_target_cdf(m, TransitionSample(0, 0, 1.0, 0, 0), phi, 1.0)
    np.testing.assert_array_equal(shifted, (s.atoms >= 2).astype(float))
    rng = np.random.default_rng(3)
    s = Support.uniform(-10, 10, 21)
    for _ in range(20):
        pmf = np.zeros(21)
        pmf[5:16] = rng.dirichlet(np.ones(11))  # mass on [-5, 5], so the shift stays in range
        F = np.cumsum(pmf)
        m = LinearZ(F[:, None], s)
        r = rng.uniform(-2, 2)
        got = projected_target_cdf(m, TransitionSample(0, 0, r, 0, 0), phi, 0.9)
        mean_pred = s.atoms @ np.diff(F, prepend=0.0)
        assert s.atoms @ np.diff(got, prepend=0.0) == pytest.approx(r + 0.9 * mean_pred, abs=1e-10)


def test_cdf_update_fixed_point_and_rank_one():
    s = Support.integer(0, 2)
    phi = lambda x, a: np.array([1.0, 0.0]) if x == 0 else np.array([0.0, 1.0])
    w = np.array([[0.5, 0.5], [0.5, 0.5], [1.0, 1.0]])
    m = LinearZ(w, s)
    # target = Pi_C(0 + 1 * Z(1)) = Z(1) = Z(0): unchanged
    new = semigradient_cdf_update(m, TransitionSample(0, 0, 0.0, 1, 0), phi, 0.5, 1.0)
    np.testing.assert_array_equal(new.w, w)
    rng = np.random.default_rng(0)
    s = Support.uniform(-5, 5, 11)
    m = LinearZ(rng.normal(size=(11, 6)), s)
    phi = lambda x, a: np.random.default_rng(x * 7 + a).normal(size=6)
    delta = semigradient_cdf_update(m, TransitionSample(1, 0, 0.3, 2, 1), phi, 0.1, 0.9).w - m.w
    assert np.linalg.matrix_rank(delta, tol=1e-12) <= 1


def test_one_hot_cdf_reduces_to_tabular_cdf_gradient():
    mdp = random_finite(seed=1)
    S, A = mdp.n_states, mdp.n_actions
    b = mdp.r_max / (1 - mdp.gamma)
    s = Support.uniform(-b, b, 21)
    c = s.spacing
    phi = one_hot_phi(S, A)
    rng = np.random.default_rng(0)
    masses = rng.dirichlet(np.ones(21), size=(S, A))
    z = CategoricalZTable(s, masses)
    m = LinearZ(np.cumsum(masses, axis=2).reshape(S * A, 21).T.copy(), s)
    alpha = 0.2
    sampler = TransitionSampler(mdp, uniform_policy(mdp), SampleSource(0))
    for _ in range(200):
        t = sampler.sample()
        z = cdf_gradient_update(z, t, alpha / (2 * c), mdp.gamma)
        m = semigradient_cdf_update(m, t, phi, alpha, mdp.gamma)
    np.testing.assert_allclose(m.w.T.reshape(S, A, 21), z.cdfs(), atol=1e-12)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10_000))
def test_matched_init_and_mass_invariance(seed):
    rng = np.random.default_rng(seed)
    s = Support.uniform(-10, 10, 11)
    d = 5
    q, z = matched_init(s, d, rng)
    feats = np.concatenate([np.ones((4, 3, 1)), rng.uniform(-1, 1, size=(4, 3, d - 1))], axis=2)
    phi = lambda x, a: feats[x, a]
    for x in range(4):
        for a in range(3):
            assert linear_q_predict(q, phi(x, a)) == pytest.approx(expectation_from_linear_cdf(z, phi(x, a)),
                                                                  abs=1e-12)
    for k in range(20):
        t = TransitionSample(int(rng.integers(4)), int(rng.integers(3)), float(rng.uniform(-1, 1)),
                             int(rng.integers(4)), int(rng.integers(3)), terminal=bool(k % 7 == 6))
        z = semigradient_cdf_update(z, t, phi, 0.05, 0.9)
        for x in range(4):
            for a in range(3):
                assert linear_cdf_predict(z, phi(x, a)).total_mass == pytest.approx(1.0, abs=1e-12)


def test_unconstrained_init_is_not_mass_preserving():
    s = Support.uniform(-1, 1, 5)
    z = unconstrained_init(s, 3, np.random.default_rng(0))
    assert linear_cdf_predict(z, [1.0, 0.0, 0.0]).total_mass != pytest.approx(1.0)
