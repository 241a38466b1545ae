import numpy as np
import pytest

from coupledrl.dist_core import Support
from coupledrl.envs import CartPole, FourierBasis, SampleSource, TransitionSample
from coupledrl.linear import LinearQ, LinearZ, semigradient_cdf_update, semigradient_q_update
from coupledrl.nonlinear import (
    MLP,
    Batch,
    HeadSpec,
    LiteAgent,
    RunState,
    Schedule,
    loss_and_grads,
    run_episodes,
    sigmoid_cdf_counterexample,
    softmax,
    train_step,
)
from coupledrl.nonlinear.network import _projected_targets
from fd_oracle import worst_over_draws

SUPPORT = Support.uniform(-2, 2, 5)
HEADS = {
    "dqn": HeadSpec("dqn"),
    "c51": HeadSpec("c51", SUPPORT),
    "s51-cdf": HeadSpec("s51", SUPPORT, "cdf"),
    "s51-pmf": HeadSpec("s51", SUPPORT, "pmf"),
}


# -- sigmoid-CDF counterexample ----------------------------------------------------------------------------


def test_counterexample_golden_values():
    rep = sigmoid_cdf_counterexample()
    assert abs(rep.gradients[0] - 2 / 27) <= 1e-12
    assert abs(rep.gradients[1] + 4 / 27) <= 1e-12
    assert rep.Q1 == 0.0
    assert 0.04 <= abs(rep.E_Z1) <= 0.06
    assert rep.E_Z1 < 0
    assert abs(rep.E_Z0) <= 1e-15 and rep.Q0 == 0.0
    assert rep.diverged


# -- gradient checks -----------------------------------------------------------------------------------------


@pytest.mark.parametrize("head", list(HEADS))
def test_gradients_match_finite_differences(head):
    assert worst_over_draws(HEADS[head]) <= 1e-5


@pytest.mark.parametrize("head", list(HEADS))
def test_prediction_equal_to_target_gives_zero_update(head):
    spec = HEADS[head]
    net = MLP(1, 1, spec.n_out, (), np.random.default_rng(0))
    if spec.kind == "s51":
        net.head_weight[:] = 0.0
        pmf = np.array([0.1, 0.2, 0.4, 0.2, 0.1])
        net.head_bias_vector[:] = pmf if spec.grad_wrt == "pmf" else np.cumsum(pmf)
    elif spec.kind == "dqn":
        net.head_weight[:] = 0.0
        net.head_bias_vector[:] = 0.0
    else:
        net.head_weight[:] = 0.0
    # constant input, r = 0, gamma = 1: the target is the prediction itself
    b = Batch(np.ones((4, 1)), np.zeros(4, int), np.zeros(4), np.ones((4, 1)), np.zeros(4, bool))
    loss, grads = loss_and_grads(net, net.copy_params(), b, 1.0, spec)
    for g in grads:
        np.testing.assert_allclose(g, 0.0, atol=1e-15)
    if spec.kind != "c51":
        assert loss == pytest.approx(0.0, abs=1e-15)


def test_c51_masses_normalised():
    rng = np.random.default_rng(0)
    p = softmax(rng.normal(scale=30, size=(100, 3, 51)))
    assert p.min() >= 0
    np.testing.assert_allclose(p.sum(axis=-1), 1.0, atol=1e-9)


def test_terminal_target_is_projected_reward():
    spec = HEADS["c51"]
    b = Batch(np.zeros((2, 1)), np.zeros(2, int), np.array([0.5, -3.0]), np.zeros((2, 1)), np.ones(2, bool))
    out_next = np.random.default_rng(0).normal(size=(2, 1, 5))
    m = _projected_targets(spec, out_next, b, 0.9)
    np.testing.assert_allclose(m[0], [0, 0, 0.5, 0.5, 0])
    np.testing.assert_allclose(m[1], [1, 0, 0, 0, 0])


# -- reductions to the linear rules ------------------------------------------------------------------------


def one_step_sgd(net, spec, batch, gamma, lr):
    _, grads = loss_and_grads(net, net.copy_params(), batch, gamma, spec)
    for p, g in zip(net.params, grads):
        p -= lr * g


def test_linear_dqn_head_reduces_to_semigradient_q():
    rng = np.random.default_rng(0)
    d = 4
    net = MLP(d, 1, 1, (), rng, head_bias=False)
    phi, phi2 = rng.normal(size=d), rng.normal(size=d)
    theta = net.head_weight[:, 0].copy()
    b = Batch(phi[None], np.array([0]), np.array([0.7]), phi2[None], np.array([False]))
    one_step_sgd(net, HEADS["dqn"], b, 0.9, 0.1)
    feats = {0: phi, 1: phi2}
    want = semigradient_q_update(LinearQ(theta), TransitionSample(0, 0, 0.7, 1, 0), lambda x, a: feats[x], 0.1, 0.9)
    np.testing.assert_allclose(net.head_weight[:, 0], want.theta, atol=1e-14)


def test_linear_s51_cdf_head_reduces_to_semigradient_cdf():
    rng = np.random.default_rng(1)
    s = Support.uniform(-10, 10, 11)
    spec = HeadSpec("s51", s, "cdf")
    d = 3
    net = MLP(d, 1, 11, (), rng, head_bias=False)
    phi, phi2 = rng.normal(size=d), rng.normal(size=d)
    W = net.head_weight.T.copy()  # (K, d)
    alpha = 0.05
    b = Batch(phi[None], np.array([0]), np.array([0.3]), phi2[None], np.array([False]))
    one_step_sgd(net, spec, b, 0.9, alpha / (2 * s.spacing))
    feats = {0: phi, 1: phi2}
    want = semigradient_cdf_update(LinearZ(W, s), TransitionSample(0, 0, 0.3, 1, 0), lambda x, a: feats[x],
                                   alpha, 0.9)
    np.testing.assert_allclose(net.head_weight.T, want.w, atol=1e-13)


@pytest.mark.parametrize("alpha", [0.1, 0.5, 1.0])
def test_s51_pmf_head_reproduces_counterexample_shift(alpha):
    s = Support.integer(0, 2)
    spec = HeadSpec("s51", s, "pmf")
    net = MLP(2, 1, 3, (), head_bias=False)
    net.head_weight[0] = [1 / 3, 1 / 3, 1 / 3]
    net.head_weight[1] = [1 / 2, 0.0, 1 / 2]
    b = Batch(np.array([[1.0, 0.0]]), np.array([0]), np.array([0.0]), np.array([[0.0, 1.0]]), np.array([False]))
    one_step_sgd(net, spec, b, 1.0, alpha)
    assert net.head_weight[0] @ s.atoms == pytest.approx(1 - alpha / 3, abs=1e-12)


# -- agent mechanics --------------------------------------------------------------------------------------


def small_agent(spec=HEADS["dqn"], seed=0, **sched):
    env = CartPole()
    fb = FourierBasis(env.obs_bounds, 1)
    sched = Schedule(**{"batch_size": 16, "capacity": 1000, **sched})
    return LiteAgent(fb, fb.n_features, 2, spec, (), sched, 0.99, init_seed=seed), env


def test_no_learning_before_buffer_holds_a_batch():
    agent, env = small_agent()
    before = agent.net.copy_params()
    run = RunState(SampleSource(0))
    for _ in range(15):
        train_step(agent, env, run)
    assert agent.train_steps == 0
    for p, q in zip(before, agent.net.params):
        np.testing.assert_array_equal(p, q)
    train_step(agent, env, run)
    assert agent.train_steps == 1


def test_target_sync_period():
    agent, env = small_agent(sync_period=10, lr=1e-2)
    run = RunState(SampleSource(0))
    while agent.train_steps < 35:
        train_step(agent, env, run)
        n = agent.train_steps
        same = all(np.array_equal(p, q) for p, q in zip(agent.net.params, agent.target_params))
        if n > 0 and n % 10 == 0:
            assert same
        elif n % 10 != 0 and n > 10:
            assert not same


@pytest.mark.parametrize("head", ["dqn", "s51-cdf"])
def test_fixed_seed_runs_repeat(head):
    spec = {"dqn": HEADS["dqn"], "s51-cdf": HeadSpec("s51", Support.uniform(-100, 100, 51), "cdf")}[head]
    a1, e1 = small_agent(spec, seed=3)
    a2, e2 = small_agent(spec, seed=3)
    r1 = [s.ret for s in run_episodes(a1, e1, 8, seed=3)]
    r2 = [s.ret for s in run_episodes(a2, e2, 8, seed=3)]
    assert r1 == r2


def test_matched_init_starts_proper():
    s = Support.uniform(-100, 100, 51)
    agent, _ = small_agent(HeadSpec("s51", s, "cdf"))
    out = agent.net.forward(np.random.default_rng(0).normal(size=(5, agent.net.d_in)))
    np.testing.assert_allclose(out[..., -1], 1.0)
    np.testing.assert_allclose(agent.spec.values(out), 0.0, atol=1e-12)
