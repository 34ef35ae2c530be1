import itertools

import numpy as np
import pytest

from vrmcmc import variance_reduction as vr
from vrmcmc.core import RngStream, full_gradient, stochastic_gradient
from vrmcmc.errors import ConfigError, ContractViolationError, InvalidArgumentError
from vrmcmc.experiments import check_unbiased_exhaustive, check_unbiased_mc
from vrmcmc.models import GaussianMeanModel, LogisticRegressionModel, generate_logistic_data
from vrmcmc.samplers import ChainConfig, FixedStep, run_chain

TWO = GaussianMeanModel([1.0, 3.0])


def test_refresh_examples():
    st = vr.refresh_anchor(TWO, [0.0], 1, indices=[1])
    assert st.anchor_grad.tolist() == [6.0]
    full = vr.refresh_anchor(TWO, [0.5], 2, rng=RngStream(0))
    assert full.anchor_grad.tolist() == [3.0]  # (1 - .5) + (3 - .5)
    again = vr.refresh_anchor(TWO, [0.5], 2, rng=RngStream(1))
    assert again.anchor.tolist() == full.anchor.tolist()
    assert again.anchor_grad.tolist() == full.anchor_grad.tolist()


def test_vr_gradient_hand_example():
    st = vr.refresh_anchor(TWO, [0.0], 2, indices=[0, 1])
    assert st.anchor_grad.tolist() == [4.0]
    g0 = vr.vr_gradient(st, TWO, [1.0], 1, indices=[0])
    g1 = vr.vr_gradient(st, TWO, [1.0], 1, indices=[1])
    assert g0.tolist() == [1.0]
    # alpha_i - beta_i = -1 for both datums, so every draw gives 4 - 1 - 2 = 1
    assert g1.tolist() == [1.0]
    assert ((g0 + g1) / 2).tolist() == [1.0] == full_gradient(TWO, [1.0]).tolist()


def test_correction_vanishes_at_anchor():
    model = LogisticRegressionModel(generate_logistic_data(9, 3, RngStream(1, 0, "data")))
    theta = np.array([0.3, -0.2, 0.1, 0.4])
    st = vr.refresh_anchor(model, theta, 5, rng=RngStream(2))
    for idx in itertools.combinations(range(9), 2):
        g = vr.vr_gradient(st, model, theta, 2, indices=idx)
        assert np.array_equal(g, st.anchor_grad + model.log_prior_grad(theta))


def test_full_sizes_give_exact_gradient():
    model = GaussianMeanModel(np.linspace(0, 1, 6))
    st = vr.refresh_anchor(model, [0.2], 6, rng=RngStream(0))
    g = vr.vr_gradient(st, model, [0.7], 6, rng=RngStream(0))
    assert g == pytest.approx(full_gradient(model, [0.7]), rel=1e-14)


def test_contract_violation_before_refresh():
    with pytest.raises(ContractViolationError):
        vr.vr_gradient(None, TWO, [0.0], 1, rng=RngStream(0))
    est = vr.VREstimator(2, 1, 3)
    with pytest.raises(ContractViolationError):
        est.next_gradient(TWO, np.zeros(1), 1, RngStream(0))


def test_constraint_enforcement():
    for n1, n2 in ((5, 5), (3, 4)):
        with pytest.raises(InvalidArgumentError):
            vr.VREstimator(n1, n2, 10)
    with pytest.raises(InvalidArgumentError):
        vr.VREstimator(5, 2, 0)
    with pytest.raises(InvalidArgumentError):
        vr.PlainEstimator(0)
    with pytest.raises(InvalidArgumentError):
        vr.SvrgLDEstimator(n2=2, m=1).validate(2)  # full anchor n1 = N = 2 does not exceed n2
    with pytest.raises(InvalidArgumentError):
        vr.VREstimator(50, 2, 1).validate(10)


def test_next_gradient_costs():
    model = GaussianMeanModel(np.arange(10.0))
    rng = RngStream(0)
    g, cost = vr.PlainEstimator(10).next_gradient(model, np.zeros(1), 3, rng)
    assert cost == 10 and g.tolist() == full_gradient(model, [0.0]).tolist()
    est = vr.VREstimator(6, 2, 4)
    assert est.next_gradient(model, np.zeros(1), 0, rng)[1] == 6 + 4
    assert est.next_gradient(model, np.zeros(1), 1, rng)[1] == 4
    assert est.state.steps_since_refresh == 1
    assert vr.next_gradient(est, model, np.zeros(1), 4, rng)[1] == 10


def test_cost_ledger_and_max_steps():
    est = vr.VREstimator(100, 10, 10)
    assert est.cost_for_steps(10, 1000) == 300
    assert est.cost_for_steps(11, 1000) == 420
    for budget in (0, 119, 120, 50_000):
        L = est.max_steps(budget, 1000)
        assert est.cost_for_steps(L, 1000) <= budget < est.cost_for_steps(L + 1, 1000)
    assert vr.PlainEstimator(7).max_steps(100, 50) == 14


def test_svrg_matches_vr_with_full_anchor():
    model = GaussianMeanModel(np.linspace(-1, 1, 30))
    cfg = ChainConfig(L=300, schedule=FixedStep(1e-3), seed=5)
    a = run_chain(model, vr.SvrgLDEstimator(4, 7), cfg)
    b = run_chain(model, vr.VREstimator(30, 4, 7), cfg)
    assert a.samples.tobytes() == b.samples.tobytes()
    assert a.grad_evals.tolist() == b.grad_evals.tolist()


def test_anchor_stays_fixed_between_refreshes():
    model = GaussianMeanModel(np.linspace(-1, 1, 30))
    est = vr.VREstimator(10, 3, 5)
    rng = RngStream(0)
    est.next_gradient(model, np.array([0.1]), 0, rng)
    anchor = est.state.anchor.copy()
    for l in range(1, 5):
        est.next_gradient(model, np.array([0.1 * l]), l, rng)
        assert est.state.anchor.tolist() == anchor.tolist()
    est.next_gradient(model, np.array([0.9]), 5, rng)
    assert est.state.anchor.tolist() == [0.9]


def test_variance_at_anchor_equals_plain_n1_variance():
    N, n1, n2 = 6, 3, 2
    model = GaussianMeanModel(np.random.default_rng(0).normal(size=N))
    theta = np.array([0.4])
    vr_vals = []
    for pi in itertools.combinations(range(N), n1):
        st = vr.refresh_anchor(model, theta, n1, indices=pi)
        for til in itertools.combinations(range(N), n2):
            vr_vals.append(vr.vr_gradient(st, model, theta, n2, indices=til)[0])
    plain = [stochastic_gradient(model, theta, s)[0] for s in itertools.combinations(range(N), n1)]
    assert np.var(vr_vals) == pytest.approx(np.var(plain), rel=1e-12)


def test_exhaustive_unbiasedness():
    res = check_unbiased_exhaustive()
    assert res.passed, res.detail


def test_sign_flip_mutation_is_caught(monkeypatch):
    original = vr.correction_term
    monkeypatch.setattr(vr, "correction_term", lambda *a: -original(*a))
    res = check_unbiased_exhaustive(Ns=range(3, 5))
    assert not res.passed
    assert "correction term" in res.detail and "anchor gradient" not in res.detail
    res = check_unbiased_mc(draws=2000)
    assert not res.passed and "correction term" in res.detail


def test_estimator_from_dict():
    assert isinstance(vr.estimator_from_dict({"mode": "plain", "n": 10}), vr.PlainEstimator)
    e = vr.estimator_from_dict({"mode": "vr", "n1": 100, "n2": 10, "m": 10})
    assert (e.n1, e.n2, e.m) == (100, 10, 10)
    assert e.to_dict() == {"mode": "vr", "n1": 100, "n2": 10, "m": 10}
    s = vr.estimator_from_dict({"mode": "svrg_ld", "n2": 10, "m": 10})
    assert s.n1_for(1000) == 1000 and s.to_dict()["mode"] == "svrg_ld"
    for bad in ({"mode": "saga"}, {"mode": "plain"}, {"mode": "vr", "n1": 5, "n2": 5, "m": 1}):
        with pytest.raises(ConfigError):
            vr.estimator_from_dict(bad)
