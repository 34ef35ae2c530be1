import math

import numpy as np
import pytest

from vrmcmc.core import RngStream
from vrmcmc.errors import DivergedChainError, InvalidArgumentError, NumericOverflowError
from vrmcmc.models import GaussianMeanModel
from vrmcmc.samplers import (ChainConfig, DecayStep, FixedStep, export_trace_csv, run_chain,
                             schedule_from_dict, sgld_step)
from vrmcmc.variance_reduction import PlainEstimator, VREstimator


def test_step_examples():
    assert sgld_step([3.0], [0.0], 0.1, noise=[0.0]).tolist() == [3.0]
    assert sgld_step([0.0], [2.0], 0.5, noise=[0.0]).tolist() == [1.0]
    assert sgld_step([0.0], [0.0], 0.5, noise=[1.0]).tolist() == [1.0]


def test_step_consumes_exactly_d_normals():
    rng = RngStream(0, 0, "noise")
    sgld_step(np.zeros(3), np.zeros(3), 0.1, rng)
    ref = RngStream(0, 0, "noise").normals(4)
    assert rng.normals(1)[0] == ref[3]


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_step_errors():
    with pytest.raises(InvalidArgumentError):
        sgld_step([0.0], [0.0], 0.0, noise=[0.0])
    with pytest.raises(InvalidArgumentError):
        sgld_step([0.0], [0.0, 1.0], 0.1, noise=[0.0])
    with pytest.raises(DivergedChainError) as info:
        sgld_step([1e308], [1e308], 10.0, noise=[0.0], iteration=7)
    assert info.value.iteration == 7 and info.value.step_size == 10.0


def test_noise_scaling():
    h, steps = 0.05, 100_000
    rng = RngStream(9, 0, "noise")
    inc = np.array([sgld_step([0.0], [0.0], h, rng)[0] for _ in range(steps)])
    se = 2 * h * math.sqrt(2 / steps)
    assert abs(inc.var() - 2 * h) <= 4 * se


def test_schedules():
    assert FixedStep(0.1).at(1000) == 0.1
    d = DecayStep(10.0, 1.8e-3)
    assert d.at(0) == 0.1
    assert all(d.at(l) >= d.at(l + 1) > 0 for l in range(0, 10_000, 997))
    assert schedule_from_dict({"kind": "decay", "a": 2.0}).at(5) == 0.5
    for bad in (lambda: FixedStep(-1.0), lambda: DecayStep(0.0), lambda: DecayStep(1.0, -1.0),
                lambda: schedule_from_dict({"kind": "cosine"})):
        with pytest.raises(InvalidArgumentError):
            bad()


def test_chain_config_validation():
    for kw in ({"L": 0}, {"L": 5, "burn_in": 5}, {"L": 5, "record_every": 0}):
        with pytest.raises(InvalidArgumentError):
            ChainConfig(schedule=FixedStep(0.1), **{"L": 5, **kw})


def _model():
    return GaussianMeanModel(np.linspace(-1.0, 2.0, 50))


def test_plain_cost_and_recording():
    trace = run_chain(_model(), PlainEstimator(5),
                      ChainConfig(L=100, schedule=FixedStep(1e-3), burn_in=10, record_every=3))
    assert trace.iterations.tolist() == list(range(13, 101, 3))
    assert trace.grad_evals.tolist() == [5 * l for l in trace.iterations]
    assert trace.total_grad_evals == 500
    assert np.all(trace.step_sizes == 1e-3)


def test_vr_cost_matches_ledger():
    est = VREstimator(20, 4, 5)
    trace = run_chain(_model(), est, ChainConfig(L=100, schedule=FixedStep(1e-3)))
    L, n1, n2, m = 100, 20, 4, 5
    assert trace.total_grad_evals == 2 * n2 * L + n1 * L // m == est.cost_for_steps(L, 50)
    assert trace.grad_evals.tolist() == [est.cost_for_steps(l, 50) for l in trace.iterations]


def test_chain_is_deterministic_and_noise_is_shared_across_n():
    model = _model()
    cfg = ChainConfig(L=200, schedule=FixedStep(1e-3), seed=4)
    a = run_chain(model, PlainEstimator(5), cfg)
    b = run_chain(model, PlainEstimator(5), cfg)
    assert a.samples.tobytes() == b.samples.tobytes()
    # the noise stream is independent of the minibatch size, so with the full
    # batch the increments minus drift are identical for any two full-batch runs
    full = run_chain(model, PlainEstimator(50), cfg)
    noise = RngStream(4, 0, "noise").normals(200)
    theta = 0.0
    for l in range(200):
        g = -theta + float(np.sum(model.data.x - theta))
        theta = theta + 1e-3 * g + math.sqrt(2e-3) * noise[l]
    assert full.samples[-1, 0] == pytest.approx(theta, rel=1e-12)


def test_chain_reports_iteration_of_numeric_failure():
    class Exploding(GaussianMeanModel):
        def loglik_grads(self, theta, indices):
            g = super().loglik_grads(theta, indices)
            return g * (np.inf if abs(theta[0]) > 0 else 1.0)

    with pytest.raises(NumericOverflowError, match="iteration 1"):
        run_chain(Exploding([1.0, 2.0]), PlainEstimator(2),
                  ChainConfig(L=5, schedule=FixedStep(0.1)))


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_divergence_is_loud():
    # whichever happens first (non-finite gradient or non-finite state) aborts the chain
    model = GaussianMeanModel(np.ones(100))
    with pytest.raises((DivergedChainError, NumericOverflowError)):
        run_chain(model, PlainEstimator(100), ChainConfig(L=5000, schedule=FixedStep(10.0)))


def test_export_trace_csv(tmp_path):
    trace = run_chain(_model(), PlainEstimator(2), ChainConfig(L=3, schedule=FixedStep(1e-3)))
    path = tmp_path / "t.csv"
    export_trace_csv(trace, path)
    lines = path.read_text().splitlines()
    assert lines[0] == "iteration,grad_evals,h,theta_0"
    assert lines[1].startswith("1,2,0.001,")
    trace.samples = np.zeros((3, 70))
    export_trace_csv(trace, path)
    assert path.read_text().splitlines()[0] == "iteration,grad_evals,h,theta_mean,theta_sd,theta_norm"
