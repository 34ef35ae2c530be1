import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from vrmcmc.core import (Dataset, MinibatchIndexSet, RngStream, as_param, full_gradient,
                         log_posterior, read_csv_dataset, sample_without_replacement,
                         stochastic_gradient)
from vrmcmc.errors import InvalidArgumentError, NumericOverflowError
from vrmcmc.models import GaussianMeanModel, LogisticRegressionModel, generate_logistic_data


def test_as_param_rejects_nonfinite_and_bad_length():
    with pytest.raises(InvalidArgumentError):
        as_param([1.0, float("nan")])
    with pytest.raises(InvalidArgumentError):
        as_param([1.0, 2.0], dim=3)
    v = [1.0, 2.0]
    out = as_param(v)
    out[0] = 5.0
    assert v[0] == 1.0


def test_dataset_is_immutable_and_sized():
    ds = Dataset(np.array([1.0, 2.0, 3.0]))
    assert ds.size == len(ds) == 3
    with pytest.raises(ValueError):
        ds.x[0] = 9.0
    with pytest.raises(InvalidArgumentError):
        Dataset(np.array([]))
    with pytest.raises(InvalidArgumentError):
        Dataset(np.ones((3, 2)), np.ones(2))
    assert ds.subset([2, 0]).x.tolist() == [3.0, 1.0]


def test_read_csv_with_and_without_header(tmp_path):
    p = tmp_path / "a.csv"
    p.write_text("f1,f2,label\n1.0,2.0,1\n3.0,4.0,0\n\n")
    ds = read_csv_dataset(p)
    assert ds.x.shape == (2, 2) and ds.y.tolist() == [1.0, 0.0]
    q = tmp_path / "b.csv"
    q.write_text("1.0,2.0,1\n3.0,4.0,0\n")
    assert read_csv_dataset(q).x.tolist() == ds.x.tolist()
    r = tmp_path / "c.csv"
    r.write_text("1.0,2.0\n3.0\n")
    with pytest.raises(InvalidArgumentError):
        read_csv_dataset(r)
    s = tmp_path / "d.csv"
    s.write_text("0.5\n1.5\n")
    assert read_csv_dataset(s, labelled=False).x.tolist() == [0.5, 1.5]


def test_rng_streams_are_reproducible_and_separated():
    a = RngStream(42, 3, "noise").normals(10)
    b = RngStream(42, 3, "noise").normals(10)
    c = RngStream(42, 3, "minibatch").uniforms(10)
    d = RngStream(42, 4, "noise").normals(10)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, d)
    assert np.all((c >= 0) & (c < 1))


def test_rng_draws_do_not_depend_on_call_sizes():
    one = RngStream(1, 0, "x")
    many = np.concatenate([one.normals(k) for k in (1, 7, 4090, 3, 5000)])
    assert np.array_equal(many, RngStream(1, 0, "x").normals(many.shape[0]))
    u = RngStream(1, 0, "y")
    got = np.concatenate([u.uniforms(k) for k in (3, 4096, 11)])
    assert np.array_equal(got, RngStream(1, 0, "y").uniforms(got.shape[0]))


def test_normals_have_unit_moments():
    z = RngStream(5, 0, "n").normals(200_000)
    assert abs(z.mean()) < 4 / math.sqrt(z.size)
    assert abs(z.var() - 1.0) < 4 * math.sqrt(2 / z.size)


def test_full_batch_is_forced():
    s = sample_without_replacement(5, 5, RngStream(0))
    assert s.indices.tolist() == [0, 1, 2, 3, 4]


def test_sampling_errors():
    for n in (0, 6):
        with pytest.raises(InvalidArgumentError):
            sample_without_replacement(5, n, RngStream(0))


def test_subset_frequencies_are_uniform():
    rng = RngStream(11, 0, "minibatch")
    draws = 60_000
    subsets = list(itertools.combinations(range(4), 2))
    counts = dict.fromkeys(subsets, 0)
    for _ in range(draws):
        counts[tuple(sample_without_replacement(4, 2, rng))] += 1
    p = 1 / 6
    sigma = math.sqrt(draws * p * (1 - p))
    for s in subsets:
        assert abs(counts[s] - draws * p) <= 3 * sigma, (s, counts[s])


def test_large_population_draw_contract():
    s = sample_without_replacement(1000, 10, RngStream(2))
    assert s.n == len(s) == 10
    assert len(set(s)) == 10 and all(0 <= i < 1000 for i in s)


def test_inclusion_law():
    N, n, draws = 7, 3, 100_000
    rng = RngStream(3, 0, "minibatch")
    z = np.zeros((draws, N))
    for k in range(draws):
        z[k, sample_without_replacement(N, n, rng).indices] = 1.0
    single = z[:, 0]
    pair = z[:, 1] * z[:, 4]
    assert abs(single.mean() - n / N) <= 4 * single.std() / math.sqrt(draws)
    target = n * (n - 1) / (N * (N - 1))
    assert abs(pair.mean() - target) <= 4 * pair.std() / math.sqrt(draws)


@settings(max_examples=50, deadline=None)
@given(N=st.integers(1, 300), frac=st.floats(0, 1), seed=st.integers(0, 2 ** 63))
def test_sample_is_sorted_distinct_in_range(N, frac, seed):
    n = max(1, int(round(frac * N)))
    s = sample_without_replacement(N, n, RngStream(seed)).indices
    assert s.shape == (n,)
    assert np.all(np.diff(s) > 0) and s[0] >= 0 and s[-1] < N


def test_gaussian_gradient_examples():
    assert full_gradient(GaussianMeanModel([0.0, 0.0, 0.0]), [0.0]).tolist() == [0.0]
    m = GaussianMeanModel([1.0, 3.0])
    assert full_gradient(m, [0.0]).tolist() == [4.0]
    assert stochastic_gradient(m, [0.0], [0]).tolist() == [2.0]
    avg = (stochastic_gradient(m, [0.0], [0]) + stochastic_gradient(m, [0.0], [1])) / 2
    assert avg.tolist() == [4.0]


def test_full_batch_stochastic_gradient_is_bit_identical():
    data = generate_logistic_data(13, 3, RngStream(4, 0, "data"))
    model = LogisticRegressionModel(data)
    rng = np.random.default_rng(0)
    for _ in range(10):
        theta = rng.normal(size=model.dim)
        full = full_gradient(model, theta)
        sg = stochastic_gradient(model, theta, MinibatchIndexSet(np.arange(13), 13))
        assert full.tobytes() == sg.tobytes()


@pytest.mark.parametrize("N", range(1, 9))
def test_stochastic_gradient_is_unbiased_exhaustively(N):
    rng = np.random.default_rng(N)
    models = [GaussianMeanModel(rng.normal(size=N)),
              LogisticRegressionModel(generate_logistic_data(N, 2, RngStream(N, 0, "data")))]
    for model in models:
        theta = rng.normal(size=model.dim)
        full = full_gradient(model, theta)
        for n in range(1, N + 1):
            subsets = list(itertools.combinations(range(N), n))
            avg = sum(stochastic_gradient(model, theta, s) for s in subsets) / len(subsets)
            assert np.all(np.abs(avg - full) <= 1e-12 * np.maximum(np.abs(full), 1.0))


def test_stochastic_gradient_rejects_bad_minibatch():
    m = GaussianMeanModel([1.0, 3.0])
    for bad in ([0, 0], [2], [], [-1]):
        with pytest.raises(InvalidArgumentError):
            stochastic_gradient(m, [0.0], bad)


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_overflow_names_the_datum():
    m = GaussianMeanModel([1.0, 1e308, -1e308, 2.0])
    with pytest.raises(NumericOverflowError) as info:
        full_gradient(m, [-1e308])
    assert info.value.datum_index == 1


def test_log_posterior_matches_gaussian_density():
    m = GaussianMeanModel([1.0, 3.0])
    want = -0.5 * (0.25 + 0.25 + 6.25) - 1.5 * math.log(2 * math.pi)
    assert log_posterior(m, [0.5]) == pytest.approx(want, rel=1e-14)
