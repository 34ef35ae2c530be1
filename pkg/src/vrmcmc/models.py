"""Concrete gradient models with closed-form gradients.

Two models are provided: a conjugate Gaussian-mean model whose posterior is
known exactly, and Bayesian logistic regression with labels in {-1, +1}.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy import integrate
from scipy.special import expit, ndtr

from .core import Dataset, GradientModel, RngStream, as_param, read_csv_dataset
from .errors import InvalidArgumentError, QuadratureError

_LOG_2PI = math.log(2.0 * math.pi)


@dataclass(frozen=True)
class TestFunction:
    """Scalar test function ``phi`` whose posterior average is estimated.

    ``batch`` optionally maps an ``(k, d)`` sample array to ``k`` values.
    """

    name: str
    fn: Callable[[np.ndarray], float]
    batch: Optional[Callable[[np.ndarray], np.ndarray]] = None

    __test__ = False  # keep pytest from collecting this class

    def __call__(self, theta) -> float:
        return float(self.fn(np.asarray(theta, dtype=np.float64)))

    def evaluate_many(self, samples: np.ndarray) -> np.ndarray:
        samples = np.asarray(samples, dtype=np.float64)
        if samples.ndim == 1:
            samples = samples[:, None]
        if self.batch is not None:
            return np.asarray(self.batch(samples), dtype=np.float64)
        return np.array([self.fn(s) for s in samples], dtype=np.float64)


IDENTITY = TestFunction("theta", lambda t: t[0], lambda S: S[:, 0])
SQUARE = TestFunction("theta_sq", lambda t: float(t @ t), lambda S: np.einsum("ij,ij->i", S, S))

TEST_FUNCTIONS = {f.name: f for f in (IDENTITY, SQUARE)}


def get_test_function(name: str) -> TestFunction:
    try:
        return TEST_FUNCTIONS[name]
    except KeyError:
        raise InvalidArgumentError(
            f"unknown test function {name!r}; choose from {sorted(TEST_FUNCTIONS)}") from None


class GaussianMeanModel(GradientModel):
    """``theta ~ N(0, 1)``, ``x_i | theta ~ N(theta, 1)``; d = 1."""

    def __init__(self, data):
        if not isinstance(data, Dataset):
            data = Dataset(np.asarray(data, dtype=np.float64).reshape(-1))
        if data.x.ndim != 1:
            raise InvalidArgumentError("GaussianMeanModel expects scalar observations")
        self._data = data
        self._x = data.x

    @property
    def dim(self) -> int:
        return 1

    @property
    def data(self) -> Dataset:
        return self._data

    def log_prior_grad(self, theta):
        return -np.asarray(theta, dtype=np.float64)

    def datum_loglik_grad(self, theta, i):
        return np.array([self._x[i] - theta[0]])

    def loglik_grads(self, theta, indices):
        return (self._x[indices] - theta[0])[:, None]

    def log_prior(self, theta):
        return float(-0.5 * (theta[0] ** 2 + _LOG_2PI))

    def datum_loglik(self, theta, i):
        return float(-0.5 * ((self._x[i] - theta[0]) ** 2 + _LOG_2PI))

    @property
    def posterior_mean(self) -> float:
        N = self.size
        return float(self._x.sum() / (N + 1))

    @property
    def posterior_var(self) -> float:
        return 1.0 / (self.size + 1)


class LogisticRegressionModel(GradientModel):
    """Bayesian logistic regression with an isotropic Gaussian prior.

    ``log p(y_i | x_i, theta) = -log(1 + exp(-y_i theta.x_i))`` with
    ``y_i in {-1, +1}``; prior ``N(0, prior_scale**2 I)``.
    """

    def __init__(self, data: Dataset, prior_scale: float = 1.0):
        if data.y is None:
            raise InvalidArgumentError("logistic regression needs labels")
        X = data.x if data.x.ndim == 2 else data.x[:, None]
        if not np.all(np.isin(data.y, (-1.0, 1.0))):
            raise InvalidArgumentError("labels must be encoded as -1/+1")
        if not prior_scale > 0:
            raise InvalidArgumentError("prior_scale must be positive")
        self._data = data
        self._X = X
        self._y = data.y
        self.prior_scale = float(prior_scale)

    @property
    def dim(self) -> int:
        return int(self._X.shape[1])

    @property
    def data(self) -> Dataset:
        return self._data

    def log_prior_grad(self, theta):
        return -np.asarray(theta, dtype=np.float64) / self.prior_scale ** 2

    def datum_loglik_grad(self, theta, i):
        margin = self._y[i] * (self._X[i] @ theta)
        return self._y[i] * self._X[i] * expit(-margin)

    def loglik_grads(self, theta, indices):
        X = self._X[indices]
        y = self._y[indices]
        w = y * expit(-y * (X @ theta))
        return X * w[:, None]

    def log_prior(self, theta):
        s2 = self.prior_scale ** 2
        d = self.dim
        return float(-0.5 * (theta @ theta) / s2 - 0.5 * d * (_LOG_2PI + math.log(s2)))

    def datum_loglik(self, theta, i):
        return float(-np.logaddexp(0.0, -self._y[i] * (self._X[i] @ theta)))


def generate_gaussian_data(N: int, theta_true: float, rng: RngStream) -> Dataset:
    """N i.i.d. draws from ``N(theta_true, 1)``."""
    if N < 1:
        raise InvalidArgumentError("N must be at least 1")
    return Dataset(theta_true + rng.normals(int(N)).copy())


def generate_logistic_data(N: int, p: int, rng: RngStream, theta_true=None,
                           intercept: bool = True) -> Dataset:
    """Synthetic classification data with standard-normal features.

    Labels are drawn from the logistic likelihood at ``theta_true`` (default:
    norm 2 along the all-ones direction). A constant intercept column is
    appended when ``intercept`` is set, so the model dimension is ``p + 1``.
    """
    if N < 1 or p < 1:
        raise InvalidArgumentError("N and p must be positive")
    Z = rng.normals(N * p).reshape(N, p).copy()
    X = np.hstack([Z, np.ones((N, 1))]) if intercept else Z
    if theta_true is None:
        theta_true = np.full(X.shape[1], 2.0 / math.sqrt(X.shape[1]))
    theta_true = as_param(theta_true, X.shape[1])
    # labels reuse the normal sequence (one stream, one draw kind) via the normal CDF
    u = ndtr(rng.normals(N))
    y = np.where(u < expit(X @ theta_true), 1.0, -1.0)
    return Dataset(X, y)


def standardize_with_intercept(data: Dataset, reference: Optional[Dataset] = None) -> Dataset:
    """Zero-mean/unit-variance features plus a trailing constant-1 column.

    Statistics are taken from ``reference`` (e.g. the training split) when
    given. Labels in {0, 1} are remapped to {-1, +1}.
    """
    ref = reference if reference is not None else data
    X = data.x if data.x.ndim == 2 else data.x[:, None]
    R = ref.x if ref.x.ndim == 2 else ref.x[:, None]
    mu = R.mean(axis=0)
    sd = R.std(axis=0)
    sd[sd == 0] = 1.0
    Xs = np.hstack([(X - mu) / sd, np.ones((X.shape[0], 1))])
    y = data.y
    if y is not None and np.all(np.isin(y, (0.0, 1.0))):
        y = 2.0 * y - 1.0
    return Dataset(Xs, y)


def load_classification_csv(path, test_fraction: float, rng: RngStream):
    """Read a labelled CSV (e.g. Pima), split it, and standardize both parts.

    Returns ``(train, test)``; standardization uses training statistics.
    """
    raw = read_csv_dataset(path, labelled=True)
    if not 0.0 <= test_fraction < 1.0:
        raise InvalidArgumentError("test_fraction must lie in [0, 1)")
    N = raw.size
    order = np.argsort(rng.uniforms(N), kind="stable")
    n_test = int(round(test_fraction * N))
    test_idx, train_idx = np.sort(order[:n_test]), np.sort(order[n_test:])
    train_raw = raw.subset(train_idx)
    train = standardize_with_intercept(train_raw)
    test = standardize_with_intercept(raw.subset(test_idx), reference=train_raw) if n_test else None
    return train, test


def gaussian_posterior_phi_bar(model: GaussianMeanModel, phi: TestFunction,
                               method: str = "auto") -> float:
    """Posterior average of ``phi`` under the exact Gaussian posterior.

    Closed forms exist for ``theta`` and ``theta_sq``; anything else (or
    ``method="quadrature"``) integrates against the posterior density on
    mean +/- 10 sd with adaptive quadrature at relative tolerance 1e-10.
    """
    mean = model.posterior_mean
    var = model.posterior_var
    if method not in ("auto", "closed", "quadrature"):
        raise InvalidArgumentError(f"unknown method {method!r}")
    if method != "quadrature":
        if phi.name == "theta":
            return mean
        if phi.name == "theta_sq":
            return var + mean ** 2
        if method == "closed":
            raise InvalidArgumentError(f"no closed form for {phi.name!r}")
    sd = math.sqrt(var)

    def integrand(t):
        return phi(np.array([t])) * math.exp(-0.5 * (t - mean) ** 2 / var) / (sd * math.sqrt(2 * math.pi))

    try:
        val, err = integrate.quad(integrand, mean - 10 * sd, mean + 10 * sd,
                                  epsabs=0.0, epsrel=1e-10, limit=200, full_output=False)
    except Exception as exc:  # quad raises on malformed integrands
        raise QuadratureError(f"quadrature failed for {phi.name!r}: {exc}") from exc
    if not math.isfinite(val) or err > 1e-8 * max(1.0, abs(val)):
        raise QuadratureError(f"quadrature for {phi.name!r} did not converge (est. error {err:g})")
    return float(val)


def logistic_loss_metrics(model: LogisticRegressionModel, theta, test_set: Dataset):
    """Mean per-datum negative log-likelihood and 0/1 error at ``theta``.

    Prediction is ``sign(theta.x)`` with ties going to +1.
    """
    theta = np.asarray(theta, dtype=np.float64).reshape(-1)
    X = test_set.x if test_set.x.ndim == 2 else test_set.x[:, None]
    if X.shape[1] != theta.shape[0] or theta.shape[0] != model.dim:
        raise InvalidArgumentError(
            f"feature dimension {X.shape[1]} does not match parameter dimension {theta.shape[0]}")
    y = test_set.y
    margin = y * (X @ theta)
    nll = float(np.mean(np.logaddexp(0.0, -margin)))
    pred = np.where(X @ theta >= 0.0, 1.0, -1.0)
    return nll, float(np.mean(pred != y))


def predictive_metrics(prob_pos: np.ndarray, labels: np.ndarray):
    """NLL and error of averaged predictive probabilities ``P(y=+1|x)``."""
    p = np.clip(prob_pos, 1e-300, 1.0)
    q = np.clip(1.0 - prob_pos, 1e-300, 1.0)
    nll = float(np.mean(np.where(labels > 0, -np.log(p), -np.log(q))))
    pred = np.where(prob_pos >= 0.5, 1.0, -1.0)
    return nll, float(np.mean(pred != labels))
