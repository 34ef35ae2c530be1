"""Posterior-average estimators, MSE, and gradient-noise variance functionals.

All functionals here are evaluated at fixed parameter values, so the only
randomness is the minibatch selection. Each closed form has an exhaustive
enumeration counterpart over every possible minibatch, which makes the
closed forms directly testable on small datasets.

Notation used below, for per-datum log-likelihood gradients ``a_i`` at the
current point and ``b_i`` at the anchor::

    D(a)   = sum_i |a_i|^2
    P(a)   = sum_{i<j} a_i . a_j
    gamma  = |sum_i a_i|^2 / N^2 - 2 P(a) / (N (N-1))
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import asdict, dataclass
from typing import Optional, Sequence

import numpy as np

from .core import GradientModel, as_param
from .errors import InvalidArgumentError, TooLargeError

ENUMERATION_LIMIT = 10 ** 6
_CHUNK = 1 << 15


@dataclass(frozen=True)
class VarianceReport:
    gamma: float
    deltaV_formula: float
    deltaV_exact: Optional[float] = None
    A: Optional[float] = None
    B: Optional[float] = None
    C: Optional[float] = None
    lambda_: Optional[float] = None

    def to_dict(self) -> dict:
        d = asdict(self)
        d["lambda"] = d.pop("lambda_")
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=False)


def sample_average(trace, phi) -> float:
    """Mean of ``phi`` over the retained samples of a trace (or sample array)."""
    samples = trace.samples if hasattr(trace, "samples") else np.asarray(trace, dtype=np.float64)
    if samples.ndim == 1:
        samples = samples[:, None]
    if samples.shape[0] == 0:
        raise InvalidArgumentError("cannot average an empty trace")
    return float(np.mean(phi.evaluate_many(samples)))


def running_average(values: np.ndarray) -> np.ndarray:
    """Cumulative means ``mean(values[:k+1])`` for every k."""
    values = np.asarray(values, dtype=np.float64)
    return np.cumsum(values) / np.arange(1, values.shape[0] + 1)


def mse_of_runs(phi_hats: Sequence[float], phi_bar: float) -> float:
    """Average of ``(phi_hat - phi_bar)**2`` over independent runs."""
    arr = np.asarray(phi_hats, dtype=np.float64)
    if arr.size == 0:
        raise InvalidArgumentError("need at least one run")
    return float(np.mean((arr - phi_bar) ** 2))


def batch_means_mcse(values, n_batches: int = 50) -> float:
    """Monte Carlo standard error of the mean by non-overlapping batch means."""
    values = np.asarray(values, dtype=np.float64).reshape(-1)
    if n_batches < 2 or values.shape[0] < 2 * n_batches:
        raise InvalidArgumentError("need at least two samples per batch and two batches")
    size = values.shape[0] // n_batches
    means = values[:size * n_batches].reshape(n_batches, size).mean(axis=1)
    return float(means.std(ddof=1) / math.sqrt(n_batches))


def _all_grads(model: GradientModel, theta) -> np.ndarray:
    theta = as_param(theta, model.dim)
    return model.loglik_grads(theta, np.arange(model.size, dtype=np.int64))


def _pair_sum(G: np.ndarray) -> float:
    # sum_{i<j} g_i . g_j without forming the N x N Gram matrix
    s = G.sum(axis=0)
    return 0.5 * (float(s @ s) - float(np.einsum("ij,ij->", G, G)))


def _cross_pair_sum(G: np.ndarray, H: np.ndarray) -> float:
    # symmetrised sum_{i<j} (g_i . h_j + g_j . h_i) / 2 = (sum_{i != j} g_i . h_j) / 2
    return 0.5 * (float(G.sum(axis=0) @ H.sum(axis=0)) - float(np.einsum("ij,ij->", G, H)))


def gamma_from_grads(G: np.ndarray) -> float:
    G = np.asarray(G, dtype=np.float64)
    if G.ndim == 1:
        G = G[:, None]
    N = G.shape[0]
    s = G.sum(axis=0)
    if N == 1:
        return float(s @ s)
    return float(s @ s) / N ** 2 - 2.0 * _pair_sum(G) / (N * (N - 1))


def gamma_at(model: GradientModel, theta) -> float:
    """Dispersion of per-datum gradients at ``theta`` (non-negative).

    For ``N = 1`` the pairwise term is empty and the value is ``|a_1|^2``.
    """
    return gamma_from_grads(_all_grads(model, theta))


def deltaV_variance_formula(model: GradientModel, theta, n: int) -> float:
    N = model.size
    _check_n(n, N, "n")
    return (N - n) * N ** 2 * gamma_at(model, theta) / n


def _check_n(n, N, name):
    if not 1 <= n <= N:
        raise InvalidArgumentError(f"{name}={n} outside [1, N={N}]")


def _subset_sums(G: np.ndarray, n: int):
    """Yield chunks of ``sum_{i in S} G_i`` over every size-``n`` subset S, lexicographically."""
    N = G.shape[0]
    combos = itertools.combinations(range(N), n)
    while True:
        block = list(itertools.islice(combos, _CHUNK))
        if not block:
            return
        idx = np.asarray(block, dtype=np.int64)
        yield G[idx].sum(axis=1)


def deltaV_variance_exact(model: GradientModel, theta, n: int) -> float:
    """Average of ``|sum_i a_i - (N/n) sum_{i in S} a_i|^2`` over all subsets S."""
    N = model.size
    _check_n(n, N, "n")
    count = math.comb(N, n)
    if count > ENUMERATION_LIMIT:
        raise TooLargeError(f"C({N},{n}) = {count} subsets exceeds the {ENUMERATION_LIMIT} guard")
    G = _all_grads(model, theta)
    full = G.sum(axis=0)
    total = 0.0
    for sums in _subset_sums(G, n):
        dv = full - (N / n) * sums
        total += float(np.einsum("ij,ij->", dv, dv))
    return total / count


def _moments(N: int, n: int):
    # weights w_i = (N/n) z_i - 1 satisfy E w_i^2 = N/n - 1 and E w_i w_j = -c for i != j
    diag = N / n - 1.0
    off = 0.0 if N == 1 else (N - n) / (n * (N - 1))
    return diag, off


def decomposition_terms(alpha: np.ndarray, beta: np.ndarray, n1: int, n2: int):
    """Closed-form ``(A, B, C)`` for the variance-reduced gradient error.

    ``A`` is the correction-minibatch variance of the current gradients,
    ``B`` the combined variance of the anchor gradients under both
    minibatches, and ``C`` the cross term between them.
    """
    N = alpha.shape[0]
    d1, c1 = _moments(N, n1)
    d2, c2 = _moments(N, n2)
    Da = float(np.einsum("ij,ij->", alpha, alpha))
    Db = float(np.einsum("ij,ij->", beta, beta))
    Dab = float(np.einsum("ij,ij->", alpha, beta))
    A = d2 * Da - 2.0 * c2 * _pair_sum(alpha)
    B = (d1 + d2) * Db - 2.0 * (c1 + c2) * _pair_sum(beta)
    C = -2.0 * d2 * Dab + 4.0 * c2 * _cross_pair_sum(alpha, beta)
    return A, B, C


def vr_deltaV_variance_exact(model: GradientModel, theta, anchor, n1: int, n2: int):
    """Exhaustive ``E|dV|^2`` for the variance-reduced estimator plus ``(A, B, C)``.

    ``dV`` is the full likelihood gradient minus the estimator's likelihood
    part, enumerated over every (anchor minibatch, correction minibatch)
    pair. Returns ``(total, A, B, C)``.
    """
    N = model.size
    _check_n(n1, N, "n1")
    _check_n(n2, N, "n2")
    k1, k2 = math.comb(N, n1), math.comb(N, n2)
    if k1 * k2 > ENUMERATION_LIMIT:
        raise TooLargeError(f"{k1} x {k2} minibatch pairs exceeds the {ENUMERATION_LIMIT} guard")
    alpha = _all_grads(model, theta)
    beta = _all_grads(model, anchor)
    # dV = u(pi~) - v(pi), u = sum a - (N/n2) sum_{pi~}(a - b), v = (N/n1) sum_pi b
    v = np.concatenate(list(_subset_sums(beta, n1))) * (N / n1)
    vv = np.einsum("ij,ij->i", v, v)
    base = alpha.sum(axis=0)
    total = 0.0
    for sums in _subset_sums(alpha - beta, n2):
        u = base - (N / n2) * sums
        uu = np.einsum("ij,ij->i", u, u)
        # sum over all pairs of |u_j - v_k|^2
        total += (float(uu.sum()) * k1 + float(vv.sum()) * uu.shape[0]
                  - 2.0 * float(u.sum(axis=0) @ v.sum(axis=0)))
    A, B, C = decomposition_terms(alpha, beta, n1, n2)
    return total / (k1 * k2), A, B, C


def lambda_at(model: GradientModel, anchor, n1: int, n2: int) -> float:
    """Variance-reduction gain ``N^3 (n1 - n2) / (n1 n2) * gamma(anchor)``.

    Equals ``-(B + C)`` when the current point coincides with the anchor.
    """
    N = model.size
    _check_n(n1, N, "n1")
    _check_n(n2, N, "n2")
    if n2 >= n1:
        raise InvalidArgumentError(f"gain is defined only for n1 > n2 (got n1={n1}, n2={n2})")
    return N ** 3 * (n1 - n2) / (n1 * n2) * gamma_at(model, anchor)


def variance_report(model: GradientModel, theta, n: int, anchor=None, n1: Optional[int] = None,
                    n2: Optional[int] = None, exact: bool = True) -> VarianceReport:
    """Bundle the functionals for one point; the vr fields need ``anchor, n1, n2``."""
    gamma = gamma_at(model, theta)
    formula = (model.size - n) * model.size ** 2 * gamma / n
    dv = deltaV_variance_exact(model, theta, n) if exact else None
    if anchor is None:
        return VarianceReport(gamma, formula, dv)
    if n1 is None or n2 is None:
        raise InvalidArgumentError("vr report needs both n1 and n2")
    A, B, C = decomposition_terms(_all_grads(model, theta), _all_grads(model, anchor), n1, n2)
    return VarianceReport(gamma, formula, dv, A, B, C, lambda_at(model, anchor, n1, n2))


def anchor_drift(model: GradientModel, trace, m: int) -> np.ndarray:
    """``|mean_i (a_i(theta_l) - b_i(anchor_l))|`` along a chain.

    ``anchor_l`` is the state at the most recent refresh, iteration
    ``l - (l mod m)``. Iterations whose anchor state was not recorded are
    skipped; the initial state counts as recorded.
    """
    if m < 1:
        raise InvalidArgumentError("m must be at least 1")
    states = {int(l): s for l, s in zip(trace.iterations, trace.samples)}
    if trace.theta0 is not None:
        states[0] = np.asarray(trace.theta0, dtype=np.float64)
    every = np.arange(model.size, dtype=np.int64)
    out = []
    for l in trace.iterations:
        l = int(l)
        a = states.get(l - l % m)
        if a is None:
            continue
        diff = model.loglik_grads(states[l], every) - model.loglik_grads(a, every)
        out.append(float(np.linalg.norm(diff.mean(axis=0))))
    return np.asarray(out)
