"""Gradient estimators: plain minibatch, practical variance reduction, SVRG-LD.

The variance-reduced estimator keeps an anchor ``theta_anchor`` and an anchor
gradient ``g_anchor = (N/n1) sum_{i in pi} grad_i(theta_anchor)`` computed on
a size-``n1`` minibatch every ``m`` iterations. Each iteration then returns::

    g = g_anchor + grad log p(theta) + (N/n2) sum_{i in pi~} (grad_i(theta) - grad_i(theta_anchor))

with ``pi~`` a fresh size-``n2`` minibatch drawn independently of ``pi``.
Anchor per-datum gradients are recomputed rather than stored, so state is
O(d) and each iteration costs ``2 * n2`` per-datum evaluations. SVRG-LD is
the ``n1 = N`` case.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .core import (GradientModel, RngStream, _checked_sum, _indices_of, _minibatch_gradient,
                   _prior_grad, _sample_indices, as_param, loglik_grad_sum)
from .errors import ConfigError, ContractViolationError, InvalidArgumentError


@dataclass(frozen=True)
class VrState:
    anchor: np.ndarray
    anchor_grad: np.ndarray  # likelihood part only, no prior term
    steps_since_refresh: int = 0
    anchor_indices: Optional[np.ndarray] = None


def _refresh(model: GradientModel, theta: np.ndarray, n1: int, pi: np.ndarray) -> VrState:
    g = (model.size / n1) * _checked_sum(model.loglik_grads(theta, pi), pi)
    return VrState(anchor=theta.copy(), anchor_grad=g, steps_since_refresh=0, anchor_indices=pi)


def refresh_anchor(model: GradientModel, theta, n1: int, rng: Optional[RngStream] = None,
                   indices=None) -> VrState:
    """Pin the anchor at ``theta`` and recompute the anchor gradient.

    ``indices`` fixes the size-``n1`` minibatch ``pi``; otherwise it is drawn
    from ``rng``. Charges ``n1`` per-datum evaluations.
    """
    theta = as_param(theta, model.dim)
    N = model.size
    if not 1 <= n1 <= N:
        raise InvalidArgumentError(f"n1={n1} outside [1, N={N}]")
    if indices is None:
        if rng is None:
            raise InvalidArgumentError("refresh_anchor needs an rng or explicit indices")
        pi = _sample_indices(N, n1, rng)
    else:
        pi = _indices_of(indices)
        if pi.shape[0] != n1:
            raise InvalidArgumentError(f"anchor minibatch has {pi.shape[0]} indices, expected {n1}")
    return _refresh(model, theta, n1, pi)


def correction_term(model: GradientModel, theta: np.ndarray, anchor: np.ndarray,
                    idx: np.ndarray) -> np.ndarray:
    """``(N/n2) * sum_{i in idx} (grad_i(theta) - grad_i(anchor))``."""
    diff = model.loglik_grads(theta, idx) - model.loglik_grads(anchor, idx)
    return (model.size / idx.shape[0]) * _checked_sum(diff, idx)


def _vr_terms(state: VrState, model: GradientModel, theta: np.ndarray, idx: np.ndarray):
    return state.anchor_grad, _prior_grad(model, theta), correction_term(model, theta, state.anchor, idx)


def vr_gradient_terms(state: Optional[VrState], model: GradientModel, theta, n2: int,
                      rng: Optional[RngStream] = None, indices=None):
    """Return ``(anchor_grad, prior_grad, correction)`` for one iteration."""
    if state is None:
        raise ContractViolationError("vr_gradient called before the first anchor refresh")
    theta = as_param(theta, model.dim)
    if indices is None:
        if rng is None:
            raise InvalidArgumentError("vr_gradient needs an rng or explicit indices")
        if not 1 <= n2 <= model.size:
            raise InvalidArgumentError(f"n2={n2} outside [1, N={model.size}]")
        idx = _sample_indices(model.size, n2, rng)
    else:
        idx = _indices_of(indices)
        if idx.shape[0] != n2:
            raise InvalidArgumentError(f"correction minibatch has {idx.shape[0]} indices, expected {n2}")
    return _vr_terms(state, model, theta, idx)


def vr_gradient(state: Optional[VrState], model: GradientModel, theta, n2: int,
                rng: Optional[RngStream] = None, indices=None) -> np.ndarray:
    """Variance-reduced log-posterior gradient at ``theta``.

    Draws the correction minibatch (size ``n2``) from ``rng`` unless
    ``indices`` is given. Charges ``2 * n2`` evaluations: ``n2`` at ``theta``
    and ``n2`` recomputed at the anchor.
    """
    anchor_grad, prior, corr = vr_gradient_terms(state, model, theta, n2, rng, indices)
    return anchor_grad + prior + corr


class GradientEstimator:
    """A per-chain gradient source with exact cost accounting.

    Instances may hold mutable per-chain state; give each chain its own.
    """

    mode = "abstract"

    def reset(self) -> None:
        pass

    def validate(self, N: int) -> None:
        raise NotImplementedError

    def next_gradient(self, model: GradientModel, theta, l: int, rng: RngStream):
        """Return ``(gradient, cost)`` for iteration ``l``."""
        raise NotImplementedError

    def cost_for_steps(self, L: int, N: int) -> int:
        """Cumulative per-datum gradient evaluations after ``L`` iterations."""
        raise NotImplementedError

    def max_steps(self, budget: int, N: int) -> int:
        """Largest ``L`` whose cumulative cost fits within ``budget``."""
        lo, hi = 0, 1
        while self.cost_for_steps(hi, N) <= budget:
            lo, hi = hi, 2 * hi
        while hi - lo > 1:
            mid = (lo + hi) // 2
            if self.cost_for_steps(mid, N) <= budget:
                lo = mid
            else:
                hi = mid
        return lo

    def to_dict(self) -> dict:
        raise NotImplementedError

    @property
    def label(self) -> str:
        raise NotImplementedError


class PlainEstimator(GradientEstimator):
    mode = "plain"

    def __init__(self, n: int):
        n = int(n)
        if n < 1:
            raise InvalidArgumentError(f"plain minibatch size must be >= 1, got {n}")
        self.n = n

    def validate(self, N):
        if self.n > N:
            raise InvalidArgumentError(f"minibatch size n={self.n} exceeds N={N}")

    def next_gradient(self, model, theta, l, rng):
        N = model.size
        if self.n > N:
            self.validate(N)
        return _minibatch_gradient(model, theta, _sample_indices(N, self.n, rng)), self.n

    def cost_for_steps(self, L, N):
        return self.n * int(L)

    def to_dict(self):
        return {"mode": "plain", "n": self.n}

    @property
    def label(self):
        return f"plain(n={self.n})"

    def __repr__(self):
        return f"PlainEstimator(n={self.n})"


class VREstimator(GradientEstimator):
    """Anchor-refresh estimator; ``n1=None`` means the full dataset (SVRG-LD)."""

    mode = "vr"

    def __init__(self, n1: Optional[int], n2: int, m: int):
        n2, m = int(n2), int(m)
        if n2 < 1:
            raise InvalidArgumentError(f"n2 must be >= 1, got {n2}")
        if m < 1:
            raise InvalidArgumentError(f"update interval m must be >= 1, got {m}")
        if n1 is not None:
            n1 = int(n1)
            if n2 >= n1:
                raise InvalidArgumentError(
                    f"variance reduction requires n1 > n2 (got n1={n1}, n2={n2})")
        self._n1 = n1
        self.n2 = n2
        self.m = m
        self.state: Optional[VrState] = None

    def n1_for(self, N: int) -> int:
        return N if self._n1 is None else self._n1

    @property
    def n1(self) -> Optional[int]:
        return self._n1

    def reset(self):
        self.state = None

    def validate(self, N):
        n1 = self.n1_for(N)
        if n1 > N:
            raise InvalidArgumentError(f"n1={n1} exceeds N={N}")
        if self.n2 >= n1:
            raise InvalidArgumentError(f"variance reduction requires n1 > n2 (n1={n1}, n2={self.n2})")

    def next_gradient(self, model, theta, l, rng):
        if l < 0:
            raise InvalidArgumentError("iteration index must be non-negative")
        N = model.size
        self.validate(N)
        n1 = self.n1_for(N)
        cost = 0
        if l % self.m == 0:
            self.state = _refresh(model, theta, n1, _sample_indices(N, n1, rng))
            cost += n1
        elif self.state is None:
            raise ContractViolationError(
                f"iteration {l} needs an anchor, but none was set (refresh happens when l % m == 0)")
        else:
            st = self.state
            self.state = VrState(st.anchor, st.anchor_grad, st.steps_since_refresh + 1,
                                 st.anchor_indices)
        anchor_grad, prior, corr = _vr_terms(self.state, model, theta,
                                             _sample_indices(N, self.n2, rng))
        return anchor_grad + prior + corr, cost + 2 * self.n2

    def cost_for_steps(self, L, N):
        L = int(L)
        refreshes = -(-L // self.m)  # ceil: refresh at l = 0, m, 2m, ...
        return 2 * self.n2 * L + self.n1_for(N) * refreshes

    def to_dict(self):
        return {"mode": "vr", "n1": self._n1, "n2": self.n2, "m": self.m}

    @property
    def label(self):
        return f"vr(n1={self._n1},n2={self.n2},m={self.m})"

    def __repr__(self):
        return f"VREstimator(n1={self._n1}, n2={self.n2}, m={self.m})"


class SvrgLDEstimator(VREstimator):
    """Full-data anchor gradient; identical draws to ``VREstimator(N, n2, m)``."""

    mode = "svrg_ld"

    def __init__(self, n2: int, m: int):
        super().__init__(None, n2, m)

    def to_dict(self):
        return {"mode": "svrg_ld", "n2": self.n2, "m": self.m}

    @property
    def label(self):
        return f"svrg_ld(n2={self.n2},m={self.m})"

    def __repr__(self):
        return f"SvrgLDEstimator(n2={self.n2}, m={self.m})"


def next_gradient(estimator: GradientEstimator, model: GradientModel, theta, l: int,
                  rng: RngStream):
    return estimator.next_gradient(model, theta, l, rng)


def estimator_from_dict(params: dict) -> GradientEstimator:
    """Build an estimator from its config form, e.g. ``{"mode": "plain", "n": 10}``."""
    try:
        mode = params["mode"]
        if mode == "plain":
            return PlainEstimator(params["n"])
        if mode == "vr":
            return VREstimator(params["n1"], params["n2"], params["m"])
        if mode == "svrg_ld":
            return SvrgLDEstimator(params["n2"], params["m"])
    except KeyError as exc:
        raise ConfigError(f"estimator config {params!r} is missing {exc}") from None
    except InvalidArgumentError as exc:
        raise ConfigError(str(exc)) from None
    raise ConfigError(f"unknown estimator mode {params.get('mode')!r}")
