"""Langevin transition kernel, step-size schedules and the chain runner."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Union

import numpy as np

from .core import GradientModel, RngStream, _finite, as_param
from .errors import DivergedChainError, InvalidArgumentError, NumericOverflowError

EXPORT_MAX_DIM = 64


@dataclass(frozen=True)
class FixedStep:
    h: float

    def __post_init__(self):
        if not (self.h > 0 and math.isfinite(self.h)):
            raise InvalidArgumentError(f"step size must be positive and finite, got {self.h}")

    def at(self, l: int) -> float:
        return self.h

    def to_dict(self):
        return {"kind": "fixed", "h": self.h}


@dataclass(frozen=True)
class DecayStep:
    """``h_l = 1 / (a + b * l)``."""

    a: float
    b: float = 0.0

    def __post_init__(self):
        if not self.a > 0 or not self.b >= 0:
            raise InvalidArgumentError(f"decay schedule needs a > 0 and b >= 0 (a={self.a}, b={self.b})")

    def at(self, l: int) -> float:
        return 1.0 / (self.a + self.b * l)

    def to_dict(self):
        return {"kind": "decay", "a": self.a, "b": self.b}


StepSizeSchedule = Union[FixedStep, DecayStep]


def schedule_from_dict(params: dict):
    kind = params.get("kind", "fixed")
    if kind == "fixed":
        return FixedStep(float(params["h"]))
    if kind == "decay":
        return DecayStep(float(params["a"]), float(params.get("b", 0.0)))
    raise InvalidArgumentError(f"unknown schedule kind {kind!r}")


@dataclass(frozen=True)
class ChainConfig:
    L: int
    schedule: StepSizeSchedule
    seed: int = 0
    burn_in: int = 0
    record_every: int = 1
    chain: int = 0

    def __post_init__(self):
        if self.L < 1:
            raise InvalidArgumentError("L must be at least 1")
        if not 0 <= self.burn_in < self.L:
            raise InvalidArgumentError("burn_in must satisfy 0 <= burn_in < L")
        if self.record_every < 1:
            raise InvalidArgumentError("record_every must be at least 1")


@dataclass
class ChainTrace:
    """Recorded samples ``theta_l`` (state after transition ``l``, l = 1..L).

    ``grad_evals[k]`` is the cumulative per-datum gradient count spent to
    produce ``samples[k]``; ``step_sizes[k]`` the step used for it.
    """

    iterations: np.ndarray
    samples: np.ndarray
    grad_evals: np.ndarray
    step_sizes: np.ndarray
    theta0: Optional[np.ndarray] = None
    total_grad_evals: int = 0
    meta: dict = field(default_factory=dict)

    def __len__(self):
        return int(self.iterations.shape[0])

    @property
    def dim(self) -> int:
        return int(self.samples.shape[1])


def sgld_step(theta, g, h: float, rng: Optional[RngStream] = None, noise=None,
              iteration: Optional[int] = None) -> np.ndarray:
    """One Euler step of Langevin dynamics: ``theta + h g + sqrt(2h) zeta``.

    ``noise`` replaces the Gaussian draw (used for coupling and tests);
    otherwise exactly ``d`` normals are taken from ``rng``.
    """
    if not h > 0:
        raise InvalidArgumentError(f"step size must be positive, got {h}")
    theta = np.asarray(theta, dtype=np.float64)
    g = np.asarray(g, dtype=np.float64)
    if theta.shape != g.shape:
        raise InvalidArgumentError(f"shape mismatch: theta {theta.shape} vs gradient {g.shape}")
    zeta = rng.normals(theta.shape[0]) if noise is None else np.asarray(noise, dtype=np.float64)
    out = theta + h * g + math.sqrt(2.0 * h) * zeta
    if not _finite(out):
        where = "" if iteration is None else f" at iteration {iteration}"
        raise DivergedChainError(f"chain diverged{where} (h={h:g})", iteration=iteration, step_size=h)
    return out


def run_chain(model: GradientModel, estimator, config: ChainConfig, theta0=None,
              kernel: Callable = sgld_step) -> ChainTrace:
    """Run ``config.L`` transitions and record the retained samples.

    Minibatch and noise draws come from separate streams
    ``(seed, chain, "minibatch")`` and ``(seed, chain, "noise")``.
    ``kernel`` is the transition ``(theta, g, h, rng, iteration=l) -> theta``.
    """
    theta = as_param(np.zeros(model.dim) if theta0 is None else theta0, model.dim)
    start = theta.copy()
    estimator.reset()
    estimator.validate(model.size)
    batch_rng = RngStream(config.seed, config.chain, "minibatch")
    noise_rng = RngStream(config.seed, config.chain, "noise")

    n_rec = len(range(config.burn_in + config.record_every, config.L + 1, config.record_every))
    iters = np.empty(n_rec, dtype=np.int64)
    samples = np.empty((n_rec, model.dim))
    evals = np.empty(n_rec, dtype=np.int64)
    steps = np.empty(n_rec)

    spent = 0
    k = 0
    for l in range(config.L):
        try:
            g, cost = estimator.next_gradient(model, theta, l, batch_rng)
        except NumericOverflowError as exc:
            raise NumericOverflowError(f"iteration {l}: {exc}", exc.datum_index) from exc
        spent += cost
        h = config.schedule.at(l)
        theta = kernel(theta, g, h, noise_rng, iteration=l)
        done = l + 1
        if done > config.burn_in and (done - config.burn_in) % config.record_every == 0:
            iters[k] = done
            samples[k] = theta
            evals[k] = spent
            steps[k] = h
            k += 1
    return ChainTrace(iters, samples, evals, steps, theta0=start, total_grad_evals=spent,
                      meta={"estimator": estimator.to_dict(), "seed": config.seed,
                            "chain": config.chain})


def export_trace_csv(trace: ChainTrace, path) -> None:
    """Write ``iteration,grad_evals,h,theta_0..theta_{d-1}``.

    For ``d > 64`` the per-coordinate columns are replaced by
    ``theta_mean,theta_sd,theta_norm`` summaries of each sample.
    """
    d = trace.dim
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        if d <= EXPORT_MAX_DIM:
            w.writerow(["iteration", "grad_evals", "h"] + [f"theta_{j}" for j in range(d)])
            for it, ge, h, s in zip(trace.iterations, trace.grad_evals, trace.step_sizes, trace.samples):
                w.writerow([int(it), int(ge), repr(float(h))] + [repr(float(v)) for v in s])
        else:
            w.writerow(["iteration", "grad_evals", "h", "theta_mean", "theta_sd", "theta_norm"])
            for it, ge, h, s in zip(trace.iterations, trace.grad_evals, trace.step_sizes, trace.samples):
                w.writerow([int(it), int(ge), repr(float(h)), repr(float(s.mean())),
                            repr(float(s.std())), repr(float(np.linalg.norm(s)))])
