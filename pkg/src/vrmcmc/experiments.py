"""Experiment harness: budget sweep, vr comparison, n1 sweep, oracle check.

Every study is a list of independent ``(coordinate, repeat)`` jobs. Repeat
``r`` uses chain index ``r`` for its minibatch and noise streams, so all
coordinates within a repeat share random numbers. The dataset is generated
once per experiment from the ``(seed, 0, "data")`` stream.

CSV columns (fixed order)::

    experiment,coordinate,repeat,grad_evals,data_passes,phi_hat,sq_err,nll,error_rate,status

Per-repeat rows carry the running posterior-average estimate. Aggregate rows
use ``repeat = "mse"`` (mean of ``sq_err`` over repeats) and
``repeat = "median"`` (median of ``sq_err``). The first line of every file
is a ``#`` comment holding a timestamp; everything after it is
deterministic in the config and seed.
"""

from __future__ import annotations

import csv
import io
import itertools
import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, List, Optional

import numpy as np
from scipy.special import expit

from . import diagnostics
from . import variance_reduction as vr
from .core import RngStream, _sample_indices, full_gradient, log_posterior
from .errors import (ConfigError, DivergedChainError, InvalidArgumentError, NumericOverflowError,
                     VrmcmcError)
from .models import (GaussianMeanModel, LogisticRegressionModel, gaussian_posterior_phi_bar,
                     generate_gaussian_data, generate_logistic_data, get_test_function,
                     load_classification_csv, predictive_metrics, standardize_with_intercept)
from .samplers import ChainConfig, run_chain, schedule_from_dict

EXPERIMENTS = ("budget_sweep", "vr_compare", "n1_sweep", "oracle_check")
COLUMNS = ["experiment", "coordinate", "repeat", "grad_evals", "data_passes", "phi_hat",
           "sq_err", "nll", "error_rate", "status"]
N1_SWEEP_DEFAULT = (100, 200, 300, 400, 500, 600, 700, 1000, 2000)


@dataclass
class ExperimentConfig:
    experiment: str
    model: dict = field(default_factory=lambda: {"kind": "gaussian", "N": 1000, "theta_true": 1.0})
    schedule: dict = field(default_factory=lambda: {"kind": "fixed", "h": 1e-5})
    budget: int = 100_000
    n_values: List[int] = field(default_factory=lambda: [1, 10, 100])
    n1: int = 100
    n2: int = 10
    m: int = 10
    svrg: bool = False
    n1_values: Optional[List[int]] = None
    repeats: int = 20
    seed: int = 0
    checkpoints: int = 20
    test_function: str = "theta_sq"
    theta0: Optional[List[float]] = None

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise ConfigError(f"unknown experiment {self.experiment!r}; choose from {EXPERIMENTS}")
        if self.repeats < 1:
            raise ConfigError("repeats must be at least 1")
        if self.checkpoints < 1:
            raise ConfigError("checkpoints must be at least 1")
        if self.budget < 1:
            raise ConfigError("budget must be a positive gradient-evaluation count")
        if self.experiment == "budget_sweep" and (not self.n_values or min(self.n_values) < 1):
            raise ConfigError("budget_sweep needs a non-empty list of positive n values")
        if self.experiment in ("vr_compare", "n1_sweep") and self.n2 < 1:
            raise ConfigError("n2 must be at least 1")
        if self.experiment == "vr_compare" and self.n1 <= self.n2:
            raise ConfigError(f"vr_compare needs n1 > n2 (n1={self.n1}, n2={self.n2})")
        if self.experiment == "n1_sweep" and self.n1_values is not None:
            bad = [v for v in self.n1_values if v <= self.n2]
            if bad:
                raise ConfigError(f"n1 values must exceed n2={self.n2}; got {bad}")
        if self.experiment != "oracle_check":
            try:
                schedule_from_dict(self.schedule)
            except (KeyError, InvalidArgumentError) as exc:
                raise ConfigError(f"bad schedule {self.schedule!r}: {exc}") from None
            get_test_function(self.test_function)

    @classmethod
    def from_dict(cls, raw: dict) -> "ExperimentConfig":
        known = set(cls.__dataclass_fields__)
        extra = set(raw) - known
        if extra:
            raise ConfigError(f"unknown config keys: {sorted(extra)}")
        if "experiment" not in raw:
            raise ConfigError("config must name an experiment")
        try:
            return cls(**raw)
        except (TypeError, InvalidArgumentError) as exc:
            raise ConfigError(str(exc)) from None

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        try:
            with open(path) as fh:
                raw = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        if not isinstance(raw, dict):
            raise ConfigError("config must be a JSON object")
        return cls.from_dict(raw)

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


@dataclass
class Problem:
    model: object
    phi_bar: Optional[float]
    test: Optional[object] = None


def build_problem(cfg: ExperimentConfig) -> Problem:
    params = dict(cfg.model)
    kind = params.get("kind", "gaussian")
    rng = RngStream(cfg.seed, 0, "data")
    if kind == "gaussian":
        model = GaussianMeanModel(generate_gaussian_data(int(params.get("N", 1000)),
                                                         float(params.get("theta_true", 1.0)), rng))
        return Problem(model, gaussian_posterior_phi_bar(model, get_test_function(cfg.test_function)))
    if kind == "logistic":
        N, n_test = int(params.get("N", 1000)), int(params.get("test_N", 500))
        raw = generate_logistic_data(N + n_test, int(params.get("p", 5)), rng, intercept=False)
        train, test = raw.subset(np.arange(N)), raw.subset(np.arange(N, N + n_test))
        return Problem(LogisticRegressionModel(standardize_with_intercept(train),
                                               float(params.get("prior_scale", 1.0))),
                       None, standardize_with_intercept(test, reference=train))
    if kind == "csv":
        if "path" not in params:
            raise ConfigError("csv model needs a path")
        train, test = load_classification_csv(params["path"], float(params.get("test_fraction", 0.2)), rng)
        if test is None:
            raise ConfigError("csv model needs a non-empty test split")
        return Problem(LogisticRegressionModel(train, float(params.get("prior_scale", 1.0))), None, test)
    raise ConfigError(f"unknown model kind {kind!r}")


def checkpoint_targets(budget: int, K: int) -> np.ndarray:
    return np.array([budget * k // K for k in range(1, K + 1)], dtype=np.int64)


def _checkpoint_rows(grad_evals: np.ndarray, targets: np.ndarray) -> np.ndarray:
    """Index of the last step within each target budget; duplicates dropped."""
    pos = np.searchsorted(grad_evals, targets, side="right") - 1
    pos = pos[pos >= 0]
    return np.unique(pos)


def _predictive_running(samples: np.ndarray, test, rows: np.ndarray):
    X = test.x if test.x.ndim == 2 else test.x[:, None]
    out = []
    acc = np.zeros(X.shape[0])
    start = 0
    for r in rows:
        for lo in range(start, r + 1, 4096):
            hi = min(r + 1, lo + 4096)
            acc += expit(samples[lo:hi] @ X.T).sum(axis=0)
        start = r + 1
        out.append(predictive_metrics(acc / (r + 1), test.y))
    return out


@dataclass(frozen=True)
class Job:
    config: dict
    coordinate: str
    estimator: dict
    repeat: int


def _run_job(job: Job) -> dict:
    cfg = ExperimentConfig.from_dict(job.config)
    prob = build_problem(cfg)
    model = prob.model
    N = model.size
    est = vr.estimator_from_dict(job.estimator)
    L = est.max_steps(cfg.budget, N)
    result = {"coordinate": job.coordinate, "repeat": job.repeat, "N": N}
    if L < 1:
        result["error"] = f"budget {cfg.budget} buys no iterations for {est.label}"
        return result
    theta0 = cfg.theta0 if cfg.theta0 is not None else np.zeros(model.dim)
    config = ChainConfig(L=L, schedule=schedule_from_dict(cfg.schedule), seed=cfg.seed,
                         chain=job.repeat)
    try:
        trace = run_chain(model, est, config, theta0=theta0)
    except (DivergedChainError, NumericOverflowError) as exc:
        result["error"] = f"diverged: {exc}"
        return result
    rows = _checkpoint_rows(trace.grad_evals, checkpoint_targets(cfg.budget, cfg.checkpoints))
    result["grad_evals"] = trace.grad_evals[rows].tolist()
    if prob.test is None:
        phi = get_test_function(cfg.test_function)
        running = diagnostics.running_average(phi.evaluate_many(trace.samples))
        result["phi_hat"] = running[rows].tolist()
        result["phi_bar"] = prob.phi_bar
    else:
        result["metrics"] = _predictive_running(trace.samples, prob.test, rows)
    return result


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v))


def _run_jobs(jobs: List[Job], threads: int) -> List[dict]:
    if threads <= 1 or len(jobs) <= 1:
        return [_run_job(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(_run_job, jobs))  # map keeps submission order


def _rows_for(experiment: str, results: List[dict]) -> List[list]:
    rows = []
    for coord, group in itertools.groupby(results, key=lambda r: r["coordinate"]):
        group = list(group)
        series = {}
        for res in group:
            if "error" in res:
                rows.append([experiment, coord, res["repeat"], None, None, None, None, None, None,
                             res["error"]])
                continue
            N = res["N"]
            for k, ge in enumerate(res["grad_evals"]):
                if "phi_hat" in res:
                    ph = res["phi_hat"][k]
                    sq = (ph - res["phi_bar"]) ** 2
                    status = "ok" if math.isfinite(sq) else "diverged"
                    rows.append([experiment, coord, res["repeat"], ge, ge / N, ph, sq, None, None, status])
                    series.setdefault(ge, []).append(sq)
                else:
                    nll, err = res["metrics"][k]
                    rows.append([experiment, coord, res["repeat"], ge, ge / N, None, None, nll, err, "ok"])
                    series.setdefault(ge, []).append((nll, err))
        ok = sum("error" not in r for r in group)
        status = "ok" if ok == len(group) else f"partial ({ok}/{len(group)} repeats)"
        N = group[0]["N"]
        for ge in sorted(series):
            vals = series[ge]
            if isinstance(vals[0], tuple):
                arr = np.asarray(vals)
                rows.append([experiment, coord, "mse", ge, ge / N, None, None,
                             float(arr[:, 0].mean()), float(arr[:, 1].mean()), status])
                rows.append([experiment, coord, "median", ge, ge / N, None, None,
                             float(np.median(arr[:, 0])), float(np.median(arr[:, 1])), status])
            else:
                rows.append([experiment, coord, "mse", ge, ge / N, None, float(np.mean(vals)),
                             None, None, status])
                rows.append([experiment, coord, "median", ge, ge / N, None, float(np.median(vals)),
                             None, None, status])
    return rows


def _jobs(cfg: ExperimentConfig, coords) -> List[Job]:
    raw = cfg.to_dict()
    return [Job(raw, label, params, r) for label, params in coords for r in range(cfg.repeats)]


def _model_size(cfg: ExperimentConfig) -> int:
    return build_problem(cfg).model.size


def run_budget_sweep(cfg: ExperimentConfig, threads: int = 1) -> List[list]:
    """Plain chains with ``L = floor(T / n)`` steps for each n in the sweep."""
    if cfg.budget < max(cfg.n_values):
        raise InvalidArgumentError(
            f"budget {cfg.budget} is below the largest minibatch {max(cfg.n_values)}")
    N = _model_size(cfg)
    too_big = [n for n in cfg.n_values if n > N]
    if too_big:
        raise InvalidArgumentError(f"minibatch sizes {too_big} exceed N={N}")
    coords = [(f"n={n}", {"mode": "plain", "n": int(n)}) for n in cfg.n_values]
    return _rows_for("budget_sweep", _run_jobs(_jobs(cfg, coords), threads))


def run_vr_compare(cfg: ExperimentConfig, threads: int = 1) -> List[list]:
    """Plain(n2) against VR(n1, n2, m), optionally SVRG-LD, at matched budget."""
    N = _model_size(cfg)
    if cfg.n1 > N:
        raise InvalidArgumentError(f"n1={cfg.n1} exceeds N={N}")
    coords = [(f"plain(n={cfg.n2})", {"mode": "plain", "n": cfg.n2}),
              (f"vr(n1={cfg.n1},n2={cfg.n2},m={cfg.m})",
               {"mode": "vr", "n1": cfg.n1, "n2": cfg.n2, "m": cfg.m})]
    if cfg.svrg:
        coords.append((f"svrg_ld(n2={cfg.n2},m={cfg.m})", {"mode": "svrg_ld", "n2": cfg.n2, "m": cfg.m}))
    return _rows_for("vr_compare", _run_jobs(_jobs(cfg, coords), threads))


def n1_sweep_values(cfg: ExperimentConfig, N: int) -> List[int]:
    if cfg.n1_values is not None:
        bad = [v for v in cfg.n1_values if v > N]
        if bad:
            raise InvalidArgumentError(f"n1 values {bad} exceed N={N}")
        return list(cfg.n1_values)
    return sorted({min(v, N) for v in N1_SWEEP_DEFAULT if min(v, N) > cfg.n2})


def run_n1_sweep(cfg: ExperimentConfig, threads: int = 1) -> List[list]:
    """One VR series per n1 value plus the Plain(n2) baseline, shared seeds."""
    N = _model_size(cfg)
    coords = [(f"plain(n={cfg.n2})", {"mode": "plain", "n": cfg.n2})]
    for n1 in n1_sweep_values(cfg, N):
        coords.append((f"vr(n1={n1},n2={cfg.n2},m={cfg.m})",
                       {"mode": "vr", "n1": n1, "n2": cfg.n2, "m": cfg.m}))
    return _rows_for("n1_sweep", _run_jobs(_jobs(cfg, coords), threads))


def rows_to_csv(rows: List[list], experiment: str, timestamp: Optional[str] = None) -> str:
    buf = io.StringIO()
    stamp = timestamp or time.strftime("%Y-%m-%dT%H:%M:%S%z")
    buf.write(f"# vrmcmc {experiment} generated {stamp}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(COLUMNS)
    for row in rows:
        w.writerow([_fmt(v) if not isinstance(v, str) else v for v in row])
    return buf.getvalue()


def csv_body(text: str) -> str:
    """The deterministic part of a CSV produced here (drops the timestamp line)."""
    return "".join(line for line in text.splitlines(keepends=True) if not line.startswith("#"))


RUNNERS = {"budget_sweep": run_budget_sweep, "vr_compare": run_vr_compare,
           "n1_sweep": run_n1_sweep}


def run_experiment(cfg: ExperimentConfig, threads: int = 1) -> str:
    if cfg.experiment not in RUNNERS:
        raise ConfigError(f"{cfg.experiment} does not produce a CSV")
    return rows_to_csv(RUNNERS[cfg.experiment](cfg, threads), cfg.experiment)


# ---------------------------------------------------------------------------
# oracle check


@dataclass
class OracleResult:
    name: str
    passed: bool
    detail: str = ""


def finite_difference_gradient(model, theta, eps: float = 1e-5) -> np.ndarray:
    theta = np.asarray(theta, dtype=np.float64)
    out = np.empty_like(theta)
    for j in range(theta.shape[0]):
        e = np.zeros_like(theta)
        e[j] = eps
        out[j] = (log_posterior(model, theta + e) - log_posterior(model, theta - e)) / (2 * eps)
    return out


def gradient_fd_error(model, theta, eps: float = 1e-5) -> float:
    g = full_gradient(model, theta)
    fd = finite_difference_gradient(model, theta, eps)
    return float(np.linalg.norm(fd - g) / max(np.linalg.norm(g), 1.0))


def _rel(a: float, b: float) -> float:
    return abs(a - b) / max(abs(a), abs(b), 1e-300) if a != b else 0.0


def _small_gaussian(N: int, rng: np.random.Generator) -> GaussianMeanModel:
    return GaussianMeanModel(rng.normal(0.5, 1.5, size=N))


def _small_logistic(N: int, seed: int, chain: int) -> LogisticRegressionModel:
    data = generate_logistic_data(N, 2, RngStream(seed, chain, "data"))
    return LogisticRegressionModel(data)


def check_deltaV_grid(Ns=range(2, 9), seed: int = 0) -> OracleResult:
    rng = np.random.default_rng([seed, 1])
    for N in Ns:
        model = _small_gaussian(N, rng)
        theta = rng.normal(size=1)
        g = diagnostics.gamma_at(model, theta)
        for n in range(1, N + 1):
            exact = diagnostics.deltaV_variance_exact(model, theta, n)
            formula = (N - n) * N ** 2 * g / n
            if n < N and _rel(exact, formula) > 1e-10 or n == N and abs(exact) > 1e-20:
                return OracleResult("deltaV closed form", False,
                                    f"N={N} n={n} theta={theta.tolist()} data={model.data.x.tolist()} "
                                    f"exact={exact!r} formula={formula!r}")
    return OracleResult("deltaV closed form", True, f"N in {list(Ns)}, all n")


def check_decomposition_grid(Ns=(3, 4, 5), seed: int = 0) -> OracleResult:
    rng = np.random.default_rng([seed, 2])
    for N in Ns:
        for model in (_small_gaussian(N, rng), _small_logistic(N, seed, N)):
            for n1 in range(2, N + 1):
                for n2 in range(1, n1):
                    theta, anchor = rng.normal(size=model.dim), rng.normal(size=model.dim)
                    total, A, B, C = diagnostics.vr_deltaV_variance_exact(model, theta, anchor, n1, n2)
                    # terms can cancel to ~0; measure error against the largest term
                    scale = max(abs(total), abs(A), abs(B), abs(C), 1e-300)
                    if abs(total - (A + B + C)) > 1e-10 * scale:
                        return OracleResult("A+B+C decomposition", False,
                                            f"N={N} n1={n1} n2={n2} theta={theta.tolist()} "
                                            f"anchor={anchor.tolist()} total={total!r} A+B+C={A + B + C!r}")
    return OracleResult("A+B+C decomposition", True, f"N in {list(Ns)}, all n1 > n2")


def _enumerate_terms(model, theta, anchor, n1, n2):
    N = model.size
    pis = list(itertools.combinations(range(N), n1))
    tils = list(itertools.combinations(range(N), n2))
    sums = [np.zeros(model.dim) for _ in range(3)]
    for pi in pis:
        state = vr.refresh_anchor(model, anchor, n1, indices=pi)
        for til in tils:
            for k, t in enumerate(vr.vr_gradient_terms(state, model, theta, n2, indices=til)):
                sums[k] += t
    count = len(pis) * len(tils)
    return [s / count for s in sums]


def _term_targets(model, theta, anchor):
    every = np.arange(model.size)
    a_full = model.loglik_grads(np.asarray(theta, float), every).sum(axis=0)
    b_full = model.loglik_grads(np.asarray(anchor, float), every).sum(axis=0)
    return [b_full, np.asarray(model.log_prior_grad(np.asarray(theta, float))), a_full - b_full]


TERM_NAMES = ("anchor gradient", "prior gradient", "correction term")


def check_unbiased_exhaustive(Ns=range(2, 7), seed: int = 0, tol: float = 1e-12) -> OracleResult:
    rng = np.random.default_rng([seed, 3])
    for N in Ns:
        for model in (_small_gaussian(N, rng), _small_logistic(N, seed, 100 + N)):
            for n1 in range(2, N + 1):
                for n2 in range(1, n1):
                    theta, anchor = rng.normal(size=model.dim), rng.normal(size=model.dim)
                    means = _enumerate_terms(model, theta, anchor, n1, n2)
                    full = full_gradient(model, theta)
                    err = np.abs(sum(means) - full).max() / max(1.0, np.abs(full).max())
                    if err > tol:
                        bad = [TERM_NAMES[k] for k, (mu, tgt) in
                               enumerate(zip(means, _term_targets(model, theta, anchor)))
                               if np.abs(mu - tgt).max() > tol * max(1.0, np.abs(tgt).max())]
                        return OracleResult("unbiasedness (exhaustive)", False,
                                            f"biased {', '.join(bad) or 'sum'}: N={N} n1={n1} n2={n2} "
                                            f"theta={theta.tolist()} anchor={anchor.tolist()} "
                                            f"mean={sum(means).tolist()} full={full.tolist()}")
    return OracleResult("unbiasedness (exhaustive)", True, f"N in {list(Ns)}, all n1 > n2")


def check_unbiased_mc(N: int = 50, draws: int = 100_000, n1: int = 10, n2: int = 3,
                      seed: int = 0, z: float = 4.0) -> OracleResult:
    model = _small_logistic(N, seed, 999)
    rng = np.random.default_rng([seed, 4])
    theta, anchor = rng.normal(size=model.dim), rng.normal(size=model.dim)
    stream = RngStream(seed, 0, "oracle-mc")
    terms = np.empty((3, draws, model.dim))
    for k in range(draws):
        state = vr._refresh(model, anchor, n1, _sample_indices(N, n1, stream))
        terms[:, k] = vr._vr_terms(state, model, theta, _sample_indices(N, n2, stream))
    total = terms.sum(axis=0)
    full = full_gradient(model, theta)
    se = total.std(axis=0, ddof=1) / math.sqrt(draws)
    zs = np.abs(total.mean(axis=0) - full) / se
    if np.all(zs <= z):
        return OracleResult("unbiasedness (Monte Carlo)", True,
                            f"N={N} draws={draws} max |z|={zs.max():.2f}")
    bad = []
    for j, tgt in enumerate(_term_targets(model, theta, anchor)):
        sd = terms[j].std(axis=0, ddof=1) / math.sqrt(draws)
        diff = np.abs(terms[j].mean(axis=0) - tgt)
        if np.any(diff > z * sd + 1e-12 * max(1.0, np.abs(tgt).max())):
            bad.append(TERM_NAMES[j])
    return OracleResult("unbiasedness (Monte Carlo)", False,
                        f"biased {', '.join(bad) or 'sum'}: N={N} n1={n1} n2={n2} "
                        f"theta={theta.tolist()} anchor={anchor.tolist()} z={zs.tolist()}")


def check_lambda(trials: int = 100, seed: int = 0) -> OracleResult:
    rng = np.random.default_rng([seed, 5])
    worst = math.inf
    for t in range(trials):
        N = int(rng.integers(2, 40))
        model = _small_gaussian(N, rng) if t % 2 == 0 else _small_logistic(N, seed, 2000 + t)
        n1 = int(rng.integers(2, N + 1))
        n2 = int(rng.integers(1, n1))
        lam = diagnostics.lambda_at(model, rng.normal(size=model.dim), n1, n2)
        worst = min(worst, lam)
        if lam < -1e-10:
            return OracleResult("lambda >= 0", False, f"N={N} n1={n1} n2={n2} lambda={lam!r}")
    try:
        diagnostics.lambda_at(_small_gaussian(4, rng), [0.0], 2, 2)
    except InvalidArgumentError:
        pass
    else:
        return OracleResult("lambda >= 0", False, "n2 >= n1 was not rejected")
    return OracleResult("lambda >= 0", True, f"{trials} instances, min {worst:.3g}")


def check_gradients(points: int = 20, seed: int = 0, tol: float = 1e-6) -> OracleResult:
    rng = np.random.default_rng([seed, 6])
    models = [GaussianMeanModel(rng.normal(1.0, 1.0, size=30)),
              LogisticRegressionModel(generate_logistic_data(40, 3, RngStream(seed, 0, "fd-data")))]
    worst = 0.0
    for model in models:
        for _ in range(points):
            theta = rng.normal(size=model.dim)
            err = gradient_fd_error(model, theta)
            worst = max(worst, err)
            if err > tol:
                return OracleResult("finite differences", False,
                                    f"{type(model).__name__} theta={theta.tolist()} rel err {err:.3g}")
    return OracleResult("finite differences", True, f"{points} points per model, max rel err {worst:.2g}")


ORACLES: List[Callable[..., OracleResult]] = [check_deltaV_grid, check_decomposition_grid,
                                              check_unbiased_exhaustive, check_unbiased_mc,
                                              check_lambda, check_gradients]


def run_oracle_check(cfg: Optional[ExperimentConfig] = None, out=print) -> bool:
    """Run every oracle, print a PASS/FAIL table and return overall success."""
    seed = 0 if cfg is None else cfg.seed
    results = []
    for fn in ORACLES:
        try:
            res = fn(seed=seed)
        except VrmcmcError as exc:
            res = OracleResult(fn.__name__, False, f"{type(exc).__name__}: {exc}")
        results.append(res)
    width = max(len(r.name) for r in results)
    for r in results:
        out(f"{'PASS' if r.passed else 'FAIL'}  {r.name:<{width}}  {r.detail}")
    return all(r.passed for r in results)
