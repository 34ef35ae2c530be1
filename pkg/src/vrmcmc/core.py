"""Data containers, the gradient-model contract, RNG streams and minibatch sampling.

Sign convention: every gradient in this package is a gradient of the log
posterior (the ascent direction), i.e. ``-grad U``.
"""

from __future__ import annotations

import csv
import hashlib
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import InvalidArgumentError, NumericOverflowError

_U64 = (1 << 64) - 1


def as_param(values, dim: Optional[int] = None) -> np.ndarray:
    """Validate and copy a parameter vector into a 1-D float64 array."""
    theta = np.array(values, dtype=np.float64, copy=True).reshape(-1)
    if dim is not None and theta.shape[0] != dim:
        raise InvalidArgumentError(f"parameter has length {theta.shape[0]}, model expects {dim}")
    if not np.all(np.isfinite(theta)):
        raise InvalidArgumentError("parameter vector contains non-finite entries")
    return theta


def _frozen(a, dtype=np.float64) -> np.ndarray:
    arr = np.array(a, dtype=dtype, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class Dataset:
    """Immutable collection of N datums.

    ``x`` holds one row (or scalar) per datum; ``y`` holds optional labels.
    """

    x: np.ndarray
    y: Optional[np.ndarray] = None

    def __post_init__(self):
        x = _frozen(self.x)
        if x.ndim == 0 or x.shape[0] < 1:
            raise InvalidArgumentError("dataset must contain at least one datum")
        object.__setattr__(self, "x", x)
        if self.y is not None:
            y = _frozen(self.y).reshape(-1)
            if y.shape[0] != x.shape[0]:
                raise InvalidArgumentError("labels and features disagree on N")
            object.__setattr__(self, "y", y)

    @property
    def size(self) -> int:
        return int(self.x.shape[0])

    def __len__(self) -> int:
        return self.size

    def subset(self, indices) -> "Dataset":
        idx = np.asarray(indices, dtype=np.int64)
        return Dataset(self.x[idx], None if self.y is None else self.y[idx])


def read_csv_dataset(path, labelled: bool = True) -> Dataset:
    """Load a dataset from a comma-separated file.

    A header row is detected by a non-numeric first cell. When ``labelled``
    the final column becomes ``y``.
    """
    rows = []
    with open(path, newline="") as fh:
        for k, row in enumerate(csv.reader(fh)):
            if not row or all(not c.strip() for c in row):
                continue
            if k == 0:
                try:
                    float(row[0])
                except ValueError:
                    continue
            rows.append([float(c) for c in row])
    if not rows:
        raise InvalidArgumentError(f"{path}: no data rows")
    widths = {len(r) for r in rows}
    if len(widths) != 1:
        raise InvalidArgumentError(f"{path}: ragged rows (widths {sorted(widths)})")
    arr = np.asarray(rows, dtype=np.float64)
    if labelled:
        if arr.shape[1] < 2:
            raise InvalidArgumentError(f"{path}: labelled data needs at least two columns")
        return Dataset(arr[:, :-1], arr[:, -1])
    return Dataset(arr[:, 0] if arr.shape[1] == 1 else arr)


class GradientModel:
    """Contract for a Bayesian model with hand-coded gradients.

    Subclasses implement ``dim``, ``data``, ``log_prior_grad`` and
    ``datum_loglik_grad``. ``loglik_grads`` is the batched form used on hot
    paths; the default falls back to per-datum calls. Instances must be
    immutable so that many chains can share one.
    """

    @property
    def dim(self) -> int:
        raise NotImplementedError

    @property
    def data(self) -> Dataset:
        raise NotImplementedError

    @property
    def size(self) -> int:
        return self.data.size

    def log_prior_grad(self, theta: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def datum_loglik_grad(self, theta: np.ndarray, i: int) -> np.ndarray:
        raise NotImplementedError

    def loglik_grads(self, theta: np.ndarray, indices) -> np.ndarray:
        """Per-datum log-likelihood gradients, one row per index."""
        return np.array([self.datum_loglik_grad(theta, int(i)) for i in indices],
                        dtype=np.float64).reshape(len(indices), self.dim)

    def log_prior(self, theta: np.ndarray) -> float:
        raise NotImplementedError

    def datum_loglik(self, theta: np.ndarray, i: int) -> float:
        raise NotImplementedError


def _stream_key(seed: int, chain: int, purpose: str) -> np.ndarray:
    digest = hashlib.blake2b(f"{int(chain)}/{purpose}".encode(), digest_size=8).digest()
    return np.array([int(seed) & _U64, int.from_bytes(digest, "little")], dtype=np.uint64)


class RngStream:
    """Deterministic random stream keyed by ``(seed, chain, purpose)``.

    Bits come from the Philox4x32-10 counter-based generator with the
    128-bit key ``[seed mod 2**64, blake2b-64("{chain}/{purpose}")]`` and
    counter starting at zero. Uniforms are ``(u64 >> 11) * 2**-53`` in
    [0, 1). Normals use Box-Muller on consecutive uniform pairs
    ``(u1, u2)``: ``r = sqrt(-2 log(1 - u1))``, emitting ``r cos(2 pi u2)``
    then ``r sin(2 pi u2)``.

    Draws are prefetched in blocks, so a stream should serve a single kind of
    draw (all uniforms or all normals) for the sequence to be independent of
    call sizes.
    """

    _BLOCK = 4096

    def __init__(self, seed: int, chain: int = 0, purpose: str = "main"):
        self.seed = int(seed)
        self.chain = int(chain)
        self.purpose = str(purpose)
        self._gen = np.random.Generator(np.random.Philox(key=_stream_key(seed, chain, purpose)))
        self._ubuf = np.empty(0)
        self._upos = 0
        self._nbuf = np.empty(0)
        self._npos = 0

    def __repr__(self):
        return f"RngStream(seed={self.seed}, chain={self.chain}, purpose={self.purpose!r})"

    def uniforms(self, k: int) -> np.ndarray:
        avail = self._ubuf.shape[0] - self._upos
        if k > avail:
            fresh = self._gen.random(max(self._BLOCK, k - avail))
            self._ubuf = np.concatenate([self._ubuf[self._upos:], fresh])
            self._upos = 0
        out = self._ubuf[self._upos:self._upos + k]
        self._upos += k
        return out

    def uniform(self) -> float:
        return float(self.uniforms(1)[0])

    def normals(self, k: int) -> np.ndarray:
        avail = self._nbuf.shape[0] - self._npos
        if k > avail:
            pairs = max(self._BLOCK // 2, (k - avail + 1) // 2)
            u = self.uniforms(2 * pairs)
            r = np.sqrt(-2.0 * np.log1p(-u[0::2]))
            ang = 2.0 * math.pi * u[1::2]
            fresh = np.empty(2 * pairs)
            fresh[0::2] = r * np.cos(ang)
            fresh[1::2] = r * np.sin(ang)
            self._nbuf = np.concatenate([self._nbuf[self._npos:], fresh])
            self._npos = 0
        out = self._nbuf[self._npos:self._npos + k]
        self._npos += k
        return out


@dataclass(frozen=True, eq=False)
class MinibatchIndexSet:
    indices: np.ndarray
    N: int = field(default=0)

    @property
    def n(self) -> int:
        return int(self.indices.shape[0])

    def __len__(self):
        return self.n

    def __iter__(self):
        return iter(self.indices.tolist())


def _finite(v: np.ndarray) -> bool:
    # a sum is finite iff no entry is inf/nan (finite overflow also counts as failure)
    return math.isfinite(float(v.sum()))


def _sample_indices(N: int, n: int, rng: RngStream) -> np.ndarray:
    if n == N:
        return np.arange(N, dtype=np.int64)
    u = rng.uniforms(n)
    if n == 1:
        return np.array([min(int(u[0] * N), N - 1)], dtype=np.int64)
    ks = (np.arange(n) + np.floor(u * (N - np.arange(n)))).astype(np.int64).tolist()
    slots = {}
    out = []
    for j, k in enumerate(ks):
        if k >= N:  # u < 1 guarantees k < N; guard against rounding anyway
            k = N - 1
        vk = slots.get(k, k)
        slots[k] = slots.get(j, j)
        out.append(vk)
    out.sort()
    return np.array(out, dtype=np.int64)


def sample_without_replacement(N: int, n: int, rng: RngStream) -> MinibatchIndexSet:
    """Draw ``n`` distinct indices from ``range(N)`` uniformly.

    Partial Fisher-Yates over a virtual identity array: position ``j`` swaps
    with ``j + floor(u_j * (N - j))``. Only displaced slots are stored, so the
    cost is O(n) regardless of N. ``n == N`` returns the full index set
    without consuming draws. Indices are returned sorted.
    """
    N = int(N)
    n = int(n)
    if not 1 <= n <= N:
        raise InvalidArgumentError(f"minibatch size n={n} outside [1, N={N}]")
    return MinibatchIndexSet(_sample_indices(N, n, rng), N)


def _indices_of(S) -> np.ndarray:
    if isinstance(S, MinibatchIndexSet):
        return S.indices
    return np.sort(np.asarray(list(S), dtype=np.int64))


def _checked_sum(grads: np.ndarray, indices: np.ndarray) -> np.ndarray:
    total = grads.sum(axis=0)
    if not _finite(total):
        bad = np.nonzero(~np.all(np.isfinite(grads), axis=1))[0]
        i = int(indices[bad[0]]) if bad.size else None
        where = f"at datum {i}" if i is not None else "in the accumulated sum"
        raise NumericOverflowError(f"non-finite log-likelihood gradient {where}", datum_index=i)
    return total


def loglik_grad_sum(model: GradientModel, theta: np.ndarray, indices) -> np.ndarray:
    """Sum of per-datum gradients over ``indices`` in ascending index order."""
    idx = np.sort(np.asarray(indices, dtype=np.int64))
    return _checked_sum(model.loglik_grads(theta, idx), idx)


def _prior_grad(model: GradientModel, theta: np.ndarray) -> np.ndarray:
    g = np.asarray(model.log_prior_grad(theta), dtype=np.float64)
    if not _finite(g):
        raise NumericOverflowError("non-finite log-prior gradient")
    return g


def _minibatch_gradient(model: GradientModel, theta: np.ndarray, idx: np.ndarray) -> np.ndarray:
    # idx must be sorted, distinct and in range
    return _prior_grad(model, theta) + (model.size / idx.shape[0]) * _checked_sum(
        model.loglik_grads(theta, idx), idx)


def full_gradient(model: GradientModel, theta) -> np.ndarray:
    """Exact log-posterior gradient: prior term plus all N likelihood terms."""
    theta = as_param(theta, model.dim)
    return _minibatch_gradient(model, theta, np.arange(model.size, dtype=np.int64))


def stochastic_gradient(model: GradientModel, theta, S) -> np.ndarray:
    """Unbiased minibatch estimate ``prior + (N/n) * sum_{i in S} grad_i``."""
    theta = as_param(theta, model.dim)
    idx = _indices_of(S)
    N = model.size
    n = idx.shape[0]
    if n < 1 or n > N or idx[0] < 0 or idx[-1] >= N or np.unique(idx).shape[0] != n:
        raise InvalidArgumentError("minibatch must hold distinct indices in [0, N)")
    return _minibatch_gradient(model, theta, idx)


def log_posterior(model: GradientModel, theta) -> float:
    """Unnormalized log posterior ``log p(theta) + sum_i log p(d_i | theta)``."""
    theta = as_param(theta, model.dim)
    return float(model.log_prior(theta)) + math.fsum(
        model.datum_loglik(theta, i) for i in range(model.size))
