"""Shared domain types, the random-number contract, and the dataset container."""

from __future__ import annotations

from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Mapping, Optional

import numpy as np

from .errors import LengthMismatch, NonBinaryTreatment, NotPositiveSemiDefinite


def _frozen(values, dtype=float, order="C"):
    arr = np.array(values, dtype=dtype, order=order, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class ExperimentDataset:
    """Per-unit features, binary treatment and observed outcomes.

    Arrays are copied on construction and marked read-only. The feature
    matrix is stored column-major because the learners scan it per feature.
    """

    features: np.ndarray
    treatment: np.ndarray
    outcome: np.ndarray
    surrogate_outcome: Optional[np.ndarray] = None
    column_names: tuple = ()
    metadata: Mapping = field(default_factory=dict)

    @property
    def n(self) -> int:
        return self.outcome.shape[0]

    @property
    def n_features(self) -> int:
        return self.features.shape[1]

    @property
    def n_treated(self) -> int:
        return int(self.treatment.sum())

    @property
    def n_control(self) -> int:
        return self.n - self.n_treated

    def subset(self, index) -> "ExperimentDataset":
        index = np.asarray(index)
        surrogate = None if self.surrogate_outcome is None else self.surrogate_outcome[index]
        return make_dataset(
            self.features[index],
            self.treatment[index],
            self.outcome[index],
            surrogate,
            column_names=self.column_names,
            metadata=dict(self.metadata),
        )

    def summary(self) -> dict:
        out = {
            "n": self.n,
            "n_features": self.n_features,
            "treatment_rate": float(self.treatment.mean()),
            "outcome_mean": float(self.outcome.mean()),
        }
        if self.surrogate_outcome is not None:
            out["surrogate_mean"] = float(self.surrogate_outcome.mean())
        return out


def make_dataset(features, treatment, outcome, surrogate=None, column_names=None,
                 metadata=None) -> ExperimentDataset:
    """Validate inputs and build an immutable :class:`ExperimentDataset`.

    ``features`` may be a 1-d sequence (one column) or an ``(n, m)`` matrix.
    Raises :class:`LengthMismatch` when row counts disagree and
    :class:`NonBinaryTreatment` when a treatment value is not exactly 0 or 1.
    """
    x = np.asarray(features, dtype=float)
    if x.ndim == 1:
        x = x.reshape(-1, 1)
    if x.ndim != 2:
        raise LengthMismatch("features must be a 1-d or 2-d array")
    t_raw = np.asarray(treatment, dtype=float).ravel()
    y = np.asarray(outcome, dtype=float).ravel()
    n = y.shape[0]
    if n < 1:
        raise LengthMismatch("dataset needs at least one unit")
    lengths = {"features": x.shape[0], "treatment": t_raw.shape[0], "outcome": n}
    s = None
    if surrogate is not None:
        s = np.asarray(surrogate, dtype=float).ravel()
        lengths["surrogate"] = s.shape[0]
    if len(set(lengths.values())) != 1:
        raise LengthMismatch(f"row counts differ: {lengths}")
    bad = ~((t_raw == 0) | (t_raw == 1))
    if bad.any():
        i = int(np.flatnonzero(bad)[0])
        raise NonBinaryTreatment(f"treatment[{i}] = {t_raw[i]!r} is not 0 or 1")
    if column_names is None:
        column_names = tuple(f"x{j}" for j in range(x.shape[1]))
    column_names = tuple(str(c) for c in column_names)
    if len(column_names) != x.shape[1]:
        raise LengthMismatch(
            f"{len(column_names)} column names for {x.shape[1]} feature columns")
    return ExperimentDataset(
        features=_frozen(x, order="F"),
        treatment=_frozen(t_raw, dtype=np.int8),
        outcome=_frozen(y),
        surrogate_outcome=None if s is None else _frozen(s),
        column_names=column_names,
        metadata=MappingProxyType(dict(metadata or {})),
    )


@dataclass(frozen=True, eq=False)
class OracleTruth:
    """Ground truth emitted by the simulators.

    ``latent_mean`` holds the latent predictor (mu for most families, psi for
    the self-selection family). ``extras`` carries family-specific per-unit
    arrays such as the CATT or the propensity.
    """

    cate: np.ndarray
    cas: np.ndarray
    latent_mean: np.ndarray
    potential_outcomes: Optional[tuple] = None
    extras: Mapping = field(default_factory=dict)

    def __post_init__(self):
        n = len(self.cate)
        if len(self.cas) != n or len(self.latent_mean) != n:
            raise LengthMismatch("oracle arrays must share one length")
        if self.potential_outcomes is not None:
            y0, y1 = self.potential_outcomes
            if len(y0) != n or len(y1) != n:
                raise LengthMismatch("potential outcomes must match oracle length")

    @property
    def n(self) -> int:
        return len(self.cate)


def make_oracle(cate, cas, latent_mean, potential_outcomes=None, extras=None) -> OracleTruth:
    po = None
    if potential_outcomes is not None:
        po = tuple(_frozen(p) for p in potential_outcomes)
    ex = {k: _frozen(v) for k, v in (extras or {}).items()}
    return OracleTruth(_frozen(cate), _frozen(cas), _frozen(latent_mean), po,
                       MappingProxyType(ex))


@dataclass(frozen=True)
class PolicySpec:
    """Effect threshold, score threshold and the induced targeting rule."""

    effect_threshold: float
    score_threshold: float

    def decision(self, scores) -> np.ndarray:
        return (np.asarray(scores, dtype=float) > self.score_threshold).astype(np.int8)


class RngStream:
    """A reproducible random stream keyed by ``(seed, stream_id)``.

    Backed by numpy's counter-based Philox bit generator seeded through a
    ``SeedSequence`` whose spawn key is the stream id, so streams are
    independent and reproducible on every platform. A stream is meant to be
    owned by one caller; parallel work should take distinct stream ids.
    """

    def __init__(self, seed: int, stream_id: int = 0, _path: tuple = ()):
        if seed < 0 or stream_id < 0:
            raise ValueError("seed and stream_id must be non-negative")
        self.seed = int(seed)
        self.stream_id = int(stream_id)
        self._path = tuple(_path)
        ss = np.random.SeedSequence(self.seed, spawn_key=(self.stream_id,) + self._path)
        self.generator = np.random.Generator(np.random.Philox(ss))

    def substream(self, index: int) -> "RngStream":
        """Independent child stream; does not consume draws from this one."""
        return RngStream(self.seed, self.stream_id, self._path + (int(index),))

    def __repr__(self):
        return f"RngStream(seed={self.seed}, stream_id={self.stream_id}, path={self._path})"


def standard_normal(rng: RngStream, size=None):
    return rng.generator.standard_normal(size)


def uniform(rng: RngStream, size=None):
    """Uniform draws on [0, 1)."""
    return rng.generator.random(size)


def pivoted_cholesky(cov, tol: float = 1e-10):
    """Pivoted Cholesky factor ``L`` with ``L @ L.T == cov``.

    Handles rank-deficient positive semi-definite matrices: factorization
    stops once the largest remaining diagonal falls below ``tol`` (relative to
    the largest diagonal of ``cov``). A remaining diagonal below ``-tol`` or
    residual entries above tolerance raise :class:`NotPositiveSemiDefinite`.
    """
    a = np.array(cov, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise NotPositiveSemiDefinite("covariance must be square")
    k = a.shape[0]
    if not np.allclose(a, a.T, atol=1e-12, rtol=0):
        raise NotPositiveSemiDefinite("covariance must be symmetric")
    scale = max(float(np.max(np.abs(np.diag(a)))), 1.0) if k else 1.0
    thresh = tol * scale
    perm = np.arange(k)
    L = np.zeros((k, k))
    work = a.copy()
    rank = 0
    for j in range(k):
        diag = np.diag(work)[j:]
        p = j + int(np.argmax(diag))
        if diag[p - j] <= thresh:
            break
        # pivot rows/cols j <-> p
        work[[j, p]] = work[[p, j]]
        work[:, [j, p]] = work[:, [p, j]]
        L[[j, p]] = L[[p, j]]
        perm[[j, p]] = perm[[p, j]]
        pivot = np.sqrt(work[j, j])
        L[j, j] = pivot
        L[j + 1:, j] = work[j + 1:, j] / pivot
        work[j + 1:, j + 1:] -= np.outer(L[j + 1:, j], L[j + 1:, j])
        rank += 1
    residual = work[rank:, rank:]
    if residual.size:
        low = float(np.min(np.diag(residual)))
        big = float(np.max(np.abs(residual)))
        if low < -thresh or big > 1e3 * thresh:
            raise NotPositiveSemiDefinite(
                f"matrix is not positive semi-definite: after rank {rank} the residual has "
                f"minimum diagonal {low:.3g} and largest entry {big:.3g}")
    out = np.zeros((k, k))
    out[perm] = L
    return out


def mvn_sample(mean, covariance, rng: RngStream, size=None):
    """Draw from a multivariate normal via a pivoted Cholesky factor.

    Returns shape ``(k,)`` when ``size`` is None, else ``(size, k)``.
    """
    mu = np.asarray(mean, dtype=float).ravel()
    factor = pivoted_cholesky(covariance)
    if factor.shape[0] != mu.shape[0]:
        raise NotPositiveSemiDefinite("mean and covariance dimensions differ")
    n = 1 if size is None else int(size)
    z = rng.generator.standard_normal((n, mu.shape[0]))
    draws = mu + z @ factor.T
    return draws[0] if size is None else draws


def equicorrelation(k: int, rho: float) -> np.ndarray:
    c = np.full((k, k), float(rho))
    np.fill_diagonal(c, 1.0)
    return c

