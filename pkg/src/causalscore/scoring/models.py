"""Causal score models fitted on an :class:`ExperimentDataset`."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ..core import ExperimentDataset
from ..errors import (MissingArm, MissingSurrogate, DegenerateTarget, DimensionMismatch,
                      PropensityOutOfRange, EmptyArmInStratum, InvalidConfig)
from .learners import BaseLearnerConfig, make_learner, learner_from_dict, _as_matrix

KINDS = ("difference_in_means", "transformed_outcome", "outcome_rate", "propensity",
         "s_learner", "t_learner")
MODEL_FORMAT_VERSION = 1
PROPENSITY_CLIP = (0.01, 0.99)


def transformed_outcome(y, t, p):
    """``y * (t - p) / (p * (1 - p))``; vectorised over arrays."""
    p_arr = np.asarray(p, dtype=float)
    if np.any((p_arr <= 0) | (p_arr >= 1)):
        raise PropensityOutOfRange("propensity must lie strictly inside (0, 1)")
    y = np.asarray(y, dtype=float)
    t = np.asarray(t, dtype=float)
    out = y * (t - p_arr) / (p_arr * (1.0 - p_arr))
    return out if np.ndim(out) else float(out)


def difference_in_means_cas(dataset: ExperimentDataset, stratum=None) -> float:
    """Treated-minus-control mean outcome inside a stratum.

    ``stratum`` is a boolean mask, or a callable taking the feature matrix
    and returning one; ``None`` selects every unit.
    """
    if stratum is None:
        mask = np.ones(dataset.n, dtype=bool)
    elif callable(stratum):
        mask = np.asarray(stratum(dataset.features), dtype=bool)
    else:
        mask = np.asarray(stratum, dtype=bool)
    t = dataset.treatment[mask]
    y = dataset.outcome[mask]
    if not (t == 1).any() or not (t == 0).any():
        raise EmptyArmInStratum(
            f"stratum has {int((t == 1).sum())} treated and {int((t == 0).sum())} control units")
    return float(y[t == 1].mean() - y[t == 0].mean())


@dataclass
class ScoreModel:
    kind: str
    n_features: int
    learners: dict = field(default_factory=dict)
    target: str = "primary"
    propensity_source: str = "constant"
    propensity: Optional[float] = None
    constant: Optional[float] = None
    flags: dict = field(default_factory=dict)

    def predict(self, features) -> np.ndarray:
        return predict(self, features)

    def to_dict(self) -> dict:
        return {
            "format_version": MODEL_FORMAT_VERSION,
            "kind": self.kind,
            "n_features": self.n_features,
            "target": self.target,
            "propensity_source": self.propensity_source,
            "propensity": self.propensity,
            "constant": self.constant,
            "flags": dict(self.flags),
            "learners": {k: v.to_dict() for k, v in self.learners.items()},
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ScoreModel":
        from ..errors import SchemaVersionMismatch
        if d.get("format_version") != MODEL_FORMAT_VERSION:
            raise SchemaVersionMismatch(
                f"model format_version {d.get('format_version')!r} != {MODEL_FORMAT_VERSION}")
        return cls(kind=d["kind"], n_features=int(d["n_features"]), target=d["target"],
                   propensity_source=d["propensity_source"], propensity=d["propensity"],
                   constant=d["constant"], flags=dict(d["flags"]),
                   learners={k: learner_from_dict(v) for k, v in d["learners"].items()})


def _target(dataset, target):
    if target == "primary":
        return np.asarray(dataset.outcome, dtype=float)
    if target == "surrogate":
        if dataset.surrogate_outcome is None:
            raise MissingSurrogate("dataset has no surrogate outcome column")
        return np.asarray(dataset.surrogate_outcome, dtype=float)
    raise InvalidConfig(f"unknown target {target!r}; expected 'primary' or 'surrogate'")


def _require_arms(t):
    if not (t == 1).any() or not (t == 0).any():
        raise MissingArm(f"need both arms, got {int((t == 1).sum())} treated and "
                         f"{int((t == 0).sum())} control units")


def _require_variation(y, what):
    if y.size == 0 or np.all(y == y[0]):
        raise DegenerateTarget(f"{what} is constant; nothing to learn")


def _s_design(x, t, linear):
    t = np.asarray(t, dtype=float).reshape(-1, 1)
    if linear:
        # a linear learner needs the interaction columns to express heterogeneity
        return np.hstack([x, t, x * t])
    return np.hstack([x, t])


def fit(kind: str, dataset: ExperimentDataset, base: Optional[BaseLearnerConfig] = None,
        target: str = "primary", propensity: str = "constant") -> ScoreModel:
    """Fit one causal scoring formulation.

    ``propensity`` applies to ``transformed_outcome`` only: ``"constant"``
    uses the treated fraction, ``"fitted"`` regresses T on the features and
    clips predictions to [0.01, 0.99].
    """
    if kind not in KINDS:
        raise InvalidConfig(f"unknown model kind {kind!r}; expected one of {KINDS}")
    base = (base or BaseLearnerConfig()).validate()
    y = _target(dataset, target)
    t = np.asarray(dataset.treatment)
    x = np.asarray(dataset.features)
    model = ScoreModel(kind=kind, n_features=dataset.n_features, target=target)

    if kind == "difference_in_means":
        _require_arms(t)
        model.constant = float(y[t == 1].mean() - y[t == 0].mean())
    elif kind == "transformed_outcome":
        _require_arms(t)
        _require_variation(y, "outcome")
        if propensity == "constant":
            p = float(t.mean())
            model.propensity = p
        elif propensity == "fitted":
            ps = make_learner(base).fit(x, t.astype(float))
            p = np.clip(ps.predict(x), *PROPENSITY_CLIP)
            model.propensity_source = "fitted"
            model.learners["propensity"] = ps
        else:
            raise InvalidConfig(f"unknown propensity source {propensity!r}")
        model.learners["main"] = make_learner(base).fit(x, transformed_outcome(y, t, p))
    elif kind == "outcome_rate":
        control = t == 0
        if control.any():
            rows = control
            model.flags["fallback_all_rows"] = False
        else:
            rows = np.ones_like(control)
            model.flags["fallback_all_rows"] = True
        _require_variation(y[rows], "outcome on fitted rows")
        model.learners["main"] = make_learner(base).fit(x[rows], y[rows])
    elif kind == "propensity":
        _require_variation(t.astype(float), "treatment")
        model.learners["main"] = make_learner(base).fit(x, t.astype(float))
    elif kind == "s_learner":
        _require_arms(t)
        _require_variation(y, "outcome")
        linear = base.learner == "ridge_linear"
        model.flags["interactions"] = linear
        model.learners["main"] = make_learner(base).fit(_s_design(x, t, linear), y)
    elif kind == "t_learner":
        _require_arms(t)
        _require_variation(y, "outcome")
        model.learners["treated"] = make_learner(base).fit(x[t == 1], y[t == 1])
        model.learners["control"] = make_learner(base).fit(x[t == 0], y[t == 0])
    return model


def predict(model: ScoreModel, features) -> np.ndarray:
    x = _as_matrix(features)
    if x.shape[1] != model.n_features:
        raise DimensionMismatch(f"model was fitted on {model.n_features} columns, got {x.shape[1]}")
    n = x.shape[0]
    if model.kind == "difference_in_means":
        return np.full(n, model.constant)
    if model.kind == "s_learner":
        linear = model.flags.get("interactions", False)
        f = model.learners["main"]
        return (f.predict(_s_design(x, np.ones(n), linear))
                - f.predict(_s_design(x, np.zeros(n), linear)))
    if model.kind == "t_learner":
        return model.learners["treated"].predict(x) - model.learners["control"].predict(x)
    out = model.learners["main"].predict(x)
    if model.kind == "propensity":
        out = np.clip(out, 0.0, 1.0)
    return out
