"""Rank and decision-quality metrics for causal scores.

Ranking metrics order units by ``(score descending, original index
ascending)`` so results are reproducible when scores tie.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import special, stats

from .core import ExperimentDataset
from .errors import EmptySelection, GridMismatch, LengthMismatch, MissingArm, TooFewUnits
from .pairs import pair_counts, sign_sum, sign_sum_brute


@dataclass
class UpliftCurve:
    fractions: np.ndarray
    values: np.ndarray
    kind: str = "qini"

    def __post_init__(self):
        self.fractions = np.asarray(self.fractions, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if self.fractions.shape != self.values.shape:
            raise LengthMismatch("fractions and values differ in length")

    def area(self) -> float:
        """Trapezoidal area; grid points with undefined values are skipped."""
        ok = np.isfinite(self.values)
        return float(np.trapezoid(self.values[ok], self.fractions[ok]))

    def argmax(self) -> float:
        return float(self.fractions[np.nanargmax(self.values)])

    def to_dict(self) -> dict:
        return {"kind": self.kind,
                "fractions": self.fractions.tolist(),
                "values": [None if not np.isfinite(v) else float(v) for v in self.values]}

    @classmethod
    def from_dict(cls, d) -> "UpliftCurve":
        vals = [np.nan if v is None else v for v in d["values"]]
        return cls(d["fractions"], vals, d.get("kind", "qini"))


# ---------------------------------------------------------------------------
# Kendall rank correlation


def kendall_tau(theta_hat, method="fast") -> float:
    """Rank correlation of scores listed in descending order of true CATE.

    Equals ``2/(n(n-1)) * sum_{i<j} sgn(theta_hat[i] - theta_hat[j])``.
    """
    a = np.asarray(theta_hat, dtype=float).ravel()
    n = a.shape[0]
    if n < 2:
        raise TooFewUnits("kendall_tau needs at least two units")
    s = sign_sum(a) if method == "fast" else sign_sum_brute(a)
    return 2.0 * s / (n * (n - 1))


def kendall_tau_between(scores, effects) -> float:
    """Tau-a between scores and true effects; pairs tied in either count as zero."""
    scores = np.asarray(scores, dtype=float).ravel()
    effects = np.asarray(effects, dtype=float).ravel()
    if scores.shape != effects.shape:
        raise LengthMismatch("scores and effects differ in length")
    n = scores.shape[0]
    if n < 2:
        raise TooFewUnits("kendall_tau needs at least two units")
    conc, disc, _ = pair_counts(scores, effects)
    return 2.0 * (conc - disc) / (n * (n - 1))


@dataclass
class RankNoiseModel:
    """Pairwise inputs of the expected rank correlation.

    ``beta_deltas[k] > 0`` and ``alpha_deltas[k]`` describe the k-th ordered
    pair; the zero-mean pair noise is Gaussian with sd ``xi_delta_sd``.
    """

    beta_deltas: np.ndarray
    alpha_deltas: np.ndarray
    xi_delta_sd: float

    def __post_init__(self):
        self.beta_deltas = np.asarray(self.beta_deltas, dtype=float).ravel()
        self.alpha_deltas = np.asarray(self.alpha_deltas, dtype=float).ravel()
        if self.beta_deltas.shape != self.alpha_deltas.shape:
            raise LengthMismatch("beta_deltas and alpha_deltas differ in length")
        if np.any(self.beta_deltas <= 0):
            raise ValueError("beta_deltas must be strictly positive")
        if self.xi_delta_sd < 0:
            raise ValueError("xi_delta_sd must be non-negative")

    @classmethod
    def from_units(cls, beta, alpha, unit_sd):
        """All pairs of units with independent N(0, unit_sd^2) estimation noise.

        Units are sorted by descending ``beta``; ties in ``beta`` are not allowed.
        """
        beta = np.asarray(beta, dtype=float).ravel()
        alpha = np.asarray(alpha, dtype=float).ravel()
        order = np.argsort(-beta, kind="stable")
        b, a = beta[order], alpha[order]
        i, j = np.triu_indices(b.shape[0], 1)
        return cls(b[i] - b[j], a[i] - a[j], float(unit_sd) * np.sqrt(2.0))


def expected_tau(model: RankNoiseModel) -> float:
    """Closed-form expected rank correlation under Gaussian pair noise."""
    shift = model.beta_deltas + model.alpha_deltas
    if model.xi_delta_sd == 0:
        prob = np.where(shift > 0, 1.0, np.where(shift == 0, 0.5, 0.0))
    else:
        prob = special.ndtr(shift / model.xi_delta_sd)
    return float(2.0 * prob.mean() - 1.0)


# ---------------------------------------------------------------------------
# Curves over the score ranking


def rank_order(scores) -> np.ndarray:
    """Indices sorted by score descending, original index ascending."""
    s = np.asarray(scores, dtype=float).ravel()
    return np.lexsort((np.arange(s.shape[0]), -s))


def _aligned(dataset, scores):
    s = np.asarray(scores, dtype=float).ravel()
    if s.shape[0] != dataset.n:
        raise LengthMismatch(f"{s.shape[0]} scores for {dataset.n} units")
    return s


def _ranked_arms(dataset, scores):
    s = _aligned(dataset, scores)
    order = rank_order(s)
    t = np.asarray(dataset.treatment, dtype=float)[order]
    y = np.asarray(dataset.outcome, dtype=float)[order]
    n_t = t.sum()
    n_c = t.shape[0] - n_t
    if n_t == 0 or n_c == 0:
        raise MissingArm("both arms must be present")
    cum_t = np.concatenate([[0.0], np.cumsum(t)])
    cum_c = np.concatenate([[0.0], np.cumsum(1 - t)])
    cum_yt = np.concatenate([[0.0], np.cumsum(y * t)])
    cum_yc = np.concatenate([[0.0], np.cumsum(y * (1 - t))])
    return cum_t, cum_c, cum_yt, cum_yc, n_t, n_c


def grid_counts(n, grid_points):
    k = np.arange(grid_points + 1)
    return k / grid_points, (k * n) // grid_points


def qini_curve(dataset: ExperimentDataset, scores, grid_points: int = 100,
               scaling: str = "total") -> UpliftCurve:
    """Cumulative incremental outcome when targeting the top fraction by score.

    ``scaling="total"`` divides treated and control outcome sums among the
    targeted units by the full treated and control counts, so the endpoint is
    the difference-in-means ATE. ``scaling="within"`` uses the arm counts
    inside the targeted set and multiplies by the targeted fraction; an arm
    absent from the targeted set contributes a rate of zero.
    """
    cum_t, cum_c, cum_yt, cum_yc, n_t, n_c = _ranked_arms(dataset, scores)
    fractions, m = grid_counts(dataset.n, grid_points)
    if scaling == "total":
        values = cum_yt[m] / n_t - cum_yc[m] / n_c
    elif scaling == "within":
        with np.errstate(invalid="ignore", divide="ignore"):
            rate_t = np.where(cum_t[m] > 0, cum_yt[m] / cum_t[m], 0.0)
            rate_c = np.where(cum_c[m] > 0, cum_yc[m] / cum_c[m], 0.0)
        values = (rate_t - rate_c) * (m / dataset.n)
    else:
        raise ValueError(f"unknown scaling {scaling!r}")
    return UpliftCurve(fractions, values, "qini")


def optimal_qini_curve(dataset: ExperimentDataset, grid_points: int = 100, oracle_cate=None,
                       scaling: str = "total") -> UpliftCurve:
    """Reference curve for AUQC normalisation.

    With ``oracle_cate`` the units are ranked by their true effects. Without
    it they are ranked by the observed transformed outcome, which puts
    treated responders first and control responders last.
    """
    if oracle_cate is not None:
        ranking = np.asarray(oracle_cate, dtype=float)
    else:
        t = np.asarray(dataset.treatment, dtype=float)
        p = t.mean()
        if p in (0.0, 1.0):
            raise MissingArm("both arms must be present")
        ranking = np.asarray(dataset.outcome, dtype=float) * (t - p) / (p * (1 - p))
    return qini_curve(dataset, ranking, grid_points, scaling)


def auqc(curve: UpliftCurve, optimal_reference: UpliftCurve) -> float:
    """Area under ``curve`` divided by the area under the reference.

    Negative values are reported as is.
    """
    if curve.fractions.shape != optimal_reference.fractions.shape or not np.allclose(
            curve.fractions, optimal_reference.fractions):
        raise GridMismatch("curves use different fraction grids")
    ref = optimal_reference.area()
    if ref == 0:
        return float("nan")
    return curve.area() / ref


def _top_count(n, fraction):
    if not 0 < fraction <= 1:
        raise ValueError("fraction must lie in (0, 1]")
    m = int(np.floor(fraction * n + 1e-9))
    if m == 0:
        raise EmptySelection(f"top {fraction:.3g} of {n} units selects nobody")
    return m


def top_k_uplift(dataset: ExperimentDataset, scores, fraction: float = 0.1) -> float:
    """Treated-minus-control mean outcome among the top ``fraction`` by score."""
    s = _aligned(dataset, scores)
    m = _top_count(dataset.n, fraction)
    top = rank_order(s)[:m]
    t = np.asarray(dataset.treatment)[top]
    y = np.asarray(dataset.outcome, dtype=float)[top]
    if not (t == 1).any() or not (t == 0).any():
        raise MissingArm(f"top {m} units do not contain both arms")
    return float(y[t == 1].mean() - y[t == 0].mean())


def profit_curve(dataset: ExperimentDataset, scores, n_population: int,
                 grid_points: int = 100) -> UpliftCurve:
    """Estimated policy impact ``n * P[D=1] * (E[Y|T=1,D=1] - E[Y|T=0,D=1])``.

    Each grid point targets the top fraction by score. Points where the
    targeted set lacks an arm are undefined (NaN), except the empty policy
    which is exactly zero.
    """
    cum_t, cum_c, cum_yt, cum_yc, _, _ = _ranked_arms(dataset, scores)
    fractions, m = grid_counts(dataset.n, grid_points)
    with np.errstate(invalid="ignore", divide="ignore"):
        uplift = cum_yt[m] / cum_t[m] - cum_yc[m] / cum_c[m]
    values = n_population * (m / dataset.n) * uplift
    values = np.where((cum_t[m] > 0) & (cum_c[m] > 0), values, np.nan)
    values[m == 0] = 0.0
    return UpliftCurve(fractions, values, "profit")


@dataclass
class QuintileBias:
    lower_fraction: float
    upper_fraction: float
    mean_score: float
    avg_effect: float
    avg_bias: float
    n: int


def quintile_bias(dataset: ExperimentDataset, scores, effects=None, groups: int = 5):
    """Average effect and score bias per score quintile, lowest scores first.

    ``effects`` gives per-unit true effects (simulation oracle). When omitted,
    each quintile's effect is the holdout difference in arm means. Units are
    partitioned by a stable sort on ``(score, index)``, so tied scores still
    give equal-sized groups.
    """
    s = _aligned(dataset, scores)
    if dataset.n < groups:
        raise TooFewUnits(f"need at least {groups} units")
    order = np.lexsort((np.arange(s.shape[0]), s))
    t_all = np.asarray(dataset.treatment)
    y_all = np.asarray(dataset.outcome, dtype=float)
    out = []
    for q, idx in enumerate(np.array_split(order, groups)):
        if effects is not None:
            effect = float(np.asarray(effects, dtype=float)[idx].mean())
        else:
            t, y = t_all[idx], y_all[idx]
            if not (t == 1).any() or not (t == 0).any():
                raise MissingArm(f"quintile {q + 1} lacks an arm")
            effect = float(y[t == 1].mean() - y[t == 0].mean())
        mean_score = float(s[idx].mean())
        out.append(QuintileBias(q / groups, (q + 1) / groups, mean_score, effect,
                                mean_score - effect, int(idx.shape[0])))
    return out


def spearman(a, b) -> float:
    return float(stats.spearmanr(a, b).statistic)


def pearson(a, b) -> float:
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    return float(np.corrcoef(a, b)[0, 1])
