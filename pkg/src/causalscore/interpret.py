"""Interpretation validators and the Gaussian self-selection analytics.

Covers effect-ordering (EO) and effect-classification (EC) verdicts, the
latent-synchrony ratio scan, truncated standard-normal moments, and the
baseline-bias / CATT decomposition of a confounded difference-in-means score.
"""

from __future__ import annotations

from dataclasses import dataclass, field, asdict
from typing import Optional

import numpy as np
from scipy import special

from .errors import LengthMismatch, MisalignedInputs, TooFewUnits
from .pairs import pair_counts, pair_counts_brute

_SQRT2 = np.sqrt(2.0)
_SQRT_2_OVER_PI = np.sqrt(2.0 / np.pi)
BRUTE_FORCE_LIMIT = 2000


@dataclass
class InterpretationVerdict:
    kind: str
    valid: bool
    violations: int = 0
    ties: int = 0
    pairs: int = 0
    threshold_interval: Optional[tuple] = None
    effect_threshold: Optional[float] = None

    def to_dict(self) -> dict:
        d = asdict(self)
        if d["threshold_interval"] is not None:
            d["threshold_interval"] = [float(v) for v in d["threshold_interval"]]
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "InterpretationVerdict":
        d = dict(d)
        if d.get("threshold_interval") is not None:
            d["threshold_interval"] = tuple(d["threshold_interval"])
        return cls(**d)


@dataclass
class SynchronyReport:
    min_ratio: float
    fraction_positive: float
    fraction_above_one: float
    n_pairs: int
    zero_denominator_pairs: int
    ratios: Optional[np.ndarray] = field(default=None, repr=False)

    @property
    def synchrony(self) -> bool:
        return self.n_pairs > 0 and self.fraction_positive == 1.0

    @property
    def bias_helps(self) -> bool:
        return self.n_pairs > 0 and self.fraction_above_one == 1.0

    def to_dict(self) -> dict:
        return {
            "min_ratio": self.min_ratio,
            "fraction_positive": self.fraction_positive,
            "fraction_above_one": self.fraction_above_one,
            "n_pairs": self.n_pairs,
            "zero_denominator_pairs": self.zero_denominator_pairs,
            "synchrony": self.synchrony,
            "bias_helps": self.bias_helps,
        }


def _paired(a, b, minimum=1):
    a = np.asarray(a, dtype=float).ravel()
    b = np.asarray(b, dtype=float).ravel()
    if a.shape != b.shape:
        raise LengthMismatch(f"lengths differ: {a.shape[0]} vs {b.shape[0]}")
    if a.shape[0] < minimum:
        raise TooFewUnits(f"need at least {minimum} units, got {a.shape[0]}")
    return a, b


def check_ee(theta, beta, atol=1e-9) -> InterpretationVerdict:
    theta, beta = _paired(theta, beta)
    bad = int((np.abs(theta - beta) > atol).sum())
    return InterpretationVerdict("EE", bad == 0, violations=bad, pairs=theta.shape[0])


def check_eo(theta, beta, method="fast") -> InterpretationVerdict:
    """Effect-ordering verdict from discordant pair counts.

    Pairs tied in either sequence are reported in ``ties`` and never count
    as violations. ``method`` is ``"fast"`` (merge counting), ``"brute"``
    (all pairs, limited to 2000 units) or ``"both"``, which runs the two and
    raises if they disagree.
    """
    theta, beta = _paired(theta, beta, minimum=2)
    if method not in ("fast", "brute", "both"):
        raise ValueError(f"unknown method {method!r}")
    if method in ("brute", "both") and theta.shape[0] > BRUTE_FORCE_LIMIT:
        raise ValueError(f"brute-force counting is limited to {BRUTE_FORCE_LIMIT} units")
    if method == "brute":
        conc, disc, ties = pair_counts_brute(theta, beta)
    else:
        conc, disc, ties = pair_counts(theta, beta)
        if method == "both":
            ref = pair_counts_brute(theta, beta)
            if ref != (conc, disc, ties):
                raise AssertionError(f"pair counts disagree: fast {(conc, disc, ties)} vs brute {ref}")
    return InterpretationVerdict("EO", disc == 0, violations=disc, ties=ties,
                                 pairs=conc + disc + ties)


def check_ec(theta, beta, tau: float) -> InterpretationVerdict:
    """Effect-classification verdict for effect threshold ``tau``.

    Valid when the high-effect set ``{beta > tau}`` is exactly an upper level
    set of ``theta``. The reported interval ``(low, high)`` holds the maximum
    score of the low-effect group and the minimum score of the high-effect
    group; with the strict rule ``theta > t`` every ``low <= t < high``
    reproduces the split.
    """
    theta, beta = _paired(theta, beta)
    high = beta > tau
    low_max = float(theta[~high].max()) if (~high).any() else -np.inf
    high_min = float(theta[high].min()) if high.any() else np.inf
    valid = high_min > low_max
    violations = 0
    if not valid:
        violations = int((theta[~high] >= high_min).sum() + (theta[high] <= low_max).sum())
    return InterpretationVerdict("EC", bool(valid), violations=violations,
                                 pairs=theta.shape[0],
                                 threshold_interval=(low_max, high_min) if valid else None,
                                 effect_threshold=float(tau))


def check_synchrony(g_values, h_values, keep_ratios=False) -> SynchronyReport:
    """All-pairs scan of ``h_delta / g_delta`` with pairs oriented so ``g_delta > 0``.

    Pairs with ``g_delta == 0`` are excluded and counted separately.
    """
    g, h = _paired(g_values, h_values, minimum=2)
    n = g.shape[0]
    n_pairs = zero = pos = above = 0
    min_ratio = np.inf
    kept = []
    for i in range(n - 1):
        gd = g[i + 1:] - g[i]
        hd = h[i + 1:] - h[i]
        nz = gd != 0
        zero += int((~nz).sum())
        r = hd[nz] / gd[nz]
        if r.size:
            n_pairs += r.size
            pos += int((r > 0).sum())
            above += int((r > 1).sum())
            min_ratio = min(min_ratio, float(r.min()))
            if keep_ratios:
                kept.append(r)
    denom = n_pairs if n_pairs else 1
    return SynchronyReport(
        min_ratio=float(min_ratio) if n_pairs else float("nan"),
        fraction_positive=pos / denom,
        fraction_above_one=above / denom,
        n_pairs=n_pairs,
        zero_denominator_pairs=zero,
        ratios=np.concatenate(kept) if keep_ratios and kept else None,
    )


# ---------------------------------------------------------------------------
# Truncated standard normal moments


def norm_pdf(x):
    return np.exp(-0.5 * np.square(x)) / np.sqrt(2.0 * np.pi)


def norm_cdf(x):
    return special.ndtr(x)


def trunc_norm_mean_above(a):
    """E[e | e > a] for standard normal e (the inverse Mills ratio).

    Evaluated as ``sqrt(2/pi) / erfcx(a / sqrt(2))``, which stays accurate in
    both tails (it tends to ``a + 1/a`` for large ``a`` and to 0 as ``a`` goes
    to minus infinity).
    """
    a = np.asarray(a, dtype=float)
    out = _SQRT_2_OVER_PI / special.erfcx(a / _SQRT2)
    return out if out.ndim else float(out)


def trunc_norm_mean_below(a):
    """E[e | e <= a] for standard normal e."""
    a = np.asarray(a, dtype=float)
    out = -_SQRT_2_OVER_PI / special.erfcx(-a / _SQRT2)
    return out if out.ndim else float(out)


_VAR_SERIES = (1.0, -6.0, 50.0, -518.0, 6354.0)


def trunc_norm_var_above(a):
    """Var[e | e > a] = 1 - lam * (lam - a) with lam the truncated mean."""
    a = np.asarray(a, dtype=float)
    lam = _SQRT_2_OVER_PI / special.erfcx(a / _SQRT2)
    out = 1.0 - lam * (lam - a)
    far = a > 40.0
    if np.any(far):
        # asymptotic series avoids cancellation in 1 - lam*(lam - a)
        inv2 = 1.0 / np.square(np.where(far, a, 1.0))
        series = sum(c * inv2 ** (k + 1) for k, c in enumerate(_VAR_SERIES))
        out = np.where(far, series, out)
    return out if out.ndim else float(out)


def trunc_norm_var_below(a):
    """Var[e | e <= a], by reflection of :func:`trunc_norm_var_above`."""
    return trunc_norm_var_above(-np.asarray(a, dtype=float))


# ---------------------------------------------------------------------------
# Self-selection decomposition


def baseline_bias(psi, alpha_y):
    """Difference in expected untreated outcome between self-selected arms."""
    psi = np.asarray(psi, dtype=float)
    out = alpha_y * (trunc_norm_mean_above(-psi) - trunc_norm_mean_below(-psi))
    return out if np.ndim(out) else float(out)


def baseline_bias_derivative(psi, alpha_y):
    """d(baseline bias)/d(psi) = alpha_y * (Var[e|e>-psi] - Var[e|e<=-psi])."""
    psi = np.asarray(psi, dtype=float)
    out = alpha_y * (trunc_norm_var_above(-psi) - trunc_norm_var_below(-psi))
    return out if np.ndim(out) else float(out)


def catt(psi, beta_val, alpha_c):
    """Average effect on the treated: beta + alpha_c * E[e_u | e_u > -psi]."""
    psi = np.asarray(psi, dtype=float)
    out = np.asarray(beta_val, dtype=float) + alpha_c * trunc_norm_mean_above(-psi)
    return out if np.ndim(out) else float(out)


def treated_variance(psi):
    """Var[e_u | T=1] at latent mean ``psi``; scales with the propensity."""
    return trunc_norm_var_above(-np.asarray(psi, dtype=float))


def confounded_cas(psi, beta_val, alpha_y, alpha_c):
    """E[Y|T=1,X] - E[Y|T=0,X] = CATT + baseline bias."""
    return np.asarray(catt(psi, beta_val, alpha_c)) + np.asarray(baseline_bias(psi, alpha_y))


def check_assumption3(psi_values, alpha_y) -> bool:
    psi = np.asarray(psi_values, dtype=float).ravel()
    return bool(np.all(psi * alpha_y > 0))


def check_assumption4(dbeta_dpsi, alpha_c, p_tilde) -> bool:
    """True iff ``dbeta/dpsi >= alpha_c * (1 - p_tilde)`` at every point."""
    d = np.asarray(dbeta_dpsi, dtype=float).ravel()
    p = np.asarray(p_tilde, dtype=float).ravel()
    if d.shape != p.shape:
        raise MisalignedInputs(f"{d.shape[0]} derivatives for {p.shape[0]} p_tilde values")
    if np.any((p <= 0) | (p >= 1)):
        raise MisalignedInputs("p_tilde must lie strictly inside (0, 1)")
    return bool(np.all(d >= alpha_c * (1.0 - p)))


def central_difference(fn, x, step=1e-4):
    x = np.asarray(x, dtype=float)
    return (np.asarray(fn(x + step)) - np.asarray(fn(x - step))) / (2.0 * step)


def sum_monotonicity(psi_grid, beta_fn, alpha_y, alpha_c, step=1e-4) -> dict:
    """Finite-difference monotonicity of CATT, baseline bias and their sum.

    Only the sum needs to increase for the confounded score to be ordered;
    all three are reported so the caller can pick the condition they need.
    """
    psi = np.sort(np.asarray(psi_grid, dtype=float).ravel())
    d_catt = central_difference(lambda p: catt(p, beta_fn(p), alpha_c), psi, step)
    d_bias = central_difference(lambda p: baseline_bias(p, alpha_y), psi, step)
    return {
        "catt_increasing": bool(np.all(d_catt > 0)),
        "baseline_bias_increasing": bool(np.all(d_bias > 0)),
        "sum_increasing": bool(np.all(d_catt + d_bias > 0)),
    }
