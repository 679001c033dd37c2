"""Data-generating processes with known ground truth.

Four families are provided:

* ``nudge``: a binary choice ``Y = 1{U + delta*T > 0}`` with logistic (or
  probit) utility noise, optionally with a heterogeneous nudge effect whose
  conditional mean is jointly normal with the latent utility mean.
* ``surrogate``: k latent mediators with log-normal loadings on the effect
  of interest and on a surrogate effect.
* ``self_selection``: a probit self-selection model with outcome and
  effect errors that load linearly on the selection error.
* ``generic_latent``: effect ``g(mu)`` and baseline ``h(mu)`` given as
  monotone-checkable tables over a latent mean ``mu``.

Every simulator exposes the latent means directly as features and returns an
``(ExperimentDataset, OracleTruth)`` pair.
"""

from __future__ import annotations

from dataclasses import dataclass, field, asdict
from typing import Optional

import numpy as np
from scipy import special

from .core import (RngStream, make_dataset, make_oracle, mvn_sample, equicorrelation,
                   ExperimentDataset, OracleTruth)
from .errors import InvalidConfig
from . import interpret

NOISES = ("logistic", "probit")


def _link(noise):
    if noise == "logistic":
        return special.expit
    if noise == "probit":
        return special.ndtr
    raise InvalidConfig(f"unknown noise {noise!r}; expected one of {NOISES}")


def nudge_cas(mu, noise="logistic"):
    """Untreated choice probability P[Y=1 | T=0] at latent mean ``mu``."""
    out = _link(noise)(np.asarray(mu, dtype=float))
    return out if np.ndim(out) else float(out)


def nudge_cate(mu, delta, noise="logistic"):
    """Nudge effect F(mu + delta) - F(mu); for logistic F it peaks at mu = -delta/2."""
    f = _link(noise)
    mu = np.asarray(mu, dtype=float)
    out = f(mu + delta) - f(mu)
    return out if np.ndim(out) else float(out)


class PiecewiseLinear:
    """Single-valued function table with linear interpolation and extrapolation."""

    def __init__(self, x, y):
        x = np.asarray(x, dtype=float).ravel()
        y = np.asarray(y, dtype=float).ravel()
        if x.shape != y.shape or x.shape[0] < 2:
            raise InvalidConfig("function table needs two or more (x, y) points of equal length")
        if np.any(np.diff(x) <= 0):
            raise InvalidConfig("function table x values must be strictly increasing")
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
            raise InvalidConfig("function table values must be finite")
        self.x, self.y = x, y
        self._slopes = np.diff(y) / np.diff(x)

    @property
    def direction(self) -> str:
        d = np.diff(self.y)
        if np.all(d > 0):
            return "increasing"
        if np.all(d < 0):
            return "decreasing"
        if np.all(d >= 0):
            return "nondecreasing"
        if np.all(d <= 0):
            return "nonincreasing"
        return "nonmonotone"

    def __call__(self, v):
        v = np.asarray(v, dtype=float)
        out = np.interp(v, self.x, self.y)
        out = np.where(v < self.x[0], self.y[0] + self._slopes[0] * (v - self.x[0]), out)
        out = np.where(v > self.x[-1], self.y[-1] + self._slopes[-1] * (v - self.x[-1]), out)
        return out if out.ndim else float(out)

    def derivative(self, v):
        v = np.asarray(v, dtype=float)
        idx = np.clip(np.searchsorted(self.x, v, side="right") - 1, 0, self._slopes.shape[0] - 1)
        out = self._slopes[idx]
        return out if np.ndim(out) else float(out)

    def to_dict(self):
        return {"x": self.x.tolist(), "y": self.y.tolist()}

    @classmethod
    def from_function(cls, fn, low, high, points=201):
        x = np.linspace(low, high, points)
        return cls(x, fn(x))


# ---------------------------------------------------------------------------
# Configurations


@dataclass(frozen=True)
class HeterogeneousDelta:
    eta: float
    rho: float
    delta_mean: float = 0.5


@dataclass(frozen=True)
class NudgeConfig:
    delta: float = 0.5
    mu_mean: float = -3.0
    mu_sd: float = 1.0
    heterogeneous: Optional[HeterogeneousDelta] = None
    noise: str = "logistic"
    mu_upper: Optional[float] = None
    treatment_probability: float = 0.5

    family = "nudge"

    def validate(self):
        if self.noise not in NOISES:
            raise InvalidConfig(f"unknown noise {self.noise!r}")
        if not self.mu_sd > 0:
            raise InvalidConfig("mu_sd must be positive")
        if not 0 < self.treatment_probability < 1:
            raise InvalidConfig("treatment_probability must be in (0, 1)")
        het = self.heterogeneous
        if het is not None:
            if het.eta < 0:
                raise InvalidConfig("eta must be non-negative")
            if abs(het.rho) > 1:
                raise InvalidConfig("rho must lie in [-1, 1]")
        return self


@dataclass(frozen=True)
class SurrogateConfig:
    k: int = 2
    rho_L: float = 0.0
    rho_gamma: float = 0.0
    latent_noise_sd: float = 1.0
    outcome_noise_sd: float = 1.0
    treatment_probability: float = 0.5

    family = "surrogate"

    def validate(self):
        if int(self.k) != self.k or self.k < 1:
            raise InvalidConfig("k must be an integer >= 1")
        if self.k > 1 and self.rho_L < -1.0 / (self.k - 1) - 1e-12:
            raise InvalidConfig(
                f"rho_L={self.rho_L} is below the positive semi-definite bound "
                f"{-1.0 / (self.k - 1):.6g} for k={self.k}")
        if self.rho_L > 1 or abs(self.rho_gamma) > 1:
            raise InvalidConfig("correlations must lie in [-1, 1]")
        if self.latent_noise_sd < 0 or self.outcome_noise_sd < 0:
            raise InvalidConfig("noise standard deviations must be non-negative")
        if not 0 < self.treatment_probability < 1:
            raise InvalidConfig("treatment_probability must be in (0, 1)")
        return self


@dataclass(frozen=True)
class BetaLink:
    """CATE as a function of the selection index psi."""

    kind: str = "linear"
    b0: float = 0.0
    b1: float = 1.0
    table_psi: tuple = ()
    table_beta: tuple = ()

    def _table(self):
        return PiecewiseLinear(self.table_psi, self.table_beta)

    def validate(self):
        if self.kind == "linear":
            return self
        if self.kind == "table":
            t = self._table()
            if t.direction == "nonmonotone":
                raise InvalidConfig("beta table must be monotone")
            return self
        raise InvalidConfig(f"unknown beta link {self.kind!r}")

    def __call__(self, psi):
        if self.kind == "linear":
            return self.b0 + self.b1 * np.asarray(psi, dtype=float)
        return self._table()(psi)

    def derivative(self, psi):
        if self.kind == "linear":
            return np.full(np.shape(psi), float(self.b1)) if np.ndim(psi) else float(self.b1)
        return self._table().derivative(psi)


@dataclass(frozen=True)
class SelfSelectionConfig:
    """Linear indices ``zeta`` and ``psi`` have the intercept first.

    Features are drawn uniformly on ``[feature_low, feature_high]``.
    """

    alpha_y: float = 0.0
    alpha_c: float = 0.0
    zeta: tuple = (0.0, 1.0)
    psi: tuple = (0.0, 1.0)
    beta_fn: BetaLink = field(default_factory=BetaLink)
    noise_sd_y: float = 1.0
    noise_sd_c: float = 1.0
    feature_low: float = -1.0
    feature_high: float = 1.0

    family = "self_selection"

    @property
    def n_features(self) -> int:
        return len(self.psi) - 1

    def validate(self):
        if len(self.psi) < 2:
            raise InvalidConfig("psi needs an intercept and at least one coefficient")
        if len(self.zeta) != len(self.psi):
            raise InvalidConfig("zeta and psi must have the same length")
        if self.noise_sd_y < 0 or self.noise_sd_c < 0:
            raise InvalidConfig("noise standard deviations must be non-negative")
        if not self.feature_high > self.feature_low:
            raise InvalidConfig("feature_high must exceed feature_low")
        self.beta_fn.validate()
        return self

    def psi_index(self, x):
        c = np.asarray(self.psi, dtype=float)
        return c[0] + np.asarray(x, dtype=float) @ c[1:]

    def zeta_index(self, x):
        c = np.asarray(self.zeta, dtype=float)
        return c[0] + np.asarray(x, dtype=float) @ c[1:]


@dataclass(frozen=True)
class GenericLatentConfig:
    """``g`` and ``h`` are ``(x, y)`` tables; ``mu`` is uniform or normal."""

    g: tuple = ((0.0, 1.0), (0.0, 1.0))
    h: tuple = ((0.0, 1.0), (0.0, 1.0))
    mu_distribution: str = "uniform"
    mu_a: float = 0.0
    mu_b: float = 1.0
    baseline_noise_sd: float = 1.0
    effect_noise_sd: float = 0.0
    treatment_probability: float = 0.5

    family = "generic_latent"

    def g_fn(self):
        return PiecewiseLinear(*self.g)

    def h_fn(self):
        return PiecewiseLinear(*self.h)

    def validate(self):
        self.g_fn(), self.h_fn()
        if self.mu_distribution not in ("uniform", "normal"):
            raise InvalidConfig(f"unknown mu distribution {self.mu_distribution!r}")
        if self.mu_distribution == "uniform" and not self.mu_b > self.mu_a:
            raise InvalidConfig("uniform mu needs mu_b > mu_a")
        if self.mu_distribution == "normal" and not self.mu_b > 0:
            raise InvalidConfig("normal mu needs a positive standard deviation mu_b")
        if self.baseline_noise_sd < 0 or self.effect_noise_sd < 0:
            raise InvalidConfig("noise standard deviations must be non-negative")
        if not 0 < self.treatment_probability < 1:
            raise InvalidConfig("treatment_probability must be in (0, 1)")
        return self

    @classmethod
    def from_functions(cls, g, h, low, high, points=201, **kw):
        gt = PiecewiseLinear.from_function(g, low, high, points)
        ht = PiecewiseLinear.from_function(h, low, high, points)
        return cls(g=(tuple(gt.x), tuple(gt.y)), h=(tuple(ht.x), tuple(ht.y)),
                   mu_a=low, mu_b=high, **kw)


FAMILIES = {
    "nudge": NudgeConfig,
    "surrogate": SurrogateConfig,
    "self_selection": SelfSelectionConfig,
    "generic_latent": GenericLatentConfig,
}


def config_to_dict(config) -> dict:
    d = asdict(config)
    d["family"] = config.family
    return d


def config_from_dict(d: dict):
    """Build and validate a DGP configuration from its JSON form."""
    d = dict(d)
    family = d.pop("family", None)
    if family not in FAMILIES:
        raise InvalidConfig(f"unknown DGP family {family!r}; expected one of {sorted(FAMILIES)}")
    cls = FAMILIES[family]
    known = set(cls.__dataclass_fields__)
    unknown = set(d) - known
    if unknown:
        raise InvalidConfig(f"unknown {family} config fields: {sorted(unknown)}")
    try:
        if family == "nudge" and d.get("heterogeneous") is not None:
            d["heterogeneous"] = HeterogeneousDelta(**d["heterogeneous"])
        if family == "self_selection":
            for key in ("zeta", "psi"):
                if key in d:
                    d[key] = tuple(d[key])
            if "beta_fn" in d:
                b = dict(d["beta_fn"])
                b["table_psi"] = tuple(b.get("table_psi", ()))
                b["table_beta"] = tuple(b.get("table_beta", ()))
                d["beta_fn"] = BetaLink(**b)
        if family == "generic_latent":
            for key in ("g", "h"):
                if key in d:
                    d[key] = tuple(tuple(part) for part in d[key])
        config = cls(**d)
    except TypeError as exc:
        raise InvalidConfig(str(exc)) from exc
    return config.validate()


# ---------------------------------------------------------------------------
# Simulators


def _bernoulli(p, n, rng):
    return (rng.generator.random(n) < p).astype(np.int8)


def _draw_nudge_latents(config: NudgeConfig, n, rng):
    """Draw (mu, delta) rows, resampling any mu above ``mu_upper``."""
    het = config.heterogeneous
    if het is None:
        mean = np.array([config.mu_mean])
        cov = np.array([[config.mu_sd ** 2]])
    else:
        s = config.mu_sd
        mean = np.array([config.mu_mean, het.delta_mean])
        cov = np.array([[s * s, het.rho * het.eta * s * s],
                        [het.rho * het.eta * s * s, (het.eta * s) ** 2]])
    out = np.empty((0, mean.shape[0]))
    while out.shape[0] < n:
        draws = mvn_sample(mean, cov, rng, size=max(n - out.shape[0], 16) * (1 if config.mu_upper is None else 2))
        if config.mu_upper is not None:
            draws = draws[draws[:, 0] < config.mu_upper]
        out = np.vstack([out, draws])
    out = out[:n]
    if het is None:
        return out[:, 0], np.full(n, float(config.delta))
    return out[:, 0], out[:, 1]


def draw_nudge_outcomes(config: NudgeConfig, mu, delta, rng):
    """Potential outcomes (Y0, Y1) sharing one utility-noise draw per unit."""
    n = mu.shape[0]
    if config.noise == "logistic":
        eps = rng.generator.logistic(size=n)
    else:
        eps = rng.generator.standard_normal(n)
    y0 = (mu + eps > 0).astype(float)
    y1 = (mu + delta + eps > 0).astype(float)
    return y0, y1


def simulate_nudge(config: NudgeConfig, n: int, rng: RngStream):
    config.validate()
    if n < 1:
        raise InvalidConfig("n must be >= 1")
    mu, delta = _draw_nudge_latents(config, n, rng.substream(0))
    y0, y1 = draw_nudge_outcomes(config, mu, delta, rng.substream(1))
    t = _bernoulli(config.treatment_probability, n, rng.substream(2))
    y = np.where(t == 1, y1, y0)
    if config.heterogeneous is None:
        features, names = mu, ("mu",)
    else:
        features, names = np.column_stack([mu, delta]), ("mu", "delta")
    f = _link(config.noise)
    data = make_dataset(features, t, y, column_names=names, metadata={"family": "nudge"})
    oracle = make_oracle(cate=f(mu + delta) - f(mu), cas=f(mu), latent_mean=mu,
                         potential_outcomes=(y0, y1), extras={"delta": delta})
    return data, oracle


def draw_surrogate_loadings(config: SurrogateConfig, rng: RngStream):
    cov = np.array([[1.0, config.rho_gamma], [config.rho_gamma, 1.0]])
    ab = mvn_sample(np.zeros(2), cov, rng, size=config.k)
    return np.exp(ab[:, 0]), np.exp(ab[:, 1])


def surrogate_correlation(gamma, gamma_tilde, rho_L):
    """Exact Pearson correlation of the two effect indices given loadings."""
    k = len(gamma)
    sigma = equicorrelation(k, rho_L)
    g = np.asarray(gamma, dtype=float)
    gt = np.asarray(gamma_tilde, dtype=float)
    return float(g @ sigma @ gt / np.sqrt((g @ sigma @ g) * (gt @ sigma @ gt)))


def simulate_surrogate(config: SurrogateConfig, n: int, rng: RngStream):
    """Multi-mediator surrogate model.

    Effects on the outcome of interest and on the surrogate are
    ``C = sum gamma_i L_i`` and ``S = sum gamma_tilde_i L_i`` with
    ``L_i = mu_i(x) + noise``. Loadings are drawn once per dataset and
    returned in ``oracle.extras``.
    """
    config.validate()
    if n < 1:
        raise InvalidConfig("n must be >= 1")
    k = config.k
    gamma, gamma_tilde = draw_surrogate_loadings(config, rng.substream(0))
    mu = mvn_sample(np.zeros(k), equicorrelation(k, config.rho_L), rng.substream(1), size=n)
    g = rng.substream(2).generator
    latent = mu + config.latent_noise_sd * g.standard_normal((n, k))
    c = latent @ gamma
    s = latent @ gamma_tilde
    y0 = config.outcome_noise_sd * g.standard_normal(n)
    s0 = config.outcome_noise_sd * g.standard_normal(n)
    t = _bernoulli(config.treatment_probability, n, rng.substream(3))
    y = y0 + t * c
    surrogate = s0 + t * s
    names = tuple(f"mu{i + 1}" for i in range(k))
    data = make_dataset(mu, t, y, surrogate, column_names=names,
                        metadata={"family": "surrogate"})
    extras = {"gamma": gamma, "gamma_tilde": gamma_tilde}
    extras.update({f"mu{i + 1}": mu[:, i] for i in range(k)})
    oracle = make_oracle(cate=mu @ gamma, cas=mu @ gamma_tilde, latent_mean=mu[:, 0],
                         potential_outcomes=(y0, y0 + c), extras=extras)
    return data, oracle


def self_selection_truth(config: SelfSelectionConfig, psi):
    beta = config.beta_fn(psi)
    c = interpret.catt(psi, beta, config.alpha_c)
    bias = interpret.baseline_bias(psi, config.alpha_y)
    return {
        "beta": np.asarray(beta, dtype=float),
        "catt": np.asarray(c, dtype=float),
        "baseline_bias": np.asarray(bias, dtype=float),
        "theta": np.asarray(c, dtype=float) + np.asarray(bias, dtype=float),
        "propensity": interpret.norm_cdf(psi),
        "p_tilde": interpret.treated_variance(psi),
    }


def draw_self_selection_outcomes(config: SelfSelectionConfig, x, rng: RngStream):
    """Return ``(T, Y0, Y1)`` for fixed features ``x``."""
    psi = config.psi_index(x)
    n = psi.shape[0]
    g = rng.generator
    eps_u = g.standard_normal(n)
    eps_y = config.alpha_y * eps_u + config.noise_sd_y * g.standard_normal(n)
    eps_c = config.alpha_c * eps_u + config.noise_sd_c * g.standard_normal(n)
    y0 = config.zeta_index(x) + eps_y
    c = config.beta_fn(psi) + eps_c
    t = (psi + eps_u > 0).astype(np.int8)
    return t, y0, y0 + c


def simulate_self_selection(config: SelfSelectionConfig, n: int, rng: RngStream):
    config.validate()
    if n < 1:
        raise InvalidConfig("n must be >= 1")
    m = config.n_features
    x = config.feature_low + (config.feature_high - config.feature_low) * \
        rng.substream(0).generator.random((n, m))
    t, y0, y1 = draw_self_selection_outcomes(config, x, rng.substream(1))
    y = np.where(t == 1, y1, y0)
    psi = config.psi_index(x)
    truth = self_selection_truth(config, psi)
    names = tuple(f"x{j}" for j in range(m))
    data = make_dataset(x, t, y, column_names=names, metadata={"family": "self_selection"})
    oracle = make_oracle(
        cate=truth["beta"], cas=truth["theta"], latent_mean=psi,
        potential_outcomes=(y0, y1),
        extras={k: truth[k] for k in ("catt", "baseline_bias", "propensity", "p_tilde")})
    return data, oracle


def draw_generic_outcomes(config: GenericLatentConfig, mu, rng: RngStream):
    g = rng.generator
    n = mu.shape[0]
    y0 = config.h_fn()(mu) + config.baseline_noise_sd * g.standard_normal(n)
    y1 = y0 + config.g_fn()(mu) + config.effect_noise_sd * g.standard_normal(n)
    return y0, y1


def simulate_generic_latent(config: GenericLatentConfig, n: int, rng: RngStream):
    """Effect ``g(mu)``, untreated mean outcome ``h(mu)``."""
    config.validate()
    if n < 1:
        raise InvalidConfig("n must be >= 1")
    g0 = rng.substream(0).generator
    if config.mu_distribution == "uniform":
        mu = g0.uniform(config.mu_a, config.mu_b, n)
    else:
        mu = config.mu_a + config.mu_b * g0.standard_normal(n)
    y0, y1 = draw_generic_outcomes(config, mu, rng.substream(1))
    t = _bernoulli(config.treatment_probability, n, rng.substream(2))
    y = np.where(t == 1, y1, y0)
    data = make_dataset(mu, t, y, column_names=("mu",), metadata={"family": "generic_latent"})
    oracle = make_oracle(cate=config.g_fn()(mu), cas=config.h_fn()(mu), latent_mean=mu,
                         potential_outcomes=(y0, y1))
    return data, oracle


_SIMULATORS = {
    "nudge": simulate_nudge,
    "surrogate": simulate_surrogate,
    "self_selection": simulate_self_selection,
    "generic_latent": simulate_generic_latent,
}


def simulate(config, n: int, rng: RngStream) -> tuple[ExperimentDataset, OracleTruth]:
    return _SIMULATORS[config.family](config, n, rng)
