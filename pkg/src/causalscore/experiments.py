"""Figure and experiment reproductions returning plain tables.

Each ``fig*`` function returns a :class:`FigureData`; the command-line
front end writes its tables as CSV and renders its plots. Tests assert on
the tables and summaries, never on rendered output.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import optimize, special

from . import dgp, interpret, metrics
from .core import RngStream, equicorrelation, pivoted_cholesky
from .errors import UnknownFigure
from .scoring import BaseLearnerConfig, fit

FIGURES = ("fig5", "fig6", "fig7", "fig8", "fig9", "thm3", "quintile")


@dataclass
class Table:
    header: list
    columns: list

    def column(self, name):
        return np.asarray(self.columns[self.header.index(name)])


@dataclass
class Plot:
    """``kind`` is ``line``, ``scatter`` or ``heatmap``."""

    name: str
    kind: str
    title: str
    xlabel: str
    ylabel: str
    series: list = field(default_factory=list)
    grid: object = None
    row_labels: list = field(default_factory=list)
    col_labels: list = field(default_factory=list)
    hlines: list = field(default_factory=list)
    vlines: list = field(default_factory=list)


@dataclass
class FigureData:
    figure: str
    tables: dict
    summary: dict
    plots: list


def _thin(n, limit):
    """Evenly spaced indices keeping at most ``limit`` points, endpoints included."""
    if n <= limit:
        return np.arange(n)
    return np.unique(np.linspace(0, n - 1, limit).round().astype(int))


# ---------------------------------------------------------------------------
# nudge closed forms


def fig5(delta=0.5, lo=-5.0, hi=5.0, step=1e-4, noise="logistic") -> FigureData:
    """CAS and CATE of the nudge model across the latent utility gain."""
    count = int(round((hi - lo) / step)) + 1
    mu = lo + step * np.arange(count)
    cas = dgp.nudge_cas(mu, noise)
    cate = dgp.nudge_cate(mu, delta, noise)
    i = int(np.argmax(cate))
    keep = _thin(count, 1001)
    plot = Plot("fig5", "line", "Nudge model", "expected utility gain mu", "probability",
                series=[("CAS", mu[keep], cas[keep]), ("CATE", mu[keep], cate[keep])],
                vlines=[-delta / 2])
    summary = {"delta": delta, "argmax_mu": float(mu[i]), "max_cate": float(cate[i]),
               "peak_closed_form": -delta / 2, "grid_step": step}
    return FigureData("fig5", {"fig5": Table(["mu", "cas", "cate"], [mu, cas, cate])},
                      summary, [plot])


def fig6(delta=0.5, tau=0.11, upper=0.6, step=1e-4) -> FigureData:
    """CATE against CAS for the logit nudge model with CAS in (0, upper]."""
    count = int(round(upper / step))
    theta = step * np.arange(1, count + 1)
    beta = special.expit(special.logit(theta) + delta) - theta
    ec = interpret.check_ec(theta, beta, tau)
    eo = interpret.check_eo(theta, beta)
    f = lambda t: special.expit(special.logit(t) + delta) - t - tau  # noqa: E731
    # the CATE peaks where mu = -delta/2; below that it rises with the CAS
    peak = float(special.expit(-delta / 2))
    crossing = optimize.brentq(f, 1e-9, peak, xtol=1e-14)
    low, high = ec.threshold_interval
    summary = {"delta": delta, "tau": tau, "ec_valid": ec.valid, "eo_valid": eo.valid,
               "eo_violations": eo.violations, "threshold_low": low, "threshold_high": high,
               "cas_crossing": crossing,
               "cate_at_028": float(special.expit(special.logit(0.28) + delta) - 0.28)}
    keep = _thin(count, 1201)
    plot = Plot("fig6", "line", "CATE against CAS", "CAS (theta)", "CATE (beta)",
                series=[("CATE", theta[keep], beta[keep])], hlines=[tau], vlines=[crossing])
    return FigureData("fig6", {"fig6": Table(["cas", "cate"], [theta, beta])}, summary, [plot])


FIG7_PANELS = (("a", 0.9, 0.1), ("b", 0.9, 1.0), ("c", 0.0, 0.1), ("d", 0.0, 1.0))


def fig7(n=100_000, rng: RngStream = None, scatter_points=2000) -> FigureData:
    """CAS and CATE when the nudge strength varies with the features."""
    rng = rng or RngStream(0)
    rows = []
    scatter_cols = [[], [], [], []]
    plots = []
    for i, (label, rho, eta) in enumerate(FIG7_PANELS):
        config = dgp.NudgeConfig(heterogeneous=dgp.HeterogeneousDelta(eta=eta, rho=rho))
        _, oracle = dgp.simulate_nudge(config, n, rng.substream(i))
        cas, cate = np.asarray(oracle.cas), np.asarray(oracle.cate)
        rows.append((label, rho, eta, metrics.pearson(cas, cate), metrics.spearman(cas, cate),
                     metrics.kendall_tau_between(cas[:20000], cate[:20000])))
        m = min(scatter_points, n)
        scatter_cols[0] += [label] * m
        scatter_cols[1] += [i] * m
        scatter_cols[2] += cas[:m].tolist()
        scatter_cols[3] += cate[:m].tolist()
        plots.append(Plot(f"fig7{label}", "scatter", f"rho={rho:g}, eta={eta:g}",
                          "CAS (theta)", "CATE (beta)", series=[("units", cas[:m], cate[:m])]))
    summary_table = Table(["panel", "rho", "eta", "pearson", "spearman", "kendall"],
                          [list(c) for c in zip(*rows)])
    summary = {f"pearson_{lab}": r[3] for lab, r in zip("abcd", rows)}
    summary["n"] = n
    summary["pearson_gap_a_minus_d"] = rows[0][3] - rows[3][3]
    tables = {"fig7": summary_table,
              "fig7_points": Table(["panel", "panel_index", "cas", "cate"], scatter_cols)}
    return FigureData("fig7", tables, summary, plots)


# ---------------------------------------------------------------------------
# surrogate heatmaps


def fig8_axes(k, points=5):
    rho_l = np.linspace(max(-1.0 / (k - 1), -0.9) if k > 1 else -0.9, 0.9, points)
    rho_g = np.linspace(-0.9, 0.9, points)
    return rho_l, rho_g


def surrogate_grid(k, rho_l, rho_g, reps, rng: RngStream, n_units=None):
    """Mean correlation of CAS and CATE over random loading draws.

    Replication ``r`` reuses the same standard normal draws in every cell
    (common random numbers), so differences between cells reflect the
    parameters rather than sampling noise. With ``n_units`` the correlation
    of each draw is the sample correlation over that many simulated units;
    otherwise it is the exact population correlation given the loadings.
    """
    grid = np.zeros((len(rho_l), len(rho_g)))
    for r in range(reps):
        g = rng.substream(r).generator
        z = g.standard_normal((k, 2))
        w = g.standard_normal((n_units, k)) if n_units else None
        for i, rl in enumerate(rho_l):
            if w is not None:
                mu = w @ pivoted_cholesky(equicorrelation(k, rl)).T
            for j, rg in enumerate(rho_g):
                gamma = np.exp(z[:, 0])
                gamma_t = np.exp(rg * z[:, 0] + np.sqrt(1.0 - rg * rg) * z[:, 1])
                if w is None:
                    grid[i, j] += dgp.surrogate_correlation(gamma, gamma_t, rl)
                else:
                    grid[i, j] += metrics.pearson(mu @ gamma, mu @ gamma_t)
    return grid / reps


def fig8(reps=400, rng: RngStream = None, ks=(2, 6), points=5, n_units=None) -> FigureData:
    rng = rng or RngStream(0)
    tables, plots, summary = {}, [], {"reps": reps}
    for idx, k in enumerate(ks):
        rho_l, rho_g = fig8_axes(k, points)
        grid = surrogate_grid(k, rho_l, rho_g, reps, rng.substream(idx), n_units)
        ii, jj = np.meshgrid(np.arange(points), np.arange(points), indexing="ij")
        tables[f"fig8_k{k}"] = Table(["rho_L", "rho_gamma", "correlation"],
                                     [rho_l[ii.ravel()], rho_g[jj.ravel()], grid.ravel()])
        along_l = [metrics.spearman(rho_l, grid[:, j]) for j in range(points)]
        along_g = [metrics.spearman(rho_g, grid[i, :]) for i in range(points)]
        summary[f"k{k}_min_spearman_rho_L"] = float(min(along_l))
        summary[f"k{k}_min_spearman_rho_gamma"] = float(min(along_g))
        summary[f"k{k}_grid"] = grid.tolist()
        plots.append(Plot(f"fig8_k{k}", "heatmap", f"corr(CAS, CATE), k={k}", "rho_gamma",
                          "rho_L", grid=grid, row_labels=[f"{v:.2f}" for v in rho_l],
                          col_labels=[f"{v:.2f}" for v in rho_g]))
    return FigureData("fig8", tables, summary, plots)


# ---------------------------------------------------------------------------
# self-selection

# reference CATE curve tabulated at 20 propensities in [0.01, 0.9]
FIG9_PROPENSITY = tuple(np.linspace(0.01, 0.9, 20).tolist())
FIG9_CATE = (0.50953586, 0.5422692, 0.5803254, 0.62639323, 0.68229718, 0.75016247,
             0.83266331, 0.93325394, 1.05647846, 1.20842477, 1.39741793, 1.63511669,
             1.93831619, 2.33204848, 2.85521508, 3.57153695, 4.5927663, 6.1338845,
             8.66737437, 13.4760212)


def fig9_config() -> dgp.SelfSelectionConfig:
    """Differential effect bias ``alpha_c = 2`` with no baseline bias.

    The CATE is tabulated as a function of the selection index
    ``psi = Phi^-1(p)`` and interpolated linearly between the points.
    """
    psi = special.ndtri(np.asarray(FIG9_PROPENSITY)).tolist()
    link = dgp.BetaLink(kind="table", table_psi=tuple(psi), table_beta=FIG9_CATE)
    return dgp.SelfSelectionConfig(alpha_y=0.0, alpha_c=2.0, beta_fn=link).validate()


def fig9(tau=6.0, points=200) -> FigureData:
    config = fig9_config()
    p = np.linspace(FIG9_PROPENSITY[0], FIG9_PROPENSITY[-1], points)
    psi = special.ndtri(p)
    truth = dgp.self_selection_truth(config, psi)
    catt, beta = truth["catt"], truth["beta"]
    dip = int(np.argmin(catt))
    ec = interpret.check_ec(truth["theta"], beta, tau)
    eo = interpret.check_eo(truth["theta"], beta)
    a4 = interpret.check_assumption4(config.beta_fn.derivative(psi), config.alpha_c,
                                     truth["p_tilde"])
    summary = {"tau": tau, "alpha_c": config.alpha_c, "catt_min_propensity": float(p[dip]),
               "catt_min": float(catt[dip]),
               "catt_monotone": bool(np.all(np.diff(catt) > 0)),
               "eo_valid": eo.valid, "ec_valid": ec.valid,
               "ec_interval": list(ec.threshold_interval) if ec.threshold_interval else None,
               "assumption4_holds": a4,
               "catt_at_table_points": dgp.self_selection_truth(
                   config, special.ndtri(np.asarray(FIG9_PROPENSITY)))["catt"].tolist()}
    plot = Plot("fig9", "line", "Self-selection", "propensity P[T=1|X]", "effect",
                series=[("CATT", p, catt), ("CATE", p, beta)], hlines=[tau])
    return FigureData("fig9", {"fig9": Table(["propensity", "psi", "catt", "cate", "theta"],
                                              [p, psi, catt, beta, truth["theta"]])},
                      summary, [plot])


# ---------------------------------------------------------------------------
# rank correlation under estimation noise

# (beta spacing, alpha = slope * beta, unit noise sd)
THM3_CONFIGS = ((1.0, 0.0, 1.0), (0.5, 0.0, 1.0), (0.5, 1.0, 1.0), (0.5, -0.5, 1.0),
                (1.0, -1.5, 2.0))


def thm3_instance(spacing, slope, sd, n=10):
    beta = spacing * np.arange(n, 0, -1, dtype=float)
    alpha = slope * beta
    return beta, alpha, sd


def thm3_monte_carlo(beta, alpha, sd, reps, rng: RngStream):
    """Mean Kendall tau of ``beta + alpha + noise`` listed by descending beta."""
    noise = rng.generator.standard_normal((reps, beta.shape[0]))
    est = beta + alpha + sd * noise
    taus = np.array([metrics.kendall_tau(row) for row in est])
    return float(taus.mean()), float(taus.std(ddof=1) / np.sqrt(reps))


def thm3(reps=20_000, rng: RngStream = None, configs=THM3_CONFIGS, n=10) -> FigureData:
    rng = rng or RngStream(0)
    cols = [[] for _ in range(7)]
    for idx, (spacing, slope, sd) in enumerate(configs):
        beta, alpha, sd = thm3_instance(spacing, slope, sd, n)
        closed = metrics.expected_tau(metrics.RankNoiseModel.from_units(beta, alpha, sd))
        mc, se = thm3_monte_carlo(beta, alpha, sd, reps, rng.substream(idx))
        for c, v in zip(cols, (spacing, slope, sd, closed, mc, se, abs(closed - mc))):
            c.append(v)
    table = Table(["beta_spacing", "alpha_slope", "noise_sd", "closed_form", "monte_carlo",
                   "mc_se", "abs_diff"], cols)
    summary = {"reps": reps, "n": n, "max_abs_diff": float(max(cols[6]))}
    x = list(range(1, len(configs) + 1))
    plot = Plot("thm3", "scatter", "Expected rank correlation", "configuration",
                "Kendall tau", series=[("closed form", x, cols[3]), ("Monte Carlo", x, cols[4])])
    return FigureData("thm3", {"thm3": table}, summary, [plot])


# ---------------------------------------------------------------------------
# quintile bias on synthetic nudge data


def quintile(rng: RngStream = None, n_train=20_000, n_test=20_000,
             base: BaseLearnerConfig = None) -> FigureData:
    """Per-quintile effect and bias of an outcome-rate scorer."""
    rng = rng or RngStream(0)
    base = base or BaseLearnerConfig(tree_count=100, max_depth=3)
    config = dgp.NudgeConfig()
    train, _ = dgp.simulate_nudge(config, n_train, rng.substream(0))
    test, oracle = dgp.simulate_nudge(config, n_test, rng.substream(1))
    model = fit("outcome_rate", train, base)
    scores = model.predict(test.features)
    est = metrics.quintile_bias(test, scores)
    true = metrics.quintile_bias(test, scores, effects=oracle.cate)
    labels = [f"{int(q.lower_fraction * 100)}-{int(q.upper_fraction * 100)}%" for q in est]
    table = Table(["quintile", "mean_score", "effect_estimate", "bias_estimate", "effect_true",
                   "bias_true"],
                  [labels, [q.mean_score for q in est], [q.avg_effect for q in est],
                   [q.avg_bias for q in est], [q.avg_effect for q in true],
                   [q.avg_bias for q in true]])
    summary = {"corr_effect_bias_true": metrics.pearson([q.avg_effect for q in true],
                                                        [q.avg_bias for q in true]),
               "n_train": n_train, "n_test": n_test}
    x = list(range(1, 6))
    plot = Plot("quintile", "line", "Bias by score quintile", "quintile", "value",
                series=[("effect (estimate)", x, [q.avg_effect for q in est]),
                        ("bias (estimate)", x, [q.avg_bias for q in est])])
    return FigureData("quintile", {"quintile": table}, summary, [plot])


def reproduce(figure, rng: RngStream, reps=None) -> FigureData:
    """Dispatch by figure id; ``reps`` overrides the Monte Carlo replication count."""
    if figure == "fig5":
        return fig5()
    if figure == "fig6":
        return fig6()
    if figure == "fig7":
        return fig7(rng=rng)
    if figure == "fig8":
        return fig8(reps=reps or 400, rng=rng)
    if figure == "fig9":
        return fig9()
    if figure == "thm3":
        return thm3(reps=reps or 20_000, rng=rng)
    if figure == "quintile":
        return quintile(rng=rng)
    raise UnknownFigure(f"unknown figure {figure!r}; expected one of {', '.join(FIGURES)}")
