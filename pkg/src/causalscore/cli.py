"""Command-line front end: ``causalscore simulate|evaluate|reproduce|check``."""

from __future__ import annotations

import argparse
import os
import sys
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import __version__, dataio, dgp, experiments, interpret, metrics
from .core import RngStream
from .errors import (CausalScoreError, InvalidConfig, IoFailure, MisalignedInputs, MissingColumn,
                     UnknownFigure, UnknownMetric)
from .scoring import KINDS, BaseLearnerConfig, fit

SEED_ENV = "CSL_SEED"
METRICS = ("auqc", "top_uplift", "mean_score", "ate", "kendall_tau", "profit_argmax")
DEFAULT_METRICS = ("auqc", "top_uplift", "mean_score")
DEFAULT_SCORERS = ("transformed_outcome", "outcome_rate", "t_learner")
DEFAULT_REPS = 20


def resolve_seed(value: Optional[int]) -> int:
    if value is not None:
        return value
    raw = os.environ.get(SEED_ENV)
    if raw is None or raw.strip() == "":
        return 0
    try:
        return int(raw)
    except ValueError:
        raise InvalidConfig(f"{SEED_ENV}={raw!r} is not an integer") from None


def _ensure_dir(path):
    try:
        os.makedirs(path, exist_ok=True)
    except OSError as exc:
        raise IoFailure(f"cannot create {path}: {exc.strerror or exc}") from exc


def _write_plot(plot, out_dir):
    """Write the SVG and PNG renderings of one plot spec."""
    from . import figures, svg
    base = os.path.join(out_dir, plot.name)
    if plot.kind == "heatmap":
        text = svg.heatmap(plot.grid, plot.row_labels, plot.col_labels, title=plot.title,
                           xlabel=plot.xlabel, ylabel=plot.ylabel)
    else:
        text = svg.line_chart(plot.series, title=plot.title, xlabel=plot.xlabel,
                              ylabel=plot.ylabel, hlines=plot.hlines, vlines=plot.vlines,
                              markers=plot.kind == "scatter")
    dataio.write_text(base + ".svg", text)
    figures.render_png(plot, base + ".png")
    return [plot.name + ".svg", plot.name + ".png"]


@dataclass
class RunManifest:
    subcommand: str
    config_path: Optional[str]
    seed: int
    out: str
    reps: Optional[int] = None
    rows: Optional[int] = None
    outputs: list = field(default_factory=list)
    extra: dict = field(default_factory=dict)

    def write(self):
        doc = {"subcommand": self.subcommand, "config_path": self.config_path,
               "seed": self.seed, "out": self.out, "reps": self.reps, "rows": self.rows,
               "outputs": sorted(self.outputs), "tool_version": __version__, **self.extra}
        dataio.write_json(doc, os.path.join(self.out, "manifest.json"))


# ---------------------------------------------------------------------------
# simulate


def cmd_simulate(args) -> int:
    seed = resolve_seed(args.seed)
    if args.config:
        doc = dataio.read_json(args.config)
        if not isinstance(doc, dict):
            raise InvalidConfig("DGP config must be a JSON object")
        config = dgp.config_from_dict(doc)
    else:
        config = dgp.FAMILIES[args.family]().validate()
    if args.rows < 1:
        raise InvalidConfig("--rows must be positive")
    data, oracle = dgp.simulate(config, args.rows, RngStream(seed))
    _ensure_dir(args.out)
    schema = dataio.write_dataset_csv(data, os.path.join(args.out, "dataset.csv"))
    dataio.write_oracle_csv(oracle, os.path.join(args.out, "oracle.csv"))
    dataio.write_json(schema.to_dict(), os.path.join(args.out, "schema.json"))
    extras = {k: np.asarray(v).tolist() for k, v in oracle.extras.items()
              if np.ndim(v) == 1 and np.shape(v)[0] != data.n}
    manifest = RunManifest("simulate", args.config, seed, args.out, rows=args.rows,
                           outputs=["dataset.csv", "oracle.csv", "schema.json"],
                           extra={"config": dgp.config_to_dict(config),
                                  "summary": data.summary(), "oracle_parameters": extras})
    manifest.write()
    print(f"wrote {data.n} rows to {args.out}")
    return 0


# ---------------------------------------------------------------------------
# evaluate

EVAL_KEYS = {"scorers", "metrics", "base_learner", "train_fraction", "top_fraction",
             "grid_points", "schema", "propensity", "outcome"}


@dataclass
class ScorerSpec:
    name: str
    kind: str
    target: str = "primary"

    @classmethod
    def parse(cls, item) -> "ScorerSpec":
        if isinstance(item, str):
            item = {"kind": item}
        if not isinstance(item, dict) or "kind" not in item:
            raise InvalidConfig(f"scorer entry {item!r} needs a 'kind'")
        unknown = set(item) - {"name", "kind", "target"}
        if unknown:
            raise InvalidConfig(f"unknown scorer fields {sorted(unknown)}")
        if item["kind"] not in KINDS:
            raise InvalidConfig(f"unknown scorer kind {item['kind']!r}; expected one of {KINDS}")
        target = item.get("target", "primary")
        if target not in ("primary", "surrogate"):
            raise InvalidConfig(f"unknown scorer target {target!r}")
        name = item.get("name") or (item["kind"] if target == "primary"
                                    else f"{item['kind']}_surrogate")
        return cls(name, item["kind"], target)


def _split_list(text):
    return [t.strip() for t in text.split(",") if t.strip()]


def _evaluation_settings(args) -> dict:
    doc = {}
    if args.config:
        doc = dataio.read_json(args.config)
        if not isinstance(doc, dict):
            raise InvalidConfig("evaluation config must be a JSON object")
        unknown = set(doc) - EVAL_KEYS
        if unknown:
            raise InvalidConfig(f"unknown evaluation config fields {sorted(unknown)}")
    s = {
        "scorers": doc.get("scorers", list(DEFAULT_SCORERS)),
        "metrics": doc.get("metrics", list(DEFAULT_METRICS)),
        "base_learner": doc.get("base_learner", {}),
        "train_fraction": doc.get("train_fraction", 0.5),
        "top_fraction": doc.get("top_fraction", 0.1),
        "grid_points": doc.get("grid_points", 100),
        "propensity": doc.get("propensity", "constant"),
        "outcome": doc.get("outcome", "conversion"),
        "schema": doc.get("schema"),
    }
    if args.scorers:
        s["scorers"] = _split_list(args.scorers)
    if args.metrics:
        s["metrics"] = _split_list(args.metrics)
    for key in ("train_fraction", "top_fraction", "grid_points", "propensity", "outcome"):
        v = getattr(args, key)
        if v is not None:
            s[key] = v
    bl = dict(s["base_learner"])
    for flag, key in (("learner", "learner"), ("trees", "tree_count"), ("depth", "max_depth")):
        v = getattr(args, flag)
        if v is not None:
            bl[key] = v
    unknown = [m for m in s["metrics"] if m not in METRICS]
    if unknown:
        raise UnknownMetric(f"unknown metric {unknown[0]!r}; expected one of {', '.join(METRICS)}")
    s["scorer_specs"] = [ScorerSpec.parse(x) for x in s["scorers"]]
    names = [sp.name for sp in s["scorer_specs"]]
    if len(set(names)) != len(names):
        raise InvalidConfig(f"scorer names are not distinct: {names}")
    s["base"] = BaseLearnerConfig.from_dict(bl)
    if not 0 < s["train_fraction"] < 1:
        raise InvalidConfig("train_fraction must lie in (0, 1)")
    if not 0 < s["top_fraction"] <= 1:
        raise InvalidConfig("top_fraction must lie in (0, 1]")
    if int(s["grid_points"]) < 1:
        raise InvalidConfig("grid_points must be positive")
    if s["propensity"] not in ("constant", "fitted"):
        raise InvalidConfig("propensity must be 'constant' or 'fitted'")
    return s


def _load_schema(args, settings):
    if args.schema:
        return dataio.CsvSchema.from_dict(dataio.read_json(args.schema))
    if settings["schema"] is not None:
        return dataio.CsvSchema.from_dict(settings["schema"])
    sibling = os.path.join(os.path.dirname(os.path.abspath(args.data)), "schema.json")
    header = dataio.read_header(args.data)
    try:
        return dataio.CsvSchema.criteo(header, settings["outcome"])
    except MissingColumn:
        if os.path.exists(sibling):
            return dataio.CsvSchema.from_dict(dataio.read_json(sibling))
        raise


def _scorer_metrics(requested, test, scores, effects, settings):
    out = {}
    grid = int(settings["grid_points"])
    curve = metrics.qini_curve(test, scores, grid)
    for name in requested:
        if name == "auqc":
            out[name] = metrics.auqc(curve, metrics.optimal_qini_curve(test, grid))
        elif name == "top_uplift":
            out[name] = metrics.top_k_uplift(test, scores, settings["top_fraction"])
        elif name == "mean_score":
            out[name] = float(np.mean(scores))
        elif name == "ate":
            out[name] = float(curve.values[-1])
        elif name == "kendall_tau":
            if effects is None:
                raise InvalidConfig("metric kendall_tau needs --oracle with true effects")
            out[name] = metrics.kendall_tau_between(scores, effects)
        elif name == "profit_argmax":
            out[name] = metrics.profit_curve(test, scores, test.n, grid).argmax()
    return out, curve


def cmd_evaluate(args) -> int:
    seed = resolve_seed(args.seed)
    reps = DEFAULT_REPS if args.reps is None else args.reps
    if reps < 1:
        raise InvalidConfig("--reps must be positive")
    settings = _evaluation_settings(args)
    schema = _load_schema(args, settings)
    data = dataio.load_csv(args.data, schema, row_limit=args.rows)
    effects = None
    if args.oracle:
        table = dataio.read_table(args.oracle)
        if "cate" not in table:
            raise MissingColumn(f"oracle file {args.oracle} has no 'cate' column")
        effects = table["cate"][: data.n]
        if effects.shape[0] != data.n:
            raise MisalignedInputs(f"oracle has {effects.shape[0]} rows, dataset {data.n}")
    train_count = int(round(settings["train_fraction"] * data.n))
    specs = settings["scorer_specs"]
    report = dataio.EvaluationReport()
    per_rep = {f"{sp.name}/{m}": [] for sp in specs for m in settings["metrics"]}
    curve_sums = {}
    for r in range(reps):
        rng = RngStream(seed, stream_id=r)
        train_idx, test_idx = dataio.split_indices(data.n, train_count, rng.substream(0))
        train, test = data.subset(train_idx), data.subset(test_idx)
        test_effects = None if effects is None else effects[test_idx]
        for sp in specs:
            model = fit(sp.kind, train, settings["base"], target=sp.target,
                        propensity=settings["propensity"])
            scores = model.predict(test.features)
            values, curve = _scorer_metrics(settings["metrics"], test, scores, test_effects,
                                            settings)
            for m, v in values.items():
                per_rep[f"{sp.name}/{m}"].append(v)
            curve_sums[sp.name] = curve_sums.get(sp.name, 0.0) + curve.values
            fractions = curve.fractions
    _ensure_dir(args.out)
    outputs = []
    for sp in specs:
        mean_curve = metrics.UpliftCurve(fractions, curve_sums[sp.name] / reps, "qini")
        report.curves[f"{sp.name}/qini"] = mean_curve
        stem = f"{sp.name}_qini"
        dataio.export_curve_csv(mean_curve, os.path.join(args.out, stem + ".csv"))
        plot = experiments.Plot(stem, "line", f"Qini curve: {sp.name}", "fraction targeted",
                                "incremental outcome",
                                series=[(sp.name, mean_curve.fractions, mean_curve.values)])
        outputs += [stem + ".csv"] + _write_plot(plot, args.out)
    report.replications = per_rep
    report.metrics = {k: float(np.mean(v)) for k, v in per_rep.items()}
    report.metrics["dataset/ate"] = float(
        data.outcome[data.treatment == 1].mean() - data.outcome[data.treatment == 0].mean())
    report.config = {
        "data": args.data, "schema": schema.to_dict(), "rows": args.rows, "seed": seed,
        "reps": reps, "stream_ids": list(range(reps)), "train_count": train_count,
        "scorers": [sp.__dict__ for sp in specs], "metrics": settings["metrics"],
        "base_learner": settings["base"].to_dict(), "top_fraction": settings["top_fraction"],
        "grid_points": settings["grid_points"], "propensity": settings["propensity"],
        "summary": data.summary(),
    }
    report.stamp()
    dataio.write_report(report, os.path.join(args.out, "report.json"))
    rows = [(k.split("/")[0], k.split("/")[1], report.metrics[k]) for k in per_rep]
    dataio.write_rows(os.path.join(args.out, "metrics.csv"), ["scorer", "metric", "mean"], rows)
    outputs += ["report.json", "metrics.csv"]
    RunManifest("evaluate", args.config, seed, args.out, reps, args.rows, outputs).write()
    for scorer, metric, value in rows:
        print(f"{scorer:>24s} {metric:>14s} {value: .6g}")
    return 0


# ---------------------------------------------------------------------------
# reproduce and check


def cmd_reproduce(args) -> int:
    seed = resolve_seed(args.seed)
    if args.reps is not None and args.reps < 1:
        raise InvalidConfig("--reps must be positive")
    if args.figure not in experiments.FIGURES:
        raise UnknownFigure(f"unknown figure {args.figure!r}; expected one of "
                            f"{', '.join(experiments.FIGURES)}")
    _ensure_dir(args.out)
    data = experiments.reproduce(args.figure, RngStream(seed), reps=args.reps)
    outputs = []
    for name, table in data.tables.items():
        dataio.write_table(os.path.join(args.out, name + ".csv"), table.header, table.columns)
        outputs.append(name + ".csv")
    for plot in data.plots:
        outputs += _write_plot(plot, args.out)
    dataio.write_json(data.summary, os.path.join(args.out, f"{args.figure}_summary.json"))
    outputs.append(f"{args.figure}_summary.json")
    RunManifest("reproduce", None, seed, args.out, args.reps, None, outputs,
                extra={"figure": args.figure}).write()
    for k, v in data.summary.items():
        if isinstance(v, (int, float, bool, str)):
            print(f"{k}: {v}")
    return 0


def _column(path, name):
    table = dataio.read_table(path)
    if name is None:
        name = next(iter(table))
    if name not in table:
        raise MissingColumn(f"{path} has no column {name!r}")
    return table[name]


def cmd_check(args) -> int:
    theta = _column(args.scores, args.score_column)
    beta = _column(args.effects, args.effect_column)
    if theta.shape != beta.shape:
        raise MisalignedInputs(f"{theta.shape[0]} scores but {beta.shape[0]} effects")
    taus = args.tau if args.tau else [float(np.median(beta))]
    verdicts = {"ee": interpret.check_ee(theta, beta, args.atol),
                "eo": interpret.check_eo(theta, beta)}
    for t in taus:
        verdicts[f"ec@{t:g}"] = interpret.check_ec(theta, beta, t)
    report = dataio.EvaluationReport(
        config={"scores": args.scores, "effects": args.effects, "taus": taus, "atol": args.atol},
        verdicts=verdicts,
        metrics={"kendall_tau": metrics.kendall_tau_between(theta, beta)}).stamp()
    if args.out:
        _ensure_dir(args.out)
        dataio.write_report(report, os.path.join(args.out, "verdicts.json"))
    for name, v in verdicts.items():
        extra = ""
        if v.threshold_interval is not None:
            extra = f" score threshold in [{v.threshold_interval[0]:.6g}, " \
                    f"{v.threshold_interval[1]:.6g})"
        print(f"{name}: {'valid' if v.valid else 'invalid'} violations={v.violations}{extra}")
    return 0


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="causalscore", description=__doc__)
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    seed_help = f"random seed (default: ${SEED_ENV}, else 0)"

    s = sub.add_parser("simulate", help="draw a synthetic experiment and its ground truth")
    s.add_argument("--config", help="DGP configuration JSON")
    s.add_argument("--family", choices=sorted(dgp.FAMILIES), default="nudge",
                   help="DGP family with default parameters when --config is absent")
    s.add_argument("--rows", type=int, default=10_000, help="number of units")
    s.add_argument("--seed", type=int, help=seed_help)
    s.add_argument("--out", required=True, help="output directory")
    s.set_defaults(func=cmd_simulate)

    e = sub.add_parser("evaluate", help="fit scorers on random splits and report metrics")
    e.add_argument("--data", required=True, help="experiment CSV")
    e.add_argument("--schema", help="CsvSchema JSON (default: Criteo layout or sibling schema.json)")
    e.add_argument("--oracle", help="oracle CSV with a 'cate' column, enables kendall_tau")
    e.add_argument("--config", help="evaluation config JSON")
    e.add_argument("--scorers", help=f"comma list from {', '.join(KINDS)}")
    e.add_argument("--metrics", help=f"comma list from {', '.join(METRICS)}")
    e.add_argument("--reps", type=int, help=f"random splits (default {DEFAULT_REPS})")
    e.add_argument("--rows", type=int, help="read at most this many data rows")
    e.add_argument("--train-fraction", dest="train_fraction", type=float)
    e.add_argument("--top-fraction", dest="top_fraction", type=float)
    e.add_argument("--grid-points", dest="grid_points", type=int)
    e.add_argument("--propensity", choices=("constant", "fitted"))
    e.add_argument("--outcome", choices=("conversion", "visit"),
                   help="Criteo outcome column (the other becomes the surrogate)")
    e.add_argument("--learner", choices=("gradient_boosted_trees", "ridge_linear"))
    e.add_argument("--trees", type=int, help="boosting rounds")
    e.add_argument("--depth", type=int, help="tree depth")
    e.add_argument("--seed", type=int, help=seed_help)
    e.add_argument("--out", required=True, help="output directory")
    e.set_defaults(func=cmd_evaluate)

    r = sub.add_parser("reproduce", help="regenerate figure data, SVG and PNG")
    r.add_argument("figure", help=f"one of {', '.join(experiments.FIGURES)}")
    r.add_argument("--reps", type=int, help="Monte Carlo replications (fig8, thm3)")
    r.add_argument("--seed", type=int, help=seed_help)
    r.add_argument("--out", required=True, help="output directory")
    r.set_defaults(func=cmd_reproduce)

    c = sub.add_parser("check", help="interpretation verdicts for scores against effects")
    c.add_argument("--scores", required=True, help="CSV holding the scores")
    c.add_argument("--effects", required=True, help="CSV holding the true effects")
    c.add_argument("--score-column", dest="score_column", help="default: first column")
    c.add_argument("--effect-column", dest="effect_column", help="default: first column")
    c.add_argument("--tau", type=float, action="append",
                   help="effect threshold for EC, repeatable (default: median effect)")
    c.add_argument("--atol", type=float, default=1e-9, help="tolerance for EE")
    c.add_argument("--out", help="directory for verdicts.json")
    c.set_defaults(func=cmd_check)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except CausalScoreError as exc:
        msg = " ".join(str(exc).split())
        print(f"causalscore: {type(exc).__name__}: {msg}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"causalscore: IoFailure: {exc}", file=sys.stderr)
        return IoFailure.exit_code


if __name__ == "__main__":
    sys.exit(main())
