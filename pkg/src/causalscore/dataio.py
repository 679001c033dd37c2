"""CSV ingestion, dataset export and report persistence."""

from __future__ import annotations

import csv
import json
import math
import os
import re
from array import array
from dataclasses import dataclass, field
from datetime import datetime, timezone
from typing import Optional

import numpy as np

from . import svg
from .core import ExperimentDataset, OracleTruth, RngStream, make_dataset
from .errors import (InvalidConfig, InvalidSplitSize, IoFailure, MalformedRow, MissingColumn,
                     NonBinaryTreatment, SchemaVersionMismatch)
from .interpret import InterpretationVerdict
from .metrics import UpliftCurve

REPORT_FORMAT_VERSION = 1
CRITEO_FEATURE = re.compile(r"^f(\d+)$")
CRITEO_LABELS = ("treatment", "conversion", "visit")


def tool_version() -> str:
    from . import __version__
    return __version__


@dataclass(frozen=True)
class CsvSchema:
    feature_columns: tuple
    treatment_column: str = "treatment"
    outcome_column: str = "conversion"
    surrogate_column: Optional[str] = None

    def __post_init__(self):
        object.__setattr__(self, "feature_columns", tuple(self.feature_columns))
        names = self.columns
        if len(set(names)) != len(names):
            raise InvalidConfig(f"schema column names are not distinct: {names}")
        if not self.feature_columns:
            raise InvalidConfig("schema needs at least one feature column")

    @property
    def columns(self) -> tuple:
        extra = (self.surrogate_column,) if self.surrogate_column else ()
        return self.feature_columns + (self.treatment_column, self.outcome_column) + extra

    def to_dict(self) -> dict:
        return {"feature_columns": list(self.feature_columns),
                "treatment_column": self.treatment_column,
                "outcome_column": self.outcome_column,
                "surrogate_column": self.surrogate_column}

    @classmethod
    def from_dict(cls, d: dict) -> "CsvSchema":
        unknown = set(d) - {"feature_columns", "treatment_column", "outcome_column",
                            "surrogate_column"}
        if unknown:
            raise InvalidConfig(f"unknown schema fields: {sorted(unknown)}")
        if "feature_columns" not in d:
            raise InvalidConfig("schema must list feature_columns")
        return cls(**d)

    @classmethod
    def criteo(cls, header, outcome: str = "conversion") -> "CsvSchema":
        """Default schema for the Criteo uplift file.

        Columns ``f0, f1, ...`` are features (in numeric order). ``outcome``
        selects ``conversion`` or ``visit``; the other label becomes the
        surrogate. ``exposure`` and any other column are ignored.
        """
        header = list(header)
        missing = [c for c in CRITEO_LABELS if c not in header]
        if missing:
            raise MissingColumn(f"header lacks Criteo columns {missing}; pass an explicit schema")
        if outcome not in ("conversion", "visit"):
            raise InvalidConfig("Criteo outcome must be 'conversion' or 'visit'")
        feats = sorted((c for c in header if CRITEO_FEATURE.match(c)),
                       key=lambda c: int(CRITEO_FEATURE.match(c).group(1)))
        if not feats:
            raise MissingColumn("header has no f<k> feature columns; pass an explicit schema")
        other = "visit" if outcome == "conversion" else "conversion"
        return cls(tuple(feats), "treatment", outcome, other)


def _open_text(path, mode):
    try:
        return open(path, mode, newline="", encoding="utf-8")
    except OSError as exc:
        raise IoFailure(f"cannot open {path}: {exc.strerror or exc}") from exc


def read_header(path) -> list:
    with _open_text(path, "r") as fh:
        row = next(csv.reader(fh), None)
    if row is None:
        raise MalformedRow("file is empty; a header row is required", line=1)
    return [c.strip() for c in row]


def load_csv(path, schema: Optional[CsvSchema] = None, row_limit: Optional[int] = None,
             outcome: str = "conversion") -> ExperimentDataset:
    """Stream a delimited file into an :class:`ExperimentDataset`.

    Without ``schema`` the Criteo layout is assumed (see
    :meth:`CsvSchema.criteo`). Empty cells are rejected rather than imputed.
    Line numbers in errors are 1-based and count the header as line 1.
    """
    if row_limit is not None and row_limit < 1:
        raise InvalidConfig("row_limit must be positive")
    with _open_text(path, "r") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise MalformedRow("file is empty; a header row is required", line=1)
        header = [c.strip() for c in header]
        if schema is None:
            schema = CsvSchema.criteo(header, outcome)
        absent = [c for c in schema.columns if c not in header]
        if absent:
            raise MissingColumn(f"columns {absent} not found in header")
        pos = {c: i for i, c in enumerate(header)}
        feat_idx = [pos[c] for c in schema.feature_columns]
        t_idx = pos[schema.treatment_column]
        y_idx = pos[schema.outcome_column]
        s_idx = pos[schema.surrogate_column] if schema.surrogate_column else None
        width = len(header)
        feats, treat, out, surr = array("d"), array("b"), array("d"), array("d")
        lines = array("q")
        count = 0
        for row in reader:
            line = reader.line_num
            if not row:
                continue
            if len(row) != width:
                raise MalformedRow(f"expected {width} fields, found {len(row)}", line=line)
            try:
                feats.extend([float(row[i]) for i in feat_idx])
                t = float(row[t_idx])
                out.append(float(row[y_idx]))
                if s_idx is not None:
                    surr.append(float(row[s_idx]))
            except ValueError:
                bad = next(header[i] for i in feat_idx + [t_idx, y_idx]
                           + ([s_idx] if s_idx is not None else []) if not _is_float(row[i]))
                raise MalformedRow(f"column {bad!r} is not numeric", line=line) from None
            if t != 0.0 and t != 1.0:
                raise NonBinaryTreatment(f"treatment value {row[t_idx]!r} is not 0 or 1",
                                         line=line)
            treat.append(int(t))
            lines.append(line)
            count += 1
            if row_limit is not None and count >= row_limit:
                break
    if count == 0:
        raise MalformedRow("file has a header but no data rows", line=2)
    x = np.frombuffer(feats, dtype=float).reshape(count, len(feat_idx))
    bad = ~np.isfinite(x).all(axis=1) | ~np.isfinite(np.frombuffer(out, dtype=float))
    if s_idx is not None:
        bad |= ~np.isfinite(np.frombuffer(surr, dtype=float))
    if bad.any():
        raise MalformedRow("non-finite value", line=lines[int(np.flatnonzero(bad)[0])])
    ds = make_dataset(x, np.frombuffer(treat, dtype=np.int8), np.frombuffer(out, dtype=float),
                      np.frombuffer(surr, dtype=float) if s_idx is not None else None,
                      column_names=schema.feature_columns,
                      metadata={"source": os.fspath(path), "schema": schema.to_dict()})
    summary = ds.summary()
    return make_dataset(ds.features, ds.treatment, ds.outcome, ds.surrogate_outcome,
                        column_names=ds.column_names,
                        metadata={**ds.metadata, "summary": summary})


def _is_float(text) -> bool:
    try:
        float(text)
        return True
    except ValueError:
        return False


def split_indices(n: int, train_count: int, rng: RngStream):
    if not 0 < train_count < n:
        raise InvalidSplitSize(f"train_count must lie in (0, {n}), got {train_count}")
    perm = rng.generator.permutation(n)
    return np.sort(perm[:train_count]), np.sort(perm[train_count:])


def split(dataset: ExperimentDataset, train_count: int, rng: RngStream):
    """Uniform random disjoint partition into ``(train, test)``.

    Units keep their original relative order inside each part.
    """
    train, test = split_indices(dataset.n, train_count, rng)
    return dataset.subset(train), dataset.subset(test)


# ---------------------------------------------------------------------------
# reports


def _encode(obj):
    """JSON-safe copy; non-finite floats become strings so the file stays strict JSON."""
    if isinstance(obj, dict):
        return {str(k): _encode(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_encode(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _encode(obj.tolist())
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        if math.isnan(v):
            return "NaN"
        if math.isinf(v):
            return "Infinity" if v > 0 else "-Infinity"
        return v
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


_SPECIAL = {"NaN": math.nan, "Infinity": math.inf, "-Infinity": -math.inf}


def _decode(obj):
    if isinstance(obj, dict):
        return {k: _decode(v) for k, v in obj.items()}
    if isinstance(obj, list):
        return [_decode(v) for v in obj]
    if isinstance(obj, str) and obj in _SPECIAL:
        return _SPECIAL[obj]
    return obj


@dataclass
class EvaluationReport:
    config: dict = field(default_factory=dict)
    metrics: dict = field(default_factory=dict)
    curves: dict = field(default_factory=dict)
    verdicts: dict = field(default_factory=dict)
    replications: dict = field(default_factory=dict)
    provenance: dict = field(default_factory=dict)

    def stamp(self) -> "EvaluationReport":
        self.provenance = {"tool_version": tool_version(),
                           "timestamp": datetime.now(timezone.utc).isoformat(timespec="seconds")}
        return self

    def to_dict(self) -> dict:
        return _encode({
            "format_version": REPORT_FORMAT_VERSION,
            "config": self.config,
            "metrics": self.metrics,
            "curves": {k: c.to_dict() for k, c in self.curves.items()},
            "verdicts": {k: v.to_dict() for k, v in self.verdicts.items()},
            "replications": self.replications,
            "provenance": self.provenance,
        })

    @classmethod
    def from_dict(cls, d: dict) -> "EvaluationReport":
        if d.get("format_version") != REPORT_FORMAT_VERSION:
            raise SchemaVersionMismatch(
                f"report format_version {d.get('format_version')!r} != {REPORT_FORMAT_VERSION}")
        d = _decode(d)
        return cls(config=d.get("config", {}), metrics=d.get("metrics", {}),
                   curves={k: UpliftCurve.from_dict(c) for k, c in d.get("curves", {}).items()},
                   verdicts={k: InterpretationVerdict.from_dict(v)
                             for k, v in d.get("verdicts", {}).items()},
                   replications=d.get("replications", {}),
                   provenance=d.get("provenance", {}))

    def content(self) -> dict:
        """Serialized form without the timestamp, for determinism checks."""
        d = self.to_dict()
        d["provenance"] = {k: v for k, v in d["provenance"].items() if k != "timestamp"}
        return d

    def __eq__(self, other):
        if not isinstance(other, EvaluationReport):
            return NotImplemented
        return self.content() == other.content()


def write_json(obj, path):
    text = json.dumps(_encode(obj), indent=2, sort_keys=True, allow_nan=False) + "\n"
    try:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc.strerror or exc}") from exc


def read_json(path):
    with _open_text(path, "r") as fh:
        try:
            return _decode(json.load(fh))
        except json.JSONDecodeError as exc:
            raise MalformedRow(f"invalid JSON: {exc.msg}", line=exc.lineno) from None


def write_report(report: EvaluationReport, path):
    write_json(report.to_dict(), path)


def read_report(path) -> EvaluationReport:
    with _open_text(path, "r") as fh:
        try:
            d = json.load(fh)
        except json.JSONDecodeError as exc:
            raise MalformedRow(f"invalid JSON: {exc.msg}", line=exc.lineno) from None
    return EvaluationReport.from_dict(d)


# ---------------------------------------------------------------------------
# delimited exports


def _cell(v) -> str:
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return "" if math.isnan(v) else repr(v)
    if isinstance(v, (np.integer,)):
        return str(int(v))
    return str(v)


def write_table(path, header, columns):
    """Write equal-length columns as CSV; floats use ``repr`` so they round-trip."""
    n = {len(c) for c in columns}
    if len(n) > 1:
        raise ValueError("columns differ in length")
    try:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            for row in zip(*columns):
                w.writerow([_cell(v) for v in row])
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc.strerror or exc}") from exc


def write_rows(path, header, rows):
    write_table(path, header, list(zip(*rows)) if rows else [[] for _ in header])


def read_table(path) -> dict:
    """Read a numeric CSV into ``{column: float array}``; empty cells become NaN."""
    with _open_text(path, "r") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise MalformedRow("file is empty; a header row is required", line=1)
        header = [h.strip() for h in header]
        cols = [array("d") for _ in header]
        for row in reader:
            if not row:
                continue
            if len(row) != len(header):
                raise MalformedRow(f"expected {len(header)} fields, found {len(row)}",
                                   line=reader.line_num)
            for c, v in zip(cols, row):
                try:
                    c.append(float(v) if v != "" else math.nan)
                except ValueError:
                    raise MalformedRow(f"value {v!r} is not numeric",
                                       line=reader.line_num) from None
    return {h: np.frombuffer(c, dtype=float).copy() for h, c in zip(header, cols)}


def export_curve_csv(curve: UpliftCurve, path):
    write_table(path, ["fraction", "value"], [curve.fractions, curve.values])


def write_dataset_csv(dataset: ExperimentDataset, path) -> CsvSchema:
    """Write features, treatment, outcome and surrogate; returns the matching schema."""
    names = list(dataset.column_names)
    cols = [dataset.features[:, j] for j in range(dataset.n_features)]
    header = names + ["treatment", "outcome"]
    cols += [dataset.treatment, dataset.outcome]
    surrogate = None
    if dataset.surrogate_outcome is not None:
        header.append("surrogate")
        cols.append(dataset.surrogate_outcome)
        surrogate = "surrogate"
    write_table(path, header, cols)
    return CsvSchema(tuple(names), "treatment", "outcome", surrogate)


def write_oracle_csv(oracle: OracleTruth, path):
    header = ["cate", "cas", "latent_mean"]
    cols = [oracle.cate, oracle.cas, oracle.latent_mean]
    for k in sorted(oracle.extras):
        v = np.asarray(oracle.extras[k])
        if v.ndim == 1 and v.shape[0] == oracle.n:
            header.append(k)
            cols.append(v)
        elif v.ndim == 2 and v.shape[0] == oracle.n:
            for j in range(v.shape[1]):
                header.append(f"{k}{j + 1}")
                cols.append(v[:, j])
    write_table(path, header, cols)


def render_svg(obj, path, **kwargs):
    """Write a curve or list of curves as a line chart, or a 2-d grid as a heatmap.

    For a grid pass ``row_labels`` and ``col_labels``.
    """
    if isinstance(obj, UpliftCurve):
        obj = [(kwargs.pop("label", obj.kind), obj)]
    if isinstance(obj, (list, tuple)) and obj and isinstance(obj[0], tuple):
        series = [(label, c.fractions, c.values) for label, c in obj]
        kwargs.setdefault("xlabel", "fraction targeted")
        kwargs.setdefault("ylabel", "value")
        text = svg.line_chart(series, **kwargs)
    else:
        text = svg.heatmap(obj, **kwargs)
    write_text(path, text)


def write_text(path, text):
    try:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc.strerror or exc}") from exc
