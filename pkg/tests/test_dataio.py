import re

import numpy as np
import pytest

from causalscore import RngStream, make_dataset
from causalscore.dataio import (
    CsvSchema, EvaluationReport, export_curve_csv, load_csv, read_header, read_json, read_report,
    read_table, render_svg, split, split_indices, write_dataset_csv, write_json,
    write_oracle_csv, write_report,
)
from causalscore.dgp import SurrogateConfig, simulate_surrogate
from causalscore.errors import (InvalidConfig, InvalidSplitSize, IoFailure, MalformedRow,
                                MissingColumn, NonBinaryTreatment, SchemaVersionMismatch)
from causalscore.interpret import check_ec
from causalscore.metrics import UpliftCurve

CRITEO_HEADER = "f0,f1,f2,f3,f4,f5,f6,f7,f8,f9,f10,f11,treatment,conversion,visit,exposure"


def write(path, text):
    path.write_text(text)
    return path


def criteo_file(tmp_path, rows):
    lines = [CRITEO_HEADER]
    for i, (t, c, v) in enumerate(rows):
        lines.append(",".join([str(0.1 * i + j) for j in range(12)] + [str(t), str(c), str(v), "0"]))
    return write(tmp_path / "criteo.csv", "\n".join(lines) + "\n")


def test_criteo_autodiscovery(tmp_path):
    p = criteo_file(tmp_path, [(1, 0, 1), (0, 0, 0), (1, 1, 1), (1, 0, 0)])
    ds = load_csv(p)
    assert ds.n_features == 12
    assert ds.column_names[:3] == ("f0", "f1", "f2") and ds.column_names[-1] == "f11"
    assert ds.outcome.tolist() == [0, 0, 1, 0]
    assert ds.surrogate_outcome.tolist() == [1, 0, 1, 0]
    s = ds.metadata["summary"]
    assert s["treatment_rate"] == 0.75 and s["n"] == 4
    visit = load_csv(p, outcome="visit")
    assert visit.outcome.tolist() == [1, 0, 1, 0]


def test_row_limit(tmp_path):
    p = criteo_file(tmp_path, [(1, 0, 1)] * 10)
    assert load_csv(p, row_limit=3).n == 3
    with pytest.raises(InvalidConfig):
        load_csv(p, row_limit=0)


def test_explicit_schema(tmp_path):
    p = write(tmp_path / "d.csv", "a,b,t,y\n1,2,1,0.5\n3,4,0,1.5\n")
    ds = load_csv(p, CsvSchema(("b", "a"), "t", "y"))
    assert ds.features.tolist() == [[2, 1], [4, 3]]
    assert ds.surrogate_outcome is None


def test_malformed_row_line_number(tmp_path):
    p = write(tmp_path / "d.csv", "a,t,y\n1,1,0\n2,0,0\nabc,1,0\n")
    with pytest.raises(MalformedRow) as exc:
        load_csv(p, CsvSchema(("a",), "t", "y"))
    assert exc.value.line == 4
    assert "line 4" in str(exc.value)


def test_wrong_field_count(tmp_path):
    p = write(tmp_path / "d.csv", "a,t,y\n1,1,0\n2,0\n")
    with pytest.raises(MalformedRow) as exc:
        load_csv(p, CsvSchema(("a",), "t", "y"))
    assert exc.value.line == 3


def test_non_finite_line_number_after_blank_line(tmp_path):
    p = write(tmp_path / "d.csv", "a,t,y\n1,1,0\n\n2,0,nan\n")
    with pytest.raises(MalformedRow) as exc:
        load_csv(p, CsvSchema(("a",), "t", "y"))
    assert exc.value.line == 4


def test_nonbinary_treatment_in_file(tmp_path):
    p = write(tmp_path / "d.csv", "a,t,y\n1,2,0\n")
    with pytest.raises(NonBinaryTreatment):
        load_csv(p, CsvSchema(("a",), "t", "y"))


def test_missing_columns(tmp_path):
    p = write(tmp_path / "d.csv", "a,t,y\n1,1,0\n")
    with pytest.raises(MissingColumn):
        load_csv(p)
    with pytest.raises(MissingColumn):
        load_csv(p, CsvSchema(("zz",), "t", "y"))


def test_empty_and_missing_files(tmp_path):
    with pytest.raises(MalformedRow):
        load_csv(write(tmp_path / "e.csv", ""), CsvSchema(("a",), "t", "y"))
    with pytest.raises(MalformedRow):
        load_csv(write(tmp_path / "h.csv", "a,t,y\n"), CsvSchema(("a",), "t", "y"))
    with pytest.raises(IoFailure):
        load_csv(tmp_path / "absent.csv")


def test_schema_validation_and_round_trip():
    with pytest.raises(InvalidConfig):
        CsvSchema(("t",), "t", "y")
    with pytest.raises(InvalidConfig):
        CsvSchema.from_dict({"feature_columns": ["a"], "colour": "red"})
    s = CsvSchema(("a", "b"), "t", "y", "s")
    assert CsvSchema.from_dict(s.to_dict()) == s


def test_dataset_csv_round_trip(tmp_path):
    data, oracle = simulate_surrogate(SurrogateConfig(k=3), 200, RngStream(1))
    schema = write_dataset_csv(data, tmp_path / "d.csv")
    back = load_csv(tmp_path / "d.csv", schema)
    assert np.array_equal(back.features, data.features)
    assert np.array_equal(back.outcome, data.outcome)
    assert np.array_equal(back.surrogate_outcome, data.surrogate_outcome)
    write_oracle_csv(oracle, tmp_path / "o.csv")
    table = read_table(tmp_path / "o.csv")
    assert np.array_equal(table["cate"], oracle.cate)
    assert read_header(tmp_path / "o.csv")[:3] == ["cate", "cas", "latent_mean"]


def test_split_partition_and_determinism():
    ds = make_dataset(np.arange(100.0), np.arange(100) % 2, np.zeros(100))
    train, test = split(ds, 70, RngStream(3))
    assert (train.n, test.n) == (70, 30)
    assert not set(train.features[:, 0]) & set(test.features[:, 0])
    a = split_indices(100, 70, RngStream(3))
    b = split_indices(100, 70, RngStream(3))
    assert np.array_equal(a[0], b[0])
    with pytest.raises(InvalidSplitSize):
        split(ds, 100, RngStream(3))


def test_curve_csv_three_points(tmp_path):
    c = UpliftCurve(np.array([0.0, 0.5, 1.0]), np.array([0.0, 0.25, 0.1]), "qini")
    export_curve_csv(c, tmp_path / "c.csv")
    lines = (tmp_path / "c.csv").read_text().splitlines()
    assert lines == ["fraction,value", "0.0,0.0", "0.5,0.25", "1.0,0.1"]


def test_heatmap_svg_structure(tmp_path):
    grid = np.arange(25.0).reshape(5, 5) / 25
    render_svg(grid, tmp_path / "h.svg", row_labels=list("abcde"), col_labels=list("vwxyz"))
    text = (tmp_path / "h.svg").read_text()
    assert len(re.findall(r'<rect class="cell"', text)) == 25
    assert '<g class="legend">' in text and text.count("legend-step") == 10


def test_line_svg(tmp_path):
    c = UpliftCurve(np.array([0.0, 0.5, 1.0]), np.array([0.0, np.nan, 0.1]), "profit")
    render_svg(c, tmp_path / "c.svg", title="profit")
    text = (tmp_path / "c.svg").read_text()
    # the NaN point splits the series in two
    assert text.count('<polyline class="series"') == 2


def test_report_round_trip(tmp_path):
    c = UpliftCurve(np.array([0.0, 1.0]), np.array([0.0, np.nan]), "qini")
    r = EvaluationReport(config={"seed": 1}, metrics={"a": {"auqc": float("nan"), "x": np.float64(2)}},
                         curves={"a": c}, verdicts={"ec": check_ec([10, 20, 5], [2, 6, 1], 3)},
                         replications={"a": [1.0, float("inf")]}).stamp()
    write_report(r, tmp_path / "r.json")
    back = read_report(tmp_path / "r.json")
    assert back == r
    assert np.isnan(back.metrics["a"]["auqc"]) and back.replications["a"][1] == float("inf")
    assert "tool_version" in back.provenance


def test_report_version_mismatch(tmp_path):
    write_json({"format_version": 7}, tmp_path / "r.json")
    with pytest.raises(SchemaVersionMismatch):
        read_report(tmp_path / "r.json")


def test_read_json_errors(tmp_path):
    with pytest.raises(MalformedRow):
        read_json(write(tmp_path / "bad.json", "{\n  oops"))
