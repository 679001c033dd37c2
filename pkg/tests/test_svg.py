import numpy as np
import pytest

from causalscore.svg import heatmap, line_chart, nice_ticks, ramp_colour


def test_nice_ticks():
    assert np.allclose(nice_ticks(0, 1), [0, 0.2, 0.4, 0.6, 0.8, 1.0])
    assert nice_ticks(2, 2) == [2]
    assert nice_ticks(float("nan"), 1) == []


def test_ramp_colour_ends():
    assert ramp_colour(0.0) == "#440154"
    assert ramp_colour(1.0) == "#fde725"
    assert ramp_colour(float("nan")) == "#cccccc"
    assert ramp_colour(-3) == ramp_colour(0.0)


def test_line_chart_is_deterministic_and_escaped():
    series = [("a<b", [0, 1, 2], [0.0, 1.0, 0.5])]
    a = line_chart(series, title="T & U")
    assert a == line_chart(series, title="T & U")
    assert "a&lt;b" in a and "T &amp; U" in a
    assert a.startswith("<?xml") and a.rstrip().endswith("</svg>")


def test_scatter_markers():
    text = line_chart([("pts", [0, 1, 2], [1, 2, 3])], markers=True)
    assert text.count('<circle class="point"') == 3


def test_heatmap_shape_check():
    with pytest.raises(ValueError):
        heatmap(np.zeros((2, 3)), ["a", "b"], ["x", "y"])


def test_heatmap_nan_cell_grey():
    text = heatmap(np.array([[0.0, np.nan], [1.0, 0.5]]), ["r0", "r1"], ["c0", "c1"])
    assert text.count('fill="#cccccc"') == 1
