import math
import xml.etree.ElementTree as ET

import numpy as np
import pytest

from shadowproj import io
from shadowproj.exceptions import InputError
from shadowproj.plot import PlotSpec, emit_plot, render_svg


def test_fmt_round_trips():
    rng = np.random.default_rng(0)
    for x in rng.standard_normal(200) * 10.0 ** rng.integers(-30, 30, 200):
        assert float(io.fmt(x)) == x
    assert io.fmt(math.inf) == "inf" and io.fmt(3) == "3" and io.fmt(True) == "true"


def test_csv_and_json(tmp_path):
    io.write_csv(tmp_path / "a.csv", ["x", "y"], [[0.1, 2], [1 / 3, "s"]])
    rows = io.read_csv(tmp_path / "a.csv")
    assert float(rows[1]["x"]) == 1 / 3 and rows[1]["y"] == "s"
    io.write_json(tmp_path / "a.json", {"b": np.float64(math.inf), "a": np.arange(2)})
    assert (tmp_path / "a.json").read_text() == '{\n  "a": [\n    0,\n    1\n  ],\n  "b": "inf"\n}\n'


def test_triplets(tmp_path):
    io.write_triplets(tmp_path / "t.csv", [(0, 1, 0.25), (1, 0, 0.75)], {"rows": "x"})
    header, rows = io.read_triplets(tmp_path / "t.csv")
    assert header == {"rows": "x"} and rows == [(0, 1, 0.25), (1, 0, 0.75)]


def _parse(text):
    return ET.fromstring(text)


def test_single_series_one_polyline():
    root = _parse(render_svg(PlotSpec([("a", [1.0, 2.0], [3.0, 4.0])])))
    polys = [e for e in root.iter() if e.tag.endswith("polyline")]
    assert len(polys) == 1
    assert root.get("width") == "640" and root.get("height") == "480"


def test_plot_deterministic(tmp_path):
    spec = PlotSpec([("a", [1, 2, 4], [1, 0.7, 0.5])], loglog=True, guides=[(-0.5, "slope -1/2")])
    emit_plot(spec, tmp_path / "a.svg")
    emit_plot(spec, tmp_path / "b.svg")
    assert (tmp_path / "a.svg").read_bytes() == (tmp_path / "b.svg").read_bytes()


def test_guide_line_annotated():
    spec = PlotSpec([("rate", [50, 100, 200, 400], [0.2, 0.15, 0.1, 0.07])], loglog=True,
                    guides=[(-0.5, "slope -1/2")])
    root = _parse(render_svg(spec))
    guides = [e for e in root.iter() if e.tag.endswith("line") and e.get("class") == "guide"]
    assert len(guides) == 1 and float(guides[0].get("data-slope")) == -0.5
    texts = [e.text for e in root.iter() if e.tag.endswith("text")]
    assert "slope -1/2" in texts
    # the drawn segment really has slope -1/2 in decade units
    x1, y1, x2, y2 = (float(guides[0].get(k)) for k in ("x1", "y1", "x2", "y2"))
    assert x2 > x1 and y2 > y1


def test_plot_errors():
    with pytest.raises(InputError):
        render_svg(PlotSpec([]))
    with pytest.raises(InputError):
        render_svg(PlotSpec([("a", [1.0], [1.0, 2.0])]))
    with pytest.raises(InputError):
        render_svg(PlotSpec([("a", [1.0, 2.0], [math.nan, 2.0])]))
