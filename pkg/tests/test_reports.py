import json
import math

import numpy as np

from busnoise.analysis import DataPoint, synthetic_points
from busnoise.config import AnalysisConfig, ExperimentConfig
from busnoise.reports import (dumps, resolve_axis, run_teraquop, teraquop_rows, threshold_rows, threshold_slice,
                              write_report)
from busnoise.sweep import Point, make_row, write_store

TRUE = (0.1, 4.0, 10.0, 0.03, 1.4)


def test_resolve_axis():
    assert resolve_axis(ExperimentConfig(ber=(0.01, 0.02))) == "ber"
    assert resolve_axis(ExperimentConfig(cer=(0.01, 0.02))) == "cer"
    assert resolve_axis(ExperimentConfig(analysis=AnalysisConfig(axis="cer"))) == "cer"


def test_threshold_slice_on_synthetic_data():
    pts = synthetic_points(TRUE, (7, 9, 11, 13), np.linspace(0.025, 0.037, 7), 0.005, np.random.default_rng(4))
    s = threshold_slice(pts, "ber", fit_points=6)
    assert s["status"] == "ok"
    lo, hi = s["bracket"]
    assert lo < TRUE[3] < hi
    assert len(s["fit_values"]) == 6
    assert abs(s["fit"]["p_th"] - TRUE[3]) < 1e-3


def test_threshold_slice_out_of_range():
    pts = synthetic_points(TRUE, (7, 9, 11), np.linspace(0.005, 0.01, 6), 0.005, np.random.default_rng(5))
    s = threshold_slice(pts, "ber")
    assert s["status"] == "out_of_range" and s["direction"] == "increase ber"


def test_threshold_rows_flatten():
    pts = synthetic_points(TRUE, (7, 9, 11), np.linspace(0.024, 0.036, 6), 0.005, np.random.default_rng(6))
    s = threshold_slice(pts, "ber")
    s["cer"] = 0.001
    rep = {"axis": "ber", "slices": [s], "shuttle_channel": "biased", "config_hash": "abc"}
    (row,) = threshold_rows(rep)
    assert row["cer"] == 0.001 and row["threshold"] == s["fit"]["p_th"]


def _teraquop_store(tmp_path, cfg):
    rows = []
    for ber, slope in ((0.0, -0.7), (0.01, -0.5), (0.02, 0.1)):
        for d in cfg.distances:
            shots = 10 ** 7
            k = max(1, round(min(0.4, math.exp(-1.0 + slope * d)) * shots))
            pt = Point(d, d, 0.001, ber, shots, "Z", "biased", "cer", "native", 0)
            rows.append(make_row(cfg.config_hash, pt, k))
    store = tmp_path / "r.csv"
    write_store(store, rows)
    return store


def test_teraquop_report(tmp_path):
    cfg = ExperimentConfig(distances=(5, 7, 9, 11), cer=(0.001,), ber=(0.0, 0.01, 0.02),
                           shuttle_channel="biased").validate()
    rep = run_teraquop(cfg, _teraquop_store(tmp_path, cfg))
    ok = [c for c in rep["cells"] if c["status"] == "ok"]
    bad = [c for c in rep["cells"] if c["status"] != "ok"]
    assert [c["ber"] for c in ok] == [0.0, 0.01] and [c["ber"] for c in bad] == [0.02]
    assert ok[0]["ratio_to_lowest_ber"] == 1.0
    assert ok[1]["ratio_to_lowest_ber"] > 1.0
    jp, cp = write_report(rep, teraquop_rows(rep), tmp_path / "out", "tq")
    assert json.loads(jp.read_text())["kind"] == "teraquop"
    assert cp.read_text().count("\n") == 4


def test_dumps_handles_non_finite():
    text = dumps({"a": math.nan, "b": [math.inf], "c": DataPoint(3, 0, 0, 1, 0).p_fail})
    assert json.loads(text) == {"a": None, "b": ["inf"], "c": 0.0}
