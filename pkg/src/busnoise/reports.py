"""Threshold and teraquop reports built from a results store.

Outputs are a tidy CSV plus a small JSON document per report; both are pure
functions of the stored rows, so re-running a report is bit-identical.
"""

from __future__ import annotations

import csv
import io
import json
import math
from pathlib import Path

from .analysis import (AnalysisError, DataPoint, OutOfRange, bracket_threshold, fit_threshold,
                       group_by, teraquop)
from .config import ExperimentConfig
from .sweep import RESULTS_FILE, load_points

REPORT_SCHEMA = "busnoise-report/1"


def resolve_axis(config: ExperimentConfig) -> str:
    axis = config.analysis.axis
    if axis != "auto":
        return axis
    if len(config.ber) > 1:
        return "ber"
    if len(config.cer) > 1:
        return "cer"
    raise AnalysisError("cannot pick a threshold axis: both grids hold a single value")


def _select(points: list[DataPoint], config: ExperimentConfig) -> list[DataPoint]:
    keep = set(config.analysis.fit_distances) or set(config.distances)
    return [p for p in points if p.d in keep]


def _closest_values(values: list[float], centre: float, k: int) -> set[float]:
    return set(sorted(values, key=lambda v: (abs(v - centre), v))[:k])


def threshold_slice(points: list[DataPoint], axis: str, fit_points: int = 6) -> dict:
    """Bracket, then fit the ``fit_points`` scanned values nearest the bracket."""
    row: dict = {"status": "ok"}
    try:
        lo, hi = bracket_threshold(points, axis)
    except OutOfRange as e:
        return {"status": "out_of_range", "direction": e.direction, "message": str(e)}
    except AnalysisError as e:
        return {"status": "error", "message": str(e)}
    row["bracket"] = [lo, hi]
    values = list(group_by(points, axis))
    chosen = _closest_values(values, 0.5 * (lo + hi), fit_points)
    sel = [p for p in points if p.value(axis) in chosen]
    try:
        fit = fit_threshold(sel, axis)
    except AnalysisError as e:
        row.update(status="error", message=str(e))
        return row
    row["fit"] = fit.to_dict()
    row["fit_values"] = sorted(chosen)
    if not fit.converged:
        row["status"] = "not_converged"
    return row


def run_threshold(config: ExperimentConfig, store: str | Path | None = None) -> dict:
    path = Path(store) if store is not None else Path(config.output) / RESULTS_FILE
    points = _select(load_points(path, config.config_hash), config)
    if not points:
        raise AnalysisError(f"{path}: no rows for config hash {config.config_hash}")
    axis = resolve_axis(config)
    other = "cer" if axis == "ber" else "ber"
    slices = []
    for v, pts in group_by(points, other).items():
        s = threshold_slice(pts, axis, config.analysis.fit_points)
        s[other] = v
        slices.append(s)
    return {
        "schema": REPORT_SCHEMA, "kind": "threshold", "config_hash": config.config_hash,
        "input": str(path), "axis": axis, "shuttle_channel": config.shuttle_channel,
        "basis": config.basis, "distances": sorted({p.d for p in points}), "slices": slices,
    }


def threshold_rows(report: dict) -> list[dict]:
    """Phase-diagram rows: one (cer, ber) threshold point per slice."""
    axis = report["axis"]
    other = "cer" if axis == "ber" else "ber"
    out = []
    for s in report["slices"]:
        fit = s.get("fit") or {}
        out.append({
            other: s[other], "axis": axis, "status": s["status"],
            "threshold": fit.get("p_th", ""), "err_2sigma": fit.get("p_th_err_2sigma", ""),
            "nu0": fit.get("nu0", ""), "nu0_err_2sigma": fit.get("nu0_err_2sigma", ""),
            "bracket_low": s.get("bracket", ["", ""])[0], "bracket_high": s.get("bracket", ["", ""])[1],
            "shuttle_channel": report["shuttle_channel"], "config_hash": report["config_hash"],
        })
    return out


def run_teraquop(config: ExperimentConfig, store: str | Path | None = None) -> dict:
    path = Path(store) if store is not None else Path(config.output) / RESULTS_FILE
    points = _select(load_points(path, config.config_hash), config)
    if not points:
        raise AnalysisError(f"{path}: no rows for config hash {config.config_hash}")
    cells = {}
    for p in points:
        cells.setdefault((p.cer, p.ber), []).append(p)
    rows = []
    for (cer, ber), pts in sorted(cells.items()):
        row = {"cer": cer, "ber": ber, "distances": sorted(p.d for p in pts)}
        try:
            est = teraquop(pts, config.analysis.target)
        except AnalysisError as e:
            row.update(status="not_suppressing", message=str(e))
        else:
            row.update(status="ok", **est.to_dict())
        rows.append(row)
    # waterfall: per cer, counts relative to the smallest ber of that slice
    for cer in sorted({r["cer"] for r in rows}):
        series = [r for r in rows if r["cer"] == cer]
        base = next((r for r in series if r["status"] == "ok"), None)
        for r in series:
            if base is not None and r["status"] == "ok":
                r["ratio_to_lowest_ber"] = r["qubits"] / base["qubits"]
    return {
        "schema": REPORT_SCHEMA, "kind": "teraquop", "config_hash": config.config_hash,
        "input": str(path), "target": config.analysis.target,
        "shuttle_channel": config.shuttle_channel, "basis": config.basis, "cells": rows,
    }


def teraquop_rows(report: dict) -> list[dict]:
    cols = ("cer", "ber", "status", "qubits", "qubits_lower", "qubits_upper", "d_star", "slope",
            "intercept", "ratio_to_lowest_ber")
    return [{c: r.get(c, "") for c in cols} | {"shuttle_channel": report["shuttle_channel"],
                                                 "config_hash": report["config_hash"]}
            for r in report["cells"]]


def _clean(obj):
    if isinstance(obj, float) and not math.isfinite(obj):
        return None if math.isnan(obj) else ("inf" if obj > 0 else "-inf")
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    return obj


def dumps(report: dict) -> str:
    return json.dumps(_clean(report), indent=2, sort_keys=True) + "\n"


def rows_csv(rows: list[dict]) -> str:
    if not rows:
        return ""
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in r.items()})
    return buf.getvalue()


def write_report(report: dict, rows: list[dict], out_dir: str | Path, stem: str) -> tuple[Path, Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    jp, cp = out / f"{stem}.json", out / f"{stem}.csv"
    jp.write_text(dumps(report))
    cp.write_text(rows_csv(rows))
    return jp, cp
