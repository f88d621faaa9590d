"""Threshold sensitivity to the parallel-edge weighting convention.

Re-decodes the unbiased bus-noise threshold grid with graph weights taken from
the single most likely mechanism per edge ("max") instead of the merged
probability ("xor", used everywhere else), then compares the two fitted
thresholds.  Same seeds, so the sampled syndromes are identical and only the
decoder weights differ.

    python acceptance/merge_check.py [config.toml]
"""

import csv
import json
import sys
from dataclasses import replace
from pathlib import Path

from busnoise.analysis import DataPoint
from busnoise.config import load_config
from busnoise.reports import dumps, threshold_slice
from busnoise.sweep import load_points, plan, run_point, run_sweep

ROOT = Path(__file__).resolve().parent
DEFAULT = ROOT / "configs" / "c2_unbiased_threshold.toml"


def main(argv):
    cfg = load_config(argv[0] if argv else DEFAULT)
    cfg = replace(cfg, output=str(ROOT.parent / cfg.output))
    run_sweep(cfg)
    merged = load_points(Path(cfg.output) / "results.csv", cfg.config_hash)

    out = Path(cfg.output) / "merge_check"
    out.mkdir(exist_ok=True)
    cache = out / "max.csv"
    done = {}
    if cache.exists():
        with open(cache) as fh:
            for r in csv.DictReader(fh):
                done[(int(r["d"]), float(r["cer"]), float(r["ber"]))] = DataPoint(
                    int(r["d"]), float(r["cer"]), float(r["ber"]), int(r["shots"]), int(r["failures"]))
    for pt in plan(cfg):
        key = (pt.d, pt.cer, pt.ber)
        if key in done:
            continue
        k = run_point(replace(pt, edge_merge="max"))["failures"]
        done[key] = DataPoint(pt.d, pt.cer, pt.ber, pt.shots, k)
        print(f"max: d={pt.d} ber={pt.ber:g}: {k}/{pt.shots}", flush=True)
        with open(cache, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["d", "cer", "ber", "shots", "failures"])
            for (d, cer, ber), p in sorted(done.items()):
                w.writerow([d, repr(cer), repr(ber), p.shots, p.failures])

    axis = "ber"
    a = threshold_slice(merged, axis, cfg.analysis.fit_points)
    b = threshold_slice(list(done.values()), axis, cfg.analysis.fit_points)
    pa, pb = a["fit"]["p_th"], b["fit"]["p_th"]
    sigma = 0.5 * (a["fit"]["p_th_err_2sigma"] ** 2 + b["fit"]["p_th_err_2sigma"] ** 2) ** 0.5
    shift = abs(pa - pb)
    result = {"config_hash": cfg.config_hash, "xor": a, "max": b, "shift": shift, "sigma_combined": sigma,
              "shift_in_sigma": shift / sigma, "within_1_sigma": shift < sigma}
    (out / "merge_check.json").write_text(dumps(result))
    print(f"threshold xor {pa:.5f}, max {pb:.5f}: shift {shift:.2e} = {shift / sigma:.2f} sigma")
    return 0


if __name__ == "__main__":
    sys.exit(main(sys.argv[1:]))
