"""Seeded, resumable parameter sweeps with a canonical CSV results store.

Every point (d, cer, ber) gets its own seed derived from the config seed and
the point key, and its shots come from counter-based batches.  The numbers in
a row therefore do not depend on scheduling, worker count or interruptions,
and the final store is rewritten in canonical order.
"""

from __future__ import annotations

import csv
import hashlib
import io
import logging
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

from . import __version__
from .analysis import DataPoint, estimate_rate
from .circuit import NoiseParams, build_memory_circuit
from .config import ExperimentConfig
from .decoder import Decoder, extract_graph, resolve_solver
from .geometry import build_layout
from .simulator import as_program, sample
from ._program import BATCH_SHOTS

log = logging.getLogger("busnoise.sweep")

SCHEMA = "busnoise-results/1"
COLUMNS = ("schema", "config_hash", "d", "rounds", "basis", "shuttle_channel", "cz_error_source",
           "cer", "ber", "shots", "failures", "p_fail", "se", "seed", "solver", "version")
CHUNK_SHOTS = 32 * BATCH_SHOTS
WORKERS_ENV = "BUSNOISE_WORKERS"
RESULTS_FILE = "results.csv"


class StoreError(ValueError):
    pass


@dataclass(frozen=True)
class Point:
    d: int
    rounds: int
    cer: float
    ber: float
    shots: int
    basis: str
    shuttle_channel: str
    cz_error_source: str
    solver: str
    seed: int
    edge_merge: str = "xor"  # not part of the store; only the merge-convention check varies it

    @property
    def key(self) -> tuple:
        return (self.basis, self.shuttle_channel, self.cz_error_source, self.cer, self.ber, self.d, self.rounds)


def point_seed(config_seed: int, d: int, rounds: int, cer: float, ber: float, channel: str, basis: str,
               cz_source: str) -> int:
    tag = f"{config_seed}|{d}|{rounds}|{float(cer)!r}|{float(ber)!r}|{channel}|{basis}|{cz_source}"
    return int.from_bytes(hashlib.sha256(tag.encode()).digest()[:8], "little") >> 1


def plan(config: ExperimentConfig) -> list[Point]:
    solver = resolve_solver(config.solver)
    pts = []
    for cer in config.cer:
        for ber in config.ber:
            for d in config.distances:
                r = config.rounds_for(d)
                seed = point_seed(config.seed, d, r, cer, ber, config.shuttle_channel, config.basis,
                                  config.cz_error_source)
                pts.append(Point(d, r, float(cer), float(ber), config.shots_for(d), config.basis,
                                 config.shuttle_channel, config.cz_error_source, solver, seed))
    return pts


def run_point(pt: Point) -> dict:
    """Sample and decode one point; returns the counts (no timing)."""
    noise = NoiseParams(pt.cer, pt.ber, pt.shuttle_channel, pt.cz_error_source)
    circuit = build_memory_circuit(build_layout(pt.d), pt.rounds, pt.basis, noise)
    graph = extract_graph(circuit, edge_merge=pt.edge_merge)
    dec = Decoder(graph, pt.solver)
    prog = as_program(circuit)
    failures = 0
    done = 0
    while done < pt.shots:
        n = min(CHUNK_SHOTS, pt.shots - done)
        batch = sample(prog, n, pt.seed, first_batch=done // BATCH_SHOTS)
        failures += dec.failures(batch)
        done += n
    return {"failures": failures}


def _work(pt: Point):
    t0 = time.perf_counter()
    try:
        out = run_point(pt)
    except Exception as e:  # isolate per point; the coordinator reports it
        return pt, None, f"{type(e).__name__}: {e}", time.perf_counter() - t0
    return pt, out["failures"], None, time.perf_counter() - t0


def make_row(config_hash: str, pt: Point, failures: int) -> dict:
    est = estimate_rate(failures, pt.shots)
    return {
        "schema": SCHEMA, "config_hash": config_hash, "d": str(pt.d), "rounds": str(pt.rounds),
        "basis": pt.basis, "shuttle_channel": pt.shuttle_channel, "cz_error_source": pt.cz_error_source,
        "cer": repr(pt.cer), "ber": repr(pt.ber), "shots": str(pt.shots), "failures": str(failures),
        "p_fail": f"{est.p_fail:.10g}", "se": f"{est.se:.10g}", "seed": str(pt.seed),
        "solver": pt.solver, "version": __version__,
    }


def row_key(row: dict) -> tuple:
    return (row["basis"], row["shuttle_channel"], row["cz_error_source"], float(row["cer"]),
            float(row["ber"]), int(row["d"]), int(row["rounds"]))


def _sort_key(row: dict) -> tuple:
    return (row["config_hash"],) + row_key(row)


def read_store(path: str | Path) -> list[dict]:
    """Rows of a results CSV; an incomplete trailing line (interrupted write) is dropped."""
    path = Path(path)
    if not path.exists():
        return []
    text = path.read_text()
    lines = text.splitlines(keepends=True)
    if lines and not lines[-1].endswith("\n"):
        log.warning("%s: dropping incomplete last line", path)
        lines = lines[:-1]
    reader = csv.DictReader(io.StringIO("".join(lines)))
    if reader.fieldnames is None:
        return []
    if tuple(reader.fieldnames) != COLUMNS:
        raise StoreError(f"{path}: unexpected columns {reader.fieldnames}")
    rows = []
    for row in reader:
        if row["schema"] != SCHEMA:
            raise StoreError(f"{path}: unknown schema version {row['schema']!r}")
        rows.append(row)
    return rows


def write_store(path: str | Path, rows: list[dict]) -> None:
    """Canonical rewrite: sorted rows, atomic replace."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=COLUMNS, lineterminator="\n")
    w.writeheader()
    for row in sorted(rows, key=_sort_key):
        w.writerow(row)
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_text(buf.getvalue())
    os.replace(tmp, path)


def _append(path: Path, row: dict) -> None:
    new = not path.exists() or path.stat().st_size == 0
    with open(path, "a", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=COLUMNS, lineterminator="\n")
        if new:
            w.writeheader()
        w.writerow(row)
        fh.flush()


def worker_count(workers: int | None = None) -> int:
    if workers is not None:
        return max(1, int(workers))
    env = os.environ.get(WORKERS_ENV)
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise ValueError(f"{WORKERS_ENV} must be an integer, got {env!r}") from None
    return 1


@dataclass
class SweepReport:
    store: Path
    added: int
    skipped: int
    errors: list[tuple[tuple, str]]

    @property
    def ok(self) -> bool:
        return not self.errors


def run_sweep(config: ExperimentConfig, *, workers: int | None = None, store: str | Path | None = None,
              limit: int | None = None) -> SweepReport:
    """Run all missing points of ``config``; ``limit`` stops after that many new points."""
    path = Path(store) if store is not None else Path(config.output) / RESULTS_FILE
    path.parent.mkdir(parents=True, exist_ok=True)
    h = config.config_hash
    rows = read_store(path)
    if path.exists():
        write_store(path, rows)  # normalise after a possible interrupted append
    done = {row_key(r) for r in rows if r["config_hash"] == h}
    todo = [p for p in plan(config) if p.key not in done]
    skipped = len(plan(config)) - len(todo)
    if limit is not None:
        todo = todo[:limit]
    nw = min(worker_count(workers), max(1, len(todo)))
    log.info("sweep %s (hash %s): %d points to run, %d already stored, %d workers",
             config.name, h, len(todo), skipped, nw)
    errors = []
    added = 0

    def handle(res):
        nonlocal added
        pt, failures, err, wall = res
        if err is not None:
            log.error("point %s failed: %s", pt.key, err)
            errors.append((pt.key, err))
            return
        _append(path, make_row(h, pt, failures))
        added += 1
        log.info("d=%d cer=%g ber=%g: %d/%d failures, %.1f s, %.0f shots/s",
                 pt.d, pt.cer, pt.ber, failures, pt.shots, wall, pt.shots / max(wall, 1e-9))

    if nw == 1:
        for pt in todo:
            handle(_work(pt))
    else:
        with ProcessPoolExecutor(max_workers=nw) as pool:
            for res in pool.map(_work, todo):
                handle(res)
    write_store(path, read_store(path))
    return SweepReport(path, added, skipped, errors)


def load_points(path: str | Path, config_hash: str | None = None) -> list[DataPoint]:
    out = []
    for r in read_store(path):
        if config_hash is not None and r["config_hash"] != config_hash:
            continue
        out.append(DataPoint(d=int(r["d"]), cer=float(r["cer"]), ber=float(r["ber"]),
                             shots=int(r["shots"]), failures=int(r["failures"])))
    return out
