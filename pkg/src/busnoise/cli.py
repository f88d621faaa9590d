"""Command-line entry point.

Exit codes: 0 success, 1 usage error, 2 data or validation failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import re
import sys
from pathlib import Path

import numpy as np

from . import __version__, kernels
from .analysis import AnalysisError
from .circuit import CircuitParseError, NoiseParams, build_memory_circuit, parse, serialize
from .config import PRESETS, ConfigError, load_config
from .decoder import SOLVERS, Decoder, GraphError, extract_graph
from .geometry import build_layout, validate_group
from .physics import UNITS, HardwareParams, PhysicsError, suggest_noise
from .simulator import ShotBatch, sample

EXIT_OK, EXIT_USAGE, EXIT_DATA = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def __init__(self, *a, **kw):
        kw.setdefault("allow_abbrev", False)
        super().__init__(*a, **kw)

    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _floats(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _ints(text: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


_QTY = re.compile(r"^\s*([-+0-9.eE]+)\s*([A-Za-z/]*)\s*$")


def _quantity(text: str) -> float:
    """``20us``, ``0.1um``, ``2m/s`` or a plain SI number."""
    m = _QTY.match(text)
    if not m:
        raise argparse.ArgumentTypeError(f"cannot read quantity {text!r}")
    value, unit = m.groups()
    try:
        v = float(value)
    except ValueError:
        raise argparse.ArgumentTypeError(f"cannot read quantity {text!r}") from None
    if not unit:
        return v
    if unit not in UNITS:
        raise argparse.ArgumentTypeError(f"unknown unit {unit!r} (known: {', '.join(sorted(UNITS))})")
    return v * UNITS[unit]


def _circuit_args(p):
    p.add_argument("-d", "--distance", type=int, default=3)
    p.add_argument("--rounds", type=int, default=None, help="default: d")
    p.add_argument("--basis", choices=("Z", "X"), default="Z")
    p.add_argument("--cer", type=float, default=0.0)
    p.add_argument("--ber", type=float, default=0.0)
    p.add_argument("--channel", choices=("unbiased", "biased"), default="unbiased")
    p.add_argument("--cz-source", choices=("cer", "ber"), default="cer")


def _config_args(p):
    p.add_argument("--config", type=Path, help="TOML experiment config")
    p.add_argument("--preset", choices=PRESETS)
    p.add_argument("--name")
    p.add_argument("--distances", type=_ints)
    p.add_argument("--rounds", type=int)
    p.add_argument("--cer", type=_floats)
    p.add_argument("--ber", type=_floats)
    p.add_argument("--channel", dest="shuttle_channel", choices=("unbiased", "biased"))
    p.add_argument("--basis", choices=("Z", "X"))
    p.add_argument("--shots", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--cz-source", dest="cz_error_source", choices=("cer", "ber"))
    p.add_argument("--solver", choices=SOLVERS)
    p.add_argument("-o", "--output", help="output directory")


def _load(args):
    keys = ("name", "distances", "rounds", "cer", "ber", "shuttle_channel", "basis", "shots", "seed",
            "cz_error_source", "solver", "output")
    overrides = {k: getattr(args, k) for k in keys}
    return load_config(args.config, preset_name=args.preset, overrides=overrides)


def _circuit_from_args(args):
    noise = NoiseParams(args.cer, args.ber, args.channel, args.cz_source)
    return build_memory_circuit(build_layout(args.distance), args.rounds, args.basis, noise)


def _read_circuit(path):
    try:
        return parse(Path(path).read_text())
    except OSError as e:
        raise UsageError(f"cannot read circuit: {e}") from None


def cmd_layout(args):
    layout = build_layout(args.distance)
    violations = validate_group(layout)
    if args.json:
        out = {"distance": layout.distance, "data": [list(c) for c in layout.data_coords],
               "stabilizers": [{"kind": s.kind, "ancilla": s.ancilla, "coords": list(s.coords),
                                "slots": list(s.data_support)} for s in layout.stabilizers],
               "logical_x": sorted(layout.logical_x), "logical_z": sorted(layout.logical_z),
               "violations": [str(v) for v in violations]}
        print(json.dumps(out, indent=1))
    else:
        sys.stdout.write(layout.dump())
    for v in violations:
        print(f"violation: {v}", file=sys.stderr)
    return EXIT_DATA if violations else EXIT_OK


def cmd_build_circuit(args):
    circuit = _circuit_from_args(args)
    text = serialize(circuit)
    if args.output:
        Path(args.output).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_sample(args):
    circuit = _read_circuit(args.circuit) if args.circuit else _circuit_from_args(args)
    batch = sample(circuit, args.shots, args.seed)
    if args.format == "b8":
        with open(args.output, "wb") as fh:
            batch.write(fh)
    else:
        det, obs = batch.detectors(), batch.observables()
        with open(args.output, "w") as fh:
            for dr, orow in zip(det, obs):
                fh.write("".join("1" if b else "0" for b in dr) + " " + "".join("1" if b else "0" for b in orow) + "\n")
    print(f"{batch.shots} shots, {batch.num_detectors} detectors, {batch.num_observables} observables"
          f" -> {args.output}")
    return EXIT_OK


def cmd_decode(args):
    circuit = _read_circuit(args.circuit)
    with open(args.shots, "rb") as fh:
        batch = ShotBatch.read(fh)
    graph = extract_graph(circuit)
    dec = Decoder(graph, args.solver)
    pred = dec.predict(batch)
    actual = batch.observable_masks()
    fails = int(np.count_nonzero(pred != actual))
    if args.predictions:
        Path(args.predictions).write_text("".join(f"{int(p)}\n" for p in pred))
    print(json.dumps({"shots": batch.shots, "failures": fails, "p_fail": fails / batch.shots,
                      "solver": dec.solver}))
    return EXIT_OK


def cmd_sweep(args):
    from .sweep import run_sweep

    config = _load(args)
    for w in config.fit_warnings():
        logging.getLogger("busnoise").warning(w)
    if args.dump_config:
        sys.stdout.write(config.to_toml())
        return EXIT_OK
    rep = run_sweep(config, workers=args.workers, limit=args.limit)
    print(f"{rep.store}: {rep.added} rows added, {rep.skipped} already present, {len(rep.errors)} failed")
    for key, err in rep.errors:
        print(f"  failed {key}: {err}", file=sys.stderr)
    return EXIT_OK if rep.ok else EXIT_DATA


def _report(args, kind):
    from .reports import run_teraquop, run_threshold, teraquop_rows, threshold_rows, write_report
    from .sweep import run_sweep

    config = _load(args)
    if not args.no_run:
        rep = run_sweep(config, workers=args.workers)
        if not rep.ok:
            print(f"sweep had {len(rep.errors)} failed points", file=sys.stderr)
    if kind == "threshold":
        report = run_threshold(config)
        rows = threshold_rows(report)
    else:
        report = run_teraquop(config)
        rows = teraquop_rows(report)
    jp, cp = write_report(report, rows, config.output, kind)
    sys.stdout.write(Path(cp).read_text())
    print(f"wrote {jp} and {cp}", file=sys.stderr)
    bad = [r for r in rows if r["status"] != "ok"]
    return EXIT_DATA if bad else EXIT_OK


def cmd_estimate_physics(args):
    hw = {}
    if args.config:
        hw = dict(load_config(args.config).hardware)
    for k in ("T1", "T2", "l_c", "L_s", "v", "t_idle"):
        val = getattr(args, k)
        if val is not None:
            hw[k] = val
    missing = [k for k in ("T1", "T2", "l_c", "L_s", "v") if k not in hw]
    if missing:
        raise UsageError(f"missing hardware parameters: {', '.join(missing)}")
    try:
        hp = HardwareParams(**hw)
    except (PhysicsError, TypeError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_DATA
    s = suggest_noise(hp, args.channel)
    if args.json:
        print(json.dumps(s.to_dict(), indent=1))
    else:
        print("# suggested noise block; mapping is a modelling choice, not a measurement")
        print(f"# {s.mapping}")
        print(f"# p_deph = {s.p_deph:.6g}, p_rel = {s.p_rel:.6g}")
        print(f"# idle: relaxation {s.idle_relaxation:.6g}, dephasing {s.idle_dephasing:.6g}")
        for n in s.notes:
            print(f"# warning: {n}")
        print(f'shuttle_channel = "{s.shuttle_channel}"')
        print(f"ber = [{s.ber!r}]")
    return EXIT_DATA if any("clamped" in n for n in s.notes) else EXIT_OK


def cmd_verify(args):
    from .verify import SUITES, run

    names = args.suite or list(SUITES)
    unknown = [n for n in names if n not in SUITES]
    if unknown:
        raise UsageError(f"unknown suite(s) {unknown}; available: {', '.join(SUITES)}")
    checks = run(names)
    for c in checks:
        print(f"{'PASS' if c.ok else 'FAIL'} {c.name}: {c.detail}")
    return EXIT_OK if all(c.ok for c in checks) else EXIT_DATA


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="busnoise", description=__doc__.splitlines()[0] if __doc__ else None)
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__} ({kernels.BACKEND})")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("layout", help="print the rotated-code layout")
    s.add_argument("-d", "--distance", type=int, default=3)
    s.add_argument("--json", action="store_true")
    s.set_defaults(func=cmd_layout)

    s = sub.add_parser("build-circuit", help="emit a noisy memory circuit")
    _circuit_args(s)
    s.add_argument("-o", "--output")
    s.set_defaults(func=cmd_build_circuit)

    s = sub.add_parser("sample", help="sample detector and observable bits")
    _circuit_args(s)
    s.add_argument("--circuit", help="circuit file (instead of -d/--cer/...)")
    s.add_argument("--shots", type=int, default=1000)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--format", choices=("b8", "01"), default="b8")
    s.add_argument("-o", "--output", required=True)
    s.set_defaults(func=cmd_sample)

    s = sub.add_parser("decode", help="decode a b8 shot dump")
    s.add_argument("--circuit", required=True)
    s.add_argument("--shots", required=True, help="b8 dump written by 'sample'")
    s.add_argument("--solver", choices=SOLVERS, default="native")
    s.add_argument("--predictions", help="write one predicted observable mask per line")
    s.set_defaults(func=cmd_decode)

    for name, func in (("sweep", cmd_sweep), ("threshold", None), ("teraquop", None)):
        s = sub.add_parser(name, help={"sweep": "run a (d, cer, ber) sweep into a results store",
                                       "threshold": "bracket and fit thresholds per slice",
                                       "teraquop": "teraquop qubit counts per (cer, ber)"}[name])
        _config_args(s)
        s.add_argument("--workers", type=int, help="worker processes (default: $BUSNOISE_WORKERS or 1)")
        if name == "sweep":
            s.add_argument("--limit", type=int, help="stop after this many new points")
            s.add_argument("--dump-config", action="store_true", help="print the resolved config and exit")
            s.set_defaults(func=func)
        else:
            s.add_argument("--no-run", action="store_true", help="do not sample missing points")
            s.set_defaults(func=lambda a, k=name: _report(a, k))

    s = sub.add_parser("estimate-physics", help="shuttle error probabilities from hardware numbers")
    s.add_argument("--config", type=Path, help="read the [hardware] table of a config")
    s.add_argument("--T1", type=_quantity)
    s.add_argument("--T2", type=_quantity)
    s.add_argument("--lc", dest="l_c", type=_quantity)
    s.add_argument("--Ls", dest="L_s", type=_quantity)
    s.add_argument("--velocity", dest="v", type=_quantity)
    s.add_argument("--t-idle", dest="t_idle", type=_quantity)
    s.add_argument("--channel", choices=("unbiased", "biased"), default="biased")
    s.add_argument("--json", action="store_true")
    s.set_defaults(func=cmd_estimate_physics)

    s = sub.add_parser("verify", help="run the invariant suites")
    s.add_argument("suite", nargs="*")
    s.set_defaults(func=cmd_verify)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose or args.command in ("sweep", "threshold", "teraquop")
                        else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except UsageError as e:
        print(f"busnoise: error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (ConfigError, FileNotFoundError) as e:
        print(f"busnoise: error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (AnalysisError, GraphError, CircuitParseError, ValueError) as e:
        print(f"busnoise: error: {e}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
