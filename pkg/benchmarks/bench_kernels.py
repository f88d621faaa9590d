"""Compiled core against the pure-Python fallback on the two hot kernels.

    python benchmarks/bench_kernels.py [--distance 5] [--shots 4096] [--repeat 3]

Prints shots per second for frame sampling and native matching on each
backend, and checks that both backends return the same bits.
"""

import argparse
import time

import numpy as np

from busnoise import kernels
from busnoise.circuit import NoiseParams, build_memory_circuit
from busnoise.decoder import extract_graph
from busnoise.geometry import build_layout
from busnoise.simulator import as_program, sample


def best_of(repeat, fn):
    times, out = [], None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--distance", type=int, default=5)
    ap.add_argument("--shots", type=int, default=4096)
    ap.add_argument("--decode-shots", type=int, default=1024)
    ap.add_argument("--cer", type=float, default=0.003)
    ap.add_argument("--ber", type=float, default=0.003)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)

    d = args.distance
    circuit = build_memory_circuit(build_layout(d), d, "Z", NoiseParams(args.cer, args.ber))
    prog = as_program(circuit)
    graph = extract_graph(circuit)
    batch = sample(prog, args.decode_shots, 1)
    print(f"d={d} rounds={d} cer={args.cer} ber={args.ber}: {circuit.num_detectors} detectors, "
          f"{len(graph.edges)} edges")
    print(f"{'backend':<8} {'sample shots/s':>15} {'decode shots/s':>15}")
    results = {}
    for name in kernels.available():
        be = kernels.get(name)
        ts, shots = best_of(args.repeat, lambda: sample(prog, args.shots, 7, backend=be))
        td, pred = best_of(args.repeat, lambda: be.decode_packed(graph.arrays(), graph.relevant(),
                                                                 batch.detector_bits))
        results[name] = (shots, pred)
        print(f"{name:<8} {args.shots / ts:>15.0f} {args.decode_shots / td:>15.0f}")
    if len(results) == 2:
        (s1, p1), (s2, p2) = results.values()
        same = s1 == s2 and np.array_equal(p1, p2)
        print("backends agree" if same else "BACKENDS DISAGREE")
        return 0 if same else 1
    print("compiled core not built; only the fallback was timed")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
