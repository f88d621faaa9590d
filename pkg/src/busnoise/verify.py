"""Quick invariant suites behind ``busnoise verify``."""

from __future__ import annotations

import heapq
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import kernels
from .circuit import NoiseParams, build_memory_circuit
from .decoder import extract_graph, mwpm
from .distance import circuit_distance
from .geometry import build_layout, validate_group
from .simulator import fault_signatures, sample
from .tableau import exact_oracle, noiseless_parities

NOISE = NoiseParams(cer=0.002, ber=0.003)


@dataclass
class Check:
    name: str
    ok: bool
    detail: str


def check_geometry() -> Check:
    bad = {d: validate_group(build_layout(d)) for d in (3, 5, 7)}
    bad = {d: v for d, v in bad.items() if v}
    return Check("geometry", not bad, "stabilizer group valid for d=3,5,7" if not bad else repr(bad))


def check_determinism() -> Check:
    for basis in "ZX":
        det, obs = noiseless_parities(build_memory_circuit(build_layout(3), 3, basis, NOISE))
        if det.any() or obs.any():
            return Check("noiseless", False, f"basis {basis}: nonzero noiseless parity")
    return Check("noiseless", True, "all detectors and observables deterministic (d=3)")


def check_oracle() -> Check:
    c = build_memory_circuit(build_layout(3), 3, "Z", NOISE)
    f, det, obs = fault_signatures(c)
    _, tdet, tobs = exact_oracle(c, f)
    bad = int(np.count_nonzero(np.any(det != tdet, axis=1) | np.any(obs != tobs, axis=1)))
    return Check("simulator-oracle", bad == 0, f"{len(f) - bad}/{len(f)} fault signatures match the tableau")


def check_backends() -> Check:
    if "cython" not in kernels.available():
        return Check("backends", True, "compiled core unavailable; only the fallback was checked")
    c = build_memory_circuit(build_layout(3), 3, "X", NOISE)
    a = sample(c, 2000, 7, backend=kernels.get("python"))
    b = sample(c, 2000, 7, backend=kernels.get("cython"))
    return Check("backends", a == b, "compiled and fallback samplers bit-identical" if a == b else "samplers differ")


def _brute(graph, fired) -> int:
    """Minimum pairing cost with boundary, via all-pairs shortest paths."""
    ptr, to, w, _, bdist, _, b = graph.arrays()
    nodes = list(fired)
    dist = {}
    for s in nodes:
        dd = {s: 0}
        h = [(0, s)]
        while h:
            d, u = heapq.heappop(h)
            if d > dd.get(u, 1 << 62) or u == b:
                continue
            for e in range(ptr[u], ptr[u + 1]):
                v, nd = int(to[e]), d + int(w[e])
                if nd < dd.get(v, 1 << 62):
                    dd[v] = nd
                    heapq.heappush(h, (nd, v))
        dist[s] = dd

    def best(rest):
        if not rest:
            return 0
        a, others = rest[0], rest[1:]
        val = int(bdist[a]) + best(others)
        for i, c in enumerate(others):
            val = min(val, dist[a].get(c, 1 << 62) + best(others[:i] + others[i + 1:]))
        return val

    return best(tuple(nodes))


def check_decoder(samples: int = 200, seed: int = 1) -> Check:
    g = extract_graph(build_memory_circuit(build_layout(3), 3, "Z", NOISE))
    rng = np.random.default_rng(seed)
    rel = np.flatnonzero(g.relevant())
    bad = 0
    for _ in range(samples):
        k = int(rng.integers(1, 9))
        fired = sorted(rng.choice(rel, size=min(k, rel.size), replace=False).tolist())
        if mwpm(g, fired).weight != _brute(g, fired):
            bad += 1
    return Check("decoder-oracle", bad == 0, f"{samples - bad}/{samples} syndromes at brute-force minimum")


def check_distance() -> Check:
    for basis in "ZX":
        r = circuit_distance(build_memory_circuit(build_layout(3), 1, basis, NOISE), 3)
        if r.distance != 3:
            return Check("distance", False, f"basis {basis}: circuit distance {r.distance}, expected 3")
    return Check("distance", True, "d=3 circuits keep full distance 3")


SUITES: dict[str, Callable[[], Check]] = {
    "geometry": check_geometry,
    "noiseless": check_determinism,
    "oracle": check_oracle,
    "backends": check_backends,
    "decoder": check_decoder,
    "distance": check_distance,
}


def run(names=None) -> list[Check]:
    names = list(names) if names else list(SUITES)
    return [SUITES[n]() for n in names]

