"""Matching graph extraction and exact minimum-weight perfect matching decode."""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .circuit import Circuit, FaultLocation
from .simulator import ShotBatch, fault_signatures

# Edge weights ln((1-p)/p) are stored as integers in units of 1/WEIGHT_SCALE.
WEIGHT_SCALE = 4096
INF = 1 << 50
BOUNDARY = -1


class GraphError(ValueError):
    """The circuit's fault signatures do not fit a matching graph."""


@dataclass(frozen=True)
class Edge:
    u: int
    v: int  # BOUNDARY for boundary edges
    probability: float
    observables: int  # bit mask

    @property
    def weight(self) -> float:
        return math.log((1 - self.probability) / self.probability)

    @property
    def int_weight(self) -> int:
        return integer_weight(self.probability)


def integer_weight(p: float) -> int:
    """Integer edge weight; clamped to 1 when p >= 1/2 so every weight stays positive."""
    if p <= 0:
        raise ValueError("edge probability must be positive")
    if p >= 0.5:
        return 1
    return max(1, int(round(math.log((1 - p) / p) * WEIGHT_SCALE)))


def merge_probability(p1: float, p2: float) -> float:
    """Probability that exactly one of two independent mechanisms fires."""
    return p1 * (1 - p2) + p2 * (1 - p1)


@dataclass(eq=False)
class MatchingGraph:
    num_detectors: int
    num_observables: int
    edges: list[Edge]
    detector_bases: list[int] = field(default_factory=list)
    _arrays: tuple | None = field(default=None, repr=False)
    _relevant: np.ndarray | None = field(default=None, repr=False)

    @property
    def boundary(self) -> int:
        """Node index of the virtual boundary in the kernel arrays."""
        return self.num_detectors

    def arrays(self) -> tuple:
        """``(adj_ptr, adj_to, adj_w, adj_obs, bdist, bobs, boundary)`` for the kernels."""
        if self._arrays is None:
            self._arrays = self._build_arrays()
        return self._arrays

    def relevant(self) -> np.ndarray:
        """1 for detectors whose graph component can carry an observable flip."""
        if self._relevant is None:
            self._relevant = self._build_relevant()
        return self._relevant

    def _build_arrays(self) -> tuple:
        n = self.num_detectors
        b = n
        nbrs: list[list[tuple[int, int, int]]] = [[] for _ in range(n + 1)]
        for e in self.edges:
            v = b if e.v == BOUNDARY else e.v
            w = e.int_weight
            nbrs[e.u].append((v, w, e.observables))
            nbrs[v].append((e.u, w, e.observables))
        for lst in nbrs:
            lst.sort()
        ptr = np.zeros(n + 2, dtype=np.int64)
        ptr[1:] = np.cumsum([len(lst) for lst in nbrs])
        flat = [t for lst in nbrs for t in lst]
        to = np.array([t[0] for t in flat], dtype=np.int32)
        w = np.array([t[1] for t in flat], dtype=np.int64)
        obs = np.array([t[2] for t in flat], dtype=np.uint64)
        bdist, bobs = _boundary_paths(ptr, to, w, obs, n)
        return (ptr, to, w, obs, bdist, bobs, b)

    def _build_relevant(self) -> np.ndarray:
        n = self.num_detectors
        parent = list(range(n))

        def find(a):
            while parent[a] != a:
                parent[a] = parent[parent[a]]
                a = parent[a]
            return a

        for e in self.edges:
            if e.v != BOUNDARY:
                ra, rb = find(e.u), find(e.v)
                if ra != rb:
                    parent[ra] = rb
        hot = {find(e.u) for e in self.edges if e.observables}
        return np.array([1 if find(i) in hot else 0 for i in range(n)], dtype=np.uint8)

    def dump(self) -> str:
        """Structured text: one ``NODE`` line per detector, one ``EDGE`` line per edge."""
        lines = [f"# matching graph: {self.num_detectors} detectors, {len(self.edges)} edges,"
                 f" weight scale {WEIGHT_SCALE}"]
        for i in range(self.num_detectors):
            basis = self.detector_bases[i] if self.detector_bases else 0
            lines.append(f"NODE {i} {'ZX'[basis]}")
        for e in sorted(self.edges, key=lambda e: (e.u, e.v if e.v != BOUNDARY else 1 << 62)):
            v = "B" if e.v == BOUNDARY else str(e.v)
            lines.append(f"EDGE {e.u} {v} p={e.probability:.9g} w={e.int_weight} obs={e.observables}")
        return "\n".join(lines) + "\n"


def _boundary_paths(ptr, to, w, obs, boundary):
    """Dijkstra from the boundary: distance and observable parity of the chosen path."""
    dist = np.full(boundary + 1, INF, dtype=np.int64)
    par = np.zeros(boundary + 1, dtype=np.uint64)
    dist[boundary] = 0
    heap = [(0, boundary)]
    done = np.zeros(boundary + 1, dtype=bool)
    while heap:
        d, u = heapq.heappop(heap)
        if done[u]:
            continue
        done[u] = True
        for e in range(ptr[u], ptr[u + 1]):
            v = int(to[e])
            nd = d + int(w[e])
            if nd < dist[v]:
                dist[v] = nd
                par[v] = par[u] ^ obs[e]
                heapq.heappush(heap, (nd, v))
    return dist[:boundary].copy(), par[:boundary].copy()


def _describe(f: FaultLocation) -> str:
    return (f"fault {f.pauli} on qubits {f.qubits} ({f.channel}, instruction {f.instruction},"
            f" location {f.location})")


EDGE_MERGES = ("xor", "max")


def extract_graph(circuit: Circuit, backend=None, edge_merge: str = "xor") -> MatchingGraph:
    """Decompose every elementary fault into graph-like edges and merge parallel ones.

    A fault's detectors are split by check basis; the part in the memory basis
    carries the observable flips.  More than two detectors in one part, or an
    observable flip without any detector, is a hard error.

    ``edge_merge="xor"`` combines parallel mechanisms into the probability of an
    odd number firing; ``"max"`` keeps only the most likely one (the unmerged
    weighting, used to check that thresholds do not depend on the convention).
    """
    if edge_merge not in EDGE_MERGES:
        raise ValueError(f"edge_merge must be one of {EDGE_MERGES}, got {edge_merge!r}")
    nd = circuit.num_detectors
    bases = circuit.detector_bases()
    obs_basis = circuit.observable_basis()
    faults, det, obs = fault_signatures(circuit, backend=backend)
    acc: dict[tuple[int, int], list] = {}
    for f, drow, orow in zip(faults, det, obs):
        fired = np.flatnonzero(drow)
        mask = 0
        for k in np.flatnonzero(orow):
            mask |= 1 << int(k)
        if fired.size == 0 and mask == 0:
            continue
        for basis in (0, 1):
            part = [int(i) for i in fired if bases[i] == basis]
            pmask = mask if basis == obs_basis else 0
            if not part:
                if pmask:
                    raise GraphError(f"{_describe(f)} flips an observable without firing any"
                                     " detector of its basis (undetectable logical)")
                continue
            if len(part) > 2:
                raise GraphError(f"{_describe(f)} fires {len(part)} detectors of one basis: {part}")
            key = (part[0], part[1]) if len(part) == 2 else (part[0], BOUNDARY)
            slot = acc.get(key)
            if slot is None:
                acc[key] = [f.probability, pmask, f]
            else:
                if slot[1] != pmask:
                    raise GraphError(f"parallel edges {key} disagree on observables:"
                                     f" {_describe(slot[2])} vs {_describe(f)}")
                if edge_merge == "xor":
                    slot[0] = merge_probability(slot[0], f.probability)
                else:
                    slot[0] = max(slot[0], f.probability)
    edges = [Edge(u, v, p, m) for (u, v), (p, m, _) in acc.items() if p > 0]
    return MatchingGraph(nd, circuit.num_observables, edges, list(bases))


@dataclass(frozen=True)
class DecodeResult:
    observables: int  # predicted flip mask
    matched: tuple[tuple[int, int], ...]  # (detector, detector) or (detector, BOUNDARY)
    weight: int  # total integer weight

    @property
    def real_weight(self) -> float:
        return self.weight / WEIGHT_SCALE


def mwpm(graph: MatchingGraph, fired, backend=None) -> DecodeResult:
    """Exact boundary-aware minimum-weight perfect matching of one syndrome."""
    fired = sorted({int(f) for f in fired})
    for f in fired:
        if not 0 <= f < graph.num_detectors:
            raise ValueError(f"detector {f} out of range")
    be = backend or kernels.backend
    pred, pairs, total = be.decode_fired(graph.arrays(), fired)
    return DecodeResult(int(pred), tuple((a, b if b >= 0 else BOUNDARY) for a, b in pairs), int(total))


SOLVERS = ("native", "pymatching", "auto")


def pymatching_available() -> bool:
    try:
        import pymatching  # noqa: F401
    except ImportError:
        return False
    return True


def resolve_solver(solver: str) -> str:
    if solver not in SOLVERS:
        raise ValueError(f"unknown matching solver {solver!r}; expected one of {SOLVERS}")
    if solver == "auto":
        return "pymatching" if pymatching_available() else "native"
    if solver == "pymatching" and not pymatching_available():
        raise ImportError("solver 'pymatching' requested but the package is not installed")
    return solver


def to_pymatching(graph: MatchingGraph):
    """The same graph (same integer weights) as a ``pymatching.Matching``."""
    import pymatching

    m = pymatching.Matching()
    for e in graph.edges:
        ids = {k for k in range(max(graph.num_observables, 1)) if (e.observables >> k) & 1}
        w = e.int_weight / WEIGHT_SCALE
        if e.v == BOUNDARY:
            m.add_boundary_edge(e.u, fault_ids=ids, weight=w, error_probability=e.probability)
        else:
            m.add_edge(e.u, e.v, fault_ids=ids, weight=w, error_probability=e.probability)
    if graph.num_detectors and m.num_detectors < graph.num_detectors:
        m.ensure_num_detectors(graph.num_detectors)
    return m


class Decoder:
    """Reusable decoder: the graph plus a chosen matching solver.

    ``native`` is this package's exact blossom matcher; ``pymatching`` hands the
    identical graph to the external sparse-blossom solver for throughput.
    """

    def __init__(self, graph: MatchingGraph, solver: str = "native", backend=None):
        self.graph = graph
        self.solver = resolve_solver(solver)
        self.backend = backend or kernels.backend
        self._pm = to_pymatching(graph) if self.solver == "pymatching" and graph.edges else None
        rel = graph.relevant()
        pad = np.zeros(((graph.num_detectors + 7) // 8) * 8, dtype=np.uint8)
        pad[:graph.num_detectors] = rel
        self._rel_packed = np.packbits(pad, bitorder="little")

    def predict(self, batch: ShotBatch) -> np.ndarray:
        g = self.graph
        if batch.num_detectors != g.num_detectors or batch.num_observables != g.num_observables:
            raise ValueError(
                f"batch has {batch.num_detectors} detectors / {batch.num_observables} observables,"
                f" graph expects {g.num_detectors} / {g.num_observables}"
            )
        if not g.edges:
            return np.zeros(batch.shots, dtype=np.uint64)
        if self._pm is None:
            return self.backend.decode_packed(g.arrays(), g.relevant(), batch.detector_bits)
        dets = np.ascontiguousarray(batch.detector_bits & self._rel_packed[None, :])
        pred = self._pm.decode_batch(dets, bit_packed_shots=True, bit_packed_predictions=True)
        out = np.zeros(batch.shots, dtype=np.uint64)
        for k in range(g.num_observables):
            col = (pred[:, k // 8] >> (k % 8)) & 1
            out |= col.astype(np.uint64) << np.uint64(k)
        return out

    def failures(self, batch: ShotBatch) -> int:
        return int(np.count_nonzero(self.predict(batch) != batch.observable_masks()))


def predict(graph: MatchingGraph, batch: ShotBatch, backend=None, solver: str = "native") -> np.ndarray:
    """Predicted observable masks, one per shot."""
    return Decoder(graph, solver, backend).predict(batch)


def decode_batch(graph: MatchingGraph, batch: ShotBatch, backend=None, solver: str = "native") -> int:
    """Number of shots whose predicted observable flip differs from the actual one."""
    return Decoder(graph, solver, backend).failures(batch)
