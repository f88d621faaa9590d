import itertools
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from busnoise import kernels
from busnoise.circuit import NoiseParams, build_memory_circuit, enumerate_fault_locations, parse
from busnoise.decoder import (BOUNDARY, WEIGHT_SCALE, Decoder, Edge, GraphError, MatchingGraph,
                              decode_batch, extract_graph, integer_weight, merge_probability, mwpm,
                              pymatching_available)
from busnoise.geometry import build_layout
from busnoise.simulator import ShotBatch, fault_signatures, inject_and_sample, sample
from busnoise.verify import _brute

BACKENDS = [kernels.get(n) for n in kernels.available()]
BACKEND_IDS = kernels.available()


def _batch_from_rows(det, obs):
    det = np.asarray(det, dtype=np.uint8)
    obs = np.asarray(obs, dtype=np.uint8)
    pad = lambda m: np.packbits(np.pad(m, ((0, 0), (0, (-m.shape[1]) % 8))), axis=1, bitorder="little")
    return ShotBatch(det.shape[0], det.shape[1], obs.shape[1], pad(det), pad(obs))


def test_integer_weights_positive():
    assert integer_weight(0.5) == 1
    assert integer_weight(0.9) == 1
    assert integer_weight(0.01) == round(math.log(99) * WEIGHT_SCALE)
    with pytest.raises(ValueError):
        integer_weight(0.0)


@given(st.floats(0, 0.5), st.floats(0, 0.5))
def test_merge_probability(p, q):
    m = merge_probability(p, q)
    assert m == pytest.approx(merge_probability(q, p))
    assert 0 <= m <= 0.5 + 1e-12
    assert merge_probability(p, 0.0) == pytest.approx(p)


def test_noiseless_graph_has_no_edges(layout3):
    g = extract_graph(build_memory_circuit(layout3, 3, "Z"))
    assert g.num_detectors == 24 and g.edges == []


def test_merge_conflict_rejected():
    c = parse("QUBITS 2\nRESET_Z 0 1\nX_FLIP(0.1) 0 1\nMEASURE_Z 0 1\nDETECTOR rec[-2] rec[-1]\nOBSERVABLE(0) rec[-2]\n")
    with pytest.raises(GraphError, match="disagree"):
        extract_graph(c)


def test_hyperedge_rejected():
    c = parse("QUBITS 1\nRESET_Z 0\nX_FLIP(0.1) 0\nMEASURE_Z 0\n"
              "DETECTOR rec[-1]\nDETECTOR rec[-1]\nDETECTOR rec[-1]\n")
    with pytest.raises(GraphError, match="3 detectors"):
        extract_graph(c)


def test_undetectable_logical_rejected():
    c = parse("QUBITS 2\nRESET_Z 0 1\nX_FLIP(0.1) 0\nMEASURE_Z 0 1\nDETECTOR rec[-1]\nOBSERVABLE(0) rec[-2]\n")
    with pytest.raises(GraphError, match="undetectable"):
        extract_graph(c)


def test_y_faults_split_into_both_subgraphs(circuit3):
    bases = np.array(circuit3.detector_bases())
    faults, det, _ = fault_signatures(circuit3)
    data = set(range(9))
    split = 0
    for f, row in zip(faults, det):
        if f.channel == "DEPOLARIZE1" and f.pauli == "Y" and f.qubits[0] in data:
            fired = np.flatnonzero(row)
            if fired.size:
                assert (bases[fired] == 0).sum() <= 2 and (bases[fired] == 1).sum() <= 2
                split += bool((bases[fired] == 0).any() and (bases[fired] == 1).any())
    assert split > 0


def test_biased_shuttle_edges_are_measurement_like(layout3):
    c = build_memory_circuit(layout3, 3, "Z", NoiseParams(0.0, 0.05, "biased"))
    g = extract_graph(c)
    info = c.detector_info()
    assert g.edges
    for e in g.edges:
        if e.v == BOUNDARY:
            continue
        (x1, y1, t1, _), (x2, y2, t2, _) = info[e.u], info[e.v]
        assert (x1, y1) == (x2, y2) and abs(t1 - t2) == 1
        assert e.observables == 0


def _tiny_graph():
    # 0 - 1 joined cheaply in the middle; both far from the boundary
    return MatchingGraph(2, 1, [Edge(0, 1, 0.1, 0), Edge(0, BOUNDARY, 1e-4, 1), Edge(1, BOUNDARY, 1e-4, 0)])


@pytest.mark.parametrize("backend", BACKENDS, ids=BACKEND_IDS)
def test_hand_instances(backend):
    g = _tiny_graph()
    r = mwpm(g, [], backend)
    assert r.matched == () and r.observables == 0 and r.weight == 0
    r = mwpm(g, [0, 1], backend)
    assert r.matched == ((0, 1),) and r.observables == 0
    assert r.weight == integer_weight(0.1)
    r = mwpm(g, [0], backend)
    assert r.matched == ((0, BOUNDARY),) and r.observables == 1


@pytest.mark.parametrize("backend", BACKENDS, ids=BACKEND_IDS)
def test_pairing_through_a_fired_node(backend):
    # star: fired centre 3 and fired leaves 0, 1, 2, all far from the boundary,
    # so two leaves must be paired along a path that crosses the centre
    es = [Edge(i, 3, 0.25, 0) for i in range(3)] + [Edge(i, BOUNDARY, 1e-6, 1) for i in range(4)]
    g = MatchingGraph(4, 1, es)
    r = mwpm(g, [0, 1, 2, 3], backend)
    assert r.weight == 3 * integer_weight(0.25) == _brute(g, [0, 1, 2, 3])
    assert all(b != BOUNDARY for _, b in r.matched)


@st.composite
def random_graphs(draw):
    n = draw(st.integers(2, 10))
    edges = {}
    for i in range(n):
        if draw(st.booleans()) or i == 0:
            edges[(i, BOUNDARY)] = draw(st.floats(0.001, 0.3))
        for j in range(i + 1, n):
            if draw(st.integers(0, 2)) == 0:
                edges[(i, j)] = draw(st.floats(0.001, 0.3))
    for i in range(1, n):  # keep every node connected to something
        if not any(i in k for k in edges):
            edges[(i, BOUNDARY)] = 0.05
    obs = draw(st.lists(st.integers(0, 1), min_size=len(edges), max_size=len(edges)))
    es = [Edge(u, v, p, o) for ((u, v), p), o in zip(sorted(edges.items()), obs)]
    fired = draw(st.lists(st.integers(0, n - 1), unique=True, max_size=n))
    return MatchingGraph(n, 1, es), sorted(fired)


@pytest.mark.parametrize("backend", BACKENDS, ids=BACKEND_IDS)
@given(case=random_graphs())
def test_random_graphs_match_brute_force(backend, case):
    g, fired = case
    assert mwpm(g, fired, backend).weight == _brute(g, fired)


def test_backends_agree_on_d3_syndromes(circuit3):
    if len(BACKENDS) < 2:
        pytest.skip("compiled core not built")
    g = extract_graph(circuit3)
    b = sample(circuit3, 3000, 4)
    py = BACKENDS[0].decode_packed(g.arrays(), g.relevant(), b.detector_bits)
    cy = BACKENDS[1].decode_packed(g.arrays(), g.relevant(), b.detector_bits)
    assert np.array_equal(py, cy)


@pytest.mark.parametrize("d,basis,channel", [(3, "Z", "unbiased"), (3, "X", "biased"),
                                             (5, "Z", "unbiased"), (5, "X", "unbiased")])
def test_single_faults_always_corrected(d, basis, channel):
    c = build_memory_circuit(build_layout(d), d, basis, NoiseParams(0.001, 0.002, channel))
    g = extract_graph(c)
    _, det, obs = fault_signatures(c)
    batch = _batch_from_rows(det, obs)
    pred = Decoder(g, "native").predict(batch)
    assert np.array_equal(pred, batch.observable_masks())


def test_noiseless_batch_no_failures(layout3):
    c = build_memory_circuit(layout3, 3, "Z", NoiseParams(0.001, 0.001))
    g = extract_graph(c)
    quiet = sample(build_memory_circuit(layout3, 3, "Z"), 2000, 1)
    assert decode_batch(g, quiet) == 0


def test_dimension_mismatch_rejected(circuit3, layout5):
    g = extract_graph(circuit3)
    other = sample(build_memory_circuit(layout5, 2, "Z", NoiseParams(0.001)), 10, 1)
    with pytest.raises(ValueError):
        decode_batch(g, other)


def _round2_data_x(circuit, qubits):
    steps, t = [], 0
    for inst in circuit:
        steps.append(t)
        t += inst.name == "TICK"
    out = []
    for q in qubits:
        out.append(next(f for f in enumerate_fault_locations(circuit)
                        if f.qubits == (q,) and f.pauli == "X" and steps[f.instruction] == 10))
    return out


def test_short_chain_is_corrected():
    layout = build_layout(5)
    c = build_memory_circuit(layout, 5, "Z", NoiseParams(0.001, 0.001))
    g = extract_graph(c)
    chain = [0, 1]  # along the top row, crossing the logical Z support once
    det, obs = inject_and_sample(c, _round2_data_x(c, chain))
    assert obs.any()
    r = mwpm(g, np.flatnonzero(det))
    assert r.observables == int(obs[0])


def test_long_chain_decodes_to_minimum_weight():
    layout = build_layout(5)
    c = build_memory_circuit(layout, 5, "Z", NoiseParams(0.001, 0.001))
    g = extract_graph(c)
    det, _ = inject_and_sample(c, _round2_data_x(c, [0, 5, 10, 15]))
    fired = np.flatnonzero(det)
    assert 0 < fired.size <= 10
    assert mwpm(g, fired).weight == _brute(g, list(fired))


@pytest.mark.skipif(not pymatching_available(), reason="pymatching not installed")
def test_pymatching_cross_check():
    c = build_memory_circuit(build_layout(5), 5, "Z", NoiseParams(0.004, 0.004))
    g = extract_graph(c)
    b = sample(c, 4000, 8)
    native = Decoder(g, "native").predict(b)
    external = Decoder(g, "pymatching").predict(b)
    # the two exact solvers may break weight ties differently, nothing more
    assert np.count_nonzero(native != external) <= 0.005 * b.shots


def test_error_rate_monotone(layout3):
    def rate(cer, ber):
        c = build_memory_circuit(layout3, 3, "Z", NoiseParams(cer, ber))
        n = 20000
        return decode_batch(extract_graph(c), sample(c, n, 3)) / n, n

    for grid in ([(0.002, 0.0), (0.005, 0.0), (0.01, 0.0)], [(0.001, 0.002), (0.001, 0.01), (0.001, 0.03)]):
        rates = [rate(*p) for p in grid]
        for (a, n), (b, _) in itertools.pairwise(rates):
            se = math.sqrt((a * (1 - a) + b * (1 - b)) / n)
            assert b >= a - 3 * se


def test_graph_dump_lists_every_edge(circuit3):
    g = extract_graph(circuit3)
    text = g.dump()
    assert text.count("\nEDGE ") == len(g.edges)
    assert text.count("\nNODE ") == g.num_detectors


def test_unmerged_weights_are_never_lighter(circuit3):
    merged = {(e.u, e.v): e for e in extract_graph(circuit3).edges}
    single = {(e.u, e.v): e for e in extract_graph(circuit3, edge_merge="max").edges}
    assert merged.keys() == single.keys()
    assert all(single[k].probability <= merged[k].probability for k in merged)
    assert all(single[k].observables == merged[k].observables for k in merged)
    assert any(single[k].probability < merged[k].probability for k in merged)
    with pytest.raises(ValueError):
        extract_graph(circuit3, edge_merge="sum")
