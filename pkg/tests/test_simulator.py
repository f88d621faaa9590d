import io

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from busnoise import kernels
from busnoise.circuit import NoiseParams, build_memory_circuit, enumerate_fault_locations, parse
from busnoise.geometry import build_layout
from busnoise.simulator import ShotBatch, fault_signatures, inject_and_sample, sample
from busnoise.tableau import Tableau, exact_oracle

BACKENDS = kernels.available()


def _tick_index(circuit):
    """Step number of every instruction."""
    out, t = [], 0
    for inst in circuit:
        out.append(t)
        if inst.name == "TICK":
            t += 1
    return out


def _fired(circuit, faults):
    det, obs = inject_and_sample(circuit, faults)
    info = circuit.detector_info()
    return sorted(tuple(int(a) for a in info[i]) for i in np.flatnonzero(det)), obs


@pytest.mark.parametrize("backend", BACKENDS)
def test_noiseless_samples_are_zero(layout3, backend):
    c = build_memory_circuit(layout3, 3, "Z")
    b = sample(c, 3000, 11, backend=kernels.get(backend))
    assert not b.detector_bits.any() and not b.observable_bits.any()


def test_empty_forced_set(circuit3):
    det, obs = inject_and_sample(circuit3, [])
    assert not det.any() and not obs.any()


def test_unknown_fault_rejected(circuit3):
    f = enumerate_fault_locations(circuit3)[0]
    bogus = type(f)(f.instruction, f.group, f.location, f.channel, f.channel_probability, (999,), f.pauli,
                    f.probability)
    with pytest.raises(ValueError):
        inject_and_sample(circuit3, [bogus])


def test_data_x_between_rounds_fires_adjacent_z_checks():
    layout = build_layout(5)
    c = build_memory_circuit(layout, 3, "Z", NoiseParams(0.001, 0.001))
    steps = _tick_index(c)
    q = 12  # centre data qubit
    fault = next(f for f in enumerate_fault_locations(c)
                 if f.qubits == (q,) and f.pauli == "X" and steps[f.instruction] == 10)  # round-2 reset step
    fired, obs = _fired(c, [fault])
    expected = sorted((s.coords[0], s.coords[1], 1, 0) for s in layout.z_stabilizers if q in s.support)
    assert len(expected) == 2
    assert fired == expected
    assert not obs.any()


def test_measurement_flip_fires_time_adjacent_pair():
    layout = build_layout(3)
    c = build_memory_circuit(layout, 4, "Z", NoiseParams(0.001, 0.001))
    steps = _tick_index(c)
    for s in layout.stabilizers:
        flips = [f for f in enumerate_fault_locations(c)
                 if f.channel == "X_FLIP" and f.qubits == (s.ancilla,) and c.instructions[f.instruction + 1].name == "MEASURE_Z"]
        f = next(f for f in flips if steps[f.instruction] // 10 == 1)  # round 2
        fired, _ = _fired(c, [f])
        x, y = s.coords
        basis = 0 if s.kind == "Z" else 1
        assert fired == [(x, y, 1, basis), (x, y, 2, basis)]


def test_z_before_measurement_is_silent(circuit3, layout3):
    faults = enumerate_fault_locations(circuit3)
    for s in layout3.z_stabilizers:
        before = [f for f in faults if f.qubits == (s.ancilla,) and f.pauli == "Z"
                  and circuit3.instructions[f.instruction + 1].name in ("IDLE_MARK", "TICK", "X_FLIP")
                  and any(i.name == "MEASURE_Z" and s.ancilla in i.targets
                          for i in circuit3.instructions[f.instruction + 1:f.instruction + 6])]
        assert before
        for f in before:
            det, obs = inject_and_sample(circuit3, [f])
            assert not det.any() and not obs.any()


def test_sampling_is_reproducible(circuit3):
    a = sample(circuit3, 5000, 42)
    b = sample(circuit3, 5000, 42)
    assert a == b
    assert a.to_bytes() == b.to_bytes()
    assert sample(circuit3, 5000, 43) != a


def test_batches_are_order_independent(circuit3):
    whole = sample(circuit3, 4096, 9)
    tail = sample(circuit3, 2048, 9, first_batch=2)
    assert np.array_equal(whole.detector_bits[2048:], tail.detector_bits)
    assert np.array_equal(whole.observable_bits[2048:], tail.observable_bits)


@pytest.mark.skipif("cython" not in BACKENDS, reason="compiled core not built")
@pytest.mark.parametrize("basis,channel", [("Z", "unbiased"), ("X", "biased")])
def test_backends_bit_identical(layout3, basis, channel):
    c = build_memory_circuit(layout3, 3, basis, NoiseParams(0.01, 0.02, channel))
    py, cy = kernels.get("python"), kernels.get("cython")
    assert sample(c, 3000, 5, backend=py) == sample(c, 3000, 5, backend=cy)
    _, d1, o1 = fault_signatures(c, backend=py)
    _, d2, o2 = fault_signatures(c, backend=cy)
    assert np.array_equal(d1, d2) and np.array_equal(o1, o2)


def _location_subsets(circuit):
    faults = enumerate_fault_locations(circuit)
    by_loc = {}
    for f in faults:
        by_loc.setdefault(f.location, []).append(f)
    locs = sorted(by_loc)
    return st.lists(st.sampled_from(locs), min_size=1, max_size=8, unique=True).flatmap(
        lambda ls: st.tuples(*[st.sampled_from(by_loc[l]) for l in ls]))


_LIN_CIRCUIT = build_memory_circuit(build_layout(3), 2, "X", NoiseParams(0.01, 0.01))
_LIN_FAULTS, _LIN_DET, _LIN_OBS = fault_signatures(_LIN_CIRCUIT)
_LIN_INDEX = {(f.location, f.pauli): k for k, f in enumerate(_LIN_FAULTS)}


@given(_location_subsets(_LIN_CIRCUIT))
def test_signatures_are_linear(faults):
    det, obs = inject_and_sample(_LIN_CIRCUIT, list(faults))
    want_d = np.zeros_like(det)
    want_o = np.zeros_like(obs)
    for f in faults:
        k = _LIN_INDEX[(f.location, f.pauli)]
        want_d ^= _LIN_DET[k]
        want_o ^= _LIN_OBS[k]
    assert np.array_equal(det, want_d) and np.array_equal(obs, want_o)


def test_oracle_agrees_small_x_biased(layout3):
    c = build_memory_circuit(layout3, 2, "X", NoiseParams(0.01, 0.02, "biased"))
    f, det, obs = fault_signatures(c)
    _, tdet, tobs = exact_oracle(c, f)
    assert np.array_equal(det, tdet) and np.array_equal(obs, tobs)


def test_at_most_two_detectors_per_basis(circuit3):
    bases = np.array(circuit3.detector_bases())
    _, det, _ = exact_oracle(circuit3)
    for b in (0, 1):
        assert det[:, bases == b].sum(axis=1).max() <= 2


def _exact_fire_probability(circuit):
    """Per-detector firing probability from exact signatures of independent locations."""
    faults, det, _ = exact_oracle(circuit)
    nd = circuit.num_detectors
    per_loc = {}
    for f, row in zip(faults, det):
        acc = per_loc.setdefault(f.location, np.zeros(nd))
        acc += f.probability * row
    bias = np.ones(nd)
    for q in per_loc.values():
        bias *= 1 - 2 * q
    return (1 - bias) / 2


def test_fire_rates_match_exact_distribution(layout3):
    c = build_memory_circuit(layout3, 3, "Z", NoiseParams(cer=0.1, ber=0.0))
    p = _exact_fire_probability(c)
    shots = 100_000
    emp = sample(c, shots, 2024).detectors().mean(axis=0)
    se = np.sqrt(p * (1 - p) / shots)
    assert abs(emp.mean() - p.mean()) <= 3 * np.sqrt(np.sum(se ** 2)) / len(p)
    assert np.all(np.abs(emp - p) <= 4 * se)


def test_isolated_location_rate():
    c = parse("QUBITS 1\nRESET_Z 0\nTICK\nX_FLIP(0.01) 0\nMEASURE_Z 0\nDETECTOR rec[-1]\n")
    shots = 1_000_000
    rate = sample(c, shots, 77).detectors().mean()
    assert abs(rate - 0.01) <= 4 * np.sqrt(0.01 * 0.99 / shots)


def test_shot_dump_roundtrip(circuit3):
    b = sample(circuit3, 1500, 3)
    buf = io.BytesIO()
    b.write(buf)
    buf.seek(0)
    assert ShotBatch.read(buf) == b


def test_shot_dump_rejects_corruption(circuit3):
    raw = sample(circuit3, 100, 3).to_bytes()
    with pytest.raises(ValueError):
        ShotBatch.from_bytes(b"XXXXXXXX" + raw[8:])
    with pytest.raises(ValueError):
        ShotBatch.from_bytes(raw[:-1])


def test_sample_rejects_zero_shots(circuit3):
    with pytest.raises(ValueError):
        sample(circuit3, 0, 1)


def test_tableau_basics():
    t = Tableau(2)
    t.pauli(0, 1)
    assert t.measure(0) == 1
    assert t.measure(1) == 0
    t = Tableau(2)
    t.h(0)
    t.cnot(0, 1)  # Bell pair: outcomes agree
    assert t.measure(0) == t.measure(1)
    for flip in (0, 1):
        t = Tableau(2)
        t.h(0)
        t.h(1)
        t.cz(0, 1)  # stabilizers X0 Z1, Z0 X1
        t.h(1)  # -> X0 X1, Z0 Z1
        if flip:
            t.pauli(1, 1)
        assert t.measure(0) ^ t.measure(1) == flip
