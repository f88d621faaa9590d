"""Flat array form of a circuit shared by the Cython and pure-Python kernels.

Random draws are counter based so that every noise location owns an
independent stream: ``u_k = mix64(stream + k * GOLDEN)`` with
``stream = mix64(batch_key ^ (loc + 1) * STREAM_MUL)`` and
``batch_key = mix64(seed + (batch + 1) * GOLDEN)``.  ``mix64`` is the
SplitMix64 finaliser.  Fault positions inside a batch are found by geometric
skipping against a fixed-point table ``T[j] = floor((1 - p)^(j+1) * 2^64)``;
the gap before the next fault is the number of table entries above ``u``.
Both backends use exactly these integer operations, so they agree bit for bit.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .circuit import Circuit, channel_components

BATCH_SHOTS = 1024

GOLDEN = 0x9E3779B97F4A7C15
STREAM_MUL = 0xD1B54A32D192ED03
MASK64 = (1 << 64) - 1

OP_RESET, OP_H, OP_CZ, OP_MEASURE, OP_XFLIP, OP_ZFLIP, OP_DEP1, OP_DEP2 = range(8)
_OPCODES = {
    "RESET_Z": OP_RESET, "H": OP_H, "CZ": OP_CZ, "MEASURE_Z": OP_MEASURE,
    "X_FLIP": OP_XFLIP, "Z_FLIP": OP_ZFLIP, "DEPOLARIZE1": OP_DEP1, "DEPOLARIZE2": OP_DEP2,
}
NCOMP = {OP_XFLIP: 1, OP_ZFLIP: 1, OP_DEP1: 3, OP_DEP2: 15}


def mix64(z: int) -> int:
    z &= MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def mix64_array(z: np.ndarray) -> np.ndarray:
    z = z.astype(np.uint64, copy=True)
    z ^= z >> np.uint64(30)
    z *= np.uint64(0xBF58476D1CE4E5B9)
    z ^= z >> np.uint64(27)
    z *= np.uint64(0x94D049BB133111EB)
    z ^= z >> np.uint64(31)
    return z


def batch_key(seed: int, batch: int) -> int:
    return mix64((seed + (batch + 1) * GOLDEN) & MASK64)


def gap_table(p: float, length: int = BATCH_SHOTS) -> np.ndarray:
    """Decreasing fixed-point survival table of the geometric gap distribution."""
    j = np.arange(1, length + 1, dtype=np.float64)
    vals = np.power(1.0 - p, j) * 2.0 ** 64
    vals = np.minimum(vals, float(2 ** 64 - 2048))
    return vals.astype(np.uint64)


@dataclass(frozen=True, eq=False)
class Program:
    num_qubits: int
    num_measurements: int
    num_detectors: int
    num_observables: int
    num_locations: int
    op_code: np.ndarray  # int32
    op_start: np.ndarray  # int64 offset into targets
    op_len: np.ndarray  # int64 number of targets
    op_loc: np.ndarray  # int64 first location id (noise ops), else -1
    op_table: np.ndarray  # int64 row of tables (noise ops), else -1
    op_prob: np.ndarray  # float64 channel probability (0 for gates)
    targets: np.ndarray  # int32
    tables: np.ndarray  # uint64 (num_tables, BATCH_SHOTS)
    det_ptr: np.ndarray
    det_rec: np.ndarray
    obs_ptr: np.ndarray
    obs_rec: np.ndarray
    loc_op: np.ndarray  # op index per location
    loc_instruction: np.ndarray  # circuit instruction index per location


def compile_program(circuit: Circuit) -> Program:
    codes, starts, lens, locs, tabs, pr = [], [], [], [], [], []
    targets: list[int] = []
    probs: dict[float, int] = {}
    loc_op: list[int] = []
    loc_inst: list[int] = []
    nloc = 0
    for k, inst in enumerate(circuit.instructions):
        code = _OPCODES.get(inst.name)
        if code is None:
            continue
        loc, tab, p = -1, -1, 0.0
        if inst.is_noise:
            p = float(inst.args[0])
            tab = probs.setdefault(p, len(probs))
            loc = nloc
            groups = len(inst.groups)
            loc_op.extend([len(codes)] * groups)
            loc_inst.extend([k] * groups)
            nloc += groups
            assert len(channel_components(inst.name)) == NCOMP[code]
        codes.append(code)
        starts.append(len(targets))
        lens.append(len(inst.targets))
        locs.append(loc)
        tabs.append(tab)
        pr.append(p)
        targets.extend(inst.targets)

    tables = np.zeros((max(len(probs), 1), BATCH_SHOTS), dtype=np.uint64)
    for p, row in probs.items():
        tables[row] = gap_table(p)

    def csr(lists):
        ptr = np.zeros(len(lists) + 1, dtype=np.int64)
        ptr[1:] = np.cumsum([len(r) for r in lists])
        flat = np.array([x for r in lists for x in r], dtype=np.int64)
        return ptr, flat

    det_ptr, det_rec = csr(circuit.detector_records())
    obs_ptr, obs_rec = csr(circuit.observable_records())
    return Program(
        num_qubits=circuit.num_qubits,
        num_measurements=circuit.num_measurements,
        num_detectors=circuit.num_detectors,
        num_observables=circuit.num_observables,
        num_locations=nloc,
        op_code=np.array(codes, dtype=np.int32),
        op_start=np.array(starts, dtype=np.int64),
        op_len=np.array(lens, dtype=np.int64),
        op_loc=np.array(locs, dtype=np.int64),
        op_table=np.array(tabs, dtype=np.int64),
        op_prob=np.array(pr, dtype=np.float64),
        targets=np.array(targets, dtype=np.int32),
        tables=tables,
        det_ptr=det_ptr,
        det_rec=det_rec,
        obs_ptr=obs_ptr,
        obs_rec=obs_rec,
        loc_op=np.array(loc_op, dtype=np.int64),
        loc_instruction=np.array(loc_inst, dtype=np.int64),
    )
