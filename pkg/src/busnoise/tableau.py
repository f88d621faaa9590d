"""Exact stabilizer-tableau oracle (Aaronson-Gottesman) for small circuits.

Independent of the frame kernels: every elementary fault is inserted into a
full tableau simulation and the resulting detector/observable parities are
compared with the noiseless reference.  Random measurement branches are
always resolved to outcome 0, which is harmless because detectors are
deterministic parities.
"""

from __future__ import annotations

import numpy as np

from .circuit import Circuit, FaultLocation, enumerate_fault_locations

MAX_QUBITS = 60
MAX_WORK = 5 * 10 ** 8  # faults * instructions * qubits^2, rough cost model


class OracleBudgetError(RuntimeError):
    pass


class Tableau:
    def __init__(self, n: int):
        self.n = n
        self.x = np.zeros((2 * n + 1, n), dtype=bool)
        self.z = np.zeros((2 * n + 1, n), dtype=bool)
        self.r = np.zeros(2 * n + 1, dtype=bool)
        idx = np.arange(n)
        self.x[idx, idx] = True
        self.z[n + idx, idx] = True

    def copy(self) -> "Tableau":
        t = Tableau.__new__(Tableau)
        t.n = self.n
        t.x, t.z, t.r = self.x.copy(), self.z.copy(), self.r.copy()
        return t

    def h(self, a: int):
        x, z = self.x, self.z
        self.r ^= x[:, a] & z[:, a]
        tmp = x[:, a].copy()
        x[:, a] = z[:, a]
        z[:, a] = tmp

    def cnot(self, a: int, b: int):
        x, z = self.x, self.z
        self.r ^= x[:, a] & z[:, b] & ~(x[:, b] ^ z[:, a])
        x[:, b] ^= x[:, a]
        z[:, a] ^= z[:, b]

    def cz(self, a: int, b: int):
        self.h(b)
        self.cnot(a, b)
        self.h(b)

    def pauli(self, q: int, code: int):
        """Apply X (code 1), Z (2) or Y (3) to qubit ``q``."""
        flip = np.zeros_like(self.r)
        if code & 1:
            flip ^= self.z[:, q]
        if code & 2:
            flip ^= self.x[:, q]
        self.r ^= flip

    def _rowsum(self, h: int, i: int):
        x1, z1 = self.x[i].astype(np.int8), self.z[i].astype(np.int8)
        x2, z2 = self.x[h].astype(np.int8), self.z[h].astype(np.int8)
        g = np.where(
            (x1 == 1) & (z1 == 1), z2 - x2,
            np.where((x1 == 1) & (z1 == 0), z2 * (2 * x2 - 1),
                     np.where((x1 == 0) & (z1 == 1), x2 * (1 - 2 * z2), 0)),
        )
        total = 2 * int(self.r[h]) + 2 * int(self.r[i]) + int(g.sum())
        self.r[h] = (total % 4) == 2
        self.x[h] ^= self.x[i]
        self.z[h] ^= self.z[i]

    def measure(self, a: int) -> int:
        n = self.n
        stab_x = np.flatnonzero(self.x[n:2 * n, a])
        if stab_x.size:
            p = n + int(stab_x[0])
            for i in np.flatnonzero(self.x[:2 * n, a]):
                if i != p:
                    self._rowsum(int(i), p)
            self.x[p - n], self.z[p - n], self.r[p - n] = self.x[p], self.z[p], self.r[p]
            self.x[p] = False
            self.z[p] = False
            self.z[p, a] = True
            self.r[p] = False
            return 0
        s = 2 * n
        self.x[s] = False
        self.z[s] = False
        self.r[s] = False
        for i in np.flatnonzero(self.x[:n, a]):
            self._rowsum(s, n + int(i))
        return int(self.r[s])

    def reset(self, a: int):
        if self.measure(a):
            self.pauli(a, 1)


def _run(t: Tableau, circuit: Circuit, start: int, record: list[int]):
    for inst in circuit.instructions[start:]:
        name = inst.name
        if name == "RESET_Z":
            for q in inst.targets:
                t.reset(q)
        elif name == "H":
            for q in inst.targets:
                t.h(q)
        elif name == "CZ":
            for a, b in inst.groups:
                t.cz(a, b)
        elif name == "MEASURE_Z":
            for q in inst.targets:
                record.append(t.measure(q))


def _parities(circuit: Circuit, record: list[int]) -> tuple[np.ndarray, np.ndarray]:
    rec = np.array(record, dtype=np.uint8)
    det = np.array([rec[r].sum() & 1 if r else 0 for r in circuit.detector_records()], dtype=bool)
    obs = np.array([rec[r].sum() & 1 if r else 0 for r in circuit.observable_records()], dtype=bool)
    return det, obs


def reference_record(circuit: Circuit) -> list[int]:
    record: list[int] = []
    _run(Tableau(circuit.num_qubits), circuit, 0, record)
    return record


def exact_oracle(circuit: Circuit, faults: list[FaultLocation] | None = None):
    """Exact signature of every elementary fault.

    Returns ``(faults, det, obs)`` like ``simulator.fault_signatures``.
    Refuses circuits above a size budget (roughly d <= 5, rounds <= 5).
    """
    n = circuit.num_qubits
    if faults is None:
        faults = enumerate_fault_locations(circuit)
    work = len(faults) * len(circuit.instructions) * n * n
    if n > MAX_QUBITS or work > MAX_WORK:
        raise OracleBudgetError(
            f"tableau oracle refused: {n} qubits, estimated work {work:.2e} > {MAX_WORK:.0e}"
        )
    ref_det, ref_obs = _parities(circuit, reference_record(circuit))
    by_inst: dict[int, list[int]] = {}
    for k, f in enumerate(faults):
        by_inst.setdefault(f.instruction, []).append(k)

    det = np.zeros((len(faults), circuit.num_detectors), dtype=bool)
    obs = np.zeros((len(faults), circuit.num_observables), dtype=bool)
    t = Tableau(n)
    record: list[int] = []
    for k, inst in enumerate(circuit.instructions):
        for fi in by_inst.get(k, ()):
            f = faults[fi]
            if f.channel not in ("X_FLIP", "Z_FLIP", "DEPOLARIZE1", "DEPOLARIZE2"):
                raise ValueError(f"not a noise location: {f!r}")
            tf = t.copy()
            for q, letter in zip(f.qubits, f.pauli):
                code = "IXZY".index(letter)
                if code:
                    tf.pauli(q, code)
            rec = list(record)
            _run(tf, circuit, k + 1, rec)
            d, o = _parities(circuit, rec)
            det[fi] = d ^ ref_det
            obs[fi] = o ^ ref_obs
        _step(t, inst, record)
    return list(faults), det, obs


def _step(t: Tableau, inst, record: list[int]):
    _run(t, Circuit(t.n, (inst,)), 0, record)


def noiseless_parities(circuit: Circuit) -> tuple[np.ndarray, np.ndarray]:
    """Detector and observable parities of the noiseless circuit (all 0 when well formed)."""
    return _parities(circuit, reference_record(circuit))

