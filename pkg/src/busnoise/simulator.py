"""Pauli-frame sampling of detection events and observable flips.

Shots are processed in batches of ``BATCH_SHOTS``; batch ``b`` of a run with
seed ``s`` draws its faults from the counter-based stream keyed by
``(s, b)``, so any split of the batches across workers reproduces the same
bits.

Raw shot dump layout (little endian)::

    magic        8 bytes  b"BUSSHOT1"
    shots        u64
    num_dets     u32
    num_obs      u32
    seed         u64
    batch_index  u64      index of the first batch
    detectors    shots * ceil(num_dets / 8) bytes, shot-major, bit i of a
                 row = detector i (LSB first)
    observables  shots * ceil(num_obs / 8) bytes, same packing
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from typing import BinaryIO, Iterable, Sequence

import numpy as np

from . import kernels
from ._program import BATCH_SHOTS, Program, compile_program
from .circuit import Circuit, FaultLocation, enumerate_fault_locations, fault_component_index

MAGIC = b"BUSSHOT1"
_HEADER = struct.Struct("<8sQIIQQ")


@dataclass(eq=False)
class ShotBatch:
    shots: int
    num_detectors: int
    num_observables: int
    detector_bits: np.ndarray  # uint8 (shots, ceil(num_detectors/8))
    observable_bits: np.ndarray  # uint8 (shots, ceil(num_observables/8))
    seed: int = 0
    batch_index: int = 0

    def __post_init__(self):
        if self.detector_bits.shape != (self.shots, (self.num_detectors + 7) // 8):
            raise ValueError("detector bit matrix does not match the declared shape")
        if self.observable_bits.shape != (self.shots, (self.num_observables + 7) // 8):
            raise ValueError("observable bit matrix does not match the declared shape")

    def detectors(self) -> np.ndarray:
        """Unpacked bool matrix (shots, num_detectors)."""
        bits = np.unpackbits(self.detector_bits, axis=1, bitorder="little")
        return bits[:, :self.num_detectors].astype(bool)

    def observables(self) -> np.ndarray:
        bits = np.unpackbits(self.observable_bits, axis=1, bitorder="little")
        return bits[:, :self.num_observables].astype(bool)

    def observable_masks(self) -> np.ndarray:
        """Observable flips of each shot as a uint64 bit mask."""
        out = np.zeros(self.shots, dtype=np.uint64)
        for k in range(self.num_observables):
            col = (self.observable_bits[:, k // 8] >> (k % 8)) & 1
            out |= col.astype(np.uint64) << np.uint64(k)
        return out

    def __eq__(self, other):
        if not isinstance(other, ShotBatch):
            return NotImplemented
        return (self.shots == other.shots and self.num_detectors == other.num_detectors
                and self.num_observables == other.num_observables
                and np.array_equal(self.detector_bits, other.detector_bits)
                and np.array_equal(self.observable_bits, other.observable_bits))

    def to_bytes(self) -> bytes:
        head = _HEADER.pack(MAGIC, self.shots, self.num_detectors, self.num_observables,
                            self.seed & ((1 << 64) - 1), self.batch_index)
        return head + self.detector_bits.tobytes() + self.observable_bits.tobytes()

    @classmethod
    def from_bytes(cls, data: bytes) -> "ShotBatch":
        if len(data) < _HEADER.size:
            raise ValueError("truncated shot dump header")
        magic, shots, nd, no, seed, bi = _HEADER.unpack_from(data)
        if magic != MAGIC:
            raise ValueError(f"bad magic {magic!r}")
        bd, bo = (nd + 7) // 8, (no + 7) // 8
        need = _HEADER.size + shots * (bd + bo)
        if len(data) != need:
            raise ValueError(f"shot dump has {len(data)} bytes, expected {need}")
        off = _HEADER.size
        det = np.frombuffer(data, dtype=np.uint8, count=shots * bd, offset=off).reshape(shots, bd)
        obs = np.frombuffer(data, dtype=np.uint8, count=shots * bo, offset=off + shots * bd).reshape(shots, bo)
        return cls(shots, nd, no, det.copy(), obs.copy(), seed, bi)

    def write(self, fh: BinaryIO) -> None:
        fh.write(self.to_bytes())

    @classmethod
    def read(cls, fh: BinaryIO) -> "ShotBatch":
        return cls.from_bytes(fh.read())


def words_to_packed(words: np.ndarray, shots: int) -> np.ndarray:
    """(rows, shot words) uint64 -> shot-major packed bytes (shots, ceil(rows/8))."""
    rows = words.shape[0]
    if rows == 0:
        return np.zeros((shots, 0), dtype=np.uint8)
    bits = np.unpackbits(np.ascontiguousarray(words).view(np.uint8), axis=1, bitorder="little")
    return np.packbits(bits[:, :shots].T, axis=1, bitorder="little")


def as_program(circuit: Circuit | Program) -> Program:
    return circuit if isinstance(circuit, Program) else compile_program(circuit)


def sample_batch(prog: Program, shots: int, seed: int, batch_index: int, backend=None) -> ShotBatch:
    """One batch of at most ``BATCH_SHOTS`` shots."""
    if not 1 <= shots <= BATCH_SHOTS:
        raise ValueError(f"batch size must be in [1, {BATCH_SHOTS}]")
    be = backend or kernels.backend
    det, obs = be.run_frames(prog, shots, seed, batch_index, None)
    return ShotBatch(shots, prog.num_detectors, prog.num_observables,
                     words_to_packed(det, shots), words_to_packed(obs, shots), seed, batch_index)


def concat(batches: Sequence[ShotBatch]) -> ShotBatch:
    first = batches[0]
    return ShotBatch(
        sum(b.shots for b in batches), first.num_detectors, first.num_observables,
        np.concatenate([b.detector_bits for b in batches]),
        np.concatenate([b.observable_bits for b in batches]),
        first.seed, first.batch_index,
    )


def sample(circuit: Circuit | Program, shots: int, seed: int, *, first_batch: int = 0, backend=None) -> ShotBatch:
    """Sample ``shots`` shots; reproducible for identical (circuit, shots, seed)."""
    if shots < 1:
        raise ValueError("shots must be >= 1")
    prog = as_program(circuit)
    batches = []
    done = 0
    b = first_batch
    while done < shots:
        n = min(BATCH_SHOTS, shots - done)
        batches.append(sample_batch(prog, n, seed, b, backend))
        done += n
        b += 1
    out = concat(batches)
    out.batch_index = first_batch
    return out


def _forced_rows(circuit: Circuit, faults: Iterable[FaultLocation], shot: int) -> list[tuple[int, int, int]]:
    valid = {(f.location, f.channel, f.qubits) for f in enumerate_fault_locations(circuit)}
    rows = []
    for f in faults:
        if (f.location, f.channel, f.qubits) not in valid:
            raise ValueError(f"unknown fault reference {f!r}")
        rows.append((f.location, shot, fault_component_index(f)))
    return rows


def inject_and_sample(circuit: Circuit, forced_faults: Iterable[FaultLocation], backend=None) -> tuple[np.ndarray, np.ndarray]:
    """Single deterministic shot with exactly ``forced_faults`` applied.

    Returns ``(detector bits, observable bits)`` as bool vectors.
    """
    prog = compile_program(circuit)
    rows = sorted(_forced_rows(circuit, forced_faults, 0))
    be = backend or kernels.backend
    det, obs = be.run_frames(prog, 1, 0, 0, np.array(rows, dtype=np.int64).reshape(-1, 3))
    return (det[:, 0] & np.uint64(1)).astype(bool), (obs[:, 0] & np.uint64(1)).astype(bool)


def fault_signatures(circuit: Circuit | Program, faults: Sequence[FaultLocation] | None = None, backend=None):
    """Detector and observable signature of every elementary fault, one fault per shot.

    Returns ``(faults, det, obs)`` with bool matrices of shape (len(faults), n).
    """
    if isinstance(circuit, Program):
        raise TypeError("fault_signatures needs the Circuit to enumerate faults")
    prog = compile_program(circuit)
    if faults is None:
        faults = enumerate_fault_locations(circuit)
    be = backend or kernels.backend
    dets, obss = [], []
    for start in range(0, len(faults), BATCH_SHOTS):
        chunk = faults[start:start + BATCH_SHOTS]
        rows = np.array([(f.location, s, fault_component_index(f)) for s, f in enumerate(chunk)],
                        dtype=np.int64).reshape(-1, 3)
        rows = rows[np.argsort(rows[:, 0], kind="stable")]
        det, obs = be.run_frames(prog, len(chunk), 0, 0, rows)
        dets.append(np.unpackbits(det.view(np.uint8), axis=1, bitorder="little")[:, :len(chunk)].T)
        obss.append(np.unpackbits(obs.view(np.uint8), axis=1, bitorder="little")[:, :len(chunk)].T)
    nd, no = prog.num_detectors, prog.num_observables
    det = np.concatenate(dets).astype(bool) if dets else np.zeros((0, nd), dtype=bool)
    obs = np.concatenate(obss).astype(bool) if obss else np.zeros((0, no), dtype=bool)
    return list(faults), det.reshape(len(faults), nd), obs.reshape(len(faults), no)
