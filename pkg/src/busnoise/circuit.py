"""Noisy memory-experiment circuits for the CZ-only syndrome schedule.

Text format (one instruction per line, ``#`` starts a comment)::

    QUBITS <n>
    NAME[(arg, arg, ...)] target target ...
    TICK

Gates: ``RESET_Z``, ``H``, ``CZ`` (targets taken in pairs), ``MEASURE_Z`` and
``IDLE_MARK`` (a no-op naming the qubits that idle in the current step).
Noise: ``X_FLIP(p)``, ``Z_FLIP(p)``, ``DEPOLARIZE1(p)``, ``DEPOLARIZE2(p)``
(pairs).  ``DETECTOR(x, y, t, b)`` and ``OBSERVABLE(k, b)`` take measurement
records as backward offsets ``rec[-k]``; ``b`` is 0 for a Z-type and 1 for an
X-type parity check.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Sequence

from .geometry import CodeLayout

GATES = ("RESET_Z", "H", "CZ", "MEASURE_Z", "IDLE_MARK")
NOISE = ("X_FLIP", "Z_FLIP", "DEPOLARIZE1", "DEPOLARIZE2")
ANNOTATIONS = ("DETECTOR", "OBSERVABLE")
ALL_NAMES = GATES + NOISE + ANNOTATIONS + ("TICK",)
PAIR_NAMES = ("CZ", "DEPOLARIZE2")

BASIS_CODE = {"Z": 0, "X": 1}
STEPS_PER_ROUND = 10


class ShuttleChannel(str, Enum):
    UNBIASED = "unbiased"  # single-qubit depolarizing
    BIASED = "biased"  # pure dephasing


@dataclass(frozen=True)
class NoiseParams:
    cer: float = 0.0
    ber: float = 0.0
    shuttle_channel: ShuttleChannel = ShuttleChannel.UNBIASED
    # Probability driving the post-CZ two-qubit channel: "cer" or "ber".
    cz_error_source: str = "cer"

    def __post_init__(self):
        for name in ("cer", "ber"):
            p = getattr(self, name)
            if not (isinstance(p, (int, float)) and 0.0 <= p < 1.0):
                raise ValueError(f"{name} must be a probability in [0, 1), got {p!r}")
        object.__setattr__(self, "shuttle_channel", ShuttleChannel(self.shuttle_channel))
        if self.cz_error_source not in ("cer", "ber"):
            raise ValueError(f"cz_error_source must be 'cer' or 'ber', got {self.cz_error_source!r}")

    @property
    def cz_probability(self) -> float:
        return self.cer if self.cz_error_source == "cer" else self.ber


@dataclass(frozen=True)
class Instruction:
    name: str
    targets: tuple[int, ...] = ()
    args: tuple[float, ...] = ()

    @property
    def is_noise(self) -> bool:
        return self.name in NOISE

    @property
    def groups(self) -> list[tuple[int, ...]]:
        """Target groups: pairs for two-qubit instructions, singletons otherwise."""
        if self.name in PAIR_NAMES:
            return [self.targets[i:i + 2] for i in range(0, len(self.targets), 2)]
        return [(t,) for t in self.targets]


@dataclass(frozen=True)
class Circuit:
    num_qubits: int
    instructions: tuple[Instruction, ...] = field(default_factory=tuple)

    def __iter__(self):
        return iter(self.instructions)

    def __len__(self) -> int:
        return len(self.instructions)

    @property
    def num_measurements(self) -> int:
        return sum(len(i.targets) for i in self.instructions if i.name == "MEASURE_Z")

    @property
    def num_detectors(self) -> int:
        return sum(1 for i in self.instructions if i.name == "DETECTOR")

    @property
    def num_observables(self) -> int:
        idx = [int(i.args[0]) for i in self.instructions if i.name == "OBSERVABLE"]
        return max(idx) + 1 if idx else 0

    @property
    def num_ticks(self) -> int:
        return sum(1 for i in self.instructions if i.name == "TICK")

    def count(self, name: str) -> int:
        """Number of applications: target groups for gates/noise, lines for annotations."""
        total = 0
        for inst in self.instructions:
            if inst.name != name:
                continue
            total += 1 if name in ANNOTATIONS or name == "TICK" else len(inst.groups)
        return total

    def noise_free(self) -> "Circuit":
        return Circuit(self.num_qubits, tuple(i for i in self.instructions if not i.is_noise))

    def detector_records(self) -> list[list[int]]:
        """Absolute measurement indices referenced by each detector."""
        return [recs for name, _, recs in self._resolved() if name == "DETECTOR"]

    def detector_info(self) -> list[tuple[float, ...]]:
        return [args for name, args, _ in self._resolved() if name == "DETECTOR"]

    def detector_bases(self) -> list[int]:
        return [int(args[3]) if len(args) > 3 else 0 for args in self.detector_info()]

    def observable_records(self) -> list[list[int]]:
        obs: dict[int, list[int]] = {}
        for name, args, recs in self._resolved():
            if name == "OBSERVABLE":
                obs.setdefault(int(args[0]), []).extend(recs)
        return [sorted(obs.get(k, [])) for k in range(self.num_observables)]

    def observable_basis(self) -> int:
        for inst in self.instructions:
            if inst.name == "OBSERVABLE" and len(inst.args) > 1:
                return int(inst.args[1])
        return 0

    def _resolved(self):
        m = 0
        for inst in self.instructions:
            if inst.name == "MEASURE_Z":
                m += len(inst.targets)
            elif inst.name in ANNOTATIONS:
                yield inst.name, inst.args, [m + t for t in inst.targets]

    def validate(self) -> list[str]:
        """Structural problems: repeated qubits within a step, bad records, bad targets."""
        problems = []
        busy: set[int] = set()
        step = 0
        m = 0
        for k, inst in enumerate(self.instructions):
            if inst.name == "TICK":
                busy.clear()
                step += 1
                continue
            if inst.name in GATES:
                for q in inst.targets:
                    if not 0 <= q < self.num_qubits:
                        problems.append(f"instruction {k}: qubit {q} out of range")
                    if q in busy:
                        problems.append(f"step {step}: qubit {q} used twice")
                    busy.add(q)
                if inst.name == "MEASURE_Z":
                    m += len(inst.targets)
            elif inst.name in ANNOTATIONS:
                for t in inst.targets:
                    if not -m <= t < 0:
                        problems.append(f"instruction {k}: record rec[{t}] out of range")
        return problems

    def __str__(self) -> str:
        return serialize(self)


# ---------------------------------------------------------------------------
# text format


class CircuitParseError(ValueError):
    def __init__(self, line: int, token: str, message: str):
        super().__init__(f"line {line}: {message} (token {token!r})")
        self.line = line
        self.token = token


def _fmt_arg(a: float) -> str:
    if float(a).is_integer() and abs(a) < 1e15:
        return str(int(a))
    return repr(float(a))


def serialize(circuit: Circuit) -> str:
    lines = ["# busnoise circuit v1", f"QUBITS {circuit.num_qubits}"]
    for inst in circuit.instructions:
        head = inst.name
        if inst.args:
            head += "(" + ", ".join(_fmt_arg(a) for a in inst.args) + ")"
        if inst.name in ANNOTATIONS:
            body = [f"rec[{t}]" for t in inst.targets]
        else:
            body = [str(t) for t in inst.targets]
        lines.append(" ".join([head] + body))
    return "\n".join(lines) + "\n"


_LINE_RE = re.compile(r"^([A-Za-z_][A-Za-z0-9_]*)(?:\(([^)]*)\))?(.*)$")
_REC_RE = re.compile(r"^rec\[(-\d+)\]$")
_ARG_COUNTS = {
    "X_FLIP": (1, 1), "Z_FLIP": (1, 1), "DEPOLARIZE1": (1, 1), "DEPOLARIZE2": (1, 1),
    "DETECTOR": (0, 4), "OBSERVABLE": (1, 2),
}


def parse(text: str) -> Circuit:
    num_qubits = None
    instructions: list[Instruction] = []
    measured = 0
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        m = _LINE_RE.match(line)
        if not m:
            raise CircuitParseError(lineno, line.split()[0], "malformed instruction")
        name, argtext, rest = m.group(1), m.group(2), m.group(3).split()
        if name == "QUBITS":
            if num_qubits is not None or len(rest) != 1 or not rest[0].isdigit():
                raise CircuitParseError(lineno, line, "QUBITS must appear once with one count")
            num_qubits = int(rest[0])
            continue
        if name not in ALL_NAMES:
            raise CircuitParseError(lineno, name, f"unknown instruction {name!r}")
        if num_qubits is None:
            raise CircuitParseError(lineno, name, "QUBITS header missing before first instruction")

        args: tuple[float, ...] = ()
        if argtext is not None and argtext.strip():
            try:
                args = tuple(float(a) for a in argtext.split(","))
            except ValueError:
                raise CircuitParseError(lineno, argtext, "non-numeric argument") from None
        lo, hi = _ARG_COUNTS.get(name, (0, 0))
        if not lo <= len(args) <= hi:
            raise CircuitParseError(lineno, name, f"expected {lo}..{hi} arguments, got {len(args)}")
        if name in NOISE and not 0.0 <= args[0] <= 1.0:
            raise CircuitParseError(lineno, argtext, "probability outside [0, 1]")

        targets: list[int] = []
        for tok in rest:
            if name in ANNOTATIONS:
                rm = _REC_RE.match(tok)
                if not rm:
                    raise CircuitParseError(lineno, tok, "expected a rec[-k] target")
                t = int(rm.group(1))
                if not -measured <= t < 0:
                    raise CircuitParseError(lineno, tok, "measurement record out of range")
            else:
                if not tok.isdigit():
                    raise CircuitParseError(lineno, tok, "expected a qubit index")
                t = int(tok)
                if t >= num_qubits:
                    raise CircuitParseError(lineno, tok, "qubit index out of range")
            targets.append(t)

        if name == "TICK" and targets:
            raise CircuitParseError(lineno, rest[0], "TICK takes no targets")
        if name in PAIR_NAMES and len(targets) % 2:
            raise CircuitParseError(lineno, name, "two-qubit instruction needs an even number of targets")
        if name in GATES or name in NOISE:
            seen = set()
            for tok, t in zip(rest, targets):
                if t in seen:
                    raise CircuitParseError(lineno, tok, f"qubit {t} repeated within one instruction")
                seen.add(t)
        if name == "MEASURE_Z":
            measured += len(targets)
        instructions.append(Instruction(name, tuple(targets), args))
    if num_qubits is None:
        raise CircuitParseError(0, "", "missing QUBITS header")
    return Circuit(num_qubits, tuple(instructions))


# ---------------------------------------------------------------------------
# builder


class _Builder:
    def __init__(self, num_qubits: int):
        self.num_qubits = num_qubits
        self.instructions: list[Instruction] = []
        self.busy: set[int] = set()
        self.measured = 0
        self.ticks = 0

    def gate(self, name: str, targets: Sequence[int]):
        if not targets:
            return
        for q in targets:
            assert q not in self.busy, (name, q)
            self.busy.add(q)
        self.instructions.append(Instruction(name, tuple(targets)))
        if name == "MEASURE_Z":
            self.measured += len(targets)

    def noise(self, name: str, p: float, targets: Sequence[int]):
        if p > 0 and targets:
            self.instructions.append(Instruction(name, tuple(targets), (float(p),)))

    def annotate(self, name: str, records: Iterable[int], args: Sequence[float]):
        offsets = tuple(r - self.measured for r in records)
        self.instructions.append(Instruction(name, offsets, tuple(float(a) for a in args)))

    def end_step(self, idle_p: float):
        idle = [q for q in range(self.num_qubits) if q not in self.busy]
        if idle:
            self.instructions.append(Instruction("IDLE_MARK", tuple(idle)))
            self.noise("DEPOLARIZE1", idle_p, idle)
        self.instructions.append(Instruction("TICK"))
        self.busy.clear()
        self.ticks += 1


def data_roles(layout: CodeLayout) -> list[dict[int, str]]:
    """For each CZ slot, the check type each data qubit couples to."""
    roles: list[dict[int, str]] = [{} for _ in range(4)]
    for s in layout.stabilizers:
        for k, q in enumerate(s.data_support):
            if q is not None:
                assert q not in roles[k], "slot order is not parallelizable"
                roles[k][q] = s.kind
    return roles


def build_memory_circuit(
    layout: CodeLayout,
    rounds: int | None = None,
    basis: str = "Z",
    noise: NoiseParams | None = None,
) -> Circuit:
    """Memory experiment with ``rounds`` noisy syndrome-extraction rounds.

    Data qubits are prepared (and finally read out) in ``basis``.  Each round is
    the 10-step schedule: reset ancillas; H layer; CZ slot a; H layer; CZ slots
    b and c; H layer; CZ slot d; H layer; measure ancillas.  Data qubits coupling
    to an X-check are held in the Hadamard frame during that CZ; the H layers
    toggle exactly the data qubits whose required frame changes.
    """
    noise = noise or NoiseParams()
    if rounds is None:
        rounds = layout.distance
    if isinstance(rounds, bool) or not isinstance(rounds, int) or rounds < 1:
        raise ValueError(f"rounds must be an integer >= 1, got {rounds!r}")
    basis = basis.upper()
    if basis not in BASIS_CODE:
        raise ValueError(f"basis must be 'Z' or 'X', got {basis!r}")

    cer, ber = noise.cer, noise.ber
    shuttle = "Z_FLIP" if noise.shuttle_channel == ShuttleChannel.BIASED else "DEPOLARIZE1"
    cz_p = noise.cz_probability

    stabs = layout.stabilizers
    ancillas = [s.ancilla for s in stabs]
    data = list(layout.data_qubits)
    roles = data_roles(layout)
    b = _Builder(layout.num_qubits)

    start_frame = 1 if basis == "X" else 0
    frame = {q: start_frame for q in data}

    def toggle(group: Sequence[int], target: dict[int, int] | None = None) -> list[int]:
        out = []
        for q in data:
            if target is not None:
                want = target[q]
            else:
                want = frame[q]
                for k in group:
                    r = roles[k].get(q)
                    if r is not None:
                        want = 1 if r == "X" else 0
            if want != frame[q]:
                frame[q] = want
                out.append(q)
        return out

    def cz_step(slot: int):
        pairs = [(s.ancilla, s.data_support[slot]) for s in stabs if s.data_support[slot] is not None]
        b.noise(shuttle, ber, [a for a, _ in pairs])
        flat = [q for pair in pairs for q in pair]
        b.gate("CZ", flat)
        b.noise("DEPOLARIZE2", cz_p, flat)
        b.end_step(cer)

    def h_step(qubits: Sequence[int]):
        qubits = sorted(qubits)
        b.gate("H", qubits)
        b.noise("DEPOLARIZE1", cer, qubits)
        b.end_step(cer)

    meas: dict[tuple[int, int], int] = {}
    for r in range(1, rounds + 1):
        last = r == rounds
        resets = ancillas + (data if r == 1 else [])
        b.gate("RESET_Z", resets)
        b.noise("X_FLIP", cer, resets)
        b.end_step(cer)

        h_step(ancillas + toggle([0]))
        cz_step(0)
        h_step(toggle([1, 2]))
        cz_step(1)
        cz_step(2)
        h_step(toggle([3]))
        cz_step(3)
        end_frame = start_frame if last else 0
        h_step(ancillas + toggle([], {q: end_frame for q in data}))

        measured = ancillas + (data if last else [])
        b.noise("X_FLIP", cer, measured)
        first = b.measured
        b.gate("MEASURE_Z", measured)
        for k, q in enumerate(measured):
            meas[(q, r)] = first + k

        for s in stabs:
            sb = BASIS_CODE[s.kind]
            x, y = s.coords
            if r == 1:
                if s.kind == basis:
                    b.annotate("DETECTOR", [meas[(s.ancilla, 1)]], (x, y, 0, sb))
            else:
                b.annotate("DETECTOR", [meas[(s.ancilla, r)], meas[(s.ancilla, r - 1)]], (x, y, r - 1, sb))
        if last:
            for s in stabs:
                if s.kind != basis:
                    continue
                recs = [meas[(q, r)] for q in s.support] + [meas[(s.ancilla, r)]]
                x, y = s.coords
                b.annotate("DETECTOR", recs, (x, y, r, BASIS_CODE[basis]))
            logical = layout.logical_z if basis == "Z" else layout.logical_x
            b.annotate("OBSERVABLE", [meas[(q, r)] for q in logical], (0, BASIS_CODE[basis]))
        b.end_step(cer)

    assert b.ticks == STEPS_PER_ROUND * rounds
    return Circuit(layout.num_qubits, tuple(b.instructions))


# ---------------------------------------------------------------------------
# fault locations

# Pauli codes: bit 0 = X component, bit 1 = Z component.
PAULI_LETTERS = "IXZY"


@dataclass(frozen=True)
class FaultLocation:
    """One elementary Pauli fault and where it acts."""

    instruction: int
    group: int
    location: int  # running index over all noisy target groups
    channel: str
    channel_probability: float
    qubits: tuple[int, ...]
    pauli: str  # one letter per qubit, e.g. "XZ"
    probability: float


def channel_components(name: str) -> list[tuple[int, ...]]:
    """Pauli codes of the elementary outcomes of a channel, in sampling order."""
    if name == "X_FLIP":
        return [(1,)]
    if name == "Z_FLIP":
        return [(2,)]
    if name == "DEPOLARIZE1":
        return [(1,), (2,), (3,)]  # X, Z, Y
    if name == "DEPOLARIZE2":
        return [((v & 3), (v >> 2)) for v in range(1, 16)]
    raise ValueError(f"{name} is not a noise channel")


def _pauli_code(letter: str) -> int:
    return {"I": 0, "X": 1, "Z": 2, "Y": 3}[letter]


def enumerate_fault_locations(circuit: Circuit) -> list[FaultLocation]:
    """Every elementary fault, in circuit order."""
    out = []
    loc = 0
    for k, inst in enumerate(circuit.instructions):
        if not inst.is_noise:
            continue
        p = inst.args[0]
        comps = channel_components(inst.name)
        for g, qubits in enumerate(inst.groups):
            for codes in comps:
                out.append(FaultLocation(
                    instruction=k,
                    group=g,
                    location=loc,
                    channel=inst.name,
                    channel_probability=p,
                    qubits=tuple(qubits),
                    pauli="".join(PAULI_LETTERS[c] for c in codes),
                    probability=p / len(comps),
                ))
            loc += 1
    return out


def fault_component_index(fault: FaultLocation) -> int:
    codes = tuple(_pauli_code(c) for c in fault.pauli)
    return channel_components(fault.channel).index(codes)


def expected_component_count(circuit: Circuit) -> int:
    per = {"X_FLIP": 1, "Z_FLIP": 1, "DEPOLARIZE1": 3, "DEPOLARIZE2": 15}
    return sum(per[n] * circuit.count(n) for n in NOISE)
