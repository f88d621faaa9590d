"""Rotated surface-code lattice.

Data qubits sit at even coordinates ``(2i, 2j)``; stabilizer ancillas sit at
the odd-odd plaquette centres between them.  ``x`` grows to the right and
``y`` grows downwards, so the top boundary is ``y = -1``.  Z-type weight-2
checks live on the top/bottom boundaries and X-type ones on the left/right.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping

import numpy as np

# Plaquette corner offsets relative to the ancilla, y pointing down.
CORNERS: dict[str, tuple[int, int]] = {
    "NW": (-1, -1),
    "NE": (1, -1),
    "SW": (-1, 1),
    "SE": (1, 1),
}

# CZ time-slot order (a, b, c, d).  The hook fault between slots b and c
# spreads to the data qubits in slots c and d: SW/SE (horizontal) for
# Z-checks, NE/SE (vertical) for X-checks, i.e. perpendicular to the
# logical string of the same Pauli type.
Z_ORDER: tuple[str, ...] = ("NW", "NE", "SW", "SE")
X_ORDER: tuple[str, ...] = ("NW", "SW", "NE", "SE")


class PauliString(Mapping[int, str]):
    """Sparse Pauli operator: qubit id -> one of ``"X"``, ``"Y"``, ``"Z"``."""

    __slots__ = ("_terms",)

    def __init__(self, terms: Mapping[int, str] | Iterable[tuple[int, str]] = ()):
        items = dict(terms)
        for q, p in items.items():
            if p not in ("X", "Y", "Z"):
                raise ValueError(f"invalid Pauli letter {p!r} on qubit {q}")
        self._terms = dict(sorted(items.items()))

    @classmethod
    def uniform(cls, letter: str, qubits: Iterable[int]) -> "PauliString":
        return cls((q, letter) for q in qubits)

    def __getitem__(self, q: int) -> str:
        return self._terms[q]

    def __iter__(self):
        return iter(self._terms)

    def __len__(self) -> int:
        return len(self._terms)

    def __eq__(self, other: object) -> bool:
        if isinstance(other, PauliString):
            return self._terms == other._terms
        return NotImplemented

    def __hash__(self) -> int:
        return hash(tuple(self._terms.items()))

    def __repr__(self) -> str:
        body = " ".join(f"{p}{q}" for q, p in self._terms.items())
        return f"PauliString({body})"

    @property
    def weight(self) -> int:
        return len(self._terms)

    def __mul__(self, other: "PauliString") -> "PauliString":
        """Product up to a global phase."""
        out = {}
        for q in set(self._terms) | set(other._terms):
            x = _X_BIT[self._terms.get(q, "I")] ^ _X_BIT[other._terms.get(q, "I")]
            z = _Z_BIT[self._terms.get(q, "I")] ^ _Z_BIT[other._terms.get(q, "I")]
            if x or z:
                out[q] = _LETTER[(x, z)]
        return PauliString(out)

    def commutes_with(self, other: "PauliString") -> bool:
        anti = 0
        for q, p in self._terms.items():
            o = other._terms.get(q)
            if o is not None and o != p:
                anti ^= 1
        return anti == 0


_X_BIT = {"I": 0, "X": 1, "Y": 1, "Z": 0}
_Z_BIT = {"I": 0, "X": 0, "Y": 1, "Z": 1}
_LETTER = {(1, 0): "X", (1, 1): "Y", (0, 1): "Z"}


@dataclass(frozen=True)
class Stabilizer:
    kind: str  # "X" or "Z"
    ancilla: int
    coords: tuple[int, int]
    # One entry per CZ slot; None marks a suppressed gate (idle step).
    data_support: tuple[int | None, ...]

    @property
    def support(self) -> tuple[int, ...]:
        return tuple(q for q in self.data_support if q is not None)

    @property
    def weight(self) -> int:
        return len(self.support)

    def pauli(self) -> PauliString:
        return PauliString.uniform(self.kind, self.support)


@dataclass(frozen=True)
class CodeLayout:
    distance: int
    data_coords: tuple[tuple[int, int], ...]
    x_stabilizers: tuple[Stabilizer, ...]
    z_stabilizers: tuple[Stabilizer, ...]
    logical_x: PauliString
    logical_z: PauliString

    @property
    def num_data(self) -> int:
        return len(self.data_coords)

    @property
    def num_qubits(self) -> int:
        return self.num_data + len(self.x_stabilizers) + len(self.z_stabilizers)

    @property
    def data_qubits(self) -> tuple[int, ...]:
        return tuple(range(self.num_data))

    @property
    def stabilizers(self) -> tuple[Stabilizer, ...]:
        """All checks ordered by ancilla id."""
        return tuple(sorted(self.x_stabilizers + self.z_stabilizers, key=lambda s: s.ancilla))

    def qubit_coords(self, q: int) -> tuple[int, int]:
        if q < self.num_data:
            return self.data_coords[q]
        for s in self.stabilizers:
            if s.ancilla == q:
                return s.coords
        raise KeyError(q)

    def dump(self) -> str:
        """Structured text dump, one line per qubit / stabilizer."""
        lines = [f"# rotated surface code d={self.distance}"]
        for q, (x, y) in enumerate(self.data_coords):
            lines.append(f"DATA {q} {x} {y}")
        for s in self.stabilizers:
            slots = " ".join("-" if q is None else str(q) for q in s.data_support)
            lines.append(f"STAB {s.kind} {s.ancilla} {s.coords[0]} {s.coords[1]} {slots}")
        lines.append("LOGICAL_X " + " ".join(str(q) for q in self.logical_x))
        lines.append("LOGICAL_Z " + " ".join(str(q) for q in self.logical_z))
        return "\n".join(lines) + "\n"


def plaquette_kind(cx: int, cy: int) -> str:
    """Checkerboard colouring of odd-odd plaquette centres."""
    return "Z" if ((cx + cy) // 2) % 2 == 0 else "X"


def build_layout(
    d: int,
    *,
    z_order: tuple[str, ...] = Z_ORDER,
    x_order: tuple[str, ...] = X_ORDER,
) -> CodeLayout:
    """Rotated surface code of odd distance ``d >= 3``.

    ``z_order``/``x_order`` choose the CZ slot order of the plaquette corners;
    the defaults are the hook-safe orders.  Other orders exist only to build
    deliberately broken control circuits.
    """
    if isinstance(d, bool) or not isinstance(d, (int, np.integer)):
        raise TypeError(f"distance must be an integer, got {d!r}")
    d = int(d)
    if d < 3 or d % 2 == 0:
        raise ValueError(f"distance must be an odd integer >= 3, got {d}")
    for order in (z_order, x_order):
        if sorted(order) != sorted(CORNERS):
            raise ValueError(f"slot order must be a permutation of {sorted(CORNERS)}, got {order}")

    data_coords = tuple((2 * i, 2 * j) for j in range(d) for i in range(d))
    index = {c: q for q, c in enumerate(data_coords)}
    hi = 2 * d - 1

    centres = []
    for cy in range(-1, hi + 1, 2):
        for cx in range(-1, hi + 1, 2):
            kind = plaquette_kind(cx, cy)
            on_tb = cy in (-1, hi)
            on_lr = cx in (-1, hi)
            if on_tb and on_lr:
                continue
            if on_tb and kind != "Z":
                continue
            if on_lr and kind != "X":
                continue
            centres.append((cx, cy, kind))

    xs, zs = [], []
    for k, (cx, cy, kind) in enumerate(centres):
        order = z_order if kind == "Z" else x_order
        slots = tuple(index.get((cx + CORNERS[c][0], cy + CORNERS[c][1])) for c in order)
        stab = Stabilizer(kind=kind, ancilla=d * d + k, coords=(cx, cy), data_support=slots)
        (zs if kind == "Z" else xs).append(stab)

    return CodeLayout(
        distance=d,
        data_coords=data_coords,
        x_stabilizers=tuple(xs),
        z_stabilizers=tuple(zs),
        logical_x=PauliString.uniform("X", (index[(2 * i, 0)] for i in range(d))),
        logical_z=PauliString.uniform("Z", (index[(0, 2 * j)] for j in range(d))),
    )


def logical_operators(layout: CodeLayout) -> tuple[PauliString, PauliString]:
    """Return ``(logical_x, logical_z)``: a horizontal X-string and a vertical Z-string."""
    return layout.logical_x, layout.logical_z


@dataclass(frozen=True)
class Violation:
    kind: str
    detail: str


def symplectic_matrix(paulis: Iterable[PauliString], n: int) -> np.ndarray:
    """Rows ``[x | z]`` over GF(2)."""
    rows = []
    for p in paulis:
        row = np.zeros(2 * n, dtype=np.uint8)
        for q, letter in p.items():
            row[q] = _X_BIT[letter]
            row[n + q] = _Z_BIT[letter]
        rows.append(row)
    return np.array(rows, dtype=np.uint8).reshape(len(rows), 2 * n)


def gf2_rank(matrix: np.ndarray) -> int:
    m = (np.asarray(matrix, dtype=np.uint8) & 1).copy()
    rank = 0
    rows, cols = m.shape
    for c in range(cols):
        pivots = np.nonzero(m[rank:, c])[0]
        if pivots.size == 0:
            continue
        p = rank + pivots[0]
        if p != rank:
            m[[rank, p]] = m[[p, rank]]
        others = np.nonzero(m[:, c])[0]
        others = others[others != rank]
        m[others] ^= m[rank]
        rank += 1
        if rank == rows:
            break
    return rank


def validate_group(layout: CodeLayout) -> list[Violation]:
    """Check commutation, independence, weights and logicals; never raises."""
    out: list[Violation] = []
    try:
        d = layout.distance
        stabs = layout.stabilizers
        paulis = [s.pauli() for s in stabs]
        n = layout.num_qubits

        if len(layout.data_coords) != d * d:
            out.append(Violation("census", f"{len(layout.data_coords)} data qubits, expected {d * d}"))
        if len(stabs) != d * d - 1:
            out.append(Violation("census", f"{len(stabs)} stabilizers, expected {d * d - 1}"))
        if len(layout.x_stabilizers) != len(layout.z_stabilizers):
            out.append(Violation("census", "X/Z stabilizer counts differ"))

        for s in stabs:
            on_boundary = s.coords[0] in (-1, 2 * d - 1) or s.coords[1] in (-1, 2 * d - 1)
            want = 2 if on_boundary else 4
            if s.weight != want:
                out.append(Violation("weight", f"{s.kind} check at {s.coords} has weight {s.weight}, expected {want}"))
            if len(set(s.support)) != len(s.support):
                out.append(Violation("support", f"check at {s.coords} repeats a data qubit"))

        for i in range(len(stabs)):
            for j in range(i + 1, len(stabs)):
                if not paulis[i].commutes_with(paulis[j]):
                    out.append(Violation(
                        "commutation",
                        f"{stabs[i].kind}{stabs[i].coords} anticommutes with {stabs[j].kind}{stabs[j].coords}",
                    ))

        rank = gf2_rank(symplectic_matrix(paulis, n))
        if rank != d * d - 1:
            out.append(Violation("rank", f"symplectic rank {rank}, expected {d * d - 1}"))

        for name, logical in (("X", layout.logical_x), ("Z", layout.logical_z)):
            if logical.weight != d:
                out.append(Violation("logical", f"logical {name} has weight {logical.weight}, expected {d}"))
            for s, p in zip(stabs, paulis):
                if not logical.commutes_with(p):
                    out.append(Violation("logical", f"logical {name} anticommutes with {s.kind}{s.coords}"))
        if layout.logical_x.commutes_with(layout.logical_z):
            out.append(Violation("logical", "logical X and Z commute"))
    except Exception as exc:  # structured report, never propagate
        out.append(Violation("error", f"{type(exc).__name__}: {exc}"))
    return out


def symplectic_rank(layout: CodeLayout) -> int:
    return gf2_rank(symplectic_matrix((s.pauli() for s in layout.stabilizers), layout.num_qubits))
