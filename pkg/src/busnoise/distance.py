"""Low-weight undetectable-logical search over elementary fault signatures.

A set of faults is a logical failure when its detector signatures cancel and
its observable signatures do not.  Signatures are packed into Python ints so
XOR and hashing are cheap; faults with identical signatures collapse into one
class before the search.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import comb

from .circuit import Circuit, FaultLocation
from .simulator import fault_signatures

DEFAULT_BUDGET = 5 * 10 ** 7


class SearchBudgetError(RuntimeError):
    pass


@dataclass(frozen=True)
class DistanceResult:
    max_weight: int  # largest weight searched
    distance: int | None  # smallest logical weight found, None if none up to max_weight
    witness: tuple[FaultLocation, ...]
    num_faults: int
    num_classes: int

    def clean_below(self, weight: int) -> bool:
        """True when no undetected logical of weight < ``weight`` exists."""
        if weight - 1 > self.max_weight:
            raise ValueError(f"searched only up to weight {self.max_weight}")
        return self.distance is None or self.distance >= weight


def _pack(row) -> int:
    v = 0
    for k in row.nonzero()[0]:
        v |= 1 << int(k)
    return v


def signature_classes(circuit: Circuit, backend=None):
    """``{(det, obs): representative fault}`` over all faults with a nonzero signature."""
    faults, det, obs = fault_signatures(circuit, backend=backend)
    classes: dict[tuple[int, int], FaultLocation] = {}
    for f, dr, orow in zip(faults, det, obs):
        key = (_pack(dr), _pack(orow))
        if key != (0, 0):
            classes.setdefault(key, f)
    return faults, classes


def search_cost(num_classes: int, max_weight: int) -> int:
    """Rough number of candidate combinations examined."""
    return sum(comb(num_classes, w - 1) for w in range(1, max_weight + 1))


def circuit_distance(circuit: Circuit, max_weight: int = 2, budget: int = DEFAULT_BUDGET,
                     backend=None) -> DistanceResult:
    """Smallest number of elementary faults flipping an observable undetected.

    Weights 1 to 3 are supported; weight 3 uses a meet-in-the-middle lookup of
    pairwise XORs against single-fault classes.
    """
    if not 1 <= max_weight <= 3:
        raise ValueError("max_weight must be 1, 2 or 3")
    faults, classes = signature_classes(circuit, backend)
    keys = list(classes)
    cost = search_cost(len(keys), max_weight)
    if cost > budget:
        raise SearchBudgetError(
            f"weight-{max_weight} search needs ~{cost:.2e} combinations over {len(keys)} signature"
            f" classes (budget {budget:.2e})")

    def result(dist, wit):
        return DistanceResult(max_weight, dist, tuple(classes[k] for k in wit), len(faults), len(keys))

    for k in keys:
        if k[0] == 0 and k[1] != 0:
            return result(1, (k,))
    if max_weight < 2:
        return result(None, ())

    by_det: dict[int, list[tuple[int, int]]] = {}
    for k in keys:
        by_det.setdefault(k[0], []).append(k)
    for group in by_det.values():
        if len(group) > 1:
            # same detectors, different observables (classes are unique)
            return result(2, (group[0], group[1]))
    if max_weight < 3:
        return result(None, ())

    # every detector signature now maps to exactly one class
    single = {k[0]: k for k in keys}
    for i, a in enumerate(keys):
        da, oa = a
        for b in keys[i + 1:]:
            c = single.get(da ^ b[0])
            if c is None or c == a or c == b:
                continue
            if oa ^ b[1] ^ c[1]:
                return result(3, (a, b, c))
    return result(None, ())
