import pytest
from hypothesis import given
from hypothesis import strategies as st

from busnoise.geometry import (CodeLayout, PauliString, Stabilizer, build_layout, logical_operators,
                               symplectic_rank, validate_group)

import oracles

odd_distances = st.sampled_from([3, 5, 7, 9, 11, 13, 15, 17])


def test_d3_census(layout3):
    assert layout3.num_data == oracles.D3_DATA
    assert len(layout3.x_stabilizers) == oracles.D3_X_CHECKS
    assert len(layout3.z_stabilizers) == oracles.D3_Z_CHECKS
    for checks in (layout3.x_stabilizers, layout3.z_stabilizers):
        assert sum(s.weight == 2 for s in checks) == oracles.D3_WEIGHT2_PER_KIND
        assert sum(s.weight == 4 for s in checks) == 2


def test_d5_census(layout5):
    assert layout5.num_data == oracles.D5_DATA
    assert len(layout5.stabilizers) == oracles.D5_CHECKS
    assert len(layout5.x_stabilizers) == len(layout5.z_stabilizers) == 12


@pytest.mark.parametrize("d", [2, 4, 1, 0, -3])
def test_rejects_bad_distance(d):
    with pytest.raises(ValueError):
        build_layout(d)


def test_rejects_non_integer():
    with pytest.raises(TypeError):
        build_layout(3.0)


def test_boundary_checks_follow_convention():
    d = 5
    layout = build_layout(d)
    hi = 2 * d - 1
    for s in layout.stabilizers:
        x, y = s.coords
        if y in (-1, hi):
            assert s.kind == "Z" and s.weight == 2
        elif x in (-1, hi):
            assert s.kind == "X" and s.weight == 2
        else:
            assert s.weight == 4


def test_weight2_checks_keep_four_slots(layout3):
    for s in layout3.stabilizers:
        assert len(s.data_support) == 4
        assert s.data_support.count(None) == 4 - s.weight


def test_supports_are_plaquette_neighbours(layout5):
    for s in layout5.stabilizers:
        for q in s.support:
            x, y = layout5.data_coords[q]
            assert abs(x - s.coords[0]) == 1 and abs(y - s.coords[1]) == 1


def test_logicals_d3(layout3):
    lx, lz = logical_operators(layout3)
    assert lz.weight == 3 and set(lz.values()) == {"Z"}
    assert lx.weight == 3 and set(lx.values()) == {"X"}
    assert {layout3.data_coords[q][0] for q in lz} == {0}  # vertical
    assert {layout3.data_coords[q][1] for q in lx} == {0}  # horizontal


@given(odd_distances)
def test_group_invariants(d):
    layout = build_layout(d)
    assert validate_group(layout) == []
    assert symplectic_rank(layout) == d * d - 1
    lx, lz = logical_operators(layout)
    assert not lx.commutes_with(lz)
    assert len(set(lx) & set(lz)) % 2 == 1


def test_rank_d7():
    assert symplectic_rank(build_layout(7)) == oracles.D7_SYMPLECTIC_RANK


def test_logical_times_stabilizer_still_commutes(layout5):
    _, lz = logical_operators(layout5)
    for zs in layout5.z_stabilizers:
        prod = lz * zs.pauli()
        assert all(prod.commutes_with(s.pauli()) for s in layout5.stabilizers)


def test_deterministic():
    assert build_layout(7) == build_layout(7)
    assert build_layout(7).dump() == build_layout(7).dump()


def _corrupt(layout: CodeLayout) -> CodeLayout:
    s = layout.x_stabilizers[0]
    support = list(s.data_support)
    k = next(i for i, q in enumerate(support) if q is not None)
    taken = set(s.support)
    support[k] = next(q for q in range(layout.num_data) if q not in taken)
    bad = Stabilizer(s.kind, s.ancilla, s.coords, tuple(support))
    return CodeLayout(layout.distance, layout.data_coords, (bad,) + layout.x_stabilizers[1:],
                      layout.z_stabilizers, layout.logical_x, layout.logical_z)


def test_corrupted_support_reported(layout3):
    report = validate_group(_corrupt(layout3))
    assert any(v.kind == "commutation" for v in report)


def test_validate_never_raises(layout3):
    broken = CodeLayout(3, layout3.data_coords, layout3.x_stabilizers, layout3.z_stabilizers, None, None)
    report = validate_group(broken)
    assert report and report[-1].kind == "error"


def test_pauli_string_rejects_identity():
    with pytest.raises(ValueError):
        PauliString({0: "I"})


@given(st.dictionaries(st.integers(0, 6), st.sampled_from("XYZ")),
       st.dictionaries(st.integers(0, 6), st.sampled_from("XYZ")))
def test_pauli_product_commutation(a, b):
    p, q = PauliString(a), PauliString(b)
    assert (p * q) == (q * p)
    assert p.commutes_with(q) == q.commutes_with(p)
    assert (p * p).weight == 0


def test_misordered_control_is_still_a_valid_code():
    layout = build_layout(3, z_order=("NW", "SW", "NE", "SE"))
    assert validate_group(layout) == []


def test_rejects_invalid_slot_order():
    with pytest.raises(ValueError):
        build_layout(3, z_order=("NW", "NW", "NE", "SE"))
