from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from areaforge.solver import random_stacked, realize_stacked, stacked_instance
from areaforge.volume import (
    SimplicialInstance,
    VolumeError,
    coplanar_gadget,
    det4,
    lift_drawing,
    lift_to_volume,
    placement_to_off,
    separated,
    tetra_volume,
    verify_placement,
)

coord = st.integers(-10, 10)
point = st.tuples(coord, coord, coord)


@given(point, point, point, point)
def test_det4_alternates(p, q, r, s):
    assert det4(p, q, r, s) == -det4(q, p, r, s)
    assert tetra_volume(p, q, r, s) == tetra_volume(s, r, q, p)


@given(point, point, point, point, point)
def test_far_apart_sets_are_separated(p, q, r, s, t):
    # holds for degenerate (flat, collinear, coincident) point sets too
    A = [p, q, r, s]
    B = [(x + 100, y, z) for x, y, z in (q, r, s, t)]
    assert separated(A, B)


def test_touching_segments_are_weakly_separated():
    assert separated([(0, 0, 0)] * 3 + [(2, 0, 0)], [(2, 0, 0)] * 3 + [(4, 0, 0)])
    assert not separated([(0, 0, 0)] * 3 + [(2, 0, 0)], [(1, 0, 0)] * 3 + [(4, 0, 0)])


def test_overlapping_tetrahedra_are_not_separated():
    A = [(0, 0, 0), (4, 0, 0), (0, 4, 0), (0, 0, 4)]
    B = [(1, 1, 1), (5, 1, 1), (1, 5, 1), (1, 1, 5)]
    assert not separated(A, B)


def test_unit_tetrahedron():
    assert tetra_volume((0, 0, 0), (1, 0, 0), (0, 1, 0), (0, 0, 1)) == Fraction(1, 6)


@pytest.mark.parametrize("k", [1, 2, 3, 4])
def test_coplanar_gadget(k):
    g = coplanar_gadget(k)
    assert len(g.red) == k
    assert g.apex_volume == 1
    assert verify_placement(g.instance, g.placement).ok
    z = {p[2] for v, p in g.placement.items() if v != "v"}
    assert z == {-1}


def test_coplanar_gadget_detects_lifted_vertex():
    g = coplanar_gadget(2)
    moved = dict(g.placement, b1=(g.placement["b1"][0], g.placement["b1"][1], Fraction(-1, 2)))
    assert not verify_placement(g.instance, moved).ok


def test_lift_round_trip_and_off():
    t, areas = random_stacked(5, np.random.default_rng(4))
    inst = stacked_instance(t, areas)
    s = lift_to_volume(inst)
    back = SimplicialInstance.from_json(s.to_json())
    assert back.to_json() == s.to_json()
    pl = lift_drawing(inst, realize_stacked(t, areas))
    assert verify_placement(s, pl).ok
    off = placement_to_off(s, pl)
    assert off.startswith("OFF\n") and off.count("\n3 ") == 4 * len(s.tetra)


def test_lift_with_wrong_height_fails():
    t, areas = random_stacked(2, np.random.default_rng(0))
    inst = stacked_instance(t, areas)
    s = lift_to_volume(inst)
    rep = verify_placement(s, lift_drawing(inst, realize_stacked(t, areas), x_height=2))
    assert rep.volume_failures


def test_bad_tetrahedron():
    with pytest.raises(VolumeError):
        SimplicialInstance(["a", "b", "c"], [("a", "b", "c", "a")])
