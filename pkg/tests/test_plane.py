from fractions import Fraction

from hypothesis import given
from hypothesis import strategies as st

from areaforge.plane import (
    PlaneInstance,
    drawing_from_json,
    drawing_to_json,
    segments_meet_exact,
    signed_area,
    verify_drawing,
)

coord = st.integers(-6, 6)
point = st.tuples(coord, coord)


def square_with_diagonal():
    pos = {"a": (0, 0), "b": (2, 0), "c": (2, 2), "d": (0, 2)}
    edges = [("a", "b"), ("b", "c"), ("c", "d"), ("d", "a"), ("a", "c")]
    inst = PlaneInstance.from_drawing(pos, edges)
    inst.areas = {f: Fraction(2) for f in inst.inner_faces}
    return inst, pos


def test_square_verifies_and_detects_wrong_area():
    inst, pos = square_with_diagonal()
    assert verify_drawing(inst, pos).ok
    moved = dict(pos, c=(Fraction(5, 2), 2))
    rep = verify_drawing(inst, moved)
    assert not rep.ok and rep.area_failures


def test_crossing_is_reported():
    inst, pos = square_with_diagonal()
    rep = verify_drawing(inst, dict(pos, b=(0, 3)))
    assert not rep.ok


def test_float_tolerance():
    inst, pos = square_with_diagonal()
    fl = {v: (p[0] + 1e-12, p[1]) for v, p in pos.items()}
    assert verify_drawing(inst, fl, tol=1e-9).ok


def test_instance_json_round_trip():
    inst, _ = square_with_diagonal()
    back = PlaneInstance.from_json(inst.to_json())
    assert back.to_json() == inst.to_json()
    assert back.check() == []


@given(st.dictionaries(st.sampled_from("abcd"), point, min_size=4, max_size=4))
def test_drawing_json_round_trip(pos):
    pos = {k: (Fraction(x, 3), Fraction(y)) for k, (x, y) in pos.items()}
    assert drawing_from_json(drawing_to_json(pos)) == pos


@given(point, point, point)
def test_triangle_area_orientation(a, b, c):
    assert signed_area([a, b, c]) == -signed_area([c, b, a])


@given(point, point, point, point)
def test_segment_meet_is_symmetric(a, b, c, d):
    assert segments_meet_exact(a, b, c, d) == segments_meet_exact(c, d, a, b) == segments_meet_exact(b, a, d, c)


def test_touching_segments_meet():
    assert segments_meet_exact((0, 0), (2, 0), (1, 0), (1, 5))
    assert not segments_meet_exact((0, 0), (2, 0), (3, 0), (4, 0))
