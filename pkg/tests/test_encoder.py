from fractions import Fraction

import numpy as np
from hypothesis import given
from hypothesis import strategies as st

from areaforge import encoder as enc
from areaforge.plane import PlaneInstance, segments_meet_exact
from areaforge.solver import random_stacked, realize_stacked, stacked_instance

coord = st.integers(-4, 4)
point = st.tuples(coord, coord)


def triangle():
    pos = {"a": (0, 0), "b": (4, 0), "c": (0, 4)}
    inst = PlaneInstance.from_drawing(pos, [("a", "b"), ("b", "c"), ("c", "a")])
    inst.areas = {f: Fraction(8) for f in inst.inner_faces}
    return inst, pos


@given(point, point, point, point)
def test_no_crossing_matches_exact_segment_test(a, b, c, d):
    env = {"ax": a[0], "ay": a[1], "bx": b[0], "by": b[1], "cx": c[0], "cy": c[1], "dx": d[0], "dy": d[1]}
    f = enc.no_crossing(enc.pt("ax", "ay"), enc.pt("bx", "by"), enc.pt("cx", "cy"), enc.pt("dx", "dy"))
    assert enc.eval_formula(f, env) == (not segments_meet_exact(a, b, c, d))


def test_triangle_counts_and_evaluation():
    inst, pos = triangle()
    f, counts = enc.encode_area_universality(inst)
    assert counts == {"noCrossing": 0, "Ordering": 3, "Area": 1, "Outer": 1}
    assert enc.evaluate_drawing(inst, pos)
    mirrored = {v: (-x, y) for v, (x, y) in pos.items()}
    assert not enc.evaluate_drawing(inst, mirrored)
    assert not enc.evaluate_drawing(inst, pos, {f: Fraction(7) for f in inst.inner_faces})


def test_text_round_trip():
    t, areas = random_stacked(3, np.random.default_rng(1))
    f, _ = enc.encode_area_universality(stacked_instance(t, areas))
    assert enc.parse(enc.to_text(f)) == f


def test_smt_output_declares_variables():
    inst, _ = triangle()
    f, _ = enc.encode_fixed_prescribed_area(inst)
    smt = enc.to_smt(f)
    assert "(declare-fun X_0 () Real)" in smt or "(declare-const X_0 Real)" in smt
    assert "(check-sat)" in smt


def test_fixed_mode_agrees_with_universality_mode():
    t, areas = random_stacked(4, np.random.default_rng(2))
    inst = stacked_instance(t, areas)
    pos = realize_stacked(t, areas)
    fixed, _ = enc.encode_fixed_prescribed_area(inst)
    env = enc.drawing_assignment(inst, pos)
    assert enc.eval_formula(enc.matrix(fixed), env)
    assert enc.evaluate_drawing(inst, pos)


def test_volume_encoding_accepts_lifted_placement():
    from areaforge.volume import coplanar_gadget

    g = coplanar_gadget(1)
    f, counts = enc.encode_volume(g.instance)
    n = len(g.instance.tetra)
    assert counts["pairs"] == n * (n - 1) // 2
    assert counts["volume"] == n
