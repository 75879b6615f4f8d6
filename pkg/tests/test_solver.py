from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from areaforge import formula as fm
from areaforge.compiler import compile_formula
from areaforge.plane import verify_drawing
from areaforge.solver import (
    SolveOptions,
    StackedTriangulation,
    StackingError,
    random_stacked,
    realize_stacked,
    sample_universality,
    solve,
    stacked_instance,
)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 60), st.integers(0, 2 ** 32 - 1))
def test_stacked_realization_is_exact(n, seed):
    t, areas = random_stacked(n, np.random.default_rng(seed))
    pos = realize_stacked(t, areas)
    rep = verify_drawing(stacked_instance(t, areas), pos)
    assert rep.exact and rep.ok


def test_bad_insertion():
    t = StackedTriangulation(("a", "b", "c"), [("d", ("a", "b", "x"))])
    with pytest.raises(StackingError):
        t.faces()


def test_solver_recovers_stacked_drawing_from_jitter():
    t, areas = random_stacked(6, np.random.default_rng(3))
    inst = stacked_instance(t, areas)
    res = solve(inst, SolveOptions(seed=1, restarts=8))
    assert res.success
    assert verify_drawing(inst, res.drawing, tol=1e-9).ok


def test_compiled_instance_values():
    f = fm.parse_formula("exists X, Y: X = 1 and X * Y = 1")
    ci = compile_formula(f)
    res = solve(ci.instance, SolveOptions(seed=0, restarts=8), initializer=ci.initializer())
    assert res.success
    vals = ci.extract(res.drawing)
    assert abs(vals["X"] - 1) < 1e-6 and abs(vals["Y"] - 1) < 1e-6


def test_construction_drawing_is_exact_for_witness():
    f = fm.parse_formula("exists X, Y, Z: X = 1 and Y + Y = X and X + Y = Z")
    ci = compile_formula(f)
    w = ci.extend({"X": 1, "Y": Fraction(1, 2), "Z": Fraction(3, 2)})
    assert verify_drawing(ci.instance, ci.drawing_for(w)).ok


def test_sampling_stacked_triangulations_always_succeeds():
    # triangulations built by stacking realize every positive area vector
    t, areas = random_stacked(3, np.random.default_rng(0))
    rep = sample_universality(t, 6, SolveOptions(seed=2))
    assert (rep.samples, rep.successes) == (6, 6)
    inst = stacked_instance(t, areas)
    rep = sample_universality(inst, 3, SolveOptions(seed=2, restarts=8))
    assert rep.to_json()["successes"] == 3
