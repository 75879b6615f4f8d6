from fractions import Fraction

import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from areaforge import formula as fm
from areaforge import von_staudt as vs
from areaforge.solver import SolveOptions, solve_triples

nums = st.fractions(min_value=-5, max_value=5, max_denominator=8)


def line(*names):
    t = vs.frame()
    return t, {n: vs.add_line_point(t, "x", n) for n in names}


@given(nums, nums)
def test_addition_witness_exact(x, y):
    # every line point is kept away from p0, so zero is outside the domain
    assume(0 not in (x, y, x + y))
    t, p = line("X", "Y", "Z")
    vs.add_addition(t, p["X"], p["Y"], p["Z"])
    assert t.check(vs.witness(t, {"X": x, "Y": y, "Z": x + y}))


@given(nums, nums)
def test_multiplication_witness_exact(x, y):
    assume(x != 0 and y != 0)
    t, p = line("X", "Y", "Z")
    vs.add_multiplication(t, p["X"], p["Y"], p["Z"])
    pos = vs.witness(t, {"X": x, "Y": y, "Z": x * y})
    assert t.check(pos)
    assert t.extract(pos) == {"X": x, "Y": y, "Z": x * y}


def test_multiplication_rejects_wrong_product():
    t, p = line("X", "Y", "Z")
    vs.add_multiplication(t, p["X"], p["Y"], p["Z"])
    pos = vs.witness(t, {"X": 2, "Y": 3, "Z": 6})
    pos[p["Z"]] = (Fraction(7), Fraction(0))
    assert not t.check(pos)


@given(st.integers(1, 30), st.integers(1, 30))
def test_positivity_with_square_values(n, d):
    t, p = line("X")
    vs.add_positivity(t, p["X"])
    assert t.check(vs.witness(t, {"X": Fraction(n * n, d * d)}))


def test_positivity_float_root():
    t, p = line("X")
    vs.add_positivity(t, p["X"])
    assert t.check(vs.witness(t, {"X": 2.0}), tol=1e-12)


def test_build_rejects_inversion():
    with pytest.raises(vs.TripleError):
        vs.build_triples(fm.parse_formula("exists X, Y: X * Y = 1"))


def test_json_round_trip():
    t = vs.build_triples(fm.parse_formula("forall+ Y exists+ X, Z: X = 1 and X + Y = Z"))
    back = vs.TripleInstance.from_json(t.dumps())
    assert back.dumps() == t.dumps()
    assert back.universal_tags() == ["Y"]


def test_propagation_from_universal_values():
    t = vs.build_triples(fm.parse_formula("forall+ Y exists+ X, Z, W: X = 1 and X + Y = Z and Y * Z = W"))
    assert vs.propagate_values(t, {"Y": 2}) == {"X": 1.0, "Y": 2.0, "Z": 3.0, "W": 6.0}


def test_solver_needs_universal_values():
    t = vs.build_triples(fm.parse_formula("forall+ Y exists+ X, Z: X = 1 and X + Y = Z"))
    with pytest.raises(ValueError):
        solve_triples(t, {})


def test_solver_shift():
    t = vs.build_triples(fm.parse_formula("forall+ Y exists+ X, Z: X = 1 and X + Y = Z"))
    res = solve_triples(t, {"Y": 0.75}, SolveOptions(seed=0, restarts=8))
    assert res.success
    assert abs(res.values["Z"] - 1.75) < 1e-6
