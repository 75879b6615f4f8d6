from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from areaforge import formula as fm
from areaforge.planarizer import (
    find_crossings,
    incidence_is_planar,
    planarize,
    planarize_with_drawing,
    remove_one_crossing,
    validate_drawing,
)


def k33_formula():
    # three additions sharing three variables: incidence graph contains K3,3
    return fm.parse_formula("exists A, B, C: A + B = C and B + C = A and C + A = B")


def test_remove_one_crossing_preserves_witnesses():
    f = fm.parse_formula("exists X, Y, Z: X + Y = Z and X * Y = Z")
    rem = remove_one_crossing(f, (("X", 0, 0), ("Y", 1, 1)))
    g = rem.formula
    assert len(g.variables) == 6 and len(g.constraints) == 5
    w = {"X": Fraction(2), "Y": Fraction(2), "Z": Fraction(4)}
    assert fm.evaluate(g, rem.extend(w, "X", "Y"))
    bad = rem.extend(w, "X", "Y")
    bad[rem.x_copy] += 1
    assert not fm.evaluate(g, bad)


def test_planar_input_is_left_alone():
    f = fm.parse_formula("exists X, Y, Z: X = 1 and X + Y = Z")
    pl = planarize_with_drawing(f)
    assert pl.removals == [] and pl.formula.dialect == fm.PLANAR_ETRINV


def test_nonplanar_input_becomes_planar():
    f = k33_formula()
    assert not incidence_is_planar(f)
    pl = planarize_with_drawing(f, until="drawing")
    assert incidence_is_planar(pl.formula)
    assert find_crossings(pl.drawing) == []
    assert validate_drawing(pl.drawing) == []
    w = {"A": Fraction(0), "B": Fraction(0), "C": Fraction(0)}
    assert fm.evaluate(pl.formula, pl.extend(w))


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 10 ** 6))
def test_random_formulas_planarize(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(3, 7))
    b = fm.FormulaBuilder(fm.Variable(f"X{i}") for i in range(n))
    for _ in range(int(rng.integers(2, 8))):
        ops = rng.choice(n, size=3, replace=False)
        b.add(fm.ADDITION, *(f"X{int(i)}" for i in ops))
    f = b.build(fm.ETRINV)
    g = planarize(f)
    assert incidence_is_planar(g)
    assert len(g.variables) - n == len(g.constraints) - len(f.constraints)


def test_bad_crossing_rejected():
    f = fm.parse_formula("exists X, Y, Z: X + Y = Z")
    with pytest.raises(fm.FormulaError):
        remove_one_crossing(f, (("X", 0, 1), ("Y", 0, 1)))
