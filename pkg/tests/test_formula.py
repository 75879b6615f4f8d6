from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from areaforge import formula as fm

KINDS = [fm.CONST_ONE, fm.ADDITION, fm.MULTIPLICATION, fm.INVERSION]


@st.composite
def formulas(draw):
    n = draw(st.integers(1, 5))
    names = [f"X{i}" for i in range(n)]
    b = fm.FormulaBuilder(fm.Variable(x) for x in names)
    for _ in range(draw(st.integers(1, 6))):
        kind = draw(st.sampled_from(KINDS))
        b.add(kind, *(draw(st.sampled_from(names)) for _ in range(fm.ARITY[kind])))
    return b.build()


@given(formulas())
def test_serialize_parse_round_trip(f):
    g = fm.parse_formula(fm.serialize(f))
    assert g.names == f.names
    assert [(c.kind, g.operand_names(c)) for c in g.constraints] == [(c.kind, f.operand_names(c)) for c in f.constraints]


@given(formulas())
def test_json_round_trip(f):
    assert fm.from_json(fm.to_json(f)) == f


@given(formulas(), st.lists(st.fractions(min_value=-3, max_value=3, max_denominator=6), min_size=5, max_size=5))
def test_evaluate_matches_violations(f, vals):
    a = dict(zip(f.names, vals))
    assert fm.evaluate(f, a) == (not fm.violated_constraints(f, a))


def test_evaluate_simple_system():
    f = fm.parse_formula("exists X, Y, Z: X = 1 and Y + Z = X and Y * Z = 1")
    # Y + Z = 1 forces Y * Z <= 1/4, so no rational point works
    for y in (Fraction(1, 2), Fraction(-1), Fraction(3)):
        assert not fm.evaluate(f, {"X": 1, "Y": y, "Z": 1 - y})
    g = fm.parse_formula("exists X, Y, Z: X = 1 and Y + Y = X and X + Y = Z")
    assert fm.evaluate(g, {"X": 1, "Y": Fraction(1, 2), "Z": Fraction(3, 2)})


def test_undeclared_variable_rejected():
    with pytest.raises(fm.FormulaError):
        fm.parse_formula("exists X: X + Y = X")


def test_incidence_graph_counts_each_variable_once_per_constraint():
    f = fm.parse_formula("exists X, Y: X + X = Y")
    g = fm.incidence_graph(f)
    assert g.edges == (("X", 0), ("Y", 0))


@settings(max_examples=30)
@given(formulas())
def test_incidence_graph_is_bipartite(f):
    g = fm.incidence_graph(f).to_networkx()
    for u, v in g.edges:
        assert {u[0], v[0]} == {"v", "c"}
