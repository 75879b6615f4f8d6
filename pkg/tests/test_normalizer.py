from fractions import Fraction

from hypothesis import given, settings
from hypothesis import strategies as st

from areaforge import formula as fm
from areaforge.normalizer import encode_constant, normalize_uetr, positivize, restrict_positive
from areaforge.polynomial import Polynomial, PolynomialSystem


@given(st.integers(1, 5000), st.sampled_from([1, -1]))
def test_constant_chain_reaches_its_target(c, sign):
    ch = encode_constant(c, sign)
    a = ch.intended_assignment()
    assert a[ch.value] == sign * c
    assert fm.evaluate(ch.formula, a)


@given(st.integers(1, 10 ** 12))
def test_constant_chain_is_logarithmic(c):
    ch = encode_constant(c)
    assert len(ch.constraints) <= 6 * c.bit_length() + 6


@st.composite
def formula_with_witness(draw):
    names = ["A", "B", "C"]
    w = {n: Fraction(draw(st.integers(-4, 4))) for n in names}
    b = fm.FormulaBuilder(fm.Variable(n) for n in names + ["S", "P"])
    b.add(fm.ADDITION, "A", "B", "S")
    b.add(fm.MULTIPLICATION, "B", "C", "P")
    w["S"] = w["A"] + w["B"]
    w["P"] = w["B"] * w["C"]
    return b.build(), w


@settings(max_examples=60)
@given(formula_with_witness())
def test_positivize_extends_and_round_trips(fw):
    f, w = fw
    st_ = positivize(f)
    ext = st_.extend(w)
    assert all(v > 0 for v in ext.values())
    assert fm.evaluate(st_.output, ext)
    assert restrict_positive(ext, f.names) == w


def test_positivize_rejects_non_witness():
    f = fm.parse_formula("exists X, Y, Z: X + Y = Z")
    s = positivize(f)
    assert not fm.evaluate(s.output, s.extend({"X": 1, "Y": 1, "Z": 3}))


def test_pipeline_on_a_cubic():
    x = Polynomial.var("X")
    sys_ = PolynomialSystem((fm.Variable("X"),), (x * x * x - 8,))
    norm = normalize_uetr(sys_)
    full = norm.extend({"X": 2})
    assert fm.evaluate(norm.formula, full)
    assert norm.restrict(full) == {"X": 2}
    assert all(v.domain == fm.POSITIVE for v in norm.formula.variables)
    assert norm.witness_map()[0].startswith("#")


def test_pipeline_accepts_text():
    norm = normalize_uetr("forall Y exists X: X - Y = 0")
    full = norm.extend({"Y": -3, "X": -3})
    assert fm.evaluate(norm.formula, full)
