from fractions import Fraction

import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from areaforge.gadgets import LAMBDA, GadgetError, make_gadget
from areaforge.plane import verify_drawing

values = st.fractions(min_value=Fraction(1, 10), max_value=Fraction(49, 10), max_denominator=20)


@given(values)
def test_port_point_and_value_are_inverse(x):
    port = make_gadget("variable").ports["x"]
    assert port.value_of(port.point(x)) == x


@given(values)
def test_variable_gadget_exact(x):
    inst, pos = make_gadget("variable").instance({"x": x})
    assert verify_drawing(inst, pos).ok


@given(st.fractions(min_value=Fraction(1, 4), max_value=4, max_denominator=12))
def test_inversion_exact_on_its_curve(x):
    g = make_gadget("inversion")
    inst, pos = g.instance({"x": x})
    assert verify_drawing(inst, pos).ok


@given(values, values)
def test_addition_exact_when_sum_fits(x, y):
    assume(x + y < LAMBDA)
    inst, pos = make_gadget("addition").instance({"x": x, "y": y})
    assert verify_drawing(inst, pos).ok


@given(values, values)
def test_addition_rejects_wrong_sum(x, y):
    assume(x + y + Fraction(1, 7) < LAMBDA)
    inst, pos = make_gadget("addition").instance({"x": x, "y": y, "z": x + y + Fraction(1, 7)})
    assert not verify_drawing(inst, pos).ok


@given(values)
def test_splitter_copies_value(x):
    inst, pos = make_gadget("splitter").instance({"S": x})
    assert verify_drawing(inst, pos).ok


def test_wire_along_a_path():
    g = make_gadget("wire", path=[(0, 0), (1, 0), (2, 0), (3, 0)])
    inst, pos = g.instance({"in": Fraction(3, 2), "out": Fraction(3, 2)})
    assert verify_drawing(inst, pos).ok


def test_unknown_gadget():
    with pytest.raises(GadgetError):
        make_gadget("division")


def test_constant_out_of_range():
    from areaforge.gadgets import make_variable_gadget

    with pytest.raises(GadgetError):
        make_variable_gadget(fixed_value=LAMBDA)
