"""Integer polynomials and polynomial equation systems (normalizer input)."""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping

from .formula import (
    ADDITION,
    CONST_ONE,
    INVERSION,
    MULTIPLICATION,
    ConstraintFormula,
    FormulaError,
    Variable,
    _Cursor,
    parse_header,
    tokenize,
)


class Polynomial:
    """Sparse polynomial with integer coefficients.

    Monomials are keyed by the sorted tuple of variable names (a multiset).
    """

    __slots__ = ("terms",)

    def __init__(self, terms: Mapping | None = None):
        self.terms = {}
        for mono, coef in (terms or {}).items():
            if coef:
                key = tuple(sorted(mono))
                self.terms[key] = self.terms.get(key, 0) + int(coef)
                if not self.terms[key]:
                    del self.terms[key]

    @classmethod
    def const(cls, c: int) -> "Polynomial":
        return cls({(): c})

    @classmethod
    def var(cls, name: str) -> "Polynomial":
        return cls({(name,): 1})

    def __add__(self, other):
        other = _lift(other)
        out = dict(self.terms)
        for m, c in other.terms.items():
            out[m] = out.get(m, 0) + c
        return Polynomial(out)

    __radd__ = __add__

    def __neg__(self):
        return Polynomial({m: -c for m, c in self.terms.items()})

    def __sub__(self, other):
        return self + (-_lift(other))

    def __rsub__(self, other):
        return _lift(other) - self

    def __mul__(self, other):
        other = _lift(other)
        out = {}
        for m1, c1 in self.terms.items():
            for m2, c2 in other.terms.items():
                key = tuple(sorted(m1 + m2))
                out[key] = out.get(key, 0) + c1 * c2
        return Polynomial(out)

    __rmul__ = __mul__

    def __pow__(self, k: int):
        if k < 0:
            raise ValueError("negative exponent")
        out = Polynomial.const(1)
        for _ in range(k):
            out = out * self
        return out

    def __eq__(self, other):
        return isinstance(other, Polynomial) and self.terms == other.terms

    def __hash__(self):
        return hash(frozenset(self.terms.items()))

    def is_zero(self) -> bool:
        return not self.terms

    @property
    def degree(self) -> int:
        return max((len(m) for m in self.terms), default=0)

    @property
    def coefficient_bits(self) -> int:
        return max((abs(c).bit_length() for c in self.terms.values()), default=0)

    @property
    def variables(self) -> set:
        return {x for m in self.terms for x in m}

    def monomials(self) -> list[tuple[int, int, tuple]]:
        """(sign, |coefficient|, variable multiset) in a deterministic order."""
        return [
            (1 if c > 0 else -1, abs(c), m)
            for m, c in sorted(self.terms.items(), key=lambda mc: (len(mc[0]), mc[0]))
        ]

    def evaluate(self, assignment: Mapping) -> Fraction:
        total = Fraction(0)
        for m, c in self.terms.items():
            t = Fraction(c)
            for x in m:
                t *= Fraction(assignment[x])
            total += t
        return total

    def substitute_pair(self, a: str, b: str, u: str) -> "Polynomial":
        """Replace one occurrence of a*b by u in every monomial that contains both."""
        out = {}
        for m, c in self.terms.items():
            lst = list(m)
            if a in lst:
                lst.remove(a)
                if b in lst:
                    lst.remove(b)
                    lst.append(u)
                else:
                    lst.append(a)
            key = tuple(sorted(lst))
            out[key] = out.get(key, 0) + c
        return Polynomial(out)

    def __repr__(self):
        return f"Polynomial({self})"

    def __str__(self):
        if not self.terms:
            return "0"
        parts = []
        for sign, coef, mono in self.monomials():
            factors = ([str(coef)] if coef != 1 or not mono else []) + list(mono)
            parts.append(("- " if sign < 0 else "+ ") + " * ".join(factors))
        text = " ".join(parts)
        return text[2:] if text.startswith("+ ") else "-" + text[1:]


def _lift(x) -> Polynomial:
    if isinstance(x, Polynomial):
        return x
    if isinstance(x, int):
        return Polynomial.const(x)
    raise TypeError(f"cannot use {type(x).__name__} as a polynomial")


@dataclass(frozen=True)
class PolynomialSystem:
    """Quantified conjunction of equations ``p_i = 0`` over the reals."""

    variables: tuple
    equations: tuple

    @property
    def names(self) -> list[str]:
        return [v.name for v in self.variables]

    def holds(self, assignment: Mapping) -> bool:
        return all(p.evaluate(assignment) == 0 for p in self.equations)

    def size(self) -> int:
        return len(self.variables) + sum(
            sum(len(m) + max(1, abs(c).bit_length()) for m, c in p.terms.items()) for p in self.equations
        )

    def __str__(self):
        from .formula import ALL_REALS, UNIVERSAL

        blocks = []
        for v in self.variables:
            key = (v.quantifier, v.domain)
            if blocks and blocks[-1][0] == key:
                blocks[-1][1].append(v.name)
            else:
                blocks.append((key, [v.name]))
        head = " ".join(
            ("forall" if q == UNIVERSAL else "exists") + ("" if d == ALL_REALS else "+") + " " + ",".join(ns)
            for (q, d), ns in blocks
        )
        return head + ": " + " and ".join(f"{p} = 0" for p in self.equations)


def constraint_polynomial(kind: str, names) -> Polynomial:
    v = [Polynomial.var(n) for n in names]
    if kind == CONST_ONE:
        return v[0] - 1
    if kind == ADDITION:
        return v[0] + v[1] - v[2]
    if kind == MULTIPLICATION:
        return v[0] * v[1] - v[2]
    if kind == INVERSION:
        return v[0] * v[1] - 1
    raise FormulaError(f"unknown constraint kind {kind}")


def system_from_formula(f: ConstraintFormula) -> PolynomialSystem:
    eqs = tuple(constraint_polynomial(c.kind, f.operand_names(c)) for c in f.constraints)
    return PolynomialSystem(tuple(f.variables), eqs)


# ---------------------------------------------------------------- parsing

def _expr(cur: _Cursor, declared) -> Polynomial:
    sign = 1
    if cur.tok.text in ("+", "-"):
        sign = -1 if cur.advance().text == "-" else 1
    acc = _term(cur, declared) * sign
    while cur.tok.text in ("+", "-"):
        op = cur.advance().text
        t = _term(cur, declared)
        acc = acc + t if op == "+" else acc - t
    return acc


def _term(cur, declared) -> Polynomial:
    acc = _power(cur, declared)
    while cur.tok.text == "*":
        cur.advance()
        acc = acc * _power(cur, declared)
    return acc


def _power(cur, declared) -> Polynomial:
    base = _primary(cur, declared)
    if cur.tok.text == "^":
        cur.advance()
        if cur.tok.kind != "num":
            raise cur.error("exponent must be a nonnegative integer")
        base = base ** int(cur.advance().text)
    return base


def _primary(cur, declared) -> Polynomial:
    t = cur.tok
    if t.kind == "num":
        cur.advance()
        return Polynomial.const(int(t.text))
    if t.text == "(":
        cur.advance()
        e = _expr(cur, declared)
        cur.expect(")")
        return e
    if t.text == "-":
        cur.advance()
        return -_primary(cur, declared)
    name = cur.name()
    if name.text not in declared:
        raise FormulaError(f"undeclared variable {name.text!r} (line {name.line}, column {name.col})")
    return Polynomial.var(name.text)


def parse_polynomial_system(text: str) -> PolynomialSystem:
    """Parse ``forall ... exists ...: lhs = rhs and ...`` with integer polynomials."""
    cur = _Cursor(tokenize(text))
    declared = parse_header(cur)
    variables = tuple(v for v, _ in declared)
    names = {v.name for v in variables}
    eqs = []
    if cur.tok.kind != "eof":
        while True:
            lhs = _expr(cur, names)
            cur.expect("=")
            rhs = _expr(cur, names)
            eqs.append(lhs - rhs)
            if cur.tok.text != "and":
                break
            cur.advance()
    if cur.tok.kind != "eof":
        raise cur.error(f"unexpected {cur.tok.text!r}")
    return PolynomialSystem(variables, tuple(eqs))


def variable(name, quantifier="existential", domain="all_reals") -> Variable:
    return Variable(name, quantifier, domain)
