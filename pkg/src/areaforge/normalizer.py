"""Rewrite polynomial systems into conjunctions of X=1, X+Y=Z and X*Y=Z over positive reals.

Every stage returns a :class:`Stage` whose ``extend`` maps a witness of the
stage input to a witness of the stage output, so equivalence can be checked
with the exact evaluator instead of quantifier elimination.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Mapping

from .formula import (
    ADDITION,
    ALL_REALS,
    CONST_ONE,
    CONSTRAINED_UETR,
    EXISTENTIAL,
    MULTIPLICATION,
    POSITIVE,
    RAW,
    ConstraintFormula,
    FormulaBuilder,
    FormulaError,
    Variable,
    validate_dialect,
)
from .polynomial import Polynomial, PolynomialSystem, parse_polynomial_system, system_from_formula


@dataclass
class Stage:
    name: str
    output: object
    fresh: list  # Variable
    definitions: list  # (fresh name, op, args)
    extend: Callable[[Mapping], dict]

    def witness_map(self) -> list[str]:
        return [f"{n} := {_def_text(op, args)}" for n, op, args in self.definitions]


def _def_text(op, args) -> str:
    if op == "const":
        return str(args[0])
    if op == "add":
        return f"{args[0]} + {args[1]}"
    if op == "mul":
        return f"{args[0]} * {args[1]}"
    if op == "pos":
        return f"max({args[0]}, 0) + 1"
    if op == "neg":
        return f"max(-{args[0]}, 0) + 1"
    return f"{op}({', '.join(map(str, args))})"


def run_definitions(definitions, assignment: Mapping) -> dict:
    """Evaluate defining expressions in order on top of ``assignment``."""
    out = {k: Fraction(v) for k, v in assignment.items()}
    for name, op, args in definitions:
        if op == "const":
            out[name] = Fraction(args[0])
        elif op == "add":
            out[name] = out[args[0]] + out[args[1]]
        elif op == "mul":
            out[name] = out[args[0]] * out[args[1]]
        elif op == "pos":
            out[name] = max(out[args[0]], Fraction(0)) + 1
        elif op == "neg":
            out[name] = max(-out[args[0]], Fraction(0)) + 1
        else:
            raise ValueError(f"unknown definition op {op}")
    return out


# ---------------------------------------------------------------- polynomialize

def polynomialize(system: PolynomialSystem) -> Stage:
    """Sum of squares after reducing every monomial of the p_i to degree <= 2."""
    if not system.equations:
        raise FormulaError("polynomialize needs at least one equation")
    for v in system.variables:
        if v.domain != ALL_REALS:
            raise FormulaError(f"variable {v.name} must range over all reals in a polynomial system")
    used = set(system.names)
    eqs = list(system.equations)
    pair_var: dict[tuple, str] = {}
    definitions = []
    counter = 0
    while True:
        target = None
        for p in eqs:
            for mono in sorted(p.terms, key=lambda m: (-len(m), m)):
                if len(mono) > 2:
                    target = (mono[0], mono[1])
                    break
            if target:
                break
        if target is None:
            break
        u = pair_var.get(target)
        if u is None:
            counter += 1
            u = f"U{counter}"
            while u in used:
                counter += 1
                u = f"U{counter}"
            used.add(u)
            pair_var[target] = u
            definitions.append((u, "mul", target))
        a, b = target
        eqs = [_reduce_pair(p, a, b, u) for p in eqs]
    squares = eqs + [Polynomial.var(u) - Polynomial.var(a) * Polynomial.var(b) for (a, b), u in pair_var.items()]
    F = Polynomial()
    for p in squares:
        F = F + p * p
    fresh = [Variable(u, EXISTENTIAL, ALL_REALS) for u, _, _ in definitions]
    defs = list(definitions)
    return Stage(
        "polynomialize",
        F,
        fresh,
        defs,
        lambda a: run_definitions(defs, a),
    )


def _reduce_pair(p: Polynomial, a: str, b: str, u: str) -> Polynomial:
    """Replace a*b by u in monomials of degree > 2 only."""
    out = {}
    for m, c in p.terms.items():
        key = m
        if len(m) > 2:
            lst = list(m)
            if a in lst:
                lst.remove(a)
                if b in lst:
                    lst.remove(b)
                    lst.append(u)
                    key = tuple(sorted(lst))
        out[key] = out.get(key, 0) + c
    return Polynomial(out)


# ---------------------------------------------------------------- constants

class ChainContext:
    """Shared builder for fresh variables, constant definitions and constraints."""

    def __init__(self, variables=(), prefix="V", reserved=()):
        self.builder = FormulaBuilder(variables)
        self.reserved = set(reserved)
        self.domain = POSITIVE if prefix == "W" else ALL_REALS
        self.definitions: list = []
        self.prefix = prefix
        self.counter = 0
        self.intro: dict[int, str] = {}
        self._chains: dict[tuple, str] = {}
        self._products: dict[tuple, str] = {}

    def _taken(self, name) -> bool:
        return self.builder.has(name) or name in self.reserved

    def fresh(self, stem=None) -> str:
        if stem is None:
            self.counter += 1
            stem = f"{self.prefix}{self.counter}"
            while self._taken(stem):
                self.counter += 1
                stem = f"{self.prefix}{self.counter}"
        else:
            base, k = stem, 1
            while self._taken(stem):
                k += 1
                stem = f"{base}_{k}"
        return self.builder.add_variable(Variable(stem, EXISTENTIAL, self.domain))

    def define(self, op, args, stem=None) -> str:
        name = self.fresh(stem)
        self.definitions.append((name, op, tuple(args)))
        return name

    def const(self, k: int) -> str:
        """One of the constants I_0, I_1, I_-1, I_2, with its defining constraint."""
        if k in self.intro:
            return self.intro[k]
        stem = {0: "I0", 1: "I1", -1: "Im1", 2: "I2"}[k]
        if k == 1:
            name = self.define("const", (1,), stem)
            self.builder.add(CONST_ONE, name)
        elif k == 0:
            name = self.define("const", (0,), stem)
            self.builder.add(ADDITION, name, name, name)
        elif k == 2:
            one = self.const(1)
            name = self.define("const", (2,), stem)
            self.builder.add(ADDITION, one, one, name)
        else:
            zero, one = self.const(0), self.const(1)
            name = self.define("const", (-1,), stem)
            self.builder.add(ADDITION, name, one, zero)
        self.intro[k] = name
        return name

    def mul(self, a: str, b: str) -> str:
        v = self.define("mul", (a, b))
        self.builder.add(MULTIPLICATION, a, b, v)
        return v

    def add(self, a: str, b: str) -> str:
        v = self.define("add", (a, b))
        self.builder.add(ADDITION, a, b, v)
        return v

    def signed_constant(self, c: int, sign: int) -> str:
        """Variable forced to sign*c via the binary expansion of c."""
        if c < 1:
            raise FormulaError("encode_constant needs c >= 1 (use I_0 for zero)")
        key = (c, sign)
        if key in self._chains:
            return self._chains[key]
        bits = bin(c)[2:]
        v = self.const(1)
        if len(bits) > 1:
            two = self.const(2)
            for bit in bits[1:]:
                v = self.mul(two, v)
                if bit == "1":
                    v = self.add(v, self.const(1))
        if sign < 0:
            v = self.mul(self.const(-1), v)
        self._chains[key] = v
        return v

    def product(self, factors: tuple) -> str:
        if len(factors) == 1:
            return factors[0]
        if factors in self._products:
            return self._products[factors]
        v = self.mul(self.product(factors[:-1]), factors[-1])
        self._products[factors] = v
        return v


@dataclass
class ConstantChain:
    target: int
    sign: int
    intro_vars: dict  # value -> name
    chain_vars: list  # (name, intended value)
    constraints: list  # (kind, names)
    value: str  # variable carrying sign*target
    formula: ConstraintFormula = field(repr=False)

    def intended_assignment(self) -> dict:
        a = {n: Fraction(k) for k, n in self.intro_vars.items()}
        a.update({n: Fraction(x) for n, x in self.chain_vars})
        return a


def encode_constant(c: int, sign: int = 1) -> ConstantChain:
    ctx = ChainContext()
    value = ctx.signed_constant(c, sign)
    assignment = run_definitions(ctx.definitions, {})
    intro_names = set(ctx.intro.values())
    chain = [(n, assignment[n]) for n, _, _ in ctx.definitions if n not in intro_names]
    return ConstantChain(
        c, sign, dict(ctx.intro), chain, list(ctx.builder.constraints), value, ctx.builder.build(RAW)
    )


# ---------------------------------------------------------------- monomials

def monomials_to_constraints(F: Polynomial, variables=()) -> Stage:
    """Constraint fragment satisfiable over an assignment iff F vanishes there.

    ``variables`` are the already-declared variables of F; the output formula
    contains them plus fresh existential variables.
    """
    monos = F.monomials()
    if not monos:
        raise FormulaError("monomials_to_constraints needs a nonzero polynomial")
    declared = list(variables)
    known = {v.name for v in declared}
    for x in sorted(F.variables - known):
        declared.append(Variable(x, EXISTENTIAL, ALL_REALS))
    ctx = ChainContext(declared, prefix="V")
    terms = []
    for sign, coef, mono in monos:
        if mono and sign * coef == 1:
            terms.append(ctx.product(mono))
            continue
        k = ctx.signed_constant(coef, sign)
        terms.append(ctx.mul(k, ctx.product(mono)) if mono else k)
    zero = ctx.const(0)
    if len(terms) == 1:
        ctx.builder.add(ADDITION, terms[0], zero, zero)
    else:
        acc = terms[0]
        for t in terms[1:-1]:
            acc = ctx.add(acc, t)
        ctx.builder.add(ADDITION, acc, terms[-1], zero)
    out = ctx.builder.build(RAW)
    defs = list(ctx.definitions)
    fresh = [out.variables[out.index_of(n)] for n, _, _ in defs]
    return Stage("monomials_to_constraints", out, fresh, defs, lambda a: run_definitions(defs, a))


# ---------------------------------------------------------------- positivize

def plus_name(z: str) -> str:
    return f"{z}_p"


def minus_name(z: str) -> str:
    return f"{z}_m"


def positivize(f: ConstraintFormula) -> Stage:
    """Split every variable Z into positive Z_p, Z_m with Z = Z_p - Z_m."""
    pairs = []
    for v in f.variables:
        pairs.append(Variable(plus_name(v.name), v.quantifier, POSITIVE))
        pairs.append(Variable(minus_name(v.name), v.quantifier, POSITIVE))
    ctx = ChainContext(pairs, prefix="W", reserved=f.names)
    split_defs = []
    for v in f.variables:
        split_defs.append((plus_name(v.name), "pos", (v.name,)))
        split_defs.append((minus_name(v.name), "neg", (v.name,)))
    one = ctx.define("const", (1,), "I1")
    ctx.builder.add(CONST_ONE, one)
    b = ctx.builder
    for c in f.constraints:
        names = f.operand_names(c)
        P = [plus_name(n) for n in names]
        M = [minus_name(n) for n in names]
        if c.kind == CONST_ONE:
            b.add(ADDITION, M[0], one, P[0])
        elif c.kind == ADDITION:
            va = ctx.add(P[0], P[1])
            vb = ctx.add(M[0], M[1])
            vc = ctx.add(vb, P[2])
            b.add(ADDITION, va, M[2], vc)
        else:
            m1 = ctx.mul(P[0], P[1])
            m2 = ctx.mul(M[0], M[1])
            m3 = ctx.mul(P[0], M[1])
            m4 = ctx.mul(M[0], P[1])
            s1 = ctx.add(m1, m2)
            s2 = ctx.add(m3, m4)
            if c.kind == MULTIPLICATION:
                lhs = ctx.add(s1, M[2])
                b.add(ADDITION, s2, P[2], lhs)
            else:
                b.add(ADDITION, s2, one, s1)
    out = b.build(CONSTRAINED_UETR)
    defs = split_defs + list(ctx.definitions)
    originals = set(f.names)

    def extend(a):
        full = run_definitions(defs, a)
        return {k: v for k, v in full.items() if k not in originals}

    fresh = [out.variables[out.index_of(n)] for n, _, _ in ctx.definitions]
    return Stage("positivize", out, fresh, defs, extend)


def restrict_positive(assignment: Mapping, names) -> dict:
    """Recover Z = Z_p - Z_m for the given original names."""
    return {n: Fraction(assignment[plus_name(n)]) - Fraction(assignment[minus_name(n)]) for n in names}


# ---------------------------------------------------------------- pipeline

@dataclass
class Normalization:
    formula: ConstraintFormula
    stages: list
    original_names: list
    extend: Callable[[Mapping], dict]

    def witness_map(self) -> list[str]:
        lines = []
        for s in self.stages:
            lines.append(f"# {s.name}")
            lines.extend(s.witness_map())
        return lines

    def restrict(self, assignment: Mapping) -> dict:
        if all(n in assignment for n in self.original_names):
            return {n: Fraction(assignment[n]) for n in self.original_names}
        return restrict_positive(assignment, self.original_names)


def normalize_uetr(source) -> Normalization:
    """Compose polynomialize, monomials_to_constraints and positivize."""
    if isinstance(source, str):
        source = parse_polynomial_system(source)
    if isinstance(source, ConstraintFormula):
        if not validate_dialect(source, CONSTRAINED_UETR):
            return _pass_through(source)
        source = system_from_formula(source)
    s1 = polynomialize(source)
    s2 = monomials_to_constraints(s1.output, list(source.variables) + s1.fresh)
    s3 = positivize(s2.output)
    names = source.names

    def extend(a):
        w = s1.extend(a)
        w = s2.extend(w)
        return s3.extend(w)

    return Normalization(s3.output, [s1, s2, s3], names, extend)


def _pass_through(f: ConstraintFormula) -> Normalization:
    b = FormulaBuilder(f.variables)
    for c in f.constraints:
        b.add(c.kind, *f.operand_names(c))
    one = b.fresh("I1")
    b.add(CONST_ONE, one)
    defs = [(one, "const", (1,))]
    stage = Stage("identity", b.build(CONSTRAINED_UETR), [Variable(one, EXISTENTIAL, POSITIVE)], defs,
                  lambda a: {one: Fraction(1)})
    out = stage.output
    out = ConstraintFormula(
        tuple(Variable(v.name, v.quantifier, POSITIVE) for v in out.variables), out.constraints, CONSTRAINED_UETR
    )
    stage.output = out
    return Normalization(out, [stage], f.names, lambda a: {**{k: Fraction(v) for k, v in a.items()}, one: Fraction(1)})
