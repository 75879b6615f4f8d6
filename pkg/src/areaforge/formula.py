"""Constraint formulas over the reals: data model, grammar, evaluation.

Grammar (whitespace and newlines are insignificant, ``#`` starts a comment)::

    formula := block+ ':' atom ('and' atom)*
    block   := ('forall' | 'exists') ['+'] name (',' name)*
    atom    := V '=' 1 | A '+' B '=' C | A '*' B '=' C | A '*' B '=' 1

A ``+`` after the quantifier keyword restricts the block to positive reals.
"""
from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping

import networkx as nx

UNIVERSAL = "universal"
EXISTENTIAL = "existential"
ALL_REALS = "all_reals"
POSITIVE = "positive_reals"

CONST_ONE = "const_one"
ADDITION = "addition"
MULTIPLICATION = "multiplication"
INVERSION = "inversion"

ARITY = {CONST_ONE: 1, ADDITION: 3, MULTIPLICATION: 3, INVERSION: 2}

ETRINV = "ETRINV"
PLANAR_ETRINV = "PlanarETRINV"
CONSTRAINED_UETR = "ConstrainedUETR"
RAW = "raw"
DIALECTS = (ETRINV, PLANAR_ETRINV, CONSTRAINED_UETR, RAW)

FORMAT_VERSION = 1


class FormulaError(ValueError):
    """Semantic problem in a formula (duplicate or undeclared names, bad arity)."""


class FormulaSyntaxError(FormulaError):
    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"{message} at line {line}, column {column}")
        self.line = line
        self.column = column


class EvaluationError(ValueError):
    pass


@dataclass(frozen=True)
class Variable:
    name: str
    quantifier: str = EXISTENTIAL
    domain: str = ALL_REALS

    @property
    def positive(self) -> bool:
        return self.domain == POSITIVE


@dataclass(frozen=True)
class Constraint:
    kind: str
    operands: tuple  # variable ids

    def __post_init__(self):
        if self.kind not in ARITY:
            raise FormulaError(f"unknown constraint kind {self.kind!r}")
        if len(self.operands) != ARITY[self.kind]:
            raise FormulaError(f"{self.kind} takes {ARITY[self.kind]} operands, got {len(self.operands)}")


@dataclass(frozen=True)
class ConstraintFormula:
    variables: tuple
    constraints: tuple
    dialect: str = RAW
    _index: dict = field(default=None, compare=False, repr=False, hash=False)

    def __post_init__(self):
        index = {}
        for i, v in enumerate(self.variables):
            if v.name in index:
                raise FormulaError(f"duplicate variable {v.name!r}")
            index[v.name] = i
        n = len(self.variables)
        for c in self.constraints:
            for op in c.operands:
                if not (isinstance(op, int) and 0 <= op < n):
                    raise FormulaError(f"constraint operand {op!r} does not name a declared variable")
        if self.dialect not in DIALECTS:
            raise FormulaError(f"unknown dialect {self.dialect!r}")
        object.__setattr__(self, "_index", index)

    def index_of(self, name: str) -> int:
        try:
            return self._index[name]
        except KeyError:
            raise FormulaError(f"undeclared variable {name!r}") from None

    def name_of(self, i: int) -> str:
        return self.variables[i].name

    @property
    def names(self) -> list[str]:
        return [v.name for v in self.variables]

    def operand_names(self, c: Constraint) -> tuple:
        return tuple(self.variables[i].name for i in c.operands)

    def with_dialect(self, dialect: str) -> "ConstraintFormula":
        return ConstraintFormula(self.variables, self.constraints, dialect)

    def size(self) -> int:
        """Number of variables plus total operand count."""
        return len(self.variables) + sum(len(c.operands) for c in self.constraints)

    def __str__(self):
        return serialize(self)


class FormulaBuilder:
    """Incremental construction of a formula with operands given by name."""

    def __init__(self, variables: Iterable[Variable] = ()):
        self.variables: list[Variable] = []
        self.constraints: list[tuple] = []
        self._names: set[str] = set()
        for v in variables:
            self.add_variable(v)

    def add_variable(self, v: Variable) -> str:
        if v.name in self._names:
            raise FormulaError(f"duplicate variable {v.name!r}")
        self._names.add(v.name)
        self.variables.append(v)
        return v.name

    def has(self, name: str) -> bool:
        return name in self._names

    def fresh(self, stem: str, quantifier=EXISTENTIAL, domain=ALL_REALS) -> str:
        name = stem
        k = 1
        while name in self._names:
            k += 1
            name = f"{stem}_{k}"
        return self.add_variable(Variable(name, quantifier, domain))

    def add(self, kind: str, *names: str):
        self.constraints.append((kind, tuple(names)))

    def build(self, dialect: str = RAW) -> ConstraintFormula:
        variables = sorted(self.variables, key=lambda v: v.quantifier != UNIVERSAL)
        index = {v.name: i for i, v in enumerate(variables)}
        cons = []
        for kind, names in self.constraints:
            missing = [n for n in names if n not in index]
            if missing:
                raise FormulaError(f"undeclared variable {missing[0]!r}")
            cons.append(Constraint(kind, tuple(index[n] for n in names)))
        return ConstraintFormula(tuple(variables), tuple(cons), dialect)


# ---------------------------------------------------------------- tokenizer

_TOKEN = re.compile(
    r"(?P<ws>[ \t\r]+)|(?P<nl>\n)|(?P<comment>#[^\n]*)"
    r"|(?P<num>\d+)|(?P<name>[A-Za-z_][A-Za-z0-9_']*)"
    r"|(?P<op>\^|[+\-*=:,()])"
)


@dataclass
class Token:
    kind: str
    text: str
    line: int
    col: int


def tokenize(text: str) -> list[Token]:
    tokens = []
    pos, line, line_start = 0, 1, 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise FormulaSyntaxError(f"unexpected character {text[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup
        if kind == "nl":
            line += 1
            line_start = m.end()
        elif kind not in ("ws", "comment"):
            tokens.append(Token(kind, m.group(), line, pos - line_start + 1))
        pos = m.end()
    tokens.append(Token("eof", "", line, pos - line_start + 1))
    return tokens


class _Cursor:
    def __init__(self, tokens):
        self.tokens = tokens
        self.i = 0

    @property
    def tok(self) -> Token:
        return self.tokens[self.i]

    def peek(self, k=1) -> Token:
        return self.tokens[min(self.i + k, len(self.tokens) - 1)]

    def advance(self) -> Token:
        t = self.tokens[self.i]
        if t.kind != "eof":
            self.i += 1
        return t

    def error(self, message, tok=None):
        tok = tok or self.tok
        return FormulaSyntaxError(message, tok.line, tok.col)

    def expect(self, text) -> Token:
        if self.tok.text != text:
            found = self.tok.text or "end of input"
            raise self.error(f"expected {text!r}, found {found!r}")
        return self.advance()

    def name(self) -> Token:
        if self.tok.kind != "name" or self.tok.text in ("forall", "exists", "and"):
            raise self.error(f"expected a variable name, found {self.tok.text or 'end of input'!r}")
        return self.advance()


def parse_header(cur: _Cursor) -> list[tuple[Variable, Token]]:
    """Parse quantifier blocks up to and including the colon."""
    declared = []
    seen_existential = False
    if cur.tok.text not in ("forall", "exists"):
        raise cur.error("formula must start with 'forall' or 'exists'")
    while cur.tok.text in ("forall", "exists"):
        kw = cur.advance()
        quant = UNIVERSAL if kw.text == "forall" else EXISTENTIAL
        if quant == UNIVERSAL and seen_existential:
            raise cur.error("universal block after existential block", kw)
        seen_existential |= quant == EXISTENTIAL
        domain = ALL_REALS
        if cur.tok.text == "+":
            cur.advance()
            domain = POSITIVE
        while True:
            t = cur.name()
            declared.append((Variable(t.text, quant, domain), t))
            if cur.tok.text != ",":
                break
            cur.advance()
    cur.expect(":")
    names = set()
    for v, t in declared:
        if v.name in names:
            raise FormulaError(f"duplicate variable {v.name!r} (line {t.line}, column {t.col})")
        names.add(v.name)
    return declared


def _operand(cur: _Cursor, declared: set) -> str:
    t = cur.name()
    if t.text not in declared:
        raise FormulaError(f"undeclared variable {t.text!r} (line {t.line}, column {t.col})")
    return t.text


def _atom(cur: _Cursor, declared: set) -> tuple:
    start = cur.tok
    a = _operand(cur, declared)
    if cur.tok.text == "=":
        cur.advance()
        if cur.tok.text != "1":
            raise cur.error("only 'V = 1' is allowed as a constant atom")
        cur.advance()
        return CONST_ONE, (a,)
    if cur.tok.text not in ("+", "*"):
        raise cur.error("expected '=', '+' or '*'")
    op = cur.advance().text
    b = _operand(cur, declared)
    cur.expect("=")
    if cur.tok.text == "1":
        if op != "*":
            raise cur.error("'A + B = 1' is not an atom", start)
        cur.advance()
        return INVERSION, (a, b)
    c = _operand(cur, declared)
    return (ADDITION if op == "+" else MULTIPLICATION), (a, b, c)


def parse_formula(text: str, dialect: str | None = None) -> ConstraintFormula:
    """Parse the atom grammar; infer the dialect when none is given."""
    cur = _Cursor(tokenize(text))
    declared = parse_header(cur)
    builder = FormulaBuilder(v for v, _ in declared)
    names = {v.name for v, _ in declared}
    if cur.tok.kind != "eof":
        while True:
            kind, ops = _atom(cur, names)
            builder.add(kind, *ops)
            if cur.tok.text != "and":
                break
            cur.advance()
    if cur.tok.kind != "eof":
        raise cur.error(f"unexpected {cur.tok.text!r}")
    f = builder.build(RAW)
    return f.with_dialect(dialect or infer_dialect(f))


def infer_dialect(f: ConstraintFormula) -> str:
    kinds = {c.kind for c in f.constraints}
    if all(v.positive for v in f.variables) and INVERSION not in kinds and f.variables:
        return CONSTRAINED_UETR
    if all(v.quantifier == EXISTENTIAL for v in f.variables) and MULTIPLICATION not in kinds:
        return ETRINV
    return RAW


def _atom_text(f: ConstraintFormula, c: Constraint) -> str:
    n = f.operand_names(c)
    if c.kind == CONST_ONE:
        return f"{n[0]} = 1"
    if c.kind == ADDITION:
        return f"{n[0]} + {n[1]} = {n[2]}"
    if c.kind == MULTIPLICATION:
        return f"{n[0]} * {n[1]} = {n[2]}"
    return f"{n[0]} * {n[1]} = 1"


def serialize(f: ConstraintFormula) -> str:
    """Canonical text: maximal runs of equal (quantifier, domain) form one block."""
    blocks = []
    for v in f.variables:
        key = (v.quantifier, v.domain)
        if blocks and blocks[-1][0] == key:
            blocks[-1][1].append(v.name)
        else:
            blocks.append((key, [v.name]))
    head = " ".join(
        ("forall" if q == UNIVERSAL else "exists") + ("+" if d == POSITIVE else "") + " " + ",".join(ns)
        for (q, d), ns in blocks
    )
    body = " and ".join(_atom_text(f, c) for c in f.constraints)
    return f"{head}: {body}" if body else f"{head}:"


def to_json(f: ConstraintFormula) -> dict:
    return {
        "format_version": FORMAT_VERSION,
        "dialect": f.dialect,
        "variables": [{"name": v.name, "quantifier": v.quantifier, "domain": v.domain} for v in f.variables],
        "constraints": [{"kind": c.kind, "operands": list(f.operand_names(c))} for c in f.constraints],
    }


def from_json(data: dict | str) -> ConstraintFormula:
    if isinstance(data, str):
        data = json.loads(data)
    b = FormulaBuilder(Variable(v["name"], v["quantifier"], v["domain"]) for v in data["variables"])
    for c in data["constraints"]:
        b.add(c["kind"], *c["operands"])
    return b.build(data.get("dialect", RAW))


# ---------------------------------------------------------------- semantics

def _as_fraction(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, float):
        return Fraction(x)
    return Fraction(x)


def check_assignment(f: ConstraintFormula, assignment: Mapping) -> list[Fraction]:
    values = []
    for v in f.variables:
        if v.name not in assignment:
            raise EvaluationError(f"assignment misses variable {v.name!r}")
        x = _as_fraction(assignment[v.name])
        if v.positive and x <= 0:
            raise EvaluationError(f"variable {v.name!r} must be positive, got {x}")
        values.append(x)
    return values


def constraint_holds(kind: str, vals) -> bool:
    if kind == CONST_ONE:
        return vals[0] == 1
    if kind == ADDITION:
        return vals[0] + vals[1] == vals[2]
    if kind == MULTIPLICATION:
        return vals[0] * vals[1] == vals[2]
    return vals[0] * vals[1] == 1


def evaluate(f: ConstraintFormula, assignment: Mapping) -> bool:
    """Exact truth value of the matrix under a rational assignment."""
    values = check_assignment(f, assignment)
    return all(constraint_holds(c.kind, [values[i] for i in c.operands]) for c in f.constraints)


def violated_constraints(f: ConstraintFormula, assignment: Mapping) -> list[int]:
    values = check_assignment(f, assignment)
    return [
        j for j, c in enumerate(f.constraints)
        if not constraint_holds(c.kind, [values[i] for i in c.operands])
    ]


# ---------------------------------------------------------------- incidence

@dataclass(frozen=True)
class IncidenceGraph:
    variables: tuple  # names
    constraints: tuple  # constraint indices
    edges: tuple  # (variable name, constraint index), sorted

    @property
    def nodes(self) -> list:
        return [("v", n) for n in self.variables] + [("c", j) for j in self.constraints]

    def to_networkx(self) -> nx.Graph:
        g = nx.Graph()
        g.add_nodes_from(self.nodes)
        g.add_edges_from((("v", v), ("c", j)) for v, j in self.edges)
        return g

    def degree(self, node) -> int:
        kind, key = node
        if kind == "v":
            return sum(1 for v, _ in self.edges if v == key)
        return sum(1 for _, j in self.edges if j == key)


def incidence_graph(f: ConstraintFormula) -> IncidenceGraph:
    edges = set()
    for j, c in enumerate(f.constraints):
        for i in set(c.operands):
            edges.add((f.name_of(i), j))
    order = {n: i for i, n in enumerate(f.names)}
    return IncidenceGraph(
        tuple(f.names),
        tuple(range(len(f.constraints))),
        tuple(sorted(edges, key=lambda e: (e[1], order[e[0]]))),
    )


def is_planar_graph(g: nx.Graph) -> bool:
    planar, _ = nx.check_planarity(g)
    return planar


def validate_dialect(f: ConstraintFormula, dialect: str) -> list[str]:
    """Every rule of ``dialect`` that ``f`` violates; empty means ok."""
    problems = []
    kinds = {c.kind for c in f.constraints}
    if dialect in (ETRINV, PLANAR_ETRINV):
        if any(v.quantifier == UNIVERSAL for v in f.variables):
            problems.append("universal quantifier forbidden")
        if MULTIPLICATION in kinds:
            problems.append("multiplication not in dialect")
        if dialect == PLANAR_ETRINV:
            from .planarizer import incidence_is_planar

            if not incidence_is_planar(f):
                problems.append("incidence graph is not planar")
    elif dialect == CONSTRAINED_UETR:
        if INVERSION in kinds:
            problems.append("inversion not in dialect")
        for v in f.variables:
            if not v.positive:
                problems.append(f"variable {v.name} must have positive domain")
    elif dialect != RAW:
        problems.append(f"unknown dialect {dialect}")
    return problems
