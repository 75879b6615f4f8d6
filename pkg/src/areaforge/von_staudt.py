"""Point placements with prescribed triangle areas that encode arithmetic.

All variable points live on the line through ``p0`` and ``p1``; a point's value
is its signed offset from ``p0`` measured in units of ``|p0 p1|``.  Each gadget
appends area triples and also records how to place its auxiliary points from
the positions of its inputs, so a satisfying assignment can be turned into an
exact rational placement (``witness``).

Areas are unsigned: a triple with target ``a`` is satisfied when
``|det(q - p, r - p)| / 2 == a``.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping

from . import formula as fm
from .plane import num_from_json, num_to_json

AREA = "area"
UNIVERSAL = "universal"
FREE = "unconstrained"

P0, P1, R = "p0", "p1", "r"
FRAME_POSITIONS = {P0: (Fraction(0), Fraction(0)), P1: (Fraction(1), Fraction(0)), R: (Fraction(0), Fraction(2))}


class TripleError(ValueError):
    pass


@dataclass(frozen=True)
class Triple:
    points: tuple
    label: str = AREA
    area: Fraction | None = None
    tag: str | None = None

    def target(self, universal_values: Mapping | None = None):
        if self.label == AREA:
            return self.area
        if self.label == UNIVERSAL:
            if universal_values is None or self.tag not in universal_values:
                raise TripleError(f"no value for universal area {self.tag!r}")
            return universal_values[self.tag]
        return None

    def to_json(self) -> dict:
        d = {"points": list(self.points), "label": self.label}
        if self.area is not None:
            d["area"] = num_to_json(self.area)
        if self.tag is not None:
            d["tag"] = self.tag
        return d

    @staticmethod
    def from_json(d) -> "Triple":
        area = num_from_json(d["area"]) if "area" in d else None
        return Triple(tuple(d["points"]), d["label"], area, d.get("tag"))


@dataclass
class TripleInstance:
    points: list = field(default_factory=list)
    triples: list = field(default_factory=list)
    frame: tuple = (P0, P1, R)
    variables: dict = field(default_factory=dict)  # variable name -> point name
    steps: list = field(default_factory=list)  # construction recipes for witnesses
    counter: int = 0

    # building blocks
    def new_point(self, stem: str) -> str:
        name = f"{stem}#{self.counter}"
        self.counter += 1
        self.points.append(name)
        return name

    def add_triple(self, a, b, c, area=None, tag=None, label=None) -> Triple:
        for p in (a, b, c):
            if p not in self.points:
                raise TripleError(f"unknown point {p!r}")
        if label is None:
            label = UNIVERSAL if tag is not None else AREA
        t = Triple((a, b, c), label, None if area is None else Fraction(area), tag)
        self.triples.append(t)
        return t

    def universal_tags(self) -> list:
        return sorted({t.tag for t in self.triples if t.label == UNIVERSAL})

    def value_of(self, name: str, positions: Mapping):
        """Signed position of a line point in units of |p0 p1|."""
        (ax, ay), (bx, by) = positions[self.frame[0]], positions[self.frame[1]]
        x, y = positions[name]
        ux, uy = bx - ax, by - ay
        return ((x - ax) * ux + (y - ay) * uy) / (ux * ux + uy * uy)

    def extract(self, positions: Mapping) -> dict:
        return {v: self.value_of(p, positions) for v, p in self.variables.items()}

    def residuals(self, positions: Mapping, universal_values: Mapping | None = None) -> list:
        out = []
        for t in self.triples:
            target = t.target(universal_values)
            if target is None:
                continue
            a, b, c = (positions[p] for p in t.points)
            out.append(abs(det(a, b, c)) / 2 - target)
        return out

    def check(self, positions: Mapping, universal_values: Mapping | None = None, tol=None) -> bool:
        res = self.residuals(positions, universal_values)
        if tol is None:
            return all(r == 0 for r in res)
        return all(abs(r) <= tol for r in res)

    def to_json(self) -> dict:
        return {
            "format_version": fm.FORMAT_VERSION,
            "points": list(self.points),
            "frame": list(self.frame),
            "variables": dict(sorted(self.variables.items())),
            "triples": [t.to_json() for t in self.triples],
            "steps": [[k, list(i), list(o)] for k, i, o in self.steps],
        }

    @staticmethod
    def from_json(data) -> "TripleInstance":
        if isinstance(data, str):
            data = json.loads(data)
        t = TripleInstance(list(data["points"]), [Triple.from_json(d) for d in data["triples"]],
                           tuple(data["frame"]), dict(data["variables"]))
        t.steps = [(k, tuple(i), tuple(o)) for k, i, o in data.get("steps", [])]
        t.counter = len(t.points)
        return t

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2, sort_keys=True)


def det(a, b, c):
    return (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])


def frame() -> TripleInstance:
    t = TripleInstance()
    t.points.extend([P0, P1, R])
    t.add_triple(P0, P1, R, 1)
    return t


def add_line_point(t: TripleInstance, stem: str, variable: str | None = None) -> str:
    """A point forced onto the value line and away from p0."""
    x = t.new_point(stem)
    t.add_triple(x, P0, P1, 0)
    if variable is not None:
        t.variables[variable] = x
        t.steps.append(("value", (variable,), (x,)))
    add_nonzero(t, x, P0)
    return x


def add_nonzero(t: TripleInstance, x: str, other: str) -> list:
    q = t.new_point("q")
    t.steps.append(("nonzero", (x, other), (q,)))
    return [t.add_triple(x, other, q, 1)]


def add_addition(t: TripleInstance, x: str, y: str, z: str) -> list:
    q1, q2 = t.new_point("q"), t.new_point("q")
    t.steps.append(("addition", (x, y, z), (q1, q2)))
    return [
        t.add_triple(P0, x, q1, 1), t.add_triple(y, z, q1, 1),
        t.add_triple(P0, y, q2, 1), t.add_triple(x, z, q2, 1),
    ]


def add_parallel(t: TripleInstance, p: str, p2: str, s: str, s2: str) -> list:
    """Trapezoid forcing line(p, p2) parallel to a different line(s, s2)."""
    h1, h2 = t.new_point("h"), t.new_point("h")
    t.steps.append(("parallel", (p, p2, s, s2), (h1, h2)))
    return [
        t.add_triple(p, p2, h1, 0), t.add_triple(s, s2, h2, 0),
        t.add_triple(p, h1, s, 1), t.add_triple(p, h1, h2, 1),
        t.add_triple(s, h2, p, 2), t.add_triple(s, h2, h1, 2),
    ]


def add_parallel_or_equal(t: TripleInstance, p: str, p2: str, s: str, s2: str) -> list:
    """Force line(p, p2) and line(s, s2) parallel or identical.

    Both are tied to a helper line, which can always be chosen distinct from
    either of them, so the coinciding case stays realizable.
    """
    c, c2 = t.new_point("c"), t.new_point("c")
    t.steps.append(("helper_line", (p, p2, s, s2), (c, c2)))
    out = add_nonzero(t, c, c2)
    out += add_parallel(t, p, p2, c, c2)
    out += add_parallel(t, s, s2, c, c2)
    return out


def add_multiplication(t: TripleInstance, x: str, y: str, z: str) -> list:
    p, p2 = t.new_point("m"), t.new_point("m")
    t.steps.append(("multiplication", (x, y, z), (p, p2)))
    out = [t.add_triple(P0, P1, p, 1), t.add_triple(P0, p, p2, 0)]
    out += add_parallel_or_equal(t, P1, p, y, p2)
    out += add_parallel_or_equal(t, x, p, z, p2)
    return out


def add_positivity(t: TripleInstance, x: str) -> list:
    s = t.new_point("s")
    t.steps.append(("root", (x,), (s,)))
    out = [t.add_triple(s, P0, P1, 0)]
    out += add_nonzero(t, s, P0)
    out += add_multiplication(t, s, s, x)
    return out


def add_universal(t: TripleInstance, y: str, tag: str) -> list:
    return [t.add_triple(P0, R, y, tag=tag)]


def add_constant_one(t: TripleInstance, x: str) -> list:
    # with positivity in place this pins x to p1
    t.steps.append(("one", (x,), ()))
    return [t.add_triple(P0, R, x, 1)]


def build_triples(f: fm.ConstraintFormula) -> TripleInstance:
    bad = [c.kind for c in f.constraints if c.kind == fm.INVERSION]
    if bad:
        raise TripleError("inversion constraints must be rewritten as multiplication first")
    t = frame()
    pts = [add_line_point(t, "x", v.name) for v in f.variables]
    for v, p in zip(f.variables, pts):
        if v.quantifier == fm.UNIVERSAL:
            add_universal(t, p, v.name)
    for c in f.constraints:
        ops = [pts[i] for i in c.operands]
        if c.kind == fm.CONST_ONE:
            add_constant_one(t, *ops)
        elif c.kind == fm.ADDITION:
            add_addition(t, *ops)
        else:
            add_multiplication(t, *ops)
    for p in pts:
        add_positivity(t, p)
    return t


def _sqrt(v):
    if isinstance(v, Fraction) and v >= 0:
        n, d = math.isqrt(v.numerator), math.isqrt(v.denominator)
        if n * n == v.numerator and d * d == v.denominator:
            return Fraction(n, d)
    return math.sqrt(v)


def _sub(a, b):
    return (a[0] - b[0], a[1] - b[1])


def witness(t: TripleInstance, values: Mapping, roots: Mapping | None = None) -> dict:
    """Placement realizing every area triple for the given variable values.

    ``values`` maps variable names to numbers; rational input yields an exact
    placement wherever square roots (positivity) are rational.  ``roots`` may
    choose the sign of individual square-root points by point name.
    """
    pos = dict(FRAME_POSITIONS)
    roots = roots or {}
    zero = Fraction(0)
    for kind, ins, outs in t.steps:
        if kind == "value":
            pos[outs[0]] = (Fraction(values[ins[0]]) if not isinstance(values[ins[0]], float) else values[ins[0]], zero)
        elif kind == "one":
            continue
        elif kind == "nonzero":
            a, b = pos[ins[0]], pos[ins[1]]
            dx, dy = _sub(b, a)
            n2 = dx * dx + dy * dy
            if n2 == 0:
                raise TripleError(f"points {ins[0]} and {ins[1]} coincide")
            pos[outs[0]] = (a[0] - dy * 2 / n2, a[1] + dx * 2 / n2)
        elif kind == "addition":
            x, y, _ = (pos[n][0] for n in ins)
            pos[outs[0]] = (x / 2, 2 / abs(x))
            pos[outs[1]] = (y / 2, -2 / abs(y))
        elif kind == "root":
            s = _sqrt(pos[ins[0]][0])
            if roots.get(outs[0], 1) < 0:
                s = -s
            pos[outs[0]] = (s, zero)
        elif kind == "multiplication":
            y = pos[ins[1]][0]
            p = (Fraction(1) if not isinstance(y, float) else 1.0, Fraction(2))
            pos[outs[0]] = p
            pos[outs[1]] = (p[0] * y, p[1] * y)
        elif kind == "helper_line":
            a, a2, b, _ = (pos[n] for n in ins)
            u = _sub(a2, a)
            beta = det(a, a2, b)
            n2 = u[0] * u[0] + u[1] * u[1]
            k = (abs(beta) + 1) / n2
            c = (a[0] - u[1] * k, a[1] + u[0] * k)
            pos[outs[0]] = c
            pos[outs[1]] = (c[0] + u[0], c[1] + u[1])
        elif kind == "parallel":
            p, p2, s, _ = (pos[n] for n in ins)
            u = _sub(p2, p)
            cross = abs(det(p, p2, s))
            if cross == 0:
                raise TripleError("parallel lines coincide")
            pos[outs[0]] = (p[0] + u[0] * 2 / cross, p[1] + u[1] * 2 / cross)
            pos[outs[1]] = (s[0] + u[0] * 4 / cross, s[1] + u[1] * 4 / cross)
        else:
            raise TripleError(f"unknown construction step {kind!r}")
    return pos


def propagate_values(t: TripleInstance, known: Mapping) -> dict:
    """Variable values implied by constants and gadget steps from the known ones.

    Used only to seed numerical solves; undetermined variables are left out.
    """
    point_of = {p: v for v, p in t.variables.items()}
    val = {t.variables[v]: float(x) for v, x in known.items() if v in t.variables}
    rules = [(k, ins) for k, ins, _ in t.steps if k in ("one", "addition", "multiplication")]
    changed = True
    while changed:
        changed = False
        for kind, ins in rules:
            if kind == "one":
                if ins[0] not in val:
                    val[ins[0]] = 1.0
                    changed = True
                continue
            a, b, c = (val.get(n) for n in ins)
            if kind == "addition":
                new = {ins[2]: a + b} if c is None and None not in (a, b) else \
                    {ins[1]: c - a} if b is None and None not in (a, c) else \
                    {ins[0]: c - b} if a is None and None not in (b, c) else {}
            else:
                new = {ins[2]: a * b} if c is None and None not in (a, b) else \
                    {ins[1]: c / a} if b is None and None not in (a, c) and a else \
                    {ins[0]: c / b} if a is None and None not in (b, c) and b else {}
            new = {k: v for k, v in new.items() if k in point_of}
            if new:
                val.update(new)
                changed = True
    return {point_of[p]: x for p, x in val.items() if p in point_of}
