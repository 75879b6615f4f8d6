"""First-order encodings of drawing problems as s-expressions or SMT-LIB text.

Native grammar::

    term    := number | name | (+ term*) | (- term term*) | (* term*)
             | (det p q r)            ; twice the signed area of triangle pqr
    point   := (pt term term) | (pt3 term term term)
    atom    := (= term term) | (>= term term) | (> term term)
             | (<= term term) | (< term term)
    formula := atom | (and formula*) | (or formula*) | (not formula)
             | (=> formula formula) | (forall (name*) formula)
             | (exists (name*) formula) | true | false

Numbers are integers or ``p/q`` rationals.  ``det`` expands to
``(bx-ax)(cy-ay) - (by-ay)(cx-ax)``; ``det4`` takes four ``pt3`` points and
expands to the 4x4 determinant with a row of ones.

The drawing predicates are emitted so that evaluating the matrix on a drawing
gives the same verdict as :func:`areaforge.plane.verify_drawing` in exact mode.
"""
from __future__ import annotations

import itertools
import re
from fractions import Fraction
from typing import Mapping

from .plane import PlaneInstance

TRUE, FALSE = ("true",), ("false",)


class EncodingError(ValueError):
    pass


# ---------------------------------------------------------------- builders

def pt(x, y):
    return ("pt", x, y)


def det(a, b, c):
    return ("det", a, b, c)


def cmp(op, a, b):
    return (op, a, b)


def conj(items):
    items = [i for i in items if i != TRUE]
    if any(i == FALSE for i in items):
        return FALSE
    if not items:
        return TRUE
    return items[0] if len(items) == 1 else ("and", *items)


def disj(items):
    items = [i for i in items if i != FALSE]
    if any(i == TRUE for i in items):
        return TRUE
    if not items:
        return FALSE
    return items[0] if len(items) == 1 else ("or", *items)


def _const(term):
    """Value of a variable-free term, else None."""
    try:
        return eval_term(term, {})
    except KeyError:
        return None


def _fold(atom):
    # atoms whose operands are constants become true/false
    a, b = _const(atom[1]), _const(atom[2])
    if a is None or b is None:
        return atom
    return TRUE if _OPS[atom[0]](a, b) else FALSE


# ---------------------------------------------------------------- evaluation

_OPS = {
    "=": lambda a, b: a == b,
    ">=": lambda a, b: a >= b,
    ">": lambda a, b: a > b,
    "<=": lambda a, b: a <= b,
    "<": lambda a, b: a < b,
}


def _point(p, env):
    return tuple(eval_term(c, env) for c in p[1:])


def eval_term(t, env: Mapping):
    if isinstance(t, Fraction):
        return t
    if isinstance(t, int):
        return Fraction(t)
    if isinstance(t, str):
        return env[t]
    head = t[0]
    if head == "+":
        return sum((eval_term(x, env) for x in t[1:]), Fraction(0))
    if head == "-":
        first = eval_term(t[1], env)
        if len(t) == 2:
            return -first
        return first - sum((eval_term(x, env) for x in t[2:]), Fraction(0))
    if head == "*":
        out = Fraction(1)
        for x in t[1:]:
            out *= eval_term(x, env)
        return out
    if head == "det":
        a, b, c = (_point(p, env) for p in t[1:])
        return (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
    if head == "det4":
        return _det4([_point(p, env) for p in t[1:]])
    raise EncodingError(f"unknown term head {head!r}")


def _det4(pts):
    a = pts[0]
    m = [[p[i] - a[i] for i in range(3)] for p in pts[1:]]
    # columns are the edge vectors; matches det of the homogeneous 4x4 matrix
    return (m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[1][0] * (m[0][1] * m[2][2] - m[0][2] * m[2][1])
            + m[2][0] * (m[0][1] * m[1][2] - m[0][2] * m[1][1]))


def eval_formula(f, env: Mapping) -> bool:
    """Truth value of a quantifier-free formula under an exact assignment."""
    head = f[0]
    if head == "true":
        return True
    if head == "false":
        return False
    if head in _OPS:
        return _OPS[head](eval_term(f[1], env), eval_term(f[2], env))
    if head == "and":
        return all(eval_formula(x, env) for x in f[1:])
    if head == "or":
        return any(eval_formula(x, env) for x in f[1:])
    if head == "not":
        return not eval_formula(f[1], env)
    if head == "=>":
        return (not eval_formula(f[1], env)) or eval_formula(f[2], env)
    if head in ("forall", "exists"):
        raise EncodingError("quantified formula; evaluate its matrix instead")
    raise EncodingError(f"unknown formula head {head!r}")


def matrix(f):
    """Strip the quantifier prefix (and a leading nonnegativity premise)."""
    while f[0] in ("forall", "exists"):
        f = f[2]
    if f[0] == "=>":
        f = f[2]
    return f


# ---------------------------------------------------------------- text

def to_text(f) -> str:
    if isinstance(f, Fraction):
        return str(f.numerator) if f.denominator == 1 else f"{f.numerator}/{f.denominator}"
    if isinstance(f, int):
        return str(f)
    if isinstance(f, str):
        return f
    if f[0] in ("forall", "exists"):
        return f"({f[0]} ({' '.join(f[1])}) {to_text(f[2])})"
    if len(f) == 1:
        return f[0]
    return "(" + " ".join([f[0]] + [to_text(x) for x in f[1:]]) + ")"


def to_pretty(f, indent: int = 0) -> str:
    # one conjunct per line at the top levels, compact below
    pad = "  " * indent
    if isinstance(f, tuple) and f and f[0] in ("forall", "exists"):
        return f"{pad}({f[0]} ({' '.join(f[1])})\n{to_pretty(f[2], indent + 1)})"
    if isinstance(f, tuple) and f and f[0] in ("and", "=>") and indent < 4:
        inner = "\n".join(to_pretty(x, indent + 1) for x in f[1:])
        return f"{pad}({f[0]}\n{inner})"
    return pad + to_text(f)


_TOKEN = re.compile(r"[()]|[^\s()]+")
_NUMBER = re.compile(r"^-?\d+(/\d+)?$")


def parse(text: str):
    """Read native s-expression text back into the tuple form."""
    lines = [line.split(";", 1)[0] for line in text.splitlines()]
    tokens = _TOKEN.findall("\n".join(lines))
    stack = [[]]
    for tok in tokens:
        if tok == "(":
            stack.append([])
        elif tok == ")":
            if len(stack) < 2:
                raise EncodingError("unbalanced ')'")
            node = stack.pop()
            stack[-1].append(node)
        else:
            stack[-1].append(Fraction(tok) if _NUMBER.match(tok) else tok)
    if len(stack) != 1 or len(stack[0]) != 1:
        raise EncodingError("expected exactly one formula")
    return _shape(stack[0][0])


def _shape(node):
    if not isinstance(node, list):
        return (node,) if node in ("true", "false") else node
    head = node[0]
    if head in ("forall", "exists"):
        return (head, tuple(node[1]), _shape(node[2]))
    return (head, *[_shape(x) for x in node[1:]])


# ---------------------------------------------------------------- SMT-LIB

def _smt_term(t) -> str:
    if isinstance(t, (Fraction, int)):
        t = Fraction(t)
        body = f"{abs(t.numerator)}.0" if t.denominator == 1 else f"(/ {abs(t.numerator)}.0 {t.denominator}.0)"
        return f"(- {body})" if t < 0 else body
    if isinstance(t, str):
        return t
    head = t[0]
    if head == "det":
        (ax, ay), (bx, by), (cx, cy) = (p[1:] for p in t[1:])
        return _smt_term(("-", ("*", ("-", bx, ax), ("-", cy, ay)), ("*", ("-", by, ay), ("-", cx, ax))))
    if head == "det4":
        a = t[1][1:]
        m = [[("-", p[1 + i], a[i]) for i in range(3)] for p in t[2:]]
        minor = lambda r, c: ("-", ("*", m[r[0]][c[0]], m[r[1]][c[1]]), ("*", m[r[0]][c[1]], m[r[1]][c[0]]))
        expr = ("+", ("*", m[0][0], minor((1, 2), (1, 2))), ("-", 0, ("*", m[1][0], minor((0, 2), (1, 2)))),
                ("*", m[2][0], minor((0, 1), (1, 2))))
        return _smt_term(expr)
    if head == "-" and len(t) == 2:
        return f"(- {_smt_term(t[1])})"
    return "(" + " ".join([head] + [_smt_term(x) for x in t[1:]]) + ")"


def _smt_formula(f) -> str:
    head = f[0]
    if head in ("true", "false"):
        return head
    if head in ("forall", "exists"):
        decls = " ".join(f"({v} Real)" for v in f[1])
        return f"({head} ({decls}) {_smt_formula(f[2])})"
    if head in _OPS:
        return f"({head} {_smt_term(f[1])} {_smt_term(f[2])})"
    return "(" + " ".join([head] + [_smt_formula(x) for x in f[1:]]) + ")"


def to_smt(f) -> str:
    """SMT-LIB 2 script; existential prefixes become declared constants."""
    lines = []
    body = f
    declared = []
    while body[0] == "exists":
        declared.extend(body[1])
        body = body[2]
    quantified = body[0] == "forall"
    lines.append("(set-logic NRA)" if not quantified else "(set-logic ALL)")
    for v in declared:
        lines.append(f"(declare-const {v} Real)")
    lines.append(f"(assert {_smt_formula(body)})")
    lines.append("(check-sat)")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------- drawing predicates

def _box_apart(a, b, c, d, axis):
    # max(a, b) < min(c, d) along one axis
    return conj([cmp("<", p[axis + 1], q[axis + 1]) for p in (a, b) for q in (c, d)])


def no_crossing(a, b, c, d):
    """Closed segments ab and cd are disjoint."""
    d1, d2, d3, d4 = det(a, b, c), det(a, b, d), det(c, d, a), det(c, d, b)
    same_side = [
        conj([cmp(">", d1, 0), cmp(">", d2, 0)]), conj([cmp("<", d1, 0), cmp("<", d2, 0)]),
        conj([cmp(">", d3, 0), cmp(">", d4, 0)]), conj([cmp("<", d3, 0), cmp("<", d4, 0)]),
    ]
    collinear = conj([cmp("=", x, 0) for x in (d1, d2, d3, d4)])
    apart = disj([_box_apart(a, b, c, d, axis) for axis in (0, 1)] + [_box_apart(c, d, a, b, axis) for axis in (0, 1)])
    return disj(same_side + [conj([collinear, apart])])


def ordering(v, nbrs):
    """Counter-clockwise rotation with at most one reflex wedge."""
    d = len(nbrs)
    if d <= 1:
        return TRUE
    if d == 2:
        a, b = nbrs
        dot = ("+", ("*", ("-", a[1], v[1]), ("-", b[1], v[1])), ("*", ("-", a[2], v[2]), ("-", b[2], v[2])))
        return disj([("not", cmp("=", det(v, a, b), 0)), cmp("<=", dot, 0)])
    left = [cmp(">", det(v, nbrs[i], nbrs[(i + 1) % d]), 0) for i in range(d)]
    return disj([conj(left[:j] + left[j + 1:]) for j in range(d)])


def winding(v, nbrs):
    """Neighbours strictly to the right of v form one cyclic interval."""
    d = len(nbrs)
    if d <= 2:
        return TRUE
    right = [cmp(">", nbrs[i][1], v[1]) for i in range(d)]
    left = [cmp("<=", nbrs[i][1], v[1]) for i in range(d)]
    cases = [conj(left), conj(right)]
    for s in range(d):
        for length in range(1, d):
            inside = {(s + k) % d for k in range(length)}
            cases.append(conj([right[i] if i in inside else left[i] for i in range(d)]))
    return disj(cases)


def shoelace(points):
    terms = []
    n = len(points)
    for i in range(n):
        (_, x1, y1), (_, x2, y2) = points[i], points[(i + 1) % n]
        terms.append(("-", ("*", x1, y2), ("*", x2, y1)))
    return ("*", Fraction(1, 2), ("+", *terms))


def vertex_names(instance: PlaneInstance) -> dict:
    return {v: (f"X_{i}", f"Y_{i}") for i, v in enumerate(instance.vertices)}


def area_names(instance: PlaneInstance) -> dict:
    return {f: f"A_{i}" for i, f in enumerate(instance.inner_faces)}


def _drawing_formula(instance: PlaneInstance, point_of, area_of):
    conjuncts = []
    counts = {"noCrossing": 0, "Ordering": 0, "Area": 0, "Outer": 0}
    edges = list(instance.edges)
    for (u1, v1), (u2, v2) in itertools.combinations(edges, 2):
        if len({u1, v1, u2, v2}) < 4:
            continue
        counts["noCrossing"] += 1
        conjuncts.append(no_crossing(point_of(u1), point_of(v1), point_of(u2), point_of(v2)))
    for v in instance.vertices:
        nb = [point_of(u) for u in instance.rotation[v]]
        counts["Ordering"] += 1
        conjuncts.append(ordering(point_of(v), nb))
        conjuncts.append(winding(point_of(v), nb))
    for f in instance.inner_faces:
        counts["Area"] += 1
        conjuncts.append(cmp("=", shoelace([point_of(v) for v in instance.faces[f]]), area_of(f)))
    if instance.outer is not None and len(instance.faces[instance.outer]) >= 3:
        counts["Outer"] += 1
        outer = shoelace([point_of(v) for v in instance.faces[instance.outer]])
        conjuncts.append(cmp("=", ("-", 0, outer), ("+", *[area_of(f) for f in instance.inner_faces])))
    return conjuncts, counts


def encode_area_universality(instance: PlaneInstance):
    """Sentence: every nonnegative face-area vector has an equivalent drawing.

    Returns ``(formula, counts)``; ``counts`` tallies the emitted predicate
    blocks by kind.
    """
    names = vertex_names(instance)
    areas = area_names(instance)
    point_of = lambda v: pt(*names[v])
    conjuncts, counts = _drawing_formula(instance, point_of, lambda f: areas[f])
    premise = conj([cmp(">=", a, 0) for a in areas.values()])
    xs = tuple(c for v in instance.vertices for c in names[v])
    body = ("=>", premise, ("and", *conjuncts))
    return ("forall", tuple(areas.values()), ("exists", xs, body)), counts


def encode_fixed_prescribed_area(instance: PlaneInstance):
    """Existential sentence with fixed vertices and areas substituted as constants.

    Conjuncts that only mention constants are decided at encoding time.
    """
    missing = [f for f in instance.inner_faces if f not in instance.areas]
    if missing:
        raise EncodingError(f"faces without prescribed area: {missing[:5]}")
    names = vertex_names(instance)
    fixed = {v: tuple(Fraction(c) for c in p) for v, p in instance.fixed.items()}

    def point_of(v):
        return pt(*fixed[v]) if v in fixed else pt(*names[v])

    conjuncts, counts = _drawing_formula(instance, point_of, lambda f: Fraction(instance.areas[f]))
    folded = conj([_fold_tree(c) for c in conjuncts])
    xs = tuple(c for v in instance.vertices if v not in fixed for c in names[v])
    return (("exists", xs, folded) if xs else folded), counts


def _fold_tree(f):
    head = f[0]
    if head in _OPS:
        return _fold(f)
    if head == "and":
        return conj([_fold_tree(x) for x in f[1:]])
    if head == "or":
        return disj([_fold_tree(x) for x in f[1:]])
    if head == "not":
        inner = _fold_tree(f[1])
        return FALSE if inner == TRUE else TRUE if inner == FALSE else ("not", inner)
    return f


def drawing_assignment(instance: PlaneInstance, drawing: Mapping, areas: Mapping | None = None) -> dict:
    """Variable values for the universality matrix at a drawing and area vector."""
    env = {}
    for v, (xn, yn) in vertex_names(instance).items():
        env[xn], env[yn] = Fraction(drawing[v][0]), Fraction(drawing[v][1])
    source = instance.areas if areas is None else areas
    for f, name in area_names(instance).items():
        if f in source:
            env[name] = Fraction(source[f])
    return env


def evaluate_drawing(instance: PlaneInstance, drawing: Mapping, areas: Mapping | None = None) -> bool:
    """Evaluate the universality matrix at a drawing; fixed positions are not part of it."""
    f, _ = encode_area_universality(instance)
    return eval_formula(matrix(f), drawing_assignment(instance, drawing, areas))


# ---------------------------------------------------------------- volumes

def encode_volume(s):
    """Prescribed-volume sentence for a simplicial instance.

    One separating-plane quadruple per pair of tetrahedra and one determinant
    equation per tetrahedron with a prescribed volume.
    """
    names = {v: (f"X_{i}", f"Y_{i}", f"Z_{i}") for i, v in enumerate(s.vertices)}
    point = lambda v: ("pt3", *names[v])
    conjuncts = []
    plane_vars = []
    tets = list(s.tetra)
    counts = {"pairs": 0, "volume": 0}
    for i, j in itertools.combinations(range(len(tets)), 2):
        a, b, c, d = f"P_{i}_{j}", f"Q_{i}_{j}", f"R_{i}_{j}", f"B_{i}_{j}"
        plane_vars += [a, b, c, d]
        counts["pairs"] += 1
        side = lambda v: ("+", ("*", a, names[v][0]), ("*", b, names[v][1]), ("*", c, names[v][2]), d)
        conjuncts += [cmp(">=", side(v), 0) for v in tets[i]]
        conjuncts += [cmp("<=", side(v), 0) for v in tets[j]]
    for k, tet in enumerate(tets):
        vol = s.volumes.get(k)
        if vol is None:
            continue
        counts["volume"] += 1
        d4 = ("det4", *[point(v) for v in tet])
        # volume = |det| / 6; the sign is free, so either orientation is accepted
        conjuncts.append(disj([cmp("=", d4, 6 * Fraction(vol)), cmp("=", ("-", 0, d4), 6 * Fraction(vol))]))
    xs = tuple(c for v in s.vertices for c in names[v]) + tuple(plane_vars)
    return ("exists", xs, conj(conjuncts) if conjuncts else TRUE), counts
