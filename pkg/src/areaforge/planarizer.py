"""Orthogonal incidence drawings and crossing removal.

The drawing is a bus layout: variables on a top row, constraints on a bottom
row, every occurrence of a variable in a constraint routed down its own
column, across a private horizontal track, and down again.  A crossing between
two routes is removed by a local gadget of three additions that copies both
values past the crossing point; the rest of the drawing is untouched, so each
application removes exactly one crossing.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping

import networkx as nx

from .formula import (
    ADDITION,
    INVERSION,
    PLANAR_ETRINV,
    ConstraintFormula,
    FormulaBuilder,
    FormulaError,
    IncidenceGraph,
    incidence_graph,
    is_planar_graph,
)

SCALE = 10  # spacing that leaves room for a radius-4 gadget box around every crossing
BOX = 4


class PlanarizeError(RuntimeError):
    pass


def incidence_is_planar(f: ConstraintFormula) -> bool:
    return is_planar_graph(incidence_graph(f).to_networkx())


@dataclass
class DrawnEdge:
    id: int
    var: str
    con: int
    slot: int | None
    route: list  # (x, y) from the variable end to the constraint end

    def segments(self):
        return list(zip(self.route, self.route[1:]))


@dataclass
class GridDrawing:
    nodes: dict  # ("v", name) | ("c", index) -> (x, y)
    node_kind: dict  # node -> "bar" | "point"
    edges: dict  # id -> DrawnEdge
    crossings: list  # (id, id, (x, y)) with the smaller id first
    port_order: dict = field(default_factory=dict)  # constraint index -> slots left to right
    next_id: int = 0

    def crossing_count(self) -> int:
        return len(self.crossings)

    def to_json(self) -> dict:
        return {
            "format_version": 1,
            "nodes": [
                {"kind": k[0], "key": k[1], "at": list(p), "shape": self.node_kind[k]}
                for k, p in sorted(self.nodes.items(), key=lambda kv: (kv[0][0], str(kv[0][1])))
            ],
            "edges": [
                {"id": e.id, "var": e.var, "con": e.con, "slot": e.slot, "route": [list(p) for p in e.route]}
                for e in sorted(self.edges.values(), key=lambda e: e.id)
            ],
            "crossings": [{"edges": [a, b], "at": list(p)} for a, b, p in self.crossings],
        }

    def to_svg(self, unit: float = 6.0) -> str:
        xs = [x for e in self.edges.values() for x, _ in e.route] + [p[0] for p in self.nodes.values()]
        ys = [y for e in self.edges.values() for _, y in e.route] + [p[1] for p in self.nodes.values()]
        x0, x1, y0, y1 = min(xs, default=0) - 2, max(xs, default=0) + 2, min(ys, default=0) - 2, max(ys, default=0) + 2
        W, H = (x1 - x0) * unit, (y1 - y0) * unit

        def tr(p):
            return (p[0] - x0) * unit, (y1 - p[1]) * unit

        out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{W:.0f}" height="{H:.0f}">']
        for e in sorted(self.edges.values(), key=lambda e: e.id):
            pts = " ".join("%.1f,%.1f" % tr(p) for p in e.route)
            out.append(f'<polyline points="{pts}" fill="none" stroke="#333" stroke-width="1"/>')
        for k, p in sorted(self.nodes.items(), key=lambda kv: (kv[0][0], str(kv[0][1]))):
            x, y = tr(p)
            color = "#1f77b4" if k[0] == "v" else "#d62728"
            out.append(f'<circle cx="{x:.1f}" cy="{y:.1f}" r="3" fill="{color}"><title>{k[1]}</title></circle>')
        for _, _, p in self.crossings:
            x, y = tr(p)
            out.append(f'<circle cx="{x:.1f}" cy="{y:.1f}" r="2" fill="orange"/>')
        out.append("</svg>")
        return "\n".join(out)


# ---------------------------------------------------------------- layout

def _occurrences(source) -> tuple[list, list, list, dict]:
    """Variables, constraint ids, occurrence edges (var, con, slot), role map."""
    if isinstance(source, IncidenceGraph):
        edges = [(v, c, None) for v, c in source.edges]
        return list(source.variables), list(source.constraints), edges, {}
    f = source
    edges, roles = [], {}
    for j, c in enumerate(f.constraints):
        roles[j] = c.kind
        for slot, i in enumerate(c.operands):
            edges.append((f.name_of(i), j, slot))
    return f.names, list(range(len(f.constraints))), edges, roles


def _barycenter_order(variables, constraints, edges, sweeps=4):
    vpos = {v: i for i, v in enumerate(variables)}
    cpos = {c: i for i, c in enumerate(constraints)}
    return _barycenter_from(vpos, cpos, variables, constraints, edges, sweeps)


def _barycenter_from(vpos, cpos, variables, constraints, edges, sweeps=4):
    nbr_v = {v: [] for v in variables}
    nbr_c = {c: [] for c in constraints}
    for v, c, _ in edges:
        nbr_v[v].append(c)
        nbr_c[c].append(v)
    for _ in range(sweeps):
        bc = {c: (sum(vpos[v] for v in nbr_c[c]) / len(nbr_c[c]) if nbr_c[c] else cpos[c]) for c in constraints}
        order = sorted(constraints, key=lambda c: (bc[c], cpos[c]))
        cpos = {c: i for i, c in enumerate(order)}
        bv = {v: (sum(cpos[c] for c in nbr_v[v]) / len(nbr_v[v]) if nbr_v[v] else vpos[v]) for v in variables}
        order = sorted(variables, key=lambda v: (bv[v], vpos[v]))
        vpos = {v: i for i, v in enumerate(order)}
    return vpos, cpos


def _role_order(kind, slots_vars, vpos):
    """Left-to-right slot order on a constraint bar (matches the compiler's templates)."""
    slots = [s for s, _ in slots_vars]
    if kind == ADDITION and len(slots) == 3:
        x, y = slots_vars[0][1], slots_vars[1][1]
        return [0, 2, 1] if vpos[x] <= vpos[y] else [1, 2, 0]
    if kind == INVERSION and len(slots) == 2:
        x, y = slots_vars[0][1], slots_vars[1][1]
        return [0, 1] if vpos[x] <= vpos[y] else [1, 0]
    names = dict(slots_vars)
    return sorted(slots, key=lambda s: (vpos[names[s]], str(s)))


def _track_order(edge_cols):
    """Order edges top to bottom so that few column/track conflicts remain."""
    ids = sorted(edge_cols)
    before = {e: set() for e in ids}  # before[e]: edges that must be above e
    for e in ids:
        a_e, b_e = edge_cols[e]
        for g in ids:
            if g == e:
                continue
            a_g, b_g = edge_cols[g]
            lo, hi = min(a_g, b_g), max(a_g, b_g)
            if lo < a_e < hi:
                before[g].add(e)  # e's top column inside g's span: e above g
            if lo < b_e < hi:
                before[e].add(g)  # e's bottom column inside g's span: g above e
    order, placed = [], set()
    remaining = set(ids)
    while remaining:
        best = min(remaining, key=lambda e: (len(before[e] - placed), edge_cols[e][0], e))
        order.append(best)
        placed.add(best)
        remaining.remove(best)
    return order


def _start_orders(variables, constraints, edges):
    """Initial orders for the barycenter sweeps: given, reversed, depth-first."""
    yield {v: i for i, v in enumerate(variables)}, {c: i for i, c in enumerate(constraints)}
    yield ({v: -i for i, v in enumerate(variables)}, {c: -i for i, c in enumerate(constraints)})
    g = nx.Graph()
    g.add_nodes_from(("v", v) for v in variables)
    g.add_nodes_from(("c", c) for c in constraints)
    g.add_edges_from((("v", v), ("c", c)) for v, c, _ in edges)
    seq = []
    for comp_start in [("v", v) for v in variables] + [("c", c) for c in constraints]:
        if comp_start in seq:
            continue
        seq.extend(n for n in nx.dfs_preorder_nodes(g, comp_start) if n not in seq)
    rank = {n: i for i, n in enumerate(seq)}
    yield {v: rank[("v", v)] for v in variables}, {c: rank[("c", c)] for c in constraints}


def draw_orthogonal(source, scale: int = 1) -> GridDrawing:
    """Bus-layout orthogonal drawing of an incidence graph or a formula's occurrences.

    Several barycenter runs from different initial orders are tried and the
    layout with the fewest crossings is kept.
    """
    variables, constraints, edges, roles = _occurrences(source)
    best = None
    for v0, c0 in _start_orders(variables, constraints, edges):
        vpos, cpos = _barycenter_from(v0, c0, variables, constraints, edges)
        d = _bus_layout(variables, constraints, edges, roles, vpos, cpos, scale)
        if best is None or len(d.crossings) < len(best.crossings):
            best = d
    return best


def _bus_layout(variables, constraints, edges, roles, vpos, cpos, scale) -> GridDrawing:
    by_var = {v: [] for v in variables}
    by_con = {c: [] for c in constraints}
    for k, (v, c, s) in enumerate(edges):
        by_var[v].append(k)
        by_con[c].append(k)
    top_col, bot_col = {}, {}
    nodes, kinds = {}, {}
    col = 0
    for v in sorted(variables, key=lambda v: vpos[v]):
        ks = sorted(by_var[v], key=lambda k: (cpos[edges[k][1]], edges[k][2] if edges[k][2] is not None else -1))
        nodes[("v", v)] = (col, None)
        for k in ks:
            top_col[k] = col
            col += 2
        if not ks:
            col += 2
        col += 2
    col = 1
    port_order = {}
    for c in sorted(constraints, key=lambda c: cpos[c]):
        ks = by_con[c]
        keyed = {(edges[k][2] if edges[k][2] is not None else ("e", k)): k for k in ks}
        slots_vars = [(s, edges[k][0]) for s, k in keyed.items()]
        order = _role_order(roles.get(c), slots_vars, vpos)
        port_order[c] = order
        slot_to_k = keyed
        nodes[("c", c)] = (col, None)
        for s in order:
            bot_col[slot_to_k[s]] = col
            col += 2
        if not ks:
            col += 2
        col += 2
    n_e = len(edges)
    ranks = {e: r for r, e in enumerate(_track_order({k: (top_col[k], bot_col[k]) for k in range(n_e)}))}
    top_y = n_e + 1
    for key, (x, _) in list(nodes.items()):
        nodes[key] = (x * scale, (top_y if key[0] == "v" else 0) * scale)
        kinds[key] = "bar"
    drawn = {}
    for k, (v, c, s) in enumerate(edges):
        track = n_e - ranks[k]
        route = [(top_col[k], top_y), (top_col[k], track), (bot_col[k], track), (bot_col[k], 0)]
        drawn[k] = DrawnEdge(k, v, c, s, [(x * scale, y * scale) for x, y in route])
    d = GridDrawing(nodes, kinds, drawn, [], port_order, next_id=n_e)
    d.crossings = find_crossings(d)
    return d


def _orth_segments(e: DrawnEdge):
    for p, q in e.segments():
        if p[0] == q[0] and p[1] != q[1]:
            yield "v", p[0], min(p[1], q[1]), max(p[1], q[1])
        elif p[1] == q[1] and p[0] != q[0]:
            yield "h", p[1], min(p[0], q[0]), max(p[0], q[0])


def find_crossings(d: GridDrawing) -> list:
    """Proper crossings between routes of distinct edges (brute force over segments)."""
    vert, horiz = [], []
    for e in d.edges.values():
        for kind, c, lo, hi in _orth_segments(e):
            (vert if kind == "v" else horiz).append((e.id, c, lo, hi))
    out = set()
    for ev, x, ylo, yhi in vert:
        for eh, y, xlo, xhi in horiz:
            if ev != eh and xlo < x < xhi and ylo < y < yhi:
                out.add((min(ev, eh), max(ev, eh), (x, y)))
    return sorted(out)


def _position_along(route, point) -> tuple[int, Fraction]:
    """Segment index containing ``point`` and the arc length from the start."""
    acc = 0
    for k, (p, q) in enumerate(zip(route, route[1:])):
        if min(p[0], q[0]) <= point[0] <= max(p[0], q[0]) and min(p[1], q[1]) <= point[1] <= max(p[1], q[1]):
            if (q[0] - p[0]) * (point[1] - p[1]) == (q[1] - p[1]) * (point[0] - p[0]):
                return k, acc + abs(point[0] - p[0]) + abs(point[1] - p[1])
        acc += abs(q[0] - p[0]) + abs(q[1] - p[1])
    raise PlanarizeError(f"point {point} is not on the route")


# ---------------------------------------------------------------- formula level

@dataclass
class CrossingRemoval:
    formula: ConstraintFormula
    x_copy: str
    y_copy: str
    sum_var: str
    gadget_constraints: tuple  # indices of the three new additions (B1, B2, B3)

    def extend(self, assignment: Mapping, x: str, y: str) -> dict:
        out = dict(assignment)
        out[self.x_copy] = Fraction(assignment[x])
        out[self.y_copy] = Fraction(assignment[y])
        out[self.sum_var] = Fraction(assignment[x]) + Fraction(assignment[y])
        return out


def remove_one_crossing(f: ConstraintFormula, crossing, tag: int = 1) -> CrossingRemoval:
    """Replace two crossing occurrences by copies tied together with three additions.

    ``crossing`` is a pair of occurrences ``(variable, constraint index, slot)``
    (slot ``None`` means every occurrence of the variable in that constraint).
    The copies X', Y' take over the crossing occurrences; X'+Y=Z, X'+Y'=Z and
    X+Y'=Z force X'=X and Y'=Y.
    """
    (x, c1, s1), (y, c2, s2) = crossing
    for v, c in ((x, c1), (y, c2)):
        if not (0 <= c < len(f.constraints)) or f.index_of(v) not in f.constraints[c].operands:
            raise FormulaError(f"variable {v!r} does not occur in constraint {c}")
    b = FormulaBuilder(f.variables)
    xd = f.variables[f.index_of(x)]
    yd = f.variables[f.index_of(y)]
    xc = b.fresh(f"{x}'{tag}", xd.quantifier, xd.domain)
    yc = b.fresh(f"{y}'{tag}", yd.quantifier, yd.domain)
    z = b.fresh(f"Z'{tag}", "existential", xd.domain)
    ops = [list(f.operand_names(c)) for c in f.constraints]
    for v, c, s, new in ((x, c1, s1, xc), (y, c2, s2, yc)):
        if s is None:
            ops[c] = [new if n == v else n for n in ops[c]]
        else:
            if ops[c][s] != v:
                raise FormulaError(f"slot {s} of constraint {c} is not {v!r}")
            ops[c][s] = new
    for c, names in zip(f.constraints, ops):
        b.add(c.kind, *names)
    n = len(f.constraints)
    b.add(ADDITION, xc, y, z)
    b.add(ADDITION, xc, yc, z)
    b.add(ADDITION, x, yc, z)
    out = b.build(f.dialect)
    return CrossingRemoval(out, xc, yc, z, (n, n + 1, n + 2))


# ---------------------------------------------------------------- drawing level

def _local(p, a, b, i, j):
    return (p[0] + i * a[0] + j * b[0], p[1] + i * a[1] + j * b[1])


def _direction(route, k):
    p, q = route[k], route[k + 1]
    dx, dy = q[0] - p[0], q[1] - p[1]
    return ((dx > 0) - (dx < 0), (dy > 0) - (dy < 0))


def _apply_gadget(d: GridDrawing, f_new: ConstraintFormula, rem: CrossingRemoval, e1: DrawnEdge,
                  e2: DrawnEdge, p, x: str, y: str):
    k1, t1 = _position_along(e1.route, p)
    k2, t2 = _position_along(e2.route, p)
    a, b = _direction(e1.route, k1), _direction(e2.route, k2)
    L = lambda i, j: _local(p, a, b, i, j)  # noqa: E731
    B1, B2, B3 = rem.gadget_constraints
    xc, yc, z = rem.x_copy, rem.y_copy, rem.sum_var
    for key in (("v", xc), ("v", yc), ("v", z), ("c", B1), ("c", B2), ("c", B3)):
        d.node_kind[key] = "point"
    d.nodes[("v", z)] = L(0, 0)
    d.nodes[("v", xc)] = L(3, 0)
    d.nodes[("v", yc)] = L(0, 3)
    d.nodes[("c", B1)] = L(2, -2)
    d.nodes[("c", B2)] = L(2, 2)
    d.nodes[("c", B3)] = L(-2, 2)

    def pts(*ij):
        return [L(i, j) for i, j in ij]

    new_routes = [
        # (var, con, slot, route, inherits crossings of (edge, before/after p))
        (x, B3, 0, e1.route[: k1 + 1] + pts((-BOX, 0), (-BOX, 2), (-2, 2)), (e1, "before")),
        (y, B1, 1, e2.route[: k2 + 1] + pts((0, -BOX), (0, -2), (2, -2)), (e2, "before")),
        (xc, e1.con, e1.slot, pts((3, 0), (BOX, 0)) + e1.route[k1 + 1:], (e1, "after")),
        (yc, e2.con, e2.slot, pts((0, 3), (0, BOX)) + e2.route[k2 + 1:], (e2, "after")),
        (xc, B1, 0, pts((3, 0), (3, -2), (2, -2)), None),
        (xc, B2, 0, pts((3, 0), (3, 2), (2, 2)), None),
        (yc, B2, 1, pts((0, 3), (0, 2), (2, 2)), None),
        (yc, B3, 1, pts((0, 3), (-1, 3), (-1, 2), (-2, 2)), None),
        (z, B1, 2, pts((0, 0), (1, 0), (1, -1), (2, -1), (2, -2)), None),
        (z, B2, 2, pts((0, 0), (0, 1), (2, 1), (2, 2)), None),
        (z, B3, 2, pts((0, 0), (-2, 0), (-2, 2)), None),
    ]
    del d.edges[e1.id]
    del d.edges[e2.id]
    replaced = {}
    for var, con, slot, route, inherit in new_routes:
        eid = d.next_id
        d.next_id += 1
        d.edges[eid] = DrawnEdge(eid, var, con, slot, _simplify(route))
        if inherit:
            replaced[(inherit[0].id, inherit[1])] = eid
    updated = []
    for ea, eb, q in d.crossings:
        if q == p and {ea, eb} == {e1.id, e2.id}:
            continue
        ids = []
        for e in (ea, eb):
            if e in (e1.id, e2.id):
                edge, t = (e1, t1) if e == e1.id else (e2, t2)
                _, tq = _position_along(edge.route, q)
                e = replaced[(edge.id, "before" if tq < t else "after")]
            ids.append(e)
        updated.append((min(ids), max(ids), q))
    d.crossings = sorted(updated)


def _simplify(route):
    out = []
    for p in route:
        if out and out[-1] == p:
            continue
        if len(out) >= 2:
            a, b = out[-2], out[-1]
            if (b[0] - a[0]) * (p[1] - b[1]) == (b[1] - a[1]) * (p[0] - b[0]) and (
                (b[0] - a[0]) * (p[0] - b[0]) + (b[1] - a[1]) * (p[1] - b[1]) > 0
            ):
                out[-1] = p
                continue
        out.append(p)
    return out


@dataclass
class Planarization:
    formula: ConstraintFormula
    drawing: GridDrawing
    removals: list  # (x, y, CrossingRemoval)
    added_variables: int
    added_constraints: int

    def extend(self, assignment: Mapping) -> dict:
        out = {k: Fraction(v) for k, v in assignment.items()}
        for x, y, rem in self.removals:
            out = rem.extend(out, x, y)
        return out


def planarize_with_drawing(f: ConstraintFormula, until: str = "planar", max_steps: int | None = None) -> Planarization:
    """Apply crossing gadgets in lexicographic crossing order.

    ``until="planar"`` stops as soon as the abstract incidence graph is planar
    (checked after 1, 2, 4, 8, ... applications and whenever the drawing has
    no crossings left); ``until="drawing"`` continues until the maintained
    drawing itself is crossing-free.
    """
    d = draw_orthogonal(f, scale=SCALE)
    cap = max_steps if max_steps is not None else len(d.crossings) + 1
    removals = []
    current = f
    n_vars, n_cons = len(f.variables), len(f.constraints)
    steps = 0
    next_check = 1
    if until == "planar" and incidence_is_planar(current):
        return Planarization(current.with_dialect(PLANAR_ETRINV), d, [], 0, 0)
    while d.crossings:
        if steps >= cap:
            raise PlanarizeError(f"no planar formula after {steps} crossing gadgets; {len(d.crossings)} crossings left")
        ea, eb, p = d.crossings[0]
        e1, e2 = d.edges[ea], d.edges[eb]
        before = len(d.crossings)
        rem = remove_one_crossing(current, ((e1.var, e1.con, e1.slot), (e2.var, e2.con, e2.slot)), tag=steps + 1)
        _apply_gadget(d, rem.formula, rem, e1, e2, p, e1.var, e2.var)
        if len(d.crossings) != before - 1:
            raise PlanarizeError("crossing gadget did not reduce the crossing count by one")
        removals.append((e1.var, e2.var, rem))
        current = rem.formula
        steps += 1
        if until == "planar" and steps == next_check:
            next_check *= 2
            if incidence_is_planar(current):
                break
    if not incidence_is_planar(current):
        raise PlanarizeError("drawing is crossing-free but the incidence graph is not planar")
    return Planarization(
        current.with_dialect(PLANAR_ETRINV),
        d,
        removals,
        len(current.variables) - n_vars,
        len(current.constraints) - n_cons,
    )


def planarize(f: ConstraintFormula) -> ConstraintFormula:
    return planarize_with_drawing(f).formula


def validate_drawing(d: GridDrawing) -> list[str]:
    """Structural checks: orthogonality, endpoints at nodes, recorded crossings exact."""
    problems = []
    for e in d.edges.values():
        for p, q in e.segments():
            if p[0] != q[0] and p[1] != q[1]:
                problems.append(f"edge {e.id} has a diagonal segment {p}-{q}")
        start, end = e.route[0], e.route[-1]
        vnode, cnode = ("v", e.var), ("c", e.con)
        if d.node_kind.get(vnode) == "point" and start != d.nodes[vnode]:
            problems.append(f"edge {e.id} does not start at its variable")
        if d.node_kind.get(cnode) == "point" and end != d.nodes[cnode]:
            problems.append(f"edge {e.id} does not end at its constraint")
    if sorted(find_crossings(d)) != sorted(d.crossings):
        problems.append("recorded crossings differ from the geometry")
    return problems


def drawing_to_json(d: GridDrawing) -> str:
    return json.dumps(d.to_json(), sort_keys=True)
