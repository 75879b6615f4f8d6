"""Compile a Planar-ETRINV formula into a fixed-position prescribed-area instance.

Pipeline: crossing-free orthogonal incidence drawing (crossing gadgets added
where the bus layout needs them), coordinate compression, one 9x9 block per
lattice point, a hub gadget at every node, turn and junction, and straight
wire channels between hubs.  Block boundary lines are edges, so leftover
faces stay inside single blocks; they receive the area they have in the
construction drawing, which does not depend on any encoded value.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping

from .formula import ADDITION, CONST_ONE, INVERSION, ConstraintFormula
from .gadgets import (
    LAMBDA,
    SIDES,
    Port,
    declared_areas,
    make_addition,
    make_inversion,
    make_splitter,
    make_variable_gadget,
    wire_origins,
)
from .planarizer import planarize_with_drawing
from .plane import PlaneInstance, num_from_json, num_to_json, signed_area

BLOCK = 9
OPPOSITE = {"N": "S", "S": "N", "E": "W", "W": "E"}


class CompileError(ValueError):
    pass


class RoutingError(CompileError):
    pass


def _dir(p, q):
    dx, dy = q[0] - p[0], q[1] - p[1]
    return ((dx > 0) - (dx < 0), (dy > 0) - (dy < 0))


def _side(d):
    for k, v in SIDES.items():
        if v == d:
            return k
    raise CompileError(f"not an axis direction: {d}")


def _name(p) -> str:
    return f"{p[0]},{p[1]}"


def _mid_name(a, b) -> str:
    return f"p{a[0] + b[0]}_{a[1] + b[1]}"


# dihedral maps as integer matrices (columns are images of e_x and e_y)
DIHEDRAL = [((1, 0), (0, 1)), ((0, 1), (-1, 0)), ((-1, 0), (0, -1)), ((0, -1), (1, 0)),
            ((-1, 0), (0, 1)), ((1, 0), (0, -1)), ((0, 1), (1, 0)), ((0, -1), (-1, 0))]


def _apply(m, v):
    (a, c), (b, d) = m
    return (a * v[0] + b * v[1], c * v[0] + d * v[1])


def _block_map(m, I, J):
    """Dihedral map about the block centre followed by the block offset."""
    half = Fraction(BLOCK, 2)

    def fn(p):
        x, y = _apply(m, (p[0] - half, p[1] - half))
        x, y = x + half + BLOCK * I, y + half + BLOCK * J
        return tuple(int(t) if Fraction(t).denominator == 1 else Fraction(t) for t in (x, y))

    return fn


@dataclass
class Hub:
    kind: str
    at: tuple
    sides: dict = field(default_factory=dict)  # side -> (variable, role)
    owner: str = ""


@dataclass
class Link:
    var: str
    a: tuple  # (hub point, side)
    b: tuple
    cells: list  # lattice points strictly between


@dataclass
class CompiledInstance:
    source: ConstraintFormula
    formula: ConstraintFormula  # after crossing gadgets
    planarization: object
    instance: PlaneInstance
    hubs: list  # (Hub, fragment, {role: variable})
    port_info: dict  # vertex -> (variable, origin, end)
    value_ports: dict  # variable -> vertex
    nominal: dict

    def extend(self, assignment: Mapping) -> dict:
        """Assignment of the source formula extended to the gadget variables."""
        return self.planarization.extend(assignment)

    def drawing_for(self, values: Mapping) -> dict:
        """Construction drawing for per-variable values (exact for rational input).

        For a satisfying assignment this is a realizing drawing.
        """
        pos = {v: p for v, p in self.instance.fixed.items()}
        for v, (var, o, e) in self.port_info.items():
            if v in self.instance.fixed:
                continue
            pos[v] = Port(v, o, e, "").point(values[var])
        for hub, frag, roles in self.hubs:
            vals = {r: values[x] for r, x in roles.items()}
            for v, p in frag.place(vals).items():
                if v not in self.instance.fixed:
                    pos.setdefault(v, p)
        return pos

    def extract(self, drawing: Mapping) -> dict:
        out = {}
        for var, v in self.value_ports.items():
            _, o, e = self.port_info[v]
            out[var] = Port(v, o, e, "").value_of(tuple(float(c) for c in drawing[v]))
        return out

    def initializer(self, lo=0.5, hi=2.0):
        names = list(self.formula.names)

        def make(k, rng):
            vals = {n: float(rng.uniform(lo, hi)) for n in names}
            return self.drawing_for(vals)

        return make

    def summary(self) -> dict:
        return {
            "variables": len(self.formula.variables),
            "constraints": len(self.formula.constraints),
            "crossing_gadgets": len(self.planarization.removals),
            "vertices": len(self.instance.vertices),
            "edges": len(self.instance.edges),
            "faces": len(self.instance.faces),
            "flexible": len(self.instance.vertices) - len(self.instance.fixed),
        }


def values_from_meta(instance: PlaneInstance, drawing: Mapping) -> dict:
    """Variable values read off a drawing of a compiled instance loaded from JSON."""
    out = {}
    for var, (v, o, e) in instance.meta.get("value_ports", {}).items():
        port = Port(v, tuple(num_from_json(c) for c in o), tuple(num_from_json(c) for c in e), "")
        out[var] = port.value_of(tuple(float(c) for c in drawing[v]))
    return out


# ---------------------------------------------------------------- layout

def _cells(a, b):
    """Lattice points from a to b (inclusive) along an axis-parallel segment."""
    d = _dir(a, b)
    out = [a]
    p = a
    while p != b:
        p = (p[0] + d[0], p[1] + d[1])
        out.append(p)
    return out


def _lattice_path(route, cx, cy):
    pts = [(cx[x], cy[y]) for x, y in route]
    out = [pts[0]]
    for p, q in zip(pts, pts[1:]):
        out += _cells(p, q)[1:]
    return out


class _Layout:
    def __init__(self):
        self.hubs: dict = {}
        self.links: list = []
        self.owner: dict = {}

    def claim(self, p, net):
        o = self.owner.get(p)
        if o is not None and o != net:
            raise RoutingError(f"net {net!r} runs into lattice point {p} already used by {o!r}")
        self.owner[p] = net

    def hub(self, p, kind, side, var, role, net):
        h = self.hubs.get(p)
        if h is None:
            h = self.hubs[p] = Hub(kind, p, owner=net)
            self.claim(p, net)
        elif h.kind != kind:
            raise RoutingError(f"net {net!r} meets a {h.kind} hub at {p} as a {kind}")
        if side in h.sides:
            raise RoutingError(f"net {net!r} reuses side {side} of the hub at {p}")
        h.sides[side] = (var, role)
        return h

    def path(self, pts, var, net, start_kind, start_role, end_kind, end_role):
        """Hubs at both ends and at every turn; links in between."""
        if len(pts) < 2:
            raise RoutingError(f"net {net!r} has a degenerate route")
        prev_hub = (pts[0], _side(_dir(pts[0], pts[1])))
        self.hub(pts[0], start_kind, prev_hub[1], var, start_role, net)
        cells = []
        for k in range(1, len(pts)):
            p = pts[k]
            arrive = OPPOSITE[_side(_dir(pts[k - 1], p))]
            if k == len(pts) - 1:
                self.hub(p, end_kind, arrive, var, end_role, net)
                self.links.append(Link(var, prev_hub, (p, arrive), cells))
                break
            leave = _side(_dir(p, pts[k + 1]))
            if leave == OPPOSITE[arrive]:
                self.claim(p, net)
                cells.append(p)
                continue
            self.hub(p, "splitter", arrive, var, arrive, net)
            self.hub(p, "splitter", leave, var, leave, net)
            self.links.append(Link(var, prev_hub, (p, arrive), cells))
            prev_hub = (p, leave)
            cells = []


def _layout(f: ConstraintFormula, d) -> _Layout:
    xs = sorted({p[0] for e in d.edges.values() for p in e.route} | {p[0] for p in d.nodes.values()})
    ys = sorted({p[1] for e in d.edges.values() for p in e.route} | {p[1] for p in d.nodes.values()})
    cx = {x: i for i, x in enumerate(xs)}
    cy = {y: j + 1 for j, y in enumerate(ys)}  # row 0 holds the constraint templates
    top = max(cy.values())
    lay = _Layout()
    by_con: dict = {}
    by_var: dict = {}
    paths = {}
    for e in sorted(d.edges.values(), key=lambda e: e.id):
        pts = _lattice_path(e.route, cx, cy)
        paths[e.id] = pts
        by_con.setdefault(e.con, []).append(e)
        by_var.setdefault(e.var, []).append(e)
    # constraint ends: point nodes are addition hubs, bar constraints get a template below row 1
    ends = {}
    for c, es in by_con.items():
        con = f.constraints[c]
        if d.node_kind[("c", c)] == "point":
            if con.kind != ADDITION:
                raise CompileError(f"constraint {c} drawn as a point is not an addition")
            for e in es:
                ends[e.id] = (paths[e.id], "addition", "xyz"[e.slot])
            continue
        es = sorted(es, key=lambda e: paths[e.id][-1][0])
        if con.kind == CONST_ONE:
            (e,) = es
            p = paths[e.id][-1]
            ends[e.id] = (paths[e.id] + [(p[0], 0)], "constant", "x")
        elif con.kind == INVERSION:
            left, right = es
            pl, pr = paths[left.id][-1], paths[right.id][-1]
            ends[left.id] = (paths[left.id] + _cells((pl[0], 0), (pr[0], 0)), "inversion", "x")
            ends[right.id] = (paths[right.id] + [(pr[0], 0)], "inversion", "y")
        elif con.kind == ADDITION:
            left, mid, right = es
            if mid.slot != 2:
                raise CompileError(f"addition {c}: the sum is not the middle port")
            pl, pm, pr = paths[left.id][-1], paths[mid.id][-1], paths[right.id][-1]
            ends[left.id] = (paths[left.id] + _cells((pl[0], 0), (pm[0], 0)), "addition", "xyz"[left.slot])
            ends[mid.id] = (paths[mid.id] + [(pm[0], 0)], "addition", "z")
            ends[right.id] = (paths[right.id] + _cells((pr[0], 0), (pm[0], 0)), "addition", "xyz"[right.slot])
        else:
            raise CompileError(f"constraint kind {con.kind!r} has no gadget")
    for e in sorted(d.edges.values(), key=lambda e: e.id):
        pts, kind, role = ends[e.id]
        lay.path(pts, e.var, f"{e.var}->{e.con}", "splitter", None, kind, role)
    # variable bars: junction splitters chained along the top row, gadget above the first port
    for v in f.names:
        node = ("v", v)
        if d.node_kind.get(node) == "point":
            continue
        es = by_var.get(v, [])
        ports = sorted({paths[e.id][0] for e in es})
        if not ports:
            p = (cx[d.nodes[node][0]], top + 1)
            lay.hub(p, "variable", "S", v, "x", v)
            lay.hubs[p].sides.pop("S")
            continue
        first = ports[0]
        g = (first[0], top + 1)
        lay.hub(g, "variable", "S", v, "x", v)
        lay.hub(first, "splitter", "N", v, "N", v)
        lay.links.append(Link(v, (g, "S"), (first, "N"), []))
        for a, b in zip(ports, ports[1:]):
            cells = _cells(a, b)[1:-1]
            for p in cells:
                lay.claim(p, v)
            lay.hub(a, "splitter", "E", v, "E", v)
            lay.hub(b, "splitter", "W", v, "W", v)
            lay.links.append(Link(v, (a, "E"), (b, "W"), cells))
    return lay


# ---------------------------------------------------------------- geometry

def _hub_fragment(h: Hub):
    I, J = h.at
    if h.kind == "splitter":
        frag = make_splitter(anchor=(3, 3)).mapped(_block_map(DIHEDRAL[0], I, J))
        roles = {s: var for s, (var, _) in h.sides.items()}
        side_role = {s: s for s in h.sides}
    elif h.kind == "variable":
        frag = make_variable_gadget(anchor=(3, 5)).mapped(_block_map(DIHEDRAL[0], I, J))
        var = h.sides["S"][0] if h.sides else h.owner
        roles = {"x": var}
        side_role = {"S": "x"} if h.sides else {}
    elif h.kind == "constant":
        frag = make_variable_gadget(anchor=(3, 5), fixed_value=1).mapped(_block_map(DIHEDRAL[2], I, J))
        roles = {"x": h.sides["N"][0]}
        side_role = {"N": "x"}
    elif h.kind == "inversion":
        frag = make_inversion(anchor=(4, 4)).mapped(_block_map(DIHEDRAL[0], I, J))
        roles, side_role = {}, {}
        for s, (var, role) in h.sides.items():
            r = {"W": "x", "N": "y"}.get(s)
            if r is None:
                raise RoutingError(f"inversion hub at {h.at} entered from {s}")
            roles[r] = var
            side_role[s] = r
    elif h.kind == "addition":
        want = {role: s for s, (var, role) in h.sides.items()}
        if set(want) != {"x", "y", "z"}:
            raise RoutingError(f"addition hub at {h.at} has ports {sorted(want)}")
        m = None
        for cand in DIHEDRAL:
            if _apply(cand, SIDES["W"]) == SIDES[want["x"]] and _apply(cand, SIDES["S"]) == SIDES[want["z"]] and \
                    _apply(cand, SIDES["E"]) == SIDES[want["y"]]:
                m = cand
        if m is None:
            raise RoutingError(f"addition hub at {h.at}: summands must enter from opposite sides")
        frag = make_addition(anchor=(3, 3)).mapped(_block_map(m, I, J))
        roles = {r: h.sides[s][0] for r, s in want.items()}
        side_role = {s: r for r, s in want.items()}
    else:
        raise CompileError(f"unknown hub kind {h.kind}")
    # global names: fixed by coordinates, ports by segment midpoint, the rest by block
    names = {}
    for k, p in frag.points.items():
        names[k] = _name(p)
    for r, port in frag.ports.items():
        names[port.vertex] = _mid_name(port.origin, port.end) if port.vertex not in frag.points else _name(frag.points[port.vertex])
    for v in frag.flexible:
        names.setdefault(v, f"{v}@{I}_{J}")
    return frag.renamed(names), roles, side_role


class _Canvas:
    def __init__(self):
        self.fixed = {}  # name -> point
        self.lines = set()  # fixed straight segments (point pairs), split later
        self.edges = set()  # explicit edges by name
        self.port_segments = {}  # frozenset(endpoint names) -> vertex
        self.faces = []

    def point(self, p):
        n = _name(p)
        self.fixed[n] = p
        return n

    def line(self, p, q):
        if p != q:
            self.point(p)
            self.point(q)
            self.lines.add((p, q) if (p[0], p[1]) < (q[0], q[1]) else (q, p))

    def edge(self, a, b):
        if a != b:
            self.edges.add((a, b) if a < b else (b, a))

    def port(self, a, b, v):
        na, nb = self.point(a), self.point(b)
        self.port_segments[frozenset((na, nb))] = v
        self.edge(na, v)
        self.edge(v, nb)

    def finish(self):
        rows, cols = {}, {}
        for p in self.fixed.values():
            rows.setdefault(p[1], set()).add(p[0])
            cols.setdefault(p[0], set()).add(p[1])
        for p, q in self.lines:
            if p[1] == q[1]:
                xs = sorted(x for x in rows[p[1]] if p[0] <= x <= q[0])
                pieces = [((a, p[1]), (b, p[1])) for a, b in zip(xs, xs[1:])]
            elif p[0] == q[0]:
                ys = sorted(y for y in cols[p[0]] if p[1] <= y <= q[1])
                pieces = [((p[0], a), (p[0], b)) for a, b in zip(ys, ys[1:])]
            else:
                pieces = [(p, q)]
            for a, b in pieces:
                na, nb = _name(a), _name(b)
                v = self.port_segments.get(frozenset((na, nb)))
                if v is None:
                    self.edge(na, nb)
        return sorted(self.edges)


def compile_formula(f: ConstraintFormula, values: Mapping | None = None) -> CompiledInstance:
    """Build the prescribed-area instance of ``f``.

    ``values`` (per source variable) only chooses the construction drawing
    stored as ``nominal``; the instance itself does not depend on it.
    """
    bad = [c for c in f.constraints if c.kind not in (CONST_ONE, ADDITION, INVERSION)]
    if bad:
        raise CompileError(f"constraint kind {bad[0].kind!r} is not available in Planar-ETRINV")
    if any(v.quantifier != "existential" for v in f.variables):
        raise CompileError("only existential formulas can be compiled")
    plan = planarize_with_drawing(f, until="drawing")
    g, d = plan.formula, plan.drawing
    lay = _layout(g, d)
    canvas = _Canvas()
    hubs = []
    hub_ports = {}  # (point, side) -> (port, variable)
    for p in sorted(lay.hubs):
        h = lay.hubs[p]
        frag, roles, side_role = _hub_fragment(h)
        hubs.append((h, frag, roles))
        for k, pt in frag.points.items():
            canvas.fixed[k] = pt
        for a, b in frag.edges:
            pa, pb = frag.points.get(a), frag.points.get(b)
            if pa is not None and pb is not None and (pa[0] == pb[0] or pa[1] == pb[1]):
                canvas.line(pa, pb)
            else:
                canvas.edge(a, b)
        for r, port in frag.ports.items():
            if port.vertex in frag.points:
                canvas.edge(_name(port.origin), port.vertex)
                canvas.edge(port.vertex, _name(port.end))
            else:
                canvas.port(port.origin, port.end, port.vertex)
        canvas.faces += frag.faces
        for s, r in side_role.items():
            hub_ports[(p, s)] = (frag.ports[r], roles[r])
    port_info = {}
    for h, frag, roles in hubs:
        for r, port in frag.ports.items():
            var = roles.get(r)
            if var is not None:
                port_info[port.vertex] = (var, port.origin, port.end)
    for link in lay.links:
        pa, va = hub_ports[link.a]
        pb, vb = hub_ports[link.b]
        if va != link.var or vb != link.var:
            raise RoutingError(f"net {link.var!r} connects hubs carrying {va!r} and {vb!r}")
        _wire(canvas, link, pa, pb, port_info)
    # block grid
    I0 = min(p[0] for p in lay.owner) - 0
    I1 = max(p[0] for p in lay.owner) + 1
    J0 = min(min(p[1] for p in lay.owner), 0)
    J1 = max(p[1] for p in lay.owner) + 1
    for I in range(I0, I1 + 1):
        canvas.line((BLOCK * I, BLOCK * J0), (BLOCK * I, BLOCK * J1))
    for J in range(J0, J1 + 1):
        canvas.line((BLOCK * I0, BLOCK * J), (BLOCK * I1, BLOCK * J))
        for I in range(I0, I1 + 1):
            canvas.point((BLOCK * I, BLOCK * J))
    edges = canvas.finish()
    value_ports = {}
    for h, frag, roles in hubs:
        if h.kind == "variable":
            value_ports[roles["x"]] = frag.ports["x"].vertex
    for h, frag, roles in hubs:
        if h.kind == "splitter":
            for s in sorted(h.sides):
                value_ports.setdefault(roles[s], frag.ports[s].vertex)
    missing = [v for v in g.names if v not in value_ports]
    if missing:
        raise CompileError(f"variables without a value port: {missing}")
    tmp = CompiledInstance(f, g, plan, PlaneInstance([], [], {}, {}, None, fixed=dict(canvas.fixed)), hubs,
                           port_info, value_ports, {})
    vals = {n: Fraction(1) for n in g.names}
    if values is not None:
        vals.update(plan.extend(values))
    nominal = tmp.drawing_for(vals)
    unit = tmp.drawing_for({n: Fraction(1) for n in g.names})
    # value 1 puts every construction coordinate on the grid of step 1/LAMBDA
    grid = {v: (int(p[0] * LAMBDA), int(p[1] * LAMBDA)) for v, p in unit.items()}
    inst = PlaneInstance.from_drawing(grid, edges, fixed=dict(canvas.fixed),
                                      meta={"compiled_from": f"{len(f.constraints)} constraints", "lambda": LAMBDA})
    areas = declared_areas(inst, grid, canvas.faces)
    for fid, walk in inst.faces.items():
        if fid != inst.outer and fid not in areas:
            areas[fid] = signed_area([grid[v] for v in walk]) / (LAMBDA * LAMBDA)
    inst.areas = areas
    inst.meta["value_ports"] = {
        var: [v, [num_to_json(c) for c in port_info[v][1]], [num_to_json(c) for c in port_info[v][2]]]
        for var, v in sorted(value_ports.items())
    }
    tmp.instance = inst
    tmp.nominal = nominal
    return tmp


def _wire(canvas: _Canvas, link: Link, pa: Port, pb: Port, port_info):
    d = SIDES[link.a[1]]
    ca = ((pa.origin[0] + pa.end[0]) / 2, (pa.origin[1] + pa.end[1]) / 2)
    cb = ((pb.origin[0] + pb.end[0]) / 2, (pb.origin[1] + pb.end[1]) / 2)
    L = int(round((cb[0] - ca[0]) * d[0] + (cb[1] - ca[1]) * d[1]))
    if L < 2:
        raise RoutingError(f"net {link.var!r}: hubs too close for a wire")
    steps = [d] * L
    origins = wire_origins(pa.origin, pa.end, steps)
    if origins[-1][0] != pb.origin:
        if origins[-1][0] != pb.end:
            raise RoutingError(f"net {link.var!r}: wire does not meet the hub port")
        steps = [d] * (L - 2) + [(2 * d[0], 2 * d[1])]
        origins = wire_origins(pa.origin, pa.end, steps)
        if origins[-1][0] != pb.origin:
            raise RoutingError(f"net {link.var!r}: parity fix failed")
    verts = []
    for i, (o, e) in enumerate(origins):
        if i == 0:
            v = pa.vertex
        elif i == len(origins) - 1:
            v = pb.vertex
        else:
            v = _mid_name(o, e)
            canvas.port(o, e, v)
            port_info[v] = (link.var, o, e)
        verts.append((o, e, v))
    # the two channel lines
    (o0, e0, _), (o1, e1, _) = verts[0], verts[-1]
    for a in (o0, e0):
        b = o1 if (o1[0] - a[0]) * d[1] == (o1[1] - a[1]) * d[0] else e1
        canvas.line(a, b)
    for (o, e, v), (o2, e2, v2), s in zip(verts, verts[1:], steps):
        w = abs(s[0]) + abs(s[1])
        # o and e2 lie on one channel line, e and o2 on the other
        canvas.edge(v, v2)
        canvas.faces.append(([_name(o), _name(e2), v2, v], Fraction(w, 2)))
        canvas.faces.append(([v, v2, _name(o2), _name(e)], Fraction(w, 2)))
