"""The five area gadgets (variable, wire, splitter, inversion, addition).

Coordinates are integers on a unit grid; a value V is carried by a flexible
vertex on a unit port segment at distance V / LAMBDA from the segment's origin
endpoint.  Every fragment knows its face areas and how to place its flexible
vertices for given port values, which yields exact rational witnesses.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Callable, Mapping

from .plane import PlaneInstance, signed_area

LAMBDA = 5

# outward unit normals of block sides
SIDES = {"N": (0, 1), "E": (1, 0), "S": (0, -1), "W": (-1, 0)}
SIDE_OF = {v: k for k, v in SIDES.items()}


class GadgetError(ValueError):
    pass


def _add(p, q):
    return (p[0] + q[0], p[1] + q[1])


def _sub(p, q):
    return (p[0] - q[0], p[1] - q[1])


def _scale(p, t):
    return (p[0] * t, p[1] * t)


@dataclass(frozen=True)
class Port:
    vertex: str
    origin: tuple  # endpoint where the encoded value is 0
    end: tuple  # endpoint where the encoded value is LAMBDA
    side: str  # outward side of the fragment the port faces

    def point(self, value) -> tuple:
        t = Fraction(value) / LAMBDA if not isinstance(value, float) else value / LAMBDA
        return _add(self.origin, _scale(_sub(self.end, self.origin), t))

    def value_of(self, p) -> float:
        d = _sub(self.end, self.origin)
        r = _sub(p, self.origin)
        return LAMBDA * (r[0] * d[0] + r[1] * d[1]) / (d[0] * d[0] + d[1] * d[1])


@dataclass
class GadgetFragment:
    kind: str
    points: dict  # fixed vertex -> (x, y)
    flexible: list
    edges: list  # (u, v)
    faces: list  # (walk, area); walks may be listed in either orientation
    ports: dict  # role -> Port
    place: Callable  # (values by role) -> {flexible vertex: point}
    depth: dict = field(default_factory=dict)  # role -> distance of the port from the block side

    def vertices(self) -> list:
        return list(self.points) + list(self.flexible)

    def witness(self, values: Mapping) -> dict:
        """Exact drawing for port values (roles missing from ``values`` are derived)."""
        pos = dict(self.points)
        pos.update(self.place(values))
        return pos

    def mapped(self, fn) -> "GadgetFragment":
        """Apply an affine integer map to every coordinate (ports, points, placement)."""
        old_place = self.place
        return replace(
            self,
            points={k: fn(p) for k, p in self.points.items()},
            ports={r: Port(p.vertex, fn(p.origin), fn(p.end), _side_after(fn, p.side)) for r, p in self.ports.items()},
            place=lambda values: {k: fn(p) for k, p in old_place(values).items()},
        )

    def renamed(self, names: Mapping) -> "GadgetFragment":
        rn = lambda v: names.get(v, v)  # noqa: E731
        old_place = self.place
        return replace(
            self,
            points={rn(k): p for k, p in self.points.items()},
            flexible=[rn(v) for v in self.flexible],
            edges=[(rn(a), rn(b)) for a, b in self.edges],
            faces=[([rn(v) for v in w], a) for w, a in self.faces],
            ports={r: Port(rn(p.vertex), p.origin, p.end, p.side) for r, p in self.ports.items()},
            place=lambda values: {rn(k): p for k, p in old_place(values).items()},
        )

    def instance(self, values: Mapping | None = None, fix_roles=()) -> tuple[PlaneInstance, dict]:
        """Stand-alone instance plus the exact witness for ``values``.

        Fixed vertices are pinned; ports listed in ``fix_roles`` are pinned at
        their witness positions as well.
        """
        values = dict(values or self.default_values())
        pos = self.witness(values)
        fixed = dict(self.points)
        for r in fix_roles:
            v = self.ports[r].vertex
            fixed[v] = pos[v]
        inst = PlaneInstance.from_drawing(pos, self.edges, fixed=fixed, meta={"gadget": self.kind})
        inst.areas = declared_areas(inst, pos, self.faces)
        return inst, pos

    def default_values(self) -> dict:
        return {r: Fraction(1) for r in self.ports}


def _side_after(fn, side):
    o = fn((0, 0))
    d = _sub(fn(SIDES[side]), o)
    return SIDE_OF[(int(d[0]), int(d[1]))]


def declared_areas(inst: PlaneInstance, pos: Mapping, faces) -> dict:
    """Map declared (walk, area) pairs onto the face ids of ``inst``.

    A declared walk is matched by its first directed edge after orienting it
    counter-clockwise; its vertex set must equal the traced face's.
    """
    left = {}
    for fid, walk in inst.faces.items():
        n = len(walk)
        for i in range(n):
            left[(walk[i], walk[(i + 1) % n])] = fid
    out = {}
    for walk, area in faces:
        w = list(walk)
        if signed_area([pos[v] for v in w]) < 0:
            w = w[::-1]
        fid = left.get((w[0], w[1]))
        if fid is None or fid == inst.outer:
            raise GadgetError(f"declared face {walk} is not an inner face")
        if set(inst.faces[fid]) != set(w):
            raise GadgetError(f"declared face {walk} differs from traced face {inst.faces[fid]}")
        if fid in out and out[fid] != area:
            raise GadgetError(f"face {fid} declared twice with different areas")
        out[fid] = Fraction(area)
    return out


def _offsets(values, role, default=Fraction(1)):
    v = values.get(role, default)
    return (Fraction(v) if not isinstance(v, float) else v) / LAMBDA


def _translate(anchor):
    ax, ay = anchor
    return lambda p: (p[0] + ax, p[1] + ay)


# ---------------------------------------------------------------- variable

def make_variable_gadget(anchor=(0, 0), fixed_value=None) -> GadgetFragment:
    """Rectangle a,b,e,h of area 6 with a pendant triangle c,d,v of area 1/2.

    v slides on the bottom segment f-g; its distance from f times LAMBDA is the
    value.  With ``fixed_value`` v becomes a fixed vertex.
    """
    if fixed_value is not None:
        fixed_value = Fraction(fixed_value)
        if not 0 < fixed_value < LAMBDA:
            raise GadgetError(f"fixed value {fixed_value} outside (0, {LAMBDA})")
    pts = {"a": (0, 2), "b": (3, 2), "e": (0, 0), "h": (3, 0), "f": (1, 0), "g": (2, 0), "c": (1, 1), "d": (2, 1)}
    port = Port("v", pts["f"], pts["g"], "S")
    edges = [("a", "e"), ("e", "f"), ("f", "v"), ("v", "g"), ("g", "h"), ("h", "b"), ("b", "a"),
             ("c", "d"), ("c", "v"), ("d", "v")]
    faces = [(["v", "d", "c"], Fraction(1, 2)),
             (["a", "e", "f", "v", "c", "d", "v", "g", "h", "b"], Fraction(11, 2))]

    if fixed_value is None:
        flexible = ["v"]
        place = lambda values: {"v": port.point(values.get("x", 1))}  # noqa: E731
    else:
        pts["v"] = port.point(fixed_value)
        flexible = []
        place = lambda values: {}  # noqa: E731
    frag = GadgetFragment("constant" if fixed_value is not None else "variable", pts, flexible, edges, faces,
                          {"x": port}, place)
    return frag.mapped(_translate(anchor))


# ---------------------------------------------------------------- wire

def wire_origins(first_origin, first_end, steps):
    """Origins of successive port segments along a wire.

    ``steps`` lists the advance vectors between consecutive ports; each
    fragment moves the origin to the opposite channel line.
    """
    out = [(first_origin, first_end)]
    o, e = first_origin, first_end
    for s in steps:
        o, e = _add(e, s), _add(o, s)
        out.append((o, e))
    return out


def make_wire(path, parity_fix: bool = False, prefix: str = "w") -> GadgetFragment:
    """Straight chain of box fragments along ``path`` (integer points, unit steps).

    Each path point carries a port segment from the point to its left
    neighbour; consecutive segments bound two quadrilaterals of area w/2 each
    (w = fragment length).  ``parity_fix`` merges the last two fragments into
    one of length 2, flipping which channel line carries the origin at the exit.
    """
    path = [tuple(p) for p in path]
    if len(path) < 2:
        raise GadgetError("a wire needs at least two path points")
    d = _sub(path[1], path[0])
    if abs(d[0]) + abs(d[1]) != 1:
        raise GadgetError("wire path must advance by unit steps")
    for p, q in zip(path, path[1:]):
        if _sub(q, p) != d:
            raise GadgetError("wire path must be straight; turns use splitters")
    if parity_fix:
        if len(path) < 3:
            raise GadgetError("parity fix needs at least two fragments")
        path = path[:-2] + path[-1:]
    n = (-d[1], d[0])  # left normal
    segs = [(p, _add(p, n)) for p in path]
    steps = [_sub(q, p) for p, q in zip(path, path[1:])]
    origins = wire_origins(segs[0][0], segs[0][1], steps)
    pts, flexible, edges, faces = {}, [], [], []
    names = []
    for i, (a, b) in enumerate(segs):
        pa, pb, v = f"{prefix}a{i}", f"{prefix}b{i}", f"{prefix}v{i}"
        pts[pa], pts[pb] = a, b
        flexible.append(v)
        names.append((pa, pb, v))
        edges += [(pa, v), (v, pb)]
    for i in range(len(segs) - 1):
        (a0, b0, v0), (a1, b1, v1) = names[i], names[i + 1]
        w = abs(steps[i][0]) + abs(steps[i][1])
        edges += [(a0, a1), (b0, b1), (v0, v1)]
        faces.append(([a0, a1, v1, v0], Fraction(w, 2)))
        faces.append(([v0, v1, b1, b0], Fraction(w, 2)))
    ports = {
        "in": Port(names[0][2], origins[0][0], origins[0][1], SIDE_OF[(-d[0], -d[1])]),
        "out": Port(names[-1][2], origins[-1][0], origins[-1][1], SIDE_OF[d]),
    }
    all_ports = [Port(names[i][2], o, e, "") for i, (o, e) in enumerate(origins)]

    def place(values):
        x = values.get("in", values.get("out", 1))
        return {p.vertex: p.point(x) for p in all_ports}

    return GadgetFragment("wire", pts, flexible, edges, faces, ports, place)


# ---------------------------------------------------------------- splitter

def _rot90(p, c=(Fraction(3, 2), Fraction(3, 2))):
    x, y = p[0] - c[0], p[1] - c[1]
    q = (c[0] - y, c[1] + x)
    return tuple(int(t) if Fraction(t).denominator == 1 else t for t in q)


def make_splitter(anchor=(0, 0)) -> GadgetFragment:
    """3x3 square: fixed unit square in the middle, four port triangles of area 1/2,
    four corner faces of area 3/2 that push the value around.

    Every port measures its value from the endpoint that comes first in
    counter-clockwise order around the square.
    """
    order = ["S", "E", "N", "W"]
    pts, edges, faces, ports = {}, [], [], {}

    def name(p):
        return f"{p[0]},{p[1]}"

    base = {
        "o0": (0, 0), "p0": (1, 0), "p1": (2, 0), "i0": (1, 1), "i1": (2, 1),
    }
    rotated = [dict(base)]
    for k in range(1, 4):
        rotated.append({r: _rot90(p) for r, p in rotated[-1].items()})
    for k, side in enumerate(order):
        b = rotated[k]
        for p in b.values():
            pts[name(p)] = p
        v = f"v{side}"
        o, p0, p1, i0, i1 = (name(b[r]) for r in ("o0", "p0", "p1", "i0", "i1"))
        nb = rotated[(k + 1) % 4]
        o_next = name(nb["o0"])
        edges += [(o, p0), (p0, v), (v, p1), (p1, o_next), (i0, i1), (v, i0), (v, i1)]
        faces.append(([v, i1, i0], Fraction(1, 2)))
        nxt = f"v{order[(k + 1) % 4]}"
        # corner face between this port and the next one
        faces.append(([v, p1, o_next, name(nb["p0"]), nxt, i1], Fraction(3, 2)))
        ports[side] = Port(v, b["p0"], b["p1"], side)
    faces.append(([name(rotated[k]["i0"]) for k in range(4)], Fraction(1)))

    def place(values):
        known = [values[s] for s in order if s in values]
        x = known[0] if known else 1
        return {ports[s].vertex: ports[s].point(x) for s in order}

    frag = GadgetFragment("splitter", pts, [f"v{s}" for s in order], edges, faces, ports, place)
    return frag.mapped(_translate(anchor))


# ---------------------------------------------------------------- inversion

def make_inversion(anchor=(0, 0)) -> GadgetFragment:
    """Unit square a,b,c,d; v_x on ac, v_y on cd, triangle v_x v_y c of area 1/(2 LAMBDA^2)."""
    pts = {"a": (0, 0), "b": (1, 0), "c": (0, 1), "d": (1, 1)}
    px = Port("vx", pts["c"], pts["a"], "W")
    py = Port("vy", pts["c"], pts["d"], "N")
    edges = [("a", "b"), ("b", "d"), ("c", "vx"), ("vx", "a"), ("c", "vy"), ("vy", "d"), ("vx", "vy")]
    tri = Fraction(1, 2 * LAMBDA * LAMBDA)
    faces = [(["c", "vx", "vy"], tri), (["vx", "a", "b", "d", "vy"], 1 - tri)]

    def place(values):
        if "x" in values:
            x = values["x"]
            y = values.get("y", 1 / x if isinstance(x, float) else 1 / Fraction(x))
        else:
            y = values.get("y", 1)
            x = 1 / y if isinstance(y, float) else 1 / Fraction(y)
        return {"vx": px.point(x), "vy": py.point(y)}

    frag = GadgetFragment("inversion", pts, ["vx", "vy"], edges, faces, {"x": px, "y": py}, place)
    return frag.mapped(_translate(anchor))


# ---------------------------------------------------------------- addition

ADDITION_POINTS = {
    "a": (0, 3), "b": (3, 3), "c": (0, 2), "d": (1, 2), "e": (2, 2), "f": (3, 2),
    "g": (0, 1), "h": (1, 1), "i": (2, 1), "j": (3, 1), "k": (1, 0), "l": (2, 0),
}


def addition_q(x, y):
    """Position of the inner flexible vertex for port offsets x, y (canonical frame)."""
    return (2 - y, 1 + x + y)


def make_addition(anchor=(0, 0)) -> GadgetFragment:
    """Twelve fixed vertices on a 3x3 grid, ports v_x on cg, v_y on fj, v_z on kl,
    inner vertex q joined to d, e, i, h; faces of area 7/2, 2, 1, 1 force z = x + y."""
    pts = dict(ADDITION_POINTS)
    px = Port("vx", pts["c"], pts["g"], "W")
    py = Port("vy", pts["f"], pts["j"], "E")
    pz = Port("vz", pts["k"], pts["l"], "S")
    edges = [
        ("c", "a"), ("a", "b"), ("b", "f"), ("f", "vy"), ("vy", "j"), ("j", "i"), ("i", "l"), ("l", "vz"),
        ("vz", "k"), ("k", "g"), ("g", "vx"), ("vx", "c"),
        ("vx", "d"), ("vy", "e"), ("vz", "h"), ("q", "d"), ("q", "e"), ("q", "i"), ("q", "h"),
    ]
    faces = [
        (["vx", "c", "a", "b", "f", "vy", "e", "q", "d"], Fraction(7, 2)),
        (["vx", "d", "q", "h", "vz", "k", "g"], Fraction(2)),
        (["e", "vy", "j", "i", "q"], Fraction(1)),
        (["vz", "l", "i", "q", "h"], Fraction(1)),
    ]

    def place(values):
        X, Y = values.get("x", 1), values.get("y", 1)
        Z = values.get("z", X + Y)
        x, y = _offsets({"v": X}, "v"), _offsets({"v": Y}, "v")
        return {"vx": px.point(X), "vy": py.point(Y), "vz": pz.point(Z), "q": addition_q(x, y)}

    frag = GadgetFragment("addition", pts, ["vx", "vy", "vz", "q"], edges, faces, {"x": px, "y": py, "z": pz}, place)
    return frag.mapped(_translate(anchor))


def make_gadget(kind: str, **kw) -> GadgetFragment:
    makers = {
        "variable": make_variable_gadget,
        "constant": lambda **k: make_variable_gadget(fixed_value=1, **k),
        "wire": lambda **k: make_wire(k.pop("path", [(0, 0), (1, 0)]), **k),
        "splitter": make_splitter,
        "inversion": make_inversion,
        "addition": make_addition,
    }
    if kind not in makers:
        raise GadgetError(f"unknown gadget {kind!r}")
    return makers[kind](**kw)


GADGET_KINDS = ("variable", "wire", "splitter", "inversion", "addition")
