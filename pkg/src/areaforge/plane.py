"""Plane graphs with a rotation system, face areas, and the drawing verifier."""
from __future__ import annotations

import functools
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping

import numpy as np

from . import kernels

FORMAT_VERSION = 1


class EmbeddingError(ValueError):
    pass


# ---------------------------------------------------------------- numbers

def num_to_json(x):
    if isinstance(x, Fraction):
        return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"
    if isinstance(x, int):
        return str(x)
    return float(x)


def num_from_json(x):
    if isinstance(x, str):
        return Fraction(x)
    if isinstance(x, int):
        return Fraction(x)
    return float(x)


def is_exact(x) -> bool:
    return isinstance(x, (int, Fraction))


# ---------------------------------------------------------------- geometry

def det(a, b, c):
    """Twice the signed area of triangle abc."""
    return (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])


def signed_area(polygon) -> Fraction | float:
    """Shoelace area; counter-clockwise polygons are positive."""
    pts = list(polygon)
    if len(pts) < 3:
        raise ValueError("a polygon needs at least three points")
    x0, y0 = pts[0]
    s = 0
    for (x1, y1), (x2, y2) in zip(pts, pts[1:] + pts[:1]):
        s += (x1 - x0) * (y2 - y0) - (x2 - x0) * (y1 - y0)
    if isinstance(s, int):
        return Fraction(s, 2)
    return s / 2


def _half_plane(dx, dy) -> int:
    # 0 for angles in [0, pi), 1 for [pi, 2 pi)
    return 0 if (dy > 0 or (dy == 0 and dx > 0)) else 1


def angle_order(center, points: Mapping) -> list:
    """Keys of ``points`` sorted counter-clockwise by direction from ``center``.

    Exact for rational input; the sort starts at the positive x-axis.
    """
    cx, cy = center

    def cmp(a, b):
        ax, ay = points[a][0] - cx, points[a][1] - cy
        bx, by = points[b][0] - cx, points[b][1] - cy
        ha, hb = _half_plane(ax, ay), _half_plane(bx, by)
        if ha != hb:
            return ha - hb
        cr = ax * by - ay * bx
        if cr > 0:
            return -1
        if cr < 0:
            return 1
        return (ax * ax + ay * ay > bx * bx + by * by) - (ax * ax + ay * ay < bx * bx + by * by)

    return sorted(points, key=functools.cmp_to_key(cmp))


# ---------------------------------------------------------------- instance

def trace_faces(rotation: Mapping) -> list[list]:
    """Face walks with the face on the left of every directed edge.

    Inner faces come out counter-clockwise, the outer face clockwise.
    """
    pos = {}
    for v, nbrs in rotation.items():
        pos[v] = {u: i for i, u in enumerate(nbrs)}
        if len(pos[v]) != len(nbrs):
            raise EmbeddingError(f"vertex {v} lists a neighbour twice")
    for v, nbrs in rotation.items():
        for u in nbrs:
            if v not in pos.get(u, {}):
                raise EmbeddingError(f"edge {v}-{u} missing from the rotation of {u}")
    seen = set()
    faces = []
    for v in sorted(rotation, key=str):
        for u in rotation[v]:
            if (v, u) in seen:
                continue
            walk = []
            a, b = v, u
            while (a, b) not in seen:
                seen.add((a, b))
                walk.append(a)
                nb = rotation[b]
                c = nb[(pos[b][a] - 1) % len(nb)]
                a, b = b, c
            if (a, b) != (v, u):
                raise EmbeddingError("inconsistent rotation system")
            faces.append(walk)
    return faces


def canonical_walk(walk: list) -> tuple:
    """Rotate a closed walk to start at its smallest directed edge."""
    n = len(walk)
    k = min(range(n), key=lambda i: (str(walk[i]), str(walk[(i + 1) % n])))
    return tuple(walk[k:] + walk[:k])


@dataclass
class PlaneInstance:
    vertices: list
    edges: list  # (u, v) pairs, u < v not required
    rotation: dict  # vertex -> neighbours in counter-clockwise order
    faces: dict  # face id -> walk (outer face included)
    outer: str
    areas: dict = field(default_factory=dict)  # inner face id -> rational area
    fixed: dict = field(default_factory=dict)  # vertex -> (x, y)
    meta: dict = field(default_factory=dict)

    @property
    def inner_faces(self) -> list:
        return [f for f in self.faces if f != self.outer]

    def check(self) -> list[str]:
        """Consistency problems between rotation, faces and areas."""
        problems = []
        traced = {canonical_walk(w) for w in trace_faces(self.rotation)}
        stored = {canonical_walk(w) for w in self.faces.values()}
        if traced != stored:
            problems.append("stored faces differ from the faces of the rotation system")
        for f in self.areas:
            if f == self.outer:
                problems.append("outer face carries an area")
            elif f not in self.faces:
                problems.append(f"area for unknown face {f}")
        for v in self.fixed:
            if v not in self.rotation:
                problems.append(f"fixed vertex {v} is not a vertex")
        edge_set = {frozenset(e) for e in self.edges}
        rot_edges = {frozenset((v, u)) for v, nb in self.rotation.items() for u in nb}
        if edge_set != rot_edges:
            problems.append("edge list differs from the rotation system")
        return problems

    @classmethod
    def from_rotation(cls, rotation: Mapping, outer_walk=None, areas=None, fixed=None, face_ids=None,
                      meta=None) -> "PlaneInstance":
        rotation = {v: list(nb) for v, nb in rotation.items()}
        walks = trace_faces(rotation)
        walks = sorted((canonical_walk(w) for w in walks), key=lambda w: [str(x) for x in w])
        faces = {}
        outer = None
        for i, w in enumerate(walks):
            fid = face_ids(w) if face_ids else f"f{i}"
            faces[fid] = list(w)
        if outer_walk is not None:
            target = canonical_walk(list(outer_walk))
            for fid, w in faces.items():
                if tuple(w) == target:
                    outer = fid
            if outer is None:
                raise EmbeddingError("outer walk is not a face of the rotation system")
        edges = sorted({tuple(sorted((v, u), key=str)) for v, nb in rotation.items() for u in nb}, key=str)
        inst = cls(sorted(rotation, key=str), edges, rotation, faces, outer, dict(areas or {}), dict(fixed or {}),
                   dict(meta or {}))
        return inst

    @classmethod
    def from_drawing(cls, positions: Mapping, edges, areas=None, fixed=None, meta=None) -> "PlaneInstance":
        """Rotation from a straight-line drawing; the outer face is the negatively oriented walk."""
        nbrs = {v: {} for v in positions}
        for u, v in edges:
            if u == v:
                raise EmbeddingError(f"loop at {u}")
            nbrs[u][v] = positions[v]
            nbrs[v][u] = positions[u]
        rotation = {v: angle_order(positions[v], nb) for v, nb in nbrs.items()}
        inst = cls.from_rotation(rotation, fixed=fixed, meta=meta)
        outer = [f for f, w in inst.faces.items() if len(w) >= 3 and signed_area([positions[x] for x in w]) < 0]
        if len(outer) != 1:
            raise EmbeddingError(f"expected one clockwise face, found {len(outer)}")
        inst.outer = outer[0]
        if areas:
            inst.areas = dict(areas)
        return inst

    def face_of_walk(self, walk) -> str:
        target = canonical_walk(list(walk))
        for fid, w in self.faces.items():
            if tuple(canonical_walk(w)) == target:
                return fid
        raise KeyError("no such face")

    # ------------------------------------------------------------ json

    def to_json(self) -> dict:
        return {
            "format_version": FORMAT_VERSION,
            "vertices": [str(v) for v in self.vertices],
            "edges": [[str(u), str(v)] for u, v in self.edges],
            "rotation": {str(v): [str(u) for u in nb] for v, nb in sorted(self.rotation.items(), key=lambda kv: str(kv[0]))},
            "outer": self.outer,
            "faces": [
                {"id": fid, "walk": [str(x) for x in w], **({"area": num_to_json(self.areas[fid])} if fid in self.areas else {})}
                for fid, w in self.faces.items()
            ],
            "fixed": [{"v": str(v), "x": num_to_json(p[0]), "y": num_to_json(p[1])} for v, p in sorted(self.fixed.items(), key=lambda kv: str(kv[0]))],
            "meta": self.meta,
        }

    @classmethod
    def from_json(cls, data) -> "PlaneInstance":
        if isinstance(data, str):
            data = json.loads(data)
        faces = {f["id"]: list(f["walk"]) for f in data["faces"]}
        areas = {f["id"]: num_from_json(f["area"]) for f in data["faces"] if "area" in f}
        fixed = {d["v"]: (num_from_json(d["x"]), num_from_json(d["y"])) for d in data.get("fixed", [])}
        return cls(
            list(data["vertices"]),
            [tuple(e) for e in data["edges"]],
            {v: list(nb) for v, nb in data["rotation"].items()},
            faces,
            data["outer"],
            areas,
            fixed,
            dict(data.get("meta", {})),
        )


# ---------------------------------------------------------------- drawings

def drawing_to_json(drawing: Mapping) -> dict:
    exact = all(is_exact(c) for p in drawing.values() for c in p)
    return {
        "format_version": FORMAT_VERSION,
        "exact": exact,
        "positions": {str(v): [num_to_json(p[0]), num_to_json(p[1])] for v, p in sorted(drawing.items(), key=lambda kv: str(kv[0]))},
    }


def drawing_from_json(data) -> dict:
    if isinstance(data, str):
        data = json.loads(data)
    pos = data.get("positions", data)
    return {v: (num_from_json(p[0]), num_from_json(p[1])) for v, p in pos.items()}


def area_residuals(instance: PlaneInstance, drawing: Mapping) -> dict:
    """signed_area(face walk) - A(face) for every face with an assigned area, in face-id order."""
    out = {}
    for fid in instance.faces:
        if fid == instance.outer or fid not in instance.areas:
            continue
        walk = instance.faces[fid]
        out[fid] = signed_area([drawing[v] for v in walk]) - instance.areas[fid]
    return out


@dataclass
class VerificationReport:
    exact: bool
    crossings: list = field(default_factory=list)  # independent edge pairs that meet
    ordering: list = field(default_factory=list)  # vertices whose cyclic order is wrong
    winding: list = field(default_factory=list)  # vertices failing the two-interval split
    outer_residual: object = 0
    outer_ok: bool = True
    area_residuals: dict = field(default_factory=dict)
    area_failures: list = field(default_factory=list)
    fixed_residuals: dict = field(default_factory=dict)
    fixed_failures: list = field(default_factory=list)
    missing: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not (self.crossings or self.ordering or self.winding or self.area_failures or self.fixed_failures
                    or self.missing) and self.outer_ok

    def summary(self) -> dict:
        return {
            "ok": self.ok,
            "exact": self.exact,
            "noCrossing": {"pass": not self.crossings, "offending": [list(map(str, p)) for p in self.crossings[:50]]},
            "Ordering": {"pass": not self.ordering, "offending": [str(v) for v in self.ordering[:50]]},
            "Winding": {"pass": not self.winding, "offending": [str(v) for v in self.winding[:50]]},
            "Outer": {"pass": self.outer_ok, "residual": num_to_json(self.outer_residual)},
            "Area": {
                "pass": not self.area_failures,
                "offending": self.area_failures[:50],
                "max_abs_residual": float(max((abs(r) for r in self.area_residuals.values()), default=0)),
            },
            "Fixed": {"pass": not self.fixed_failures, "offending": [str(v) for v in self.fixed_failures[:50]]},
        }


def segments_meet_exact(a, b, c, d) -> bool:
    """Closed segments ab and cd share a point (exact arithmetic)."""
    d1, d2 = det(a, b, c), det(a, b, d)
    d3, d4 = det(c, d, a), det(c, d, b)
    if (d1 > 0 and d2 > 0) or (d1 < 0 and d2 < 0) or (d3 > 0 and d4 > 0) or (d3 < 0 and d4 < 0):
        return False
    if d1 == 0 and d2 == 0 and d3 == 0 and d4 == 0:
        if max(a[0], b[0]) < min(c[0], d[0]) or max(c[0], d[0]) < min(a[0], b[0]):
            return False
        if max(a[1], b[1]) < min(c[1], d[1]) or max(c[1], d[1]) < min(a[1], b[1]):
            return False
    return True


def _exact_crossings(edges, drawing) -> list:
    boxes = []
    for u, v in edges:
        p, q = drawing[u], drawing[v]
        boxes.append((min(p[0], q[0]), max(p[0], q[0]), min(p[1], q[1]), max(p[1], q[1])))
    order = sorted(range(len(edges)), key=lambda i: boxes[i][0])
    out = []
    for a, i in enumerate(order):
        u1, v1 = edges[i]
        for j in order[a + 1:]:
            if boxes[j][0] > boxes[i][1]:
                break
            u2, v2 = edges[j]
            if len({u1, v1, u2, v2}) < 4:
                continue
            if boxes[j][3] < boxes[i][2] or boxes[j][2] > boxes[i][3]:
                continue
            if segments_meet_exact(drawing[u1], drawing[v1], drawing[u2], drawing[v2]):
                out.append((edges[min(i, j)], edges[max(i, j)]))
    return out


def vertex_order_ok(center, nbr_points, tol=0) -> bool:
    """Counter-clockwise order: at most one consecutive pair fails to turn strictly left."""
    d = len(nbr_points)
    if d <= 1:
        return True
    if d == 2:
        a, b = nbr_points
        cr = det(center, a, b)
        dot = (a[0] - center[0]) * (b[0] - center[0]) + (a[1] - center[1]) * (b[1] - center[1])
        return not (abs(cr) <= tol and dot > 0)
    failures = 0
    for i in range(d):
        if not det(center, nbr_points[i], nbr_points[(i + 1) % d]) > tol:
            failures += 1
            if failures > 1:
                return False
    return True


def winding_ok(center, nbr_points, tol=0) -> bool:
    """Neighbours strictly right of the vertex form one cyclic interval (possibly empty)."""
    d = len(nbr_points)
    if d <= 2:
        return True
    right = [p[0] - center[0] > tol for p in nbr_points]
    changes = sum(1 for i in range(d) if right[i] != right[(i + 1) % d])
    return changes <= 2


def verify_drawing(instance: PlaneInstance, drawing: Mapping, tol: float | None = None) -> VerificationReport:
    """Check noCrossing, Ordering, winding, Outer, Area and fixed positions.

    With rational coordinates and ``tol=None`` every check is exact; otherwise
    ``tol`` (default 1e-9) bounds area and position residuals.
    """
    missing = [v for v in instance.vertices if v not in drawing]
    exact = tol is None and all(is_exact(c) for v in instance.vertices if v in drawing for c in drawing[v])
    rep = VerificationReport(exact=exact, missing=missing)
    if missing:
        return rep
    if not exact:
        tol = 1e-9 if tol is None else tol
        pts = {v: (float(drawing[v][0]), float(drawing[v][1])) for v in instance.vertices}
        extent = max((max(abs(x), abs(y)) for x, y in pts.values()), default=1.0) or 1.0
        geo = 1e-12 * extent * extent
        index = {v: i for i, v in enumerate(instance.vertices)}
        xy = np.array([pts[v] for v in instance.vertices], dtype=float).reshape(-1, 2)
        earr = np.array([(index[u], index[v]) for u, v in instance.edges], dtype=np.int64).reshape(-1, 2)
        pairs = kernels.crossing_pairs(xy, earr, geo)
        rep.crossings = [(instance.edges[i], instance.edges[j]) for i, j in pairs.tolist()]
    else:
        pts = {v: tuple(Fraction(c) for c in drawing[v]) for v in instance.vertices}
        geo = 0
        # all exact predicates are invariant under a positive scale, so work on integers
        scale = math.lcm(*(c.denominator for p in pts.values() for c in p)) if pts else 1
        ipts = {v: (int(p[0] * scale), int(p[1] * scale)) for v, p in pts.items()}
        rep.crossings = _exact_crossings(instance.edges, ipts)
    geom = ipts if exact else pts
    for v in instance.vertices:
        nb = [geom[u] for u in instance.rotation[v]]
        if not vertex_order_ok(geom[v], nb, geo):
            rep.ordering.append(v)
        if not winding_ok(geom[v], nb, geo):
            rep.winding.append(v)
    if exact:
        s2 = scale * scale
        res = {f: signed_area([ipts[v] for v in instance.faces[f]]) / s2 - instance.areas[f]
               for f in instance.faces if f != instance.outer and f in instance.areas}
    else:
        res = area_residuals(instance, pts)
    rep.area_residuals = res
    rep.area_failures = [f for f, r in res.items() if (r != 0 if exact else abs(r) > tol)]
    if instance.outer is not None and len(instance.faces[instance.outer]) >= 3:
        if exact:
            outer_area = -signed_area([ipts[v] for v in instance.faces[instance.outer]]) / (scale * scale)
        else:
            outer_area = -signed_area([pts[v] for v in instance.faces[instance.outer]])
        inner = sum((instance.areas[f] for f in instance.inner_faces if f in instance.areas), Fraction(0))
        if len(instance.areas) == len(instance.inner_faces):
            rep.outer_residual = outer_area - inner
            rep.outer_ok = rep.outer_residual == 0 if exact else abs(rep.outer_residual) <= tol * max(1, len(instance.areas))
    for v, p in instance.fixed.items():
        r = max(abs(pts[v][0] - p[0]), abs(pts[v][1] - p[1]))
        rep.fixed_residuals[v] = r
        if (r != 0) if exact else (r > tol):
            rep.fixed_failures.append(v)
    return rep


# ---------------------------------------------------------------- svg

def render_svg(instance: PlaneInstance, drawing: Mapping, size: float = 800.0, labels: bool = True) -> str:
    pts = {v: (float(p[0]), float(p[1])) for v, p in drawing.items()}
    xs = [p[0] for p in pts.values()] or [0.0]
    ys = [p[1] for p in pts.values()] or [0.0]
    x0, x1, y0, y1 = min(xs), max(xs), min(ys), max(ys)
    span = max(x1 - x0, y1 - y0, 1e-9)
    k = (size - 40) / span

    def tr(p):
        return 20 + (p[0] - x0) * k, 20 + (y1 - p[1]) * k

    W, H = 40 + (x1 - x0) * k, 40 + (y1 - y0) * k
    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{W:.0f}" height="{H:.0f}" font-size="9">']
    for i, (fid, walk) in enumerate(instance.faces.items()):
        if fid == instance.outer:
            continue
        poly = " ".join("%.2f,%.2f" % tr(pts[v]) for v in walk)
        hue = (i * 47) % 360
        out.append(f'<polygon points="{poly}" fill="hsl({hue},60%,85%)" stroke="none"/>')
    for u, v in instance.edges:
        (a, b), (c, d) = tr(pts[u]), tr(pts[v])
        out.append(f'<line x1="{a:.2f}" y1="{b:.2f}" x2="{c:.2f}" y2="{d:.2f}" stroke="#222" stroke-width="0.6"/>')
    for v in instance.vertices:
        x, y = tr(pts[v])
        color = "#d62728" if v in instance.fixed else "#1f77b4"
        out.append(f'<circle cx="{x:.2f}" cy="{y:.2f}" r="1.6" fill="{color}"/>')
    if labels:
        for fid, walk in instance.faces.items():
            if fid == instance.outer or fid not in instance.areas:
                continue
            poly = [pts[v] for v in walk]
            achieved = float(signed_area(poly))
            cx = sum(p[0] for p in poly) / len(poly)
            cy = sum(p[1] for p in poly) / len(poly)
            x, y = tr((cx, cy))
            target = float(instance.areas[fid])
            out.append(f'<text x="{x:.1f}" y="{y:.1f}" text-anchor="middle">{target:.4g}/{achieved:.4g}</text>')
    out.append("</svg>")
    return "\n".join(out)
