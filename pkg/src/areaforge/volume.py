"""Tetrahedral complexes with prescribed volumes.

A complex is a list of 4-vertex sets; a placement maps vertices to 3D points.
A placement is crossing-free when every pair of tetrahedra admits a weakly
separating plane, and it realizes the volume assignment when each
tetrahedron's volume ``|det| / 6`` matches its target.
"""
from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping

from .plane import PlaneInstance, num_from_json, num_to_json


class VolumeError(ValueError):
    pass


@dataclass
class SimplicialInstance:
    vertices: list
    tetra: list  # 4-tuples of vertex names
    volumes: dict = field(default_factory=dict)  # tetra index -> target volume
    tags: dict = field(default_factory=dict)  # tetra index -> universal tag
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        known = set(self.vertices)
        for i, t in enumerate(self.tetra):
            if len(t) != 4 or len(set(t)) != 4:
                raise VolumeError(f"tetrahedron {i} must have four distinct vertices")
            missing = [v for v in t if v not in known]
            if missing:
                raise VolumeError(f"tetrahedron {i} uses unknown vertices {missing}")
            if i in self.volumes and self.volumes[i] < 0:
                raise VolumeError(f"negative volume on tetrahedron {i}")

    def to_json(self) -> dict:
        tets = []
        for i, t in enumerate(self.tetra):
            d = {"ids": list(t)}
            if i in self.volumes:
                d["volume"] = num_to_json(self.volumes[i])
            if i in self.tags:
                d["tag"] = self.tags[i]
            tets.append(d)
        return {"vertices": list(self.vertices), "tetra": tets, "meta": self.meta}

    @staticmethod
    def from_json(data) -> "SimplicialInstance":
        if isinstance(data, str):
            data = json.loads(data)
        tets, vols, tags = [], {}, {}
        for i, d in enumerate(data["tetra"]):
            tets.append(tuple(d["ids"]))
            if "volume" in d:
                vols[i] = num_from_json(d["volume"])
            if "tag" in d:
                tags[i] = d["tag"]
        return SimplicialInstance(list(data["vertices"]), tets, vols, tags, dict(data.get("meta", {})))


def _sub(a, b):
    return (a[0] - b[0], a[1] - b[1], a[2] - b[2])


def _cross(a, b):
    return (a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0])


def _dot(a, b):
    return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]


def det4(p, q, r, s):
    """Determinant of the homogeneous 4x4 matrix of the points (six times the signed volume)."""
    return _dot(_sub(p, s), _cross(_sub(q, s), _sub(r, s)))


def tetra_volume(p, q, r, s):
    d = abs(det4(p, q, r, s))
    return Fraction(d, 6) if isinstance(d, int) else d / 6


def separating_axes(A, B):
    """Candidate normals: face normals, edge-edge cross products and the
    directions between closest features (needed when a set is degenerate)."""
    axes = []
    for pts in (A, B):
        for a, b, c in itertools.combinations(pts, 3):
            axes.append(_cross(_sub(b, a), _sub(c, a)))
    ea = [(p, _sub(q, p)) for p, q in itertools.combinations(A, 2)]
    eb = [(p, _sub(q, p)) for p, q in itertools.combinations(B, 2)]
    for _, u in ea:
        for _, w in eb:
            axes.append(_cross(u, w))
    for a in A:
        for b in B:
            axes.append(_sub(a, b))
    # component of (point - edge start) orthogonal to the edge
    for edges, pts in ((ea, B), (eb, A)):
        for o, e in edges:
            for p in pts:
                axes.append(_cross(e, _cross(_sub(p, o), e)))
    return [n for n in axes if n != (0, 0, 0)]


def separated(A, B) -> bool:
    """A plane with A on one closed side and B on the other exists (exact)."""
    for n in separating_axes(A, B):
        pa = [_dot(n, p) for p in A]
        pb = [_dot(n, p) for p in B]
        if max(pa) <= min(pb) or max(pb) <= min(pa):
            return True
    return False


@dataclass
class PlacementReport:
    volume_residuals: dict
    volume_failures: list
    overlapping: list  # pairs of tetra indices with no separating plane
    missing: list

    @property
    def ok(self) -> bool:
        return not (self.volume_failures or self.overlapping or self.missing)

    def summary(self) -> dict:
        return {
            "ok": self.ok,
            "volume_failures": self.volume_failures,
            "overlapping": [list(p) for p in self.overlapping],
            "missing": self.missing,
            "max_volume_residual": max((abs(float(r)) for r in self.volume_residuals.values()), default=0.0),
        }


def verify_placement(s: SimplicialInstance, placement: Mapping, tol=None, volumes: Mapping | None = None) -> PlacementReport:
    """Volume residuals for prescribed tetrahedra and pairwise separation.

    ``volumes`` supplies values for tagged (universal) tetrahedra.  With
    ``tol=None`` the checks are exact.
    """
    missing = [v for v in s.vertices if v not in placement]
    if missing:
        return PlacementReport({}, [], [], missing)
    pos = {v: tuple(placement[v]) for v in s.vertices}
    res, bad = {}, []
    for i, t in enumerate(s.tetra):
        target = s.volumes.get(i)
        if target is None and volumes is not None and i in s.tags:
            target = volumes.get(s.tags[i])
        if target is None:
            continue
        r = tetra_volume(*(pos[v] for v in t)) - target
        res[i] = r
        if (r != 0) if tol is None else (abs(r) > tol):
            bad.append(i)
    overlap = []
    for i, j in itertools.combinations(range(len(s.tetra)), 2):
        if not separated([pos[v] for v in s.tetra[i]], [pos[v] for v in s.tetra[j]]):
            overlap.append((i, j))
    return PlacementReport(res, bad, overlap, [])


# ---------------------------------------------------------------- lifting plane triangulations

def _reflect(p, a, b):
    d = (b[0] - a[0], b[1] - a[1])
    v = (p[0] - a[0], p[1] - a[1])
    k = 2 * (v[0] * d[0] + v[1] * d[1]) / (d[0] * d[0] + d[1] * d[1])
    return (a[0] + k * d[0] - v[0], a[1] + k * d[1] - v[1])


def _check_triangulation(g: PlaneInstance):
    for f in g.faces:
        if len(g.faces[f]) != 3:
            raise VolumeError(f"face {f} is not a triangle")


def lift_to_volume(g: PlaneInstance, areas: Mapping | None = None) -> SimplicialInstance:
    """Two copies of a triangulation glued along an outer edge, coned from x and y.

    Tetrahedra over x get the face areas as volumes, those over y get 0.
    ``meta`` records the copy map and the glued edge.
    """
    _check_triangulation(g)
    areas = dict(g.areas if areas is None else areas)
    outer = g.faces[g.outer]
    u, w = outer[0], outer[1]
    copy = {v: v if v in (u, w) else f"{v}'" for v in g.vertices}
    if any(c in g.vertices for v, c in copy.items() if c != v) or {"x", "y"} & set(g.vertices):
        raise VolumeError("vertex names collide with copy or apex names")
    verts = list(g.vertices) + [copy[v] for v in g.vertices if copy[v] != v] + ["x", "y"]
    triangles = []
    for f in g.inner_faces:
        tri = tuple(g.faces[f])
        if f not in areas:
            raise VolumeError(f"no area for face {f}")
        triangles.append((tri, Fraction(areas[f])))
        triangles.append((tuple(copy[v] for v in tri), Fraction(areas[f])))
    tets, vols = [], {}
    for tri, a in triangles:
        vols[len(tets)] = a
        tets.append(tri + ("x",))
    for tri, a in triangles:
        vols[len(tets)] = Fraction(0)
        tets.append(tri + ("y",))
    meta = {"glued_edge": [u, w], "copy": copy, "triangles": 2 * len(g.inner_faces)}
    return SimplicialInstance(verts, tets, vols, {}, meta)


def lift_drawing(g: PlaneInstance, drawing: Mapping, x_height=3, y_height=0) -> dict:
    """Place both copies in the plane z=0 and the apices above them.

    The copy is the mirror image across the glued edge; x sits above the
    first copy at ``x_height`` and y at ``y_height`` beside the drawing.
    """
    outer = g.faces[g.outer]
    u, w = outer[0], outer[1]
    a, b = drawing[u], drawing[w]
    out = {}
    for v in g.vertices:
        p = drawing[v]
        out[v] = (p[0], p[1], 0)
        if v not in (u, w):
            q = _reflect(p, a, b)
            out[f"{v}'"] = (q[0], q[1], 0)
    xs = [p[0] for p in out.values()]
    ys = [p[1] for p in out.values()]
    cx = sum(drawing[v][0] for v in outer) / 3
    cy = sum(drawing[v][1] for v in outer) / 3
    out["x"] = (cx, cy, x_height)
    out["y"] = (max(xs) + 1, max(ys) + 1, y_height)
    return out


# ---------------------------------------------------------------- coplanar gadget

@dataclass
class CoplanarGadget:
    instance: SimplicialInstance
    placement: dict
    triangles: list  # all triangles of the base triangulation, in path order
    red: list  # the k triangles exposed to the free half space
    apex_volume: Fraction
    layers: tuple  # (first matching, second matching) as tetra index lists


def coplanar_gadget(k: int) -> CoplanarGadget:
    """Triangulated strip in the plane z=-1 coned to the apex (0,0,-2).

    The strip zigzags between x=0 and x=9 through a_0..a_{2k}; each strip
    triangle is split at its centroid b_i.  The triangles form a path in the
    dual graph, and the two alternating matchings of that path contribute
    flat (volume 0) tetrahedra, which pin all vertices to one plane.
    """
    if k < 1:
        raise VolumeError("the gadget needs at least one red triangle")
    n = 2 * k
    a = [(Fraction(0 if i % 2 == 0 else 9), Fraction(i), Fraction(-1)) for i in range(n + 1)]
    pos = {f"a{i}": a[i] for i in range(n + 1)}
    for i in range(1, n):
        pos[f"b{i}"] = tuple((a[i - 1][c] + a[i][c] + a[i + 1][c]) / 3 for c in range(3))
    pos["v"] = (Fraction(0), Fraction(0), Fraction(-2))
    path, red = [], []
    for i in range(1, n):
        lo, mid, hi, b = f"a{i - 1}", f"a{i}", f"a{i + 1}", f"b{i}"
        boundary = (lo, b, hi)
        path += [(lo, mid, b), boundary, (mid, hi, b)]
        if i % 2 == 1:
            red.append(boundary)
    tets, vols = [], {}
    for t in path:
        vols[len(tets)] = None
        tets.append(t + ("v",))
    apex = tetra_volume(*(pos[x] for x in tets[0]))
    for i in range(len(path)):
        vols[i] = apex
    layers = ([], [])
    for j in range(len(path) - 1):
        quad = tuple(dict.fromkeys(path[j] + path[j + 1]))
        if len(quad) != 4:
            raise VolumeError("consecutive triangles do not share an edge")
        layers[j % 2].append(len(tets))
        vols[len(tets)] = Fraction(0)
        tets.append(quad)
    verts = [f"a{i}" for i in range(n + 1)] + [f"b{i}" for i in range(1, n)] + ["v"]
    inst = SimplicialInstance(verts, tets, vols, {}, {"k": k, "red": [list(t) for t in red]})
    return CoplanarGadget(inst, pos, path, red, apex, (layers[0], layers[1]))


def triangle_area_squared(p, q, r):
    """Squared area of a triangle in space (exact for rational input)."""
    c = _cross(_sub(q, p), _sub(r, p))
    return _dot(c, c) / 4


def placement_to_off(s: SimplicialInstance, placement: Mapping) -> str:
    """OFF mesh with one triangle per tetrahedron face."""
    index = {v: i for i, v in enumerate(s.vertices)}
    faces = []
    for t in s.tetra:
        for tri in itertools.combinations(t, 3):
            faces.append(tri)
    lines = ["OFF", f"{len(s.vertices)} {len(faces)} 0"]
    for v in s.vertices:
        lines.append(" ".join(f"{float(c):.12g}" for c in placement[v]))
    for tri in faces:
        lines.append("3 " + " ".join(str(index[v]) for v in tri))
    return "\n".join(lines) + "\n"
