"""Numerical realization of prescribed-area instances.

The area equations are solved by a damped Gauss-Newton (Levenberg-Marquardt)
iteration with fixed vertices eliminated.  Crossings and orientation are not
part of the objective; every candidate is checked afterwards by the verifier,
so a reported success is always a verified drawing.  Failure after all
restarts is evidence of unrealizability, never a proof.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Mapping

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from . import kernels
from .plane import PlaneInstance, signed_area, verify_drawing

log = logging.getLogger(__name__)


@dataclass
class SolveOptions:
    seed: int = 0
    restarts: int = 32
    max_iterations: int = 400
    damping: float = 1e-3  # initial Marquardt parameter
    damping_up: float = 5.0
    damping_down: float = 0.3
    tol: float = 1e-9  # area residual bound used by the verifier
    step_tol: float = 1e-15
    jitter: float = 0.02  # restart jitter as a fraction of the instance diameter

    def __post_init__(self):
        for name in ("restarts", "max_iterations", "damping", "damping_up", "damping_down", "tol", "step_tol"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.jitter < 0:
            raise ValueError("jitter must be nonnegative")


@dataclass
class Attempt:
    restart: int
    iterations: int
    residual: float  # infinity norm at exit
    verified: bool
    history: list = field(default_factory=list)  # residual 2-norm after each accepted step


@dataclass
class SolveResult:
    success: bool
    drawing: dict | None
    attempts: list
    report: object = None
    note: str = ""

    @property
    def best_residual(self) -> float:
        return min((a.residual for a in self.attempts), default=math.inf)

    def summary(self) -> dict:
        return {
            "success": self.success,
            "restarts": len(self.attempts),
            "best_residual": self.best_residual,
            "attempts": [
                {"restart": a.restart, "iterations": a.iterations, "residual": a.residual, "verified": a.verified}
                for a in self.attempts
            ],
            "note": self.note,
        }


# ---------------------------------------------------------------- system

class AreaSystem:
    """Index bookkeeping for the free coordinates and the residual faces."""

    def __init__(self, instance: PlaneInstance, fixed: Mapping | None = None):
        self.instance = instance
        self.fixed = dict(instance.fixed if fixed is None else fixed)
        self.names = list(instance.vertices)
        self.index = {v: i for i, v in enumerate(self.names)}
        self.free = [v for v in self.names if v not in self.fixed]
        self.col = np.full(len(self.names), -1, dtype=np.int64)
        for k, v in enumerate(self.free):
            self.col[self.index[v]] = 2 * k
        faces = [f for f in instance.faces if f != instance.outer and f in instance.areas]
        self.faces = [f for f in faces if any(v not in self.fixed for v in instance.faces[f])]
        self.constant_faces = [f for f in faces if f not in self.faces]
        lengths = [len(instance.faces[f]) for f in self.faces]
        self.ptr = np.concatenate([[0], np.cumsum(lengths)]).astype(np.int64)
        self.idx = np.array([self.index[v] for f in self.faces for v in instance.faces[f]], dtype=np.int64)
        self.target = np.array([float(instance.areas[f]) for f in self.faces], dtype=float)
        base = np.zeros((len(self.names), 2))
        for v, p in self.fixed.items():
            base[self.index[v]] = (float(p[0]), float(p[1]))
        self.base = base
        self.n = 2 * len(self.free)
        self.free_rows = np.array([self.index[v] for v in self.free], dtype=np.int64)

    def coords(self, u: np.ndarray) -> np.ndarray:
        xy = self.base.copy()
        if len(self.free):
            xy[self.free_rows] = u.reshape(-1, 2)
        return xy

    def pack(self, drawing: Mapping) -> np.ndarray:
        return np.array([[float(drawing[v][0]), float(drawing[v][1])] for v in self.free], dtype=float).reshape(-1)

    def residual(self, u) -> np.ndarray:
        return kernels.face_areas(self.coords(u), self.ptr, self.idx) - self.target

    def jacobian(self, u) -> sp.csr_matrix:
        rows, cols, vals = kernels.area_jacobian(self.coords(u), self.ptr, self.idx, self.col)
        return sp.csr_matrix((vals, (rows, cols)), shape=(len(self.faces), self.n))

    def drawing(self, u) -> dict:
        xy = self.coords(u)
        out = {v: (float(xy[i, 0]), float(xy[i, 1])) for i, v in enumerate(self.names)}
        for v, p in self.fixed.items():
            out[v] = p
        return out


def levenberg_marquardt(system: AreaSystem, u0: np.ndarray, opts: SolveOptions):
    """Damped Gauss-Newton on the area residual; returns (u, inf-norm, iterations, history)."""
    u = np.array(u0, dtype=float)
    r = system.residual(u)
    cost = float(r @ r)
    history = [math.sqrt(cost)]
    mu = opts.damping
    it = 0
    goal = opts.tol * 1e-3
    if system.n == 0 or len(r) == 0:
        return u, float(np.max(np.abs(r), initial=0.0)), 0, history
    while it < opts.max_iterations and np.max(np.abs(r)) > goal:
        it += 1
        J = system.jacobian(u)
        JtJ = (J.T @ J).tocsc()
        g = J.T @ r
        d = JtJ.diagonal()
        floor = max(float(d.max(initial=0.0)), 1.0) * 1e-9
        D = sp.diags(np.maximum(d, floor))
        accepted = False
        while mu < 1e16:
            try:
                step = spla.spsolve((JtJ + mu * D).tocsc(), -g)
            except RuntimeError:
                step = None
            if step is None or not np.all(np.isfinite(step)):
                mu *= opts.damping_up
                continue
            u_new = u + step
            r_new = system.residual(u_new)
            c_new = float(r_new @ r_new)
            if c_new < cost:
                u, r, cost = u_new, r_new, c_new
                mu = max(mu * opts.damping_down, 1e-15)
                history.append(math.sqrt(cost))
                accepted = True
                break
            mu *= opts.damping_up
        if not accepted or float(np.max(np.abs(step))) < opts.step_tol:
            break
    return u, float(np.max(np.abs(r))), it, history


# ---------------------------------------------------------------- initial drawing

def _circle(n, area):
    # regular n-gon of the given area, counter-clockwise
    r = math.sqrt(2 * area / (n * math.sin(2 * math.pi / n))) if area > 0 else 1.0
    return [(r * math.cos(2 * math.pi * k / n), r * math.sin(2 * math.pi * k / n)) for k in range(n)]


def initial_drawing(instance: PlaneInstance, seed: int = 0, jitter: float = 0.0) -> dict:
    """Tutte-style barycentric placement inside the fixed vertices.

    Without fixed vertices the outer walk goes on a convex regular polygon
    (clockwise, so the outer face stays outer) whose area is the total
    prescribed area, or the unit circle if no areas are known.
    """
    anchors = {v: (float(p[0]), float(p[1])) for v, p in instance.fixed.items()}
    if not anchors and instance.outer is not None:
        walk = []
        for v in instance.faces[instance.outer]:
            if v not in walk:
                walk.append(v)
        total = float(sum(instance.areas.values())) if instance.areas else 0.0
        if len(walk) >= 3:
            for v, p in zip(walk[::-1], _circle(len(walk), total)):
                anchors[v] = p
            anchors = {v: anchors[v] for v in walk}
    free = [v for v in instance.vertices if v not in anchors]
    out = dict(anchors)
    if free:
        k = {v: i for i, v in enumerate(free)}
        rows, cols, vals = [], [], []
        rhs = np.zeros((len(free), 2))
        for v in free:
            i = k[v]
            nb = instance.rotation[v]
            rows.append(i)
            cols.append(i)
            vals.append(len(nb) + 1e-9)
            for u in nb:
                if u in k:
                    rows.append(i)
                    cols.append(k[u])
                    vals.append(-1.0)
                else:
                    rhs[i] += anchors[u]
        L = sp.csr_matrix((vals, (rows, cols)), shape=(len(free), len(free))).tocsc()
        sol = np.column_stack([spla.spsolve(L, rhs[:, 0]), spla.spsolve(L, rhs[:, 1])]).reshape(len(free), 2)
        if jitter > 0:
            pts = np.array(list(anchors.values())) if anchors else sol
            diam = float(np.ptp(pts, axis=0).max()) if len(pts) > 1 else 1.0
            rng = np.random.default_rng(seed)
            sol = sol + rng.normal(scale=jitter * max(diam, 1e-9), size=sol.shape)
        for v in free:
            out[v] = (float(sol[k[v], 0]), float(sol[k[v], 1]))
    for v, p in instance.fixed.items():
        out[v] = p
    return out


# ---------------------------------------------------------------- solve

def solve(instance: PlaneInstance, options: SolveOptions | None = None, init: Mapping | None = None,
          initializer: Callable | None = None, fixed: Mapping | None = None) -> SolveResult:
    """Realize ``instance``; at most ``options.restarts`` attempts.

    ``init`` seeds the first attempt; ``initializer(k, rng)`` produces the
    start of attempt k (otherwise the first start is jittered).
    """
    opts = options or SolveOptions()
    fixed = dict(instance.fixed if fixed is None else fixed)
    work = instance
    if fixed != instance.fixed:
        work = PlaneInstance(instance.vertices, instance.edges, instance.rotation, instance.faces, instance.outer,
                             instance.areas, fixed, instance.meta)
    system = AreaSystem(work)
    rng = np.random.default_rng(opts.seed)
    base = dict(init) if init is not None else initial_drawing(work, seed=opts.seed)
    for v, p in fixed.items():
        base[v] = p
    u_base = system.pack(base)
    pts = np.array([[float(p[0]), float(p[1])] for p in base.values()]) if base else np.zeros((1, 2))
    diam = float(np.ptp(pts, axis=0).max()) if len(pts) > 1 else 1.0
    attempts = []
    for k in range(opts.restarts):
        if k == 0:
            u0 = u_base
        elif initializer is not None:
            start = dict(initializer(k, rng))
            start.update(fixed)
            u0 = system.pack(start)
        else:
            u0 = u_base + rng.normal(scale=opts.jitter * max(diam, 1e-9), size=u_base.shape)
        u, res, its, hist = levenberg_marquardt(system, u0, opts)
        drawing = system.drawing(u)
        ok = False
        rep = None
        if res <= opts.tol:
            rep = verify_drawing(work, drawing, tol=opts.tol)
            ok = rep.ok
        attempts.append(Attempt(k, its, res, ok, hist))
        log.debug("restart %d: %d iterations, residual %.3e, verified %s", k, its, res, ok)
        if ok:
            return SolveResult(True, drawing, attempts, rep, "verified drawing")
    return SolveResult(False, None, attempts, None,
                       f"no verified drawing in {opts.restarts} restarts; this is evidence, not a proof of unrealizability")


# ---------------------------------------------------------------- stacked triangulations

class StackingError(ValueError):
    pass


@dataclass
class StackedTriangulation:
    outer: tuple  # three vertex names, counter-clockwise
    insertions: list  # (new vertex, (a, b, c)) with (a, b, c) a current face, counter-clockwise

    def faces(self) -> list:
        """Final inner faces as counter-clockwise triples."""
        current = [tuple(self.outer)]
        for v, tri in self.insertions:
            key = _face_key(tri)
            match = [f for f in current if _face_key(f) == key]
            if not match:
                raise StackingError(f"insertion of {v} into {tri}: no such face")
            a, b, c = match[0]
            current.remove(match[0])
            current += [(v, b, c), (a, v, c), (a, b, v)]
        return current

    def children(self) -> dict:
        out = {}
        current = {_face_key(self.outer): tuple(self.outer)}
        for v, tri in self.insertions:
            key = _face_key(tri)
            if key not in current:
                raise StackingError(f"insertion of {v} into {tri}: no such face")
            a, b, c = current.pop(key)
            kids = [(v, b, c), (a, v, c), (a, b, v)]
            out[key] = (v, (a, b, c), kids)
            for t in kids:
                current[_face_key(t)] = t
        return out


def _face_key(tri):
    return frozenset(tri)


def random_stacked(n: int, rng, max_area: int = 20) -> tuple[StackedTriangulation, dict]:
    """Random stacked triangulation with n insertions and random positive rational areas."""
    outer = ("o0", "o1", "o2")
    faces = [outer]
    ins = []
    for i in range(n):
        k = int(rng.integers(len(faces)))
        a, b, c = faces.pop(k)
        v = f"s{i}"
        ins.append((v, (a, b, c)))
        faces += [(v, b, c), (a, v, c), (a, b, v)]
    areas = {_face_key(f): Fraction(int(rng.integers(1, max_area + 1)), int(rng.integers(1, 8))) for f in faces}
    return StackedTriangulation(outer, ins), areas


def realize_stacked(t: StackedTriangulation, areas: Mapping, outer_positions=None) -> dict:
    """Exact rational drawing: each inserted vertex sits at the barycentric point
    weighted by the total areas of the three sub-triangles.

    ``areas`` maps final faces (frozensets or triples) to positive rationals.
    """
    areas = {(_face_key(k) if not isinstance(k, frozenset) else k): Fraction(a) for k, a in areas.items()}
    kids = t.children()
    leaves = {_face_key(f) for f in t.faces()}
    for k in areas:
        if k not in leaves:
            raise StackingError(f"area given for {sorted(map(str, k))}, which is not a final face")
    for k in leaves:
        if k not in areas:
            raise StackingError(f"no area for face {sorted(map(str, k))}")
        if areas[k] <= 0:
            raise StackingError(f"area of face {sorted(map(str, k))} is not positive")
    total = {}

    def area_of(key):
        if key in total:
            return total[key]
        if key in kids:
            s = sum(area_of(_face_key(c)) for c in kids[key][2])
        else:
            s = areas[key]
        total[key] = s
        return s

    T = area_of(_face_key(t.outer))
    if outer_positions is None:
        o = [(Fraction(0), Fraction(0)), (Fraction(1), Fraction(0)), (Fraction(0), 2 * T)]
    else:
        o = [tuple(Fraction(c) for c in p) for p in outer_positions]
        got = signed_area(o)
        if got != T:
            raise StackingError(f"outer triangle has area {got}, faces sum to {T}")
    pos = dict(zip(t.outer, o))
    for v, tri in t.insertions:
        key = _face_key(tri)
        _, (a, b, c), sub = kids[key]
        wa, wb, wc = (area_of(_face_key(s)) for s in sub)
        s = wa + wb + wc
        pos[v] = tuple((wa * pos[a][i] + wb * pos[b][i] + wc * pos[c][i]) / s for i in range(2))
    return pos


def stacked_instance(t: StackedTriangulation, areas: Mapping | None = None, outer_positions=None) -> PlaneInstance:
    """PlaneInstance of the stacked triangulation with the outer triangle fixed."""
    faces = t.faces()
    if areas is None:
        areas = {_face_key(f): Fraction(1) for f in faces}
    pos = realize_stacked(t, areas, outer_positions)
    edges = set()
    for f in faces:
        for i in range(3):
            edges.add(tuple(sorted((f[i], f[(i + 1) % 3]))))
    inst = PlaneInstance.from_drawing(pos, sorted(edges), fixed={v: pos[v] for v in t.outer})
    amap = {(_face_key(k) if not isinstance(k, frozenset) else k): Fraction(a) for k, a in areas.items()}
    inst.areas = {fid: amap[frozenset(w)] for fid, w in inst.faces.items() if fid != inst.outer}
    return inst


# ---------------------------------------------------------------- universality sampling

@dataclass
class UniversalityReport:
    samples: int
    successes: int
    failures: int
    hardest: list  # (sample index, best residual) of the worst samples
    method: str
    note: str = "sampling evidence only; it does not decide area-universality"

    def to_json(self) -> dict:
        return {
            "samples": self.samples,
            "successes": self.successes,
            "failures": self.failures,
            "hardest": [[i, r] for i, r in self.hardest],
            "method": self.method,
            "note": self.note,
        }


def _dirichlet_rationals(rng, n, total: Fraction, denom: int = 10_000) -> list:
    w = rng.dirichlet(np.ones(n))
    parts = [Fraction(max(1, int(round(x * denom))), denom) for x in w]
    s = sum(parts)
    return [p * total / s for p in parts]


def sample_universality(skeleton, k: int, options: SolveOptions | None = None) -> UniversalityReport:
    """Draw k random positive area assignments and try to realize each one.

    ``skeleton`` is a StackedTriangulation (exact realizer) or a PlaneInstance
    without areas; for the latter the outer face is pinned to a convex
    polygon of area 1 and a numerical solve is attempted per sample.
    """
    opts = options or SolveOptions()
    rng = np.random.default_rng(opts.seed)
    if k == 0:
        return UniversalityReport(0, 0, 0, [], "none")
    if isinstance(skeleton, StackedTriangulation):
        faces = skeleton.faces()
        ok = 0
        for _ in range(k):
            vals = _dirichlet_rationals(rng, len(faces), Fraction(1, 2))
            A = {_face_key(f): a for f, a in zip(faces, vals)}
            inst = stacked_instance(skeleton, A)
            d = realize_stacked(skeleton, A)
            ok += verify_drawing(inst, d).ok
        return UniversalityReport(k, ok, k - ok, [], "exact stacked realizer")
    inst = skeleton
    walk = []
    for v in inst.faces[inst.outer]:
        if v not in walk:
            walk.append(v)
    frame = {v: p for v, p in zip(walk[::-1], _regular_rational(len(walk)))}
    total = -signed_area([frame[v] for v in inst.faces[inst.outer]])
    inner = inst.inner_faces
    ok = 0
    worst = []
    sub = SolveOptions(seed=opts.seed, restarts=min(opts.restarts, 8), max_iterations=opts.max_iterations,
                       tol=opts.tol)
    for i in range(k):
        vals = _dirichlet_rationals(rng, len(inner), total)
        trial = PlaneInstance(inst.vertices, inst.edges, inst.rotation, inst.faces, inst.outer,
                              dict(zip(inner, vals)), frame, inst.meta)
        sub.seed = opts.seed + i
        res = solve(trial, sub)
        ok += res.success
        worst.append((i, res.best_residual))
    worst.sort(key=lambda t: -t[1])
    return UniversalityReport(k, ok, k - ok, worst[:5], "numerical solve with pinned outer face")


def _regular_rational(n):
    # convex polygon with rational vertices, counter-clockwise, roughly of area 1
    pts = []
    for k in range(n):
        a = 2 * math.pi * k / n
        pts.append((Fraction(round(1000 * math.cos(a)), 1000), Fraction(round(1000 * math.sin(a)), 1000)))
    return pts


# ---------------------------------------------------------------- area triples

@dataclass
class TripleSolveResult:
    success: bool
    positions: dict | None
    values: dict | None
    attempts: list
    note: str = ""

    @property
    def best_residual(self) -> float:
        return min((a.residual for a in self.attempts), default=math.inf)

    def summary(self) -> dict:
        return {
            "success": self.success,
            "restarts": len(self.attempts),
            "best_residual": self.best_residual,
            "values": None if self.values is None else {k: float(v) for k, v in sorted(self.values.items())},
            "note": self.note,
        }


def _triple_start(t, universal_values, rng, spread):
    # seed values by propagation, perturb them, then build the auxiliary points the way the gadgets would
    from .von_staudt import TripleError, propagate_values, witness
    seeded = propagate_values(t, universal_values)
    guess = {}
    for v in t.variables:
        if v in universal_values:
            guess[v] = float(universal_values[v])
        elif v in seeded and seeded[v] > 0:
            guess[v] = seeded[v] * float(np.exp(rng.normal(0, spread)))
        else:
            guess[v] = float(np.exp(rng.uniform(-1.5, 2.5)))
    try:
        pos = witness(t, guess)
    except (TripleError, ZeroDivisionError, ValueError):
        pos = {}
    return {p: (float(pos[p][0]), float(pos[p][1])) if p in pos else tuple(rng.normal(0, 1, 2)) for p in t.points}


def solve_triples(t, universal_values: Mapping | None = None, options: SolveOptions | None = None,
                  init: Mapping | None = None) -> TripleSolveResult:
    """Place the points of a triple instance so every labelled triple has its area.

    The three frame points are pinned to their canonical positions, which
    removes the area-preserving affine freedom.  Each restart guesses the
    existential values (propagated from constants and universal values where
    possible, then perturbed with growing spread), lays out the auxiliary
    points from those guesses and runs a dense trust-region least-squares solve
    on all coordinates.
    """
    from scipy.optimize import least_squares

    from .von_staudt import FRAME_POSITIONS

    opts = options or SolveOptions()
    universal_values = dict(universal_values or {})
    missing = [g for g in t.universal_tags() if g not in universal_values]
    if missing:
        raise ValueError(f"missing universal values: {missing}")
    fixed = {p: FRAME_POSITIONS[p] for p in t.frame}
    free = [p for p in t.points if p not in fixed]
    rows = [(tr.points, float(tr.target(universal_values))) for tr in t.triples if tr.label != "unconstrained"]
    base = {p: (float(x), float(y)) for p, (x, y) in fixed.items()}

    names = list(fixed) + free
    index = {p: i for i, p in enumerate(names)}
    tri = np.array([[index[p] for p in pts] for pts, _ in rows], dtype=np.int64).reshape(-1, 3)
    target = np.array([a for _, a in rows], dtype=float)
    zero = target == 0
    head = np.array([base[p] for p in fixed], dtype=float).reshape(-1, 2)
    nfix = len(fixed)

    def coords(u):
        return np.vstack([head, u.reshape(-1, 2)])

    def signed(xy):
        A, B, C = xy[tri[:, 0]], xy[tri[:, 1]], xy[tri[:, 2]]
        return (B[:, 0] - A[:, 0]) * (C[:, 1] - A[:, 1]) - (B[:, 1] - A[:, 1]) * (C[:, 0] - A[:, 0]), A, B, C

    def fun(u):
        d = signed(coords(u))[0]
        return np.where(zero, d / 2, np.abs(d) / 2 - target)

    def jac(u):
        d, A, B, C = signed(coords(u))
        # zero targets use the signed area, which is smooth at the solution
        s = np.where(zero | (d >= 0), 0.5, -0.5)
        grads = [(B[:, 1] - C[:, 1], C[:, 0] - B[:, 0]), (C[:, 1] - A[:, 1], A[:, 0] - C[:, 0]),
                 (A[:, 1] - B[:, 1], B[:, 0] - A[:, 0])]
        r_idx, c_idx, vals = [], [], []
        rows_ = np.arange(len(d))
        for j, (gx, gy) in enumerate(grads):
            cols = 2 * (tri[:, j] - nfix)
            keep = tri[:, j] >= nfix
            r_idx += [rows_[keep], rows_[keep]]
            c_idx += [cols[keep], cols[keep] + 1]
            vals += [(s * gx)[keep], (s * gy)[keep]]
        J = np.zeros((len(d), len(u)))
        np.add.at(J, (np.concatenate(r_idx), np.concatenate(c_idx)), np.concatenate(vals))
        return J

    def placement(u):
        xy = coords(u)
        out = {p: (float(xy[i, 0]), float(xy[i, 1])) for i, p in enumerate(names)}
        out.update(fixed)
        return out

    rng = np.random.default_rng(opts.seed)
    attempts = []
    for k in range(opts.restarts):
        if k == 0 and init is not None:
            start = {p: (float(init[p][0]), float(init[p][1])) for p in t.points}
        else:
            start = _triple_start(t, universal_values, rng, 0.1 * (1 + k))
        u0 = np.array([c for p in free for c in start[p]], dtype=float)
        if k > 0:
            u0 = u0 + rng.normal(0, opts.jitter, u0.shape)
        if len(u0) == 0:
            res_u, it = u0, 0
        else:
            sol = least_squares(fun, u0, jac=jac, method="trf", tr_solver="exact",
                                xtol=opts.step_tol, ftol=opts.step_tol, gtol=opts.step_tol,
                                max_nfev=opts.max_iterations)
            res_u, it = sol.x, sol.nfev
        r = float(np.max(np.abs(fun(res_u)))) if rows else 0.0  # equals the unsigned area residual
        ok = r <= opts.tol
        attempts.append(Attempt(k, it, r, ok))
        if ok:
            out = placement(res_u)
            return TripleSolveResult(True, out, t.extract(out), attempts)
    return TripleSolveResult(False, None, None, attempts, f"no placement within {opts.tol:g} after {opts.restarts} restarts")

