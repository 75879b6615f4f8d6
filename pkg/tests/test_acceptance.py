"""End-to-end acceptance checks, one test per property.

Run under pytest (a PASS/FAIL line per check is printed at the end) or
directly with ``python3 tests/test_acceptance.py``.
"""
from __future__ import annotations

import io
import json
import math
import sys
import time
from contextlib import redirect_stderr, redirect_stdout
from fractions import Fraction
from pathlib import Path

import networkx as nx
import numpy as np
import pytest
from scipy.spatial import ConvexHull

from areaforge import encoder
from areaforge import formula as fm
from areaforge import von_staudt as vs
from areaforge.cli import main as cli_main
from areaforge.compiler import compile_formula
from areaforge.gadgets import LAMBDA, make_gadget
from areaforge.normalizer import normalize_uetr
from areaforge.planarizer import planarize_with_drawing
from areaforge.plane import verify_drawing
from areaforge.polynomial import Polynomial, PolynomialSystem
from areaforge.solver import SolveOptions, random_stacked, realize_stacked, solve, solve_triples, stacked_instance
from areaforge.volume import coplanar_gadget, lift_drawing, lift_to_volume, tetra_volume, verify_placement

ROOT = Path(__file__).resolve().parents[1]
CORPUS = ROOT / "corpus"

LABELS = {
    "test_gadget_witnesses_verify_exactly": "1 gadget witnesses verify exactly with the expected areas",
    "test_gadget_semantics_with_fixed_inputs": "2 gadget semantics hold with input ports pinned",
    "test_reduction_end_to_end": "3 compile and solve reproduces satisfiability of the corpus",
    "test_normalizer_witness_extension": "4 normalizer extenders produce witnesses at every stage",
    "test_planarizer_output": "5 planarizer output is planar within the gadget budget",
    "test_stacked_triangulations_exact": "6 stacked triangulations are realized with zero residuals",
    "test_triple_gadgets_and_solver": "7 triple gadgets are exact and the triple solver recovers values",
    "test_encoder_agrees_with_verifier": "8 encoded formula agrees with the drawing verifier",
    "test_volume_constructions": "9 volume, coplanar gadget and lift checks are exact",
    "test_cli_output_is_deterministic": "10 repeated CLI runs give byte-identical JSON",
}


# ---------------------------------------------------------------- gadgets

def test_gadget_witnesses_verify_exactly():
    values = {"addition": {"x": 1, "y": 1}}
    for kind in ("variable", "wire", "splitter", "inversion", "addition"):
        g = make_gadget(kind)
        inst, pos = g.instance(values.get(kind))
        t0 = time.perf_counter()
        rep = verify_drawing(inst, pos)
        elapsed = time.perf_counter() - t0
        assert rep.exact and rep.ok, (kind, rep.summary())
        assert elapsed < 1.0, (kind, elapsed)
        areas = sorted(inst.areas.values())
        if kind == "variable":
            # pendant triangle plus the rest of the 3x2 rectangle
            assert areas == [Fraction(1, 2), Fraction(11, 2)]
            assert sum(areas) == 6
        elif kind == "wire":
            assert areas == [Fraction(1, 2), Fraction(1, 2)]
        elif kind == "splitter":
            assert areas.count(Fraction(1)) == 1
            assert areas.count(Fraction(1, 2)) == 4
        elif kind == "inversion":
            assert Fraction(1, 50) in areas and sum(areas) == 1
        else:
            assert sorted(areas, reverse=True) == [Fraction(7, 2), 2, 1, 1]


def _solve_with_pinned_inputs(kind, values, fixed_roles, rng):
    g = make_gadget(kind)
    inst, pos = g.instance(values, fix_roles=fixed_roles)
    pinned = {g.ports[r].vertex for r in fixed_roles}
    start = dict(pos)
    for r, port in g.ports.items():
        if r not in fixed_roles:
            start[port.vertex] = port.point(float(rng.uniform(0.5, 1.5)))
    for v in g.flexible:
        if v not in pinned:
            p = start[v]
            start[v] = (float(p[0]) + rng.normal(0, 0.05), float(p[1]) + rng.normal(0, 0.05))
    res = solve(inst, SolveOptions(seed=int(rng.integers(1 << 30)), restarts=8, tol=1e-10), init=start)
    assert res.success, (kind, values, res.summary())
    return {r: p.value_of(tuple(float(c) for c in res.drawing[p.vertex])) for r, p in g.ports.items()}


def test_gadget_semantics_with_fixed_inputs():
    rng = np.random.default_rng(2024)
    for _ in range(20):
        X = Fraction(int(rng.integers(50, 201)), 100)
        v = _solve_with_pinned_inputs("inversion", {"x": X}, ["x"], rng)
        x, y = v["x"] / LAMBDA, v["y"] / LAMBDA
        assert abs(x * y * LAMBDA ** 2 - 1) <= 1e-8
    pairs = 0
    while pairs < 20:
        X = Fraction(int(rng.integers(10, 400)), 100)
        Y = Fraction(int(rng.integers(10, 400)), 100)
        if X + Y >= 5:
            continue
        pairs += 1
        v = _solve_with_pinned_inputs("addition", {"x": X, "y": Y}, ["x", "y"], rng)
        assert abs(v["z"] - (v["x"] + v["y"])) <= 1e-8
    for s in ("3/4", "1", "3/2"):
        v = _solve_with_pinned_inputs("splitter", {"S": Fraction(s)}, ["S"], rng)
        assert max(v.values()) - min(v.values()) <= 1e-8, v


# ---------------------------------------------------------------- reduction

def _rounded(values, names, digits=6):
    return {n: Fraction(round(float(values[n]), digits)).limit_denominator(10 ** digits) for n in names}


@pytest.mark.slow
def test_reduction_end_to_end():
    sat = sorted((CORPUS / "sat").glob("*.txt"))
    unsat = sorted((CORPUS / "unsat").glob("*.txt"))
    assert len(sat) >= 10 and len(unsat) >= 5
    failures = []
    for path in sat:
        f = fm.parse_formula(path.read_text())
        ci = compile_formula(f)
        res = solve(ci.instance, SolveOptions(seed=0, restarts=32), initializer=ci.initializer())
        if not res.success:
            failures.append((path.name, "not solved"))
            continue
        if not fm.evaluate(f, _rounded(ci.extract(res.drawing), f.names)):
            failures.append((path.name, "rounded values do not satisfy the formula"))
    for path in unsat:
        f = fm.parse_formula(path.read_text())
        ci = compile_formula(f)
        res = solve(ci.instance, SolveOptions(seed=0, restarts=32), initializer=ci.initializer())
        if res.success or len(res.attempts) != 32:
            failures.append((path.name, "unsatisfiable formula was realized"))
    assert not failures, failures


# ---------------------------------------------------------------- normalizer

def _random_system(rng, n_vars=3):
    names = [f"X{i}" for i in range(1, n_vars + 1)]
    witness = {n: Fraction(int(rng.integers(-6, 7)), int(rng.integers(1, 4))) for n in names}
    eqs = []
    for _ in range(int(rng.integers(1, 3))):
        p = Polynomial()
        for _ in range(int(rng.integers(1, 4))):
            deg = int(rng.integers(1, 4))
            mono = tuple(names[int(i)] for i in rng.integers(0, n_vars, size=deg))
            p = p + Polynomial({mono: int(rng.integers(-3, 4)) or 1})
        # d * p - n vanishes at the witness and keeps integer coefficients
        c = Fraction(p.evaluate(witness))
        p = p * c.denominator - c.numerator
        if not p.terms:
            p = Polynomial.var(names[0]) * witness[names[0]].denominator - witness[names[0]].numerator
        eqs.append(p)
    return PolynomialSystem(tuple(fm.Variable(n) for n in names), tuple(eqs)), witness


def test_normalizer_witness_extension():
    rng = np.random.default_rng(7)
    for _ in range(100):
        system, w = _random_system(rng)
        assert system.holds(w)
        norm = normalize_uetr(system)
        s1, s2, s3 = norm.stages
        a1 = s1.extend(w)
        assert s1.output.evaluate(a1) == 0
        a2 = s2.extend(a1)
        assert fm.evaluate(s2.output, a2)
        a3 = s3.extend(a2)
        assert fm.evaluate(s3.output, a3)
        assert all(v > 0 for v in a3.values())
        full = norm.extend(w)
        assert fm.evaluate(norm.formula, full)
        assert norm.restrict(full) == w


# ---------------------------------------------------------------- planarizer

def _euler_checked_planar(f: fm.ConstraintFormula) -> bool:
    """Planar embedding of the incidence graph whose traced faces satisfy Euler's formula."""
    g = nx.Graph()
    for v in f.names:
        g.add_node(("v", v))
    for j, c in enumerate(f.constraints):
        g.add_node(("c", j))
        for i in set(c.operands):
            g.add_edge(("v", f.name_of(i)), ("c", j))
    planar, emb = nx.check_planarity(g)
    if not planar:
        return False
    seen, faces = set(), 0
    for u, v in emb.edges():
        if (u, v) in seen:
            continue
        faces += 1
        a, b = u, v
        while (a, b) not in seen:
            seen.add((a, b))
            a, b = b, emb[b][a]["ccw"]
    comps = nx.number_connected_components(g)
    isolated = sum(1 for n in g if g.degree(n) == 0)
    # every non-trivial component contributes V - E + F = 2 with a shared outer face
    return g.number_of_nodes() - g.number_of_edges() + faces + isolated == 1 + comps


def _dense_formula(rng, n_vars, n_cons):
    b = fm.FormulaBuilder(fm.Variable(f"X{i}") for i in range(n_vars))
    for _ in range(n_cons):
        ops = rng.choice(n_vars, size=3, replace=False)
        b.add(fm.ADDITION if rng.random() < 0.5 else fm.MULTIPLICATION, *(f"X{int(i)}" for i in ops))
    return b.build(fm.ETRINV)


def test_planarizer_output():
    rng = np.random.default_rng(11)
    formulas = [_dense_formula(rng, n, m) for n, m in ((5, 6), (6, 8), (7, 10), (8, 12))]
    formulas += [fm.parse_formula(p.read_text()) for p in sorted((CORPUS / "sat").glob("*.txt"))[:4]]
    nonplanar = 0
    for f in formulas:
        nonplanar += not _euler_checked_planar(f)
        for until in ("planar", "drawing"):
            pl = planarize_with_drawing(f, until=until)
            assert _euler_checked_planar(pl.formula)
            k = len(pl.removals)
            assert pl.added_variables == 3 * k and pl.added_constraints == 3 * k
            prev = f
            for _, _, rem in pl.removals:
                assert len(rem.formula.variables) == len(prev.variables) + 3
                assert len(rem.formula.constraints) == len(prev.constraints) + 3
                prev = rem.formula
            assert pl.added_variables + pl.added_constraints <= 16 * f.size() ** 4
    assert nonplanar >= 2


# ---------------------------------------------------------------- stacked triangulations

def test_stacked_triangulations_exact():
    rng = np.random.default_rng(5)
    t0 = time.perf_counter()
    for _ in range(50):
        t, areas = random_stacked(int(rng.integers(1, 51)), rng)
        pos = realize_stacked(t, areas)
        inst = stacked_instance(t, areas)
        rep = verify_drawing(inst, pos)
        assert rep.exact and rep.ok, rep.summary()
        assert all(r == 0 for r in rep.area_residuals.values())
    assert time.perf_counter() - t0 < 5.0


# ---------------------------------------------------------------- triples

def _line_instance(names):
    t = vs.frame()
    pts = {n: vs.add_line_point(t, "x", n) for n in names}
    return t, pts


def test_triple_gadgets_and_solver():
    # addition
    t, p = _line_instance("XYZ")
    vs.add_addition(t, p["X"], p["Y"], p["Z"])
    assert t.check(vs.witness(t, {"X": Fraction(3, 2), "Y": Fraction(5, 4), "Z": Fraction(11, 4)}))
    # multiplication, including a negative operand and coinciding lines
    for x, y in ((2, 3), (-2, 3), (2, -3), (2, 1), (1, 1), (Fraction(1, 3), 6)):
        t, p = _line_instance("XYZ")
        vs.add_multiplication(t, p["X"], p["Y"], p["Z"])
        assert t.check(vs.witness(t, {"X": Fraction(x), "Y": Fraction(y), "Z": Fraction(x) * y}))
    # parallel: two distinct parallel lines with the trapezoid points placed by hand
    t = vs.frame()
    a, a2, b, b2 = (t.new_point(s) for s in "aabb")
    vs.add_parallel(t, a, a2, b, b2)
    pos = dict(vs.FRAME_POSITIONS)
    pos.update({a: (Fraction(0), Fraction(0)), a2: (Fraction(1), Fraction(0)),
                b: (Fraction(0), Fraction(2)), b2: (Fraction(3), Fraction(2))})
    h1, h2 = t.points[-2:]
    pos[h1], pos[h2] = (Fraction(1), Fraction(0)), (Fraction(2), Fraction(2))
    assert t.check(pos)
    pos[b2] = (Fraction(3), Fraction(5, 2))
    assert not t.check(pos)
    # positivity
    t, p = _line_instance("X")
    vs.add_positivity(t, p["X"])
    assert t.check(vs.witness(t, {"X": Fraction(9, 4)}))

    f = fm.parse_formula((CORPUS / "uetr" / "product.txt").read_text())
    t = vs.build_triples(f)
    rng = np.random.default_rng(3)
    for k in range(10):
        Y = float(rng.uniform(0.5, 3.0))
        res = solve_triples(t, {"Y": Y}, SolveOptions(seed=k, restarts=16))
        assert res.success, res.summary()
        expect = {"X": 1.0, "Y": Y, "Z": 1.0 + Y, "W": Y * (1.0 + Y)}
        for n, v in expect.items():
            assert abs(res.values[n] - v) <= 1e-6, (n, res.values[n], v)


# ---------------------------------------------------------------- encoder

def _broken(inst, pos, rng, mode):
    inner = [v for v in inst.vertices if v not in inst.fixed]
    v = inner[int(rng.integers(len(inner)))]
    out = dict(pos)
    x, y = pos[v]
    if mode == 0:
        out[v] = (x + Fraction(1, 97), y)  # areas off
    elif mode == 1:
        out[v] = (x + 1000, y + 1000)  # leaves the outer triangle
    else:
        others = [u for u in inst.vertices if u != v]
        u = others[int(rng.integers(len(others)))]
        out[v] = pos[u]  # coincides with another vertex
    return out


def test_encoder_agrees_with_verifier():
    rng = np.random.default_rng(13)
    agree = valid = 0
    for i in range(50):
        t, areas = random_stacked(int(rng.integers(1, 6)), rng)
        inst = stacked_instance(t, areas)
        pos = realize_stacked(t, areas)
        if i % 2:
            pos = _broken(inst, pos, rng, i % 3)
        ok = verify_drawing(inst, pos).ok
        valid += ok
        agree += ok == encoder.evaluate_drawing(inst, pos)
    assert valid == 25
    assert agree == 50


# ---------------------------------------------------------------- volumes

def _hull_volume_exact(pts):
    """Volume from the hull's facet list, summed exactly (divergence theorem)."""
    hull = ConvexHull(np.array(pts, dtype=float))
    c = [sum(Fraction(p[k]) for p in pts) / len(pts) for k in range(3)]
    total = Fraction(0)
    for simplex in hull.simplices:
        a, b, d = (pts[i] for i in simplex)
        m = [[Fraction(q[k]) - c[k] for k in range(3)] for q in (a, b, d)]
        det = (m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
               - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
               + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]))
        total += abs(det)
    return total / 6


def test_volume_constructions():
    rng = np.random.default_rng(17)
    checked = 0
    while checked < 100:
        pts = [tuple(int(c) for c in rng.integers(-20, 21, size=3)) for _ in range(4)]
        vol = tetra_volume(*pts)
        if vol == 0:
            continue
        assert vol == _hull_volume_exact(pts)
        assert math.isclose(float(vol), ConvexHull(np.array(pts, dtype=float)).volume, rel_tol=1e-9)
        checked += 1

    for k in (1, 2, 3):
        g = coplanar_gadget(k)
        rep = verify_placement(g.instance, g.placement)
        assert rep.ok, rep.summary()
        flat = [i for i, t in enumerate(g.instance.tetra) if "v" not in t]
        assert flat and all(tetra_volume(*(g.placement[v] for v in g.instance.tetra[i])) == 0 for i in flat)
        for tri in g.red:
            a, b, c = (g.placement[v] for v in tri)
            assert abs((b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])) / 2 == 3

    t, areas = random_stacked(4, np.random.default_rng(1))
    inst = stacked_instance(t, areas)
    pos = realize_stacked(t, areas)
    s = lift_to_volume(inst)
    placement = lift_drawing(inst, pos, x_height=3, y_height=0)
    rep = verify_placement(s, placement)
    assert rep.ok, rep.summary()
    assert all(r == 0 for r in rep.volume_residuals.values())


# ---------------------------------------------------------------- determinism

def _run_cli(argv):
    out, err = io.StringIO(), io.StringIO()
    with redirect_stdout(out), redirect_stderr(err):
        code = cli_main(argv)
    return code, out.getvalue().encode(), err.getvalue().encode()


def test_cli_output_is_deterministic(tmp_path):
    src = str(CORPUS / "sat" / "inverse_one.txt")
    inst = tmp_path / "inst.json"
    runs = [
        ["parse", src],
        ["planarize", str(CORPUS / "sat" / "three_halves.txt"), "--until", "drawing"],
        ["normalize", str(CORPUS / "uetr" / "poly.txt"), "--emit-witness-map"],
        ["realize-stacked", "--random", "20", "--seed", "4"],
        ["coplanar-gadget", "2"],
        ["solve-triples", str(CORPUS / "uetr" / "product.txt"), "--values", "Y=3/2", "--seed", "2"],
    ]
    code, data, _ = _run_cli(["compile", src])
    assert code == 0
    inst.write_bytes(data)
    code, data, _ = _run_cli(["realize-stacked", str(CORPUS / "stacked_small.json")])
    assert code == 0
    small = tmp_path / "small.json"
    small.write_text(json.dumps(json.loads(data)["instance"]))
    runs += [["solve", str(inst), "--seed", "9", "--restarts", "4"], ["encode", str(small), "--mode", "fixed"],
             ["encode", str(small), "--target", "smt"]]
    for argv in runs:
        first = _run_cli(argv)
        second = _run_cli(argv)
        assert first[0] == 0, (argv, first[2][-400:])
        assert first == second, argv


if __name__ == "__main__":
    import tempfile

    results = []
    for name, label in LABELS.items():
        fn = globals()[name]
        t0 = time.perf_counter()
        try:
            if "tmp_path" in fn.__code__.co_varnames[: fn.__code__.co_argcount]:
                with tempfile.TemporaryDirectory() as d:
                    fn(Path(d))
            else:
                fn()
            status = "PASS"
        except Exception as e:  # noqa: BLE001
            status = f"FAIL ({type(e).__name__}: {str(e)[:200]})"
        results.append(status.startswith("PASS"))
        print(f"[{label}] {status} {time.perf_counter() - t0:.1f}s", flush=True)
    sys.exit(0 if all(results) else 1)
