"""Command line entry point: ``areaforge <command> ...``.

Exit status is 0 on success, 1 when a verification or solve fails and 2 on
bad input.  All randomness is driven by ``--seed``; identical inputs and seed
produce byte-identical output files.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import encoder, formula as fm, normalizer, planarizer, plane, solver, volume, von_staudt
from .compiler import CompileError, compile_formula, values_from_meta
from .polynomial import parse_polynomial_system

log = logging.getLogger("areaforge")


class InputError(Exception):
    pass


def _read(path: str) -> str:
    if path == "-":
        return sys.stdin.read()
    try:
        return Path(path).read_text()
    except OSError as e:
        raise InputError(f"cannot read {path}: {e}") from None


def _json_in(path: str):
    try:
        return json.loads(_read(path))
    except json.JSONDecodeError as e:
        raise InputError(f"{path} is not JSON: {e}") from None


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, default=_default) + "\n"


def _default(x):
    if isinstance(x, Fraction):
        return plane.num_to_json(x)
    if isinstance(x, (np.floating, np.integer)):
        return x.item()
    raise TypeError(f"cannot serialize {type(x).__name__}")


def _emit(text: str, out: str | None):
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _report(obj):
    # secondary report on stderr when the main artifact goes to stdout
    sys.stderr.write(_dump(obj))


def _formula(path: str) -> fm.ConstraintFormula:
    text = _read(path)
    if text.lstrip().startswith("{"):
        return fm.from_json(text)
    return fm.parse_formula(text)


def _instance(path: str) -> plane.PlaneInstance:
    return plane.PlaneInstance.from_json(_json_in(path))


def _drawing(path: str) -> dict:
    return plane.drawing_from_json(_json_in(path))


def _options(args) -> solver.SolveOptions:
    return solver.SolveOptions(seed=args.seed, restarts=args.restarts, tol=args.tol)


def _values(spec: str | None) -> dict:
    out = {}
    if not spec:
        return out
    for item in spec.split(","):
        name, _, val = item.partition("=")
        if not val:
            raise InputError(f"expected NAME=VALUE, got {item!r}")
        out[name.strip()] = Fraction(val.strip())
    return out


# ---------------------------------------------------------------- commands

def cmd_parse(args):
    f = _formula(args.input)
    problems = fm.validate_dialect(f, args.dialect) if args.dialect else []
    _emit(_dump(fm.to_json(f)), args.output)
    if problems:
        _report({"dialect": args.dialect, "violations": problems})
        return 1
    return 0


def cmd_normalize(args):
    text = _read(args.input)
    try:
        source = fm.parse_formula(text)
    except fm.FormulaError:
        source = parse_polynomial_system(text)
    norm = normalizer.normalize_uetr(source)
    _emit(fm.serialize(norm.formula) + "\n", args.output)
    if args.emit_witness_map:
        _report({"witness_map": norm.witness_map()})
    return 0


def cmd_planarize(args):
    f = _formula(args.input)
    plan = planarizer.planarize_with_drawing(f, until=args.until)
    _emit(_dump(fm.to_json(plan.formula)), args.output)
    if args.drawing:
        Path(args.drawing).write_text(plan.drawing.to_svg())
    _report({"crossing_gadgets": len(plan.removals), "added_variables": plan.added_variables,
             "added_constraints": plan.added_constraints})
    return 0


def cmd_compile(args):
    f = _formula(args.input)
    comp = compile_formula(f)
    _emit(_dump(comp.instance.to_json()), args.output)
    _report(comp.summary())
    return 0


def cmd_solve(args):
    inst = _instance(args.input)
    res = solver.solve(inst, _options(args))
    summary = res.summary()
    if res.success:
        if inst.meta.get("value_ports"):
            summary["values"] = dict(sorted(values_from_meta(inst, res.drawing).items()))
        _emit(_dump(plane.drawing_to_json(res.drawing)), args.output)
    if args.svg and res.success:
        Path(args.svg).write_text(plane.render_svg(inst, res.drawing))
    _report(summary)
    return 0 if res.success else 1


def _stacked_from(args):
    if args.random is not None:
        rng = np.random.default_rng(args.seed)
        return solver.random_stacked(args.random, rng)
    data = _json_in(args.input)
    t = solver.StackedTriangulation(tuple(data["outer"]), [(v, tuple(tri)) for v, tri in data["insertions"]])
    areas = {frozenset(tri): Fraction(a) for tri, a in data["areas"]}
    return t, areas


def cmd_realize_stacked(args):
    if args.input is None and args.random is None:
        raise InputError("give an input file or --random N")
    t, areas = _stacked_from(args)
    pos = solver.realize_stacked(t, areas)
    inst = solver.stacked_instance(t, areas)
    rep = plane.verify_drawing(inst, pos)
    _emit(_dump({"instance": inst.to_json(), "drawing": plane.drawing_to_json(pos)}), args.output)
    _report(rep.summary())
    return 0 if rep.ok else 1


def cmd_solve_triples(args):
    f = _formula(args.input)
    t = von_staudt.build_triples(f)
    res = solver.solve_triples(t, _values(args.values), _options(args))
    summary = res.summary()
    if res.success:
        summary["evaluates_true"] = _formula_holds(f, res.values, args.round)
        _emit(_dump({"triples": t.to_json(), "positions": {p: list(xy) for p, xy in sorted(res.positions.items())}}),
              args.output)
    _report(summary)
    return 0 if res.success else 1


def _formula_holds(f, values, digits):
    rounded = {k: Fraction(round(float(v), digits)).limit_denominator(10 ** digits) for k, v in values.items()}
    try:
        return fm.evaluate(f, rounded)
    except (fm.EvaluationError, fm.FormulaError):
        return False


def cmd_sample_universality(args):
    inst = _instance(args.input)
    rep = solver.sample_universality(inst, args.samples, _options(args))
    _emit(_dump(rep.to_json()), args.output)
    return 0


def cmd_encode(args):
    inst = _instance(args.input)
    if args.mode == "universality":
        f, counts = encoder.encode_area_universality(inst)
    else:
        f, counts = encoder.encode_fixed_prescribed_area(inst)
    text = encoder.to_smt(f) if args.target == "smt" else encoder.to_text(f) + "\n"
    _emit(text, args.output)
    _report({"counts": counts, "characters": len(text)})
    return 0


def cmd_lift3d(args):
    inst = _instance(args.input)
    s = volume.lift_to_volume(inst)
    out = {"instance": s.to_json()}
    ok = True
    if args.drawing:
        d = _drawing(args.drawing)
        place = volume.lift_drawing(inst, d, Fraction(args.x_height), Fraction(args.y_height))
        rep = volume.verify_placement(s, place, None if plane.is_exact(next(iter(d.values()))[0]) else args.tol)
        out["placement"] = {v: [plane.num_to_json(c) for c in p] for v, p in sorted(place.items())}
        _report(rep.summary())
        ok = rep.ok
    _emit(_dump(out), args.output)
    return 0 if ok else 1


def cmd_coplanar_gadget(args):
    g = volume.coplanar_gadget(args.k)
    rep = volume.verify_placement(g.instance, g.placement)
    out = {
        "instance": g.instance.to_json(),
        "placement": {v: [plane.num_to_json(c) for c in p] for v, p in sorted(g.placement.items())},
        "apex_volume": plane.num_to_json(g.apex_volume),
        "red": [list(t) for t in g.red],
    }
    if args.off:
        Path(args.off).write_text(volume.placement_to_off(g.instance, g.placement))
    _emit(_dump(out), args.output)
    _report(rep.summary())
    return 0 if rep.ok else 1


def cmd_verify(args):
    inst = _instance(args.instance)
    d = _drawing(args.drawing)
    exact = all(plane.is_exact(c) for p in d.values() for c in p)
    rep = plane.verify_drawing(inst, d, None if exact else args.tol)
    _emit(_dump(rep.summary()), args.output)
    return 0 if rep.ok else 1


def cmd_render(args):
    inst = _instance(args.instance)
    d = _drawing(args.drawing)
    _emit(plane.render_svg(inst, d), args.output)
    return 0


# ---------------------------------------------------------------- parser

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="areaforge", description=__doc__.splitlines()[0])
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--restarts", type=int, default=32)
    common.add_argument("--tol", type=float, default=1e-9)
    common.add_argument("-o", "--output", help="output path (default: stdout)")
    sub = p.add_subparsers(dest="command", required=True)

    def add(name, fn, help_):
        sp = sub.add_parser(name, parents=[common], help=help_)
        sp.set_defaults(fn=fn)
        return sp

    sp = add("parse", cmd_parse, "parse a constraint formula to JSON")
    sp.add_argument("input")
    sp.add_argument("--dialect", choices=fm.DIALECTS)
    sp = add("normalize", cmd_normalize, "rewrite a polynomial system or formula into the constrained form")
    sp.add_argument("input")
    sp.add_argument("--emit-witness-map", action="store_true")
    sp = add("planarize", cmd_planarize, "insert crossing gadgets until the incidence graph is planar")
    sp.add_argument("input")
    sp.add_argument("--until", choices=("planar", "drawing"), default="planar")
    sp.add_argument("--drawing", help="write the orthogonal drawing as SVG")
    sp = add("compile", cmd_compile, "compile a formula into a fixed prescribed-area instance")
    sp.add_argument("input")
    sp = add("solve", cmd_solve, "numerically realize a prescribed-area instance")
    sp.add_argument("input")
    sp.add_argument("--svg")
    sp = add("realize-stacked", cmd_realize_stacked, "exact drawing of a stacked triangulation")
    sp.add_argument("input", nargs="?")
    sp.add_argument("--random", type=int, help="use a random triangulation with this many insertions")
    sp = add("solve-triples", cmd_solve_triples, "build the triple instance of a formula and place it")
    sp.add_argument("input")
    sp.add_argument("--values", help="universal values as NAME=VALUE,...")
    sp.add_argument("--round", type=int, default=6, help="decimal digits kept when checking the formula")
    sp = add("sample-universality", cmd_sample_universality, "sample random area vectors for a plane graph")
    sp.add_argument("input")
    sp.add_argument("--samples", type=int, default=100)
    sp = add("encode", cmd_encode, "emit the first-order formula of an instance")
    sp.add_argument("input")
    sp.add_argument("--target", choices=("native", "smt"), default="native")
    sp.add_argument("--mode", choices=("universality", "fixed"), default="universality")
    sp = add("lift3d", cmd_lift3d, "lift a plane triangulation to a prescribed-volume instance")
    sp.add_argument("input")
    sp.add_argument("--drawing", help="realizing drawing to lift")
    sp.add_argument("--x-height", default="3")
    sp.add_argument("--y-height", default="0")
    sp = add("coplanar-gadget", cmd_coplanar_gadget, "canonical coplanar gadget with k red triangles")
    sp.add_argument("k", type=int)
    sp.add_argument("--off", help="also write an OFF mesh")
    sp = add("verify", cmd_verify, "check a drawing against an instance")
    sp.add_argument("instance")
    sp.add_argument("drawing")
    sp = add("render", cmd_render, "draw an instance and drawing as SVG")
    sp.add_argument("instance")
    sp.add_argument("drawing")
    return p


def main(argv=None) -> int:
    logging.basicConfig(level=os.environ.get("AREAFORGE_LOG", "WARNING").upper(),
                        format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except (InputError, fm.FormulaError, plane.EmbeddingError, CompileError, planarizer.PlanarizeError,
            von_staudt.TripleError, volume.VolumeError, encoder.EncodingError, solver.StackingError,
            KeyError, ValueError) as e:
        sys.stderr.write(f"error: {e}\n")
        return 2


if __name__ == "__main__":
    sys.exit(main())
