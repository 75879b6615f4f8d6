"""Time the compiled kernels against the numpy fallback on a compiled gadget instance.

    python3 benchmarks/bench_kernels.py [--formula corpus/sat/three_halves.txt] [--repeat 20]
"""
import argparse
import time
from pathlib import Path

import numpy as np

from areaforge import formula, kernels
from areaforge.compiler import compile_formula
from areaforge.solver import AreaSystem

HERE = Path(__file__).resolve().parent


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--formula", default=str(HERE.parent / "corpus" / "sat" / "three_halves.txt"))
    ap.add_argument("--repeat", type=int, default=20)
    args = ap.parse_args(argv)

    f = formula.parse_formula(Path(args.formula).read_text())
    comp = compile_formula(f)
    system = AreaSystem(comp.instance)
    rng = np.random.default_rng(0)
    u = system.pack(comp.nominal) + rng.normal(0, 1e-3, system.n)
    xy = system.coords(u)
    index = {v: i for i, v in enumerate(system.names)}
    edges = np.array([(index[a], index[b]) for a, b in comp.instance.edges], dtype=np.int64)
    print(f"instance: {len(system.names)} vertices, {len(system.faces)} faces, {len(edges)} edges")

    impls = kernels.implementations()
    results = {}
    for name, impl in impls.items():
        results[name] = {
            "face_areas": best_of(lambda: kernels.face_areas(xy, system.ptr, system.idx, impl=impl), args.repeat),
            "area_jacobian": best_of(
                lambda: kernels.area_jacobian(xy, system.ptr, system.idx, system.col, impl=impl), args.repeat),
            "crossing_pairs": best_of(lambda: kernels.crossing_pairs(xy, edges, 1e-12, impl=impl),
                                      max(1, args.repeat // 4)),
        }
    if "cython" in impls:
        a = kernels.face_areas(xy, system.ptr, system.idx, impl=impls["python"])
        b = kernels.face_areas(xy, system.ptr, system.idx, impl=impls["cython"])
        print(f"max face-area difference between backends: {np.max(np.abs(a - b)):.3e}")
    print(f"{'kernel':<16}" + "".join(f"{n:>14}" for n in results) + ("   speedup" if len(results) > 1 else ""))
    for k in results["python"]:
        row = f"{k:<16}" + "".join(f"{results[n][k] * 1e3:>12.3f}ms" for n in results)
        if "cython" in results:
            row += f"   {results['python'][k] / results['cython'][k]:7.1f}x"
        print(row)


if __name__ == "__main__":
    main()
