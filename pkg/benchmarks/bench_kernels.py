"""Compare the compiled and pure-Python integration kernels.

Usage: python benchmarks/bench_kernels.py [--repeat N]
"""
from __future__ import annotations

import argparse
import math
import time
from fractions import Fraction

from iifcyclicity.flow import FlowSettings, Section, available_kernels, integrate, return_map
from iifcyclicity.system import PlanarSystem

ELLIPSE_P = "lam*x - y + lam*m1*x^3 + (m2-m1+m1*m2)*x^2*y + lam*m1*m2*x*y^2 + m2*y^3"
ELLIPSE_Q = "x + lam*y - x^3 + lam*m1*x^2*y + (m1*m2-m1-1)*x*y^2 + lam*m1*m2*y^3"


def workloads():
    from iifcyclicity.algebra import ParamPoly

    env = {k: ParamPoly.symbol(k) for k in ("lam", "m1", "m2")}
    ex1 = PlanarSystem.parse(ELLIPSE_P, ELLIPSE_Q, env).bind(
        {"lam": Fraction(1, 2), "m1": Fraction(-2), "m2": Fraction(1)})
    cubic = PlanarSystem.parse("-2*y", "-2*x+3*x^2")
    r = 1 / math.sqrt(2)
    sec = Section.transversal(ex1, (r, 0.0), direction=(-1.0, 0.0))
    csec = Section.transversal(cubic, (0.85, 0.0), direction=(1.0, 0.0))
    return {
        "trajectory (ellipse system, t=20)": lambda st: integrate(ex1, (0.3, 0.1), 20.0, rel_tol=1e-11, settings=st),
        "return map + variational (ellipse)": lambda st: return_map(ex1, sec, 0.05, settings=st),
        "return map (cubic, near loop)": lambda st: return_map(cubic, csec, 0.1, settings=st),
    }


def best_of(fn, repeat: int) -> float:
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main(argv=None) -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)
    kernels = available_kernels()
    print(f"kernels: {', '.join(kernels)}")
    header = f"{'workload':40s}" + "".join(f"{k:>12s}" for k in kernels)
    if len(kernels) == 2:
        header += f"{'speedup':>10s}"
    print(header)
    for name, fn in workloads().items():
        row = [best_of(lambda: fn(FlowSettings(kernel=k)), args.repeat) for k in kernels]
        line = f"{name:40s}" + "".join(f"{t * 1e3:10.2f}ms" for t in row)
        if len(row) == 2:
            line += f"{row[1] / row[0]:9.1f}x"
        print(line)


if __name__ == "__main__":
    main()
