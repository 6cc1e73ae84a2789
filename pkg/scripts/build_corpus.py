"""Regenerate the built-in job files in src/iifcyclicity/corpus/.

Systems that are products of the declared curves are expanded here so the
job files stay plain polynomial input.
"""
from __future__ import annotations

import json
import math
from pathlib import Path

from iifcyclicity.algebra import BiPoly

OUT = Path(__file__).resolve().parents[1] / "src" / "iifcyclicity" / "corpus"

X, Y = BiPoly.x(), BiPoly.y()
R2 = X * X + Y * Y
F_LOOP = BiPoly.parse("y^2-(1-x)^2*(1+x)")
# loop of f = 0 through (1, 0): x = u^2 - 1, y = u (2 - u^2), |u| < sqrt(2)
LOOP_ORBIT = {"type": "polynomial", "x": [-1, 0, 1], "y": [0, 2, 0, -1], "s_range": [-1.25, 1.25]}


def loop_system(m: int):
    """Homoclinic-loop family with g = 1, q = 1 and multiplicity ``m``."""
    w = F_LOOP ** (m - 1) + (1 - m)
    fm = F_LOOP ** m
    p = -(w * F_LOOP.diff("y")) * R2 - fm * 2 * (X + Y)
    q = (w * F_LOOP.diff("x")) * R2 + fm * 2 * (X - Y)
    return {"p": str(p), "q": str(q)}


def example1():
    lam, m1 = 0.5, -2.0
    period = 2 * math.pi * m1 / (1 + m1)
    return {
        "name": "example1",
        "description": "Quartic-IIF system with an elliptic hyperbolic limit cycle (lam=1/2, m1=-2, m2=1).",
        "params": {"lam": "1/2", "m1": "-2", "m2": "1"},
        "system": {
            "p": "lam*x - y + lam*m1*x^3 + (m2-m1+m1*m2)*x^2*y + lam*m1*m2*x*y^2 + m2*y^3",
            "q": "x + lam*y - x^3 + lam*m1*x^2*y + (m1*m2-m1-1)*x*y^2 + lam*m1*m2*y^3",
        },
        "curves": {"ellipse": "1 + m1*x^2 + m1*m2*y^2"},
        "iif": {"factors": [["x^2+y^2", 1], ["ellipse", 1]]},
        "tasks": [
            {"type": "verify-iif", "label": "symbolic parameters"},
            {"type": "verify-iif", "label": "random rational parameters", "mode": "sampling"},
            {"type": "multiplicity", "curve": "ellipse", "orbit": {"type": "ellipse"},
             "expect": {"m": 1}},
            {"type": "identity-check", "orbit": {"type": "ellipse"},
             "sigma": {"start": 0.01, "stop": 0.2, "count": 20}, "tol": 1e-6},
            {"type": "poincare", "label": "derivative and implicit map", "orbit": {"type": "ellipse"},
             "sigma": [0.0, 0.02, 0.05, 0.1, 0.15, 0.2],
             "expect": {"derivative0": math.exp(-2 * lam * period), "rel_tol": 1e-4},
             "implicit": {"k0": "auto", "tol": 1e-5}},
            {"type": "verdict", "kind": "limit-cycle", "curve": "ellipse", "orbit": {"type": "ellipse"},
             "expect": {"kind": "LimitCycleMultiplicity", "value": 1}},
        ],
    }


def example2(m: int):
    v = {"factors": [["x^2+y^2", 1], ["f", m]]}
    cyc = 2 if m == 1 else None
    tasks = [
        {"type": "verify-iif"},
        {"type": "saddle", "point": "saddle", "expect": {"ratio_r": 1, "strong": False}},
        {"type": "trace-homoclinic", "point": "saddle", "curve": "f"} | (
            {"beta1": {"cut_radius": 1e-2, "nonzero": True}} if m == 1 else {}),
        {"type": "multiplicity", "curve": "f", "orbit": LOOP_ORBIT, "expect": {"m": m}},
        {"type": "multiplicity", "label": "m=0 control", "v": "x^2+y^2", "curve": "f",
         "orbit": LOOP_ORBIT, "expect": {"m": 0}},
        {"type": "local-factorization", "point": "saddle", "f_lambda": "f", "f_mu": "f",
         "expect": {"m1": m, "m2": m}},
        {"type": "saddle-quantities", "point": "saddle", "K": 3},
        {"type": "verdict", "kind": "homoclinic", "point": "saddle", "curve": "f",
         "expect": {"kind": "HomoclinicCyclicity"} | ({"value": cyc} if cyc else {})},
    ]
    if m == 1:
        tasks[6]["expect"] = {"alphas": [0, 0, 0, 0]}
    return {
        "name": f"example2-m{m}",
        "description": f"Homoclinic loop of y^2 = (1-x)^2 (1+x) with IIF multiplicity {m} (g = 1, q = 1).",
        "system": loop_system(m),
        "curves": {"f": str(F_LOOP)},
        "iif": v,
        "points": {"saddle": [1, 0], "focus": [0, 0]},
        "tasks": tasks,
    }


def example3():
    tasks = [{"type": "verify-iif", "label": f"V = f^{n}", "v": f"f^{n}"} for n in (1, 2, 3)]
    tasks += [
        {"type": "saddle", "point": "saddle", "expect": {"lambda": 2, "mu": -2, "strong": False}},
        {"type": "trace-homoclinic", "point": "saddle", "curve": "f",
         "beta1": {"cut_radius": 1e-2}},
        {"type": "poincare", "label": "Hamiltonian return map",
         "orbit": {"type": "polynomial", "x": [1, 0, -1], "y": [0, 1, 0, -1], "s_range": [-0.9, 0.9]},
         "s": 0.0, "sigma": {"start": 0.002, "stop": 0.05, "count": 20}, "identity_map": True, "tol": 1e-7},
        {"type": "first-integral-ratio", "v1": "f", "v2": "f^2", "probes": [["0.3", "0.1"], ["0.5", "0"]],
         "label": "f^2 / f is a first integral"},
        {"type": "verdict", "kind": "asymptotics", "point": "saddle", "betas_vanish": True,
         "expect": {"case": "v"}},
    ]
    return {
        "name": "example3",
        "description": "Hamiltonian cubic with a homoclinic loop: every power of f is an IIF.",
        "system": {"p": "-2*y", "q": "-2*x+3*x^2"},
        "curves": {"f": "y^2-x^2+x^3"},
        "points": {"saddle": [0, 0], "center": ["2/3", 0]},
        "tasks": tasks,
    }


T_CHANGE = [["-1/2", "1/2"], ["1/2", "1/2"]]


def andronov():
    return {
        "name": "andronov",
        "description": "Strong 1:3 resonant saddle whose loop admits no analytic IIF.",
        "system": {"p": "-x+2*y+x^2", "q": "2*x-y-3*x^2+3/2*x*y"},
        "points": {"saddle": [0, 0]},
        "tasks": [
            {"type": "saddle", "point": "saddle",
             "expect": {"lambda": 1, "mu": -3, "ratio_r": 3, "strong": True, "resonance": [1, 3]}},
            {"type": "normal-form", "point": "saddle", "degree": 15, "linear_change": T_CHANGE,
             "expect": {"obstruction_coeff": "-86579/248832", "delta_nonzero": True,
                        "existence_obstruction": True}},
            {"type": "verdict", "kind": "obstruction", "point": "saddle", "degree": 15,
             "linear_change": T_CHANGE, "expect": {"kind": "NoAnalyticIIF"}},
        ],
    }


def perturb():
    return {
        "name": "perturb",
        "description": "Perturbations of the Hamiltonian cubic with invariant hyperbolic ovals.",
        "system": {"p": "-2*y", "q": "-2*x+3*x^2"},
        "tasks": [
            {"type": "perturb", "label": "n=3 eps=1/100", "n": 3, "eps": "1/100", "a": [1, 2, 3]},
            {"type": "perturb", "label": "n=2 eps=1/20", "n": 2, "eps": "1/20", "a": [1, 2]},
            {"type": "perturb", "label": "eps=0 control", "n": 1, "eps": 0, "a": [1],
             "expect": {"all_certified": False}},
        ],
    }


def main():
    OUT.mkdir(parents=True, exist_ok=True)
    jobs = [example1(), example2(1), example2(2), example3(), andronov(), perturb()]
    for job in jobs:
        (OUT / f"{job['name']}.json").write_text(json.dumps(job, indent=2) + "\n")
        print("wrote", job["name"])


if __name__ == "__main__":
    main()
