"""Shared systems: the named corpus fields built directly from polynomials."""
from __future__ import annotations

from fractions import Fraction

import pytest

from iifcyclicity.algebra import BiPoly
from iifcyclicity.system import PlanarSystem

X, Y = BiPoly.x(), BiPoly.y()
R2 = X * X + Y * Y
F_LOOP = BiPoly.parse("y^2-(1-x)^2*(1+x)")
F_CUBIC = BiPoly.parse("y^2-x^2+x^3")
ANDRONOV_T = [[Fraction(-1, 2), Fraction(1, 2)], [Fraction(1, 2), Fraction(1, 2)]]

EXAMPLE1_P = "lam*x - y + lam*m1*x^3 + (m2-m1+m1*m2)*x^2*y + lam*m1*m2*x*y^2 + m2*y^3"
EXAMPLE1_Q = "x + lam*y - x^3 + lam*m1*x^2*y + (m1*m2-m1-1)*x*y^2 + lam*m1*m2*y^3"
EXAMPLE1_PARAMS = {"lam": Fraction(1, 2), "m1": Fraction(-2), "m2": Fraction(1)}


def loop_family(m: int, g: BiPoly | None = None, q: BiPoly | None = None) -> PlanarSystem:
    """Homoclinic-loop family around y^2 = (1-x)^2 (1+x) with IIF (x^2+y^2) f^m q."""
    g = BiPoly.const(1) if g is None else g
    q = BiPoly.const(1) if q is None else q
    f = F_LOOP
    w = g * (1 - m) + f ** (m - 1)
    fm = f**m
    p = -(w * f.diff("y") + f * g.diff("y")) * R2 * q - fm * (2 * (X + Y) * q + R2 * q.diff("y"))
    qq = (w * f.diff("x") + f * g.diff("x")) * R2 * q + fm * (2 * (X - Y) * q + R2 * q.diff("x"))
    return PlanarSystem(p, qq, name=f"loop-m{m}")


def example1_symbolic() -> PlanarSystem:
    from iifcyclicity.algebra import ParamPoly

    env = {k: ParamPoly.symbol(k) for k in ("lam", "m1", "m2")}
    return PlanarSystem.parse(EXAMPLE1_P, EXAMPLE1_Q, env)


@pytest.fixture(scope="session")
def ex1_sym():
    return example1_symbolic()


@pytest.fixture(scope="session")
def ex1():
    return example1_symbolic().bind(EXAMPLE1_PARAMS)


@pytest.fixture(scope="session")
def ex1_iif():
    return BiPoly.parse("(x^2+y^2)*(1-2*x^2-2*y^2)")


@pytest.fixture(scope="session")
def cubic():
    return PlanarSystem.parse("-2*y", "-2*x+3*x^2")


@pytest.fixture(scope="session")
def loop1():
    return loop_family(1)


@pytest.fixture(scope="session")
def loop2():
    return loop_family(2)


@pytest.fixture(scope="session")
def andronov():
    return PlanarSystem.parse("-x+2*y+x^2", "2*x-y-3*x^2+3/2*x*y")


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
