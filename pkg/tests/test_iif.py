import math

import numpy as np
import pytest
import sympy as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from iifcyclicity.algebra import BiPoly, ParamPoly
from iifcyclicity.errors import IntegrationError
from iifcyclicity.iif import (
    InverseIntegratingFactor,
    iif_ratio_first_integral,
    symbolic_multiplicity,
    verify_iif,
    zero_set_propagation,
)

from conftest import F_CUBIC, F_LOOP, R2, loop_family

SYM = {k: ParamPoly.symbol(k) for k in ("lam", "m1", "m2")}
V_EX1 = BiPoly.parse("(x^2+y^2)*(1+m1*x^2+m1*m2*y^2)", SYM)


def test_example1_iif_symbolic(ex1_sym):
    assert verify_iif(ex1_sym, V_EX1).is_zero()


def test_example1_iif_sampling_agrees(ex1_sym):
    assert verify_iif(ex1_sym, V_EX1, mode="sampling", seed=3).is_zero()
    wrong = BiPoly.parse("(x^2+y^2)*(1+m1*x^2+m2*y^2)", SYM)
    assert not verify_iif(ex1_sym, wrong).is_zero()
    assert not verify_iif(ex1_sym, wrong, mode="sampling", seed=3).is_zero()


@pytest.mark.parametrize("n", [1, 2, 3])
def test_cubic_powers(cubic, n):
    assert verify_iif(cubic, F_CUBIC**n).is_zero()


def test_negative_control(cubic):
    assert not verify_iif(cubic, BiPoly.x()).is_zero()


@pytest.mark.parametrize("m", [1, 2, 3])
def test_loop_family_iif(m):
    assert verify_iif(loop_family(m), R2 * F_LOOP**m).is_zero()


def test_loop_family_with_g_and_q():
    g, q = BiPoly.parse("x+3"), BiPoly.parse("x^2+y^2+5")
    sys = loop_family(2, g=g, q=q)
    assert verify_iif(sys, R2 * F_LOOP**2 * q).is_zero()


def test_residual_matches_sympy(ex1):
    # oracle: sympy expansion of P V_x + Q V_y - V div X
    x, y = sp.symbols("x y")
    P, Q = (sp.sympify(str(p).replace("^", "**")) for p in (ex1.p, ex1.q))
    V = x**2 + y**2
    want = sp.expand(P * sp.diff(V, x) + Q * sp.diff(V, y) - V * (sp.diff(P, x) + sp.diff(Q, y)))
    got = sp.sympify(str(verify_iif(ex1, R2)).replace("^", "**"))
    assert sp.expand(got - want) == 0


def test_multiplicity_examples():
    assert symbolic_multiplicity(R2 * F_LOOP**3, F_LOOP) == 3
    e = BiPoly.parse("1+m1*x^2+m1*m2*y^2", SYM)
    vals = {"m1": -2, "m2": 1}
    assert symbolic_multiplicity(V_EX1.bind(vals), e.bind(vals)) == 1
    assert symbolic_multiplicity(F_CUBIC, BiPoly.parse("x^2+y^2-1")) == 0


def test_declared_factorization_must_match():
    iif = InverseIntegratingFactor.from_factors([(R2, 1), (F_LOOP, 2)])
    assert iif.v == R2 * F_LOOP**2
    with pytest.raises(ValueError):
        InverseIntegratingFactor(R2, [(F_LOOP, 1)])


def test_ratio_first_integral(cubic, ex1, ex1_iif):
    assert iif_ratio_first_integral(F_CUBIC, F_CUBIC**2, cubic, [(0.3, 0.1), (0.5, 0.0)]) < 1e-6
    assert iif_ratio_first_integral(F_CUBIC, F_CUBIC, cubic, [(0.3, 0.1)]) == 0
    assert iif_ratio_first_integral(ex1_iif, 2 * ex1_iif, ex1, [(0.3, 0.2)]) < 1e-12


def test_ratio_vanishing_denominator(cubic):
    with pytest.raises(IntegrationError, match="V2 vanished"):
        iif_ratio_first_integral(BiPoly.const(1), F_CUBIC, cubic, [(1.0, 0.0)], t_span=1.0)


def test_zero_set_propagation(ex1, ex1_iif):
    r = 1 / math.sqrt(2)
    assert zero_set_propagation(ex1, ex1_iif, (r, 0.0), 4 * math.pi) < 1e-8


small = st.builds(lambda c: BiPoly.parse(c), st.sampled_from(["x+2", "x^2+y^2+1", "y-3*x", "1+x*y"]))


@settings(max_examples=25, deadline=None)
@given(small, st.integers(0, 3), st.sampled_from([F_LOOP, F_CUBIC, BiPoly.parse("1-2*x^2-2*y^2")]))
def test_multiplicity_increments(unit, k, f):
    v = unit * f**k
    assert symbolic_multiplicity(v * f, f) == symbolic_multiplicity(v, f) + 1


@settings(max_examples=5, deadline=None)
@given(st.floats(0.05, 0.9))
def test_zero_set_is_invariant_along_cubic_loop_branch(u):
    # points of f = 0 on the loop of the cubic stay on it
    cubic = loop_family(1)
    x0, y0 = u * u - 1, u * (2 - u * u)
    dev = zero_set_propagation(cubic, F_LOOP, (x0, y0), 1.0)
    assert dev < 1e-8
    assert np.isfinite(dev)
