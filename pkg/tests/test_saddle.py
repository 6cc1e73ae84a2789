from fractions import Fraction

import pytest
import sympy as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from iifcyclicity.algebra import BiPoly
from iifcyclicity.errors import ConsistencyError, NormalFormError, NotSaddleError
from iifcyclicity.saddle import (
    SaddleQuantities,
    classify_saddle,
    formal_iif_consistency,
    local_iif_factorization,
    resonant_normal_form,
    saddle_quantities,
)
from iifcyclicity.system import PlanarSystem

from conftest import ANDRONOV_T, F_CUBIC, F_LOOP, R2

sx, sy, SX, SY = sp.symbols("x y X Y")


def _sym(p: BiPoly):
    return sp.sympify(str(p).replace("^", "**"), locals={"x": sx, "y": sy})


def sympy_resonant_terms(f1, f2, lam, N):
    """Independent Poincare-Dulac oracle by brute-force conjugacy.

    ``f1, f2`` are sympy fields with diagonal linear part ``lam``; solves
    ``x = X + h1, y = Y + h2`` with resonant-only new nonlinear terms
    ``g1, g2`` up to total degree ``N`` and returns ``(g1, g2)``.
    """
    unk, h, g = [], [0, 0], [0, 0]
    for nu in range(2):
        for k in range(2, N + 1):
            for i in range(k + 1):
                j = k - i
                c = sp.Symbol(f"c{nu}_{i}_{j}")
                unk.append(c)
                if lam[0] * i + lam[1] * j - lam[nu] == 0:
                    g[nu] += c * SX**i * SY**j
                else:
                    h[nu] += c * SX**i * SY**j
    xs, ys = SX + h[0], SY + h[1]
    new = (lam[0] * SX + g[0], lam[1] * SY + g[1])
    eqs = []
    for fv, hv in ((f1, xs), (f2, ys)):
        lhs = sp.diff(hv, SX) * new[0] + sp.diff(hv, SY) * new[1]
        rhs = fv.subs({sx: xs, sy: ys}, simultaneous=True)
        for (i, j), c in sp.Poly(sp.expand(lhs - rhs), SX, SY).terms():
            if i + j <= N:
                eqs.append(c)
    sol = sp.solve(eqs, unk, dict=True)[0]
    return sp.expand(g[0].subs(sol)), sp.expand(g[1].subs(sol))


# ---------------------------------------------------------------------------
# classification
# ---------------------------------------------------------------------------
def test_classify_andronov(andronov):
    si = classify_saddle(andronov, (0, 0))
    assert (si.lam, si.mu, si.ratio_r) == (1, -3, 3)
    assert si.strong and si.resonance == (1, 3) and si.divergence == -2


def test_classify_cubic_origin(cubic):
    si = classify_saddle(cubic, (0, 0))
    assert (si.lam, si.mu) == (2, -2) and si.weak and si.resonance == (1, 1)


def test_classify_rejects_center(cubic):
    with pytest.raises(NotSaddleError, match="not a hyperbolic saddle"):
        classify_saddle(cubic, (Fraction(2, 3), 0))


def test_loop_saddle_eigenvalues(loop1):
    si = classify_saddle(loop1, (1, 0))
    assert si.lam * si.lam == 8 and si.mu == -si.lam and si.weak


# ---------------------------------------------------------------------------
# saddle quantities
# ---------------------------------------------------------------------------
def test_loop_family_quantities_vanish(loop1):
    sq = saddle_quantities(loop1, classify_saddle(loop1, (1, 0)), K=3)
    assert sq.alphas == (0, 0, 0, 0) and sq.first_nonzero is None


def test_quantities_of_normal_form():
    sys = PlanarSystem.parse("x*(1+2*x*y)", "-y*(1+5*x*y)")
    sq = saddle_quantities(sys, classify_saddle(sys, (0, 0)), K=2)
    assert sq.alpha(1) == 0 and sq.alpha(2) == -3 and sq.first_nonzero == 2


def test_linear_saddle_quantities_zero():
    sys = PlanarSystem.parse("x", "-y")
    assert set(saddle_quantities(sys, classify_saddle(sys, (0, 0)), K=3).alphas) == {0}


def test_strong_saddle_quantities_error(andronov):
    with pytest.raises(NormalFormError, match="strong saddle"):
        saddle_quantities(andronov, classify_saddle(andronov, (0, 0)), K=1)


def test_alpha2_matches_sympy_oracle():
    sys = PlanarSystem.parse("x+y^2+x^2", "-y+x^2+3*x*y-x^2*y")
    sq = saddle_quantities(sys, classify_saddle(sys, (0, 0)), K=1)
    g1, g2 = sympy_resonant_terms(_sym(sys.p), _sym(sys.q), (1, -1), 3)
    want = g1.coeff(SX, 2).coeff(SY, 1) + g2.coeff(SX, 1).coeff(SY, 2)
    assert sq.alpha(2) == Fraction(int(sp.numer(want)), int(sp.denom(want)))


small = st.builds(Fraction, st.integers(-6, 6), st.integers(1, 4))


@settings(max_examples=30, deadline=None)
@given(a=st.lists(small, min_size=2, max_size=2), b=st.lists(small, min_size=2, max_size=2))
def test_quantities_from_normal_form_coefficients(a, b):
    xy = BiPoly.x() * BiPoly.y()
    ga = 1 + a[0] * xy + a[1] * xy * xy
    gb = 1 + b[0] * xy + b[1] * xy * xy
    sys = PlanarSystem(BiPoly.x() * ga, -BiPoly.y() * gb)
    sq = saddle_quantities(sys, classify_saddle(sys, (0, 0)), K=2)
    assert sq.alpha(2) == a[0] - b[0]
    if a[0] == b[0]:
        assert sq.alpha(3) == a[1] - b[1]


@settings(max_examples=15, deadline=None)
@given(c=st.builds(Fraction, st.integers(-5, 5), st.integers(1, 3)))
def test_vanishing_pattern_invariant_under_linear_change(c):
    sys = PlanarSystem.parse("x*(1+2*x*y)+y^2", "-y*(1+2*x*y)+x^2")
    si = classify_saddle(sys, (0, 0))
    base = saddle_quantities(sys, si, K=2)
    scaled = saddle_quantities(sys, si, K=2, linear_change=[[1 + c * c, 0], [0, 1]])
    assert [a == 0 for a in base.alphas] == [a == 0 for a in scaled.alphas]


def test_formal_consistency():
    sq = SaddleQuantities((Fraction(0), Fraction(0), Fraction(3)), 3)
    assert formal_iif_consistency(sq, 3) is True
    assert formal_iif_consistency(sq, 2) is False
    with pytest.raises(ConsistencyError, match="contradiction"):
        formal_iif_consistency(SaddleQuantities((Fraction(0), Fraction(1), Fraction(0)), 2), 3)
    with pytest.raises(NormalFormError):
        formal_iif_consistency(sq, 4)


# ---------------------------------------------------------------------------
# resonant normal form
# ---------------------------------------------------------------------------
@pytest.fixture(scope="module")
def andronov_nf(andronov):
    return resonant_normal_form(andronov, classify_saddle(andronov, (0, 0)), 15, linear_change=ANDRONOV_T)


def test_andronov_obstruction(andronov_nf):
    nf = andronov_nf
    assert (nf.p, nf.q, nf.ell, nf.delta) == (1, 3, 1, -1)
    assert nf.obstruction_coeff == Fraction(-455, 1152)
    assert nf.obstruction_monomial == (4, 1)


def test_andronov_matches_sympy_oracle(andronov):
    # independent route: transform with T in sympy and solve the conjugacy directly
    T = sp.Matrix(ANDRONOV_T).applyfunc(lambda v: sp.Rational(v.numerator, v.denominator))
    P, Q = _sym(andronov.p), _sym(andronov.q)
    u, v = sp.symbols("u v")
    old = T * sp.Matrix([u, v])
    F = sp.Matrix([P, Q]).subs({sx: old[0], sy: old[1]}, simultaneous=True)
    f = (T.inv() * F).applyfunc(sp.expand).subs({u: sx, v: sy}, simultaneous=True)
    assert sp.expand(f[0] - (-3 * sx - sp.Rational(11, 8) * sx**2 + 2 * sx * sy - sp.Rational(5, 8) * sy**2)) == 0
    g1, g2 = sympy_resonant_terms(f[0], f[1], (-3, 1), 5)
    A1, B1 = g1.coeff(SX, 2).coeff(SY, 3), g2.coeff(SX, 1).coeff(SY, 4)
    assert (A1, B1) == (sp.Rational(-7735, 768), sp.Rational(2275, 768))
    # orbital coefficient after dividing by the Y-equation, X-unstable convention
    assert B1 + A1 / 3 == sp.Rational(-455, 1152)


def test_truncation_stability(andronov, andronov_nf):
    low = resonant_normal_form(andronov, classify_saddle(andronov, (0, 0)), 10, linear_change=ANDRONOV_T)
    n = len(low.orbital_coeffs)
    assert low.orbital_coeffs == andronov_nf.orbital_coeffs[:n]
    assert low.obstruction_coeff == andronov_nf.obstruction_coeff


def test_linear_saddle_is_linearizable():
    sys = PlanarSystem.parse("x", "-3*y")
    nf = resonant_normal_form(sys, classify_saddle(sys, (0, 0)), 9)
    assert nf.delta == 0 and nf.ell is None and "linearizable" in nf.report()


def test_common_factor_weak_saddle_is_linearizable():
    # X = (1 + x + y) (x, -y): orbitally linear
    sys = PlanarSystem.parse("x*(1+x+y)", "-y*(1+x+y)")
    nf = resonant_normal_form(sys, classify_saddle(sys, (0, 0)), 9)
    assert nf.delta == 0


def test_nonresonant_error():
    # eigenvalues (-1 +- sqrt 13)/2: irrational ratio
    sys = PlanarSystem.parse("x+y", "x-2*y")
    si = classify_saddle(sys, (0, 0))
    assert si.resonance is None and si.strong
    with pytest.raises(NormalFormError, match="nonresonant saddle"):
        resonant_normal_form(sys, si, 5)


# ---------------------------------------------------------------------------
# local factorization
# ---------------------------------------------------------------------------
def test_factorization_loop_m2(loop2):
    si = classify_saddle(loop2, (1, 0))
    lf = local_iif_factorization(loop2, R2 * F_LOOP**2, si, f_lambda=F_LOOP, f_mu=F_LOOP)
    assert (lf.m1, lf.m2) == (2, 2) and lf.unit_nonzero and lf.relation_holds and lf.case_ok


def test_factorization_cubic_series_only(cubic):
    si = classify_saddle(cubic, (0, 0))
    lf = local_iif_factorization(cubic, F_CUBIC, si)
    assert (lf.m1, lf.m2) == (1, 1) and lf.case == "weak" and lf.series_m == (1, 1)


def test_factorization_mismatch(cubic):
    si = classify_saddle(cubic, (0, 0))
    with pytest.raises(ConsistencyError, match="separatrix factor mismatch"):
        local_iif_factorization(cubic, F_CUBIC, si, f_lambda=BiPoly.parse("x^2+y^2-1"))


def test_factorization_strong_resonant():
    # x' = x, y' = -3y: V = x y is an IIF with the (1, 1) pattern of the k = 0 case
    sys = PlanarSystem.parse("x", "-3*y")
    si = classify_saddle(sys, (0, 0))
    lf = local_iif_factorization(sys, BiPoly.parse("x*y"), si)
    assert (lf.m1, lf.m2) == (1, 1) and lf.case_ok and lf.k == 0 and lf.relation_holds
