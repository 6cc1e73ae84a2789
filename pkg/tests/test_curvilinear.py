import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from iifcyclicity import curvilinear as cv
from iifcyclicity.errors import ChartError
from iifcyclicity.flow import cycle_data, integrate, return_map, transition_map

from conftest import F_CUBIC, F_LOOP, R2

M1, M2, LAM = -2.0, 1.0, 0.5


@pytest.fixture(scope="module")
def ellipse_frame():
    return cv.CurvilinearFrame(cv.ellipse_orbit(M1, M2))


@pytest.fixture(scope="module")
def loop_frame():
    return cv.CurvilinearFrame(cv.polynomial_orbit([-1, 0, 1], [0, 2, 0, -1], [-1.25, 1.25]))


@pytest.fixture(scope="module")
def cubic_loop_frame():
    return cv.CurvilinearFrame(cv.polynomial_orbit([1, 0, -1], [0, 1, 0, -1], [-0.9, 0.9]))


def test_on_orbit_point(ellipse_frame):
    x, y = ellipse_frame.chart(1.3, 0.0)
    s, n = cv.to_curvilinear(ellipse_frame, (x, y))
    assert s == pytest.approx(1.3, abs=1e-10) and abs(n) < 1e-10


def test_closed_form_ellipse_chart(ellipse_frame):
    k = math.sqrt(-M1 * M2)
    for s, n in ((0.4, 0.05), (2.0, -0.08), (5.5, 0.1)):
        pt = ((math.sqrt(M2) - n) * math.cos(s) / k, (1 - math.sqrt(M2) * n) * math.sin(s) / k)
        s2, n2 = cv.to_curvilinear(ellipse_frame, pt)
        assert s2 == pytest.approx(s, abs=1e-9) and n2 == pytest.approx(n, abs=1e-9)


def test_outside_tube(ellipse_frame):
    with pytest.raises(ChartError, match="outside tubular neighborhood"):
        cv.to_curvilinear(ellipse_frame, (0.0, 0.0))


@settings(max_examples=40, deadline=None)
@given(st.floats(0, 2 * math.pi), st.floats(-0.9, 0.9))
def test_roundtrip_ellipse(ellipse_frame, s, frac):
    n = frac * ellipse_frame.max_n(s)
    x, y = ellipse_frame.chart(s, n)
    s2, n2 = cv.to_curvilinear(ellipse_frame, (x, y))
    x2, y2 = ellipse_frame.chart(s2, n2)
    assert math.hypot(x2 - x, y2 - y) < 1e-9


@settings(max_examples=40, deadline=None)
@given(st.floats(-1.1, 1.1), st.floats(-0.9, 0.9))
def test_roundtrip_loop(loop_frame, s, frac):
    n = frac * loop_frame.max_n(s)
    x, y = loop_frame.chart(s, n)
    s2, n2 = cv.to_curvilinear(loop_frame, (x, y))
    x2, y2 = loop_frame.chart(s2, n2)
    assert math.hypot(x2 - x, y2 - y) < 1e-9


def test_frame_fields_on_orbit(ellipse_frame, loop_frame, cubic_loop_frame, ex1, loop1, cubic):
    for frame, sys in ((ellipse_frame, ex1), (loop_frame, loop1), (cubic_loop_frame, cubic)):
        lo, hi = frame.s_range
        for s in np.linspace(lo + 0.05, hi - 0.05, 9):
            ff = cv.frame_fields(frame, sys, s, 0.0)
            d = frame.orbit.derivs(s)
            assert abs(ff.n_dot) < 1e-12
            assert ff.jac == pytest.approx(d[2] ** 2 + d[3] ** 2, rel=1e-14)
            assert abs(ff.s_dot) > 1e-6


def test_tilde_v_closed_form_at_zero(ellipse_frame, ex1, ex1_iif):
    r = math.sqrt(M2)
    for n in (0.02, 0.1, -0.05):
        want = M1 * n * (n - r) * (n - 2 * r) / (n * n - 2 * n * r + M2 + M1 * M2)
        assert float(cv.tilde_v(ellipse_frame, ex1, ex1_iif, 0.0, n)) == pytest.approx(want, rel=1e-12)


def test_tilde_v_zero_on_orbit_and_periodic(ellipse_frame, ex1, ex1_iif):
    L = ellipse_frame.s_range[1] - ellipse_frame.s_range[0]
    assert abs(cv.tilde_v(ellipse_frame, ex1, ex1_iif, 0.7, 0.0)) < 1e-15
    for s in (0.1, 1.0, 4.0):
        for n in (0.03, -0.06):
            a = cv.tilde_v(ellipse_frame, ex1, ex1_iif, s, n)
            b = cv.tilde_v(ellipse_frame, ex1, ex1_iif, s + L, n)
            assert abs(a - b) <= 1e-10 * max(1.0, abs(a))


def test_numeric_multiplicity_examples(ellipse_frame, loop_frame, ex1, ex1_iif, loop1, loop2):
    est = cv.numeric_multiplicity(ellipse_frame, ex1, ex1_iif)
    assert est.m == 1 and est.integer and est.leading_nonzero and est.leading_sign_constant
    assert len(est.leading_coeff_samples) == 50
    est = cv.numeric_multiplicity(loop_frame, loop2, R2 * F_LOOP**2)
    assert est.m == 2 and est.leading_nonzero and est.leading_sign_constant
    est = cv.numeric_multiplicity(loop_frame, loop1, R2)
    assert est.m == 0
    s, v = est.leading_coeff_samples[3]
    x, y = loop_frame.chart(s, 0.0)
    assert v == pytest.approx(x * x + y * y, rel=2e-2)  # intercept averages O(n) drift


def test_transition_identity_example1(ellipse_frame, ex1, ex1_iif):
    grid = np.linspace(0.01, 0.2, 20)
    chk = cv.verify_transition_identity(ellipse_frame, ex1, ex1_iif, grid)
    assert chk.max_residual < 1e-6
    zero = cv.verify_transition_identity(ellipse_frame, ex1, ex1_iif, [0.0])
    assert abs(zero.rows[0][3]) < 1e-12 and abs(zero.rows[0][4]) < 1e-12


def test_transition_identity_hamiltonian(cubic):
    # interior annulus of the cubic: identity map, V = f
    start = (0.9, 0.0)
    cd = cycle_data(cubic, start)
    traj = integrate(cubic, start, cd.period, rel_tol=1e-12)
    orbit = cv.SplineOrbit.from_trajectory(traj, periodic=True, close_tol=1e-6)
    frame = cv.CurvilinearFrame(orbit)
    chk = cv.verify_transition_identity(frame, cubic, F_CUBIC, [0.001, 0.003, 0.006])
    assert chk.max_residual < 1e-6


def test_implicit_map_examples(ellipse_frame, ex1):
    assert cv.implicit_poincare_check(0.1, 0.1, (LAM, -0.5, 1.0), 1.0) == 0
    k0 = cv.implicit_map_k0(LAM, M1)
    assert k0 == pytest.approx(math.exp(2 * math.pi), rel=1e-15)
    sec = cv.frame_section(ellipse_frame, ex1, 0.0)
    for sg in (0.05, 0.1, 0.2):
        m = return_map(ex1, sec, sg)
        assert cv.implicit_poincare_check(sg, m.image, (LAM, M1, M2), k0) < 1e-5
    with pytest.raises(ValueError):
        cv.implicit_poincare_check(1.5, 0.1, (LAM, M1, M2), k0)


def test_propagation_law(ellipse_frame, ex1, ex1_iif):
    s = np.linspace(0, 2 * math.pi, 9)
    assert cv.propagation_check(ellipse_frame, ex1, ex1_iif, 0.05, s) < 1e-6


def test_curvilinear_route_matches_cartesian(ellipse_frame, ex1):
    # dn/ds = F integrated by scipy vs the Cartesian kernel transition map
    s0, s1 = 0.0, 1.5
    sol = cv.curvilinear_transition(ellipse_frame, ex1, 0.05, s0, s1)
    a = cv.frame_section(ellipse_frame, ex1, s0)
    b = cv.frame_section(ellipse_frame, ex1, s1)
    m = transition_map(ex1, a, b, 0.05)
    assert sol.y[0, -1] == pytest.approx(m.image, rel=1e-8)
    assert sol.y[1, -1] == pytest.approx(m.derivative, rel=1e-7)


def test_leading_coefficient_nonzero_on_loop(loop_frame, loop1):
    est = cv.numeric_multiplicity(loop_frame, loop1, R2 * F_LOOP)
    assert all(abs(v) > 0 for _, v in est.leading_coeff_samples)
    assert est.leading_sign_constant


def test_cubic_frame_s_nonzero(cubic_loop_frame, cubic):
    for s in np.linspace(-0.85, 0.85, 30):
        assert abs(cv.frame_fields(cubic_loop_frame, cubic, s, 0.0).s_dot) > 0
    assert F_CUBIC(*cubic_loop_frame.chart(0.3, 0.0)) == pytest.approx(0, abs=1e-14)
