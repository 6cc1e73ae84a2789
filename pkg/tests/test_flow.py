import math

import numpy as np
import pytest
from scipy.integrate import solve_ivp

from iifcyclicity.errors import IntegrationError
from iifcyclicity.flow import (
    COMPILED,
    FlowSettings,
    Section,
    available_kernels,
    characteristic_exponent,
    finite_difference_derivative,
    integrate,
    return_map,
    separatrix_quantity_beta1,
    trace_homoclinic,
    transition_map,
    write_map_csv,
)
from iifcyclicity.flow.integrate import DivergentIntegralError

from conftest import F_CUBIC, F_LOOP

R_EX1 = 1 / math.sqrt(2)


def test_energy_conservation(cubic):
    traj = integrate(cubic, (0.5, 0.0), 20.0)
    f = F_CUBIC.to_float()
    assert np.max(np.abs(f(traj.x, traj.y) - f(0.5, 0.0))) < 1e-8
    assert np.all(np.diff(traj.t) > 0)


def test_against_solve_ivp(ex1):
    # independent oracle: scipy DOP853 on the same field
    traj = integrate(ex1, (0.3, 0.1), 3.0, rel_tol=1e-12)
    sol = solve_ivp(lambda t, z: ex1.field(z[0], z[1]), (0, 3.0), [0.3, 0.1], method="DOP853",
                    rtol=1e-12, atol=1e-14)
    assert abs(traj.x[-1] - sol.y[0, -1]) < 1e-9 and abs(traj.y[-1] - sol.y[1, -1]) < 1e-9


def test_ellipse_is_periodic(ex1):
    traj = integrate(ex1, (R_EX1, 0.0), 4 * math.pi, rel_tol=1e-12)
    assert math.hypot(traj.x[-1] - R_EX1, traj.y[-1]) < 1e-7


def test_singular_start_is_stationary(cubic):
    traj = integrate(cubic, (0.0, 0.0), 5.0)
    assert np.all(traj.x == 0) and np.all(traj.y == 0)


def test_rel_tol_bounds(cubic):
    with pytest.raises(ValueError):
        integrate(cubic, (0.5, 0), 1.0, rel_tol=1e-15)


def test_example1_return_map_derivative(ex1):
    sec = Section.transversal(ex1, (R_EX1, 0.0), direction=(-1.0, 0.0))
    m = return_map(ex1, sec, 0.0)
    assert abs(m.image) < 1e-10
    assert abs(m.derivative - math.exp(-4 * math.pi)) < 1e-4 * math.exp(-4 * math.pi)
    assert m.derivative > 0


def test_characteristic_exponents(cubic, ex1):
    c = 0.05  # level f = -0.05: outer root of x^3 - x^2 + 0.05 on (2/3, 1)
    x0 = _outer_root(c)
    assert abs(characteristic_exponent(cubic, (x0, 0.0))) < 1e-8
    assert abs(characteristic_exponent(ex1, (R_EX1, 0.0)) + 4 * math.pi) < 1e-5


def _outer_root(c):
    roots = np.roots([1, -1, 0, c])
    return float(max(r.real for r in roots if abs(r.imag) < 1e-12 and 2 / 3 < r.real < 1))


def test_hamiltonian_return_map_identity(cubic):
    sec = Section.transversal(cubic, (2 / 3 + 0.2, 0.0), direction=(1.0, 0.0))
    for sg in np.linspace(-0.15, 0.1, 20):
        assert abs(return_map(cubic, sec, float(sg)).image - sg) < 1e-7


def test_variational_vs_finite_difference(ex1, cubic):
    sec = Section.transversal(ex1, (R_EX1, 0.0), direction=(-1.0, 0.0))
    other = Section.transversal(ex1, (0.0, R_EX1), direction=(0.0, -1.0))
    for sg in (0.02, 0.1):
        exact = transition_map(ex1, sec, other, sg)
        fd = finite_difference_derivative(ex1, sec, other, sg, step=1e-5)
        assert abs(exact.derivative - fd) < 1e-4 * abs(fd)


def test_transition_composition(ex1):
    s1 = Section.transversal(ex1, (R_EX1, 0.0), direction=(-1.0, 0.0))
    s2 = Section.transversal(ex1, (0.0, R_EX1), direction=(0.0, -1.0))
    s3 = Section.transversal(ex1, (-R_EX1, 0.0), direction=(1.0, 0.0))
    sg = 0.05
    a = transition_map(ex1, s1, s2, sg)
    b = transition_map(ex1, s2, s3, a.image)
    c = transition_map(ex1, s1, s3, sg)
    assert abs(b.image - c.image) < 2e-10 * max(1, abs(c.image)) + 1e-11
    assert abs(a.derivative * b.derivative - c.derivative) < 1e-8 * abs(c.derivative)


def test_exponent_sign_matches_contraction(ex1):
    # negative exponent: iterates approach the cycle
    sec = Section.transversal(ex1, (R_EX1, 0.0), direction=(-1.0, 0.0))
    s = 0.1
    for _ in range(2):
        nxt = return_map(ex1, sec, s).image
        assert abs(nxt) < abs(s)
        s = nxt
    assert characteristic_exponent(ex1, (R_EX1, 0.0)) < 0


def test_escape_error(cubic):
    # outside the loop the orbits of the cubic are unbounded
    sec = Section.transversal(cubic, (0.8, 0.0), direction=(1.0, 0.0))
    with pytest.raises(IntegrationError, match="escaped"):
        return_map(cubic, sec, 0.5)


def test_section_rejects_singular_base(cubic):
    with pytest.raises(ValueError, match="singular"):
        Section.transversal(cubic, (0.0, 0.0), direction=(1.0, 0.0))


def test_trace_homoclinic_examples(cubic, loop1):
    loop = trace_homoclinic(cubic, (0, 0), 1e-6, 1e-3)
    assert np.max(np.abs(F_CUBIC.to_float()(loop.x, loop.y))) < 1e-6
    loop = trace_homoclinic(loop1, (1, 0), 1e-6, 1e-3)
    assert np.max(np.abs(F_LOOP.to_float()(loop.x, loop.y))) < 1e-5
    with pytest.raises(ValueError):
        trace_homoclinic(cubic, (0, 0), 0.0, 1e-3)


def test_beta1_examples(cubic, loop1, andronov):
    loop = trace_homoclinic(cubic, (0, 0), 1e-6, 1e-3)
    assert abs(separatrix_quantity_beta1(cubic, loop, (0, 0), 1e-2).value) < 1e-8
    loop = trace_homoclinic(loop1, (1, 0), 1e-6, 1e-3)
    b = separatrix_quantity_beta1(loop1, loop, (1, 0), 1e-2)
    assert math.isfinite(b.value) and abs(b.value) > 10 * b.truncation_error
    with pytest.raises(DivergentIntegralError, match="divergent: strong saddle"):
        separatrix_quantity_beta1(andronov, loop, (0, 0), 1e-2)


def test_map_csv(tmp_path, cubic):
    sec = Section.transversal(cubic, (0.8, 0.0), direction=(1.0, 0.0))
    path = tmp_path / "m.csv"
    write_map_csv([return_map(cubic, sec, 0.01)], path)
    assert path.read_text().splitlines()[0] == "sigma,image,derivative"


@pytest.mark.skipif(not COMPILED, reason="compiled kernel not built")
def test_kernels_agree(ex1):
    assert available_kernels() == ["cython", "python"]
    sec = Section.transversal(ex1, (R_EX1, 0.0), direction=(-1.0, 0.0))
    out = {}
    for k in ("cython", "python"):
        st = FlowSettings(kernel=k)
        traj = integrate(ex1, (0.3, 0.1), 2.0, rel_tol=1e-11, full=True, settings=st)
        m = return_map(ex1, sec, 0.05, settings=st)
        out[k] = (traj.state[-1], len(traj), m.image, m.derivative)
    c, p = out["cython"], out["python"]
    assert c[1] == p[1]
    assert np.allclose(c[0], p[0], rtol=1e-13, atol=1e-15)
    assert c[2] == pytest.approx(p[2], rel=1e-12) and c[3] == pytest.approx(p[3], rel=1e-12)


def test_pure_python_switch():
    import os
    import subprocess
    import sys

    env = dict(os.environ, IIFCYC_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", "from iifcyclicity.flow import BACKEND; print(BACKEND)"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"
