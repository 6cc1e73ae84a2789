"""The (s, n) chart along a regular orbit.

A regular orbit ``gamma(s) = (phi(s), psi(s))`` induces the chart

    x = phi(s) - n psi'(s),   y = psi(s) + n phi'(s),

in which the field reads ``s' = S(s, n)``, ``n' = N(s, n)`` and the orbits
solve ``dn/ds = F = N/S``. ``V / (J S)`` is then an inverse integrating factor
of the scalar equation; this module evaluates those objects, extracts the
vanishing multiplicity of ``V`` along the orbit and checks the transition
identity ``Vt(s1, Pi(sigma)) = Vt(s0, sigma) Pi'(sigma)``.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from numpy.polynomial import Polynomial
from scipy.integrate import solve_ivp
from scipy.interpolate import CubicSpline

from .algebra import BiPoly, FloatPoly
from .errors import ChartError
from .flow import FlowSettings, Section, Trajectory, transition_map
from .flow.integrate import DEFAULT_SETTINGS
from .iif import InverseIntegratingFactor
from .system import PlanarSystem

__all__ = [
    "Orbit",
    "ClosedFormOrbit",
    "SplineOrbit",
    "ellipse_orbit",
    "polynomial_orbit",
    "CurvilinearFrame",
    "FrameFields",
    "MultiplicityEstimate",
    "IdentityCheck",
    "to_curvilinear",
    "frame_fields",
    "tilde_v",
    "numeric_multiplicity",
    "frame_section",
    "verify_transition_identity",
    "implicit_poincare_check",
    "implicit_map_k0",
    "curvilinear_transition",
    "propagation_check",
    "tilde_v_grid",
    "S_TOL",
    "SLOPE_TOL",
]

S_TOL = 1e-12
SLOPE_TOL = 0.05
DEFAULT_N_GRID = tuple(np.geomspace(1e-4, 1e-2, 12))


class Orbit:
    """Parameterized regular curve; subclasses implement :meth:`derivs`."""

    s_range: tuple[float, float]
    periodic: bool

    def derivs(self, s):
        """Return ``(phi, psi, phi', psi', phi'', psi'')`` at ``s``."""
        raise NotImplementedError

    @property
    def length(self) -> float:
        return self.s_range[1] - self.s_range[0]

    def point(self, s):
        d = self.derivs(s)
        return d[0], d[1]

    def wrap(self, s):
        if not self.periodic:
            return s
        s0 = self.s_range[0]
        return s0 + np.mod(np.asarray(s, dtype=float) - s0, self.length)


@dataclass(frozen=True, eq=False)
class ClosedFormOrbit(Orbit):
    """Orbit given by a function returning the six derivative values."""

    func: Callable
    s_range: tuple
    periodic: bool = False
    name: str = ""

    def derivs(self, s):
        return self.func(s)


def ellipse_orbit(m1: float, m2: float) -> ClosedFormOrbit:
    """The ellipse ``1 + m1 x^2 + m1 m2 y^2 = 0`` as ``(sqrt(m2) cos s, sin s)/sqrt(-m1 m2)``."""
    m1, m2 = float(m1), float(m2)
    if not (m2 > 0 and m1 * m2 < 0):
        raise ValueError("ellipse needs m2 > 0 and m1 m2 < 0")
    k = math.sqrt(-m1 * m2)
    a = math.sqrt(m2) / k
    b = 1.0 / k

    def func(s):
        c, sn = np.cos(s), np.sin(s)
        return a * c, b * sn, -a * sn, b * c, -a * c, -b * sn

    return ClosedFormOrbit(func, (0.0, 2 * math.pi), True, f"ellipse(m1={m1:g}, m2={m2:g})")


def polynomial_orbit(xcoef: Sequence[float], ycoef: Sequence[float], s_range) -> ClosedFormOrbit:
    """Orbit ``(X(s), Y(s))`` with polynomial components (ascending coefficients)."""
    X, Y = Polynomial(xcoef), Polynomial(ycoef)
    X1, Y1, X2, Y2 = X.deriv(), Y.deriv(), X.deriv(2), Y.deriv(2)

    def func(s):
        return X(s), Y(s), X1(s), Y1(s), X2(s), Y2(s)

    return ClosedFormOrbit(func, (float(s_range[0]), float(s_range[1])), False, "polynomial")


class SplineOrbit(Orbit):
    """Cubic-spline parameterization by chord length of sampled orbit points."""

    def __init__(self, s_nodes, x, y, periodic: bool = False):
        bc = "periodic" if periodic else "not-a-knot"
        self.sx = CubicSpline(s_nodes, x, bc_type=bc)
        self.sy = CubicSpline(s_nodes, y, bc_type=bc)
        self.s_range = (float(s_nodes[0]), float(s_nodes[-1]))
        self.periodic = periodic

    @classmethod
    def from_points(cls, x, y, periodic: bool = False) -> "SplineOrbit":
        x, y = np.asarray(x, float), np.asarray(y, float)
        if periodic and (x[0], y[0]) != (x[-1], y[-1]):
            x, y = np.append(x, x[0]), np.append(y, y[0])
        seg = np.hypot(np.diff(x), np.diff(y))
        keep = np.concatenate([[True], seg > 0])
        x, y = x[keep], y[keep]
        s = np.concatenate([[0.0], np.cumsum(np.hypot(np.diff(x), np.diff(y)))])
        return cls(s, x, y, periodic)

    @classmethod
    def from_trajectory(cls, traj: Trajectory, periodic: bool = False, close_tol: float = 1e-8):
        x, y = traj.x.copy(), traj.y.copy()
        if periodic:
            gap = math.hypot(x[-1] - x[0], y[-1] - y[0])
            if gap > close_tol:
                raise ChartError(f"trajectory does not close (gap {gap:.3g})")
            x[-1], y[-1] = x[0], y[0]
        return cls.from_points(x, y, periodic)

    def derivs(self, s):
        s = self.wrap(s)
        return (
            self.sx(s), self.sy(s), self.sx(s, 1), self.sy(s, 1), self.sx(s, 2), self.sy(s, 2)
        )


@dataclass(frozen=True)
class FrameFields:
    n_dot: float
    s_dot: float
    f: float
    jac: float
    f_n: float = math.nan


class CurvilinearFrame:
    """Chart along a regular orbit with a tube radius for injectivity.

    Parameters
    ----------
    orbit : Orbit
    tube_radius : float, optional
        Spatial radius of the tubular neighborhood. Defaults to 0.3 times the
        minimum radius of curvature, capped by ``cap``.
    cap : float, optional
        Upper bound, e.g. the distance to the nearest other invariant set.
    """

    def __init__(self, orbit: Orbit, tube_radius: float | None = None, cap: float | None = None,
                 n_seed: int = 2048):
        self.orbit = orbit
        s0, s1 = orbit.s_range
        grid = np.linspace(s0, s1, n_seed, endpoint=not orbit.periodic)
        if not orbit.periodic:
            pad = 1e-9 * (s1 - s0)
            grid = np.clip(grid, s0 + pad, s1 - pad)
        d = orbit.derivs(grid)
        speed = np.hypot(d[2], d[3])
        if np.min(speed) <= 0:
            raise ChartError("orbit parameterization is not regular")
        if orbit.periodic:
            e = orbit.derivs(np.array([s0, s1]))
            if abs(e[0][0] - e[0][1]) + abs(e[1][0] - e[1][1]) > 1e-9:
                raise ChartError("periodic orbit parameterization does not close")
        curv = np.abs(d[2] * d[5] - d[3] * d[4]) / speed**3
        kmax = float(np.max(curv))
        radius = 0.3 / kmax if kmax > 0 else 1.0
        if cap is not None:
            radius = min(radius, cap)
        self.tube_radius = float(tube_radius) if tube_radius is not None else radius
        self._grid = grid
        self._pts = np.column_stack([d[0], d[1]])

    @property
    def s_range(self):
        return self.orbit.s_range

    @property
    def periodic(self) -> bool:
        return self.orbit.periodic

    @property
    def length(self) -> float:
        return self.orbit.length

    def chart(self, s, n):
        p, q, p1, q1, _, _ = self.orbit.derivs(s)
        return p - n * q1, q + n * p1

    def differential(self, s, n) -> np.ndarray:
        _, _, p1, q1, p2, q2 = self.orbit.derivs(s)
        return np.array([[p1 - n * q2, -q1], [q1 + n * p2, p1]])

    def jacobian(self, s, n):
        _, _, p1, q1, p2, q2 = self.orbit.derivs(s)
        return p1 * p1 + q1 * q1 + n * (q1 * p2 - p1 * q2)

    def max_n(self, s) -> float:
        _, _, p1, q1, _, _ = self.orbit.derivs(s)
        return self.tube_radius / math.hypot(float(p1), float(q1))


def to_curvilinear(frame: CurvilinearFrame, pt, tol: float = 1e-10, max_iter: int = 60):
    """Invert the chart by damped Newton iteration from the nearest orbit sample.

    Raises
    ------
    ChartError
        "outside tubular neighborhood" on failure or when ``|n|`` exceeds
        the tube radius.
    """
    px, py = float(pt[0]), float(pt[1])
    k = int(np.argmin(np.hypot(frame._pts[:, 0] - px, frame._pts[:, 1] - py)))
    s = float(frame._grid[k])
    _, _, p1, q1, _, _ = frame.orbit.derivs(s)
    nn = p1 * p1 + q1 * q1
    n = float(((px - frame._pts[k, 0]) * (-q1) + (py - frame._pts[k, 1]) * p1) / nn)

    def resid(s, n):
        x, y = frame.chart(s, n)
        return np.array([float(x) - px, float(y) - py])

    r = resid(s, n)
    scale = max(1.0, math.hypot(px, py))
    for _ in range(max_iter):
        rn = float(np.hypot(*r))
        if rn < tol * scale:
            break
        D = frame.differential(s, n).astype(float)
        try:
            ds, dn = np.linalg.solve(D, -r)
        except np.linalg.LinAlgError:
            raise ChartError("outside tubular neighborhood: singular chart differential") from None
        lam = 1.0
        while lam > 1e-6:
            s_new, n_new = s + lam * ds, n + lam * dn
            r_new = resid(s_new, n_new)
            if np.hypot(*r_new) < rn:
                break
            lam *= 0.5
        else:
            raise ChartError("outside tubular neighborhood: Newton stalled")
        s, n, r = s_new, n_new, r_new
    else:
        raise ChartError("outside tubular neighborhood: Newton did not converge")
    if frame.periodic:
        s = float(frame.orbit.wrap(s))
    else:
        s0, s1 = frame.s_range
        if not s0 - 1e-12 <= s <= s1 + 1e-12:
            raise ChartError("outside tubular neighborhood: s beyond the orbit ends")
    if abs(n) > frame.max_n(s) * (1 + 1e-12):
        raise ChartError(f"outside tubular neighborhood: |n| = {abs(n):.3g} exceeds tube")
    return s, n


def _field_terms(frame, sys, s, n):
    p, q, p1, q1, p2, q2 = frame.orbit.derivs(s)
    x, y = p - n * q1, q + n * p1
    fp, fq, fpx, fpy, fqx, fqy = sys.float_polys
    P, Q = fp(x, y), fq(x, y)
    A = -(q1 + n * p2) * P + (p1 - n * q2) * Q  # N * J
    B = p1 * P + q1 * Q  # S * J
    J = p1 * p1 + q1 * q1 + n * (q1 * p2 - p1 * q2)
    return dict(x=x, y=y, P=P, Q=Q, A=A, B=B, J=J, d=(p1, q1, p2, q2),
                grads=(fpx(x, y), fpy(x, y), fqx(x, y), fqy(x, y)))


def frame_fields(frame: CurvilinearFrame, sys: PlanarSystem, s: float, n: float) -> FrameFields:
    """Push the field through the chart: ``N``, ``S``, ``F = N/S``, ``J`` and ``dF/dn``.

    Raises
    ------
    ChartError
        "S vanished" when ``|S| < 1e-12``.
    """
    t = _field_terms(frame, sys, s, n)
    J, A, B = float(t["J"]), float(t["A"]), float(t["B"])
    S, N = B / J, A / J
    if abs(S) < S_TOL:
        raise ChartError(f"S vanished at s={s:.6g}, n={n:.3g}")
    p1, q1, p2, q2 = t["d"]
    Px, Py, Qx, Qy = t["grads"]
    Pn = -q1 * Px + p1 * Py
    Qn = -q1 * Qx + p1 * Qy
    An = -p2 * t["P"] - (q1 + n * p2) * Pn - q2 * t["Q"] + (p1 - n * q2) * Qn
    Bn = p1 * Pn + q1 * Qn
    fn = float((An * B - A * Bn) / (B * B))
    return FrameFields(N, S, A / B, J, fn)


def _vpoly(V) -> BiPoly:
    return V.v if isinstance(V, InverseIntegratingFactor) else V


def tilde_v(frame: CurvilinearFrame, sys: PlanarSystem, V, s, n):
    """``Vt(s, n) = V(x(s,n), y(s,n)) / (J S)``; works on arrays."""
    t = _field_terms(frame, sys, s, n)
    B = t["B"]
    if np.any(np.abs(B / t["J"]) < S_TOL):
        raise ChartError("S vanished")
    return _vpoly(V).to_float()(t["x"], t["y"]) / B


def tilde_v_grid(frame, sys, V, s_values, n_values, path=None) -> np.ndarray:
    """Grid of ``(s, n, Vt)`` rows; written as CSV when ``path`` is given."""
    rows = []
    for s in s_values:
        for n in n_values:
            rows.append((float(s), float(n), float(tilde_v(frame, sys, V, s, n))))
    arr = np.array(rows)
    if path is not None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["s", "n", "vtilde"])
            for r in rows:
                w.writerow([f"{v:.17g}" for v in r])
    return arr


@dataclass(frozen=True)
class MultiplicityEstimate:
    """Result of the log-log fit of ``|V|`` against ``n``.

    ``m`` is the rounded common slope. ``integer`` is false when the slopes
    agree across ``s`` but not with an integer; ``rho`` then holds their
    mean (a non-integer multiplicity).
    """

    m: int
    leading_coeff_samples: tuple
    fit_residual: float
    slopes: tuple
    integer: bool = True
    rho: float = math.nan

    @property
    def leading_nonzero(self) -> bool:
        return all(abs(v) > 0 for _, v in self.leading_coeff_samples)

    @property
    def leading_sign_constant(self) -> bool:
        signs = {math.copysign(1.0, v) for _, v in self.leading_coeff_samples}
        return len(signs) == 1


def default_s_samples(frame: CurvilinearFrame, count: int = 50) -> np.ndarray:
    s0, s1 = frame.s_range
    if frame.periodic:
        return np.linspace(s0, s1, count, endpoint=False)
    pad = 0.05 * (s1 - s0)
    return np.linspace(s0 + pad, s1 - pad, count)


def numeric_multiplicity(
    frame: CurvilinearFrame,
    sys: PlanarSystem | None,
    V,
    s_samples: Sequence[float] | None = None,
    n_grid: Sequence[float] | None = None,
    slope_tol: float = SLOPE_TOL,
) -> MultiplicityEstimate:
    """Vanishing multiplicity of ``V`` along the frame orbit from a log-log fit.

    Raises
    ------
    ChartError
        "inconsistent multiplicity across s" when slopes disagree, "V
        identically small" when samples sit below the rounding floor, or when
        the grid leaves the tube.
    """
    s_samples = default_s_samples(frame) if s_samples is None else np.asarray(s_samples, float)
    n_grid = np.asarray(DEFAULT_N_GRID if n_grid is None else n_grid, float)
    if np.any(n_grid <= 0):
        raise ValueError("n_grid must be positive")
    fv = FloatPoly(_vpoly(V))
    logn = np.log(n_grid)
    slopes, coeffs, raw = [], [], []
    for s in s_samples:
        if n_grid.max() > frame.max_n(s):
            raise ChartError(f"n grid exceeds the tube radius at s={s:.6g}")
        x, y = frame.chart(s, n_grid)
        vals = fv(np.asarray(x, float), np.asarray(y, float))
        floor = 64 * np.finfo(float).eps * fv.abs_bound(x, y)
        if np.any(np.abs(vals) <= floor):
            raise ChartError(f"V identically small at s={s:.6g} (below rounding floor)")
        logv = np.log(np.abs(vals))
        slope = np.polyfit(logn, logv, 1)[0]
        slopes.append(float(slope))
        raw.append((s, logv, float(np.sign(vals[0]))))
    slopes_arr = np.array(slopes)
    m = int(round(float(np.mean(slopes_arr))))
    integer = bool(np.max(np.abs(slopes_arr - m)) < slope_tol)
    if not integer and np.ptp(slopes_arr) >= slope_tol:
        raise ChartError(
            f"inconsistent multiplicity across s (slopes {slopes_arr.min():.3f}..{slopes_arr.max():.3f})"
        )
    expo = m if integer else float(np.mean(slopes_arr))
    resid = 0.0
    for s, logv, sg in raw:
        c = float(np.mean(logv - expo * logn))
        coeffs.append((float(s), sg * math.exp(c)))
        resid = max(resid, float(np.sqrt(np.mean((logv - expo * logn - c) ** 2))))
    rho = float(m) if integer else float(np.mean(slopes_arr))
    return MultiplicityEstimate(m if integer else int(math.floor(rho)), tuple(coeffs), resid,
                                tuple(slopes), integer, rho)


def frame_section(frame: CurvilinearFrame, sys: PlanarSystem, s: float) -> Section:
    """Section ``{s = const}`` whose parameter equals the chart coordinate ``n``."""
    p, q, p1, q1, _, _ = frame.orbit.derivs(s)
    normal = (-float(q1), float(p1))
    scale = math.hypot(*normal)
    return Section.transversal(
        sys, (float(p), float(q)), normal, scale=scale, extent=frame.max_n(s)
    )


@dataclass(frozen=True)
class IdentityCheck:
    max_residual: float
    rows: tuple  # (sigma, image, derivative, lhs, rhs, residual)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["sigma", "image", "derivative", "lhs", "rhs", "residual"])
            for r in self.rows:
                w.writerow([f"{v:.17g}" for v in r])


def verify_transition_identity(
    frame: CurvilinearFrame,
    sys: PlanarSystem,
    V,
    sigma_grid: Sequence[float],
    s0: float | None = None,
    s1: float | None = None,
    *,
    rel_tol: float = 1e-13,
    floor: float = 1e-300,
    settings: FlowSettings = DEFAULT_SETTINGS,
) -> IdentityCheck:
    """Check ``Vt(s1, Pi(sigma)) = Vt(s0, sigma) Pi'(sigma)`` on a grid.

    ``Pi`` and ``Pi'`` come from :func:`transition_map` between the sections
    ``s = s0`` and ``s = s1`` (defaults: the frame ends, or one period).
    """
    a, b = frame.s_range
    s0 = a if s0 is None else s0
    s1 = b if s1 is None else s1
    sec0 = frame_section(frame, sys, s0)
    sec1 = frame_section(frame, sys, s1)
    rows, worst = [], 0.0
    for sigma in sigma_grid:
        ms = transition_map(sys, sec0, sec1, float(sigma), rel_tol=rel_tol, settings=settings)
        lhs = float(tilde_v(frame, sys, V, s1, ms.image))
        rhs = float(tilde_v(frame, sys, V, s0, sigma)) * ms.derivative
        den = max(abs(lhs), abs(rhs), floor)
        res = abs(lhs - rhs) / den
        worst = max(worst, res)
        rows.append((float(sigma), ms.image, ms.derivative, lhs, rhs, res))
    return IdentityCheck(worst, tuple(rows))


def implicit_map_k0(lam: float, m1: float) -> float:
    """Integration constant of the implicit return map of the ellipse-cycle family (``m1 < -1``)."""
    if not m1 < -1:
        raise ValueError("closed-form constant requires m1 < -1")
    return math.exp(-2 * lam * m1 * math.pi)


def implicit_poincare_check(sigma: float, pi_value: float, params, k0: float) -> float:
    """Relative residual of the quadrature identity for the ellipse-cycle return map.

    Both sides are ``|u (u - 2 sqrt(m2))|^((1+m1)/2) / |u - sqrt(m2)|^m1``
    evaluated at ``u = Pi`` and ``u = sigma`` (the latter times ``k0``).
    """
    lam, m1, m2 = (float(v) for v in params)
    r = math.sqrt(m2)
    for name, u in (("sigma", sigma), ("pi_value", pi_value)):
        if not 0 < u < r:
            raise ValueError(f"{name}={u} outside (0, sqrt(m2))")

    def side(u):
        return abs(u * (u - 2 * r)) ** ((1 + m1) / 2) / abs(u - r) ** m1

    lhs, rhs = side(pi_value), k0 * side(sigma)
    return abs(lhs - rhs) / max(abs(lhs), abs(rhs))


def curvilinear_transition(
    frame: CurvilinearFrame,
    sys: PlanarSystem,
    n0: float,
    s0: float,
    s1: float,
    rtol: float = 1e-12,
    atol: float = 1e-300,
    dense: bool = False,
):
    """Integrate ``dn/ds = F`` and ``dw/ds = F_n w`` with scipy (DOP853).

    An integration route independent of the Cartesian kernel; returns the
    scipy solution whose final state is ``(n(s1), dn(s1)/dn0)``.
    """

    def rhs(s, z):
        ff = frame_fields(frame, sys, s, z[0])
        return [ff.f, ff.f_n * z[1]]

    sol = solve_ivp(rhs, (s0, s1), [n0, 1.0], method="DOP853", rtol=rtol, atol=atol,
                    dense_output=dense)
    if not sol.success:
        raise ChartError(f"curvilinear integration failed: {sol.message}")
    return sol


def propagation_check(
    frame: CurvilinearFrame,
    sys: PlanarSystem,
    V,
    n0: float,
    s_values: Sequence[float],
    rtol: float = 1e-12,
) -> float:
    """Max relative deviation of ``Vt(s, n(s)) / w(s)`` from its initial value.

    ``w = dn/dn0`` solves the variational equation ``w' = F_n w``; constancy of
    the ratio is the propagation law of ``Vt`` along ``dn/ds = F``.
    """
    s_values = np.asarray(s_values, float)
    s0 = float(s_values[0])
    sol = curvilinear_transition(frame, sys, n0, s0, float(s_values[-1]), rtol=rtol, dense=True)
    ref = float(tilde_v(frame, sys, V, s0, n0))
    worst = 0.0
    for s in s_values[1:]:
        n, w = sol.sol(s)
        val = float(tilde_v(frame, sys, V, s, n)) / w
        worst = max(worst, abs(val - ref) / abs(ref))
    return worst
