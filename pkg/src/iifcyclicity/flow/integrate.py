"""Trajectories, transition maps with variational derivatives, and orbit integrals.

All integrations go through the DOPRI5(4) kernel selected in ``_backend``.
The integrated state is ``[x, y, M11, M12, M21, M22, d]`` where ``M`` is the
fundamental matrix of the variational equation and ``d`` the running
integral of the divergence; cheaper runs advance only ``x, y``.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, replace
from functools import lru_cache
from typing import Sequence

import numpy as np

from ..errors import IIFError, IntegrationError
from ..system import PlanarSystem
from . import _backend
from ._pykernel import CAPTURED, DONE, EVENT, LEFT_BOX, MAX_STEPS, NONFINITE, UNDERFLOW

__all__ = [
    "FlowSettings",
    "Section",
    "Trajectory",
    "EventHit",
    "MapSample",
    "CycleData",
    "Beta1",
    "DivergentIntegralError",
    "integrate",
    "transition_map",
    "return_map",
    "characteristic_exponent",
    "cycle_data",
    "trace_homoclinic",
    "separatrix_quantity_beta1",
    "finite_difference_derivative",
    "write_map_csv",
    "saddle_eigen",
]

POLISH_TOL = 1e-12


class DivergentIntegralError(IIFError):
    """The divergence integral along a homoclinic loop diverges (strong saddle)."""


@dataclass(frozen=True)
class FlowSettings:
    """Integration limits shared by the flow routines.

    Attributes
    ----------
    box : float
        Trajectories stop when ``|x|`` or ``|y|`` exceeds this value.
    max_time : float
        Integration horizon for open-ended searches (returns, captures).
    atol_factor : float
        Absolute tolerance as a multiple of the relative tolerance.
    h_max : float
        Largest allowed step.
    chunk : int
        Accepted steps per kernel call before control returns to Python.
    kernel : str or None
        ``"cython"``, ``"python"`` or ``None`` for the default backend.
    """

    box: float = 10.0
    max_time: float = 1e4
    atol_factor: float = 1e-2
    h_max: float = math.inf
    chunk: int = 20000
    kernel: str | None = None


DEFAULT_SETTINGS = FlowSettings()


def _check_rtol(rel_tol: float):
    if not 1e-13 <= rel_tol <= 1e-3:
        raise ValueError(f"rel_tol {rel_tol} outside [1e-13, 1e-3]")


@lru_cache(maxsize=64)
def _compiled_field(sys: PlanarSystem, kernel_name: str):
    (px, py), (qx, qy) = sys.jacobian_polys
    ex, ey, c, off = [], [], [], [0]
    for poly in (sys.p, sys.q, px, py, qx, qy):
        for (i, j), coef in sorted(poly.terms.items()):
            ex.append(i)
            ey.append(j)
            c.append(float(coef))
        off.append(len(c))
    kern = _backend.get_kernel(kernel_name)
    return kern.make_field(ex, ey, c, off, max(sys.degree, 1))


@dataclass(frozen=True)
class Section:
    """Straight transversal section ``base + sigma * scale * half * direction``.

    ``half`` selects which side of ``base`` carries positive ``sigma``;
    ``extent`` bounds ``|sigma|`` for accepted crossings.
    """

    base: tuple
    direction: tuple
    scale: float = 1.0
    half: int = 1
    extent: float = math.inf

    def __post_init__(self):
        d = np.asarray(self.direction, dtype=float)
        nrm = float(np.hypot(d[0], d[1]))
        if not nrm > 0:
            raise ValueError("section direction must be nonzero")
        object.__setattr__(self, "direction", (float(d[0] / nrm), float(d[1] / nrm)))
        object.__setattr__(self, "base", (float(self.base[0]), float(self.base[1])))
        if self.half not in (1, -1):
            raise ValueError("half must be +1 or -1")
        if not self.scale > 0:
            raise ValueError("scale must be positive")

    @classmethod
    def transversal(cls, sys: PlanarSystem, base, direction=None, **kw) -> "Section":
        """Section at ``base``; ``direction`` defaults to the field normal.

        Raises ``ValueError`` when ``base`` is singular or the section is tangent.
        """
        if direction is None:
            fx, fy = sys.field(float(base[0]), float(base[1]))
            direction = (-fy, fx)
        sec = cls(tuple(base), tuple(direction), **kw)
        sec.normal(sys)
        return sec

    @property
    def unit(self) -> np.ndarray:
        return self.half * np.asarray(self.direction)

    def point(self, sigma: float) -> np.ndarray:
        return np.asarray(self.base) + sigma * self.scale * self.unit

    def param(self, z) -> float:
        return float(
            ((z[0] - self.base[0]) * self.unit[0] + (z[1] - self.base[1]) * self.unit[1])
            / self.scale
        )

    def normal(self, sys: PlanarSystem) -> np.ndarray:
        """Unit normal oriented along the flow at ``base``."""
        fx, fy = sys.field(*self.base)
        fn = math.hypot(fx, fy)
        if fn < 1e-12:
            raise ValueError(f"section base {self.base} is (nearly) singular")
        dx, dy = self.direction
        nx, ny = -dy, dx
        dot = nx * fx + ny * fy
        if abs(dot) < 1e-8 * fn:
            raise ValueError("section is tangent to the flow at its base")
        if dot < 0:
            nx, ny = -nx, -ny
        return np.array([nx, ny])

    def event_row(self, sys: PlanarSystem) -> np.ndarray:
        n = self.normal(sys)
        return np.array([n[0], n[1], -(n[0] * self.base[0] + n[1] * self.base[1])])


@dataclass(frozen=True)
class EventHit:
    t: float
    x: float
    y: float
    section_index: int
    sigma: float


@dataclass(frozen=True)
class Trajectory:
    """Sampled orbit ``(t, x, y)``; ``state`` has 7 columns in full mode."""

    t: np.ndarray
    state: np.ndarray
    tolerance: float
    events: tuple = ()
    status: str = "done"

    @property
    def x(self) -> np.ndarray:
        return self.state[:, 0]

    @property
    def y(self) -> np.ndarray:
        return self.state[:, 1]

    @property
    def full(self) -> bool:
        return self.state.shape[1] == 7

    @property
    def div_integral(self) -> np.ndarray | None:
        return self.state[:, 6] if self.full else None

    @property
    def samples(self) -> list[tuple[float, float, float]]:
        return [(float(a), float(b), float(c)) for a, b, c in zip(self.t, self.x, self.y)]

    def __len__(self):
        return len(self.t)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t", "x", "y"])
            for a, b, c in zip(self.t, self.x, self.y):
                w.writerow([f"{a:.17g}", f"{b:.17g}", f"{c:.17g}"])


@dataclass(frozen=True)
class MapSample:
    """One evaluation of a transition map and its derivative."""

    sigma: float
    image: float
    derivative: float
    time: float = math.nan
    div_integral: float = math.nan


def write_map_csv(samples: Sequence[MapSample], path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["sigma", "image", "derivative"])
        for s in samples:
            w.writerow([f"{s.sigma:.17g}", f"{s.image:.17g}", f"{s.derivative:.17g}"])


class _Runner:
    """Chunked driver around ``kernel.advance`` with event polishing."""

    def __init__(self, sys, rel_tol, settings, full):
        _check_rtol(rel_tol)
        self.sys = sys
        self.settings = settings
        self.kname = settings.kernel or _backend.BACKEND
        self.kern = _backend.get_kernel(self.kname)
        self.fld = _compiled_field(sys, self.kname)
        self.rtol = rel_tol
        self.atol = rel_tol * settings.atol_factor
        self.full = full

    def initial_step(self, z) -> float:
        fx, fy = self.sys.field(z[0], z[1])
        d1 = math.hypot(fx, fy)
        d0 = max(math.hypot(z[0], z[1]), 1e-3)
        if d1 == 0.0:
            return 1e-2
        return min(1e-2, 1e-3 * d0 / d1)

    def step(self, z, h) -> np.ndarray:
        out = np.zeros(7)
        out[:] = z
        self.kern.step(self.fld, z, h, self.full, out)
        return out

    def run(self, z0, t0, t_end, events=None, armed=None, cap=None, record=True, h0=None):
        """Advance until a terminal condition; returns a result dict."""
        z = np.zeros(7)
        z[: len(z0)] = z0
        ev = np.zeros((0, 3)) if events is None else np.ascontiguousarray(events, dtype=float)
        arm = np.zeros(len(ev), dtype=np.int8) if armed is None else armed
        capv = None if cap is None else cap
        h = h0 if h0 is not None else self.initial_step(z)
        zprev = np.zeros(7)
        t = t0
        chunks_t, chunks_z = [], []
        ncol = 7 if self.full else 2
        chunk = self.settings.chunk
        while True:
            rec = self.kern.new_record(chunk) if record else None
            status, t, h, nrec, ev_index, t_prev, h_last = self.kern.advance(
                self.fld, z, t, t_end, h, self.rtol, self.atol, self.settings.h_max,
                self.full, ev, arm, 1e-10, self.settings.box, capv, chunk, rec, zprev,
            )
            if record and nrec:
                chunks_t.append(np.array(rec[:nrec, 0]))
                chunks_z.append(np.array(rec[:nrec, 1 : 1 + ncol]))
            if status != MAX_STEPS:
                break
        return dict(
            status=status, t=t, z=z.copy(), h=h, ev_index=ev_index, t_prev=t_prev,
            h_last=h_last, zprev=zprev.copy(), armed=arm,
            ts=np.concatenate(chunks_t) if chunks_t else np.zeros(0),
            zs=np.concatenate(chunks_z) if chunks_z else np.zeros((0, ncol)),
        )

    def polish(self, zprev, h_last, gfun, dgfun):
        """Root of ``g(step(zprev, theta))`` for ``theta`` in ``(0, h_last]``.

        Safeguarded Newton on the step length with a bisection fallback.
        """
        lo, hi = 0.0, h_last
        glo = gfun(zprev)
        zhi = self.step(zprev, hi)
        ghi = gfun(zhi)
        if abs(ghi) <= POLISH_TOL:
            return hi, zhi
        if abs(glo) <= POLISH_TOL:
            return 0.0, zprev.copy()
        theta = hi * (-glo) / (ghi - glo) if ghi != glo else 0.5 * hi
        z = zhi
        for _ in range(100):
            z = self.step(zprev, theta)
            gv = gfun(z)
            if abs(gv) <= POLISH_TOL:
                break
            if (gv < 0) == (glo < 0):
                lo, glo = theta, gv
            else:
                hi, ghi = theta, gv
            if hi - lo <= 1e-15 * h_last:
                break
            fx, fy = self.sys.field(z[0], z[1])
            slope = dgfun(z, fx, fy)
            new = theta - gv / slope if slope != 0 else math.nan
            if not lo < new < hi:
                new = 0.5 * (lo + hi)
            theta = new
        return theta, z


def _status_error(status: int, what: str):
    if status == LEFT_BOX:
        return IntegrationError(f"orbit escaped region while {what}")
    if status == DONE:
        return IntegrationError(f"max time exceeded while {what}")
    if status == UNDERFLOW:
        return IntegrationError(f"step underflow near singular point while {what}")
    if status == NONFINITE:
        return IntegrationError(f"non-finite state while {what}")
    return IntegrationError(f"integration stopped (status {status}) while {what}")


def _initial_state(p0, full) -> np.ndarray:
    z = np.zeros(7)
    z[0], z[1] = float(p0[0]), float(p0[1])
    if full:
        z[2], z[5] = 1.0, 1.0
    return z


def integrate(
    sys: PlanarSystem,
    p0,
    t_end: float,
    rel_tol: float = 1e-10,
    events: Sequence[Section] | None = None,
    *,
    full: bool = False,
    settings: FlowSettings = DEFAULT_SETTINGS,
) -> Trajectory:
    """Integrate the field from ``p0`` over ``[0, t_end]``.

    Every crossing of each section (in the flow direction, inside the
    section extent) is located to ``|event function| < 1e-12`` and stored in
    ``Trajectory.events``.

    Raises
    ------
    IntegrationError
        On step underflow (typically near a singular point with nonzero
        residual) or non-finite states. Leaving the bounding box ends the
        trajectory with ``status="left box"``.
    """
    runner = _Runner(sys, rel_tol, settings, full)
    z = _initial_state(p0, full)
    secs = list(events or [])
    rows = np.array([s.event_row(sys) for s in secs]).reshape(-1, 3)
    armed = np.array(
        [1 if abs(r[0] * z[0] + r[1] * z[1] + r[2]) > 1e-10 else 0 for r in rows], dtype=np.int8
    )
    ncol = 7 if full else 2
    ts, zs = [np.array([0.0])], [z[:ncol].reshape(1, -1).copy()]
    hits = []
    t, h = 0.0, None
    status_name = "done"
    while True:
        res = runner.run(z[:ncol], t, t_end, rows, armed, record=True, h0=h)
        ts.append(res["ts"])
        zs.append(res["zs"])
        t, h, z = res["t"], res["h"], res["z"]
        st = res["status"]
        if st == EVENT:
            k = res["ev_index"]
            a, b, c = rows[k]
            theta, zh = runner.polish(
                res["zprev"], res["h_last"],
                lambda q: a * q[0] + b * q[1] + c,
                lambda q, fx, fy: a * fx + b * fy,
            )
            sig = secs[k].param(zh)
            if abs(sig) <= secs[k].extent:
                hits.append(EventHit(res["t_prev"] + theta, float(zh[0]), float(zh[1]), k, sig))
            continue
        if st == DONE:
            break
        if st == LEFT_BOX:
            status_name = "left box"
            break
        raise _status_error(st, "integrating")
    return Trajectory(np.concatenate(ts), np.concatenate(zs), rel_tol, tuple(hits), status_name)


def _find_crossing(runner, sys, z0, section: Section, t_max: float, what: str):
    """First valid crossing of ``section`` from state ``z0``; returns (t, state)."""
    row = section.event_row(sys)
    a, b, c = row
    armed = np.array([1 if abs(a * z0[0] + b * z0[1] + c) > 1e-10 else 0], dtype=np.int8)
    t, h, z = 0.0, None, z0
    ncol = 7 if runner.full else 2
    while True:
        res = runner.run(z[:ncol], t, t_max, row.reshape(1, 3), armed, record=False, h0=h)
        t, h, z = res["t"], res["h"], res["z"]
        if res["status"] != EVENT:
            raise _status_error(res["status"], what)
        theta, zh = runner.polish(
            res["zprev"], res["h_last"],
            lambda q: a * q[0] + b * q[1] + c,
            lambda q, fx, fy: a * fx + b * fy,
        )
        if abs(section.param(zh)) <= section.extent:
            return res["t_prev"] + theta, zh


def transition_map(
    sys: PlanarSystem,
    from_: Section,
    to: Section,
    sigma: float,
    *,
    rel_tol: float = 1e-12,
    settings: FlowSettings = DEFAULT_SETTINGS,
) -> MapSample:
    """Transition from ``from_`` to the first crossing of ``to``.

    The derivative comes from the variational equation: with ``M`` the
    fundamental matrix at the hit, ``w = M u`` the pushed section tangent and
    ``F`` the field there, the image derivative is the ``to``-coordinate of
    ``w - F (n.w)/(n.F)``.
    """
    from_.normal(sys)
    nto = to.normal(sys)
    runner = _Runner(sys, rel_tol, settings, True)
    z0 = _initial_state(from_.point(sigma), True)
    t_hit, zh = _find_crossing(runner, sys, z0, to, settings.max_time, "computing transition")
    M = np.array([[zh[2], zh[3]], [zh[4], zh[5]]])
    w = M @ (from_.unit * from_.scale)
    fx, fy = sys.field(zh[0], zh[1])
    F = np.array([fx, fy])
    wproj = w - F * (nto @ w) / (nto @ F)
    deriv = float(to.unit @ wproj / to.scale)
    return MapSample(float(sigma), to.param(zh), deriv, float(t_hit), float(zh[6]))


def return_map(sys: PlanarSystem, section: Section, sigma: float, **kw) -> MapSample:
    return transition_map(sys, section, section, sigma, **kw)


def finite_difference_derivative(
    sys: PlanarSystem, from_: Section, to: Section, sigma: float, step: float = 1e-5, **kw
) -> float:
    """Central difference of the transition image; a test oracle only."""
    up = transition_map(sys, from_, to, sigma + step, **kw).image
    dn = transition_map(sys, from_, to, sigma - step, **kw).image
    return (up - dn) / (2 * step)


@dataclass(frozen=True)
class CycleData:
    exponent: float
    period: float
    closure: float
    end: tuple


def cycle_data(
    sys: PlanarSystem,
    cycle_start,
    section: Section | None = None,
    *,
    rel_tol: float = 1e-12,
    closure_tol: float = 1e-5,
    settings: FlowSettings = DEFAULT_SETTINGS,
) -> CycleData:
    """Period, divergence integral and closure defect of the orbit through ``cycle_start``."""
    if section is None:
        section = Section.transversal(sys, cycle_start)
    runner = _Runner(sys, rel_tol, settings, True)
    z0 = _initial_state(cycle_start, True)
    try:
        t_hit, zh = _find_crossing(runner, sys, z0, section, settings.max_time, "closing orbit")
    except IntegrationError as exc:
        raise IntegrationError(f"not periodic: {exc}") from None
    closure = math.hypot(zh[0] - float(cycle_start[0]), zh[1] - float(cycle_start[1]))
    if closure > closure_tol:
        raise IntegrationError(f"not periodic: return misses start by {closure:.3g}")
    return CycleData(float(zh[6]), float(t_hit), closure, (float(zh[0]), float(zh[1])))


def characteristic_exponent(
    sys: PlanarSystem, cycle_start, section: Section | None = None, **kw
) -> float:
    """Integral of ``div X`` over one period of the cycle through ``cycle_start``."""
    return cycle_data(sys, cycle_start, section, **kw).exponent


def saddle_eigen(sys: PlanarSystem, saddle):
    """Float eigen-data ``(p0, lam, mu, v_unstable, v_stable)`` of a hyperbolic saddle."""
    loc = getattr(saddle, "location", saddle)
    p0 = np.array([float(loc[0]), float(loc[1])])
    J = sys.jacobian_float(*p0)
    vals, vecs = np.linalg.eig(J)
    if np.any(np.abs(vals.imag) > 1e-12) or not (vals.real.min() < 0 < vals.real.max()):
        raise ValueError("not a hyperbolic saddle")
    iu, is_ = int(np.argmax(vals.real)), int(np.argmin(vals.real))
    vu, vs = vecs[:, iu].real, vecs[:, is_].real
    return p0, float(vals[iu].real), float(vals[is_].real), vu / np.linalg.norm(vu), vs / np.linalg.norm(vs)


def trace_homoclinic(
    sys: PlanarSystem,
    saddle,
    offset: float,
    capture_radius: float,
    *,
    branch: int | None = None,
    rel_tol: float = 1e-11,
    settings: FlowSettings = DEFAULT_SETTINGS,
) -> Trajectory:
    """Follow the unstable separatrix until it returns to the saddle.

    Starts at ``saddle + offset * branch * v_u`` and stops on entering the
    capture disc while approaching along the stable eigendirection. Both
    branches are tried unless ``branch`` is given.

    Raises
    ------
    ValueError
        For a nonpositive offset (the start would be the singular point).
    IntegrationError
        "no return to saddle" when no branch comes back.
    """
    if not offset > 0:
        raise ValueError("offset must be positive: the start point would be the singular point")
    if not capture_radius > offset:
        raise ValueError("capture radius must exceed the offset")
    p0, lam, mu, vu, vs = saddle_eigen(sys, saddle)
    runner = _Runner(sys, rel_tol, settings, True)
    reasons = []
    for br in ([branch] if branch else [1, -1]):
        start = p0 + br * offset * vu
        z = _initial_state(start, True)
        cap = np.array([p0[0], p0[1], capture_radius, 0.0])
        res = runner.run(z[:7], 0.0, settings.max_time, cap=cap, record=True)
        if res["status"] != CAPTURED:
            reasons.append(f"branch {br}: {_status_error(res['status'], 'tracing').args[0]}")
            continue
        zc = res["z"]
        rel = zc[:2] - p0
        cosang = abs(rel @ vs) / np.linalg.norm(rel)
        if cosang < 0.9:
            reasons.append(f"branch {br}: captured off the stable direction (cos={cosang:.3f})")
            continue
        ts = np.concatenate([[0.0], res["ts"]])
        zs = np.vstack([z[:7].reshape(1, 7), res["zs"]])
        return Trajectory(ts, zs, rel_tol, (), "captured")
    raise IntegrationError("no return to saddle: " + "; ".join(reasons))


@dataclass(frozen=True)
class Beta1:
    """Divergence integral along a homoclinic loop with its error budget."""

    value: float
    truncation_error: float
    cut_radius: float
    core: float
    tail: float


def _cut_crossings(runner, loop: Trajectory, p0, r):
    d = np.hypot(loop.x - p0[0], loop.y - p0[1])
    outside = np.nonzero(d >= r)[0]
    if len(outside) == 0 or outside[0] == 0 or outside[-1] == len(d) - 1:
        raise ValueError(f"cut radius {r} not resolved by the loop samples")
    i_out, i_in = outside[0], outside[-1]

    def g(q):
        return math.hypot(q[0] - p0[0], q[1] - p0[1]) - r

    def dg(q, fx, fy):
        rr = math.hypot(q[0] - p0[0], q[1] - p0[1])
        return ((q[0] - p0[0]) * fx + (q[1] - p0[1]) * fy) / rr

    _, z_out = runner.polish(loop.state[i_out - 1].copy(), loop.t[i_out] - loop.t[i_out - 1], g, dg)
    # inbound crossing: g goes from + to -, polish -g
    _, z_in = runner.polish(
        loop.state[i_in].copy(), loop.t[i_in + 1] - loop.t[i_in], lambda q: -g(q),
        lambda q, fx, fy: -dg(q, fx, fy),
    )
    return z_out, z_in


def separatrix_quantity_beta1(
    sys: PlanarSystem,
    loop: Trajectory,
    saddle,
    cut_radius: float,
    *,
    div_tol: float = 1e-10,
    settings: FlowSettings = DEFAULT_SETTINGS,
) -> Beta1:
    """Integral of ``div X`` along the regular part of a homoclinic loop.

    The part within ``cut_radius`` of the saddle is replaced by the
    linearized tails ``grad(div)(p0) . (z - p0) / |eigenvalue|`` at both cut
    points. The truncation error is estimated by repeating the computation
    at twice (or half) the radius.

    Raises
    ------
    DivergentIntegralError
        "divergent: strong saddle" when ``|div X(p0)| > div_tol``.
    """
    p0, lam, mu, vu, vs = saddle_eigen(sys, saddle)
    div0 = sys.divergence_float(*p0)
    if abs(div0) > div_tol:
        raise DivergentIntegralError(f"divergent: strong saddle (div X(p0) = {div0:.6g})")
    if not loop.full:
        raise ValueError("loop must be traced in full mode (divergence integral)")
    gx = float(sys.divergence.diff("x").to_float()(*p0))
    gy = float(sys.divergence.diff("y").to_float()(*p0))
    runner = _Runner(sys, loop.tolerance, settings, True)

    def at(r):
        z_out, z_in = _cut_crossings(runner, loop, p0, r)
        core = z_in[6] - z_out[6]
        tail = (gx * (z_out[0] - p0[0]) + gy * (z_out[1] - p0[1])) / lam + (
            gx * (z_in[0] - p0[0]) + gy * (z_in[1] - p0[1])
        ) / abs(mu)
        return core, tail

    core, tail = at(cut_radius)
    value = core + tail
    dist = np.hypot(loop.x - p0[0], loop.y - p0[1])
    try:
        r2 = 2 * cut_radius if dist.max() > 4 * cut_radius else 0.5 * cut_radius
        c2, t2 = at(r2)
        err = abs(value - (c2 + t2)) / 3.0
    except ValueError:
        err = math.nan
    err += loop.tolerance * max(1.0, abs(core))
    return Beta1(float(value), float(err), float(cut_radius), float(core), float(tail))
