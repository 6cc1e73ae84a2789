"""Pure-Python Dormand-Prince 5(4) kernel.

Mirrors ``_ckernel.pyx`` operation by operation; used when the compiled
extension is unavailable or disabled.

State layout (``full`` mode): ``[x, y, m11, m12, m21, m22, d]`` where ``M``
solves the variational equation ``M' = DX M`` and ``d`` integrates ``div X``.
Without ``full`` only ``x, y`` are advanced.
"""
import math

import numpy as np

DONE, EVENT, LEFT_BOX, CAPTURED, MAX_STEPS, UNDERFLOW, NONFINITE = range(7)

A21 = 1.0 / 5.0
A31, A32 = 3.0 / 40.0, 9.0 / 40.0
A41, A42, A43 = 44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0
A51, A52, A53, A54 = 19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0
A61, A62, A63, A64, A65 = (
    9017.0 / 3168.0,
    -355.0 / 33.0,
    46732.0 / 5247.0,
    49.0 / 176.0,
    -5103.0 / 18656.0,
)
B1, B3, B4, B5, B6 = 35.0 / 384.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0
E1, E3, E4, E5, E6, E7 = (
    71.0 / 57600.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
)


class Field:
    """Flattened term lists of (P, Q, Px, Py, Qx, Qy)."""

    __slots__ = ("ex", "ey", "c", "off", "maxdeg")

    def __init__(self, ex, ey, c, off, maxdeg):
        self.ex = [int(v) for v in ex]
        self.ey = [int(v) for v in ey]
        self.c = [float(v) for v in c]
        self.off = [int(v) for v in off]
        self.maxdeg = int(maxdeg)


def _rhs(fld, z, full, out):
    x = z[0]
    y = z[1]
    n = fld.maxdeg
    xp = [1.0] * (n + 1)
    yp = [1.0] * (n + 1)
    for k in range(1, n + 1):
        xp[k] = xp[k - 1] * x
        yp[k] = yp[k - 1] * y
    ex, ey, c, off = fld.ex, fld.ey, fld.c, fld.off
    npoly = 6 if full else 2
    vals = [0.0] * 6
    for k in range(npoly):
        s = 0.0
        for t in range(off[k], off[k + 1]):
            s += c[t] * xp[ex[t]] * yp[ey[t]]
        vals[k] = s
    out[0] = vals[0]
    out[1] = vals[1]
    if full:
        px, py, qx, qy = vals[2], vals[3], vals[4], vals[5]
        out[2] = px * z[2] + py * z[4]
        out[3] = px * z[3] + py * z[5]
        out[4] = qx * z[2] + qy * z[4]
        out[5] = qx * z[3] + qy * z[5]
        out[6] = px + qy


def _stages(fld, z, h, full, nv, k1, k2, k3, k4, k5, k6, tmp):
    for i in range(nv):
        tmp[i] = z[i] + h * (A21 * k1[i])
    _rhs(fld, tmp, full, k2)
    for i in range(nv):
        tmp[i] = z[i] + h * (A31 * k1[i] + A32 * k2[i])
    _rhs(fld, tmp, full, k3)
    for i in range(nv):
        tmp[i] = z[i] + h * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i])
    _rhs(fld, tmp, full, k4)
    for i in range(nv):
        tmp[i] = z[i] + h * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i])
    _rhs(fld, tmp, full, k5)
    for i in range(nv):
        tmp[i] = z[i] + h * (
            A61 * k1[i] + A62 * k2[i] + A63 * k3[i] + A64 * k4[i] + A65 * k5[i]
        )
    _rhs(fld, tmp, full, k6)


def step(fld, z, h, full, out):
    """One unadaptive DOPRI5 step of size ``h`` from ``z`` into ``out``."""
    nv = 7 if full else 2
    k1 = [0.0] * 7
    k2 = [0.0] * 7
    k3 = [0.0] * 7
    k4 = [0.0] * 7
    k5 = [0.0] * 7
    k6 = [0.0] * 7
    tmp = [0.0] * 7
    zl = [float(v) for v in z]
    _rhs(fld, zl, full, k1)
    _stages(fld, zl, h, full, nv, k1, k2, k3, k4, k5, k6, tmp)
    for i in range(nv):
        out[i] = zl[i] + h * (B1 * k1[i] + B3 * k3[i] + B4 * k4[i] + B5 * k5[i] + B6 * k6[i])


def rhs(fld, z, full, out):
    zl = [float(v) for v in z]
    buf = [0.0] * 7
    _rhs(fld, zl, full, buf)
    for i in range(7 if full else 2):
        out[i] = buf[i]


def advance(fld, z, t0, t_end, h, rtol, atol, hmax, full, ev, armed, arm_eps, box, cap,
            max_steps, rec, zprev):
    """Adaptive integration from ``t0`` towards ``t_end``.

    ``z`` (length 7) is updated in place. Stops at ``t_end``, at the first
    armed upward zero crossing of a linear event ``a x + b y + c``, when
    leaving the box ``|x|, |y| <= box``, when entering the capture disc
    ``cap = [cx, cy, r, armed]`` or after ``max_steps`` accepted steps.
    ``zprev`` receives the state before the last accepted step.

    Returns ``(status, t, h_next, nrec, ev_index, t_prev, h_last)``.
    """
    nv = 7 if full else 2
    zl = [float(v) for v in z]
    k1 = [0.0] * 7
    k2 = [0.0] * 7
    k3 = [0.0] * 7
    k4 = [0.0] * 7
    k5 = [0.0] * 7
    k6 = [0.0] * 7
    k7 = [0.0] * 7
    tmp = [0.0] * 7
    znew = [0.0] * 7
    comp = [0.0] * 7
    compn = [0.0] * 7
    nev = len(ev)
    gold = [0.0] * nev
    for k in range(nev):
        gold[k] = ev[k][0] * zl[0] + ev[k][1] * zl[1] + ev[k][2]
    use_cap = cap is not None and cap[2] > 0.0
    t = t0
    nrec = 0
    naccept = 0
    status = DONE
    ev_index = -1
    t_prev = t0
    h_last = 0.0
    _rhs(fld, zl, full, k1)
    while True:
        if t >= t_end:
            status = DONE
            break
        if naccept >= max_steps:
            status = MAX_STEPS
            break
        if h > hmax:
            h = hmax
        last = False
        if t + h >= t_end:
            h = t_end - t
            last = True
        if h < 1e-14 * max(1.0, abs(t)):
            status = UNDERFLOW
            break
        _stages(fld, zl, h, full, nv, k1, k2, k3, k4, k5, k6, tmp)
        for i in range(nv):
            inc = h * (B1 * k1[i] + B3 * k3[i] + B4 * k4[i] + B5 * k5[i] + B6 * k6[i])
            yv = inc - comp[i]
            ts = zl[i] + yv
            compn[i] = (ts - zl[i]) - yv
            znew[i] = ts
        _rhs(fld, znew, full, k7)
        err = 0.0
        for i in range(nv):
            ei = h * (
                E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]
            )
            sc = atol + rtol * max(abs(zl[i]), abs(znew[i]))
            err += (ei / sc) * (ei / sc)
        err = math.sqrt(err / nv)
        if not math.isfinite(err):
            if h < 1e-10:
                status = NONFINITE
                break
            h *= 0.2
            continue
        if err > 1.0:
            h *= max(0.2, 0.9 * err ** -0.2)
            continue
        # accepted
        for i in range(nv):
            zprev[i] = zl[i]
        t_prev = t
        h_last = h
        t = t_end if last else t + h
        for i in range(nv):
            zl[i] = znew[i]
            comp[i] = compn[i]
            k1[i] = k7[i]
        naccept += 1
        if rec is not None:
            rec[nrec, 0] = t
            for i in range(nv):
                rec[nrec, 1 + i] = zl[i]
            nrec += 1
        fac = 5.0 if err == 0.0 else min(5.0, max(0.2, 0.9 * err ** -0.2))
        h *= fac
        if not (math.isfinite(zl[0]) and math.isfinite(zl[1])):
            status = NONFINITE
            break
        hit = False
        for k in range(nev):
            g = ev[k][0] * zl[0] + ev[k][1] * zl[1] + ev[k][2]
            if armed[k]:
                if gold[k] < 0.0 <= g:
                    ev_index = k
                    hit = True
            elif abs(g) > arm_eps:
                armed[k] = 1
            gold[k] = g
            if hit:
                break
        if hit:
            status = EVENT
            break
        if abs(zl[0]) > box or abs(zl[1]) > box:
            status = LEFT_BOX
            break
        if use_cap:
            dx = zl[0] - cap[0]
            dy = zl[1] - cap[1]
            dist = math.sqrt(dx * dx + dy * dy)
            if cap[3] > 0.0:
                if dist < cap[2]:
                    status = CAPTURED
                    break
            elif dist > 2.0 * cap[2]:
                cap[3] = 1.0
    for i in range(7):
        z[i] = zl[i]
    return status, t, h, nrec, ev_index, t_prev, h_last


def make_field(ex, ey, c, off, maxdeg):
    return Field(ex, ey, c, off, maxdeg)


def new_record(n):
    return np.zeros((n, 8), dtype=float)
