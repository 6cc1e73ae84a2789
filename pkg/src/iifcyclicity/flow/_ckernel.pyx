# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled Dormand-Prince 5(4) kernel; same contract as ``_pykernel``."""
import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, fabs, pow, isfinite

cnp.import_array()

cdef enum:
    NV = 7

cdef int DONE = 0, EVENT = 1, LEFT_BOX = 2, CAPTURED = 3, MAX_STEPS = 4, UNDERFLOW = 5, NONFINITE = 6

cdef double A21 = 1.0 / 5.0
cdef double A31 = 3.0 / 40.0, A32 = 9.0 / 40.0
cdef double A41 = 44.0 / 45.0, A42 = -56.0 / 15.0, A43 = 32.0 / 9.0
cdef double A51 = 19372.0 / 6561.0, A52 = -25360.0 / 2187.0, A53 = 64448.0 / 6561.0, A54 = -212.0 / 729.0
cdef double A61 = 9017.0 / 3168.0, A62 = -355.0 / 33.0, A63 = 46732.0 / 5247.0
cdef double A64 = 49.0 / 176.0, A65 = -5103.0 / 18656.0
cdef double B1 = 35.0 / 384.0, B3 = 500.0 / 1113.0, B4 = 125.0 / 192.0
cdef double B5 = -2187.0 / 6784.0, B6 = 11.0 / 84.0
cdef double E1 = 71.0 / 57600.0, E3 = -71.0 / 16695.0, E4 = 71.0 / 1920.0
cdef double E5 = -17253.0 / 339200.0, E6 = 22.0 / 525.0, E7 = -1.0 / 40.0


cdef class Field:
    cdef public object ex_arr, ey_arr, c_arr, off_arr
    cdef long[::1] ex
    cdef long[::1] ey
    cdef double[::1] c
    cdef long[::1] off
    cdef public int maxdeg
    cdef double xp[65]
    cdef double yp[65]

    def __init__(self, ex, ey, c, off, maxdeg):
        if maxdeg > 64:
            raise ValueError("degree above 64 not supported by the compiled kernel")
        self.ex_arr = np.ascontiguousarray(ex, dtype=np.int_)
        self.ey_arr = np.ascontiguousarray(ey, dtype=np.int_)
        self.c_arr = np.ascontiguousarray(c, dtype=np.float64)
        self.off_arr = np.ascontiguousarray(off, dtype=np.int_)
        self.ex = self.ex_arr
        self.ey = self.ey_arr
        self.c = self.c_arr
        self.off = self.off_arr
        self.maxdeg = maxdeg


cdef inline void _rhs(Field fld, double* z, bint full, double* out) noexcept:
    cdef double x = z[0], y = z[1]
    cdef int n = fld.maxdeg, k, npoly
    cdef long t
    cdef double s
    cdef double vals[6]
    fld.xp[0] = 1.0
    fld.yp[0] = 1.0
    for k in range(1, n + 1):
        fld.xp[k] = fld.xp[k - 1] * x
        fld.yp[k] = fld.yp[k - 1] * y
    npoly = 6 if full else 2
    for k in range(6):
        vals[k] = 0.0
    for k in range(npoly):
        s = 0.0
        for t in range(fld.off[k], fld.off[k + 1]):
            s += fld.c[t] * fld.xp[fld.ex[t]] * fld.yp[fld.ey[t]]
        vals[k] = s
    out[0] = vals[0]
    out[1] = vals[1]
    if full:
        out[2] = vals[2] * z[2] + vals[3] * z[4]
        out[3] = vals[2] * z[3] + vals[3] * z[5]
        out[4] = vals[4] * z[2] + vals[5] * z[4]
        out[5] = vals[4] * z[3] + vals[5] * z[5]
        out[6] = vals[2] + vals[5]


cdef inline void _stages(Field fld, double* z, double h, bint full, int nv, double* k1,
                         double* k2, double* k3, double* k4, double* k5, double* k6,
                         double* tmp) noexcept:
    cdef int i
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
        tmp[i] = z[i] + h * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i] + A64 * k4[i] + A65 * k5[i])
    _rhs(fld, tmp, full, k6)


def step(Field fld, z, double h, bint full, out):
    """One unadaptive DOPRI5 step of size ``h`` from ``z`` into ``out``."""
    cdef double zl[NV]
    cdef double k1[NV]
    cdef double k2[NV]
    cdef double k3[NV]
    cdef double k4[NV]
    cdef double k5[NV]
    cdef double k6[NV]
    cdef double tmp[NV]
    cdef int i, nv = 7 if full else 2
    for i in range(NV):
        zl[i] = z[i] if i < len(z) else 0.0
        k1[i] = 0.0
    _rhs(fld, zl, full, k1)
    _stages(fld, zl, h, full, nv, k1, k2, k3, k4, k5, k6, tmp)
    for i in range(nv):
        out[i] = zl[i] + h * (B1 * k1[i] + B3 * k3[i] + B4 * k4[i] + B5 * k5[i] + B6 * k6[i])


def rhs(Field fld, z, bint full, out):
    cdef double zl[NV]
    cdef double buf[NV]
    cdef int i
    for i in range(NV):
        zl[i] = z[i] if i < len(z) else 0.0
        buf[i] = 0.0
    _rhs(fld, zl, full, buf)
    for i in range(7 if full else 2):
        out[i] = buf[i]


def advance(Field fld, double[::1] z, double t0, double t_end, double h, double rtol,
            double atol, double hmax, bint full, double[:, ::1] ev, signed char[::1] armed,
            double arm_eps, double box, cap, long max_steps, rec, double[::1] zprev):
    """Adaptive integration; see ``_pykernel.advance`` for the contract."""
    cdef int nv = 7 if full else 2
    cdef double zl[NV]
    cdef double k1[NV]
    cdef double k2[NV]
    cdef double k3[NV]
    cdef double k4[NV]
    cdef double k5[NV]
    cdef double k6[NV]
    cdef double k7[NV]
    cdef double tmp[NV]
    cdef double znew[NV]
    cdef double comp[NV]
    cdef double compn[NV]
    cdef int i, k, status = DONE, ev_index = -1
    cdef int nev = ev.shape[0]
    cdef double gold[64]
    cdef double g, t = t0, t_prev = t0, h_last = 0.0, err, ei, sc, inc, yv, ts, fac
    cdef double dx, dy, dist
    cdef long naccept = 0, nrec = 0
    cdef bint last, hit
    cdef bint use_cap = False
    cdef double[::1] capv
    cdef double[:, ::1] recv
    cdef bint use_rec = rec is not None
    if nev > 64:
        raise ValueError("at most 64 events")
    if cap is not None:
        capv = cap
        use_cap = capv[2] > 0.0
    if use_rec:
        recv = rec
    for i in range(NV):
        zl[i] = z[i]
        comp[i] = 0.0
        k1[i] = 0.0
        k7[i] = 0.0
    for k in range(nev):
        gold[k] = ev[k, 0] * zl[0] + ev[k, 1] * zl[1] + ev[k, 2]
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
        if h < 1e-14 * max(1.0, fabs(t)):
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
            ei = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i])
            sc = atol + rtol * max(fabs(zl[i]), fabs(znew[i]))
            err += (ei / sc) * (ei / sc)
        err = sqrt(err / nv)
        if not isfinite(err):
            if h < 1e-10:
                status = NONFINITE
                break
            h *= 0.2
            continue
        if err > 1.0:
            h *= max(0.2, 0.9 * pow(err, -0.2))
            continue
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
        if use_rec:
            recv[nrec, 0] = t
            for i in range(nv):
                recv[nrec, 1 + i] = zl[i]
            nrec += 1
        if err == 0.0:
            fac = 5.0
        else:
            fac = min(5.0, max(0.2, 0.9 * pow(err, -0.2)))
        h *= fac
        if not (isfinite(zl[0]) and isfinite(zl[1])):
            status = NONFINITE
            break
        hit = False
        for k in range(nev):
            g = ev[k, 0] * zl[0] + ev[k, 1] * zl[1] + ev[k, 2]
            if armed[k]:
                if gold[k] < 0.0 and 0.0 <= g:
                    ev_index = k
                    hit = True
            elif fabs(g) > arm_eps:
                armed[k] = 1
            gold[k] = g
            if hit:
                break
        if hit:
            status = EVENT
            break
        if fabs(zl[0]) > box or fabs(zl[1]) > box:
            status = LEFT_BOX
            break
        if use_cap:
            dx = zl[0] - capv[0]
            dy = zl[1] - capv[1]
            dist = sqrt(dx * dx + dy * dy)
            if capv[3] > 0.0:
                if dist < capv[2]:
                    status = CAPTURED
                    break
            elif dist > 2.0 * capv[2]:
                capv[3] = 1.0
    for i in range(NV):
        z[i] = zl[i]
    return status, t, h, nrec, ev_index, t_prev, h_last


def make_field(ex, ey, c, off, maxdeg):
    return Field(ex, ey, c, off, maxdeg)


def new_record(n):
    return np.zeros((n, 8), dtype=np.float64)
