# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels: lattice vector fields and the adaptive RK5(4) loop.

Implements exactly the stepping logic of the pure-python loop in
``dynamics._rk45_generic`` (same tableau, same error norm, same step
controller), specialized to the two tagged fields so the whole inner
loop runs without touching the interpreter.
"""

from libc.math cimport fabs, fmax, fmin, pow, sqrt
from libc.stdlib cimport free, malloc

import numpy as np

cimport numpy as cnp

cnp.import_array()

DEF KIND_KT = 0
DEF KIND_DN = 1

cdef double _EPS = 2.220446049250313e-16
cdef double _MIN_FACTOR = 0.2
cdef double _MAX_FACTOR = 10.0
cdef double _SAFETY = 0.9

# Dormand-Prince 5(4) tableau, flattened rows.
cdef double A2[1]
cdef double A3[2]
cdef double A4[3]
cdef double A5[4]
cdef double A6[5]
cdef double A7[6]
cdef double ERR[7]
A2[0] = 1.0 / 5.0
A3[0] = 3.0 / 40.0; A3[1] = 9.0 / 40.0
A4[0] = 44.0 / 45.0; A4[1] = -56.0 / 15.0; A4[2] = 32.0 / 9.0
A5[0] = 19372.0 / 6561.0; A5[1] = -25360.0 / 2187.0
A5[2] = 64448.0 / 6561.0; A5[3] = -212.0 / 729.0
A6[0] = 9017.0 / 3168.0; A6[1] = -355.0 / 33.0; A6[2] = 46732.0 / 5247.0
A6[3] = 49.0 / 176.0; A6[4] = -5103.0 / 18656.0
A7[0] = 35.0 / 384.0; A7[1] = 0.0; A7[2] = 500.0 / 1113.0
A7[3] = 125.0 / 192.0; A7[4] = -2187.0 / 6784.0; A7[5] = 11.0 / 84.0
ERR[0] = 71.0 / 57600.0; ERR[1] = 0.0; ERR[2] = -71.0 / 16695.0
ERR[3] = 71.0 / 1920.0; ERR[4] = -17253.0 / 339200.0
ERR[5] = 22.0 / 525.0; ERR[6] = -1.0 / 40.0


cdef void _dn_rhs(const double* x, double* out, int n) noexcept nogil:
    # x = (a_1..a_n, b_1..b_n)
    cdef const double* a = x
    cdef const double* b = x + n
    cdef double* da = out
    cdef double* db = out + n
    cdef int i
    for i in range(n - 1):
        da[i] = a[i] * (b[i + 1] - b[i])
    da[n - 1] = -a[n - 1] * (b[n - 2] + b[n - 1])
    db[0] = 2.0 * a[0] * a[0]
    for i in range(1, n - 2):
        db[i] = 2.0 * (a[i] * a[i] - a[i - 1] * a[i - 1])
    db[n - 2] = 2.0 * (a[n - 1] * a[n - 1] + a[n - 2] * a[n - 2]
                       - a[n - 3] * a[n - 3])
    db[n - 1] = 2.0 * (a[n - 1] * a[n - 1] - a[n - 2] * a[n - 2])


cdef void _kt_rhs(const double* x, double* out, int n) noexcept nogil:
    # x = (a_1..a_{n+1}, b_1..b_n)
    cdef const double* a = x
    cdef const double* b = x + n + 1
    cdef double* da = out
    cdef double* db = out + n + 1
    cdef double an1 = a[n]
    cdef double an1sq = an1 * an1
    cdef int i
    for i in range(n - 1):
        da[i] = a[i] * (b[i + 1] - b[i])
    da[n - 1] = -a[n - 1] * (b[n - 2] + b[n - 1])
    da[n] = an1 * b[0]
    db[0] = 2.0 * a[0] * a[0] - an1sq - 4.0 * an1sq * an1sq
    for i in range(1, n - 2):
        db[i] = 2.0 * (a[i] * a[i] - a[i - 1] * a[i - 1])
    db[n - 2] = 2.0 * (a[n - 1] * a[n - 1] + a[n - 2] * a[n - 2]
                       - a[n - 3] * a[n - 3])
    db[n - 1] = 2.0 * (a[n - 1] * a[n - 1] - a[n - 2] * a[n - 2])


cdef void _eval(int kind, const double* x, double* out, int m) noexcept nogil:
    if kind == KIND_KT:
        _kt_rhs(x, out, (m - 1) // 2)
    else:
        _dn_rhs(x, out, m // 2)


def rhs(int kind, cnp.ndarray[cnp.float64_t, ndim=1] x):
    """Single evaluation of a tagged vector field (for parity tests)."""
    cdef int m = x.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out = np.empty(m)
    _eval(kind, <const double*> x.data, <double*> out.data, m)
    return out


def rk45_lattice(int kind, cnp.ndarray[cnp.float64_t, ndim=1] x0,
                 double t_end, double h0, double rtol, double atol,
                 long max_steps, long stride):
    """Adaptive RK5(4) over a tagged field.

    Returns (times, states, accepted, rejected, code) with code 0 on
    success, 1 on step-budget exhaustion, 2 on step-size underflow; the
    sampled arrays cover whatever was reached.
    """
    cdef int m = x0.shape[0]
    cdef double* work = <double*> malloc((7 * m + 3 * m) * sizeof(double))
    if work == NULL:
        raise MemoryError
    cdef double* k = work            # 7 stage slopes, row-major
    cdef double* y = work + 7 * m
    cdef double* ys = work + 8 * m
    cdef double* ynew = work + 9 * m

    cdef long cap = 1024
    times_buf = np.empty(cap)
    states_buf = np.empty((cap, m))
    cdef double[:] times = times_buf
    cdef double[:, :] states = states_buf
    cdef long count = 0

    cdef double t = 0.0
    cdef double h = h0
    cdef double remaining, err, scale, acc, factor, v
    cdef long accepted = 0, rejected = 0, attempts = 0
    cdef int code = 0, last, i, s, j

    for i in range(m):
        y[i] = x0[i]
    _eval(kind, y, k, m)
    times[0] = 0.0
    for i in range(m):
        states[0, i] = y[i]
    count = 1

    while t < t_end:
        attempts += 1
        if attempts > max_steps:
            code = 1
            break
        if h < 16.0 * _EPS * fmax(1.0, t):
            code = 2
            break
        remaining = t_end - t
        last = h >= remaining
        if last:
            h = remaining
        # stages 2..7 (stage 7 node is the order-5 solution)
        for s in range(1, 7):
            for i in range(m):
                acc = 0.0
                if s == 1:
                    acc = A2[0] * k[i]
                elif s == 2:
                    for j in range(2):
                        acc += A3[j] * k[j * m + i]
                elif s == 3:
                    for j in range(3):
                        acc += A4[j] * k[j * m + i]
                elif s == 4:
                    for j in range(4):
                        acc += A5[j] * k[j * m + i]
                elif s == 5:
                    for j in range(5):
                        acc += A6[j] * k[j * m + i]
                else:
                    for j in range(6):
                        acc += A7[j] * k[j * m + i]
                ys[i] = y[i] + h * acc
            _eval(kind, ys, k + s * m, m)
        for i in range(m):
            ynew[i] = ys[i]
        # weighted RMS error norm, per unit step (local error ~ C h^5,
        # so the ratio goes as h^4)
        err = 0.0
        for i in range(m):
            acc = 0.0
            for j in range(7):
                acc += ERR[j] * k[j * m + i]
            scale = atol + rtol * fmax(fabs(y[i]), fabs(ynew[i]))
            v = h * acc / scale
            err += v * v
        err = sqrt(err / m) / h
        if err <= 1.0:
            accepted += 1
            t = t_end if last else t + h
            for i in range(m):
                y[i] = ynew[i]
                k[i] = k[6 * m + i]
            if accepted % stride == 0 or t >= t_end:
                if count == cap:
                    cap *= 2
                    times_buf = np.resize(times_buf, cap)
                    new_states = np.empty((cap, m))
                    new_states[:count] = states_buf[:count]
                    states_buf = new_states
                    times = times_buf
                    states = states_buf
                times[count] = t
                for i in range(m):
                    states[count, i] = y[i]
                count += 1
            if err == 0.0:
                factor = _MAX_FACTOR
            else:
                factor = fmin(_MAX_FACTOR,
                              fmax(_MIN_FACTOR, _SAFETY * pow(err, -0.25)))
            h *= factor
        else:
            rejected += 1
            h *= fmax(_MIN_FACTOR, _SAFETY * pow(err, -0.25))

    free(work)
    return (times_buf[:count].copy(), states_buf[:count].copy(),
            accepted, rejected, code)
