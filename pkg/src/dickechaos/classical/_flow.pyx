# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled DOP853 kernels for the classical flow.

The stepper follows scipy's DOP853 implementation step for step (same
tableau, initial-step heuristic, error norm and step-size controller), so
the compiled and fallback backends produce the same trajectories up to
floating-point reassociation.  The right-hand side is the H_cl flow,
optionally extended by its linearisation acting on a tangent vector.
"""

from libc.math cimport sqrt, fabs, pow, nextafter, INFINITY, NAN, log, isnan

import numpy as np

from ._tableau import A as _PA, B as _PB, C as _PC, E3 as _PE3, E5 as _PE5, D as _PD

cdef enum:
    NS = 12       # stages of the main method
    NX = 16       # stages including the dense-output extras
    NI = 7        # interpolator power
    NMAX = 8      # state dimension with tangent vector

cdef double TA[NX][NX]
cdef double TB[NS]
cdef double TC[NX]
cdef double TE3[NS + 1]
cdef double TE5[NS + 1]
cdef double TD[NI - 3][NX]

cdef int _i, _j
for _i in range(NX):
    TC[_i] = _PC[_i]
    for _j in range(NX):
        TA[_i][_j] = _PA[_i][_j]
for _i in range(NS):
    TB[_i] = _PB[_i]
for _i in range(NS + 1):
    TE3[_i] = _PE3[_i]
    TE5[_i] = _PE5[_i]
for _i in range(NI - 3):
    for _j in range(NX):
        TD[_i][_j] = _PD[_i][_j]

cdef double SAFETY = 0.9
cdef double MIN_FACTOR = 0.2
cdef double MAX_FACTOR = 10.0
cdef double ERR_EXP = -1.0 / 8.0
cdef double EPS = 2.220446049250313e-16

STATUS_OK = 0
STATUS_SMALL_STEP = -1
STATUS_MAX_STEPS = -2


cdef struct Flow:
    double w2
    double Om
    double O2
    double c
    double k


cdef struct Solver:
    int n
    int nfev
    double t
    double t_old
    double t_bound
    double direction
    double h_abs
    double h_prev
    double rtol
    double atol
    double y[NMAX]
    double y_old[NMAX]
    double f[NMAX]
    double K[NX][NMAX]


cdef int rhs(Flow* p, double* y, double* out, int n) nogil:
    """Flow (and tangent flow for n == 8); returns 1 outside the domain."""
    cdef double q1 = y[0], p1 = y[1], q2 = y[2], p2 = y[3]
    cdef double x = 1.0 - p.k * (p.O2 * q2 * q2 + p2 * p2 - p.Om)
    cdef double s, s3, ck, j12, j13, j20, j22, j23, j30, j32, j33
    if not x > 0.0:
        return 1
    s = sqrt(x)
    ck = p.c * p.k
    out[0] = p1
    out[1] = -(p.w2 * q1 + p.c * q2 * s)
    out[2] = p2 - ck * q1 * q2 * p2 / s
    out[3] = -(p.O2 * q2 + p.c * q1 * (s - p.k * p.O2 * q2 * q2 / s))
    if n == 8:
        s3 = s * s * s
        j12 = -p.c * (s - p.k * p.O2 * q2 * q2 / s)
        j13 = ck * q2 * p2 / s
        j20 = -ck * q2 * p2 / s
        j22 = -ck * q1 * p2 * (1.0 / s + p.k * p.O2 * q2 * q2 / s3)
        j23 = 1.0 - ck * q1 * q2 * (1.0 / s + p.k * p2 * p2 / s3)
        j30 = -p.c * s + ck * p.O2 * q2 * q2 / s
        j32 = -p.O2 + ck * p.O2 * q1 * (3.0 * q2 / s + p.k * p.O2 * q2 * q2 * q2 / s3)
        j33 = ck * q1 * p2 / s + ck * p.k * p.O2 * q1 * q2 * q2 * p2 / s3
        out[4] = y[5]
        out[5] = -p.w2 * y[4] + j12 * y[6] + j13 * y[7]
        out[6] = j20 * y[4] + j22 * y[6] + j23 * y[7]
        out[7] = j30 * y[4] + j32 * y[6] + j33 * y[7]
    return 0


cdef inline double rms(double* v, int n) nogil:
    cdef double acc = 0.0
    cdef int i
    for i in range(n):
        acc += v[i] * v[i]
    return sqrt(acc / n)


cdef int solver_init(Solver* S, Flow* p, double t0, double* y0, double t_bound,
                     int n, double rtol, double atol) nogil:
    cdef int i
    cdef double scale, d0, d1, d2, h0, h1, interval
    cdef double tmp[NMAX]
    cdef double y1[NMAX]
    cdef double f1[NMAX]
    S.n = n
    S.nfev = 0
    S.t = t0
    S.t_old = t0
    S.t_bound = t_bound
    S.direction = 1.0 if t_bound >= t0 else -1.0
    S.rtol = rtol
    S.atol = atol
    S.h_prev = 0.0
    for i in range(n):
        S.y[i] = y0[i]
    if rhs(p, S.y, S.f, n):
        return 1
    S.nfev += 1
    interval = fabs(t_bound - t0)
    if interval == 0.0:
        S.h_abs = 0.0
        return 0
    for i in range(n):
        scale = atol + fabs(S.y[i]) * rtol
        tmp[i] = S.y[i] / scale
    d0 = rms(tmp, n)
    for i in range(n):
        scale = atol + fabs(S.y[i]) * rtol
        tmp[i] = S.f[i] / scale
    d1 = rms(tmp, n)
    if d0 < 1e-5 or d1 < 1e-5:
        h0 = 1e-6
    else:
        h0 = 0.01 * d0 / d1
    if h0 > interval:
        h0 = interval
    for i in range(n):
        y1[i] = S.y[i] + h0 * S.direction * S.f[i]
    S.nfev += 1
    if rhs(p, y1, f1, n):
        # a probe outside the domain is a NaN derivative to the reference
        # stepper, and max(d1, nan) there evaluates to d1
        d2 = NAN
    else:
        for i in range(n):
            scale = atol + fabs(S.y[i]) * rtol
            tmp[i] = (f1[i] - S.f[i]) / scale
        d2 = rms(tmp, n) / h0
    if d1 <= 1e-15 and d2 <= 1e-15:
        h1 = 1e-6 if 1e-6 > h0 * 1e-3 else h0 * 1e-3
    else:
        h1 = pow(0.01 / (d2 if d2 > d1 else d1), 1.0 / 8.0)
    S.h_abs = 100.0 * h0
    if h1 < S.h_abs:
        S.h_abs = h1
    if interval < S.h_abs:
        S.h_abs = interval
    return 0


cdef int solver_step(Solver* S, Flow* p) nogil:
    """One accepted step; returns 0, or -1 when the step size underflows."""
    cdef int n = S.n
    cdef int i, s, j, bad
    cdef double t = S.t
    cdef double min_step = 10.0 * fabs(nextafter(t, S.direction * INFINITY) - t)
    cdef double h_abs = S.h_abs
    cdef double h, t_new, acc, scale, e5, e3, n5, n3, err, factor, a, b
    cdef bint accepted = False, rejected = False
    cdef double ys[NMAX]
    cdef double y_new[NMAX]
    if h_abs < min_step:
        h_abs = min_step
    while not accepted:
        if h_abs < min_step:
            return -1
        h = h_abs * S.direction
        t_new = t + h
        if S.direction * (t_new - S.t_bound) > 0:
            t_new = S.t_bound
        h = t_new - t
        h_abs = fabs(h)
        bad = 0
        for i in range(n):
            S.K[0][i] = S.f[i]
        for s in range(1, NS):
            for i in range(n):
                acc = 0.0
                for j in range(s):
                    acc += S.K[j][i] * TA[s][j]
                ys[i] = S.y[i] + acc * h
            if rhs(p, ys, S.K[s], n):
                bad = 1
                break
            S.nfev += 1
        if not bad:
            for i in range(n):
                acc = 0.0
                for j in range(NS):
                    acc += S.K[j][i] * TB[j]
                y_new[i] = S.y[i] + h * acc
            if rhs(p, y_new, S.K[NS], n):
                bad = 1
            else:
                S.nfev += 1
        if bad:
            err = NAN
        else:
            n5 = 0.0
            n3 = 0.0
            for i in range(n):
                a = fabs(S.y[i])
                b = fabs(y_new[i])
                scale = S.atol + (a if a > b else b) * S.rtol
                e5 = 0.0
                e3 = 0.0
                for j in range(NS + 1):
                    e5 += S.K[j][i] * TE5[j]
                    e3 += S.K[j][i] * TE3[j]
                e5 /= scale
                e3 /= scale
                n5 += e5 * e5
                n3 += e3 * e3
            if n5 == 0.0 and n3 == 0.0:
                err = 0.0
            else:
                err = h_abs * n5 / sqrt((n5 + 0.01 * n3) * n)
        if err < 1.0:
            if err == 0.0:
                factor = MAX_FACTOR
            else:
                factor = SAFETY * pow(err, ERR_EXP)
                if factor > MAX_FACTOR:
                    factor = MAX_FACTOR
            if rejected and factor > 1.0:
                factor = 1.0
            h_abs *= factor
            accepted = True
        else:
            if isnan(err):
                factor = MIN_FACTOR
            else:
                factor = SAFETY * pow(err, ERR_EXP)
                if factor < MIN_FACTOR:
                    factor = MIN_FACTOR
            h_abs *= factor
            rejected = True
    S.h_prev = h
    S.t_old = t
    S.t = t_new
    S.h_abs = h_abs
    for i in range(n):
        S.y_old[i] = S.y[i]
        S.y[i] = y_new[i]
        S.f[i] = S.K[NS][i]
    return 0


cdef int dense_coeffs(Solver* S, Flow* p, double F[NI][NMAX]) nogil:
    """Interpolant of the last step; returns 1 if an extra stage leaves the domain."""
    cdef int n = S.n
    cdef double h = S.h_prev
    cdef int i, s, j
    cdef double acc, dy
    cdef double ys[NMAX]
    for s in range(NS + 1, NX):
        for i in range(n):
            acc = 0.0
            for j in range(s):
                acc += S.K[j][i] * TA[s][j]
            ys[i] = S.y_old[i] + acc * h
        if rhs(p, ys, S.K[s], n):
            return 1
        S.nfev += 1
    for i in range(n):
        dy = S.y[i] - S.y_old[i]
        F[0][i] = dy
        F[1][i] = h * S.K[0][i] - dy
        F[2][i] = 2.0 * dy - h * (S.f[i] + S.K[0][i])
        for s in range(NI - 3):
            acc = 0.0
            for j in range(NX):
                acc += TD[s][j] * S.K[j][i]
            F[3 + s][i] = h * acc
    return 0


cdef void dense_eval_local(Solver* S, double F[NI][NMAX], double u, double* out) nogil:
    """Interpolant at t_old + u; taking the offset avoids cancellation in t - t_old."""
    cdef int n = S.n
    cdef double x = u / S.h_prev
    cdef int i, r
    for i in range(n):
        out[i] = 0.0
    for r in range(NI):
        for i in range(n):
            out[i] += F[NI - 1 - r][i]
            if r % 2 == 0:
                out[i] *= x
            else:
                out[i] *= 1.0 - x
    for i in range(n):
        out[i] += S.y_old[i]


cdef void dense_eval(Solver* S, double F[NI][NMAX], double t, double* out) nogil:
    dense_eval_local(S, F, t - S.t_old, out)


cdef Flow make_flow(params):
    cdef Flow f
    f.w2 = params[0] * params[0]
    f.Om = params[1]
    f.O2 = params[1] * params[1]
    f.c = params[2]
    f.k = params[3]
    return f


def integrate(y0, double t0, double t_end, t_eval, params, double rtol, double atol,
              long max_steps=50_000_000):
    """Integrate from t0 to t_end, sampling the dense output at ``t_eval``.

    ``t_eval`` must be ordered along the direction of integration.  Returns
    ``(samples, y_final, nfev, nsteps, status)``.
    """
    cdef Flow p = make_flow(params)
    cdef Solver S
    cdef double y0c[NMAX]
    cdef double F[NI][NMAX]
    cdef double buf[NMAX]
    cdef int n = len(y0)
    cdef int i, status = 0
    cdef long nsteps = 0
    cdef Py_ssize_t k = 0, m
    te = np.ascontiguousarray(t_eval, dtype=np.float64)
    cdef double[::1] tv = te
    m = tv.shape[0]
    out = np.empty((m, n))
    cdef double[:, ::1] Y = out
    for i in range(n):
        y0c[i] = y0[i]
    if solver_init(&S, &p, t0, y0c, t_end, n, rtol, atol):
        raise ValueError("initial point outside the Holstein-Primakoff domain")
    with nogil:
        # samples at the start time
        while k < m and tv[k] == t0:
            for i in range(n):
                Y[k, i] = y0c[i]
            k += 1
        while S.direction * (S.t - t_end) < 0:
            if nsteps >= max_steps:
                status = -2
                break
            if solver_step(&S, &p):
                status = -1
                break
            nsteps += 1
            if k < m and S.direction * (tv[k] - S.t) <= 0:
                if dense_coeffs(&S, &p, F):
                    status = -1
                    break
                while k < m and S.direction * (tv[k] - S.t) <= 0:
                    dense_eval(&S, F, tv[k], buf)
                    for i in range(n):
                        Y[k, i] = buf[i]
                    k += 1
    yf = np.array([S.y[i] for i in range(n)])
    return out[:k], yf, S.nfev, nsteps, status


cdef double _p2_at(Solver* S, double F[NI][NMAX], double u) nogil:
    cdef double buf[NMAX]
    dense_eval_local(S, F, u, buf)
    return buf[3]


cdef double refine_root(Solver* S, double F[NI][NMAX], double a, double fa,
                        double b, double fb) nogil:
    """Zero of p2 by Brent's method on the dense interpolant.

    ``a`` and ``b`` are offsets from the start of the step.
    """
    cdef double c = a, fc = fa, d = b - a, e = d
    cdef double tol, m, pp, q, r, s
    cdef int it
    for it in range(200):
        if (fb > 0) == (fc > 0):
            c = a
            fc = fa
            d = b - a
            e = d
        if fabs(fc) < fabs(fb):
            a = b
            b = c
            c = a
            fa = fb
            fb = fc
            fc = fa
        tol = 4.0 * EPS * fabs(b) + 4.0 * EPS
        m = 0.5 * (c - b)
        if fabs(m) <= tol or fb == 0.0:
            return b
        if fabs(e) >= tol and fabs(fa) > fabs(fb):
            s = fb / fa
            if a == c:
                pp = 2.0 * m * s
                q = 1.0 - s
            else:
                q = fa / fc
                r = fb / fc
                pp = s * (2.0 * m * q * (q - r) - (b - a) * (r - 1.0))
                q = (q - 1.0) * (r - 1.0) * (s - 1.0)
            if pp > 0:
                q = -q
            else:
                pp = -pp
            if 2.0 * pp < 3.0 * m * q - fabs(tol * q) and pp < fabs(0.5 * e * q):
                e = d
                d = pp / q
            else:
                d = m
                e = m
        else:
            d = m
            e = m
        a = b
        fa = fb
        if fabs(d) > tol:
            b += d
        else:
            b += tol if m > 0 else -tol
        fb = _p2_at(S, F, b)
    return b


def sections(y0, double t_max, params, double rtol, double atol,
             long max_steps=50_000_000):
    """Crossings of p2 = 0 along a trajectory on [0, t_max].

    Returns ``(rows, nfev, nsteps, status)`` where each row is
    ``(t, q1, p1, q2, p2, direction)``; direction is +1 when p2 increases
    through zero.  Rows with q2 <= 0 are included; callers filter.
    """
    cdef Flow p = make_flow(params)
    cdef Solver S
    cdef double y0c[NMAX]
    cdef double F[NI][NMAX]
    cdef double buf[NMAX]
    cdef int i, status = 0
    cdef long nsteps = 0
    cdef double g_old, g_new, ur
    rows = []
    for i in range(4):
        y0c[i] = y0[i]
    if solver_init(&S, &p, 0.0, y0c, t_max, 4, rtol, atol):
        raise ValueError("initial point outside the Holstein-Primakoff domain")
    while S.direction * (S.t - t_max) < 0:
        if nsteps >= max_steps:
            status = -2
            break
        with nogil:
            status = solver_step(&S, &p)
        if status:
            break
        nsteps += 1
        g_old = S.y_old[3]
        g_new = S.y[3]
        if (g_old <= 0 and g_new >= 0) or (g_old >= 0 and g_new <= 0):
            if dense_coeffs(&S, &p, F):
                status = -1
                break
            if g_new == 0.0:
                ur = S.h_prev
            elif g_old == 0.0:
                ur = 0.0
            else:
                ur = refine_root(&S, F, 0.0, g_old, S.h_prev, g_new)
            dense_eval_local(&S, F, ur, buf)
            rows.append((S.t_old + ur, buf[0], buf[1], buf[2], buf[3],
                         1.0 if g_new > g_old else -1.0))
    arr = np.array(rows, dtype=float).reshape(-1, 6)
    return arr, S.nfev, nsteps, status


def lyapunov(y0, v0, double t_max, double tau, params, double rtol, double atol):
    """Benettin estimate of the largest Lyapunov exponent.

    The state and a tangent vector are integrated together over windows of
    length ``tau``, each a fresh integration; after every window the growth
    of the tangent vector is logged and it is rescaled to unit length.
    Returns ``(exponent, window_end_times, running_estimates, status)``.
    """
    cdef Flow p = make_flow(params)
    cdef Solver S
    cdef double z[NMAX]
    cdef double norm, acc = 0.0, t = 0.0, t_next
    cdef int i, status = 0
    cdef long w, nwin = <long>(t_max / tau + 0.5)
    times = np.empty(nwin)
    est = np.empty(nwin)
    cdef double[::1] tv = times
    cdef double[::1] ev = est
    for i in range(4):
        z[i] = y0[i]
    norm = 0.0
    for i in range(4):
        norm += v0[i] * v0[i]
    norm = sqrt(norm)
    for i in range(4):
        z[4 + i] = v0[i] / norm
    with nogil:
        for w in range(nwin):
            t_next = (w + 1) * tau
            if solver_init(&S, &p, t, z, t_next, 8, rtol, atol):
                status = -1
                break
            while S.direction * (S.t - t_next) < 0:
                if solver_step(&S, &p):
                    status = -1
                    break
            if status:
                break
            for i in range(8):
                z[i] = S.y[i]
            norm = sqrt(z[4] * z[4] + z[5] * z[5] + z[6] * z[6] + z[7] * z[7])
            acc += log(norm)
            for i in range(4):
                z[4 + i] /= norm
            t = t_next
            tv[w] = t
            ev[w] = acc / t
    if status:
        return float("nan"), times[:w], est[:w], status
    return est[nwin - 1] if nwin else float("nan"), times, est, status
