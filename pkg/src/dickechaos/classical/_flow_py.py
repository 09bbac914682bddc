"""Pure-Python flow kernels built on scipy's DOP853.

Same signatures and return conventions as the compiled ``_flow`` module.
Points outside the Holstein-Primakoff domain evaluate to NaN, which makes
scipy reject the step and shrink it, as the compiled stepper does.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.integrate import solve_ivp

STATUS_OK = 0
STATUS_SMALL_STEP = -1
STATUS_MAX_STEPS = -2


def _make_rhs(params, tangent: bool):
    w, Om, c, k = (float(v) for v in params)
    w2, O2, ck = w * w, Om * Om, c * k
    nan4 = np.full(8 if tangent else 4, np.nan)

    def rhs(t, y):
        q1, p1, q2, p2 = y[0], y[1], y[2], y[3]
        x = 1.0 - k * (O2 * q2 * q2 + p2 * p2 - Om)
        if not x > 0.0:
            return nan4
        s = math.sqrt(x)
        f = [
            p1,
            -(w2 * q1 + c * q2 * s),
            p2 - ck * q1 * q2 * p2 / s,
            -(O2 * q2 + c * q1 * (s - k * O2 * q2 * q2 / s)),
        ]
        if tangent:
            s3 = s * s * s
            v = y[4:]
            j12 = -c * (s - k * O2 * q2 * q2 / s)
            j13 = ck * q2 * p2 / s
            j20 = -ck * q2 * p2 / s
            j22 = -ck * q1 * p2 * (1.0 / s + k * O2 * q2 * q2 / s3)
            j23 = 1.0 - ck * q1 * q2 * (1.0 / s + k * p2 * p2 / s3)
            j30 = -c * s + ck * O2 * q2 * q2 / s
            j32 = -O2 + ck * O2 * q1 * (3.0 * q2 / s + k * O2 * q2**3 / s3)
            j33 = ck * q1 * p2 / s + ck * k * O2 * q1 * q2 * q2 * p2 / s3
            f += [
                v[1],
                -w2 * v[0] + j12 * v[2] + j13 * v[3],
                j20 * v[0] + j22 * v[2] + j23 * v[3],
                j30 * v[0] + j32 * v[2] + j33 * v[3],
            ]
        return np.array(f)

    return rhs


def _status(sol) -> int:
    return STATUS_OK if sol.status == 0 else STATUS_SMALL_STEP


def _check_start(rhs, y0):
    if np.isnan(rhs(0.0, np.asarray(y0, dtype=float))[0]):
        raise ValueError("initial point outside the Holstein-Primakoff domain")


def integrate(y0, t0, t_end, t_eval, params, rtol, atol, max_steps=50_000_000):
    rhs = _make_rhs(params, tangent=len(y0) == 8)
    _check_start(rhs, y0)
    t_eval = np.asarray(t_eval, dtype=float)
    sol = solve_ivp(rhs, (t0, t_end), np.asarray(y0, dtype=float), method="DOP853",
                    rtol=rtol, atol=atol, t_eval=t_eval)
    samples = sol.y.T.copy()
    # callers end t_eval at t_end, so the last sample is the final state
    y_final = samples[-1].copy() if samples.size else np.asarray(y0, dtype=float)
    return samples, y_final, sol.nfev, 0, _status(sol)


def _final_state(rhs, y0, t0, t_end, rtol, atol):
    sol = solve_ivp(rhs, (t0, t_end), y0, method="DOP853", rtol=rtol, atol=atol,
                    t_eval=[t_end])
    return sol


def sections(y0, t_max, params, rtol, atol, max_steps=50_000_000):
    rhs = _make_rhs(params, tangent=False)
    _check_start(rhs, y0)

    def p2(t, y):
        return y[3]

    sol = solve_ivp(rhs, (0.0, t_max), np.asarray(y0, dtype=float), method="DOP853",
                    rtol=rtol, atol=atol, events=p2, dense_output=True, t_eval=[])
    te = sol.t_events[0]
    ye = sol.y_events[0]
    rows = []
    for t, y in zip(te, ye):
        # the event time is only resolved to a few ulps of t; two Newton
        # steps along the flow remove the residual p2 left by that rounding
        for _ in range(2):
            f = rhs(t, y)
            if f[3] == 0.0 or y[3] == 0.0:
                break
            dt = -y[3] / f[3]
            y = y + dt * f
            t = t + dt
        slope = rhs(t, y)[3]
        rows.append((t, y[0], y[1], y[2], y[3], 1.0 if slope > 0 else -1.0))
    arr = np.array(rows, dtype=float).reshape(-1, 6)
    return arr, sol.nfev, 0, _status(sol)


def lyapunov(y0, v0, t_max, tau, params, rtol, atol):
    rhs = _make_rhs(params, tangent=True)
    v0 = np.asarray(v0, dtype=float)
    z = np.concatenate([np.asarray(y0, dtype=float), v0 / np.linalg.norm(v0)])
    _check_start(rhs, z)
    nwin = int(t_max / tau + 0.5)
    times = np.empty(nwin)
    est = np.empty(nwin)
    acc, t = 0.0, 0.0
    for w in range(nwin):
        t_next = (w + 1) * tau
        sol = _final_state(rhs, z, t, t_next, rtol, atol)
        if sol.status != 0:
            return float("nan"), times[:w], est[:w], STATUS_SMALL_STEP
        z = sol.y[:, -1].copy()
        norm = math.sqrt(float(z[4:] @ z[4:]))
        acc += math.log(norm)
        z[4:] /= norm
        t = t_next
        times[w] = t
        est[w] = acc / t
    return (est[-1] if nwin else float("nan")), times, est, STATUS_OK
