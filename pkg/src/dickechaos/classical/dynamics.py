"""Trajectories, Poincare sections and Lyapunov exponents of the classical flow."""

from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy.optimize import brentq

from ..errors import (ConstraintViolated, InvalidParameter, NumericalFailure, ShellUnreachable, StepFailure)
from ._backend import DEFAULT, get_kernel
from .hamiltonian import (FlowParams, PhasePoint, classical_hamiltonian, energy_minimum,
                          equations_of_motion)

# scipy refuses rtol below 100 machine epsilons; both kernels use this floor
RTOL_FLOOR = 100 * np.finfo(float).eps
DEFAULT_RTOL = 3e-14
DEFAULT_ATOL = 1e-14
CROSSING_TOL = 1e-10
SHELL_TOL = 1e-10


def _tols(rtol, atol):
    rtol = DEFAULT_RTOL if rtol is None else max(float(rtol), RTOL_FLOOR)
    atol = DEFAULT_ATOL if atol is None else float(atol)
    return rtol, atol


def _vec(pt) -> np.ndarray:
    return pt.as_array() if isinstance(pt, PhasePoint) else np.asarray(pt, dtype=float)


def _check_start(y0, fp: FlowParams):
    # the flow is singular on eta_c = 1, so a start must lie strictly inside,
    # also in the exact arithmetic the kernels use
    equations_of_motion(y0, fp)
    x = 1.0 - fp.kappa * (fp.Omega * fp.Omega * y0[2] * y0[2] + y0[3] * y0[3] - fp.Omega)
    if not x > 0.0:
        raise ConstraintViolated("initial point on the eta_c = 1 boundary")


@dataclass
class Trajectory:
    times: np.ndarray
    points: np.ndarray  # rows (q1, p1, q2, p2)
    energies: np.ndarray
    energy_drift: float
    nfev: int
    backend: str

    def phase_points(self) -> list[PhasePoint]:
        return [PhasePoint.from_array(r) for r in self.points]

    @property
    def final(self) -> PhasePoint:
        return PhasePoint.from_array(self.points[-1])

    def to_csv(self, every: int = 1) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["t", "q1", "p1", "q2", "p2", "energy"])
        for t, y, e in zip(self.times[::every], self.points[::every], self.energies[::every]):
            w.writerow([repr(float(t))] + [repr(float(v)) for v in y] + [repr(float(e))])
        return buf.getvalue()


def integrate(initial, t_max: float, fp: FlowParams, rtol: Optional[float] = None,
              atol: Optional[float] = None, samples: int = 1001, t_eval=None,
              backend: Optional[str] = None) -> Trajectory:
    """Integrate H_cl's flow from t = 0 to ``t_max`` (negative runs backward).

    The state is sampled from the dense output on ``samples`` evenly spaced
    times, or on ``t_eval`` (which must start at 0 and end at ``t_max``).
    """
    y0 = _vec(initial)
    rtol, atol = _tols(rtol, atol)
    if t_eval is None:
        t_eval = np.linspace(0.0, float(t_max), max(int(samples), 2))
    t_eval = np.asarray(t_eval, dtype=float)
    if t_eval[0] != 0.0 or t_eval[-1] != t_max:
        raise InvalidParameter("t_eval must run from 0 to t_max")
    kernel = get_kernel(backend)
    _check_start(y0, fp)
    Y, _, nfev, _, status = kernel.integrate(y0, 0.0, float(t_max), t_eval, fp.as_array(),
                                             rtol, atol)
    if status != 0 or Y.shape[0] != t_eval.size:
        raise StepFailure(f"integration stopped at t = {t_eval[Y.shape[0] - 1] if len(Y) else 0.0}"
                          " (step size underflow near the eta_c boundary)")
    E = classical_hamiltonian(Y, fp)
    drift = float(np.max(np.abs(E - E[0])))
    return Trajectory(t_eval, Y, E, drift, int(nfev), backend or DEFAULT)


# -- energy shell sampling ---------------------------------------------------


@dataclass(frozen=True)
class SamplingBox:
    q1: float = 4.0
    p1: float = 4.0
    q2: Optional[float] = None  # default sqrt(2 N / Omega)

    def q2_half_width(self, fp: FlowParams) -> float:
        if self.q2 is not None:
            return self.q2
        if math.isinf(fp.N):
            raise InvalidParameter("the q2 box needs a finite N")
        return math.sqrt(2.0 * fp.N / fp.Omega)


def _p2_max(q2: float, fp: FlowParams) -> float:
    """Largest p2 >= 0 with eta_c <= 1 at this q2 (NaN if none)."""
    room = 1.0 / fp.kappa + fp.Omega - fp.Omega**2 * q2 * q2
    if room < 0:
        return float("nan")
    p = math.sqrt(room)
    while fp.kappa * (fp.Omega**2 * q2 * q2 + p * p - fp.Omega) > 1.0:
        p = math.nextafter(p, 0.0)
    return p


def _shell_point(q1, p1, q2, E, fp: FlowParams, grid: int):
    pm = _p2_max(q2, fp)
    if not pm >= 0:
        return None

    def f(p2):
        return float(classical_hamiltonian(np.array([q1, p1, q2, p2]), fp)) - E

    ps = np.linspace(0.0, pm, grid)
    fs = np.array([f(p) for p in ps])
    sign = np.nonzero(fs[:-1] * fs[1:] <= 0)[0]
    if sign.size == 0:
        return None
    i = int(sign[0])
    if fs[i] == 0.0:
        p2 = ps[i]
    else:
        p2 = brentq(f, ps[i], ps[i + 1], xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=200)
    y = np.array([q1, p1, q2, p2])
    return y if abs(f(p2)) < SHELL_TOL * max(1.0, abs(E)) else None


def sample_energy_shell(E: float, count: int, seed: int, fp: FlowParams,
                        box: SamplingBox = SamplingBox(), grid: int = 64,
                        max_draws_per_point: int = 2000) -> list[PhasePoint]:
    """``count`` points with H_cl = E, deterministic in ``seed``.

    (q1, p1, q2) are drawn uniformly from ``box``; p2 is the smallest
    nonnegative root of H_cl = E on [0, p2_max(q2)], located on a ``grid``
    point scan and refined by Brent's method.  Draws without a root are
    rejected.  When E sits at the global minimum of H_cl the shell is the
    minimiser itself, which is returned ``count`` times.
    """
    if count < 1:
        raise InvalidParameter("count must be >= 1")
    if math.isinf(fp.N):
        raise InvalidParameter("shell sampling needs a finite N")
    E_min, y_min = energy_minimum(fp)
    tol = SHELL_TOL * max(1.0, abs(E))
    if E < E_min - tol:
        raise ShellUnreachable(f"E = {E} lies below the minimum {E_min:.12g} of H_cl")
    if E <= E_min + tol:
        return [PhasePoint.from_array(y_min)] * count
    rng = np.random.default_rng(seed)
    q2w = box.q2_half_width(fp)
    out: list[PhasePoint] = []
    draws = 0
    while len(out) < count:
        if draws >= max_draws_per_point * count:
            raise ShellUnreachable(
                f"only {len(out)} of {count} points found on E = {E} after {draws} draws"
            )
        draws += 1
        q1, p1, q2 = rng.uniform(-box.q1, box.q1), rng.uniform(-box.p1, box.p1), rng.uniform(-q2w, q2w)
        y = _shell_point(q1, p1, q2, E, fp, grid)
        if y is not None:
            out.append(PhasePoint.from_array(y))
    return out


# -- Poincare sections -------------------------------------------------------


@dataclass
class SectionPoints:
    trajectory_id: int
    crossings: np.ndarray  # rows (q1, p1)
    directions: np.ndarray  # +1 where p2 increases through zero
    times: np.ndarray
    energy: float
    max_residual: float

    def __len__(self):
        return self.crossings.shape[0]


def _section_job(args):
    i, y0, t_max, fp, rtol, atol, direction, backend, E = args
    kernel = get_kernel(backend)
    rows, _, _, status = kernel.sections(y0, float(t_max), fp.as_array(), rtol, atol)
    if status != 0:
        raise StepFailure(f"trajectory {i}: integration failed before t = {t_max}")
    keep = rows[:, 3] > 0
    if direction:
        keep &= rows[:, 5] == direction
    rows = rows[keep]
    resid = float(np.max(np.abs(rows[:, 4]))) if rows.size else 0.0
    if resid >= CROSSING_TOL:
        raise NumericalFailure(f"trajectory {i}: crossing refined only to |p2| = {resid:.3e}")
    return SectionPoints(i, rows[:, 1:3].copy(), rows[:, 5].copy(), rows[:, 0].copy(), E, resid)


def poincare_section(initials: Sequence, E: float, t_max: float, fp: FlowParams,
                     direction: int = 0, rtol: Optional[float] = None,
                     atol: Optional[float] = None, backend: Optional[str] = None,
                     workers: int = 1) -> list[SectionPoints]:
    """Crossings of p2 = 0 with q2 > 0 for each initial point on the shell E.

    ``direction`` 0 keeps both crossing senses, +1 or -1 only one.
    """
    if direction not in (0, 1, -1):
        raise InvalidParameter("direction must be 0, +1 or -1")
    rtol, atol = _tols(rtol, atol)
    tol = 1e-8 * max(1.0, abs(E))
    jobs = []
    for i, pt in enumerate(initials):
        y0 = _vec(pt)
        _check_start(y0, fp)
        e = float(classical_hamiltonian(y0, fp))
        if abs(e - E) > tol:
            raise InvalidParameter(f"initial point {i} has H_cl = {e}, not on the shell E = {E}")
        jobs.append((i, y0, t_max, fp, rtol, atol, direction, backend, E))
    if workers <= 1:
        return [_section_job(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_section_job, jobs))


def section_csv(sections: Sequence[SectionPoints]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["traj_id", "crossing_index", "q1", "p1", "direction"])
    for s in sections:
        for j, ((q1, p1), d) in enumerate(zip(s.crossings, s.directions)):
            w.writerow([s.trajectory_id, j, repr(float(q1)), repr(float(p1)), int(d)])
    return buf.getvalue()


def section_bounds(sections: Sequence[SectionPoints]) -> tuple[float, float, float, float]:
    """Bounding box (q1_min, q1_max, p1_min, p1_max) of all crossings."""
    pts = np.concatenate([s.crossings for s in sections if len(s)])
    if pts.size == 0:
        raise InvalidParameter("no crossings")
    return (float(pts[:, 0].min()), float(pts[:, 0].max()),
            float(pts[:, 1].min()), float(pts[:, 1].max()))


def occupied_cells(crossings: np.ndarray, bounds, bins: int = 100) -> int:
    """Number of cells of a ``bins`` x ``bins`` grid over ``bounds`` hit by crossings."""
    q0, q1, p0, p1 = bounds
    pts = np.asarray(crossings, dtype=float).reshape(-1, 2)
    if pts.size == 0:
        return 0
    wq = (q1 - q0) or 1.0
    wp = (p1 - p0) or 1.0
    i = np.clip(((pts[:, 0] - q0) / wq * bins).astype(np.int64), 0, bins - 1)
    j = np.clip(((pts[:, 1] - p0) / wp * bins).astype(np.int64), 0, bins - 1)
    return int(np.unique(i * bins + j).size)


# -- Lyapunov exponents ------------------------------------------------------


@dataclass
class LyapunovResult:
    exponent: float
    times: np.ndarray
    running: np.ndarray
    renorm_interval: float

    def summary(self) -> dict:
        return {"lyapunov": self.exponent, "t_max": float(self.times[-1]) if self.times.size else 0.0,
                "renorm_interval": self.renorm_interval}


DEFAULT_TANGENT = (1.0, 1.0, 1.0, 1.0)


def lyapunov_run(initial, t_max: float, fp: FlowParams, renorm_interval: float = 1.0,
                 tangent=DEFAULT_TANGENT, rtol: Optional[float] = None,
                 atol: Optional[float] = None, backend: Optional[str] = None) -> LyapunovResult:
    """Benettin estimate with the running average recorded at every renormalisation."""
    if not renorm_interval > 0 or not t_max >= renorm_interval:
        raise InvalidParameter("need 0 < renorm_interval <= t_max")
    rtol, atol = _tols(rtol, atol)
    y0 = _vec(initial)
    _check_start(y0, fp)
    kernel = get_kernel(backend)
    lam, times, est, status = kernel.lyapunov(y0, np.asarray(tangent, dtype=float), float(t_max),
                                              float(renorm_interval), fp.as_array(), rtol, atol)
    if status != 0:
        raise StepFailure("tangent integration failed (step size underflow)")
    return LyapunovResult(float(lam), times, est, float(renorm_interval))


def lyapunov_max(initial, t_max: float, fp: FlowParams, renorm_interval: float = 1.0,
                 **kw) -> float:
    """Largest Lyapunov exponent in units of omega."""
    return lyapunov_run(initial, t_max, fp, renorm_interval, **kw).exponent


def _lyap_job(args):
    y0, t_max, fp, tau, backend = args
    return lyapunov_max(y0, t_max, fp, tau, backend=backend)


def lyapunov_ensemble(initials: Sequence, t_max: float, fp: FlowParams,
                      renorm_interval: float = 1.0, backend: Optional[str] = None,
                      workers: int = 1) -> np.ndarray:
    jobs = [(_vec(p), t_max, fp, renorm_interval, backend) for p in initials]
    if workers <= 1:
        return np.array([_lyap_job(j) for j in jobs])
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return np.array(list(pool.map(_lyap_job, jobs)))


def lyapunov_json(values: Sequence[float], **meta) -> str:
    vals = [float(v) for v in values]
    payload = dict(meta)
    payload.update({"values": vals, "median": float(np.median(vals)),
                    "mean": float(np.mean(vals)), "count": len(vals)})
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"
