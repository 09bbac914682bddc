"""Classical limit of the Holstein-Primakoff Hamiltonian.

With b_n ~ sqrt(omega_n/2)(q1 + i p1/omega_n) and d ~ sqrt(Omega/2)(q2 + i p2/Omega)

    H_cl = -N Omega/2 + (omega_n^2 q1^2 + p1^2 - omega_n + Omega^2 q2^2 + p2^2 - Omega)/2
           + c q1 q2 sqrt(1 - eta_c),     c = 2 lambda_n sqrt(Omega omega_n),

where eta_c = (Omega^2 q2^2 + p2^2 - Omega) / (2 N Omega) <= 1 is the
Holstein-Primakoff domain bound.  The coupling is q1 q2: (b_n + b_n^dag) is
proportional to q1 and (d + d^dag) to q2.  All derivatives below are taken
from this H_cl.

``N`` may be ``math.inf`` for the flow (the square root then drops out);
the energy itself needs a finite N because of the -N Omega/2 offset.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from ..errors import ConstraintViolated, InvalidParameter
from ..model import EffectiveParams


@dataclass(frozen=True)
class PhasePoint:
    q1: float
    p1: float
    q2: float
    p2: float

    def as_array(self) -> np.ndarray:
        return np.array([self.q1, self.p1, self.q2, self.p2], dtype=float)

    @classmethod
    def from_array(cls, y) -> "PhasePoint":
        q1, p1, q2, p2 = (float(v) for v in y)
        return cls(q1, p1, q2, p2)


@dataclass(frozen=True)
class FlowParams:
    """Numbers the flow depends on: omega_n, Omega, c and kappa = 1/(2 N Omega)."""

    omega_n: float
    Omega: float
    c: float
    kappa: float
    N: float

    def as_array(self) -> np.ndarray:
        return np.array([self.omega_n, self.Omega, self.c, self.kappa], dtype=float)


def flow_params(eff: EffectiveParams, Omega: Optional[float] = None,
                N: Optional[float] = None) -> FlowParams:
    Omega = eff.Omega if Omega is None else float(Omega)
    N = eff.N if N is None else N
    if not N > 0:
        raise InvalidParameter(f"N must be positive, got {N}")
    kappa = 0.0 if math.isinf(N) else 1.0 / (2.0 * N * Omega)
    c = 2.0 * eff.lambda_n * math.sqrt(Omega * eff.omega_n)
    return FlowParams(eff.omega_n, Omega, c, kappa, N)


def _y(pt) -> np.ndarray:
    if isinstance(pt, PhasePoint):
        return pt.as_array()
    return np.asarray(pt, dtype=float)


def constraint_eta(pt, fp: FlowParams):
    """eta_c = (Omega^2 q2^2 + p2^2 - Omega) / (2 N Omega); broadcasts over rows."""
    y = _y(pt)
    q2, p2 = y[..., 2], y[..., 3]
    return fp.kappa * (fp.Omega**2 * q2 * q2 + p2 * p2 - fp.Omega)


def _root_factor(y, fp: FlowParams, strict: bool):
    eta_c = constraint_eta(y, fp)
    bad = eta_c >= 1.0 if strict else eta_c > 1.0
    if np.any(bad):
        raise ConstraintViolated(
            f"eta_c = {np.max(eta_c):.6g} outside the Holstein-Primakoff domain"
        )
    return np.sqrt(1.0 - eta_c)


def classical_hamiltonian(pt, fp: FlowParams):
    """H_cl at one point or at every row of an (..., 4) array."""
    if math.isinf(fp.N):
        raise InvalidParameter("the energy needs a finite N")
    y = _y(pt)
    s = _root_factor(y, fp, strict=False)
    q1, p1, q2, p2 = y[..., 0], y[..., 1], y[..., 2], y[..., 3]
    w, Om = fp.omega_n, fp.Omega
    quad = 0.5 * (w * w * q1 * q1 + p1 * p1 - w + Om * Om * q2 * q2 + p2 * p2 - Om)
    return -0.5 * fp.N * Om + quad + fp.c * q1 * q2 * s


def equations_of_motion(pt, fp: FlowParams) -> np.ndarray:
    """(dq1, dp1, dq2, dp2) = (dH/dp1, -dH/dq1, dH/dp2, -dH/dq2)."""
    y = _y(pt)
    s = _root_factor(y, fp, strict=True)
    q1, p1, q2, p2 = y[..., 0], y[..., 1], y[..., 2], y[..., 3]
    w, Om, c, k = fp.omega_n, fp.Omega, fp.c, fp.kappa
    return np.stack([
        p1,
        -(w * w * q1 + c * q2 * s),
        p2 - c * k * q1 * q2 * p2 / s,
        -(Om * Om * q2 + c * q1 * (s - k * Om * Om * q2 * q2 / s)),
    ], axis=-1)


def jacobian(pt, fp: FlowParams) -> np.ndarray:
    """4x4 derivative of :func:`equations_of_motion` at a single point."""
    y = _y(pt)
    s = float(_root_factor(y, fp, strict=True))
    q1, p1, q2, p2 = (float(v) for v in y)
    w, Om, c, k = fp.omega_n, fp.Omega, fp.c, fp.kappa
    O2 = Om * Om
    s3 = s * s * s
    J = np.zeros((4, 4))
    J[0, 1] = 1.0
    J[1, 0] = -w * w
    J[1, 2] = -c * (s - k * O2 * q2 * q2 / s)
    J[1, 3] = c * k * q2 * p2 / s
    J[2, 0] = -c * k * q2 * p2 / s
    J[2, 2] = -c * k * q1 * p2 * (1.0 / s + k * O2 * q2 * q2 / s3)
    J[2, 3] = 1.0 - c * k * q1 * q2 * (1.0 / s + k * p2 * p2 / s3)
    J[3, 0] = -c * s + c * k * O2 * q2 * q2 / s
    J[3, 2] = -O2 + c * k * O2 * q1 * (3.0 * q2 / s + k * O2 * q2**3 / s3)
    J[3, 3] = c * k * q1 * p2 / s + c * k * k * O2 * q1 * q2 * q2 * p2 / s3
    return J


def linearized_frequencies(fp: FlowParams) -> np.ndarray:
    """Eigenfrequencies of the flow linearised at the origin, ascending.

    Eigenvalues come in pairs +-i w.  An unstable origin (superradiant side)
    gives w^2 < 0 and is returned as an imaginary frequency.
    """
    ev = np.linalg.eigvals(jacobian(np.zeros(4), fp))
    w2 = np.sort(-(ev * ev).real)[::2]
    if np.all(w2 >= 0):
        return np.sqrt(w2)
    return np.sqrt(w2.astype(complex))


def energy_minimum(fp: FlowParams):
    """Global minimum of H_cl on the constraint set: (energy, point).

    With p1 = p2 = 0, minimising over q1 gives q1 = -c q2 s / omega_n^2 and
    leaves a one-dimensional problem in q2, solved on a fine grid and
    polished with a bounded scalar search.
    """
    from scipy.optimize import minimize_scalar

    w, Om, c, k = fp.omega_n, fp.Omega, fp.c, fp.kappa
    q2_max = math.sqrt((1.0 / k + Om) / (Om * Om)) if k > 0 else 50.0 / Om

    def reduced(q2):
        s = math.sqrt(max(1.0 - k * (Om * Om * q2 * q2 - Om), 0.0))
        return 0.5 * Om * Om * q2 * q2 - 0.5 * (c * q2 * s) ** 2 / (w * w)

    grid = np.linspace(0.0, q2_max, 4001)
    vals = np.array([reduced(q) for q in grid])
    i = int(np.argmin(vals))
    lo, hi = grid[max(i - 1, 0)], grid[min(i + 1, grid.size - 1)]
    if hi > lo:
        res = minimize_scalar(reduced, bounds=(lo, hi), method="bounded",
                              options={"xatol": 1e-13})
        q2 = float(res.x) if res.fun <= vals[i] else float(grid[i])
    else:
        q2 = float(grid[i])
    s = math.sqrt(max(1.0 - k * (Om * Om * q2 * q2 - Om), 0.0))
    q1 = -c * q2 * s / (w * w)
    pt = np.array([q1, 0.0, q2, 0.0])
    return float(classical_hamiltonian(pt, fp)), pt
