"""Thermodynamic-limit Bogoliubov description of the squeezed Dicke model.

Both phases are handled through the Holstein-Primakoff boson ``d`` of the
collective spin.  In the normal phase the quadratic Hamiltonian mixes ``b_n``
and ``d`` directly; in the superradiant phase both modes are first displaced
by ``gamma_b`` and ``gamma_d`` and the spin mode acquires the dressed
splitting ``Omega_tilde``.  The closed forms below are evaluated as given;
energies are per qubit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

from .errors import AtCriticalPoint, InvalidParameter, WrongPhase
from .model import EffectiveParams

NEGATIVE_NOISE = 1e-10
CRITICAL_TIE = 1e-12


@dataclass(frozen=True)
class BogoliubovFrame:
    phase: str
    nu: float
    omega_minus: float
    omega_plus: float
    xi_b: tuple[float, float]
    zeta_b: tuple[float, float]
    xi_d: tuple[float, float]
    zeta_d: tuple[float, float]
    gamma_b: float
    gamma_d: float
    Omega_tilde: float
    E_ground: float
    coherence: float
    branch: int = 0

    # coefficient pairs are stored as (plus, minus)

    def symplectic_norms(self) -> tuple[float, float]:
        """(xi+)^2 - (xi-)^2 + (zeta+)^2 - (zeta-)^2 for the b and d rows."""
        nb = self.xi_b[0] ** 2 - self.xi_b[1] ** 2 + self.zeta_b[0] ** 2 - self.zeta_b[1] ** 2
        nd = self.xi_d[0] ** 2 - self.xi_d[1] ** 2 + self.zeta_d[0] ** 2 - self.zeta_d[1] ** 2
        return nb, nd

    def as_dict(self) -> dict:
        return {
            "phase": self.phase, "branch": self.branch, "nu": self.nu,
            "omega_minus": self.omega_minus, "omega_plus": self.omega_plus,
            "xi_b_plus": self.xi_b[0], "xi_b_minus": self.xi_b[1],
            "zeta_b_plus": self.zeta_b[0], "zeta_b_minus": self.zeta_b[1],
            "xi_d_plus": self.xi_d[0], "xi_d_minus": self.xi_d[1],
            "zeta_d_plus": self.zeta_d[0], "zeta_d_minus": self.zeta_d[1],
            "gamma_b": self.gamma_b, "gamma_d": self.gamma_d,
            "Omega_tilde": self.Omega_tilde, "E_ground": self.E_ground,
            "coherence": self.coherence,
        }


def _root(x2: float, what: str) -> float:
    if x2 < -NEGATIVE_NOISE:
        raise WrongPhase(f"{what}^2 = {x2:.3e} < 0: the assumed phase is unstable")
    return math.sqrt(max(x2, 0.0))


def normal_frequencies(omega_n: float, Omega: float, lambda_n: float) -> tuple[float, float]:
    """Normal-phase excitation energies (omega_minus, omega_plus).

    Valid up to and including the critical coupling, where omega_minus = 0.
    """
    disc = math.sqrt((Omega**2 - omega_n**2) ** 2 + 16.0 * lambda_n**2 * Omega * omega_n)
    lo = 0.5 * (omega_n**2 + Omega**2 - disc)
    hi = 0.5 * (omega_n**2 + Omega**2 + disc)
    return _root(lo, "omega_minus"), _root(hi, "omega_plus")


def superradiant_frequencies(omega_n: float, Omega: float, lambda_n: float) -> tuple[float, float]:
    spin2 = 16.0 * lambda_n**4 / omega_n**2
    disc = math.sqrt((spin2 - omega_n**2) ** 2 + 4.0 * Omega**2 * omega_n**2)
    lo = 0.5 * (omega_n**2 + spin2 - disc)
    hi = 0.5 * (omega_n**2 + spin2 + disc)
    return _root(lo, "omega_tilde_minus"), _root(hi, "omega_tilde_plus")


def _coefficients(nu, omega_b, omega_d, w_minus, w_plus):
    c, s = math.cos(nu), math.sin(nu)
    xi_b = tuple(c / (2 * math.sqrt(omega_b * w_minus)) * (omega_b + sg * w_minus) for sg in (1, -1))
    zeta_b = tuple(s / (2 * math.sqrt(omega_b * w_plus)) * (omega_b + sg * w_plus) for sg in (1, -1))
    xi_d = tuple(-s / (2 * math.sqrt(omega_d * w_minus)) * (omega_d + sg * w_minus) for sg in (1, -1))
    zeta_d = tuple(c / (2 * math.sqrt(omega_d * w_plus)) * (omega_d + sg * w_plus) for sg in (1, -1))
    return xi_b, zeta_b, xi_d, zeta_d


def normal_frame(eff: EffectiveParams, Omega: Optional[float] = None) -> BogoliubovFrame:
    Omega = eff.Omega if Omega is None else Omega
    w, lam = eff.omega_n, eff.lambda_n
    lam_c = math.sqrt(Omega * w) / 2.0
    if lam >= lam_c:
        raise WrongPhase(f"lambda_n = {lam:.6g} >= lambda_nc = {lam_c:.6g}: not in the normal phase")
    w_minus, w_plus = normal_frequencies(w, Omega, lam)
    # atan2 keeps b attached to its own frequency when the modes decouple
    nu = 0.5 * math.atan2(4.0 * lam * math.sqrt(Omega * w), Omega**2 - w**2)
    xi_b, zeta_b, xi_d, zeta_d = _coefficients(nu, w, Omega, w_minus, w_plus)
    return BogoliubovFrame(
        phase="normal", nu=nu, omega_minus=w_minus, omega_plus=w_plus,
        xi_b=xi_b, zeta_b=zeta_b, xi_d=xi_d, zeta_d=zeta_d,
        gamma_b=0.0, gamma_d=0.0, Omega_tilde=Omega,
        E_ground=-Omega / 2.0, coherence=0.0,
    )


def superradiant_frame(eff: EffectiveParams, Omega: Optional[float] = None,
                       N: Optional[int] = None, branch: int = 1) -> BogoliubovFrame:
    """Frame around one of the two displaced ground states (``branch`` = +-1)."""
    if branch not in (1, -1):
        raise InvalidParameter("branch must be +1 or -1")
    Omega = eff.Omega if Omega is None else Omega
    N = eff.N if N is None else N
    w, lam = eff.omega_n, eff.lambda_n
    lam_c = math.sqrt(Omega * w) / 2.0
    if lam <= lam_c:
        raise WrongPhase(f"lambda_n = {lam:.6g} <= lambda_nc = {lam_c:.6g}: not superradiant")
    ratio = 4.0 * lam**2 / (Omega * w)  # > 1 in this phase
    gamma_b = math.sqrt(max(N * (lam**2 / w**2 - Omega**2 / (16.0 * lam**2)), 0.0))
    gamma_d = math.sqrt(max(0.5 * N * (1.0 - 1.0 / ratio), 0.0))
    Omega_t = 0.5 * Omega * (1.0 + ratio)
    spin2 = 16.0 * lam**4 / w**2
    nu = 0.5 * math.atan2(2.0 * w * Omega, spin2 - w**2)
    w_minus, w_plus = superradiant_frequencies(w, Omega, lam)
    xi_b, zeta_b, xi_d, zeta_d = _coefficients(nu, w, Omega_t, w_minus, w_plus)
    E_g = -0.25 * Omega * (ratio + 1.0 / ratio)
    return BogoliubovFrame(
        phase="superradiant", nu=nu, omega_minus=w_minus, omega_plus=w_plus,
        xi_b=xi_b, zeta_b=zeta_b, xi_d=xi_d, zeta_d=zeta_d,
        gamma_b=gamma_b, gamma_d=gamma_d, Omega_tilde=Omega_t,
        E_ground=E_g, coherence=branch * math.exp(eff.r_n) * gamma_b, branch=branch,
    )


def phase_of(eff: EffectiveParams, Omega: Optional[float] = None) -> str:
    Omega = eff.Omega if Omega is None else Omega
    lam_c = math.sqrt(Omega * eff.omega_n) / 2.0
    if abs(eff.lambda_n - lam_c) <= CRITICAL_TIE * max(1.0, lam_c):
        raise AtCriticalPoint(f"lambda_n = lambda_nc = {lam_c:.12g}")
    return "normal" if eff.lambda_n < lam_c else "superradiant"


def frame_for(eff: EffectiveParams, Omega: Optional[float] = None,
              N: Optional[int] = None, branch: int = 1) -> BogoliubovFrame:
    """Frame of whichever phase ``eff`` lies in."""
    if phase_of(eff, Omega) == "normal":
        return normal_frame(eff, Omega)
    return superradiant_frame(eff, Omega, N, branch)
