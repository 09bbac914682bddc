"""Bare model parameters and the photon-dependent squeezing map.

The ancilla occupations enter the Dicke sector only through the net photon
number ``n = n_e - n_o``.  Squeezing the field mode by

    r_n = -1/4 ln(1 - 4 n g / omega)

turns the quadratic optomechanical term into a renormalised Dicke model with
``omega_n = exp(-2 r_n) omega`` and ``lambda_n = exp(r_n) lambda``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional

from .errors import InvalidParameter, SqueezingDiverges


@dataclass(frozen=True)
class ModelParams:
    """Bare parameters of the hybrid Dicke model (energies in units of omega).

    ``lam`` is the collective qubit-field coupling (``lambda`` is reserved in
    Python).
    """

    Omega: float = 1.0
    omega: float = 1.0
    lam: float = 0.0
    g: float = 0.23
    N: int = 20

    def __post_init__(self):
        if not self.Omega > 0:
            raise InvalidParameter(f"Omega must be positive, got {self.Omega}")
        if not self.omega > 0:
            raise InvalidParameter(f"omega must be positive, got {self.omega}")
        if not self.lam >= 0:
            raise InvalidParameter(f"lambda must be nonnegative, got {self.lam}")
        if not self.g >= 0:
            raise InvalidParameter(f"g must be nonnegative, got {self.g}")
        if int(self.N) != self.N or self.N < 1:
            raise InvalidParameter(f"N must be a positive integer, got {self.N}")
        object.__setattr__(self, "N", int(self.N))

    def with_lambda(self, lam: float) -> "ModelParams":
        return replace(self, lam=lam)


@dataclass(frozen=True)
class AncillaState:
    """Fock label |n_e n_o> of the ancillary cavity.

    Mode frequencies default to the field frequency; they only shift the
    constant ``C_n``.
    """

    n_e: int = 0
    n_o: int = 0
    omega_e: Optional[float] = None
    omega_o: Optional[float] = None

    def __post_init__(self):
        for name in ("n_e", "n_o"):
            v = getattr(self, name)
            if int(v) != v or v < 0:
                raise InvalidParameter(f"{name} must be a nonnegative integer, got {v}")
        if self.n_e < self.n_o:
            raise InvalidParameter("n_e must be >= n_o (net photon number n >= 0)")

    @classmethod
    def from_net(cls, n: int, **kw) -> "AncillaState":
        """|n 0>: ``n`` photons at the even-position mode."""
        return cls(n_e=n, n_o=0, **kw)

    @property
    def n(self) -> int:
        return self.n_e - self.n_o


@dataclass(frozen=True)
class EffectiveParams:
    """Parameters of the squeezed-frame Dicke Hamiltonian for a fixed ancilla."""

    n: int
    r_n: float
    omega_n: float
    lambda_n: float
    C_n: float
    lambda_nc: float
    lambda_crit_bare: float
    model: ModelParams = field(repr=False)
    ancilla: AncillaState = field(repr=False)

    @property
    def Omega(self) -> float:
        return self.model.Omega

    @property
    def N(self) -> int:
        return self.model.N


def effective_params(p: ModelParams, a: AncillaState = AncillaState()) -> EffectiveParams:
    """Apply the squeezing map for ancilla occupation ``a``.

    Raises SqueezingDiverges when ``4 n g / omega >= 1``.
    """
    n = a.n
    x = 4.0 * n * p.g / p.omega
    if x >= 1.0:
        raise SqueezingDiverges(
            f"4 n g / omega = {x:.6g} >= 1: squeezing transformation breaks down"
        )
    r = -0.25 * math.log1p(-x)
    shrink = math.exp(-2.0 * r)
    omega_n = shrink * p.omega
    lambda_n = math.exp(r) * p.lam
    omega_e = p.omega if a.omega_e is None else a.omega_e
    omega_o = p.omega if a.omega_o is None else a.omega_o
    C_n = a.n_e * omega_e + a.n_o * omega_o + (shrink - 1.0) * p.omega / 2.0
    lambda_nc = math.sqrt(p.Omega * omega_n) / 2.0
    lambda_crit_bare = shrink * math.sqrt(p.Omega * p.omega) / 2.0
    return EffectiveParams(
        n=n,
        r_n=r,
        omega_n=omega_n,
        lambda_n=lambda_n,
        C_n=C_n,
        lambda_nc=lambda_nc,
        lambda_crit_bare=lambda_crit_bare,
        model=p,
        ancilla=a,
    )


def critical_couplings(eff: EffectiveParams, Omega: Optional[float] = None) -> tuple[float, float]:
    """Return ``(lambda_nc, lambda_crit_bare)``.

    ``lambda_nc`` is the squeezed-frame threshold sqrt(Omega omega_n)/2 and
    ``lambda_crit_bare`` the bare coupling at which ``lambda_n`` reaches it.
    """
    Omega = eff.Omega if Omega is None else Omega
    lambda_nc = math.sqrt(Omega * eff.omega_n) / 2.0
    return lambda_nc, lambda_nc * math.exp(-eff.r_n)
