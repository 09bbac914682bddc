"""Loschmidt echo of the photon-dressed ensemble seen by a dispersive probe atom.

The probe only shifts the squeezed-mode frequency, omega_v = omega_n - delta
and omega_u = omega_n + delta, so the ensemble evolves under two
Holstein-Primakoff Hamiltonians H_v and H_u and

    L(t) = |<G| exp(i H_v t) exp(-i H_u t) |G>|^2.

Both matrices are diagonalised in full and L is evaluated on the whole time
grid from their spectral decompositions.  Exchanging H_v and H_u conjugates
the overlap, so L does not depend on which of the two carries -delta.
"""

from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
import scipy.linalg as sla

from .errors import (AtCriticalPoint, CutoffLimitExceeded, CutoffTooSmall,
                     InvalidParameter, NumericalFailure)
from .meanfield import BogoliubovFrame, frame_for
from .model import AncillaState, EffectiveParams, ModelParams, effective_params
from .quantum import SpinBosonBasis, lowest_eigenpair

G_CHOICES = ("exact", "bare-vacuum")
VARIANCE_FORMS = ("closed", "gaussian")


@dataclass(frozen=True)
class EchoParams:
    """Probe and discretisation settings.  ``M=None`` lets the cutoff controller choose."""

    delta_tilde: float = 0.001
    alpha: complex = 1 / math.sqrt(2)
    beta: complex = 1 / math.sqrt(2)
    N: int = 40
    M: Optional[int] = None
    times: tuple = tuple(0.5 * i for i in range(201))

    def __post_init__(self):
        if not self.delta_tilde >= 0:
            raise InvalidParameter(f"delta_tilde must be >= 0, got {self.delta_tilde}")
        if abs(abs(self.alpha) ** 2 + abs(self.beta) ** 2 - 1.0) > 1e-12:
            raise InvalidParameter("|alpha|^2 + |beta|^2 must equal 1")
        if self.M is not None and self.M < 1:
            raise CutoffTooSmall(f"Fock cutoff M must be >= 1, got {self.M}")
        if len(self.times) == 0:
            raise InvalidParameter("time grid is empty")
        object.__setattr__(self, "times", tuple(float(t) for t in self.times))

    @classmethod
    def from_atom(cls, omega_s: float, lambda_s: float, omega: float = 1.0, **kw) -> "EchoParams":
        """delta = lambda_s^2 / Delta_s with Delta_s = omega_s - omega.

        Only |delta| is kept: its sign decides which probe level carries the
        downward shift, and L is symmetric under that exchange.
        """
        detuning = omega_s - omega
        if abs(detuning) <= abs(lambda_s):
            raise InvalidParameter("dispersive regime needs |omega_s - omega| > lambda_s")
        return cls(delta_tilde=abs(lambda_s**2 / detuning), **kw)

    @property
    def time_grid(self) -> np.ndarray:
        return np.array(self.times)


@dataclass
class EchoSeries:
    times: np.ndarray
    L: np.ndarray
    purity: np.ndarray
    L_short_time: np.ndarray
    rho_used: tuple
    meta: dict = field(default_factory=dict)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["t", "L", "purity", "L_short_time"])
        for row in zip(self.times, self.L, self.purity, self.L_short_time):
            w.writerow([repr(float(v)) for v in row])
        return buf.getvalue()

    def metadata_json(self) -> str:
        payload = dict(self.meta)
        payload["rho"] = self.rho_used[0]
        payload["rho_phase"] = self.rho_used[1]
        return json.dumps(payload, indent=2, sort_keys=True, default=float) + "\n"


# -- Hamiltonians ------------------------------------------------------------


def _hp_triplets(eff: EffectiveParams, basis: SpinBosonBasis, omega_b: float, Omega: float):
    """Entries of omega_b m + Omega (k - N/2) + lambda_n (b + b^dag)(d^dag sqrt(1 - d^dag d/N) + h.c.) + C_n."""
    N, M = basis.N, basis.M
    m, k = basis.labels()
    full = -np.ones((M + 1) * (N + 1), dtype=np.int64)
    full[m * (N + 1) + k] = np.arange(m.size)
    idx = np.arange(m.size)
    rows, cols, vals = [idx], [idx], [omega_b * m + Omega * (k - N / 2.0) + eff.C_n]
    # d^dag sqrt(1 - d^dag d / N): |k> -> sqrt(k + 1) sqrt(1 - k/N) |k + 1>
    for dm in (1, -1):
        ok = (k < N) & (m + dm >= 0) & (m + dm <= M)
        src = idx[ok]
        dst = full[(m[ok] + dm) * (N + 1) + k[ok] + 1]
        boson = np.sqrt(np.maximum(m[ok], m[ok] + dm).astype(float))
        v = eff.lambda_n * boson * np.sqrt(k[ok] + 1.0) * np.sqrt(1.0 - k[ok] / N)
        rows.extend((src, dst))
        cols.extend((dst, src))
        vals.extend((v, v))
    return np.concatenate(rows), np.concatenate(cols), np.concatenate(vals), m.size


def _dense(rows, cols, vals, dim) -> np.ndarray:
    H = np.zeros((dim, dim))
    np.add.at(H, (rows, cols), vals)
    return H


def _banded(rows, cols, vals, dim) -> np.ndarray:
    upper = rows <= cols
    r, c, v = rows[upper], cols[upper], vals[upper]
    u = int(np.max(c - r)) if r.size else 0
    ab = np.zeros((u + 1, dim))
    np.add.at(ab, (u + r - c, c), v)
    return ab


def hp_basis(N: int, M: int, sector: str = "even") -> SpinBosonBasis:
    """|m>_b (x) |k>_d with 0 <= k <= N; labels coincide with the spin basis."""
    return SpinBosonBasis(N, M, sector)


def build_hp_hamiltonians(eff: EffectiveParams, N: Optional[int] = None, M: int = 40,
                          delta_tilde: float = 0.0, sector: str = "even",
                          Omega: Optional[float] = None):
    """Dense (H_v, H_u) with omega_v = omega_n - delta, omega_u = omega_n + delta."""
    N = eff.N if N is None else N
    Omega = eff.Omega if Omega is None else Omega
    basis = hp_basis(N, M, sector)
    out = []
    for sign in (-1.0, 1.0):
        trip = _hp_triplets(eff, basis, eff.omega_n + sign * delta_tilde, Omega)
        out.append(_dense(*trip))
    return out[0], out[1]


# -- ground state and cutoff -------------------------------------------------


def initial_state(eff: EffectiveParams, basis: SpinBosonBasis, choice: str = "exact",
                  Omega: Optional[float] = None) -> np.ndarray:
    """|G> in ``basis``: the exact ground state of the unperturbed H, or |0>_b |0>_d."""
    if choice not in G_CHOICES:
        raise InvalidParameter(f"G choice must be one of {G_CHOICES}, got {choice!r}")
    if choice == "bare-vacuum":
        m, k = basis.labels()
        return ((m == 0) & (k == 0)).astype(float)
    Omega = eff.Omega if Omega is None else Omega
    if basis.sector == "odd":
        raise InvalidParameter("the ground state lies in the even sector")
    ab = _banded(*_hp_triplets(eff, basis, eff.omega_n, Omega))
    _, psi = lowest_eigenpair(ab)
    # fix the overall sign so the output does not depend on the solver
    i = int(np.argmax(np.abs(psi)))
    return psi if psi[i] > 0 else -psi


def _tail_weight(vecs: np.ndarray, basis: SpinBosonBasis, fraction: float = 0.75) -> float:
    m, _ = basis.labels()
    edge = m > fraction * basis.M
    v = vecs[edge]
    return float(np.max(np.sum(np.abs(v) ** 2, axis=0))) if v.size else 0.0


def choose_cutoff(eff: EffectiveParams, N: Optional[int] = None, tail_tol: float = 1e-10,
                  M_start: int = 16, M_max: int = 1500, sector: str = "even",
                  Omega: Optional[float] = None) -> int:
    """Smallest M on the schedule M -> ceil(5M/4) whose ground state has
    weight below ``tail_tol`` on photon numbers above 3M/4."""
    N = eff.N if N is None else N
    M = M_start
    while True:
        basis = hp_basis(N, M, sector)
        psi = initial_state(eff, basis, "exact", Omega)
        if _tail_weight(psi[:, None], basis) < tail_tol:
            return M
        if M >= M_max:
            raise CutoffLimitExceeded(f"ground state not contained below M_max={M_max}")
        M = min(max(M + 1, math.ceil(1.25 * M)), M_max)


# -- echo --------------------------------------------------------------------


def _evolved(H: np.ndarray, G: np.ndarray, times: np.ndarray, ref: Optional[float]):
    try:
        w, V = sla.eigh(H, driver="evd", check_finite=False)
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise NumericalFailure(str(exc)) from exc
    if ref is None:
        ref = float(w[0])
    a = V.T @ G
    phases = np.exp(-1j * np.outer(w - ref, times))
    return V @ (phases * a[:, None]), ref


def _echo_states(H_v, H_u, G, times):
    G = np.asarray(G, dtype=float)
    times = np.asarray(times, dtype=float)
    # a common energy offset cancels in |D|; it keeps the phases small
    psi_u, ref = _evolved(H_u, G, times, None)
    psi_v, _ = _evolved(H_v, G, times, ref)
    D = np.einsum("it,it->t", psi_v.conj(), psi_u)
    return np.abs(D) ** 2, psi_v, psi_u


def loschmidt_echo(H_v, H_u, G, times) -> np.ndarray:
    """L(t) = |<G| e^{i H_v t} e^{-i H_u t} |G>|^2 from full eigendecompositions."""
    G = np.asarray(G, dtype=float)
    nrm = np.linalg.norm(G)
    if abs(nrm - 1.0) > 1e-10:
        raise InvalidParameter(f"|G> must be normalised, norm = {nrm}")
    return _echo_states(H_v, H_u, G, times)[0]


def photon_variance(frame: BogoliubovFrame, variance: str = "closed") -> float:
    """rho = <(b^dag b)^2> - <b^dag b>^2 of the Bogoliubov vacuum.

    ``closed`` evaluates the closed form built from xi^(b) and zeta^(d);
    ``gaussian`` is the exact Gaussian-state variance built from the b row
    alone, n(n + 1) + <bb>^2 (plus gamma_b^2 <(b + b^dag)^2> when displaced).
    The two coincide when omega_n = Omega.
    """
    if variance not in VARIANCE_FORMS:
        raise InvalidParameter(f"variance must be one of {VARIANCE_FORMS}")
    xp, xm = frame.xi_b
    zp, zm = frame.zeta_b
    dp, dm = frame.zeta_d
    if variance == "closed":
        rho = 2 * xp**2 * xm**2 + 2 * dp**2 * dm**2 + (xp * dm + xm * dp) ** 2
        quad = (xp + xm) ** 2 + (dp + dm) ** 2
    else:
        nbar = xm**2 + zm**2
        bb = xp * xm + zp * zm
        rho = nbar * (nbar + 1.0) + bb**2
        quad = (xp + xm) ** 2 + (zp + zm) ** 2
    if frame.phase == "superradiant":
        rho += frame.gamma_b**2 * quad
    return float(rho)


def short_time_echo(frame: BogoliubovFrame, delta_tilde: float, times,
                    variance: str = "closed"):
    """exp(-4 rho delta^2 t^2) on ``times``; returns (values, rho)."""
    rho = photon_variance(frame, variance)
    t = np.asarray(times, dtype=float)
    return np.exp(-4.0 * rho * delta_tilde**2 * t * t), rho


def purity(alpha, beta, L):
    """P = 1 - 2 |alpha beta|^2 (1 - L)."""
    return 1.0 - 2.0 * abs(alpha * beta) ** 2 * (1.0 - np.asarray(L, dtype=float))


def echo_series(eff: EffectiveParams, params: EchoParams = EchoParams(),
                G_choice: str = "exact", sector: str = "even", tail_tol: float = 1e-10,
                M_max: int = 1500, variance: str = "closed") -> EchoSeries:
    """L(t), purity and the short-time reference for one parameter point.

    With ``params.M`` unset the cutoff starts from :func:`choose_cutoff` and
    grows until the evolved states under both Hamiltonians keep less than
    ``tail_tol`` of their weight above 3M/4.
    """
    N = params.N
    times = params.time_grid
    auto = params.M is None
    M = choose_cutoff(eff, N, tail_tol, M_max=M_max) if auto else params.M
    while True:
        basis = hp_basis(N, M, sector)
        H_v, H_u = build_hp_hamiltonians(eff, N, M, params.delta_tilde, sector)
        G = initial_state(eff, basis, G_choice)
        L, psi_v, psi_u = _echo_states(H_v, H_u, G, times)
        del H_v, H_u
        tail = max(_tail_weight(psi_v, basis), _tail_weight(psi_u, basis))
        if not auto or tail < tail_tol:
            break
        if M >= M_max:
            raise CutoffLimitExceeded(f"evolved state reaches the cutoff below M_max={M_max}")
        M = min(max(M + 1, math.ceil(1.25 * M)), M_max)
    L = np.clip(L, 0.0, 1.0)
    try:
        frame = frame_for(eff, N=N)
        L_short, rho = short_time_echo(frame, params.delta_tilde, times, variance)
        tag = frame.phase
    except AtCriticalPoint:
        L_short, rho, tag = np.full(times.shape, np.nan), float("nan"), "critical"
    p = eff.model
    meta = {
        "Omega": p.Omega, "omega": p.omega, "lambda": p.lam, "g": p.g, "n": eff.n,
        "N": N, "M": M, "sector": sector, "delta_tilde": params.delta_tilde,
        "alpha": [float(np.real(params.alpha)), float(np.imag(params.alpha))],
        "beta": [float(np.real(params.beta)), float(np.imag(params.beta))],
        "G_choice": G_choice, "variance": variance, "tail_weight": tail,
        "tail_tol": tail_tol,
    }
    return EchoSeries(times, L, purity(params.alpha, params.beta, L), L_short, (rho, tag), meta)


# -- sweeps ------------------------------------------------------------------


@dataclass(frozen=True)
class SweepPoint:
    lam: float
    n: int
    L: float
    M: int
    error: str = ""


def _sweep_point(args) -> SweepPoint:
    model, lam, n, t_eval, params, G_choice, sector, tail_tol, M_max = args
    try:
        eff = effective_params(model.with_lambda(lam), AncillaState.from_net(n))
        p = EchoParams(params.delta_tilde, params.alpha, params.beta, params.N, params.M, (t_eval,))
        s = echo_series(eff, p, G_choice, sector, tail_tol, M_max)
        return SweepPoint(lam, n, float(s.L[-1]), int(s.meta["M"]))
    except Exception as exc:  # reported per point, the sweep carries on
        return SweepPoint(lam, n, float("nan"), -1, f"{type(exc).__name__}: {exc}")


def echo_sweep(model: ModelParams, lambdas: Sequence[float], ns: Sequence[int] = (0, 1),
               t_eval: float = 100.0, params: EchoParams = EchoParams(),
               G_choice: str = "exact", sector: str = "even", tail_tol: float = 1e-10,
               M_max: int = 1500, workers: int = 1) -> list[SweepPoint]:
    """L(t_eval) over a lambda grid for each n; rows in (n, lambda) grid order."""
    if len(lambdas) == 0 or len(ns) == 0:
        raise InvalidParameter("sweep grid is empty")
    jobs = [(model, float(lam), int(n), float(t_eval), params, G_choice, sector, tail_tol, M_max)
            for n in ns for lam in lambdas]
    if workers <= 1:
        return [_sweep_point(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        # map preserves submission order whatever the completion order
        return list(pool.map(_sweep_point, jobs))


def sweep_csv(points: Sequence[SweepPoint]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["lambda", "n", "L_at_t_eval"])
    for pt in points:
        w.writerow([repr(pt.lam), pt.n, repr(pt.L)])
    return buf.getvalue()


def first_crossing(points: Sequence[SweepPoint], n: int, level: float = 0.5) -> Optional[float]:
    """Smallest lambda (in grid order) where L(t_eval) < level for ancilla n."""
    for pt in points:
        if pt.n == n and pt.L < level:
            return pt.lam
    return None
