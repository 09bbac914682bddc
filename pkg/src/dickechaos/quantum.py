"""Exact diagonalisation of the squeezed Dicke Hamiltonian.

Basis states are |m>_b (x) |j, m_z> with j = N/2.  The label ``k = m_z + j``
runs over 0..N so that the conserved excitation number is simply ``m + k``
and parity sectors are ``(m + k) % 2``.  Within a sector, states are ordered
by (m, k); the coupling only links m to m +- 1, so every sector matrix is
banded with half-bandwidth about (N + 1) / 2.  ``converged_spectrum`` uses
that structure through LAPACK's banded eigensolver.

The coupling convention is ``J_x = J_+ + J_-`` (twice the usual spin
component), which puts the critical point at sqrt(Omega omega_n) / 2.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp

from .errors import CutoffLimitExceeded, CutoffTooSmall, InvalidParameter, NumericalFailure
from .model import EffectiveParams

SECTORS = ("even", "odd", "both")
_PARITY = {"even": 0, "odd": 1}


@dataclass(frozen=True)
class SpinBosonBasis:
    N: int
    M: int
    sector: str = "both"

    def __post_init__(self):
        if self.sector not in SECTORS:
            raise InvalidParameter(f"sector must be one of {SECTORS}, got {self.sector!r}")
        if self.M < 1:
            raise CutoffTooSmall(f"Fock cutoff M must be >= 1, got {self.M}")
        if self.N < 1:
            raise InvalidParameter(f"N must be >= 1, got {self.N}")

    @property
    def j(self) -> float:
        return self.N / 2.0

    def labels(self) -> tuple[np.ndarray, np.ndarray]:
        """Boson number m and spin label k = m_z + j for every basis state."""
        m, k = np.divmod(np.arange((self.M + 1) * (self.N + 1)), self.N + 1)
        if self.sector != "both":
            keep = (m + k) % 2 == _PARITY[self.sector]
            m, k = m[keep], k[keep]
        return m, k

    @property
    def dim(self) -> int:
        return self.labels()[0].size

    def parity(self) -> np.ndarray:
        m, k = self.labels()
        return (m + k) % 2


@dataclass
class Spectrum:
    eigenvalues: np.ndarray
    sector: str
    params_hash: str
    converged_count: int
    cutoff_used: int
    tol: float = float("nan")
    history: list = field(default_factory=list)

    @property
    def converged(self) -> np.ndarray:
        return self.eigenvalues[: self.converged_count]


def params_hash(eff: EffectiveParams, **extra) -> str:
    """Stable hash of every physics-relevant input."""
    p, a = eff.model, eff.ancilla
    payload = {
        "Omega": p.Omega, "omega": p.omega, "lambda": p.lam, "g": p.g, "N": p.N,
        "n_e": a.n_e, "n_o": a.n_o, "omega_e": a.omega_e, "omega_o": a.omega_o,
    }
    payload.update(extra)
    blob = json.dumps(payload, sort_keys=True, default=repr).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


# -- matrix assembly ---------------------------------------------------------


def _index_map(basis: SpinBosonBasis) -> np.ndarray:
    m, k = basis.labels()
    full = -np.ones((basis.M + 1) * (basis.N + 1), dtype=np.int64)
    full[m * (basis.N + 1) + k] = np.arange(m.size)
    return full


def _triplets(eff: EffectiveParams, basis: SpinBosonBasis, direct: bool):
    N, M, j = basis.N, basis.M, basis.j
    m, k = basis.labels()
    full = _index_map(basis)
    Omega = eff.Omega
    n = np.arange(m.size)
    if direct:
        p, a = eff.model, eff.ancilla
        gn = p.g * a.n
        omega_e = p.omega if a.omega_e is None else a.omega_e
        omega_o = p.omega if a.omega_o is None else a.omega_o
        shift = a.n_e * omega_e + a.n_o * omega_o
        # -g n (b + b^dag)^2 = -g n (b^2 + b^dag^2 + 2 b^dag b + 1)
        diag = p.omega * m + Omega * (k - j) - gn * (2 * m + 1) + shift
        coupling = p.lam / math.sqrt(N)
    else:
        diag = eff.omega_n * m + Omega * (k - j) + eff.C_n
        coupling = eff.lambda_n / math.sqrt(N)
    rows, cols, vals = [n], [n], [diag.astype(float)]

    def add(src, dst, v):
        rows.extend((dst, src))
        cols.extend((src, dst))
        vals.extend((v, v))

    for dk in (1, -1):
        ok = (m < M) & (k + dk >= 0) & (k + dk <= N)
        src = n[ok]
        mz = k[ok] - j
        dst = full[(m[ok] + 1) * (N + 1) + k[ok] + dk]
        v = coupling * np.sqrt(m[ok] + 1.0) * np.sqrt(j * (j + 1) - mz * (mz + dk))
        add(src, dst, v)
    if direct and gn != 0.0:
        ok = m + 2 <= M
        src = n[ok]
        dst = full[(m[ok] + 2) * (N + 1) + k[ok]]
        v = -gn * np.sqrt((m[ok] + 1.0) * (m[ok] + 2.0))
        add(src, dst, v)
    return np.concatenate(rows), np.concatenate(cols), np.concatenate(vals), m.size


def build_hamiltonian(
    eff: EffectiveParams,
    basis: SpinBosonBasis,
    form: str = "squeezed",
    fmt: str = "dense",
):
    """Matrix of the Dicke Hamiltonian in ``basis``.

    ``form="squeezed"`` builds H_n in the squeezed-mode Fock basis;
    ``form="direct"`` builds the untransformed Hamiltonian at fixed ancilla
    occupation, quadratic (b + b^dag)^2 term included, in the bare Fock basis.
    ``fmt`` is one of ``dense``, ``sparse`` (CSR) or ``banded`` (upper banded
    storage for :func:`scipy.linalg.eig_banded`).
    """
    if form not in ("squeezed", "direct"):
        raise InvalidParameter(f"unknown form {form!r}")
    rows, cols, vals, dim = _triplets(eff, basis, direct=form == "direct")
    if fmt == "dense":
        H = np.zeros((dim, dim))
        np.add.at(H, (rows, cols), vals)
        return H
    if fmt == "sparse":
        return sp.coo_matrix((vals, (rows, cols)), shape=(dim, dim)).tocsr()
    if fmt == "banded":
        return _to_banded(rows, cols, vals, dim)
    raise InvalidParameter(f"unknown matrix format {fmt!r}")


def _to_banded(rows, cols, vals, dim) -> np.ndarray:
    upper = rows <= cols
    r, c, v = rows[upper], cols[upper], vals[upper]
    u = int(np.max(c - r)) if r.size else 0
    ab = np.zeros((u + 1, dim))
    np.add.at(ab, (u + r - c, c), v)
    return ab


def parity_operator(basis: SpinBosonBasis) -> np.ndarray:
    """Diagonal of exp(i pi (b^dag b + J_z + N/2)) in ``basis``."""
    return 1.0 - 2.0 * basis.parity()


# -- eigensolvers ------------------------------------------------------------


def eigensolve(H, eigvecs: bool = False):
    """Full spectrum of a real-symmetric matrix, ascending.

    Returns the eigenvalues, or ``(eigenvalues, eigenvectors)``.
    """
    H = np.asarray(H, dtype=float)
    try:
        if eigvecs:
            return sla.eigh(H)
        return sla.eigh(H, eigvals_only=True)
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise NumericalFailure(str(exc)) from exc


def lowest_levels(ab: np.ndarray, count: int, eigvecs: bool = False):
    """Lowest ``count`` eigenpairs of an upper-banded symmetric matrix."""
    dim = ab.shape[1]
    count = min(count, dim)
    try:
        return sla.eig_banded(
            ab, lower=False, eigvals_only=not eigvecs, select="i",
            select_range=(0, count - 1), check_finite=False,
        )
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise NumericalFailure(str(exc)) from exc


def _next_cutoff(M: int) -> int:
    return max(M + 1, math.ceil(1.5 * M))


def converged_spectrum(
    eff: EffectiveParams,
    N: Optional[int] = None,
    sector: str = "even",
    tol: float = 1e-8,
    K_request: int = 100,
    M_start: Optional[int] = None,
    M_max: int = 4000,
    margin: float = 0.25,
) -> Spectrum:
    """Lowest levels of one sector, stable under a growing Fock cutoff.

    The cutoff follows M -> ceil(3M/2).  After each step the lowest levels
    are compared with the previous cutoff; ``converged_count`` is the length
    of the leading run that moved by less than ``tol``.  Iteration stops once
    that run covers ``K_request`` levels.
    """
    if not tol > 0:
        raise InvalidParameter("tol must be positive")
    if K_request < 1:
        raise InvalidParameter("K_request must be >= 1")
    N = eff.N if N is None else N
    n_eval = K_request + max(8, int(margin * K_request))
    per_m = (N + 1) / (2.0 if sector != "both" else 1.0)
    if M_start is None:
        M_start = max(8, math.ceil(2 * n_eval / per_m))
    M = min(M_start, M_max)
    if SpinBosonBasis(N, M_max, sector).dim < K_request:
        raise CutoffLimitExceeded(
            f"sector dimension at M_max={M_max} is below K_request={K_request}"
        )

    def levels(M):
        ab = build_hamiltonian(eff, SpinBosonBasis(N, M, sector), fmt="banded")
        return lowest_levels(ab, n_eval)

    prev = levels(M)
    history = []
    while True:
        if M >= M_max:
            raise CutoffLimitExceeded(
                f"K_request={K_request} levels not converged to {tol} below M_max={M_max}"
            )
        M_new = min(_next_cutoff(M), M_max)
        cur = levels(M_new)
        k = min(prev.size, cur.size)
        moved = np.abs(cur[:k] - prev[:k]) >= tol
        count = int(np.argmax(moved)) if moved.any() else k
        history.append((M_new, count))
        M, prev = M_new, cur
        if count >= K_request:
            break
    return Spectrum(
        eigenvalues=cur,
        sector=sector,
        params_hash=params_hash(eff, sector=sector, tol=tol, K_request=K_request),
        converged_count=count,
        cutoff_used=M,
        tol=tol,
        history=history,
    )


@dataclass
class GroundState:
    energy: float
    state: np.ndarray
    basis: SpinBosonBasis
    n_squeezed: float
    n_lab: float
    Jz: float


def lowest_eigenpair(ab: np.ndarray, max_iter: int = 8):
    """Ground eigenpair of an upper-banded symmetric matrix.

    The eigenvalue comes from the banded solver; the vector from inverse
    iteration with the shift placed just below it, where the shifted matrix
    is positive definite and a banded Cholesky solve is stable.  This avoids
    forming the full orthogonal reduction matrix.
    """
    E0 = float(lowest_levels(ab, 1)[0])
    scale = max(1.0, float(np.max(np.abs(ab))))
    shift = E0 - 1e-9 * scale
    shifted = ab.copy()
    shifted[-1] -= shift
    dim = ab.shape[1]
    x = np.ones(dim) / math.sqrt(dim)
    u = ab.shape[0] - 1
    for _ in range(max_iter):
        try:
            y = sla.solveh_banded(shifted, x, lower=False, check_finite=False)
        except (np.linalg.LinAlgError, ValueError) as exc:
            raise NumericalFailure(str(exc)) from exc
        y /= np.linalg.norm(y)
        if y @ x < 0:
            y = -y
        done = np.linalg.norm(y - x) < 1e-13
        x = y
        if done:
            break
    Hx = _banded_matvec(ab, x, u)
    return float(x @ Hx), x


def _banded_matvec(ab: np.ndarray, x: np.ndarray, u: int) -> np.ndarray:
    out = ab[u] * x
    for d in range(1, u + 1):
        band = ab[u - d, d:]
        out[:-d] += band * x[d:]
        out[d:] += band * x[:-d]
    return out


def ground_state(eff: EffectiveParams, basis: SpinBosonBasis) -> GroundState:
    """Lowest eigenpair and its photon/spin observables.

    ``n_lab`` is <b^dag b> of the unsqueezed mode, using
    b = cosh(r) b_n + sinh(r) b_n^dag.
    """
    if basis.sector == "odd":
        raise InvalidParameter("the ground state lies in the even sector")
    ab = build_hamiltonian(eff, basis, fmt="banded")
    energy, psi = lowest_eigenpair(ab)
    m, k = basis.labels()
    prob = psi * psi
    n_sq = float(prob @ m)
    jz = float(prob @ (k - basis.j))
    full = _index_map(basis)
    ok = m >= 2
    partner = full[(m[ok] - 2) * (basis.N + 1) + k[ok]]
    b2 = float(np.sum(psi[partner] * psi[ok] * np.sqrt(m[ok] * (m[ok] - 1.0))))
    r = eff.r_n
    n_lab = math.cosh(2 * r) * n_sq + math.sinh(r) ** 2 + math.sinh(2 * r) * b2
    return GroundState(energy, psi, basis, n_sq, n_lab, jz)


# -- interchange files -------------------------------------------------------


def spectrum_metadata(spec: Spectrum, eff: EffectiveParams) -> dict:
    p = eff.model
    return {
        "Omega": p.Omega, "omega": p.omega, "lambda": p.lam, "g": p.g,
        "n": eff.n, "N": p.N, "M": spec.cutoff_used, "sector": spec.sector,
        "tol": spec.tol, "converged_count": spec.converged_count,
        "params_hash": spec.params_hash,
    }


def spectrum_csv(spec: Spectrum, converged_only: bool = True) -> str:
    levels = spec.converged if converged_only else spec.eigenvalues
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["index", "energy", "sector"])
    for i, e in enumerate(levels):
        w.writerow([i, repr(float(e)), spec.sector])
    return buf.getvalue()


def write_spectrum(spec: Spectrum, eff: EffectiveParams, stem) -> tuple[Path, Path]:
    """Write ``<stem>.csv`` and ``<stem>.json``; returns both paths."""
    stem = Path(stem)
    stem.parent.mkdir(parents=True, exist_ok=True)
    csv_path, json_path = stem.with_suffix(".csv"), stem.with_suffix(".json")
    csv_path.write_text(spectrum_csv(spec))
    json_path.write_text(json.dumps(spectrum_metadata(spec, eff), indent=2, sort_keys=True) + "\n")
    return csv_path, json_path


def read_spectrum(stem) -> tuple[Spectrum, dict]:
    stem = Path(stem)
    meta = json.loads(stem.with_suffix(".json").read_text())
    with open(stem.with_suffix(".csv"), newline="") as fh:
        rows = list(csv.DictReader(fh))
    levels = np.array([float(r["energy"]) for r in rows])
    spec = Spectrum(
        eigenvalues=levels,
        sector=meta["sector"],
        params_hash=meta.get("params_hash", ""),
        converged_count=int(meta["converged_count"]),
        cutoff_used=int(meta["M"]),
        tol=float(meta["tol"]),
    )
    return spec, meta


def levels_from_files(stems: Sequence) -> list[np.ndarray]:
    return [read_spectrum(s)[0].converged for s in stems]
