import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.linalg import expm

from dickechaos import echo
from dickechaos import meanfield as mf
from dickechaos import quantum as q
from dickechaos.errors import CutoffTooSmall, InvalidParameter
from dickechaos.model import ModelParams

from conftest import eff_for


def expm_echo(H_v, H_u, G, times):
    out = []
    for t in times:
        a = expm(-1j * H_v * t) @ G
        b = expm(-1j * H_u * t) @ G
        out.append(abs(np.vdot(a, b)) ** 2)
    return np.array(out)


def test_hp_form_is_the_collective_spin_hamiltonian():
    eff = eff_for(lam=0.2, n=0, N=20)
    H_v, H_u = echo.build_hp_hamiltonians(eff, M=30, delta_tilde=0.0)
    H_spin = q.build_hamiltonian(eff, q.SpinBosonBasis(20, 30, "even"))
    assert np.abs(H_u - H_spin).max() < 1e-12
    assert np.array_equal(H_v, H_u)
    low = np.linalg.eigvalsh(H_u)[:20]
    assert np.abs(low - q.eigensolve(H_spin)[:20]).max() < 1e-3


def test_frequency_assignment():
    eff = eff_for(lam=0.2, n=1, N=4)
    H_v, H_u = echo.build_hp_hamiltonians(eff, M=6, delta_tilde=0.01)
    m, _ = echo.hp_basis(4, 6).labels()
    assert np.allclose(np.diag(H_u - H_v), 0.02 * m)


def test_echo_matches_matrix_exponential():
    eff = eff_for(lam=0.35, n=1, N=4)
    basis = echo.hp_basis(4, 24)
    H_v, H_u = echo.build_hp_hamiltonians(eff, M=24, delta_tilde=0.05)
    G = echo.initial_state(eff, basis)
    times = np.linspace(0, 20, 9)
    assert np.allclose(echo.loschmidt_echo(H_v, H_u, G, times), expm_echo(H_v, H_u, G, times),
                       atol=1e-10)


def test_swapping_the_probe_levels_leaves_the_echo_unchanged():
    eff = eff_for(lam=0.3, n=1, N=6)
    basis = echo.hp_basis(6, 40)
    H_v, H_u = echo.build_hp_hamiltonians(eff, M=40, delta_tilde=0.02)
    G = echo.initial_state(eff, basis)
    t = np.linspace(0, 50, 26)
    assert np.allclose(echo.loschmidt_echo(H_v, H_u, G, t), echo.loschmidt_echo(H_u, H_v, G, t),
                       atol=1e-12)


def test_even_sector_equals_full_space():
    eff = eff_for(lam=0.3, n=1, N=6)
    t = np.linspace(0, 50, 11)
    Le = echo.loschmidt_echo(*echo.build_hp_hamiltonians(eff, M=40, delta_tilde=0.02),
                             echo.initial_state(eff, echo.hp_basis(6, 40)), t)
    full = echo.hp_basis(6, 40, "both")
    Hv, Hu = echo.build_hp_hamiltonians(eff, M=40, delta_tilde=0.02, sector="both")
    # the exact ground state embedded in the full space
    even = echo.hp_basis(6, 40, "even")
    mf_, kf = full.labels()
    me, ke = even.labels()
    pos = {(a, b): i for i, (a, b) in enumerate(zip(mf_, kf))}
    G = np.zeros(full.dim)
    G[[pos[(a, b)] for a, b in zip(me, ke)]] = echo.initial_state(eff, even)
    assert np.abs(echo.loschmidt_echo(Hv, Hu, G, t) - Le).max() < 1e-10


def test_echo_requires_normalised_state():
    eff = eff_for(lam=0.1, N=2)
    H_v, H_u = echo.build_hp_hamiltonians(eff, M=4, delta_tilde=0.1)
    with pytest.raises(InvalidParameter):
        echo.loschmidt_echo(H_v, H_u, np.ones(H_v.shape[0]), [0.0])


def test_bare_vacuum_choice():
    basis = echo.hp_basis(4, 5)
    G = echo.initial_state(eff_for(N=4), basis, "bare-vacuum")
    assert G.sum() == 1.0 and G[0] == 1.0
    with pytest.raises(InvalidParameter):
        echo.initial_state(eff_for(N=4), basis, "coherent")


def two_mode_variance(eff, cut=30):
    """Photon-number variance of the ground state of the N -> inf quadratic model."""
    b = np.diag(np.sqrt(np.arange(1.0, cut)), 1)
    one = np.eye(cut)
    B, D = np.kron(b, one), np.kron(one, b)
    H = (eff.omega_n * B.T @ B + eff.Omega * D.T @ D
         + eff.lambda_n * (B + B.T) @ (D + D.T))
    _, V = np.linalg.eigh(H)
    g = V[:, 0]
    nb = B.T @ B
    return g @ nb @ nb @ g - (g @ nb @ g) ** 2


@pytest.mark.parametrize("lam,n", [(0.2, 0), (0.4, 0), (0.05, 1), (0.1, 1)])
def test_gaussian_variance_matches_quadratic_ground_state(lam, n):
    eff = eff_for(lam=lam, n=n)
    rho = echo.photon_variance(mf.normal_frame(eff), "gaussian")
    assert rho == pytest.approx(two_mode_variance(eff), rel=1e-6, abs=1e-12)


def test_variance_forms_coincide_at_resonance():
    for lam in (0.1, 0.3, 0.45):
        fr = mf.normal_frame(eff_for(lam=lam, n=0))
        assert echo.photon_variance(fr, "closed") == pytest.approx(
            echo.photon_variance(fr, "gaussian"), rel=1e-12)
    with pytest.raises(InvalidParameter):
        echo.photon_variance(fr, "exact")


def test_short_time_reference():
    fr = mf.normal_frame(eff_for(lam=0.3))
    vals, rho = echo.short_time_echo(fr, 0.01, [0.0, 1.0, 2.0])
    assert vals[0] == 1.0
    assert vals[2] == pytest.approx(math.exp(-4 * rho * 1e-4 * 4))


@pytest.mark.parametrize("alpha,beta", [(1.0, 0.0), (0.0, 1.0), (2**-0.5, 2**-0.5),
                                        (0.6, 0.8j)])
def test_purity_cases(alpha, beta):
    L = np.array([1.0, 0.5, 0.0])
    P = echo.purity(alpha, beta, L)
    assert P[0] == 1.0
    assert P[2] == pytest.approx(1 - 2 * abs(alpha * beta) ** 2)
    if alpha * beta == 0:
        assert np.all(P == 1.0)


def test_echo_params_validation():
    with pytest.raises(InvalidParameter):
        echo.EchoParams(delta_tilde=-1e-3)
    with pytest.raises(InvalidParameter):
        echo.EchoParams(alpha=1.0, beta=0.1)
    with pytest.raises(CutoffTooSmall):
        echo.EchoParams(M=0)
    with pytest.raises(InvalidParameter):
        echo.EchoParams(times=())
    p = echo.EchoParams.from_atom(omega_s=1.2, lambda_s=0.01)
    assert p.delta_tilde == pytest.approx(0.0005)
    assert echo.EchoParams.from_atom(omega_s=0.8, lambda_s=0.01).delta_tilde == p.delta_tilde
    with pytest.raises(InvalidParameter):
        echo.EchoParams.from_atom(omega_s=1.005, lambda_s=0.01)


def test_zero_detuning_gives_flat_echo():
    s = echo.echo_series(eff_for(lam=0.3, n=1), echo.EchoParams(delta_tilde=0.0, N=8,
                                                                times=(0, 10, 100)))
    assert np.abs(s.L - 1.0).max() < 1e-12
    assert np.abs(s.purity - 1.0).max() < 1e-12


@settings(max_examples=10, deadline=None)
@given(lam=st.floats(0.0, 0.6), n=st.integers(0, 1), dt=st.floats(0.0, 0.05),
       choice=st.sampled_from(echo.G_CHOICES))
def test_series_invariants(lam, n, dt, choice):
    p = echo.EchoParams(delta_tilde=dt, N=6, times=tuple(np.linspace(0, 40, 21)))
    s = echo.echo_series(eff_for(lam=lam, n=n), p, choice)
    assert s.L[0] == pytest.approx(1.0, abs=1e-12)
    assert np.all((s.L >= 0) & (s.L <= 1.0))
    assert np.all(s.purity >= 1 - 2 * abs(p.alpha * p.beta) ** 2 - 1e-10)
    assert s.meta["tail_weight"] < 1e-10


def test_cutoff_controller_contains_the_ground_state():
    eff = eff_for(lam=0.3, n=1, N=10)
    M = echo.choose_cutoff(eff)
    basis = echo.hp_basis(10, M)
    assert echo._tail_weight(echo.initial_state(eff, basis)[:, None], basis) < 1e-10
    smaller = echo.hp_basis(10, math.floor(M / 1.25) - 1)
    assert echo._tail_weight(echo.initial_state(eff, smaller)[:, None], smaller) >= 1e-10


def test_quadratic_scaling_in_detuning():
    eff = eff_for(lam=0.3, n=1)
    t = (5.0, 10.0)
    a = echo.echo_series(eff, echo.EchoParams(delta_tilde=1e-3, N=10, times=t))
    b = echo.echo_series(eff, echo.EchoParams(delta_tilde=5e-4, N=10, times=t))
    assert (1 - a.L) / (1 - b.L) == pytest.approx([4.0, 4.0], rel=0.05)


def test_sweep_order_and_errors():
    model = ModelParams(g=0.2, N=6)
    p = echo.EchoParams(delta_tilde=0.01, N=6, times=(20.0,))
    lams = [0.3, 0.1, 0.2]
    serial = echo.echo_sweep(model, lams, (0, 2), 20.0, p)
    pooled = echo.echo_sweep(model, lams, (0, 2), 20.0, p, workers=2)
    assert [(x.n, x.lam) for x in serial] == [(0, 0.3), (0, 0.1), (0, 0.2),
                                              (2, 0.3), (2, 0.1), (2, 0.2)]
    assert echo.sweep_csv(serial) == echo.sweep_csv(pooled)
    # 4 n g = 1.6 >= 1: those points fail individually
    assert all(x.error.startswith("SqueezingDiverges") for x in serial if x.n == 2)
    assert all(not x.error for x in serial if x.n == 0)
    assert echo.first_crossing(serial, 0, level=2.0) == 0.3
    assert echo.first_crossing(serial, 0, level=0.0) is None


def test_series_files():
    s = echo.echo_series(eff_for(lam=0.2), echo.EchoParams(N=6, times=(0.0, 1.0)))
    assert s.to_csv().splitlines()[0] == "t,L,purity,L_short_time"
    assert '"G_choice": "exact"' in s.metadata_json()


def exact_variance(eff, N=100, M=30):
    gs = q.ground_state(eff, q.SpinBosonBasis(N, M, "even"))
    m, _ = gs.basis.labels()
    p = gs.state**2
    return p @ (m * m) - (p @ m) ** 2


@pytest.mark.parametrize("lam", [0.05, 0.1, 0.2])
def test_closed_form_variance_at_resonance(lam):
    eff = eff_for(lam=lam, n=0, N=100)
    rho = echo.photon_variance(mf.normal_frame(eff), "closed")
    assert rho == pytest.approx(exact_variance(eff), rel=0.15)


@pytest.mark.parametrize("lam", [0.02, 0.05, 0.08])
def test_gaussian_variance_off_resonance(lam):
    # with omega_n != Omega only the Gaussian form tracks the exact state
    eff = eff_for(lam=lam, n=1, N=100)
    rho = echo.photon_variance(mf.normal_frame(eff), "gaussian")
    assert rho == pytest.approx(exact_variance(eff), rel=0.15)


def test_weak_coupling_echo_barely_decays():
    s = echo.echo_series(eff_for(lam=0.05, n=0), echo.EchoParams(N=40, times=(0.0, 50.0, 100.0)))
    assert s.L[-1] > 0.99
