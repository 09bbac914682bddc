import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dickechaos import classical as cl
from dickechaos import meanfield as mf
from dickechaos.errors import AtCriticalPoint, InvalidParameter, WrongPhase

from conftest import eff_for


def coupled_oscillator_frequencies(w, Om, lam):
    """(b + b^dag) = sqrt(2w) x_b and (d + d^dag) = sqrt(2 Om) x_d, so the
    quadratic form has the frequency matrix [[w^2, 2 lam sqrt(w Om)], [., Om^2]]."""
    k = 2.0 * lam * math.sqrt(w * Om)
    return np.sqrt(np.linalg.eigvalsh(np.array([[w * w, k], [k, Om * Om]])))


@pytest.mark.parametrize("lam,n", [(0.1, 0), (0.3, 0), (0.49, 0), (0.05, 1), (0.12, 1)])
def test_normal_frequencies_against_quadratic_form(lam, n):
    eff = eff_for(lam=lam, n=n)
    fr = mf.normal_frame(eff)
    ref = coupled_oscillator_frequencies(eff.omega_n, eff.Omega, eff.lambda_n)
    assert (fr.omega_minus, fr.omega_plus) == pytest.approx(tuple(ref), rel=1e-12)


@pytest.mark.parametrize("lam,n", [(0.6, 0), (0.9, 0), (0.3, 1), (0.6, 1)])
def test_superradiant_frame_against_classical_minimum(lam, n):
    eff = eff_for(lam=lam, n=n)
    fr = mf.superradiant_frame(eff)
    # H_cl is extensive in N, so its minimum per qubit and the curvature
    # there approach the displaced-frame values as N grows
    fp = cl.flow_params(eff, N=1e9)
    E, pt = cl.energy_minimum(fp)
    ev = np.linalg.eigvals(cl.jacobian(pt, fp))
    w = np.sort(np.sqrt(-(ev * ev).real))[::2]
    assert w == pytest.approx([fr.omega_minus, fr.omega_plus], rel=1e-6)
    assert E / 1e9 == pytest.approx(fr.E_ground, rel=1e-7)


def test_frequency_vanishes_at_threshold():
    for n in (0, 1):
        eff = eff_for(lam=0.0, n=n)
        w_minus, _ = mf.normal_frequencies(eff.omega_n, eff.Omega, eff.lambda_nc)
        assert w_minus < 1e-8
        w_minus, _ = mf.superradiant_frequencies(eff.omega_n, eff.Omega, eff.lambda_nc)
        assert w_minus < 1e-8


def test_frequencies_continuous_across_threshold():
    eff = eff_for(lam=0.0)
    lc = eff.lambda_nc
    lo = mf.normal_frequencies(eff.omega_n, eff.Omega, lc * (1 - 1e-9))
    hi = mf.superradiant_frequencies(eff.omega_n, eff.Omega, lc * (1 + 1e-9))
    assert lo[1] == pytest.approx(hi[1], abs=1e-7)
    assert lo[0] < 1e-4 and hi[0] < 1e-4


@settings(max_examples=200, deadline=None)
@given(lam=st.floats(0.0, 1.5), g=st.floats(0.0, 0.24), n=st.integers(0, 1),
       Omega=st.floats(0.3, 3.0))
def test_symplectic_normalisation(lam, g, n, Omega):
    eff = eff_for(lam=lam, n=n, g=g, Omega=Omega)
    try:
        fr = mf.frame_for(eff)
    except AtCriticalPoint:
        return
    nb, nd = fr.symplectic_norms()
    assert nb == pytest.approx(1.0, abs=1e-10)
    assert nd == pytest.approx(1.0, abs=1e-10)


def test_single_photon_breaks_the_symmetry():
    assert mf.phase_of(eff_for(lam=0.3, n=0)) == "normal"
    assert mf.phase_of(eff_for(lam=0.3, n=1)) == "superradiant"


def test_phase_errors():
    eff = eff_for(lam=0.3, n=1)
    with pytest.raises(WrongPhase):
        mf.normal_frame(eff)
    with pytest.raises(WrongPhase):
        mf.superradiant_frame(eff_for(lam=0.3, n=0))
    with pytest.raises(AtCriticalPoint):
        mf.frame_for(eff_for(lam=0.5, n=0))
    with pytest.raises(InvalidParameter):
        mf.superradiant_frame(eff, branch=0)


def test_branches_mirror_each_other():
    eff = eff_for(lam=0.3, n=1)
    a, b = mf.superradiant_frame(eff, branch=1), mf.superradiant_frame(eff, branch=-1)
    assert a.coherence == -b.coherence != 0.0
    assert (a.omega_minus, a.omega_plus, a.nu) == (b.omega_minus, b.omega_plus, b.nu)


def test_decoupled_limit_keeps_mode_identity():
    # at lambda -> 0 the b row must stay attached to omega_n even when omega_n < Omega
    eff = eff_for(lam=1e-9, n=1)
    fr = mf.normal_frame(eff)
    assert fr.omega_minus == pytest.approx(eff.omega_n, rel=1e-9)
    assert fr.xi_b[0] == pytest.approx(1.0, abs=1e-8)
    assert fr.xi_b[1] == pytest.approx(0.0, abs=1e-8)
    assert fr.E_ground == -0.5


def test_frame_dict_roundtrip():
    d = mf.frame_for(eff_for(lam=0.3, n=1)).as_dict()
    assert d["phase"] == "superradiant" and d["gamma_b"] > 0
