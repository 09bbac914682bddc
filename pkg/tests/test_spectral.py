import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad
from scipy.optimize import brentq

from dickechaos import spectral as sp
from dickechaos.errors import DegenerateFit, EmptyInput, InvalidParameter, TooFewLevels


def wigner(s):
    return 0.5 * np.pi * s * np.exp(-0.25 * np.pi * s * s)


def test_reference_laws_are_normalised_with_unit_mean():
    for k in (0, 1):
        def f(s, k=k):
            return sp.reference_pdfs(s)[k]
        assert quad(f, 0, np.inf)[0] == pytest.approx(1.0, abs=1e-10)
        assert quad(lambda s: s * f(s), 0, np.inf)[0] == pytest.approx(1.0, abs=1e-10)
    s = np.linspace(0, 5, 11)
    for k in (0, 1):
        cdf = [quad(lambda x: sp.reference_pdfs(x)[k], 0, v)[0] for v in s]
        assert np.allclose(sp.reference_cdfs(s)[k], cdf, atol=1e-12)


def test_crossing_point():
    root = brentq(lambda s: np.exp(-s) - wigner(s), 0.1, 1.0, xtol=1e-14)
    assert root == pytest.approx(sp.S0, abs=1e-6)


def quantile_sample(law, count=20000):
    u = (np.arange(count) + 0.5) / count
    if law == "poisson":
        return -np.log1p(-u)
    return np.sqrt(-4.0 / np.pi * np.log1p(-u))


def test_eta_on_exact_quantile_samples():
    assert sp.eta(quantile_sample("poisson")) == pytest.approx(1.0, abs=1e-3)
    assert sp.eta(quantile_sample("wigner")) == pytest.approx(0.0, abs=1e-3)


def test_unfolding_polynomial_staircase_is_exact():
    # N(E) = E^2 is a polynomial, so the fit reproduces it and every spacing is 1
    levels = np.sqrt(np.arange(1.0, 401.0))
    s = sp.unfold(levels, degree=6, trim_fraction=0.05)
    assert s.size == 400 - 2 * 20 - 1
    assert np.allclose(s, 1.0, atol=1e-6)


@settings(max_examples=50, deadline=None)
@given(scale=st.floats(1e-3, 1e3), shift=st.floats(-1e3, 1e3), seed=st.integers(0, 2**31))
def test_unfolding_is_affine_invariant(scale, shift, seed):
    levels = sp.poisson_levels(300, np.random.default_rng(seed))
    a = sp.unfold(levels)
    b = sp.unfold(scale * levels + shift)
    assert np.allclose(a, b, atol=1e-6)
    assert a.mean() == pytest.approx(1.0)


def test_unfolding_errors():
    with pytest.raises(TooFewLevels):
        sp.unfold(np.arange(10.0))
    with pytest.raises(InvalidParameter):
        sp.unfold(np.arange(100.0), trim_fraction=0.5)
    gapped = np.concatenate([np.linspace(0, 1, 100), np.linspace(100, 101, 100)])
    with pytest.raises(DegenerateFit):
        sp.unfold(gapped)
    with pytest.raises(EmptyInput):
        sp.eta([])


def test_histogram_single_spacing():
    h = sp.spacing_histogram([1.0], bin_width=0.5)
    nonzero = np.flatnonzero(h.counts)
    assert nonzero.tolist() == [2]
    assert h.edges[2] == 1.0 and h.edges[3] == 1.5
    assert h.densities[2] == 2.0
    with pytest.raises(InvalidParameter):
        sp.spacing_histogram([1.0], bin_width=0.0)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(0.0, 6.0), min_size=1, max_size=300), st.sampled_from([0.05, 0.1, 0.25]))
def test_histogram_is_a_density(s, w):
    h = sp.spacing_histogram(s, w)
    assert h.counts.sum() == len(s)
    assert np.sum(h.densities * np.diff(h.edges)) == pytest.approx(1.0)


def test_histogram_eta_tracks_cdf_eta():
    s = sp.unfold(sp.goe_levels(600, np.random.default_rng(4)))
    fine = sp.eta_from_histogram(sp.spacing_histogram(s, 0.001))
    assert fine == pytest.approx(sp.eta(s), abs=0.02)


def test_sector_pooling_preserves_repulsion():
    rng = np.random.default_rng(9)
    a, b = sp.goe_levels(500, rng), sp.goe_levels(500, rng)
    pooled = sp.pooled_spacings([a, b])
    mixed = sp.unfold(np.concatenate([a, b]))
    assert sp.eta(pooled) < 0.15
    # superposing two independent spectra fills in small spacings
    assert sp.eta(mixed) > sp.eta(pooled) + 0.2


def test_spacing_stats_outputs():
    rng = np.random.default_rng(2)
    st_ = sp.spacing_stats([sp.poisson_levels(400, rng), sp.poisson_levels(400, rng)])
    assert st_.count == 2 * (400 - 40 - 1)
    assert st_.histogram_csv().splitlines()[0] == "s,count,density"
    assert '"s0": 0.472913' in st_.result_json()


def test_reference_ensembles_follow_their_laws():
    rng = np.random.default_rng(0)
    goe = sp.unfold(sp.goe_levels(400, rng))
    poi = sp.unfold(sp.poisson_levels(4000, rng))
    assert sp.ks_distance(goe, lambda x: sp.reference_cdfs(x)[1]) < 0.06
    assert sp.ks_distance(poi, lambda x: sp.reference_cdfs(x)[0]) < 0.04
