import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from liphilbert.adapted import (
    AdaptedProjector,
    CurveLattice,
    adapted_square_function_ratio,
    adjoint_square_function_ratio,
    band_weight,
    commutator_decay_experiment,
    commutator_on_curves,
    fit_decay,
    random_band_limited,
    split_main_commutator,
)
from liphilbert.directional import DirectionalOperator, single_scale_symbol
from liphilbert.frequency import LP_PROFILE, lp_project, lp_symbol
from liphilbert.grid import SampledField, TorusGrid, from_spectrum, interpolate
from liphilbert.lipschitz import (
    constant_direction,
    identity_family,
    random_sinusoidal_family,
    random_step_direction,
    zero_direction,
)


@pytest.fixture(scope="module")
def curved(grid64):
    return CurveLattice(grid64, random_sinusoidal_family(0.05, seed=1), random_step_direction(8, 0.08, seed=1))


def test_vertical_lines_reduce_to_plain_multiplier(grid64, rng):
    lat = CurveLattice(grid64, identity_family(), zero_direction())
    f = random_band_limited(grid64, rng, 0.5)
    for k in (1, 2, 3, 4):
        got = AdaptedProjector(lat, k, 0).apply(f)
        ref = from_spectrum(grid64, f.spectrum * lp_symbol(grid64, k, cone=False))
        assert (got - ref).norm() < 1e-13


def test_restriction_is_interpolation(curved, rng):
    f = random_band_limited(curved.grid, rng, 0.5)
    V = curved.restrict(f)
    i, j = 5, 17
    ref, _ = interpolate(f, np.array([[curved.X[i, j], j / 64]]))
    assert abs(V[i, j] - ref[0]) < 1e-12


def test_lattice_adjoints(curved, rng):
    g = curved.grid
    f = random_band_limited(g, rng, 0.5)
    h = random_band_limited(g, rng, 0.5)
    W = rng.standard_normal((64, 64)) + 1j * rng.standard_normal((64, 64))
    assert abs(np.mean(curved.restrict(f) * np.conj(W)) - f.inner(curved.restrict_adjoint(W))) < 1e-14
    assert abs(curved.push(W).inner(h) - np.mean(W * np.conj(curved.push_adjoint(h)))) < 1e-14


@pytest.mark.parametrize("envelope", [0, 1])
def test_projector_adjoint(curved, rng, envelope):
    g = curved.grid
    f = random_band_limited(g, rng, 0.5)
    h = random_band_limited(g, rng, 0.5)
    P = AdaptedProjector(curved, 3, envelope)
    assert abs(P.apply(f).inner(h) - f.inner(P.adjoint(h))) < 1e-14


def test_envelope_reproduces_band_on_curves(rng):
    # band-k chart data is left unchanged by the width-1 envelope; the chart
    # coefficients come from a smooth periodic rule, exact to roundoff once
    # the curves are resolved (n = 128 here)
    g = TorusGrid(128)
    lat = CurveLattice(g, random_sinusoidal_family(0.05, seed=1), random_step_direction(8, 0.08, seed=1))
    V = rng.standard_normal((128, 128)) + 0j
    band = AdaptedProjector(lat, 3, 0).on_curves(V)
    again = AdaptedProjector(lat, 3, 1).on_curves(band)
    assert np.max(np.abs(again - band)) < 1e-12 * np.max(np.abs(band))


def test_band_weight_support():
    w, nu_max = band_weight(3)
    assert nu_max == pytest.approx(LP_PROFILE.cutoff * 8)
    assert w(np.array([nu_max * 1.01]))[0] == 0
    w1, _ = band_weight(3, 1)
    assert w1(np.array([8.0]))[0] == pytest.approx(1.0)


def test_charts_within_bound(curved):
    assert curved.check_charts() <= (1 + 0.05) / (1 - 0.05)


def test_rejects_steep_direction(grid64):
    with pytest.raises(ValueError):
        CurveLattice(grid64, identity_family(), constant_direction(1.0))


@given(st.integers(0, 2**31 - 1))
def test_adapted_square_function_near_one(seed):
    g = TorusGrid(64)
    lat = CurveLattice(g, random_sinusoidal_family(0.01, seed=seed % 7), random_step_direction(8, 0.08, seed=seed))
    f = random_band_limited(g, np.random.default_rng(seed), 0.5)
    r = adapted_square_function_ratio(lat, f, g.lp_band())
    assert 0.5 <= r <= 1.5


def test_adjoint_square_function(curved, rng):
    g = curved.grid
    hs = {k: random_band_limited(g, rng, 0.5) for k in g.design_band()}
    r = adjoint_square_function_ratio(curved, hs, g.design_band())
    assert 0 < r <= 1.5


def test_split_identity_is_exact(grid64, rng):
    fam = random_sinusoidal_family(0.01, seed=2)
    d = random_step_direction(8, 0.08, seed=3)
    opv = DirectionalOperator(grid64, fam, d)
    lat = CurveLattice(grid64, fam, d)
    f = random_band_limited(grid64, rng, 0.5)
    main, comm = split_main_commutator(opv, lat, f, 1)
    total = sum(
        opv.apply_symbol(lp_project(f, k), single_scale_symbol(k - 1)).values for k in grid64.design_band()
    )
    assert np.max(np.abs(main.values + comm.values - total)) < 1e-13


def test_split_rejects_negative_gap(grid64, rng):
    opv = DirectionalOperator(grid64, identity_family(), zero_direction())
    lat = CurveLattice(grid64, identity_family(), zero_direction())
    with pytest.raises(ValueError):
        split_main_commutator(opv, lat, random_band_limited(grid64, rng), -1)


def test_commutator_vanishes_for_vertical_lines(grid64, rng):
    lat = CurveLattice(grid64, identity_family(), random_step_direction(6, 0.08, seed=0))
    f = random_band_limited(grid64, rng, 0.5)
    C = commutator_on_curves(lat, f, 1, grid64.design_band())
    assert lat.lattice_norm(C) < 1e-12


def test_fit_decay_on_geometric_data():
    ls = [1, 2, 3, 4]
    gamma, r2 = fit_decay(ls, [3.0 * 2.0 ** (-0.7 * l) for l in ls])
    assert gamma == pytest.approx(0.7) and r2 == pytest.approx(1.0)


def test_random_band_limited(grid64, rng):
    f = random_band_limited(grid64, rng, 0.25, cone=True)
    assert f.norm() == pytest.approx(1.0)
    assert abs(f.spectrum[0, 0]) < 1e-14
    XI, ETA = grid64.freq_mesh()
    assert np.max(np.abs(f.spectrum[np.abs(XI) > np.abs(ETA)])) < 1e-14


def test_decay_experiment_small():
    g = TorusGrid(128)
    res = commutator_decay_experiment(
        g, random_sinusoidal_family(0.01, seed=0), random_step_direction(8, 0.08, seed=0), [1, 2, 3], trials=1
    )
    assert res.gamma_hat > 0.3
    assert all(b < a for a, b in zip(res.rho, res.rho[1:]))
    assert res.to_dict()["family_params"]["n"] == 128
