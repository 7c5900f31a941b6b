import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.optimize import brentq

from liphilbert.grid import SampledField, TorusGrid
from liphilbert.lipschitz import (
    FamilyError,
    PreconditionError,
    coarea_integral,
    constant_direction,
    direction_from_config,
    family_from_config,
    identity_family,
    lacunary_family,
    chart_lipschitz_bound,
    project,
    random_sinusoidal_family,
    random_step_direction,
    reparametrize_curve,
    scaled_family,
    sector_count,
    shear_family,
    sinusoidal_family,
    slope_field,
    step_direction,
)


@given(st.integers(0, 50), st.floats(-2, 2), st.floats(-2, 2))
def test_projection_matches_bracketed_root(seed, x, y):
    fam = random_sinusoidal_family(0.2, seed=seed)
    xt = float(project(fam, x, y))
    ref = brentq(lambda s: fam.g(s, y) - x, x - 2, x + 2, xtol=1e-14)
    assert abs(xt - ref) < 1e-10


def test_projection_inverts_family(rng):
    fam = lacunary_family(0.05, 5, seed=1)
    A = rng.uniform(-1, 2, 500)
    Y = rng.uniform(-1, 2, 500)
    assert np.max(np.abs(project(fam, fam.g(A, Y), Y) - A)) < 1e-11


def test_identity_projection_is_x(rng):
    x, y = rng.random(50), rng.random(50)
    assert np.allclose(project(identity_family(), x, y), x)


def test_declared_constants_hold():
    for seed in range(5):
        fam = random_sinusoidal_family(0.1, seed=seed)
        fam.check_admissible()
        a0, b0 = fam.measured_constants()
        assert b0 <= 0.1 + 1e-12 and a0 <= fam.a0 * (1 + 1e-9)


def test_b0_above_half_rejected():
    fam = sinusoidal_family([(0.6 / (2 * math.pi), 0, 1, 0)])
    with pytest.raises(FamilyError):
        fam.check_admissible()


def test_non_integer_frequency_rejected():
    with pytest.raises(FamilyError):
        sinusoidal_family([(0.01, 0.5, 1, 0)])


def test_scaled_family_scales_offset(rng):
    fam = lacunary_family(0.02, 4, seed=0)
    half = scaled_family(fam, 0.5)
    x, y = rng.random(20), rng.random(20)
    assert np.allclose(half.offset(x, y), 0.5 * fam.offset(x, y))


@pytest.mark.parametrize(
    "fam",
    [identity_family(), sinusoidal_family([(0.01, 1, 2, 0.3)]), lacunary_family(0.01, 3, seed=2)],
    ids=["identity", "sinusoidal", "lacunary"],
)
def test_family_config_roundtrip(fam, rng):
    back = family_from_config(fam.to_config())
    x, y = rng.random(30), rng.random(30)
    assert np.array_equal(back.g(x, y), fam.g(x, y))


def test_unknown_family_rejected():
    with pytest.raises(FamilyError):
        family_from_config({"name": "spiral"})


def test_step_direction_values():
    d = step_direction([0.1, -0.2, 0.05], [0.25, 0.5])
    assert np.allclose(d(np.array([0.1, 0.3, 0.9, 1.1])), [0.1, -0.2, 0.05, 0.1])
    assert d.sup_norm == pytest.approx(0.2)
    with pytest.raises(FamilyError):
        step_direction([0.1, 0.2], [0.5, 0.6])


def test_direction_config_roundtrip():
    d = random_step_direction(6, 0.3, seed=4)
    back = direction_from_config(d.to_config())
    t = np.linspace(0, 1, 101)
    assert np.array_equal(back(t), d(t))


def test_slope_field_constant_on_curves(grid64):
    fam = sinusoidal_family([(0.02, 1, 1, 0.0)])
    d = random_step_direction(8, 0.08, seed=0)
    s = slope_field(grid64, fam, d)
    P = np.mod(project(fam, *grid64.mesh()), 1.0)
    assert np.array_equal(s, d(P))


@given(st.integers(0, 200), st.floats(0, 1))
def test_chart_lipschitz_below_bound(seed, anchor):
    fam = random_sinusoidal_family(0.1, seed=seed % 20)
    d = random_step_direction(8, 0.9, seed=seed)
    chart = reparametrize_curve(fam, d, anchor)
    assert chart.lipschitz <= chart_lipschitz_bound(0.1) + 1e-9


def test_chart_of_straight_line():
    # for the identity family every curve is vertical; after rotating by theta
    # the chart graph is the line of slope tan(theta)
    chart = reparametrize_curve(identity_family(), constant_direction(0.3), 0.2)
    yp, xp = chart.sample(64)
    assert np.allclose(np.diff(xp) / np.diff(yp), 0.3)


def test_chart_precondition():
    with pytest.raises(PreconditionError):
        reparametrize_curve(identity_family(), constant_direction(1.0), 0.0)


def test_chart_inverse(rng):
    chart = reparametrize_curve(lacunary_family(0.2, 5, seed=3), constant_direction(-0.4), 0.7)
    t = rng.uniform(-1, 2, 100)
    assert np.allclose(chart.param_of_yprime(chart.chart_of_param(t)[1]), t, atol=1e-11)


def test_coarea_jacobian_reproduces_area_integral():
    g = TorusGrid(128)
    fam = sinusoidal_family([(0.03, 1, 2, 0.4)])
    f = SampledField.from_function(g, lambda x, y: 1.5 + np.cos(2 * np.pi * (x + y)))
    area = float(np.mean(np.abs(f.values)))
    assert abs(coarea_integral(fam, f, "jacobian") - area) < 1e-6 * area
    arc = coarea_integral(fam, f, "arclength")
    assert area / 2 <= arc <= 2 * area


def test_shear_family_is_not_periodic():
    assert not shear_family(0.1).periodic


def test_sector_count_exceeds_ratio():
    for d0 in (0.1, 0.5, 1.0, math.pi):
        N = sector_count(d0)
        assert N > 6 * math.pi / d0 and N - 1 <= 6 * math.pi / d0
