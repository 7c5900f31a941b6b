import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.signal import hilbert as analytic_signal
from scipy.sparse.linalg import LinearOperator

from liphilbert.adapted import random_band_limited
from liphilbert.directional import (
    DirectionalOperator,
    LinearityError,
    QuadratureConfigError,
    QuadratureSpec,
    TruncationError,
    apply_hl,
    apply_hv,
    apply_hv_truncated,
    estimate_norm,
    hilbert_symbol,
    hl_decomposition,
    single_scale_symbol,
    truncated_by_quadrature,
)
from liphilbert.frequency import BandError
from liphilbert.grid import SampledField, TorusGrid
from liphilbert.lipschitz import (
    constant_direction,
    identity_family,
    random_sinusoidal_family,
    random_step_direction,
    sinusoid_direction,
    zero_direction,
)


def _op(grid, fam=None, dirf=None, **kw):
    return DirectionalOperator(grid, fam or identity_family(), dirf or zero_direction(), **kw)


def test_horizontal_transform_matches_analytic_signal(grid64, rng):
    # real band-limited data without the Nyquist row: H f = pi * imag(analytic signal) along x
    f = random_band_limited(grid64, rng, 0.4)
    f = SampledField(grid64, f.values.real)
    ref = np.pi * np.imag(analytic_signal(f.values.real, axis=0))
    assert np.max(np.abs(apply_hv(_op(grid64), f).values - ref)) < 1e-12


@given(st.integers(-12, 12), st.integers(-12, 12), st.floats(-0.5, 0.5))
def test_constant_slope_plane_wave(a, b, c):
    # e(a x + b y) along (1, c) picks up -i pi sgn(a + c b)
    g = TorusGrid(32)
    f = SampledField.from_function(g, lambda x, y: np.exp(2j * np.pi * (a * x + b * y)))
    out = apply_hv(_op(g, dirf=constant_direction(c)), f)
    lam = a + c * b
    assert np.max(np.abs(out.values + 1j * np.pi * np.sign(lam) * f.values)) < 1e-11


def test_step_field_acts_curvewise(grid64, rng):
    # with vertical curves, each column is transformed with its own constant slope
    d = random_step_direction(5, 0.3, seed=1)
    op = _op(grid64, dirf=d)
    f = random_band_limited(grid64, rng, 0.4)
    out = apply_hv(op, f)
    for c in op.level_values:
        ref = apply_hv(_op(grid64, dirf=constant_direction(c)), f)
        mask = np.isclose(op.slopes, c)
        assert np.max(np.abs(out.values[mask] - ref.values[mask])) < 1e-12


def test_pointwise_route_matches_levels(grid64, rng):
    fam = random_sinusoidal_family(0.05, seed=3)
    d = random_step_direction(6, 0.08, seed=3)
    f = random_band_limited(grid64, rng, 0.4)
    a = _op(grid64, fam, d)
    b = _op(grid64, fam, d, max_levels=0)
    assert a.route == "levels" and b.route == "pointwise"
    for sym in (hilbert_symbol(), single_scale_symbol(3)):
        assert np.max(np.abs(a.apply_symbol(f, sym).values - b.apply_symbol(f, sym).values)) < 1e-11


@pytest.mark.parametrize("route_levels", [64, 0])
def test_adjoint_identity(grid64, rng, route_levels):
    op = _op(grid64, random_sinusoidal_family(0.05, seed=1), sinusoid_direction(0.08, 2), max_levels=route_levels)
    f = random_band_limited(grid64, rng, 0.5)
    h = random_band_limited(grid64, rng, 0.5)
    for sym in (hilbert_symbol(), single_scale_symbol(2)):
        lhs = op.apply_symbol(f, sym).inner(h)
        rhs = f.inner(op.adjoint_symbol(h, sym))
        assert abs(lhs - rhs) < 1e-12


@pytest.mark.parametrize("eps0", [0.5, 0.2, 0.05])
def test_truncated_matches_quadrature(grid64, rng, eps0):
    # midpoint p.v. quadrature converges to the sine-integral symbol at second order
    op = _op(grid64, random_sinusoidal_family(0.05, seed=0), random_step_direction(4, 0.2, seed=0))
    f = random_band_limited(grid64, rng, 0.25)
    pts = rng.integers(0, 64, size=(6, 2))
    ref = apply_hv_truncated(op, f, eps0).values[pts[:, 0], pts[:, 1]]
    errs = [
        np.max(np.abs(truncated_by_quadrature(op, f, eps0, pts, QuadratureSpec(eps0, m)) - ref))
        for m in (128, 256)
    ]
    assert errs[1] < 1e-5 * np.max(np.abs(ref))
    assert errs[1] < 1e-9 or 3.5 < errs[0] / errs[1] < 4.5


def test_truncation_bounds(grid64):
    f = SampledField.zeros(grid64)
    for bad in (0.0, -0.1, 0.6):
        with pytest.raises(TruncationError):
            apply_hv_truncated(_op(grid64), f, bad)


def test_quadrature_needs_resolution():
    with pytest.raises(QuadratureConfigError):
        QuadratureSpec(0.5, 4)


def test_hl_band_check(grid64):
    with pytest.raises(BandError):
        apply_hl(_op(grid64), SampledField.zeros(grid64), 50)


def test_single_scale_decomposition(grid64, rng):
    f = random_band_limited(grid64, rng, 0.5)
    op = _op(grid64, dirf=random_step_direction(5, 0.08, seed=2))
    full = hl_decomposition(op, f, grid64.hl_band())
    ref = apply_hv(op, f)
    # modes with zero directional frequency are the only disagreement; the
    # horizontal-free data below has none on the constant-slope levels
    XI, ETA = grid64.freq_mesh()
    keep = XI != 0
    f2 = SampledField(grid64, np.fft.ifft2(f.spectrum * keep, norm="ortho"))
    op0 = _op(grid64)
    assert (hl_decomposition(op0, f2, grid64.hl_band()) - apply_hv(op0, f2)).norm() < 1e-12
    assert np.isfinite(full.norm()) and full.norm() <= 2 * math.pi * f.norm()
    assert ref.norm() <= math.pi * f.norm() * (1 + 1e-12)


def test_norm_of_constant_field_is_pi(grid64):
    op = _op(grid64, dirf=constant_direction(0.07))
    est = estimate_norm(op.linear_operator(hilbert_symbol(), "H"), trials=2)
    assert abs(est.estimate - math.pi) < 1e-6 * math.pi
    assert est.to_dict(64)["operator"] == "H"


def test_linearity_check_rejects_nonlinear():
    op = LinearOperator((4, 4), matvec=lambda v: np.abs(v), rmatvec=lambda v: v, dtype=complex)
    with pytest.raises(LinearityError):
        estimate_norm(op)


def test_zero_operator_norm():
    op = LinearOperator((4, 4), matvec=lambda v: 0 * v, rmatvec=lambda v: 0 * v, dtype=complex)
    assert estimate_norm(op).estimate == 0.0


def test_slope_bound_enforced(grid64):
    d = constant_direction(0.1)
    bad = type(d)(d.name, d.func, 0.01, d.params, levels=d.levels)
    with pytest.raises(ValueError):
        DirectionalOperator(grid64, identity_family(), bad)
