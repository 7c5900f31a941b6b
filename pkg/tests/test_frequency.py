import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.integrate import quad

from liphilbert.adapted import random_band_limited
from liphilbert.frequency import (
    HL_PROFILE,
    LP_PROFILE,
    BandError,
    cone_mask,
    envelope_project,
    lp_project,
    lp_symbol,
    single_scale_kernel,
    smooth_step,
    square_function_ratio,
)
from liphilbert.grid import SampledField, TorusGrid


def test_smooth_step_limits():
    s = np.linspace(-1, 2, 301)
    v = smooth_step(s)
    assert np.all(v[s <= 0] == 0) and np.all(v[s >= 1] == 1)
    assert np.all(np.diff(v) >= 0)


@given(st.floats(1e-3, 1e3))
def test_lp_partition_of_unity(t):
    # telescoping profile differences sum to one on every positive frequency
    total = sum(LP_PROFILE.scaled(j, np.array([t]))[0] for j in range(-20, 20))
    assert abs(total - 1.0) < 1e-12


def test_lp_support():
    lo, hi = LP_PROFILE.support
    t = np.linspace(0.01, 3, 3000)
    v = LP_PROFILE.scaled(0, t)
    assert np.all(v[(t < lo) | (t > hi)] == 0)


def test_hl_profile_one_sided():
    assert np.all(HL_PROFILE.scaled(0, np.linspace(-5, 0, 50)) == 0)
    lo, hi = HL_PROFILE.support
    assert 0 < lo < hi


def test_cone_mask(grid64):
    m = cone_mask(grid64)
    assert m[0, 0] == 1 and m[3, 3] == 1 and m[4, 3] == 0


def test_lp_project_band_error(grid64):
    with pytest.raises(BandError):
        lp_project(SampledField.zeros(grid64), 6)


def test_lp_pieces_sum_to_cone_projection(grid64, rng):
    f = random_band_limited(grid64, rng, 0.5)
    acc = sum(lp_project(f, k).values for k in grid64.lp_band())
    spec = np.fft.fft2(acc, norm="ortho")
    XI, ETA = grid64.freq_mesh()
    inside = (np.abs(XI) <= np.abs(ETA)) & (ETA != 0)
    assert np.max(np.abs(spec[inside] - f.spectrum[inside])) < 1e-12
    assert np.max(np.abs(spec[~inside])) < 1e-12


def test_envelope_reproduces_band(grid64, rng):
    f = random_band_limited(grid64, rng, 0.5)
    for k in (1, 2, 3):
        p = lp_project(f, k)
        assert (envelope_project(p, k, 1) - p).norm() < 1e-13


def test_lp_not_idempotent(grid64, rng):
    # the overlapping partition is not a projection: band 5 has mode 17 on a ramp
    f = random_band_limited(grid64, rng, 0.5, cone=True)
    p = lp_project(f, 5)
    assert (lp_project(p, 5) - p).norm() > 1e-3 * p.norm()


@given(st.integers(0, 2**31 - 1))
def test_square_function_window(seed):
    g = TorusGrid(64)
    f = random_band_limited(g, np.random.default_rng(seed), 0.5, cone=True)
    r = square_function_ratio(f)
    assert 1 / np.sqrt(2) - 1e-3 <= r <= 1 + 1e-3


def test_single_scale_kernel_matches_quadrature():
    prof = single_scale_kernel(1)
    lo, hi = prof.support
    for t in (0.0, 0.1, 0.37):
        re = quad(lambda s: prof(np.array([s]))[0] * np.cos(2 * np.pi * s * t), lo, hi, limit=200)[0]
        im = quad(lambda s: prof(np.array([s]))[0] * np.sin(2 * np.pi * s * t), lo, hi, limit=200)[0]
        assert abs(prof.kernel(np.array([t]))[0] - (re + 1j * im)) < 1e-3


def test_single_scale_band_check(grid64):
    with pytest.raises(BandError):
        single_scale_kernel(40, grid64)


def test_lp_symbol_without_cone(grid64):
    assert np.all(lp_symbol(grid64, 2, cone=False) >= lp_symbol(grid64, 2))
