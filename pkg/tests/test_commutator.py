import json
import math

import numpy as np
import pytest

from liphilbert.adapted import fit_decay
from liphilbert.commutator import (
    ModeSum,
    anchor_through,
    bracket,
    decomposition_check,
    frozen_operator,
    frozen_packet,
    kernel_step_check,
    packet_modes,
    pointwise_bound_check,
    pointwise_majorant,
    random_oriented_tiles,
    records_to_json,
    single_term_check,
    tile_curve_window,
)
from liphilbert.directional import DirectionalOperator, single_scale_symbol
from liphilbert.grid import SampledField, TorusGrid
from liphilbert.lipschitz import (
    constant_direction,
    identity_family,
    lacunary_family,
    reparametrize_curve,
    scaled_family,
    sinusoidal_family,
)
from liphilbert.tiles import DirectionInterval, Tile, build_wave_packet

GENTLE = sinusoidal_family([(0.01, 0, 1, 0)])
ROUGH = sinusoidal_family([(0.001, 0, 16, 0.3)])


@pytest.fixture(scope="module")
def gentle_tiles(grid128):
    return random_oriented_tiles(grid128, GENTLE, constant_direction(0.05), 4, 2, 20, seed=0)


def _ones(grid):
    return SampledField(grid, np.ones((grid.n, grid.n)))


def test_mode_sum_reproduces_packet_field(grid64):
    t = Tile(3, DirectionInterval(1, 5), 1, 2)
    modes = packet_modes(t, grid64)
    X, Y = grid64.mesh()
    assert np.max(np.abs(modes(X, Y) - build_wave_packet(t, grid64, "frame").field.values)) < 1e-12
    both = modes + modes.scaled(-1.0)
    assert np.max(np.abs(both(X, Y))) < 1e-12
    assert modes.energy() == pytest.approx(build_wave_packet(t, grid64, "frame").norm() ** 2)


def test_frozen_operator_matches_grid_operator(grid64):
    # with a constant direction the frozen packet operator is the grid operator
    t = Tile(3, DirectionInterval(1, 4), 0, 3)
    u = 0.05
    op = DirectionalOperator(grid64, identity_family(), constant_direction(u))
    ref = op.apply_symbol(build_wave_packet(t, grid64, "frame").field, single_scale_symbol(t.k - t.l))
    X, Y = grid64.mesh()
    assert np.max(np.abs(frozen_operator(t, grid64, u)(X, Y) - ref.values)) < 1e-12


def test_frozen_packet_is_line_restriction(grid128, gentle_tiles):
    tile, chart = gentle_tiles[0]
    u = math.tan(chart.theta)
    op = frozen_operator(tile, grid128, u)
    line = frozen_packet(op, tile.k, chart, 0.03, 0.2)
    z = np.linspace(-0.3, 0.4, 17)
    xp = 0.03 * z + 0.2
    c, s = math.cos(chart.theta), math.sin(chart.theta)
    assert np.max(np.abs(line(z) - op(xp * c - z * s, xp * s + z * c))) < 1e-11


def test_reproducing_identity(grid128, gentle_tiles):
    for tile, chart in gentle_tiles[:8]:
        rep = decomposition_check(tile, chart, grid128)
        assert rep.reproducing_residual <= 1e-6
        assert rep.identity_defect <= 1e-12


def test_oriented_tiles_use_anchor_curve(grid128, gentle_tiles):
    for tile, chart in gentle_tiles[:5]:
        assert chart.anchor == anchor_through(tile, GENTLE)
        win = tile_curve_window(tile, chart)
        assert win.satisfies_length_bound()


def test_pointwise_constant_is_uniform(grid128, gentle_tiles):
    # one constant covers every tile: per-tile worst ratios agree within a factor 3
    worst = []
    for tile, chart in gentle_tiles:
        recs = pointwise_bound_check(tile, chart, grid128)
        worst.append(max(r.ratio for r in recs))
    worst = np.array(worst)
    assert np.all(np.isfinite(worst)) and worst.max() / worst.min() <= 3.0


def test_pointwise_majorant_shape():
    assert pointwise_majorant(0.1, 4, 2, 0, 0, 0) == pytest.approx(0.1 * 16 * 2.0**-3)
    assert pointwise_majorant(0.1, 4, 2, 3, 0, 0) == pytest.approx(0.1 * 16 * 2.0**-3 / 4**4)
    assert np.all(bracket(np.array([-2.0, 0.0, 3.0])) == [3.0, 1.0, 4.0])


def test_records_json(tmp_path, grid128, gentle_tiles):
    recs = pointwise_bound_check(*gentle_tiles[0], grid128, j0s=range(2))
    text = records_to_json(recs, tmp_path / "r.json")
    data = json.loads((tmp_path / "r.json").read_text())
    assert data == json.loads(text) and {"tile", "anchor", "j0", "lhs", "rhs", "ratio"} <= set(data[0])


def test_kernel_step_within_bound():
    for k, l in ((5, 2), (6, 3), (4, 0)):
        assert kernel_step_check(k, l, 0.1, 2.0**-k) <= 1.0


def test_single_term_vanishes_on_straight_curves(grid128):
    d = constant_direction(0.05)
    tile, chart = random_oriented_tiles(grid128, identity_family(), d, 4, 2, 1, seed=0)[0]
    rec = single_term_check(tile, chart, grid128, _ones(grid128))
    assert rec.lhs < 1e-10


def test_single_term_linear_in_deviation(grid128):
    d = constant_direction(0.05)
    h = _ones(grid128)
    full = single_term_check(*random_oriented_tiles(grid128, ROUGH, d, 4, 2, 1, seed=0)[0], grid128, h)
    half_fam = scaled_family(ROUGH, 0.5)
    half = single_term_check(*random_oriented_tiles(grid128, half_fam, d, 4, 2, 1, seed=0)[0], grid128, h)
    assert full.lhs > 0 and full.ratio <= 1.0
    assert half.lhs / full.lhs == pytest.approx(0.5, abs=0.01)


def test_single_term_independent_of_grid():
    d = constant_direction(0.05)
    vals = []
    for n in (128, 256):
        g = TorusGrid(n)
        vals.append(single_term_check(*random_oriented_tiles(g, ROUGH, d, 4, 2, 1, seed=0)[0], g, _ones(g)).lhs)
    assert vals[1] / vals[0] == pytest.approx(1.0, abs=1e-4)


def test_spectral_indicator_is_sound(grid128):
    # a zero majorant (orientation outside the spectral window) forces a zero term
    d = constant_direction(0.05)
    tile, chart = random_oriented_tiles(grid128, ROUGH, d, 4, 2, 1, seed=0)[0]
    h = _ones(grid128)
    for idx in range(16):
        t2 = Tile(4, DirectionInterval(2, idx), tile.m, tile.n)
        rec = single_term_check(t2, chart, grid128, h)
        if rec.rhs == 0:
            assert rec.lhs <= 1e-12


def test_single_term_decays_in_scale_gap():
    g = TorusGrid(256)
    d = constant_direction(0.05)
    fam = lacunary_family(0.01, 7, seed=0)
    h = _ones(g)
    ls = list(range(5))
    rho = []
    for l in ls:
        rho.append(max(
            single_term_check(t, c, g, h).lhs
            for s in range(3)
            for t, c in random_oriented_tiles(g, fam, d, 5, l, 1, seed=s)
        ))
    gamma, _ = fit_decay(ls, rho)
    assert gamma > 1.0
