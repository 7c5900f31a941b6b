import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.optimize import linprog

from liphilbert.beta import (
    DomainError,
    DyadicInterval,
    SampledGraph,
    beta_number,
    beta_on_interval,
    beta_table,
    beta_table_to_csv,
    carleson_sum,
    carleson_sup,
    curve_graph,
    embedding_bound_check,
    finest_level,
    random_lipschitz_graph,
)
from liphilbert.grid import SampledField, TorusGrid
from liphilbert.lipschitz import constant_direction, lacunary_family, reparametrize_curve


def _lp_minimax(t, v):
    # minimise d subject to |v - a t - b| <= d
    A = np.vstack([np.column_stack([-t, -np.ones_like(t), -np.ones_like(t)]),
                   np.column_stack([t, np.ones_like(t), -np.ones_like(t)])])
    rhs = np.concatenate([-v, v])
    res = linprog([0, 0, 1], A_ub=A, b_ub=rhs, bounds=[(None, None)] * 3, method="highs")
    return res.x[2]


@given(st.integers(0, 2**31 - 1), st.integers(0, 3), st.integers(1, 4))
def test_beta_matches_linear_program(seed, level, j0):
    gr = random_lipschitz_graph(seed % 1000, samples=256)
    I = DyadicInterval(level, int(np.random.default_rng(seed).integers(2**level)))
    b, slope, icpt = beta_number(gr, I, j0)
    a, c = I.bounds(gr)
    L = c - a
    centre = 0.5 * (a + c)
    half = 1.5 * j0 * L
    lo = int(np.ceil((centre - half - gr.t0) / gr.h - 1e-9))
    hi = int(np.floor((centre + half - gr.t0) / gr.h + 1e-9))
    t, v = gr.index_window(lo, hi)
    assert abs(b - _lp_minimax(t - centre, v) / L) < 1e-7
    assert abs(np.max(np.abs(v - slope * t - icpt)) / L - b) < 1e-10


def test_affine_graph_has_zero_beta():
    gr = SampledGraph.from_function(lambda t: 0.3 * t - 2, 0.0, 1.0, 256, periodic=True)
    assert gr.drift == pytest.approx(0.3)
    for lev in range(4):
        for pos in range(2**lev):
            b, slope, icpt = beta_number(gr, DyadicInterval(lev, pos), 2)
            assert b < 1e-12 and slope == pytest.approx(0.3)


def test_tent_beta_closed_form():
    # the window of the middle third is all of [0, 1]; for |t - 1/2| the best
    # line is horizontal at height 1/4 with deviation 1/4, so beta = 3/4
    gr = SampledGraph.from_function(lambda t: np.abs(t - 0.5), 0.0, 1.0 + 1 / 256, 257)
    b, slope, icpt = beta_on_interval(gr, 1 / 3, 2 / 3, 0)
    assert abs(slope) < 1e-12 and icpt == pytest.approx(0.25)
    assert b == pytest.approx(0.75, abs=1e-12)


@given(st.integers(0, 500), st.floats(-2, 2), st.floats(-5, 5), st.floats(0.1, 4))
def test_affine_invariance_and_homogeneity(seed, a, c, lam):
    gr = random_lipschitz_graph(seed, samples=128)
    base = carleson_sup(gr, 1)
    assert abs(carleson_sup(gr.plus_affine(a, c), 1) - base) < 1e-10
    assert abs(carleson_sup(gr.scaled(lam), 1) - lam**2 * base) < 1e-8 * lam**2 * max(base, 1e-300)


def test_window_outside_samples():
    gr = SampledGraph(0.0, 0.1, np.arange(10.0))
    with pytest.raises(DomainError):
        beta_on_interval(gr, 0.0, 0.5, 1)


def test_bad_arguments():
    gr = random_lipschitz_graph(0, 64)
    with pytest.raises(ValueError):
        beta_on_interval(gr, 0.2, 0.2)
    with pytest.raises(ValueError):
        beta_on_interval(gr, 0.0, 0.5, -1)
    with pytest.raises(ValueError):
        SampledGraph(0.0, 1.0, np.array([1.0]))


def test_dyadic_relations():
    I = DyadicInterval(2, 3)
    c0, c1 = I.children()
    assert I.contains(c0) and I.contains(c1) and c1.parent() == I
    assert not c0.contains(I)
    assert DyadicInterval(0, 0).parent() is None


def test_carleson_sup_is_max_of_sums():
    gr = random_lipschitz_graph(7, samples=256)
    table = beta_table(gr, (1,))
    top = finest_level(gr)
    direct = max(
        carleson_sum(gr, DyadicInterval(lev, pos), 1, table) for lev in range(top + 1) for pos in range(2**lev)
    )
    assert carleson_sup(gr, 1, table=table) == pytest.approx(direct, rel=1e-12)


def test_random_graph_lipschitz():
    gr = random_lipschitz_graph(3, samples=512, lip=0.7)
    assert gr.lipschitz() <= 0.7 + 1e-9


def test_table_csv(tmp_path):
    gr = random_lipschitz_graph(1, samples=64)
    beta_table_to_csv(beta_table(gr, (1, 2)), tmp_path / "b.csv")
    lines = (tmp_path / "b.csv").read_text().splitlines()
    assert lines[0] == "level,position,j0,beta,slope"
    assert len(lines) == 1 + 2 * (2 ** (finest_level(gr) + 1) - 1)


def test_curve_graph_of_tilted_curve():
    chart = reparametrize_curve(lacunary_family(0.05, 4, seed=0), constant_direction(0.2), 0.3)
    gr = curve_graph(chart, 512)
    assert gr.periodic and gr.drift == pytest.approx(0.2 * chart.period)
    assert gr.lipschitz() <= chart.lipschitz + 1e-6


def test_embedding_bound_zero_for_straight_curve():
    from liphilbert.lipschitz import identity_family

    chart = reparametrize_curve(identity_family(), constant_direction(0.1), 0.0)
    h = SampledField(TorusGrid(32), np.ones((32, 32)))
    chk = embedding_bound_check(chart, h, [2, 3], j0=1, samples=256, constant=1.0)
    assert chk.lhs < 1e-20 and chk.rhs > 0


def test_embedding_bound_assertion():
    chart = reparametrize_curve(lacunary_family(0.4, 6, seed=0), constant_direction(0.0), 0.0)
    h = SampledField(TorusGrid(32), np.ones((32, 32)))
    with pytest.raises(AssertionError):
        embedding_bound_check(chart, h, [2, 3, 4], j0=1, samples=512, constant=0.0)
