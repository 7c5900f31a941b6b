"""Acceptance criteria AC1-AC13.

Each criterion is one or more tests; every part records itself through the
``criterion`` fixture and the run ends with one ``ACn PASS``/``ACn FAIL`` line
per criterion (see ``conftest.py``).  Parts whose literal statement does not
hold for the implemented objects are strict xfails, so the criterion line shows
FAIL while the suite stays green.

Run on its own with ``pytest tests/test_acceptance.py -v`` or
``python tests/test_acceptance.py``.
"""

import math
import sys
import time

import numpy as np
import pytest

from liphilbert.adapted import (
    AdaptedProjector,
    CurveLattice,
    adapted_square_function_ratio,
    commutator_decay_experiment,
    random_band_limited,
    split_main_commutator,
)
from liphilbert.commutator import decomposition_check, random_oriented_tiles
from liphilbert.directional import (
    DirectionalOperator,
    apply_hl,
    apply_hv,
    estimate_norm,
    hilbert_symbol,
    single_scale_symbol,
)
from liphilbert.experiments import ExperimentConfig, run_experiment
from liphilbert.frequency import envelope_project, lp_project, square_function_ratio
from liphilbert.grid import SampledField, TorusGrid
from liphilbert.lipschitz import (
    constant_direction,
    identity_family,
    lacunary_family,
    chart_lipschitz_bound,
    random_sinusoidal_family,
    random_step_direction,
    reparametrize_curve,
    sinusoidal_family,
    zero_direction,
)
from liphilbert.tiles import DirectionInterval, Tile, build_wave_packet, vanishing_check


def _failed(report: dict) -> list[str]:
    return [c["name"] for c in report["checks"] if not c["passed"]]


# ---------------------------------------------------------------------------
# AC1-AC3: symbols, norms, square function
# ---------------------------------------------------------------------------


def test_ac1_symbol_correctness(criterion):
    with criterion("AC1", "H cos = pi sin at n=256") as part:
        t0 = time.perf_counter()
        g = TorusGrid(256)
        op = DirectionalOperator(g, identity_family(), zero_direction())
        f = SampledField.from_function(g, lambda x, y: np.cos(2 * np.pi * x))
        ref = SampledField.from_function(g, lambda x, y: np.pi * np.sin(2 * np.pi * x))
        err = (apply_hv(op, f) - ref).sup()
        elapsed = time.perf_counter() - t0
        part.detail = f"sup error {err:.1e}, {elapsed:.2f} s"
        assert err <= 1e-6
        assert elapsed <= 5.0


def test_ac2_constant_field_norm(criterion):
    with criterion("AC2", "norm of H_(1,0) at n=128") as part:
        g = TorusGrid(128)
        op = DirectionalOperator(g, identity_family(), zero_direction())
        est = estimate_norm(op.linear_operator(hilbert_symbol(), "H")).estimate
        part.detail = f"{est:.6f}"
        assert abs(est - math.pi) <= 0.02 * math.pi


def test_ac3_standard_square_function(criterion):
    with criterion("AC3", "Plancherel window over 20 cone-supported f") as part:
        g = TorusGrid(128)
        rng = np.random.default_rng(3)
        ratios = [square_function_ratio(random_band_limited(g, rng, 0.5, cone=True)) for _ in range(20)]
        part.detail = f"ratios in [{min(ratios):.4f}, {max(ratios):.4f}]"
        assert min(ratios) >= 1 / math.sqrt(2) - 1e-3
        assert max(ratios) <= 1 + 1e-3


# ---------------------------------------------------------------------------
# AC4-AC7: adapted projections, commutation, decay, chart bound
# ---------------------------------------------------------------------------


def test_ac4_adapted_square_function(criterion):
    with criterion("AC4", "ratio window over 100 f") as part:
        g = TorusGrid(128)
        rng = np.random.default_rng(4)
        lattices = [
            CurveLattice(g, random_sinusoidal_family(0.01, seed=s), random_step_direction(8, 0.08, seed=s))
            for s in range(10)
        ]
        assert all(lat.family.a0 <= 1.2 and math.isclose(lat.family.b0, 0.01) for lat in lattices)
        ratios = [
            adapted_square_function_ratio(lattices[i % 10], random_band_limited(g, rng), g.lp_band())
            for i in range(100)
        ]
        window = max(ratios) / min(ratios)
        part.detail = f"r in [{min(ratios):.4f}, {max(ratios):.4f}], r_max/r_min {window:.4f}"
        assert window <= 10


def _ac5_setup():
    g = TorusGrid(128)
    op = DirectionalOperator(g, identity_family(), random_step_direction(8, 0.08, seed=5))
    f = random_band_limited(g, np.random.default_rng(5), 0.5)
    return g, op, f


def test_ac5_commutation_reproducing_envelope(criterion):
    with criterion("AC5", "outer projection by the reproducing envelope") as part:
        g, op, f = _ac5_setup()
        errs = []
        for k in g.lp_band():
            a = apply_hv(op, lp_project(f, k))
            errs.append((a - envelope_project(a, k, 1)).norm() / f.norm())
        part.detail = f"max {max(errs):.1e}"
        assert max(errs) <= 1e-6


@pytest.mark.xfail(strict=True, reason="the smooth band projection is not idempotent; see the decisions ledger")
def test_ac5_commutation_literal(criterion):
    with criterion("AC5", "literal P_k H_v P_k") as part:
        g, op, f = _ac5_setup()
        errs = []
        for k in g.lp_band():
            a = apply_hv(op, lp_project(f, k))
            errs.append((a - lp_project(a, k)).norm() / f.norm())
        part.detail = f"max {max(errs):.3f}"
        assert max(errs) <= 1e-6


@pytest.mark.slow
@pytest.mark.parametrize(
    "family",
    [random_sinusoidal_family(0.01, seed=0), lacunary_family(0.01, 7, seed=0)],
    ids=["random-sinusoidal", "lacunary"],
)
def test_ac6_commutator_decay(criterion, family):
    with criterion("AC6", family.name) as part:
        t0 = time.perf_counter()
        g = TorusGrid(512)
        res = commutator_decay_experiment(
            g, family, random_step_direction(8, 0.08, seed=0), range(2, 7), trials=2, band=range(2, 8)
        )
        elapsed = time.perf_counter() - t0
        ratios = [b / a for a, b in zip(res.rho, res.rho[1:])]
        part.detail = f"ratios <= {max(ratios):.3f}, gamma {res.gamma_hat:.3f}, {elapsed:.0f} s"
        assert max(ratios) <= 0.75
        assert res.gamma_hat > 0.3
        assert elapsed <= 600


def test_ac7_chart_lipschitz_bound(criterion):
    with criterion("AC7", "50 anchors on 10 families") as part:
        rng = np.random.default_rng(7)
        worst = -math.inf
        count = 0
        for s in range(10):
            fam = random_sinusoidal_family(0.01, seed=s)
            dirf = random_step_direction(8, 0.08, seed=s)
            bound = chart_lipschitz_bound(fam.b0)
            for anchor in rng.uniform(0, 1, size=5):
                lip = reparametrize_curve(fam, dirf, float(anchor)).lipschitz
                worst = max(worst, lip - bound)
                count += 1
        part.detail = f"{count} charts, max Lip - bound {worst:.2e}"
        assert count == 50
        assert worst <= 1e-6


# ---------------------------------------------------------------------------
# AC8-AC9: wave packets
# ---------------------------------------------------------------------------


def test_ac8_packet_norms_orthogonality_decay(criterion):
    with criterion("AC8", "norms, disjoint directions, decay envelope") as part:
        report = run_experiment(ExperimentConfig("tiles-check", n=128, seed=8))
        res = report["results"]
        part.detail = (
            f"norm dev {res['max_norm_deviation']:.1e}, cross {res['max_cross_inner']:.1e}, "
            f"C {res['decay_fitted_C']:.3g}"
        )
        checks = {c["name"]: c["passed"] for c in report["checks"]}
        assert checks["unit packet norms"]
        assert checks["cross packets orthogonal"]
        assert checks["decay envelope bounded by the fitted constant"]


@pytest.mark.xfail(strict=True, reason="packets of adjacent bands share frequencies; see the decisions ledger")
def test_ac8_adjacent_band_orthogonality(criterion):
    with criterion("AC8", "adjacent bands orthogonal") as part:
        g = TorusGrid(128)
        omega = DirectionInterval(2, 5)
        a = build_wave_packet(Tile(3, omega, 0, 0), g)
        worst = max(
            abs(a.inner(build_wave_packet(Tile(4, omega, m, n), g))) for m in range(4) for n in range(16)
        )
        part.detail = f"max |<phi, phi'>| {worst:.3f}"
        assert worst <= 1e-10


def _ac9_ratios(window: str) -> list[float]:
    g = TorusGrid(128)
    op = DirectionalOperator(g, identity_family(), random_step_direction(8, 0.08, seed=0))
    rng = np.random.default_rng(9)
    tiles = [
        Tile(4, DirectionInterval(2, int(rng.integers(16))), int(rng.integers(4)), int(rng.integers(16)))
        for _ in range(20)
    ]
    return [vanishing_check(t, op, window).ratio for t in tiles]


def test_ac9_vanishing_spectral_window(criterion):
    with criterion("AC9", "spectral orientation window") as part:
        ratios = _ac9_ratios("spectral")
        part.detail = f"max ratio {max(ratios):.1e}"
        assert max(ratios) <= 1e-6


@pytest.mark.xfail(strict=True, reason="the left-half window cuts into the packet's support; see the decisions ledger")
def test_ac9_vanishing_half_window(criterion):
    with criterion("AC9", "literal half window") as part:
        ratios = _ac9_ratios("half")
        part.detail = f"max ratio {max(ratios):.2f}"
        assert max(ratios) <= 1e-6


# ---------------------------------------------------------------------------
# AC10-AC12: experiment runners
# ---------------------------------------------------------------------------


def test_ac10_beta_carleson(criterion):
    with criterion("AC10", "runner defaults") as part:
        report = run_experiment(ExperimentConfig("beta-carleson"))
        part.detail = ", ".join(c["name"] for c in report["checks"] if c["passed"])
        assert not _failed(report), _failed(report)


def test_ac11_kakeya_counting(criterion):
    with criterion("AC11", "20 families and delta scaling") as part:
        cfg = ExperimentConfig(
            "kakeya-count",
            family={"name": "random_sinusoidal", "b0": 0.2, "seed": 1},
            direction={"name": "random_step", "pieces": 6, "amplitude": 0.6, "seed": 2},
        )
        report = run_experiment(cfg)
        checks = {c["name"]: c for c in report["checks"]}
        part.detail = (
            f"max ratio {checks['counting ratio bounded']['max_ratio']:.3f}, "
            f"scaling spread {checks['maximal norm scales like 1/delta']['spread']:.2f}"
        )
        assert not _failed(report), _failed(report)


def test_ac12_knapp(criterion):
    with criterion("AC12", "R=32") as part:
        report = run_experiment(ExperimentConfig("knapp"))
        checks = {c["name"]: c for c in report["checks"]}
        part.detail = (
            f"power {checks['decay power near -1']['power']:.3f}, "
            f"increment deviation {checks['squared-norm increments nearly constant']['relative_deviation']:.3f}"
        )
        assert not _failed(report), _failed(report)


# ---------------------------------------------------------------------------
# AC13: exact identities
# ---------------------------------------------------------------------------


@pytest.fixture(scope="module")
def curved():
    g = TorusGrid(64)
    fam = random_sinusoidal_family(0.01, seed=13)
    dirf = random_step_direction(8, 0.08, seed=13)
    return g, DirectionalOperator(g, fam, dirf), CurveLattice(g, fam, dirf)


def test_ac13_splitting_identity(criterion, curved):
    with criterion("AC13", "main + commutator") as part:
        g, op, lat = curved
        f = random_band_limited(g, np.random.default_rng(13))
        l = 2
        main, comm = split_main_commutator(op, lat, f, l)
        total = sum(op.apply_symbol(lp_project(f, k), single_scale_symbol(k - l)).values for k in g.design_band())
        err = float(np.max(np.abs(main.values + comm.values - total)))
        part.detail = f"{err:.1e}"
        assert err <= 1e-8


def test_ac13_adjoint_duality(criterion, curved):
    with criterion("AC13", "adjoint of adapted projection") as part:
        g, _, lat = curved
        rng = np.random.default_rng(14)
        worst = 0.0
        for k in g.lp_band():
            P = AdaptedProjector(lat, k, 1)
            f, h = random_band_limited(g, rng), random_band_limited(g, rng)
            worst = max(worst, abs(P.apply(f).inner(h) - f.inner(P.adjoint(h))) / (f.norm() * h.norm()))
        part.detail = f"{worst:.1e}"
        assert worst <= 1e-8


def test_ac13_single_scale_kills_higher_bands(criterion, curved):
    with criterion("AC13", "H_l P_k = 0 for l > k") as part:
        g, op, _ = curved
        f = random_band_limited(g, np.random.default_rng(15), 1.0)
        worst = 0.0
        for k in g.lp_band():
            pk = lp_project(f, k)
            for l in g.hl_band():
                if l > k:
                    worst = max(worst, apply_hl(op, pk, l).sup())
        part.detail = f"{worst:.1e}"
        assert worst <= 1e-8


def test_ac13_reproducing_identity(criterion):
    with criterion("AC13", "reproducing identity on 20 tiles") as part:
        g = TorusGrid(128)
        tiles = random_oriented_tiles(
            g, sinusoidal_family([(0.01, 0, 1, 0)]), constant_direction(0.05), 4, 2, 20, seed=0
        )
        worst = max(decomposition_check(t, c, g).reproducing_residual for t, c in tiles)
        part.detail = f"{worst:.1e}"
        assert worst <= 1e-6


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-v"]))
