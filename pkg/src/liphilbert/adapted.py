"""Littlewood-Paley projections adapted to the Lipschitz curves.

The curve lattice
-----------------
Curves are labelled by the grid anchors ``x~_i = i/n`` and sampled at the
heights ``y_j = j/n``, giving lattice points ``(X[i, j], y_j)`` with
``X = g(x~_i, y_j)``.  Three linear maps connect grid fields with lattice
values:

``R`` (restriction)
    exact evaluation of the trigonometric interpolant at the lattice points;
``A`` (curve multiplier)
    on each curve, a 1-D Fourier multiplier in the chart coordinate
    ``y' = y cos(theta) - X sin(theta)`` (``tan(theta) = u(x~_i)``); the
    curve is periodic in ``y'`` with period ``L = cos(theta)``, so its chart
    frequencies are ``m / L``;
``S`` (push-forward)
    interpolation in the label ``x~`` at ``P(x_i, y_j)``, which writes curve
    data back on the grid.

The adapted projection on the grid is ``S A_k R`` and its exact discrete
adjoint is ``R* A_k* S*``.  Norms of curve data use the area element
``d1 g dx~ dy`` so that lattice integrals equal plane integrals.

Band-``k`` chart weights come either from the partition profile (the
adapted projection itself) or from the reproducing envelope
``sum_{|j-k| <= w} psi_j``, which equals 1 on the support of band ``k``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .directional import (
    DirectionalOperator,
    Symbol,
    evaluate_on_curves,
    field_operator,
    single_scale_symbol,
)
from .frequency import LP_PROFILE, lp_symbol
from .grid import SampledField, TorusGrid
from .lipschitz import (
    DirectionField,
    LipschitzFamily,
    chart_lipschitz_bound,
    projection_field,
    reparametrize_curve,
)


def restrict_to_curves(f: SampledField, X: np.ndarray) -> np.ndarray:
    """Values of the interpolant of ``f`` at ``(X[i, j], j/n)``."""
    return evaluate_on_curves(f.spectrum, f.grid, X, np.zeros(X.shape[0]), None)


@dataclass(eq=False)
class CurveLattice:
    """Curve lattice of a family on a grid (see module docstring)."""

    grid: TorusGrid
    family: LipschitzFamily
    direction: DirectionField

    def __post_init__(self):
        n = self.grid.n
        c = self.grid.coords
        A, Y = np.meshgrid(c, c, indexing="ij")
        fam = self.family
        self.anchors = c
        self.slopes = np.asarray(self.direction(c), dtype=np.float64)
        if np.any(np.abs(self.slopes) >= 1):
            raise ValueError("curve charts need |u| < 1 on every anchor")
        self.theta = np.arctan(self.slopes)
        cos, sin = np.cos(self.theta), np.sin(self.theta)
        self.X = fam.g(A, Y)
        self.period = cos
        self.Z = Y * cos[:, None] - self.X * sin[:, None]
        self.dz = cos[:, None] - fam.dg2(A, Y) * sin[:, None]
        self.jac = fam.dg1(A, Y)
        self.P = projection_field(self.grid, fam)
        self._zeros = np.zeros(n, dtype=np.int64)

    # charts ------------------------------------------------------------
    def chart(self, i: int):
        return reparametrize_curve(self.family, self.direction, float(self.anchors[i]))

    def chart_lipschitz(self) -> np.ndarray:
        """Measured chart Lipschitz constants for every anchor."""
        return np.array([self.chart(i).lipschitz for i in range(self.grid.n)])

    def check_charts(self, slack: float = 1e-6) -> float:
        """Largest measured chart Lipschitz constant; raises if above the bound."""
        lip = float(self.chart_lipschitz().max())
        bound = chart_lipschitz_bound(self.family.b0)
        if lip > bound + slack:
            raise ValueError(f"chart Lipschitz constant {lip:.6g} exceeds {bound:.6g}")
        return lip

    # grid <-> lattice ----------------------------------------------------
    def restrict(self, f: SampledField) -> np.ndarray:
        return restrict_to_curves(f, self.X)

    def restrict_adjoint(self, V: np.ndarray) -> SampledField:
        n = self.grid.n
        half = n // 2
        coeffs = _kernels.ACTIVE.nudft_type1(
            np.ascontiguousarray(V.T), np.ascontiguousarray(self.X.T), self._zeros, 1, float(-half), n
        )[0]  # [row j, xi + half]
        spec_x = np.empty((n, n), dtype=np.complex128)
        spec_x[np.arange(-half, half) % n, :] = coeffs.T
        return SampledField(self.grid, np.fft.ifft(spec_x, axis=0))

    def push(self, V: np.ndarray) -> SampledField:
        n = self.grid.n
        half = n // 2
        spec = np.fft.fft(V, axis=0) / n
        coeffs = spec[np.arange(-half, half) % n, :].T[None]  # [1, row j, xi]
        out = _kernels.ACTIVE.nudft_type2(
            np.ascontiguousarray(coeffs), float(-half), np.ascontiguousarray(self.P.T), self._zeros
        )
        return SampledField(self.grid, out.T)

    def push_adjoint(self, h: SampledField) -> np.ndarray:
        n = self.grid.n
        half = n // 2
        coeffs = _kernels.ACTIVE.nudft_type1(
            np.ascontiguousarray(h.values.T), np.ascontiguousarray(self.P.T), self._zeros, 1, float(-half), n
        )[0]
        spec = np.empty((n, n), dtype=np.complex128)
        spec[np.arange(-half, half) % n, :] = coeffs.T
        return np.fft.ifft(spec, axis=0)

    # curve multipliers ----------------------------------------------------
    def _mrange(self, nu_max: float) -> int:
        return int(math.ceil(nu_max * float(np.max(self.period)))) + 1

    def curve_multiplier(self, V: np.ndarray, weight, nu_max: float, adjoint: bool = False) -> np.ndarray:
        """Apply ``weight(m / L)`` to the chart Fourier coefficients on each curve.

        Parameters
        ----------
        V : ndarray, shape (n, n)
            Lattice values ``[curve i, height j]``.
        weight : callable
            Real chart-frequency weight, vanishing for ``|nu| > nu_max``.
        adjoint : bool
            Apply the exact adjoint (plain sum inner product on the lattice).
        """
        n = self.grid.n
        M = self._mrange(nu_max)
        L = self.period
        pts = np.ascontiguousarray(self.Z / L[:, None])
        kern = _kernels.ACTIVE
        freqs = np.arange(-M, M + 1, dtype=np.float64)
        W = weight(freqs[None, :] / L[:, None])
        scale = (self.dz / (n * L[:, None]))
        if not adjoint:
            c = kern.nudft_type1(np.ascontiguousarray(V * scale), pts, self._zeros, 1, float(-M), 2 * M + 1)
            c[0] *= W
            return kern.nudft_type2(c, float(-M), pts, self._zeros)
        c = kern.nudft_type1(np.ascontiguousarray(V), pts, self._zeros, 1, float(-M), 2 * M + 1)
        c[0] *= np.conj(W)
        return kern.nudft_type2(c, float(-M), pts, self._zeros) * scale

    def lattice_norm(self, V: np.ndarray) -> float:
        """Plane ``L^2`` norm of curve data (area element ``d1 g dx~ dy``)."""
        return float(np.sqrt(np.mean(np.abs(V) ** 2 * self.jac)))


def band_weight(k: int, envelope: int = 0):
    """Chart weight for band ``k`` and its support bound.

    ``envelope = 0`` gives the partition profile ``psi(2^-k nu)``; ``w > 0``
    gives the reproducing envelope ``sum_{|j - k| <= w} psi(2^-j nu)``.
    """
    if envelope == 0:
        return (lambda nu: LP_PROFILE.scaled(k, nu)), LP_PROFILE.cutoff * 2.0**k
    return (lambda nu: LP_PROFILE.envelope(k, envelope, nu)), LP_PROFILE.cutoff * 2.0 ** (k + envelope)


@dataclass(eq=False)
class AdaptedProjector:
    """Adapted projection ``S A_k R`` for one band ``k``.

    Parameters
    ----------
    lattice : CurveLattice
    k : int
        Band index.
    envelope : int
        0 for the partition profile; ``w >= 1`` for the reproducing envelope.
    """

    lattice: CurveLattice
    k: int
    envelope: int = 0

    def __post_init__(self):
        self.weight, self.nu_max = band_weight(self.k, self.envelope)

    def on_curves(self, V: np.ndarray, adjoint: bool = False) -> np.ndarray:
        return self.lattice.curve_multiplier(V, self.weight, self.nu_max, adjoint)

    def apply(self, f: SampledField) -> SampledField:
        lat = self.lattice
        return lat.push(self.on_curves(lat.restrict(f)))

    def adjoint(self, h: SampledField) -> SampledField:
        lat = self.lattice
        return lat.restrict_adjoint(self.on_curves(lat.push_adjoint(h), adjoint=True))


def adapted_project(proj: AdaptedProjector, f: SampledField) -> SampledField:
    """Adapted Littlewood-Paley piece of ``f`` re-assembled on the grid."""
    return proj.apply(f)


def adapted_project_adjoint(proj: AdaptedProjector, h: SampledField) -> SampledField:
    """Exact adjoint of :func:`adapted_project` for the grid inner product."""
    return proj.adjoint(h)


# ---------------------------------------------------------------------------
# square functions
# ---------------------------------------------------------------------------


def adapted_square_function_ratio(lattice: CurveLattice, f: SampledField, band) -> float:
    """``||(sum_k |P~_k f|^2)^(1/2)|| / ||f||`` computed on the curves."""
    V = lattice.restrict(f)
    total = 0.0
    for k in band:
        proj = AdaptedProjector(lattice, k)
        total += lattice.lattice_norm(proj.on_curves(V)) ** 2
    return float(np.sqrt(total) / f.norm())


def adjoint_square_function_ratio(lattice: CurveLattice, hs: dict, band) -> float:
    """``||(sum_k |P~_k* h_k|^2)^(1/2)|| / ||(sum_k |h_k|^2)^(1/2)||`` on the grid."""
    num = 0.0
    den = 0.0
    for k in band:
        h = hs[k]
        num += AdaptedProjector(lattice, k).adjoint(h).norm() ** 2
        den += h.norm() ** 2
    return float(np.sqrt(num / den))


# ---------------------------------------------------------------------------
# main term / commutator
# ---------------------------------------------------------------------------


def _check_split(l: int, band, grid: TorusGrid):
    if l < 0:
        raise ValueError(f"scale gap l must be >= 0, got {l}")
    lp = grid.lp_band()
    for k in band:
        if k not in lp:
            raise ValueError(f"band index {k} outside [{lp.start}, {lp.stop - 1}]")


def split_main_commutator(
    opv: DirectionalOperator,
    lattice: CurveLattice,
    f: SampledField,
    l: int,
    band=None,
    envelope: int = 1,
) -> tuple[SampledField, SampledField]:
    """Split ``sum_k H_{k-l} P_k f`` into main term and commutator on the grid.

    ``main = sum_k P~_k H_{k-l} P_k f`` with ``P~_k`` the adapted projection
    (reproducing envelope of width ``envelope``; ``0`` uses the partition
    profile) and ``commutator = sum_k H_{k-l} P_k f - main``.
    """
    grid = f.grid
    band = grid.design_band() if band is None else band
    _check_split(l, band, grid)
    total = np.zeros((grid.n, grid.n), dtype=np.complex128)
    main = np.zeros_like(total)
    for k in band:
        piece = opv.apply_symbol(
            SampledField(grid, np.fft.ifft2(f.spectrum * lp_symbol(grid, k), norm="ortho")),
            single_scale_symbol(k - l),
        )
        total += piece.values
        main += AdaptedProjector(lattice, k, envelope).apply(piece).values
    return SampledField(grid, main), SampledField(grid, total - main)


def main_term_operator(opv: DirectionalOperator, lattice: CurveLattice, l: int, band=None, envelope: int = 1):
    """``f -> sum_k P~_k H_{k-l} P_k f`` as a linear operator with exact adjoint."""
    grid = opv.grid
    band = grid.design_band() if band is None else band
    _check_split(l, band, grid)
    projs = {k: AdaptedProjector(lattice, k, envelope) for k in band}

    def lp(f, k):
        return SampledField(grid, np.fft.ifft2(f.spectrum * lp_symbol(grid, k), norm="ortho"))

    def fwd(f):
        acc = np.zeros((grid.n, grid.n), dtype=np.complex128)
        for k in band:
            acc += projs[k].apply(opv.apply_symbol(lp(f, k), single_scale_symbol(k - l))).values
        return SampledField(grid, acc)

    def adj(h):
        acc = np.zeros((grid.n, grid.n), dtype=np.complex128)
        for k in band:
            acc += lp(opv.adjoint_symbol(projs[k].adjoint(h), single_scale_symbol(k - l)), k).values
        return SampledField(grid, acc)

    return field_operator(grid, fwd, adj, f"main_term(l={l})")


def commutator_on_curves(
    lattice: CurveLattice,
    f: SampledField,
    l: int,
    band,
    envelope: int = 1,
) -> np.ndarray:
    """Commutator ``sum_k (1 - P~_k) H_{k-l} P_k f`` evaluated exactly on the curves.

    ``H_{k-l} P_k f`` is evaluated at every curve point with the slope of that
    curve, which is the value of the grid operator at that point; no grid
    interpolation of the (possibly discontinuous) output is involved.
    """
    grid = f.grid
    out = np.zeros((grid.n, grid.n), dtype=np.complex128)
    for k in band:
        spec = f.spectrum * lp_symbol(grid, k)
        xi_lim = int(math.ceil(LP_PROFILE.cutoff * 2.0**k))
        V = evaluate_on_curves(
            spec, grid, lattice.X, lattice.slopes, single_scale_symbol(k - l), xi_limit=xi_lim
        )
        proj = AdaptedProjector(lattice, k, envelope)
        out += V - proj.on_curves(V)
    return out


@dataclass
class DecayResult:
    """Commutator decay table and fitted exponent."""

    ls: list
    rho: list
    gamma_hat: float
    r_squared: float
    family_params: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "table": [{"l": int(a), "rho_l": float(b)} for a, b in zip(self.ls, self.rho)],
            "gamma_hat": self.gamma_hat,
            "r_squared": self.r_squared,
            "family_params": self.family_params,
        }


def fit_decay(ls, rho) -> tuple[float, float]:
    """Least-squares slope of ``log2 rho`` against ``l``: returns ``(gamma_hat, R^2)``."""
    ls = np.asarray(ls, dtype=np.float64)
    y = np.log2(np.asarray(rho, dtype=np.float64))
    A = np.vstack([ls, np.ones_like(ls)]).T
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    pred = A @ coef
    ss_res = float(np.sum((y - pred) ** 2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return float(-coef[0]), r2


def random_band_limited(grid: TorusGrid, rng: np.random.Generator, band_frac: float = 0.25, cone: bool = False) -> SampledField:
    """Random field with Gaussian spectrum on ``|xi|, |eta| < band_frac * n`` (DC removed)."""
    n = grid.n
    XI, ETA = grid.freq_mesh()
    lim = band_frac * n
    mask = (np.abs(XI) < lim) & (np.abs(ETA) < lim)
    if cone:
        mask &= np.abs(XI) <= np.abs(ETA)
    mask &= ~((XI == 0) & (ETA == 0))
    spec = (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) * mask
    f = SampledField(grid, np.fft.ifft2(spec, norm="ortho"))
    return f * (1.0 / f.norm())


def commutator_decay_experiment(
    grid: TorusGrid,
    family: LipschitzFamily,
    direction: DirectionField,
    l_range,
    trials: int = 3,
    band=None,
    envelope: int = 1,
    seed: int = 0,
) -> DecayResult:
    """``rho_l = max_f ||commutator(l)|| / ||f||`` over random band-limited ``f``."""
    band = grid.design_band() if band is None else band
    lattice = CurveLattice(grid, family, direction)
    rng = np.random.default_rng(seed)
    fs = [random_band_limited(grid, rng) for _ in range(trials)]
    rho = []
    for l in l_range:
        best = 0.0
        for f in fs:
            C = commutator_on_curves(lattice, f, l, band, envelope)
            best = max(best, lattice.lattice_norm(C) / f.norm())
        rho.append(best)
    ls = list(l_range)
    if all(r > 0 for r in rho) and len(ls) >= 2:
        gamma, r2 = fit_decay(ls, rho)
    else:
        gamma, r2 = math.inf, 1.0
    params = {
        "family": family.to_config(),
        "direction": direction.to_config(),
        "n": grid.n,
        "band": [band.start, band.stop - 1] if isinstance(band, range) else list(band),
        "trials": trials,
        "seed": seed,
        "envelope": envelope,
    }
    return DecayResult(ls, rho, gamma, r2, params)
