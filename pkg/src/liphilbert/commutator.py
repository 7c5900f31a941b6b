"""Per-tile estimates along one curve of the family.

Fix a tile ``s`` and a curve ``Gamma_x`` through the translate ``s_{m,n}``.
Freezing the direction at ``u(x)`` turns the packet operator of ``s`` into a
single trigonometric polynomial

    Psi(p) = sum_zeta a_zeta psi_{k-l}(xi + u(x) eta) e(zeta . (p - c(s))),

which agrees with the packet operator at every point of ``Gamma_x`` (the
direction field is constant along the curve).  In chart coordinates of the
curve (the frame rotated so that ``(1, u(x))`` is horizontal) we compare
``Psi`` on the curve ``y' -> (g_x(y'), y')`` with ``Psi`` on the optimal line
``y' -> (tau y' + b, y')`` of the chart graph.  Restricted to that line
``Psi`` is an exponential sum ``sum A_zeta e(nu_zeta y')`` whose frequencies
all lie where the one-dimensional envelope projection along the chart axis
is identically 1, so the line restriction (the frozen packet) is reproduced
exactly by that projection.

Everything is evaluated from the finite mode list of the packet, so no grid
interpolation enters.  Reports are lists of records
``{tile, anchor, lhs, rhs, ratio}``; constants ``C`` are fitted as the
largest observed ratio unless supplied.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from .beta import beta_on_interval, curve_graph
from .directional import single_scale_symbol
from .frequency import HL_PROFILE, LP_PROFILE
from .grid import SampledField, TorusGrid, interpolate
from .lipschitz import CurveChart, DirectionField, LipschitzFamily, project, reparametrize_curve
from .tiles import DirectionInterval, Tile, build_wave_packet, orientation_window

#: decay exponent of the tile-distance weights
DECAY_POWER = 4
#: half-width (in octaves) of the one-dimensional reproducing projection
REPRODUCING_WIDTH = 2


def bracket(x) -> np.ndarray:
    """``<x> = 1 + |x|``."""
    return 1.0 + np.abs(np.asarray(x, dtype=np.float64))


def _rotate_back(theta: float, xp, yp) -> tuple[np.ndarray, np.ndarray]:
    """Original torus coordinates of chart points ``(x', y')``."""
    c, s = math.cos(theta), math.sin(theta)
    xp = np.asarray(xp, dtype=np.float64)
    yp = np.asarray(yp, dtype=np.float64)
    return xp * c - yp * s, xp * s + yp * c


def _tile_record(tile: Tile) -> dict:
    return {"k": tile.k, "l": tile.l, "omega": tile.omega.index, "m": tile.m, "n": tile.n}


# ---------------------------------------------------------------------------
# the frozen packet operator as a finite exponential sum
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class ModeSum:
    """``F(p) = sum_j A_j e(zeta_j . p)`` over a finite mode list."""

    xi: np.ndarray
    eta: np.ndarray
    amp: np.ndarray

    @classmethod
    def from_coefficients(cls, grid: TorusGrid, coeffs: np.ndarray, tol: float = 0.0) -> "ModeSum":
        """Modes of a grid coefficient array (fft order, ``f(p) = sum c e(zeta . p)``)."""
        XI, ETA = grid.freq_mesh()
        nz = np.abs(coeffs) > tol
        return cls(XI[nz].astype(np.float64), ETA[nz].astype(np.float64), coeffs[nz].astype(np.complex128))

    def __call__(self, x, y) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        y = np.asarray(y, dtype=np.float64)
        ph = np.multiply.outer(x.ravel(), self.xi) + np.multiply.outer(y.ravel(), self.eta)
        return (np.exp(2j * np.pi * ph) @ self.amp).reshape(x.shape)

    def frozen(self, u: float, index: int) -> "ModeSum":
        """Apply the single-scale symbol at ``index`` along the constant direction ``(1, u)``."""
        w = single_scale_symbol(index)(self.xi + u * self.eta)
        keep = np.abs(w) > 0
        return ModeSum(self.xi[keep], self.eta[keep], (self.amp * w)[keep])

    def energy(self) -> float:
        return float(np.sum(np.abs(self.amp) ** 2))

    def __add__(self, other: "ModeSum") -> "ModeSum":
        return ModeSum(
            np.concatenate([self.xi, other.xi]),
            np.concatenate([self.eta, other.eta]),
            np.concatenate([self.amp, other.amp]),
        )

    def scaled(self, c: complex) -> "ModeSum":
        return ModeSum(self.xi, self.eta, c * self.amp)


def packet_modes(tile: Tile, grid: TorusGrid, normalization: str = "frame") -> ModeSum:
    """Mode list of ``phi_s``."""
    return ModeSum.from_coefficients(grid, build_wave_packet(tile, grid, normalization).coefficients)


def frozen_operator(tile: Tile, grid: TorusGrid, u: float, normalization: str = "frame") -> ModeSum:
    """Packet operator of ``tile`` with the direction frozen at ``(1, u)``."""
    return packet_modes(tile, grid, normalization).frozen(u, tile.k - tile.l)


def reproducing_weight(k: int, nu, width: int = REPRODUCING_WIDTH) -> np.ndarray:
    """One-dimensional projection along the chart axis: ``sum_{|j-k|<=width} psi(2^-j nu)``."""
    return LP_PROFILE.envelope(k, width, nu)


@dataclass(frozen=True, eq=False)
class FrozenPacket:
    """Restriction of a frozen packet operator to the chart line ``x' = tau y' + b``.

    As a function of ``y'`` it is ``sum_j B_j e(nu_j y')`` with
    ``nu_j = zeta_j . d`` and ``d`` the line direction in torus coordinates.
    """

    k: int
    theta: float
    tau: float
    intercept: float
    nu: np.ndarray
    coef: np.ndarray
    width: int = REPRODUCING_WIDTH

    def __call__(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=np.float64)
        return (np.exp(2j * np.pi * np.multiply.outer(z.ravel(), self.nu)) @ self.coef).reshape(z.shape)

    def projected(self, z) -> np.ndarray:
        """The one-dimensional projection at band ``k`` applied to the line function."""
        z = np.asarray(z, dtype=np.float64)
        w = reproducing_weight(self.k, self.nu, self.width)
        return (np.exp(2j * np.pi * np.multiply.outer(z.ravel(), self.nu)) @ (self.coef * w)).reshape(z.shape)

    def reproducing_residual(self) -> float:
        """Relative l1 weight of the modes the projection does not keep exactly."""
        w = reproducing_weight(self.k, self.nu, self.width)
        tot = float(np.sum(np.abs(self.coef)))
        return float(np.sum(np.abs(self.coef * (1.0 - w))) / tot) if tot > 0 else 0.0


def frozen_packet(
    operator: ModeSum, k: int, chart: CurveChart, tau: float, intercept: float, width: int = REPRODUCING_WIDTH
) -> FrozenPacket:
    """Frozen packet ``phi^x`` of a frozen operator along the line ``x' = tau y' + intercept``.

    Parameters
    ----------
    operator : ModeSum
        A frozen packet operator (see :func:`frozen_operator`); any mode sum is
        accepted, and the map is linear in it.
    k : int
        Band of the reproducing projection.
    chart : CurveChart
        Supplies the rotation angle.
    """
    c, s = math.cos(chart.theta), math.sin(chart.theta)
    p0 = (intercept * c, intercept * s)
    d = (tau * c - s, tau * s + c)
    nu = operator.xi * d[0] + operator.eta * d[1]
    coef = operator.amp * np.exp(2j * np.pi * (operator.xi * p0[0] + operator.eta * p0[1]))
    return FrozenPacket(k, chart.theta, tau, intercept, nu, coef, width)


# ---------------------------------------------------------------------------
# the curve window of a tile
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TileCurveWindow:
    """Where ``Gamma_x`` crosses the translate ``s_{m,n}`` of a tile.

    Attributes
    ----------
    anchor : float
        The curve label ``x``.
    tile : Tile
        The packet tile ``s``.
    offset : tuple
        ``(m, n)``; the window tile is ``tile.translate(m, n)``.
    J : tuple
        Interval of the chart vertical axis.
    tau, intercept : float
        Optimal line of the chart graph on ``J`` (``j0 = 0``).
    beta : float
        ``beta_0(J)``.
    h_average : float
        ``(1/w(s)) int_J |h(g_x(y'), y')| dy'`` (NaN without ``h``).
    chart_lipschitz : float
        Measured Lipschitz constant of the chart graph.
    """

    anchor: float
    tile: Tile
    offset: tuple
    J: tuple
    tau: float
    intercept: float
    beta: float
    h_average: float
    chart_lipschitz: float

    @property
    def length(self) -> float:
        return self.J[1] - self.J[0]

    @property
    def width(self) -> float:
        return self.tile.width

    def satisfies_length_bound(self) -> bool:
        """``|J| <= w(s) (1 + Lip)``."""
        return self.length <= self.width * (1.0 + self.chart_lipschitz) * (1.0 + 1e-9)


def _longest_cyclic_run(mask: np.ndarray) -> tuple[int, int] | None:
    """``(start, length)`` of the longest cyclic run of True values."""
    m = mask.size
    if not mask.any():
        return None
    if mask.all():
        return 0, m
    start = int(np.argmin(mask))  # a False entry: unroll from there
    best = None
    run_start, run = None, 0
    for t in range(1, m + 1):
        i = (start + t) % m
        if mask[i]:
            if run == 0:
                run_start = start + t
            run += 1
            if best is None or run > best[1]:
                best = (run_start, run)
        else:
            run = 0
    return best


def curve_samples(chart: CurveChart, samples: int):
    """``(y', x')`` of ``samples`` uniform chart samples over one period."""
    return chart.sample(samples)


def tile_curve_window(
    tile: Tile,
    chart: CurveChart,
    offset: tuple[int, int] = (0, 0),
    h: SampledField | None = None,
    samples: int = 4096,
) -> TileCurveWindow:
    """Window ``J(x, s_{m,n})``: the chart interval where the curve lies in the translate.

    Raises
    ------
    ValueError
        If the curve misses the translate.
    """
    from .tiles import tile_of_point

    target = tile.translate(*offset)
    yp, xp = curve_samples(chart, samples)
    x, y = _rotate_back(chart.theta, xp, yp)
    mi, ni = tile_of_point(tile.k, tile.omega, x, y)
    mask = (mi == target.m) & (ni == target.n)
    run = _longest_cyclic_run(mask)
    if run is None:
        raise ValueError(f"curve x={chart.anchor:.6g} misses tile {_tile_record(target)}")
    start, length = run
    dy = chart.period / samples
    a = yp[0] + (start - 0.5) * dy
    b = a + length * dy
    graph = curve_graph(chart, samples)
    beta0, tau, icpt = beta_on_interval(graph, a, b, 0)
    havg = math.nan
    if h is not None:
        idx = np.arange(start, start + length)
        zz = yp[0] + idx * dy
        hv = np.abs(_h_on_chart(h, chart, zz))
        havg = float(np.sum(hv) * dy / tile.width)
    return TileCurveWindow(float(chart.anchor), tile, tuple(offset), (float(a), float(b)), tau, icpt, beta0, havg, float(chart.lipschitz))


def _h_on_chart(h: SampledField, chart: CurveChart, z) -> np.ndarray:
    xp = chart.graph(z)
    x, y = _rotate_back(chart.theta, xp, z)
    vals, _ = interpolate(h, np.stack([np.mod(x, 1.0), np.mod(y, 1.0)], axis=-1), method="trig")
    return vals


# ---------------------------------------------------------------------------
# anchors and oriented tiles
# ---------------------------------------------------------------------------


def anchor_through(tile: Tile, fam: LipschitzFamily) -> float:
    """Label of the curve through the centre of ``tile``."""
    cx, cy = tile.center
    return float(np.mod(project(fam, np.array([cx]), np.array([cy]))[0], 1.0))


def oriented_direction(grid: TorusGrid, k: int, l: int, u: float) -> DirectionInterval:
    """Direction interval of length ``2^-l`` whose frozen packet operator at ``u`` has the most energy."""
    base = int(math.floor((-u + 2.0) * 2**l))
    best, best_e = None, -1.0
    for idx in range(base - 2, base + 3):
        if not 0 <= idx < 4 * 2**l:
            continue
        om = DirectionInterval(l, idx)
        e = frozen_operator(Tile(k, om, 0, 0), grid, u).energy()
        if e > best_e:
            best, best_e = om, e
    return best


# ---------------------------------------------------------------------------
# pointwise bound
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TermRecord:
    """One line of a report."""

    tile: dict
    anchor: float
    j0: int
    lhs: float
    rhs: float
    ratio: float

    def to_dict(self) -> dict:
        return asdict(self)


def _ratio(lhs: float, rhs: float, floor: float = 1e-300) -> float:
    if rhs > floor:
        return lhs / rhs
    return 0.0 if lhs <= 1e-13 else math.inf


def pointwise_majorant(beta: float, k: int, l: int, m: int, n: int, j0: int) -> float:
    """``beta_{|j0|} 2^k 2^(-3l/2) / <min(|m|+|n|, |m|+|n|-|j0|)>^4`` (without the constant)."""
    d = abs(m) + abs(n)
    return float(beta * 2.0**k * 2.0 ** (-1.5 * l) / bracket(min(d, d - abs(j0))) ** DECAY_POWER)


def pointwise_bound_check(
    tile: Tile,
    chart: CurveChart,
    grid: TorusGrid,
    j0s=range(0, 4),
    offset: tuple[int, int] = (0, 0),
    points: int = 64,
    samples: int = 4096,
    normalization: str = "frame",
    constant: float | None = None,
) -> list[TermRecord]:
    """Compare the frozen packet operator on the curve and on the optimal line.

    For each ``j0`` the line is the optimal line of the chart graph over the
    ``beta_{|j0|}`` window of ``J`` and ``lhs`` is the largest difference over
    ``z in J + j0 2^-k``.  With ``constant=None`` the ratio is ``lhs`` over the
    bare majorant, i.e. the fitted constant is the largest ratio.
    """
    win = tile_curve_window(tile, chart, offset, samples=samples)
    u = math.tan(chart.theta)
    op = frozen_operator(tile, grid, u, normalization)
    graph = curve_graph(chart, samples)
    a, b = win.J
    out = []
    for j0 in j0s:
        beta, tau, icpt = beta_on_interval(graph, a, b, abs(j0))
        z = np.linspace(a, b, points) + j0 * tile.width
        xc, yc = _rotate_back(chart.theta, chart.graph(z), z)
        line = frozen_packet(op, tile.k, chart, tau, icpt)
        lhs = float(np.max(np.abs(op(xc, yc) - line(z))))
        rhs = pointwise_majorant(beta, tile.k, tile.l, offset[0], offset[1], j0)
        if constant is not None:
            rhs *= constant
        out.append(TermRecord(_tile_record(tile), win.anchor, int(j0), lhs, rhs, _ratio(lhs, rhs)))
    return out


def kernel_step_bound(k: int, l: int, grid_points: int = 4096) -> float:
    """``sup |d/dt psi-check_0| <= int 2 pi |lam| psi_0(lam) d lam``, times ``2^(k-l)``.

    For a displacement ``delta`` the mean value theorem gives
    ``|psi-check_0(2^(k-l)(t + delta)) - psi-check_0(2^(k-l) t)| <= bound * |delta|``.
    """
    lo, hi = HL_PROFILE.support
    lam = np.linspace(lo, hi, grid_points)
    d = 2 * np.pi * np.trapezoid(np.abs(lam) * HL_PROFILE(lam), lam)
    return float(d * 2.0 ** (k - l))


def kernel_check(lam_points: int = 4096):
    """Inverse transform ``psi-check_0`` by quadrature over the profile support."""
    lo, hi = HL_PROFILE.support
    lam = np.linspace(lo, hi, lam_points)
    prof = HL_PROFILE(lam)

    def kernel(t):
        t = np.asarray(t, dtype=np.float64)
        return np.trapezoid(prof * np.exp(2j * np.pi * np.multiply.outer(t, lam)), lam, axis=-1)

    return kernel


def kernel_step_check(k: int, l: int, beta: float, width: float, trials: int = 200, seed: int = 0) -> float:
    """Largest ``|psi-check_0(2^(k-l)(t + delta)) - psi-check_0(2^(k-l) t)| / (bound |delta|)``.

    ``delta`` ranges over ``[-beta width, beta width]``; a value at most 1
    confirms the fundamental-theorem step ``<~ 2^-l beta`` when ``width = 2^-k``.
    """
    rng = np.random.default_rng(seed)
    kern = kernel_check()
    t = rng.uniform(-4.0, 4.0, trials) * 2.0 ** (l - k)
    delta = rng.uniform(-1.0, 1.0, trials) * beta * width
    s = 2.0 ** (k - l)
    diff = np.abs(kern(s * (t + delta)) - kern(s * t))
    bound = kernel_step_bound(k, l) * np.abs(delta)
    ok = bound > 0
    return float(np.max(diff[ok] / bound[ok])) if ok.any() else 0.0


# ---------------------------------------------------------------------------
# the single-term estimate
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CurveRestriction:
    """Frozen operator on one full period of the curve with its chart projection."""

    z: np.ndarray
    values: np.ndarray
    projected: np.ndarray
    dz: float


def curve_restriction(op: ModeSum, k: int, chart: CurveChart, samples: int, width: int = REPRODUCING_WIDTH) -> CurveRestriction:
    """Restrict ``op`` to the curve and apply the chart-axis projection as a Fourier multiplier.

    The restriction is periodic in ``y'`` with period ``cos(theta)``.
    """
    yp, xp = curve_samples(chart, samples)
    x, y = _rotate_back(chart.theta, xp, yp)
    vals = op(x, y)
    nu = np.fft.fftfreq(samples, d=chart.period / samples)
    proj = np.fft.ifft(np.fft.fft(vals) * reproducing_weight(k, nu, width))
    return CurveRestriction(yp, vals, proj, chart.period / samples)


def single_term_majorant(win: TileCurveWindow, graph, j0_max: int) -> float:
    """``sum_{j0 <= j0_max} 2^(-3l/2) beta_j0(J) [h] / <j0 + |m| + |n|>^4`` (without the constant)."""
    a, b = win.J
    m, n = win.offset
    tot = 0.0
    for j0 in range(j0_max + 1):
        beta = beta_on_interval(graph, a, b, j0)[0]
        tot += 2.0 ** (-1.5 * win.tile.l) * beta * win.h_average / bracket(j0 + abs(m) + abs(n)) ** DECAY_POWER
    return float(tot)


def single_term_check(
    tile: Tile,
    chart: CurveChart,
    grid: TorusGrid,
    h: SampledField,
    offset: tuple[int, int] = (0, 0),
    j0_max: int = 4,
    window: str = "spectral",
    samples: int | None = None,
    normalization: str = "frame",
    width: int = REPRODUCING_WIDTH,
    constant: float | None = None,
) -> TermRecord:
    """``int_J |h (phi_s - P_k phi_s)|`` along the curve against the tile majorant.

    ``phi_s`` is the frozen packet operator on the curve and ``P_k`` the
    chart-axis projection.  The majorant carries the orientation indicator
    ``1{-u(x) in window}`` with ``window`` as in
    :func:`liphilbert.tiles.orientation_window`.
    """
    samples = 16 * grid.n if samples is None else samples
    win = tile_curve_window(tile, chart, offset, h=h, samples=samples)
    u = math.tan(chart.theta)
    op = frozen_operator(tile, grid, u, normalization)
    cr = curve_restriction(op, tile.k, chart, samples, width)
    a, b = win.J
    # samples inside J, unwrapped periodically
    L = chart.period
    zz = np.concatenate([cr.z - L, cr.z, cr.z + L])
    res = np.tile(cr.values - cr.projected, 3)
    inside = (zz >= a) & (zz < b)
    hv = _h_on_chart(h, chart, zz[inside])
    lhs = float(np.sum(np.abs(hv * res[inside])) * cr.dz)
    intervals = orientation_window(tile, grid, window)
    indicator = any(lo <= -u <= hi for lo, hi in intervals)
    graph = curve_graph(chart, samples)
    rhs = single_term_majorant(win, graph, j0_max) if indicator else 0.0
    if constant is not None:
        rhs *= constant
    return TermRecord(_tile_record(tile), win.anchor, 0, lhs, rhs, _ratio(lhs, rhs))


@dataclass(frozen=True)
class DecompositionReport:
    """``phi - P phi = (phi - phi^x) - P (phi - phi^x) + (P phi^x - phi^x)`` on ``J``."""

    identity_defect: float
    reproducing_residual: float
    scale: float


def decomposition_check(
    tile: Tile, chart: CurveChart, grid: TorusGrid, samples: int | None = None, normalization: str = "frame",
    width: int = REPRODUCING_WIDTH,
) -> DecompositionReport:
    """Check the splitting of ``phi - P_k phi`` around the frozen packet on the window."""
    samples = 16 * grid.n if samples is None else samples
    win = tile_curve_window(tile, chart, samples=samples)
    u = math.tan(chart.theta)
    op = frozen_operator(tile, grid, u, normalization)
    cr = curve_restriction(op, tile.k, chart, samples, width)
    line = frozen_packet(op, tile.k, chart, win.tau, win.intercept, width)
    a, b = win.J
    L = chart.period
    zz = np.concatenate([cr.z - L, cr.z, cr.z + L])
    inside = (zz >= a) & (zz < b)
    z = zz[inside]
    V = np.tile(cr.values, 3)[inside]
    PV = np.tile(cr.projected, 3)[inside]
    W = line(z)
    PW = line.projected(z)
    lhs = V - PV
    rhs = (V - W) - (PV - PW) + (PW - W)
    scale = float(max(np.max(np.abs(V)), 1e-300))
    return DecompositionReport(
        float(np.max(np.abs(lhs - rhs)) / scale),
        float(np.max(np.abs(PW - W)) / scale),
        scale,
    )


# ---------------------------------------------------------------------------
# batch helpers
# ---------------------------------------------------------------------------


def random_oriented_tiles(
    grid: TorusGrid, fam: LipschitzFamily, dirf: DirectionField, k: int, l: int, count: int, seed: int = 0
) -> list[tuple[Tile, CurveChart]]:
    """Random tiles of scale ``(k, l)``, each paired with the curve through its centre.

    The direction interval is the one whose frozen packet operator at the
    curve's direction carries the most energy.
    """
    rng = np.random.default_rng(seed)
    out = []
    while len(out) < count:
        # start from a random centre, orient, then re-anchor
        m = int(rng.integers(0, 2 ** (k - l)))
        n = int(rng.integers(0, 2**k))
        om0 = DirectionInterval(l, 2 * 2**l)
        x0 = anchor_through(Tile(k, om0, m, n), fam)
        u = float(dirf(np.array([x0]))[0])
        om = oriented_direction(grid, k, l, u)
        tile = Tile(k, om, m, n)
        x = anchor_through(tile, fam)
        if float(dirf(np.array([x]))[0]) != u:
            continue  # the re-anchored curve sits on a different step of u
        out.append((tile, reparametrize_curve(fam, dirf, x)))
    return out


def records_to_json(records: list[TermRecord], path: str | Path | None = None) -> str:
    text = json.dumps([r.to_dict() for r in records], indent=2)
    if path is not None:
        Path(path).write_text(text)
    return text
