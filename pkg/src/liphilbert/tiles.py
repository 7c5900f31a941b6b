"""Direction intervals, tiles, wave packets and the model sum on the torus.

Frequency side
--------------
``beta`` is a smooth even bump equal to 1 on ``[-1, 1]`` and vanishing beyond
2, built from a smooth step whose square root is smooth as well.  For a
dyadic direction interval ``omega`` of length ``2^-l`` in ``[-2, 2]``

    beta_omega(x) = beta(2^(l + 3) (x - c(omega_1)))

lives on the right half ``omega_1``.  ``beta_tilde`` equals 1 on ``[1, 2]``
and vanishes outside ``[1/2, 5/2]``.  The packet multiplier is
``m_{k,omega}(xi, eta) = beta_tilde(2^-k eta) beta_omega(xi / eta)``.

Space side
----------
A tile of ``U_{k,omega}`` is a parallelogram of width ``w = 2^-k`` and
horizontal extent ``L = 2^(l-k)`` whose long side has slope ``-c(omega)``:
in the sheared coordinates ``(x, y + c x)`` the tiles are the cells of an
``L x w`` grid.  For ``l <= k <= log2(n) - 2`` every tile centre is a grid
point, which makes the translate lattice a subgroup of the grid.

A packet is ``phi_s(p) = sum a_zeta e(zeta . (p - c(s)))`` with
``|a|^2`` proportional to ``m_{k,omega}``.  With ``|a|^2 = |s| m`` (the
"frame" normalisation) the translation-averaged packet sum reproduces
``f * m_{k,omega}`` exactly and the packets form a Bessel system; with
``|a|^2 = m / sum m`` (the "unit" normalisation) every packet has norm 1.
The two differ by the factor ``|s| sum m``, which is not 1.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Iterable

import numpy as np

from .directional import DirectionalOperator, single_scale_symbol
from .frequency import HL_PROFILE, BandError, FrequencyMultiplier, smooth_step
from .grid import SampledField, TorusGrid, from_spectrum

BUMP_SHIFT = 3
DELTA = 3.0 / 8.0


def beta_bump(x):
    """Smooth even bump: 1 on ``|x| <= 1``, 0 for ``|x| >= 2``."""
    x = np.abs(np.asarray(x, dtype=np.float64))
    return smooth_step(2.0 - x)


def beta_tilde(x):
    """Smooth bump equal to 1 on ``[1, 2]`` and vanishing outside ``[1/2, 5/2]``."""
    x = np.asarray(x, dtype=np.float64)
    return smooth_step((x - 0.5) / 0.5) * smooth_step((2.5 - x) / 0.5)


@dataclass(frozen=True)
class DirectionInterval:
    """``omega = [-2 + j 2^-l, -2 + (j + 1) 2^-l)``."""

    l: int
    index: int

    def __post_init__(self):
        if self.l < 0:
            raise ValueError("l must be nonnegative")
        if not 0 <= self.index < 4 * 2**self.l:
            raise ValueError(f"direction index {self.index} outside D_{self.l}")

    @property
    def length(self) -> float:
        return 2.0**-self.l

    @property
    def left(self) -> float:
        return -2.0 + self.index * self.length

    @property
    def right(self) -> float:
        return self.left + self.length

    @property
    def center(self) -> float:
        return self.left + 0.5 * self.length

    @property
    def omega1(self) -> tuple[float, float]:
        """Right half."""
        return self.center, self.right

    @property
    def omega2(self) -> tuple[float, float]:
        """Left half."""
        return self.left, self.center

    def bump(self, x):
        """``beta_omega(x) = beta(2^(l+3) (x - c(omega_1)))``."""
        c1 = 0.5 * (self.center + self.right)
        return beta_bump(2.0 ** (self.l + BUMP_SHIFT) * (np.asarray(x, dtype=np.float64) - c1))


def direction_intervals(l: int) -> list[DirectionInterval]:
    """All of ``D_l``."""
    return [DirectionInterval(l, j) for j in range(4 * 2**l)]


def beta_l(l: int, x):
    """``sum_{omega in D_l} beta_omega(x)``."""
    x = np.asarray(x, dtype=np.float64)
    out = np.zeros_like(x)
    for om in direction_intervals(l):
        out += om.bump(x)
    return out


def gamma_l(l: int, x, points_per_period: int = 512):
    """``(1/2) int_{-1}^{1} beta_l(x + t) dt`` by the periodic trapezoid rule.

    ``beta_l`` is smooth and ``2^-l``-periodic on ``[-2, 2]``, so for
    ``|x| <= 1`` the window holds whole periods and the rule is spectrally
    accurate; the value there is ``DELTA = 3/8``.
    """
    x = np.atleast_1d(np.asarray(x, dtype=np.float64))
    m = points_per_period * 2 ** (l + 1)
    t = -1.0 + 2.0 * np.arange(m) / m
    vals = beta_l(l, x[:, None] + t[None, :])
    return vals.mean(axis=1)


def tile_band(grid: TorusGrid) -> range:
    """Scales ``k`` whose packet annulus ``[1/2, 5/2] 2^k`` and tile centres fit the grid."""
    return range(0, grid.log2n - 2)


def _ratio(grid: TorusGrid):
    XI, ETA = grid.freq_mesh()
    with np.errstate(divide="ignore", invalid="ignore"):
        r = np.where(ETA != 0, XI / np.where(ETA != 0, ETA, 1), np.nan)
    return XI, ETA, r


def _check_band(grid: TorusGrid, k: int, l: int | None = None) -> None:
    band = tile_band(grid)
    if k not in band:
        raise BandError(f"scale {k} outside the tile band [{band.start}, {band.stop - 1}] for n={grid.n}")
    if l is not None and not 0 <= l <= k:
        raise BandError(f"need 0 <= l <= k for tiles on the torus, got l={l}, k={k}")


def build_multiplier(grid: TorusGrid, k: int, omega: DirectionInterval) -> FrequencyMultiplier:
    """``m_{k,omega}`` on the grid spectrum (zero on ``eta = 0``)."""
    _check_band(grid, k)
    _, ETA, r = _ratio(grid)
    w = beta_tilde(np.ldexp(ETA.astype(np.float64), -k)) * np.where(np.isnan(r), 0.0, omega.bump(np.nan_to_num(r)))
    return FrequencyMultiplier(grid, w, f"m(k={k}, l={omega.l}, omega={omega.index})")


def build_level_multiplier(grid: TorusGrid, k: int, l: int, t: float = 0.0, averaged: bool = False) -> FrequencyMultiplier:
    """``m_{k,l,t}`` (``beta_l(t + xi/eta)``) or, if ``averaged``, ``m_{k,l}`` (``gamma_l``)."""
    _check_band(grid, k)
    _, ETA, r = _ratio(grid)
    rr = np.nan_to_num(r)
    if averaged:
        ang = gamma_l(l, rr.ravel()).reshape(rr.shape)
    else:
        ang = beta_l(l, t + rr)
    w = beta_tilde(np.ldexp(ETA.astype(np.float64), -k)) * np.where(np.isnan(r), 0.0, ang)
    tag = f"m(k={k}, l={l}" + (")" if averaged else f", t={t})")
    return FrequencyMultiplier(grid, w, tag)


# ---------------------------------------------------------------------------
# tiles
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Tile:
    """Tile ``(m, n)`` of ``U_{k,omega}``."""

    k: int
    omega: DirectionInterval
    m: int
    n: int

    @property
    def l(self) -> int:
        return self.omega.l

    @property
    def width(self) -> float:
        return 2.0**-self.k

    @property
    def length(self) -> float:
        return 2.0 ** (self.l - self.k)

    @property
    def area(self) -> float:
        return self.width * self.length

    @property
    def slope(self) -> float:
        """Slope of the long side."""
        return -self.omega.center

    @property
    def center(self) -> tuple[float, float]:
        c = self.omega.center
        cx = (self.m + 0.5) * self.length
        cy = ((self.n + 0.5) * self.width - c * cx) % 1.0
        return cx, cy

    def center_index(self, grid: TorusGrid) -> tuple[int, int]:
        cx, cy = self.center
        i, j = cx * grid.n, cy * grid.n
        ii, jj = int(round(i)), int(round(j))
        if abs(i - ii) > 1e-9 or abs(j - jj) > 1e-9:
            raise BandError("tile centre is not a grid point at this scale")
        return ii % grid.n, jj % grid.n

    def translate(self, dm: int, dn: int) -> "Tile":
        """Tile whose centre is ``c(s) + (dm l(s), dn w(s) - c(omega) dm l(s))`` on the torus."""
        cm = 2 ** (self.k - self.l)
        cn = 2**self.k
        shift = int(round(self.omega.center / self.width))
        q, m = divmod(self.m + dm, cm)
        return Tile(self.k, self.omega, m, (self.n + dn - q * shift) % cn)


def tile_offset(s1: Tile, s2: Tile) -> tuple[int, int]:
    """Translate indices ``(m, n)`` taking ``s1`` to ``s2``, reduced to the shortest torus representative.

    A full turn in ``x`` moves the sheared coordinate ``y + c x`` by ``c``,
    i.e. by ``c / w`` tile widths, so ``(m, n) ~ (m + 2^(k-l), n + c/w)``.
    """
    if (s1.k, s1.omega) != (s2.k, s2.omega):
        raise ValueError("offsets are defined within one tiling")
    cm = 2 ** (s1.k - s1.l)
    cn = 2**s1.k
    shift = int(round(s1.omega.center / s1.width))
    dm_raw = s2.m - s1.m
    best = None
    for j in range(-2, 3):
        dm = dm_raw + j * cm
        dn = (s2.n - s1.n + j * shift + cn // 2) % cn - cn // 2
        if best is None or abs(dm) + abs(dn) < abs(best[0]) + abs(best[1]):
            best = (dm, dn)
    return best


def tiling(k: int, omega: DirectionInterval) -> list[Tile]:
    """All tiles of ``U_{k,omega}`` on the unit torus."""
    if omega.l > k:
        raise BandError("tiles need l <= k on the unit torus")
    return [Tile(k, omega, m, n) for m in range(2 ** (k - omega.l)) for n in range(2**k)]


def tile_of_point(k: int, omega: DirectionInterval, x, y):
    """Indices ``(m, n)`` of the tile containing ``(x, y)`` (torus coordinates)."""
    L = 2.0 ** (omega.l - k)
    w = 2.0**-k
    x = np.mod(np.asarray(x, dtype=np.float64), 1.0)
    y = np.asarray(y, dtype=np.float64)
    m = np.floor(x / L + 1e-12).astype(np.int64)
    n = np.floor(np.mod(y + omega.center * x, 1.0) / w + 1e-12).astype(np.int64)
    return m % 2 ** (k - omega.l), n % 2**k


# ---------------------------------------------------------------------------
# wave packets
# ---------------------------------------------------------------------------

NORMALIZATIONS = ("unit", "frame")


def packet_amplitude(grid: TorusGrid, k: int, omega: DirectionInterval, normalization: str = "unit") -> np.ndarray:
    """Centred packet coefficients ``a_zeta >= 0`` (fft order)."""
    if normalization not in NORMALIZATIONS:
        raise ValueError(f"normalization must be one of {NORMALIZATIONS}")
    m = build_multiplier(grid, k, omega).weights
    if normalization == "unit":
        total = m.sum()
        if total <= 0:
            raise BandError("packet multiplier has no support on this grid")
        return np.sqrt(m / total)
    area = 2.0 ** (omega.l - 2 * k)
    return np.sqrt(area * m)


def normalization_constant(grid: TorusGrid, k: int, omega: DirectionInterval) -> float:
    """``|s| sum m_{k,omega}``: squared norm of a frame-normalised packet."""
    m = build_multiplier(grid, k, omega).weights
    return float(2.0 ** (omega.l - 2 * k) * m.sum())


@dataclass(eq=False)
class WavePacket:
    """Packet ``phi_s`` of one tile; coefficients ``a_zeta e(-zeta . c(s))``."""

    tile: Tile
    grid: TorusGrid
    normalization: str = "unit"

    @cached_property
    def amplitude(self) -> np.ndarray:
        return packet_amplitude(self.grid, self.tile.k, self.tile.omega, self.normalization)

    @cached_property
    def coefficients(self) -> np.ndarray:
        XI, ETA = self.grid.freq_mesh()
        cx, cy = self.tile.center
        return self.amplitude * np.exp(-2j * np.pi * (XI * cx + ETA * cy))

    @cached_property
    def field(self) -> SampledField:
        n = self.grid.n
        return from_spectrum(self.grid, n * self.coefficients)

    def norm(self) -> float:
        return float(np.sqrt(np.sum(np.abs(self.coefficients) ** 2)))

    def inner(self, other: "WavePacket") -> complex:
        """``<phi_self, phi_other>`` on the torus."""
        return complex(np.sum(self.coefficients * np.conj(other.coefficients)))

    def support_descriptor(self) -> dict:
        nz = np.nonzero(self.amplitude)
        XI, ETA = self.grid.freq_mesh()
        return {
            "modes": int(nz[0].size),
            "eta_range": [int(ETA[nz].min()), int(ETA[nz].max())],
            "xi_range": [int(XI[nz].min()), int(XI[nz].max())],
        }


def build_wave_packet(tile: Tile, grid: TorusGrid, normalization: str = "unit") -> WavePacket:
    _check_band(grid, tile.k, tile.l)
    if normalization not in NORMALIZATIONS:
        raise ValueError(f"normalization must be one of {NORMALIZATIONS}")
    return WavePacket(tile, grid, normalization)


# ---------------------------------------------------------------------------
# coefficients, reconstruction and the model sum
# ---------------------------------------------------------------------------


def translate_cell(grid: TorusGrid, k: int, l: int) -> tuple[np.ndarray, np.ndarray]:
    """Grid offsets forming one fundamental cell of the tile-centre lattice."""
    n = grid.n
    Ln = int(round(2.0 ** (l - k) * n))
    wn = int(round(2.0**-k * n))
    i, j = np.meshgrid(np.arange(Ln), np.arange(wn), indexing="ij")
    return i.ravel(), j.ravel()


def _lattice_mask(grid: TorusGrid, k: int, omega: DirectionInterval, di: int = 0, dj: int = 0) -> np.ndarray:
    mask = np.zeros((grid.n, grid.n), dtype=bool)
    for t in tiling(k, omega):
        i, j = t.center_index(grid)
        mask[(i + di) % grid.n, (j + dj) % grid.n] = True
    return mask


def packet_correlation(f: SampledField, k: int, omega: DirectionInterval, normalization: str = "frame") -> np.ndarray:
    """``<f, tau_q phi>`` for every grid translate ``q`` of the centred packet."""
    a = packet_amplitude(f.grid, k, omega, normalization)
    return np.fft.ifft2(f.spectrum * a, norm="ortho")


def tile_coefficients(f: SampledField, k: int, omega: DirectionInterval, normalization: str = "frame", offset=(0, 0)):
    """``{tile: <f, phi_s>}`` for the tiling shifted by a grid ``offset``."""
    corr = packet_correlation(f, k, omega, normalization)
    n = f.grid.n
    out = {}
    for t in tiling(k, omega):
        i, j = t.center_index(f.grid)
        out[t] = corr[(i + offset[0]) % n, (j + offset[1]) % n]
    return out


def _spread(grid: TorusGrid, a: np.ndarray, D: np.ndarray) -> SampledField:
    """``sum_q D[q] tau_q phi`` for the centred packet with amplitude ``a``."""
    return from_spectrum(grid, grid.n * a * np.fft.fft2(D))


def reconstruct(
    f: SampledField,
    k: int,
    omega: DirectionInterval,
    average: bool = True,
    normalization: str = "frame",
    offset=(0, 0),
) -> SampledField:
    """Packet sum ``sum_s <f, phi_s> phi_s`` for one ``U_{k,omega}``.

    With ``average`` the sum is averaged over every grid translate of the
    tiling (one cell of the centre lattice), which is the finite form of the
    translation average; otherwise the single tiling shifted by ``offset``.
    """
    grid = f.grid
    a = packet_amplitude(grid, k, omega, normalization)
    corr = np.fft.ifft2(f.spectrum * a, norm="ortho")
    if average:
        cell = 2.0 ** (omega.l - 2 * k) * grid.n**2
        return _spread(grid, a, corr / cell)
    mask = _lattice_mask(grid, k, omega, *offset)
    return _spread(grid, a, np.where(mask, corr, 0.0))


def reconstruct_by_translates(f: SampledField, k: int, omega: DirectionInterval, normalization: str = "frame") -> SampledField:
    """Explicit average of :func:`reconstruct` over one cell of translates (slow reference)."""
    di, dj = translate_cell(f.grid, k, omega.l)
    acc = np.zeros((f.grid.n, f.grid.n), dtype=np.complex128)
    for a, b in zip(di, dj):
        acc += reconstruct(f, k, omega, average=False, normalization=normalization, offset=(int(a), int(b))).values
    return SampledField(f.grid, acc / di.size)


def active_directions(grid: TorusGrid, k: int, l: int) -> list[DirectionInterval]:
    """Directions of ``D_l`` whose packet multiplier has grid support at scale ``k``."""
    out = []
    for om in direction_intervals(l):
        if np.any(build_multiplier(grid, k, om).weights > 0):
            out.append(om)
    return out


def model_sum(
    opv: DirectionalOperator,
    f: SampledField,
    l: int,
    bands: Iterable[int] | None = None,
    average: bool = True,
) -> SampledField:
    """``sum_k sum_omega sum_s <f, phi_s> phi_s-operator`` at fixed ``l``.

    The packet operator applies the single-scale directional piece at index
    ``k - l`` to ``phi_s``; by linearity the packets of one ``k`` are summed
    first and the operator is applied once.
    """
    grid = f.grid
    bands = [k for k in tile_band(grid) if k >= l] if bands is None else list(bands)
    out = np.zeros((grid.n, grid.n), dtype=np.complex128)
    for k in bands:
        _check_band(grid, k, l)
        acc = np.zeros_like(out)
        for om in active_directions(grid, k, l):
            acc += reconstruct(f, k, om, average=average).values
        out += opv.apply_symbol(SampledField(grid, acc), single_scale_symbol(k - l)).values
    return SampledField(grid, out)


def model_sum_oracle(opv: DirectionalOperator, f: SampledField, l: int, bands: Iterable[int] | None = None) -> SampledField:
    """``sum_k H_{k-l}(f * m_{k,l,0})`` by direct multiplier application."""
    grid = f.grid
    bands = [k for k in tile_band(grid) if k >= l] if bands is None else list(bands)
    out = np.zeros((grid.n, grid.n), dtype=np.complex128)
    for k in bands:
        g = build_level_multiplier(grid, k, l).apply(f)
        out += opv.apply_symbol(g, single_scale_symbol(k - l)).values
    return SampledField(grid, out)


def coefficients_to_csv(f: SampledField, k: int, omega: DirectionInterval, path: str | Path, normalization: str = "frame") -> None:
    """Write ``k,l,omega_index,m,n,coeff_re,coeff_im`` rows for one tiling."""
    coeffs = tile_coefficients(f, k, omega, normalization)
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["k", "l", "omega_index", "m", "n", "coeff_re", "coeff_im"])
        for t, c in coeffs.items():
            wr.writerow([t.k, t.l, t.omega.index, t.m, t.n, repr(c.real), repr(c.imag)])


# ---------------------------------------------------------------------------
# orientation windows
# ---------------------------------------------------------------------------


def _merge(intervals):
    intervals = sorted(intervals)
    out = []
    for a, b in intervals:
        if out and a <= out[-1][1]:
            out[-1][1] = max(out[-1][1], b)
        else:
            out.append([a, b])
    return [tuple(iv) for iv in out]


def orientation_window(tile: Tile, grid: TorusGrid, which: str = "half") -> list[tuple[float, float]]:
    """Values of ``-u`` at which the packet operator of ``tile`` may be nonzero.

    ``which="half"`` is the left half ``omega_2`` of the tile's direction
    interval.  ``which="spectral"`` is the exact set: a slope ``c`` keeps the
    mode ``(xi, eta)`` when ``xi + c eta`` lies in the open support of the
    single-scale profile at index ``k - l``.
    """
    if which == "half":
        return [tile.omega.omega2]
    if which != "spectral":
        raise ValueError("which must be 'half' or 'spectral'")
    amp = build_multiplier(grid, tile.k, tile.omega).weights
    XI, ETA = grid.freq_mesh()
    nz = amp > 0
    lo, hi = HL_PROFILE.support
    s = 2.0 ** (tile.k - tile.l)
    xi = XI[nz].astype(np.float64)
    eta = ETA[nz].astype(np.float64)
    # xi + c eta in (lo s, hi s)  <=>  -c in ((xi - hi s)/eta, (xi - lo s)/eta)
    return _merge(zip((xi - hi * s) / eta, (xi - lo * s) / eta))


def _inside(vals, intervals, closed: bool):
    mask = np.zeros(vals.shape, dtype=bool)
    for a, b in intervals:
        mask |= (vals >= a) & (vals <= b) if closed else (vals > a) & (vals < b)
    return mask


@dataclass(frozen=True)
class VanishingReport:
    window: str
    max_excluded: float
    max_all: float
    ratio: float
    excluded_points: int
    tolerance: float

    @property
    def passed(self) -> bool:
        return self.ratio <= self.tolerance


def packet_operator_field(tile: Tile, opv: DirectionalOperator, normalization: str = "unit") -> SampledField:
    """``phi_s``-operator: single-scale piece at index ``k - l`` along the field applied to ``phi_s``."""
    pk = build_wave_packet(tile, opv.grid, normalization)
    return opv.apply_symbol(pk.field, single_scale_symbol(tile.k - tile.l))


def vanishing_check(tile: Tile, opv: DirectionalOperator, window: str = "half", tol: float = 1e-6) -> VanishingReport:
    """Largest packet-operator value where ``-u(P(x, y))`` is outside the window.

    The ratio is taken against the larger of the output peak and the peak of
    the (unit-norm) packet itself.
    """
    packet = build_wave_packet(tile, opv.grid)
    field = np.abs(opv.apply_symbol(packet.field, single_scale_symbol(tile.k - tile.l)).values)
    neg_u = -opv.slopes
    win = orientation_window(tile, opv.grid, window)
    inside = _inside(neg_u, win, closed=(window == "half"))
    excluded = ~inside
    # reference scale: the larger of the output peak and the packet's own peak,
    # so an output that vanishes everywhere is reported as vanishing
    mx_all = max(float(field.max()), packet.field.sup())
    mx_ex = float(field[excluded].max()) if excluded.any() else 0.0
    ratio = mx_ex / mx_all
    return VanishingReport(window, mx_ex, mx_all, ratio, int(excluded.sum()), tol)
