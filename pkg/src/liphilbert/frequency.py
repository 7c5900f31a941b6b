"""Dyadic frequency profiles, Littlewood-Paley and cone projections.

Two profiles are used, both differences of a smooth cutoff ``chi`` that equals
1 on ``[0, A]`` and vanishes beyond ``B``:

``psi(t) = chi(|t|) - chi(2|t|)``

is supported in ``A/2 <= |t| <= B`` and the dyadic sums telescope exactly, so
``sum_k psi(2^-k t) = 1`` for every ``t != 0`` without any numerical
renormalisation.

* The vertical Littlewood-Paley profile uses ``A = 1, B = 1.1`` (support
  ``[1/2, 1.1]``).  Consecutive bands overlap on ``[1, 1.1] 2^k`` only, so at
  most two factors are nonzero at any frequency.
* The single-scale profile for the directional transform uses ``A = 1.2,
  B = 2.5`` (support ``[0.6, 2.5]``) on the positive half-line.

With these supports a single-scale piece at index ``l`` annihilates the
Littlewood-Paley band ``k`` whenever ``l > k`` and the slope is at most
``1/11`` in absolute value: on band ``k`` the directional frequency
``xi + c eta`` is at most ``(1 + |c|) 1.1 2^k <= 1.2 2^k``, which is where the
single-scale profile at index ``k + 1`` starts.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .grid import GridError, SampledField, TorusGrid, from_spectrum


class BandError(ValueError):
    """A dyadic index lies outside the band resolvable on the grid."""


def smooth_step(s):
    """C-infinity step: 0 for ``s <= 0``, 1 for ``s >= 1``, built from ``exp(-1/s)``."""
    s = np.asarray(s, dtype=np.float64)
    out = np.zeros_like(s)
    inside = (s > 0.0) & (s < 1.0)
    si = s[inside]
    a = np.exp(-1.0 / si)
    b = np.exp(-1.0 / (1.0 - si))
    out[inside] = a / (a + b)
    out[s >= 1.0] = 1.0
    return out


@dataclass(frozen=True)
class BumpProfile:
    """Dyadic bump ``psi(t) = chi(|t|) - chi(2|t|)``.

    Parameters
    ----------
    plateau : float
        ``chi = 1`` on ``[0, plateau]``.
    cutoff : float
        ``chi = 0`` beyond ``cutoff``.
    positive_only : bool
        Restrict to ``t > 0`` (the one-sided profile).
    """

    plateau: float
    cutoff: float
    positive_only: bool = False

    def chi(self, t):
        t = np.abs(np.asarray(t, dtype=np.float64))
        return smooth_step((self.cutoff - t) / (self.cutoff - self.plateau))

    def __call__(self, t):
        t = np.asarray(t, dtype=np.float64)
        val = self.chi(t) - self.chi(2.0 * t)
        if self.positive_only:
            val = np.where(t > 0, val, 0.0)
        return val

    @property
    def support(self) -> tuple[float, float]:
        return 0.5 * self.plateau, self.cutoff

    def scaled(self, j: int, t):
        """``psi(2^-j t)``."""
        return self(np.ldexp(np.asarray(t, dtype=np.float64), -j))

    def envelope(self, k: int, width: int, t):
        """``sum_{|j - k| <= width} psi(2^-j t)``; identically 1 on the support of band ``k``."""
        t = np.asarray(t, dtype=np.float64)
        val = self.chi(np.ldexp(t, -(k + width))) - self.chi(np.ldexp(t, -(k - width) + 1))
        if self.positive_only:
            val = np.where(t > 0, val, 0.0)
        return val


LP_PROFILE = BumpProfile(1.0, 1.1)
HL_PROFILE = BumpProfile(1.2, 2.5, positive_only=True)


@dataclass(frozen=True, eq=False)
class FrequencyMultiplier:
    """Grid-aligned spectral weights with a provenance tag."""

    grid: TorusGrid
    weights: np.ndarray
    tag: str

    def apply(self, f: SampledField) -> SampledField:
        if f.grid != self.grid:
            raise GridError("multiplier and field live on different grids")
        return from_spectrum(self.grid, f.spectrum * self.weights)

    def to_csv(self, path: str | Path) -> None:
        """Write ``xi,eta,weight`` rows (real weights only)."""
        w = self.weights
        if np.iscomplexobj(w) and np.max(np.abs(np.imag(w))) > 0:
            raise ValueError("CSV export supports real-valued multipliers only")
        XI, ETA = self.grid.freq_mesh()
        with open(path, "w", newline="") as fh:
            wr = csv.writer(fh)
            wr.writerow(["xi", "eta", "weight"])
            for a, b, c in zip(XI.ravel(), ETA.ravel(), np.real(w).ravel()):
                wr.writerow([int(a), int(b), repr(float(c))])


def _check_k(grid: TorusGrid, k: int, band: range | None = None) -> None:
    band = grid.lp_band() if band is None else band
    if k not in band:
        raise BandError(
            f"index {k} outside the admissible range [{band.start}, {band.stop - 1}] for n={grid.n}"
        )


def cone_mask(grid: TorusGrid) -> np.ndarray:
    """Indicator of the closed two-ended cone ``|xi| <= |eta|``."""
    XI, ETA = grid.freq_mesh()
    return (np.abs(XI) <= np.abs(ETA)).astype(np.float64)


def cone_project(f: SampledField) -> SampledField:
    """Zero every mode with ``|xi| > |eta|``."""
    return from_spectrum(f.grid, f.spectrum * cone_mask(f.grid))


def lp_symbol(grid: TorusGrid, k: int, cone: bool = True) -> np.ndarray:
    """``psi(2^-k eta) 1{|xi| <= |eta|}`` on the grid spectrum."""
    _check_k(grid, k)
    _, ETA = grid.freq_mesh()
    sym = LP_PROFILE.scaled(k, ETA)
    return sym * cone_mask(grid) if cone else sym


def lp_project(f: SampledField, k: int) -> SampledField:
    """Vertical Littlewood-Paley piece ``P_k`` composed with the cone projection.

    Raises
    ------
    BandError
        If ``k`` is outside ``[0, log2 n - 1]``.
    """
    return from_spectrum(f.grid, f.spectrum * lp_symbol(f.grid, k))


def lp_multiplier(grid: TorusGrid, k: int) -> FrequencyMultiplier:
    return FrequencyMultiplier(grid, lp_symbol(grid, k), f"lp(k={k})")


def envelope_symbol(grid: TorusGrid, k: int, width: int = 1) -> np.ndarray:
    """``sum_{|j-k| <= width} psi(2^-j eta)``, no cone restriction.

    Equal to 1 on the support of ``lp_symbol(grid, k)``, so the associated
    projection reproduces band-``k`` data exactly.
    """
    _, ETA = grid.freq_mesh()
    return LP_PROFILE.envelope(k, width, ETA)


def envelope_project(f: SampledField, k: int, width: int = 1) -> SampledField:
    """Reproducing band projection around band ``k``."""
    return from_spectrum(f.grid, f.spectrum * envelope_symbol(f.grid, k, width))


@dataclass(frozen=True)
class ScaleProfile:
    """One-sided single-scale profile ``psi_l(tau) = psi(2^-l tau)`` for ``tau > 0``."""

    l: int
    profile: BumpProfile = HL_PROFILE

    def __call__(self, tau):
        return self.profile.scaled(self.l, tau)

    @property
    def support(self) -> tuple[float, float]:
        lo, hi = self.profile.support
        return lo * 2.0**self.l, hi * 2.0**self.l

    def multiplier(self, grid: TorusGrid, slope: float = 0.0) -> FrequencyMultiplier:
        """2-D multiplier ``psi_l(xi + slope * eta)`` for a constant slope."""
        XI, ETA = grid.freq_mesh()
        return FrequencyMultiplier(
            grid, self(XI + slope * ETA), f"single_scale(l={self.l}, slope={slope})"
        )

    def kernel(self, t, quad_points: int = 4096):
        """Inverse Fourier transform ``psi_l^vee(t)`` by quadrature over the support."""
        lo, hi = self.support
        tau = np.linspace(lo, hi, quad_points)
        w = self(tau)
        dt = tau[1] - tau[0]
        t = np.asarray(t, dtype=np.float64)
        ph = np.exp(2j * np.pi * np.multiply.outer(t, tau))
        return (ph @ w) * dt


def single_scale_kernel(l: int, grid: TorusGrid | None = None) -> ScaleProfile:
    """Single-scale profile at index ``l``.

    Raises
    ------
    BandError
        If ``grid`` is given and ``l`` lies outside ``grid.hl_band()``.
    """
    if grid is not None:
        _check_k(grid, l, grid.hl_band())
    return ScaleProfile(int(l))


def square_function_ratio(f: SampledField) -> float:
    """``||(sum_k |P_k f|^2)^(1/2)|| / ||f||`` over the full band (Plancherel form)."""
    grid = f.grid
    total = 0.0
    for k in grid.lp_band():
        total += np.sum(np.abs(f.spectrum * lp_symbol(grid, k)) ** 2)
    return float(np.sqrt(total / np.sum(np.abs(f.spectrum) ** 2)))
