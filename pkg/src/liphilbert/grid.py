"""Periodic sampling grid, sampled fields, spectra and serialization.

Conventions
-----------
The unit torus ``[0, 1)^2`` is sampled on an ``n x n`` grid with ``n`` a power
of two.  ``values[i, j]`` is the sample at ``(x, y) = (i / n, j / n)``; the
first array axis is ``x`` and the second is ``y``.

The spectrum is the unitary 2-D DFT, ``numpy.fft.fft2(values, norm="ortho")``,
stored in numpy's native frequency order.  Integer frequencies run over
``[-n/2, n/2)`` along both axes, ``xi`` along axis 0 and ``eta`` along axis 1.
With this normalisation a pure mode ``exp(2 pi i (xi x + eta y))`` has a single
spectral coefficient equal to ``n`` and the field is recovered by

    f(x, y) = (1/n) sum_{xi, eta} F[xi, eta] exp(2 pi i (xi x + eta y)),

which is also the trigonometric interpolant used off the grid.  The torus
``L^2`` norm is ``sqrt(mean(|values|^2))``.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np


class GridError(ValueError):
    """Raised for invalid grid sizes, mismatched grids or malformed input."""


@dataclass(frozen=True)
class TorusGrid:
    """Uniform ``n x n`` sampling of the unit torus.

    Parameters
    ----------
    n : int
        Points per side; a power of two with ``n >= 16``.
    """

    n: int

    def __post_init__(self):
        n = self.n
        if not isinstance(n, (int, np.integer)) or n < 16 or (n & (n - 1)) != 0:
            raise GridError(f"grid size must be a power of two >= 16, got {n!r}")
        object.__setattr__(self, "n", int(n))

    @property
    def log2n(self) -> int:
        return int(round(math.log2(self.n)))

    @property
    def spacing(self) -> float:
        return 1.0 / self.n

    @property
    def coords(self) -> np.ndarray:
        """1-D sample coordinates ``i / n``."""
        return np.arange(self.n) / self.n

    def mesh(self) -> tuple[np.ndarray, np.ndarray]:
        """Coordinate arrays ``(X, Y)`` with ``X[i, j] = i/n`` and ``Y[i, j] = j/n``."""
        c = self.coords
        return np.meshgrid(c, c, indexing="ij")

    @property
    def freqs(self) -> np.ndarray:
        """Integer frequencies in numpy FFT order."""
        return np.fft.fftfreq(self.n, d=1.0 / self.n)

    def freq_mesh(self) -> tuple[np.ndarray, np.ndarray]:
        """Frequency arrays ``(XI, ETA)`` aligned with the stored spectrum."""
        f = self.freqs
        return np.meshgrid(f, f, indexing="ij")

    def lp_band(self) -> range:
        """Littlewood-Paley indices ``k`` whose scale ``2^k`` lies in ``[1, n/2]``."""
        return range(0, self.log2n)

    def design_band(self) -> range:
        """Indices ``k`` in ``[2, log2 n - 2]`` used by the experiments."""
        return range(2, self.log2n - 1)

    def hl_band(self) -> range:
        """Single-scale indices ``l`` needed to resolve every nonzero grid frequency."""
        return range(-self.log2n - 1, self.log2n + 2)


def _freeze(values: np.ndarray) -> np.ndarray:
    arr = np.array(values, dtype=np.complex128, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class SampledField:
    """Complex samples of a function on a :class:`TorusGrid`.

    The sample array is copied and made read-only; operators return new
    fields.  The spectrum is computed lazily and cached.
    """

    grid: TorusGrid
    values: np.ndarray
    _spectrum: np.ndarray | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        vals = np.asarray(self.values)
        if vals.shape != (self.grid.n, self.grid.n):
            raise GridError(
                f"sample array shape {vals.shape} does not match grid n={self.grid.n}"
            )
        if not np.all(np.isfinite(vals)):
            raise GridError("sample array contains non-finite values")
        object.__setattr__(self, "values", _freeze(vals))

    # construction -------------------------------------------------------
    @classmethod
    def from_function(cls, grid: TorusGrid, func: Callable) -> "SampledField":
        """Sample ``func(x, y)`` (vectorised) on the grid."""
        X, Y = grid.mesh()
        return cls(grid, np.broadcast_to(func(X, Y), X.shape))

    @classmethod
    def zeros(cls, grid: TorusGrid) -> "SampledField":
        return cls(grid, np.zeros((grid.n, grid.n)))

    # spectral view ------------------------------------------------------
    @property
    def spectrum(self) -> np.ndarray:
        if self._spectrum is None:
            spec = np.fft.fft2(self.values, norm="ortho")
            spec.setflags(write=False)
            object.__setattr__(self, "_spectrum", spec)
        return self._spectrum

    # arithmetic ---------------------------------------------------------
    def _check(self, other: "SampledField"):
        if other.grid != self.grid:
            raise GridError("fields live on different grids")

    def __add__(self, other):
        self._check(other)
        return SampledField(self.grid, self.values + other.values)

    def __sub__(self, other):
        self._check(other)
        return SampledField(self.grid, self.values - other.values)

    def __mul__(self, scalar):
        return SampledField(self.grid, self.values * scalar)

    __rmul__ = __mul__

    def norm(self) -> float:
        """Torus ``L^2`` norm."""
        return float(np.sqrt(np.mean(np.abs(self.values) ** 2)))

    def sup(self) -> float:
        return float(np.max(np.abs(self.values)))

    def inner(self, other: "SampledField") -> complex:
        """Torus inner product ``<self, other> = mean(self * conj(other))``."""
        self._check(other)
        return complex(np.mean(self.values * np.conj(other.values)))

    def is_real(self, tol: float = 1e-12) -> bool:
        scale = max(1.0, self.sup())
        return float(np.max(np.abs(self.values.imag))) <= tol * scale


def to_spectrum(f: SampledField) -> np.ndarray:
    """Unitary DFT of ``f`` (numpy frequency order)."""
    return np.array(f.spectrum)


def from_spectrum(grid: TorusGrid, spectrum: np.ndarray) -> SampledField:
    """Inverse of :func:`to_spectrum`."""
    spectrum = np.asarray(spectrum)
    if spectrum.shape != (grid.n, grid.n):
        raise GridError(
            f"spectrum shape {spectrum.shape} does not match grid n={grid.n}"
        )
    return SampledField(grid, np.fft.ifft2(spectrum, norm="ortho"))


def interpolate(
    f: SampledField, points: np.ndarray, method: str = "trig"
) -> tuple[np.ndarray, dict]:
    """Evaluate ``f`` at arbitrary points of the torus.

    Parameters
    ----------
    f : SampledField
    points : ndarray, shape (m, 2)
        Points ``(x, y)``; any real coordinates are reduced modulo 1.
    method : {"trig", "bilinear"}
        ``"trig"`` evaluates the band-limited interpolant exactly.  The
        bilinear fast path is second-order accurate only and is reported as
        such in the returned metadata.

    Returns
    -------
    values : ndarray, shape (m,)
    meta : dict
        ``{"method": ..., "exact_on_band": bool}``.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
    if pts.shape[-1] != 2:
        raise GridError("points must have shape (m, 2)")
    n = f.grid.n
    if method == "trig":
        px = pts[:, 0]
        py = pts[:, 1]
        fr = f.grid.freqs
        ex = np.exp(2j * np.pi * np.multiply.outer(px, fr))
        ey = np.exp(2j * np.pi * np.multiply.outer(py, fr))
        vals = np.einsum("pa,ab,pb->p", ex, f.spectrum, ey) / n
        return vals, {"method": "trig", "exact_on_band": True}
    if method == "bilinear":
        u = np.mod(pts[:, 0], 1.0) * n
        v = np.mod(pts[:, 1], 1.0) * n
        i0 = np.floor(u).astype(int)
        j0 = np.floor(v).astype(int)
        a = u - i0
        b = v - j0
        i0 %= n
        j0 %= n
        i1 = (i0 + 1) % n
        j1 = (j0 + 1) % n
        V = f.values
        vals = (
            (1 - a) * (1 - b) * V[i0, j0]
            + a * (1 - b) * V[i1, j0]
            + (1 - a) * b * V[i0, j1]
            + a * b * V[i1, j1]
        )
        return vals, {"method": "bilinear", "exact_on_band": False}
    raise GridError(f"unknown interpolation method {method!r}")


# ---------------------------------------------------------------------------
# serialization (formats documented in docs/formats.md)
# ---------------------------------------------------------------------------


def save_binary(f: SampledField, path: str | Path) -> None:
    """Write flat row-major little-endian complex64 pairs, no header."""
    np.asarray(f.values, dtype="<c8").tofile(str(path))


def load_binary(path: str | Path, grid: TorusGrid) -> SampledField:
    raw = np.fromfile(str(path), dtype="<c8")
    if raw.size != grid.n * grid.n:
        raise GridError(
            f"binary file holds {raw.size} samples, expected {grid.n * grid.n}"
        )
    return SampledField(grid, raw.reshape(grid.n, grid.n).astype(np.complex128))


def save_csv(f: SampledField, path: str | Path) -> None:
    """Write ``i,j,re,im`` rows (with a header line)."""
    n = f.grid.n
    ii, jj = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["i", "j", "re", "im"])
        for i, j, z in zip(ii.ravel(), jj.ravel(), f.values.ravel()):
            w.writerow([int(i), int(j), repr(float(z.real)), repr(float(z.imag))])


def load_csv(path: str | Path, grid: TorusGrid) -> SampledField:
    vals = np.zeros((grid.n, grid.n), dtype=np.complex128)
    seen = np.zeros((grid.n, grid.n), dtype=bool)
    with open(path, newline="") as fh:
        r = csv.DictReader(fh)
        for row in r:
            i, j = int(row["i"]), int(row["j"])
            if not (0 <= i < grid.n and 0 <= j < grid.n):
                raise GridError(f"index ({i}, {j}) outside grid n={grid.n}")
            vals[i, j] = float(row["re"]) + 1j * float(row["im"])
            seen[i, j] = True
    if not seen.all():
        raise GridError("CSV does not cover every grid point")
    return SampledField(grid, vals)
