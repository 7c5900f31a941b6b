"""Rectangles, popularity and the Lipschitz-Kakeya maximal function on the torus.

Rectangles are closed, centred at ``(cx, cy)`` with the long axis along
``(1, slope)``; ``length`` and ``width`` are measured along and across that
axis.  Membership of a grid point uses the wrapped offset from the centre,
so rectangles must satisfy ``length, width <= 1/2``.

Popularity is the fraction of the rectangle on which ``u(P(x, y))`` lies in
the uncertainty interval ``EX(R)`` (slope interval of width ``w / l`` around
the rectangle's slope), counted on grid points.
"""

from __future__ import annotations

import csv
import json
import math
import warnings
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from . import _kernels
from .grid import SampledField, TorusGrid
from .lipschitz import DirectionField, HypothesisError, LipschitzFamily, projection_field, slope_field


@dataclass(frozen=True)
class OrientedRectangle:
    cx: float
    cy: float
    length: float
    width: float
    slope: float

    def __post_init__(self):
        if self.width < 0 or self.length <= 0:
            raise ValueError("rectangle needs positive length and nonnegative width")
        if self.width > self.length + 1e-15:
            raise ValueError("width must not exceed length")
        if self.length > 0.5 or self.width > 0.5:
            raise ValueError("rectangles on the unit torus need length, width <= 1/2")

    @property
    def area(self) -> float:
        return self.length * self.width

    @property
    def uncertainty(self) -> tuple[float, float]:
        """``EX(R)``."""
        h = 0.5 * self.width / self.length
        return self.slope - h, self.slope + h

    def axes(self) -> tuple[np.ndarray, np.ndarray]:
        r = math.hypot(1.0, self.slope)
        e1 = np.array([1.0, self.slope]) / r
        e2 = np.array([-self.slope, 1.0]) / r
        return e1, e2

    def local(self, x, y) -> tuple[np.ndarray, np.ndarray]:
        """Along/across coordinates of ``(x, y)`` relative to the centre (torus-wrapped)."""
        dx = np.mod(np.asarray(x) - self.cx + 0.5, 1.0) - 0.5
        dy = np.mod(np.asarray(y) - self.cy + 0.5, 1.0) - 0.5
        e1, e2 = self.axes()
        return dx * e1[0] + dy * e1[1], dx * e2[0] + dy * e2[1]

    def contains(self, x, y, eps: float = 1e-12):
        a, b = self.local(x, y)
        return (np.abs(a) <= 0.5 * self.length + eps) & (np.abs(b) <= 0.5 * self.width + eps)

    def mask(self, grid: TorusGrid) -> np.ndarray:
        X, Y = grid.mesh()
        return self.contains(X, Y)

    def corners(self) -> np.ndarray:
        e1, e2 = self.axes()
        c = np.array([self.cx, self.cy])
        out = []
        for s1 in (-1, 1):
            for s2 in (-1, 1):
                out.append(c + s1 * 0.5 * self.length * e1 + s2 * 0.5 * self.width * e2)
        return np.array(out)

    def dilate(self, C: float) -> "OrientedRectangle":
        """Concentric rectangle scaled by ``C`` (no torus size check)."""
        obj = object.__new__(OrientedRectangle)
        for k, v in (("cx", self.cx), ("cy", self.cy), ("length", C * self.length),
                     ("width", C * self.width), ("slope", self.slope)):
            object.__setattr__(obj, k, v)
        return obj


def popularity(R: OrientedRectangle, fam: LipschitzFamily, dirf: DirectionField, grid: TorusGrid,
               slopes: np.ndarray | None = None) -> float:
    """Fraction of grid points of ``R`` with ``u(P(x, y))`` in ``EX(R)``.

    Raises
    ------
    ValueError
        For a degenerate rectangle or one containing no grid point.
    """
    if R.width <= 0:
        raise ValueError("popularity of a degenerate (zero-width) rectangle is undefined")
    m = R.mask(grid)
    if not m.any():
        raise ValueError("rectangle contains no grid point; refine the grid")
    s = slope_field(grid, fam, dirf) if slopes is None else slopes
    lo, hi = R.uncertainty
    good = (s >= lo) & (s <= hi)
    return float(np.count_nonzero(good & m) / np.count_nonzero(m))


def comparable(R1: OrientedRectangle, R2: OrientedRectangle, C: float) -> bool:
    """``R1 <= R2``: ``R1`` inside ``C R2`` and ``EX(R2)`` inside ``EX(R1)``."""
    if C < 1:
        raise ValueError("the dilation constant must be at least 1")
    big = R2.dilate(C)
    corners = R1.corners()
    inside = bool(np.all(big.contains(corners[:, 0], corners[:, 1], eps=1e-12)))
    a1, b1 = R1.uncertainty
    a2, b2 = R2.uncertainty
    nested = a1 - 1e-15 <= a2 and b2 <= b1 + 1e-15
    return inside and nested


@dataclass
class RectangleFamily:
    rectangles: list
    delta: float
    lam: float
    target: np.ndarray  # boolean field F on the grid
    grid: TorusGrid
    C: float = 4.0

    @classmethod
    def from_csv(cls, path: str | Path, grid: TorusGrid, target: np.ndarray, delta: float, lam: float, C: float = 4.0):
        rects = []
        with open(path) as fh:
            for row in csv.DictReader(fh):
                rects.append(OrientedRectangle(float(row["cx"]), float(row["cy"]), float(row["length"]),
                                               float(row["width"]), float(row["slope"])))
        return cls(rects, delta, lam, np.asarray(target, dtype=bool), grid, C)

    def to_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            wr = csv.writer(fh)
            wr.writerow(["cx", "cy", "length", "width", "slope"])
            for R in self.rectangles:
                wr.writerow([repr(R.cx), repr(R.cy), repr(R.length), repr(R.width), repr(R.slope)])


def verify_family(fam0: RectangleFamily, fam: LipschitzFamily, dirf: DirectionField) -> None:
    """Check uniform width, popularity, density and pairwise incomparability.

    Raises
    ------
    HypothesisError
        Naming the first failing rectangle and hypothesis.
    """
    rects = fam0.rectangles
    if not rects:
        return
    w = rects[0].width
    s = slope_field(fam0.grid, fam, dirf)
    for i, R in enumerate(rects):
        if abs(R.width - w) > 1e-12:
            raise HypothesisError(f"rectangle {i}: width {R.width} differs from {w} (uniform width)")
        if not -1.0 <= R.slope <= 1.0:
            raise HypothesisError(f"rectangle {i}: slope {R.slope} outside [-1, 1]")
        if popularity(R, fam, dirf, fam0.grid, s) < fam0.delta - 1e-12:
            raise HypothesisError(f"rectangle {i}: popularity below delta={fam0.delta}")
        m = R.mask(fam0.grid)
        if np.count_nonzero(fam0.target & m) / np.count_nonzero(m) < fam0.lam - 1e-12:
            raise HypothesisError(f"rectangle {i}: density of F below lambda={fam0.lam}")
    for i, R1 in enumerate(rects):
        for j, R2 in enumerate(rects):
            if i != j and comparable(R1, R2, fam0.C):
                raise HypothesisError(f"rectangle {i}: comparable to rectangle {j} (incomparability)")


@dataclass(frozen=True)
class CountingReport:
    lhs: float
    rhs: float
    ratio: float
    size: int

    def to_json(self) -> str:
        return json.dumps(asdict(self))


def counting_check(fam0: RectangleFamily, fam: LipschitzFamily, dirf: DirectionField, p: float = 2.0) -> CountingReport:
    """``sum |R|`` against ``|F| / (delta lambda^p)`` after verifying the hypotheses."""
    if p <= 1:
        raise ValueError("p must exceed 1")
    verify_family(fam0, fam, dirf)
    areaF = np.count_nonzero(fam0.target) / fam0.grid.n**2
    rhs = areaF / (fam0.delta * fam0.lam**p)
    lhs = float(sum(R.area for R in fam0.rectangles))
    ratio = lhs / rhs if rhs > 0 else (0.0 if lhs == 0 else math.inf)
    return CountingReport(lhs, rhs, ratio if fam0.rectangles else 0.0, len(fam0.rectangles))


def random_family(
    grid: TorusGrid,
    fam: LipschitzFamily,
    dirf: DirectionField,
    target: np.ndarray,
    delta: float,
    lam: float,
    width: float,
    lengths: Sequence[float],
    slopes: Sequence[float],
    seed: int = 0,
    attempts: int = 400,
    C: float = 4.0,
) -> RectangleFamily:
    """Greedy random family satisfying the counting hypotheses by construction."""
    rng = np.random.default_rng(seed)
    s = slope_field(grid, fam, dirf)
    kept: list[OrientedRectangle] = []
    for _ in range(attempts):
        R = OrientedRectangle(
            float(rng.integers(grid.n)) / grid.n,
            float(rng.integers(grid.n)) / grid.n,
            float(rng.choice(lengths)),
            width,
            float(rng.choice(slopes)),
        )
        m = R.mask(grid)
        if popularity(R, fam, dirf, grid, s) < delta:
            continue
        if np.count_nonzero(target & m) / np.count_nonzero(m) < lam:
            continue
        if any(comparable(R, Q, C) or comparable(Q, R, C) for Q in kept):
            continue
        kept.append(R)
    return RectangleFamily(kept, delta, lam, np.asarray(target, dtype=bool), grid, C)


# ---------------------------------------------------------------------------
# maximal function
# ---------------------------------------------------------------------------


def _centered_mask(grid: TorusGrid, length: float, width: float, slope: float) -> np.ndarray:
    return OrientedRectangle(0.0, 0.0, length, width, slope).mask(grid)


def _circular_average(values: np.ndarray, kernel: np.ndarray) -> np.ndarray:
    """``A(c) = mean of values over c + support(kernel)`` (kernel is symmetric)."""
    K = np.fft.fft2(kernel.astype(np.float64))
    out = np.real(np.fft.ifft2(np.fft.fft2(values) * np.conj(K)))
    return out / kernel.sum()


def direction_lattice(l: int) -> np.ndarray:
    """Centres of the dyadic direction intervals of length ``2^-l`` inside ``[-1, 1]``."""
    m = 2 ** (l + 1)
    return -1.0 + (np.arange(m) + 0.5) * 2.0**-l


def maximal_function(
    grid: TorusGrid,
    fam: LipschitzFamily,
    dirf: DirectionField,
    f: SampledField,
    delta: float,
    width: float,
    slopes: Sequence[float],
    lengths: Sequence[float],
) -> tuple[SampledField, dict]:
    """Sup of ``|f|`` averages over popular rectangles containing each grid point.

    The candidate set is every grid-centred rectangle of the given ``width``,
    each ``length`` and each slope in ``slopes`` (within ``[-1, 1]``) whose
    popularity is at least ``delta``.  Returns the field and the candidate
    metadata.
    """
    if width < grid.spacing - 1e-15:
        raise ValueError("rectangle width below the grid spacing")
    s = slope_field(grid, fam, dirf)
    absf = np.abs(f.values)
    best = np.zeros((grid.n, grid.n))
    admissible = 0
    kern = _kernels.ACTIVE
    slopes = [float(a) for a in slopes if -1.0 <= a <= 1.0]
    lengths = [float(L) for L in lengths if L >= width]
    for a in slopes:
        for L in lengths:
            K = _centered_mask(grid, L, width, a)
            avg = _circular_average(absf, K)
            lo, hi = OrientedRectangle(0, 0, L, width, a).uncertainty
            pop = _circular_average(((s >= lo) & (s <= hi)).astype(np.float64), K)
            ok = pop >= delta - 1e-9
            if not ok.any():
                continue
            admissible += int(ok.sum())
            G = np.where(ok, avg, -np.inf)
            di, dj = np.nonzero(K)
            di = np.where(di > grid.n // 2, di - grid.n, di).astype(np.int64)
            dj = np.where(dj > grid.n // 2, dj - grid.n, dj).astype(np.int64)
            best = np.maximum(best, kern.stencil_max(np.ascontiguousarray(G), di, dj))
    meta = {
        "slopes": slopes,
        "lengths": lengths,
        "width": width,
        "delta": delta,
        "positions": "all grid points",
        "admissible_rectangles": admissible,
    }
    if admissible == 0:
        warnings.warn("no admissible rectangle in the candidate set; returning zero", RuntimeWarning)
    best = np.where(np.isfinite(best), best, 0.0)
    return SampledField(grid, best), meta


def empirical_norm(
    grid: TorusGrid,
    fam: LipschitzFamily,
    dirf: DirectionField,
    delta: float,
    width: float,
    slopes: Sequence[float],
    lengths: Sequence[float],
    tests: Sequence[SampledField],
) -> float:
    """``max ||M f|| / ||f||`` over the given test functions."""
    best = 0.0
    for f in tests:
        Mf, _ = maximal_function(grid, fam, dirf, f, delta, width, slopes, lengths)
        best = max(best, Mf.norm() / f.norm())
    return best


# ---------------------------------------------------------------------------
# adapted rectangles
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class AdaptedRectangle:
    mask: np.ndarray = field(repr=False)
    area_ratio: float
    popularity: float
    popularity_original: float


def adapt_rectangle(R: OrientedRectangle, fam: LipschitzFamily, dirf: DirectionField, grid: TorusGrid) -> AdaptedRectangle:
    """Grid points of ``{P in P(R)}`` intersected with the strip of ``R``'s long sides.

    The label interval ``P(R)`` is taken from the grid points of ``R``,
    measured relative to the label of the centre.
    """
    X, Y = grid.mesh()
    Pf = projection_field(grid, fam)
    m = R.mask(grid)
    if R.width == 0 or not m.any():
        empty = np.zeros_like(m)
        return AdaptedRectangle(empty, 0.0, math.nan, math.nan)
    pc = float(fam.project(np.array([R.cx]), np.array([R.cy]))[0])
    rel = np.mod(Pf - pc + 0.5, 1.0) - 0.5
    lo, hi = rel[m].min(), rel[m].max()
    dx = np.mod(X - R.cx + 0.5, 1.0) - 0.5
    dy = np.mod(Y - R.cy + 0.5, 1.0) - 0.5
    half = 0.5 * R.width * math.hypot(1.0, R.slope)
    strip = np.abs(dy - R.slope * dx) <= half + 1e-12
    labels = (rel >= lo - 1e-12) & (rel <= hi + 1e-12)
    mt = strip & labels
    s = slope_field(grid, fam, dirf)
    a, b = R.uncertainty
    good = (s >= a) & (s <= b)
    pop_t = float(np.count_nonzero(good & mt) / np.count_nonzero(mt))
    pop_r = float(np.count_nonzero(good & m) / np.count_nonzero(m))
    return AdaptedRectangle(mt, float(mt.sum() / m.sum()), pop_t, pop_r)
