"""Beta numbers of sampled Lipschitz graphs and their Carleson sums.

For a dyadic interval ``I`` and ``j0 >= 0`` the beta number is the smallest
sup-deviation of the graph from a line over the concentric window of length
``3 max(1, j0) |I|``, divided by ``|I|``.  The optimal (Chebyshev) line is
found exactly from the convex hull of the window samples: the vertical width
of the point set in direction ``a`` is convex and piecewise linear in ``a``,
so its minimum is attained at a hull-edge slope.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable

import numpy as np

from . import _kernels
from .grid import SampledField, interpolate

SAMPLE_FLOOR = 8


class DomainError(ValueError):
    """A beta window leaves the sampled range of a non-periodic graph."""


@dataclass(frozen=True, eq=False)
class SampledGraph:
    """Uniform samples ``A(t0 + i h)``, ``i = 0 .. m-1``.

    Parameters
    ----------
    t0, h : float
        First abscissa and spacing.
    values : ndarray
        Samples.
    periodic : bool
        If true, ``A(t + m h) = A(t) + drift`` extends the samples to the line.
    drift : float
        Increment over one period (a graph with a nonzero mean slope).
    """

    t0: float
    h: float
    values: np.ndarray
    periodic: bool = False
    drift: float = 0.0

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        if v.ndim != 1 or v.size < 2:
            raise ValueError("a sampled graph needs a 1-D array of at least two samples")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @classmethod
    def from_function(cls, func: Callable, a: float, b: float, m: int, periodic: bool = False):
        """Sample ``func`` at ``m`` points of ``[a, b)``; the drift is ``func(b) - func(a)`` when periodic."""
        h = (b - a) / m
        t = a + h * np.arange(m)
        drift = float(func(np.array([b]))[0] - func(np.array([a]))[0]) if periodic else 0.0
        return cls(a, h, func(t), periodic, drift)

    @property
    def size(self) -> int:
        return self.values.size

    @property
    def span(self) -> float:
        return self.size * self.h

    def abscissae(self) -> np.ndarray:
        return self.t0 + self.h * np.arange(self.size)

    def index_window(self, lo: int, hi: int) -> tuple[np.ndarray, np.ndarray]:
        """Samples with indices ``lo..hi`` (inclusive), unwrapped periodically."""
        m = self.size
        if not self.periodic and (lo < 0 or hi > m - 1):
            raise DomainError(
                f"window [{lo}, {hi}] leaves the sampled index range [0, {m - 1}]"
            )
        idx = np.arange(lo, hi + 1)
        wraps = np.floor_divide(idx, m)
        vals = self.values[idx - wraps * m] + wraps * self.drift
        return self.t0 + self.h * idx, vals

    def lipschitz(self) -> float:
        d = np.diff(self.values)
        if self.periodic:
            d = np.append(d, self.values[0] + self.drift - self.values[-1])
        return float(np.max(np.abs(d)) / self.h)

    def scaled(self, lam: float) -> "SampledGraph":
        return SampledGraph(self.t0, self.h, lam * self.values, self.periodic, lam * self.drift)

    def plus_affine(self, slope: float, intercept: float) -> "SampledGraph":
        t = self.abscissae()
        return SampledGraph(
            self.t0, self.h, self.values + slope * t + intercept, self.periodic,
            self.drift + slope * self.span,
        )


@dataclass(frozen=True)
class DyadicInterval:
    """``[start + pos L, start + (pos + 1) L)`` with ``L = span 2^-level``."""

    level: int
    position: int

    def bounds(self, graph: SampledGraph) -> tuple[float, float]:
        L = graph.span * 2.0**-self.level
        a = graph.t0 + self.position * L
        return a, a + L

    def length(self, graph: SampledGraph) -> float:
        return graph.span * 2.0**-self.level

    def parent(self) -> "DyadicInterval | None":
        if self.level == 0:
            return None
        return DyadicInterval(self.level - 1, self.position // 2)

    def children(self) -> tuple["DyadicInterval", "DyadicInterval"]:
        return (
            DyadicInterval(self.level + 1, 2 * self.position),
            DyadicInterval(self.level + 1, 2 * self.position + 1),
        )

    def contains(self, other: "DyadicInterval") -> bool:
        if other.level < self.level:
            return False
        return other.position >> (other.level - self.level) == self.position


def finest_level(graph: SampledGraph, floor: int = SAMPLE_FLOOR) -> int:
    """Deepest level whose intervals hold at least ``floor`` samples."""
    return max(0, int(math.floor(math.log2(graph.size / floor))))


def beta_number(graph: SampledGraph, interval: DyadicInterval, j0: int = 0) -> tuple[float, float, float]:
    """Optimal-line beta number of ``graph`` on ``interval``.

    Returns
    -------
    beta, slope, intercept : float
        ``beta = min_line sup_window |A - line| / |I|`` and the optimal line
        ``A ~ slope t + intercept``.

    Raises
    ------
    DomainError
        If the window leaves a non-periodic sample range.
    """
    a, b = interval.bounds(graph)
    return beta_on_interval(graph, a, b, j0)


def beta_on_interval(graph: SampledGraph, a: float, b: float, j0: int = 0) -> tuple[float, float, float]:
    """:func:`beta_number` for an arbitrary interval ``[a, b]``."""
    if j0 < 0:
        raise ValueError("j0 must be nonnegative")
    L = b - a
    if L <= 0:
        raise ValueError("interval must have positive length")
    centre = (0.5 * (a + b) - graph.t0) / graph.h
    half = 1.5 * max(1, j0) * L / graph.h
    lo = int(math.ceil(centre - half - 1e-9))
    hi = int(math.floor(centre + half + 1e-9))
    ts, vals = graph.index_window(lo, hi)
    # shift abscissae to the window centre for conditioning
    tc = graph.t0 + graph.h * centre
    dev, slope, icpt = _kernels.ACTIVE.minimax_line(ts - tc, vals)
    return float(dev / L), float(slope), float(icpt - slope * tc)


@dataclass
class DyadicIntervalStats:
    """Beta numbers and optimal slopes of one dyadic interval."""

    interval: DyadicInterval
    start: float
    length: float
    betas: dict = field(default_factory=dict)
    slopes: dict = field(default_factory=dict)

    @property
    def parent(self):
        return self.interval.parent()

    @property
    def children(self):
        return self.interval.children()

    @property
    def average_slope(self) -> float:
        return self.slopes[min(self.slopes)]


def beta_table(graph: SampledGraph, j0s: Iterable[int] = (0,), floor: int = SAMPLE_FLOOR) -> dict:
    """Beta numbers for every dyadic interval down to the sampling floor."""
    j0s = list(j0s)
    table = {}
    for level in range(finest_level(graph, floor) + 1):
        for pos in range(2**level):
            I = DyadicInterval(level, pos)
            a, _ = I.bounds(graph)
            st = DyadicIntervalStats(I, a, I.length(graph))
            for j0 in j0s:
                bval, slope, _ = beta_number(graph, I, j0)
                st.betas[j0] = bval
                st.slopes[j0] = slope
            table[I] = st
    return table


def beta_table_to_csv(table: dict, path: str | Path) -> None:
    """Write ``level,position,j0,beta,slope`` rows."""
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["level", "position", "j0", "beta", "slope"])
        for I, st in sorted(table.items(), key=lambda kv: (kv[0].level, kv[0].position)):
            for j0, b in st.betas.items():
                wr.writerow([I.level, I.position, j0, repr(b), repr(st.slopes[j0])])


def carleson_sum(
    graph: SampledGraph,
    J: DyadicInterval,
    j0: int = 0,
    table: dict | None = None,
    floor: int = SAMPLE_FLOOR,
) -> float:
    """``(1/|J|) sum_{I in J} beta_j0(I)^2 |I|`` over dyadic ``I`` down to the floor."""
    if table is None or any(j0 not in st.betas for st in table.values()):
        table = beta_table(graph, (j0,), floor)
    total = 0.0
    for I, st in table.items():
        if J.contains(I):
            total += st.betas[j0] ** 2 * st.length
    return total / J.length(graph)


def carleson_sup(graph: SampledGraph, j0: int = 0, floor: int = SAMPLE_FLOOR, table: dict | None = None) -> float:
    """``sup_J`` of :func:`carleson_sum` over all dyadic ``J`` above the floor.

    Computed bottom-up: the sum for ``J`` is its own term plus its children's sums.
    """
    if table is None or any(j0 not in st.betas for st in table.values()):
        table = beta_table(graph, (j0,), floor)
    top = finest_level(graph, floor)
    acc = {}
    best = 0.0
    for level in range(top, -1, -1):
        for pos in range(2**level):
            I = DyadicInterval(level, pos)
            st = table[I]
            s = st.betas[j0] ** 2 * st.length
            if level < top:
                c0, c1 = I.children()
                s += acc[c0] + acc[c1]
            acc[I] = s
            best = max(best, s / st.length)
    return best


def random_lipschitz_graph(
    seed: int, samples: int = 1024, terms: int = 24, lip: float = 1.0, decay: float = 1.0
) -> SampledGraph:
    """Random periodic Fourier series on ``[0, 1)`` rescaled to Lipschitz constant ``lip``.

    Amplitudes fall off like ``q^-(1 + decay)`` so that rough and smooth
    members both occur; the rescaling uses the exact derivative on a fine grid.
    """
    rng = np.random.default_rng(seed)
    q = np.arange(1, terms + 1)
    amp = rng.standard_normal(terms) * q ** -(1.0 + decay)
    ph = rng.uniform(0, 2 * np.pi, terms)
    fine = np.linspace(0, 1, 16 * samples, endpoint=False)
    deriv = (2 * np.pi * q * amp) @ np.cos(2 * np.pi * np.outer(q, fine) + ph[:, None])
    scale = lip / np.max(np.abs(deriv))
    t = np.arange(samples) / samples
    vals = scale * (amp @ np.sin(2 * np.pi * np.outer(q, t) + ph[:, None]))
    return SampledGraph(0.0, 1.0 / samples, vals, periodic=True)


# ---------------------------------------------------------------------------
# embedding bound along a single curve
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class EmbeddingCheck:
    lhs: float
    rhs: float
    ratio: float
    constant: float


def curve_graph(chart, samples: int) -> SampledGraph:
    """Chart graph ``g_x(y')`` over one vertical period as a periodic sampled graph."""
    yp, xp = chart.sample(samples)
    return SampledGraph(float(yp[0]), chart.period / samples, xp, periodic=True,
                        drift=chart.drift * chart.period)


def curve_values(chart, h: SampledField, samples: int) -> np.ndarray:
    """``h`` at the chart samples of the curve (exact trigonometric interpolation)."""
    yp, xp = chart.sample(samples)
    c, s = math.cos(chart.theta), math.sin(chart.theta)
    x = xp * c - yp * s
    y = xp * s + yp * c
    vals, _ = interpolate(h, np.stack([x, y], axis=-1), method="trig")
    return vals


def embedding_bound_check(
    chart,
    h: SampledField,
    levels: Iterable[int],
    j0: int = 1,
    samples: int = 1024,
    constant: float | None = None,
) -> EmbeddingCheck:
    """Weighted beta embedding along one curve.

    The contributing tiles of one orientation meet the curve in the dyadic
    intervals ``J`` of length ``w(s) = period 2^-k`` (``k`` in ``levels``) of
    the chart axis.  ``lhs = sum_J w(s) beta_j0(J)^2 [h]_J^2`` with
    ``[h]_J`` the mean of ``|h|`` over ``J``; ``rhs = j0^3 ||h||^2`` on the
    curve.  If ``constant`` is given, ``lhs <= constant * rhs`` is asserted.

    Returns
    -------
    EmbeddingCheck
        ``ratio = lhs / rhs`` (0 when ``rhs = 0``).
    """
    graph = curve_graph(chart, samples)
    habs = np.abs(curve_values(chart, h, samples))
    rhs = max(1, j0) ** 3 * float(np.sum(habs**2) * graph.h)
    lhs = 0.0
    for k in levels:
        nI = 2**k
        per = samples // nI
        if per < SAMPLE_FLOOR:
            raise DomainError(f"level {k} leaves fewer than {SAMPLE_FLOOR} samples per interval")
        means = habs.reshape(nI, per).mean(axis=1)
        w = graph.span / nI
        for pos in range(nI):
            b, _, _ = beta_number(graph, DyadicInterval(k, pos), j0)
            lhs += w * b**2 * means[pos] ** 2
    ratio = lhs / rhs if rhs > 0 else 0.0
    if constant is not None and lhs > constant * rhs * (1 + 1e-12):
        raise AssertionError(f"embedding bound violated: {lhs:.4g} > {constant} * {rhs:.4g}")
    return EmbeddingCheck(lhs, rhs, ratio, constant if constant is not None else math.nan)
