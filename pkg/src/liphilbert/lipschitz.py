"""Lipschitz curve families, direction fields, projections and curve charts.

A family is described by ``g(x, y) = x + h(x, y)``; for every fixed ``x~`` the
curve ``Gamma_{x~} = {(g(x~, y), y)}`` is a Lipschitz graph over the vertical
axis.  The projection ``P(x, y)`` returns the label ``x~`` of the curve that
passes through ``(x, y)``.  A :class:`DirectionField` assigns the slope
``u(x~)`` of the vector ``(1, u)`` that is constant along ``Gamma_{x~}``.

Torus families use a doubly periodic offset ``h`` built from a finite Fourier
series, which keeps ``P`` well defined on the unit torus.  The non-periodic
shear ``g = x + s y`` is available for chart examples.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .grid import SampledField, TorusGrid

# slope cap under which single-scale pieces of the directional transform
# vanish exactly on higher Littlewood-Paley bands (see frequency module)
SLOPE_CAP = 1.0 / 11.0


class FamilyError(ValueError):
    """Invalid family or direction-field parameters."""


class ProjectionError(RuntimeError):
    """Root finding for the projection did not converge.

    Attributes
    ----------
    x, y : ndarray
        Offending points.
    residual : ndarray
        ``|g(x~, y) - x|`` at the last iterate.
    """

    def __init__(self, x, y, residual):
        self.x = np.asarray(x)
        self.y = np.asarray(y)
        self.residual = np.asarray(residual)
        super().__init__(
            f"projection did not converge at {self.x.size} point(s); "
            f"max residual {float(np.max(self.residual)):.3e} "
            "(is g(., y) strictly increasing?)"
        )


class PreconditionError(ValueError):
    """An operation was called outside its documented domain."""


class HypothesisError(ValueError):
    """Sampled data violate a structural hypothesis of a construction."""


# ---------------------------------------------------------------------------
# families
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class LipschitzFamily:
    """Curve family ``g(x, y) = x + shear * y + h(x, y)``.

    Parameters
    ----------
    name : str
        Builtin name used for serialization.
    offset : callable
        ``h(x, y)``; vectorised.
    d1, d2 : callable
        Partial derivatives of ``h``.
    a0, b0 : float
        Horizontal bi-Lipschitz and vertical Lipschitz bounds.
    periodic : bool
        Whether ``g - x`` is doubly 1-periodic.
    params : dict
        Constructor parameters (JSON-serialisable).
    offset_sup : float
        Bound on ``|h|`` used to bracket the projection (``inf`` if unknown).
    """

    name: str
    offset: Callable
    d1: Callable
    d2: Callable
    a0: float
    b0: float
    periodic: bool = True
    params: dict = field(default_factory=dict)
    shear: float = 0.0
    offset_sup: float = math.inf
    d1_bound: float = math.nan

    def g(self, x, y):
        return x + self.shear * y + self.offset(x, y)

    def dg1(self, x, y):
        return 1.0 + self.d1(x, y)

    def dg2(self, x, y):
        return self.shear + self.d2(x, y)

    def project(self, x, y, tol: float = 1e-12, max_iter: int = 200):
        """Vectorised projection; see :func:`project`."""
        return project(self, x, y, tol=tol, max_iter=max_iter)

    def measured_constants(self, samples: int = 128) -> tuple[float, float]:
        """Sampled ``(a0, b0)`` on a ``samples x samples`` grid of the unit square."""
        c = (np.arange(samples) + 0.5) / samples
        X, Y = np.meshgrid(c, c, indexing="ij")
        d1 = self.dg1(X, Y)
        d2 = self.dg2(X, Y)
        a0 = float(max(np.max(d1), 1.0 / np.min(d1)))
        return a0, float(np.max(np.abs(d2)))

    def check_admissible(self, samples: int = 128, strict_b0: bool = True) -> None:
        """Verify the horizontal and vertical derivative bounds by sampling.

        Raises
        ------
        FamilyError
            If ``d1 g`` leaves ``[1/a0, a0]``, ``|d2 g|`` exceeds ``b0`` or,
            with ``strict_b0``, ``b0`` is outside ``(0, 1/2)``.
        """
        a0, b0 = self.measured_constants(samples)
        if a0 > self.a0 * (1 + 1e-9):
            raise FamilyError(f"measured a0 {a0:.6g} exceeds declared {self.a0:.6g}")
        if b0 > self.b0 * (1 + 1e-9) + 1e-15:
            raise FamilyError(f"measured b0 {b0:.6g} exceeds declared {self.b0:.6g}")
        if strict_b0 and not (0.0 <= self.b0 < 0.5):
            raise FamilyError(f"b0 must lie below 1/2, got {self.b0}")

    def to_config(self) -> dict:
        return {"name": self.name, **self.params}


def _fourier_family(name, p, q, coef, params, shear=0.0) -> LipschitzFamily:
    p = np.asarray(p, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    coef = np.asarray(coef, dtype=np.complex128)

    def phase(x, y):
        x = np.asarray(x, dtype=np.float64)
        y = np.asarray(y, dtype=np.float64)
        return np.exp(
            2j * np.pi * (np.multiply.outer(x, p) + np.multiply.outer(y, q))
        )

    if p.size == 0:
        zero = lambda x, y: np.zeros(np.broadcast(np.asarray(x), np.asarray(y)).shape)
        offset = d1 = d2 = zero
    else:

        def offset(x, y):
            return np.real(phase(x, y) @ coef)

        def d1(x, y):
            return np.real(phase(x, y) @ (2j * np.pi * p * coef))

        def d2(x, y):
            return np.real(phase(x, y) @ (2j * np.pi * q * coef))

    s1 = float(np.sum(2 * np.pi * np.abs(p * coef)))
    s2 = float(np.sum(2 * np.pi * np.abs(q * coef))) + abs(shear)
    if s1 >= 1.0:
        raise FamilyError(
            f"horizontal derivative bound {s1:.3g} >= 1; g(., y) may not be monotone"
        )
    a0 = max(1.0 + s1, 1.0 / (1.0 - s1))
    return LipschitzFamily(
        name=name,
        offset=offset,
        d1=d1,
        d2=d2,
        a0=a0,
        b0=s2,
        periodic=(shear == 0.0),
        params=params,
        shear=shear,
        offset_sup=float(np.sum(np.abs(coef))),
        d1_bound=s1,
    )


def identity_family() -> LipschitzFamily:
    """``g(x, y) = x``: vertical lines."""
    return _fourier_family("identity", [], [], [], {})


def shear_family(slope: float) -> LipschitzFamily:
    """``g(x, y) = x + slope * y`` (tilted straight lines, not periodic)."""
    return _fourier_family("shear", [], [], [], {"slope": float(slope)}, shear=float(slope))


def sinusoidal_family(terms: Sequence[Sequence[float]]) -> LipschitzFamily:
    """``h = sum a sin(2 pi (p x + q y) + phi)`` over ``terms = [(a, p, q, phi), ...]``.

    ``p`` and ``q`` must be integers so that ``h`` is doubly periodic.
    """
    terms = [tuple(float(v) for v in t) for t in terms]
    for a, p, q, _ in terms:
        if p != round(p) or q != round(q):
            raise FamilyError("sinusoidal frequencies must be integers")
    a = np.array([t[0] for t in terms])
    p = np.array([t[1] for t in terms])
    q = np.array([t[2] for t in terms])
    phi = np.array([t[3] for t in terms])
    # a sin(theta + phi) = Re(a exp(i (phi - pi/2)) exp(i theta))
    coef = a * np.exp(1j * (phi - np.pi / 2))
    return _fourier_family("sinusoidal", p, q, coef, {"terms": [list(t) for t in terms]})


def random_sinusoidal_family(
    b0: float = 0.01,
    seed: int = 0,
    n_terms: int = 6,
    q_max: int = 32,
    p_max: int = 2,
    a0_max: float = 1.2,
) -> LipschitzFamily:
    """Random doubly periodic family whose vertical bound equals ``b0`` exactly.

    Vertical frequencies are drawn log-uniformly in ``[1, q_max]`` so that the
    curves bend at several scales.  Amplitudes are rescaled so that the sum of
    ``2 pi |q a|`` equals ``b0``; the horizontal bound then stays below
    ``a0_max`` because ``p_max`` is small.
    """
    rng = np.random.default_rng(seed)
    q = np.unique(np.round(np.exp(rng.uniform(0, np.log(q_max), size=n_terms))))
    q = q[q >= 1]
    m = q.size
    p = rng.integers(-p_max, p_max + 1, size=m).astype(float)
    w = rng.uniform(0.5, 1.5, size=m)
    a = w / (2 * np.pi * q)
    a *= b0 / np.sum(2 * np.pi * q * a)
    phi = rng.uniform(0, 2 * np.pi, size=m)
    fam = sinusoidal_family(list(zip(a, p, q, phi)))
    if fam.a0 > a0_max:
        raise FamilyError(f"random family has a0 {fam.a0:.4g} > {a0_max}")
    params = {"b0": b0, "seed": seed, "n_terms": n_terms, "q_max": q_max, "p_max": p_max}
    return LipschitzFamily(**{**fam.__dict__, "name": "random_sinusoidal", "params": params})


def lacunary_family(b0: float = 0.01, levels: int = 7, seed: int = 0) -> LipschitzFamily:
    """Sinusoidal family with vertical frequencies ``1, 2, 4, ..., 2^(levels-1)``.

    Each octave receives the same share of the vertical Lipschitz budget, so
    the curves keep the same relative bending at every scale.
    """
    rng = np.random.default_rng(seed)
    q = 2.0 ** np.arange(levels)
    a = (b0 / levels) / (2 * np.pi * q)
    p = rng.integers(0, 2, size=levels).astype(float)
    phi = rng.uniform(0, 2 * np.pi, size=levels)
    fam = sinusoidal_family(list(zip(a, p, q, phi)))
    params = {"b0": b0, "levels": levels, "seed": seed}
    return LipschitzFamily(**{**fam.__dict__, "name": "lacunary", "params": params})


def scaled_family(fam: LipschitzFamily, factor: float) -> LipschitzFamily:
    """Multiply the offset ``h`` (and the shear) by ``factor``."""
    if not np.isfinite(fam.d1_bound):
        raise FamilyError(f"cannot rescale family {fam.name!r} without a derivative bound")
    new_s1 = abs(factor) * fam.d1_bound
    if new_s1 >= 1:
        raise FamilyError("rescaled family is no longer monotone in x")
    off, d1, d2 = fam.offset, fam.d1, fam.d2
    return LipschitzFamily(
        name=fam.name,
        offset=lambda x, y: factor * off(x, y),
        d1=lambda x, y: factor * d1(x, y),
        d2=lambda x, y: factor * d2(x, y),
        a0=max(1.0 + new_s1, 1.0 / (1.0 - new_s1)),
        b0=abs(factor) * fam.b0,
        periodic=fam.periodic,
        params={**fam.params, "scale": factor * fam.params.get("scale", 1.0)},
        shear=factor * fam.shear,
        offset_sup=abs(factor) * fam.offset_sup,
        d1_bound=new_s1,
    )


def tabulated_family(h_values: np.ndarray, tol: float = 1e-14) -> LipschitzFamily:
    """Family whose offset ``h`` is the trigonometric interpolant of grid samples."""
    h_values = np.asarray(h_values, dtype=np.float64)
    n = h_values.shape[0]
    if h_values.shape != (n, n):
        raise FamilyError("tabulated offset must be a square array")
    spec = np.fft.fft2(h_values) / (n * n)
    fr = np.fft.fftfreq(n, d=1.0 / n)
    P, Q = np.meshgrid(fr, fr, indexing="ij")
    keep = np.abs(spec) > tol * max(np.abs(spec).max(), 1e-300)
    fam = _fourier_family(
        "tabulated", P[keep], Q[keep], spec[keep], {"values": h_values.tolist()}
    )
    return fam


def family_from_config(cfg: dict) -> LipschitzFamily:
    """Build a family from ``{"name": ..., **params}``."""
    cfg = dict(cfg)
    name = cfg.pop("name")
    builders = {
        "identity": identity_family,
        "shear": lambda slope: shear_family(slope),
        "sinusoidal": lambda terms: sinusoidal_family(terms),
        "random_sinusoidal": random_sinusoidal_family,
        "lacunary": lacunary_family,
        "tabulated": lambda values: tabulated_family(np.array(values)),
    }
    if name not in builders:
        raise FamilyError(f"unknown family {name!r}; choose from {sorted(builders)}")
    scale = cfg.pop("scale", None)
    fam = builders[name](**cfg)
    return scaled_family(fam, scale) if scale is not None else fam


# ---------------------------------------------------------------------------
# direction fields
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class DirectionField:
    """Slope field ``u(x~)``, 1-periodic in the curve label.

    ``levels`` lists the distinct values of a step field (``None`` when the
    field takes a continuum of values).
    """

    name: str
    func: Callable
    sup_norm: float
    params: dict = field(default_factory=dict)
    levels: tuple | None = None

    def __call__(self, xt):
        return self.func(np.asarray(xt, dtype=np.float64))

    def to_config(self) -> dict:
        return {"name": self.name, **self.params}

    def c0(self, b0: float) -> float:
        """Smallest ``c0`` with ``sup |u| <= c0 / b0``."""
        return self.sup_norm * b0


def zero_direction() -> DirectionField:
    return DirectionField(
        "zero", lambda xt: np.zeros(np.shape(xt)), 0.0, {}, levels=(0.0,)
    )


def constant_direction(value: float) -> DirectionField:
    v = float(value)
    return DirectionField(
        "constant", lambda xt: np.full(np.shape(xt), v), abs(v), {"value": v}, levels=(v,)
    )


def step_direction(values: Sequence[float], breaks: Sequence[float] | None = None) -> DirectionField:
    """Piecewise-constant slope on ``[0, 1)``.

    Parameters
    ----------
    values : sequence of float
        Value on each piece.
    breaks : sequence of float, optional
        Increasing interior breakpoints in ``(0, 1)``; equally spaced pieces by
        default.
    """
    vals = np.asarray(values, dtype=np.float64)
    if breaks is None:
        edges = np.arange(1, vals.size) / vals.size
    else:
        edges = np.asarray(breaks, dtype=np.float64)
        if edges.size != vals.size - 1 or np.any(np.diff(edges) <= 0):
            raise FamilyError("breaks must be increasing with len(values) - 1 entries")

    def func(xt):
        idx = np.searchsorted(edges, np.mod(xt, 1.0), side="right")
        return vals[idx]

    params = {"values": vals.tolist()}
    if breaks is not None:
        params["breaks"] = edges.tolist()
    return DirectionField(
        "step",
        func,
        float(np.max(np.abs(vals))),
        params,
        levels=tuple(sorted(set(vals.tolist()))),
    )


def random_step_direction(
    pieces: int = 8, amplitude: float = 0.08, seed: int = 0
) -> DirectionField:
    """Step field with random breakpoints and values uniform in ``[-amplitude, amplitude]``."""
    rng = np.random.default_rng(seed)
    vals = rng.uniform(-amplitude, amplitude, size=pieces)
    breaks = np.sort(rng.uniform(0, 1, size=pieces - 1))
    d = step_direction(vals, breaks)
    return DirectionField(
        "random_step",
        d.func,
        d.sup_norm,
        {"pieces": pieces, "amplitude": amplitude, "seed": seed},
        levels=d.levels,
    )


def sinusoid_direction(amplitude: float, freq: int = 1, phase: float = 0.0) -> DirectionField:
    """``u(x~) = amplitude * sin(2 pi freq x~ + phase)`` (a continuum of slopes)."""
    a, m, ph = float(amplitude), int(freq), float(phase)
    return DirectionField(
        "sinusoid",
        lambda xt: a * np.sin(2 * np.pi * m * xt + ph),
        abs(a),
        {"amplitude": a, "freq": m, "phase": ph},
    )


def direction_from_config(cfg: dict) -> DirectionField:
    cfg = dict(cfg)
    name = cfg.pop("name")
    builders = {
        "zero": zero_direction,
        "constant": constant_direction,
        "step": step_direction,
        "random_step": random_step_direction,
        "sinusoid": sinusoid_direction,
    }
    if name not in builders:
        raise FamilyError(f"unknown direction field {name!r}; choose from {sorted(builders)}")
    return builders[name](**cfg)


# ---------------------------------------------------------------------------
# projection
# ---------------------------------------------------------------------------


def project(fam: LipschitzFamily, x, y, tol: float = 1e-12, max_iter: int = 200):
    """Label ``x~`` of the curve through ``(x, y)``: the root of ``g(x~, y) = x``.

    Safeguarded Newton iteration inside an expanding bracket.  Works on
    arrays of any shape.

    Raises
    ------
    ProjectionError
        If some residual stays above ``max(tol, 1e-10)`` after ``max_iter``
        iterations.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    x, y = np.broadcast_arrays(x, y)
    shape = x.shape
    x = x.astype(np.float64).ravel()
    y = y.astype(np.float64).ravel()
    # initial guess and bracket
    xt = x - fam.shear * y - fam.offset(x, y)
    width = np.abs(fam.offset(x, y)) + 1e-3
    lo = xt - width
    hi = xt + width
    for _ in range(60):
        flo = fam.g(lo, y) - x
        fhi = fam.g(hi, y) - x
        bad_lo = flo > 0
        bad_hi = fhi < 0
        if not (bad_lo.any() or bad_hi.any()):
            break
        lo = np.where(bad_lo, lo - 2 * width, lo)
        hi = np.where(bad_hi, hi + 2 * width, hi)
        width = width * 2
    xt = np.clip(xt, lo, hi)
    res = fam.g(xt, y) - x
    for _ in range(max_iter):
        done = np.abs(res) <= tol
        if done.all():
            break
        lo = np.where(res < 0, xt, lo)
        hi = np.where(res > 0, xt, hi)
        step = res / fam.dg1(xt, y)
        cand = xt - step
        outside = (cand <= lo) | (cand >= hi) | ~np.isfinite(cand)
        cand = np.where(outside, 0.5 * (lo + hi), cand)
        xt = np.where(done, xt, cand)
        res = fam.g(xt, y) - x
    bad = np.abs(res) > max(tol, 1e-10)
    if bad.any():
        raise ProjectionError(x[bad], y[bad], np.abs(res[bad]))
    return xt.reshape(shape)


def projection_field(grid: TorusGrid, fam: LipschitzFamily) -> np.ndarray:
    """``P(x_i, y_j)`` on the grid (unwrapped labels, not reduced mod 1)."""
    X, Y = grid.mesh()
    return project(fam, X, Y).reshape(X.shape)


def slope_field(grid: TorusGrid, fam: LipschitzFamily, dirf: DirectionField) -> np.ndarray:
    """``u(P(x_i, y_j))`` on the grid."""
    return dirf(np.mod(projection_field(grid, fam), 1.0))


# ---------------------------------------------------------------------------
# curve charts
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class CurveChart:
    """Curve ``Gamma_{x~}`` in coordinates rotated so that ``(1, u(x~))`` is horizontal.

    The chart point of the curve point ``(g(x~, t), t)`` is
    ``x' = g cos(theta) + t sin(theta)``, ``y' = t cos(theta) - g sin(theta)``
    with ``tan(theta) = u(x~)``.  Over one vertical period of a periodic family
    ``y'`` advances by ``cos(theta)`` and ``x'`` by ``sin(theta)``, so the graph
    function ``g_{x~}(y')`` is ``tan(theta) * y'`` plus a periodic part.
    """

    family: LipschitzFamily
    anchor: float
    theta: float
    lipschitz: float

    @property
    def period(self) -> float:
        return math.cos(self.theta)

    @property
    def drift(self) -> float:
        return math.tan(self.theta)

    def chart_of_param(self, t):
        """Chart coordinates ``(x', y')`` of the curve point with height ``t``."""
        t = np.asarray(t, dtype=np.float64)
        X = self.family.g(np.full(t.shape, self.anchor), t)
        c, s = math.cos(self.theta), math.sin(self.theta)
        return X * c + t * s, t * c - X * s

    def dyprime(self, t):
        """``dy'/dt = cos(theta) - d2 g sin(theta)``."""
        t = np.asarray(t, dtype=np.float64)
        d2 = self.family.dg2(np.full(t.shape, self.anchor), t)
        return math.cos(self.theta) - d2 * math.sin(self.theta)

    def param_of_yprime(self, yp, tol: float = 1e-13):
        """Invert ``y'(t)`` (strictly increasing) by safeguarded Newton."""
        yp = np.asarray(yp, dtype=np.float64)
        c = math.cos(self.theta)
        flat = yp.ravel()
        t = (flat + self.anchor * math.sin(self.theta)) / c
        span = (abs(self.family.shear) + 2 * self.family.offset_sup + 1.0) / c
        lo = t - span
        hi = t + span
        for _ in range(200):
            res = self.chart_of_param(t)[1] - flat
            if np.all(np.abs(res) <= tol):
                break
            lo = np.where(res < 0, t, lo)
            hi = np.where(res > 0, t, hi)
            cand = t - res / self.dyprime(t)
            out = (cand <= lo) | (cand >= hi)
            t = np.where(out, 0.5 * (lo + hi), cand)
        return t.reshape(yp.shape)

    def graph(self, yp):
        """``g_{x~}(y')``."""
        return self.chart_of_param(self.param_of_yprime(yp))[0]

    def sample(self, m: int, start: float | None = None):
        """``m`` uniform samples of one vertical period: ``(y', x')``."""
        if start is None:
            start = float(self.chart_of_param(np.array([0.0]))[1][0])
        yp = start + np.arange(m) * (self.period / m)
        return yp, self.graph(yp)


def reparametrize_curve(
    fam: LipschitzFamily, dirf: DirectionField, anchor: float, samples: int = 4096
) -> CurveChart:
    """Chart of ``Gamma_{anchor}`` with measured Lipschitz constant.

    Raises
    ------
    PreconditionError
        If ``|u(anchor)| >= 1``.
    """
    u = float(dirf(np.array([anchor]))[0])
    if abs(u) >= 1.0:
        raise PreconditionError(f"|u(x~)| = {abs(u):.4g} >= 1: rotation angle not below pi/4")
    theta = math.atan(u)
    chart = CurveChart(fam, float(anchor), theta, math.nan)
    # dense difference quotients of x'(y') over one period plus wrap
    t = np.linspace(0.0, 1.0, samples + 1)
    xp, yp = chart.chart_of_param(t)
    lip = float(np.max(np.abs(np.diff(xp) / np.diff(yp))))
    return CurveChart(fam, float(anchor), theta, lip)


def chart_lipschitz_bound(b0: float) -> float:
    """Chart Lipschitz bound ``(1 + b0) / (1 - b0)`` for rotation angles up to pi/4."""
    return (1.0 + b0) / (1.0 - b0)


# ---------------------------------------------------------------------------
# coarea
# ---------------------------------------------------------------------------


def curve_lattice_points(grid: TorusGrid, fam: LipschitzFamily):
    """Anchors ``x~_i = i/n`` and heights ``y_j = j/n``: returns ``X[i, j] = g(x~_i, y_j)``."""
    c = grid.coords
    A, Y = np.meshgrid(c, c, indexing="ij")
    return fam.g(A, Y), A, Y


def coarea_integral(
    fam: LipschitzFamily, f: SampledField, weight: str = "arclength"
) -> float:
    """Integrate ``|f|`` curve by curve and then over the curve labels.

    Parameters
    ----------
    fam : LipschitzFamily
        Periodic family.
    f : SampledField
        Evaluated on each curve with the exact trigonometric interpolant.
    weight : {"arclength", "jacobian"}
        ``"arclength"`` integrates ``|f| ds`` on each curve (comparable to the
        area integral).  ``"jacobian"`` uses ``d1 g dy`` and reproduces the
        area integral exactly up to quadrature error.

    Returns
    -------
    float
    """
    from .adapted import restrict_to_curves

    grid = f.grid
    X, A, Y = curve_lattice_points(grid, fam)
    vals = np.abs(restrict_to_curves(f, X))
    if weight == "arclength":
        w = np.sqrt(1.0 + fam.dg2(A, Y) ** 2)
    elif weight == "jacobian":
        w = fam.dg1(A, Y)
    else:
        raise ValueError(f"unknown weight {weight!r}")
    return float(np.mean(vals * w))


# ---------------------------------------------------------------------------
# reduction of a bi-Lipschitz map to curve-family data
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class SectorReduction:
    """One arc of the circle after the reduction.

    ``family`` and ``direction`` are ``None`` when no sampled direction falls in
    the arc.  ``direction`` carries ``u = 0`` on curves whose direction lies
    outside the arc; the sector operator vanishes there.
    """

    index: int
    center: float
    half_width: float
    empty: bool
    family: LipschitzFamily | None
    direction: DirectionField | None
    b0_bound: float
    u_bound: float
    b0_measured: float = math.nan
    u_measured: float = math.nan


def sector_count(d0: float) -> int:
    """Smallest integer ``N`` with ``N > 6 pi / d0``."""
    return int(math.floor(6 * math.pi / d0)) + 1


def _bisect(fun, target, lo, hi, iters=80):
    """Vectorised bisection for a monotone (either direction) ``fun``."""
    lo = np.array(lo, dtype=np.float64)
    hi = np.array(hi, dtype=np.float64)
    increasing = fun(hi) >= fun(lo)
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        below = fun(mid) < target
        go_right = np.where(increasing, below, ~below)
        lo = np.where(go_right, mid, lo)
        hi = np.where(go_right, hi, mid)
    return 0.5 * (lo + hi)


def reduce_corollary(
    g0: Callable,
    v0: Callable,
    d0: float,
    box: float = 1.0,
    samples: int = 33,
    tol: float = 1e-6,
) -> list[SectorReduction]:
    """Split directions into arcs and express each arc as curve-family data.

    Parameters
    ----------
    g0 : callable
        ``g0(x, y) -> (X, Y)``, bi-Lipschitz with ``v0(g0(x, y))`` independent
        of ``y``.
    v0 : callable
        ``v0(X, Y) -> (vx, vy)`` unit vectors.
    d0 : float
        Lower bound for the angle between ``d2 g0`` and ``+-v0``.
    box : float
        Half-width of the sampling box ``[-box, box]^2`` used for checks.
    samples : int
        Samples per axis in the checks.

    Returns
    -------
    list of SectorReduction
        ``N > 6 pi / d0`` arcs of length ``2 pi / N``.

    Raises
    ------
    PreconditionError
        If ``d0 <= 0``.
    HypothesisError
        If ``v0 o g0`` varies in ``y`` or the angle condition fails on the
        samples.
    """
    if not d0 > 0:
        raise PreconditionError(f"angle bound d0 must be positive, got {d0}")
    d0 = float(d0)
    N = sector_count(d0)
    s = np.linspace(-box, box, samples)
    S, T = np.meshgrid(s, s, indexing="ij")
    PX, PY = g0(S, T)
    VX, VY = v0(PX, PY)
    ang = np.arctan2(VY, VX)
    dev = np.abs(np.angle(np.exp(1j * (ang - ang[:, :1]))))
    if dev.max() > tol:
        raise HypothesisError(
            f"v0(g0(x, y)) varies along y by up to {dev.max():.3e} rad"
        )
    # angle between d2 g0 and +-v0
    h = 1e-6
    QX, QY = g0(S, T + h)
    tx, ty = (QX - PX) / h, (QY - PY) / h
    cosang = np.abs(tx * VX + ty * VY) / np.hypot(tx, ty)
    ang_min = float(np.min(np.arccos(np.clip(cosang, 0, 1))))
    if ang_min < d0 - 1e-6:
        raise HypothesisError(
            f"angle between d2 g0 and v0 drops to {ang_min:.4g} < d0 = {d0:.4g}"
        )
    curve_ang = ang[:, 0]
    b0 = 1.0 / math.tan(d0 / 2)
    ubound = math.tan(d0 / 6)
    out = []
    for i in range(N):
        center = 2 * math.pi * i / N
        half = math.pi / N
        rel = np.angle(np.exp(1j * (curve_ang - center)))
        inside = np.abs(rel) <= half
        if not inside.any():
            out.append(SectorReduction(i, center, half, True, None, None, b0, ubound))
            continue
        fam, dirf = _sector_family(g0, v0, center, half, box)
        # measured bounds on the sampled box
        xs = np.linspace(-0.5 * box, 0.5 * box, samples)
        Xs, Ys = np.meshgrid(xs, xs, indexing="ij")
        b0m = float(np.max(np.abs(fam.dg2(Xs, Ys))))
        um = float(np.max(np.abs(dirf(xs))))
        out.append(
            SectorReduction(i, center, half, False, fam, dirf, b0, ubound, b0m, um)
        )
    return out


def _sector_family(g0, v0, center, half, box):
    """Curve family and slope field in coordinates rotated by ``-center``."""
    c, s = math.cos(center), math.sin(center)

    def G(sv, yv):
        X, Y = g0(sv, yv)
        return X * c + Y * s, -X * s + Y * c

    orient = 1.0 if (G(np.array(0.0), np.array(1.0))[1] - G(np.array(0.0), np.array(0.0))[1]) > 0 else -1.0
    span = 8.0 * (box + 1.0)

    def height_param(sv, target):
        # parameter y' on curve sv at which the rotated height equals target
        return _bisect(lambda t: orient * G(sv, t)[1], orient * target, -span * np.ones_like(sv), span * np.ones_like(sv))

    def foot(sv):
        t0 = height_param(sv, np.zeros_like(sv))
        return G(sv, t0)[0]

    def label(xv):
        # invert the monotone map s -> foot(s)
        lo = -span * np.ones_like(xv)
        hi = span * np.ones_like(xv)
        return _bisect(foot, xv, lo, hi)

    def g(x, y):
        x = np.asarray(x, dtype=np.float64)
        y = np.asarray(y, dtype=np.float64)
        x, y = np.broadcast_arrays(x, y)
        shape = x.shape
        xv, yv = x.ravel().copy(), y.ravel().copy()
        sv = label(xv)
        t = height_param(sv, yv)
        return G(sv, t)[0].reshape(shape)

    def d1(x, y, h=1e-5):
        return (g(x + h, y) - g(x - h, y)) / (2 * h) - 1.0

    def d2(x, y, h=1e-5):
        return (g(x, y + h) - g(x, y - h)) / (2 * h)

    def offset(x, y):
        return g(x, y) - np.asarray(x, dtype=np.float64)

    def u_of(xt):
        xt = np.atleast_1d(np.asarray(xt, dtype=np.float64))
        sv = label(xt)
        t0 = height_param(sv, np.zeros_like(sv))
        PX, PY = g0(sv, t0)
        vx, vy = v0(PX, PY)
        rel = np.angle(np.exp(1j * (np.arctan2(vy, vx) - center)))
        # +-v0 give the same line field; fold into (-pi/2, pi/2]
        rel = np.where(rel > np.pi / 2, rel - np.pi, rel)
        rel = np.where(rel <= -np.pi / 2, rel + np.pi, rel)
        inside = np.abs(rel) <= half + 1e-12
        return np.where(inside, np.tan(rel), 0.0)

    fam = LipschitzFamily(
        name="sector",
        offset=offset,
        d1=d1,
        d2=d2,
        a0=math.inf,
        b0=math.nan,
        periodic=False,
        params={"center": center, "half_width": half},
        offset_sup=span,
    )
    dirf = DirectionField("sector", u_of, math.tan(half), {"center": center})
    return fam, dirf
