"""Hot numerical kernels with a numba path and a pure-numpy fallback.

The backend is chosen once at import time from the ``LIPHILBERT_BACKEND``
environment variable (``"numba"`` or ``"numpy"``).  When the variable is
unset, numba is used if it can be imported.  Both implementations are always
importable through :func:`get_kernels`, which is what the benchmark and the
cross-backend tests use.

Kernels
-------
nudft_type2
    Evaluate batches of 1-D trigonometric sums at arbitrary points.
nudft_type1
    Exact adjoint of :func:`nudft_type2`.
directional_sum
    Per-point spectral sum for a directional multiplier whose slope varies
    from point to point (the O(n^4) route used when a slope field has too
    many distinct values for level grouping).
minimax_line
    Chebyshev (minimax) straight-line fit of a planar point set.
stencil_max
    Periodic max-filter over an arbitrary list of integer offsets.
"""

from __future__ import annotations

import os
from types import SimpleNamespace

import numpy as np

_ENV_FLAG = "LIPHILBERT_BACKEND"

try:  # pragma: no cover - exercised implicitly
    import numba

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover
    numba = None
    HAVE_NUMBA = False

# symbol kinds understood by ``directional_sum``
SYMBOL_HILBERT = 0
SYMBOL_PROFILE = 1

TWO_PI = 2.0 * np.pi


# ---------------------------------------------------------------------------
# numpy reference implementations
# ---------------------------------------------------------------------------


def _np_nudft_type2(coeffs, freq0, pts, level):
    """out[b, p] = sum_m coeffs[level[p], b, m] * exp(2 pi i (freq0 + m) pts[b, p])."""
    nlev, nb, nm = coeffs.shape
    freqs = freq0 + np.arange(nm, dtype=np.float64)
    out = np.empty(pts.shape, dtype=np.complex128)
    for b in range(nb):
        phase = np.exp(1j * TWO_PI * np.multiply.outer(pts[b], freqs))
        if nlev == 1:
            out[b] = phase @ coeffs[0, b]
        else:
            out[b] = np.einsum("pm,pm->p", phase, coeffs[level, b, :])
    return out


def _np_nudft_type1(vals, pts, level, nlev, freq0, nm):
    """Adjoint of :func:`_np_nudft_type2`."""
    nb, _ = pts.shape
    freqs = freq0 + np.arange(nm, dtype=np.float64)
    out = np.zeros((nlev, nb, nm), dtype=np.complex128)
    for b in range(nb):
        phase = np.exp(-1j * TWO_PI * np.multiply.outer(pts[b], freqs))
        weighted = phase * vals[b][:, None]
        if nlev == 1:
            out[0, b] = weighted.sum(axis=0)
        else:
            np.add.at(out[:, b, :], level, weighted)
    return out


def _np_smooth_step(s):
    s = np.asarray(s, dtype=np.float64)
    out = np.zeros_like(s)
    inside = (s > 0.0) & (s < 1.0)
    si = s[inside]
    a = np.exp(-1.0 / si)
    b = np.exp(-1.0 / (1.0 - si))
    out[inside] = a / (a + b)
    out[s >= 1.0] = 1.0
    return out


def _np_profile(lam, plateau, cutoff, scale):
    # positive-side dyadic profile chi(t/scale) - chi(2 t/scale), zero for t <= 0
    t = lam / scale
    chi1 = _np_smooth_step((cutoff - t) / (cutoff - plateau))
    chi2 = _np_smooth_step((cutoff - 2.0 * t) / (cutoff - plateau))
    return np.where(lam > 0.0, chi1 - chi2, 0.0)


def _np_directional_sum(spec, xi, eta, xs, ys, slopes, kind, params, adjoint):
    """Direct per-point spectral sum.

    Forward: out[p] = sum_z spec[z] m(xi_z + c_p eta_z) e(z . p).
    Adjoint: out[z] = sum_p spec[p] conj(m(xi_z + c_p eta_z)) e(-z . p).
    """
    npts = xs.size
    if not adjoint:
        out = np.empty(npts, dtype=np.complex128)
        for p in range(npts):
            lam = xi + slopes[p] * eta
            sym = _np_symbol(lam, kind, params)
            ph = np.exp(1j * TWO_PI * (xi * xs[p] + eta * ys[p]))
            out[p] = np.sum(spec * sym * ph)
        return out
    out = np.zeros(xi.size, dtype=np.complex128)
    for p in range(npts):
        lam = xi + slopes[p] * eta
        sym = np.conj(_np_symbol(lam, kind, params))
        ph = np.exp(-1j * TWO_PI * (xi * xs[p] + eta * ys[p]))
        out += spec[p] * sym * ph
    return out


def _np_symbol(lam, kind, params):
    if callable(kind):
        return np.asarray(kind(lam), dtype=np.complex128)
    if kind == SYMBOL_HILBERT:
        return -1j * np.pi * np.sign(lam)
    return _np_profile(lam, params[0], params[1], params[2]).astype(np.complex128)


def _np_minimax_line(xs, ys):
    """Chebyshev line fit by brute force over hull-edge slopes (pure python)."""
    lower, upper = _hull_chains_py(xs, ys)
    return _minimax_from_hull_py(xs, ys, lower, upper)


def _hull_chains_py(xs, ys):
    n = xs.size
    lower = []
    for i in range(n):
        while len(lower) >= 2:
            a, b = lower[-2], lower[-1]
            cross = (xs[b] - xs[a]) * (ys[i] - ys[a]) - (ys[b] - ys[a]) * (xs[i] - xs[a])
            if cross <= 0.0:
                lower.pop()
            else:
                break
        lower.append(i)
    upper = []
    for i in range(n):
        while len(upper) >= 2:
            a, b = upper[-2], upper[-1]
            cross = (xs[b] - xs[a]) * (ys[i] - ys[a]) - (ys[b] - ys[a]) * (xs[i] - xs[a])
            if cross >= 0.0:
                upper.pop()
            else:
                break
        upper.append(i)
    return np.array(lower, dtype=np.int64), np.array(upper, dtype=np.int64)


def _minimax_from_hull_py(xs, ys, lower, upper):
    # candidate slopes are the hull-edge slopes; the vertical width is convex
    # and piecewise linear in the slope so its minimum sits at one of them
    cands = []
    for chain in (lower, upper):
        for t in range(chain.size - 1):
            a, b = chain[t], chain[t + 1]
            dx = xs[b] - xs[a]
            if dx > 0.0:
                cands.append((ys[b] - ys[a]) / dx)
    if not cands:
        cands.append(0.0)
    best = np.inf
    best_slope = 0.0
    best_icpt = 0.0
    for a in cands:
        r = ys - a * xs
        hi = r.max()
        lo = r.min()
        if hi - lo < best:
            best = hi - lo
            best_slope = a
            best_icpt = 0.5 * (hi + lo)
    return 0.5 * best, best_slope, best_icpt


def _np_stencil_max(arr, di, dj):
    out = np.full(arr.shape, -np.inf)
    for a, b in zip(di, dj):
        np.maximum(out, np.roll(arr, (int(a), int(b)), axis=(0, 1)), out=out)
    return out


NUMPY_KERNELS = SimpleNamespace(
    name="numpy",
    nudft_type2=_np_nudft_type2,
    nudft_type1=_np_nudft_type1,
    directional_sum=_np_directional_sum,
    minimax_line=_np_minimax_line,
    stencil_max=_np_stencil_max,
)


# ---------------------------------------------------------------------------
# numba implementations
# ---------------------------------------------------------------------------


def _build_numba_kernels():
    njit = numba.njit(cache=True, fastmath=False)

    @njit
    def nudft_type2(coeffs, freq0, pts, level):
        nlev, nb, nm = coeffs.shape
        npts = pts.shape[1]
        out = np.empty((nb, npts), dtype=np.complex128)
        for b in range(nb):
            for p in range(npts):
                x = pts[b, p]
                w = np.exp(1j * TWO_PI * freq0 * x)
                dw = np.exp(1j * TWO_PI * x)
                lv = level[p]
                acc = 0.0 + 0.0j
                for m in range(nm):
                    acc += coeffs[lv, b, m] * w
                    w *= dw
                out[b, p] = acc
        return out

    @njit
    def nudft_type1(vals, pts, level, nlev, freq0, nm):
        nb, npts = pts.shape
        out = np.zeros((nlev, nb, nm), dtype=np.complex128)
        for b in range(nb):
            for p in range(npts):
                x = pts[b, p]
                w = np.exp(-1j * TWO_PI * freq0 * x)
                dw = np.exp(-1j * TWO_PI * x)
                v = vals[b, p]
                lv = level[p]
                for m in range(nm):
                    out[lv, b, m] += v * w
                    w *= dw
        return out

    @njit
    def smooth_step(s):
        if s <= 0.0:
            return 0.0
        if s >= 1.0:
            return 1.0
        a = np.exp(-1.0 / s)
        b = np.exp(-1.0 / (1.0 - s))
        return a / (a + b)

    @njit
    def symbol(lam, kind, p0, p1, p2):
        if kind == 0:
            if lam > 0.0:
                return -1j * np.pi
            if lam < 0.0:
                return 1j * np.pi
            return 0.0 + 0.0j
        if lam <= 0.0:
            return 0.0 + 0.0j
        t = lam / p2
        c1 = smooth_step((p1 - t) / (p1 - p0))
        c2 = smooth_step((p1 - 2.0 * t) / (p1 - p0))
        return (c1 - c2) + 0.0j

    @njit
    def directional_sum(spec, xi, eta, xs, ys, slopes, kind, params, adjoint):
        nz = xi.size
        npts = xs.size
        p0 = params[0]
        p1 = params[1]
        p2 = params[2]
        if not adjoint:
            out = np.empty(npts, dtype=np.complex128)
            for p in range(npts):
                acc = 0.0 + 0.0j
                c = slopes[p]
                for z in range(nz):
                    s = symbol(xi[z] + c * eta[z], kind, p0, p1, p2)
                    if s != 0.0:
                        ph = TWO_PI * (xi[z] * xs[p] + eta[z] * ys[p])
                        acc += spec[z] * s * (np.cos(ph) + 1j * np.sin(ph))
                out[p] = acc
            return out
        out = np.zeros(nz, dtype=np.complex128)
        for p in range(npts):
            c = slopes[p]
            v = spec[p]
            for z in range(nz):
                s = symbol(xi[z] + c * eta[z], kind, p0, p1, p2)
                if s != 0.0:
                    ph = TWO_PI * (xi[z] * xs[p] + eta[z] * ys[p])
                    out[z] += v * np.conj(s) * (np.cos(ph) - 1j * np.sin(ph))
        return out

    @njit
    def hull_chains(xs, ys):
        n = xs.size
        lower = np.empty(n, dtype=np.int64)
        nl = 0
        for i in range(n):
            while nl >= 2:
                a = lower[nl - 2]
                b = lower[nl - 1]
                cross = (xs[b] - xs[a]) * (ys[i] - ys[a]) - (ys[b] - ys[a]) * (xs[i] - xs[a])
                if cross <= 0.0:
                    nl -= 1
                else:
                    break
            lower[nl] = i
            nl += 1
        upper = np.empty(n, dtype=np.int64)
        nu = 0
        for i in range(n):
            while nu >= 2:
                a = upper[nu - 2]
                b = upper[nu - 1]
                cross = (xs[b] - xs[a]) * (ys[i] - ys[a]) - (ys[b] - ys[a]) * (xs[i] - xs[a])
                if cross >= 0.0:
                    nu -= 1
                else:
                    break
            upper[nu] = i
            nu += 1
        return lower[:nl], upper[:nu]

    @njit
    def minimax_line(xs, ys):
        lower, upper = hull_chains(xs, ys)
        best = np.inf
        best_slope = 0.0
        best_icpt = 0.0
        ncand = 0
        for chain_id in range(2):
            chain = lower if chain_id == 0 else upper
            for t in range(chain.size - 1):
                a = chain[t]
                b = chain[t + 1]
                dx = xs[b] - xs[a]
                if dx <= 0.0:
                    continue
                slope = (ys[b] - ys[a]) / dx
                ncand += 1
                hi = -np.inf
                lo = np.inf
                # the extremes of y - slope x are attained on the hull vertices
                for q in range(upper.size):
                    r = ys[upper[q]] - slope * xs[upper[q]]
                    if r > hi:
                        hi = r
                for q in range(lower.size):
                    r = ys[lower[q]] - slope * xs[lower[q]]
                    if r < lo:
                        lo = r
                if hi - lo < best:
                    best = hi - lo
                    best_slope = slope
                    best_icpt = 0.5 * (hi + lo)
        if ncand == 0:
            hi = ys.max()
            lo = ys.min()
            best = hi - lo
            best_icpt = 0.5 * (hi + lo)
        return 0.5 * best, best_slope, best_icpt

    @njit
    def stencil_max(arr, di, dj):
        n0, n1 = arr.shape
        out = np.full((n0, n1), -np.inf)
        for i in range(n0):
            for j in range(n1):
                best = -np.inf
                for k in range(di.size):
                    v = arr[(i - di[k]) % n0, (j - dj[k]) % n1]
                    if v > best:
                        best = v
                out[i, j] = best
        return out

    return SimpleNamespace(
        name="numba",
        nudft_type2=nudft_type2,
        nudft_type1=nudft_type1,
        directional_sum=directional_sum,
        minimax_line=minimax_line,
        stencil_max=stencil_max,
    )


NUMBA_KERNELS = _build_numba_kernels() if HAVE_NUMBA else None


def get_kernels(name: str | None = None) -> SimpleNamespace:
    """Return the kernel namespace for ``name`` (default: the active backend).

    Raises
    ------
    ValueError
        If ``name`` is unknown or numba is requested but unavailable.
    """
    if name is None:
        return ACTIVE
    if name == "numpy":
        return NUMPY_KERNELS
    if name == "numba":
        if NUMBA_KERNELS is None:
            raise ValueError("numba backend requested but numba is not installed")
        return NUMBA_KERNELS
    raise ValueError(f"unknown kernel backend {name!r}; use 'numba' or 'numpy'")


def _select_from_env() -> SimpleNamespace:
    choice = os.environ.get(_ENV_FLAG, "").strip().lower()
    if choice in ("", "auto"):
        return NUMBA_KERNELS if NUMBA_KERNELS is not None else NUMPY_KERNELS
    return get_kernels(choice)


ACTIVE = _select_from_env()
