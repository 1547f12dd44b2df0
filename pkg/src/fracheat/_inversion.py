"""Radial inverse Fourier transform of ``exp(-|xi|^{2s})``.

For a radial multiplier in R^n the inverse transform reduces to a one
dimensional integral

    F(r) = c_n * int_0^inf rho^(n-1) exp(-rho^(2s)) Phi_n(r rho) drho

with ``Phi_1 = cos``, ``Phi_2 = J0`` and ``Phi_3 = sin(z)/z``.  The derivative
``F'(r)`` uses ``rho^n`` and ``Phi_n'``.

The integral is split at ``rho_split`` (1 by default).  The inner part is
computed with composite Gauss-Legendre panels graded geometrically toward the
``rho^(2s)`` cusp at the origin.  The outer part is integrated panel by panel;
when the oscillation is fast compared with the decay of the amplitude, panels
are half periods of the kernel and the alternating partial sums are
extrapolated with Wynn's epsilon algorithm.
"""

from __future__ import annotations

import functools
import math

import numpy as np
from scipy import special

# Prefactors (2 pi)^{-n} * surface area of S^{n-1}, after the angular integral.
_PREFACTOR = {1: 1.0 / math.pi, 2: 1.0 / (2.0 * math.pi), 3: 1.0 / (2.0 * math.pi**2)}

# log of the amplitude floor; exp(-40) ~ 4e-18
_CUTOFF_EXPONENT = 40.0

_DIRECT_MAX_PERIODS = 400
_ACCEL_PANELS = 48
_GRADING_LEVELS = 44


def _kernel(n: int, order: int, z: np.ndarray) -> np.ndarray:
    if n == 1:
        return np.cos(z) if order == 0 else -np.sin(z)
    if n == 2:
        return special.j0(z) if order == 0 else -special.j1(z)
    if order == 0:
        return special.spherical_jn(0, z)
    return -special.spherical_jn(1, z)


def _amplitude(n: int, s: float, order: int, rho: np.ndarray) -> np.ndarray:
    return rho ** (n - 1 + order) * np.exp(-(rho ** (2.0 * s)))


@functools.lru_cache(maxsize=None)
def _gauss(m: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = np.polynomial.legendre.leggauss(m)
    return 0.5 * (x + 1.0), 0.5 * w


def _panel_nodes(edges: np.ndarray, m: int) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre nodes/weights on consecutive panels given by ``edges``."""
    x, w = _gauss(m)
    a = edges[:-1, None]
    width = np.diff(edges)[:, None]
    return (a + width * x).ravel(), (width * w).ravel()


def _cutoff(n: int, s: float, order: int) -> float:
    """Radius beyond which the amplitude is below exp(-_CUTOFF_EXPONENT)."""
    p = n - 1 + order
    rho = max(1.0, _CUTOFF_EXPONENT ** (1.0 / (2.0 * s)))
    for _ in range(60):
        # fixed point of rho^{2s} = C + p log rho
        nxt = (_CUTOFF_EXPONENT + p * math.log(rho)) ** (1.0 / (2.0 * s))
        if abs(nxt - rho) <= 1e-12 * rho:
            break
        rho = nxt
    return rho


def _smooth_edges(n: int, s: float, order: int, start: float, stop: float) -> np.ndarray:
    """Panel edges on [start, stop] over which the amplitude is smooth."""
    edges = [start]
    rho = start
    while rho < stop:
        step = 0.5 * rho / max(1.0, 2.0 * s * rho ** (2.0 * s), float(n - 1 + order))
        rho = min(stop, rho + step)
        edges.append(rho)
    return np.asarray(edges)


def _inner_edges(rho_split: float, r_hi: float) -> np.ndarray:
    """Geometrically graded edges on [0, rho_split], no panel wider than a period."""
    graded = rho_split * 2.0 ** -np.arange(_GRADING_LEVELS, -1, -1, dtype=float)
    graded = np.concatenate(([0.0], graded))
    if r_hi <= 0:
        return graded
    period = 2.0 * math.pi / r_hi
    out = [graded[0]]
    for a, b in zip(graded[:-1], graded[1:]):
        k = max(1, math.ceil((b - a) / period))
        out.extend(a + (b - a) * np.arange(1, k + 1) / k)
    return np.asarray(out)


def wynn_epsilon(partial_sums: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Extrapolate rows of partial sums with Wynn's epsilon algorithm.

    Each even column of the epsilon table offers its last entry as an
    estimate, with the gap to the entry before it as error.  The estimate
    with the smallest error wins; columns past convergence fill with noise
    and lose on that criterion.
    """
    S = np.atleast_2d(np.asarray(partial_sums, dtype=float))
    rows, k = S.shape
    best = S[:, -1].copy()
    err = np.abs(S[:, -1] - S[:, -2])
    prev = np.zeros((rows, k + 1))
    curr = S.copy()
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        for col in range(1, k - 1):
            nxt = prev[:, 1 : curr.shape[1]] + 1.0 / (curr[:, 1:] - curr[:, :-1])
            if col % 2 == 0:
                gap = np.abs(nxt[:, -1] - nxt[:, -2])
                better = np.isfinite(gap) & (gap < err)
                best = np.where(better, nxt[:, -1], best)
                err = np.where(better, gap, err)
            prev, curr = curr, nxt
            if curr.shape[1] < 3:
                break
    return best, err


def _outer_direct(n, s, order, r, start, stop, smooth, m):
    """Composite rule on [start, stop], panels refined to one kernel period."""
    if r > 0:
        widths = np.diff(smooth)
        splits = np.maximum(1, np.ceil(widths * r / (2.0 * math.pi))).astype(int)
        if np.any(splits > 1):
            pieces = [smooth[:1]]
            for a, w, k in zip(smooth[:-1], widths, splits):
                pieces.append(a + w * np.arange(1, k + 1) / k)
            edges = np.concatenate(pieces)
        else:
            edges = smooth
    else:
        edges = smooth
    x, w = _panel_nodes(edges, m)
    return float(np.sum(w * _amplitude(n, s, order, x) * _kernel(n, order, r * x)))


def _outer_accelerated(n, s, order, r, start, m, min_smooth):
    """Half-period panels from ``start`` for every radius in ``r``, extrapolated."""
    half = np.pi / r
    sub = np.maximum(1, np.ceil(half / min_smooth)).astype(int)
    vals = np.empty_like(r)
    errs = np.empty_like(r)
    x0, w0 = _gauss(m)
    for k in np.unique(sub):
        idx = np.nonzero(sub == k)[0]
        width = (half[idx] / k)[:, None, None]
        a = start + width * np.arange(_ACCEL_PANELS * k)[None, :, None]
        x = a + width * x0[None, None, :]
        f = (width * w0) * _amplitude(n, s, order, x) * _kernel(n, order, r[idx, None, None] * x)
        terms = f.reshape(idx.size, _ACCEL_PANELS, k * m).sum(axis=2)
        vals[idx], errs[idx] = wynn_epsilon(np.cumsum(terms, axis=1))
    return vals, errs


def radial_inversion(
    radii,
    n: int,
    s: float,
    order: int = 0,
    m: int = 16,
    rho_split: float = 1.0,
) -> tuple[np.ndarray, np.ndarray]:
    """Evaluate the profile (``order=0``) or its derivative (``order=1``).

    Returns ``(values, abs_err)`` where ``abs_err`` is an estimate built from
    a lower-order rerun of the same composite rules plus the extrapolation
    error of the epsilon algorithm.
    """
    r = np.atleast_1d(np.asarray(radii, dtype=float))
    if np.any(r < 0):
        raise ValueError("radii must be nonnegative")
    out = np.empty_like(r)
    err = np.zeros_like(r)
    if r.size == 0:
        return out, err
    c = _PREFACTOR[n]
    r_hi = float(r.max())

    cut = max(_cutoff(n, s, order), 2.0 * rho_split)
    smooth = _smooth_edges(n, s, order, rho_split, cut)
    min_smooth = float(np.min(np.diff(smooth)))
    inner = _inner_edges(rho_split, r_hi)

    for mm, target in ((m, out), (max(6, m - 6), None)):
        xi, wi = _panel_nodes(inner, mm)
        ai = wi * _amplitude(n, s, order, xi)
        inner_vals = np.empty_like(r)
        # chunked to keep the kernel matrix small
        for lo in range(0, r.size, 256):
            sl = slice(lo, lo + 256)
            inner_vals[sl] = _kernel(n, order, np.outer(r[sl], xi)) @ ai
        outer_vals = np.empty_like(r)
        accel = r * (cut - rho_split) / (2.0 * math.pi) > _DIRECT_MAX_PERIODS
        for i in np.nonzero(~accel)[0]:
            outer_vals[i] = _outer_direct(n, s, order, r[i], rho_split, cut, smooth, mm)
        if accel.any():
            vals, e = _outer_accelerated(n, s, order, r[accel], rho_split, mm, min_smooth)
            outer_vals[accel] = vals
            if target is not None:
                err[accel] += c * e
        total = c * (inner_vals + outer_vals)
        if target is not None:
            target[:] = total
        else:
            err += np.abs(total - out)
    return out, err
