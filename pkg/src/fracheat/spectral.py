"""Uniform periodic grids on [-L, L)^n and Fourier multipliers on them."""

from __future__ import annotations

import numpy as np


def axis(half_length: float, points: int) -> np.ndarray:
    return -half_length + (2.0 * half_length / points) * np.arange(points)


def coordinates(half_length: float, points: int, n: int) -> list[np.ndarray]:
    """Coordinate arrays of the grid, ``indexing='ij'``."""
    x = axis(half_length, points)
    return list(np.meshgrid(*([x] * n), indexing="ij"))


def wavenumbers(half_length: float, points: int) -> np.ndarray:
    """Angular wavenumbers pi*k/L in FFT order."""
    return 2.0 * np.pi * np.fft.fftfreq(points, d=2.0 * half_length / points)


def _rfft_wavenumbers(half_length: float, points: int, n: int) -> list[np.ndarray]:
    full = wavenumbers(half_length, points)
    half = full[: points // 2 + 1].copy()
    half[-1] = abs(half[-1])
    axes = [full] * (n - 1) + [half]
    return list(np.meshgrid(*axes, indexing="ij"))


def modulus(half_length: float, points: int, n: int) -> np.ndarray:
    """|xi| on the real-FFT half spectrum."""
    k = _rfft_wavenumbers(half_length, points, n)
    return np.sqrt(sum(kk * kk for kk in k))


def apply_multiplier(values: np.ndarray, multiplier: np.ndarray) -> np.ndarray:
    """Inverse real FFT of ``multiplier * rfftn(values)``."""
    spec = np.fft.rfftn(values)
    return np.fft.irfftn(spec * multiplier, s=values.shape, axes=tuple(range(values.ndim)))


def fractional_laplacian(values: np.ndarray, half_length: float, s: float) -> np.ndarray:
    """(-Delta)^s through the periodic symbol |xi|^{2s}."""
    n = values.ndim
    xi = modulus(half_length, values.shape[0], n)
    return apply_multiplier(values, xi ** (2.0 * s))


def heat_multiplier(half_length: float, points: int, n: int, s: float, t: float) -> np.ndarray:
    xi = modulus(half_length, points, n)
    return np.exp(-t * xi ** (2.0 * s))


def derivative(values: np.ndarray, half_length: float, along: int) -> np.ndarray:
    """Spectral partial derivative along one axis; the Nyquist mode is dropped."""
    n = values.ndim
    N = values.shape[0]
    k = _rfft_wavenumbers(half_length, N, n)[along].copy()
    if along == n - 1:
        k[..., -1] = 0.0
    else:
        idx = [slice(None)] * n
        idx[along] = N // 2
        k[tuple(idx)] = 0.0
    return apply_multiplier(values, 1j * k)
