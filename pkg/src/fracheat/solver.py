"""Evolution of integrable data under u_t + (-Delta)^s u = 0.

Two independent methods are provided:

* :func:`evolve_spectral` multiplies discrete Fourier coefficients on the
  periodic box [-L, L)^n by ``exp(-t |xi|^{2s})``.  The fat kernel tail wraps
  around the box; :func:`aliasing_estimate` bounds the resulting error.
* :func:`evolve_convolution` sums the free-space kernel against the datum,
  which has no periodic images.

Point masses are never put on the grid as spikes.  They enter either
analytically (convolution) or as kernel samples at a positive warm-up time
(spectral).

Binary layout of a saved :class:`GridFunction` ``name``:

* ``name`` holds N^n little-endian float64 values in C (row-major) order,
  the first index running along x_1;
* ``name.hdr`` is a text header of ``key = value`` lines with keys
  ``n, s, L, N, t``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import signal

from . import spectral
from .kernel import FracParams, KernelProfile, _atomic_write, kernel_at, sphere_area

DEFAULT_POINTS = {1: 4096, 2: 512, 3: 128}

# kernel evaluations above which evolve_convolution warns about cost
COST_WARNING = 5e8


@dataclass(frozen=True, eq=False)
class GridFunction:
    """Snapshot of a function on the uniform grid of [-L, L)^n, spacing 2L/N."""

    params: FracParams
    half_length: float
    points: int
    values: np.ndarray
    t: float = 0.0
    mass: float = field(init=False)

    def __post_init__(self):
        N = self.points
        if isinstance(N, bool) or int(N) != N or N < 8 or N % 2:
            raise ValueError(f"points per axis must be an even integer >= 8, got {N!r}")
        if not self.half_length > 0:
            raise ValueError("half_length must be positive")
        vals = np.array(self.values, dtype=float)
        shape = (int(N),) * self.params.n
        if vals.shape != shape:
            raise ValueError(f"values must have shape {shape}, got {vals.shape}")
        if not np.all(np.isfinite(vals)):
            raise ValueError("grid values must be finite")
        vals.setflags(write=False)
        object.__setattr__(self, "points", int(N))
        object.__setattr__(self, "half_length", float(self.half_length))
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "mass", float(self.cell * vals.sum()))

    @property
    def n(self) -> int:
        return self.params.n

    @property
    def spacing(self) -> float:
        return 2.0 * self.half_length / self.points

    @property
    def cell(self) -> float:
        return self.spacing**self.n

    def axis(self) -> np.ndarray:
        return spectral.axis(self.half_length, self.points)

    def coordinates(self) -> list[np.ndarray]:
        return spectral.coordinates(self.half_length, self.points, self.n)

    def radius(self) -> np.ndarray:
        return np.sqrt(sum(c * c for c in self.coordinates()))

    def with_values(self, values, t: float | None = None) -> "GridFunction":
        return GridFunction(self.params, self.half_length, self.points, values,
                            self.t if t is None else t)

    def same_grid(self, other: "GridFunction") -> bool:
        return (self.params.n == other.params.n and self.points == other.points
                and self.half_length == other.half_length)


def sample(params: FracParams, half_length: float, points: int, func, t: float = 0.0) -> GridFunction:
    """Grid function with values ``func(*coords)``."""
    coords = spectral.coordinates(half_length, points, params.n)
    vals = np.broadcast_to(np.asarray(func(*coords), dtype=float), coords[0].shape)
    return GridFunction(params, half_length, points, vals, t)


@dataclass(frozen=True)
class PointMass:
    location: tuple
    mass: float

    def __post_init__(self):
        loc = tuple(float(v) for v in np.atleast_1d(self.location))
        object.__setattr__(self, "location", loc)
        object.__setattr__(self, "mass", float(self.mass))


@dataclass(frozen=True, eq=False)
class InitialDatum:
    """Grid part plus a finite list of (possibly signed) point masses."""

    grid_part: GridFunction | None = None
    point_masses: tuple = ()

    def __post_init__(self):
        pms = tuple(pm if isinstance(pm, PointMass) else PointMass(*pm) for pm in self.point_masses)
        object.__setattr__(self, "point_masses", pms)
        if self.grid_part is None and not pms:
            raise ValueError("datum needs a grid part or at least one point mass")
        dims = {len(pm.location) for pm in pms}
        if self.grid_part is not None:
            dims.add(self.grid_part.n)
        if len(dims) != 1:
            raise ValueError("point masses and grid part disagree on dimension")
        if self.grid_part is not None:
            L = self.grid_part.half_length
            for pm in pms:
                if any(not (-L < c < L) for c in pm.location):
                    raise ValueError(f"point mass at {pm.location} is not strictly inside the box")

    @property
    def n(self) -> int:
        if self.grid_part is not None:
            return self.grid_part.n
        return len(self.point_masses[0].location)

    @property
    def mass(self) -> float:
        total = sum(pm.mass for pm in self.point_masses)
        if self.grid_part is not None:
            total += self.grid_part.mass
        return float(total)

    def l1_norm(self) -> float:
        total = sum(abs(pm.mass) for pm in self.point_masses)
        if self.grid_part is not None:
            total += lp_norm(self.grid_part, 1)
        return float(total)


# catalog of initial data

def point_masses(locations, masses) -> InitialDatum:
    return InitialDatum(None, tuple(PointMass(x, m) for x, m in zip(locations, masses)))


def dipole(params: FracParams, a: float, mass: float = 1.0) -> InitialDatum:
    """+mass at a e_1 and -mass at -a e_1."""
    e = np.zeros(params.n)
    e[0] = a
    return point_masses([tuple(e), tuple(-e)], [mass, -mass])


def indicator(params: FracParams, half_length: float, points: int, lo: float, hi: float) -> GridFunction:
    """Indicator of the cube [lo, hi]^n; nodes on a face get 1/2 per axis."""

    def one(x):
        h = 2.0 * half_length / points
        inside = ((x > lo) & (x < hi)).astype(float)
        edge = (np.abs(x - lo) < 1e-9 * h) | (np.abs(x - hi) < 1e-9 * h)
        return inside + 0.5 * edge

    return sample(params, half_length, points, lambda *c: np.prod([one(x) for x in c], axis=0))


def bump(params: FracParams, half_length: float, points: int, radius: float = 1.0,
         center=None) -> GridFunction:
    """Smooth compactly supported bump exp(-1/(1-|x-c|^2/R^2)), unit mass."""
    c = np.zeros(params.n) if center is None else np.asarray(center, dtype=float)

    def f(*coords):
        q = sum((x - ci) ** 2 for x, ci in zip(coords, c)) / radius**2
        out = np.zeros_like(q)
        inside = q < 1.0
        out[inside] = np.exp(-1.0 / (1.0 - q[inside]))
        return out

    g = sample(params, half_length, points, f)
    return g.with_values(g.values / g.mass)


def kernel_samples(profile: KernelProfile, half_length: float, points: int, t: float,
                   center=None, mass: float = 1.0) -> GridFunction:
    """mass * P(x - center, t) on the grid."""
    n = profile.n
    c = np.zeros(n) if center is None else np.asarray(center, dtype=float)
    coords = spectral.coordinates(half_length, points, n)
    x = np.stack([xi - ci for xi, ci in zip(coords, c)], axis=-1)
    vals = mass * kernel_at(profile, x, t)
    return GridFunction(profile.params, half_length, points, vals, 0.0)


# evolution

def _check_time(t):
    if not t > 0:
        raise ValueError(f"time must be positive, got {t}")


def _spectral_step(values: np.ndarray, half_length: float, s: float, t: float, pad: int):
    if t == 0:
        return values.copy()
    n = values.ndim
    N = values.shape[0]
    if pad == 1:
        mult = spectral.heat_multiplier(half_length, N, n, s, t)
        return spectral.apply_multiplier(values, mult)
    big = pad * N
    off = (big - N) // 2
    window = tuple(slice(off, off + N) for _ in range(n))
    work = np.zeros((big,) * n)
    work[window] = values
    mult = spectral.heat_multiplier(pad * half_length, big, n, s, t)
    return spectral.apply_multiplier(work, mult)[window]


def evolve_spectral(datum, t: float, profile: KernelProfile | None = None,
                    warmup: float | None = None, pad: int = 1, grid=None) -> GridFunction:
    """Fourier-multiplier solution at time ``t`` on the datum's periodic box.

    Parameters
    ----------
    datum : InitialDatum or GridFunction
    t : float
        Time of the output, measured from the datum.
    profile, warmup :
        Required when the datum has point masses.  A point mass m at x0 is
        replaced by the samples m P(x - x0, warmup), which are then evolved
        for ``t - warmup``; this needs ``0 < warmup <= t``.
    pad : int
        Zero-pad the box by this factor before transforming.  ``pad=1`` is the
        plain periodic solver and conserves the grid mass exactly; larger
        values push the periodic images further away.
    grid : (L, N), optional
        Box for data that consist only of point masses.
    """
    _check_time(t)
    if isinstance(datum, GridFunction):
        datum = InitialDatum(datum)
    if pad < 1 or int(pad) != pad:
        raise ValueError("pad must be a positive integer")
    gp = datum.grid_part
    if gp is not None:
        params, L, N = gp.params, gp.half_length, gp.points
    elif grid is not None:
        if profile is None:
            raise ValueError("a profile is required to place point masses")
        params, (L, N) = profile.params, grid
    else:
        raise ValueError("a point-mass-only datum needs grid=(L, N)")
    out = np.zeros((N,) * params.n)
    if gp is not None:
        out += _spectral_step(gp.values, L, params.s, t, pad)
    if datum.point_masses:
        if profile is None or warmup is None:
            raise ValueError(
                "point masses cannot be put on a grid as spikes; pass profile= and a warm-up "
                "time 0 < warmup <= t so they start as kernel samples"
            )
        if not 0 < warmup <= t:
            raise ValueError(f"warm-up time must satisfy 0 < warmup <= t, got warmup={warmup}, t={t}")
        start = np.zeros_like(out)
        for pm in datum.point_masses:
            start += kernel_samples(profile, L, N, warmup, pm.location, pm.mass).values
        out += _spectral_step(start, L, params.s, t - warmup, pad)
    return GridFunction(params, L, N, out, t)


def _offset_kernel(profile: KernelProfile, h: float, N: int, n: int, t: float) -> np.ndarray:
    """P(m h, t) for integer offsets m in [-(N-1), N-1]^n."""
    k = h * np.arange(-(N - 1), N)
    grids = np.meshgrid(*([k] * n), indexing="ij")
    return kernel_at(profile, np.stack(grids, axis=-1), t) if n > 1 else kernel_at(profile, k, t)


def evolve_convolution(datum, profile: KernelProfile, t: float, grid=None,
                       cost_warning: float = COST_WARNING) -> GridFunction:
    """Free-space solution sum_j h^n u0(y_j) P(x - y_j, t) + sum_k m_k P(x - x_k, t).

    ``grid=(L, N)`` selects the output box; it defaults to the datum's own
    box, in which case the trapezoidal sum is an FFT linear convolution.
    Otherwise the sum runs directly over the nonzero source nodes.
    """
    _check_time(t)
    if isinstance(datum, GridFunction):
        datum = InitialDatum(datum)
    gp = datum.grid_part
    params = profile.params
    if datum.n != params.n:
        raise ValueError("datum and profile disagree on dimension")
    if gp is not None and gp.params.s != params.s:
        raise ValueError("datum and profile disagree on the order s")
    if grid is None:
        if gp is None:
            raise ValueError("a point-mass-only datum needs grid=(L, N)")
        L, N = gp.half_length, gp.points
    else:
        L, N = float(grid[0]), int(grid[1])
    target = GridFunction(params, L, N, np.zeros((N,) * params.n))
    coords = target.coordinates()
    out = np.zeros((N,) * params.n)
    n = params.n
    if gp is not None:
        if gp.same_grid(target):
            cost = (2 * N) ** n * math.log2(2 * N) * n
            _maybe_warn(cost, cost_warning)
            kern = _offset_kernel(profile, gp.spacing, N, n, t)
            out += signal.fftconvolve(gp.values * gp.cell, kern, mode="valid")
        else:
            src = np.nonzero(gp.values)
            weights = gp.values[src] * gp.cell
            src_coords = [c[src] for c in gp.coordinates()]
            _maybe_warn(float(N**n) * weights.size, cost_warning)
            flat_targets = np.stack([c.ravel() for c in coords], axis=-1)
            acc = np.zeros(flat_targets.shape[0])
            chunk = max(1, int(2e6 // max(1, flat_targets.shape[0])))
            for lo in range(0, weights.size, chunk):
                ys = np.stack([c[lo:lo + chunk] for c in src_coords], axis=-1)
                diff = flat_targets[:, None, :] - ys[None, :, :]
                acc += kernel_at(profile, diff if n > 1 else diff[..., 0], t) @ weights[lo:lo + chunk]
            out += acc.reshape(out.shape)
    for pm in datum.point_masses:
        x = np.stack([c - xc for c, xc in zip(coords, pm.location)], axis=-1)
        out += pm.mass * (kernel_at(profile, x, t) if n > 1 else kernel_at(profile, x[..., 0], t))
    return GridFunction(params, L, N, out, t)


def _maybe_warn(cost, threshold):
    if cost > threshold:
        warnings.warn(f"evolve_convolution will perform about {cost:.3g} kernel operations",
                      RuntimeWarning, stacklevel=3)


# norms and moments

@dataclass(frozen=True)
class MomentSummary:
    mass: float
    first_moment: tuple
    abs_first_moment: float

    @property
    def finite(self) -> bool:
        return math.isfinite(self.abs_first_moment)


def _abs_moment_ball(u: GridFunction, radius: float) -> float:
    r = u.radius()
    return float(u.cell * np.sum(np.where(r <= radius, r * np.abs(u.values), 0.0)))


def moments(datum) -> MomentSummary:
    """Mass, first moments and absolute first moment.

    The absolute moment is reported as ``inf`` when the grid part fails a
    Cauchy test: the contribution of the shell between L/2 and L exceeds 10%
    of the moment inside L/2.
    """
    if isinstance(datum, GridFunction):
        datum = InitialDatum(datum)
    n = datum.n
    mass = 0.0
    first = np.zeros(n)
    absm = 0.0
    gp = datum.grid_part
    if gp is not None:
        mass += gp.mass
        for i, c in enumerate(gp.coordinates()):
            first[i] += gp.cell * float(np.sum(c * gp.values))
        inner = _abs_moment_ball(gp, 0.5 * gp.half_length)
        full = _abs_moment_ball(gp, gp.half_length)
        absm += full if full - inner <= 0.1 * inner else math.inf
    for pm in datum.point_masses:
        mass += pm.mass
        first += pm.mass * np.asarray(pm.location)
        absm += abs(pm.mass) * math.sqrt(sum(c * c for c in pm.location))
    return MomentSummary(float(mass), tuple(float(v) for v in first), float(absm))


def lp_norm(u: GridFunction, p: float) -> float:
    """(h^n sum |u|^p)^{1/p}; p = inf gives max |u|."""
    if not p >= 1:
        raise ValueError(f"p must be at least 1, got {p}")
    a = np.abs(u.values)
    if math.isinf(p):
        return float(a.max())
    if p == 1:
        return float(u.cell * a.sum())
    amax = a.max()
    if amax == 0:
        return 0.0
    return float(amax * (u.cell * np.sum((a / amax) ** p)) ** (1.0 / p))


def aliasing_estimate(params: FracParams, c_tail: float, half_length: float, t: float) -> float:
    """Mass carried by the kernel tail beyond |x| = L, c_tail |S^{n-1}| L^{-2s} t / (2s)."""
    s = params.s
    return c_tail * sphere_area(params.n) / (2.0 * s) * half_length ** (-2.0 * s) * t


def max_admissible_time(params: FracParams, c_tail: float, half_length: float, tol: float) -> float:
    """Largest t with aliasing_estimate(t) <= tol."""
    unit = aliasing_estimate(params, c_tail, half_length, 1.0)
    return math.inf if unit == 0 else tol / unit


# IO

def save_grid(u: GridFunction, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(f".{path.name}.tmp")
    np.ascontiguousarray(u.values, dtype="<f8").tofile(tmp)
    tmp.replace(path)
    hdr = {"n": u.n, "s": repr(u.params.s), "L": repr(u.half_length), "N": u.points, "t": repr(u.t)}
    _atomic_write(header_path(path), "".join(f"{k} = {v}\n" for k, v in hdr.items()))
    return path


def header_path(path) -> Path:
    path = Path(path)
    return path.with_name(path.name + ".hdr")


def load_grid(path) -> GridFunction:
    path = Path(path)
    hdr = {}
    for line in header_path(path).read_text().splitlines():
        if line.strip():
            k, _, v = line.partition("=")
            hdr[k.strip()] = v.strip()
    n, N = int(hdr["n"]), int(hdr["N"])
    vals = np.fromfile(path, dtype="<f8")
    if vals.size != N**n:
        raise ValueError(f"{path} holds {vals.size} values, header expects {N**n}")
    return GridFunction(FracParams(n, float(hdr["s"])), float(hdr["L"]), N,
                        vals.reshape((N,) * n), float(hdr["t"]))


def save_grid_csv(u: GridFunction, path) -> Path:
    """1-d grid function as CSV with header ``x,u``."""
    if u.n != 1:
        raise ValueError("CSV export is for 1-d grid functions")
    rows = [f"{x!r},{v!r}" for x, v in zip(u.axis().tolist(), u.values.tolist())]
    path = Path(path)
    _atomic_write(path, "x,u\n" + "\n".join(rows) + "\n")
    return path
