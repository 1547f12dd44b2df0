"""Fractional heat kernel P(x, t) = t^{-n/2s} F(|x| t^{-1/2s}) and its profile F.

The profile is the inverse radial Fourier transform of ``exp(-|xi|^{2s})``.
It is tabulated once per ``(n, s)`` on a grid that is linear near the origin
and logarithmic toward ``r_max``, then evaluated by monotone cubic Hermite
interpolation of log F.  Beyond ``r_max`` a fitted expansion

    r^{n+2s} F(r) = a_0 + a_1 r^{-2s} + a_2 r^{-4s} + ...

continues the power tail; ``a_0`` is close to the tail constant ``C(n, s)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import NamedTuple

import numpy as np
from scipy import interpolate

from . import spectral
from ._inversion import radial_inversion
from .errors import DomainError, QuadratureError, TailFitError

LINEAR_POINTS = 512
LOG_POINTS = 1536
LINEAR_EDGE = 4.0
DEFAULT_R_MAX = 200.0
DEFAULT_QUAD_TOL = 1e-8

# float64 Gaussian profile underflows near r = 53
GAUSSIAN_R_MAX = 50.0

_TAIL_DEGREE = 3
_TAIL_WINDOW = 4.0


@dataclass(frozen=True)
class FracParams:
    """Spatial dimension ``n`` in {1, 2, 3} and fractional order ``s`` in (0, 1]."""

    n: int
    s: float

    def __post_init__(self):
        if isinstance(self.n, bool) or int(self.n) != self.n or self.n not in (1, 2, 3):
            raise ValueError(f"dimension must be 1, 2 or 3, got {self.n!r}")
        s = float(self.s)
        if not (0.0 < s <= 1.0) or math.isnan(s):
            raise ValueError(f"order out of (0,1]: s={self.s!r}")
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "s", s)

    @property
    def decay_exponent(self) -> float:
        """n + 2s, the power of the kernel tail."""
        return self.n + 2.0 * self.s

    def length_scale(self, t: float) -> float:
        """t^{1/2s}."""
        return t ** (1.0 / (2.0 * self.s))

    def amplitude_scale(self, t: float) -> float:
        """t^{-n/2s}."""
        return t ** (-self.n / (2.0 * self.s))


def sphere_area(n: int) -> float:
    """Surface measure of the unit sphere in R^n (2 for n = 1)."""
    return 2.0 * math.pi ** (n / 2.0) / math.gamma(n / 2.0)


def peak_value(params: FracParams) -> float:
    """F(0) = |S^{n-1}| Gamma(n/2s) / (2s (2 pi)^n), from the inversion integral at r = 0."""
    n, s = params.n, params.s
    return sphere_area(n) * math.gamma(n / (2.0 * s)) / (2.0 * s * (2.0 * math.pi) ** n)


def poisson_constant(n: int) -> float:
    """Unit-mass constant of c (1 + r^2)^{-(n+1)/2}."""
    return math.gamma((n + 1) / 2.0) / math.pi ** ((n + 1) / 2.0)


def _gaussian(n, r):
    return (4.0 * math.pi) ** (-n / 2.0) * np.exp(-0.25 * r * r)


def _gaussian_prime(n, r):
    return -0.5 * r * _gaussian(n, r)


def _poisson(n, r):
    return poisson_constant(n) * (1.0 + r * r) ** (-(n + 1) / 2.0)


def _poisson_prime(n, r):
    return -poisson_constant(n) * (n + 1) * r * (1.0 + r * r) ** (-(n + 3) / 2.0)


_CLOSED_FORMS = {
    "gaussian": (_gaussian, _gaussian_prime),
    "poisson": (_poisson, _poisson_prime),
}


def _monotone_slopes(r, f, d):
    """Clip Hermite slopes so each cubic piece stays monotone (Fritsch-Carlson)."""
    d = d.copy()
    secant = np.diff(f) / np.diff(r)
    with np.errstate(divide="ignore", invalid="ignore"):
        a = d[:-1] / secant
        b = d[1:] / secant
    flat = secant == 0
    d[:-1][flat] = 0.0
    d[1:][flat] = 0.0
    a = np.where(flat, 0.0, a)
    b = np.where(flat, 0.0, b)
    d[:-1][a < 0] = 0.0
    d[1:][b < 0] = 0.0
    a = np.maximum(a, 0.0)
    b = np.maximum(b, 0.0)
    big = a * a + b * b > 9.0
    if np.any(big):
        tau = 3.0 / np.sqrt(a[big] ** 2 + b[big] ** 2)
        idx = np.nonzero(big)[0]
        d[idx] = np.minimum(np.abs(d[idx]), tau * a[big] * np.abs(secant[big])) * np.sign(secant[big])
        d[idx + 1] = np.minimum(np.abs(d[idx + 1]), tau * b[big] * np.abs(secant[big])) * np.sign(secant[big])
    return d


@dataclass(frozen=True, eq=False)
class KernelProfile:
    """Tabulated self-similar profile ``F`` with derivative and tail data.

    Arrays are read-only after construction.  ``closed_form`` names an exact
    formula (``'gaussian'`` or ``'poisson'``) used for evaluation instead of
    the interpolant; ``tail_poly`` holds the coefficients ``a_k`` of the tail
    expansion in powers of ``r^{-2s}`` used beyond ``r_max``.
    """

    params: FracParams
    radii: np.ndarray
    values: np.ndarray
    derivs: np.ndarray
    r_max: float
    c_tail: float
    quad_tol: float
    tail_poly: tuple = ()
    closed_form: str | None = None
    _interp: object = field(init=False, repr=False)
    _dinterp: object = field(init=False, repr=False)

    def __post_init__(self):
        r = np.array(self.radii, dtype=float)
        f = np.array(self.values, dtype=float)
        d = np.array(self.derivs, dtype=float)
        if not (r.ndim == 1 and r.shape == f.shape == d.shape and r.size >= 4):
            raise ValueError("radii, values and derivs must be 1-d arrays of equal length")
        if r[0] < 0 or np.any(np.diff(r) <= 0):
            raise ValueError("radii must be nonnegative and strictly increasing")
        if not np.all(np.isfinite(f)) or not np.all(np.isfinite(d)):
            raise ValueError("profile values must be finite")
        if np.any(f <= 0):
            raise ValueError("profile values must be positive")
        if self.closed_form not in (None, *_CLOSED_FORMS):
            raise ValueError(f"unknown closed form {self.closed_form!r}")
        for name, arr in (("radii", r), ("values", f), ("derivs", d)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        object.__setattr__(self, "r_max", float(r[-1]))
        object.__setattr__(self, "tail_poly", tuple(float(a) for a in self.tail_poly))
        # log F and F'/F are smooth on both the peak and the tail
        log_f = np.log(f)
        q = d / f
        slopes = _monotone_slopes(r, log_f, q)
        object.__setattr__(self, "_interp", interpolate.CubicHermiteSpline(r, log_f, slopes))
        object.__setattr__(self, "_dinterp", interpolate.CubicSpline(r, q))

    @property
    def n(self) -> int:
        return self.params.n

    @property
    def s(self) -> float:
        return self.params.s

    @property
    def peak(self) -> float:
        """F(0)."""
        return float(self.values[0])

    def _tail(self, r, derivative=False):
        p = self.params.decay_exponent
        two_s = 2.0 * self.s
        if self.s == 1.0:
            return _gaussian_prime(self.n, r) if derivative else _gaussian(self.n, r)
        out = np.zeros_like(r)
        for k, a in enumerate(self.tail_poly):
            e = p + two_s * k
            out += (-e * a * r ** (-e - 1.0)) if derivative else a * r ** (-e)
        return out

    def __call__(self, r):
        """F(r) for r >= 0 (array-friendly)."""
        r = np.abs(np.asarray(r, dtype=float))
        if self.closed_form is not None:
            return _CLOSED_FORMS[self.closed_form][0](self.n, r)
        inside = r <= self.r_max
        if np.all(inside):
            return np.exp(self._interp(r))
        out = np.empty_like(r)
        out[inside] = np.exp(self._interp(r[inside]))
        out[~inside] = self._tail(r[~inside])
        return out

    def derivative(self, r):
        """Interpolated F'(r); use :func:`profile_derivative` for quadrature values."""
        r = np.abs(np.asarray(r, dtype=float))
        if self.closed_form is not None:
            return _CLOSED_FORMS[self.closed_form][1](self.n, r)
        inside = r <= self.r_max
        out = np.empty_like(r)
        ri = r[inside]
        out[inside] = np.exp(self._interp(ri)) * self._dinterp(ri)
        out[~inside] = self._tail(r[~inside], derivative=True)
        return out

    def mass(self) -> float:
        """n-dimensional integral of the radial extension of F.

        Uses the trapezoid rule with endpoint-derivative correction on the
        table plus the tail expansion integrated exactly beyond ``r_max``.
        """
        n, s = self.n, self.s
        r, f, d = self.radii, self.values, self.derivs
        g = r ** (n - 1) * f
        dg = r ** (n - 1) * d + ((n - 1) * r ** (n - 2) * f if n > 1 else 0.0)
        h = np.diff(r)
        body = np.sum(0.5 * h * (g[:-1] + g[1:]) + h * h * (dg[:-1] - dg[1:]) / 12.0)
        tail = 0.0
        if s < 1.0:
            for k, a in enumerate(self.tail_poly):
                e = 2.0 * s * (k + 1)
                tail += a * self.r_max ** (-e) / e
        return sphere_area(n) * (body + tail)


def profile_grid(r_max: float = DEFAULT_R_MAX) -> np.ndarray:
    """512 linear points on [0, 4) followed by 1536 log-spaced points on [4, r_max]."""
    if r_max < 10:
        raise ValueError(f"r_max must be at least 10, got {r_max}")
    lin = np.linspace(0.0, LINEAR_EDGE, LINEAR_POINTS, endpoint=False)
    return np.concatenate([lin, np.geomspace(LINEAR_EDGE, r_max, LOG_POINTS)])


def _fit_tail(params, r, f):
    """Coefficients of r^{n+2s} F as a cubic in r^{-2s} over [r_max/4, r_max]."""
    r_max = r[-1]
    sel = r >= r_max / _TAIL_WINDOW
    z = r[sel] ** (-2.0 * params.s)
    y = r[sel] ** params.decay_exponent * f[sel]
    coef = np.polynomial.polynomial.polyfit(z, y, _TAIL_DEGREE)
    # pin the expansion to the last tabulated value so F stays continuous
    at_edge = np.polynomial.polynomial.polyval(r_max ** (-2.0 * params.s), coef)
    return tuple(coef * (y[-1] / at_edge))


def _check_shape(params, r, f):
    if np.any(f <= 0):
        bad = r[np.argmax(f <= 0)]
        raise QuadratureError(f"profile not positive at r={bad:.6g}", float("inf"))
    if np.any(np.diff(f) > 0):
        bad = r[np.argmax(np.diff(f) > 0)]
        raise QuadratureError(f"profile not radially nonincreasing near r={bad:.6g}", float("inf"))


def _finish(params, r, f, d, quad_tol, closed_form=None):
    if params.s < 1.0:
        tail_poly = _fit_tail(params, r, f)
        sel = r >= r[-1] / 2.0
        c_tail = float(np.mean(r[sel] ** params.decay_exponent * f[sel]))
    else:
        tail_poly = ()
        c_tail = 0.0
    return KernelProfile(
        params=params,
        radii=r,
        values=f,
        derivs=d,
        r_max=float(r[-1]),
        c_tail=c_tail,
        quad_tol=quad_tol,
        tail_poly=tail_poly,
        closed_form=closed_form,
    )


def _gaussian_fallback(params, r, f, quad_tol):
    """Mask of radii where the s=1 inversion is below its own resolution.

    The inversion integral carries an absolute roundoff of order
    eps * F(0); once F falls below that divided by ``quad_tol`` (near r = 7
    for the default tolerance) the relative accuracy is lost and the
    closed-form Gaussian value is used instead.
    """
    floor = 100.0 * np.finfo(float).eps * _gaussian(params.n, 0.0) / quad_tol
    return f <= floor


def build_profile(
    params: FracParams,
    quad_tol: float = DEFAULT_QUAD_TOL,
    r_max: float = DEFAULT_R_MAX,
) -> KernelProfile:
    """Tabulate F by numerical inversion of ``exp(-rho^{2s})``.

    Parameters
    ----------
    params : FracParams
    quad_tol : float
        Relative accuracy required of every tabulated value, in [1e-12, 1e-4].
    r_max : float
        Largest tabulated radius (at least 10).  For s = 1 it is capped at 50
        because the Gaussian underflows shortly after.

    Raises
    ------
    QuadratureError
        If the error estimate exceeds ``quad_tol`` anywhere, or the table
        loses positivity, monotonicity or unit mass.
    """
    if not (1e-12 <= quad_tol <= 1e-4):
        raise ValueError(f"quad_tol must lie in [1e-12, 1e-4], got {quad_tol}")
    n, s = params.n, params.s
    if s == 1.0:
        r_max = min(r_max, GAUSSIAN_R_MAX)
    r = profile_grid(r_max)
    m = 16 if quad_tol >= 1e-10 else 24
    f, ef = radial_inversion(r, n, s, 0, m=m)
    d, _ = radial_inversion(r, n, s, 1, m=m)
    if s == 1.0:
        swap = _gaussian_fallback(params, r, f, quad_tol)
        f = np.where(swap, _gaussian(n, r), f)
        d = np.where(swap, _gaussian_prime(n, r), d)
        ef = np.where(swap, 0.0, ef)
    achieved = float(np.max(ef / np.abs(f)))
    if achieved > quad_tol:
        raise QuadratureError(f"profile inversion for n={n}, s={s} did not converge", achieved)
    _check_shape(params, r, f)
    prof = _finish(params, r, f, d, quad_tol)
    defect = abs(prof.mass() - 1.0)
    if defect > 10.0 * quad_tol:
        raise QuadratureError(f"profile mass differs from 1 by {defect:.3g}", defect)
    return prof


def explicit_profile(params: FracParams, r_max: float = DEFAULT_R_MAX) -> KernelProfile:
    """Closed-form profile for s = 1 (Gaussian) or s = 1/2 (Poisson kernel).

    The s = 1/2 constant is the unit-mass one, Gamma((n+1)/2) / pi^{(n+1)/2}.
    """
    if params.s == 1.0:
        kind = "gaussian"
        r_max = min(r_max, GAUSSIAN_R_MAX)
    elif params.s == 0.5:
        kind = "poisson"
    else:
        raise ValueError(
            f"no closed form for s={params.s}; use build_profile for general orders"
        )
    r = profile_grid(r_max)
    f_exact, d_exact = _CLOSED_FORMS[kind]
    return _finish(params, r, f_exact(params.n, r), d_exact(params.n, r), 1e-12, kind)


def kernel_at(profile: KernelProfile, x, t: float):
    """P(x, t) = t^{-n/2s} F(|x| t^{-1/2s}).

    ``x`` is a point (length-n sequence), an array whose last axis has length
    n, or for n = 1 a scalar or array of positions.
    """
    if not t > 0:
        raise ValueError(f"time must be positive, got {t}")
    x = np.asarray(x, dtype=float)
    p = profile.params
    if p.n == 1 and (x.ndim == 0 or x.shape[-1] != 1):
        r = np.abs(x)
    else:
        if x.shape[-1] != p.n:
            raise ValueError(f"points must have {p.n} coordinates")
        r = np.sqrt(np.sum(x * x, axis=-1))
    out = p.amplitude_scale(t) * profile(r / p.length_scale(t))
    return float(out) if np.ndim(out) == 0 else out


def profile_derivative(profile: KernelProfile, r, tol: float | None = None):
    """F'(r) by quadrature of the differentiated inversion integral.

    ``tol`` defaults to ``max(profile.quad_tol, 1e-6)``: the extra power of
    rho in the integrand costs roughly two digits against F in 3-d.
    """
    p = profile.params
    r_arr = np.atleast_1d(np.asarray(r, dtype=float))
    if np.any(r_arr < 0):
        raise ValueError("radius must be nonnegative")
    tol = max(profile.quad_tol, 1e-6) if tol is None else tol
    d, err = radial_inversion(r_arr, p.n, p.s, 1)
    if p.s == 1.0:
        swap = _gaussian_fallback(p, r_arr, np.abs(d), tol) & (r_arr > 0)
        d = np.where(swap, _gaussian_prime(p.n, r_arr), d)
        err = np.where(swap, 0.0, err)
    scale = np.maximum(np.abs(d), 1e-300)
    achieved = float(np.max(np.where(err == 0, 0.0, err / scale)))
    if achieved > tol:
        raise QuadratureError("derivative inversion did not converge", achieved)
    return float(d[0]) if np.ndim(r) == 0 else d


class TailFit(NamedTuple):
    c_tail: float
    spread: float
    r_lo: float
    r_hi: float


def tail_coefficient(profile: KernelProfile, max_spread: float = 0.02) -> TailFit:
    """Least-squares constant of r^{n+2s} F over [r_max/2, r_max].

    ``spread`` is max |r^{n+2s}F - c| / c over the window.
    """
    p = profile.params
    if p.s == 1.0:
        raise ValueError("s = 1 has a Gaussian tail; there is no power-law coefficient")
    if profile.r_max < 20:
        raise ValueError("tail fit needs a profile tabulated to r_max >= 20")
    r = profile.radii
    sel = r >= profile.r_max / 2.0
    y = r[sel] ** p.decay_exponent * profile(r[sel])
    c = float(np.mean(y))
    spread = float(np.max(np.abs(y - c)) / c)
    if spread > max_spread:
        raise TailFitError(
            f"r^(n+2s)F varies by {spread:.3%} over [{profile.r_max / 2:g}, {profile.r_max:g}]; "
            "extend r_max"
        )
    return TailFit(c, spread, float(r[sel][0]), float(r[sel][-1]))


def radial_samples(profile: KernelProfile, half_length: float, points: int):
    """F and r F'(r) sampled on the periodic grid of [-L, L)^n."""
    coords = spectral.coordinates(half_length, points, profile.n)
    r = np.sqrt(sum(c * c for c in coords))
    return profile(r), r * profile.derivative(r)


def _boundary_max(values: np.ndarray) -> float:
    out = 0.0
    for ax in range(values.ndim):
        out = max(out, float(np.max(np.abs(np.take(values, 0, axis=ax)))))
    return out


def stationarity_residual(profile: KernelProfile, points: int, half_length: float) -> float:
    """sup |2s (-Delta)^s F - n F - r F'| / F(0) on the periodic box [-L, L)^n.

    Raises
    ------
    DomainError
        If F on the box boundary exceeds 1e-4 F(0).
    """
    f, rdf = radial_samples(profile, half_length, points)
    edge = _boundary_max(f)
    if edge > 1e-4 * profile.peak:
        raise DomainError(
            f"box too small: boundary value {edge / profile.peak:.3g} F(0) exceeds 1e-4 F(0)"
        )
    s, n = profile.s, profile.n
    res = 2.0 * s * spectral.fractional_laplacian(f, half_length, s) - n * f - rdf
    return float(np.max(np.abs(res)) / profile.peak)


def truncated_moment(profile: KernelProfile, p: float, R: float) -> tuple[float, bool]:
    """Integral of |x|^p F(|x|) over the ball of radius R, with a divergence flag.

    The flag follows a Cauchy test: the increment from R/2 to R exceeds 10%
    of the value at R/2.
    """
    if p < 0:
        raise ValueError(f"moment order must be nonnegative, got {p}")
    if not 0 < R <= profile.r_max:
        raise ValueError(f"R must lie in (0, r_max={profile.r_max:g}]")

    def ball(radius):
        edges = profile.radii[profile.radii < radius]
        edges = np.append(edges, radius)
        x, w = np.polynomial.legendre.leggauss(8)
        a = edges[:-1, None]
        h = np.diff(edges)[:, None]
        nodes = (a + 0.5 * h * (x + 1.0)).ravel()
        weights = (0.5 * h * w).ravel()
        integrand = nodes ** (profile.n - 1 + p) * profile(nodes)
        return sphere_area(profile.n) * float(np.sum(weights * integrand))

    full = ball(R)
    half = ball(R / 2.0)
    return full, bool(full - half > 0.1 * half)


def profile_csv(profile: KernelProfile) -> str:
    """CSV text with header ``r,F,Fprime``; floats use repr (round-trip exact)."""
    rows = np.column_stack([profile.radii, profile.values, profile.derivs])
    lines = ["r,F,Fprime"] + [f"{a!r},{b!r},{c!r}" for a, b, c in rows.tolist()]
    return "\n".join(lines) + "\n"


def profile_meta(profile: KernelProfile) -> str:
    meta = {
        "n": str(profile.n),
        "s": repr(profile.s),
        "quad_tol": repr(profile.quad_tol),
        "c_tail": repr(profile.c_tail),
        "r_max": repr(profile.r_max),
        "tail_poly": ",".join(repr(a) for a in profile.tail_poly),
        "closed_form": profile.closed_form or "none",
    }
    return "".join(f"{k} = {v}\n" for k, v in meta.items())


def save_profile(profile: KernelProfile, path) -> Path:
    """Write ``path`` (CSV ``r,F,Fprime``) and ``path`` + ``.meta`` (key = value)."""
    path = Path(path)
    _atomic_write(path, profile_csv(profile))
    _atomic_write(meta_path(path), profile_meta(profile))
    return path


def meta_path(path) -> Path:
    path = Path(path)
    return path.with_name(path.name + ".meta")


def load_profile(path) -> KernelProfile:
    """Inverse of :func:`save_profile`."""
    path = Path(path)
    meta = {}
    for line in meta_path(path).read_text().splitlines():
        if line.strip():
            key, _, val = line.partition("=")
            meta[key.strip()] = val.strip()
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    poly = meta.get("tail_poly", "")
    closed = meta.get("closed_form", "none")
    return KernelProfile(
        params=FracParams(int(meta["n"]), float(meta["s"])),
        radii=data[:, 0],
        values=data[:, 1],
        derivs=data[:, 2],
        r_max=float(meta["r_max"]),
        c_tail=float(meta["c_tail"]),
        quad_tol=float(meta["quad_tol"]),
        tail_poly=tuple(float(a) for a in poly.split(",")) if poly else (),
        closed_form=None if closed == "none" else closed,
    )


def _atomic_write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(f".{path.name}.tmp")
    tmp.write_text(text)
    tmp.replace(path)
