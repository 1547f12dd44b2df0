"""Large-time behaviour: renormalized errors, rates, relative error, corrector.

All experiments evolve data with :func:`solver.evolve_convolution` on a
similarity grid, i.e. a box of half-width ``half_width * t^{1/2s}`` with a
fixed number of points.  This keeps the profile resolved at every time and
has no periodic images, which matters for the fat tail at small s.  The
spectral solver can be selected instead, in which case the aliasing budget
of the datum's box is enforced.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, NamedTuple

import numpy as np
from scipy import optimize

from . import solver
from .errors import AliasingBudgetError
from .kernel import KernelProfile, _atomic_write, kernel_at
from .solver import GridFunction, InitialDatum, MomentSummary

TRUST_FACTOR = 1e3 * np.finfo(float).eps

DEFAULT_HALF_WIDTH = 40.0
DEFAULT_POINTS = 2048


@dataclass(frozen=True)
class ErrorReport:
    """Renormalized distances between u(t) and M P_t.

    ``rel_sup`` and ``corrector_resid`` are NaN when not requested.
    """

    t: float
    e1: float
    einf: float
    ep: dict
    rel_sup: float = math.nan
    corrector_resid: float = math.nan

    def series(self, p) -> float:
        if p == 1:
            return self.e1
        if math.isinf(p):
            return self.einf
        return self.ep[p]


class RateEstimate(NamedTuple):
    slope: float
    intercept: float
    residual: float
    window: tuple


def _grid_derivatives(u: GridFunction, profile: KernelProfile, t: float):
    """P_t and grad P_t on the grid of ``u``."""
    p = profile.params
    coords = u.coordinates()
    scale = p.length_scale(t)
    R = np.sqrt(sum(c * c for c in coords)) / scale
    amp = p.amplitude_scale(t)
    Pt = amp * profile(R)
    dF = profile.derivative(R)
    with np.errstate(invalid="ignore", divide="ignore"):
        radial = np.where(R > 0, dF / np.where(R > 0, R, 1.0), 0.0)
    grad = [amp / scale * radial * (c / scale) for c in coords]
    return Pt, grad


def error_report(u_t: GridFunction, profile: KernelProfile, M: float, t: float,
                 moments: MomentSummary | None = None, ps=(2, 4),
                 relative: bool = True) -> ErrorReport:
    """Compare a grid solution with M P_t.

    Parameters
    ----------
    u_t : GridFunction
    profile : KernelProfile
    M : float
        Mass of the datum.
    t : float
        Time of ``u_t``.
    moments : MomentSummary, optional
        Needed for the corrector residual.
    ps : sequence of float
        Exponents for ``ep``.
    relative : bool
        Compute ``rel_sup`` and ``corrector_resid``.  Rejected when M = 0.
    """
    if not t > 0:
        raise ValueError(f"time must be positive, got {t}")
    if u_t.params != profile.params:
        raise ValueError("solution and profile have different parameters")
    if relative and M == 0:
        raise ValueError(
            "relative error is undefined for zero-mass data; pass relative=False for absolute fields"
        )
    p = profile.params
    Pt, grad = _grid_derivatives(u_t, profile, t)
    err = u_t.values - M * Pt
    e = u_t.with_values(err)
    e1 = solver.lp_norm(e, 1)
    einf = p.amplitude_scale(t) ** -1 * solver.lp_norm(e, math.inf)
    ep = {}
    for q in ps:
        ep[q] = t ** (p.n * (q - 1) / (2.0 * p.s * q)) * solver.lp_norm(e, q)
    rel = corr = math.nan
    if relative:
        trusted = Pt >= TRUST_FACTOR * p.amplitude_scale(t) * profile.peak
        rel = float(np.max(np.abs(err[trusted]) / Pt[trusted]))
        if moments is not None:
            fixed = err.copy()
            for Ni, gi in zip(moments.first_moment, grad):
                fixed += Ni * gi
            corr = p.length_scale(t) * float(np.max(np.abs(fixed[trusted]) / Pt[trusted]))
    return ErrorReport(float(t), e1, float(einf), ep, rel, corr)


def fit_rate(times, values, log_time: bool = True) -> RateEstimate:
    """Least-squares line through (log t, log value).

    With ``log_time=False`` the abscissa is t itself (semi-log fit).
    ``residual`` is the largest absolute deviation of log value from the line.
    """
    t = np.asarray(times, dtype=float)
    v = np.asarray(values, dtype=float)
    if t.size != v.size or t.size < 4:
        raise ValueError("need at least 4 samples")
    if np.any(v <= 0) or not np.all(np.isfinite(v)):
        raise ValueError("values must be positive and finite")
    if np.any(np.diff(t) <= 0):
        raise ValueError("times must be strictly increasing")
    x = np.log(t) if log_time else t
    y = np.log(v)
    slope, intercept = np.polyfit(x, y, 1)
    resid = float(np.max(np.abs(y - (slope * x + intercept))))
    return RateEstimate(float(slope), float(intercept), resid, (float(t[0]), float(t[-1])))


def dyadic_ladder(t0: float = 1.0, count: int = 7) -> list[float]:
    return [t0 * 2.0**j for j in range(count)]


def similarity_grid(profile: KernelProfile, t: float, half_width: float, points: int):
    """(L, N) of the box [-half_width t^{1/2s}, ...)."""
    return half_width * profile.params.length_scale(t), points


def evolve(datum: InitialDatum, profile: KernelProfile, t: float,
           half_width: float = DEFAULT_HALF_WIDTH, points: int = DEFAULT_POINTS,
           method: str = "convolution", warmup: float | None = None) -> GridFunction:
    if method == "convolution":
        return solver.evolve_convolution(
            datum, profile, t, grid=similarity_grid(profile, t, half_width, points))
    if method == "spectral":
        return solver.evolve_spectral(datum, t, profile=profile, warmup=warmup)
    raise ValueError(f"unknown method {method!r}")


def check_aliasing(datum: InitialDatum, profile: KernelProfile, times, tol: float) -> None:
    """Raise if the spectral box cannot hold the largest time within ``tol``."""
    if datum.grid_part is None:
        raise ValueError("the spectral method needs a datum with a grid box")
    L = datum.grid_part.half_length
    budget = solver.max_admissible_time(profile.params, profile.c_tail, L, tol)
    if max(times) > budget:
        raise AliasingBudgetError(f"time {max(times):g} exceeds the aliasing budget of L={L:g}", budget)


def _require_finite_moment(mom: MomentSummary):
    if not mom.finite:
        raise ValueError("datum has an infinite first absolute moment")


def _reports(datum, profile, times, half_width, points, method, aliasing_tol,
             warmup=None, relative=True, ps=(2, 4)):
    mom = solver.moments(datum)
    if method == "spectral":
        check_aliasing(datum, profile, times, aliasing_tol)
    out = []
    for t in times:
        u = evolve(datum, profile, t, half_width, points, method, warmup)
        out.append(error_report(u, profile, mom.mass, t, mom, ps=ps,
                                relative=relative and mom.mass != 0))
    return out, mom


def rate_experiment(datum: InitialDatum, profile: KernelProfile, times, p=math.inf,
                    half_width: float = DEFAULT_HALF_WIDTH, points: int = DEFAULT_POINTS,
                    method: str = "convolution", aliasing_tol: float = 1e-6,
                    warmup: float | None = None, floor: float = 1e-10):
    """Fit the decay of a renormalized error along a time ladder.

    Returns ``(reports, rate)``.  ``rate`` is None when every error sits
    below ``floor * |M| F(0)`` (exact solutions have no meaningful slope).
    """
    mom = solver.moments(datum)
    _require_finite_moment(mom)
    reports, mom = _reports(datum, profile, times, half_width, points, method, aliasing_tol, warmup)
    values = [r.series(p) for r in reports]
    scale = max(abs(mom.mass), 1.0) * profile.peak
    if max(values) <= floor * scale:
        return reports, None
    return reports, fit_rate(times, values)


def sup_derivative(profile: KernelProfile) -> float:
    """sup_r |F'(r)|, the constant of the mean-value bound |P_t(x-y) - P_t(x)|."""
    r = profile.radii
    i = int(np.argmax(np.abs(profile.derivs)))
    lo, hi = r[max(i - 1, 0)], r[min(i + 1, r.size - 1)]
    res = optimize.minimize_scalar(lambda x: float(profile.derivative(x)), bounds=(lo, hi),
                                   method="bounded", options={"xatol": 1e-12})
    return max(float(-res.fun), float(np.max(np.abs(profile.derivs))))


def rate_prefactor(reports, profile: KernelProfile, mom: MomentSummary) -> tuple[float, float]:
    """(max_t t^{1/2s} einf(t), C_1 N_1) with C_1 = sup |F'|."""
    p = profile.params
    measured = max(r.einf * p.length_scale(r.t) for r in reports)
    return measured, sup_derivative(profile) * mom.abs_first_moment


def _support_radius(datum: InitialDatum) -> float:
    rad = 0.0
    for pm in datum.point_masses:
        rad = max(rad, math.sqrt(sum(c * c for c in pm.location)))
    if datum.grid_part is not None:
        g = datum.grid_part
        nz = g.values != 0
        if nz.any():
            rad = max(rad, float(g.radius()[nz].max()))
    return rad


def check_support(datum: InitialDatum, R: float) -> None:
    actual = _support_radius(datum)
    if actual > R * (1 + 1e-12):
        raise ValueError(f"datum extends to radius {actual:g}, beyond the declared R={R:g}")


@dataclass(frozen=True)
class RelativeSeries:
    times: tuple
    rel_sup: tuple
    scaled: tuple
    constant: float
    bounded: bool
    reports: tuple = field(repr=False, default=())


def relative_error_experiment(datum: InitialDatum, profile: KernelProfile, R: float, times,
                              half_width: float = DEFAULT_HALF_WIDTH,
                              points: int = DEFAULT_POINTS) -> RelativeSeries:
    """rel_sup(t) and t^{1/2s} rel_sup(t) for data supported in the ball of radius R.

    ``constant`` is max scaled / (|M| R); ``bounded`` applies the finite-ladder
    test: the last scaled value is at most 1.2 times the smallest one.
    """
    check_support(datum, R)
    mom = solver.moments(datum)
    if mom.mass == 0:
        raise ValueError("relative error needs nonzero mass")
    reports, _ = _reports(datum, profile, times, half_width, points, "convolution", None)
    p = profile.params
    rel = [r.rel_sup for r in reports]
    scaled = [v * p.length_scale(t) for v, t in zip(rel, times)]
    const = max(scaled) / (abs(mom.mass) * R) if R > 0 else (0.0 if max(scaled) == 0 else math.inf)
    bounded = scaled[-1] <= 1.2 * min(scaled) or max(scaled) == 0
    return RelativeSeries(tuple(times), tuple(rel), tuple(scaled), const, bool(bounded), tuple(reports))


@dataclass(frozen=True)
class CorrectorSeries:
    times: tuple
    corrector_resid: tuple
    plain: tuple
    rate: RateEstimate | None
    vanishing: bool
    reports: tuple = field(repr=False, default=())


def corrector_experiment(datum: InitialDatum, profile: KernelProfile, times, R: float | None = None,
                         half_width: float = DEFAULT_HALF_WIDTH,
                         points: int = DEFAULT_POINTS) -> CorrectorSeries:
    """Corrector residual along the ladder next to the plain scaled relative error.

    ``vanishing`` is the finite-ladder proxy for o(1): last value at most half
    the first, and a negative fitted slope.
    """
    if R is not None:
        check_support(datum, R)
    mom = solver.moments(datum)
    if mom.mass == 0:
        raise ValueError("corrector residual needs nonzero mass")
    reports, _ = _reports(datum, profile, times, half_width, points, "convolution", None)
    p = profile.params
    corr = [r.corrector_resid for r in reports]
    plain = [r.rel_sup * p.length_scale(r.t) for r in reports]
    rate = fit_rate(times, corr) if min(corr) > 0 else None
    vanishing = corr[-1] <= 0.5 * corr[0] and (rate is None or rate.slope < 0)
    return CorrectorSeries(tuple(times), tuple(corr), tuple(plain), rate, bool(vanishing), tuple(reports))


# counterexample to a uniform rate

@dataclass(frozen=True)
class RateFunction:
    """Decreasing rate phi: ``power`` is t^{-a}, ``log`` is (log t)^{-a}."""

    kind: str
    param: float

    def __post_init__(self):
        if self.kind not in ("power", "log"):
            raise ValueError(f"unknown rate function {self.kind!r}")
        if not self.param > 0:
            raise ValueError("rate exponent must be positive")

    def __call__(self, t):
        if self.kind == "power":
            return t ** (-self.param)
        return math.log(t) ** (-self.param)

    @property
    def name(self) -> str:
        return f"t^-{self.param:g}" if self.kind == "power" else f"(log t)^-{self.param:g}"


@dataclass(frozen=True)
class CounterexampleSpec:
    phi: Callable
    K: int
    masses: tuple
    locations: tuple
    times: tuple
    delta: float
    bounds: tuple
    thresholds: tuple


class CounterexampleCheck(NamedTuple):
    k: int
    t: float
    lhs: float
    rhs: float
    passed: bool


def half_peak_radius(profile: KernelProfile) -> float:
    """Smallest tabulated-precision radius with F(r) < F(0)/2."""
    half = 0.5 * profile.peak
    i = int(np.argmax(profile.values < half))
    r = optimize.brentq(lambda x: float(profile(x)) - half, profile.radii[i - 1], profile.radii[i],
                        xtol=1e-14, rtol=1e-15)
    while float(profile(r)) >= half:
        r = np.nextafter(r, np.inf) * (1 + 1e-14)
    return float(r)


def build_counterexample(phi: Callable, K: int, profile: KernelProfile,
                         t_start: float = 1.0, max_doublings: int = 1000) -> CounterexampleSpec:
    """Mixture of kernels whose renormalized error beats k phi(t_k) at t_k.

    t_k is the smallest power of two with t_k >= 4 t_{k-1} and
    phi(t_k) <= F(0) m_k / (2k); x_k = r_half t_k^{1/2s} e_1 where r_half is
    just past the half-peak radius of F.
    """
    if not 1 <= K <= 8:
        raise ValueError("K must lie in 1..8")
    F0 = profile.peak
    r_half = half_peak_radius(profile)
    p = profile.params
    masses, locs, times, bounds, thresholds = [], [], [], [], []
    prev_t = t_start
    j = max(1, math.ceil(math.log2(4.0 * t_start)))
    last_phi = math.inf
    for k in range(1, K + 1):
        m = 2.0**-k
        target = F0 * m / (2 * k)
        while True:
            if j > max_doublings:
                raise ValueError(f"phi does not reach {target:.3g} before t = 2^{max_doublings}")
            t = 2.0**j
            val = phi(t)
            if not (math.isfinite(val) and val > 0):
                raise ValueError(f"phi({t:g}) = {val!r} is not a positive number")
            if val > last_phi:
                raise ValueError(f"phi is not decreasing on the probed range (at t = {t:g})")
            last_phi = val
            if t >= 4.0 * prev_t and val <= target:
                break
            j += 1
        x = np.zeros(p.n)
        x[0] = r_half * p.length_scale(t)
        rho = r_half
        masses.append(m)
        locs.append(tuple(x))
        times.append(t)
        bounds.append(m * (F0 - float(profile(rho))))
        thresholds.append(k * phi(t))
        prev_t = t
        j += 1
    return CounterexampleSpec(phi, K, tuple(masses), tuple(locs), tuple(times),
                              float(sum(masses)), tuple(bounds), tuple(thresholds))


def counterexample_value(spec: CounterexampleSpec, profile: KernelProfile, t: float) -> float:
    """t^{n/2s} |u(0, t) - P_t(0)| for the exact kernel mixture."""
    p = profile.params
    origin = np.zeros(p.n)
    base = kernel_at(profile, origin, t)
    u0 = (1.0 - spec.delta) * base
    for m, x in zip(spec.masses, spec.locations):
        u0 += m * kernel_at(profile, np.asarray(x), t)
    return abs(u0 - base) / p.amplitude_scale(t)


def verify_counterexample(spec: CounterexampleSpec, profile: KernelProfile) -> list[CounterexampleCheck]:
    out = []
    for k, t in enumerate(spec.times, start=1):
        lhs = counterexample_value(spec, profile, t)
        rhs = k * spec.phi(t)
        out.append(CounterexampleCheck(k, t, lhs, rhs, bool(lhs >= rhs)))
    return out


def scale_locations(spec: CounterexampleSpec, factor: float) -> CounterexampleSpec:
    """Copy of ``spec`` with every x_k multiplied by ``factor``."""
    locs = tuple(tuple(factor * c for c in x) for x in spec.locations)
    return CounterexampleSpec(spec.phi, spec.K, spec.masses, locs, spec.times, spec.delta,
                              spec.bounds, spec.thresholds)


# output

REPORT_HEADER = "t,e1,einf,ep,rel_sup,corrector_resid"


def reports_csv(reports, p: float = 2) -> str:
    lines = [REPORT_HEADER]
    for r in reports:
        vals = (r.t, r.e1, r.einf, r.ep.get(p, math.nan), r.rel_sup, r.corrector_resid)
        lines.append(",".join(_fmt(v) for v in vals))
    return "\n".join(lines) + "\n"


def write_reports(reports, path, p: float = 2) -> Path:
    path = Path(path)
    _atomic_write(path, reports_csv(reports, p))
    return path


def summary_block(items: dict) -> str:
    return "".join(f"{k}: {_fmt(v) if isinstance(v, float) else v}\n" for k, v in items.items())


def _fmt(v: float) -> str:
    return "%.17g" % v
