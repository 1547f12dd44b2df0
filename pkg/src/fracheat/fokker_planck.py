"""Similarity (Fokker-Planck) frame for the fractional heat equation.

With x = y (1+tau)^{-1/2s} and t = log(1+tau), a solution u(y, tau) becomes

    v(x, t) = (1+tau)^{n/2s} u(x (1+tau)^{1/2s}, tau),

which solves v_t = L1 v with

    L1 v = -(-Delta)^s v + (1/2s) div(x v).

The profile F is the stationary state of L1 and each G_i = d_i F is an
eigenfunction with eigenvalue -1/(2s).  The FP frame is never time stepped
here; snapshots always come from original-frame solutions.

The Ornstein-Uhlenbeck type operator L2 w = -(-Delta)^s w - (1/2s) x . grad w
is the formal adjoint of L1 in L^2 (so that <L1 v, w> = <v, L2 w>); it is
not implemented.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import interpolate

from . import solver, spectral
from .asymptotics import RateEstimate, fit_rate
from .errors import DomainError
from .kernel import FracParams, KernelProfile, _atomic_write, kernel_at
from .solver import GridFunction, InitialDatum

BOUNDARY_TOL = 1e-6


@dataclass(frozen=True, eq=False)
class FpFrameSnapshot:
    v: GridFunction
    t: float
    source_tau: float


def _tau_from_time(u_tau: GridFunction, tau):
    return u_tau.t if tau is None else tau


def to_fp_frame(u_tau: GridFunction, params: FracParams, tau: float | None = None,
                grid=None) -> FpFrameSnapshot:
    """Rescale a solution at time ``tau`` (default ``u_tau.t``) to the FP frame.

    ``grid=(L, N)`` is the similarity box, defaulting to
    ``(L_src (1+tau)^{-1/2s}, N_src)`` whose nodes map exactly onto the
    source nodes.  Otherwise values come from monotone (pchip) interpolation.
    """
    tau = _tau_from_time(u_tau, tau)
    if tau < 0:
        raise ValueError("tau must be nonnegative")
    if u_tau.params != params:
        raise ValueError("grid function and params disagree")
    stretch = (1.0 + tau) ** (1.0 / (2.0 * params.s))
    Ls, Ns = u_tau.half_length, u_tau.points
    if grid is None:
        L, N = Ls / stretch, Ns
    else:
        L, N = float(grid[0]), int(grid[1])
    amp = (1.0 + tau) ** (params.n / (2.0 * params.s))
    x = spectral.axis(L, N)
    if _coincide(L * stretch, N, Ls, Ns):
        vals = amp * u_tau.values
    else:
        lo, hi = x[0] * stretch, x[-1] * stretch
        src_axis = u_tau.axis()
        if lo < src_axis[0] * (1 + 1e-12) - 1e-300 or hi > src_axis[-1]:
            tau_max = (min(-src_axis[0] / -x[0], src_axis[-1] / x[-1])) ** (2.0 * params.s) - 1.0
            raise DomainError(
                f"rescaled grid leaves the source box; admissible tau is in [0, {tau_max:.6g}]")
        interp = interpolate.RegularGridInterpolator([src_axis] * params.n, u_tau.values,
                                                     method="pchip")
        pts = np.stack(np.meshgrid(*([x * stretch] * params.n), indexing="ij"), axis=-1)
        vals = amp * interp(pts)
    v = GridFunction(params, L, N, vals, math.log1p(tau))
    return FpFrameSnapshot(v, math.log1p(tau), float(tau))


def _coincide(L1, N1, L2, N2):
    return N1 == N2 and abs(L1 - L2) <= 1e-12 * L2


def _check_decay(w: GridFunction, tol: float):
    peak = float(np.max(np.abs(w.values)))
    if peak == 0:
        return
    edge = 0.0
    for ax in range(w.n):
        edge = max(edge, float(np.max(np.abs(np.take(w.values, 0, axis=ax)))))
    if edge > tol * peak:
        raise DomainError(
            f"boundary value {edge / peak:.3g} of max|w| exceeds {tol:g}; enlarge the box")


def fp_apply(w: GridFunction, params: FracParams | None = None,
             boundary_tol: float = BOUNDARY_TOL) -> GridFunction:
    """L1 w = -(-Delta)^s w + (1/2s) div(x w) by Fourier multipliers.

    The drift is the spectral divergence of the product x w, which is only
    periodic-friendly when w has decayed at the box boundary; ``boundary_tol``
    is the admissible ratio max|w on boundary| / max|w|.
    """
    params = w.params if params is None else params
    _check_decay(w, boundary_tol)
    s, L = params.s, w.half_length
    out = -spectral.fractional_laplacian(w.values, L, s)
    coords = w.coordinates()
    div = np.zeros_like(out)
    for i, c in enumerate(coords):
        div += spectral.derivative(c * w.values, L, i)
    out += div / (2.0 * s)
    return w.with_values(out)


def eigenfunction_samples(profile: KernelProfile, half_length: float, points: int,
                          axis: int = 0) -> GridFunction:
    """G_i(x) = F'(|x|) x_i / |x| on the grid."""
    coords = spectral.coordinates(half_length, points, profile.n)
    r = np.sqrt(sum(c * c for c in coords))
    with np.errstate(invalid="ignore", divide="ignore"):
        g = np.where(r > 0, profile.derivative(r) * coords[axis] / np.where(r > 0, r, 1.0), 0.0)
    return GridFunction(profile.params, half_length, points, g)


def eigen_residual(profile: KernelProfile, axis: int = 0, points: int | None = None,
                   half_length: float = 200.0, boundary_tol: float = BOUNDARY_TOL) -> float:
    """|| L1 G_i + G_i/(2s) ||_inf / max |G_i|."""
    if not 0 <= axis < profile.n:
        raise ValueError(f"axis must be in 0..{profile.n - 1}")
    N = solver.DEFAULT_POINTS[profile.n] if points is None else points
    G = eigenfunction_samples(profile, half_length, N, axis)
    LG = fp_apply(G, profile.params, boundary_tol)
    res = LG.values + G.values / (2.0 * profile.s)
    return float(np.max(np.abs(res)) / np.max(np.abs(G.values)))


def rayleigh_quotient(profile: KernelProfile, axis: int = 0, points: int | None = None,
                      half_length: float = 200.0, boundary_tol: float = BOUNDARY_TOL) -> float:
    """<L1 G_i, G_i> / <G_i, G_i> on the grid."""
    N = solver.DEFAULT_POINTS[profile.n] if points is None else points
    G = eigenfunction_samples(profile, half_length, N, axis)
    LG = fp_apply(G, profile.params, boundary_tol)
    return float(np.sum(LG.values * G.values) / np.sum(G.values * G.values))


def stationary_residual(profile: KernelProfile, points: int, half_length: float,
                        boundary_tol: float = BOUNDARY_TOL, interior: float = 1.0) -> float:
    """|| L1 F ||_inf / F(0), optionally over the sub-box |x_i| <= interior * L.

    The divergence of x F picks up a Gibbs layer at the periodic boundary
    proportional to L F(L); ``interior < 1`` measures the residual away
    from it.
    """
    coords = spectral.coordinates(half_length, points, profile.n)
    r = np.sqrt(sum(c * c for c in coords))
    F = GridFunction(profile.params, half_length, points, profile(r))
    res = np.abs(fp_apply(F, profile.params, boundary_tol).values)
    mask = np.ones(res.shape, dtype=bool)
    for c in coords:
        mask &= np.abs(c) <= interior * half_length
    return float(np.max(res[mask]) / profile.peak)


@dataclass(frozen=True)
class FpSeries:
    tau: tuple
    t: tuple
    l1_error: tuple
    linf_error: tuple
    rate: RateEstimate | None
    masses: tuple


def tau_ladder(count: int = 7) -> list[float]:
    """tau = 2^j - 1, so that t = j log 2."""
    return [2.0**j - 1.0 for j in range(count)]


def fp_convergence_experiment(datum: InitialDatum, profile: KernelProfile, tau_ladder,
                              half_width: float = 40.0, points: int = 2048,
                              warmup: float | None = None, floor: float = 1e-10) -> FpSeries:
    """Distance of FP-frame snapshots to M F, fitted against t = log(1+tau).

    The original-frame solution at tau is the free-space evolution of the
    datum for time tau; point masses start as kernels at time ``warmup``
    (so a point mass m at x0 contributes m P_{warmup+tau}(y - x0)).  Each
    snapshot lives on a box of half-width ``half_width (1+tau)^{1/2s}``,
    which maps node for node onto the FP box of half-width ``half_width``.
    """
    mom = solver.moments(datum)
    if not mom.finite:
        raise ValueError("datum has an infinite first absolute moment")
    if mom.mass == 0:
        raise ValueError("FP convergence needs nonzero mass")
    if datum.point_masses and not (warmup and warmup > 0):
        raise ValueError("point masses need a positive warm-up time")
    p = profile.params
    taus, ts, l1, linf, masses = [], [], [], [], []
    for tau in tau_ladder:
        L = half_width * (1.0 + tau) ** (1.0 / (2.0 * p.s))
        u = _original_frame(datum, profile, tau, (L, points), warmup)
        snap = to_fp_frame(u, p, tau)
        target = mom.mass * profile(snap.v.radius())
        diff = snap.v.with_values(snap.v.values - target)
        taus.append(float(tau))
        ts.append(snap.t)
        l1.append(solver.lp_norm(diff, 1))
        linf.append(solver.lp_norm(diff, math.inf))
        masses.append(snap.v.mass)
    rate = None
    if max(l1) > floor * abs(mom.mass):
        rate = fit_rate(ts, l1, log_time=False)
    return FpSeries(tuple(taus), tuple(ts), tuple(l1), tuple(linf), rate, tuple(masses))


def _original_frame(datum: InitialDatum, profile: KernelProfile, tau: float, grid, warmup):
    """u(., tau) on ``grid`` with point masses started at ``warmup``."""
    p = profile.params
    L, N = grid
    out = np.zeros((N,) * p.n)
    gp = datum.grid_part
    if gp is not None:
        if tau == 0:
            if not (gp.half_length == L and gp.points == N):
                raise DomainError(
                    f"at tau=0 the grid part must live on the FP box (L={L:g}, N={N}); "
                    "start the ladder at a positive tau")
            out += gp.values
        else:
            out += solver.evolve_convolution(InitialDatum(gp), profile, tau, grid=grid).values
    coords = spectral.coordinates(L, N, p.n)
    for pm in datum.point_masses:
        x = np.stack([c - xc for c, xc in zip(coords, pm.location)], axis=-1)
        out += pm.mass * kernel_at(profile, x if p.n > 1 else x[..., 0], warmup + tau)
    return GridFunction(p, L, N, out, tau)


FP_HEADER = "tau,t,l1_error,linf_error"


def fp_csv(series: FpSeries) -> str:
    lines = [FP_HEADER]
    for row in zip(series.tau, series.t, series.l1_error, series.linf_error):
        lines.append(",".join("%.17g" % v for v in row))
    return "\n".join(lines) + "\n"


def write_fp_series(series: FpSeries, path) -> Path:
    path = Path(path)
    _atomic_write(path, fp_csv(series))
    return path
