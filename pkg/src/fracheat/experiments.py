"""Experiment runners behind ``fracheat run``.

Each runner turns an :class:`ExperimentConfig` into a :class:`RunOutput`:
named text files (CSV and SVG), a summary block and one verdict per
acceptance criterion mapped to the experiment id.  Nothing in the CSVs
depends on wall-clock time, so identical configs give identical bytes.
"""

from __future__ import annotations

import functools
import json
import math
import os
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import asymptotics as asy
from . import fokker_planck as fp
from . import kernel, solver, svg
from .config import ExperimentConfig
from .errors import FracHeatError, TailFitError
from .kernel import FracParams, KernelProfile
from .solver import InitialDatum

OUTPUT_ENV = "FRACHEAT_OUT"
DEFAULT_OUTPUT = "fracheat-runs"

CRITERIA = {
    "kernel-profile": (1, 2, 5),
    "tail": (3,),
    "stationarity": (4,),
    "moments": (6,),
    "cross-check": (7, 8),
    "rate": (9, 14),
    "relative-error": (10,),
    "corrector": (11,),
    "counterexample": (12,),
    "fokker-planck": (13,),
}

# slack on the frozen smoothing constant K = F(0)
SMOOTHING_SLACK = 1e-3


@dataclass
class Verdict:
    criterion: int
    passed: bool
    requirement: str
    measured: dict = field(default_factory=dict)

    @property
    def status(self) -> str:
        return "PASS" if self.passed else "FAIL"

    def as_dict(self):
        return {"criterion": self.criterion, "status": self.status,
                "requirement": self.requirement, "measured": _jsonable(self.measured)}


@dataclass
class RunOutput:
    files: dict = field(default_factory=dict)
    verdicts: list = field(default_factory=list)
    summary: dict = field(default_factory=dict)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else str(v)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def _tag(p: FracParams) -> str:
    return f"n{p.n}_s{p.s:g}"


def _fmt(v) -> str:
    return "%.17g" % v


def _csv(header, rows) -> str:
    lines = [header] + [",".join(_fmt(v) if not isinstance(v, str) else v for v in row)
                        for row in rows]
    return "\n".join(lines) + "\n"


@functools.lru_cache(maxsize=None)
def profile_for(n: int, s: float, quad_tol: float = kernel.DEFAULT_QUAD_TOL,
                r_max: float = kernel.DEFAULT_R_MAX) -> KernelProfile:
    """Numerically built profile, cached per process."""
    return kernel.build_profile(FracParams(n, s), quad_tol, r_max)


def _profile(cfg: ExperimentConfig, p: FracParams) -> KernelProfile:
    return profile_for(p.n, p.s, cfg.quad_tol, cfg.r_max)


# data

def _unit(p: FracParams, length: float):
    e = np.zeros(p.n)
    e[0] = length
    return tuple(e)


def _compact_grid(p: FracParams, lo: float, hi: float, per_width: int = 64):
    """(L, N) with spacing (hi-lo)/per_width and nodes on lo and hi when they are multiples.

    The support stays inside the half box so that the moment shell test sees zeros.
    """
    h = (hi - lo) / per_width
    M = 2 * (math.ceil(max(abs(lo), abs(hi)) / h) + 1)
    return M * h, 2 * M


def make_datum(spec, p: FracParams, profile: KernelProfile, box=None) -> InitialDatum:
    """Catalog datum; grid parts live on ``box=(L, N)`` or on a compact grid."""
    kind = spec.kind
    if kind == "shifted-kernel":
        return solver.point_masses([_unit(p, spec.h)], [1.0])
    if kind == "kernel":
        return solver.point_masses([_unit(p, 0.0)], [1.0])
    if kind == "dipole":
        return solver.dipole(p, spec.h)
    if kind == "point-masses":
        return solver.point_masses(spec.locations, spec.masses)
    if kind == "indicator":
        L, N = box or _compact_grid(p, spec.a, spec.b)
        return InitialDatum(solver.indicator(p, L, N, spec.a, spec.b))
    if kind == "bump":
        L, N = box or _compact_grid(p, -spec.radius, spec.radius)
        return InitialDatum(solver.bump(p, L, N, spec.radius))
    raise ValueError(f"unknown datum kind {kind!r}")


def smoothing_catalog(p: FracParams, profile: KernelProfile, L: float, N: int) -> dict:
    """Ten data on the box (L, N) for the L^1 -> L^inf check."""
    bump = solver.bump(p, L, N, 1.0)
    off = solver.bump(p, L, N, 2.0, center=_unit(p, 0.5))
    return {
        "point-mass-origin": solver.point_masses([_unit(p, 0.0)], [1.0]),
        "point-mass-shifted": solver.point_masses([_unit(p, 0.75)], [1.0]),
        "two-point-masses": solver.point_masses([_unit(p, 1.0), _unit(p, -1.0)], [1.0, 1.0]),
        "dipole": solver.dipole(p, 1.0),
        "indicator-0-1": InitialDatum(solver.indicator(p, L, N, 0.0, 1.0)),
        "indicator-sym": InitialDatum(solver.indicator(p, L, N, -1.0, 1.0)),
        "bump": InitialDatum(bump),
        "bump-wide-offset": InitialDatum(off),
        "signed-bumps": InitialDatum(bump.with_values(bump.values - off.values)),
        "kernel-samples": InitialDatum(solver.kernel_samples(profile, L, N, 1.0)),
    }


def smoothing_constant(p: FracParams) -> float:
    """Frozen K with ||u(t)||_inf <= K t^{-n/2s} ||u0||_1: F(0) plus a small slack."""
    return kernel.peak_value(p) * (1.0 + SMOOTHING_SLACK)


# runners

def run_kernel_profile(cfg: ExperimentConfig) -> RunOutput:
    out = RunOutput()
    rows, mass_ok, closed_ok, shape_ok = [], [], [], []
    closed_errs, masses = {}, {}
    start = time.perf_counter()
    plots = {}
    for p in cfg.params:
        prof = _profile(cfg, p)
        defect = abs(prof.mass() - 1.0)
        tol = 1e-6 if p.n == 1 else 1e-4
        masses[_tag(p)] = defect
        mass_ok.append(defect <= tol)
        cerr = math.nan
        if p.s in (0.5, 1.0):
            ex = kernel.explicit_profile(p)
            r = np.linspace(0.0, 50.0, 5001)
            cerr = float(np.max(np.abs(prof(r) - ex(r)) / ex(r)))
            closed_errs[_tag(p)] = cerr
            closed_ok.append(cerr <= 1e-6)
        v = prof.values
        shape_ok.append(bool(np.all(v > 0) and np.all(np.diff(v) <= 0)))
        rows.append((p.n, p.s, prof.peak, defect, prof.c_tail, cerr, prof.r_max))
        name = f"profile_{_tag(p)}.csv"
        out.files[name] = kernel.profile_csv(prof)
        out.files[name + ".meta"] = kernel.profile_meta(prof)
        sel = prof.radii > 0
        plots.setdefault(p.n, []).append((f"s={p.s:g}", prof.radii[sel], prof.values[sel]))
    elapsed = time.perf_counter() - start
    out.files["kernel_summary.csv"] = _csv("n,s,F0,mass_error,c_tail,closed_form_error,r_max", rows)
    for n, series in plots.items():
        out.files[f"profile_n{n}.svg"] = svg.line_plot(series, f"Profile F, n={n}", "r", "F(r)")
    out.summary["build_seconds"] = round(elapsed, 3)
    out.verdicts.append(Verdict(
        1, all(mass_ok) and elapsed <= 30.0,
        "|mass - 1| <= 1e-6 (n=1), 1e-4 (n>=2); all builds within 30 s",
        {"mass_error": masses, "seconds": elapsed}))
    out.verdicts.append(Verdict(
        2, bool(closed_ok) and all(closed_ok),
        "sup relative error vs closed form <= 1e-6 on r <= 50 (needs s = 1/2 or 1 in the config)",
        {"closed_form_error": closed_errs}))
    out.verdicts.append(Verdict(
        5, all(shape_ok), "tabulated values positive and nonincreasing",
        {"profiles": len(shape_ok), "passing": int(sum(shape_ok))}))
    return out


def run_tail(cfg: ExperimentConfig) -> RunOutput:
    out = RunOutput()
    ok, measured, series = [], {}, []
    for p in cfg.params:
        if p.s == 1.0:
            measured[_tag(p)] = "skipped: Gaussian tail"
            continue
        prof = _profile(cfg, p)
        try:
            fit = kernel.tail_coefficient(prof)
            good = True
            c, spread = fit.c_tail, fit.spread
        except TailFitError as exc:
            good, c, spread = False, math.nan, math.inf
            measured[_tag(p) + "_error"] = str(exc)
        entry = {"c_tail": c, "spread": spread, "leading_coefficient": prof.tail_poly[0]}
        if p.n == 1 and p.s == 0.5:
            rel = abs(c - 1.0 / math.pi) * math.pi
            entry["relative_error_vs_1_over_pi"] = rel
            good = good and rel <= 0.02
        measured[_tag(p)] = entry
        ok.append(good)
        r = prof.radii[prof.radii >= prof.r_max / 4.0]
        y = r**p.decay_exponent * prof(r)
        out.files[f"tail_{_tag(p)}.csv"] = _csv("r,scaled_F", zip(r.tolist(), y.tolist()))
        series.append((f"n={p.n} s={p.s:g}", r, y))
    if series:
        out.files["tail.svg"] = svg.line_plot(series, "Tail r^(n+2s) F(r)", "r", "r^(n+2s) F",
                                              logy=False)
    out.verdicts.append(Verdict(
        3, bool(ok) and all(ok),
        "spread of r^(n+2s)F over [r_max/2, r_max] <= 2%; at n=1, s=1/2 constant within 2% of 1/pi",
        measured))
    return out


def run_stationarity(cfg: ExperimentConfig) -> RunOutput:
    out = RunOutput()
    ok, measured, series = [], {}, []
    for p in cfg.params:
        prof = _profile(cfg, p)
        L = cfg.half_length or (40.0 if p.s == 1.0 else 200.0)
        N = cfg.grid_points(p.n)
        tol = 1e-6 if p.s == 1.0 else 1e-2
        ladder = [N // 4, N // 2, N]
        res = [kernel.stationarity_residual(prof, m, L) for m in ladder]
        measured[_tag(p)] = {"L": L, "N": N, "residual": res[-1], "tolerance": tol}
        ok.append(res[-1] <= tol)
        out.files[f"stationarity_{_tag(p)}.csv"] = _csv("N,residual", zip(ladder, res))
        series.append((f"n={p.n} s={p.s:g}", ladder, res))
    out.files["stationarity.svg"] = svg.line_plot(series, "Stationary profile residual", "N",
                                                  "residual / F(0)")
    out.verdicts.append(Verdict(
        4, all(ok), "residual <= 1e-2 F(0) for s < 1 (L=200), <= 1e-6 F(0) for s = 1 (L=40)",
        measured))
    return out


def run_moments(cfg: ExperimentConfig) -> RunOutput:
    out = RunOutput()
    ok, measured, series = [], {}, []
    for p in cfg.params:
        prof = _profile(cfg, p)
        R = prof.r_max
        value, divergent = kernel.truncated_moment(prof, 1.0, R)
        expected = p.s <= 0.5
        ok.append(divergent == expected)
        second = kernel.truncated_moment(prof, 2.0, R)
        measured[_tag(p)] = {"R": R, "first_moment": value, "divergent": divergent,
                             "expected_divergent": expected, "second_moment_divergent": second[1]}
        radii = [R / 2.0**k for k in range(6, -1, -1)]
        vals = [kernel.truncated_moment(prof, 1.0, x)[0] for x in radii]
        out.files[f"moments_{_tag(p)}.csv"] = _csv("R,first_abs_moment", zip(radii, vals))
        series.append((f"n={p.n} s={p.s:g}", radii, vals))
    out.files["moments.svg"] = svg.line_plot(series, "Truncated first absolute moment", "R",
                                             "moment")
    out.verdicts.append(Verdict(
        6, all(ok), "first moment flagged divergent exactly when s <= 1/2", measured))
    return out


def run_cross_check(cfg: ExperimentConfig) -> RunOutput:
    out = RunOutput()
    ok7, ok8, m7, m8 = [], [], {}, {}
    smooth_series = []
    for p in cfg.params:
        prof = _profile(cfg, p)
        L, N = cfg.box(p), cfg.grid_points(p.n)
        u0 = make_datum(cfg.datum, p, prof, box=(L, N))
        if u0.point_masses:
            raise FracHeatError("cross-check needs a grid datum (bump or indicator)")
        t0 = cfg.times[0]
        norm1 = u0.l1_norm()
        spec_pad = solver.evolve_spectral(u0, t0, pad=2)
        conv = solver.evolve_convolution(u0, prof, t0)
        disc = float(np.max(np.abs(spec_pad.values - conv.values)))
        bound = 1e-6 * norm1 * p.amplitude_scale(t0)
        whole = solver.evolve_spectral(u0, t0)
        halves = solver.evolve_spectral(solver.evolve_spectral(u0, 0.5 * t0), 0.5 * t0)
        semi = float(np.max(np.abs(whole.values - halves.values)) / np.max(np.abs(whole.values)))
        rows, drift = [], []
        m0 = u0.grid_part.mass
        for t in cfg.times:
            u = solver.evolve_spectral(u0, t)
            d = abs(u.mass - m0) / abs(m0)
            drift.append(d)
            rows.append((t, d, solver.aliasing_estimate(p, prof.c_tail, L, t)))
        out.files[f"mass_{_tag(p)}.csv"] = _csv("t,relative_mass_drift,aliasing_estimate", rows)
        good = disc <= bound and semi <= 1e-12 and max(drift) <= 1e-12
        ok7.append(good)
        m7[_tag(p)] = {"sup_discrepancy": disc, "bound": bound, "semigroup": semi,
                       "mass_drift": max(drift), "L": L, "N": N, "t": t0}

        K = smoothing_constant(p)
        worst = 0.0
        srows = []
        for name, datum in smoothing_catalog(p, prof, L, N).items():
            ratios = []
            l1 = datum.l1_norm()
            for t in cfg.times:
                u = solver.evolve_convolution(datum, prof, t, grid=(L, N))
                ratio = solver.lp_norm(u, math.inf) / p.amplitude_scale(t) / l1
                ratios.append(ratio)
                srows.append((name, t, ratio))
            worst = max(worst, max(ratios))
            smooth_series.append((f"{name} s={p.s:g}", cfg.times, ratios))
        out.files[f"smoothing_{_tag(p)}.csv"] = _csv("datum,t,ratio", srows)
        ok8.append(worst <= K)
        m8[_tag(p)] = {"max_ratio": worst, "frozen_K": K}
    out.files["smoothing.svg"] = svg.line_plot(
        smooth_series, "Smoothing ratio ||u(t)||_inf t^(n/2s) / ||u0||_1", "t", "ratio", logy=False)
    out.verdicts.append(Verdict(
        7, all(ok7),
        "spectral vs convolution sup <= 1e-6 ||u0||_1 t^(-n/2s); semigroup and mass to 1e-12", m7))
    out.verdicts.append(Verdict(
        8, all(ok8), "smoothing ratio <= frozen K = F(0)(1 + 1e-3) over a 10-datum catalog", m8))
    return out


def _interpolation_ok(reports) -> tuple[bool, float]:
    worst = 0.0
    for r in reports:
        for q, val in r.ep.items():
            rhs = r.e1 ** (1.0 / q) * r.einf ** ((q - 1.0) / q)
            if rhs > 0:
                worst = max(worst, val / rhs)
            elif val > 0:
                worst = math.inf
    return worst <= 1.0 + 1e-6, worst


def run_rate(cfg: ExperimentConfig) -> RunOutput:
    out = RunOutput()
    ok9, ok14, m9, m14, series = [], [], {}, {}, []
    for p in cfg.params:
        prof = _profile(cfg, p)
        datum = make_datum(cfg.datum, p, prof)
        reports, rate = asy.rate_experiment(datum, prof, cfg.times, p=cfg.rate_p,
                                            half_width=cfg.half_width,
                                            points=cfg.similarity_points)
        target = -1.0 / (2.0 * p.s)
        mom = solver.moments(datum)
        measured_pref, bound = asy.rate_prefactor(reports, prof, mom)
        entry = {"target": target, "prefactor": measured_pref, "C1_N1": bound}
        if rate is None:
            good = False
            entry["slope"] = "no slope: errors at floor"
        else:
            good = abs(rate.slope - target) <= cfg.slope_tol and measured_pref <= bound * (1 + 1e-9)
            entry.update(slope=rate.slope, residual=rate.residual)
        ok9.append(good)
        m9[_tag(p)] = entry
        inter_ok, worst = _interpolation_ok(reports)
        ok14.append(inter_ok)
        m14[_tag(p)] = {"max_ratio": worst}
        out.files[f"rate_{_tag(p)}.csv"] = asy.reports_csv(reports)
        series.append((f"s={p.s:g}", [r.t for r in reports], [r.series(cfg.rate_p) for r in reports]))
    out.files["rate.svg"] = svg.line_plot(series, f"Renormalized error ({cfg.datum.kind})", "t",
                                          "t^(n/2s) ||u - M P_t||")
    out.verdicts.append(Verdict(
        9, all(ok9), f"slope within {cfg.slope_tol:g} of -1/(2s); prefactor <= sup|F'| N_1", m9))
    out.verdicts.append(Verdict(
        14, all(ok14), "ep <= e1^(1/p) einf^((p-1)/p) (1 + 1e-6), p in {2, 4}", m14))
    return out


def run_relative_error(cfg: ExperimentConfig) -> RunOutput:
    out = RunOutput()
    ok, measured, series = [], {}, []
    for p in cfg.params:
        prof = _profile(cfg, p)
        datum = make_datum(cfg.datum, p, prof)
        R = asy._support_radius(datum)
        rs = asy.relative_error_experiment(datum, prof, R, cfg.times, cfg.half_width,
                                           cfg.similarity_points)
        ok.append(rs.bounded)
        measured[_tag(p)] = {"R": R, "scaled": list(rs.scaled), "constant": rs.constant}
        out.files[f"relative_{_tag(p)}.csv"] = asy.reports_csv(rs.reports)
        series.append((f"s={p.s:g}", list(rs.times), list(rs.scaled)))
    out.files["relative.svg"] = svg.line_plot(series, "Scaled relative error t^(1/2s) rel_sup", "t",
                                              "scaled relative error")
    out.verdicts.append(Verdict(
        10, all(ok), "t^(1/2s) rel_sup: last value <= 1.2 x minimum over the ladder", measured))
    return out


def run_corrector(cfg: ExperimentConfig) -> RunOutput:
    out = RunOutput()
    ok, measured, series = [], {}, []
    for p in cfg.params:
        prof = _profile(cfg, p)
        datum = make_datum(cfg.datum, p, prof)
        cs = asy.corrector_experiment(datum, prof, cfg.times, None, cfg.half_width,
                                      cfg.similarity_points)
        sym = solver.point_masses([_unit(p, cfg.datum.h), _unit(p, -cfg.datum.h)], [1.0, 1.0])
        ss = asy.corrector_experiment(sym, prof, cfg.times, None, cfg.half_width,
                                      cfg.similarity_points)
        gap = max(abs(a - b) for a, b in zip(ss.corrector_resid, ss.plain))
        good = cs.vanishing and gap <= 1e-12
        ok.append(good)
        measured[_tag(p)] = {"first": cs.corrector_resid[0], "last": cs.corrector_resid[-1],
                             "slope": cs.rate.slope if cs.rate else None,
                             "symmetric_gap": gap}
        out.files[f"corrector_{_tag(p)}.csv"] = asy.reports_csv(cs.reports)
        out.files[f"corrector_symmetric_{_tag(p)}.csv"] = asy.reports_csv(ss.reports)
        series.append((f"corrected s={p.s:g}", list(cs.times), list(cs.corrector_resid)))
        series.append((f"plain s={p.s:g}", list(cs.times), list(cs.plain)))
    out.files["corrector.svg"] = svg.line_plot(series, "Corrector residual", "t", "scaled residual")
    out.verdicts.append(Verdict(
        11, all(ok),
        "corrector residual last <= 0.5 first with negative slope; symmetric data: corrected = plain "
        "to 1e-12", measured))
    return out


def run_counterexample(cfg: ExperimentConfig) -> RunOutput:
    out = RunOutput()
    ok, measured, series = [], {}, []
    phi = asy.RateFunction(cfg.phi, cfg.phi_param)
    for p in cfg.params:
        prof = _profile(cfg, p)
        spec = asy.build_counterexample(phi, cfg.K, prof)
        checks = asy.verify_counterexample(spec, prof)
        negative = asy.verify_counterexample(asy.scale_locations(spec, 0.5), prof)
        good = all(c.passed for c in checks) and not all(c.passed for c in negative)
        ok.append(good)
        failed_neg = [c.k for c in negative if not c.passed]
        measured[_tag(p)] = {"phi": phi.name, "passed_k": [c.k for c in checks if c.passed],
                             "negative_control_failed_k": failed_neg}
        rows = [(c.k, c.t, spec.locations[c.k - 1][0], spec.masses[c.k - 1], c.lhs, c.rhs,
                 spec.bounds[c.k - 1], neg.lhs)
                for c, neg in zip(checks, negative)]
        out.files[f"counterexample_{_tag(p)}.csv"] = _csv(
            "k,t_k,x_k,m_k,lhs,rhs,certified_bound,negative_control_lhs", rows)
        ks = [c.k for c in checks]
        series.append((f"lhs s={p.s:g}", ks, [c.lhs for c in checks]))
        series.append((f"k phi(t_k) s={p.s:g}", ks, [c.rhs for c in checks]))
        series.append((f"halved x_k s={p.s:g}", ks, [c.lhs for c in negative]))
    out.files["counterexample.svg"] = svg.line_plot(series, "Counterexample", "k",
                                                    "t^(n/2s)|u(0,t)-P_t(0)|", logx=False)
    out.verdicts.append(Verdict(
        12, all(ok), "passes at every k; negative control (halved x_k) fails", measured))
    return out


def run_fokker_planck(cfg: ExperimentConfig) -> RunOutput:
    out = RunOutput()
    ok, measured, series = [], {}, []
    for p in cfg.params:
        prof = _profile(cfg, p)
        datum = make_datum(cfg.datum, p, prof)
        start = 0 if datum.grid_part is None else 1
        taus = [2.0**j - 1.0 for j in range(start, start + cfg.count)]
        fs = fp.fp_convergence_experiment(datum, prof, taus, cfg.half_width,
                                          cfg.similarity_points, warmup=cfg.datum.warmup)
        target = -1.0 / (2.0 * p.s)
        L = cfg.half_length or 200.0
        N = cfg.grid_points(p.n)
        eig = fp.eigen_residual(prof, 0, N, L)
        ray = fp.rayleigh_quotient(prof, 0, N, L)
        mass_drift = float(np.ptp(fs.masses))
        entry = {"target": target, "eigen_residual": eig, "rayleigh": ray,
                 "mass_spread": mass_drift}
        good = abs(ray - target) <= 0.1 * abs(target) and eig <= 2e-2
        if fs.rate is None:
            good = False
            entry["slope"] = "no slope: errors at floor"
        else:
            entry["slope"] = fs.rate.slope
            good = good and abs(fs.rate.slope - target) <= cfg.slope_tol
        ok.append(good)
        measured[_tag(p)] = entry
        out.files[f"fokker_planck_{_tag(p)}.csv"] = fp.fp_csv(fs)
        series.append((f"s={p.s:g}", list(fs.t), list(fs.l1_error)))
    out.files["fokker_planck.svg"] = svg.line_plot(series, "||v(t) - M F||_1", "t = log(1+tau)",
                                                   "L1 distance", logx=False)
    out.verdicts.append(Verdict(
        13, all(ok),
        f"semi-log slope within {cfg.slope_tol:g} of -1/(2s); eigen residual <= 2e-2; "
        "Rayleigh quotient within 10% of -1/(2s)", measured))
    return out


class ExperimentError(FracHeatError):
    """A module error raised while running ``experiment``."""

    def __init__(self, experiment: str, cause: Exception):
        super().__init__(f"experiment {experiment}: {type(cause).__name__}: {cause}")
        self.experiment = experiment
        self.cause = cause


RUNNERS = {
    "kernel-profile": run_kernel_profile,
    "tail": run_tail,
    "stationarity": run_stationarity,
    "moments": run_moments,
    "cross-check": run_cross_check,
    "rate": run_rate,
    "relative-error": run_relative_error,
    "corrector": run_corrector,
    "counterexample": run_counterexample,
    "fokker-planck": run_fokker_planck,
}


def output_root(flag: str | None, cfg: ExperimentConfig | None = None) -> Path:
    """--out flag, then output.dir from the config, then $FRACHEAT_OUT, then ./fracheat-runs."""
    if flag:
        return Path(flag)
    if cfg is not None and cfg.output_dir:
        return Path(cfg.output_dir)
    return Path(os.environ.get(OUTPUT_ENV) or DEFAULT_OUTPUT)


def _run_dir(root: Path, experiment: str) -> Path:
    stamp = time.strftime("%Y%m%dT%H%M%S")
    base = root / f"{experiment}-{stamp}"
    path, k = base, 1
    while path.exists():
        k += 1
        path = Path(f"{base}-{k}")
    path.mkdir(parents=True)
    return path


def execute(cfg: ExperimentConfig) -> RunOutput:
    """Run without touching the filesystem."""
    try:
        return RUNNERS[cfg.experiment](cfg)
    except (FracHeatError, ValueError) as exc:
        raise ExperimentError(cfg.experiment, exc) from exc


def run_experiment(cfg: ExperimentConfig, out: str | None = None) -> Path:
    """Run ``cfg`` and write its run directory; returns the directory."""
    result = execute(cfg)
    run_dir = _run_dir(output_root(out, cfg), cfg.experiment)
    for name, text in sorted(result.files.items()):
        kernel._atomic_write(run_dir / name, text)
    kernel._atomic_write(run_dir / "config.txt", cfg.text)
    summary = dict(result.summary)
    for v in result.verdicts:
        summary[f"criterion {v.criterion}"] = v.status
    kernel._atomic_write(run_dir / "summary.txt", asy.summary_block(summary))
    verdicts = {"experiment": cfg.experiment,
                "verdicts": [v.as_dict() for v in result.verdicts]}
    kernel._atomic_write(run_dir / "verdicts.json", json.dumps(verdicts, indent=2, sort_keys=True) + "\n")
    return run_dir


def read_verdicts(run_dir) -> list[dict]:
    return json.loads((Path(run_dir) / "verdicts.json").read_text())["verdicts"]
