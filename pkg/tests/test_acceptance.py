"""The fourteen acceptance criteria at their stated tolerances.

Each test records one PASS/FAIL line; the lines are repeated in the
terminal summary under "acceptance criteria".  Run on its own with

    pytest tests/test_acceptance.py -v
"""

import math
import time

import numpy as np
import pytest

from conftest import record_acceptance
from fracheat import asymptotics as asy
from fracheat import experiments
from fracheat import fokker_planck as fp
from fracheat import kernel, solver
from fracheat.kernel import FracParams

ORDERS = (0.25, 0.5, 0.75, 1.0)


def _fmt(d):
    return ", ".join(f"{k}={v:.3g}" if isinstance(v, float) else f"{k}={v}" for k, v in d.items())


def test_c01_kernel_normalization():
    start = time.perf_counter()
    defects = {}
    for n in (1, 2):
        for s in ORDERS:
            prof = kernel.build_profile(FracParams(n, s))
            defects[(n, s)] = abs(prof.mass() - 1.0)
    elapsed = time.perf_counter() - start
    ok = all(d <= (1e-6 if n == 1 else 1e-4) for (n, _), d in defects.items()) and elapsed <= 30
    worst1 = max(d for (n, _), d in defects.items() if n == 1)
    worst2 = max(d for (n, _), d in defects.items() if n == 2)
    record_acceptance(1, ok, f"max |mass-1| n=1 {worst1:.2g} (<=1e-6), n=2 {worst2:.2g} (<=1e-4), "
                             f"{elapsed:.1f} s (<=30 s)")
    assert ok


def test_c02_closed_form_oracles(profile):
    r = np.linspace(0.0, 50.0, 5001)
    errs = {}
    for n in (1, 2):
        for s in (0.5, 1.0):
            exact = kernel.explicit_profile(FracParams(n, s))
            errs[f"n{n}s{s:g}"] = float(np.max(np.abs(profile(n, s)(r) / exact(r) - 1)))
    ok = max(errs.values()) <= 1e-6
    record_acceptance(2, ok, f"sup rel error on r<=50: {_fmt(errs)} (<=1e-6)")
    assert ok


def test_c03_tail_law(profile):
    # "constant within 2%": every tabulated r^{n+2s}F(r) on [100, 200] within 2% of the window mean
    spreads, ok = {}, True
    for s in (0.25, 0.5, 0.75):
        fit = kernel.tail_coefficient(profile(1, s), max_spread=math.inf)
        assert (fit.r_lo, fit.r_hi) == pytest.approx((100.0, 200.0), rel=1e-2)
        spreads[f"s{s:g}"] = fit.spread
        ok &= fit.spread <= 0.02
    c_half = kernel.tail_coefficient(profile(1, 0.5)).c_tail
    rel = abs(c_half * math.pi - 1)
    ok &= rel <= 0.02
    record_acceptance(3, ok, f"max |y/mean - 1| over [100,200]: {_fmt(spreads)} (<=2%); "
                             f"s=1/2 constant {c_half:.6f} vs 1/pi rel {rel:.2g} (<=2%)")
    assert ok


def test_c04_stationary_profile(profile):
    res = {f"s{s:g}": kernel.stationarity_residual(profile(1, s), 4096, 200.0) for s in (0.5, 0.75)}
    gauss = kernel.stationarity_residual(profile(1, 1.0), 4096, 40.0)
    ok = max(res.values()) <= 1e-2 and gauss <= 1e-6
    record_acceptance(4, ok, f"residual/F(0) at N=4096 L=200: {_fmt(res)} (<=1e-2); "
                             f"s=1 at L=40: {gauss:.2g} (<=1e-6)")
    assert ok


def test_c05_monotone_positive(profile):
    checked = 0
    ok = True
    for n in (1, 2):
        for s in ORDERS:
            v = profile(n, s).values
            ok &= bool(np.all(v > 0) and np.all(np.diff(v) <= 0))
            checked += v.size
    record_acceptance(5, ok, f"{checked} tabulated points over 8 profiles positive and nonincreasing")
    assert ok


def test_c06_moment_dichotomy(profile):
    flags = {}
    for s in ORDERS:
        prof = profile(1, s)
        flags[s] = kernel.truncated_moment(prof, 1.0, prof.r_max)[1]
    ok = all(flags[s] == (s <= 0.5) for s in ORDERS)
    record_acceptance(6, ok, "divergent flags " + ", ".join(f"s={s:g}:{flags[s]}" for s in ORDERS)
                      + " (expected True exactly for s<=1/2)")
    assert ok


def test_c07_solver_cross_check(profile):
    p = FracParams(1, 0.5)
    prof = profile(1, 0.5)
    g = solver.bump(p, 400.0, 4096, 1.0)
    u0 = solver.InitialDatum(g)
    t = 1.0
    spec = solver.evolve_spectral(u0, t, pad=2)
    conv = solver.evolve_convolution(u0, prof, t)
    disc = float(np.max(np.abs(spec.values - conv.values)))
    bound = 1e-6 * u0.l1_norm() * p.amplitude_scale(t)
    whole = solver.evolve_spectral(u0, 2.0)
    halves = solver.evolve_spectral(solver.evolve_spectral(u0, 1.0), 1.0)
    semi = float(np.max(np.abs(whole.values - halves.values)) / np.max(np.abs(whole.values)))
    drift = max(abs(solver.evolve_spectral(u0, tt).mass - g.mass) / g.mass
                for tt in asy.dyadic_ladder(1, 6))
    ok = disc <= bound and semi <= 1e-12 and drift <= 1e-12
    record_acceptance(7, ok, f"sup |spectral-convolution| {disc:.2g} (<= {bound:.2g}); "
                             f"semigroup {semi:.2g}, mass drift {drift:.2g} (<=1e-12)")
    assert ok


def test_c08_smoothing_effect(profile):
    p = FracParams(1, 0.5)
    prof = profile(1, 0.5)
    K = experiments.smoothing_constant(p)
    L, N = 400.0, 4096
    catalog = experiments.smoothing_catalog(p, prof, L, N)
    assert len(catalog) == 10
    worst, worst_name = 0.0, ""
    for name, datum in catalog.items():
        for t in asy.dyadic_ladder(1, 6):
            u = solver.evolve_convolution(datum, prof, t, grid=(L, N))
            ratio = solver.lp_norm(u, math.inf) / p.amplitude_scale(t) / datum.l1_norm()
            if ratio > worst:
                worst, worst_name = ratio, name
    ok = worst <= K
    record_acceptance(8, ok, f"max ratio {worst:.6f} ({worst_name}) over 10 data x 6 times "
                             f"<= frozen K {K:.6f}")
    assert ok


def test_c09_rate_theorem(profile):
    start = time.perf_counter()
    slopes, ok = {}, True
    times = asy.dyadic_ladder(1, 7)
    for s in (0.25, 0.5, 0.75):
        prof = profile(1, s)
        p = prof.params
        shifted = solver.point_masses([(0.125,)], [1.0])
        L, N = experiments._compact_grid(p, 0.0, 0.125)
        ind = solver.InitialDatum(solver.indicator(p, L, N, 0.0, 0.125))
        for name, datum in (("shifted", shifted), ("indicator", ind)):
            _, rate = asy.rate_experiment(datum, prof, times)
            slopes[f"{name} s={s:g}"] = rate.slope
            ok &= abs(rate.slope + 1 / (2 * s)) <= 0.05
    elapsed = time.perf_counter() - start
    ok &= elapsed <= 120
    record_acceptance(9, ok, f"slopes {_fmt(slopes)} (target -1/2s +-0.05), {elapsed:.1f} s (<=120 s)")
    assert ok


def test_c10_relative_error(profile):
    results, ok = {}, True
    times = asy.dyadic_ladder(1, 7)
    for s in (0.5, 0.75):
        prof = profile(1, s)
        p = prof.params
        L, N = experiments._compact_grid(p, -1.0, 1.0)
        data = {
            "indicator": solver.InitialDatum(solver.indicator(p, L, N, -1.0, 1.0)),
            "bump": solver.InitialDatum(solver.bump(p, L, N, 1.0)),
            "point@1": solver.point_masses([(1.0,)], [1.0]),
        }
        for name, datum in data.items():
            rs = asy.relative_error_experiment(datum, prof, 1.0, times)
            results[f"{name} s={s:g}"] = rs.scaled[-1] / min(rs.scaled)
            ok &= rs.bounded
    record_acceptance(10, ok, f"final/min of t^(1/2s) rel_sup: {_fmt(results)} (<=1.2)")
    assert ok


def test_c11_corrector(profile):
    ratios, gaps, ok = {}, {}, True
    times = asy.dyadic_ladder(1, 7)
    for s in (0.5, 0.75):
        prof = profile(1, s)
        cs = asy.corrector_experiment(solver.point_masses([(1.0,)], [1.0]), prof, times)
        ratios[f"s={s:g}"] = cs.corrector_resid[-1] / cs.corrector_resid[0]
        ok &= cs.corrector_resid[-1] <= 0.5 * cs.corrector_resid[0]
        sym = asy.corrector_experiment(solver.point_masses([(1.0,), (-1.0,)], [1.0, 1.0]), prof, times)
        gap = max(abs(a - b) for a, b in zip(sym.corrector_resid, sym.plain))
        gaps[f"s={s:g}"] = gap
        ok &= gap <= 1e-12
    record_acceptance(11, ok, f"final/first corrector residual {_fmt(ratios)} (<=0.5); "
                              f"symmetric gap {_fmt(gaps)} (<=1e-12)")
    assert ok


def test_c12_counterexample(profile):
    ok = True
    parts = []
    for s in (0.25, 0.5, 0.75):
        prof = profile(1, s)
        spec = asy.build_counterexample(asy.RateFunction("power", 0.1), 3, prof)
        checks = asy.verify_counterexample(spec, prof)
        neg = asy.verify_counterexample(asy.scale_locations(spec, 0.5), prof)
        passed = all(c.passed for c in checks)
        control_fails = not all(c.passed for c in neg)
        ok &= passed and control_fails
        parts.append(f"s={s:g}: k=1..3 {'pass' if passed else 'FAIL'}, "
                     f"control fails at k={[c.k for c in neg if not c.passed]}")
    record_acceptance(12, ok, "; ".join(parts))
    assert ok


def test_c13_fokker_planck(profile):
    results, ok = {}, True
    for s in (0.5, 0.75):
        prof = profile(1, s)
        target = -1 / (2 * s)
        series = fp.fp_convergence_experiment(solver.point_masses([(0.25,)], [1.0]), prof,
                                              fp.tau_ladder(7), warmup=1.0)
        eig = fp.eigen_residual(prof, 0, 4096, 200.0)
        ray = fp.rayleigh_quotient(prof, 0, 4096, 200.0)
        results[f"slope s={s:g}"] = series.rate.slope
        results[f"eig s={s:g}"] = eig
        results[f"rayleigh s={s:g}"] = ray
        ok &= abs(series.rate.slope - target) <= 0.07 and eig <= 2e-2
        ok &= abs(ray - target) <= 0.1 * abs(target)
    record_acceptance(13, ok, f"{_fmt(results)} (slope +-0.07, eig <=2e-2, Rayleigh within 10%)")
    assert ok


def test_c14_interpolation_inequality(profile):
    worst, count = 0.0, 0
    times = asy.dyadic_ladder(1, 7)
    for s in (0.25, 0.5, 0.75):
        prof = profile(1, s)
        for datum in (solver.point_masses([(0.125,)], [1.0]), solver.dipole(prof.params, 0.5),
                      solver.point_masses([(1.0,), (-2.0,)], [1.0, 0.5])):
            mom = solver.moments(datum)
            for t in times:
                u = asy.evolve(datum, prof, t)
                r = asy.error_report(u, prof, mom.mass, t, relative=False)
                for q, val in r.ep.items():
                    worst = max(worst, val / (r.e1 ** (1 / q) * r.einf ** ((q - 1) / q)))
                    count += 1
    ok = worst <= 1 + 1e-6
    record_acceptance(14, ok, f"max ep / (e1^(1/p) einf^((p-1)/p)) = {worst:.6f} over {count} "
                              "checks (<=1+1e-6)")
    assert ok
