import math

import numpy as np
import pytest

from fracheat import solver, spectral
from fracheat.errors import FracHeatError
from fracheat.kernel import FracParams
from fracheat.solver import GridFunction, InitialDatum

P12 = FracParams(1, 0.5)


def test_axis_and_wavenumbers():
    x = spectral.axis(2.0, 8)
    assert x[0] == -2.0 and x[-1] == pytest.approx(1.5)
    k = spectral.wavenumbers(2.0, 8)
    assert k[1] == pytest.approx(math.pi / 2)


def test_fractional_laplacian_of_cosine():
    L, N = math.pi, 64
    x = spectral.axis(L, N)
    u = np.cos(3 * x)
    for s in (0.25, 0.5, 1.0):
        assert np.allclose(spectral.fractional_laplacian(u, L, s), 3 ** (2 * s) * u, atol=1e-12)


def test_spectral_derivative():
    L, N = math.pi, 64
    x = spectral.axis(L, N)
    assert np.allclose(spectral.derivative(np.sin(2 * x), L, 0), 2 * np.cos(2 * x), atol=1e-12)


def test_grid_function_mass_and_readonly():
    g = solver.sample(P12, 2.0, 256, lambda x: np.ones_like(x))
    assert g.mass == pytest.approx(4.0)
    with pytest.raises(ValueError):
        GridFunction(P12, 2.0, 256, np.ones(10))


def test_initial_datum_validation():
    two_d = solver.point_masses([(0.0, 0.0)], [1.0]).point_masses
    with pytest.raises(ValueError):
        InitialDatum(solver.indicator(P12, 2.0, 64, 0.0, 1.0), two_d)
    g = solver.indicator(P12, 2.0, 256, 0.0, 1.0)
    with pytest.raises(ValueError):
        InitialDatum(g, (solver.PointMass((5.0,), 1.0),))


def test_indicator_mass_exact_on_nodes():
    g = solver.indicator(P12, 2.0, 256, 0.0, 1.0)
    assert g.mass == pytest.approx(1.0, abs=1e-14)


def test_bump_unit_mass():
    g = solver.bump(FracParams(2, 0.5), 4.0, 64, 1.5)
    assert g.mass == pytest.approx(1.0)


def test_spectral_semigroup_and_mass():
    g = solver.bump(P12, 40.0, 1024, 1.0)
    u0 = InitialDatum(g)
    whole = solver.evolve_spectral(u0, 2.0)
    halves = solver.evolve_spectral(solver.evolve_spectral(u0, 1.0), 1.0)
    assert np.max(np.abs(whole.values - halves.values)) <= 1e-12 * np.max(whole.values)
    assert whole.mass == pytest.approx(1.0, abs=1e-13)


def test_spectral_heat_on_gaussian():
    # s = 1: Gaussian of variance v becomes variance v + 2t
    p = FracParams(1, 1.0)
    g = solver.sample(p, 30.0, 1024, lambda x: np.exp(-x * x / 2) / math.sqrt(2 * math.pi))
    u = solver.evolve_spectral(g, 1.5)
    x = u.axis()
    assert np.allclose(u.values, np.exp(-x * x / 8) / math.sqrt(8 * math.pi), atol=1e-13)


def test_spectral_vs_convolution(profile):
    prof = profile(1, 0.5)
    g = solver.bump(P12, 400.0, 4096, 1.0)
    a = solver.evolve_spectral(g, 1.0, pad=2)
    b = solver.evolve_convolution(g, prof, 1.0)
    assert np.max(np.abs(a.values - b.values)) <= 1e-6


def test_convolution_kernel_to_kernel(profile):
    # P_1 * P_1 = P_2
    prof = profile(1, 0.5)
    g = solver.kernel_samples(prof, 200.0, 4096, 1.0)
    u = solver.evolve_convolution(g, prof, 1.0)
    exact = solver.kernel_samples(prof, 200.0, 4096, 2.0).values
    assert np.max(np.abs(u.values - exact)) < 1e-4 * exact.max()


def test_convolution_other_grid_matches_same_grid(profile):
    prof = profile(1, 0.75)
    g = solver.indicator(FracParams(1, 0.75), 2.0, 128, 0.0, 1.0)
    same = solver.evolve_convolution(g, prof, 1.0)
    other = solver.evolve_convolution(g, prof, 1.0, grid=(2.0, 128))
    assert np.allclose(same.values, other.values, atol=1e-14)


def test_point_mass_is_kernel(profile):
    prof = profile(1, 0.5)
    d = solver.point_masses([(1.0,)], [2.0])
    u = solver.evolve_convolution(d, prof, 1.0, grid=(10.0, 64))
    x = u.axis()
    assert np.allclose(u.values, 2.0 / (math.pi * (1 + (x - 1) ** 2)), rtol=1e-8)
    with pytest.raises(ValueError):
        solver.evolve_convolution(d, prof, 1.0)


def test_spectral_point_masses_need_warmup(profile):
    d = solver.point_masses([(0.0,)], [1.0])
    with pytest.raises(ValueError, match="warm-up"):
        solver.evolve_spectral(d, 1.0, profile=profile(1, 0.5), grid=(40.0, 512))
    u = solver.evolve_spectral(d, 2.0, profile=profile(1, 1.0), warmup=1.0, grid=(40.0, 512))
    x = u.axis()
    assert np.allclose(u.values, np.exp(-x * x / 8) / math.sqrt(8 * math.pi), atol=1e-12)


def test_moments():
    m = solver.moments(solver.dipole(P12, 1.5))
    assert m.mass == 0 and m.abs_first_moment == pytest.approx(3.0)
    assert m.first_moment == (3.0,)
    g = solver.indicator(P12, 4.0, 512, 0.0, 1.0)
    assert solver.moments(g).abs_first_moment == pytest.approx(0.5, rel=1e-4)


def test_moments_detect_heavy_tail(profile):
    g = solver.kernel_samples(profile(1, 0.5), 200.0, 4096, 1.0)
    assert not solver.moments(g).finite


def test_lp_norms(profile):
    g = solver.kernel_samples(profile(1, 0.5), 200.0, 4096, 1.0)
    assert solver.lp_norm(g, math.inf) == pytest.approx(1 / math.pi)
    assert solver.lp_norm(g, 1) == pytest.approx(1 - 2 / math.pi * math.atan(1 / 200), rel=1e-6)
    with pytest.raises(ValueError):
        solver.lp_norm(g, 0.5)


def test_aliasing_budget_roundtrip():
    t = solver.max_admissible_time(P12, 1 / math.pi, 400.0, 0.1)
    assert solver.aliasing_estimate(P12, 1 / math.pi, 400.0, t) == pytest.approx(0.1)


def test_grid_io(tmp_path):
    g = solver.bump(FracParams(2, 0.75), 3.0, 32, 1.0).with_values(
        solver.bump(FracParams(2, 0.75), 3.0, 32, 1.0).values, t=2.5)
    path = solver.save_grid(g, tmp_path / "u.bin")
    assert solver.header_path(path).exists()
    back = solver.load_grid(path)
    assert np.array_equal(back.values, g.values)
    assert back.t == 2.5 and back.params == g.params
    csv = solver.save_grid_csv(solver.bump(P12, 2.0, 16), tmp_path / "u.csv")
    assert csv.read_text().splitlines()[0] == "x,u"


def test_time_must_be_positive(profile):
    g = solver.bump(P12, 10.0, 64)
    with pytest.raises(ValueError):
        solver.evolve_spectral(g, 0.0)
    with pytest.raises(ValueError):
        solver.evolve_convolution(g, profile(1, 0.5), -1.0)


def test_errors_share_base():
    from fracheat.errors import AliasingBudgetError, DomainError
    assert issubclass(AliasingBudgetError, FracHeatError)
    assert AliasingBudgetError("x", 3.0).max_time == 3.0
    assert issubclass(DomainError, FracHeatError)
