import math

import numpy as np
import pytest
from scipy import special

from fracheat import kernel
from fracheat.errors import DomainError, QuadratureError, TailFitError
from fracheat.kernel import FracParams


def test_params_validation():
    with pytest.raises(ValueError, match=r"order out of \(0,1\]"):
        FracParams(1, 1.5)
    with pytest.raises(ValueError):
        FracParams(1, 0.0)
    with pytest.raises(ValueError):
        FracParams(4, 0.5)
    p = FracParams(2, 0.5)
    assert p.decay_exponent == pytest.approx(3.0)
    assert p.length_scale(4.0) == pytest.approx(4.0)
    assert p.amplitude_scale(2.0) == pytest.approx(0.25)


@pytest.mark.parametrize("n, s, expected", [
    (1, 0.5, 1 / math.pi),
    (1, 1.0, 1 / math.sqrt(4 * math.pi)),
    (2, 1.0, 1 / (4 * math.pi)),
    (2, 0.5, 1 / (2 * math.pi)),
    (3, 0.5, 1 / math.pi**2),
])
def test_peak_value_closed_forms(n, s, expected):
    assert kernel.peak_value(FracParams(n, s)) == pytest.approx(expected, rel=1e-14)


def test_poisson_constant_unit_mass():
    # c_n = Gamma((n+1)/2) / pi^{(n+1)/2}
    assert kernel.poisson_constant(1) == pytest.approx(1 / math.pi)
    assert kernel.poisson_constant(3) == pytest.approx(1 / math.pi**2)


@pytest.mark.parametrize("n", [1, 2, 3])
@pytest.mark.parametrize("s", [0.5, 1.0])
def test_explicit_profile_unit_mass(n, s):
    prof = kernel.explicit_profile(FracParams(n, s))
    assert prof.mass() == pytest.approx(1.0, abs=1e-9)


def test_explicit_profile_rejects_other_orders():
    with pytest.raises(ValueError, match="build_profile"):
        kernel.explicit_profile(FracParams(1, 0.25))


@pytest.mark.parametrize("n, s", [(1, 0.5), (1, 1.0), (2, 0.5), (2, 1.0)])
def test_build_matches_closed_form(profile, n, s):
    built = profile(n, s)
    exact = kernel.explicit_profile(FracParams(n, s))
    r = np.linspace(0, 50, 2001)
    assert np.max(np.abs(built(r) / exact(r) - 1)) < 1e-6
    # derivative through the interpolant
    d_exact = exact.derivative(r[1:])
    err = np.abs(built.derivative(r[1:]) - d_exact) / np.max(np.abs(d_exact))
    assert err.max() < 1e-5


def test_profile_matches_direct_quadrature_at_s_quarter(profile):
    # independent oracle: scipy.integrate.quad of exp(-rho^{1/2}) cos(r rho) / pi
    from scipy import integrate
    prof = profile(1, 0.25)
    for r in (0.3, 2.0, 7.5):
        val, _ = integrate.quad(lambda x: math.exp(-math.sqrt(x)) / math.pi, 0, np.inf,
                                weight="cos", wvar=r)
        assert float(prof(r)) == pytest.approx(val, rel=1e-6)


def test_profile_table_shape(profile):
    for s in (0.25, 0.5, 0.75, 1.0):
        prof = profile(1, s)
        assert np.all(prof.values > 0)
        assert np.all(np.diff(prof.values) <= 0)
        assert prof.radii[0] == 0
        assert prof.values.flags.writeable is False


def test_evaluation_beyond_table_uses_tail(profile):
    prof = profile(1, 0.5)
    r = np.array([400.0, 1000.0, 1e4])
    exact = 1 / (math.pi * (1 + r**2))
    assert np.allclose(prof(r), exact, rtol=1e-4)
    assert np.all(prof.derivative(r) < 0)


def test_gaussian_beyond_table(profile):
    prof = profile(1, 1.0)
    assert prof.r_max == kernel.GAUSSIAN_R_MAX
    assert float(prof(60.0)) == pytest.approx(math.exp(-900) / math.sqrt(4 * math.pi), rel=1e-10)


def test_kernel_at_scaling(profile):
    prof = profile(1, 0.5)
    # P(x, t) = t / (pi (t^2 + x^2)) at s = 1/2
    x = np.array([-3.0, 0.0, 0.5, 10.0])
    for t in (0.5, 1.0, 4.0):
        assert np.allclose(kernel.kernel_at(prof, x, t), t / (math.pi * (t * t + x * x)),
                           rtol=1e-8)
    assert isinstance(kernel.kernel_at(prof, 0.0, 1.0), float)
    with pytest.raises(ValueError):
        kernel.kernel_at(prof, 0.0, 0.0)


def test_kernel_at_vector_points(profile):
    prof = profile(2, 1.0)
    x = np.array([[0.0, 0.0], [1.0, 1.0]])
    t = 2.0
    expected = np.exp(-np.sum(x * x, axis=-1) / (4 * t)) / (4 * math.pi * t)
    assert np.allclose(kernel.kernel_at(prof, x, t), expected, rtol=1e-9)


def test_profile_derivative_quadrature(profile):
    prof = profile(1, 0.5)
    # F'(r) = -2 r / (pi (1 + r^2)^2)
    assert kernel.profile_derivative(prof, 1.0) == pytest.approx(-1 / (2 * math.pi), rel=1e-6)
    assert kernel.profile_derivative(prof, 0.0) == 0.0


def test_bessel_kernel_n2(profile):
    # F(r) at n = 2, s = 1/2 is (2 pi)^{-1} (1 + r^2)^{-3/2}
    prof = profile(2, 0.5)
    r = np.array([0.0, 1.0, 5.0])
    assert np.allclose(prof(r), (1 + r**2) ** -1.5 / (2 * math.pi), rtol=1e-7)
    assert special.j0(0.0) == 1.0


def test_build_rejects_tolerance_out_of_range():
    with pytest.raises(ValueError):
        kernel.build_profile(FracParams(1, 0.5), quad_tol=1e-3)
    with pytest.raises(ValueError):
        kernel.build_profile(FracParams(1, 0.5), quad_tol=1e-14)


def test_quadrature_error_reports_achieved():
    err = QuadratureError("too coarse", 1e-6)
    assert err.achieved == 1e-6


def test_tail_coefficient(profile):
    fit = kernel.tail_coefficient(profile(1, 0.5))
    assert fit.c_tail == pytest.approx(1 / math.pi, rel=0.02)
    assert fit.spread < 0.02
    with pytest.raises(ValueError):
        kernel.tail_coefficient(profile(1, 1.0))
    with pytest.raises(TailFitError):
        kernel.tail_coefficient(profile(1, 0.25), max_spread=1e-6)


def test_tail_expansion_leading_term_matches_analytic_constant(profile):
    # the windowed mean carries the r^{-2s} correction; the fitted a_0 does not
    from fracheat.config import tail_constant
    for s in (0.25, 0.5, 0.75):
        prof = profile(1, s)
        assert prof.tail_poly[0] == pytest.approx(tail_constant(FracParams(1, s)), rel=1e-4)


def test_stationarity_residual(profile):
    assert kernel.stationarity_residual(profile(1, 0.5), 4096, 200.0) < 1e-2
    assert kernel.stationarity_residual(profile(1, 1.0), 4096, 40.0) < 1e-6
    with pytest.raises(DomainError):
        kernel.stationarity_residual(profile(1, 0.5), 512, 5.0)


def test_truncated_moment(profile):
    # p = 0 at s = 1/2: (2/pi) arctan R
    val, div = kernel.truncated_moment(profile(1, 0.5), 0.0, 100.0)
    assert val == pytest.approx(2 / math.pi * math.atan(100.0), rel=1e-8)
    assert not div
    assert kernel.truncated_moment(profile(1, 0.5), 1.0, 200.0)[1]
    assert kernel.truncated_moment(profile(1, 0.25), 1.0, 200.0)[1]
    assert not kernel.truncated_moment(profile(1, 0.75), 1.0, 200.0)[1]
    assert not kernel.truncated_moment(profile(1, 1.0), 1.0, 50.0)[1]


def test_profile_roundtrip(tmp_path, profile):
    prof = profile(1, 0.75)
    path = kernel.save_profile(prof, tmp_path / "p.csv")
    assert kernel.meta_path(path).exists()
    back = kernel.load_profile(path)
    assert back.params == prof.params
    r = np.array([0.0, 0.37, 3.0, 150.0, 500.0])
    assert np.array_equal(back(r), prof(r))
    assert back.c_tail == prof.c_tail


def test_profile_mass_n2(profile):
    for s in (0.25, 0.5, 0.75, 1.0):
        assert abs(profile(2, s).mass() - 1) < 1e-4
