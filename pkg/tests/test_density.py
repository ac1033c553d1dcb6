import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.special import erf

from slitwave import ComplexField, DensityProfile, NumericalError, WindowError, ZeroMassError
from slitwave.density import (
    born_density,
    cumulative,
    median,
    peak_count,
    smooth,
    smooth_velocity_dispersion,
    truncate_at_median,
)
from slitwave.physics import free_gaussian


def gaussian_profile(x, centers, widths, weights):
    rho = sum(w * np.exp(-0.5 * ((x - c) / s) ** 2) / (s * np.sqrt(2 * np.pi))
              for c, s, w in zip(centers, widths, weights))
    return DensityProfile.from_values(x, rho)


def test_born_density_of_free_gaussian(setup, beam):
    x = np.linspace(-12 * beam.sigma0, 12 * beam.sigma0, 20001)
    rho = born_density(ComplexField(x, free_gaussian(setup, beam, x, 0.0), 0.0))
    assert rho.total_mass == pytest.approx(1.0, abs=1e-8)


def test_born_density_phase_invariant(setup, beam):
    x = np.linspace(-5e-3, 5e-3, 101)
    psi = free_gaussian(setup, beam, x, 1e-2)
    plain = born_density(ComplexField(x, psi, 0.0)).values
    rotated = born_density(ComplexField(x, np.exp(0.7j) * psi, 0.0)).values
    np.testing.assert_allclose(rotated, plain, rtol=1e-14)


def test_zero_field_has_no_cumulative():
    x = np.linspace(0, 1, 11)
    rho = born_density(ComplexField(x, np.zeros(11), 0.0))
    assert rho.total_mass == 0
    with pytest.raises(ZeroMassError):
        cumulative(rho)


def test_cumulative_symmetric():
    x = np.linspace(-10, 10, 2001)
    cum = cumulative(gaussian_profile(x, [0.0], [1.0], [1.0]))
    assert cum.values[0] == 0.0 and cum.values[-1] == 1.0
    assert np.all(np.diff(cum.values) >= 0)
    assert cum.values[1000] == pytest.approx(0.5, abs=1e-9)


def test_cumulative_uniform():
    x = np.linspace(0, 1, 101)
    rho = DensityProfile(x, np.ones(101), 0.0, 1.0)
    cum = cumulative(rho, tail_tolerance=2.0)
    np.testing.assert_allclose(cum.values, x, atol=1e-15)
    assert median(cum) == pytest.approx(0.5, abs=1e-15)


def test_cumulative_two_bumps_against_erf():
    # two narrow equal Gaussians at +-b; F from the error function
    b, s = 2.0, 0.05
    x = np.linspace(-4, 4, 16001)
    cum = cumulative(gaussian_profile(x, [-b, b], [s, s], [1.0, 1.0]))
    exact = 0.25 * (2 + erf((x + b) / (s * np.sqrt(2))) + erf((x - b) / (s * np.sqrt(2))))
    # trapezoid error ~ dx^2 max|f'|/12 ~ 2e-6
    np.testing.assert_allclose(cum.values, exact, atol=5e-6)
    assert cum.values[8000] == pytest.approx(0.5, abs=1e-12)
    assert -b < median(cum) < b


def test_median_in_zero_gap_is_midpoint():
    x = np.linspace(0, 10, 1001)
    rho = np.where((x < 3) | (x > 6), 1.0, 0.0)
    rho[(x >= 3) & (x <= 6)] = 0.0
    rho = rho + rho[::-1]
    cum = cumulative(DensityProfile.from_values(x, rho), tail_tolerance=10.0)
    assert median(cum) == pytest.approx(5.0, abs=1e-12)


def test_window_too_small():
    x = np.linspace(-1, 1, 201)
    with pytest.raises(WindowError, match="edge/peak"):
        cumulative(gaussian_profile(x, [0.0], [1.0], [1.0]))


def test_truncate_symmetric_gaussian():
    x = np.linspace(-10, 10, 2001)
    rho = gaussian_profile(x, [0.0], [1.0], [1.0])
    cut = truncate_at_median(rho, 0.0)
    assert cut.total_mass == pytest.approx(0.5 * rho.total_mass, rel=1e-6)
    assert np.all(cut.values[x < 0] == 0)
    np.testing.assert_array_equal(cut.values[x >= 0], rho.values[x >= 0])


def test_truncate_outside_window():
    x = np.linspace(0, 1, 11)
    with pytest.raises(ValueError):
        truncate_at_median(DensityProfile.from_values(x, np.ones(11)), 2.0)


mixtures = st.lists(
    st.tuples(st.floats(-3, 3), st.floats(0.05, 1.0), st.floats(0.01, 1.0)),
    min_size=1, max_size=5,
)


@settings(max_examples=200, deadline=None)
@given(mixtures, st.floats(-2, 2))
def test_median_halves_mass_and_translates(mix, shift):
    x = np.linspace(-10, 10, 4001)
    centers, widths, weights = zip(*mix)
    rho = gaussian_profile(x, centers, widths, weights)
    xt = median(cumulative(rho))
    cut = truncate_at_median(rho, xt)
    assert cut.total_mass == pytest.approx(0.5 * rho.total_mass, rel=1e-6)
    assert np.all(cut.values[x < xt] == 0)
    moved = gaussian_profile(x, [c + shift for c in centers], widths, weights)
    dx = x[1] - x[0]
    assert abs(median(cumulative(moved)) - (xt + shift)) <= dx


@given(st.floats(1e-3, 1e3))
def test_cumulative_scale_invariant(c):
    x = np.linspace(-10, 10, 801)
    rho = gaussian_profile(x, [0.5, -1.0], [0.7, 0.3], [1.0, 2.0])
    scaled = DensityProfile.from_values(x, c * rho.values)
    np.testing.assert_allclose(cumulative(scaled).values, cumulative(rho).values, atol=1e-14)


def test_smoothing_identity_and_mass():
    x = np.linspace(-10, 10, 2001)
    rho = gaussian_profile(x, [-2.0, 1.0], [0.1, 0.3], [1.0, 0.5])
    assert smooth_velocity_dispersion(rho, 0.0, 1.0) is rho
    blurred = smooth_velocity_dispersion(rho, 0.5, 1.0)
    assert blurred.total_mass == pytest.approx(rho.total_mass, rel=1e-6)
    assert np.trapezoid(blurred.values, x) == pytest.approx(rho.total_mass, rel=1e-6)
    # convolving two Gaussians adds variances
    single = gaussian_profile(x, [0.0], [0.3], [1.0])
    np.testing.assert_allclose(smooth(single, 0.4).values,
                               gaussian_profile(x, [0.0], [0.5], [1.0]).values, atol=1e-6)


def test_smoothing_limits():
    x = np.linspace(0, 1, 101)
    rho = DensityProfile.from_values(x, np.ones(101))
    with pytest.raises(NumericalError):
        smooth(rho, 0.3)
    with pytest.raises(ValueError):
        smooth_velocity_dispersion(rho, -1.0, 1.0)


def test_peak_count_basic():
    x = np.linspace(-20, 20, 4001)
    assert peak_count(gaussian_profile(x, [0.0], [1.0], [1.0])) == 1
    assert peak_count(gaussian_profile(x, [-4.0, 4.0], [1.0, 1.0], [1.0, 1.0])) == 2
    # a bump below the prominence threshold is ignored
    assert peak_count(gaussian_profile(x, [-4.0, 4.0], [1.0, 1.0], [1.0, 0.05])) == 1


def test_peak_count_plateau_counts_once():
    x = np.linspace(0, 10, 101)
    rho = np.clip(3 - np.abs(x - 5), 0, 1)
    assert peak_count(DensityProfile.from_values(x, rho)) == 1


def test_peak_count_resolution_merges_ripples():
    x = np.linspace(-10, 10, 4001)
    rippled = gaussian_profile(x, [0.0], [2.0], [1.0])
    rippled = DensityProfile.from_values(x, rippled.values * (1 + 0.3 * np.cos(20 * x)))
    assert peak_count(rippled) > 1
    assert peak_count(rippled, resolution=0.5) == 1
