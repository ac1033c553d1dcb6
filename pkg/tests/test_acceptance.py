"""Acceptance gates, one test per criterion.

Each test records a one-line verdict that is printed in the terminal
summary, then asserts it. Tolerances are fixed here and must not move.
"""
import time

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from slitwave.aperture import Aperture, build_mask, total_open_width
from slitwave.density import DensityProfile, cumulative, median, peak_count, truncate_at_median
from slitwave.experiment import run_scenario, sweep_longitudinal
from slitwave.io import parse_config, write_profile_csv
from slitwave.physics import de_broglie_wavelength, free_gaussian
from slitwave.propagator import propagate

from .conftest import ACCEPTANCE

pytestmark = pytest.mark.slow


def verdict(number, ok, detail):
    ACCEPTANCE[number] = (bool(ok), detail)
    print(f"criterion {number}: {'PASS' if ok else 'FAIL'}  {detail}")
    assert ok, detail


def test_criterion_1_free_evolution(config):
    s, b = config.setup, config.beam
    start = time.perf_counter()
    wide = np.linspace(-20e-3, 20e-3, 8001)
    exact = free_gaussian(s, b, wide, config.t2)
    analytic = propagate(s, b, Aperture.full_line(), config.t1, config.t2, wide).values
    # the same evolution through quadrature over a +-10 sigma opening
    x = np.linspace(-15e-3, 15e-3, 801)
    quad = propagate(s, b, Aperture([(-10 * b.sigma0, 10 * b.sigma0)]),
                     config.t1, config.t2, x).values
    elapsed = time.perf_counter() - start
    ref = np.abs(free_gaussian(s, b, x, config.t2)) ** 2
    err_a = np.max(np.abs(np.abs(analytic) ** 2 - np.abs(exact) ** 2)) / np.max(np.abs(exact) ** 2)
    err_q = np.max(np.abs(np.abs(quad) ** 2 - ref)) / ref.max()
    norm_a = np.trapezoid(np.abs(analytic) ** 2, wide)
    norm_q = np.trapezoid(np.abs(quad) ** 2, x)
    ok = max(err_a, err_q) < 1e-6 and max(abs(norm_a - 1), abs(norm_q - 1)) < 1e-8 and elapsed < 10
    verdict(1, ok, f"|psi|^2 error {err_a:.1e} (closed form), {err_q:.1e} (quadrature) of peak; "
                   f"norms 1{norm_a - 1:+.1e}, 1{norm_q - 1:+.1e}; {elapsed:.1f} s")


def test_criterion_2_oracle_equivalence(config):
    from slitwave.cli import oracle_check

    start = time.perf_counter()
    report = oracle_check(config, points=20)
    elapsed = time.perf_counter() - start
    worst = {label: rel.max() for label, _, _, _, rel in report}
    ok = all(v < 1e-4 for v in worst.values()) and elapsed < 300
    verdict(2, ok, ", ".join(f"{k} {v:.1e}" for k, v in worst.items())
            + f" relative field error; {elapsed:.1f} s")


def test_criterion_3_peak_counts(config):
    start = time.perf_counter()
    usual = run_scenario(config.with_assumption("usual"))
    elapsed = time.perf_counter() - start
    classical = run_scenario(config.with_assumption("classical"))
    frac = config.prominence_fraction
    n_classical = peak_count(classical.reported_profile, frac)
    n_usual = peak_count(usual.reported_profile, frac)
    ok = n_classical == 1 and n_usual == 4 and elapsed < 600
    verdict(3, ok, f"classical {n_classical} (want 1), usual {n_usual} (want 4) at "
                   f"prominence {frac}; 4001-point A+B scan {elapsed:.1f} s")


def test_criterion_4_no_overlap(config):
    # The cross term oscillates on the scale lambda*y/300um ~ 0.014 um, far
    # below the detector grid spacing; integrate on a dedicated grid with
    # about three samples per oscillation.
    y = 0.05
    t = config.time_at(y)
    x = np.linspace(-0.45e-3, 0.45e-3, 180_001)
    s, b, g = config.setup, config.beam, config.geometry
    psi_a = propagate(s, b, build_mask(g, "A-only"), config.t1, t, x, workers=8).values
    psi_b = propagate(s, b, build_mask(g, "B-only"), config.t1, t, x, workers=8).values
    total = np.trapezoid(np.abs(psi_a + psi_b) ** 2, x)
    cross = np.trapezoid(np.abs(np.abs(psi_a + psi_b) ** 2 - np.abs(psi_a) ** 2
                                - np.abs(psi_b) ** 2), x)
    ratio = cross / total
    verdict(4, ratio < 1e-3, f"interference mass / total mass = {ratio:.3g} at y = {y} m "
                             f"(limit 1e-3)")


def test_criterion_5_median_truncation(config):
    results = sweep_longitudinal(config.with_assumption("alternative"), workers=4)
    worst_mass = 0.0
    exact_zero = True
    for r in results:
        worst_mass = max(worst_mass, abs(r.reported_profile.total_mass
                                         / r.born_profile.total_mass - 0.5))
        x = r.reported_profile.grid
        exact_zero &= bool(np.all(r.reported_profile.values[x < r.median_x] == 0.0))
    ok = len(results) == 41 and worst_mass < 1e-6 and exact_zero
    verdict(5, ok, f"{len(results)} planes, max |truncated/full - 1/2| = {worst_mass:.1e}, "
                   f"zero left of median: {exact_zero}")


def test_criterion_6_equal_open_width(config):
    wa = total_open_width(build_mask(config.geometry, "A-only"))
    wb = total_open_width(build_mask(config.geometry, "B-only"))
    ok = wa == pytest.approx(100e-6, rel=1e-12) and wb == pytest.approx(100e-6, rel=1e-12)
    verdict(6, ok, f"A {wa * 1e6!r} um, B {wb * 1e6!r} um (rel tol 1e-12)")


mixture = st.lists(st.tuples(st.floats(-3, 3), st.floats(0.05, 1.0), st.floats(0.01, 1.0)),
                   min_size=1, max_size=5)
_median_failures = []


@settings(max_examples=200, deadline=None, database=None)
@given(mixture, st.floats(-2, 2))
def _median_property(mix, shift):
    x = np.linspace(-10, 10, 4001)

    def profile(offset):
        rho = sum(w * np.exp(-0.5 * ((x - c - offset) / s) ** 2) / s for c, s, w in mix)
        return DensityProfile.from_values(x, rho)

    base = profile(0.0)
    xt = median(cumulative(base))
    cut = truncate_at_median(base, xt)
    halved = abs(cut.total_mass / base.total_mass - 0.5) < 1e-6 and np.all(cut.values[x < xt] == 0)
    moved = abs(median(cumulative(profile(shift))) - (xt + shift)) <= x[1] - x[0]
    if not (halved and moved):
        _median_failures.append((mix, shift))


def test_criterion_7_property_suites(config, setup, beam, tmp_path):
    g = config.geometry
    x = np.linspace(-3e-3, 3e-3, 1201)
    t1, t2 = config.t1, config.t2
    fa = propagate(setup, beam, build_mask(g, "A-only"), t1, t2, x).values
    fb = propagate(setup, beam, build_mask(g, "B-only"), t1, t2, x).values
    fab = propagate(setup, beam, build_mask(g, "A-and-B"), t1, t2, x).values
    linear = np.max(np.abs(fab - fa - fb)) / np.max(np.abs(fab))

    mirror = Aperture([(-200e-6, -100e-6), (100e-6, 200e-6)])
    xs = np.linspace(0, 3e-3, 601)
    grid = np.concatenate([-xs[:0:-1], xs])
    mag = np.abs(propagate(setup, beam, mirror, t1, t2, grid).values)
    parity = np.max(np.abs(mag - mag[::-1]) / np.maximum(mag, mag[::-1]))

    _median_failures.clear()
    _median_property()

    small = parse_config("[detector]\npoints = 401\n[geometry]\ngrating_count = 100\n"
                         "[run]\nassumption = \"alternative\"\n")
    one = write_profile_csv(run_scenario(small, workers=1), tmp_path / "1.csv").read_bytes()
    many = write_profile_csv(run_scenario(small, workers=4), tmp_path / "4.csv").read_bytes()

    ok = linear < 1e-12 and parity < 1e-10 and not _median_failures and one == many
    verdict(7, ok, f"linearity {linear:.1e}, parity {parity:.1e}, median properties "
                   f"{200 - len(_median_failures)}/200, CSV 1 vs 4 workers identical: {one == many}")


def test_criterion_8_de_broglie(config):
    lam_um = de_broglie_wavelength(config.setup) * 1e6
    ok = f"{lam_um:.1e}" == "8.6e-05"
    verdict(8, ok, f"lambda = {lam_um:.4e} um")
