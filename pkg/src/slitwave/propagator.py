"""Slit-restricted free propagation with the exact quadratic-phase kernel.

Behind the mask the field at time ``t`` is

    psi(x, t) = sum over open intervals of  int K(x, t; xf, t1) psi(xf, t1) dxf
    K         = (m / (2 i pi hbar dt))^(1/2) exp(i a (x - xf)^2),  a = m / (2 hbar dt)

Two independent routes evaluate it:

* :func:`propagate` splits every interval into pieces on which the incident
  amplitude is a low-degree polynomial, then integrates
  ``exp(i a u^2) u^n`` exactly through the Faddeeva function. The cost does
  not depend on how many oscillations the kernel makes across a piece.
* :func:`propagate_oracle` samples the integrand with a midpoint rule fine
  enough to resolve every oscillation. It is slow and only meant for
  cross-checks.
"""
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial import polynomial as P
from scipy.special import wofz

from .errors import NumericalError
from .physics import free_gaussian

__all__ = [
    "KernelParams",
    "ComplexField",
    "AmplitudePiece",
    "kernel",
    "fit_amplitude",
    "segment_integral",
    "propagate",
    "propagate_oracle",
]

_EIPI4 = np.exp(0.25j * np.pi)
_EPS = np.finfo(float).eps

DEFAULT_FIT_RTOL = 1e-8
DEFAULT_MAX_DEGREE = 2
DEFAULT_PHASE_STEP = 0.2
DEFAULT_SAMPLE_BUDGET = 20_000_000
# estimated relative rounding error above which a piece is re-done by sampling
DEFAULT_FALLBACK_RTOL = 1e-10
_MAX_PIECES = 1_000_000
_SLOW_PHASE = 1.0
_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(20)
_CHUNK = 1 << 20


@dataclass(frozen=True)
class KernelParams:
    """Free-particle kernel between times ``t1`` and ``t`` (seconds)."""

    a: float
    prefactor: complex
    t1: float
    t: float

    @classmethod
    def from_setup(cls, setup, t1, t):
        dt = t - t1
        if not dt > 0:
            raise ValueError(f"propagation needs t > t1, got t1={t1!r}, t={t!r}")
        a = setup.mass / (2.0 * setup.hbar * dt)
        prefactor = complex(np.sqrt(setup.mass / (2j * np.pi * setup.hbar * dt)))
        return cls(a=a, prefactor=prefactor, t1=t1, t=t)

    @property
    def dt(self):
        return self.t - self.t1


@dataclass(frozen=True, eq=False)
class ComplexField:
    """Sampled complex wavefunction on a transverse grid at one time."""

    grid: np.ndarray
    values: np.ndarray
    time: float
    diagnostics: dict = field(default_factory=dict)

    def __post_init__(self):
        grid = np.array(self.grid, dtype=float)
        values = np.array(self.values, dtype=complex)
        if grid.ndim != 1 or grid.shape != values.shape or grid.size < 2:
            raise ValueError("grid and values must be 1-D with equal length >= 2")
        if np.any(np.diff(grid) <= 0):
            raise ValueError("grid must be strictly increasing")
        if not np.all(np.isfinite(values)):
            raise NumericalError("field contains non-finite values")
        grid.flags.writeable = False
        values.flags.writeable = False
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "values", values)

    def __add__(self, other):
        if not (np.array_equal(self.grid, other.grid) and self.time == other.time):
            raise ValueError("fields must share grid and time to be added")
        return ComplexField(self.grid, self.values + other.values, self.time)


@dataclass(frozen=True)
class AmplitudePiece:
    """Polynomial model of the incident amplitude on ``[lower, upper]``.

    ``coeffs`` are ascending powers of ``xf - mid``.
    """

    lower: float
    upper: float
    coeffs: np.ndarray
    fit_error: float

    @property
    def mid(self):
        return 0.5 * (self.lower + self.upper)

    @property
    def half_width(self):
        return 0.5 * (self.upper - self.lower)


def kernel(params, x, x_f):
    """Free propagator K(x, t; x_f, t1) in m^-1."""
    u = np.asarray(x, dtype=float) - np.asarray(x_f, dtype=float)
    return params.prefactor * np.exp(1j * params.a * u * u)


def fit_amplitude(func, lower, upper, degree=DEFAULT_MAX_DEGREE, rtol=DEFAULT_FIT_RTOL,
                  max_pieces=_MAX_PIECES):
    """Split ``[lower, upper]`` into pieces where ``func`` is a polynomial.

    Each piece interpolates ``func`` at Chebyshev nodes and is accepted when
    the interpolant matches ``func`` to ``rtol`` (relative to the largest
    sampled magnitude on the piece) at check points between the nodes.
    Pieces are bisected until accepted; the result is ordered left to right.
    """
    k = np.arange(degree + 1)
    nodes = -np.cos((2 * k + 1) * np.pi / (2 * degree + 2))
    checks = np.linspace(-1.0, 1.0, 4 * degree + 5)
    pieces = []
    stack = [(lower, upper)]
    while stack:
        lo, hi = stack.pop()
        mid, half = 0.5 * (lo + hi), 0.5 * (hi - lo)
        coeffs = P.polyfit(half * nodes, func(mid + half * nodes), degree)
        truth = func(mid + half * checks)
        scale = np.max(np.abs(truth))
        err = np.max(np.abs(P.polyval(half * checks, coeffs) - truth))
        rel = err / scale if scale > 0 else 0.0
        if rel <= rtol:
            pieces.append(AmplitudePiece(lo, hi, coeffs, float(rel)))
            continue
        if len(pieces) + len(stack) + 2 > max_pieces or not lo < mid < hi:
            raise NumericalError(
                f"amplitude not representable to rtol={rtol:g} with degree {degree}",
                {"worst_interval": (lo, hi), "fit_error": rel},
            )
        stack.append((mid, hi))
        stack.append((lo, mid))
    return pieces


def _quadratic_phase_moments(a, half, d, degree):
    """Moments  N_n(d) = int_{-half}^{half} v^n exp(i a (v - d)^2) dv.

    Returns the moments (shape ``(degree + 1, d.size)``) and a condition
    estimate for the zeroth moment: the magnitude of the summed Faddeeva
    terms over the magnitude of their combination.
    """
    sa = math.sqrt(a)
    u0 = -half - d
    u1 = half - d
    e0 = np.exp(1j * a * u0 * u0)
    e1 = np.exp(1j * a * u1 * u1)
    # exp(i a u^2) w(sqrt(a)|u| e^{i pi/4}) equals erfc(sqrt(-i a) u) for u >= 0
    g0 = e0 * wofz(sa * np.abs(u0) * _EIPI4)
    g1 = e1 * wofz(sa * np.abs(u1) * _EIPI4)
    right = u0 >= 0
    left = u1 < 0
    straddle = ~(right | left)
    bracket = np.where(right, g0 - g1, np.where(left, g1 - g0, 2.0 - g0 - g1))
    scale = np.abs(g0) + np.abs(g1) + np.where(straddle, 2.0, 0.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        cond = scale / np.abs(bracket)
    cond = np.where(np.isfinite(cond), cond, np.inf)

    moments = np.empty((degree + 1,) + np.shape(d), dtype=complex)
    moments[0] = (math.sqrt(math.pi) * _EIPI4 / (2.0 * sa)) * bracket
    inv = 1.0 / (2j * a)
    for n in range(degree):
        boundary = half**n * e1 - (-half) ** n * e0
        nxt = inv * boundary + d * moments[n]
        if n > 0:
            nxt -= n * inv * moments[n - 1]
        moments[n + 1] = nxt
    return moments, cond


def _midpoint(integrand, lower, upper, n):
    """Composite midpoint sum with ``n`` cells, accumulated in fixed chunks."""
    h = (upper - lower) / n
    total = 0j
    for start in range(0, n, _CHUNK):
        j = np.arange(start, min(n, start + _CHUNK))
        total += np.sum(integrand(lower + (j + 0.5) * h))
    return total * h


def _sampled_segment(integrand, a, lower, upper, x, max_phase_step, budget):
    """Midpoint sums at two resolutions and their Richardson combination.

    Returns ``(value, error_estimate, samples_used)``.
    """
    reach = max(abs(x - lower), abs(x - upper))
    phase_rate = 2.0 * a * reach
    width = upper - lower
    n = max(1, math.ceil(width * phase_rate / max_phase_step))
    if 3 * n > budget:
        raise NumericalError(
            f"oracle needs {3 * n} samples on interval {(lower, upper)} at x={x:.6g}, "
            f"budget is {budget}",
            {"required_samples": 3 * n, "worst_interval": (lower, upper), "x": x},
        )
    coarse = _midpoint(integrand, lower, upper, n)
    fine = _midpoint(integrand, lower, upper, 2 * n)
    return (4.0 * fine - coarse) / 3.0, abs(fine - coarse) / 3.0, 3 * n


def segment_integral(params, amplitude_poly, interval, x, diagnostics=None,
                     fallback_rtol=DEFAULT_FALLBACK_RTOL, max_phase_step=DEFAULT_PHASE_STEP,
                     sample_budget=DEFAULT_SAMPLE_BUDGET):
    """Integrate ``exp(i a (x - xf)^2) * poly(xf - mid)`` over one interval.

    Where the kernel phase swings by more than a radian across the interval
    the integral is assembled from exact quadratic-phase moments; where it
    barely moves, 20-point Gauss-Legendre is used instead. Points whose
    moment evaluation is ill-conditioned beyond ``fallback_rtol`` are redone
    by oscillation-resolving sampling and counted in ``diagnostics``.

    Parameters
    ----------
    params : KernelParams
        Supplies the phase coefficient ``a``; the prefactor is not applied.
    amplitude_poly : array_like
        Ascending polynomial coefficients in ``xf - mid`` where ``mid`` is the
        interval midpoint.
    interval : (float, float)
        Bounded integration interval, meters.
    x : float or array_like
        Detector positions, meters.
    diagnostics : dict, optional
        If given, ``'fallbacks'`` is incremented by the number of detector
        points that had to be re-done by sampling.

    Returns
    -------
    complex or numpy.ndarray
    """
    lower, upper = map(float, interval)
    if not (math.isfinite(lower) and math.isfinite(upper) and lower < upper):
        raise ValueError(f"interval must be bounded and non-degenerate, got {interval!r}")
    coeffs = np.asarray(amplitude_poly, dtype=complex)
    scalar = np.ndim(x) == 0
    x = np.atleast_1d(np.asarray(x, dtype=float))
    mid, half = 0.5 * (lower + upper), 0.5 * (upper - lower)
    a = params.a
    d = x - mid
    out = np.zeros(x.shape, dtype=complex)

    # below ~1 rad of phase variation the moment recurrence loses digits and
    # the integrand is smooth, so Gauss-Legendre is exact to rounding there
    slow = a * half * (half + 2.0 * np.abs(d)) <= _SLOW_PHASE
    if np.any(slow):
        ds = d[slow]
        acc = np.zeros(ds.shape, dtype=complex)
        for node, weight in zip(_GL_NODES, _GL_WEIGHTS):
            v = half * node
            acc += weight * P.polyval(v, coeffs) * np.exp(1j * a * (v - ds) ** 2)
        out[slow] = half * acc

    fast = np.flatnonzero(~slow)
    bad = np.empty(0, dtype=int)
    if fast.size:
        moments, cond = _quadratic_phase_moments(a, half, d[fast], len(coeffs) - 1)
        # explicit sum, not BLAS: per-point results must not depend on array length
        acc = np.zeros(fast.shape, dtype=complex)
        for c, moment in zip(coeffs, moments):
            acc += c * moment
        out[fast] = acc
        bad = fast[cond * _EPS > fallback_rtol]
    for i in bad:
        xi = x[i]

        def integrand(xf, xi=xi):
            return np.exp(1j * a * (xi - xf) ** 2) * P.polyval(xf - mid, coeffs)

        out[i] = _sampled_segment(integrand, a, lower, upper, xi, max_phase_step, sample_budget)[0]
    if diagnostics is not None and len(bad):
        diagnostics["fallbacks"] = diagnostics.get("fallbacks", 0) + len(bad)
        diagnostics.setdefault("fallback_intervals", []).append((lower, upper))
    return out[0] if scalar else out


def _check_times(t1, t):
    if not t1 >= 0:
        raise ValueError(f"t1 must be >= 0, got {t1!r}")
    if not t > t1:
        raise ValueError(f"propagation needs t > t1, got t1={t1!r}, t={t!r}")


def _split(x, workers):
    return [c for c in np.array_split(x, max(1, workers)) if c.size]


def propagate(setup, beam, aperture, t1, t, detector_grid, degree=DEFAULT_MAX_DEGREE,
              fit_rtol=DEFAULT_FIT_RTOL, fallback_rtol=DEFAULT_FALLBACK_RTOL, workers=1):
    """Field at time ``t`` behind ``aperture`` illuminated by the free packet.

    The incident field at ``t1`` is the free Gaussian; it is cut to the open
    intervals and carried to ``t`` in one step with the exact kernel. The
    unbounded aperture short-circuits to the free Gaussian at ``t``.

    Parameters
    ----------
    setup : PhysicalSetup
    beam : BeamSpec
    aperture : Aperture
    t1, t : float
        Mask time and observation time, seconds since the source.
    detector_grid : array_like
        Strictly increasing detector positions, meters.
    degree : int
        Polynomial degree used to model the incident amplitude.
    fit_rtol : float
        Relative accuracy demanded of the amplitude model on each piece.
    workers : int
        Threads sharing the detector points. Each point is computed by the
        same elementwise sequence of operations, so the output does not
        depend on ``workers``.

    Returns
    -------
    ComplexField
    """
    _check_times(t1, t)
    x = np.asarray(detector_grid, dtype=float)
    if aperture.unbounded:
        return ComplexField(x, free_gaussian(setup, beam, x, t), t, {"method": "analytic"})
    params = KernelParams.from_setup(setup, t1, t)

    def incident(xf):
        return free_gaussian(setup, beam, xf, t1)

    pieces = []
    for lo, hi in aperture.intervals:
        pieces.extend(fit_amplitude(incident, lo, hi, degree=degree, rtol=fit_rtol))

    def run(chunk):
        diag = {}
        acc = np.zeros(chunk.shape, dtype=complex)
        for piece in pieces:
            acc += segment_integral(params, piece.coeffs, (piece.lower, piece.upper), chunk,
                                    diagnostics=diag, fallback_rtol=fallback_rtol)
        return params.prefactor * acc, diag

    chunks = _split(x, workers)
    if len(chunks) > 1:
        with ThreadPoolExecutor(max_workers=len(chunks)) as pool:
            parts = list(pool.map(run, chunks))
    else:
        parts = [run(c) for c in chunks] or [(np.zeros(0, complex), {})]
    values = np.concatenate([p[0] for p in parts])
    diagnostics = {
        "method": "segment",
        "pieces": len(pieces),
        "max_fit_error": float(max((p.fit_error for p in pieces), default=0.0)),
        "fallbacks": sum(p[1].get("fallbacks", 0) for p in parts),
    }
    return ComplexField(x, values, t, diagnostics)


def propagate_oracle(setup, beam, aperture, t1, t, detector_grid,
                     max_phase_step=DEFAULT_PHASE_STEP, sample_budget=DEFAULT_SAMPLE_BUDGET,
                     extrapolate=True):
    """Brute-force reference for :func:`propagate` by oscillation-resolving sampling.

    Every interval is cut into cells small enough that the kernel phase moves
    by at most ``max_phase_step`` radians per cell. With ``extrapolate`` the
    midpoint sums at that step and at half of it are combined by one
    Richardson step (the plain midpoint sum of ``exp(i k x)`` is off by a
    factor ``1 / sinc(k h / 2)``, about 1.7e-3 at 0.2 rad).

    The returned field carries ``diagnostics['error_estimate']`` (per
    detector point) and ``diagnostics['samples']``.
    """
    _check_times(t1, t)
    if not 0 < max_phase_step <= 1:
        raise ValueError(f"max_phase_step must lie in (0, 1], got {max_phase_step!r}")
    if aperture.unbounded:
        raise ValueError("the oracle needs a bounded aperture")
    x = np.asarray(detector_grid, dtype=float)
    params = KernelParams.from_setup(setup, t1, t)
    a = params.a
    values = np.zeros(x.shape, dtype=complex)
    errors = np.zeros(x.shape)
    samples = 0
    for i, xi in enumerate(x):

        def integrand(xf, xi=xi):
            return np.exp(1j * a * (xi - xf) ** 2) * free_gaussian(setup, beam, xf, t1)

        acc, err = 0j, 0.0
        for lo, hi in aperture.intervals:
            if extrapolate:
                v, e, used = _sampled_segment(integrand, a, lo, hi, xi, max_phase_step,
                                              sample_budget)
            else:
                n = max(1, math.ceil((hi - lo) * 2 * a * max(abs(xi - lo), abs(xi - hi))
                                     / max_phase_step))
                if n > sample_budget:
                    raise NumericalError(
                        f"oracle needs {n} samples on interval {(lo, hi)}, budget is {sample_budget}",
                        {"required_samples": n, "worst_interval": (lo, hi), "x": float(xi)},
                    )
                v, e, used = _midpoint(integrand, lo, hi, n), math.nan, n
            acc += v
            err += e
            samples += used
        values[i] = params.prefactor * acc
        errors[i] = abs(params.prefactor) * err
    return ComplexField(x, values, t, {"method": "oracle", "error_estimate": errors,
                                       "samples": samples, "max_phase_step": max_phase_step})
