"""Scenario orchestration: geometry, masks, propagation and per-assumption output.

Three readings of the same setup are supported:

``usual``
    Wave and atoms pass both A and B; the detector shows |psi_A + psi_B|^2.
``classical``
    Neither wave nor atoms pass the grating; the detector shows |psi_A|^2.
``alternative``
    The wave passes both, the atoms only A; the detector shows
    |psi_A + psi_B|^2 cut at its running median.

The longitudinal coordinate is classical: a plane ``y`` meters behind the
slits is reached at ``t = t1 + y / v_y``.
"""
import hashlib
import time
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from . import __version__
from .aperture import SlitGeometry, build_mask
from .density import (
    DensityProfile,
    born_density,
    cumulative,
    edge_ratio,
    median,
    smooth_velocity_dispersion,
    truncate_at_median,
)
from .errors import ConfigError, NumericalError
from .physics import BeamSpec, PhysicalSetup
from .propagator import ComplexField, propagate

__all__ = [
    "ASSUMPTIONS",
    "GEOMETRY_CONVENTION",
    "ExperimentConfig",
    "ScenarioResult",
    "detector_grid",
    "run_scenario",
    "run_all",
    "sweep_longitudinal",
    "sweep_positions",
]

ASSUMPTIONS = ("usual", "classical", "alternative")
GEOMETRY_CONVENTION = "slit A on +x, grating B on -x, beam centre at x=0 unless configured"


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything that determines a run, in SI units.

    ``document`` is the human-unit key/value form the config was parsed
    from (or will be written as); it is what gets hashed into provenance.
    """

    setup: PhysicalSetup
    beam: BeamSpec
    geometry: SlitGeometry = field(default_factory=SlitGeometry)
    d1: float = 1.0
    d2: float = 2.0
    detector_halfwidth: float = 4e-3
    detector_points: int = 4001
    assumption: str = "usual"
    fit_rtol: float = 1e-8
    max_degree: int = 2
    oracle_phase_step: float = 0.2
    oracle_sample_budget: int = 20_000_000
    oracle_points: int = 20
    prominence_fraction: float = 0.1
    tail_tolerance: float = 1e-2
    delta_vx: float = 0.0
    sweep_start: float = 0.05
    sweep_stop: float = 2.0
    sweep_count: int = 41
    beam_width: Optional[float] = None
    width_convention: str = "1/e2"
    document: Optional[dict] = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        if not (self.d1 > 0 and self.d2 > 0):
            raise ConfigError("d1 and d2 must be positive", key="geometry.d1_m/d2_m")
        if self.detector_points < 101 or self.detector_points % 2 == 0:
            raise ConfigError(
                f"detector_points must be odd and >= 101, got {self.detector_points}",
                key="detector.points",
            )
        if not self.detector_halfwidth > 0:
            raise ConfigError("detector half-width must be positive", key="detector.halfwidth_mm")
        if self.assumption not in ASSUMPTIONS:
            raise ConfigError(
                f"assumption must be one of {ASSUMPTIONS}, got {self.assumption!r}",
                key="run.assumption",
            )
        if not 0 < self.prominence_fraction < 1:
            raise ConfigError("prominence_fraction must lie in (0, 1)",
                              key="detector.prominence_fraction")
        if not self.tail_tolerance > 0:
            raise ConfigError("tail_tolerance must be positive", key="detector.tail_tolerance")
        if self.delta_vx < 0:
            raise ConfigError("delta_vx must be >= 0", key="detector.delta_vx_mm_per_s")
        if not (0 < self.sweep_start <= self.sweep_stop <= self.d2) or self.sweep_count < 1:
            raise ConfigError("sweep must satisfy 0 < start <= stop <= d2 with count >= 1",
                              key="run.sweep_start_m")
        self.setup.check_flight_time(self.d1 + self.d2)

    @property
    def t1(self):
        return self.d1 / self.setup.v_y

    @property
    def t2(self):
        return self.t1 + self.d2 / self.setup.v_y

    def time_at(self, y):
        """Time at which the beam reaches ``y`` meters behind the slits."""
        return self.t1 + y / self.setup.v_y

    def with_assumption(self, assumption):
        return replace(self, assumption=assumption, document=_doc_with(self.document, assumption))


def _doc_with(document, assumption):
    if document is None:
        return None
    doc = {section: dict(values) for section, values in document.items()}
    doc.setdefault("run", {})["assumption"] = assumption
    return doc


@dataclass(frozen=True, eq=False)
class ScenarioResult:
    """Detector-plane output of one scenario at one longitudinal position."""

    assumption: str
    y: float
    detector_field: ComplexField
    born_profile: DensityProfile
    reported_profile: DensityProfile
    median_x: Optional[float]
    provenance: dict


def detector_grid(halfwidth, points):
    """Odd-length grid symmetric about 0 that contains 0 exactly."""
    m = (points - 1) // 2
    return np.arange(-m, m + 1) * (halfwidth / m)


def sweep_positions(config):
    return np.linspace(config.sweep_start, config.sweep_stop, config.sweep_count)


def config_hash(config):
    from .io import serialize_config

    return hashlib.sha256(serialize_config(config).encode()).hexdigest()


def _provenance(config, t, y, diagnostics, timings):
    return {
        "package_version": __version__,
        "config_sha256": config_hash(config),
        "assumption": config.assumption,
        "geometry_convention": GEOMETRY_CONVENTION,
        "beam_width_convention": config.width_convention,
        "beam_width_m": config.beam_width,
        "sigma0_m": config.beam.sigma0,
        "t1_s": config.t1,
        "t_s": t,
        "y_m": y,
        "fit_rtol": config.fit_rtol,
        "max_degree": config.max_degree,
        "tail_tolerance": config.tail_tolerance,
        "delta_vx_m_per_s": config.delta_vx,
        "prominence_fraction": config.prominence_fraction,
        "pieces": diagnostics.get("pieces"),
        "max_fit_error": diagnostics.get("max_fit_error"),
        "fallbacks": diagnostics.get("fallbacks"),
        "timings_s": timings,
    }


def _field(config, selection, t, workers):
    return propagate(
        config.setup, config.beam, build_mask(config.geometry, selection), config.t1, t,
        detector_grid(config.detector_halfwidth, config.detector_points),
        degree=config.max_degree, fit_rtol=config.fit_rtol, workers=workers,
    )


def _assemble(config, assumption, y, t, fld, elapsed):
    timings = {"propagate": elapsed}
    start = time.perf_counter()
    born = born_density(fld)
    flight = y / config.setup.v_y
    seen = smooth_velocity_dispersion(born, config.delta_vx, flight)
    median_x = None
    if assumption == "alternative":
        try:
            median_x = median(cumulative(seen, config.tail_tolerance))
        except NumericalError as exc:
            raise type(exc)(f"alternative scenario at y={y:g} m: {exc}", exc.diagnostics) from exc
        reported = truncate_at_median(seen, median_x)
    else:
        reported = seen
    timings["density"] = time.perf_counter() - start
    cfg = config.with_assumption(assumption)
    prov = _provenance(cfg, t, y, fld.diagnostics, timings)
    prov["edge_ratio"] = edge_ratio(born)
    prov["median_x_m"] = median_x
    return ScenarioResult(assumption, y, fld, born, reported, median_x, prov)


def _run_at(config, y, assumptions, workers):
    t = config.time_at(y)
    out = {}
    cache = {}
    for assumption in assumptions:
        selection = "A-only" if assumption == "classical" else "A-and-B"
        if selection not in cache:
            start = time.perf_counter()
            fld = _field(config, selection, t, workers)
            cache[selection] = (fld, time.perf_counter() - start)
        fld, elapsed = cache[selection]
        out[assumption] = _assemble(config, assumption, y, t, fld, elapsed)
    return out


def run_scenario(config, workers=1):
    """Detector-plane result for ``config.assumption`` at ``y = d2``."""
    return _run_at(config, config.d2, (config.assumption,), workers)[config.assumption]


def run_all(config, workers=1):
    """All three assumptions at the detector, sharing the A+B propagation."""
    return _run_at(config, config.d2, ASSUMPTIONS, workers)


def sweep_longitudinal(config, y_positions=None, workers=1):
    """One :class:`ScenarioResult` per plane ``y`` (ascending, in (0, d2]).

    For the alternative assumption the median is recomputed at every plane.
    """
    ys = sweep_positions(config) if y_positions is None else np.asarray(y_positions, float)
    if ys.size == 0:
        return []
    if np.any(ys <= 0) or np.any(ys > config.d2) or np.any(np.diff(ys) <= 0):
        raise ConfigError("sweep positions must be ascending and lie in (0, d2]",
                          key="run.sweep_start_m")
    return [_run_at(config, float(y), (config.assumption,), workers)[config.assumption]
            for y in ys]
