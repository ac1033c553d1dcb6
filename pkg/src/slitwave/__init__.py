"""Matter-wave propagation through a wide slit and a fine grating.

Closed-form Gaussian packets, exact free-kernel propagation through
arbitrary slit masks, and detector densities under three readings of
which particles get through.
"""
__version__ = "0.1.0"

from .aperture import Aperture, Selection, SlitGeometry, build_mask, total_open_width
from .density import (
    CumulativeProfile,
    DensityProfile,
    born_density,
    cumulative,
    median,
    peak_count,
    smooth_velocity_dispersion,
    truncate_at_median,
)
from .errors import ConfigError, NumericalError, SlitwaveError, WindowError, ZeroMassError
from .physics import (
    BeamSpec,
    PhysicalSetup,
    complex_width,
    de_broglie_wavelength,
    free_gaussian,
    sigma0_from_width,
)
from .propagator import (
    ComplexField,
    KernelParams,
    kernel,
    propagate,
    propagate_oracle,
    segment_integral,
)
from .experiment import ExperimentConfig, ScenarioResult, run_all, run_scenario, sweep_longitudinal
from .io import parse_config, read_profile_csv, render_plots, serialize_config, write_profile_csv
