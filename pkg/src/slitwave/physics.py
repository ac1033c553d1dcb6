"""Kinematics and the freely spreading Gaussian wavepacket.

All quantities are SI. The transverse wavefunction before the slits is the
standard minimum-uncertainty packet

    psi(x, t) = (2 pi s(t)^2)^(-1/4) exp(-x^2 / (4 sigma0 s(t)))
    s(t)      = sigma0 (1 + i hbar t / (2 m sigma0^2))

with ``t`` measured from the source.
"""
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import constants

from .errors import ConfigError

__all__ = [
    "PhysicalSetup",
    "BeamSpec",
    "WIDTH_CONVENTIONS",
    "sigma0_from_width",
    "de_broglie_wavelength",
    "complex_width",
    "free_gaussian",
]

# full beam width expressed in units of sigma0 (std. dev. of |psi|^2)
WIDTH_CONVENTIONS = {
    "1/e2": 4.0,
    "fwhm": 2.0 * np.sqrt(2.0 * np.log(2.0)),
    "sigma": 1.0,
}


@dataclass(frozen=True)
class PhysicalSetup:
    """Particle and beam kinematics.

    ``n_principal`` and ``lifetime`` are bookkeeping only; the dynamics
    never read them except for the flight-time check.
    """

    mass: float
    v_y: float
    hbar: float = constants.hbar
    n_principal: Optional[int] = None
    lifetime: Optional[float] = None

    def __post_init__(self):
        for name in ("mass", "hbar", "v_y"):
            value = getattr(self, name)
            if not np.isfinite(value) or value <= 0:
                raise ConfigError(f"{name} must be positive and finite, got {value!r}", key=name)
        if self.lifetime is not None and not self.lifetime > 0:
            raise ConfigError(f"lifetime must be positive, got {self.lifetime!r}", key="lifetime")

    def flight_time(self, distance):
        return distance / self.v_y

    def check_flight_time(self, distance):
        """Raise if flying ``distance`` takes longer than the lifetime."""
        if self.lifetime is None:
            return
        t = self.flight_time(distance)
        if t >= self.lifetime:
            raise ConfigError(
                f"flight time {t:.4g} s over {distance:.4g} m exceeds lifetime {self.lifetime:.4g} s",
                key="lifetime",
            )


@dataclass(frozen=True)
class BeamSpec:
    """Transverse Gaussian beam: width parameter ``sigma0`` and centre."""

    sigma0: float
    center: float = 0.0

    def __post_init__(self):
        if not np.isfinite(self.sigma0) or self.sigma0 <= 0:
            raise ConfigError(f"sigma0 must be positive, got {self.sigma0!r}", key="sigma0")
        if not np.isfinite(self.center):
            raise ConfigError("beam center must be finite", key="center")


def sigma0_from_width(width, convention="1/e2"):
    """Convert a quoted full beam width to the packet parameter sigma0.

    Parameters
    ----------
    width : float
        Full width of the beam, meters.
    convention : {'1/e2', 'fwhm', 'sigma'}
        How ``width`` is measured on the intensity profile ``|psi|^2``.

    Returns
    -------
    float
        sigma0 in meters.
    """
    try:
        factor = WIDTH_CONVENTIONS[convention]
    except KeyError:
        raise ConfigError(
            f"unknown width convention {convention!r}; expected one of {sorted(WIDTH_CONVENTIONS)}",
            key="width_convention",
        ) from None
    return width / factor


def de_broglie_wavelength(setup):
    """Return h / (m v_y) in meters."""
    return 2.0 * np.pi * setup.hbar / (setup.mass * setup.v_y)


def complex_width(setup, beam, t):
    """Complex width s(t) = sigma0 (1 + i hbar t / (2 m sigma0^2))."""
    if t < 0:
        raise ValueError(f"t must be >= 0, got {t!r}")
    ratio = setup.hbar * t / (2.0 * setup.mass * beam.sigma0**2)
    return complex(beam.sigma0, beam.sigma0 * ratio)


def free_gaussian(setup, beam, x, t):
    """Evaluate the free Gaussian packet at positions ``x`` and time ``t``.

    The quarter power uses the principal logarithm, so the t = 0 value at
    the centre is real and positive.

    Parameters
    ----------
    setup : PhysicalSetup
    beam : BeamSpec
    x : float or array_like
        Transverse positions, meters.
    t : float
        Time since the source, seconds.

    Returns
    -------
    complex or numpy.ndarray of complex
        Amplitude in m^(-1/2).
    """
    s = complex_width(setup, beam, t)
    norm = np.exp(-0.25 * np.log(2.0 * np.pi * s * s))
    xc = np.asarray(x, dtype=float) - beam.center
    return norm * np.exp(-(xc * xc) / (4.0 * beam.sigma0 * s))
