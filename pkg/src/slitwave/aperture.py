"""Transverse aperture masks: the wide slit, the grating, and combinations.

An aperture is a sorted tuple of disjoint open intervals on the x axis. The
field behind the mask is the incident field times the indicator of those
intervals (sharp, fully absorbing edges).
"""
import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError

__all__ = ["Aperture", "Selection", "SlitGeometry", "build_mask", "total_open_width"]

_INF = float("inf")


@dataclass(frozen=True)
class Aperture:
    """Ordered, pairwise disjoint open intervals ``(lower, upper)`` in meters.

    The single interval ``(-inf, inf)`` marks the unobstructed line; it is
    the only place infinities are allowed.
    """

    intervals: tuple = ()

    def __post_init__(self):
        ivs = tuple((float(lo), float(hi)) for lo, hi in self.intervals)
        object.__setattr__(self, "intervals", ivs)
        if ivs == ((-_INF, _INF),):
            return
        prev_hi = -_INF
        for i, (lo, hi) in enumerate(ivs):
            if not (math.isfinite(lo) and math.isfinite(hi)):
                raise ConfigError(f"interval {i} {(lo, hi)} is not finite")
            if not lo < hi:
                raise ConfigError(f"interval {i} {(lo, hi)} has non-positive width")
            if lo < prev_hi:
                raise ConfigError(
                    f"interval {i} {(lo, hi)} overlaps or precedes interval {i - 1} {ivs[i - 1]}"
                )
            prev_hi = hi

    @classmethod
    def full_line(cls):
        return cls(((-_INF, _INF),))

    @classmethod
    def empty(cls):
        return cls(())

    @property
    def unbounded(self):
        return self.intervals == ((-_INF, _INF),)

    def __len__(self):
        return len(self.intervals)

    def __iter__(self):
        return iter(self.intervals)

    def __or__(self, other):
        if self.unbounded or other.unbounded:
            raise ConfigError("cannot form a union with the unbounded aperture")
        return Aperture(tuple(sorted(self.intervals + other.intervals)))

    def span(self):
        """(leftmost lower, rightmost upper) of a nonempty bounded aperture."""
        if not self.intervals:
            raise ValueError("empty aperture has no span")
        return self.intervals[0][0], self.intervals[-1][1]

    def contains(self, x):
        """Boolean mask: which of ``x`` lie strictly inside an open interval."""
        x = np.asarray(x, dtype=float)
        inside = np.zeros(x.shape, dtype=bool)
        for lo, hi in self.intervals:
            inside |= (x > lo) & (x < hi)
        return inside


class Selection(enum.Enum):
    A_ONLY = "A-only"
    B_ONLY = "B-only"
    A_AND_B = "A-and-B"
    FULL_LINE = "full-line"
    EMPTY = "empty"

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        try:
            return cls(value)
        except ValueError:
            raise ConfigError(
                f"unknown aperture selection {value!r}; expected one of {[s.value for s in cls]}",
                key="selection",
            ) from None


@dataclass(frozen=True)
class SlitGeometry:
    """Wide slit A plus a grating B of equal, evenly spaced narrow slits.

    ``grating_separation`` is the opaque gap between neighbouring grating
    slits, so the pitch is ``grating_slit_width + grating_separation``.
    Defaults put A on the +x side: A centred at +150 um, B at -150 um.
    """

    slit_a_width: float = 100e-6
    slit_a_center: float = 150e-6
    grating_slit_width: float = 0.1e-6
    grating_separation: float = 0.2e-6
    grating_count: int = 1000
    grating_center: float = -150e-6

    def __post_init__(self):
        for name in ("slit_a_width", "grating_slit_width"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise ConfigError(f"{name} must be positive, got {value!r}", key=name)
        if not (math.isfinite(self.grating_separation) and self.grating_separation > 0):
            raise ConfigError(
                f"grating_separation must be positive, got {self.grating_separation!r}",
                key="grating_separation",
            )
        if int(self.grating_count) != self.grating_count or self.grating_count < 1:
            raise ConfigError(
                f"grating_count must be a positive integer, got {self.grating_count!r}",
                key="grating_count",
            )
        a_lo, a_hi = self.slit_a_interval
        b_lo, b_hi = self.grating_extent
        if a_lo < b_hi and b_lo < a_hi:
            raise ConfigError(
                f"slit A interval {(a_lo, a_hi)} overlaps grating span {(b_lo, b_hi)}",
                key="geometry",
            )

    @property
    def grating_pitch(self):
        return self.grating_slit_width + self.grating_separation

    @property
    def grating_span(self):
        n = self.grating_count
        return n * self.grating_slit_width + (n - 1) * self.grating_separation

    @property
    def slit_a_interval(self):
        half = 0.5 * self.slit_a_width
        return self.slit_a_center - half, self.slit_a_center + half

    @property
    def grating_extent(self):
        half = 0.5 * self.grating_span
        return self.grating_center - half, self.grating_center + half

    def grating_intervals(self):
        left = self.grating_extent[0]
        k = np.arange(self.grating_count)
        lows = left + k * self.grating_pitch
        return tuple(zip(lows.tolist(), (lows + self.grating_slit_width).tolist()))


def build_mask(geometry, selection):
    """Return the aperture for one of the five selections.

    Parameters
    ----------
    geometry : SlitGeometry
    selection : Selection or str
        ``'A-only'``, ``'B-only'``, ``'A-and-B'``, ``'full-line'`` or ``'empty'``.
    """
    selection = Selection.parse(selection)
    if selection is Selection.EMPTY:
        return Aperture.empty()
    if selection is Selection.FULL_LINE:
        return Aperture.full_line()
    slit_a = Aperture((geometry.slit_a_interval,))
    if selection is Selection.A_ONLY:
        return slit_a
    grating = Aperture(geometry.grating_intervals())
    if selection is Selection.B_ONLY:
        return grating
    return slit_a | grating


def total_open_width(aperture):
    """Summed width of the open intervals, meters."""
    if aperture.unbounded:
        raise ValueError("the unbounded aperture has no finite open width")
    return math.fsum(hi - lo for lo, hi in aperture.intervals)
