"""Where the median starts: the beam masked by A and the grating.

Both openings are 100 um wide in total, but the grating sits 300 um further
from the beam axis on the other side, so it passes slightly less of the
Gaussian. The median therefore starts just inside A, 0.07 um from its edge.

Run: python demos/05_alternative_median.py
"""
# %%
import numpy as np

from slitwave import parse_config
from slitwave.aperture import build_mask, total_open_width
from slitwave.density import DensityProfile, cumulative, median
from slitwave.physics import free_gaussian

config = parse_config("")
g = config.geometry
print(f"open width A = {total_open_width(build_mask(g, 'A-only')) * 1e6:.6f} um")
print(f"open width B = {total_open_width(build_mask(g, 'B-only')) * 1e6:.6f} um")

# %% Sample every opening with grid points on its edges and zeros just outside.
eps = 1e-17
xs, open_ = [], []
for lo, hi in build_mask(g, "A-and-B").intervals:
    n = 3 if hi - lo < 1e-6 else 20001
    xs += [[lo - eps], np.linspace(lo, hi, n), [hi + eps]]
    open_ += [[0.0], np.ones(n), [0.0]]
x = np.concatenate(xs)
rho = np.abs(free_gaussian(config.setup, config.beam, x, config.t1)) ** 2 * np.concatenate(open_)
profile = DensityProfile.from_values(x, rho)

# %%
a_mass = np.trapezoid(np.where(x > 0, rho, 0.0), x)
print(f"B share of transmitted mass = {1 - a_mass / profile.total_mass:.6f}")
print(f"median x_t = {median(cumulative(profile, tail_tolerance=1.0)) * 1e6:.4f} um")
