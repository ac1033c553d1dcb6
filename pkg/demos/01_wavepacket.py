"""The incoming Gaussian wavepacket before it reaches the slits.

Run: python demos/01_wavepacket.py
"""
# %%
import numpy as np

from slitwave import parse_config
from slitwave.physics import complex_width, de_broglie_wavelength, free_gaussian

config = parse_config("")
setup, beam = config.setup, config.beam
print(f"sigma0 = {beam.sigma0 * 1e3:.2f} mm (6 mm read as the 1/e^2 full width)")
print(f"de Broglie wavelength = {de_broglie_wavelength(setup) * 1e6:.2e} um")

# %% The packet barely spreads during the 5 ms flight to the slits.
for t in (0.0, config.t1, config.t2):
    s = complex_width(setup, beam, t)
    print(f"t = {t * 1e3:5.1f} ms   |s| / sigma0 - 1 = {abs(s) / beam.sigma0 - 1:.3e}")

# %% Norm is conserved by the closed form.
x = np.linspace(-20e-3, 20e-3, 8001)
for t in (0.0, config.t1, 1.0):
    print(f"t = {t:5.3f} s   norm = {np.trapezoid(np.abs(free_gaussian(setup, beam, x, t)) ** 2, x):.12f}")
