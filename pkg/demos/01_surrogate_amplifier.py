"""Tour of the surrogate amplifier: per-channel gain curves, exact output
leveling, and what distinguishes one manufactured unit from another.

Run from the repo root:  python3 demos/01_surrogate_amplifier.py
"""

import sys

sys.path.insert(0, "src")

import numpy as np

from edfagain import (
    FrequencyGrid,
    MakeParams,
    PsdProfile,
    amplify,
    device_gain_profile,
    make_device,
)

grid = FrequencyGrid()
print(f"channel grid: {grid.n_channels} channels, "
      f"{grid.f_start_thz}-{grid.f_stop_thz} THz, "
      f"spacing {grid.spacing_thz*1e3:.1f} GHz")

# A "make" is the shared design: ripple, tilt, and the statistics of
# unit-to-unit variation. A "device" is one manufactured unit of that make.
make = MakeParams(shb_gamma_db=2.0)
a1 = make_device(make, grid, "A1", seed=114)
a2 = make_device(make, grid, "A2", seed=125)

# ---------------------------------------------------------------------------
# Amplify a flat spectrum.

flat = PsdProfile(grid, np.full(grid.n_channels, -19.0))
print(f"\nflat input: total {flat.total_power_dbm():.3f} dBm")

out = amplify(a1, flat, 18.0)
print(f"output total {out.total_power_dbm():.12f} dBm  <- leveled to 18 exactly")

gain = out.powers_dbm - flat.powers_dbm
print(f"per-channel gain: min {gain.min():.2f}, max {gain.max():.2f} dB "
      f"(ripple + tilt, not flat)")

# ---------------------------------------------------------------------------
# The gain curve depends on the operating point: raising the output target
# raises the average gain, and the tilt term scales with it.

for p_out in (12.0, 15.0, 20.0):
    curve = device_gain_profile(a1, flat, p_out)
    print(f"p_out {p_out:4.1f} dBm (G_avg {p_out - flat.total_power_dbm():4.1f} dB): "
          f"gain spans {curve.min():.2f}..{curve.max():.2f} dB")

# ---------------------------------------------------------------------------
# Two units of the same make are close but not identical; that gap is what
# the inter-device evaluation measures.

curve1 = device_gain_profile(a1, flat, 15.0)
curve2 = device_gain_profile(a2, flat, 15.0)
diff = curve1 - curve2
print(f"\nA1 vs A2 at the same operating point: mean |diff| {np.abs(diff).mean():.3f} dB, "
      f"max |diff| {np.abs(diff).max():.3f} dB")

# The divergence concentrates above 195.5 THz, where unit-to-unit slope
# variation is larger by design.
freqs = grid.frequencies()
hf = freqs > 195.5
print(f"mean |diff| below 195.5 THz: {np.abs(diff[~hf]).mean():.3f} dB")
print(f"mean |diff| above 195.5 THz: {np.abs(diff[hf]).mean():.3f} dB")

# ---------------------------------------------------------------------------
# Spectral hole burning: channels carrying more power see less gain. Compare
# a spectrum with one strong channel against its neighbors.

spiky = PsdProfile(grid, np.where(np.arange(83) == 41, -5.0, -21.0))
gain_spiky = device_gain_profile(a1, spiky, 18.0)
print(f"\nstrong channel 41: gain {gain_spiky[41]:.2f} dB vs "
      f"neighbor's {gain_spiky[40]:.2f} dB (self-saturation)")
