"""How input spectra are made: channelized random walks, excursion clipping,
smoothing, and the shape/total-power normalization the model consumes.

Run from the repo root:  python3 demos/02_random_walk_spectra.py
"""

import sys

sys.path.insert(0, "src")

import numpy as np

from edfagain import (
    FrequencyGrid,
    RngStream,
    WalkConfig,
    clip_excursion,
    denormalize,
    normalize,
    random_walk_profile,
    shape_profile,
)
from edfagain.numerics import dbm_to_mw

grid = FrequencyGrid()
rng = RngStream(2024, ("demo", "walks"))

# ---------------------------------------------------------------------------
# The raw walk: channel 0 starts at p0, every next channel adds a Gaussian
# step. Small sigma gives gentle shapes, large sigma wanders hard.

for sigma in (0.1, 0.5, 1.0):
    spans = [
        np.ptp(random_walk_profile(rng.child("raw", sigma, i), -27.0, sigma, grid).powers_dbm)
        for i in range(200)
    ]
    print(f"sigma_w {sigma:.1f} dB/step: excursion over 200 draws "
          f"median {np.median(spans):5.2f} dB, max {max(spans):5.2f} dB")

# A sigma-1.0 walk over 82 steps can ramble 30+ dB; the clip stage bounds it.
wild = random_walk_profile(rng.child("raw", 1.0, 2), -27.0, 1.0, grid)
tamed = clip_excursion(wild, 20.0)
print(f"\none wild walk: span {np.ptp(wild.powers_dbm):.1f} dB "
      f"-> clipped to {np.ptp(tamed.powers_dbm):.1f} dB")

# ---------------------------------------------------------------------------
# shape_profile runs the whole chain: draw p0, sigma and a smoothing window,
# walk, clip, smooth, and rescale to the requested total input power.

config = WalkConfig()
print(f"\nwalk config: sigma set {config.sigma_w_set_db}, "
      f"windows {config.smoothing_windows}, clip {config.max_excursion_db} dB")

for i in range(4):
    prof = shape_profile(rng.child("shaped", i), config, grid, p_in_total_dbm=2.0)
    print(f"profile {i}: total {prof.total_power_dbm():+.6f} dBm, "
          f"span {np.ptp(prof.powers_dbm):5.2f} dB, "
          f"channel powers {prof.powers_dbm.min():6.2f}..{prof.powers_dbm.max():6.2f} dBm")

# ---------------------------------------------------------------------------
# Normalization splits a spectrum into (shape, total). The shape is what the
# network sees; its linear fractions sum to exactly 1.

prof = shape_profile(rng.child("norm-example"), config, grid, p_in_total_dbm=-3.0)
norm, total = normalize(prof)
print(f"\nnormalized shape: entries {norm.min():.2f}..{norm.max():.2f} dB, "
      f"linear fractions sum to {np.sum(dbm_to_mw(norm)):.12f}")
print(f"total carried separately: {total:+.3f} dBm")

back = denormalize(norm, total, grid)
print(f"denormalize round trip max error: "
      f"{np.abs(back.powers_dbm - prof.powers_dbm).max():.2e} dB")

# For reference: a flat 83-channel shape sits at -10*log10(83) on every
# channel.
print(f"\nflat-shape level: {-10 * np.log10(83):.4f} dB")
