"""Surrogate amplifier: the ground-truth gain machine the model is trained on.

A "make" defines a smooth base gain shape (ripple + tilt); each physical unit
of that make is the base shape plus seeded Gaussian perturbations, including an
extra gain-slope deviation above ``hf_edge_thz`` so different units disagree
most in the high-frequency end of the band. Amplification runs at constant
output power: per-channel gain is applied, then one uniform dB correction pins
the total output power to the requested target.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .numerics import RngStream, dbm_to_mw, mw_to_dbm

__all__ = [
    "FrequencyGrid",
    "PsdProfile",
    "MakeParams",
    "AmplifierDevice",
    "make_device",
    "amplify",
    "device_gain_profile",
    "total_power_dbm",
    "device_to_dict",
    "device_from_dict",
    "P_IN_MIN_DBM",
    "P_IN_MAX_DBM",
    "SIGMA_DEV_CALIBRATED_DB",
]

# Operating envelope for total input power into the amplifier.
P_IN_MIN_DBM = -15.0
P_IN_MAX_DBM = 10.0

# Default calibrated scale of unit-to-unit perturbations, chosen so that two
# random units of the default make differ by ~0.04 dB^2 in mean squared output
# (see evaluation.calibrate_device_sigma, which reproduces this number).
SIGMA_DEV_CALIBRATED_DB = 0.1067349979095161


@dataclass(frozen=True)
class FrequencyGrid:
    """Equally spaced channel centers, both band edges included."""

    n_channels: int = 83
    f_start_thz: float = 191.5
    f_stop_thz: float = 196.25

    def __post_init__(self):
        if self.n_channels < 2:
            raise ValueError("grid needs at least 2 channels")
        if not self.f_stop_thz > self.f_start_thz:
            raise ValueError("f_stop_thz must exceed f_start_thz")

    @property
    def spacing_thz(self) -> float:
        return (self.f_stop_thz - self.f_start_thz) / (self.n_channels - 1)

    def frequencies(self) -> np.ndarray:
        """Channel center frequencies in THz, strictly increasing."""
        return np.linspace(self.f_start_thz, self.f_stop_thz, self.n_channels)

    def to_dict(self) -> dict:
        return {
            "n_channels": self.n_channels,
            "f_start_thz": self.f_start_thz,
            "f_stop_thz": self.f_stop_thz,
        }

    @staticmethod
    def from_dict(d: dict) -> "FrequencyGrid":
        return FrequencyGrid(int(d["n_channels"]), float(d["f_start_thz"]), float(d["f_stop_thz"]))


@dataclass
class PsdProfile:
    """Per-channel optical powers in dBm on a frequency grid."""

    grid: FrequencyGrid
    powers_dbm: np.ndarray

    def __post_init__(self):
        self.powers_dbm = np.asarray(self.powers_dbm, dtype=float)
        if self.powers_dbm.shape != (self.grid.n_channels,):
            raise ValueError(
                f"profile must have {self.grid.n_channels} channels, got shape {self.powers_dbm.shape}"
            )

    def total_power_mw(self) -> float:
        return float(np.sum(dbm_to_mw(self.powers_dbm)))

    def total_power_dbm(self) -> float:
        return mw_to_dbm(self.total_power_mw())

    def copy(self) -> "PsdProfile":
        return PsdProfile(self.grid, self.powers_dbm.copy())


def total_power_dbm(profile: PsdProfile) -> float:
    return profile.total_power_dbm()


@dataclass(frozen=True)
class MakeParams:
    """Make-level gain shape plus the scale of unit-to-unit perturbations.

    The base gain offset is a sum of three low-order sinusoids across the band
    (peak-to-peak bounded by 2 * sum(ripple_amps_db)); the base slope is
    1 dB-per-dB of average gain, bent linearly by ``tilt_per_thz`` around the
    band center. ``sigma_dev_db`` is the master per-device perturbation scale:
    per-channel offset noise uses it directly, per-channel slope noise uses
    ``b_dev_ratio * sigma_dev_db``, and the extra high-band slope deviation
    (applied above ``hf_edge_thz``) uses ``hf_dev_ratio_per_thz * sigma_dev_db``.
    Setting sigma_dev_db = 0 therefore makes every unit identical.

    ``shb_gamma_db`` couples each channel's gain to its share of total input
    power (dB per unit power fraction), which makes the learning task depend
    on spectrum shape, not just totals. ``noise_sigma_db`` adds per-channel
    readout noise after power leveling when an rng is supplied to amplify.
    """

    ripple_amps_db: tuple = (0.5, 0.3, 0.2)
    ripple_cycles: tuple = (1.0, 2.0, 3.0)
    ripple_phases_rad: tuple = (0.9, 2.3, 4.1)
    tilt_per_thz: float = 0.01
    sigma_dev_db: float = SIGMA_DEV_CALIBRATED_DB
    b_dev_ratio: float = 0.02
    hf_dev_ratio_per_thz: float = 4.5
    hf_edge_thz: float = 195.5
    shb_gamma_db: float = 0.0
    noise_sigma_db: float = 0.0

    def __post_init__(self):
        if self.sigma_dev_db < 0 or self.b_dev_ratio < 0 or self.hf_dev_ratio_per_thz < 0:
            raise ValueError("perturbation sigmas/ratios must be >= 0")
        if self.noise_sigma_db < 0:
            raise ValueError("noise_sigma_db must be >= 0")
        if len(self.ripple_amps_db) != len(self.ripple_cycles) or len(self.ripple_amps_db) != len(
            self.ripple_phases_rad
        ):
            raise ValueError("ripple component tuples must have equal lengths")

    def to_dict(self) -> dict:
        return {
            "ripple_amps_db": list(self.ripple_amps_db),
            "ripple_cycles": list(self.ripple_cycles),
            "ripple_phases_rad": list(self.ripple_phases_rad),
            "tilt_per_thz": self.tilt_per_thz,
            "sigma_dev_db": self.sigma_dev_db,
            "b_dev_ratio": self.b_dev_ratio,
            "hf_dev_ratio_per_thz": self.hf_dev_ratio_per_thz,
            "hf_edge_thz": self.hf_edge_thz,
            "shb_gamma_db": self.shb_gamma_db,
            "noise_sigma_db": self.noise_sigma_db,
        }

    @staticmethod
    def from_dict(d: dict) -> "MakeParams":
        return MakeParams(
            ripple_amps_db=tuple(d["ripple_amps_db"]),
            ripple_cycles=tuple(d["ripple_cycles"]),
            ripple_phases_rad=tuple(d["ripple_phases_rad"]),
            tilt_per_thz=float(d["tilt_per_thz"]),
            sigma_dev_db=float(d["sigma_dev_db"]),
            b_dev_ratio=float(d["b_dev_ratio"]),
            hf_dev_ratio_per_thz=float(d["hf_dev_ratio_per_thz"]),
            hf_edge_thz=float(d["hf_edge_thz"]),
            shb_gamma_db=float(d["shb_gamma_db"]),
            noise_sigma_db=float(d["noise_sigma_db"]),
        )


@dataclass(frozen=True, eq=False)
class AmplifierDevice:
    """One physical unit: frozen per-channel gain curves drawn from its seed.

    a_db[k] is the channel gain offset at zero average gain; b[k] the channel
    gain in dB per dB of average gain. Immutable after construction, so a
    device can be shared freely across threads.
    """

    device_id: str
    seed: int
    grid: FrequencyGrid
    a_db: np.ndarray
    b: np.ndarray
    hf_slope_dev_db_per_thz: float
    shb_gamma_db: float = 0.0
    noise_sigma_db: float = 0.0


def base_gain_offset_db(make: MakeParams, grid: FrequencyGrid) -> np.ndarray:
    """The make's fixed ripple curve sampled on the grid."""
    t = (grid.frequencies() - grid.f_start_thz) / (grid.f_stop_thz - grid.f_start_thz)
    out = np.zeros_like(t)
    for amp, cyc, phase in zip(make.ripple_amps_db, make.ripple_cycles, make.ripple_phases_rad):
        out += amp * np.sin(2.0 * np.pi * cyc * t + phase)
    return out


def base_gain_slope(make: MakeParams, grid: FrequencyGrid) -> np.ndarray:
    """The make's dB-per-dB slope curve: 1 plus a gentle linear tilt."""
    f = grid.frequencies()
    f_mid = 0.5 * (grid.f_start_thz + grid.f_stop_thz)
    return 1.0 + make.tilt_per_thz * (f - f_mid)


def make_device(make: MakeParams, grid: FrequencyGrid, device_id: str, seed: int) -> AmplifierDevice:
    """Instantiate one physical unit of a make from its device seed.

    Pure function of (make, grid, device_id, seed): the same seed always
    yields bit-identical gain curves. Draw order (offset noise, slope noise,
    high-band slope deviation) is frozen.
    """
    f = grid.frequencies()
    rng = RngStream(seed, ("device",))
    delta_a = rng.normal(0.0, make.sigma_dev_db, size=grid.n_channels)
    delta_b = rng.normal(0.0, make.b_dev_ratio * make.sigma_dev_db, size=grid.n_channels)
    hf_slope = float(rng.normal(0.0, make.hf_dev_ratio_per_thz * make.sigma_dev_db))

    a = base_gain_offset_db(make, grid) + delta_a
    a = a + np.where(f > make.hf_edge_thz, hf_slope * (f - make.hf_edge_thz), 0.0)
    b = base_gain_slope(make, grid) + delta_b
    return AmplifierDevice(
        device_id=device_id,
        seed=int(seed),
        grid=grid,
        a_db=a,
        b=b,
        hf_slope_dev_db_per_thz=hf_slope,
        shb_gamma_db=make.shb_gamma_db,
        noise_sigma_db=make.noise_sigma_db,
    )


def amplify(
    device: AmplifierDevice,
    psd_in: PsdProfile,
    p_out_dbm: float,
    rng: RngStream | None = None,
) -> PsdProfile:
    """Amplify a spectrum at a constant-output-power operating point.

    1. average gain G = p_out_dbm - total input power (dB totals);
    2. channel gain g_k = a_k + b_k * G - shb_gamma * x_k, where x_k is the
       channel's fraction of total linear input power;
    3. raw output = input + g per channel;
    4. a uniform dB correction pins the total linear output power to
       p_out_dbm (exact up to float rounding, well under 1e-9 dB).

    With device.noise_sigma_db > 0 and an rng supplied, i.i.d. per-channel
    readout noise is added after step 4 and the returned total drifts off
    target accordingly; call with rng=None for the noise-free profile.
    """
    if psd_in.grid != device.grid:
        raise ValueError("profile and device use different frequency grids")
    powers = psd_in.powers_dbm
    if powers.size == 0 or not np.all(np.isfinite(powers)):
        raise ValueError("input profile must be non-empty and finite")
    if not np.isfinite(p_out_dbm):
        raise ValueError("p_out_dbm must be finite")

    lin_in = dbm_to_mw(powers)
    total_in_mw = float(lin_in.sum())
    p_in_total = mw_to_dbm(total_in_mw)
    # small slack so totals constructed to sit exactly on a bound do not trip
    # on the last float ulp
    if not (P_IN_MIN_DBM - 1e-9 <= p_in_total <= P_IN_MAX_DBM + 1e-9):
        raise ValueError(
            f"total input power {p_in_total:.3f} dBm outside [{P_IN_MIN_DBM}, {P_IN_MAX_DBM}] dBm"
        )

    g_avg = float(p_out_dbm) - p_in_total
    x = lin_in / total_in_mw
    gain = device.a_db + device.b * g_avg - device.shb_gamma_db * x
    raw = powers + gain
    correction = float(p_out_dbm) - mw_to_dbm(float(dbm_to_mw(raw).sum()))
    out = raw + correction

    if device.noise_sigma_db > 0.0 and rng is not None:
        out = out + rng.normal(0.0, device.noise_sigma_db, size=out.size)
    return PsdProfile(device.grid, out)


def device_gain_profile(device: AmplifierDevice, psd_in: PsdProfile, p_out_dbm: float) -> np.ndarray:
    """Per-channel gain in dB (noise-free output minus input)."""
    return amplify(device, psd_in, p_out_dbm).powers_dbm - psd_in.powers_dbm


def device_to_dict(device: AmplifierDevice) -> dict:
    """Serializable device parameters, sufficient to replay any experiment."""
    return {
        "device_id": device.device_id,
        "seed": device.seed,
        "grid": device.grid.to_dict(),
        "a_db": device.a_db.tolist(),
        "b": device.b.tolist(),
        "hf_slope_dev_db_per_thz": device.hf_slope_dev_db_per_thz,
        "shb_gamma_db": device.shb_gamma_db,
        "noise_sigma_db": device.noise_sigma_db,
    }


def device_from_dict(d: dict) -> AmplifierDevice:
    return AmplifierDevice(
        device_id=str(d["device_id"]),
        seed=int(d["seed"]),
        grid=FrequencyGrid.from_dict(d["grid"]),
        a_db=np.asarray(d["a_db"], dtype=float),
        b=np.asarray(d["b"], dtype=float),
        hf_slope_dev_db_per_thz=float(d["hf_slope_dev_db_per_thz"]),
        shb_gamma_db=float(d["shb_gamma_db"]),
        noise_sigma_db=float(d["noise_sigma_db"]),
    )
