"""Random-walk spectrum generation, measurement sampling and persistence.

Input spectra are channelized random walks: the first channel power is drawn
uniformly from a 15 dB range, each following channel adds a Gaussian step, the
walk is clipped to a maximum excursion and smoothed with a moving-average
window drawn from a small set (window 1 keeps the sharp shape). Each profile
is rescaled to the requested total input power, run through a surrogate
device, and stored normalized on both sides.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .numerics import RngStream, dbm_to_mw, moving_average, mw_to_dbm
from .oracle import (
    AmplifierDevice,
    FrequencyGrid,
    PsdProfile,
    amplify,
    device_from_dict,
    device_to_dict,
)

__all__ = [
    "WalkConfig",
    "Sample",
    "Dataset",
    "random_walk_profile",
    "clip_excursion",
    "shape_profile",
    "build_dataset",
    "normalize",
    "denormalize",
    "write_dataset",
    "read_dataset",
    "GAIN_MIN_DB",
    "GAIN_MAX_DB",
    "TRAIN_FRACTION",
]

# Gain envelope the power grid must respect.
GAIN_MIN_DB = 10.0
GAIN_MAX_DB = 22.0

TRAIN_FRACTION = 0.76

DATASET_FORMAT = "edfagain-dataset"
DATASET_VERSION = 1


@dataclass(frozen=True)
class WalkConfig:
    """Knobs of the random-walk profile generator.

    p0_range_dbm spans 15 dB by default; the absolute anchor is immaterial
    because every profile is rescaled to its target total power afterwards.
    sigma_w_set_db and smoothing_windows are sampled uniformly per profile,
    covering both sharp (window 1, large sigma) and smooth shapes.
    """

    p0_range_dbm: tuple = (-35.0, -20.0)
    sigma_w_set_db: tuple = (0.1, 0.5, 1.0)
    max_excursion_db: float = 20.0
    smoothing_windows: tuple = (1, 3, 7, 15)
    n_profiles_per_pair: int = 200

    def __post_init__(self):
        if self.max_excursion_db <= 0:
            raise ValueError("max_excursion_db must be > 0")
        if any(s < 0 for s in self.sigma_w_set_db):
            raise ValueError("sigma_w_set_db entries must be >= 0")
        if any(w < 1 or w % 2 == 0 for w in self.smoothing_windows):
            raise ValueError("smoothing_windows must be odd and >= 1")
        if len(self.p0_range_dbm) != 2 or self.p0_range_dbm[1] < self.p0_range_dbm[0]:
            raise ValueError("p0_range_dbm must be (low, high) with high >= low")
        if self.n_profiles_per_pair < 1:
            raise ValueError("n_profiles_per_pair must be >= 1")

    def to_dict(self) -> dict:
        return {
            "p0_range_dbm": list(self.p0_range_dbm),
            "sigma_w_set_db": list(self.sigma_w_set_db),
            "max_excursion_db": self.max_excursion_db,
            "smoothing_windows": list(self.smoothing_windows),
            "n_profiles_per_pair": self.n_profiles_per_pair,
        }

    @staticmethod
    def from_dict(d: dict) -> "WalkConfig":
        return WalkConfig(
            p0_range_dbm=tuple(float(v) for v in d["p0_range_dbm"]),
            sigma_w_set_db=tuple(float(v) for v in d["sigma_w_set_db"]),
            max_excursion_db=float(d["max_excursion_db"]),
            smoothing_windows=tuple(int(v) for v in d["smoothing_windows"]),
            n_profiles_per_pair=int(d["n_profiles_per_pair"]),
        )


@dataclass
class Sample:
    """One measurement record, both spectra normalized to their totals."""

    psd_in_norm_db: np.ndarray
    p_in_dbm: float
    p_out_dbm: float
    psd_out_norm_db: np.ndarray
    device_id: str
    gain_db: float


@dataclass
class Dataset:
    """Samples plus per-sample split flags and replay metadata."""

    samples: list
    split: list
    metadata: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.samples)

    def device_ids(self) -> list:
        seen = dict.fromkeys(s.device_id for s in self.samples)
        return list(seen)

    def subset(self, split: str, device_id: str | None = None) -> list:
        """Samples with the given split flag ("train"/"test"), optionally for
        one device only."""
        return [
            s
            for s, flag in zip(self.samples, self.split)
            if flag == split and (device_id is None or s.device_id == device_id)
        ]

    def grid(self) -> FrequencyGrid:
        return FrequencyGrid.from_dict(self.metadata["grid"])

    def devices(self) -> list:
        return [device_from_dict(d) for d in self.metadata["devices"]]


def random_walk_profile(rng: RngStream, p0_dbm: float, sigma_w_db: float, grid: FrequencyGrid) -> PsdProfile:
    """Channelized random walk: powers[0] = p0, each next channel adds a
    N(0, sigma_w^2) step."""
    if sigma_w_db < 0:
        raise ValueError("sigma_w_db must be >= 0")
    steps = rng.normal(0.0, sigma_w_db, size=grid.n_channels - 1)
    powers = p0_dbm + np.concatenate(([0.0], np.cumsum(steps)))
    return PsdProfile(grid, powers)


def clip_excursion(profile: PsdProfile, max_excursion_db: float) -> PsdProfile:
    """Clamp channel powers to a +-max_excursion/2 window around the profile
    median, bounding max - min by max_excursion."""
    if max_excursion_db <= 0:
        raise ValueError("max_excursion_db must be > 0")
    med = float(np.median(profile.powers_dbm))
    half = max_excursion_db / 2.0
    return PsdProfile(profile.grid, np.clip(profile.powers_dbm, med - half, med + half))


def shape_profile(
    rng: RngStream,
    config: WalkConfig,
    grid: FrequencyGrid,
    p_in_total_dbm: float | None = None,
) -> PsdProfile:
    """Draw one shaped input spectrum: walk -> clip -> smooth -> rescale.

    Draw order is frozen (p0, sigma, window, then the 82 walk steps); it is
    part of the dataset format, since changing it changes every byte.
    """
    p0 = float(rng.uniform(*config.p0_range_dbm))
    sigma_w = float(rng.pick(config.sigma_w_set_db))
    window = int(rng.pick(config.smoothing_windows))
    profile = random_walk_profile(rng, p0, sigma_w, grid)
    profile = clip_excursion(profile, config.max_excursion_db)
    powers = moving_average(profile.powers_dbm, window)
    profile = PsdProfile(grid, powers)
    if p_in_total_dbm is not None:
        profile = PsdProfile(grid, powers + (float(p_in_total_dbm) - profile.total_power_dbm()))
    return profile


def normalize(profile: PsdProfile) -> tuple:
    """Split a profile into (shape, total): per-channel dB relative to the
    total power, plus the total in dBm. The linear fractions of the shape sum
    to 1 by construction."""
    total_mw = float(np.sum(dbm_to_mw(profile.powers_dbm)))
    if not np.isfinite(total_mw) or total_mw <= 0.0:
        raise ValueError("profile has no finite total power to normalize against")
    total_dbm = mw_to_dbm(total_mw)
    return profile.powers_dbm - total_dbm, total_dbm


def denormalize(norm_db: np.ndarray, total_dbm: float, grid: FrequencyGrid) -> PsdProfile:
    """Inverse of normalize."""
    return PsdProfile(grid, np.asarray(norm_db, dtype=float) + float(total_dbm))


def validate_power_grid(power_grid_dbm) -> None:
    """Every (p_in, p_out) pair must land in the supported gain envelope."""
    for p_in, p_out in power_grid_dbm:
        gain = p_out - p_in
        if not (GAIN_MIN_DB <= gain <= GAIN_MAX_DB):
            raise ValueError(
                f"pair (p_in={p_in} dBm, p_out={p_out} dBm) gives gain {gain:.2f} dB "
                f"outside [{GAIN_MIN_DB}, {GAIN_MAX_DB}] dB"
            )


def build_dataset(
    devices: list,
    grid: FrequencyGrid,
    walk: WalkConfig,
    power_grid_dbm: list,
    seed: int,
    extra_metadata: dict | None = None,
) -> Dataset:
    """Generate the full measurement set: every device x power pair x profile.

    Each (device, pair, profile) triple owns an independent child stream, so
    generation is order-independent and reproducible byte-for-byte from the
    seed. Split flags come from a per-device Fisher-Yates shuffle with a 76/24
    train/test prefix split.
    """
    validate_power_grid(power_grid_dbm)
    root = RngStream(seed)
    samples = []
    for device in devices:
        for pair_idx, (p_in, p_out) in enumerate(power_grid_dbm):
            for j in range(walk.n_profiles_per_pair):
                stream = root.child("dataset", device.device_id, pair_idx, j)
                profile = shape_profile(stream, walk, grid, p_in)
                noise_rng = stream.child("noise") if device.noise_sigma_db > 0 else None
                out = amplify(device, profile, p_out, noise_rng)
                in_norm, p_in_actual = normalize(profile)
                out_norm, p_out_actual = normalize(out)
                # Normalization contract: linear fractions sum to 1.
                assert abs(np.sum(dbm_to_mw(in_norm)) - 1.0) < 1e-9
                assert abs(np.sum(dbm_to_mw(out_norm)) - 1.0) < 1e-9
                samples.append(
                    Sample(
                        psd_in_norm_db=in_norm,
                        p_in_dbm=p_in_actual,
                        p_out_dbm=p_out_actual,
                        psd_out_norm_db=out_norm,
                        device_id=device.device_id,
                        gain_db=p_out_actual - p_in_actual,
                    )
                )

    split = ["test"] * len(samples)
    per_device = len(power_grid_dbm) * walk.n_profiles_per_pair
    for d_idx, device in enumerate(devices):
        lo = d_idx * per_device
        perm = root.child("split", device.device_id).permutation(per_device)
        n_train = int(round(TRAIN_FRACTION * per_device))
        for local in perm[:n_train]:
            split[lo + int(local)] = "train"

    metadata = {
        "format": DATASET_FORMAT,
        "version": DATASET_VERSION,
        "grid": grid.to_dict(),
        "walk": walk.to_dict(),
        "power_grid_dbm": [[float(a), float(b)] for a, b in power_grid_dbm],
        "devices": [device_to_dict(d) for d in devices],
        "seed": int(seed),
    }
    if extra_metadata:
        metadata.update(extra_metadata)
    return Dataset(samples=samples, split=split, metadata=metadata)


def write_dataset(dataset: Dataset, path) -> None:
    """JSON-Lines: one metadata header line, then one sample per line.

    Floats go through Python's shortest round-trip repr, so a written file
    reads back bit-identically and rewrites byte-identically.
    """
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(json.dumps(dataset.metadata) + "\n")
        for sample, flag in zip(dataset.samples, dataset.split):
            record = {
                "device_id": sample.device_id,
                "p_in_dbm": sample.p_in_dbm,
                "p_out_dbm": sample.p_out_dbm,
                "psd_in_norm_db": sample.psd_in_norm_db.tolist(),
                "psd_out_norm_db": sample.psd_out_norm_db.tolist(),
                "gain_db": sample.gain_db,
                "split": flag,
            }
            fh.write(json.dumps(record) + "\n")


def read_dataset(path) -> Dataset:
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline()
        if not header:
            raise ValueError(f"{path}: empty dataset file")
        metadata = json.loads(header)
        if metadata.get("format") != DATASET_FORMAT:
            raise ValueError(f"{path}: not a {DATASET_FORMAT} file")
        samples = []
        split = []
        for line in fh:
            if not line.strip():
                continue
            rec = json.loads(line)
            samples.append(
                Sample(
                    psd_in_norm_db=np.asarray(rec["psd_in_norm_db"], dtype=float),
                    p_in_dbm=float(rec["p_in_dbm"]),
                    p_out_dbm=float(rec["p_out_dbm"]),
                    psd_out_norm_db=np.asarray(rec["psd_out_norm_db"], dtype=float),
                    device_id=str(rec["device_id"]),
                    gain_db=float(rec["gain_db"]),
                )
            )
            split.append(str(rec["split"]))
    return Dataset(samples=samples, split=split, metadata=metadata)
