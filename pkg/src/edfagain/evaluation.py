"""Device-generalization evaluation: intra-, inter-, and joint-device testing.

"Intra" tests a model on held-out data from its own training device; "inter"
tests it on a different unit of the same make (6 ordered pairs for 3 units);
"joint" trains one model on the union of all training splits and tests it per
device. Errors are aggregated per sample, per 1 dB gain bin, and per frequency
channel, and the unit-to-unit perturbation scale can be calibrated so the raw
device mismatch hits a requested mean-square gap.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, replace

import numpy as np

from .dataset import Dataset, WalkConfig, shape_profile
from .model import MlpModel, TrainConfig, encode_batch, forward, train
from .numerics import RngStream, subseed
from .oracle import FrequencyGrid, MakeParams, amplify, make_device

__all__ = [
    "EvalReport",
    "ScenarioResults",
    "CalibrationError",
    "evaluate",
    "gain_bin",
    "run_scenarios",
    "per_frequency_mse",
    "mc_oracle_gap",
    "pairwise_oracle_gap",
    "calibrate_device_sigma",
    "write_reports_json",
    "write_reports_csv",
]


class CalibrationError(RuntimeError):
    """Raised when the perturbation-scale search cannot reach its target."""


@dataclass
class EvalReport:
    """MSE aggregates for one (train device, test device) pair."""

    scenario: str
    train_device: str
    test_device: str
    per_sample_mse: np.ndarray
    per_sample_gain: np.ndarray
    per_sample_p_out: np.ndarray
    per_channel_mse: np.ndarray
    n_samples: int

    @property
    def mean_mse(self) -> float:
        return float(np.mean(self.per_sample_mse))

    @property
    def max_mse(self) -> float:
        return float(np.max(self.per_sample_mse))

    def gain_bin_table(self) -> dict:
        """bin center (dB) -> (mean MSE, count); counts sum to n_samples."""
        table = {}
        for mse, gain in zip(self.per_sample_mse, self.per_sample_gain):
            b = gain_bin(gain)
            total, count = table.get(b, (0.0, 0))
            table[b] = (total + mse, count + 1)
        return {b: (total / count, count) for b, (total, count) in sorted(table.items())}

    def power_gain_table(self) -> dict:
        """(p_out dBm, gain bin dB) -> (mean MSE, count), for reporting."""
        table = {}
        for mse, gain, p_out in zip(self.per_sample_mse, self.per_sample_gain, self.per_sample_p_out):
            key = (round(float(p_out), 6), gain_bin(gain))
            total, count = table.get(key, (0.0, 0))
            table[key] = (total + mse, count + 1)
        return {k: (total / count, count) for k, (total, count) in sorted(table.items())}


def gain_bin(gain_db: float) -> int:
    """Nearest 1 dB bin center; exact half-dB values round up."""
    if not np.isfinite(gain_db):
        raise ValueError("gain must be finite")
    return int(np.floor(gain_db + 0.5))


def evaluate(
    model: MlpModel,
    dataset: Dataset,
    test_device: str,
    scenario: str = "intra",
    train_device: str | None = None,
) -> EvalReport:
    """Model vs. the test split of one device, on normalized dB spectra."""
    n_channels = dataset.grid().n_channels
    if model.n_outputs != n_channels or model.n_inputs != n_channels + 2:
        raise ValueError(
            f"model dims {model.dims} do not match the dataset's {n_channels}-channel grid"
        )
    samples = dataset.subset("test", test_device)
    if not samples:
        raise ValueError(f"dataset has no test samples for device {test_device!r}")
    x, y = encode_batch(samples)
    pred, _ = forward(model, x)
    sq = (pred - y) ** 2
    return EvalReport(
        scenario=scenario,
        train_device=train_device if train_device is not None else test_device,
        test_device=test_device,
        per_sample_mse=sq.mean(axis=1),
        per_sample_gain=np.array([s.gain_db for s in samples]),
        per_sample_p_out=np.array([s.p_out_dbm for s in samples]),
        per_channel_mse=sq.mean(axis=0),
        n_samples=len(samples),
    )


@dataclass
class ScenarioResults:
    """All reports from one protocol run plus the trained models."""

    intra: list
    inter: list
    joint: list
    models: dict
    loss_traces: dict

    def all_reports(self) -> list:
        return list(self.intra) + list(self.inter) + list(self.joint)

    def mean_mse(self, scenario: str) -> float:
        reports = {"intra": self.intra, "inter": self.inter, "joint": self.joint}[scenario]
        return float(np.mean([r.mean_mse for r in reports]))

    def summary(self) -> dict:
        """Scenario -> mean MSE, covering only the scenarios that ran."""
        reports = {"intra": self.intra, "inter": self.inter, "joint": self.joint}
        return {name: self.mean_mse(name) for name in reports if reports[name]}


def run_scenarios(dataset: Dataset, train_config: TrainConfig, device_ids=None) -> ScenarioResults:
    """Train per-device and joint models, then run all 3+6+3 evaluations.

    Per-device and joint trainings use seeds derived from train_config.seed
    and the device label, so a scenario run is reproducible end to end and
    each training is independent of the others.
    """
    ids = list(device_ids) if device_ids is not None else dataset.device_ids()
    if len(ids) < 2:
        raise ValueError("scenario protocol needs at least two devices")

    models = {}
    traces = {}
    for dev in ids:
        cfg = replace(train_config, seed=subseed(train_config.seed, "train", dev))
        models[dev], traces[dev] = train(dataset.subset("train", dev), cfg)
    joint_cfg = replace(train_config, seed=subseed(train_config.seed, "train", "joint"))
    models["joint"], traces["joint"] = train(dataset.subset("train"), joint_cfg)

    intra = [evaluate(models[dev], dataset, dev, "intra", dev) for dev in ids]
    inter = [
        evaluate(models[ti], dataset, tj, "inter", ti)
        for ti in ids
        for tj in ids
        if tj != ti
    ]
    joint = [evaluate(models["joint"], dataset, dev, "joint", "joint") for dev in ids]
    return ScenarioResults(intra=intra, inter=inter, joint=joint, models=models, loss_traces=traces)


def per_frequency_mse(reports) -> np.ndarray:
    """Per-channel MSE pooled over every sample of the given reports."""
    reports = list(reports)
    if not reports:
        raise ValueError("need at least one report to pool")
    total = np.zeros_like(reports[0].per_channel_mse)
    n = 0
    for r in reports:
        total += r.per_channel_mse * r.n_samples
        n += r.n_samples
    return total / n


# ---------------------------------------------------------------------------
# Oracle-gap measurement and calibration of the perturbation scale.

_CAL_POWER_GRID = ((-1.0, 15.0), (2.0, 18.0), (5.0, 21.0), (-7.0, 15.0))


def pairwise_oracle_gap(dev_a, dev_b, n_mc: int, seed: int, walk: WalkConfig | None = None,
                        power_grid=None) -> float:
    """Mean over random inputs and channels of the squared output difference
    between two specific devices (dB^2)."""
    walk = walk if walk is not None else WalkConfig()
    power_grid = power_grid if power_grid is not None else _CAL_POWER_GRID
    root = RngStream(seed, ("gap",))
    gaps = np.empty(n_mc)
    for i in range(n_mc):
        p_in, p_out = power_grid[i % len(power_grid)]
        prof = shape_profile(root.child("profile", i), walk, dev_a.grid, p_in)
        diff = amplify(dev_a, prof, p_out).powers_dbm - amplify(dev_b, prof, p_out).powers_dbm
        gaps[i] = np.mean(diff**2)
    return float(np.mean(gaps))


def mc_oracle_gap(make: MakeParams, grid: FrequencyGrid, n_mc: int, seed: int,
                  walk: WalkConfig | None = None, power_grid=None) -> float:
    """Monte-Carlo estimate of the make-level oracle gap: expected mean-square
    output difference between two random units, over random inputs.

    Device seeds are a pure function of (seed, draw index), so evaluations at
    different sigma values share their underlying unit draws; the estimate is
    then exactly monotone in the perturbation scale.
    """
    walk = walk if walk is not None else WalkConfig()
    power_grid = power_grid if power_grid is not None else _CAL_POWER_GRID
    root = RngStream(seed, ("cal",))
    gaps = np.empty(n_mc)
    for i in range(n_mc):
        dev_a = make_device(make, grid, "cal-a", subseed(seed, "cal-dev-a", i))
        dev_b = make_device(make, grid, "cal-b", subseed(seed, "cal-dev-b", i))
        p_in, p_out = power_grid[i % len(power_grid)]
        prof = shape_profile(root.child("profile", i), walk, grid, p_in)
        diff = amplify(dev_a, prof, p_out).powers_dbm - amplify(dev_b, prof, p_out).powers_dbm
        gaps[i] = np.mean(diff**2)
    return float(np.mean(gaps))


def calibrate_device_sigma(
    make: MakeParams,
    grid: FrequencyGrid,
    target_gap_db2: float,
    n_mc: int = 160,
    seed: int = 977001,
    walk: WalkConfig | None = None,
    power_grid=None,
    tol_frac: float = 0.10,
    max_iter: int = 60,
) -> float:
    """Bisect the master perturbation scale until the Monte-Carlo oracle gap
    hits target_gap_db2 within +-tol_frac.

    All perturbations scale with sigma_dev, so the gap is monotone
    nondecreasing in it and zero at zero; a zero target returns exactly 0.
    Raises CalibrationError when the target cannot be bracketed.
    """
    if target_gap_db2 < 0:
        raise ValueError("target_gap_db2 must be >= 0")
    if target_gap_db2 == 0.0:
        return 0.0

    def gap(sigma: float) -> float:
        return mc_oracle_gap(replace(make, sigma_dev_db=sigma), grid, n_mc, seed, walk, power_grid)

    lo, g_lo = 0.0, 0.0
    hi = make.sigma_dev_db if make.sigma_dev_db > 0 else 0.05
    g_hi = gap(hi)
    expansions = 0
    while g_hi < target_gap_db2:
        expansions += 1
        if expansions > 20:
            raise CalibrationError(
                f"cannot bracket target {target_gap_db2} dB^2: gap({hi:.3g}) = {g_hi:.3g} dB^2"
            )
        lo, g_lo = hi, g_hi
        hi *= 2.0
        g_hi = gap(hi)

    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        g_mid = gap(mid)
        if abs(g_mid - target_gap_db2) <= tol_frac * target_gap_db2:
            return mid
        if g_mid < target_gap_db2:
            lo, g_lo = mid, g_mid
        else:
            hi, g_hi = mid, g_mid
    raise CalibrationError(
        f"bisection did not converge: last bracket [{lo:.6g}, {hi:.6g}] "
        f"with gaps [{g_lo:.4g}, {g_hi:.4g}] around target {target_gap_db2}"
    )


# ---------------------------------------------------------------------------
# Report output.


def _report_dict(report: EvalReport) -> dict:
    return {
        "scenario": report.scenario,
        "train_device": report.train_device,
        "test_device": report.test_device,
        "n_samples": report.n_samples,
        "mean_mse_db2": report.mean_mse,
        "max_mse_db2": report.max_mse,
        "per_gain_bin": {
            str(b): {"mean_mse_db2": mse, "count": count}
            for b, (mse, count) in report.gain_bin_table().items()
        },
        "per_channel_mse_db2": report.per_channel_mse.tolist(),
    }


def write_reports_json(results: ScenarioResults, path, extra: dict | None = None) -> None:
    """Machine-readable report: per-pair aggregates plus scenario means and
    the pooled inter-device per-frequency MSE."""
    doc = {
        "format": "edfagain-report",
        "version": 1,
        "summary": results.summary(),
        "reports": [_report_dict(r) for r in results.all_reports()],
    }
    if results.inter:
        doc["inter_per_channel_mse_db2"] = per_frequency_mse(results.inter).tolist()
    if extra:
        doc.update(extra)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh)
        fh.write("\n")


def write_reports_csv(results: ScenarioResults, path) -> None:
    """Flat CSV, one row per (pair, output power, gain bin) cell."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["scenario", "train_device", "test_device", "p_out_dbm", "gain_bin_db", "mse_db2", "count"]
        )
        for r in results.all_reports():
            for (p_out, bin_db), (mse, count) in r.power_gain_table().items():
                writer.writerow(
                    [r.scenario, r.train_device, r.test_device, repr(p_out), bin_db, repr(mse), count]
                )
