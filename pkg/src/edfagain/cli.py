"""Command-line front end for the amplifier-model pipeline.

Subcommands: gen-data, train, eval, gradcheck, predict. Exit codes follow one
contract everywhere: 0 success, 1 check failure, 2 usage or config error,
3 numeric failure. Every command is deterministic given identical inputs, so
rerunning one overwrites its outputs with byte-identical files.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import replace
from types import SimpleNamespace

import numpy as np

from .dataset import build_dataset, read_dataset, write_dataset
from .evaluation import ScenarioResults, evaluate, write_reports_csv, write_reports_json
from .experiment import ConfigError, ExperimentConfig
from .gradcheck import run_gradcheck
from .model import TrainConfig, TrainingDiverged, load_model, predict, save_model, train
from .numerics import dbm_to_mw, mw_to_dbm, subseed

EXIT_OK = 0
EXIT_CHECK = 1
EXIT_USAGE = 2
EXIT_NUMERIC = 3


def _read_json(path):
    """Load a JSON document, tagging parse errors with the file and location."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise ValueError(f"{path}: {exc}") from exc


def _stem(path: str) -> str:
    return os.path.splitext(path)[0]


def cmd_gen_data(args) -> int:
    config = ExperimentConfig.from_json(args.config)
    devices = config.build_devices()
    dataset = build_dataset(
        devices,
        config.grid,
        config.walk,
        config.power_grid_dbm,
        config.seed,
        extra_metadata={"train": config.train.to_dict(), "config_hash": config.config_hash()},
    )
    write_dataset(dataset, args.out)

    counts = {}
    for s in dataset.samples:
        # p_in_dbm on the sample is the realized total; recover the requested
        # pair from the gain, which survives normalization exactly.
        key = (s.device_id, round(s.p_out_dbm, 6), round(s.p_out_dbm - s.gain_db, 6))
        counts[key] = counts.get(key, 0) + 1
    for (dev, p_out, p_in), n in sorted(counts.items()):
        print(f"{dev}  p_in={p_in:+.1f} dBm  p_out={p_out:+.1f} dBm  {n} samples")
    print(f"total {len(dataset)} samples -> {args.out}")
    return EXIT_OK


def _base_train_config(metadata: dict) -> TrainConfig:
    if "train" in metadata:
        return TrainConfig.from_dict(metadata["train"])
    return TrainConfig()


def cmd_train(args) -> int:
    dataset = read_dataset(args.data)
    ids = dataset.device_ids()
    if args.device != "joint" and args.device not in ids:
        print(
            f"error: unknown device {args.device!r}; dataset has {ids} (or use 'joint')",
            file=sys.stderr,
        )
        return EXIT_USAGE

    base = _base_train_config(dataset.metadata)
    # Same per-device seed derivation as the scenario runner, so a CLI-trained
    # checkpoint is interchangeable with one from run_scenarios.
    config = replace(base, seed=subseed(base.seed, "train", args.device))
    samples = dataset.subset("train", None if args.device == "joint" else args.device)
    if not samples:
        print(f"error: no training samples for device {args.device!r}", file=sys.stderr)
        return EXIT_USAGE

    model, trace = train(samples, config)
    meta = {
        "trained_on": args.device,
        "train_config": config.to_dict(),
        "n_train_samples": len(samples),
        "final_train_mse_db2": trace[-1],
        "dataset_seed": dataset.metadata.get("seed"),
        "config_hash": dataset.metadata.get("config_hash"),
    }
    save_model(model, args.out, meta=meta)

    trace_path = _stem(args.out) + ".loss.csv"
    with open(trace_path, "w", encoding="utf-8", newline="") as fh:
        fh.write("epoch,train_mse_db2\n")
        for epoch, loss in enumerate(trace):
            fh.write(f"{epoch},{loss!r}\n")

    print(f"device {args.device}: {len(samples)} samples, {len(trace)} epochs")
    print(f"final training MSE {trace[-1]:.6f} dB^2")
    print(f"checkpoint -> {args.out}")
    print(f"loss trace -> {trace_path}")
    return EXIT_OK


def cmd_eval(args) -> int:
    dataset = read_dataset(args.data)
    ids = dataset.device_ids()

    needed = {"intra": ids, "inter": ids, "joint": ["joint"], "all": ids + ["joint"]}[args.scenario]
    paths = {name: os.path.join(args.models, name + ".json") for name in needed}
    missing = [p for p in paths.values() if not os.path.exists(p)]
    if missing:
        print("error: missing model checkpoints: " + ", ".join(missing), file=sys.stderr)
        return EXIT_USAGE
    models = {name: load_model(p)[0] for name, p in paths.items()}

    intra, inter, joint = [], [], []
    if args.scenario in ("intra", "all"):
        intra = [evaluate(models[d], dataset, d, "intra", d) for d in ids]
    if args.scenario in ("inter", "all"):
        inter = [
            evaluate(models[ti], dataset, tj, "inter", ti)
            for ti in ids
            for tj in ids
            if tj != ti
        ]
    if args.scenario in ("joint", "all"):
        joint = [evaluate(models["joint"], dataset, d, "joint", "joint") for d in ids]

    results = ScenarioResults(intra=intra, inter=inter, joint=joint, models=models, loss_traces={})
    extra = {"scenario": args.scenario}
    if "config_hash" in dataset.metadata:
        extra["config_hash"] = dataset.metadata["config_hash"]
    write_reports_json(results, args.out, extra=extra)
    csv_path = _stem(args.out) + ".csv"
    write_reports_csv(results, csv_path)

    print(f"{'scenario':<10} {'pairs':>5} {'mean MSE (dB^2)':>16}")
    for name, value in results.summary().items():
        n = len({"intra": intra, "inter": inter, "joint": joint}[name])
        print(f"{name:<10} {n:>5} {value:>16.6f}")
    print(f"reports -> {args.out}, {csv_path}")
    return EXIT_OK


def cmd_gradcheck(args) -> int:
    if args.trials < 1:
        print("error: --trials must be >= 1", file=sys.stderr)
        return EXIT_USAGE
    result = run_gradcheck(args.trials)
    print(
        f"{result.n_checked} coordinates checked, {result.n_skipped} skipped "
        f"(activation-boundary crossings)"
    )
    print(f"max relative error {result.max_rel_err:.3e}")
    if not result.passed:
        print(f"worst: {result.worst}", file=sys.stderr)
        return EXIT_CHECK
    return EXIT_OK


def cmd_predict(args) -> int:
    model, _ = load_model(args.model)
    doc = _read_json(args.input)
    psd = doc.get("psd_dbm") if isinstance(doc, dict) else doc
    if psd is None:
        print(f"error: {args.input}: expected a JSON list or an object with 'psd_dbm'", file=sys.stderr)
        return EXIT_USAGE
    powers = np.asarray(psd, dtype=float)
    n_channels = model.n_inputs - 2
    if powers.ndim != 1 or powers.size != n_channels:
        print(
            f"error: {args.input}: expected {n_channels} channel powers, got shape {powers.shape}",
            file=sys.stderr,
        )
        return EXIT_USAGE
    if not np.all(np.isfinite(powers)):
        print(f"error: {args.input}: channel powers must be finite", file=sys.stderr)
        return EXIT_USAGE

    # The file fixes the shape; --p-in fixes the total, so normalizing the
    # rescaled spectrum reduces to subtracting the file's own total power.
    total_dbm = mw_to_dbm(float(np.sum(dbm_to_mw(powers))))
    norm = powers - total_dbm
    record = SimpleNamespace(psd_in_norm_db=norm, p_in_dbm=args.p_in, p_out_dbm=args.p_out)
    out_norm = predict(model, record)
    doc = {
        "p_in_dbm": args.p_in,
        "p_out_dbm": args.p_out,
        "psd_out_norm_db": out_norm.tolist(),
        "psd_out_dbm": (out_norm + args.p_out).tolist(),
    }
    print(json.dumps(doc))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="edfagain",
        description="Surrogate-amplifier datasets, gain-model training and device-generalization reports.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-data", help="generate a labeled dataset from a config file")
    p.add_argument("--config", required=True, help="experiment config (JSON)")
    p.add_argument("--out", required=True, help="output dataset (JSON-Lines)")
    p.set_defaults(func=cmd_gen_data)

    p = sub.add_parser("train", help="train one model on a device's train split")
    p.add_argument("--data", required=True, help="dataset file from gen-data")
    p.add_argument("--device", required=True, help="device id, or 'joint' for all devices")
    p.add_argument("--out", required=True, help="checkpoint path (JSON); loss trace lands beside it")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="evaluate checkpoints on test splits")
    p.add_argument("--scenario", required=True, choices=["intra", "inter", "joint", "all"])
    p.add_argument("--data", required=True, help="dataset file from gen-data")
    p.add_argument("--models", required=True, help="directory with <device>.json / joint.json")
    p.add_argument("--out", required=True, help="JSON report path; CSV lands beside it")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("gradcheck", help="finite-difference check of the analytic gradients")
    p.add_argument("--trials", type=int, default=100, help="random (net, input) trials (default 100)")
    p.set_defaults(func=cmd_gradcheck)

    p = sub.add_parser("predict", help="run one spectrum through a trained checkpoint")
    p.add_argument("--model", required=True, help="checkpoint from train")
    p.add_argument("--input", required=True, help="JSON file with 83 channel powers in dBm")
    p.add_argument("--p-in", type=float, required=True, help="total input power (dBm)")
    p.add_argument("--p-out", type=float, required=True, help="total output power (dBm)")
    p.set_defaults(func=cmd_predict)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except TrainingDiverged as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
