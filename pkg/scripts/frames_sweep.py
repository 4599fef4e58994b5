#!/usr/bin/env python3
"""Accuracy as a function of how many input frames the network may see.

Trains the full model and the no-lateral variant on the synthetic task
(reusing checkpoints if they already exist under --out), then evaluates
both across a frame-limit sweep and writes the two curves side by side to
<out>/sweep.csv.
"""

import argparse
import dataclasses
import json
import sys
from pathlib import Path

from chronospike.cli import main as cli
from chronospike.config import save_config
from chronospike.presets import moving_bars_acceptance_config


def ensure_trained(cfg_path: Path, out: Path, disable: str | None) -> int:
    if (out / "checkpoint_final.json").exists():
        return 0
    argv = ["train", "--config", str(cfg_path), "--out", str(out)]
    if disable:
        argv += ["--disable", disable]
    rc = cli(argv)
    return rc if rc not in (0, 4) else 0


def run(argv) -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="runs/sweep")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--limits", default="5,10,15,20,25,30,40,50")
    args = ap.parse_args(argv)

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    cfg = moving_bars_acceptance_config(seed=args.seed)

    spec_path = out / "generator_spec.json"
    spec_path.write_text(json.dumps(dataclasses.asdict(cfg.synthetic), indent=2) + "\n")
    train_ds, test_ds = out / "train.cspk", out / "test.cspk"
    if not test_ds.exists():
        rc = cli(
            [
                "ingest",
                "--synthetic", str(spec_path),
                "--output", str(train_ds),
                "--output-test", str(test_ds),
                "--train-per-class", str(cfg.synthetic_train_per_class),
                "--test-per-class", str(cfg.synthetic_test_per_class),
            ]
        )
        if rc != 0:
            return rc
    cfg = dataclasses.replace(
        cfg, synthetic=None, train_data=str(train_ds), test_data=str(test_ds)
    )
    cfg_path = out / "run_config.json"
    save_config(cfg, cfg_path)

    curves = {}
    for name, disable in (("full", None), ("no_lateral", "lateral")):
        run_dir = out / name
        rc = ensure_trained(cfg_path, run_dir, disable)
        if rc != 0:
            return rc
        rc = cli(
            [
                "eval",
                "--checkpoint", str(run_dir / "checkpoint_final.json"),
                "--data", str(test_ds),
                "--limit-frames", args.limits,
                "--out", str(run_dir),
            ]
        )
        if rc != 0:
            return rc
        report = json.loads((run_dir / "eval.json").read_text())
        curves[name] = dict((int(x), acc) for x, acc in report["curve"])

    limits = sorted(curves["full"])
    with open(out / "sweep.csv", "w") as f:
        f.write("limit_frames,full,no_lateral\n")
        for x in limits:
            f.write(f"{x},{curves['full'][x]!r},{curves['no_lateral'][x]!r}\n")
    print(f"wrote {out / 'sweep.csv'}")
    for x in limits:
        print(f"{x:4d}  full={curves['full'][x]:.3f}  no_lateral={curves['no_lateral'][x]:.3f}")
    return 0


if __name__ == "__main__":
    sys.exit(run(sys.argv[1:]))
