#!/usr/bin/env python3
"""Full synthetic pipeline: generate, train, evaluate, ablate.

Writes everything under --out (default runs/synthetic): dataset files, the
trained checkpoint with metrics, an evaluation report, and the ablation
table. Pass --quick for a small-epoch smoke version of the same flow.
"""

import argparse
import dataclasses
import json
import sys
from pathlib import Path

from chronospike.cli import main as cli
from chronospike.config import save_config
from chronospike.presets import moving_bars_acceptance_config


def run(argv) -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="runs/synthetic")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--quick", action="store_true", help="2-epoch smoke run")
    ap.add_argument("--skip-ablate", action="store_true")
    args = ap.parse_args(argv)

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    cfg = moving_bars_acceptance_config(seed=args.seed)
    if args.quick:
        cfg = dataclasses.replace(
            cfg,
            harness=dataclasses.replace(cfg.harness, max_epochs_l1=2, max_epochs_l2=2),
        )

    spec_path = out / "generator_spec.json"
    spec_path.write_text(json.dumps(dataclasses.asdict(cfg.synthetic), indent=2) + "\n")
    train_ds = out / "train.cspk"
    test_ds = out / "test.cspk"
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

    rc = cli(["train", "--config", str(cfg_path), "--out", str(out / "train")])
    if rc not in (0, 4):
        return rc

    rc_eval = cli(
        [
            "eval",
            "--checkpoint", str(out / "train" / "checkpoint_final.json"),
            "--data", str(test_ds),
            "--out", str(out / "eval"),
        ]
    )
    if rc_eval != 0:
        return rc_eval

    if not args.skip_ablate:
        ablate_args = ["ablate", "--config", str(cfg_path), "--out", str(out / "ablate")]
        if args.quick:
            ablate_args += ["--max-epochs", "2", "--variants", "full,no-lateral"]
        rc_abl = cli(ablate_args)
        if rc_abl != 0:
            return rc_abl
    return rc


if __name__ == "__main__":
    sys.exit(run(sys.argv[1:]))
