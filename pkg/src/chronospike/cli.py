"""Command line entry points.

Four subcommands: ``ingest`` turns raw recordings or a synthetic generator
spec into dataset files, ``train`` runs the two training phases and writes
checkpoints plus metrics, ``eval`` scores a checkpoint on a dataset, and
``ablate`` trains a grid of mechanism-removal variants and tabulates the
accuracy drops.

Exit codes: 0 success, 2 input problem (missing or malformed files, bad
config keys, empty datasets), 3 state mismatch (checkpoint format, version,
or config hash conflicts), 4 training finished without delay convergence
(all results are still written).
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from pathlib import Path

from .config import (
    DISABLE_CHOICES,
    ConfigError,
    RunConfig,
    SyntheticSpec,
    apply_overrides,
    config_hash,
    load_config,
    save_config,
)
from .events import (
    DatasetFormatError,
    DecodeError,
    IngestError,
    UnknownSubject,
    load_dataset,
    read_gesture_dir,
    save_dataset,
    split_dataset,
)
from .harness import (
    build_pooled_cache,
    evaluate,
    frames_sweep,
    train_layer1,
    train_layer2,
    write_spikes_csv,
)
from .synthetic import InvalidSpec, gen_synthetic, oracle_accuracy, validate_spec
from .topology import (
    InvalidConfig,
    StateError,
    build_network,
    export_kernels,
    layer1_hash,
    load_checkpoint,
    save_checkpoint,
    state_hash,
)

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_STATE = 3
EXIT_NO_CONVERGENCE = 4

_INPUT_ERRORS = (
    ConfigError,
    InvalidConfig,
    InvalidSpec,
    DatasetFormatError,
    DecodeError,
    IngestError,
    UnknownSubject,
    FileNotFoundError,
    NotADirectoryError,
    IsADirectoryError,
    json.JSONDecodeError,
    ValueError,
)

ABLATION_VARIANTS: dict[str, dict] = {
    "full": {},
    "no-interval-homeostasis": {"disable": ["homeo"]},
    "no-threshold-adaptation": {"disable": ["threshold"]},
    "no-decision-homeostasis": {"disable": ["decision-homeo"]},
    "no-decentralization": {"disable": ["decentralize"]},
    "no-lateral": {"disable": ["lateral"]},
    "shared-inhibitory-rules": {"inh_rules_shared": True},
    "fixed-delays": {"delay_mode": "fixed"},
    "random-frozen-delays": {"delay_mode": "random_frozen"},
}

DEFAULT_ABLATIONS = (
    "full",
    "no-interval-homeostasis",
    "shared-inhibitory-rules",
    "no-decision-homeostasis",
    "no-lateral",
    "fixed-delays",
    "random-frozen-delays",
    "no-decentralization",
)

# Accuracy drops (train pp, test pp) reported by the reference experiments on
# the gesture benchmark. Shown next to measured drops for orientation only;
# nothing asserts against them.
REFERENCE_DELTAS_PP: dict[str, tuple[float, float]] = {
    "no-interval-homeostasis": (0.5, 2.1),
    "no-threshold-adaptation": (1.45, 3.16),
    "shared-inhibitory-rules": (1.98, 1.58),
    "no-decision-homeostasis": (2.50, 3.68),
    "no-lateral": (1.53, 1.58),
    "fixed-delays": (1.85, 3.15),
    "random-frozen-delays": (3.3, 3.68),
    "no-decentralization": (4.88, 7.39),
}


def _fail(message: str, code: int) -> int:
    print(f"error: {message}", file=sys.stderr)
    return code


def _load_data(cfg: RunConfig):
    """Training and test samples from whichever source the config names."""
    if cfg.synthetic is not None:
        validate_spec(cfg.synthetic)
        train_s = gen_synthetic(cfg.synthetic, cfg.synthetic_train_per_class, seed_offset=0)
        test_s = gen_synthetic(cfg.synthetic, cfg.synthetic_test_per_class, seed_offset=1)
        return train_s, test_s
    if cfg.train_data is None:
        raise ConfigError("config names neither a synthetic spec nor train_data")
    train_s, _ = load_dataset(cfg.train_data)
    test_s = None
    if cfg.test_data is not None:
        test_s, _ = load_dataset(cfg.test_data)
    return train_s, test_s


def _with_cli_overrides(cfg: RunConfig, args) -> RunConfig:
    if getattr(args, "seed", None) is not None:
        cfg = dataclasses.replace(cfg, seed=args.seed)
    disable = getattr(args, "disable", None)
    if disable:
        merged = tuple(dict.fromkeys(tuple(cfg.disabled) + tuple(disable)))
        cfg = dataclasses.replace(cfg, disabled=merged)
    if getattr(args, "set", None):
        cfg = apply_overrides(cfg, args.set)
    if getattr(args, "max_epochs", None) is not None:
        cfg = apply_overrides(
            cfg,
            [
                f"harness.max_epochs_l1={args.max_epochs}",
                f"harness.max_epochs_l2={args.max_epochs}",
            ],
        )
    return cfg


def _class_histogram(samples) -> dict[str, int]:
    hist: dict[str, int] = {}
    for s in samples:
        hist[str(s.label)] = hist.get(str(s.label), 0) + 1
    return dict(sorted(hist.items(), key=lambda kv: int(kv[0])))


# -- ingest -------------------------------------------------------------------


def cmd_ingest(args) -> int:
    if bool(args.input) == bool(args.synthetic):
        return _fail("exactly one of --input and --synthetic is required", EXIT_INPUT)
    report: dict = {}
    if args.synthetic:
        spec = SyntheticSpec.from_dict(json.loads(Path(args.synthetic).read_text()))
        validate_spec(spec)
        train_s = gen_synthetic(spec, args.train_per_class, seed_offset=0)
        save_dataset(args.output, train_s, meta={"source": "synthetic"})
        report.update(
            {
                "output": str(args.output),
                "train_samples": len(train_s),
                "train_per_class": _class_histogram(train_s),
                "oracle_train_accuracy": float(oracle_accuracy(spec, train_s)),
            }
        )
        if args.output_test:
            test_s = gen_synthetic(spec, args.test_per_class, seed_offset=1)
            save_dataset(args.output_test, test_s, meta={"source": "synthetic", "split": "test"})
            report["output_test"] = str(args.output_test)
            report["test_samples"] = len(test_s)
            report["oracle_test_accuracy"] = float(oracle_accuracy(spec, test_s))
    else:
        root = Path(args.input)
        if not root.is_dir():
            return _fail(f"input directory not found: {root}", EXIT_INPUT)
        samples = read_gesture_dir(root, args.fps, args.max_frames)
        train_s, test_s = split_dataset(samples)
        save_dataset(args.output, train_s, meta={"source": str(root), "split": "train"})
        report.update(
            {
                "output": str(args.output),
                "recordings": len(samples),
                "train_samples": len(train_s),
                "test_samples": len(test_s),
                "train_per_class": _class_histogram(train_s),
                "test_per_class": _class_histogram(test_s),
            }
        )
        if args.output_test:
            save_dataset(args.output_test, test_s, meta={"source": str(root), "split": "test"})
            report["output_test"] = str(args.output_test)
        else:
            report["note"] = "test split not written (no --output-test)"
    print(json.dumps(report, indent=2, sort_keys=True))
    return EXIT_OK


# -- train --------------------------------------------------------------------


def _phase_failed(cfg: RunConfig, phase_result) -> bool:
    return (
        cfg.delay_learning_on
        and phase_result.presentations > 0
        and not phase_result.converged
    )


def cmd_train(args) -> int:
    cfg = _with_cli_overrides(load_config(args.config), args)
    out = Path(args.out) if args.out else Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    train_samples, test_samples = _load_data(cfg)
    if not train_samples:
        return _fail("training set is empty", EXIT_INPUT)
    save_config(cfg, out / "effective_config.json")
    ch = config_hash(cfg)

    net = build_network(cfg, train_samples[0].frames.shape[1:])
    with open(out / "metrics.jsonl", "w") as mf:
        mf.write(json.dumps({"config_hash": ch, "n_train": len(train_samples)}, sort_keys=True) + "\n")

        def write_row(row: dict) -> None:
            mf.write(json.dumps(row, sort_keys=True) + "\n")

        r1 = train_layer1(net, train_samples, metrics=write_row)
        save_checkpoint(out / "checkpoint_layer1.json", net)
        h1 = layer1_hash(net)
        cache = build_pooled_cache(net, train_samples)
        r2 = train_layer2(net, train_samples, pooled_cache=cache, metrics=write_row)
    h1_final = layer1_hash(net)
    save_checkpoint(out / "checkpoint_final.json", net)
    export_kernels(net, out)

    train_eval = evaluate(net, train_samples)
    summary = {
        "config_hash": ch,
        "seed": cfg.seed,
        "epochs_layer1": r1.epochs,
        "epochs_layer2": r2.epochs,
        "converged_layer1": r1.converged,
        "converged_layer2": r2.converged,
        "presentations": r1.presentations + r2.presentations,
        "gate_violations": r2.gate_violations,
        "layer1_frozen_in_phase2": h1 == h1_final,
        "train_accuracy": train_eval.accuracy,
        "train_abstained": int(train_eval.abstained.sum()),
        "state_hash": state_hash(net),
    }
    if test_samples:
        test_eval = evaluate(net, test_samples)
        summary["test_accuracy"] = test_eval.accuracy
        summary["test_abstained"] = int(test_eval.abstained.sum())
    (out / "summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    print(json.dumps(summary, indent=2, sort_keys=True))
    if _phase_failed(cfg, r1) or _phase_failed(cfg, r2):
        return EXIT_NO_CONVERGENCE
    return EXIT_OK


# -- eval ---------------------------------------------------------------------


def _parse_limits(text: str | None):
    if text is None:
        return None
    limits = [int(part) for part in text.split(",") if part.strip()]
    if not limits or any(x <= 0 for x in limits):
        raise ConfigError(f"bad --limit-frames value: {text!r}")
    return limits


def cmd_eval(args) -> int:
    ckpt = Path(args.checkpoint)
    if not ckpt.exists():
        return _fail(f"checkpoint not found: {ckpt}", EXIT_INPUT)
    net = load_checkpoint(ckpt)
    if args.config:
        other = load_config(args.config)
        if config_hash(other) != config_hash(net.cfg):
            return _fail(
                "config hash mismatch: --config does not describe the checkpointed network",
                EXIT_STATE,
            )
    data_path = args.data or net.cfg.test_data
    if not data_path:
        return _fail("no evaluation data: pass --data or set test_data in the config", EXIT_INPUT)
    if not Path(data_path).exists():
        return _fail(f"dataset not found: {data_path}", EXIT_INPUT)
    samples, _meta = load_dataset(data_path)
    if not samples:
        return _fail(f"evaluation set is empty: {data_path}", EXIT_INPUT)

    limits = _parse_limits(args.limit_frames)
    out_dir = Path(args.out) if args.out else None
    if out_dir:
        out_dir.mkdir(parents=True, exist_ok=True)
    hash_before = state_hash(net)
    report: dict = {
        "checkpoint": str(ckpt),
        "data": str(data_path),
        "n": len(samples),
        "state_hash": hash_before,
    }
    if limits is not None and len(limits) > 1:
        curve = frames_sweep(net, samples, limits)
        report["curve"] = [[x, acc] for x, acc in curve]
        if out_dir:
            with open(out_dir / "curve.csv", "w") as f:
                f.write("limit_frames,accuracy\n")
                for x, acc in curve:
                    f.write(f"{x},{acc!r}\n")
            report["curve_csv"] = str(out_dir / "curve.csv")
        if args.dump_spikes:
            rows: list = []
            evaluate(net, samples, spike_rows=rows)
            write_spikes_csv(args.dump_spikes, rows)
            report["spikes_csv"] = str(args.dump_spikes)
    else:
        limit = limits[0] if limits else None
        rows = [] if args.dump_spikes else None
        res = evaluate(net, samples, limit_frames=limit, spike_rows=rows)
        if args.dump_spikes:
            write_spikes_csv(args.dump_spikes, rows)
            report["spikes_csv"] = str(args.dump_spikes)
        report.update(
            {
                "accuracy": res.accuracy,
                "correct": res.correct,
                "abstained": res.abstained.tolist(),
                "confusion": res.confusion.tolist(),
                "decision_totals": res.decision_totals.tolist(),
            }
        )
        if limit is not None:
            report["limit_frames"] = limit
    report["state_hash_after"] = state_hash(net)
    if out_dir:
        (out_dir / "eval.json").write_text(json.dumps(report, indent=2, sort_keys=True) + "\n")
    print(json.dumps(report, indent=2, sort_keys=True))
    return EXIT_OK


# -- ablate ---------------------------------------------------------------


def variant_config(base: RunConfig, name: str) -> RunConfig:
    mods = ABLATION_VARIANTS[name]
    cfg = base
    if "disable" in mods:
        merged = tuple(dict.fromkeys(tuple(cfg.disabled) + tuple(mods["disable"])))
        cfg = dataclasses.replace(cfg, disabled=merged)
    plain = {k: v for k, v in mods.items() if k != "disable"}
    if plain:
        cfg = dataclasses.replace(cfg, **plain)
    return cfg


def _run_variant(cfg: RunConfig, train_samples, test_samples, out: Path) -> dict:
    out.mkdir(parents=True, exist_ok=True)
    net = build_network(cfg, train_samples[0].frames.shape[1:])
    with open(out / "metrics.jsonl", "w") as mf:
        mf.write(json.dumps({"config_hash": config_hash(cfg)}, sort_keys=True) + "\n")

        def write_row(row: dict) -> None:
            mf.write(json.dumps(row, sort_keys=True) + "\n")

        r1 = train_layer1(net, train_samples, metrics=write_row)
        cache = build_pooled_cache(net, train_samples)
        r2 = train_layer2(net, train_samples, pooled_cache=cache, metrics=write_row)
    save_checkpoint(out / "checkpoint_final.json", net)
    row = {
        "train_accuracy": evaluate(net, train_samples).accuracy,
        "test_accuracy": evaluate(net, test_samples).accuracy,
        "converged": bool(r1.converged and r2.converged),
        "gate_violations": r2.gate_violations,
        "epochs_layer1": r1.epochs,
        "epochs_layer2": r2.epochs,
    }
    return row


def cmd_ablate(args) -> int:
    base = _with_cli_overrides(load_config(args.config), args)
    names = tuple(x.strip() for x in args.variants.split(",")) if args.variants else DEFAULT_ABLATIONS
    unknown = [n for n in names if n not in ABLATION_VARIANTS]
    if unknown:
        return _fail(
            f"unknown variant(s): {', '.join(unknown)} "
            f"(choices: {', '.join(sorted(ABLATION_VARIANTS))})",
            EXIT_INPUT,
        )
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    train_samples, test_samples = _load_data(base)
    if not train_samples:
        return _fail("training set is empty", EXIT_INPUT)
    if not test_samples:
        return _fail("ablation needs a test set (synthetic config or test_data)", EXIT_INPUT)

    rows: dict[str, dict] = {}
    for name in names:
        cfg_v = variant_config(base, name)
        try:
            rows[name] = _run_variant(cfg_v, train_samples, test_samples, out / name)
        except Exception as exc:  # keep the grid going; report the failure
            rows[name] = {"error": f"{type(exc).__name__}: {exc}"}

    full = rows.get("full") if "error" not in rows.get("full", {"error": 1}) else None
    table_rows = []
    for name in names:
        row = dict(rows[name])
        row["variant"] = name
        if "error" not in row and full is not None:
            row["delta_train_pp"] = 100.0 * (full["train_accuracy"] - row["train_accuracy"])
            row["delta_test_pp"] = 100.0 * (full["test_accuracy"] - row["test_accuracy"])
        ref = REFERENCE_DELTAS_PP.get(name)
        if ref is not None:
            row["reference_delta_train_pp"] = ref[0]
            row["reference_delta_test_pp"] = ref[1]
        table_rows.append(row)

    csv_cols = (
        "variant",
        "train_accuracy",
        "test_accuracy",
        "delta_train_pp",
        "delta_test_pp",
        "reference_delta_train_pp",
        "reference_delta_test_pp",
        "converged",
        "gate_violations",
        "error",
    )
    with open(out / "ablation_summary.csv", "w") as f:
        f.write(",".join(csv_cols) + "\n")
        for row in table_rows:
            f.write(",".join(str(row.get(c, "")) for c in csv_cols) + "\n")
    (out / "ablation_summary.json").write_text(
        json.dumps(table_rows, indent=2, sort_keys=True) + "\n"
    )

    width = max(len(n) for n in names)
    print(f"{'variant':<{width}}  {'train':>7}  {'test':>7}  {'d_test':>7}  {'ref':>6}")
    failed = False
    for row in table_rows:
        name = row["variant"]
        if "error" in row:
            failed = True
            print(f"{name:<{width}}  failed: {row['error']}")
            continue
        d = row.get("delta_test_pp")
        ref = row.get("reference_delta_test_pp")
        d_txt = f"{d:>7.2f}" if d is not None else f"{'':>7}"
        ref_txt = f"{ref:>6.2f}" if ref is not None else f"{'':>6}"
        print(
            f"{name:<{width}}  {row['train_accuracy']:>7.3f}  "
            f"{row['test_accuracy']:>7.3f}  {d_txt}  {ref_txt}"
        )
    return 1 if failed else EXIT_OK


# -- entry point ----------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="chronospike",
        description="Spiking network with learned synaptic delays for event-based action recognition.",
    )
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("ingest", help="convert recordings or a synthetic spec into dataset files")
    g.add_argument("--input", help="directory of .aedat recordings with *_labels.csv files")
    g.add_argument("--synthetic", help="JSON file with a synthetic generator spec")
    g.add_argument("--output", required=True, help="training dataset file to write")
    g.add_argument("--output-test", help="test dataset file to write")
    g.add_argument("--fps", type=float, default=33.0, help="frame rate for event binning")
    g.add_argument("--max-frames", type=int, default=200, help="frames kept per recording")
    g.add_argument("--train-per-class", type=int, default=50, help="synthetic: train samples per class")
    g.add_argument("--test-per-class", type=int, default=20, help="synthetic: test samples per class")
    g.set_defaults(func=cmd_ingest)

    t = sub.add_parser("train", help="run both training phases and write checkpoints")
    t.add_argument("--config", required=True, help="run config JSON")
    t.add_argument("--out", help="output directory (default: out_dir from the config)")
    t.add_argument("--seed", type=int, help="override the config seed")
    t.add_argument("--max-epochs", type=int, help="cap both phases at this many epochs")
    t.add_argument(
        "--disable",
        action="append",
        choices=list(DISABLE_CHOICES),
        default=[],
        help="turn a mechanism off (repeatable)",
    )
    t.add_argument(
        "--set",
        action="append",
        default=[],
        metavar="SECTION.KEY=VALUE",
        help="override a config entry, value parsed as JSON (repeatable)",
    )
    t.set_defaults(func=cmd_train)

    e = sub.add_parser("eval", help="score a checkpoint on a dataset")
    e.add_argument("--checkpoint", required=True)
    e.add_argument("--data", help="dataset file (default: test_data from the checkpointed config)")
    e.add_argument("--config", help="config JSON that must match the checkpoint")
    e.add_argument(
        "--limit-frames",
        help="only show the first N frames; a comma list evaluates each limit and writes a curve",
    )
    e.add_argument("--dump-spikes", help="CSV path for per-sample spike times")
    e.add_argument("--out", help="directory for eval.json and curve.csv")
    e.set_defaults(func=cmd_eval)

    a = sub.add_parser("ablate", help="train mechanism-removal variants and tabulate drops")
    a.add_argument("--config", required=True)
    a.add_argument("--out", required=True)
    a.add_argument("--seed", type=int)
    a.add_argument("--max-epochs", type=int)
    a.add_argument("--variants", help=f"comma list (default: {','.join(DEFAULT_ABLATIONS)})")
    a.add_argument("--set", action="append", default=[], metavar="SECTION.KEY=VALUE")
    a.set_defaults(func=cmd_ablate)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code else EXIT_OK
    try:
        return args.func(args)
    except StateError as exc:
        return _fail(str(exc), EXIT_STATE)
    except _INPUT_ERRORS as exc:
        return _fail(str(exc), EXIT_INPUT)


if __name__ == "__main__":
    sys.exit(main())
