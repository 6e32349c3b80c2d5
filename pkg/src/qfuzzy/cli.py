"""Command-line entry point: ``qfuzzy <subcommand> ...``.

On failure the last stderr line is ``error: {"code": ..., "message": ...}``
and the exit status is non-zero.
"""
from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from pathlib import Path

from . import harness as hs
from .errors import QFuzzyError

EXIT_ERROR = 2


def _add_config_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="flat key = value config file")
    parser.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                        help="override any config key (repeatable)")
    defaults = hs.ExperimentConfig()
    for f in dataclasses.fields(hs.ExperimentConfig):
        flag = "--" + f.name.replace("_", "-")
        parser.add_argument(flag, dest=f"cfg_{f.name}", default=None, metavar="VALUE",
                            help=f"default: {hs._format_value(getattr(defaults, f.name))}")


def _config_from_args(args) -> hs.ExperimentConfig:
    overrides = {}
    for item in args.set:
        key, sep, value = item.partition("=")
        if not sep:
            raise QFuzzyError(f"--set expects KEY=VALUE, got {item!r}", code="bad-config")
        overrides[key.strip()] = value
    for f in dataclasses.fields(hs.ExperimentConfig):
        value = getattr(args, f"cfg_{f.name}")
        if value is not None:
            overrides[f.name] = value
    if args.config:
        return hs.ExperimentConfig.from_file(args.config, overrides)
    return hs.ExperimentConfig.from_mapping(overrides)


def _print(obj) -> None:
    print(json.dumps(obj, sort_keys=True))


def cmd_gen_synthetic(args) -> None:
    out = Path(args.output)
    out.parent.mkdir(parents=True, exist_ok=True)
    if args.variant == "numeric":
        X, y = hs.gen_synthetic(args.n, args.margin, args.seed)
        hs.write_numeric_csv(out, X, y)
        rows = len(y)
    else:
        data = hs.gen_synthetic_text(args.n, args.seed, args.scheme, args.neutral_fraction)
        hs.write_text_csv(out, data, args.text_column, args.label_column)
        rows = len(data)
    _print({"output": str(out), "rows": rows, "variant": args.variant})


def cmd_preprocess(args) -> None:
    cfg = _config_from_args(args)
    prep = hs.write_preprocessed(args.output, cfg)
    _print({"output": args.output, "train": len(prep.y_train), "test": len(prep.y_test), "dropped": prep.dropped})


def cmd_train(args) -> None:
    run = hs.run_experiment(_config_from_args(args))
    _print({"output_dir": str(run.output_dir), "metrics": run.metrics["metrics"], "auc": run.metrics["auc"],
            "seconds": round(run.seconds, 3)})


def cmd_noise_sweep(args) -> None:
    run = hs.run_noise_sweep(_config_from_args(args))
    _print({"output_dir": str(run.output_dir), "rows": len(run.sweep or []), "seconds": round(run.seconds, 3)})


def cmd_evaluate(args) -> None:
    cfg = _config_from_args(args)
    metrics, scores, data = hs.evaluate_run(args.run_dir, cfg)
    out = Path(args.output) if args.output else Path(args.run_dir) / "evaluation.json"
    out.write_text(json.dumps(metrics, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    _print({"output": str(out), "metrics": metrics["metrics"], "auc": metrics["auc"]})


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qfuzzy", description="Quantum-fuzzy sentiment classification toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-synthetic", help="write a synthetic benchmark CSV")
    p.add_argument("--n", type=int, default=200)
    p.add_argument("--margin", type=float, default=0.2)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--variant", choices=("numeric", "tokens"), default="numeric")
    p.add_argument("--scheme", choices=("generic", "CVTD"), default="generic", help="label vocabulary (tokens)")
    p.add_argument("--neutral-fraction", type=float, default=0.0, help="extra Neutral rows (CVTD tokens)")
    p.add_argument("--text-column", default="text")
    p.add_argument("--label-column", default="sentiment")
    p.add_argument("--output", required=True)
    p.set_defaults(func=cmd_gen_synthetic)

    p = sub.add_parser("preprocess", help="tokenize and featurize a text dataset")
    _add_config_flags(p)
    p.add_argument("--output", required=True)
    p.set_defaults(func=cmd_preprocess)

    p = sub.add_parser("train", help="train and evaluate one model, writing artifacts to output_dir")
    _add_config_flags(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evaluate", help="score a dataset with a saved run")
    _add_config_flags(p)
    p.add_argument("--run-dir", required=True)
    p.add_argument("--output", help="metrics JSON path (default: <run-dir>/evaluation.json)")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("noise-sweep", help="QFNN accuracy across noise channels and strengths")
    _add_config_flags(p)
    p.set_defaults(func=cmd_noise_sweep)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        args.func(args)
    except QFuzzyError as exc:
        print("error: " + json.dumps({"code": exc.code, "message": str(exc)}), file=sys.stderr)
        return EXIT_ERROR
    except OSError as exc:
        print("error: " + json.dumps({"code": "io-error", "message": str(exc)}), file=sys.stderr)
        return EXIT_ERROR
    return 0


if __name__ == "__main__":
    sys.exit(main())
