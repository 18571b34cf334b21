"""Command-line entry point: ``cct train|sweep|eval``.

Exit codes: 0 ok, 2 bad config, 3 numeric failure, 4 I/O or format error.
"""
from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import sys
from pathlib import Path

from .config import load_experiment
from .data import load_csv
from .errors import CheckpointError, ConfigError, DataError, NumericError, ShapeError
from .harness import check_dims, format_table, run_sweep, run_training
from .metrics import evaluate
from .net import load_ensemble
from .trainer import predict

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_IO = 0, 2, 3, 4


def _global_opts(p: argparse.ArgumentParser, suppress: bool) -> None:
    # accepted both before and after the subcommand
    default = argparse.SUPPRESS if suppress else None
    p.add_argument("--out", metavar="DIR", default=default, help="output directory (overrides out_dir)")
    p.add_argument("--seed", type=int, default=default, help="run with this single seed")
    p.add_argument("--workers", type=int, default=default, help="parallel sweep workers")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="cct", description="Consensual collaborative training on noisy labels")
    _global_opts(ap, suppress=False)
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="run one training configuration")
    p.add_argument("config")
    _global_opts(p, suppress=True)

    p = sub.add_parser("sweep", help="run an ablation grid over the config's axes")
    p.add_argument("config")
    _global_opts(p, suppress=True)

    p = sub.add_parser("eval", help="evaluate a checkpoint on a CSV dataset")
    p.add_argument("checkpoint")
    p.add_argument("data")
    p.add_argument("--net", type=int, default=None, metavar="J", help="use network J alone")
    _global_opts(p, suppress=True)
    return ap


def _load(args):
    exp = load_experiment(args.config)
    if args.seed is not None:
        exp = dataclasses.replace(exp, train=dataclasses.replace(exp.train, seed=args.seed),
                                  seeds=(args.seed,))
    if args.workers is not None:
        exp = dataclasses.replace(exp, workers=args.workers)
    if args.workers is not None and args.workers < 1:
        raise ConfigError("workers: must be >= 1", field="workers")
    out = Path(args.out) if args.out else Path(exp.out_dir)
    return exp, out


def cmd_train(args) -> int:
    exp, out = _load(args)
    summary = run_training(exp, exp.train, out)
    print(f"accuracy={summary['accuracy']:.4f} f1={summary['f1_macro']:.4f} "
          f"overall={summary['overall']:.4f} -> {out}")
    return EXIT_OK


def cmd_sweep(args) -> int:
    exp, out = _load(args)
    if not exp.axes:
        raise ConfigError("axes: a sweep needs at least one axis", field="axes")
    rows = run_sweep(exp, out)
    print(format_table(rows))
    return EXIT_OK if all(r["status"] == "ok" for r in rows) else EXIT_NUMERIC


def cmd_eval(args) -> int:
    nets, _ = load_ensemble(args.checkpoint)
    ds = load_csv(args.data, nets[0].n_classes)
    check_dims(nets, ds)
    if args.net is not None and not 0 <= args.net < len(nets):
        raise CheckpointError(f"--net {args.net} out of range for {len(nets)} networks")
    report = evaluate(predict(nets, ds.X, net=args.net), ds.clean, ds.n_classes)
    print(json.dumps(report.to_dict(), indent=2))
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    handler = {"train": cmd_train, "sweep": cmd_sweep, "eval": cmd_eval}[args.command]
    try:
        return handler(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericError as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (CheckpointError, ShapeError, DataError, OSError, UnicodeDecodeError) as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
