"""Command-line entry point: ``cogload <verb> [options]``.

Exit codes: 0 when every declared output was written and validated,
1 on a data or contract error, 2 on a configuration or usage error,
3 when another invocation holds the output-directory lock.
"""

from __future__ import annotations

import argparse
import contextlib
import os
import sys
from pathlib import Path

from cogload.errors import CogloadError, ConfigInvalid
from cogload.expcli import stages
from cogload.expcli.config import ExperimentConfig, defaults_json

LOCK_NAME = ".cogload.lock"

EXIT_OK, EXIT_ERROR, EXIT_CONFIG, EXIT_LOCKED = 0, 1, 2, 3


class LockHeld(Exception):
    pass


@contextlib.contextmanager
def out_lock(out: Path):
    """Exclusive lock on ``out`` via an O_EXCL lock file; removed on exit."""
    out.mkdir(parents=True, exist_ok=True)
    path = out / LOCK_NAME
    try:
        fd = os.open(path, os.O_CREAT | os.O_EXCL | os.O_WRONLY, 0o644)
    except FileExistsError:
        raise LockHeld(f"{path} exists; another cogload run is using this directory") from None
    try:
        os.write(fd, f"{os.getpid()}\n".encode())
        os.close(fd)
        yield
    finally:
        with contextlib.suppress(FileNotFoundError):
            path.unlink()


def _global_flags(p: argparse.ArgumentParser, default) -> None:
    p.add_argument("--config", type=Path, default=default, help="JSON experiment config (defaults apply to absent keys)")
    p.add_argument("--seed", type=int, default=default, help="override the config seed")
    p.add_argument("--out", type=Path, default=default, help="output directory (default: out)")


def build_parser() -> argparse.ArgumentParser:
    # Global flags are accepted before or after the verb; the later occurrence wins.
    common = argparse.ArgumentParser(add_help=False)
    _global_flags(common, argparse.SUPPRESS)

    p = argparse.ArgumentParser(prog="cogload", description="Cognitive-load experiment pipeline.")
    _global_flags(p, None)
    sub = p.add_subparsers(dest="verb", required=True)
    sub.add_parser("synth", parents=[common], help="generate synthetic recordings into OUT/data")
    sp = sub.add_parser("prep", parents=[common], help="ingest, fuse, split, scale and select features")
    sp.add_argument("--data", type=Path, help="recordings directory (default: config data_dir or OUT/data)")
    sp = sub.add_parser("select", parents=[common], help="feature rankings and correlation map")
    sp.add_argument("--k", type=int, help="number of fNIRS features to keep (default: prep.top_k)")
    sp = sub.add_parser("train", parents=[common], help="train the CNN-LSTM")
    sp.add_argument("--epochs", type=int, help="override model.epochs")
    sub.add_parser("eval", parents=[common], help="score baselines and the CNN-LSTM on the test split")
    sub.add_parser("report", parents=[common], help="write OUT/report.md")
    sp = sub.add_parser("run", parents=[common], help="synth, prep, select, train, eval and report in order")
    sp.add_argument("--epochs", type=int, help="override model.epochs")
    sp = sub.add_parser("config", help="print or check configuration")
    g = sp.add_mutually_exclusive_group(required=True)
    g.add_argument("--defaults", action="store_true", help="print the default config as JSON")
    g.add_argument("--check", type=Path, metavar="PATH", help="validate a config file and print it merged")
    return p


def _dispatch(args, cfg: ExperimentConfig) -> list[Path]:
    out = args.out
    if args.verb == "synth":
        return stages.synth(cfg, out)
    if args.verb == "prep":
        return stages.prep(cfg, out, args.data)
    if args.verb == "select":
        return stages.select(cfg, out, args.k)
    if args.verb == "train":
        return stages.train_stage(cfg, out, args.epochs)
    if args.verb == "eval":
        return stages.eval_stage(cfg, out)
    if args.verb == "report":
        return stages.report(cfg, out)
    return stages.run_all(cfg, out, args.epochs)


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    if args.out is None:
        args.out = Path("out")
    try:
        if args.verb == "config":
            if args.defaults:
                sys.stdout.write(defaults_json())
            else:
                sys.stdout.write(ExperimentConfig.load(args.check).to_json())
            return EXIT_OK
        cfg = ExperimentConfig.load(args.config).with_seed(args.seed)
        cfg.validate()
        with out_lock(args.out):
            written = _dispatch(args, cfg)
    except ConfigInvalid as exc:
        print(f"cogload: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except LockHeld as exc:
        print(f"cogload: {exc}", file=sys.stderr)
        return EXIT_LOCKED
    except (CogloadError, OSError) as exc:
        print(f"cogload: error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    print(f"cogload {args.verb}: wrote {len(written)} files under {args.out}")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
