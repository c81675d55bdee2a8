"""Command-line runner: train, compare, poolcheck, gradcheck.

Config precedence: built-in defaults < config file (key=value lines) <
command-line flags. The dataset root can also come from the
NIRMALPOOL_DATA_ROOT environment variable.

Exit codes: 0 success, 2 config error, 3 data error, 4 divergence,
1 failed checks (gradcheck).
"""

import argparse
import sys
from dataclasses import fields
from pathlib import Path

from . import gradcheck, harness

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_DIVERGENCE = 4

_FIELD_TYPES = {f.name: f.type for f in fields(harness.RunConfig)}


def parse_config_file(path) -> dict:
    """key=value lines; '#' starts a comment; unknown keys are rejected."""
    values = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{lineno}: expected key=value, got {raw!r}")
        key, _, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if key not in _FIELD_TYPES:
            raise ValueError(f"{path}:{lineno}: unknown config key {key!r}")
        values[key] = _coerce(key, value)
    return values


def _coerce(key: str, value: str):
    if key in ("epochs", "batch_size", "seed", "train_limit", "test_limit"):
        return int(value)
    if key in ("val_fraction", "lr", "beta1", "beta2", "epsilon"):
        return float(value)
    if key == "pool_targets":
        return parse_pool_targets(value)
    return value


def parse_pool_targets(text: str) -> tuple:
    """Comma-separated per-stage targets, e.g. '13x13,5x5' or 'half,5x5'."""
    stages = []
    for part in text.split(","):
        part = part.strip()
        if part in ("half", "auto"):
            stages.append(None)
        else:
            h, _, w = part.partition("x")
            stages.append((int(h), int(w)))
    return tuple(stages)


def add_config_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="key=value config file")
    parser.add_argument("--dataset",
                        choices=["mnist_digits", "mnist_fashion", "cifar10", "synthetic"])
    parser.add_argument("--variant", dest="pooling_variant", choices=["nirmal", "max2x2"])
    parser.add_argument("--activation-placement", dest="activation_placement",
                        choices=["after_conv", "pool_only"])
    parser.add_argument("--epochs", type=int)
    parser.add_argument("--batch-size", dest="batch_size", type=int)
    parser.add_argument("--val-fraction", dest="val_fraction", type=float)
    parser.add_argument("--seed", type=int)
    parser.add_argument("--lr", type=float)
    parser.add_argument("--beta1", type=float)
    parser.add_argument("--beta2", type=float)
    parser.add_argument("--epsilon", type=float)
    parser.add_argument("--pool-targets", dest="pool_targets", type=parse_pool_targets,
                        help="per-stage targets, e.g. '13x13,5x5' or 'half,half'")
    parser.add_argument("--data-root", dest="data_root")
    parser.add_argument("--output-dir", dest="output_dir")
    parser.add_argument("--desk-scale", action="store_true",
                        help="subsample data and epochs for a fast run")


def build_config(args: argparse.Namespace) -> harness.RunConfig:
    values = {}
    if args.config:
        values.update(parse_config_file(args.config))
    for name in _FIELD_TYPES:
        flag = getattr(args, name, None)
        if flag is not None:
            values[name] = flag
    config = harness.RunConfig(**values)
    if getattr(args, "desk_scale", False):
        config.train_limit = config.train_limit or 10000
        config.test_limit = config.test_limit or 2000
        config.epochs = min(config.epochs, 3)
    return config


def cmd_train(args) -> int:
    config = build_config(args)
    report = harness.train(config, verbose=True)
    path = harness.write_report(report, config.output_dir)
    print(f"test loss {report.test_loss:.4f}  accuracy {report.test_accuracy:.4f}")
    print(f"report written to {path}")
    return EXIT_OK


def cmd_compare(args) -> int:
    config = build_config(args)
    reports = harness.compare(config, verbose=True)
    for report in reports.values():
        harness.write_report(report, config.output_dir)
    print(harness.comparison_table(reports))
    return EXIT_OK


def cmd_poolcheck(args) -> int:
    rows = harness.poolcheck(args.max_dim)
    print(f"{'in':>4} {'target':>7} {'window':>7} {'stride':>7} {'out':>5}  flag")
    for row in rows:
        flag = "DEVIATES" if row.deviates else ""
        print(f"{row.h_in:>4} {row.target:>7} {row.window:>7} {row.stride:>7} "
              f"{row.achieved:>5}  {flag}")
    deviating = sum(r.deviates for r in rows)
    print(f"{len(rows)} cases, {deviating} deviate from the requested size")
    return EXIT_OK


def cmd_gradcheck(args) -> int:
    results = gradcheck.run_all(seed=args.seed)
    worst = EXIT_OK
    for r in results:
        status = "PASS" if r.passed else "FAIL"
        print(f"{r.name:<28} max rel err {r.max_rel_error:.3e} "
              f"(tol {r.tolerance:.0e})  {status}")
        if not r.passed:
            worst = EXIT_CHECK_FAILED
    return worst


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="nirmalpool",
        description="Adaptive-pooling vs max-pooling benchmark harness")
    sub = parser.add_subparsers(dest="command", required=True)

    p_train = sub.add_parser("train", help="train one variant and report metrics")
    add_config_flags(p_train)
    p_train.set_defaults(func=cmd_train)

    p_compare = sub.add_parser("compare", help="train both variants side by side")
    add_config_flags(p_compare)
    p_compare.set_defaults(func=cmd_compare)

    p_pool = sub.add_parser("poolcheck", help="sweep adaptive pooling parameters")
    p_pool.add_argument("--max-dim", type=int, default=64)
    p_pool.set_defaults(func=cmd_poolcheck)

    p_grad = sub.add_parser("gradcheck", help="run the finite-difference suite")
    p_grad.add_argument("--seed", type=int, default=0)
    p_grad.set_defaults(func=cmd_gradcheck)

    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except harness.DataPathError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except harness.DivergenceError as exc:
        print(f"divergence: {exc}", file=sys.stderr)
        return EXIT_DIVERGENCE
    except (ValueError, TypeError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
