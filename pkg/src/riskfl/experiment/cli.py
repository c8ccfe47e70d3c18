"""Command-line entry point: ``riskfl run | sweep | baselines``.

Exit codes: 0 success, 1 configuration error, 2 runtime error.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from ..errors import ConfigError, ParseError
from .config import VARIANTS, dump_config, load_config, parse_overrides
from .metrics import links_per_round, rounds_to_accuracy, sweep_delta
from .output import emit_csv, emit_svg_lines, emit_sweep_csv
from .runner import build_environment, run

log = logging.getLogger("riskfl")


def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="flat key = value config file")
    common.add_argument("--seed", type=int, help="master seed (unsigned 64-bit)")
    common.add_argument("--variant", choices=VARIANTS)
    common.add_argument("--delta", type=float, help="participation threshold for every device")
    common.add_argument("--out", type=Path, default=Path("out"), help="output directory")
    common.add_argument("--mnist-images", help="IDX image file; switches the dataset to MNIST")
    common.add_argument("--mnist-labels", help="IDX label file")
    common.add_argument("--svg", action="store_true", help="also write SVG charts")
    common.add_argument("--workers", type=int, help="client worker threads")
    common.add_argument(
        "--set", action="append", default=[], metavar="KEY=VALUE", help="override any config key"
    )
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="riskfl", description="Simulate federated training with risk-averse participation.")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("run", parents=[common], help="run one variant")
    sub.add_parser("sweep", parents=[common], help="sweep delta for the risk-averse variant")
    sub.add_parser("baselines", parents=[common], help="run every variant on shared data")
    return parser


def _config(args):
    pairs = {}
    for item in args.set:
        if "=" not in item:
            raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
        key, value = item.split("=", 1)
        pairs[key.strip()] = value
    overrides = parse_overrides(pairs)
    overrides.update(
        seed=args.seed,
        variant=args.variant,
        delta=args.delta,
        workers=args.workers,
        mnist_images=args.mnist_images,
        mnist_labels=args.mnist_labels,
    )
    if args.mnist_images or args.mnist_labels:
        overrides["dataset"] = "mnist"
    return load_config(args.config, **overrides)


def _summary(name: str, logs, cfg) -> str:
    reached = rounds_to_accuracy(logs, cfg.target_accuracy)
    return (
        f"{name}: final accuracy {logs[-1].test_accuracy:.4f}, "
        f"rounds to {cfg.target_accuracy:.0%} {reached if reached is not None else 'not reached'}, "
        f"links/round (first {cfg.links_window}) {links_per_round(logs, cfg.links_window):.2f}"
    )


def cmd_run(cfg, out: Path, svg: bool) -> None:
    logs = run(cfg)
    emit_csv(logs, out / f"{cfg.variant}.csv")
    if svg:
        emit_svg_lines(
            {cfg.variant: [(e.round, e.test_accuracy) for e in logs]},
            out / f"{cfg.variant}_accuracy.svg",
            title="Test accuracy",
            xlabel="round",
            ylabel="accuracy",
        )
        if cfg.variant in ("alg1", "ucb"):
            emit_svg_lines(
                {
                    "CVaR-regret": [(e.round, e.regret_signal) for e in logs],
                    "bound": [(e.round, e.regret_bound) for e in logs],
                },
                out / f"{cfg.variant}_regret.svg",
                title="CVaR-regret",
                xlabel="round",
                ylabel="regret",
            )
    print(_summary(cfg.variant, logs, cfg))


def cmd_sweep(cfg, out: Path, svg: bool) -> None:
    env = build_environment(cfg)
    rows = sweep_delta(cfg, cfg.deltas, env)
    emit_sweep_csv(rows, out / "sweep.csv")
    if svg:
        emit_svg_lines(
            {"avg links": [(r.delta, r.avg_links) for r in rows]},
            out / "sweep_links.svg",
            title=f"Links per round (first {cfg.links_window} rounds)",
            xlabel="delta",
            ylabel="links",
        )
        reached = [(r.delta, r.rounds_to_target) for r in rows if r.rounds_to_target is not None]
        if len(reached) >= 2:
            emit_svg_lines(
                {"rounds to target": reached},
                out / "sweep_rounds.svg",
                title=f"Rounds to {cfg.target_accuracy:.0%} accuracy",
                xlabel="delta",
                ylabel="rounds",
            )
    for r in rows:
        reached = r.rounds_to_target if r.rounds_to_target is not None else "-"
        print(f"delta={r.delta:<5g} rounds_to_target={reached!s:<4} avg_links={r.avg_links:.2f}")


def cmd_baselines(cfg, out: Path, svg: bool) -> None:
    env = build_environment(cfg)
    curves = {}
    for variant in VARIANTS:
        logs = run(cfg.replace(variant=variant), env)
        emit_csv(logs, out / f"{variant}.csv")
        curves[variant] = [(e.round, e.test_accuracy) for e in logs]
        print(_summary(variant, logs, cfg))
    if svg and cfg.rounds >= 2:
        emit_svg_lines(curves, out / "baselines_accuracy.svg", title="Test accuracy", xlabel="round", ylabel="accuracy")


COMMANDS = {"run": cmd_run, "sweep": cmd_sweep, "baselines": cmd_baselines}


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        cfg = _config(args)
        if args.command == "run" and args.svg and cfg.rounds < 2:
            raise ConfigError("--svg needs at least two rounds")
        args.out.mkdir(parents=True, exist_ok=True)
        (args.out / "config.txt").write_text(dump_config(cfg), encoding="utf-8")
    except (ConfigError, ParseError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    try:
        COMMANDS[args.command](cfg, args.out, args.svg)
    except (ConfigError, ParseError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001 - surface any runtime failure as exit code 2
        log.debug("runtime failure", exc_info=True)
        print(f"runtime error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
