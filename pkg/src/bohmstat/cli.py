"""Command-line entry point: ``bohmstat run | list-presets | validate``."""

import argparse
import sys

from .guidance import CurrentKind
from .scenario import DEFAULT_OUT_ENV, ScenarioError, list_presets, load, run_scenario


def _parser():
    parser = argparse.ArgumentParser(
        prog="bohmstat",
        description="Propagate Bohmian ensembles and compare sample moments with Born moments.")
    sub = parser.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run a scenario file or built-in preset")
    run.add_argument("scenario", help="preset name or path to a JSON scenario")
    run.add_argument("--out", help=f"output directory (default: ${DEFAULT_OUT_ENV}/<name> or runs/<name>)")
    run.add_argument("--seed", type=int, help="override the sampler seed")
    run.add_argument("--n", type=int, help="override the ensemble size")
    run.add_argument("--current", choices=[k.value for k in CurrentKind],
                     help="run a single guidance current")
    sub.add_parser("list-presets", help="list built-in scenarios")
    val = sub.add_parser("validate", help="check a scenario without running it")
    val.add_argument("scenario", help="preset name or path to a JSON scenario")
    return parser


def main(argv=None):
    args = _parser().parse_args(argv)
    if args.command == "list-presets":
        for name, description in list_presets():
            print(f"{name}\t{description}")
        return 0
    try:
        cfg = load(args.scenario)
        if args.command == "validate":
            print(f"{cfg.name}: valid (digest {cfg.digest()})")
            return 0
        cfg = cfg.with_overrides(seed=args.seed, n=args.n, current=args.current)
        out = run_scenario(cfg, args.out)
    except ScenarioError as exc:
        print(f"bohmstat: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # any pipeline failure is reported, not traced
        print(f"bohmstat: run failed: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    print(out)
    return 0


if __name__ == "__main__":
    sys.exit(main())
