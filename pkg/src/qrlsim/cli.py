"""Command line entry point: ``qrlsim run | compare | oracle-check``."""
from __future__ import annotations

import argparse
import json
import sys

from . import harness
from .errors import ConfigError, LayoutError
from .gridworld import default_layout, load_layout
from .rl_core import AGENTS, ExperimentConfig

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_RUNTIME = 2


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise _UsageError(f"{self.prog}: error: {message}")


def _build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="key=value file with ExperimentConfig fields")
    common.add_argument("--layout", metavar="PATH", help="13x13 layout file (default: border walls only)")
    common.add_argument("--seed", type=int, help="base seed (unsigned 64-bit)")
    common.add_argument("--episodes", type=int, help="max_episodes override")
    common.add_argument("--out", metavar="CSV", help="write learning curves here")
    common.add_argument("--plot-script", metavar="PATH", help="also emit a matplotlib script for --out")

    parser = _Parser(prog="qrlsim", description="Quantum-inspired TD learning on a gridworld.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    run = sub.add_parser("run", parents=[common], help="train one agent")
    run.add_argument("--agent", choices=AGENTS, default="qla")

    cmp_ = sub.add_parser("compare", parents=[common], help="run both agents over a range of seeds")
    cmp_.add_argument("--seeds", type=int, default=10, help="number of consecutive seeds (default 10)")
    cmp_.add_argument("--workers", type=int, default=1)
    cmp_.add_argument("--summary", metavar="JSON", help="write the full summary (incl. curves) here")

    oracle = sub.add_parser("oracle-check", help="check grover_update against the closed-form rotation")
    oracle.add_argument("--max-qubits", type=int, default=6)
    return parser


def _resolve_config(args) -> ExperimentConfig:
    config = ExperimentConfig()
    if args.config:
        try:
            config = harness.load_config(args.config, config)
        except FileNotFoundError:
            raise ConfigError("config", f"no such file: {args.config}") from None
    flags = {}
    if args.seed is not None:
        flags["seed"] = args.seed
    if args.episodes is not None:
        flags["max_episodes"] = args.episodes
    return harness.apply_overrides(config, flags).validate()


def _resolve_layout(args):
    if not args.layout:
        return default_layout()
    try:
        return load_layout(args.layout)
    except FileNotFoundError:
        raise ConfigError("layout", f"no such file: {args.layout}") from None
    except LayoutError as exc:
        raise ConfigError("layout", f"{args.layout}: {exc}") from None


def _write_outputs(args, results):
    if args.out:
        harness.write_curves(results, args.out)
        if args.plot_script:
            harness.write_plot_script(args.out, args.plot_script)


def _cmd_run(args) -> int:
    config, layout = _resolve_config(args), _resolve_layout(args)
    result = harness.run_experiment(args.agent, config, layout)
    _write_outputs(args, result)
    path = result.final_path
    print(f"agent={result.agent} seed={result.seed} episodes={len(result.records)} "
          f"episodes_to_optimal={result.episodes_to_optimal} "
          f"final_path_steps={path.steps if path.reached_goal else None} "
          f"final_path_return={path.undiscounted_return if path.reached_goal else None}")
    return EXIT_OK


def _cmd_compare(args) -> int:
    config, layout = _resolve_config(args), _resolve_layout(args)
    summary = harness.compare(config, layout, args.seeds, workers=args.workers)
    _write_outputs(args, summary.results)
    for line in harness.iter_summary_lines(summary):
        print(line)
    if args.summary:
        with open(args.summary, "w", encoding="utf-8") as fh:
            json.dump(summary.to_dict(), fh, indent=2)
            fh.write("\n")
    return EXIT_OK


def _cmd_oracle(args) -> int:
    cases = harness.run_oracle_suite(args.max_qubits)
    for case in cases:
        status = "PASS" if case.passed else "FAIL"
        print(f"{status} n={case.n_qubits} L={case.iterations} targets={case.targets} max_error={case.max_error:.3e}")
    failed = sum(not c.passed for c in cases)
    print(f"{len(cases) - failed}/{len(cases)} cases passed")
    return EXIT_OK if not failed else EXIT_RUNTIME


_COMMANDS = {"run": _cmd_run, "compare": _cmd_compare, "oracle-check": _cmd_oracle}


def cli_main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_VALIDATION
    try:
        return _COMMANDS[args.command](args)
    except (ConfigError, LayoutError) as exc:
        print(f"qrlsim: invalid input: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except Exception as exc:  # surfaced as a runtime failure
        print(f"qrlsim: error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


def main():
    sys.exit(cli_main())


if __name__ == "__main__":
    main()
