"""Command line front end.

Subcommands:
  simulate     one closed-loop run -> trajectory.csv, switches.csv
  sweep        initial-condition grid -> sweep.csv, dist.csv, summary.csv
  assumption3  worst reach time from the energy shell into the capture set
  appendix     randomized windowed-excitation lemma trials -> appendix.csv

Exit codes: 0 on success, 2 on configuration errors, 3 when a check the
subcommand performs fails (cutoff violations, failed trials).
"""

from __future__ import annotations

import argparse
import os
import sys
from typing import List, Optional, Sequence

from . import __version__
from .excitation import run_appendix_suite
from .experiments import (ConfigError, ExperimentConfig, _fmt,
                          estimate_t_delta_delta, parse_config, run_single,
                          run_sweep)


def _add_common(parser: argparse.ArgumentParser):
    parser.add_argument("--config", metavar="FILE",
                        help="flat `key = value` config file")
    parser.add_argument("--set", dest="overrides", action="append",
                        default=[], metavar="KEY=VALUE",
                        help="override one config key (repeatable)")
    parser.add_argument("--print-config", action="store_true",
                        help="print the fully resolved config and exit")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="swinglab",
        description="Pendulum swing-up lab: switched local/global control, "
                    "settling-time sweeps, reach-time and excitation checks.")
    parser.add_argument("--version", action="version",
                        version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate",
                       help="run one closed loop and dump its time series")
    _add_common(p)
    p.add_argument("--x0", default="0,0", metavar="X1,X2",
                   help="initial state (default: 0,0)")

    p = sub.add_parser("sweep",
                       help="simulate the whole initial-condition grid")
    _add_common(p)

    p = sub.add_parser("assumption3",
                       help="measure the worst time from the energy shell "
                            "|H - H*| = delta_of(delta) into |psi| <= delta")
    _add_common(p)
    p.add_argument("--samples", type=int, default=200, metavar="N",
                   help="number of shell states (default: 200)")
    p.add_argument("--delta", type=float, default=None, metavar="D",
                   help="capture radius (default: the config's delta_cap)")

    p = sub.add_parser("appendix",
                       help="run the randomized excitation/decay trial suite")
    _add_common(p)
    p.add_argument("--seed", type=int, default=0,
                   help="base seed for the trial families (default: 0)")
    return parser


def _parse_x0(text: str) -> List[float]:
    parts = text.split(",")
    if len(parts) != 2:
        raise ConfigError(f"--x0 expects 'x1,x2', got {text!r}")
    try:
        return [float(parts[0]), float(parts[1])]
    except ValueError:
        raise ConfigError(f"--x0 expects two numbers, got {text!r}") from None


def _cmd_simulate(config: ExperimentConfig, args) -> int:
    x0 = _parse_x0(args.x0)
    result = run_single(config, x0)
    paths = result.write_csvs()
    print(f"wrote {paths['trajectory']} and {paths['switches']}")
    print(f"T_x = {_fmt(result.settle_x)} s, T_H = {_fmt(result.settle_h)} s, "
          f"switches = {len(result.events)}, final mode = {result.modes[-1]}")
    if result.diverged:
        print("warning: simulation diverged; trailing samples are nan",
              file=sys.stderr)
    return 0


def _cmd_sweep(config: ExperimentConfig, args) -> int:
    result = run_sweep(config)
    paths = result.write_csvs()
    s = result.summary
    print(f"wrote {paths['sweep']}, {paths['dist']} and {paths['summary']}")
    print(f"records = {result.x1_0.size}, E_x = {_fmt(s['E_x'])}, "
          f"E_H = {_fmt(s['E_H'])}, t_x_99 = {_fmt(s['t_x_99'])} s, "
          f"t_H_99 = {_fmt(s['t_H_99'])} s")
    print(f"unreached_x = {s['unreached_x']}, unreached_H = {s['unreached_H']}, "
          f"max switches = {s['max_switches']}, diverged = {s['diverged']}, "
          f"per-step |psi| jump <= {_fmt(s['eps_sample'])}")
    return 0


def _cmd_assumption3(config: ExperimentConfig, args) -> int:
    est = estimate_t_delta_delta(config, args.samples, args.delta)
    cap = config.delta_cap if args.delta is None else args.delta
    print(f"worst reach time into |psi| <= {cap:g}: {_fmt(est.estimate)} s "
          f"over {est.times.size} shell samples (cutoff {est.cutoff:g} s)")
    if est.violations:
        print(f"{est.violations} samples never reached the capture set "
              f"within the cutoff", file=sys.stderr)
        return 3
    return 0


def _cmd_appendix(config: ExperimentConfig, args) -> int:
    results = run_appendix_suite(seed=args.seed)
    os.makedirs(config.output_dir, exist_ok=True)
    path = os.path.join(config.output_dir, "appendix.csv")
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("trial,seed,lemma,margin\n")
        for r in results:
            fh.write(f"{r.trial},{r.seed},{r.lemma},{_fmt(r.margin)}\n")
    failures = [r for r in results if not r.passed]
    print(f"wrote {path}")
    print(f"{len(results)} checks, {len(results) - len(failures)} passed")
    if failures:
        for r in failures[:10]:
            print(f"FAIL trial {r.trial} ({r.lemma}, seed {r.seed}): "
                  f"margin {_fmt(r.margin)}", file=sys.stderr)
        return 3
    return 0


_HANDLERS = {
    "simulate": _cmd_simulate,
    "sweep": _cmd_sweep,
    "assumption3": _cmd_assumption3,
    "appendix": _cmd_appendix,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        config = parse_config(args.config, args.overrides)
        if args.print_config:
            sys.stdout.write(config.as_text())
            return 0
        return _HANDLERS[args.command](config, args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
