"""Command-line front end.

Exit status: 0 on success, 1 for usage or configuration errors, 2 when a run
aborted because the model stopped applying (a partial trace is still written).
"""

from __future__ import annotations

import argparse
import csv
import logging
import sys
from pathlib import Path

from magpair.config import dump_config, load_config
from magpair.errors import ConfigError, MagpairError
from magpair.physics import derive_constants
from magpair.scenario import (
    SWEEP_PARAMETERS,
    compare_traces,
    comparison_report,
    compute_metrics,
    metrics_report,
    run_scenario,
    sweep,
    write_trace_csv,
)

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_MODEL = 2

log = logging.getLogger("magpair")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def _out_dir(args, cfg) -> Path:
    out = Path(args.out or cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_simulate(args) -> int:
    cfg = load_config(args.config[0])
    stride = args.stride or cfg.trace_stride
    trace = run_scenario(cfg.scenario, derive_constants(cfg.physical))
    out = _out_dir(args, cfg)
    with open(out / "trace.csv", "w", newline="", encoding="utf-8") as fh:
        write_trace_csv(trace, fh, stride=stride)
    metrics = compute_metrics(trace, strict=False)
    (out / "metrics.txt").write_text(metrics_report(metrics), encoding="utf-8")
    if trace.aborted:
        print(f"run aborted: {trace.error}", file=sys.stderr)
        return EXIT_MODEL
    print(f"wrote {out / 'trace.csv'} and {out / 'metrics.txt'}")
    return EXIT_OK


def cmd_compare(args) -> int:
    if len(args.config) != 2:
        raise ConfigError("compare needs exactly two --config options")
    cfg_a, cfg_b = (load_config(p) for p in args.config)
    if cfg_a.physical != cfg_b.physical:
        raise ConfigError("compared configs must share the physical block")
    consts = derive_constants(cfg_a.physical)
    trace_a = run_scenario(cfg_a.scenario, consts)
    trace_b = run_scenario(cfg_b.scenario, consts)
    report = compare_traces(cfg_a.scenario, trace_a, cfg_b.scenario, trace_b)
    text = comparison_report(report, cfg_a.scenario.envelope)
    out = _out_dir(args, cfg_a)
    (out / "comparison.txt").write_text(text, encoding="utf-8")
    sys.stdout.write(text)
    return EXIT_MODEL if trace_a.aborted or trace_b.aborted else EXIT_OK


def cmd_sweep(args) -> int:
    cfg = load_config(args.config[0])
    if not args.values:
        raise ConfigError("sweep needs at least one value")
    rows = sweep(cfg.physical, cfg.scenario, args.param, args.values)
    out = _out_dir(args, cfg)
    with open(out / "sweep.csv", "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(
            ("parameter", "value", "segment", "r_des", "reached_target", "convergence_time",
             "steady_state_error", "fluctuation_band", "max_angle_step", "error")
        )
        for row in rows:
            m = row.metrics
            for seg in m.segments:
                writer.writerow(
                    (row.parameter, repr(row.value), seg.index, repr(seg.r_des), int(seg.reached_target),
                     "" if seg.convergence_time is None else repr(seg.convergence_time),
                     repr(seg.steady_state_error), repr(seg.fluctuation_band), repr(m.max_angle_step),
                     m.error or "")
                )
    print(f"wrote {out / 'sweep.csv'}")
    return EXIT_MODEL if any(row.metrics.error for row in rows) else EXIT_OK


def cmd_print_config(args) -> int:
    cfg = load_config(args.config[0])
    sys.stdout.write(dump_config(cfg) + "\n")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="magpair", description="Simulate field-angle control of a magnetic microrobot pair.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p, n_configs="one"):
        help_ = "scenario config (path or bundled name)"
        if n_configs == "two":
            help_ += "; give twice"
        p.add_argument("--config", action="append", required=True, help=help_)
        p.add_argument("--out", help="output directory (overrides output.dir)")
        p.add_argument("--stride", type=int, help="write every Nth trace row")

    p = sub.add_parser("simulate", help="run one scenario, write trace.csv and metrics.txt")
    common(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("compare", help="run two scenarios and report metric ratios (B over A)")
    common(p, "two")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("sweep", help="rerun a scenario over values of one parameter")
    common(p)
    p.add_argument("--param", required=True, choices=SWEEP_PARAMETERS)
    p.add_argument("--values", type=float, nargs="*", default=[])
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("print-config", help="echo the normalized config as JSON")
    common(p)
    p.set_defaults(func=cmd_print_config)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING)
    if args.stride is not None and args.stride < 1:
        parser.error("--stride must be >= 1")
    if args.command != "compare" and len(args.config) != 1:
        parser.error(f"{args.command} takes exactly one --config")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except MagpairError as exc:
        print(f"model error: {exc}", file=sys.stderr)
        return EXIT_MODEL


if __name__ == "__main__":
    sys.exit(main())
