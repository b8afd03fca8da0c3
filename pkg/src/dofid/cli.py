"""Command-line entry points.

Verbs: run a scenario, generate a synthetic stream, recompute metrics from
a run log, and compare runs across strategies. Exit codes: 0 success,
1 configuration error, 2 data error.
"""

from __future__ import annotations

import argparse
import dataclasses
import sys

from .errors import ConfigError, DataError


def _add_format_flag(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--format", default="table", choices=("table", "json_lines", "csv"),
                        help="report output format")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dofid", description=__doc__)
    sub = parser.add_subparsers(dest="verb", required=True)

    p_run = sub.add_parser("run", help="run a scenario file")
    p_run.add_argument("scenario", help="scenario YAML file")
    p_run.add_argument("--strategy", help="override the federation strategy")
    p_run.add_argument("--seed", type=int, help="override the scenario seed")
    p_run.add_argument("--warmup", type=int, help="override the warm-up window count")
    p_run.add_argument("--max-windows", type=int, help="cap the simulated window count")
    p_run.add_argument("--log", help="write the per-window run log (JSON lines) here")
    p_run.add_argument("--trace-models", metavar="DIR",
                       help="dump every learned model and enable federation traces")
    _add_format_flag(p_run)

    p_synth = sub.add_parser("synth", help="generate a synthetic packet stream")
    p_synth.add_argument("spec", help="synth spec YAML file")
    p_synth.add_argument("--out", required=True, help="output packet CSV path")
    p_synth.add_argument("--duration", type=float, help="stream duration in seconds")
    p_synth.add_argument("--seed", type=int, help="override the spec seed")

    p_metrics = sub.add_parser("metrics", help="recompute the report from a run log")
    p_metrics.add_argument("runlog", help="run log written by `run --log`")
    _add_format_flag(p_metrics)

    p_compare = sub.add_parser("compare", help="combine several run logs into one table")
    p_compare.add_argument("runlogs", nargs="+", help="run logs written by `run --log`")
    p_compare.add_argument("--strategies", help="comma-separated strategy filter")
    _add_format_flag(p_compare)

    return parser


def _cmd_run(args) -> int:
    from . import orchestrator, reporting, scenario as scenario_mod

    scn = scenario_mod.load_scenario(args.scenario)
    if args.strategy is not None:
        try:
            scn.federation = dataclasses.replace(scn.federation, strategy=args.strategy)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
    if args.seed is not None:
        scn.seed = args.seed
    if args.warmup is not None:
        scn.warmup = args.warmup
    if args.max_windows is not None:
        scn.max_windows = args.max_windows
    scn.validate()
    records = orchestrator.run(
        scn, trace=args.trace_models is not None, model_dump_dir=args.trace_models
    )
    config_echo = {
        "strategy": scn.federation.strategy,
        "c": scn.federation.c,
        "theta_cap": scn.federation.theta_cap,
        "warmup": scn.warmup,
        "seed": scn.seed,
        "nodes": [n.label for n in scn.nodes],
    }
    if args.log:
        with open(args.log, "w") as fp:
            reporting.write_runlog(records, fp, config_echo)
    report = reporting.build_report(records, config_echo)
    reporting.emit_report(report, args.format, sys.stdout)
    return 0


def _cmd_synth(args) -> int:
    from . import datasets, scenario as scenario_mod, synth

    spec, file_duration = scenario_mod.load_synth_spec(args.spec)
    duration = args.duration if args.duration is not None else file_duration
    if duration is None:
        raise ConfigError("duration required (in the spec file or via --duration)")
    if args.seed is not None:
        spec = dataclasses.replace(spec, seed=args.seed)
    packets = synth.synth_generate(spec, duration)
    datasets.write_packets(packets, args.out)
    print(f"wrote {len(packets)} packets to {args.out}")
    return 0


def _cmd_metrics(args) -> int:
    from . import reporting

    try:
        with open(args.runlog) as fp:
            records, meta = reporting.read_runlog(fp)
    except OSError as exc:
        raise DataError(f"cannot read run log: {exc}") from exc
    except (ValueError, TypeError, KeyError) as exc:
        raise DataError(f"malformed run log {args.runlog}: {exc}") from exc
    report = reporting.build_report(records, meta)
    reporting.emit_report(report, args.format, sys.stdout)
    return 0


def _cmd_compare(args) -> int:
    from . import reporting

    reports = []
    for path in args.runlogs:
        try:
            with open(path) as fp:
                records, meta = reporting.read_runlog(fp)
        except OSError as exc:
            raise DataError(f"cannot read run log: {exc}") from exc
        except (ValueError, TypeError, KeyError) as exc:
            raise DataError(f"malformed run log {path}: {exc}") from exc
        reports.append(reporting.build_report(records, meta))
    strategies = args.strategies.split(",") if args.strategies else None
    rows = reporting.build_comparison(reports, strategies)
    reporting.emit_rows(rows, args.format, sys.stdout)
    if args.format == "table" and rows:
        sys.stdout.write("\n")
        reporting.emit_update_time_pivot(rows, sys.stdout)
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    handlers = {"run": _cmd_run, "synth": _cmd_synth, "metrics": _cmd_metrics,
                "compare": _cmd_compare}
    try:
        return handlers[args.verb](args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 1
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
