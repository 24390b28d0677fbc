"""Command-line entry point: ``dropsim run|validate|report``."""

from __future__ import annotations

import argparse
import logging
import sys
from importlib import resources
from pathlib import Path

from .runner import plot_file_name, resolve_out_dir, run_scenario
from .scenario import ScenarioError, parse_scenario
from .telemetry import read_trace, report_from_trace

log = logging.getLogger("dropsim")

SHIPPED = ("drop.scn", "nodrop.scn")


def shipped_scenario(name: str) -> str:
    return resources.files("dropsim").joinpath("scenarios", name).read_text()


def load_scenario_text(path: str) -> str:
    p = Path(path)
    if p.exists():
        return p.read_text()
    if p.name in SHIPPED and not p.parent.parts:
        return shipped_scenario(p.name)
    raise FileNotFoundError(path)


def cmd_run(args) -> int:
    sc = parse_scenario(load_scenario_text(args.scenario))
    out = resolve_out_dir(args.out_dir)
    result = run_scenario(sc, seed=args.seed, out_dir=out)
    rep = result.report
    if args.plot:
        from .plotting import plot_throughput

        drop_times = {}
        for r in read_trace(result.trace_path):
            if r.event == "d" and r.pkt_type == "tcp":
                drop_times.setdefault(r.flow_id, []).append(r.time)
        plot_throughput(result.samples, out / "throughput.png", drop_times,
                        title=Path(args.scenario).stem)
    if not args.quiet:
        sys.stdout.write(rep.render())
        print(f"events: {rep.events_executed}  wall: {rep.wall_time:.3f} s")
        print(f"wrote {result.trace_path}, {result.report_path}")
        names = " ".join(plot_file_name(f) for f in sorted(result.samples))
        print(f"plot with: cd {out} && xgraph -geometry 600x400 {names}")
    return 0


def cmd_validate(args) -> int:
    sc = parse_scenario(load_scenario_text(args.scenario))
    print(f"ok: {len(sc.nodes)} nodes, {len(sc.links)} links, "
          f"{len(sc.agents)} agents, {len(sc.apps)} apps, duration {sc.duration:g} s")
    return 0


def cmd_report(args) -> int:
    records = read_trace(args.trace)
    sys.stdout.write(report_from_trace(records).render())
    if args.plot:
        from .plotting import plot_drops

        target = Path(args.plot)
        plot_drops(records, target, title=Path(args.trace).name)
        print(f"wrote {target}", file=sys.stderr)
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="dropsim", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a scenario and write trace, plot data and report")
    run.add_argument("scenario", help="scenario file (drop.scn / nodrop.scn resolve to the shipped ones)")
    run.add_argument("--seed", type=int, default=None)
    run.add_argument("--out-dir", default=None, help="output directory (default: $DROPSIM_OUT or .)")
    run.add_argument("--quiet", action="store_true")
    run.add_argument("--plot", action="store_true", help="also render throughput.png")
    run.set_defaults(func=cmd_run)

    val = sub.add_parser("validate", help="parse and check a scenario file")
    val.add_argument("scenario")
    val.set_defaults(func=cmd_validate)

    rep = sub.add_parser("report", help="recompute the run report from a trace file")
    rep.add_argument("trace")
    rep.add_argument("--plot", metavar="PNG", default=None, help="render a drops-over-time figure")
    rep.set_defaults(func=cmd_report)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING, format="%(name)s: %(message)s")
    try:
        return args.func(args)
    except ScenarioError as e:
        log.error("%s", e)
        return 2
    except (OSError, ValueError) as e:
        log.error("%s", e)
        return 1


if __name__ == "__main__":
    sys.exit(main())
