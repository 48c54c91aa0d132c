"""Command line front end.

Subcommands: calibrate, fig5, fig6, proto, power. Each accepts --config
(key = value file with [section] headers), --seed, --out, and --trials;
curve commands also write a PNG rendering next to the CSV unless --no-plot
is given. Re-running any command with the same config and seed reproduces
the output files byte for byte.
"""

from __future__ import annotations

import argparse
import dataclasses
import sys
from pathlib import Path

from . import harness, plots, protosim
from .config import (ConfigError, build_experiment_config, build_scenario,
                     load_config_file)

_DEFAULT_OUT = {
    "calibrate": "calibration.txt",
    "fig5": "fig5.csv",
    "fig6": "fig6.csv",
    "proto": "proto_trace.txt",
    "power": "power.csv",
}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cogm2m",
        description="Cognitive cellular M2M sensing and protocol experiments")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in [
        ("calibrate", "calibrate every detector threshold and re-measure its "
                      "false-alarm rate on a fresh seed"),
        ("fig5", "compressive wideband detection vs compression ratio"),
        ("fig6", "narrowband miss-detection vs SNR"),
        ("proto", "run the Smart-eNodeB handshake scenario and dump the trace"),
        ("power", "DRX duty-cycle battery lifetime table"),
    ]:
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", type=str, default=None,
                       help="key = value configuration file")
        p.add_argument("--seed", type=int, default=None,
                       help="root seed (overrides the config)")
        p.add_argument("--out", type=str, default=_DEFAULT_OUT[name],
                       help=f"output path (default {_DEFAULT_OUT[name]})")
        p.add_argument("--trials", type=int, default=None,
                       help="trials per point (overrides the config)")
        if name in ("fig5", "fig6", "power"):
            p.add_argument("--no-plot", action="store_true",
                           help="skip the PNG rendering")
    return parser


def _png_path(out: str) -> str:
    return str(Path(out).with_suffix(".png"))


def _cmd_calibrate(cfg, args) -> None:
    if args.trials is not None:
        cfg = dataclasses.replace(
            cfg, detector=dataclasses.replace(cfg.detector,
                                              calibration_trials=args.trials))
    entries = harness.run_calibration_check(cfg)
    report = harness.calibration_report_text(entries)
    Path(args.out).write_text(report, encoding="utf-8")
    sys.stdout.write(report)
    if not all(e.passed for e in entries):
        sys.exit(1)


def _cmd_fig6(cfg, args) -> None:
    thresholds = harness.calibrate_detectors(cfg)
    points = harness.run_fig6(cfg, thresholds)
    harness.emit_csv(points, args.out)
    if not args.no_plot:
        plots.render_fig6(points, _png_path(args.out))
    print(f"wrote {args.out}")


def _cmd_fig5(cfg, args) -> None:
    points = harness.run_fig5(cfg)
    harness.emit_csv(points, args.out)
    if not args.no_plot:
        plots.render_fig5(points, _png_path(args.out))
    print(f"wrote {args.out}")


def _cmd_proto(cfg, args, raw) -> None:
    machines, enodeb = build_scenario(raw)
    trace = protosim.run_handshake(machines, enodeb, seed=cfg.seed)
    out = Path(args.out)
    out.write_text(protosim.format_trace_text(trace), encoding="utf-8")
    dump = out.with_suffix(".tsv")
    dump.write_text(protosim.format_trace_dump(trace), encoding="utf-8")
    print(f"wrote {out} and {dump} ({len(trace)} messages)")


def _cmd_power(cfg, args) -> None:
    powers = protosim.PowerLedger(
        radio_on_time=1.0, total_time=1.0, duty_cycle=1.0,
        battery_capacity_mwh=cfg.power.battery_capacity_mwh,
        active_power_mw=cfg.power.active_power_mw,
        sleep_power_mw=cfg.power.sleep_power_mw)
    duties = sorted(cfg.power.duty_grid)
    drx = protosim.DrxConfig(
        cycle_period_s=cfg.drx.cycle_period_s,
        on_duration_s=cfg.drx.on_duration_s,
        wakeup_margin_s=cfg.drx.wakeup_margin_s,
        extended=cfg.drx.extended)
    rows = [(duty, protosim.lifetime_hours(duty, powers) / 24.0)
            for duty in duties]
    drx_row = (drx.duty_cycle, protosim.drx_lifetime(drx, powers) / 24.0)
    with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("duty,lifetime_days,source\n")
        for duty, days in rows:
            fh.write(f"{duty:.6g},{days:.6g},grid\n")
        fh.write(f"{drx_row[0]:.6g},{drx_row[1]:.6g},drx\n")
    if not args.no_plot:
        plots.render_power([r[0] for r in rows], [r[1] for r in rows],
                           _png_path(args.out))
    print(f"wrote {args.out}")


def main(argv=None) -> None:
    args = _build_parser().parse_args(argv)
    try:
        raw = load_config_file(args.config) if args.config else {}
        cfg = build_experiment_config(raw, args.command, seed=args.seed,
                                      trials=args.trials)
        if args.command == "calibrate":
            _cmd_calibrate(cfg, args)
        elif args.command == "fig6":
            _cmd_fig6(cfg, args)
        elif args.command == "fig5":
            _cmd_fig5(cfg, args)
        elif args.command == "proto":
            _cmd_proto(cfg, args, raw)
        elif args.command == "power":
            _cmd_power(cfg, args)
    except (ConfigError, ValueError) as exc:
        sys.exit(f"cogm2m {args.command}: {exc}")


if __name__ == "__main__":
    main()
