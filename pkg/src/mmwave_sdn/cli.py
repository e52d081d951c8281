"""Command-line front end.

    mmwave-sdn run [--scenario FILE] [--speeds 30,90] [--seeds N] [--seed S]
                   [--scheme single|multi|both] [--out DIR] [--trace] [--quiet] [--jobs N]
    mmwave-sdn validate FILE
    mmwave-sdn linkbudget DISTANCE [--gain-db G] [--loss-db D] [--shadow-db S] ...

Exit codes: 0 ok, 2 configuration error, 3 invariant violation, 4 I/O error.
"""

from __future__ import annotations

import argparse
import io
import json
import os
import sys
import tempfile
from pathlib import Path

from . import channel as ch
from .engine import noise_dbm, pathloss_params, run_scenario, trace_run
from .errors import ConfigError, InputError, InvariantViolation
from .scenario import Scenario, parse_scenario, scenario_from_dict

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_INVARIANT = 3
EXIT_IO = 4

CSV_HEADER = ("speed_kmh", "scheme", "seeds", "success_rate_mean", "success_rate_stderr",
              "handovers_mean", "cluster_size_mean")


class _IOFailure(Exception):
    pass


def _speed_list(text):
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated speeds in km/h, got {text!r}")


def build_parser() -> argparse.ArgumentParser:
    # argparse exits with 2 on bad usage, which matches EXIT_CONFIG
    p = argparse.ArgumentParser(prog="mmwave-sdn", description="Single- vs multi-gNB mmWave downlink simulator.")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run a speed sweep and write results")
    r.add_argument("--scenario", type=Path, help="scenario JSON file (defaults if omitted)")
    r.add_argument("--speeds", type=_speed_list, help="comma-separated speeds in km/h")
    r.add_argument("--seeds", type=int, help="independent runs per speed")
    r.add_argument("--seed", type=int, help="base seed")
    r.add_argument("--scheme", choices=["single", "multi", "both"], help="schemes to simulate")
    r.add_argument("--out", type=Path, default=Path("."), help="output directory")
    r.add_argument("--trace", action="store_true", help="also write events.jsonl for run 0")
    r.add_argument("--quiet", action="store_true", help="no table on stdout")
    r.add_argument("--jobs", type=int, default=1, help="worker processes (one speed each)")

    v = sub.add_parser("validate", help="check a scenario file and echo the effective config")
    v.add_argument("scenario", type=Path)

    lb = sub.add_parser("linkbudget", help="print the link budget at one distance")
    lb.add_argument("distance", type=float, help="metres, >= 1")
    lb.add_argument("--scenario", type=Path, help="take radio parameters from this file")
    lb.add_argument("--gain-db", type=float, default=0.0, help="beamforming gain psi")
    lb.add_argument("--loss-db", type=float, default=0.0, help="extra attenuation delta")
    lb.add_argument("--shadow-db", type=float, default=0.0, help="shadowing eta")
    lb.add_argument("--interference-dbm", type=float, default=float("-inf"))
    lb.add_argument("--tx-power-dbm", type=float)
    lb.add_argument("--bandwidth-ghz", type=float)
    lb.add_argument("--min-sinr-db", type=float)
    return p


def _read_text(path: Path) -> str:
    try:
        return path.read_text(encoding="utf-8")
    except OSError as exc:
        raise _IOFailure(f"cannot read {path}: {exc.strerror or exc}") from exc


def _load(path: Path | None, overrides: dict) -> Scenario:
    """Defaults, then the file, then command-line overrides."""
    if path is None:
        data, text = {}, None
    else:
        text = _read_text(path)
        parse_scenario(text)  # reports file problems with line numbers
        data = json.loads(text)
    data.update({k: v for k, v in overrides.items() if v is not None})
    return scenario_from_dict(data, text)


def _report_config_error(exc: ConfigError):
    print("configuration error:", file=sys.stderr)
    for v in exc.violations:
        print(f"  - {v}", file=sys.stderr)


# --------------------------------------------------------------------------
# Output writers
# --------------------------------------------------------------------------


def format_csv(rows) -> str:
    buf = io.StringIO()
    buf.write(",".join(CSV_HEADER) + "\n")
    for m in sorted(rows, key=lambda m: (m.speed_kmh, m.scheme)):
        buf.write(f"{m.speed_kmh:g},{m.scheme},{m.seeds},{m.success_rate:.10f},"
                  f"{m.success_rate_stderr:.10f},{m.handovers_mean:.6f},{m.cluster_size_mean:.6f}\n")
    return buf.getvalue()


def format_events(events) -> str:
    return "".join(json.dumps(e, sort_keys=True) + "\n" for e in events)


_COLORS = {"single": "#c0392b", "multi": "#1f5fa8"}
_LABELS = {"single": "single-gNB", "multi": "multi-gNB"}


def format_svg(rows, width=640, height=420) -> str:
    """Success rate vs speed with +-1 standard-error bars, one line per scheme."""
    left, right, top, bottom = 70, 20, 30, 60
    pw, ph = width - left - right, height - top - bottom
    speeds = sorted({m.speed_kmh for m in rows})
    lo = min(m.success_rate - m.success_rate_stderr for m in rows)
    hi = max(m.success_rate + m.success_rate_stderr for m in rows)
    pad = max((hi - lo) * 0.1, 1e-3)
    y0, y1 = max(0.0, lo - pad), min(1.0, hi + pad)
    if y1 <= y0:
        y0, y1 = max(0.0, y0 - 0.01), min(1.0, y1 + 0.01)
    x0, x1 = speeds[0], speeds[-1]
    if x1 == x0:
        x0, x1 = x0 - 1.0, x1 + 1.0

    def sx(v):
        return left + (v - x0) / (x1 - x0) * pw

    def sy(v):
        return top + (y1 - v) / (y1 - y0) * ph

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
           f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="12">',
           f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>',
           f'<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="none" stroke="black"/>']
    for i in range(6):
        v = y0 + (y1 - y0) * i / 5
        y = sy(v)
        out.append(f'<line x1="{left}" y1="{y:.2f}" x2="{left + pw}" y2="{y:.2f}" stroke="#ddd"/>')
        out.append(f'<text x="{left - 6}" y="{y + 4:.2f}" text-anchor="end">{v:.4f}</text>')
    for v in speeds:
        x = sx(v)
        out.append(f'<line x1="{x:.2f}" y1="{top + ph}" x2="{x:.2f}" y2="{top + ph + 5}" stroke="black"/>')
        out.append(f'<text x="{x:.2f}" y="{top + ph + 18}" text-anchor="middle">{v:g}</text>')
    out.append(f'<text x="{left + pw / 2}" y="{height - 15}" text-anchor="middle">UE speed (km/h)</text>')
    out.append(f'<text x="18" y="{top + ph / 2}" text-anchor="middle" '
               f'transform="rotate(-90 18 {top + ph / 2})">success rate</text>')

    for n, scheme in enumerate(s for s in ("single", "multi") if any(m.scheme == s for m in rows)):
        pts = sorted((m for m in rows if m.scheme == scheme), key=lambda m: m.speed_kmh)
        color = _COLORS[scheme]
        path = " ".join(f"{sx(m.speed_kmh):.2f},{sy(m.success_rate):.2f}" for m in pts)
        out.append(f'<polyline points="{path}" fill="none" stroke="{color}" stroke-width="2"/>')
        for m in pts:
            x = sx(m.speed_kmh)
            ya, yb = sy(m.success_rate - m.success_rate_stderr), sy(m.success_rate + m.success_rate_stderr)
            out.append(f'<line x1="{x:.2f}" y1="{ya:.2f}" x2="{x:.2f}" y2="{yb:.2f}" stroke="{color}"/>')
            for y in (ya, yb):
                out.append(f'<line x1="{x - 4:.2f}" y1="{y:.2f}" x2="{x + 4:.2f}" y2="{y:.2f}" stroke="{color}"/>')
            out.append(f'<circle cx="{x:.2f}" cy="{sy(m.success_rate):.2f}" r="3.5" fill="{color}"/>')
        ly = top + 16 + 18 * n
        out.append(f'<line x1="{left + 12}" y1="{ly}" x2="{left + 36}" y2="{ly}" stroke="{color}" stroke-width="2"/>')
        out.append(f'<text x="{left + 42}" y="{ly + 4}">{_LABELS[scheme]}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def _write_atomic(path: Path, text: str):
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise


# --------------------------------------------------------------------------
# Commands
# --------------------------------------------------------------------------


def cmd_run(args) -> int:
    schemes = None if args.scheme is None else (["single", "multi"] if args.scheme == "both" else [args.scheme])
    overrides = {"speed_sweep": args.speeds, "seeds": args.seeds, "seed": args.seed, "schemes": schemes}
    if args.jobs < 1:
        raise ConfigError("--jobs must be >= 1")
    sc = _load(args.scenario, overrides)

    rows = run_scenario(sc, jobs=args.jobs)
    files = {"figure_success_rate.svg": format_svg(rows)}
    if args.trace:
        events = []
        for speed in sorted(float(s) for s in sc.speed_sweep):
            events.extend(trace_run(sc, speed, 0))
        files["events.jsonl"] = format_events(events)
    files["results.csv"] = format_csv(rows)  # last, so a failed write never leaves a new one

    # everything is computed before the first byte is written
    try:
        args.out.mkdir(parents=True, exist_ok=True)
        for name, text in files.items():
            _write_atomic(args.out / name, text)
    except OSError as exc:
        raise _IOFailure(f"cannot write to {args.out}: {exc.strerror or exc}") from exc

    if not args.quiet:
        print(f"{'speed':>6}  {'scheme':<6}  {'success':>8}  {'stderr':>8}  {'handovers':>9}  cluster")
        for m in rows:
            print(f"{m.speed_kmh:6g}  {m.scheme:<6}  {m.success_rate:8.5f}  {m.success_rate_stderr:8.5f}  "
                  f"{m.handovers_mean:9.2f}  {m.cluster_size_mean:.3f}")
        print(f"wrote {', '.join(sorted(files))} to {args.out}")
    return EXIT_OK


def cmd_validate(args) -> int:
    sc = _load(args.scenario, {})
    print(json.dumps(sc.to_dict(), indent=2))
    print("ok")
    return EXIT_OK


def cmd_linkbudget(args) -> int:
    sc = _load(args.scenario, {}) if args.scenario else Scenario()
    overrides = {"tx_power_dbm": args.tx_power_dbm, "bandwidth_ghz": args.bandwidth_ghz,
                 "min_sinr_db": args.min_sinr_db}
    sc = scenario_from_dict({**sc.to_dict(), **{k: v for k, v in overrides.items() if v is not None}})
    if not args.distance >= 1.0:
        raise ConfigError(f"distance must be >= 1 m, got {args.distance}")
    pl = ch.path_loss(pathloss_params(sc), args.distance, args.shadow_db)
    budget = ch.received_power(sc.tx_power_dbm, args.gain_db, args.loss_db, pl)
    n0 = noise_dbm(sc)
    rep = ch.sinr(budget.rx_power_dbm, args.interference_dbm, n0, sc.min_sinr_db)
    verdict = "satisfied" if rep.satisfied else "not satisfied"
    print(f"distance      {args.distance:g} m")
    print(f"path loss     {pl:.4f} dB")
    print(f"rx power      {budget.rx_power_dbm:.4f} dBm")
    print(f"noise         {n0:.4f} dBm")
    print(f"interference  {args.interference_dbm:.4f} dBm")
    print(f"SINR          {rep.sinr_db:.4f} dB")
    print(f"threshold     {sc.min_sinr_db:g} dB: {verdict}")
    return EXIT_OK


_COMMANDS = {"run": cmd_run, "validate": cmd_validate, "linkbudget": cmd_linkbudget}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except ConfigError as exc:
        _report_config_error(exc)
        return EXIT_CONFIG
    except InputError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except InvariantViolation as exc:
        print(f"invariant violation: {exc.invariant} at slot {exc.slot}", file=sys.stderr)
        print(str(exc), file=sys.stderr)
        return EXIT_INVARIANT
    except _IOFailure as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
