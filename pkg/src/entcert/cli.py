"""Command line: ``entcert {certify,simulate,sweep,validate}``.

Results go to stdout as JSON or CSV; a human summary goes to stderr.  On
error a single line ``error <status> <Kind>: <message>`` is written to stderr
and the process exits with the status listed in the README.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from dataclasses import fields
from pathlib import Path

from .band import NoiseDiagonal
from .engine import DEFAULT_RESAMPLES, MODES, POSITIVITY, certify, sweep
from .errors import ConfigurationError, EntCertError, InputError
from .ingest import dumps_record, load_record, visibility_table
from .oracles import validate
from .simulator import SimulationConfig, simulate

EXIT_IO = 11
EXIT_ORACLE_FAILED = 10

log = logging.getLogger("entcert")


def _window(text: str):
    if text == "auto":
        return None
    try:
        a, b = (int(x) for x in text.split(":"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"window must be 'auto' or 'a:b', got {text!r}") from None
    return (a, b)


def _emit(text: str, path: str | None):
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


def cmd_certify(args) -> int:
    if args.resamples > 0 and args.seed is None:
        raise InputError("--seed is required when --resamples > 0")
    rec = load_record(args.input)
    noise = None if args.noise_floor is None else NoiseDiagonal(args.noise_floor)
    res = certify(
        rec,
        noise=noise,
        mode=args.mode,
        resamples=args.resamples,
        seed=args.seed,
        window=args.window,
        workers=args.workers,
    )
    _emit(res.to_json() + "\n", args.output)
    if args.curve:
        _emit(res.curve_csv(), args.curve)
    if args.visibilities:
        _emit(visibility_table(rec), args.visibilities)
    b = res.bound
    print(
        f"[{res.mode}] E_oF >= {b.eof_bits:.4f} ebits (B = {b.b_value:.4f}), "
        f"window {res.window[0]}..{res.window[1]}, |C| = {len(res.chosen_pairs)}, "
        f"dimension >= {b.dim_lower}; bootstrap {res.eof_mean:.4f} +- {res.eof_std:.4f} "
        f"({args.resamples} resamples)",
        file=sys.stderr,
    )
    return 0


def cmd_simulate(args) -> int:
    overrides = {}
    if args.config:
        try:
            overrides.update(json.loads(Path(args.config).read_text()))
        except json.JSONDecodeError as exc:
            raise ConfigurationError(f"config file: {exc.msg} at line {exc.lineno}") from None
    flag_map = {
        "modes": args.modes,
        "visibility1": args.visibility,
        "seed": args.seed,
        "delta_ns": args.delta,
        "pulse_ns": args.pulse,
        "pump_linewidth_hz": args.linewidth,
        "memory_efficiency": args.efficiency,
        "noise_floor": args.noise_floor,
        "counts_per_point": args.counts_per_point,
        "edge_rise_fraction": args.edge_rise,
        "raw_histogram": args.histogram or None,
    }
    overrides.update({k: v for k, v in flag_map.items() if v is not None})
    known = {f.name for f in fields(SimulationConfig)}
    unknown = set(overrides) - known
    if unknown:
        raise ConfigurationError(f"unknown config keys: {sorted(unknown)}")
    cfg = SimulationConfig(**overrides)
    _emit(dumps_record(simulate(cfg)) + "\n", args.output)
    print(f"simulated {cfg.modes} modes, V1 = {cfg.visibility1}, seed = {cfg.seed}", file=sys.stderr)
    return 0


def cmd_sweep(args) -> int:
    rows = sweep(args.vis, args.dmax, noise_floor=args.noise_floor)
    out = sys.stdout
    w = csv.writer(out, lineterminator="\n")
    w.writerow(["V", "d", "eof_bits"])
    for v, d, e in rows:
        w.writerow([f"{v:g}", d, f"{e:.12g}"])
    return 0


def cmd_validate(args) -> int:
    report = validate(
        psd_samples=args.psd_samples,
        pure_samples=args.pure_samples,
        ledger_samples=args.ledger_samples,
        completion_samples=args.completion_samples,
        mixed_samples=args.mixed_samples,
        seed=args.seed,
    )
    sys.stdout.write(json.dumps(report, indent=1) + "\n")
    for name, entry in report.items():
        if isinstance(entry, dict):
            status = "PASS" if entry["failures"] == 0 else "FAIL"
            print(
                f"{status} {name}: {entry['checked']} checked, {entry['failures']} failures, "
                f"worst margin {entry['worst_margin']:.3g}",
                file=sys.stderr,
            )
    return 0 if report["passed"] else EXIT_ORACLE_FAILED


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="entcert", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    c = sub.add_parser("certify", help="certify a lower bound on E_oF from a record")
    c.add_argument("input", help="record file, or - for stdin")
    c.add_argument("--mode", choices=MODES, default=POSITIVITY)
    c.add_argument("--resamples", type=int, default=DEFAULT_RESAMPLES)
    c.add_argument("--seed", type=int)
    c.add_argument("--noise-floor", type=float, help="override the cross-term floor")
    c.add_argument("--window", type=_window, default=None, help="'auto' or a:b (1-based)")
    c.add_argument("--workers", type=int, default=None)
    c.add_argument("-o", "--output", help="result document (default stdout)")
    c.add_argument("--curve", help="write the per-dimension curve as CSV")
    c.add_argument("--visibilities", help="write the fitted visibility table as CSV")
    c.set_defaults(func=cmd_certify)

    s = sub.add_parser("simulate", help="write a synthetic measurement record")
    s.add_argument("--config", help="JSON file with SimulationConfig fields")
    s.add_argument("--modes", type=int)
    s.add_argument("--visibility", type=float)
    s.add_argument("--seed", type=int)
    s.add_argument("--delta", type=float)
    s.add_argument("--pulse", type=float)
    s.add_argument("--linewidth", type=float)
    s.add_argument("--efficiency", type=float)
    s.add_argument("--noise-floor", type=float)
    s.add_argument("--counts-per-point", type=float)
    s.add_argument("--edge-rise", type=float)
    s.add_argument("--histogram", action="store_true", help="include a raw 2-D histogram")
    s.add_argument("-o", "--output")
    s.set_defaults(func=cmd_simulate)

    w = sub.add_parser("sweep", help="E_oF bound versus d for uniform data")
    w.add_argument("--vis", type=float, nargs="+", required=True)
    w.add_argument("--dmax", type=int, required=True)
    w.add_argument("--noise-floor", type=float, default=0.0)
    w.set_defaults(func=cmd_sweep)

    v = sub.add_parser("validate", help="run the brute-force oracle suite")
    v.add_argument("--psd-samples", type=int, default=10_000)
    v.add_argument("--pure-samples", type=int, default=1_000)
    v.add_argument("--mixed-samples", type=int, default=1_000)
    v.add_argument("--ledger-samples", type=int, default=1_000)
    v.add_argument("--completion-samples", type=int, default=200)
    v.add_argument("--seed", type=int, default=0)
    v.set_defaults(func=cmd_validate)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.ERROR, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except EntCertError as exc:
        print(f"error {exc.exit_code} {type(exc).__name__}: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"error {EXIT_IO} OSError: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
