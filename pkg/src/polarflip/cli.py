"""Command-line entry point: ``polarflip {simulate,omega-sweep,analyze,tree-dump}``."""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

import numpy as np

from .analysis import fer_hypothetical, fer_theoretical, ga_evolve, omega_sweep
from .construction import build_code
from .flip import build_critical_set, omega_star
from .sim import CSV_FIELDS, DECODERS, DecoderSpec, StopRule, emit_results, sweep, version_string
from .tree import Kind, classify_tree


class ConfigError(ValueError):
    pass


def parse_code(text: str) -> tuple:
    """``"n,K"`` or ``"N,K"``; a first value above 10 is read as the length N."""
    try:
        a, k = (int(v) for v in text.split(","))
    except ValueError:
        raise ConfigError(f"--code expects two integers 'n,K', got {text!r}") from None
    if a > 10:
        if a & (a - 1):
            raise ConfigError(f"code length {a} is not a power of two")
        a = a.bit_length() - 1
    return a, k


def parse_grid(text: str) -> list:
    """Comma list (``1,1.5,2``) or inclusive range ``start:stop:step``."""
    try:
        if ":" in text:
            start, stop, step = (float(v) for v in text.split(":"))
            if step <= 0:
                raise ConfigError("range step must be positive")
            count = int(np.floor((stop - start) / step + 1e-9)) + 1
            return [round(start + i * step, 10) for i in range(max(count, 0))]
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise ConfigError(f"cannot parse grid {text!r}") from None


def parse_omega(text: str):
    if text == "auto":
        return None
    try:
        val = float(text)
    except ValueError:
        raise ConfigError(f"--omega expects 'auto' or a number, got {text!r}") from None
    if not val >= 0:
        raise ConfigError("--omega must be non-negative")
    return val


def _code_args(p, crc_default=16):
    p.add_argument("--code", default="10,512", help="n,K or N,K (K includes CRC bits)")
    p.add_argument("--crc-len", type=int, default=crc_default)
    p.add_argument("--crc-poly", default="0x1021", help="generator without the leading term")


def _make_code(args):
    n, k = parse_code(args.code)
    try:
        poly = int(str(args.crc_poly), 0)
        return build_code(n, k, crc_len=args.crc_len, crc_poly=poly)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def _stop(args):
    if args.min_errors < 1 or args.max_frames < 1:
        raise ConfigError("--min-errors and --max-frames must be positive")
    return StopRule(args.min_errors, args.max_frames)


def _write_table(rows, fields, out, fmt, provenance=None):
    if fmt == "json":
        text = json.dumps({"provenance": {"version": version_string(), **(provenance or {})},
                           "rows": rows}, indent=2)
        if out:
            Path(out).write_text(text + "\n")
        else:
            print(text)
        return
    fh = open(out, "w", newline="") if out else sys.stdout
    try:
        w = csv.DictWriter(fh, fieldnames=fields, extrasaction="ignore")
        w.writeheader()
        w.writerows(rows)
    finally:
        if out:
            fh.close()


def _figure_path(out, suffix):
    base = Path(out) if out else Path("polarflip")
    return base.with_name(base.stem + suffix)


def cmd_simulate(args):
    code = _make_code(args)
    grid = parse_grid(args.ebn0)
    if not grid:
        raise ConfigError("--ebn0 grid is empty")
    omega = parse_omega(args.omega)
    try:
        specs = [DecoderSpec(d.upper(), args.tmax, omega) for d in args.decoder]
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    if code.crc_len < 1 and any(s.name.endswith("SCF") for s in specs):
        raise ConfigError("flip decoders need --crc-len >= 1")
    results = sweep(code, specs, grid, _stop(args), args.seed, args.workers)
    prov = {"code": code.descriptor(), "seed": args.seed, "t_max": args.tmax,
            "omega_mode": specs[0].omega_mode}
    if args.out:
        emit_results(results, args.format, args.out, prov)
    else:
        _write_table([r.row() for r in results], list(CSV_FIELDS), None, args.format, prov)
    if args.plot:
        from .plotting import fer_figure, steps_figure

        f1 = fer_figure(results, _figure_path(args.out, "_fer.png"), code_label(code))
        f2 = steps_figure(results, _figure_path(args.out, "_steps.png"), code_label(code))
        logging.info("figures: %s, %s", f1, f2)
    return 0


def code_label(code):
    crc = f", C={code.crc_len}" if code.crc_len else ""
    return f"PC({code.N},{code.K}){crc}"


def cmd_omega_sweep(args):
    code = _make_code(args)
    if code.crc_len < 1:
        raise ConfigError("TSCF needs --crc-len >= 1")
    grid = parse_grid(args.omega_grid)
    if not grid or min(grid) < 0:
        raise ConfigError("--omega-grid must be a non-empty list of non-negative values")
    sweeps = []
    rows = []
    for ebn0 in parse_grid(args.ebn0):
        sw = omega_sweep(code, ebn0, grid, args.tmax, _stop(args), args.seed, fast=args.fast)
        sweeps.append(sw)
        band = set(sw.band.tolist())
        for r in sw.rows():
            rows.append({"ebn0_db": ebn0, **r, "in_band": r["omega"] in band,
                         "best_omega": sw.best_omega, "omega_star": omega_star(ebn0)})
    fields = ["ebn0_db", "omega", "fer", "frames", "errors", "in_band", "best_omega",
              "omega_star"]
    _write_table(rows, fields, args.out, args.format,
                 {"code": code.descriptor(), "seed": args.seed, "t_max": args.tmax})
    if args.plot:
        from .plotting import omega_sweep_figure

        omega_sweep_figure(sweeps, _figure_path(args.out, "_omega.png"))
    return 0


def cmd_analyze(args):
    n = args.n
    if not 2 <= n <= 10:
        raise ConfigError("--n must lie in 2..10")
    rates = parse_grid(args.rates)
    if any(not 0 < r <= 1 for r in rates):
        raise ConfigError("rates must lie in (0, 1]")
    rows = []
    for ebn0 in parse_grid(args.ebn0):
        for rate in rates:
            k = int(round(rate * (1 << n)))
            if k < 1:
                raise ConfigError(f"rate {rate} leaves no information bits")
            code = build_code(n, k, crc_len=0)
            prof = ga_evolve(code, ebn0)
            cs = build_critical_set(code)
            rows.append({"N": code.N, "K": k, "rate": k / code.N, "ebn0_db": ebn0,
                         "fer_sc": fer_theoretical(code, prof).value,
                         "fer_cs": fer_hypothetical(code, prof, cs).value,
                         "critical_set_size": int(cs.size)})
    _write_table(rows, list(rows[0]) if rows else ["N"], args.out, args.format)
    if args.plot and rows:
        from .plotting import theory_figure

        theory_figure(rows, _figure_path(args.out, "_theory.png"))
    return 0


def cmd_tree_dump(args):
    code = _make_code(args)
    tree = classify_tree(code, args.max_node_size)
    doc = {"code": code.descriptor(), "steps_per_iteration": tree.steps_per_iteration(),
           "counts": {k.name: tree.count(k) for k in Kind},
           "critical_set": build_critical_set(code).tolist(), "nodes": tree.dump()}
    text = json.dumps(doc, indent=None if args.compact else 2)
    if args.out:
        Path(args.out).write_text(text + "\n")
    else:
        print(text)
    return 0


def build_parser():
    p = argparse.ArgumentParser(prog="polarflip", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", help="Monte-Carlo FER and decoding steps")
    _code_args(s)
    s.add_argument("--decoder", nargs="+", default=["SC"], metavar="NAME",
                   help=f"one or more of {', '.join(DECODERS)}")
    s.add_argument("--tmax", type=int, default=10)
    s.add_argument("--omega", default="auto", help="'auto' for 2(Eb/N0 + 3) or a fixed value")
    s.add_argument("--ebn0", default="1:3:0.5", help="list '1,2' or range 'start:stop:step'")
    s.add_argument("--min-errors", type=int, default=200)
    s.add_argument("--max-frames", type=int, default=10_000_000)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--workers", type=int, default=1)
    s.add_argument("--out")
    s.add_argument("--format", choices=("csv", "json"), default="csv")
    s.add_argument("--plot", action="store_true", help="also write FER and step figures")
    s.set_defaults(func=cmd_simulate)

    o = sub.add_parser("omega-sweep", help="TSCF FER against the flip threshold")
    _code_args(o)
    o.add_argument("--ebn0", default="2.5")
    o.add_argument("--omega-grid", default="2:20:2")
    o.add_argument("--tmax", type=int, default=10)
    o.add_argument("--fast", action="store_true", help="sweep Fast-TSCF instead of TSCF")
    o.add_argument("--min-errors", type=int, default=100)
    o.add_argument("--max-frames", type=int, default=10_000_000)
    o.add_argument("--seed", type=int, default=0)
    o.add_argument("--out")
    o.add_argument("--format", choices=("csv", "json"), default="csv")
    o.add_argument("--plot", action="store_true")
    o.set_defaults(func=cmd_omega_sweep)

    a = sub.add_parser("analyze", help="GA theoretical and critical-set FER")
    a.add_argument("--n", type=int, default=10)
    a.add_argument("--rates", default="0.25,0.5,0.75")
    a.add_argument("--ebn0", default="1,2")
    a.add_argument("--out")
    a.add_argument("--format", choices=("csv", "json"), default="csv")
    a.add_argument("--plot", action="store_true")
    a.set_defaults(func=cmd_analyze)

    t = sub.add_parser("tree-dump", help="special-node classification as JSON")
    _code_args(t, crc_default=0)
    t.add_argument("--max-node-size", type=int)
    t.add_argument("--compact", action="store_true")
    t.add_argument("--out")
    t.set_defaults(func=cmd_tree_dump)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"polarflip: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
