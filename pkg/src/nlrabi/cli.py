"""Command-line entry point: ``nlrabi point|sweep|figure``.

Exit codes: 0 success, 1 invalid input, 2 finished with unconverged rows.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

from . import figures
from .sweep import (ConfigError, apply_overrides, default_workers, make_row, parse_config,
                    parse_value, rows_to_csv, rows_to_jsonl, run_sweep, spec_header)

EXIT_OK, EXIT_INVALID, EXIT_UNCONVERGED = 0, 1, 2


def _load_config(path: str | None) -> dict:
    if path is None:
        return {}
    try:
        return json.loads(Path(path).read_text())
    except OSError as exc:
        raise ConfigError("--config", f"cannot read {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError("--config", f"invalid JSON in {path}: {exc.msg} (line {exc.lineno})") \
            from None


def _write(text: str, out: str | None):
    if out is None:
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)


def _config(args) -> dict:
    config = apply_overrides(_load_config(args.config), args.param or [])
    if getattr(args, "workers", None) is not None:
        config["workers"] = args.workers
    if getattr(args, "format", None) is not None:
        config["format"] = args.format
    return config


def cmd_point(args) -> int:
    config = _config(args)
    config.pop("sweep", None)
    config.setdefault("outputs", ["energy", "gap"])
    spec = parse_config(config, require_sweep=False)
    row = make_row(spec, None)
    clean = {k: (None if isinstance(v, float) and not math.isfinite(v) else v)
             for k, v in row.items()}
    _write(json.dumps(clean) + "\n", args.out)
    return EXIT_OK if row["converged"] else EXIT_UNCONVERGED


def cmd_sweep(args) -> int:
    spec = parse_config(_config(args))
    rows = run_sweep(spec)
    if spec.format == "jsonl":
        text = rows_to_jsonl(rows)
    else:
        text = rows_to_csv(rows, spec_header(spec))
    _write(text, args.out)
    return EXIT_OK if all(r["converged"] for r in rows) else EXIT_UNCONVERGED


def cmd_figure(args) -> int:
    if args.name not in figures.FIGURES:
        raise ConfigError("figure", f"unknown figure {args.name!r}; valid: "
                          + ", ".join(figures.FIGURES))
    overrides = {}
    for item in args.param or []:
        if "=" not in item:
            raise ConfigError(item, "override must look like key=value")
        key, raw = item.split("=", 1)
        if key not in figures.PRESETS[args.name]:
            raise ConfigError(key, f"not a preset of {args.name}; valid: "
                              + ", ".join(figures.PRESETS[args.name]))
        overrides[key] = parse_value(raw)
    workers = args.workers if args.workers is not None else default_workers()
    curves = figures.generate(args.name, overrides, workers)
    out_dir = Path(args.out or f"{args.name}_data")
    out_dir.mkdir(parents=True, exist_ok=True)
    unconverged = False
    for name, rows in curves.items():
        (out_dir / f"{name}.csv").write_text(rows_to_csv(rows))
        unconverged |= any(r.get("converged") is False for r in rows)
        print(out_dir / f"{name}.csv")
    return EXIT_UNCONVERGED if unconverged else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="nlrabi",
        description="Ground states and quantum Fisher information of the asymmetric "
                    "non-linear quantum Rabi model.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, workers=True, fmt=True):
        p.add_argument("--config", help="JSON config file")
        p.add_argument("--param", action="append", metavar="KEY=VALUE",
                       help="override a config value (repeatable; sweep.count=... for the sweep block)")
        p.add_argument("--out", help="output file (default: stdout)")
        if workers:
            p.add_argument("--workers", type=int, help="worker processes (env NLRABI_WORKERS)")
        if fmt:
            p.add_argument("--format", choices=("csv", "jsonl"))

    p_point = sub.add_parser("point", help="evaluate outputs at one parameter point (JSON)")
    common(p_point, workers=False, fmt=False)
    p_point.set_defaults(func=cmd_point)

    p_sweep = sub.add_parser("sweep", help="sweep one parameter, write CSV or JSON lines")
    common(p_sweep)
    p_sweep.set_defaults(func=cmd_sweep)

    p_fig = sub.add_parser("figure", help="write figure data as a bundle of CSV files")
    p_fig.add_argument("name", help="one of: " + ", ".join(figures.FIGURES))
    p_fig.add_argument("--param", action="append", metavar="KEY=VALUE",
                       help="override a figure preset value")
    p_fig.add_argument("--out", help="output directory (default: <name>_data)")
    p_fig.add_argument("--workers", type=int, help="worker processes (env NLRABI_WORKERS)")
    p_fig.set_defaults(func=cmd_figure)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
