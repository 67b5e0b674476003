"""Command-line driver.

Subcommands: ``validate``, ``beam-pattern``, ``rainbow``, ``train`` and
``experiment``. Configurations are YAML mappings of :class:`SystemConfig`
fields, optionally under a ``config:`` key, and ``--set key=value`` overrides
single fields. ``XLBEAM_CONFIG`` names the default configuration file.

Exit status is 0 on success, 1 on a validation error and 2 on any other
failure.
"""

from __future__ import annotations

import argparse
import os
import sys
import warnings
from typing import Any, Sequence

import yaml

from .channel import RangeBoundsError
from .config import ConfigError, PolarPoint, SystemConfig, make_frequency_grid, validate_config
from .experiment import COLUMNS, ExperimentSpec, run_experiment
from .patterns import PATTERN_COLUMNS, pattern_gains, resolve_pattern
from .rainbow import beam_table, coverage_report, solve_sweep_td_parameter
from .records import dump_yaml, header_lines, table_text
from .training import run_full_training

ENV_CONFIG = "XLBEAM_CONFIG"
EXIT_OK, EXIT_INVALID, EXIT_RUNTIME = 0, 1, 2


class ValidationFailure(Exception):
    pass


def _load_yaml(path: str) -> dict[str, Any]:
    try:
        with open(path, encoding="utf-8") as fh:
            data = yaml.safe_load(fh) or {}
    except OSError as exc:
        raise ValidationFailure(f"cannot read {path}: {exc.strerror}") from None
    except yaml.YAMLError as exc:
        raise ValidationFailure(f"{path} is not valid YAML: {exc}") from None
    if not isinstance(data, dict):
        raise ValidationFailure(f"{path} must contain a mapping")
    return data


def _parse_overrides(items: Sequence[str]) -> dict[str, Any]:
    out = {}
    for item in items or ():
        key, sep, value = item.partition("=")
        if not sep or not key:
            raise ValidationFailure(f"--set expects key=value, got {item!r}")
        out[key.strip()] = yaml.safe_load(value)
    return out


def resolve_config(path: str | None, overrides: Sequence[str], section: dict | None = None) -> SystemConfig:
    """Defaults, then the config file, then an inline section, then ``--set`` overrides."""
    data: dict[str, Any] = {}
    path = path or os.environ.get(ENV_CONFIG) or None
    if path:
        loaded = _load_yaml(path)
        data.update(loaded.get("config", loaded))
    if section:
        data.update(section)
    data.update(_parse_overrides(overrides))
    cfg = SystemConfig.from_dict({**SystemConfig().to_dict(), **data})
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        validate_config(cfg)
    for w in caught:
        print(f"warning: {w.message}", file=sys.stderr)
    return cfg


def _emit(text: str, output: str | None) -> None:
    if output in (None, "-"):
        sys.stdout.write(text)
        return
    with open(output, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
    print(f"wrote {output}", file=sys.stderr)


def cmd_validate(args) -> int:
    cfg = resolve_config(args.config, args.set)
    meta = {"command": "validate", "config": cfg.to_dict()}
    derived = {
        "antenna_spacing": cfg.antenna_spacing,
        "sparse_antennas": cfg.sparse_antennas,
        "aperture": cfg.aperture,
        "fresnel_distance": cfg.fresnel_distance,
        "rayleigh_distance": cfg.rayleigh_distance,
        "subarray_rayleigh_distance": cfg.subarray_rayleigh_distance,
        "max_subarray_antennas": cfg.max_subarray_antennas,
    }
    _emit("\n".join(header_lines(meta)) + "\n" + dump_yaml({"valid": True, "derived": derived}), args.output)
    return EXIT_OK


def cmd_beam_pattern(args) -> int:
    recipe = _load_yaml(args.recipe) if args.recipe else {}
    cfg = resolve_config(args.config, args.set, recipe.get("config"))
    entries = recipe.get("patterns")
    if entries is None:
        entry: dict[str, Any] = {"geometry": args.geometry, "sweep": args.sweep, "points": args.points}
        for key in ("td_angle", "td_curvature", "ps_angle", "ps_curvature", "angle", "range"):
            value = getattr(args, key)
            if value is not None:
                entry[key] = value
        if args.subcarriers:
            entry["subcarriers"] = [int(m) for m in args.subcarriers.split(",")]
        entries = [entry]
    requests = [resolve_pattern(e, cfg, i) for i, e in enumerate(entries)]
    rows = [row for req in requests for row in pattern_gains(req, cfg)]
    meta = {
        "command": "beam-pattern",
        "config": cfg.to_dict(),
        "patterns": [r.to_dict() for r in requests],
    }
    _emit(table_text(PATTERN_COLUMNS, rows, meta), args.output)
    return EXIT_OK


def cmd_rainbow(args) -> int:
    cfg = resolve_config(args.config, args.set)
    grid = make_frequency_grid(cfg)
    td = solve_sweep_td_parameter(cfg.activation_interval, grid) if args.td_angle is None else args.td_angle
    if td >= -1.0:
        raise ValidationFailure(f"rainbow blocks need td_angle < -1, got {td}")
    cov = coverage_report(td, cfg.activation_interval, grid)
    meta = {
        "command": "rainbow",
        "config": cfg.to_dict(),
        "td_angle": td,
        "coverage": {
            "covered": cov.covered,
            "max_gap": cov.max_gap,
            "max_overlap": cov.max_overlap,
            "overlap_estimate": cov.overlap_estimate,
        },
    }
    rows = beam_table(td, cfg.activation_interval, grid)
    _emit(table_text(("m", "freq", "k", "theta", "block", "physical"), rows, meta), args.output)
    return EXIT_OK


def cmd_train(args) -> int:
    cfg = resolve_config(args.config, args.set)
    try:
        user = PolarPoint(float(args.range), float(args.angle))
    except ValueError as exc:
        raise ValidationFailure(str(exc)) from None
    outcome = run_full_training(cfg, user, args.seed)
    meta = {
        "command": "train",
        "config": cfg.to_dict(),
        "seed": args.seed,
        "user": {"range": user.range, "angle": user.angle},
    }
    text = "\n".join(header_lines(meta)) + "\n" + dump_yaml(outcome.to_dict())
    _emit(text, args.output)
    return EXIT_OK


def cmd_experiment(args) -> int:
    data = _load_yaml(args.spec)
    cfg = resolve_config(args.config, args.set, data.get("config"))
    # header keys written by this command are ignored so an output header can be rerun as a spec
    body = {k: v for k, v in data.items() if k not in ("config", "command", "failures")}
    for key in ("trials", "seed", "n_jobs"):
        value = getattr(args, key)
        if value is not None:
            body[key] = value
    spec = ExperimentSpec.from_dict(body, base=cfg)
    table = run_experiment(spec)
    meta = {"command": "experiment", **spec.to_dict()}
    if table.failures:
        meta["failures"] = [
            {"scheme": s, "axis": a, "count": n} for (s, a), n in sorted(table.failures.items())
        ]
    _emit(table_text(COLUMNS, [r.cells() for r in table.rows], meta), args.output)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="xlbeam", description="Wideband near-field beam training toolkit.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help=f"YAML configuration (default: ${ENV_CONFIG})")
        p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE", help="override one field")
        p.add_argument("-o", "--output", help="output file (default: stdout)")

    p = sub.add_parser("validate", help="check a configuration and print derived quantities")
    common(p)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("beam-pattern", help="tabulate beam gain versus angle or range")
    common(p)
    p.add_argument("--recipe", help="YAML file with a 'patterns' list (and optional 'config')")
    p.add_argument("--geometry", default="full", choices=["full", "dense_subarray", "sparse_subarray"])
    p.add_argument("--sweep", default="angle", choices=["angle", "range"])
    p.add_argument("--points", type=int, default=2001)
    p.add_argument("--subcarriers", help="comma-separated 1-based indices (default: central)")
    for key in ("td_angle", "td_curvature", "ps_angle", "ps_curvature", "angle", "range"):
        p.add_argument("--" + key.replace("_", "-"), dest=key, type=float)
    p.set_defaults(func=cmd_beam_pattern)

    p = sub.add_parser("rainbow", help="dump the sparse-subarray beam table and coverage")
    common(p)
    p.add_argument("--td-angle", type=float, help="TD parameter (default: the seamless-coverage solution)")
    p.set_defaults(func=cmd_rainbow)

    p = sub.add_parser("train", help="run the three-stage training for one user")
    common(p)
    p.add_argument("--range", required=True, type=float, help="user range in meters")
    p.add_argument("--angle", required=True, type=float, help="user spatial angle in [-1, 1)")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("experiment", help="run a Monte Carlo experiment spec")
    common(p)
    p.add_argument("--spec", required=True, help="YAML experiment spec")
    p.add_argument("--trials", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--n-jobs", dest="n_jobs", type=int)
    p.set_defaults(func=cmd_experiment)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits with 2 on usage errors; those are validation errors here
        return EXIT_INVALID if exc.code else EXIT_OK
    try:
        return args.func(args)
    except (ValidationFailure, ConfigError, RangeBoundsError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except Exception as exc:  # noqa: BLE001 - report and map to the runtime exit code
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
