"""Command-line front end.

Subcommands: ``build``, ``eval``, ``sweep``, ``gap`` and ``breakpoints``.
Configs are YAML files; epsilon values may be numbers or strings such as
``"2^-6"``.
"""

from __future__ import annotations

import argparse
import csv
import io
import logging
import math
import os
import re
import sys
from pathlib import Path
from typing import Any

import numpy as np
import yaml

from . import analysis, combinators, multivariate, univariate
from .grids import MAX_DYADIC_LEVEL, GridSpec
from .network import NetworkFormatError, deserialize, eval_batch, serialize
from .report import CSV_COLUMNS, BuildReport
from .targets import ApproxTarget, get_target, polynomial

log = logging.getLogger("deepapprox")

GAP_COLUMNS = CSV_COLUMNS + (
    "ns",
    "nd",
    "ls",
    "ld",
    "verdict_a",
    "verdict_b",
    "verdict_c",
    "verdict_d",
    "vacuous",
)
DEFAULT_GAP_EPS = [2.0**-k for k in range(4, 13)]


class ConfigError(ValueError):
    pass


# ---------------------------------------------------------------------------
# config parsing

_POWER = re.compile(r"^\s*(-?[\d.]+)\s*\^\s*(-?[\d.]+)\s*$")


def parse_eps(value: Any) -> float:
    """A float from a number or a ``"base^exp"`` string."""
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return float(value)
    if isinstance(value, str):
        m = _POWER.match(value)
        if m:
            return float(m.group(1)) ** float(m.group(2))
        try:
            return float(value)
        except ValueError:
            pass
    raise ConfigError(f"cannot read epsilon from {value!r}")


def parse_eps_list(value: Any) -> list[float]:
    if isinstance(value, list):
        return [parse_eps(v) for v in value]
    return [parse_eps(value)]


def load_config(path: str | None) -> dict:
    if path is None:
        return {}
    try:
        with open(path) as fh:
            cfg = yaml.safe_load(fh) or {}
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except yaml.YAMLError as exc:
        raise ConfigError(f"config {path} is not valid YAML: {exc}") from exc
    if not isinstance(cfg, dict):
        raise ConfigError("config must be a mapping")
    return cfg


def _target_from(spec: Any) -> ApproxTarget:
    if isinstance(spec, str):
        return get_target(spec)
    if isinstance(spec, dict) and "coeffs" in spec:
        return polynomial(spec["coeffs"], spec.get("name"))
    raise ConfigError(f"cannot read a target from {spec!r}")


REQUIRED = {
    "square": (),
    "polynomial": ("coeffs",),
    "smooth": ("function",),
    "sum": ("targets", "beta"),
    "product": ("targets",),
    "compose": ("stages",),
    "ridge": ("direction", "function"),
    "gaussian": ("d",),
    "linear_product": ("rows",),
    "multinomial": ("terms",),
    "poly_chain": ("terms", "chain"),
}


def validate_target(spec: Any) -> dict:
    if not isinstance(spec, dict) or "kind" not in spec:
        raise ConfigError("config needs a 'target' mapping with a 'kind'")
    kind = spec["kind"]
    if kind not in REQUIRED:
        raise ConfigError(f"unknown target kind {kind!r}; choose from {', '.join(REQUIRED)}")
    missing = [k for k in REQUIRED[kind] if k not in spec]
    if missing:
        raise ConfigError(f"target kind {kind!r} is missing {', '.join(missing)}")
    return spec


def _grid_for(dim: int, points: int | None, seed: int) -> GridSpec | None:
    if points is None:
        return None
    if dim == 1:
        return GridSpec("dyadic", points, level=MAX_DYADIC_LEVEL)
    return GridSpec("random", points, dim=dim, seed=seed, corners=dim <= 5)


def _dim_of(spec: dict) -> int:
    kind = spec["kind"]
    if kind == "ridge":
        return len(spec["direction"])
    if kind == "gaussian":
        return int(spec["d"])
    if kind == "linear_product":
        return len(spec["rows"][0])
    if kind in ("multinomial", "poly_chain"):
        return len(spec["terms"][0]["alpha"])
    return 1


def run_builder(spec: dict, eps: float, points: int | None, seed: int):
    """Dispatch a validated target spec to its builder."""
    kind = spec["kind"]
    grid = _grid_for(_dim_of(spec), points, seed)
    extra = {"max_degree": int(spec["max_degree"])} if "max_degree" in spec else {}
    if kind == "square":
        return univariate.build_square(eps, grid)
    if kind == "polynomial":
        return univariate.build_polynomial(spec["coeffs"], eps, grid)
    if kind == "smooth":
        return univariate.build_smooth(_target_from(spec["function"]), eps, grid, **extra)
    if kind == "sum":
        ts = [_target_from(t) for t in spec["targets"]]
        return combinators.combine_sum(ts, [float(b) for b in spec["beta"]], eps, grid)
    if kind == "product":
        ts = [_target_from(t) for t in spec["targets"]]
        return combinators.combine_product(ts, eps, grid, **extra)
    if kind == "compose":
        return combinators.compose([_target_from(t) for t in spec["stages"]], eps, grid)
    if kind == "ridge":
        return combinators.build_ridge(spec["direction"], _target_from(spec["function"]), eps, grid, seed)
    if kind == "gaussian":
        return combinators.build_gaussian(int(spec["d"]), eps, grid, seed, **extra)
    if kind == "linear_product":
        return multivariate.build_linear_product(spec["rows"], eps, grid, seed)
    if kind == "multinomial":
        return multivariate.build_multinomial(spec["terms"], eps, grid, seed)
    if kind == "poly_chain":
        chain = [_target_from(t) for t in spec["chain"]]
        return multivariate.build_poly_then_chain(spec["terms"], chain, eps, grid, seed)
    raise ConfigError(f"unknown target kind {kind!r}")


# ---------------------------------------------------------------------------
# output helpers


def _fmt(v: Any) -> str:
    if isinstance(v, bool):
        return "pass" if v else "fail"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def write_csv(path: Path, columns, rows) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([_fmt(row[c]) for c in columns])
    path.write_text(buf.getvalue())


def svg_plot(series: dict[str, list[tuple[float, float]]], xlabel: str, ylabel: str) -> str:
    """Minimal line chart with one polyline per series."""
    W, H, pad = 640, 420, 60
    pts = [p for s in series.values() for p in s]
    xs = [p[0] for p in pts] or [0.0, 1.0]
    ys = [p[1] for p in pts] or [0.0, 1.0]
    x0, x1 = min(xs), max(xs)
    y0, y1 = min(ys), max(ys)
    x1 = x1 if x1 > x0 else x0 + 1
    y1 = y1 if y1 > y0 else y0 + 1

    def px(x, y):
        return (
            pad + (x - x0) / (x1 - x0) * (W - 2 * pad),
            H - pad - (y - y0) / (y1 - y0) * (H - 2 * pad),
        )

    colors = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"]
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">',
        f'<rect width="{W}" height="{H}" fill="white"/>',
        f'<line x1="{pad}" y1="{H - pad}" x2="{W - pad}" y2="{H - pad}" stroke="black"/>',
        f'<line x1="{pad}" y1="{pad}" x2="{pad}" y2="{H - pad}" stroke="black"/>',
        f'<text x="{W / 2}" y="{H - 15}" text-anchor="middle" font-size="14">{xlabel}</text>',
        f'<text x="15" y="{H / 2}" text-anchor="middle" font-size="14" '
        f'transform="rotate(-90 15 {H / 2})">{ylabel}</text>',
        f'<text x="{pad}" y="{H - pad + 18}" font-size="11">{x0:.4g}</text>',
        f'<text x="{W - pad}" y="{H - pad + 18}" font-size="11" text-anchor="end">{x1:.4g}</text>',
        f'<text x="{pad - 5}" y="{H - pad}" font-size="11" text-anchor="end">{y0:.4g}</text>',
        f'<text x="{pad - 5}" y="{pad + 4}" font-size="11" text-anchor="end">{y1:.4g}</text>',
    ]
    for k, (name, s) in enumerate(series.items()):
        color = colors[k % len(colors)]
        coords = " ".join(f"{a:.2f},{b:.2f}" for a, b in (px(x, y) for x, y in s))
        out.append(f'<polyline fill="none" stroke="{color}" stroke-width="2" points="{coords}"/>')
        out.append(
            f'<text x="{W - pad - 140}" y="{pad + 18 * k}" font-size="12" fill="{color}">{name}</text>'
        )
    out.append("</svg>")
    return "\n".join(out) + "\n"


def _log_report(rep: BuildReport) -> None:
    log.info(
        "%s eps=%.4g depth=%d relu=%d step=%d bound=%.4g measured=%.4g %s",
        rep.function,
        rep.epsilon,
        rep.depth,
        rep.relu,
        rep.step,
        rep.bound,
        rep.measured,
        "ok" if rep.passed else "FAIL",
    )
    for key, val in rep.extra.items():
        log.debug("  %s = %s", key, val)


# ---------------------------------------------------------------------------
# commands


def _resolve_seed(args, cfg: dict) -> int:
    if args.seed is not None:
        return args.seed
    if "seed" in cfg:
        return int(cfg["seed"])
    env = os.environ.get("DEEPAPPROX_SEED")
    if env:
        try:
            return int(env)
        except ValueError:
            raise ConfigError(f"DEEPAPPROX_SEED must be an integer, got {env!r}") from None
    return 0


def _out_dir(args, cfg: dict) -> Path:
    out = Path(args.out or cfg.get("out", "."))
    out.mkdir(parents=True, exist_ok=True)
    return out


def _points(args, cfg: dict) -> int | None:
    if args.grid is not None:
        if args.grid <= 0:
            raise ConfigError("--grid needs a positive point count")
        return args.grid
    return int(cfg["grid"]) if "grid" in cfg else None


def cmd_build(args) -> int:
    cfg = load_config(args.config)
    spec = validate_target(cfg.get("target"))
    if "eps" not in cfg:
        raise ConfigError("config needs 'eps'")
    eps_list = parse_eps_list(cfg["eps"])
    if len(eps_list) != 1:
        raise ConfigError("build takes a single eps; use sweep for a list")
    eps = eps_list[0]
    if not 0 < eps < 1:
        raise ConfigError(f"eps out of range: expected 0 < eps < 1, got {eps}")
    seed = _resolve_seed(args, cfg)
    out = _out_dir(args, cfg)
    net, rep = run_builder(spec, eps, _points(args, cfg), seed)
    rep.seed = seed
    _log_report(rep)
    name = cfg.get("name", spec["kind"])
    (out / f"{name}.net.json").write_text(serialize(net))
    write_csv(out / f"{name}.report.csv", CSV_COLUMNS, [rep.row()])
    return 0 if rep.passed else 1


def cmd_sweep(args) -> int:
    cfg = load_config(args.config)
    spec = validate_target(cfg.get("target"))
    eps_list = parse_eps_list(cfg.get("eps", []))
    if not eps_list:
        raise ConfigError("sweep needs a nonempty eps list")
    for eps in eps_list:
        if not 0 < eps < 1:
            raise ConfigError(f"eps out of range: expected 0 < eps < 1, got {eps}")
    seed = _resolve_seed(args, cfg)
    out = _out_dir(args, cfg)
    points = _points(args, cfg)
    reports = []
    for eps in eps_list:
        _, rep = run_builder(spec, eps, points, seed)
        rep.seed = seed
        _log_report(rep)
        reports.append(rep)
    name = cfg.get("name", spec["kind"])
    write_csv(out / f"{name}.sweep.csv", CSV_COLUMNS, [r.row() for r in reports])
    floor = 1e-300
    series = {
        "measured": [(r.total, math.log2(max(r.measured, floor))) for r in reports],
        "bound": [(r.total, math.log2(max(r.bound, floor))) for r in reports],
    }
    (out / f"{name}.sweep.svg").write_text(svg_plot(series, "total size", "log2 error"))
    return 0 if all(r.passed for r in reports) else 1


def cmd_gap(args) -> int:
    cfg = load_config(args.config)
    target = _target_from(cfg.get("target", "square"))
    eps_list = parse_eps_list(cfg["eps"]) if "eps" in cfg else list(DEFAULT_GAP_EPS)
    if not eps_list:
        raise ConfigError("gap needs a nonempty eps list")
    rho = float(cfg.get("rho", 2.0))
    resolution = int(args.resolution or cfg.get("resolution", 20))
    seed = _resolve_seed(args, cfg)
    out = _out_dir(args, cfg)
    res = analysis.gap_experiment(target, eps_list, rho=rho, resolution=resolution)
    rows = []
    for r, v in zip(res.rows, res.per_row):
        row = r.deep_report.row()
        row["seed"] = seed
        row.update(ns=r.ns, nd=r.nd, ls=r.ls, ld=r.ld, vacuous=r.vacuous)
        row.update({f"verdict_{k}": v[k] for k in "abcd"})
        rows.append(row)
        _log_report(r.deep_report)
        _log_report(r.shallow_report)
    name = cfg.get("name", target.name)
    write_csv(out / f"{name}.gap.csv", GAP_COLUMNS, rows)
    series = {
        "shallow N_s": [(math.log2(1 / r.epsilon), r.ns) for r in res.rows],
        "deep N_d": [(math.log2(1 / r.epsilon), r.nd) for r in res.rows],
    }
    (out / f"{name}.gap.svg").write_text(svg_plot(series, "log2(1/eps)", "size"))
    log.info("verdicts %s (c=%.4g)", res.verdicts, res.c)
    builds_ok = all(r.deep_report.passed and r.shallow_report.passed for r in res.rows)
    return 0 if res.passed and builds_ok else 1


def _read_net(path: str):
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read network file {path}: {exc}") from exc
    return deserialize(text)


def cmd_eval(args) -> int:
    net = _read_net(args.net)
    seed = args.seed if args.seed is not None else int(os.environ.get("DEEPAPPROX_SEED", 0) or 0)
    M = args.grid or 101
    if M <= 0:
        raise ConfigError("--grid needs a positive point count")
    grid = GridSpec("uniform", M) if net.input_dim == 1 else GridSpec("random", M, dim=net.input_dim, seed=seed)
    pts = grid.points()
    vals = eval_batch(net, pts)
    columns = [f"x{k}" for k in range(net.input_dim)] + ["value"]
    target = _target_from(args.target) if args.target else None
    if target is not None:
        ref = target.evaluate(pts)
        columns += ["target", "error"]
    rows = []
    for i, p in enumerate(pts):
        row = {f"x{k}": float(c) for k, c in enumerate(p)}
        row["value"] = float(vals[i])
        if target is not None:
            row["target"] = float(ref[i])
            row["error"] = float(abs(vals[i] - ref[i]))
        rows.append(row)
    out = _out_dir(args, {})
    write_csv(out / f"{Path(args.net).name.split('.')[0]}.eval.csv", columns, rows)
    if target is not None:
        print(f"sup_error={float(np.max(np.abs(vals - ref)))!r}")
    return 0


def cmd_breakpoints(args) -> int:
    net = _read_net(args.net)
    scan = analysis.count_breakpoints_1d(net, args.resolution or 20)
    out = _out_dir(args, {})
    rows = [{"location": loc, "kind": k} for loc, k in zip(scan.locations, scan.kinds)]
    write_csv(out / f"{Path(args.net).name.split('.')[0]}.breakpoints.csv", ["location", "kind"], rows)
    print(f"breakpoints={len(scan)}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="deepapprox", description=__doc__.splitlines()[0])
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="YAML experiment config")
    common.add_argument("--out", help="output directory")
    common.add_argument("--seed", type=int, help="seed for random grids (falls back to DEEPAPPROX_SEED)")
    common.add_argument("--grid", type=int, help="number of verification points")
    common.add_argument("--resolution", type=int, help="break-point scan uses 2^m intervals")
    common.add_argument("--verbose", "-v", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("build", parents=[common], help="build one network").set_defaults(func=cmd_build)
    sub.add_parser("sweep", parents=[common], help="build for a list of eps").set_defaults(func=cmd_sweep)
    sub.add_parser("gap", parents=[common], help="deep versus shallow sizes").set_defaults(func=cmd_gap)
    ev = sub.add_parser("eval", parents=[common], help="evaluate a saved network")
    ev.add_argument("net")
    ev.add_argument("--target", help="registered target to compare against")
    ev.set_defaults(func=cmd_eval)
    bp = sub.add_parser("breakpoints", parents=[common], help="list break points of a 1-D network")
    bp.add_argument("net")
    bp.set_defaults(func=cmd_breakpoints)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (ConfigError, NetworkFormatError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
