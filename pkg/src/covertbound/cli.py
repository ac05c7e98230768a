"""Command-line front end: ``covertbound <command> [flags]``.

Every command maps to one planner or simulator call and writes a CSV or JSON
table. Exit codes: 0 success, 1 numerical or I/O failure, 2 usage or
validation error.
"""
from __future__ import annotations

import argparse
import io
import json
import logging
import math
import sys
from dataclasses import dataclass
from typing import Any, Optional, Sequence

import numpy as np

from . import focksim, planner
from .model import ChannelParams, PolicyParams

log = logging.getLogger("covertbound")

COMMANDS = (
    "bound", "naive-compare", "cliff", "tax", "map", "sweep-n", "sweep-u",
    "asym-compare", "chi2-converge", "worked-examples",
)

# nominal operating point used throughout the reference evaluation
DEFAULTS: dict[str, Any] = {
    "eta0": 0.9,
    "nb0": 0.12,
    "delta": 0.05,
    "n": 100_000_000,
    "u": None,
    "asym": None,
    "box": None,
    "grid": "61x61",
    "eta_range": "0.75:0.99",
    "nb_range": "0.01:0.30",
    "map_u": 0.05,
    "u_range": "0:0.12:121",
    "u_levels": "0,0.01,0.05",
    "n_range": "1e6:1e10:41",
    "cutoffs": "3..10",
    "format": "csv",
    "out": None,
}

MAP_WARN_CELLS = 10_000
MAP_MAX_CELLS = 1_000_000


class UsageError(ValueError):
    pass


@dataclass(frozen=True)
class ScenarioPreset:
    name: str
    box: planner.UncertaintyBox
    n: int
    delta: float


PRESETS = (
    ScenarioPreset("nighttime_fso", planner.UncertaintyBox(0.90, 0.98, 0.02, 0.12), 100_000_000, 0.05),
    ScenarioPreset("short_fiber", planner.UncertaintyBox(0.80, 0.90, 0.001, 0.02), 100_000_000, 0.05),
)


# ---------------------------------------------------------------- parsing

def _floats(text: str, count: Optional[int] = None, sep: str = ",") -> list[float]:
    try:
        vals = [float(x) for x in str(text).split(sep)]
    except ValueError:
        raise UsageError(f"cannot parse numbers from {text!r}") from None
    if count is not None and len(vals) != count:
        raise UsageError(f"expected {count} values in {text!r}, got {len(vals)}")
    return vals


def parse_range(text: str) -> tuple[float, float]:
    lo, hi = _floats(text, 2, ":")
    if not lo <= hi:
        raise UsageError(f"range {text!r} must have lo <= hi")
    return lo, hi


def parse_points(text: str) -> np.ndarray:
    """``lo:hi:count`` as evenly spaced points (``lo:hi`` means 2 points)."""
    parts = str(text).split(":")
    if len(parts) not in (2, 3):
        raise UsageError(f"expected lo:hi[:count], got {text!r}")
    lo, hi = _floats(":".join(parts[:2]), 2, ":")
    count = int(float(parts[2])) if len(parts) == 3 else 2
    if count < 1:
        raise UsageError("point count must be positive")
    return np.linspace(lo, hi, count)


def parse_grid(text: str) -> tuple[int, int]:
    parts = str(text).lower().split("x")
    try:
        dims = tuple(int(p) for p in parts)
    except ValueError:
        raise UsageError(f"grid must look like NxM, got {text!r}") from None
    if len(dims) == 1:
        dims = dims * 2
    if len(dims) != 2 or min(dims) < 2:
        raise UsageError(f"grid must be NxM with N, M >= 2, got {text!r}")
    return dims


def parse_cutoffs(text: str) -> list[int]:
    text = str(text)
    try:
        if ".." in text:
            lo, hi = text.split("..")
            return list(range(int(lo), int(hi) + 1))
        return [int(x) for x in text.split(",")]
    except ValueError:
        raise UsageError(f"cutoffs must look like 3..10 or 3,5,7, got {text!r}") from None


def load_config(path: str) -> dict[str, str]:
    """Flat ``key = value`` file; ``#`` starts a comment. Keys use underscores or dashes."""
    cfg: dict[str, str] = {}
    try:
        with open(path, encoding="utf-8") as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise UsageError(f"cannot read config file: {exc}") from None
    for lineno, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected key=value")
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in DEFAULTS:
            raise UsageError(f"{path}:{lineno}: unknown key {key!r}")
        cfg[key] = value
    return cfg


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="covertbound",
        description="Robust covert quantum communication planner and Fock-space validator.",
    )
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--eta0", type=float, help="nominal transmittance")
    p.add_argument("--nb0", type=float, help="nominal mean thermal photon number")
    box = p.add_mutually_exclusive_group()
    box.add_argument("--u", type=float, help="symmetric relative uncertainty level")
    box.add_argument("--asym", help="asymmetric margins a,b,c,d")
    box.add_argument("--box", help="explicit box eta_min,eta_max,nb_min,nb_max")
    p.add_argument("--n", type=float, help="channel uses per frame")
    p.add_argument("--delta", type=float, help="covertness parameter")
    p.add_argument("--grid", help="design-map resolution NxM")
    p.add_argument("--eta-range", dest="eta_range", help="design-map eta0 axis lo:hi")
    p.add_argument("--nb-range", dest="nb_range", help="design-map nb0 axis lo:hi")
    p.add_argument("--map-u", dest="map_u", type=float, help="uncertainty level used for the map payload")
    p.add_argument("--u-range", dest="u_range", help="uncertainty sweep lo:hi:count")
    p.add_argument("--u-levels", dest="u_levels", help="comma-separated u levels for sweep-n")
    p.add_argument("--n-range", dest="n_range", help="log-spaced n sweep lo:hi:count")
    p.add_argument("--cutoffs", help="Fock cutoffs, e.g. 3..10 or 3,5,7")
    p.add_argument("--out", help="output path (default: stdout)")
    p.add_argument("--format", choices=("csv", "json"))
    p.add_argument("--config", help="flat key=value config file")
    return p


def resolve(args: argparse.Namespace) -> dict[str, Any]:
    """Merge defaults < config file < command-line flags."""
    opts = dict(DEFAULTS)
    if args.config:
        cfg = load_config(args.config)
        if sum(k in cfg for k in ("u", "asym", "box")) > 1:
            raise UsageError("config file gives more than one box specification")
        opts.update(cfg)
    if any(getattr(args, k) is not None for k in ("u", "asym", "box")):
        opts.update(u=None, asym=None, box=None)
    for key in DEFAULTS:
        val = getattr(args, key, None)
        if val is not None:
            opts[key] = val
    opts["command"] = args.command
    opts["eta0"] = float(opts["eta0"])
    opts["nb0"] = float(opts["nb0"])
    opts["delta"] = float(opts["delta"])
    n = float(opts["n"])
    if n != int(n):
        raise UsageError(f"n must be an integer, got {opts['n']!r}")
    opts["n"] = int(n)
    if opts["format"] not in ("csv", "json"):
        raise UsageError(f"unknown format {opts['format']!r}")
    return opts


def box_from_opts(opts: dict[str, Any], default_u: float | None = 0.05) -> planner.UncertaintyBox:
    eta0, nb0 = opts["eta0"], opts["nb0"]
    if opts["asym"] is not None:
        return planner.make_box_asymmetric(eta0, nb0, *_floats(opts["asym"], 4))
    if opts["box"] is not None:
        return planner.UncertaintyBox(*_floats(opts["box"], 4))
    u = opts["u"] if opts["u"] is not None else default_u
    return planner.make_box_symmetric(eta0, nb0, float(u))


# ---------------------------------------------------------------- output

def fmt(x: Any) -> str:
    if isinstance(x, bool):
        return str(int(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, str):
        return x
    if x is None or (isinstance(x, float) and math.isnan(x)):
        return "nan"
    return format(float(x), ".9g")


def _json_value(x: Any) -> Any:
    if isinstance(x, bool):
        return x
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, str) or x is None:
        return x
    if isinstance(x, (list, tuple)):
        return [_json_value(v) for v in x]
    if isinstance(x, dict):
        return {str(k): _json_value(v) for k, v in x.items()}
    x = float(x)
    if not math.isfinite(x):
        return None
    return float(format(x, ".9g"))


def emit_table(table: planner.Table, fmt_name: str, params: dict[str, Any] | None = None) -> str:
    """Render ``table`` as CSV (header + rows, LF endings) or a JSON document."""
    if fmt_name == "csv":
        buf = io.StringIO()
        buf.write(",".join(table.columns) + "\n")
        for row in table.rows:
            if len(row) != len(table.columns):
                raise ValueError("row length does not match schema")
            buf.write(",".join(fmt(v) for v in row) + "\n")
        return buf.getvalue()
    if fmt_name == "json":
        doc = {
            "schema": list(table.columns),
            "params": _json_value({**(params or {}), **table.meta}),
            "rows": [[_json_value(v) for v in row] for row in table.rows],
        }
        return json.dumps(doc, indent=2, sort_keys=False) + "\n"
    raise ValueError(f"unknown format {fmt_name!r}")


# ---------------------------------------------------------------- commands

def _nominal(opts) -> ChannelParams:
    return ChannelParams(opts["eta0"], opts["nb0"])


def _policy(opts) -> PolicyParams:
    return PolicyParams(opts["n"], opts["delta"])


def cmd_bound(opts) -> planner.Table:
    box = box_from_opts(opts)
    plan = planner.robust_plan(box, _policy(opts))
    return planner.Table(
        ("eta_min", "eta_max", "nb_min", "nb_max", "c_cov_rob", "p_worst", "r_worst", "q_rob", "m_rob"),
        [(box.eta_min, box.eta_max, box.nb_min, box.nb_max,
          plan.c_cov_rob, plan.p_worst, plan.r_rob, plan.q_rob, plan.m_rob)],
        {"provenance": box.provenance.kind, "margins": list(box.provenance.margins)},
    )


def cmd_naive_compare(opts) -> planner.Table:
    box = box_from_opts(opts)
    policy = _policy(opts)
    nominal = _nominal(opts)
    naive = planner.naive_plan(nominal, policy)
    verdict = planner.naive_feasibility(box, nominal, policy)
    robust = planner.robust_plan(box, policy)
    return planner.Table(
        ("q_nom", "r_nom", "naive_scheduled", "naive_guaranteed", "feasible",
         "covertness_violated", "reliability_violated", "robust_guaranteed"),
        [(naive.q_nom, naive.r_nom, naive.scheduled_payload, verdict.guaranteed_payload,
          int(verdict.feasible), int(verdict.covertness_witness is not None),
          int(verdict.reliability_witness is not None), robust.m_rob)],
    )


def cmd_cliff(opts) -> planner.Table:
    res = planner.cliff(_nominal(opts))
    return planner.Table(("p_crit", "u_crit"), [(res.p_crit, res.u_crit)])


def _u_values(opts) -> np.ndarray:
    if opts["u"] is not None:
        return np.array([float(opts["u"])])
    return parse_points(opts["u_range"])


def cmd_tax(opts) -> planner.Table:
    return planner.sweep_security_tax(_nominal(opts), _u_values(opts), _policy(opts))


def cmd_map(opts) -> planner.Table:
    grid = parse_grid(opts["grid"])
    cells = grid[0] * grid[1]
    if cells > MAP_MAX_CELLS:
        raise UsageError(f"grid has {cells} cells; the limit is {MAP_MAX_CELLS}")
    if cells > MAP_WARN_CELLS:
        log.warning("design map with %d cells may take a while", cells)
    return planner.design_map(parse_range(opts["eta_range"]), parse_range(opts["nb_range"]),
                              grid, float(opts["map_u"]), _policy(opts))


def cmd_sweep_n(opts) -> planner.Table:
    pts = parse_points(opts["n_range"])
    n_values = [int(round(v)) for v in np.logspace(math.log10(pts[0]), math.log10(pts[-1]), len(pts))]
    return planner.sweep_payload_vs_n(_nominal(opts), _floats(opts["u_levels"]), n_values, opts["delta"])


def cmd_sweep_u(opts) -> planner.Table:
    return planner.sweep_payload_vs_u(_nominal(opts), _u_values(opts), _policy(opts))


def cmd_asym_compare(opts) -> planner.Table:
    margins = _floats(opts["asym"], 4) if opts["asym"] is not None else [0.02, 0.08, 0.01, 0.12]
    res = planner.compare_sym_asym(_nominal(opts), tuple(margins), parse_points(opts["u_range"]), _policy(opts))
    log.info("equivalent symmetric margin: %s", fmt(res.crossing_u))
    return res.table


def cmd_chi2_converge(opts) -> planner.Table:
    rows = focksim.convergence_sweep(opts["eta0"], opts["nb0"], parse_cutoffs(opts["cutoffs"]))
    return planner.Table(
        ("cutoff", "chi2_sim", "abs_err", "rel_err_pct"),
        [(r.cutoff, r.chi2_sim, r.abs_err, r.rel_err_pct) for r in rows],
        {"analytic": focksim.analytic_chi2_coefficient(opts["eta0"], opts["nb0"])},
    )


def cmd_worked_examples(opts) -> planner.Table:
    table = planner.Table(("scenario", "c_cov_rob", "p_worst", "r_worst", "m_rob"))
    for preset in PRESETS:
        plan = planner.robust_plan(preset.box, PolicyParams(preset.n, preset.delta))
        table.rows.append((preset.name, plan.c_cov_rob, plan.p_worst, plan.r_rob, plan.m_rob))
    return table


HANDLERS = {
    "bound": cmd_bound,
    "naive-compare": cmd_naive_compare,
    "cliff": cmd_cliff,
    "tax": cmd_tax,
    "map": cmd_map,
    "sweep-n": cmd_sweep_n,
    "sweep-u": cmd_sweep_u,
    "asym-compare": cmd_asym_compare,
    "chi2-converge": cmd_chi2_converge,
    "worked-examples": cmd_worked_examples,
}


def run(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        opts = resolve(args)
        table = HANDLERS[opts["command"]](opts)
        params = {k: opts[k] for k in ("command", "eta0", "nb0", "n", "delta", "u", "asym", "box")}
        text = emit_table(table, opts["format"], params)
    except (UsageError, ValueError) as exc:
        # QOutOfRange and constructor domain errors are both ValueErrors
        print(f"covertbound: error: {exc}", file=sys.stderr)
        parser.print_usage(sys.stderr)
        return 2
    except (ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"covertbound: numerical failure: {exc}", file=sys.stderr)
        return 1
    try:
        if opts["out"]:
            with open(opts["out"], "w", encoding="utf-8", newline="\n") as fh:
                fh.write(text)
        else:
            sys.stdout.write(text)
    except OSError as exc:
        print(f"covertbound: cannot write output: {exc}", file=sys.stderr)
        return 1
    return 0


def main() -> None:
    logging.basicConfig(level=logging.INFO, format="%(name)s: %(message)s", stream=sys.stderr)
    sys.exit(run())


if __name__ == "__main__":
    main()
