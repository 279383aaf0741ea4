"""Command-line front end.

Every subcommand loads a scenario (packaged defaults, then ``--config``,
then ``--set`` overrides), writes one or more data tables plus
``manifest.json`` into ``--out`` and exits with 0 on success, 2 on a
configuration error and 3 on a runtime error.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
import time
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Any, Iterable, Mapping, Sequence

import numpy as np

from . import __version__
from .analysis import (AnalysisParams, capacity_imperfect, capacity_perfect, cell_averaged_outage,
                       outage_at, sir_from_distances, worst_case_distances, worst_case_sir_formula)
from .channel import linear_to_db
from .engine import (SWEEP_AXES, TRAFFIC_COLUMNS, SimReport, capacity_comparison, density_tradeoff,
                     estimate_femto_outage, estimate_macro_outage, sweep, traffic_snapshots)
from .geometry import build_layout, reuse_ratio
from .scenario import (ConfigError, Scenario, _default_dict, apply_overrides, load_scenario_file,
                       parse_override, scenario_from_dict)

__all__ = ["RunManifest", "SUBCOMMANDS", "load_scenario", "run", "main"]

SUBCOMMANDS = ("analyze-outage", "analyze-capacity", "worst-case-sir", "simulate", "sweep",
               "traffic", "density")

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 2, 3


@dataclass
class RunManifest:
    scenario_path: str | None
    config_hash: str
    master_seed: int
    version: str
    subcommand: str
    outputs: list = field(default_factory=list)
    wall_time_s: float = 0.0
    config: dict = field(default_factory=dict)
    options: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)


def load_scenario(path: str | Path | None = None, overrides: Sequence[str] | Mapping = ()) -> Scenario:
    """Packaged defaults, then the file at ``path``, then ``overrides``."""
    scenario = scenario_from_dict(load_scenario_file(path), base=_default_dict())
    return apply_overrides(scenario, overrides) if overrides else scenario


# output helpers -----------------------------------------------------------------

def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".15g")
    if isinstance(v, np.integer):
        return str(int(v))
    return str(v)


def _plain(v):
    if isinstance(v, np.bool_):
        return bool(v)
    if isinstance(v, np.integer):
        return int(v)
    if isinstance(v, np.floating):
        return float(v)
    return v


def write_table(path: Path, columns: Sequence[str], rows: Iterable[Sequence], fmt: str = "csv") -> Path:
    """CSV with fixed columns and 15-digit floats, or a JSON list of records."""
    path = path.with_suffix("." + fmt)
    rows = list(rows)
    if fmt == "csv":
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(columns)
            for r in rows:
                w.writerow([_cell(v) for v in r])
    elif fmt == "json":
        records = [{c: _plain(v) for c, v in zip(columns, r)} for r in rows]
        path.write_text(json.dumps(records, indent=1, allow_nan=True) + "\n")
    else:
        raise ValueError(f"unknown format {fmt!r}")
    return path


# subcommands --------------------------------------------------------------------

def _outage_tables(sc: Scenario, opts: dict):
    base = AnalysisParams(threshold_sir_db=opts.get("threshold_db", 18.0),
                          sigma_total_db=sc.channel.shadow_sigma_db)
    top = base.cell_radius / base.reference_distance
    grid = np.linspace(1.0, top, int(opts.get("points", 50)))
    curve, cell = [], []
    for k in opts.get("exponents", (4.0, 5.0)):
        p = AnalysisParams(threshold_sir_db=base.threshold_sir_db, pathloss_exponent=float(k),
                           sigma_total_db=base.sigma_total_db)
        curve += [(float(k), r, o) for r, o in zip(grid, outage_at(grid, p))]
        cell.append((float(k), cell_averaged_outage(p)))
    return [("outage_curve", ("pathloss_exponent", "distance_ratio", "outage"), curve),
            ("outage_cell_average", ("pathloss_exponent", "outage"), cell)]


def _capacity_tables(sc: Scenario, opts: dict):
    p0 = sc.capacity_macro
    ebio = [float(e) for e in opts.get("ebio", range(1, 11))]
    rows = []
    for cd in (1.0, 2.0, 3.0):
        for e in ebio:
            p = replace(p0, pce_cd_db=cd, source_activity_sf=0.05, ebio_db=e)
            rows.append(("imperfect", cd, 0.05, e, capacity_imperfect(p)))
    for sf in (0.01, 0.02, 0.05):
        for e in ebio:
            p = replace(p0, pce_cd_db=1.0, source_activity_sf=sf, ebio_db=e)
            rows.append(("imperfect", 1.0, sf, e, capacity_imperfect(p)))
    for e in ebio:
        rows.append(("perfect", 0.0, 1.0, e, capacity_perfect(replace(p0, ebio_db=e))))
    comp = capacity_comparison(sc, ebio)
    cols = ("tier", "ebio_db", "imperfect", "perfect", "perfect_single", "improvement")
    return [("capacity_curves", ("curve", "cd_db", "source_activity", "ebio_db", "channels"), rows),
            ("capacity_comparison", cols, [tuple(r[c] for c in cols) for r in comp])]


def _worst_case_tables(sc: Scenario, opts: dict):
    rows = []
    q_cluster = reuse_ratio(sc.layout.cluster_size)
    for label, q in (("formula_cluster", q_cluster), ("formula_q4.6", 4.6)):
        s = worst_case_sir_formula(q)
        rows.append((label, q, s, linear_to_db(s)))
    for label, q in (("distances_q4.6", 4.6), ("distances_cluster", q_cluster)):
        s = sir_from_distances(1.0, worst_case_distances(q), sc.channel.pathloss_exponent)
        rows.append((label, q, s, linear_to_db(s)))
    return [("worst_case_sir", ("case", "reuse_ratio", "sir_linear", "sir_db"), rows)]


def _simulate_tables(sc: Scenario, opts: dict):
    rows = []
    label = {1: "omni", 3: "120", 4: "90"}[sc.sectors.n_sectors] + ("+cpc" if sc.outage.cpc else "")
    for tier, fn in (("macro", estimate_macro_outage), ("femto", estimate_femto_outage)):
        e = fn(sc)
        rows.append((tier, label, e.p_hat, e.stderr, e.outages, e.trials, e.seed))
    layout = build_layout(sc.layout, sc.master_seed)
    femtos = [(j, p.x, p.y) for j, p in enumerate(layout.femto_sites)]
    return [("outage", ("tier", "variant", "p_hat", "stderr", "outages", "trials", "seed"), rows),
            ("layout", ("femto", "x", "y"), femtos)]


def _sweep_tables(sc: Scenario, opts: dict):
    axis = opts.get("axis") or "femto_count"
    defaults = {"femto_count": [1, 4, 8, 12, 16, 20, 24], "macro_interferers": [0, 10, 25, 50],
                "sector_mode": ["omni", "120", "90"], "cpc_on_off": ["off", "on"]}
    values = opts.get("values") or defaults[axis]
    if axis in ("femto_count", "macro_interferers"):
        values = [int(v) for v in values]
    report: SimReport = sweep(sc, axis, values, opts.get("tier"))
    return [("sweep", SimReport.OUTAGE_COLUMNS, report.outage_rows())]


def _traffic_tables(sc: Scenario, opts: dict):
    return [("traffic", TRAFFIC_COLUMNS, traffic_snapshots(sc))]


def _density_tables(sc: Scenario, opts: dict):
    dens = [float(d) for d in (opts.get("values") or (0.0, 0.25, 0.5, 1.0, 2.0))]
    pts = density_tradeoff(sc, dens, int(opts.get("max_macro_users", 60)))
    cols = ("femto_density", "admissible_macro_users", "status", "macro_outage", "femto_outage")
    return [("density", cols, [tuple(getattr(p, c) for c in cols) for p in pts])]


_HANDLERS = {
    "analyze-outage": _outage_tables,
    "analyze-capacity": _capacity_tables,
    "worst-case-sir": _worst_case_tables,
    "simulate": _simulate_tables,
    "sweep": _sweep_tables,
    "traffic": _traffic_tables,
    "density": _density_tables,
}


def run(subcommand: str, scenario: Scenario, out_dir: str | Path, *, fmt: str = "csv",
        options: Mapping[str, Any] | None = None, scenario_path: str | None = None) -> RunManifest:
    """Run one subcommand and write its tables plus ``manifest.json``.

    Data files depend only on the scenario, the options and the seed; the
    wall time lives in the manifest alone.
    """
    if subcommand not in _HANDLERS:
        raise ValueError(f"unknown subcommand {subcommand!r}; choose from {SUBCOMMANDS}")
    opts = dict(options or {})
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    started = time.perf_counter()
    tables = _HANDLERS[subcommand](scenario, opts)
    outputs = [str(write_table(out / name, cols, rows, fmt)) for name, cols, rows in tables]
    manifest = RunManifest(
        scenario_path=scenario_path,
        config_hash=scenario.fingerprint(),
        master_seed=scenario.master_seed,
        version=__version__,
        subcommand=subcommand,
        outputs=outputs,
        wall_time_s=time.perf_counter() - started,
        config=scenario.to_dict(),
        options={k: _plain(v) for k, v in opts.items()},
    )
    mpath = out / "manifest.json"
    mpath.write_text(json.dumps(manifest.to_dict(), indent=1, allow_nan=True) + "\n")
    manifest.outputs.append(str(mpath))
    return manifest


# argument parsing -----------------------------------------------------------------

def _values(text: str) -> list:
    out = []
    for item in text.split(","):
        item = item.strip()
        if not item:
            continue
        try:
            out.append(json.loads(item))
        except json.JSONDecodeError:
            out.append(item)
    return out


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="scenario JSON layered over the defaults")
    common.add_argument("--set", metavar="KEY=VALUE", action="append", default=[], dest="overrides",
                        help="override one parameter (repeatable), e.g. outage.gamma_macro_db=10")
    common.add_argument("--seed", type=int, help="master seed")
    common.add_argument("--trials", type=int, help="Monte Carlo trials per estimate")
    common.add_argument("--workers", type=int, help="worker processes for trial evaluation")
    common.add_argument("--out", metavar="DIR", default="results", help="output directory")
    common.add_argument("--format", choices=("csv", "json"), default="csv", dest="fmt")

    parser = argparse.ArgumentParser(prog="femtosim",
                                     description="Two-tier femtocell/macrocell outage and capacity tools")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("analyze-outage", parents=[common], help="distance outage curves and cell averages")
    sub.add_parser("analyze-capacity", parents=[common], help="CDMA capacity curves")
    sub.add_parser("worst-case-sir", parents=[common], help="co-channel worst-case S/I table")
    sub.add_parser("simulate", parents=[common], help="macro and femto outage for one scenario")
    sp = sub.add_parser("sweep", parents=[common], help="outage sweep over one axis")
    sp.add_argument("--axis", choices=SWEEP_AXES, default="femto_count")
    sp.add_argument("--values", type=_values, help="comma separated axis values")
    sp.add_argument("--tier", choices=("macro", "femto"))
    sub.add_parser("traffic", parents=[common], help="traffic and spectrum sharing rounds")
    dp = sub.add_parser("density", parents=[common], help="admissible macro users per femto density")
    dp.add_argument("--values", type=_values, help="comma separated femto user densities")
    dp.add_argument("--max-macro-users", type=int, default=60)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    overrides = [parse_override(o) for o in args.overrides] if args.overrides else []
    try:
        for key, flag in (("run.master_seed", args.seed), ("run.trials", args.trials),
                          ("run.workers", args.workers)):
            if flag is not None:
                overrides.append((key, flag))
        scenario = load_scenario(args.config, overrides)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    opts = {k: getattr(args, k) for k in ("axis", "values", "tier", "max_macro_users")
            if getattr(args, k, None) is not None}
    try:
        manifest = run(args.command, scenario, args.out, fmt=args.fmt, options=opts,
                       scenario_path=args.config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ValueError, ArithmeticError, OSError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    for path in manifest.outputs:
        print(path)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
