"""Monte Carlo estimation of macro and femto outage.

Macro outage is evaluated on the downlink of a macro user dropped
uniformly in the cell: the wanted macro signal competes with in-cell
channels (Poisson count), out-of-cell macro interference (Gaussian) and the
downlink of every active femto BS. Femto outage is evaluated on the uplink
of a femto BS: its power-controlled user competes with other users of the
same femtocell (Poisson count), macro users transmitting to the macro BS,
and users of the other femtocells.

Determinism contract: trial ``i`` of stream ``s`` consumes one vector of
standard normals from ``SeedSequence(master_seed, spawn_key=(s, i))``.
Trial outcomes are reduced by summing indicator counts, so results are
bitwise identical for any chunking or number of worker processes. Every
draw that grows with the femto count or the macro-interferer count sits
at the tail of the trial vector, which makes those sweeps use common
random numbers.
"""

from __future__ import annotations

import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from functools import partial
from typing import Callable, List, Sequence

import numpy as np
from scipy import special, stats

from . import __version__
from .analysis import capacity_imperfect, capacity_perfect
from .antenna import SectorConfig, interference_reduction_factor
from .channel import db_to_linear, dbm_to_mw, path_gain, path_loss_db
from .geometry import build_layout
from .power import LinkBudgetInputs, cpc_run, femto_downlink_power
from .scenario import Scenario
from .spectrum import (SpectrumPlan, allocate_spectrum, generate_femto_traffic, generate_macro_load,
                       utilization)

__all__ = [
    "OutageEstimate",
    "SweepPoint",
    "SimReport",
    "Variant",
    "DensityPoint",
    "trial_normals",
    "monte_carlo_counts",
    "macro_outage_indicator",
    "estimate_macro_outage",
    "estimate_femto_outage",
    "sweep",
    "capacity_comparison",
    "density_tradeoff",
    "traffic_snapshots",
    "SWEEP_AXES",
]

STREAM_MACRO = 1
STREAM_FEMTO = 2
STREAM_TRAFFIC = 3
CHUNK = 2048

SWEEP_AXES = ("femto_count", "macro_interferers", "sector_mode", "cpc_on_off")


@dataclass(frozen=True)
class OutageEstimate:
    p_hat: float
    stderr: float
    trials: int
    fingerprint: str
    seed: int
    outages: int = 0

    @classmethod
    def from_counts(cls, outages: int, trials: int, fingerprint: str, seed: int) -> "OutageEstimate":
        p = outages / trials
        return cls(p_hat=p, stderr=math.sqrt(p * (1.0 - p) / trials), trials=trials,
                   fingerprint=fingerprint, seed=seed, outages=int(outages))


@dataclass(frozen=True)
class Variant:
    """Antenna/CPC combination evaluated on shared random draws."""

    n_sectors: int = 1
    cpc: bool = False

    @property
    def label(self) -> str:
        sec = {1: "omni", 3: "120", 4: "90"}[self.n_sectors]
        return f"{sec}+cpc" if self.cpc else sec


ALL_VARIANTS = tuple(Variant(n, c) for c in (False, True) for n in (1, 3, 4))


# random streams ---------------------------------------------------------------

def trial_normals(master_seed: int, stream: int, trial: int, width: int) -> np.ndarray:
    """The standard normal vector owned by one trial."""
    ss = np.random.SeedSequence(master_seed, spawn_key=(stream, trial))
    return np.random.Generator(np.random.PCG64(ss)).standard_normal(width)


_CACHE: dict = {}
_CACHE_LIMIT = 8


def _normals(master_seed: int, stream: int, start: int, stop: int, width: int) -> np.ndarray:
    """Rows ``start:stop`` of the per-trial normal vectors, cached.

    A wider cached block serves narrower requests: the first ``w`` normals
    of a trial do not depend on how many are drawn after them.
    """
    key = (master_seed, stream, start, stop)
    hit = _CACHE.get(key)
    if hit is not None and hit.shape[1] >= width:
        return hit[:, :width]
    block = np.empty((stop - start, width))
    for row, i in enumerate(range(start, stop)):
        block[row] = trial_normals(master_seed, stream, i, width)
    block.setflags(write=False)
    if len(_CACHE) >= _CACHE_LIMIT:
        _CACHE.pop(next(iter(_CACHE)))
    _CACHE[key] = block
    return block


def _chunk_counts(kernel, width, master_seed, stream, bounds):
    start, stop = bounds
    z = _normals(master_seed, stream, start, stop, width)
    hits = np.asarray(kernel(z), dtype=bool)
    if hits.ndim == 1:
        hits = hits[:, None]
    return hits.sum(axis=0, dtype=np.int64)


def monte_carlo_counts(kernel: Callable[[np.ndarray], np.ndarray], width: int, trials: int,
                       master_seed: int, stream: int, workers: int = 1) -> np.ndarray:
    """Count outage indicators over ``trials`` seeded trials.

    ``kernel`` maps a ``(T, width)`` block of per-trial normals to a
    boolean ``(T,)`` or ``(T, V)`` array. Returns integer counts of shape
    ``(V,)``. With ``workers > 1`` the kernel must be picklable.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    bounds = [(s, min(s + CHUNK, trials)) for s in range(0, trials, CHUNK)]
    job = partial(_chunk_counts, kernel, width, master_seed, stream)
    if workers > 1 and len(bounds) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(job, bounds))
    else:
        parts = [job(b) for b in bounds]
    return np.sum(parts, axis=0)


def _uniform(z):
    return special.ndtr(z)


def _poisson(z, lam):
    if lam <= 0:
        return np.zeros(np.shape(z))
    # ndtr rounds to exactly 1.0 beyond z ~ 8.3, where the quantile is inf
    u = np.minimum(special.ndtr(z), np.nextafter(1.0, 0.0))
    return stats.poisson.ppf(u, lam)


def _disc(zr, zt, radius):
    r = radius * np.sqrt(_uniform(zr))
    theta = 2.0 * math.pi * _uniform(zt)
    return r * np.cos(theta), r * np.sin(theta)


# macro downlink ---------------------------------------------------------------

def macro_outage_indicator(signal, in_cell, out_cell, cross_tier, reduction, gamma_lin, gain):
    """``G S / (I_in + I_out + I_cross / reduction) <= gamma`` without dividing."""
    interference = in_cell + out_cell + cross_tier / reduction
    return gain * signal <= gamma_lin * interference


def femto_nominal_power_mw(sc: Scenario, sites: np.ndarray) -> np.ndarray:
    """Downlink power of each femto BS before CPC (mW)."""
    if len(sites) == 0:
        return np.zeros(0)
    d = np.maximum(np.hypot(sites[:, 0], sites[:, 1]), sc.channel.reference_distance)
    inputs = LinkBudgetInputs(
        p_macro_dbm=sc.outage.macro_tx_dbm,
        antenna_gain_db=sc.sectors.in_sector_gain_db,
        loss_macro_db=path_loss_db(d, sc.channel),
        loss_femto_db=path_loss_db(sc.layout.femto_radius, sc.channel),
    )
    return dbm_to_mw(np.atleast_1d(femto_downlink_power(inputs, sc.power)))


def _macro_kernel(z, *, sc: Scenario, sites: np.ndarray, p_nominal: np.ndarray,
                  variants: Sequence[Variant]):
    ch, om = sc.channel, sc.outage
    n = len(sites)
    ux, uy = _disc(z[:, 0], z[:, 1], sc.layout.macro_radius)
    shadow0 = ch.shadow_mean_db + ch.shadow_sigma_db * z[:, 2]
    signal = dbm_to_mw(om.macro_tx_dbm) * path_gain(np.hypot(ux, uy), ch) * db_to_linear(shadow0)
    in_cell = _poisson(z[:, 3], om.macro_users) * signal
    out_cell = np.maximum(dbm_to_mw(om.out_of_cell_mean_dbm) * (1.0 + om.out_of_cell_cv * z[:, 4]), 0.0)

    fz = z[:, 5:5 + 2 * n].reshape(len(z), n, 2)
    d = np.hypot(sites[None, :, 0] - ux[:, None], sites[None, :, 1] - uy[:, None])
    active = fz[:, :, 1] < special.ndtri(om.femto_activity) if om.femto_activity < 1 else np.ones_like(d, bool)
    coupling = active * path_gain(d, ch) * db_to_linear(ch.shadow_mean_db + ch.shadow_sigma_db * fz[:, :, 0])

    cross = {False: (coupling * p_nominal[None, :]).sum(axis=1)}
    if any(v.cpc for v in variants):
        p_cpc = cpc_run(np.broadcast_to(p_nominal, d.shape), d, om.cpc_rounds, sc.power)
        cross[True] = (coupling * p_cpc).sum(axis=1)

    gamma = db_to_linear(om.gamma_macro_db)
    cols = []
    for v in variants:
        red = interference_reduction_factor(replace(sc.sectors, n_sectors=v.n_sectors))
        cols.append(macro_outage_indicator(signal, in_cell, out_cell, cross[v.cpc], red, gamma,
                                           om.processing_gain))
    return np.column_stack(cols)


def _macro_counts(sc: Scenario, variants: Sequence[Variant]) -> np.ndarray:
    layout = build_layout(sc.layout, sc.master_seed)
    sites = layout.femto_array()
    kernel = partial(_macro_kernel, sc=sc, sites=sites, p_nominal=femto_nominal_power_mw(sc, sites),
                     variants=tuple(variants))
    width = 5 + 2 * len(sites)
    return monte_carlo_counts(kernel, width, sc.trials, sc.master_seed, STREAM_MACRO, sc.run.workers)


def _scenario_variant(sc: Scenario) -> Variant:
    return Variant(sc.sectors.n_sectors, sc.outage.cpc)


def estimate_macro_outage(scenario: Scenario) -> OutageEstimate:
    """Macro downlink outage probability for the scenario's antenna/CPC setting."""
    counts = _macro_counts(scenario, [_scenario_variant(scenario)])
    return OutageEstimate.from_counts(int(counts[0]), scenario.trials, scenario.fingerprint(),
                                      scenario.master_seed)


# femto uplink -----------------------------------------------------------------

def _femto_kernel(z, *, sc: Scenario, sites: np.ndarray, n_macro: int, variants: Sequence[Variant]):
    ch, om = sc.channel, sc.outage
    n = len(sites)
    t = len(z)
    p_f = om.femto_rx_power_mw
    p_c = p_f / om.power_ratio

    ref = np.minimum((_uniform(z[:, 0]) * n).astype(int), n - 1)
    others = np.minimum(_poisson(z[:, 1], om.femto_users), sc.traffic.max_users_per_femto - 1)
    in_cell = others * p_f
    fx, fy = sites[ref, 0], sites[ref, 1]

    # users of the other femtocells, each power controlled to p_f at its own BS
    fz = z[:, 2:2 + 4 * n].reshape(t, n, 4)
    ox, oy = _disc(fz[:, :, 0], fz[:, :, 1], sc.layout.femto_radius)
    r_own = np.hypot(ox, oy)
    ux, uy = sites[None, :, 0] + ox, sites[None, :, 1] + oy
    d_ref = np.hypot(ux - fx[:, None], uy - fy[:, None])
    active = fz[:, :, 3] < special.ndtri(om.femto_activity) if om.femto_activity < 1 else np.ones((t, n), bool)
    active &= np.arange(n)[None, :] != ref[:, None]
    shadow = db_to_linear(ch.shadow_mean_db + ch.shadow_sigma_db * fz[:, :, 2])
    femto_terms = active * p_f * path_gain(d_ref, ch) / path_gain(r_own, ch) * shadow

    # macro users, each power controlled to p_c at the macro BS
    mz = z[:, 2 + 4 * n:2 + 4 * n + 3 * n_macro].reshape(t, n_macro, 3)
    mx, my = _disc(mz[:, :, 0], mz[:, :, 1], sc.layout.macro_radius)
    d_mf = np.hypot(mx - fx[:, None], my - fy[:, None])
    m_shadow = db_to_linear(ch.shadow_mean_db + ch.shadow_sigma_db * mz[:, :, 2])
    cross = (p_c * path_gain(d_mf, ch) / path_gain(np.hypot(mx, my), ch) * m_shadow).sum(axis=1)

    intra = {False: femto_terms.sum(axis=1)}
    if any(v.cpc for v in variants):
        if n_macro:
            near = np.hypot(ux[:, :, None] - mx[:, None, :], uy[:, :, None] - my[:, None, :]).min(axis=2)
        else:
            near = np.full((t, n), np.inf)
        p_max = sc.power.p_max_mw
        scale = cpc_run(np.full((t, n), p_max), near, om.cpc_rounds, sc.power) / p_max
        intra[True] = (femto_terms * scale).sum(axis=1)

    gamma = db_to_linear(om.gamma_femto_db)
    cols = []
    for v in variants:
        red = interference_reduction_factor(replace(sc.sectors, n_sectors=v.n_sectors))
        interference = in_cell + cross / red + intra[v.cpc]
        cols.append(om.processing_gain * p_f <= gamma * interference)
    return np.column_stack(cols)


def _femto_counts(sc: Scenario, variants: Sequence[Variant]) -> np.ndarray:
    if sc.n_femto < 1:
        raise ValueError("femto outage needs at least one femto BS")
    sites = build_layout(sc.layout, sc.master_seed).femto_array()
    m = sc.outage.n_macro_interferers
    kernel = partial(_femto_kernel, sc=sc, sites=sites, n_macro=m, variants=tuple(variants))
    width = 2 + 4 * len(sites) + 3 * m
    return monte_carlo_counts(kernel, width, sc.trials, sc.master_seed, STREAM_FEMTO, sc.run.workers)


def estimate_femto_outage(scenario: Scenario) -> OutageEstimate:
    """Femto uplink outage probability for the scenario's antenna/CPC setting."""
    counts = _femto_counts(scenario, [_scenario_variant(scenario)])
    return OutageEstimate.from_counts(int(counts[0]), scenario.trials, scenario.fingerprint(),
                                      scenario.master_seed)


# reports ----------------------------------------------------------------------

@dataclass(frozen=True)
class SweepPoint:
    axis: str
    value: object
    tier: str
    variant: str
    estimate: OutageEstimate


@dataclass
class SimReport:
    points: List[SweepPoint] = field(default_factory=list)
    capacity: List[dict] = field(default_factory=list)
    density: List["DensityPoint"] = field(default_factory=list)
    traffic: List[tuple] = field(default_factory=list)
    metadata: dict = field(default_factory=dict)
    wall_time_s: float = 0.0

    def estimate(self, value=None, variant: str | None = None, tier: str | None = None) -> OutageEstimate:
        for p in self.points:
            if ((value is None or p.value == value) and (variant is None or p.variant == variant)
                    and (tier is None or p.tier == tier)):
                return p.estimate
        raise KeyError((value, variant, tier))

    def series(self, variant: str, tier: str | None = None) -> List[OutageEstimate]:
        return [p.estimate for p in self.points
                if p.variant == variant and (tier is None or p.tier == tier)]

    def outage_rows(self) -> List[tuple]:
        return [(p.axis, p.value, p.tier, p.variant, p.estimate.p_hat, p.estimate.stderr,
                 p.estimate.outages, p.estimate.trials, p.estimate.seed) for p in self.points]

    OUTAGE_COLUMNS = ("axis", "value", "tier", "variant", "p_hat", "stderr", "outages", "trials", "seed")

    def to_dict(self) -> dict:
        """JSON-ready content; wall time is left out so reruns compare equal."""
        return {
            "metadata": self.metadata,
            "outage": [dict(zip(self.OUTAGE_COLUMNS, r)) for r in self.outage_rows()],
            "capacity": self.capacity,
            "density": [asdict(d) for d in self.density],
            "traffic": [list(r) for r in self.traffic],
        }


def _metadata(sc: Scenario, **extra) -> dict:
    return {"seed": sc.master_seed, "trials": sc.trials, "version": __version__,
            "config_hash": sc.fingerprint(), **extra}


def _axis_scenarios(scenario: Scenario, axis: str, values) -> list:
    out = []
    for v in values:
        if axis == "femto_count":
            out.append(scenario.with_overrides({"layout.n_femto": int(v)}))
        elif axis == "macro_interferers":
            out.append(scenario.with_overrides({"outage.n_macro_interferers": int(v)}))
        else:
            out.append(scenario)
    return out


def _parse_cpc(value) -> bool:
    if isinstance(value, bool):
        return value
    key = str(value).strip().lower()
    if key in ("on", "true", "1", "cpc"):
        return True
    if key in ("off", "false", "0", "none"):
        return False
    raise ValueError(f"unknown CPC setting {value!r}; use on or off")


def sweep(scenario: Scenario, axis: str, values: Sequence, tier: str | None = None) -> SimReport:
    """One outage estimate per (value, antenna/CPC variant).

    ``femto_count`` and ``macro_interferers`` evaluate all six
    omni/120/90 x CPC off/on variants at every value. ``sector_mode`` and
    ``cpc_on_off`` vary one knob and keep the scenario's other setting.
    ``tier`` picks the outage metric; it defaults to ``femto`` for the
    macro-interferer axis and ``macro`` otherwise.
    """
    if axis not in SWEEP_AXES:
        raise ValueError(f"unknown sweep axis {axis!r}; choose from {SWEEP_AXES}")
    values = list(values)
    if not values:
        raise ValueError("sweep needs at least one value")
    tier = tier or ("femto" if axis == "macro_interferers" else "macro")
    if tier not in ("macro", "femto"):
        raise ValueError(f"unknown tier {tier!r}")
    counter = _macro_counts if tier == "macro" else _femto_counts

    started = time.perf_counter()
    report = SimReport(metadata=_metadata(scenario, axis=axis, tier=tier))
    if axis in ("femto_count", "macro_interferers"):
        for v, sc in zip(values, _axis_scenarios(scenario, axis, values)):
            counts = counter(sc, ALL_VARIANTS)
            for var, c in zip(ALL_VARIANTS, counts):
                est = OutageEstimate.from_counts(int(c), sc.trials, sc.fingerprint(), sc.master_seed)
                report.points.append(SweepPoint(axis, v, tier, var.label, est))
    else:
        if axis == "sector_mode":
            variants = [Variant(SectorConfig.from_label(v).n_sectors, scenario.outage.cpc) for v in values]
            labels = [SectorConfig.from_label(v).label for v in values]
        else:
            variants = [Variant(scenario.sectors.n_sectors, _parse_cpc(v)) for v in values]
            labels = ["on" if var.cpc else "off" for var in variants]
        counts = counter(scenario, variants)
        for label, var, c in zip(labels, variants, counts):
            sc = scenario.with_overrides({"sectors.n_sectors": var.n_sectors, "outage.cpc": var.cpc})
            est = OutageEstimate.from_counts(int(c), sc.trials, sc.fingerprint(), sc.master_seed)
            report.points.append(SweepPoint(axis, label, tier, var.label, est))
    report.wall_time_s = time.perf_counter() - started
    return report


def capacity_comparison(scenario: Scenario, ebio_db_values: Sequence[float] = (1, 3, 5, 7, 10)) -> List[dict]:
    """Perfect vs imperfect power-control capacity per tier over Eb/Io.

    ``perfect`` is the imperfect-PC formula with the power-control error
    removed, so both curves share sectors and source activity;
    ``perfect_single`` is the single-sector, full-activity expression.
    """
    rows = []
    for tier, params in (("macro", scenario.capacity_macro), ("femto", scenario.capacity_femto)):
        for e in ebio_db_values:
            p = replace(params, ebio_db=float(e))
            imperfect = capacity_imperfect(p)
            perfect = capacity_imperfect(replace(p, pce_cd_db=0.0))
            rows.append({
                "tier": tier,
                "ebio_db": float(e),
                "imperfect": imperfect,
                "perfect": perfect,
                "perfect_single": capacity_perfect(p),
                "improvement": perfect / imperfect - 1.0,
            })
    return rows


@dataclass(frozen=True)
class DensityPoint:
    femto_density: float
    admissible_macro_users: int | None
    status: str
    macro_outage: float | None
    femto_outage: float | None


def density_tradeoff(scenario: Scenario, femto_densities: Sequence[float],
                     max_macro_users: int = 60) -> List[DensityPoint]:
    """Largest macro user count keeping both tiers under their outage targets.

    For each femto user density (mean active users per femtocell) the
    admissible macro count is bracketed in ``[0, max_macro_users]`` and
    found by integer bisection. Outage is nondecreasing in the macro count
    on common random numbers, so the search is exact to one user. Status
    is ``ok``, ``saturated`` (upper bracket admissible) or ``infeasible``
    (even zero macro users violate a target). A density of 0 leaves the
    femto tier empty, so only the macro target binds there.
    """
    densities = list(femto_densities)
    if not densities:
        raise ValueError("need at least one femto density")
    om = scenario.outage
    variant = [_scenario_variant(scenario)]

    def evaluate(sc: Scenario, m: int):
        s = sc.with_overrides({"outage.macro_users": float(m), "outage.n_macro_interferers": int(m)})
        pc = _macro_counts(s, variant)[0] / s.trials
        # with no femto users there is no femto link to fall into outage
        pf = _femto_counts(s, variant)[0] / s.trials if s.outage.femto_users > 0 else 0.0
        return pc, pf, (pc <= om.phi_macro and pf <= om.phi_femto)

    out = []
    for rho in densities:
        sc = scenario.with_overrides({"outage.femto_users": float(rho)})
        hi_pc, hi_pf, hi_ok = evaluate(sc, max_macro_users)
        if hi_ok:
            out.append(DensityPoint(float(rho), max_macro_users, "saturated", hi_pc, hi_pf))
            continue
        lo_pc, lo_pf, lo_ok = evaluate(sc, 0)
        if not lo_ok:
            out.append(DensityPoint(float(rho), None, "infeasible", lo_pc, lo_pf))
            continue
        lo, hi = 0, max_macro_users
        best = (lo_pc, lo_pf)
        while hi - lo > 1:
            mid = (lo + hi) // 2
            pc, pf, ok = evaluate(sc, mid)
            if ok:
                lo, best = mid, (pc, pf)
            else:
                hi = mid
        out.append(DensityPoint(float(rho), lo, "ok", *best))
    return out


TRAFFIC_COLUMNS = ("round", "bs", "active", "utilization", "hot", "baseline_khz", "allocated_khz")


def traffic_snapshots(scenario: Scenario) -> List[tuple]:
    """Per-round traffic draws and the resulting spectrum allocation.

    Each round draws a macro load and Poisson femto traffic, then lends
    idle bandwidth to hot spots. Rows follow ``TRAFFIC_COLUMNS``; the macro
    BS is ``bs == "macro"`` with an empty user count.
    """
    tc, sp = scenario.traffic, scenario.spectrum
    rng = np.random.default_rng(np.random.SeedSequence(scenario.master_seed, spawn_key=(STREAM_TRAFFIC,)))
    plan = SpectrumPlan(total_khz=sp.total_khz, macro_share_khz=sp.macro_share_khz, n_femto=scenario.n_femto)
    rows = []
    for r in range(tc.rounds):
        load = generate_macro_load(rng, tc.macro_load_mean, tc.macro_load_std)
        state = generate_femto_traffic(rng, tc.femto_lambda, plan.n_femto, tc.max_users_per_femto, load)
        util = utilization(state)
        alloc = allocate_spectrum(load, util, plan, tc.hotspot_threshold)
        rows.append((r, "macro", "", load, load > tc.hotspot_threshold,
                     plan.macro_allocated_khz, alloc.macro_allocated_khz))
        for j, (n, u, base, khz) in enumerate(zip(state.active, util, plan.femto_allocated_khz,
                                                  alloc.femto_allocated_khz)):
            rows.append((r, j, int(n), float(u), bool(u > tc.hotspot_threshold), base, khz))
    return rows
