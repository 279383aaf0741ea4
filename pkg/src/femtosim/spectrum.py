"""Spectrum split between the tiers, load-balanced borrowing and femto traffic.

Bandwidth bookkeeping is done in integer ticks (``n_femto * 1e9`` ticks per
kHz) so that lending and borrowing conserve the pool exactly; the float
``*_khz`` views are derived from the ticks.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from fractions import Fraction
from typing import List, Sequence

import numpy as np
from scipy import stats

__all__ = [
    "MAX_USERS_PER_FEMTO",
    "SpectrumPlan",
    "TrafficState",
    "generate_femto_traffic",
    "generate_macro_load",
    "truncated_poisson_mean",
    "utilization",
    "allocate_spectrum",
    "spectrum_rows",
]

MAX_USERS_PER_FEMTO = 20
_TICKS_PER_KHZ = 10 ** 9


@dataclass(frozen=True)
class SpectrumPlan:
    """Tier shares of a common band plus per-BS borrowing.

    ``borrowing_ticks`` holds one net adjustment per BS, macro first, then
    each femto BS; positive means borrowed in, negative lent out. The
    adjustments always sum to zero.
    """

    total_khz: float = 1000.0
    macro_share_khz: float = 500.0
    n_femto: int = 24
    borrowing_ticks: tuple = ()

    def __post_init__(self):
        if self.n_femto < 1:
            raise ValueError("n_femto must be >= 1")
        if not 0 <= self.macro_share_khz <= self.total_khz:
            raise ValueError("macro_share_khz must lie in [0, total_khz]")
        if self.borrowing_ticks:
            if len(self.borrowing_ticks) != self.n_femto + 1:
                raise ValueError("borrowing must have one entry per BS (macro + femtos)")
            if sum(self.borrowing_ticks) != 0:
                raise ValueError("borrowing adjustments must net to zero")
            if any(a < 0 for a in self._alloc_ticks()):
                raise ValueError("negative allocation")

    # tick-level bookkeeping
    @property
    def _scale(self) -> int:
        return self.n_femto * _TICKS_PER_KHZ

    @property
    def total_ticks(self) -> int:
        return round(self.total_khz * self._scale)

    @property
    def macro_ticks(self) -> int:
        return round(self.macro_share_khz * self._scale)

    @property
    def femto_aggregate_khz(self) -> float:
        return self.total_khz - self.macro_share_khz

    def _base_ticks(self) -> List[int]:
        femto_total = self.total_ticks - self.macro_ticks
        q, r = divmod(femto_total, self.n_femto)
        return [self.macro_ticks] + [q + (1 if i < r else 0) for i in range(self.n_femto)]

    def _alloc_ticks(self) -> List[int]:
        base = self._base_ticks()
        if not self.borrowing_ticks:
            return base
        return [b + a for b, a in zip(base, self.borrowing_ticks)]

    @property
    def per_femto_khz(self) -> float:
        return self.femto_aggregate_khz / self.n_femto

    @property
    def macro_allocated_khz(self) -> float:
        return self._alloc_ticks()[0] / self._scale

    @property
    def femto_allocated_khz(self) -> List[float]:
        return [t / self._scale for t in self._alloc_ticks()[1:]]

    @property
    def borrowing_khz(self) -> List[float]:
        ticks = self.borrowing_ticks or (0,) * (self.n_femto + 1)
        return [t / self._scale for t in ticks]

    def allocated_total(self) -> Fraction:
        """Exact sum of every allocation, in kHz."""
        return Fraction(sum(self._alloc_ticks()), self._scale)

    def baseline(self) -> "SpectrumPlan":
        return replace(self, borrowing_ticks=())


@dataclass
class TrafficState:
    active: np.ndarray
    macro_load: float = 0.0
    arrival_rate: float = 0.0
    cap: int = MAX_USERS_PER_FEMTO

    def __post_init__(self):
        self.active = np.asarray(self.active, dtype=int)
        if np.any(self.active < 0) or np.any(self.active > self.cap):
            raise ValueError(f"active users must lie in [0, {self.cap}]")


def generate_femto_traffic(rng: np.random.Generator, lam: float, n_bs: int,
                           cap: int = MAX_USERS_PER_FEMTO, macro_load: float = 0.0) -> TrafficState:
    """Poisson(lam) users per femto BS; arrivals beyond ``cap`` are blocked."""
    if lam < 0:
        raise ValueError("lam must be >= 0")
    counts = np.minimum(rng.poisson(lam, size=n_bs), cap)
    return TrafficState(active=counts, macro_load=macro_load, arrival_rate=lam, cap=cap)


def generate_macro_load(rng: np.random.Generator, mean: float, std: float) -> float:
    """Gaussian offered macro load clipped to [0, 1]."""
    return float(np.clip(rng.normal(mean, std), 0.0, 1.0))


def truncated_poisson_mean(lam: float, cap: int = MAX_USERS_PER_FEMTO) -> float:
    """``E[min(K, cap)]`` for ``K ~ Poisson(lam)``."""
    k = np.arange(cap)
    return float(np.sum(k * stats.poisson.pmf(k, lam)) + cap * stats.poisson.sf(cap - 1, lam))


def utilization(state: TrafficState) -> np.ndarray:
    return state.active / state.cap


def allocate_spectrum(macro_load: float, femto_utilizations: Sequence[float],
                      plan: SpectrumPlan = SpectrumPlan(),
                      hotspot_threshold: float = 0.8) -> SpectrumPlan:
    """Lend idle bandwidth to whichever BSs are hot spots.

    A BS is a hot spot when its load exceeds ``hotspot_threshold``. Each
    non-hot BS can lend its idle part, ``(1 - load) * share``; a hot BS
    lends nothing. A hot macro tier takes all idle femto bandwidth, and hot
    femto BSs split the idle macro bandwidth in proportion to the bandwidth
    their users occupy. Allocations start from the baseline plan, never go
    below the occupied bandwidth and always sum to ``total_khz``.
    """
    utils = [float(u) for u in femto_utilizations]
    if len(utils) != plan.n_femto:
        raise ValueError(f"expected {plan.n_femto} femto utilizations, got {len(utils)}")
    loads = [float(macro_load)] + utils
    if any(not 0.0 <= x <= 1.0 for x in loads):
        raise ValueError("loads must lie in [0, 1]")

    base = plan._base_ticks()
    hot = [x > hotspot_threshold for x in loads]
    idle = [0 if h else int((1.0 - x) * b) for x, b, h in zip(loads, base, hot)]
    adjust = [0] * len(base)

    if hot[0]:
        for j in range(1, len(base)):
            adjust[j] -= idle[j]
            adjust[0] += idle[j]

    hot_femtos = [j for j in range(1, len(base)) if hot[j]]
    if hot_femtos and not hot[0] and idle[0] > 0:
        occupied = [loads[j] * base[j] for j in hot_femtos]
        weight_sum = sum(occupied)
        shares = [int(idle[0] * w / weight_sum) if weight_sum > 0 else idle[0] // len(hot_femtos)
                  for w in occupied]
        # hand rounding leftovers to the first borrowers, one tick each
        leftover = idle[0] - sum(shares)
        for i in range(leftover):
            shares[i % len(shares)] += 1
        adjust[0] -= idle[0]
        for j, s in zip(hot_femtos, shares):
            adjust[j] += s

    return replace(plan, borrowing_ticks=tuple(adjust))


def spectrum_rows(state: TrafficState, plan: SpectrumPlan) -> list:
    """CSV-ready rows ``(bs_id, active, utilization, allocated_khz)``.

    Row ``macro`` carries the macro load in the utilization column and no
    user count.
    """
    util = utilization(state)
    rows = [("macro", "", state.macro_load, plan.macro_allocated_khz)]
    for j, (n, u, khz) in enumerate(zip(state.active, util, plan.femto_allocated_khz)):
        rows.append((j, int(n), float(u), khz))
    return rows
