"""Closed-form outage, co-channel S/I and DS-CDMA capacity."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable, Sequence

import numpy as np

from .channel import db_to_linear, q_function

__all__ = [
    "AnalysisParams",
    "CapacityParams",
    "QuadratureError",
    "adaptive_simpson",
    "outage_at",
    "cell_averaged_outage",
    "outage_profile_literal",
    "worst_case_sir_formula",
    "worst_case_distances",
    "sir_from_distances",
    "capacity_imperfect",
    "capacity_perfect",
    "capacity_relation_residual",
]


class QuadratureError(ArithmeticError):
    """Adaptive quadrature failed to reach the requested tolerance."""


@dataclass(frozen=True)
class AnalysisParams:
    """Inputs of the single-cell outage model.

    ``threshold_sir_db`` plus ``interference_margin_db`` is the fade
    margin the link holds at ``reference_distance``; every decade of
    distance beyond it costs ``10 * pathloss_exponent`` dB of that margin.
    """

    threshold_sir_db: float = 18.0
    pathloss_exponent: float = 4.0
    interference_margin_db: float = 0.0
    sigma_total_db: float = 4.0
    cell_radius: float = 500.0
    reference_distance: float = 100.0

    def __post_init__(self):
        if not self.sigma_total_db > 0:
            raise ValueError("sigma_total_db must be > 0")
        if not math.isfinite(self.threshold_sir_db):
            raise ValueError("threshold_sir_db must be finite")
        if not 2.0 <= self.pathloss_exponent <= 6.0:
            raise ValueError("pathloss_exponent must lie in [2, 6]")
        if not self.cell_radius >= self.reference_distance > 0:
            raise ValueError("need cell_radius >= reference_distance > 0")


@dataclass(frozen=True)
class CapacityParams:
    """DS-CDMA single-cell capacity inputs.

    ``reuse_efficiency_nf`` is ``1/K_f``; ``pce_cd_db`` is the power
    control error, entering capacity as the multiplier ``10**(-Cd/10)``.
    """

    sectors_q: float = 3.0
    processing_gain_gp: float = 256.0
    reuse_efficiency_nf: float = 0.65
    pce_cd_db: float = 1.0
    source_activity_sf: float = 0.05
    ebio_db: float = 7.0
    snr_db: float = 26.0

    def __post_init__(self):
        if not self.source_activity_sf > 0 or self.source_activity_sf > 1:
            raise ValueError(f"source_activity_sf must lie in (0, 1], got {self.source_activity_sf}")
        if not 0 < self.reuse_efficiency_nf <= 1:
            raise ValueError("reuse_efficiency_nf must lie in (0, 1]")
        if not self.sectors_q > 0 or not self.processing_gain_gp > 0:
            raise ValueError("sectors_q and processing_gain_gp must be positive")
        if not self.pce_cd_db >= 0:
            raise ValueError("pce_cd_db must be >= 0")


def adaptive_simpson(f: Callable[[float], float], a: float, b: float,
                     tol: float = 1e-8, max_intervals: int = 10_000) -> float:
    """Adaptive Simpson quadrature with an absolute tolerance.

    Raises :class:`QuadratureError` when more than ``max_intervals``
    subintervals would be needed.
    """
    fa, fm, fb = f(a), f(0.5 * (a + b)), f(b)
    whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    stack = [(a, b, fa, fm, fb, whole, tol)]
    total = 0.0
    intervals = 0
    while stack:
        a0, b0, fa0, fm0, fb0, s, eps = stack.pop()
        m = 0.5 * (a0 + b0)
        lm, rm = 0.5 * (a0 + m), 0.5 * (m + b0)
        flm, frm = f(lm), f(rm)
        left = (m - a0) / 6.0 * (fa0 + 4.0 * flm + fm0)
        right = (b0 - m) / 6.0 * (fm0 + 4.0 * frm + fb0)
        delta = left + right - s
        if abs(delta) <= 15.0 * eps:
            total += left + right + delta / 15.0
            intervals += 2
            continue
        if intervals + len(stack) + 2 > max_intervals:
            raise QuadratureError(
                f"adaptive Simpson exceeded {max_intervals} intervals on [{a}, {b}]")
        stack.append((a0, m, fa0, flm, fm0, left, eps / 2.0))
        stack.append((m, b0, fm0, frm, fb0, right, eps / 2.0))
    return total


def outage_at(distance_ratio, params: AnalysisParams = AnalysisParams()):
    """Outage probability of a user at ``distance_ratio = d / d_o >= 1``.

    ``chi = Q((gamma_o - 10 n log10(ratio) + M_I) / sigma_tot)``: the
    probability that shadowing eats more than the margin left at that
    distance. Vectorised over ``distance_ratio``.
    """
    ratio = np.asarray(distance_ratio, dtype=float)
    if np.any(~(ratio >= 1.0)):
        raise ValueError("distance ratio must be >= 1")
    margin = (params.threshold_sir_db - 10.0 * params.pathloss_exponent * np.log10(ratio)
              + params.interference_margin_db)
    chi = q_function(margin / params.sigma_total_db)
    return float(chi) if np.ndim(distance_ratio) == 0 else chi


def _cell_integrand(params: AnalysisParams):
    d_o, radius = params.reference_distance, params.cell_radius

    def integrand(r: float) -> float:
        # inside the reference distance the outage is held at its d_o value
        ratio = max(r / d_o, 1.0)
        return outage_at(ratio, params) * 2.0 * r / radius ** 2

    return integrand


def cell_averaged_outage(params: AnalysisParams = AnalysisParams(),
                         tol: float = 1e-8, max_intervals: int = 10_000) -> float:
    """Outage averaged over users uniform in the cell, ``p(r) = 2r/R^2``."""
    f = _cell_integrand(params)
    d_o, radius = params.reference_distance, params.cell_radius
    # split at the kink of the clamped ratio
    inner = adaptive_simpson(f, 0.0, d_o, tol / 2, max_intervals) if d_o > 0 else 0.0
    outer = adaptive_simpson(f, d_o, radius, tol / 2, max_intervals) if radius > d_o else 0.0
    return inner + outer


def outage_profile_literal(a, params: AnalysisParams = AnalysisParams(),
                           form: str = "interior") -> float:
    """Closed-form outage profile evaluated term by term as written.

    Two variants exist, ``form="interior"`` (for users with ``d > d_o``)
    and ``form="boundary"`` (user at the cell boundary)::

        interior: (exp(-a^2/2) - exp(-1/2)) * B(a)
        boundary: (exp(-2 a^2 pi^2 / 2) - pi/6) * B(a)
        B(a) = 2 pi exp((-gamma - 10 K log10(a) + exp((s^2/2)^2/2)) / s^2) - sqrt(2 pi)

    with ``gamma`` the threshold in dB, ``K`` the path-loss exponent and
    ``s`` the total shadowing spread. The expressions are not
    probabilities and are only meant for side-by-side comparison with
    :func:`outage_at`. Overflow is raised, not masked: for ``s`` around
    4 dB the inner double exponential already exceeds float range.
    """
    if a < 1:
        raise ValueError("a = d/d_o must be >= 1")
    gamma = params.threshold_sir_db
    k = params.pathloss_exponent
    s2 = params.sigma_total_db ** 2
    inner = math.exp((s2 / 2.0) ** 2 / 2.0)
    bracket = 2.0 * math.pi * math.exp((-gamma - 10.0 * k * math.log10(a) + inner) / s2) \
        - math.sqrt(2.0 * math.pi)
    if form == "interior":
        head = math.exp(-a * a / 2.0) - math.exp(-0.5)
    elif form == "boundary":
        head = math.exp(-2.0 * a * a * math.pi ** 2 / 2.0) - math.pi / 6.0
    else:
        raise ValueError(f"unknown form {form!r}; use 'interior' or 'boundary'")
    value = head * bracket
    if not math.isfinite(value):
        raise ArithmeticError(f"literal profile is not finite at a={a}")
    return value


def worst_case_sir_formula(q: float) -> float:
    """Worst-case S/I of a mobile at the cell edge, fourth-power law (linear)."""
    if not q > 1:
        raise ValueError(f"reuse ratio must be > 1, got {q}")
    return 1.0 / (2.0 * (q - 1.0) ** -4 + 2.0 * (q + 1.0) ** -4 + 2.0 * q ** -4)


def worst_case_distances(q: float) -> list[float]:
    """First-tier interferer distances (in units of R) for an edge mobile.

    Two interferers at ``D - R``, then ``D - R/2``, ``D``, ``D + R/2`` and
    ``D + R`` with ``D = q R``.
    """
    return [q - 1.0, q - 1.0, q - 0.5, q, q + 0.5, q + 1.0]


def sir_from_distances(cell_radius: float, interferer_distances: Sequence[float],
                       n: float = 4.0) -> float:
    """``R^-n / sum(D_i^-n)``: S/I at the cell edge, linear."""
    dists = list(interferer_distances)
    if not dists:
        raise ValueError("need at least one interferer distance")
    if cell_radius <= 0 or any(d <= 0 for d in dists):
        raise ValueError("distances must be positive")
    # ratios keep the powers well scaled for any unit
    return 1.0 / math.fsum((d / cell_radius) ** -n for d in dists)


def capacity_imperfect(params: CapacityParams = CapacityParams()) -> float:
    """Channels per cell under imperfect power control.

    ``1 + Cd_lin * n_f * (Q * Gp / EbIo - Pn/S) / S_f`` with every dB
    quantity linearised and ``Cd_lin = 10**(-Cd_dB/10)``.
    """
    cd = db_to_linear(-params.pce_cd_db)
    ebio = db_to_linear(params.ebio_db)
    noise_ratio = db_to_linear(-params.snr_db)
    spread = params.sectors_q * params.processing_gain_gp / ebio - noise_ratio
    return 1.0 + cd * params.reuse_efficiency_nf * spread / params.source_activity_sf


def capacity_perfect(params: CapacityParams = CapacityParams()) -> float:
    """Channels per cell under perfect power control: ``1 + n_f (Gp/EbIo - Pn/S)``."""
    ebio = db_to_linear(params.ebio_db)
    noise_ratio = db_to_linear(-params.snr_db)
    return 1.0 + params.reuse_efficiency_nf * (params.processing_gain_gp / ebio - noise_ratio)


def capacity_relation_residual(params: CapacityParams) -> float:
    """Residual of the identity linking the two capacity formulas at Cd = 0 dB.

    ``S_f (N_imp - 1) - (N_perf - 1) == (Q - 1) n_f Gp / EbIo`` holds
    exactly when no power-control error is present; returns LHS - RHS.
    """
    p0 = replace(params, pce_cd_db=0.0)
    ebio = db_to_linear(params.ebio_db)
    lhs = params.source_activity_sf * (capacity_imperfect(p0) - 1.0) - (capacity_perfect(p0) - 1.0)
    rhs = (params.sectors_q - 1.0) * params.reuse_efficiency_nf * params.processing_gain_gp / ebio
    return lhs - rhs
