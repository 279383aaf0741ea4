"""Femtocell transmit power rules.

The downlink/uplink budgets work in dB/dBm; the cognitive power control
(CPC) rule works in mW with additive steps.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .channel import dbm_to_mw

__all__ = [
    "PowerPolicy",
    "LinkBudgetInputs",
    "femto_downlink_power",
    "femto_uplink_power",
    "cpc_adjust",
    "cpc_run",
]


@dataclass(frozen=True)
class PowerPolicy:
    """Power limits and CPC thresholds.

    Defaults step down 25 mW when a macro user is within 200 m and step
    up 20 mW otherwise; the 20/10 mW variant is a config change.
    """

    p_max_femto_dbm: float = 10.0 * math.log10(125.0)
    p_ue_max_dbm: float = 23.0
    p_interference_max_dbm: float = -100.0
    cpc_threshold_m: float = 200.0
    cpc_step_down_mw: float = 25.0
    cpc_step_up_mw: float = 20.0

    def __post_init__(self):
        if not math.isfinite(self.p_max_femto_dbm):
            raise ValueError("p_max_femto_dbm must be finite")
        if not self.cpc_threshold_m > 0:
            raise ValueError("cpc_threshold_m must be > 0")
        if self.cpc_step_down_mw < 0 or self.cpc_step_up_mw < 0:
            raise ValueError("CPC steps must be >= 0")

    @property
    def p_max_mw(self) -> float:
        return dbm_to_mw(self.p_max_femto_dbm)


@dataclass(frozen=True)
class LinkBudgetInputs:
    p_macro_dbm: float = 43.0
    antenna_gain_db: float = 0.0
    loss_macro_db: float = 0.0
    loss_femto_db: float = 0.0
    loss_macro_measured_db: float = 0.0
    n_femto: int = 1

    def __post_init__(self):
        for name in ("loss_macro_db", "loss_femto_db", "loss_macro_measured_db"):
            if np.any(np.asarray(getattr(self, name)) < 0):
                raise ValueError(f"{name} must be >= 0")


def femto_downlink_power(inputs: LinkBudgetInputs, policy: PowerPolicy = PowerPolicy()):
    """Femto BS downlink power in dBm.

    The femto matches the macro power its user already receives, lifted
    by the femto link's own path loss, and never exceeds ``p_max``::

        min(P_macro + G - L_macro(d) + L_femto(r), P_max)

    ``loss_macro_db`` may be an array (one entry per femto BS).
    """
    budget = (inputs.p_macro_dbm + inputs.antenna_gain_db
              - np.asarray(inputs.loss_macro_db) + inputs.loss_femto_db)
    out = np.minimum(budget, policy.p_max_femto_dbm)
    return float(out) if np.ndim(out) == 0 else out


def femto_uplink_power(inputs: LinkBudgetInputs, policy: PowerPolicy = PowerPolicy()) -> float:
    """Femto UE uplink power in dBm.

    The interference allowance at the macro BS is split evenly over the
    ``n_femto`` femtocells of the sector, then lifted by the path loss to
    the macro BS and clamped at the UE maximum.
    """
    if inputs.n_femto < 1:
        raise ValueError("n_femto must be >= 1")
    budget = (policy.p_interference_max_dbm - 10.0 * math.log10(inputs.n_femto)
              + inputs.loss_macro_measured_db)
    return min(budget, policy.p_ue_max_dbm)


def cpc_adjust(current_mw, distance_to_macro_user_m, policy: PowerPolicy = PowerPolicy()):
    """One CPC step.

    Below the distance threshold the femto backs off by ``cpc_step_down_mw``
    (floored at 0), otherwise it climbs by ``cpc_step_up_mw`` (capped at
    ``p_max``). Works elementwise on arrays.
    """
    dist = np.asarray(distance_to_macro_user_m, dtype=float)
    if np.any(dist < 0):
        raise ValueError("distance must be >= 0")
    cur = np.asarray(current_mw, dtype=float)
    if np.any(cur < 0):
        raise ValueError("current power must be >= 0")
    near = dist < policy.cpc_threshold_m
    out = np.where(near,
                   np.maximum(cur - policy.cpc_step_down_mw, 0.0),
                   np.minimum(cur + policy.cpc_step_up_mw, policy.p_max_mw))
    # a start above p_max still has to land inside the box
    out = np.minimum(out, policy.p_max_mw)
    if np.ndim(out) == 0:
        return float(out)
    return out


def cpc_run(start_mw, distance_to_macro_user_m, rounds: int,
            policy: PowerPolicy = PowerPolicy()):
    """Apply :func:`cpc_adjust` ``rounds`` times at a fixed distance."""
    p = start_mw
    for _ in range(rounds):
        p = cpc_adjust(p, distance_to_macro_user_m, policy)
    return p
