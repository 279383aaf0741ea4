"""Idealised sector antennas.

A cell's azimuth is cut into ``n_sectors`` wedges of width ``2*pi/n``.
Sector ``k`` covers the half-open interval
``[alignment + k*width, alignment + (k+1)*width)``, so every direction
belongs to exactly one sector. Sector 0 is the boresight sector.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

__all__ = [
    "SectorConfig",
    "OMNI",
    "SECTOR_120",
    "SECTOR_90",
    "sector_of_angle",
    "gain_db",
    "interference_reduction_factor",
    "partition_interference",
]

TWO_PI = 2.0 * math.pi
ALLOWED_SECTORS = (1, 3, 4)


@dataclass(frozen=True)
class SectorConfig:
    """Sectorisation of one base station.

    ``out_of_sector_rejection_db`` is the attenuation applied outside the
    served wedge; ``inf`` (the default) is a brick-wall pattern.
    """

    n_sectors: int = 1
    alignment_rad: float = 0.0
    in_sector_gain_db: float = 0.0
    out_of_sector_rejection_db: float = math.inf

    def __post_init__(self):
        if self.n_sectors not in ALLOWED_SECTORS:
            raise ValueError(f"n_sectors must be one of {ALLOWED_SECTORS}, got {self.n_sectors}")
        if not math.isfinite(self.alignment_rad):
            raise ValueError("alignment_rad must be finite")
        if not self.out_of_sector_rejection_db >= 0:
            raise ValueError("out_of_sector_rejection_db must be >= 0")

    @property
    def width(self) -> float:
        return TWO_PI / self.n_sectors

    @property
    def label(self) -> str:
        return {1: "omni", 3: "120", 4: "90"}[self.n_sectors]

    @classmethod
    def from_label(cls, label) -> "SectorConfig":
        """Build from ``omni``/``120``/``90`` (degrees of the sector width)."""
        key = str(label).strip().lower().removesuffix("deg").removesuffix("°")
        mapping = {"omni": 1, "360": 1, "1": 1, "120": 3, "3": 3, "90": 4, "4": 4}
        if key not in mapping:
            raise ValueError(f"unknown sector mode {label!r}; use omni, 120 or 90")
        return cls(n_sectors=mapping[key])


OMNI = SectorConfig(1)
SECTOR_120 = SectorConfig(3)
SECTOR_90 = SectorConfig(4)


def sector_of_angle(angle, config: SectorConfig):
    """Sector id(s) for azimuth ``angle`` in radians (scalar or array)."""
    if config.n_sectors == 1:
        return 0 if np.ndim(angle) == 0 else np.zeros(np.shape(angle), dtype=int)
    rel = np.mod(np.asarray(angle, dtype=float) - config.alignment_rad, TWO_PI)
    idx = np.floor(rel / config.width).astype(int)
    # mod can round up to exactly 2*pi for tiny negative inputs
    idx = np.minimum(idx, config.n_sectors - 1)
    return int(idx) if np.ndim(angle) == 0 else idx


def gain_db(angle, config: SectorConfig, sector: int = 0):
    """Gain toward ``angle`` of the beam serving ``sector`` (dB).

    Directions outside that sector get ``in_sector_gain_db`` minus the
    rejection, i.e. ``-inf`` for ideal sectors.
    """
    inside = sector_of_angle(angle, config) == sector
    outside = config.in_sector_gain_db - config.out_of_sector_rejection_db
    if np.ndim(angle) == 0:
        return config.in_sector_gain_db if inside else outside
    return np.where(inside, config.in_sector_gain_db, outside)


def interference_reduction_factor(config: SectorConfig) -> float:
    """Divisor applied to cross-tier interference for this antenna.

    For uniformly distributed interferer directions only ``1/n`` of them
    fall in the served sector; the rest leak through at the rejection
    level ``rho``. The mean interference is therefore scaled by
    ``(1 + (n - 1) * rho) / n``, and the divisor is its reciprocal. With
    ideal sectors this is exactly ``n_sectors``.
    """
    n = config.n_sectors
    if math.isinf(config.out_of_sector_rejection_db):
        return float(n)
    leak = 10.0 ** (-config.out_of_sector_rejection_db / 10.0)
    return n / (1.0 + (n - 1) * leak)


def partition_interference(samples: Sequence[float], angles: Sequence[float],
                           config: SectorConfig) -> np.ndarray:
    """Per-sector totals of interference ``samples`` arriving at ``angles``.

    Returns an array of length ``n_sectors`` whose entries sum to the
    unpartitioned total.
    """
    power = np.asarray(samples, dtype=float)
    ang = np.asarray(angles, dtype=float)
    if power.shape != ang.shape:
        raise ValueError(f"samples and angles differ in length: {power.shape} vs {ang.shape}")
    idx = np.atleast_1d(sector_of_angle(ang, config))
    return np.bincount(idx.ravel(), weights=power.ravel(), minlength=config.n_sectors)
