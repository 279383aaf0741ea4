"""Cell layout, user placement and reuse geometry."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List

import numpy as np

from .antenna import SectorConfig, sector_of_angle

__all__ = [
    "Point2D",
    "LayoutConfig",
    "NetworkLayout",
    "LayoutError",
    "reuse_ratio",
    "build_layout",
    "cochannel_centers",
    "sample_disc",
    "drop_users",
    "distance",
    "sector_index",
]


class LayoutError(RuntimeError):
    """The requested femto placement could not be realised."""


@dataclass(frozen=True)
class Point2D:
    x: float
    y: float

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise ValueError(f"non-finite coordinates ({self.x}, {self.y})")

    def to_list(self) -> list:
        return [self.x, self.y]


ORIGIN = Point2D(0.0, 0.0)


@dataclass(frozen=True)
class LayoutConfig:
    macro_radius: float = 1000.0
    femto_radius: float = 125.0 * 1.732
    n_femto: int = 24
    cluster_size: int = 7
    min_separation: float = 100.0
    max_attempts: int = 10_000

    def __post_init__(self):
        if self.n_femto < 0:
            raise ValueError(f"n_femto must be >= 0, got {self.n_femto}")
        if not self.femto_radius > 0 or not self.macro_radius > self.femto_radius:
            raise ValueError("radii must satisfy macro_radius > femto_radius > 0")
        if self.cluster_size < 1:
            raise ValueError(f"cluster_size must be >= 1, got {self.cluster_size}")
        if self.min_separation < 0:
            raise ValueError("min_separation must be >= 0")
        if self.max_attempts < 1:
            raise ValueError("max_attempts must be >= 1")


@dataclass(frozen=True)
class NetworkLayout:
    macro_center: Point2D
    macro_radius: float
    femto_sites: List[Point2D]
    femto_radius: float
    cochannel_centers: List[Point2D]
    cluster_size: int
    seed: int | None = None

    def __post_init__(self):
        if not self.macro_radius > self.femto_radius > 0:
            raise ValueError("radii must satisfy macro_radius > femto_radius > 0")
        for p in self.femto_sites:
            if distance(p, self.macro_center) >= self.macro_radius:
                raise ValueError(f"femto site {p} is not strictly inside the macro cell")
        if len(self.cochannel_centers) != 6:
            raise ValueError("exactly six first-tier co-channel centres are required")
        d = reuse_ratio(self.cluster_size) * self.macro_radius
        for c in self.cochannel_centers:
            if abs(distance(c, self.macro_center) - d) > 1e-9 * d:
                raise ValueError(f"co-channel centre {c} is not at reuse distance {d:.3f} m")

    def femto_array(self) -> np.ndarray:
        """Femto sites as an ``(n, 2)`` array."""
        return np.array([[p.x, p.y] for p in self.femto_sites], dtype=float).reshape(-1, 2)

    def to_dict(self) -> dict:
        return {
            "macro_center": self.macro_center.to_list(),
            "macro_radius": self.macro_radius,
            "femto_radius": self.femto_radius,
            "femto_sites": [p.to_list() for p in self.femto_sites],
            "cochannel_centers": [p.to_list() for p in self.cochannel_centers],
            "cluster_size": self.cluster_size,
            "seed": self.seed,
        }


def reuse_ratio(cluster_size: int) -> float:
    """Co-channel reuse ratio ``Q = D/R = sqrt(3N)``."""
    if int(cluster_size) != cluster_size or cluster_size < 1:
        raise ValueError(f"cluster_size must be a positive integer, got {cluster_size}")
    return math.sqrt(3 * cluster_size)


def cochannel_centers(center: Point2D, radius: float, cluster_size: int) -> List[Point2D]:
    """The six first-tier co-channel cell centres at distance ``sqrt(3N) R``."""
    d = reuse_ratio(cluster_size) * radius
    return [Point2D(center.x + d * math.cos(k * math.pi / 3),
                    center.y + d * math.sin(k * math.pi / 3)) for k in range(6)]


def sample_disc(rng: np.random.Generator, n: int, radius: float) -> np.ndarray:
    """``n`` points uniform over a disc centred at the origin, shape ``(n, 2)``."""
    r = radius * np.sqrt(rng.random(n))
    theta = 2.0 * math.pi * rng.random(n)
    return np.column_stack((r * np.cos(theta), r * np.sin(theta)))


def build_layout(config: LayoutConfig = LayoutConfig(), seed: int = 0) -> NetworkLayout:
    """Place femto BSs uniformly in the macro disc with a minimum site spacing.

    Sites are drawn one at a time by rejection sampling from a single
    seeded stream, so the first ``k`` sites of an ``n``-site layout are
    exactly the sites of the ``k``-site layout with the same seed.
    """
    rng = np.random.default_rng(seed)
    sites: list[tuple[float, float]] = []
    min_sep2 = config.min_separation ** 2
    for i in range(config.n_femto):
        for _ in range(config.max_attempts):
            r = config.macro_radius * math.sqrt(rng.random())
            theta = 2.0 * math.pi * rng.random()
            x, y = r * math.cos(theta), r * math.sin(theta)
            # strictly inside the macro disc
            if r >= config.macro_radius:
                continue
            if all((x - sx) ** 2 + (y - sy) ** 2 >= min_sep2 for sx, sy in sites):
                sites.append((x, y))
                break
        else:
            raise LayoutError(
                f"could not place femto site {i + 1} of {config.n_femto} with "
                f"min_separation={config.min_separation} m after {config.max_attempts} attempts")
    return NetworkLayout(
        macro_center=ORIGIN,
        macro_radius=config.macro_radius,
        femto_sites=[Point2D(x, y) for x, y in sites],
        femto_radius=config.femto_radius,
        cochannel_centers=cochannel_centers(ORIGIN, config.macro_radius, config.cluster_size),
        cluster_size=config.cluster_size,
        seed=seed,
    )


def drop_users(n: int, center: Point2D, radius: float, seed) -> List[Point2D]:
    """Drop ``n`` users uniformly over the disc (radial density ``2r/R^2``).

    ``seed`` may be an integer or an existing ``numpy.random.Generator``.
    """
    if n < 0:
        raise ValueError("n must be >= 0")
    rng = np.random.default_rng(seed)
    pts = sample_disc(rng, n, radius)
    return [Point2D(center.x + float(x), center.y + float(y)) for x, y in pts]


def distance(a: Point2D, b: Point2D) -> float:
    return math.hypot(a.x - b.x, a.y - b.y)


def sector_index(bs: Point2D, user: Point2D, sectors: SectorConfig) -> int:
    """Sector of base station ``bs`` that covers ``user``."""
    if bs.x == user.x and bs.y == user.y:
        raise ValueError("user coincides with the base station; sector is undefined")
    return sector_of_angle(math.atan2(user.y - bs.y, user.x - bs.x), sectors)
