"""Domain types shared across the simulator and the built-in site catalog."""

from __future__ import annotations

import enum
import json
from dataclasses import asdict, dataclass, replace
from pathlib import Path
from typing import Iterable, Optional

F_MIN_RATIO = 0.375
EXEC_PRICE_PER_CPU_SECOND = 0.40 / 3600.0
JOULES_PER_KWH = 3.6e6


class Urgency(str, enum.Enum):
    HU = "HU"
    LU = "LU"


@dataclass(frozen=True)
class CloudSite:
    """One data center.

    ``cop`` is optional because the catalog leaves it for the caller to sample;
    every energy computation requires it to be set (see :meth:`with_cop`).
    """

    id: str
    carbon_rate: float  # kg CO2 / kWh
    energy_price: float  # $ / kWh
    beta: float  # W, static power
    alpha: float  # W / GHz^3
    f_max: float  # GHz
    f_min: float  # GHz
    cpu_count: int
    exec_price: float = EXEC_PRICE_PER_CPU_SECOND  # $ / CPU-second
    cop: Optional[float] = None

    def __post_init__(self):
        if self.carbon_rate < 0:
            raise ValueError(f"{self.id}: carbon_rate must be >= 0")
        if self.energy_price < 0:
            raise ValueError(f"{self.id}: energy_price must be >= 0")
        if self.beta < 0:
            raise ValueError(f"{self.id}: beta must be >= 0")
        if not self.alpha > 0:
            raise ValueError(f"{self.id}: alpha must be > 0")
        if not 0 < self.f_min < self.f_max:
            raise ValueError(f"{self.id}: need 0 < f_min < f_max, got {self.f_min}, {self.f_max}")
        if self.cpu_count < 1:
            raise ValueError(f"{self.id}: cpu_count must be >= 1")
        if self.exec_price < 0:
            raise ValueError(f"{self.id}: exec_price must be >= 0")
        if self.cop is not None and not self.cop > 0:
            raise ValueError(f"{self.id}: cop must be > 0")

    def with_cop(self, cop: float) -> "CloudSite":
        return replace(self, cop=cop)


@dataclass(frozen=True)
class Job:
    id: int
    submit_time: float
    n_cpus: int
    base_runtime: float  # seconds at f_max
    deadline: float  # absolute
    gamma: float = 1.0
    urgency: Urgency = Urgency.LU

    def __post_init__(self):
        if self.n_cpus < 1:
            raise ValueError(f"job {self.id}: n_cpus must be >= 1")
        if not self.base_runtime > 0:
            raise ValueError(f"job {self.id}: base_runtime must be > 0")
        if not 0.0 <= self.gamma <= 1.0:
            raise ValueError(f"job {self.id}: gamma must lie in [0, 1]")
        if self.deadline < self.submit_time + self.base_runtime:
            raise ValueError(f"job {self.id}: deadline earlier than submit + runtime")

    @property
    def work(self) -> float:
        """CPU-seconds at f_max."""
        return self.n_cpus * self.base_runtime


@dataclass(frozen=True)
class TimeSlot:
    start: float
    end: float
    free_cpus: int

    def __post_init__(self):
        if not self.start < self.end:
            raise ValueError("slot start must precede end")
        if self.free_cpus < 0:
            raise ValueError("free_cpus must be >= 0")


@dataclass(frozen=True)
class Reservation:
    job_id: int
    site_id: str
    start: float
    end: float
    n_cpus: int
    frequency: float


@dataclass(frozen=True)
class EnergyOutcome:
    cpu_energy_j: float
    total_energy_j: float
    energy_cost: float
    carbon_kg: float
    profit: float


# location, carbon rate, energy price, beta, alpha, f_max, cpu count
_TABLE = [
    ("New York, USA", 0.389, 0.15, 65.0, 7.5, 1.8, 2050),
    ("Pennsylvania, USA", 0.574, 0.09, 75.0, 5.0, 1.8, 2600),
    ("California, USA", 0.275, 0.13, 60.0, 60.0, 2.4, 650),
    ("Ohio, USA", 0.817, 0.09, 75.0, 5.2, 2.4, 540),
    ("North Carolina, USA", 0.563, 0.07, 90.0, 4.5, 3.0, 600),
    ("Texas, USA", 0.664, 0.1, 105.0, 6.5, 3.0, 350),
    ("France", 0.083, 0.17, 90.0, 4.0, 3.2, 200),
    ("Australia", 0.924, 0.11, 105.0, 4.4, 3.2, 250),
]


def builtin_catalog() -> list[CloudSite]:
    """The eight reference data centers, COP unset."""
    return [
        CloudSite(
            id=loc,
            carbon_rate=rate,
            energy_price=price,
            beta=beta,
            alpha=alpha,
            f_max=f_max,
            f_min=F_MIN_RATIO * f_max,
            cpu_count=cpus,
        )
        for loc, rate, price, beta, alpha, f_max, cpus in _TABLE
    ]


def site_count_total_cpus(sites: Iterable[CloudSite]) -> int:
    return sum(s.cpu_count for s in sites)


_SITE_KEYS = {
    "id", "carbon_rate", "energy_price", "beta", "alpha",
    "f_max", "f_min", "cpu_count", "exec_price", "cop",
}


def site_from_dict(d: dict) -> CloudSite:
    unknown = set(d) - _SITE_KEYS
    if unknown:
        raise ValueError(f"unknown site keys: {sorted(unknown)}")
    d = dict(d)
    if "f_min" not in d and "f_max" in d:
        d["f_min"] = F_MIN_RATIO * d["f_max"]
    return CloudSite(**d)


def load_sites(path: str | Path) -> list[CloudSite]:
    """Read a site catalog from JSON.

    The file holds ``{"sites": [{...}, ...]}`` where each entry uses the
    :class:`CloudSite` field names. ``f_min`` defaults to 37.5% of ``f_max``;
    ``exec_price`` defaults to $0.40 per CPU-hour; ``cop`` may be omitted.
    """
    with open(path) as fh:
        raw = json.load(fh)
    entries = raw["sites"] if isinstance(raw, dict) else raw
    sites = [site_from_dict(e) for e in entries]
    ids = [s.id for s in sites]
    if len(set(ids)) != len(ids):
        raise ValueError("duplicate site ids in catalog")
    return sites


def dump_sites(sites: Iterable[CloudSite], path: str | Path) -> None:
    with open(path, "w") as fh:
        json.dump({"sites": [asdict(s) for s in sites]}, fh, indent=2)
