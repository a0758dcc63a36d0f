"""Loose lower bound on average carbon and upper bound on average profit.

Jobs are all known at once, may be molded to any width (pure CPU-second
accounting) and are admitted by f_max runtime while being charged energy at
the clamped optimal frequency.
"""

from __future__ import annotations

from bisect import insort
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

from .energy import (
    carbon_efficiency_key,
    clamp_frequency,
    cooling_factor,
    cost_efficiency_key,
    cpu_power,
    exec_time,
    optimal_frequency,
)
from .model import JOULES_PER_KWH, CloudSite, Job


@dataclass
class FluidCapacity:
    """CPU-second ledger of one site from ``t0`` onward.

    Accepted work is kept as ``(deadline, area)`` pairs; it is packed
    earliest-first with no fragmentation, so admission is the preemptive EDF
    test: for every deadline D, the area due by D fits in ``total_cpus * (D - t0)``.
    """

    total_cpus: int
    t0: float = 0.0
    _due: list[tuple[float, float]] = field(default_factory=list, repr=False)

    @property
    def committed(self) -> float:
        return sum(a for _, a in self._due)

    def committed_before(self, t: float) -> float:
        """CPU-seconds consumed in ``[t0, t]`` by the earliest-first packing."""
        return min(self.committed, self.total_cpus * max(t - self.t0, 0.0))

    def admits(self, area: float, deadline: float) -> bool:
        span = deadline - self.t0
        if span <= 0 or area / self.total_cpus > span:
            return False
        due_by = area
        for d, a in self._due:
            if d <= deadline:
                due_by += a
        if due_by > self.total_cpus * span:
            return False
        # later deadlines must still be met once this job is slotted in ahead of them
        running = 0.0
        for d, a in self._due:
            running += a
            if d > deadline and running + area > self.total_cpus * (d - self.t0):
                return False
        return True

    def debit(self, area: float, deadline: float) -> None:
        insort(self._due, (deadline, area))


def fluid_fit(cap: FluidCapacity, job: Job) -> bool:
    """Admit ``job`` into the ledger if its CPU-seconds fit before its deadline."""
    if cap.admits(job.work, job.deadline):
        cap.debit(job.work, job.deadline)
        return True
    return False


@dataclass
class BoundsResult:
    twl: float = 0.0  # CPU-seconds at f_max
    tce: float = 0.0  # kg
    tp: float = 0.0  # $
    scheduled_jobs: int = 0
    dropped_jobs: int = 0

    @property
    def avg_carbon(self) -> Optional[float]:
        return self.tce / self.twl if self.twl > 0 else None

    @property
    def avg_profit(self) -> Optional[float]:
        return self.tp / self.twl if self.twl > 0 else None


def _bound(jobs: Sequence[Job], sites: Sequence[CloudSite], key: Callable[[CloudSite], float],
           t0: Optional[float], literal_profit: bool) -> BoundsResult:
    order = sorted(sites, key=lambda s: (key(s), s.id))
    if t0 is None:
        t0 = min((j.submit_time for j in jobs), default=0.0)
    caps = {s.id: FluidCapacity(s.cpu_count, t0) for s in order}
    result = BoundsResult()
    for job in sorted(jobs, key=lambda j: (j.deadline, j.id)):
        site = next((s for s in order if fluid_fit(caps[s.id], job)), None)
        if site is None:
            result.dropped_jobs += 1
            continue
        f = clamp_frequency(site, optimal_frequency(site, job.gamma))
        t_opt = exec_time(job.base_runtime, job.gamma, f, site.f_max)
        energy_j = job.n_cpus * t_opt * cpu_power(site, f) * cooling_factor(site)
        kwh = energy_j / JOULES_PER_KWH
        price = 1.0 if literal_profit else site.exec_price
        result.twl += job.work
        result.tce += site.carbon_rate * kwh
        result.tp += job.n_cpus * t_opt * price - site.energy_price * kwh
        result.scheduled_jobs += 1
    return result


def lower_bound_carbon(jobs: Sequence[Job], sites: Sequence[CloudSite], t0: Optional[float] = None,
                       literal_profit: bool = False) -> BoundsResult:
    """Sites packed in carbon-efficiency order; ``avg_carbon`` is the bound."""
    return _bound(jobs, sites, carbon_efficiency_key, t0, literal_profit)


def upper_bound_profit(jobs: Sequence[Job], sites: Sequence[CloudSite], t0: Optional[float] = None,
                       literal_profit: bool = False) -> BoundsResult:
    """Sites packed in energy-cost-efficiency order; ``avg_profit`` is the bound.

    ``literal_profit`` charges revenue at one dollar per CPU-second instead of
    the site's execution price.
    """
    return _bound(jobs, sites, cost_efficiency_key, t0, literal_profit)
