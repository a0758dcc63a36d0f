"""Meta-scheduler: mapping policies over a set of site schedules and the
cycle-driven simulation loop."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Optional, Sequence

from .energy import carbon_efficiency_key, cost_efficiency_key, evaluate_placement
from .local import DvsMode, SiteSchedule, plan_dvs
from .model import JOULES_PER_KWH, CloudSite, EnergyOutcome, Job, Reservation


class Mapping(str, enum.Enum):
    GMCE = "gmce"
    GMP = "gmp"
    MCE_MCE = "mce-mce"
    MP_MP = "mp-mp"
    MCE_MP = "mce-mp"
    EDF_EST = "edf-est"


DEFAULT_POLICIES = (Mapping.GMCE, Mapping.MCE_MCE, Mapping.MCE_MP, Mapping.GMP, Mapping.MP_MP)


@dataclass(frozen=True)
class PolicyId:
    mapping: Mapping
    dvs: DvsMode = DvsMode.OUR

    @classmethod
    def parse(cls, mapping: str, dvs: str = DvsMode.OUR.value) -> "PolicyId":
        try:
            return cls(Mapping(mapping.lower()), DvsMode(dvs.lower()))
        except ValueError:
            raise ValueError(f"unknown policy/dvs combination {mapping!r}/{dvs!r}") from None

    def __str__(self):
        return f"{self.mapping.value}/{self.dvs.value}"


@dataclass(frozen=True)
class Placement:
    job: Job
    reservation: Reservation
    outcome: EnergyOutcome


@dataclass
class CycleOutcome:
    placements: list[Placement] = field(default_factory=list)
    rejected: list[Job] = field(default_factory=list)


RejectHook = Callable[[Job, Sequence[SiteSchedule]], None]


def _place(sched: SiteSchedule, job: Job, res: Reservation) -> Placement:
    sched.commit(res)
    return Placement(job, res, evaluate_placement(sched.site, job, res.frequency))


def _by_deadline(queue: Iterable[Job]) -> list[Job]:
    return sorted(queue, key=lambda j: (j.deadline, j.id))


def placement_fitness(job: Job, sched: SiteSchedule, dvs_mode: DvsMode, kind: str) -> Optional[float]:
    """Carbon (kg) or profit ($) the site would realise for the job; None if infeasible.

    Runs the DVS procedure as a dry run, so the frequency is the one that would be granted.
    """
    res = plan_dvs(sched, job, dvs_mode)
    if res is None:
        return None
    out = evaluate_placement(sched.site, job, res.frequency)
    if kind == "carbon":
        return out.carbon_kg
    if kind == "profit":
        return out.profit
    raise ValueError(f"unknown fitness kind {kind!r}")


# -- greedy ----------------------------------------------------------------

def greedy_map(queue, sites: Sequence[SiteSchedule], site_key: Callable[[CloudSite], float],
               dvs_mode: DvsMode, on_reject: Optional[RejectHook] = None) -> CycleOutcome:
    """Earliest deadline first; sites tried in ascending ``site_key`` order."""
    order = sorted(sites, key=lambda s: (site_key(s.site), s.site.id))
    out = CycleOutcome()
    for job in _by_deadline(queue):
        for sched in order:
            res = plan_dvs(sched, job, dvs_mode)
            if res is not None:
                out.placements.append(_place(sched, job, res))
                break
        else:
            if on_reject:
                on_reject(job, sites)
            out.rejected.append(job)
    return out


# -- two phase (min-min style) -------------------------------------------

@dataclass(frozen=True)
class Objective:
    """Scores a hypothetical placement; ``minimize`` picks the direction."""

    score: Callable[[Job, SiteSchedule, Reservation], float]
    minimize: bool

    def key(self, job, sched, res) -> float:
        v = self.score(job, sched, res)
        return v if self.minimize else -v


def _carbon(job, sched, res):
    return evaluate_placement(sched.site, job, res.frequency).carbon_kg


def _profit(job, sched, res):
    return evaluate_placement(sched.site, job, res.frequency).profit


MIN_CARBON = Objective(_carbon, minimize=True)
MAX_PROFIT = Objective(_profit, minimize=False)


class _PlanCache:
    """Dry-run plans per (job, site), reused while still valid.

    Within a cycle capacity only shrinks, so a cached plan whose window is still
    free is still the earliest feasible one, and a cached failure stays a failure.
    """

    def __init__(self, sites, dvs_mode):
        self.sites = sites
        self.mode = dvs_mode
        self._entries: dict[tuple[int, int], tuple[int, Optional[Reservation]]] = {}

    def get(self, job: Job, si: int) -> Optional[Reservation]:
        sched = self.sites[si]
        hit = self._entries.get((job.id, si))
        if hit is not None:
            version, res = hit
            if version == sched.version:
                return res
            if res is None or sched.window_free(res.start, res.end, res.n_cpus):
                self._entries[(job.id, si)] = (sched.version, res)
                return res
        res = plan_dvs(sched, job, self.mode)
        self._entries[(job.id, si)] = (sched.version, res)
        return res


def two_phase_map(queue, sites: Sequence[SiteSchedule], fitness1: Objective, pick2: Objective,
                  dvs_mode: DvsMode, on_reject: Optional[RejectHook] = None) -> CycleOutcome:
    """Repeatedly pick each job's best site by ``fitness1`` and commit the pair that is
    best by ``pick2``. Jobs with no feasible site are dropped.

    A commit only touches one site, so after the first round each pending job
    re-plans on that site alone and keeps its other options.
    """
    out = CycleOutcome()
    cache = _PlanCache(sites, dvs_mode)
    options: dict[int, dict[int, tuple[float, Reservation]]] = {}
    best: dict[int, tuple[tuple[float, str], int, Reservation]] = {}
    pick: dict[int, tuple[float, int, str]] = {}

    def refresh(job, site_indices):
        opts = options.setdefault(job.id, {})
        for si in site_indices:
            res = cache.get(job, si)
            if res is None:
                opts.pop(si, None)
            elif si not in opts or opts[si][1] != res:
                opts[si] = (fitness1.key(job, sites[si], res), res)
        if not opts:
            return False
        si = min(opts, key=lambda i: (opts[i][0], sites[i].site.id))
        res = opts[si][1]
        if job.id not in best or best[job.id][1:] != (si, res):
            best[job.id] = ((opts[si][0], sites[si].site.id), si, res)
            pick[job.id] = (pick2.key(job, sites[si], res), job.id, sites[si].site.id)
        return True

    pending = sorted(queue, key=lambda j: j.id)
    touched = range(len(sites))
    while pending:
        survivors = []
        for job in pending:
            if refresh(job, touched):
                survivors.append(job)
            else:
                if on_reject:
                    on_reject(job, sites)
                out.rejected.append(job)
        pending = survivors
        if not pending:
            break
        job = min(pending, key=lambda j: pick[j.id])
        _, si, res = best[job.id]
        out.placements.append(_place(sites[si], job, res))
        pending = [j for j in pending if j.id != job.id]
        touched = (si,)
    return out


# -- EDF-EST ---------------------------------------------------------------

def edf_est_map(queue, sites: Sequence[SiteSchedule], dvs_mode: DvsMode,
                on_reject: Optional[RejectHook] = None) -> CycleOutcome:
    """Earliest deadline first; sites ordered by earliest start of the f_max-length window."""
    out = CycleOutcome()
    for job in _by_deadline(queue):
        ranked = []
        for sched in sites:
            if job.n_cpus > sched.site.cpu_count:
                continue
            est = sched.earliest_start(job.n_cpus, job.base_runtime)
            ranked.append((est, sched.site.id, sched))
        ranked.sort(key=lambda r: (r[0], r[1]))
        for _, _, sched in ranked:
            res = plan_dvs(sched, job, dvs_mode)
            if res is not None:
                out.placements.append(_place(sched, job, res))
                break
        else:
            if on_reject:
                on_reject(job, sites)
            out.rejected.append(job)
    return out


def schedule_cycle(queue, sites: Sequence[SiteSchedule], policy: PolicyId,
                   on_reject: Optional[RejectHook] = None) -> CycleOutcome:
    queue = list(queue)
    for sched in sites:
        for job in queue:
            if job.submit_time > sched.clock:
                raise ValueError(f"job {job.id} submitted after the current clock")
    m, mode = policy.mapping, policy.dvs
    if m is Mapping.GMCE:
        return greedy_map(queue, sites, carbon_efficiency_key, mode, on_reject)
    if m is Mapping.GMP:
        return greedy_map(queue, sites, cost_efficiency_key, mode, on_reject)
    if m is Mapping.MCE_MCE:
        return two_phase_map(queue, sites, MIN_CARBON, MIN_CARBON, mode, on_reject)
    if m is Mapping.MP_MP:
        return two_phase_map(queue, sites, MAX_PROFIT, MAX_PROFIT, mode, on_reject)
    if m is Mapping.MCE_MP:
        return two_phase_map(queue, sites, MIN_CARBON, MAX_PROFIT, mode, on_reject)
    if m is Mapping.EDF_EST:
        return edf_est_map(queue, sites, mode, on_reject)
    raise ValueError(f"unhandled mapping {m}")


# -- simulation ------------------------------------------------------------

@dataclass
class RunMetrics:
    total_carbon_kg: float = 0.0
    total_profit: float = 0.0
    total_energy_cost: float = 0.0
    total_energy_j: float = 0.0
    workload_cpu_seconds: float = 0.0
    jobs_accepted: int = 0
    jobs_rejected: int = 0
    placements: list[Placement] = field(default_factory=list, repr=False)
    rejected: list[Job] = field(default_factory=list, repr=False)

    @property
    def total_energy_kwh(self) -> float:
        return self.total_energy_j / JOULES_PER_KWH

    @property
    def avg_carbon(self) -> Optional[float]:
        """kg CO2 per CPU-second of executed workload."""
        return self.total_carbon_kg / self.workload_cpu_seconds if self.workload_cpu_seconds else None

    @property
    def avg_profit(self) -> Optional[float]:
        return self.total_profit / self.workload_cpu_seconds if self.workload_cpu_seconds else None

    def add(self, p: Placement) -> None:
        self.placements.append(p)
        self.jobs_accepted += 1
        self.total_carbon_kg += p.outcome.carbon_kg
        self.total_profit += p.outcome.profit
        self.total_energy_cost += p.outcome.energy_cost
        self.total_energy_j += p.outcome.total_energy_j
        self.workload_cpu_seconds += p.job.work


def simulate(jobs: Sequence[Job], sites: Sequence[CloudSite], policy: PolicyId,
             cycle_interval: float = 50.0, retry_rejected: bool = False,
             on_reject: Optional[RejectHook] = None,
             on_cycle: Optional[Callable[[float, CycleOutcome, Sequence[SiteSchedule]], None]] = None,
             ) -> RunMetrics:
    """Run the meta-scheduler every ``cycle_interval`` seconds over the job stream.

    A job becomes visible at the first cycle boundary at or after its submit time.
    Rejected jobs are dropped unless ``retry_rejected`` is set, in which case they
    are re-queued while they could still finish at f_max on an idle machine.
    """
    if not cycle_interval > 0:
        raise ValueError("cycle_interval must be positive")
    jobs = sorted(jobs, key=lambda j: (j.submit_time, j.id))
    metrics = RunMetrics()
    if not jobs:
        return metrics

    def boundary(t):
        return math.ceil(t / cycle_interval) * cycle_interval

    t = boundary(jobs[0].submit_time)
    scheds = [SiteSchedule(s, clock=t) for s in sites]
    queue: list[Job] = []
    i = 0
    while i < len(jobs) or queue:
        while i < len(jobs) and jobs[i].submit_time <= t:
            queue.append(jobs[i])
            i += 1
        for s in scheds:
            s.advance_clock(t)
        outcome = schedule_cycle(queue, scheds, policy, on_reject)
        for p in outcome.placements:
            metrics.add(p)
        if on_cycle:
            on_cycle(t, outcome, scheds)
        t_next = t + cycle_interval
        if retry_rejected:
            queue = [j for j in outcome.rejected if t_next + j.base_runtime <= j.deadline]
            dropped = [j for j in outcome.rejected if t_next + j.base_runtime > j.deadline]
        else:
            queue, dropped = [], outcome.rejected
        metrics.rejected.extend(dropped)
        metrics.jobs_rejected += len(dropped)
        if not queue and i < len(jobs):
            t_next = max(t_next, boundary(jobs[i].submit_time))
        t = t_next
    return metrics
