"""Per-site schedule: an availability profile with conservative backfilling and
the frequency-selection procedures run by the local scheduler."""

from __future__ import annotations

import csv
import enum
import math
from bisect import bisect_right
from typing import Iterable, Optional

from .energy import exec_time, frequency_ladder, start_level
from .model import CloudSite, Job, Reservation, TimeSlot


class Infeasible(Exception):
    """A job cannot be admitted on a site."""


class DeadlineMiss(Infeasible):
    pass


class TooWide(Infeasible):
    """The job asks for more CPUs than the site has."""


class DvsMode(str, enum.Enum):
    OUR = "our-dvs"
    PREV = "prev-dvs"
    NONE = "no-dvs"


class SiteSchedule:
    """Free-CPU profile of one site plus its committed reservations.

    The profile is a list of breakpoints ``_times`` with ``_free[k]`` CPUs
    available on ``[_times[k], _times[k+1])``; the last segment is unbounded.
    Reservations are never moved once committed.
    """

    def __init__(self, site: CloudSite, clock: float = 0.0):
        self.site = site
        self.clock = float(clock)
        self._times: list[float] = [self.clock]
        self._free: list[int] = [site.cpu_count]
        self.reservations: dict[int, Reservation] = {}
        self.completed: list[Reservation] = []
        self.version = 0

    def __repr__(self):
        return f"SiteSchedule({self.site.id!r}, clock={self.clock}, active={len(self.reservations)})"

    # -- profile primitives -------------------------------------------------

    def _split(self, t: float) -> int:
        """Make ``t`` a breakpoint and return its index."""
        k = bisect_right(self._times, t) - 1
        if self._times[k] == t:
            return k
        self._times.insert(k + 1, t)
        self._free.insert(k + 1, self._free[k])
        return k + 1

    def _apply(self, start: float, end: float, delta: int) -> None:
        i = self._split(start)
        j = self._split(end)
        for k in range(i, j):
            self._free[k] += delta
        # merge equal neighbours around the touched range
        lo = max(i - 1, 0)
        hi = min(j + 1, len(self._times) - 1)
        k = hi
        while k > lo:
            if self._free[k] == self._free[k - 1]:
                del self._times[k]
                del self._free[k]
            k -= 1

    def free_at(self, t: float) -> int:
        k = bisect_right(self._times, t) - 1
        return self._free[max(k, 0)]

    def window_free(self, start: float, end: float, n_cpus: int) -> bool:
        """True if ``n_cpus`` are free throughout ``[start, end)``."""
        k = max(bisect_right(self._times, start) - 1, 0)
        times, free = self._times, self._free
        while k < len(times) and times[k] < end:
            if free[k] < n_cpus:
                return False
            k += 1
        return True

    # -- queries ------------------------------------------------------------

    def free_slots(self, horizon: float) -> list[TimeSlot]:
        if not horizon > self.clock:
            raise ValueError("horizon must lie after the clock")
        slots: list[TimeSlot] = []
        times, free = self._times, self._free
        k = max(bisect_right(times, self.clock) - 1, 0)
        while k < len(times) and times[k] < horizon:
            s = max(times[k], self.clock)
            e = min(times[k + 1] if k + 1 < len(times) else math.inf, horizon)
            if slots and slots[-1].free_cpus == free[k]:
                slots[-1] = TimeSlot(slots[-1].start, e, free[k])
            else:
                slots.append(TimeSlot(s, e, free[k]))
            k += 1
        return slots

    def earliest_start(self, n_cpus: int, duration: float, latest_end: float = math.inf) -> Optional[float]:
        """Earliest ``t >= clock`` with ``n_cpus`` free on ``[t, t + duration)``.

        Returns None when no such window ends by ``latest_end``.
        """
        if n_cpus > self.site.cpu_count:
            raise TooWide(f"job needs {n_cpus} CPUs, {self.site.id} has {self.site.cpu_count}")
        times, free = self._times, self._free
        last = len(times) - 1
        cand = None
        for k in range(max(bisect_right(times, self.clock) - 1, 0), last + 1):
            if free[k] >= n_cpus:
                if cand is None:
                    cand = max(times[k], self.clock)
                    if cand + duration > latest_end:
                        return None
                if k == last or cand + duration <= times[k + 1]:
                    return cand
            else:
                cand = None
        raise AssertionError("profile must end with an unbounded free segment")

    def plan(self, job: Job, f: float) -> Optional[Reservation]:
        """Reservation the site would grant at frequency ``f`` without committing it."""
        duration = exec_time(job.base_runtime, job.gamma, f, self.site.f_max)
        if self.clock + duration > job.deadline:
            return None
        start = self.earliest_start(job.n_cpus, duration, latest_end=job.deadline)
        if start is None:
            return None
        return Reservation(job.id, self.site.id, start, start + duration, job.n_cpus, f)

    # -- mutation -----------------------------------------------------------

    def commit(self, res: Reservation) -> None:
        if res.site_id != self.site.id:
            raise ValueError("reservation belongs to another site")
        if res.job_id in self.reservations:
            raise ValueError(f"job {res.job_id} already reserved on {self.site.id}")
        if res.start < self.clock:
            raise ValueError("reservation starts before the clock")
        if not self.window_free(res.start, res.end, res.n_cpus):
            raise Infeasible(f"window [{res.start}, {res.end}) lacks {res.n_cpus} CPUs")
        self._apply(res.start, res.end, -res.n_cpus)
        self.reservations[res.job_id] = res
        self.version += 1

    def try_reserve(self, job: Job, f: float) -> Reservation:
        res = self.plan(job, f)
        if res is None:
            raise DeadlineMiss(f"job {job.id} cannot finish by {job.deadline} on {self.site.id} at {f} GHz")
        self.commit(res)
        return res

    def advance_clock(self, t: float) -> list[Reservation]:
        """Move the clock to ``t`` and return reservations that finished by then."""
        if t < self.clock:
            raise ValueError(f"clock cannot go back from {self.clock} to {t}")
        self.clock = float(t)
        done = [r for r in self.reservations.values() if r.end <= t]
        for r in done:
            del self.reservations[r.job_id]
        done.sort(key=lambda r: (r.end, r.job_id))
        self.completed.extend(done)
        k = bisect_right(self._times, t) - 1
        if k > 0:
            del self._times[:k]
            del self._free[:k]
        self._times[0] = self.clock
        return done

    def rebuilt_profile(self) -> tuple[list[float], list[int]]:
        """Profile recomputed from scratch out of the active reservations."""
        fresh = SiteSchedule(self.site, self.clock)
        for r in self.reservations.values():
            fresh._apply(max(r.start, self.clock), r.end, -r.n_cpus)
        return fresh._times, fresh._free

    def profile(self) -> tuple[list[float], list[int]]:
        return list(self._times), list(self._free)


def candidate_levels(site: CloudSite, gamma: float, mode: DvsMode) -> range:
    if mode is DvsMode.OUR:
        return range(start_level(site, gamma), 5)
    if mode is DvsMode.PREV:
        return range(0, 5)
    return range(4, 5)


def plan_dvs(sched: SiteSchedule, job: Job, mode: DvsMode) -> Optional[Reservation]:
    """Walk the ladder upward from the mode's start level; first feasible level wins."""
    if job.n_cpus > sched.site.cpu_count:
        return None
    ladder = frequency_ladder(sched.site)
    for level in candidate_levels(sched.site, job.gamma, mode):
        res = sched.plan(job, ladder[level])
        if res is not None:
            return res
    return None


def select(sched: SiteSchedule, job: Job, mode: DvsMode) -> Optional[Reservation]:
    res = plan_dvs(sched, job, mode)
    if res is not None:
        sched.commit(res)
    return res


def dvs_select(sched: SiteSchedule, job: Job) -> Optional[Reservation]:
    return select(sched, job, DvsMode.OUR)


def prev_dvs_select(sched: SiteSchedule, job: Job) -> Optional[Reservation]:
    return select(sched, job, DvsMode.PREV)


def no_dvs_select(sched: SiteSchedule, job: Job) -> Optional[Reservation]:
    return select(sched, job, DvsMode.NONE)


RESERVATION_COLUMNS = ["job_id", "site", "start", "end", "n_cpus", "frequency"]


def dump_reservations(reservations: Iterable[Reservation], path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(RESERVATION_COLUMNS)
        for r in sorted(reservations, key=lambda r: (r.start, r.job_id)):
            w.writerow([r.job_id, r.site_id, repr(r.start), repr(r.end), r.n_cpus, repr(r.frequency)])
