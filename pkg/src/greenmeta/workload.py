"""SWF trace ingestion and synthetic deadline/urgency assignment."""

from __future__ import annotations

import csv
import gzip
import math
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Iterable, Sequence, TextIO

import numpy as np

from .model import Job, Urgency


class SwfFormatError(ValueError):
    pass


@dataclass(frozen=True)
class TraceRecord:
    job_id: int
    submit_time: float
    runtime: float
    n_procs: int


@dataclass(frozen=True)
class DeadlineParams:
    """Deadline/runtime factor distributions for the two urgency classes (mean, variance)."""

    hu_mean: float = 4.0
    hu_variance: float = 2.0
    ratio_high_low: float = 3.0
    lu_mean: float = 12.0
    lu_variance: float = 6.0

    def __post_init__(self):
        for name in ("hu_mean", "hu_variance", "ratio_high_low", "lu_mean", "lu_variance"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if not math.isclose(self.lu_mean, self.ratio_high_low * self.hu_mean):
            raise ValueError("lu_mean must equal ratio_high_low * hu_mean")

    def moments(self, urgency: Urgency) -> tuple[float, float]:
        if urgency is Urgency.HU:
            return self.hu_mean, self.hu_variance
        return self.lu_mean, self.lu_variance


def parse_swf(stream: Iterable[str]) -> list[TraceRecord]:
    """Job id, submit time, run time and allocated processors from SWF lines.

    Records with unknown (<= 0) runtime or processor count are dropped.
    """
    records = []
    for lineno, line in enumerate(stream, 1):
        text = line.strip()
        if not text or text.startswith(";"):
            continue
        fields = text.split()
        if len(fields) < 5:
            raise SwfFormatError(f"line {lineno}: expected at least 5 fields, got {len(fields)}")
        try:
            job_id = int(fields[0])
            submit = float(fields[1])
            runtime = float(fields[3])
            procs = int(float(fields[4]))
        except ValueError as exc:
            raise SwfFormatError(f"line {lineno}: {exc}") from None
        if runtime <= 0 or procs <= 0:
            continue
        if submit < 0:
            raise SwfFormatError(f"line {lineno}: negative submit time")
        records.append(TraceRecord(job_id, submit, runtime, procs))
    return records


def read_swf(path: str | Path) -> list[TraceRecord]:
    path = Path(path)
    opener = gzip.open if path.suffix == ".gz" else open
    with opener(path, "rt") as fh:
        return parse_swf(fh)


def scale_arrivals(records: Sequence[TraceRecord], factor: float) -> list[TraceRecord]:
    """Divide submit times by ``factor``; larger factors mean denser arrivals."""
    if not factor > 0:
        raise ValueError("arrival factor must be positive")
    return [replace(r, submit_time=r.submit_time / factor) for r in records]


def _draw_urgency(rng: np.random.Generator, hu_percent: float) -> Urgency:
    return Urgency.HU if rng.random() < hu_percent / 100.0 else Urgency.LU


def _check_percent(hu_percent: float) -> None:
    if not 0 <= hu_percent <= 100:
        raise ValueError("hu_percent must lie in [0, 100]")


def assign_urgency(records: Sequence[TraceRecord], hu_percent: float,
                   rng: np.random.Generator) -> list[tuple[TraceRecord, Urgency]]:
    _check_percent(hu_percent)
    return [(r, _draw_urgency(rng, hu_percent)) for r in records]


def draw_factor(mean: float, variance: float, rng: np.random.Generator, floor: float = 1.0) -> float:
    """Normal draw redrawn until it is at least ``floor``."""
    sd = math.sqrt(variance)
    for _ in range(10_000):
        x = rng.normal(mean, sd)
        if x >= floor:
            return float(x)
    raise RuntimeError("truncated normal redraw did not terminate")


def synthesize_deadline(record: TraceRecord, urgency: Urgency, params: DeadlineParams,
                        rng: np.random.Generator) -> Job:
    mean, var = params.moments(urgency)
    factor = draw_factor(mean, var, rng)
    return Job(
        id=record.job_id,
        submit_time=record.submit_time,
        n_cpus=record.n_procs,
        base_runtime=record.runtime,
        deadline=record.submit_time + factor * record.runtime,
        gamma=1.0,
        urgency=urgency,
    )


def record_rng(seed: int, index: int) -> np.random.Generator:
    """Independent stream for the ``index``-th record, so records can be built in any order."""
    return np.random.default_rng([seed, 1, index])


def make_jobs(records: Sequence[TraceRecord], hu_percent: float, seed: int,
              params: DeadlineParams = DeadlineParams()) -> list[Job]:
    """Urgency and deadline for every record, one RNG stream per record index."""
    _check_percent(hu_percent)
    jobs = []
    for i, rec in enumerate(records):
        rng = record_rng(seed, i)
        jobs.append(synthesize_deadline(rec, _draw_urgency(rng, hu_percent), params, rng))
    return jobs


JOB_COLUMNS = ["job_id", "submit", "n_cpus", "runtime", "deadline", "urgency"]


def dump_jobs(jobs: Iterable[Job], out: TextIO | str | Path) -> None:
    if isinstance(out, (str, Path)):
        with open(out, "w", newline="") as fh:
            return dump_jobs(jobs, fh)
    w = csv.writer(out)
    w.writerow(JOB_COLUMNS)
    for j in jobs:
        w.writerow([j.id, repr(j.submit_time), j.n_cpus, repr(j.base_runtime), repr(j.deadline), j.urgency.value])
