"""Sweep runner: builds paired workloads, runs every policy on them and writes CSV."""

from __future__ import annotations

import csv
import hashlib
import logging
import math
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .bounds import lower_bound_carbon, upper_bound_profit
from .local import DvsMode
from .meta import DEFAULT_POLICIES, Mapping, PolicyId, simulate
from .model import CloudSite, Job, builtin_catalog, load_sites
from .workload import DeadlineParams, TraceRecord, make_jobs, read_swf, scale_arrivals

log = logging.getLogger(__name__)

SAMPLE_TRACE = Path(__file__).with_name("data") / "sample.swf"
COP_RANGE = (0.6, 3.5)

# mean and per-class standard deviation of the varied site attribute
VARIATIONS = {
    "carbon_rate": (0.2, {"low": 0.05, "mid": 0.2, "high": 0.4}),
    "energy_price": (0.1, {"low": 0.01, "mid": 0.02, "high": 0.05}),
    "efficiency": (0.4, {"low": 0.05, "mid": 0.12, "high": 0.2}),
}
VARY_ALIASES = {"carbon": "carbon_rate", "price": "energy_price", "efficiency": "efficiency"}
VARIATION_HU_PERCENT = 40.0
VARIATION_ARRIVAL_FACTOR = 100.0


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    trace: Path = SAMPLE_TRACE
    seed: int = 0
    hu_percents: list[float] = field(default_factory=lambda: [0, 20, 40, 60, 80, 100])
    arrival_factors: list[float] = field(default_factory=lambda: [10, 100, 1000, 10000])
    policies: list[Mapping] = field(default_factory=lambda: list(DEFAULT_POLICIES))
    dvs_modes: list[DvsMode] = field(default_factory=lambda: [DvsMode.OUR])
    cycle_interval: float = 50.0
    max_jobs: Optional[int] = 500
    sites_path: Optional[Path] = None
    vary: Optional[tuple[str, str]] = None
    bounds: bool = False
    retry_rejected: bool = False
    deadline_params: DeadlineParams = field(default_factory=DeadlineParams)

    def validate(self) -> None:
        if isinstance(self.seed, bool) or not isinstance(self.seed, (int, np.integer)):
            raise ConfigError("seed must be an explicit integer")
        for name in ("hu_percents", "arrival_factors", "policies", "dvs_modes"):
            if not getattr(self, name):
                raise ConfigError(f"{name} must not be empty")
        if any(not 0 <= h <= 100 for h in self.hu_percents):
            raise ConfigError("hu_percents must lie in [0, 100]")
        if any(not a > 0 for a in self.arrival_factors):
            raise ConfigError("arrival factors must be positive")
        if not self.cycle_interval > 0:
            raise ConfigError("cycle_interval must be positive")
        if self.max_jobs is not None and self.max_jobs < 1:
            raise ConfigError("max_jobs must be >= 1")
        if self.vary is not None:
            factor, cls = self.vary
            if factor not in VARIATIONS:
                raise ConfigError(f"unknown variation factor {factor!r}")
            if cls not in VARIATIONS[factor][1]:
                raise ConfigError(f"unknown variation class {cls!r}")
        if not Path(self.trace).is_file():
            raise ConfigError(f"trace not readable: {self.trace}")
        if self.sites_path is not None and not Path(self.sites_path).is_file():
            raise ConfigError(f"site catalog not readable: {self.sites_path}")


@dataclass
class ReportRow:
    scenario: str
    policy: str
    dvs_mode: str
    hu_percent: float
    arrival_factor: float
    total_carbon_kg: float
    avg_carbon_per_workload: Optional[float]
    total_profit: float
    total_energy_cost: float
    total_energy_kwh: float
    workload_cpu_seconds: float
    jobs_accepted: int
    jobs_rejected: int
    lb_avg_carbon: Optional[float]
    ub_avg_profit: Optional[float]
    seed: int
    input_hash: str


COLUMNS = [f.name for f in fields(ReportRow)]
_INT_COLUMNS = {"jobs_accepted", "jobs_rejected", "seed"}
_STR_COLUMNS = {"scenario", "policy", "dvs_mode", "input_hash"}


@dataclass
class MetricsReport:
    rows: list[ReportRow] = field(default_factory=list)

    def rounded(self) -> "MetricsReport":
        """Copy with every float cut to the precision written to CSV."""
        out = []
        for r in self.rows:
            vals = {}
            for k in COLUMNS:
                v = getattr(r, k)
                vals[k] = float(_fmt(v)) if isinstance(v, float) else v
            out.append(ReportRow(**vals))
        return MetricsReport(out)


def sample_cops(n_sites: int, seed: int) -> list[float]:
    rng = np.random.default_rng([seed, 0])
    return [float(x) for x in rng.uniform(*COP_RANGE, size=n_sites)]


def prepare_sites(sites: Sequence[CloudSite], seed: int) -> list[CloudSite]:
    """Attach one COP per site, drawn once per seed."""
    return [s.with_cop(c) for s, c in zip(sites, sample_cops(len(sites), seed))]


def input_hash(jobs: Sequence[Job], sites: Sequence[CloudSite]) -> str:
    h = hashlib.sha256()
    for j in jobs:
        h.update(repr((j.id, j.submit_time, j.n_cpus, j.base_runtime, j.deadline, j.gamma, j.urgency.value)).encode())
    for s in sites:
        h.update(repr((s.id, s.carbon_rate, s.energy_price, s.beta, s.alpha, s.f_max, s.f_min,
                       s.cpu_count, s.exec_price, s.cop)).encode())
    return h.hexdigest()[:16]


def _catalog(config: ExperimentConfig) -> list[CloudSite]:
    return load_sites(config.sites_path) if config.sites_path else builtin_catalog()


def _records(config: ExperimentConfig) -> list[TraceRecord]:
    recs = read_swf(config.trace)
    if config.max_jobs is not None:
        recs = recs[: config.max_jobs]
    return recs


def run_point(records: Sequence[TraceRecord], sites: Sequence[CloudSite], config: ExperimentConfig,
              hu_percent: float, arrival_factor: float, scenario: str = "base") -> list[ReportRow]:
    """All configured policies on one paired workload."""
    jobs = make_jobs(scale_arrivals(records, arrival_factor), hu_percent, config.seed, config.deadline_params)
    digest = input_hash(jobs, sites)
    lb = ub = None
    if config.bounds:
        lb = lower_bound_carbon(jobs, sites).avg_carbon
        ub = upper_bound_profit(jobs, sites).avg_profit
    rows = []
    for mapping in config.policies:
        for mode in config.dvs_modes:
            policy = PolicyId(mapping, mode)
            m = simulate(jobs, sites, policy, config.cycle_interval, config.retry_rejected)
            log.info("%s hu=%s af=%s %s: accepted %d rejected %d", scenario, hu_percent, arrival_factor,
                     policy, m.jobs_accepted, m.jobs_rejected)
            rows.append(ReportRow(
                scenario=scenario,
                policy=mapping.value,
                dvs_mode=mode.value,
                hu_percent=float(hu_percent),
                arrival_factor=float(arrival_factor),
                total_carbon_kg=m.total_carbon_kg,
                avg_carbon_per_workload=m.avg_carbon,
                total_profit=m.total_profit,
                total_energy_cost=m.total_energy_cost,
                total_energy_kwh=m.total_energy_kwh,
                workload_cpu_seconds=m.workload_cpu_seconds,
                jobs_accepted=m.jobs_accepted,
                jobs_rejected=m.jobs_rejected,
                lb_avg_carbon=lb,
                ub_avg_profit=ub,
                seed=int(config.seed),
                input_hash=digest,
            ))
    return rows


def run(config: ExperimentConfig) -> MetricsReport:
    config.validate()
    if config.vary is not None:
        return variation_experiment(config, *config.vary)
    records = _records(config)
    sites = prepare_sites(_catalog(config), config.seed)
    report = MetricsReport()
    for hu in config.hu_percents:
        for af in config.arrival_factors:
            report.rows.extend(run_point(records, sites, config, hu, af))
    return report


def _truncated_normal(rng, mean, sd, lo, hi=math.inf):
    if sd == 0:
        return mean
    while True:
        x = float(rng.normal(mean, sd))
        if lo < x < hi:
            return x


def vary_sites(sites: Sequence[CloudSite], factor: str, cls: str, seed: int) -> list[CloudSite]:
    """Resample one attribute per site from the class's normal distribution."""
    if factor not in VARIATIONS:
        raise ValueError(f"unknown variation factor {factor!r}")
    mean, sds = VARIATIONS[factor]
    if cls not in sds:
        raise ValueError(f"unknown variation class {cls!r}")
    rng = np.random.default_rng([seed, 2])
    out = []
    for s in sites:
        if factor == "efficiency":
            eff = _truncated_normal(rng, mean, sds[cls], 0.0, 1.0)
            out.append(replace(s, cop=efficiency_to_cop(eff)))
        else:
            out.append(replace(s, **{factor: _truncated_normal(rng, mean, sds[cls], 0.0)}))
    return out


def efficiency_to_cop(eff: float) -> float:
    """Inverse of efficiency = COP / (COP + 1)."""
    if not 0 < eff < 1:
        raise ValueError("efficiency must lie in (0, 1)")
    return eff / (1.0 - eff)


def variation_experiment(config: ExperimentConfig, factor: str, cls: str) -> MetricsReport:
    factor = VARY_ALIASES.get(factor, factor)
    config = replace(config, vary=(factor, cls))
    config.validate()
    records = _records(config)
    sites = vary_sites(prepare_sites(_catalog(config), config.seed), factor, cls, config.seed)
    rows = run_point(records, sites, config, VARIATION_HU_PERCENT, VARIATION_ARRIVAL_FACTOR,
                     scenario=f"{factor}:{cls}")
    return MetricsReport(rows)


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, float):
        return f"{v:.6g}"
    return str(v)


def emit_csv(report: MetricsReport, path: str | Path) -> None:
    path = Path(path)
    try:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(COLUMNS)
            for r in report.rows:
                w.writerow([_fmt(getattr(r, c)) for c in COLUMNS])
    except OSError as exc:
        raise OSError(f"cannot write report to {path}: {exc}") from exc


def _parse(col: str, text: str):
    if col in _STR_COLUMNS:
        return text
    if text == "":
        return None
    if col in _INT_COLUMNS:
        return int(text)
    return float(text)


def read_csv(path: str | Path) -> MetricsReport:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header != COLUMNS:
            raise ValueError(f"{path}: unexpected header {header}")
        return MetricsReport([ReportRow(**{c: _parse(c, v) for c, v in zip(COLUMNS, row)}) for row in reader])


PLOT_METRICS = ["total_carbon_kg", "avg_carbon_per_workload", "total_profit", "total_energy_cost",
                "workload_cpu_seconds"]


def write_plot_data(report: MetricsReport, directory: str | Path) -> list[Path]:
    """One CSV per (metric, x axis, fixed other axis): x column plus one column per policy."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    written = []
    series = sorted({f"{r.policy}/{r.dvs_mode}" for r in report.rows})
    axes = [("hu_percent", "arrival_factor"), ("arrival_factor", "hu_percent")]
    for scenario in sorted({r.scenario for r in report.rows}):
        rows = [r for r in report.rows if r.scenario == scenario]
        for x, other in axes:
            for fixed in sorted({getattr(r, other) for r in rows}):
                sub = [r for r in rows if getattr(r, other) == fixed]
                xs = sorted({getattr(r, x) for r in sub})
                if len(xs) < 2:
                    continue
                for metric in PLOT_METRICS:
                    name = f"{scenario.replace(':', '-')}_{metric}_vs_{x}_{other}{_fmt(fixed)}.csv"
                    p = directory / name
                    cell = {(getattr(r, x), f"{r.policy}/{r.dvs_mode}"): getattr(r, metric) for r in sub}
                    with open(p, "w", newline="") as fh:
                        w = csv.writer(fh, lineterminator="\n")
                        w.writerow([x] + series)
                        for xv in xs:
                            w.writerow([_fmt(xv)] + [_fmt(cell.get((xv, s))) for s in series])
                    written.append(p)
    return written
