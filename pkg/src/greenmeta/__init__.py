"""Energy- and carbon-aware meta-scheduling of deadline-constrained HPC jobs
across geographically distributed data centers."""

from .bounds import BoundsResult, FluidCapacity, fluid_fit, lower_bound_carbon, upper_bound_profit
from .energy import (
    FrequencyLadder,
    carbon_efficiency_key,
    carbon_emission,
    clamp_frequency,
    cost_efficiency_key,
    cpu_energy,
    cpu_power,
    energy_cost,
    evaluate_placement,
    exec_time,
    frequency_ladder,
    nearest_level,
    optimal_frequency,
    profit,
    total_energy,
)
from .local import DeadlineMiss, DvsMode, Infeasible, SiteSchedule, TooWide, dvs_select, no_dvs_select, prev_dvs_select
from .meta import CycleOutcome, Mapping, PolicyId, RunMetrics, schedule_cycle, simulate
from .model import CloudSite, EnergyOutcome, Job, Reservation, TimeSlot, Urgency, builtin_catalog, site_count_total_cpus

__version__ = "0.1.0"
