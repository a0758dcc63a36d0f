"""Power, energy, cost, carbon and profit of running a job at a given frequency,
plus the energy-optimal operating frequency and its discrete ladder."""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

from .model import JOULES_PER_KWH, CloudSite, EnergyOutcome

N_LEVELS = 5
_FREQ_EPS = 1e-9
_SEARCH_TOL = 1e-12


def cpu_power(site: CloudSite, f: float) -> float:
    """Per-CPU power draw in watts: static part plus cubic dynamic part."""
    if not f > 0:
        raise ValueError(f"frequency must be positive, got {f}")
    return site.beta + site.alpha * f ** 3


def exec_time(base_runtime: float, gamma: float, f: float, f_max: float) -> float:
    """Runtime at ``f`` given the runtime at ``f_max`` and the CPU-boundness ``gamma``."""
    if not f > 0:
        raise ValueError(f"frequency must be positive, got {f}")
    if f > f_max * (1 + _FREQ_EPS):
        raise ValueError(f"frequency {f} above f_max {f_max}")
    return base_runtime * (gamma * (f_max / f - 1.0) + 1.0)


def _check_range(site: CloudSite, f: float) -> None:
    if f < site.f_min * (1 - _FREQ_EPS) or f > site.f_max * (1 + _FREQ_EPS):
        raise ValueError(f"{site.id}: frequency {f} outside [{site.f_min}, {site.f_max}]")


def cpu_energy(site: CloudSite, job, f: float) -> float:
    """Joules drawn by the job's CPUs (no cooling)."""
    _check_range(site, f)
    t = exec_time(job.base_runtime, job.gamma, f, site.f_max)
    return cpu_power(site, f) * job.n_cpus * t


def cooling_factor(site: CloudSite) -> float:
    """Multiplier taking CPU energy to CPU + cooling energy."""
    if site.cop is None:
        raise ValueError(f"{site.id}: COP is not set")
    if not site.cop > 0:
        raise ValueError(f"{site.id}: COP must be positive")
    return 1.0 + 1.0 / site.cop


def total_energy(site: CloudSite, cpu_energy_j: float) -> float:
    return cooling_factor(site) * cpu_energy_j


def energy_cost(site: CloudSite, total_energy_j: float) -> float:
    if total_energy_j < 0:
        raise ValueError("energy must be non-negative")
    return total_energy_j / JOULES_PER_KWH * site.energy_price


def carbon_emission(site: CloudSite, total_energy_j: float) -> float:
    if total_energy_j < 0:
        raise ValueError("energy must be non-negative")
    return total_energy_j / JOULES_PER_KWH * site.carbon_rate


def profit(site: CloudSite, job, cost: float) -> float:
    """Revenue for the job's CPU-seconds at f_max minus the energy bill. May be negative."""
    return job.base_runtime * job.n_cpus * site.exec_price - cost


def evaluate_placement(site: CloudSite, job, f: float) -> EnergyOutcome:
    ec = cpu_energy(site, job, f)
    et = total_energy(site, ec)
    cost = energy_cost(site, et)
    return EnergyOutcome(
        cpu_energy_j=ec,
        total_energy_j=et,
        energy_cost=cost,
        carbon_kg=carbon_emission(site, et),
        profit=profit(site, job, cost),
    )


def energy_derivative(beta: float, alpha: float, f_max: float, gamma: float, f: float) -> float:
    """d/df of per-CPU, per-unit-runtime energy (beta + alpha f^3)(gamma (f_max/f - 1) + 1)."""
    slowdown = 1.0 - gamma + gamma * f_max / f
    return 3.0 * alpha * f * f * slowdown - gamma * f_max * (beta + alpha * f ** 3) / (f * f)


@lru_cache(maxsize=None)
def _stationary_point(beta: float, alpha: float, f_max: float, gamma: float) -> float:
    # The derivative times f^2 is 3(1-g)a f^4 + 2 g fmax a f^3 - g fmax b, increasing
    # in f > 0, so the sign change is unique and bisection is safe.
    if gamma == 1.0:
        return (beta / (2.0 * alpha)) ** (1.0 / 3.0)
    lo = f_max * 1e-9
    if energy_derivative(beta, alpha, f_max, gamma, lo) >= 0:
        raise ArithmeticError("energy minimum not bracketed from below")
    hi = f_max
    for _ in range(200):
        if energy_derivative(beta, alpha, f_max, gamma, hi) > 0:
            break
        lo, hi = hi, hi * 2.0
    else:
        raise ArithmeticError("energy minimum not bracketed from above")
    while hi - lo > _SEARCH_TOL * max(1.0, hi):
        mid = 0.5 * (lo + hi)
        if energy_derivative(beta, alpha, f_max, gamma, mid) > 0:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


def optimal_frequency(site: CloudSite, gamma: float = 1.0) -> float:
    """Unclamped frequency minimising per-CPU energy for a job of CPU-boundness ``gamma``.

    For ``gamma == 0`` runtime does not depend on frequency and energy only grows
    with it, so the lowest legal frequency is returned.
    """
    if not site.alpha > 0:
        raise ValueError("alpha must be positive")
    if not 0.0 <= gamma <= 1.0:
        raise ValueError("gamma must lie in [0, 1]")
    if gamma == 0.0:
        return site.f_min
    if site.beta == 0:
        # Energy keeps falling as f -> 0; the lower bound of the legal range is the answer.
        return site.f_min
    return _stationary_point(site.beta, site.alpha, site.f_max, float(gamma))


def clamp_frequency(site: CloudSite, f: float) -> float:
    return min(max(f, site.f_min), site.f_max)


@dataclass(frozen=True)
class FrequencyLadder:
    levels: tuple[float, ...]

    def __post_init__(self):
        if len(self.levels) != N_LEVELS:
            raise ValueError(f"ladder needs {N_LEVELS} levels")
        if any(b <= a for a, b in zip(self.levels, self.levels[1:])):
            raise ValueError("ladder levels must be strictly ascending")

    def __len__(self):
        return len(self.levels)

    def __getitem__(self, i):
        return self.levels[i]


@lru_cache(maxsize=None)
def frequency_ladder(site: CloudSite) -> FrequencyLadder:
    step = (site.f_max - site.f_min) / (N_LEVELS - 1)
    levels = [site.f_min + k * step for k in range(N_LEVELS - 1)] + [site.f_max]
    return FrequencyLadder(tuple(levels))


def nearest_level(ladder: FrequencyLadder, f: float) -> tuple[int, float]:
    """Closest ladder level to ``f``; an exact tie goes to the higher level."""
    best = 0
    best_d = abs(ladder[0] - f)
    for i in range(1, len(ladder)):
        d = abs(ladder[i] - f)
        if d <= best_d + 1e-12:
            best, best_d = i, min(d, best_d)
    return best, ladder[best]


def start_level(site: CloudSite, gamma: float = 1.0) -> int:
    """Ladder index nearest to the clamped energy-optimal frequency."""
    f = clamp_frequency(site, optimal_frequency(site, gamma))
    return nearest_level(frequency_ladder(site), f)[0]


def _power_per_ghz_at_fmax(site: CloudSite) -> float:
    return site.beta / site.f_max + site.alpha * site.f_max ** 2


def carbon_efficiency_key(site: CloudSite) -> float:
    """Sort key, ascending = most carbon efficient."""
    return site.carbon_rate * _power_per_ghz_at_fmax(site) * cooling_factor(site)


def cost_efficiency_key(site: CloudSite) -> float:
    """Sort key, ascending = cheapest to run."""
    return site.energy_price * _power_per_ghz_at_fmax(site) * cooling_factor(site)

