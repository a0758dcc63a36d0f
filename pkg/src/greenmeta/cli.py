"""Command-line entry point: ``greenmeta --seed 1 --out results.csv``.

Every flag can also come from an environment variable named ``GREENMETA_`` plus
the flag name upper-cased with dashes turned into underscores, e.g.
``GREENMETA_SEED=3`` or ``GREENMETA_POLICY=gmce,mp-mp``. Command-line values win.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path

from .experiments import SAMPLE_TRACE, VARY_ALIASES, ConfigError, ExperimentConfig, emit_csv, run, write_plot_data
from .local import DvsMode
from .meta import DEFAULT_POLICIES, Mapping

ENV_PREFIX = "GREENMETA_"


def _list(conv):
    def parse(text):
        return [conv(x) for x in str(text).split(",") if x.strip()]
    return parse


def _vary(text):
    try:
        factor, cls = text.split(":")
    except ValueError:
        raise argparse.ArgumentTypeError("expected FACTOR:CLASS, e.g. carbon:high") from None
    if factor not in VARY_ALIASES:
        raise argparse.ArgumentTypeError(f"unknown factor {factor!r}; choose from {sorted(VARY_ALIASES)}")
    if cls not in ("low", "mid", "high"):
        raise argparse.ArgumentTypeError(f"unknown class {cls!r}; choose low, mid or high")
    return VARY_ALIASES[factor], cls


def _env(name):
    return os.environ.get(ENV_PREFIX + name.upper().replace("-", "_"))


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="greenmeta", description="Carbon/profit-aware meta-scheduling experiments")
    p.add_argument("--trace", type=Path, default=_env("trace") or SAMPLE_TRACE, help="SWF trace (.swf or .swf.gz)")
    p.add_argument("--sites", type=Path, default=_env("sites"), help="JSON site catalog overriding the built-in one")
    p.add_argument("--policy", action="append", help="mapping policy (repeatable or comma separated): "
                   + ", ".join(m.value for m in Mapping))
    p.add_argument("--dvs", action="append", help="DVS mode (repeatable or comma separated): "
                   + ", ".join(m.value for m in DvsMode))
    p.add_argument("--hu-percent", type=_list(float), default=_env("hu-percent"), help="comma separated HU percentages")
    p.add_argument("--arrival-factor", type=_list(float), default=_env("arrival-factor"),
                   help="comma separated submit-time divisors")
    p.add_argument("--vary", type=_vary, default=_env("vary"), help="site variation experiment, e.g. price:mid")
    p.add_argument("--cycle-interval", type=float, default=_env("cycle-interval") or 50.0)
    p.add_argument("--max-jobs", type=int, default=_env("max-jobs") or 500, help="first N trace jobs")
    p.add_argument("--seed", type=int, default=_env("seed"), help="RNG seed (required)")
    p.add_argument("--out", type=Path, default=_env("out") or Path("results.csv"))
    p.add_argument("--plot-data", type=Path, default=_env("plot-data"), help="directory for per-figure CSVs")
    p.add_argument("--bounds", action="store_true", default=bool(_env("bounds")), help="add bound columns")
    p.add_argument("--retry-rejected", action="store_true", default=bool(_env("retry-rejected")))
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def _names(values, env_name, default):
    raw = values if values else ([_env(env_name)] if _env(env_name) else None)
    if not raw:
        return list(default)
    return [x.strip() for v in raw for x in v.split(",") if x.strip()]


def config_from_args(args) -> ExperimentConfig:
    if args.seed is None:
        raise ConfigError("--seed is required")
    try:
        policies = [Mapping(x.lower()) for x in _names(args.policy, "policy", [m.value for m in DEFAULT_POLICIES])]
        modes = [DvsMode(x.lower()) for x in _names(args.dvs, "dvs", [DvsMode.OUR.value])]
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    vary = args.vary
    if isinstance(vary, str):
        vary = _vary(vary)
    hu = args.hu_percent
    if isinstance(hu, str):
        hu = _list(float)(hu)
    af = args.arrival_factor
    if isinstance(af, str):
        af = _list(float)(af)
    cfg = ExperimentConfig(
        trace=Path(args.trace),
        seed=int(args.seed),
        policies=policies,
        dvs_modes=modes,
        cycle_interval=float(args.cycle_interval),
        max_jobs=int(args.max_jobs),
        sites_path=Path(args.sites) if args.sites else None,
        vary=vary,
        bounds=bool(args.bounds),
        retry_rejected=bool(args.retry_rejected),
    )
    if hu:
        cfg.hu_percents = hu
    if af:
        cfg.arrival_factors = af
    return cfg


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = config_from_args(args)
        cfg.validate()
        report = run(cfg)
        emit_csv(report, args.out)
        if args.plot_data:
            write_plot_data(report, args.plot_data)
    except (ConfigError, OSError, ValueError) as exc:
        print(f"greenmeta: error: {exc}", file=sys.stderr)
        return 2
    print(f"wrote {len(report.rows)} rows to {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
