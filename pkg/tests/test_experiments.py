import csv

import numpy as np
import pytest

from greenmeta import cli
from greenmeta.experiments import (
    COLUMNS,
    VARIATIONS,
    ConfigError,
    ExperimentConfig,
    MetricsReport,
    emit_csv,
    efficiency_to_cop,
    prepare_sites,
    read_csv,
    run,
    sample_cops,
    vary_sites,
    write_plot_data,
)
from greenmeta.local import DvsMode
from greenmeta.meta import Mapping
from greenmeta.model import builtin_catalog, dump_sites


def small(**kw):
    base = dict(seed=1, hu_percents=[40], arrival_factors=[100], policies=[Mapping.GMCE], max_jobs=60)
    base.update(kw)
    return ExperimentConfig(**base)


def test_header_order():
    assert COLUMNS[:16] == [
        "scenario", "policy", "dvs_mode", "hu_percent", "arrival_factor", "total_carbon_kg",
        "avg_carbon_per_workload", "total_profit", "total_energy_cost", "total_energy_kwh",
        "workload_cpu_seconds", "jobs_accepted", "jobs_rejected", "lb_avg_carbon", "ub_avg_profit", "seed",
    ]
    assert COLUMNS[-1] == "input_hash"


def test_row_counts():
    assert len(run(small()).rows) == 1
    report = run(small(hu_percents=[0, 20, 40, 60, 80, 100], policies=[
        Mapping.GMCE, Mapping.MCE_MCE, Mapping.MCE_MP, Mapping.GMP, Mapping.MP_MP]))
    assert len(report.rows) == 30
    for r in report.rows:
        assert r.jobs_accepted + r.jobs_rejected == 60
        assert r.total_carbon_kg >= 0 and r.total_energy_cost >= 0 and r.workload_cpu_seconds >= 0


def test_csv_determinism_and_round_trip(tmp_path):
    cfg = small(policies=[Mapping.GMCE, Mapping.MP_MP], dvs_modes=list(DvsMode), bounds=True)
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    report = run(cfg)
    emit_csv(report, a)
    emit_csv(run(cfg), b)
    assert a.read_bytes() == b.read_bytes()
    assert read_csv(a) == report.rounded()
    emit_csv(read_csv(a), b)
    assert a.read_bytes() == b.read_bytes()
    assert len({r.input_hash for r in report.rows}) == 1


def test_emit_csv_edges(tmp_path):
    p = tmp_path / "empty.csv"
    emit_csv(MetricsReport(), p)
    assert p.read_text().splitlines() == [",".join(COLUMNS)]
    two = run(small(policies=[Mapping.GMCE, Mapping.GMP]))
    emit_csv(two, p)
    assert len(p.read_text().splitlines()) == 3
    with pytest.raises(OSError, match="nowhere"):
        emit_csv(two, tmp_path / "nowhere" / "x.csv")
    with pytest.raises(ValueError):
        (tmp_path / "bad.csv").write_text("a,b\n")
        read_csv(tmp_path / "bad.csv")


def test_six_significant_digits(tmp_path):
    p = tmp_path / "r.csv"
    emit_csv(run(small()), p)
    row = next(csv.DictReader(open(p)))
    mantissa = row["total_profit"].split("e")[0].lstrip("-").replace(".", "").lstrip("0")
    assert len(mantissa) <= 6


def test_cops_sampled_once_per_seed():
    a, b = sample_cops(8, 3), sample_cops(8, 3)
    assert a == b and a != sample_cops(8, 4)
    assert all(0.6 <= c <= 3.5 for c in a)
    assert [s.cop for s in prepare_sites(builtin_catalog(), 3)] == a


def test_config_validation(tmp_path):
    with pytest.raises(ConfigError):
        small(seed=None).validate()
    with pytest.raises(ConfigError):
        small(hu_percents=[]).validate()
    with pytest.raises(ConfigError):
        small(arrival_factors=[0]).validate()
    with pytest.raises(ConfigError):
        small(trace=tmp_path / "missing.swf").validate()
    with pytest.raises(ConfigError):
        small(vary=("carbon_rate", "extreme")).validate()


def test_efficiency_to_cop():
    assert efficiency_to_cop(0.4) == pytest.approx(0.6667, abs=1e-4)
    eff = 0.7
    cop = efficiency_to_cop(eff)
    assert cop / (cop + 1) == pytest.approx(eff)
    with pytest.raises(ValueError):
        efficiency_to_cop(1.0)


def test_vary_sites():
    base = prepare_sites(builtin_catalog(), 0)
    rates = [s.carbon_rate for s in vary_sites(base, "carbon_rate", "low", 0)]
    assert all(r > 0 for r in rates) and abs(np.mean(rates) - 0.2) < 0.1
    varied = vary_sites(base, "energy_price", "high", 0)
    for old, new in zip(base, varied):
        assert (old.carbon_rate, old.beta, old.alpha, old.cop) == (new.carbon_rate, new.beta, new.alpha, new.cop)
    effs = [s.cop / (s.cop + 1) for s in vary_sites(base, "efficiency", "mid", 0)]
    assert all(0 < e < 1 for e in effs)
    with pytest.raises(ValueError):
        vary_sites(base, "humidity", "low", 0)


def test_zero_variance_makes_sites_identical(monkeypatch):
    monkeypatch.setitem(VARIATIONS, "carbon_rate", (0.2, {"low": 0.0}))
    varied = vary_sites(prepare_sites(builtin_catalog(), 0), "carbon_rate", "low", 0)
    assert {s.carbon_rate for s in varied} == {0.2}


def test_variation_run():
    report = run(small(vary=("carbon_rate", "mid"), policies=[Mapping.GMCE, Mapping.GMP]))
    assert [r.scenario for r in report.rows] == ["carbon_rate:mid"] * 2
    assert {(r.hu_percent, r.arrival_factor) for r in report.rows} == {(40.0, 100.0)}


def test_plot_data(tmp_path):
    report = run(small(hu_percents=[20, 80], policies=[Mapping.GMCE, Mapping.GMP]))
    files = write_plot_data(report, tmp_path / "plots")
    assert files
    rows = list(csv.reader(open(files[0])))
    assert rows[0] == ["hu_percent", "gmce/our-dvs", "gmp/our-dvs"]
    assert len(rows) == 3


def test_cli_main(tmp_path, capsys):
    out = tmp_path / "r.csv"
    code = cli.main(["--seed", "2", "--policy", "gmce,gmp", "--policy", "mp-mp", "--dvs", "no-dvs",
                     "--hu-percent", "40", "--arrival-factor", "100,1000", "--max-jobs", "40",
                     "--bounds", "--out", str(out)])
    assert code == 0
    report = read_csv(out)
    assert len(report.rows) == 6
    assert {r.dvs_mode for r in report.rows} == {"no-dvs"}
    assert all(r.lb_avg_carbon is not None for r in report.rows)
    assert "wrote 6 rows" in capsys.readouterr().out


def test_cli_errors(tmp_path, capsys):
    assert cli.main(["--out", str(tmp_path / "x.csv")]) == 2
    assert "seed" in capsys.readouterr().err
    assert cli.main(["--seed", "1", "--policy", "fifo", "--out", str(tmp_path / "x.csv")]) == 2
    assert cli.main(["--seed", "1", "--trace", str(tmp_path / "none.swf"), "--out", str(tmp_path / "x.csv")]) == 2
    with pytest.raises(SystemExit):
        cli.main(["--seed", "1", "--vary", "carbon:extreme"])


def test_cli_env_and_sites(tmp_path, monkeypatch):
    sites = tmp_path / "sites.json"
    dump_sites(builtin_catalog()[:3], sites)
    monkeypatch.setenv("GREENMETA_SEED", "5")
    monkeypatch.setenv("GREENMETA_POLICY", "gmce,mce-mce")
    monkeypatch.setenv("GREENMETA_HU_PERCENT", "0,100")
    monkeypatch.setenv("GREENMETA_MAX_JOBS", "30")
    out = tmp_path / "env.csv"
    assert cli.main(["--arrival-factor", "100", "--sites", str(sites), "--out", str(out)]) == 0
    report = read_csv(out)
    assert len(report.rows) == 4 and {r.seed for r in report.rows} == {5}
    assert cli.main(["--seed", "6", "--arrival-factor", "100", "--out", str(out)]) == 0
    assert {r.seed for r in read_csv(out).rows} == {6}


def test_cli_vary(tmp_path):
    out = tmp_path / "v.csv"
    assert cli.main(["--seed", "1", "--vary", "efficiency:low", "--max-jobs", "30", "--out", str(out)]) == 0
    assert {r.scenario for r in read_csv(out).rows} == {"efficiency:low"}
