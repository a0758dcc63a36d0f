import pytest

from greenmeta.model import CloudSite, Job, builtin_catalog


@pytest.fixture
def catalog():
    return builtin_catalog()


@pytest.fixture
def new_york():
    return builtin_catalog()[0].with_cop(2.0)


def make_site(id="S", cpus=100, cop=2.0, **kw):
    params = dict(carbon_rate=0.5, energy_price=0.1, beta=65.0, alpha=7.5, f_max=1.8, f_min=0.675)
    params.update(kw)
    return CloudSite(id=id, cpu_count=cpus, cop=cop, **params)


def make_job(id=1, submit=0.0, n=1, runtime=100.0, deadline=None, gamma=1.0):
    if deadline is None:
        deadline = submit + 10 * runtime
    return Job(id=id, submit_time=submit, n_cpus=n, base_runtime=runtime, deadline=deadline, gamma=gamma)


def pytest_terminal_summary(terminalreporter):
    mod = __import__("sys").modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in sorted(mod.RESULTS):
        terminalreporter.write_line(line)
