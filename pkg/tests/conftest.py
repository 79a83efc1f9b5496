import os

from hypothesis import HealthCheck, settings

settings.register_profile("default", max_examples=100, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


import pytest

CRITERIA = {
    1: "formula identities",
    2: "statistic-variance matching",
    3: "estimator cross-validation",
    4: "normal-approximation convergence",
    5: "exponent checks",
    6: "CLT and concentration",
    7: "interference-curve sweep",
    8: "determinism across workers",
}


def pytest_configure(config):
    config.acceptance = {}


@pytest.fixture
def acceptance(request):
    """``acceptance(k, ok, detail)`` records one sub-check of criterion k."""
    store = request.config.acceptance

    def record(k, ok, detail):
        store.setdefault(k, []).append((bool(ok), detail))
        print(f"criterion {k} [{'pass' if ok else 'FAIL'}] {detail}")

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    store = getattr(config, "acceptance", {})
    if not store:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for k in sorted(store):
        checks = store[k]
        ok = all(c for c, _ in checks)
        tr.write_line(f"criterion {k} ({CRITERIA.get(k, '')}): {'PASS' if ok else 'FAIL'} "
                      f"[{sum(c for c, _ in checks)}/{len(checks)} checks]")
    tr.section("acceptance details")
    for k in sorted(store):
        for c, detail in store[k]:
            tr.write_line(f"  {k}. {'pass' if c else 'FAIL'}: {detail}")
