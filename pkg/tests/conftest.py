import pytest

from cfgtest.coverage import build_coverage_map
from cfgtest.demo import demo_default_config, demo_registry, demo_sandbox, demo_suite
from cfgtest.harness import ConcretizationPolicy, run_suite

ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def registry():
    return demo_registry()


@pytest.fixture(scope="session")
def good():
    return demo_default_config()


@pytest.fixture(scope="session")
def suite():
    return demo_suite()


@pytest.fixture(scope="session")
def sandbox():
    return demo_sandbox()


@pytest.fixture(scope="session")
def policy():
    return ConcretizationPolicy.replace_get_only()


@pytest.fixture(scope="session")
def baseline(suite, good, policy, registry, sandbox):
    """Full concretized run of the demo suite on the default config, with shadow recording."""
    return run_suite(suite, good, policy, registry, sandbox, shadow=True)


@pytest.fixture(scope="session")
def covmap(baseline, registry):
    return build_coverage_map(baseline.traces(), baseline.effective_pins(), registry)
