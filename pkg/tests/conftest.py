"""Shared fixtures: the two reference systems and their solved bridges.

Bridge solves are the expensive pieces (thousands of implicit-midpoint
steps per shot), so they are session scoped and shared between the module
tests and the acceptance gate.
"""

import math

import pytest

from gsbp import (
    BridgeProblem,
    Entropy,
    Euclidean,
    Graph,
    GraphWasserstein,
    PhaseState,
    Quadratic,
    integrate,
    solve,
)

E_PLUS_EINV = math.e + 1.0 / math.e


@pytest.fixture(scope="session")
def two_node_graph():
    return Graph(2, [(0, 1, 1.0)])


@pytest.fixture(scope="session")
def graph_metric(two_node_graph):
    return GraphWasserstein(two_node_graph)


@pytest.fixture(scope="session")
def entropy():
    return Entropy(1.0)


@pytest.fixture(scope="session")
def flat_metric():
    return Euclidean()


@pytest.fixture(scope="session")
def quad_1d():
    return Quadratic([[1.0]])


@pytest.fixture(scope="session")
def flat_bridge(flat_metric, quad_1d):
    """Flat quadratic bridge x=2 -> y=e+1/e at dt=1e-3 (p0 ~ 0)."""
    return solve(BridgeProblem(flat_metric, quad_1d, [2.0], [E_PLUS_EINV], T=1.0, dt=1e-3))


@pytest.fixture(scope="session")
def flat_bridge_coarse(flat_metric, quad_1d):
    return solve(BridgeProblem(flat_metric, quad_1d, [2.0], [E_PLUS_EINV], T=1.0, dt=2e-3))


@pytest.fixture(scope="session")
def flat_bridge_fine(flat_metric, quad_1d):
    return solve(BridgeProblem(flat_metric, quad_1d, [2.0], [E_PLUS_EINV], T=1.0, dt=5e-4))


@pytest.fixture(scope="session")
def entropy_bridge(graph_metric, entropy):
    """Two-vertex entropy bridge (0.3, 0.7) -> (0.7, 0.3) at dt=1e-3."""
    import time

    started = time.perf_counter()
    result = solve(BridgeProblem(graph_metric, entropy, [0.3, 0.7], [0.7, 0.3], T=1.0, dt=1e-3))
    result.elapsed = time.perf_counter() - started
    return result


@pytest.fixture(scope="session")
def entropy_bridge_coarse(graph_metric, entropy):
    return solve(BridgeProblem(graph_metric, entropy, [0.3, 0.7], [0.7, 0.3], T=1.0, dt=2e-3))


@pytest.fixture(scope="session")
def mild_entropy_flow(graph_metric, entropy):
    """Non-stationary two-vertex entropy flow staying well inside the simplex."""
    return integrate(graph_metric, entropy, PhaseState([0.4, 0.6], [0.2, -0.2]), 1.0, 1e-3)


@pytest.fixture(scope="session")
def stationary_flow(graph_metric, entropy):
    return integrate(graph_metric, entropy, PhaseState([0.5, 0.5], [0.0, 0.0]), 1.0, 1e-3)


# -- acceptance reporting ----------------------------------------------------

_ACCEPTANCE_RESULTS = {}


def pytest_runtest_logreport(report):
    if "test_acceptance" in report.nodeid and report.when == "call":
        name = report.nodeid.split("::")[-1].replace("test_acceptance_", "")
        _ACCEPTANCE_RESULTS[name] = report.outcome


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE_RESULTS:
        return
    terminalreporter.write_sep("-", "acceptance criteria")
    for name, outcome in _ACCEPTANCE_RESULTS.items():
        terminalreporter.write_line(f"{'PASS' if outcome == 'passed' else 'FAIL'}  {name}")
