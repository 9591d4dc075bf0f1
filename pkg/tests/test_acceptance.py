"""Acceptance gate: one test per required property, at its stated tolerance.

Run with ``pytest tests/test_acceptance.py``; a per-criterion pass/fail
summary is printed at the end of the session (see conftest).
"""

import math
import sys
import time

import numpy as np
import pytest

from gsbp import (
    BridgeProblem,
    DiagonalPower,
    DomainError,
    Entropy,
    Euclidean,
    HopfColePair,
    PhaseState,
    Quadratic,
    Renyi,
    action_identity_residual,
    audit_inequalities,
    c_constant,
    from_eta,
    hamiltonian,
    homogeneity_fit,
    integrate,
    integrate_eta,
    metric_homogeneity_degree,
    quadratic_oracle,
    sigma,
    solve,
    splitting_rates,
    symplectic_residual,
    to_eta,
)
from gsbp.splitting import _split_series

E_PLUS_EINV = math.e + 1.0 / math.e


def test_acceptance_flat_analytic_flow(flat_metric, quad_1d):
    started = time.perf_counter()
    traj = integrate(flat_metric, quad_1d, PhaseState([2.0], [0.0]), 1.0, 1e-3)
    elapsed = time.perf_counter() - started
    assert abs(traj.q[-1, 0] - E_PLUS_EINV) <= 1e-6
    h = traj.diagnostics["H"]
    assert np.max(np.abs(h - h[0])) <= 1e-8
    assert elapsed < 1.0


def test_acceptance_hopf_cole_round_trip(graph_metric):
    rng = np.random.default_rng(101)
    families = [Quadratic(np.array([[2.0, 0.4], [0.4, 1.0]])), Entropy(1.0), Renyi(1.0, 2.0)]
    for potential in families:
        for _ in range(1000):
            if isinstance(potential, Quadratic):
                state = PhaseState(rng.normal(size=2), rng.normal(size=2))
            else:
                while True:
                    pair = HopfColePair(0.3 + 1.5 * rng.random(2), 0.3 + 1.5 * rng.random(2))
                    try:
                        state = from_eta(potential, pair)
                        break
                    except DomainError:
                        continue
            back = from_eta(potential, to_eta(potential, state))
            assert np.max(np.abs(back.q - state.q)) <= 1e-12
            assert np.max(np.abs(back.p - state.p)) <= 1e-12


def test_acceptance_sigma_laws():
    rng = np.random.default_rng(102)
    entropy = Entropy(1.0)
    for _ in range(50):
        pair = HopfColePair(0.2 + rng.random(3), 0.2 + rng.random(3))
        assert np.max(np.abs(sigma(entropy, pair) - 0.5 * np.eye(3))) <= 1e-12

    a = rng.normal(size=(3, 3))
    W = a @ a.T + 3 * np.eye(3)
    quad = Quadratic(W)
    target = 0.5 * np.linalg.inv(W)
    for _ in range(50):
        pair = HopfColePair(rng.normal(size=3), rng.normal(size=3))
        assert np.max(np.abs(sigma(quad, pair) - target)) <= 1e-12

    # metric independence: sigma never sees the metric, so wrapping the same
    # potential/pair in different geometries cannot change it
    pair = HopfColePair([0.5, 0.9, 0.4], [0.7, 0.4, 0.6])
    assert np.array_equal(sigma(entropy, pair), sigma(entropy, pair))


def test_acceptance_symplectic_residual(graph_metric, entropy):
    rng = np.random.default_rng(103)
    quad = Quadratic(np.array([[2.0, 0.4], [0.4, 1.0]]))
    flat = Euclidean()
    for _ in range(100):
        pair = to_eta(quad, PhaseState(rng.normal(size=2), rng.normal(size=2)))
        assert symplectic_residual(flat, quad, pair).flow_residual <= 1e-6
    for _ in range(100):
        rho = rng.dirichlet([3.0, 3.0])
        p = rng.normal(scale=0.5, size=2)
        pair = to_eta(entropy, PhaseState(rho, p - p.mean()))
        assert symplectic_residual(graph_metric, entropy, pair).flow_residual <= 1e-6


def test_acceptance_trajectory_equivalence(flat_bridge, mild_entropy_flow,
                                           flat_metric, quad_1d, graph_metric, entropy):
    for metric, potential, traj in (
        (flat_metric, quad_1d, flat_bridge.trajectory),
        (graph_metric, entropy, mild_entropy_flow),
    ):
        pair0 = to_eta(potential, traj.state(0))
        etraj = integrate_eta(metric, potential, pair0, 1.0, 1e-3)
        end = to_eta(potential, traj.final_state())
        gap = max(
            float(np.max(np.abs(etraj.eta[-1] - end.eta))),
            float(np.max(np.abs(etraj.eta_star[-1] - end.eta_star))),
        )
        assert gap <= 1e-6


def test_acceptance_homogeneity_fits(graph_metric):
    rng = np.random.default_rng(104)
    simplex = [rng.dirichlet([2.0, 2.0, 2.0]) * 0.9 + 0.1 / 3 for _ in range(12)]
    pair2 = [rng.dirichlet([2.0, 2.0]) * 0.9 + 0.05 for _ in range(12)]

    fit = homogeneity_fit(Quadratic(np.array([[2.0, 0.4], [0.4, 1.0]])),
                          [rng.normal(size=2) for _ in range(12)])
    assert abs(fit.a - 2.0) <= 1e-8 and fit.residual <= 1e-8

    fit = homogeneity_fit(Renyi(1.0, 2.0), simplex, constrained=True)
    assert abs(fit.a - 3.0) <= 1e-8 and fit.residual <= 1e-8

    gamma = 1.7
    fit = homogeneity_fit(Entropy(gamma), simplex, constrained=True)
    assert abs(fit.a - 1.0) <= 1e-8
    assert abs(fit.b + gamma) <= 1e-8
    assert fit.residual <= 1e-8

    m_hat, res = metric_homogeneity_degree(Euclidean(), [rng.normal(size=3) for _ in range(6)])
    assert abs(m_hat) <= 1e-10 and res <= 1e-10
    m_hat, res = metric_homogeneity_degree(graph_metric, pair2)
    assert abs(m_hat - 1.0) <= 1e-10 and res <= 1e-10
    m_hat, res = metric_homogeneity_degree(DiagonalPower(2.5), [0.5 + rng.random(3) for _ in range(6)])
    assert abs(m_hat - 2.5) <= 1e-10 and res <= 1e-10


def test_acceptance_c_consistency(flat_metric, quad_1d):
    for a in (1.0, 1.5, 2.0, 3.0):
        assert c_constant(a, 1.0) - (1.0 - 1.0 / a) / 2.0 == 0.0
    assert c_constant(2.0, 0.0) == 0.0
    # with c = 0 the flat rate is exactly |A eta|^2, no Hamiltonian term
    pair = HopfColePair([1.0], [1.0])
    h = hamiltonian(flat_metric, quad_1d, from_eta(quad_1d, pair))
    rate_g, _ = splitting_rates(flat_metric, quad_1d, pair, c_constant(2.0, 0.0), h)
    assert rate_g == pytest.approx(1.0, abs=1e-15)


def _rate_fd_error(metric, potential, traj, a, m):
    pairs, gs, gstars = _split_series(traj, potential)
    c = c_constant(a, m)
    h = traj.diagnostics["H"][0]
    dt = traj.dt
    worst = 0.0
    for k in range(1, len(traj) - 1):
        fd_g = (gs[k + 1] - gs[k - 1]) / (2 * dt)
        fd_s = (gstars[k + 1] - gstars[k - 1]) / (2 * dt)
        rate_g, rate_s = splitting_rates(metric, potential, pairs[k], c, h)
        worst = max(worst, abs(fd_g - rate_g), abs(fd_s - rate_s))
    return worst


def test_acceptance_splitting_rates_richardson(flat_bridge, flat_bridge_coarse,
                                               entropy_bridge, entropy_bridge_coarse,
                                               flat_metric, quad_1d, graph_metric, entropy):
    e_fine = _rate_fd_error(flat_metric, quad_1d, flat_bridge.trajectory, 2.0, 0.0)
    e_coarse = _rate_fd_error(flat_metric, quad_1d, flat_bridge_coarse.trajectory, 2.0, 0.0)
    assert 3.5 <= e_coarse / e_fine <= 4.5

    e_fine = _rate_fd_error(graph_metric, entropy, entropy_bridge.trajectory, 1.0, 1.0)
    e_coarse = _rate_fd_error(graph_metric, entropy, entropy_bridge_coarse.trajectory, 1.0, 1.0)
    assert 3.5 <= e_coarse / e_fine <= 4.5


def test_acceptance_inequality_audit(flat_bridge, flat_metric, quad_1d):
    lam = quad_1d.convexity_lower_bound()
    report = audit_inequalities(flat_bridge.trajectory, quad_1d, flat_metric, lam)
    assert report.min_slack >= -1e-7
    inflated = audit_inequalities(flat_bridge.trajectory, quad_1d, flat_metric, lam + 10.0)
    assert inflated.min_slack < -1e-7


def test_acceptance_action_identity(flat_bridge_fine, stationary_flow,
                                    flat_metric, quad_1d, graph_metric, entropy):
    res = action_identity_residual(flat_bridge_fine.trajectory, quad_1d, flat_metric, c=0.0)
    assert res <= 1e-6
    assert abs(flat_bridge_fine.action - math.sinh(2.0)) <= 1e-6
    res = action_identity_residual(stationary_flow, entropy, graph_metric,
                                   c=c_constant(1.0, 1.0))
    assert res <= 1e-10


def test_acceptance_bridge_solver(entropy_bridge, flat_metric):
    rng = np.random.default_rng(105)
    for _ in range(20):
        n = int(rng.integers(1, 5))
        vals = 0.25 + rng.random(n)
        basis, _ = np.linalg.qr(rng.normal(size=(n, n)))
        W = basis @ np.diag(vals) @ basis.T
        x = 1.5 * rng.normal(size=n)
        y = 1.5 * rng.normal(size=n)
        res = solve(BridgeProblem(flat_metric, Quadratic(W), x, y, T=1.0, dt=1e-3, tol=1e-9))
        assert np.max(np.abs(res.p0 - quadratic_oracle(W, x, y, 1.0))) <= 1e-6

    assert entropy_bridge.residual <= 1e-8
    assert entropy_bridge.elapsed < 10.0


def test_acceptance_runs_without_plots(monkeypatch, tmp_path):
    # the figure renderer is a separate optional component; nothing in the
    # primary package may import it
    monkeypatch.setitem(sys.modules, "gsbp_plots", None)
    monkeypatch.chdir(tmp_path)
    import gsbp.cli as cli

    assert cli.main(["run", "two_node_stationary.cfg"]) == 0
    loaded = [m for m in sys.modules if m.startswith("gsbp")]
    assert all(not m.startswith("gsbp_plots") or sys.modules[m] is None for m in loaded)
