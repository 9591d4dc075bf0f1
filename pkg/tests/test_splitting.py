import math

import numpy as np
import pytest

from gsbp import (
    DiagonalPower,
    DomainError,
    Entropy,
    Euclidean,
    HomogeneityError,
    HopfColePair,
    PhaseState,
    Quadratic,
    UnsupportedOperationError,
    action_identity_residual,
    alpha,
    audit_inequalities,
    c_constant,
    from_eta,
    hamiltonian,
    integrate,
    max_passing_lambda,
    second_derivative_check,
    split,
    splitting_rates,
)
from gsbp.splitting import _split_series, splitting_diagnostics, write_split_csv


# -- split -------------------------------------------------------------------


def test_split_flat_hand_value():
    pot = Quadratic([[1.0]])
    pair = HopfColePair([1.0], [1.0])
    g, gstar = split(pot, pair)
    assert g == pytest.approx(1.0) and gstar == pytest.approx(1.0)
    assert pot.value(from_eta(pot, pair).q) == pytest.approx(2.0)


def test_split_entropy_uniform():
    pot = Entropy(1.0)
    v = math.sqrt(0.5)
    g, gstar = split(pot, HopfColePair([v, v], [v, v]))
    expected = 0.5 * math.log(0.5) - 0.5  # half the simplex entropy minus gamma/2
    assert g == pytest.approx(expected, abs=1e-14)
    assert gstar == pytest.approx(expected, abs=1e-14)


def test_split_swap_antisymmetry():
    rng = np.random.default_rng(41)
    pot = Entropy(1.0)
    pair = HopfColePair(0.2 + rng.random(3), 0.2 + rng.random(3))
    g, gstar = split(pot, pair)
    g2, gstar2 = split(pot, HopfColePair(pair.eta_star, pair.eta))
    assert g == pytest.approx(gstar2) and gstar == pytest.approx(g2)


def test_split_requires_homogeneity_metadata():
    pot = Quadratic(np.eye(2), U=np.array([1.0, 0.0]))
    with pytest.raises(HomogeneityError, match="homogeneity"):
        split(pot, HopfColePair([1.0, 1.0], [1.0, 1.0]))


def test_split_identity_along_trajectories(flat_bridge, entropy_bridge, quad_1d, entropy):
    for traj, pot in ((flat_bridge.trajectory, quad_1d), (entropy_bridge.trajectory, entropy)):
        _, gs, gstars = _split_series(traj, pot)
        f_vals = np.array([pot.value(traj.q[k]) for k in range(len(traj))])
        assert np.max(np.abs(gs + gstars - f_vals)) < 1e-10


# -- constants ----------------------------------------------------------------


def test_c_constant_flat_case_vanishes():
    assert c_constant(2.0, 0.0) == 0.0


def test_c_constant_simplex_metric_form():
    for a in (1.0, 1.5, 2.0, 3.0):
        assert c_constant(a, 1.0) == (1.0 - 1.0 / a) / 2.0  # exact, same arithmetic


def test_c_constant_power_entropy_on_graphs():
    for m_r in (0.5, 1.0, 2.0):
        assert c_constant(m_r + 1.0, 1.0) == pytest.approx(m_r / (2 * (m_r + 1.0)), abs=1e-15)


def test_alpha_endpoints_and_limit():
    for lam in (-3.0, 0.5, 2.0):
        assert alpha(lam, 0.0) == 0.0
        assert alpha(lam, 1.0) == 1.0
    assert alpha(0.0, 0.37) == 0.37
    assert alpha(1e-9, 0.37) == 0.37  # removable singularity
    assert alpha(1e-7, 0.4) == pytest.approx(0.4, abs=1e-7)


def test_alpha_domain():
    with pytest.raises(DomainError):
        alpha(1.0, 1.5)


# -- rates ---------------------------------------------------------------------


def test_splitting_rates_flat_hand_value():
    met, pot = Euclidean(), Quadratic([[1.0]])
    pair = HopfColePair([1.0], [1.0])
    h = hamiltonian(met, pot, from_eta(pot, pair))
    rate_g, rate_star = splitting_rates(met, pot, pair, c=0.0, H=h)
    assert rate_g == pytest.approx(1.0) and rate_star == pytest.approx(-1.0)


def test_splitting_rates_fixed_point(graph_metric, entropy):
    v = math.sqrt(0.5)
    rate_g, rate_star = splitting_rates(graph_metric, entropy, HopfColePair([v, v], [v, v]),
                                        c=0.0, H=0.0)
    assert abs(rate_g) < 1e-30 and abs(rate_star) < 1e-30


def rate_fd_error(metric, pot, traj, a, m):
    pairs, gs, gstars = _split_series(traj, pot)
    c = c_constant(a, m)
    h = traj.diagnostics["H"][0]
    dt = traj.dt
    worst = 0.0
    for k in range(1, len(traj) - 1):
        fd_g = (gs[k + 1] - gs[k - 1]) / (2 * dt)
        fd_s = (gstars[k + 1] - gstars[k - 1]) / (2 * dt)
        rate_g, rate_s = splitting_rates(metric, pot, pairs[k], c, h)
        worst = max(worst, abs(fd_g - rate_g), abs(fd_s - rate_s))
    return worst


def test_rates_match_differences_flat(flat_bridge, flat_bridge_coarse, flat_metric, quad_1d):
    e_fine = rate_fd_error(flat_metric, quad_1d, flat_bridge.trajectory, 2.0, 0.0)
    e_coarse = rate_fd_error(flat_metric, quad_1d, flat_bridge_coarse.trajectory, 2.0, 0.0)
    assert e_fine < 1e-4
    assert 3.5 < e_coarse / e_fine < 4.5


def test_rates_match_differences_graph(entropy_bridge, entropy_bridge_coarse, graph_metric, entropy):
    e_fine = rate_fd_error(graph_metric, entropy, entropy_bridge.trajectory, 1.0, 1.0)
    e_coarse = rate_fd_error(graph_metric, entropy, entropy_bridge_coarse.trajectory, 1.0, 1.0)
    assert e_fine < 1e-3
    assert 3.5 < e_coarse / e_fine < 4.5


def test_rates_on_diagonal_power_metric():
    # Euler degree m outside {0, 1}: exercises the correction constant c=m/4
    met = DiagonalPower(2.5)
    pot = Quadratic(0.2 * np.array([[1.0, 0.2], [0.2, 1.5]]))
    traj = integrate(met, pot, PhaseState([1.0, 1.2], [0.05, -0.04]), 0.2, 2e-4)
    err = rate_fd_error(met, pot, traj, 2.0, 2.5)
    assert err < 1e-7
    # deliberately wrong Euler degree: the rate formula visibly breaks
    assert rate_fd_error(met, pot, traj, 2.0, 0.0) > 1e-3


# -- audit ----------------------------------------------------------------------


def test_audit_flat_bridge_tight_lambda(flat_bridge, flat_metric, quad_1d):
    report = audit_inequalities(flat_bridge.trajectory, quad_1d, flat_metric, 1.0)
    assert report.passed
    assert report.min_slack >= -1e-7
    assert report.c == 0.0 and report.a == 2.0 and report.m == 0.0


def test_audit_smaller_lambda_gives_positive_interior_slack(flat_bridge, flat_metric, quad_1d):
    report = audit_inequalities(flat_bridge.trajectory, quad_1d, flat_metric, 0.0)
    assert report.passed
    assert np.all(report.slack_G[1:-1] > 0)
    assert np.all(report.slack_Gstar[1:-1] > 0)


def test_audit_detects_inflated_lambda(flat_bridge, flat_metric, quad_1d):
    report = audit_inequalities(flat_bridge.trajectory, quad_1d, flat_metric, 11.0)
    assert not report.passed
    assert report.min_slack < -1e-7


def test_audit_stationary_graph(stationary_flow, graph_metric, entropy):
    report = audit_inequalities(stationary_flow, entropy, graph_metric, 0.0)
    assert report.passed
    assert np.max(np.abs(report.dG_formula)) < 1e-30
    assert np.max(np.abs(report.dGstar_formula)) < 1e-30


def test_max_passing_lambda_recovers_tight_value(flat_bridge, flat_metric, quad_1d):
    lam = max_passing_lambda(flat_bridge.trajectory, quad_1d, flat_metric, 0.5, 20.0)
    assert abs(lam - 1.0) < 0.01


def test_max_passing_lambda_rejects_bad_bracket(flat_bridge, flat_metric, quad_1d):
    with pytest.raises(DomainError, match="lower bracket"):
        max_passing_lambda(flat_bridge.trajectory, quad_1d, flat_metric, 15.0, 20.0)


# -- action identity --------------------------------------------------------------


def test_action_identity_flat(flat_bridge_fine, flat_metric, quad_1d):
    res = action_identity_residual(flat_bridge_fine.trajectory, quad_1d, flat_metric, c=0.0)
    assert res < 1e-6
    assert flat_bridge_fine.action == pytest.approx(math.sinh(2.0), abs=1e-6)


def test_action_identity_stationary(stationary_flow, graph_metric, entropy):
    res = action_identity_residual(stationary_flow, entropy, graph_metric, c=c_constant(1.0, 1.0))
    assert res < 1e-10


def test_action_identity_second_order(flat_metric, quad_1d, flat_bridge, flat_bridge_coarse):
    r_fine = action_identity_residual(flat_bridge.trajectory, quad_1d, flat_metric, 0.0)
    r_coarse = action_identity_residual(flat_bridge_coarse.trajectory, quad_1d, flat_metric, 0.0)
    assert 3.0 < r_coarse / r_fine < 5.0


def test_action_identity_entropy_bridge(entropy_bridge, graph_metric, entropy):
    res = action_identity_residual(entropy_bridge.trajectory, entropy, graph_metric,
                                   c=c_constant(1.0, 1.0))
    assert res < 2e-6


# -- second derivative --------------------------------------------------------


def test_second_derivative_flat(flat_bridge, flat_metric, quad_1d):
    assert second_derivative_check(flat_bridge.trajectory, quad_1d, flat_metric) < 1e-5


def test_second_derivative_diagonal_power():
    met = DiagonalPower(2.0)
    pot = Quadratic(0.2 * np.array([[1.0, 0.2], [0.2, 1.5]]))
    traj = integrate(met, pot, PhaseState([1.0, 1.2], [0.05, -0.04]), 0.2, 2e-4)
    assert second_derivative_check(traj, pot, met) < 1e-4


def test_second_derivative_unsupported_on_graph(stationary_flow, graph_metric, entropy):
    with pytest.raises(UnsupportedOperationError):
        second_derivative_check(stationary_flow, entropy, graph_metric)


# -- export ---------------------------------------------------------------------


def test_split_csv_format(tmp_path, flat_bridge, flat_metric, quad_1d):
    report = audit_inequalities(flat_bridge.trajectory, quad_1d, flat_metric, 1.0)
    path = tmp_path / "split.csv"
    write_split_csv(report, path)
    lines = path.read_text().splitlines()
    header_block = dict(line[2:].split("=") for line in lines[:5])
    assert set(header_block) == {"c", "H", "lambda", "a", "m"}
    assert float(header_block["lambda"]) == 1.0
    assert float(header_block["H"]) == pytest.approx(-2.0, abs=1e-5)
    assert lines[5] == "t,G,Gstar,dG_formula,dGstar_formula,slack_G,slack_Gstar"
    first = [float(v) for v in lines[6].split(",")]
    assert first[0] == 0.0
    assert first[1] == report.G[0]

    write_split_csv(report, tmp_path / "again.csv")
    assert (tmp_path / "again.csv").read_bytes() == path.read_bytes()


def test_splitting_diagnostics_columns(mild_entropy_flow, graph_metric, entropy):
    cols = splitting_diagnostics(mild_entropy_flow, entropy, graph_metric)
    assert set(cols) == {"K", "G", "Gstar"}
    h = mild_entropy_flow.diagnostics["H"]
    assert np.max(np.abs(cols["K"] - h)) < 1e-10  # K is H in other coordinates
