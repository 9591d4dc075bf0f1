"""Energy splitting F = G + G* and the convexity-interpolation audit.

For an a-homogeneous potential (F = a^{-1} q.grad F + b on the state
space), the transformed variables split the energy as

    G  = a^{-1} q . f(eta)  + b/2,
    G* = a^{-1} q . f(eta*) + b/2,        q = f^{-1}(f(eta) + f(eta*)),

so that G + G* = F(q) identically.  Along the canonical flow, for metrics
with Euler degree m (sum_i q_i dG^{jk}/dq_i = m G^{jk}),

    dG/dt  =  f(eta)^T  G(q) f(eta)  - c H,
    dG*/dt = -f(eta*)^T G(q) f(eta*) + c H,      c = (a^{-1}(m-2) + 1) / 2,

with H the conserved Hamiltonian.  When the Hessian of F dominates
lambda * g, both G + cHt and G* - cHt obey exponential-chord bounds with
interpolation weight

    alpha_t = (1 - exp(-2 lambda t)) / (1 - exp(-2 lambda)),

and the audit here measures the per-node slack of those bounds on a
computed trajectory.  Trajectories on a horizon T != 1 are first rescaled
to [0, 1]; the rescaled flow carries lambda_eff = lambda T and
H_eff = H T, and all reported rates are per unit of rescaled time.

The audit never estimates lambda: it checks a supplied trial value and can
report the largest trial that passes, which is a statement about the
sampled trajectory only, not a curvature bound.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dynamics import PhaseState, Trajectory, action
from .errors import DomainError, HomogeneityError, UnsupportedOperationError
from .hopf_cole import HopfColePair, base_point, hamiltonian_K, to_eta

__all__ = [
    "split",
    "c_constant",
    "alpha",
    "splitting_rates",
    "SplitReport",
    "audit_inequalities",
    "action_identity_residual",
    "second_derivative_check",
    "max_passing_lambda",
    "splitting_diagnostics",
    "write_split_csv",
]

SLACK_TOLERANCE = -1e-7


def _homogeneity_or_raise(potential):
    meta = potential.homogeneity()
    if meta is None:
        raise HomogeneityError(
            f"{potential!r} carries no homogeneity metadata (a, b); "
            "the splitting is only defined for homogeneous potentials"
        )
    return meta


def split(potential, pair: HopfColePair) -> tuple[float, float]:
    """The two split energies (G, G*); their sum is F at the base point."""
    a, b = _homogeneity_or_raise(potential)
    q = base_point(potential, pair)
    g_val = float(q @ potential.gradient(pair.eta) / a + b / 2.0)
    g_star = float(q @ potential.gradient(pair.eta_star) / a + b / 2.0)
    return g_val, g_star


def c_constant(a: float, m: float) -> float:
    """Hamiltonian-correction coefficient c = (a^{-1}(m-2) + 1) / 2.

    m is the metric's Euler degree.  c vanishes in the flat quadratic case
    (a=2, m=0) and equals (1 - 1/a)/2 for simplex transport metrics (m=1).
    """
    if not a > 0:
        raise DomainError(f"homogeneity degree must be positive, got {a}")
    return ((m - 2.0) / a + 1.0) / 2.0


def alpha(lam: float, t: float) -> float:
    """Interpolation weight (1 - e^{-2 lambda t}) / (1 - e^{-2 lambda}).

    Continuous in lambda: below |lambda| = 1e-8 the removable singularity
    is replaced by its limit, alpha_t = t.
    """
    if not 0.0 <= t <= 1.0:
        raise DomainError(f"t must lie in [0, 1], got {t}")
    if abs(lam) <= 1e-8:
        return t
    return float(math.expm1(-2.0 * lam * t) / math.expm1(-2.0 * lam))


def splitting_rates(metric, potential, pair: HopfColePair, c: float, H: float) -> tuple[float, float]:
    """Analytic (dG/dt, dG*/dt) along the flow at the given phase point."""
    _homogeneity_or_raise(potential)
    q = base_point(potential, pair)
    g = metric.inverse_metric(q)
    f_eta = potential.gradient(pair.eta)
    f_star = potential.gradient(pair.eta_star)
    rate_g = float(f_eta @ g @ f_eta - c * H)
    rate_star = float(-f_star @ g @ f_star + c * H)
    return rate_g, rate_star


@dataclass
class SplitReport:
    """Per-node audit data on the unit-rescaled horizon.

    The scalars H and lam are the effective (rescaled) values T*H and
    T*lambda; slack columns hold (bound RHS - LHS), so a pass is
    min slack >= -1e-7.
    """

    t: np.ndarray
    G: np.ndarray
    Gstar: np.ndarray
    dG_formula: np.ndarray
    dGstar_formula: np.ndarray
    slack_G: np.ndarray
    slack_Gstar: np.ndarray
    c: float
    H: float
    lam: float
    a: float
    m: float

    @property
    def min_slack(self) -> float:
        return float(min(self.slack_G.min(), self.slack_Gstar.min()))

    @property
    def passed(self) -> bool:
        return self.min_slack >= SLACK_TOLERANCE


def _split_series(traj: Trajectory, potential):
    """Transformed pairs and (G, G*) values at every trajectory node.

    Simplex trajectories store gauge-projected momenta plus the accumulated
    projection constants; the split energies are gauge dependent (through
    q.p), so the canonical momentum p + gauge * 1 is restored here.  That
    is the representative along which the rate formulas and the action
    identity hold.
    """
    gauge = traj.diagnostics.get("gauge")
    pairs = []
    for k in range(len(traj)):
        state = traj.state(k)
        if gauge is not None:
            state = PhaseState(state.q, state.p + gauge[k], state.t)
        pairs.append(to_eta(potential, state))
    gs = np.empty(len(traj))
    gstars = np.empty(len(traj))
    for k, pair in enumerate(pairs):
        gs[k], gstars[k] = split(potential, pair)
    return pairs, gs, gstars


def audit_inequalities(traj: Trajectory, potential, metric, lam: float) -> SplitReport:
    """Check the chord bounds for G and G* at every trajectory node.

    G(t) + cHt must stay below the alpha_{1-t} interpolation of its
    endpoint values, and G*(t) - cHt below the mirrored alpha_t
    interpolation of the G* endpoints.
    """
    a, _ = _homogeneity_or_raise(potential)
    m = metric.euler_degree
    c = c_constant(a, m)

    horizon = float(traj.times[-1] - traj.times[0])
    if horizon <= 0:
        raise DomainError("trajectory must span a positive horizon")
    h_eff = float(traj.diagnostics["H"][0]) * horizon
    lam_eff = lam * horizon
    tau = (traj.times - traj.times[0]) / horizon

    pairs, gs, gstars = _split_series(traj, potential)
    rate_g = np.empty(len(traj))
    rate_star = np.empty(len(traj))
    for k, pair in enumerate(pairs):
        rg, rs = splitting_rates(metric, potential, pair, c, h_eff / horizon)
        rate_g[k] = rg * horizon
        rate_star[k] = rs * horizon

    g0, g1 = gs[0], gs[-1]
    s0, s1 = gstars[0], gstars[-1]
    slack_g = np.empty(len(traj))
    slack_s = np.empty(len(traj))
    for k, tk in enumerate(tau):
        a_rev = alpha(lam_eff, 1.0 - tk)
        a_fwd = alpha(lam_eff, tk)
        bound_g = a_rev * g0 + (1.0 - a_rev) * (g1 + c * h_eff)
        bound_s = (1.0 - a_fwd) * s0 + a_fwd * (s1 - c * h_eff)
        slack_g[k] = bound_g - (gs[k] + c * tk * h_eff)
        slack_s[k] = bound_s - (gstars[k] - c * tk * h_eff)

    return SplitReport(
        t=tau,
        G=gs,
        Gstar=gstars,
        dG_formula=rate_g,
        dGstar_formula=rate_star,
        slack_G=slack_g,
        slack_Gstar=slack_s,
        c=c,
        H=h_eff,
        lam=lam_eff,
        a=a,
        m=m,
    )


def action_identity_residual(traj: Trajectory, potential, metric, c: float) -> float:
    """|action - (2 G_end + 2 G*_start - F_start - F_end + 2 c H T)|.

    The identity follows from d/dt (G - G*) = Lagrangian - 2cH integrated
    over the horizon; on a unit horizon the last term is just 2cH.
    """
    _, gs, gstars = _split_series(traj, potential)
    f_start = potential.value(traj.q[0])
    f_end = potential.value(traj.q[-1])
    h_val = float(traj.diagnostics["H"][0])
    horizon = float(traj.times[-1] - traj.times[0])
    predicted = 2.0 * gs[-1] + 2.0 * gstars[0] - f_start - f_end + 2.0 * c * h_val * horizon
    return float(abs(action(metric, potential, traj) - predicted))


def second_derivative_check(traj: Trajectory, potential, metric) -> float:
    """Max mismatch between the covariant-Hessian formula for d^2G/dt^2
    and centered second differences of G over the interior nodes.

    The formula is 2 (h_kl - Gamma^n_kl f_n) u_k u_l with u = G(q) f(eta);
    it needs Christoffel symbols, so only metrics in closed form qualify.
    """
    if not getattr(metric, "has_christoffel", False):
        raise UnsupportedOperationError(
            "second-derivative formula needs Christoffel symbols; "
            "use the finite-difference audit path for this metric"
        )
    _homogeneity_or_raise(potential)
    pairs, gs, _ = _split_series(traj, potential)
    dt = traj.dt
    worst = 0.0
    for k in range(1, len(traj) - 1):
        q = traj.q[k]
        gamma = metric.christoffel(q)
        hess = potential.hessian(q)
        f_q = potential.gradient(q)
        u = metric.inverse_metric(q) @ potential.gradient(pairs[k].eta)
        cov_hess = hess - np.einsum("nkl,n->kl", gamma, f_q)
        formula = 2.0 * float(u @ cov_hess @ u)
        diff = (gs[k + 1] - 2.0 * gs[k] + gs[k - 1]) / dt**2
        worst = max(worst, abs(formula - diff))
    return worst


def max_passing_lambda(traj: Trajectory, potential, metric, lo: float, hi: float,
                       tol: float = 1e-6) -> float:
    """Largest trial lambda in [lo, hi] whose audit passes, by bisection.

    The bound tightens monotonically in lambda.  The result certifies the
    inequality on this trajectory's nodes only; it is not a curvature
    estimate.  Raises if even ``lo`` fails.
    """
    if not audit_inequalities(traj, potential, metric, lo).passed:
        raise DomainError(f"audit already fails at the lower bracket lambda={lo}")
    if audit_inequalities(traj, potential, metric, hi).passed:
        return hi
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if audit_inequalities(traj, potential, metric, mid).passed:
            lo = mid
        else:
            hi = mid
    return lo


def splitting_diagnostics(traj: Trajectory, potential, metric) -> dict:
    """K, G, Gstar columns for attaching to a trajectory export."""
    pairs, gs, gstars = _split_series(traj, potential)
    k_vals = np.array([hamiltonian_K(metric, potential, pair) for pair in pairs])
    return {"K": k_vals, "G": gs, "Gstar": gstars}


def write_split_csv(report: SplitReport, path) -> None:
    """Split-report export: '# key=value' header block, then the columns
    t, G, Gstar, dG_formula, dGstar_formula, slack_G, slack_Gstar.
    """
    fmt = "%.17g"
    with open(path, "w", newline="") as fh:
        for key, value in (("c", report.c), ("H", report.H), ("lambda", report.lam),
                           ("a", report.a), ("m", report.m)):
            fh.write(f"# {key}={fmt % value}\n")
        fh.write("t,G,Gstar,dG_formula,dGstar_formula,slack_G,slack_Gstar\n")
        for k in range(report.t.size):
            row = (report.t[k], report.G[k], report.Gstar[k], report.dG_formula[k],
                   report.dGstar_formula[k], report.slack_G[k], report.slack_Gstar[k])
            fh.write(",".join(fmt % v for v in row) + "\n")
