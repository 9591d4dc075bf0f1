"""Hamiltonian flow evaluation and symplectic time integration.

The flow is generated by

    H(q, p) = p^T G(q) p / 2 - f(q)^T G(q) f(q) / 2,      f = grad F,

with canonical equations

    dq/dt = G(q) p,
    dp_i/dt = -1/2 p^T (dG/dq_i) p + 1/2 f^T (dG/dq_i) f + (h(q) G(q) f(q))_i,

where h is the Hessian of F.  On graph metrics the q-equation is the graph
continuity equation drho_i/dt + sum_j w_ij theta_ij(rho) (S_j - S_i) = 0
(theta-weighted, matching drho/dt = L(rho) S), and the p-equation is the
graph Hamilton-Jacobi equation with right-hand side d/drho_i of
I(rho) = f^T L(rho) f, halved.

Time stepping uses the implicit midpoint rule: second order, symplectic,
and applicable here because G depends on q, making H non-separable.  The
momentum gauge (zero mean) is re-imposed after every step on simplex
metrics; all physical quantities are invariant under that shift.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, DomainExitError, StepFailureError
from .metrics import project_mean_zero

__all__ = [
    "PhaseState",
    "Trajectory",
    "hamiltonian",
    "flow_field",
    "integrate",
    "action",
    "write_trajectory_csv",
]


@dataclass(frozen=True)
class PhaseState:
    """Position/density q and momentum/potential p at time t."""

    q: np.ndarray
    p: np.ndarray
    t: float = 0.0

    def __post_init__(self):
        q = np.asarray(self.q, dtype=float)
        p = np.asarray(self.p, dtype=float)
        if q.shape != p.shape or q.ndim != 1:
            raise DomainError(f"q and p must be 1-d with equal length, got {q.shape} / {p.shape}")
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "p", p)


@dataclass
class Trajectory:
    """Uniform-grid trajectory with per-node diagnostics.

    ``diagnostics`` always holds H, F and mass; post-processing may attach
    further columns (K, G, Gstar, ...) of matching length.
    """

    times: np.ndarray
    q: np.ndarray  # shape (N, n)
    p: np.ndarray  # shape (N, n)
    diagnostics: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return self.times.size

    @property
    def dt(self) -> float:
        return float(self.times[1] - self.times[0])

    def state(self, k: int) -> PhaseState:
        return PhaseState(self.q[k], self.p[k], float(self.times[k]))

    def final_state(self) -> PhaseState:
        return self.state(len(self) - 1)


def hamiltonian(metric, potential, state: PhaseState) -> float:
    """H(q, p); gauge invariant on simplex metrics since G annihilates constants."""
    q = metric.check_point(state.q)
    g = metric.inverse_metric(q)
    f = potential.gradient(q)
    return float(0.5 * state.p @ g @ state.p - 0.5 * f @ g @ f)


def flow_field(metric, potential, state: PhaseState):
    """Right-hand side (dq/dt, dp/dt) of the canonical equations."""
    q = metric.check_point(state.q)
    p = state.p
    g = metric.inverse_metric(q)
    f = potential.gradient(q)
    h = potential.hessian(q)
    qdot = g @ p
    pdot = (
        -0.5 * metric.quad_form_gradient(q, p, p)
        + 0.5 * metric.quad_form_gradient(q, f, f)
        + h @ (g @ f)
    )
    return qdot, pdot


def action(metric, potential, traj: Trajectory) -> float:
    """Integrated Lagrangian |v|^2/2 + |grad F|^2/2 along the trajectory.

    In momentum coordinates the integrand is p^T G p / 2 + f^T G f / 2,
    evaluated with the trapezoid rule on the trajectory grid.
    """
    if len(traj) == 0:
        raise DomainError("empty trajectory")
    lag = np.empty(len(traj))
    for k in range(len(traj)):
        q = traj.q[k]
        g = metric.inverse_metric(q)
        f = potential.gradient(q)
        lag[k] = 0.5 * traj.p[k] @ g @ traj.p[k] + 0.5 * f @ g @ f
    return float(np.sum((lag[1:] + lag[:-1]) * np.diff(traj.times)) / 2.0)


# ---------------------------------------------------------------------------
# Implicit midpoint stepping
# ---------------------------------------------------------------------------


def _midpoint_step(field, z0, dt, step_index, tol=1e-12, max_iter=50):
    """One implicit-midpoint step: solve z = z0 + dt * field((z0+z)/2).

    Fixed-point iteration with an explicit-Euler predictor; if it stalls,
    falls back to damped Newton with a finite-difference Jacobian of the
    midpoint residual.  Non-finite iterates (overflowing trial states on an
    exploding trajectory) are reported as domain errors.
    """
    f0 = field(z0)
    z = z0 + dt * f0
    for _ in range(max_iter):
        with np.errstate(over="ignore", invalid="ignore"):
            z_next = z0 + dt * field(0.5 * (z0 + z))
        if not np.all(np.isfinite(z_next)):
            raise DomainError("state overflowed during the midpoint solve")
        delta = float(np.max(np.abs(z_next - z)))
        z = z_next
        if delta <= tol:
            return z
    # Newton fallback on g(z) = z - z0 - dt f((z0+z)/2)
    n = z0.size
    for _ in range(max_iter):
        mid = 0.5 * (z0 + z)
        g_val = z - z0 - dt * field(mid)
        if float(np.max(np.abs(g_val))) <= tol:
            return z
        jac = np.eye(n)
        eps = 1e-7
        for i in range(n):
            dz = np.zeros(n)
            dz[i] = eps
            df = (field(mid + dz) - field(mid - dz)) / (2 * eps)
            jac[:, i] -= 0.5 * dt * df  # dg/dz = I - dt/2 J_field(mid)
        try:
            step = np.linalg.solve(jac, g_val)
        except np.linalg.LinAlgError:
            break
        damping = 1.0
        base = float(np.max(np.abs(g_val)))
        while damping > 1e-4:
            z_try = z - damping * step
            try:
                g_try = z_try - z0 - dt * field(0.5 * (z0 + z_try))
            except (DomainError, FloatingPointError):
                damping *= 0.5
                continue
            if float(np.max(np.abs(g_try))) < base:
                z = z_try
                break
            damping *= 0.5
        else:
            break
    mid = 0.5 * (z0 + z)
    residual = float(np.max(np.abs(z - z0 - dt * field(mid))))
    if residual <= tol:
        return z
    raise StepFailureError(step_index, residual)


def integrate(metric, potential, s0: PhaseState, T: float, dt: float, *, solver_tol: float = 1e-12) -> Trajectory:
    """Implicit-midpoint trajectory of the canonical flow on [t0, t0+T].

    T/dt must be an integer (tolerance 1e-9).  On simplex metrics the
    initial density must have unit mass, the initial momentum is projected
    to the zero-mean gauge, and the gauge is re-imposed after each step.
    A state whose density touches the boundary aborts with the exit time;
    positivity is a standing assumption of the geometry, so no clamping.
    """
    if dt <= 0 or T <= 0:
        raise DomainError(f"need positive T and dt, got T={T}, dt={dt}")
    steps_float = T / dt
    steps = int(round(steps_float))
    if abs(steps_float - steps) > 1e-9:
        raise DomainError(f"T/dt = {steps_float!r} is not an integer")

    q0 = metric.check_point(s0.q)
    p0 = np.asarray(s0.p, dtype=float)
    simplex = getattr(metric, "is_simplex", False)
    if simplex:
        if abs(q0.sum() - 1.0) > 1e-12:
            raise DomainError(f"initial density mass {q0.sum()!r} is not 1")
        p0 = project_mean_zero(p0)

    n = q0.size

    def field(z):
        state = PhaseState(z[:n], z[n:])
        qdot, pdot = flow_field(metric, potential, state)
        return np.concatenate([qdot, pdot])

    times = s0.t + dt * np.arange(steps + 1)
    qs = np.empty((steps + 1, n))
    ps = np.empty((steps + 1, n))
    qs[0], ps[0] = q0, p0
    gauge = np.zeros(steps + 1)

    z = np.concatenate([q0, p0])
    for k in range(steps):
        try:
            z = _midpoint_step(field, z, dt, k, tol=solver_tol)
            metric.check_point(z[:n])
            potential.check_point(z[:n])
        except DomainError as exc:
            raise DomainExitError(float(times[k + 1]), str(exc)) from exc
        if simplex:
            # The momentum equation is equivariant under constant shifts, so
            # projecting the stored momentum each step and accumulating the
            # removed means reconstructs the canonical (unprojected) momentum
            # exactly: p_canonical = p + gauge * 1.
            shift = float(z[n:].mean())
            gauge[k + 1] = gauge[k] + shift
            z[n:] = z[n:] - shift
        qs[k + 1], ps[k + 1] = z[:n], z[n:]

    traj = Trajectory(times=times, q=qs, p=ps)
    if simplex:
        traj.diagnostics["gauge"] = gauge
    h_vals = np.empty(steps + 1)
    f_vals = np.empty(steps + 1)
    for k in range(steps + 1):
        h_vals[k] = hamiltonian(metric, potential, traj.state(k))
        f_vals[k] = potential.value(traj.q[k])
    traj.diagnostics["H"] = h_vals
    traj.diagnostics["F"] = f_vals
    traj.diagnostics["mass"] = traj.q.sum(axis=1)
    return traj


# ---------------------------------------------------------------------------
# Export
# ---------------------------------------------------------------------------

_FMT = "%.17g"


def write_trajectory_csv(traj: Trajectory, path) -> None:
    """Delimiter-separated trajectory export.

    Columns: t, q_1..q_n, p_1..p_n, H, F, mass, then any extra diagnostic
    columns in insertion order.  All floats use 17 significant digits so
    repeated runs diff exactly.
    """
    n = traj.q.shape[1]
    extra = [k for k in traj.diagnostics if k not in ("H", "F", "mass")]
    header = (
        ["t"]
        + [f"q_{i+1}" for i in range(n)]
        + [f"p_{i+1}" for i in range(n)]
        + ["H", "F", "mass"]
        + extra
    )
    with open(path, "w", newline="") as fh:
        fh.write(",".join(header) + "\n")
        for k in range(len(traj)):
            row = [traj.times[k], *traj.q[k], *traj.p[k]]
            row += [traj.diagnostics["H"][k], traj.diagnostics["F"][k], traj.diagnostics["mass"][k]]
            row += [traj.diagnostics[name][k] for name in extra]
            fh.write(",".join(_FMT % v for v in row) + "\n")
