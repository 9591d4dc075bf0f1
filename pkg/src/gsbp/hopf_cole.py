"""Phase-space change of variables (q, p) <-> (eta, eta*).

The transform is defined through the potential's gradient f = grad F:

    f(eta)  = (p + f(q)) / 2,
    f(eta*) = (-p + f(q)) / 2,

inverted componentwise (Entropy, Renyi) or linearly (Quadratic) via the
potential's ``gradient_inverse``.  Conversely q = f^{-1}(f(eta) + f(eta*))
and p = f(eta) - f(eta*).  The two free additive constants of the transform
are fixed to zero.

For the entropy family with unit coefficient this is the classical
substitution eta = sqrt(rho) exp(S/2), eta* = sqrt(rho) exp(-S/2).

In the new variables the flow is again Hamiltonian,

    d(eta)/dt  = -sigma(eta, eta*)   dK/d(eta*),
    d(eta*)/dt =  sigma(eta, eta*)^T dK/d(eta),

with K(eta, eta*) = H(q, p) = -2 f(eta)^T G(q) f(eta*) and the coefficient

    sigma = 1/2 h(eta)^{-1} h(q) h(eta*)^{-1},        h = Hess F,

which does not involve the metric at all.  For the entropy family sigma is
the constant matrix I/(2 gamma); for Quadratic(W) it is W^{-1}/2 (note the
quadratic case composes to h^{-1} h h^{-1} = W^{-1}, halved -- the flat
example d(eta)/dt = W eta pins this normalization).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .dynamics import PhaseState, _midpoint_step, flow_field
from .errors import DomainError, DomainExitError
from .metrics import project_mean_zero

__all__ = [
    "HopfColePair",
    "to_eta",
    "from_eta",
    "base_point",
    "sigma",
    "hamiltonian_K",
    "eta_flow_field",
    "EtaTrajectory",
    "integrate_eta",
    "SymplecticCheck",
    "symplectic_residual",
    "write_eta_trajectory_csv",
]


@dataclass(frozen=True)
class HopfColePair:
    """The transformed pair (eta, eta*), both in the potential's domain."""

    eta: np.ndarray
    eta_star: np.ndarray

    def __post_init__(self):
        eta = np.asarray(self.eta, dtype=float)
        eta_star = np.asarray(self.eta_star, dtype=float)
        if eta.shape != eta_star.shape or eta.ndim != 1:
            raise DomainError(
                f"eta and eta* must be 1-d with equal length, got {eta.shape} / {eta_star.shape}"
            )
        object.__setattr__(self, "eta", eta)
        object.__setattr__(self, "eta_star", eta_star)


def to_eta(potential, state: PhaseState) -> HopfColePair:
    """Forward transform; both half-sums must lie in the gradient range."""
    f_q = potential.gradient(state.q)
    eta = potential.gradient_inverse(0.5 * (state.p + f_q))
    eta_star = potential.gradient_inverse(0.5 * (-state.p + f_q))
    return HopfColePair(eta, eta_star)


def base_point(potential, pair: HopfColePair) -> np.ndarray:
    """q = f^{-1}(f(eta) + f(eta*))."""
    return potential.gradient_inverse(
        potential.gradient(pair.eta) + potential.gradient(pair.eta_star)
    )


def from_eta(potential, pair: HopfColePair, t: float = 0.0) -> PhaseState:
    """Inverse transform: q = f^{-1}(f(eta)+f(eta*)), p = f(eta)-f(eta*)."""
    f_eta = potential.gradient(pair.eta)
    f_star = potential.gradient(pair.eta_star)
    q = potential.gradient_inverse(f_eta + f_star)
    return PhaseState(q, f_eta - f_star, t)


def sigma(potential, pair: HopfColePair) -> np.ndarray:
    """The flow coefficient h(eta)^{-1} h(q) h(eta*)^{-1} / 2.

    Metric independent.  Satisfies sigma(eta, eta*)^T = sigma(eta*, eta).
    """
    q = base_point(potential, pair)
    h_eta = potential.hessian(pair.eta)
    h_q = potential.hessian(q)
    h_star = potential.hessian(pair.eta_star)
    return 0.5 * np.linalg.solve(h_eta, h_q) @ np.linalg.inv(h_star)


def hamiltonian_K(metric, potential, pair: HopfColePair) -> float:
    """Transformed Hamiltonian K = -2 f(eta)^T G(q) f(eta*).

    Coincides with H evaluated at the inverse-transformed state; this is an
    exact algebraic identity, since H factors through
    (p + f(q))^T G (p - f(q)) / 2 = -2 f(eta)^T G f(eta*).
    """
    q = base_point(potential, pair)
    g = metric.inverse_metric(q)
    return float(-2.0 * potential.gradient(pair.eta) @ g @ potential.gradient(pair.eta_star))


def eta_flow_field(metric, potential, pair: HopfColePair):
    """The sigma-weighted symplectic field in the new variables.

    Evaluated analytically through the chain rule: with
    w_a = f(eta)^T (dG/dq_a) f(eta*)  and  dq/d(eta*) = h(q)^{-1} h(eta*),

        dK/d(eta*) = -2 h(eta*) [ h(q)^{-1} w + G f(eta) ],
        dK/d(eta)  = -2 h(eta)  [ h(q)^{-1} w + G f(eta*) ],

    so composing with sigma gives

        d(eta)/dt  =  h(eta)^{-1}  ( w + h(q) G f(eta)  ),
        d(eta*)/dt = -h(eta*)^{-1} ( w + h(q) G f(eta*) ).

    For the flat quadratic case this collapses to the gradient ascent and
    descent pair d(eta)/dt = W eta + U, d(eta*)/dt = -(W eta* + U).
    """
    q = base_point(potential, pair)
    metric.check_point(q)
    g = metric.inverse_metric(q)
    f_eta = potential.gradient(pair.eta)
    f_star = potential.gradient(pair.eta_star)
    h_q = potential.hessian(q)
    w = metric.quad_form_gradient(q, f_eta, f_star)
    eta_dot = np.linalg.solve(potential.hessian(pair.eta), w + h_q @ (g @ f_eta))
    eta_star_dot = -np.linalg.solve(potential.hessian(pair.eta_star), w + h_q @ (g @ f_star))
    return eta_dot, eta_star_dot


@dataclass
class EtaTrajectory:
    """Uniform-grid trajectory in the transformed variables."""

    times: np.ndarray
    eta: np.ndarray  # shape (N, n)
    eta_star: np.ndarray  # shape (N, n)
    diagnostics: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return self.times.size

    def pair(self, k: int) -> HopfColePair:
        return HopfColePair(self.eta[k], self.eta_star[k])


def integrate_eta(metric, potential, pair0: HopfColePair, T: float, dt: float, *, t0: float = 0.0,
                  solver_tol: float = 1e-12) -> EtaTrajectory:
    """Implicit-midpoint trajectory of the transformed flow.

    Records K and the base-point mass per node.  The product sum(eta eta*)
    is a quadratic invariant of the flow on simplex metrics, which the
    midpoint rule conserves exactly, so the mass column stays flat.
    """
    if dt <= 0 or T <= 0:
        raise DomainError(f"need positive T and dt, got T={T}, dt={dt}")
    steps_float = T / dt
    steps = int(round(steps_float))
    if abs(steps_float - steps) > 1e-9:
        raise DomainError(f"T/dt = {steps_float!r} is not an integer")

    eta0 = potential.check_point(pair0.eta)
    star0 = potential.check_point(pair0.eta_star)
    n = eta0.size

    def fieldfn(z):
        d_eta, d_star = eta_flow_field(metric, potential, HopfColePair(z[:n], z[n:]))
        return np.concatenate([d_eta, d_star])

    times = t0 + dt * np.arange(steps + 1)
    etas = np.empty((steps + 1, n))
    stars = np.empty((steps + 1, n))
    etas[0], stars[0] = eta0, star0

    simplex = getattr(metric, "is_simplex", False)
    z = np.concatenate([eta0, star0])
    for k in range(steps):
        try:
            z = _midpoint_step(fieldfn, z, dt, k, tol=solver_tol)
            potential.check_point(z[:n])
            potential.check_point(z[n:])
        except DomainError as exc:
            raise DomainExitError(float(times[k + 1]), str(exc)) from exc
        if simplex:
            # mirror the (q, p) integrator: hold the pair on the zero-mean
            # momentum slice so both parametrizations stay comparable
            state = from_eta(potential, HopfColePair(z[:n], z[n:]))
            refixed = to_eta(potential, PhaseState(state.q, project_mean_zero(state.p)))
            z = np.concatenate([refixed.eta, refixed.eta_star])
        etas[k + 1], stars[k + 1] = z[:n], z[n:]

    traj = EtaTrajectory(times=times, eta=etas, eta_star=stars)
    k_vals = np.empty(steps + 1)
    mass = np.empty(steps + 1)
    for k in range(steps + 1):
        pair = traj.pair(k)
        k_vals[k] = hamiltonian_K(metric, potential, pair)
        mass[k] = base_point(potential, pair).sum()
    traj.diagnostics["K"] = k_vals
    traj.diagnostics["mass"] = mass
    return traj


# ---------------------------------------------------------------------------
# Symplectic verification
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SymplecticCheck:
    """Residuals of the two numerical symplecticity identities.

    flow_residual: max-norm of J X_K - X_H(s(pair)), the pushforward of the
    transformed field against the canonical field, with J the central
    finite-difference Jacobian of the inverse transform.

    form_residual: max-norm of J^T Omega J - Pi, where Omega is the
    canonical block [[0, I], [-I, 0]] for the orientation
    omega((dq1, dp1), (dq2, dp2)) = dq1.dp2 - dq2.dp1, and
    Pi = [[0, -sigma^{-T}], [sigma^{-1}, 0]] is the constant-in-sigma block
    matrix of the pulled-back form under that same orientation (its inverse
    transpose is the coefficient block [[0, -sigma], [sigma^T, 0]] that
    drives the transformed flow).
    """

    flow_residual: float
    form_residual: float


def _jacobian_from_eta(potential, pair: HopfColePair, step: float) -> np.ndarray:
    n = pair.eta.size
    z0 = np.concatenate([pair.eta, pair.eta_star])

    def smap(z):
        state = from_eta(potential, HopfColePair(z[:n], z[n:]))
        return np.concatenate([state.q, state.p])

    jac = np.empty((2 * n, 2 * n))
    for i in range(2 * n):
        dz = np.zeros(2 * n)
        dz[i] = step
        jac[:, i] = (smap(z0 + dz) - smap(z0 - dz)) / (2.0 * step)
    return jac


def symplectic_residual(metric, potential, pair: HopfColePair, *, fd_step: float = 1e-5) -> SymplecticCheck:
    """Numerically verify that the change of variables is symplectic.

    Central differences with the given step; at unit scale the residual is
    dominated by O(step^2) truncation, so ~1e-10 fields yield ~1e-6 checks.
    """
    n = pair.eta.size
    jac = _jacobian_from_eta(potential, pair, fd_step)

    d_eta, d_star = eta_flow_field(metric, potential, pair)
    x_k = np.concatenate([d_eta, d_star])
    state = from_eta(potential, pair)
    qdot, pdot = flow_field(metric, potential, state)
    x_h = np.concatenate([qdot, pdot])
    flow_res = float(np.max(np.abs(jac @ x_k - x_h)))

    sig = sigma(potential, pair)
    sig_inv = np.linalg.inv(sig)
    eye = np.eye(n)
    zero = np.zeros((n, n))
    omega = np.block([[zero, eye], [-eye, zero]])
    target = np.block([[zero, -sig_inv.T], [sig_inv, zero]])
    form_res = float(np.max(np.abs(jac.T @ omega @ jac - target)))
    return SymplecticCheck(flow_residual=flow_res, form_residual=form_res)


def write_eta_trajectory_csv(traj: EtaTrajectory, path) -> None:
    """Columns: t, eta_1..n, etastar_1..n, K, mass (17 significant digits)."""
    n = traj.eta.shape[1]
    header = (
        ["t"]
        + [f"eta_{i+1}" for i in range(n)]
        + [f"etastar_{i+1}" for i in range(n)]
        + ["K", "mass"]
    )
    with open(path, "w", newline="") as fh:
        fh.write(",".join(header) + "\n")
        for k in range(len(traj)):
            row = [traj.times[k], *traj.eta[k], *traj.eta_star[k],
                   traj.diagnostics["K"][k], traj.diagnostics["mass"][k]]
            fh.write(",".join("%.17g" % v for v in row) + "\n")
