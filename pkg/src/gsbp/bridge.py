"""Two-endpoint boundary-value solver by shooting on the initial momentum.

The endpoint map p0 -> q(T; x, p0) is integrated with the implicit
midpoint rule and its terminal residual against the target y is driven to
zero with Levenberg-Marquardt: finite-difference Jacobian, damped steps,
and damping inflation whenever a trial shot leaves the state domain.

On simplex metrics both the unknown p0 and the residual live in the
zero-mean subspace (the gauge direction is unobservable and the terminal
mass is conserved), so the solver works in an orthonormal basis of that
subspace and reports the residual max-norm in gauge-projected coordinates.

Single shooting is adequate at the horizons used here (T <= 1, smooth
flows); stiffness from the gradient-flow part is absorbed by the damping.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dynamics import PhaseState, Trajectory, action, integrate
from .errors import DomainError, DomainExitError, ShootingError, StepFailureError
from .metrics import project_mean_zero

__all__ = ["BridgeProblem", "BridgeResult", "solve", "quadratic_oracle"]


@dataclass
class BridgeProblem:
    """Endpoint data and solver knobs for one bridge instance."""

    metric: object
    potential: object
    x: np.ndarray
    y: np.ndarray
    T: float = 1.0
    dt: float = 1e-3
    tol: float = 1e-8
    max_iter: int = 60

    def __post_init__(self):
        self.x = self.metric.check_point(np.asarray(self.x, dtype=float))
        self.y = self.metric.check_point(np.asarray(self.y, dtype=float))
        if self.x.shape != self.y.shape:
            raise DomainError("endpoints must have equal length")
        if getattr(self.metric, "is_simplex", False):
            for name, v in (("x", self.x), ("y", self.y)):
                if abs(v.sum() - 1.0) > 1e-12:
                    raise DomainError(f"endpoint {name} has mass {v.sum()!r}, expected 1")


@dataclass
class BridgeResult:
    p0: np.ndarray
    trajectory: Trajectory
    action: float
    residual: float
    iterations: int


def _gauge_basis(n: int) -> np.ndarray:
    """Orthonormal basis of the zero-mean subspace of R^n, shape (n, n-1)."""
    basis = np.linalg.svd(np.eye(n) - np.ones((n, n)) / n)[0][:, : n - 1]
    return basis


def solve(problem: BridgeProblem, p0_guess=None, warm_start: bool = False) -> BridgeResult:
    """Levenberg-Marquardt shooting; returns the converged initial momentum,
    the corresponding trajectory and its action.

    ``warm_start`` seeds p0 with grad F(y) - grad F(x) (gauge projected),
    the momentum the transform structure suggests for gradient-dominated
    bridges; the default seed is zero.  Raises ``ShootingError`` with the
    best iterate when the residual cannot be reduced below tolerance.
    """
    metric, potential = problem.metric, problem.potential
    n = problem.x.size
    simplex = getattr(metric, "is_simplex", False)
    basis = _gauge_basis(n) if simplex else np.eye(n)
    dim = basis.shape[1]

    p_warm = potential.gradient(problem.y) - potential.gradient(problem.x)
    if p0_guess is not None:
        seed = np.asarray(p0_guess, dtype=float)
    elif warm_start:
        seed = p_warm.copy()
    else:
        seed = np.zeros(n)
    def shoot(u_vec):
        p0 = basis @ u_vec
        traj = integrate(metric, potential, PhaseState(problem.x, p0), problem.T, problem.dt)
        return traj, basis.T @ (traj.q[-1] - problem.y)

    def full_residual(traj):
        r = traj.q[-1] - problem.y
        if simplex:
            r = project_mean_zero(r)
        return float(np.max(np.abs(r)))

    # The seed itself must survive [0, T]: unstable gradient parts can drive
    # a shot out of the domain in finite time.  When the requested seed
    # exits, fall back to a deterministic ladder of warm-start fractions;
    # among surviving ladder starts the smallest terminal residual wins,
    # ties broken by lowest ladder index.
    u = traj = r = None
    try:
        u = basis.T @ seed
        traj, r = shoot(u)
    except (DomainExitError, StepFailureError):
        u = traj = r = None
        for c in (0.5, 0.25, 0.75, 0.125, 0.625, 0.375, 0.875, 1.0):
            p_cand = project_mean_zero(c * p_warm) if simplex else c * p_warm
            u_cand = basis.T @ p_cand
            try:
                traj_cand, r_cand = shoot(u_cand)
            except (DomainExitError, StepFailureError):
                continue
            if r is None or float(np.max(np.abs(r_cand))) < float(np.max(np.abs(r))):
                u, traj, r = u_cand, traj_cand, r_cand
    if u is None:
        raise ShootingError(float("inf"), basis @ (basis.T @ seed), 0)

    best = (float(np.max(np.abs(r))), u.copy(), traj)
    damping = 1e-3
    fd_step = 1e-6
    iterations = 0

    for iterations in range(1, problem.max_iter + 1):
        if full_residual(best[2]) <= problem.tol:
            break
        # finite-difference Jacobian of the reduced residual map
        jac = np.empty((dim, dim))
        for i in range(dim):
            du = np.zeros(dim)
            du[i] = fd_step
            try:
                _, r_plus = shoot(u + du)
                _, r_minus = shoot(u - du)
            except (DomainExitError, StepFailureError):
                # one-sided fallback near the domain boundary
                _, r_plus = shoot(u)
                r_minus = r
                du[i] = 0.0  # zero column; LM damping will still move
            denom = 2 * fd_step if du[i] else fd_step
            jac[:, i] = (r_plus - r_minus) / denom

        improved = False
        for _ in range(25):
            lhs = jac.T @ jac + damping * np.eye(dim)
            try:
                step = np.linalg.solve(lhs, jac.T @ r)
            except np.linalg.LinAlgError:
                damping *= 10
                continue
            u_try = u - step
            try:
                traj_try, r_try = shoot(u_try)
            except (DomainExitError, StepFailureError):
                damping *= 10  # trial left the domain: reject, stiffen
                continue
            if np.max(np.abs(r_try)) < np.max(np.abs(r)):
                u, r, traj = u_try, r_try, traj_try
                damping = max(damping / 10, 1e-12)
                improved = True
                break
            damping *= 10
        if not improved:
            break
        if np.max(np.abs(r)) < best[0]:
            best = (float(np.max(np.abs(r))), u.copy(), traj)

    res = full_residual(best[2])
    if res > problem.tol:
        raise ShootingError(res, basis @ best[1], iterations)
    traj = best[2]
    return BridgeResult(
        p0=basis @ best[1],
        trajectory=traj,
        action=action(metric, potential, traj),
        residual=res,
        iterations=iterations,
    )


def quadratic_oracle(W, x, y, T: float = 1.0) -> np.ndarray:
    """Exact initial momentum for the flat-metric quadratic bridge.

    In transformed coordinates the flow is eta(t) = e^{Wt} eta0,
    eta*(t) = e^{-Wt} eta0*; matching q(0) = eta0 + eta0* = x and
    q(T) = e^{WT} eta0 + e^{-WT} eta0* = y is a per-eigenmode 2x2 solve,
    giving p0 = W (eta0 - eta0*).  W must be symmetric positive definite.
    """
    W = np.atleast_2d(np.asarray(W, dtype=float))
    x = np.atleast_1d(np.asarray(x, dtype=float))
    y = np.atleast_1d(np.asarray(y, dtype=float))
    eigvals, vecs = np.linalg.eigh(W)
    if eigvals[0] <= 0:
        raise DomainError("W must be positive definite")
    x_hat = vecs.T @ x
    y_hat = vecs.T @ y
    grow = np.exp(eigvals * T)
    decay = np.exp(-eigvals * T)
    eta0_hat = (y_hat - decay * x_hat) / (grow - decay)
    star0_hat = x_hat - eta0_hat
    p0_hat = eigvals * (eta0_hat - star0_hat)
    return vecs @ p0_hat
