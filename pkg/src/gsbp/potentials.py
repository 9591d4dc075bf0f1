"""Potential-energy families with exact derivatives and inverse gradients.

Each family exposes value / gradient / hessian / gradient_inverse plus
homogeneity metadata (a, b) satisfying

    F(q) = a^{-1} sum_i q_i dF/dq_i + b

on the family's reference domain.  For ``Entropy`` and ``Renyi`` the
relation holds on the probability simplex only; for ``Quadratic`` it holds
globally when the linear term vanishes (a=2, b=0).

Conventions worth knowing:

* ``Renyi(gamma, m)`` stores the antiderivative in the shifted form

      F(rho) = gamma/(m(m+1)) * [ sum_i (rho_i^{m+1} - (m+1) rho_i) + (m+1) ],

  whose gradient is (gamma/m)(rho_i^m - 1).  On the simplex this equals
  gamma/(m(m+1)) sum_i rho_i^{m+1}; the shift keeps gradient and value
  consistent off the simplex and matches the normalization under which the
  phase-space change of variables needs no extra additive constants.
* ``Entropy(gamma)`` is gamma * sum_i (rho_i log rho_i - rho_i), with
  gradient gamma*log(rho), the m -> 0 companion of the Renyi family.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError, HomogeneityError

__all__ = ["Quadratic", "Entropy", "Renyi", "HomogeneityFit", "homogeneity_fit"]


class Quadratic:
    """F(q) = q^T W q / 2 + U . q with W symmetric positive definite."""

    kind = "quadratic"

    def __init__(self, W, U=None):
        W = np.atleast_2d(np.asarray(W, dtype=float))
        if W.shape[0] != W.shape[1]:
            raise DomainError(f"W must be square, got shape {W.shape}")
        if not np.allclose(W, W.T, atol=1e-12):
            raise DomainError("W must be symmetric")
        eigvals = np.linalg.eigvalsh(W)
        if eigvals[0] <= 0:
            raise DomainError(f"W must be positive definite (min eigenvalue {eigvals[0]:.3e})")
        self.W = W
        self.U = np.zeros(W.shape[0]) if U is None else np.asarray(U, dtype=float)
        if self.U.shape != (W.shape[0],):
            raise DomainError("U length must match W")
        self._lambda_min = float(eigvals[0])

    @property
    def n(self) -> int:
        return self.W.shape[0]

    def check_point(self, q) -> np.ndarray:
        q = np.asarray(q, dtype=float)
        if q.shape != (self.n,):
            raise DomainError(f"expected vector of length {self.n}, got shape {q.shape}")
        return q

    def value(self, q) -> float:
        q = self.check_point(q)
        return float(0.5 * q @ self.W @ q + self.U @ q)

    def gradient(self, q) -> np.ndarray:
        q = self.check_point(q)
        return self.W @ q + self.U

    def hessian(self, q) -> np.ndarray:
        self.check_point(q)
        return self.W.copy()

    def gradient_inverse(self, xi) -> np.ndarray:
        xi = np.asarray(xi, dtype=float)
        return np.linalg.solve(self.W, xi - self.U)

    def homogeneity(self):
        """(a, b) = (2, 0) when the linear term vanishes, else None."""
        if np.any(self.U != 0):
            return None
        return (2.0, 0.0)

    def convexity_lower_bound(self) -> float:
        """Smallest eigenvalue of W: the flat-metric convexity constant."""
        return self._lambda_min

    def __repr__(self) -> str:
        return f"Quadratic(n={self.n})"


class Entropy:
    """F(rho) = gamma * sum_i (rho_i log rho_i - rho_i), rho > 0."""

    kind = "entropy"

    def __init__(self, gamma: float = 1.0):
        if not gamma > 0:
            raise DomainError(f"gamma must be positive, got {gamma}")
        self.gamma = float(gamma)

    def check_point(self, q) -> np.ndarray:
        q = np.asarray(q, dtype=float)
        if np.any(q <= 0) or not np.all(np.isfinite(q)):
            raise DomainError("entropy domain requires strictly positive entries")
        return q

    def value(self, q) -> float:
        q = self.check_point(q)
        return float(self.gamma * np.sum(q * np.log(q) - q))

    def gradient(self, q) -> np.ndarray:
        q = self.check_point(q)
        return self.gamma * np.log(q)

    def hessian(self, q) -> np.ndarray:
        q = self.check_point(q)
        return np.diag(self.gamma / q)

    def gradient_inverse(self, xi) -> np.ndarray:
        xi = np.asarray(xi, dtype=float)
        return np.exp(xi / self.gamma)

    def homogeneity(self):
        """(a, b) = (1, -gamma); valid restricted to the simplex."""
        return (1.0, -self.gamma)

    def __repr__(self) -> str:
        return f"Entropy(gamma={self.gamma})"


class Renyi:
    """Power-law entropy with gradient (gamma/m)(rho_i^m - 1), rho > 0."""

    kind = "renyi"

    def __init__(self, gamma: float, m: float):
        if not gamma > 0:
            raise DomainError(f"gamma must be positive, got {gamma}")
        if not m > 0:
            raise DomainError(f"m must be positive, got {m}")
        self.gamma = float(gamma)
        self.m = float(m)

    def check_point(self, q) -> np.ndarray:
        q = np.asarray(q, dtype=float)
        if np.any(q <= 0) or not np.all(np.isfinite(q)):
            raise DomainError("power-entropy domain requires strictly positive entries")
        return q

    def value(self, q) -> float:
        q = self.check_point(q)
        m = self.m
        total = np.sum(q ** (m + 1.0) - (m + 1.0) * q) + (m + 1.0)
        return float(self.gamma / (m * (m + 1.0)) * total)

    def gradient(self, q) -> np.ndarray:
        q = self.check_point(q)
        return (self.gamma / self.m) * (q**self.m - 1.0)

    def hessian(self, q) -> np.ndarray:
        q = self.check_point(q)
        return np.diag(self.gamma * q ** (self.m - 1.0))

    def gradient_inverse(self, xi) -> np.ndarray:
        xi = np.asarray(xi, dtype=float)
        base = self.m * xi / self.gamma + 1.0
        bad = np.nonzero(base <= 0)[0]
        if bad.size:
            raise DomainError(
                f"covector outside gradient range at component {bad[0]} "
                f"(m*xi/gamma + 1 = {base[bad[0]]:.6g} <= 0)"
            )
        return base ** (1.0 / self.m)

    def homogeneity(self):
        """(a, b) = (m+1, gamma/(m(m+1))); valid restricted to the simplex."""
        return (self.m + 1.0, self.gamma / (self.m * (self.m + 1.0)))

    def __repr__(self) -> str:
        return f"Renyi(gamma={self.gamma}, m={self.m})"


@dataclass(frozen=True)
class HomogeneityFit:
    a: float
    b: float
    residual: float


def homogeneity_fit(potential, samples, constrained: bool = False) -> HomogeneityFit:
    """Least-squares (a, b) in F(q) = a^{-1} q.grad F(q) + b over samples.

    With ``constrained`` set, every sample must lie on the probability
    simplex (mass tolerance 1e-10); families whose homogeneity only holds
    there should be fitted this way.  Raises if the sample set cannot
    identify a (all Euler products equal).
    """
    samples = [np.asarray(q, dtype=float) for q in samples]
    if len(samples) < 3:
        raise DomainError(f"need at least 3 sample points, got {len(samples)}")
    if constrained:
        for q in samples:
            if abs(q.sum() - 1.0) > 1e-10:
                raise DomainError("constrained fit requires simplex samples")
    s = np.array([float(q @ potential.gradient(q)) for q in samples])
    f = np.array([potential.value(q) for q in samples])
    if np.ptp(s) < 1e-12 * max(1.0, np.max(np.abs(s))):
        raise HomogeneityError("degenerate samples: all Euler products q.grad F coincide")
    design = np.column_stack([s, np.ones_like(s)])
    (inv_a, b), *_ = np.linalg.lstsq(design, f, rcond=None)
    if inv_a == 0:
        raise HomogeneityError("fit produced a^{-1} = 0; potential is not homogeneous")
    a = 1.0 / inv_a
    residual = float(np.max(np.abs(f - inv_a * s - b)))
    return HomogeneityFit(a=float(a), b=float(b), residual=residual)
