"""State-space geometries used by the bridge flows.

Three inverse-metric families share one small interface:

* ``Euclidean``              G(q) = I.
* ``DiagonalPower(m)``       G(q) = diag(q_i^m) on the positive orthant.
  A synthetic family whose Euler degree is exactly m; it exercises the
  splitting constant away from the flat (m=0) and simplex (m=1) cases.
* ``GraphWasserstein(graph)`` G(rho) = L(rho), the density-weighted graph
  Laplacian with edge density theta_ij(rho) = (rho_i/d_i + rho_j/d_j)/2.

All downstream computations only need G(q), directional derivatives of G,
and (where the kind admits them in closed form) Christoffel symbols of the
metric tensor g = G^{-1}.

Homogeneity convention: a metric has Euler degree m when

    sum_i q_i dG^{jk}/dq_i = m G^{jk}(q)   for all q.

Euclidean metrics have degree 0, DiagonalPower(m) has degree m, and the
graph Laplacian is linear in rho, hence degree 1.  The constant-c formula
of the splitting module uses this convention throughout.
"""

from __future__ import annotations

from dataclasses import dataclass
import json

import numpy as np

from .errors import (
    DomainError,
    GraphError,
    NotAnEdgeError,
    UnsupportedOperationError,
)

__all__ = [
    "Graph",
    "SimplexDensity",
    "Euclidean",
    "DiagonalPower",
    "GraphWasserstein",
    "metric_homogeneity_degree",
    "project_mean_zero",
]


def project_mean_zero(p: np.ndarray) -> np.ndarray:
    """Fix the additive gauge of a simplex momentum: subtract the mean."""
    p = np.asarray(p, dtype=float)
    return p - p.mean()


class Graph:
    """Weighted undirected connected graph with normalized vertex weights.

    Edges are stored once as (i, j, weight) with i < j and weight > 0; each
    is interpreted in both directions.  The vertex weight is

        d_i = sum_j w_ij / sum_ij w_ij,

    where the denominator counts every edge twice, so sum_i d_i = 1.
    """

    def __init__(self, n: int, edges):
        if n < 2:
            raise GraphError(f"need at least 2 vertices, got {n}")
        seen = set()
        norm = []
        for e in edges:
            if len(e) != 3:
                raise GraphError(f"edge {e!r} is not an (i, j, weight) triple")
            i, j, w = int(e[0]), int(e[1]), float(e[2])
            if i == j:
                raise GraphError(f"self loop at vertex {i}")
            if not (0 <= i < n and 0 <= j < n):
                raise GraphError(f"edge ({i}, {j}) out of range for n={n}")
            if i > j:
                i, j = j, i
            if (i, j) in seen:
                raise GraphError(f"duplicate edge ({i}, {j})")
            if w <= 0:
                raise GraphError(f"edge ({i}, {j}) has non-positive weight {w}")
            seen.add((i, j))
            norm.append((i, j, w))
        if not norm:
            raise GraphError("graph has no edges")

        self.n = n
        self.edges = tuple(norm)
        self._ei = np.array([e[0] for e in norm], dtype=int)
        self._ej = np.array([e[1] for e in norm], dtype=int)
        self._w = np.array([e[2] for e in norm], dtype=float)

        strength = np.zeros(n)
        np.add.at(strength, self._ei, self._w)
        np.add.at(strength, self._ej, self._w)
        total = strength.sum()  # every edge counted twice
        self.d = strength / total
        self._edge_index = {(i, j): k for k, (i, j, _) in enumerate(norm)}

        if not self._connected():
            raise GraphError("graph is not connected")

    def _connected(self) -> bool:
        adj = [[] for _ in range(self.n)]
        for i, j, _ in self.edges:
            adj[i].append(j)
            adj[j].append(i)
        seen = {0}
        stack = [0]
        while stack:
            u = stack.pop()
            for v in adj[u]:
                if v not in seen:
                    seen.add(v)
                    stack.append(v)
        return len(seen) == self.n

    # -- edge density ------------------------------------------------------

    def theta(self, rho: np.ndarray, i: int, j: int) -> float:
        """Edge density theta_ij(rho) = (rho_i/d_i + rho_j/d_j) / 2."""
        if i > j:
            i, j = j, i
        if (i, j) not in self._edge_index:
            raise NotAnEdgeError(f"({i}, {j}) is not an edge")
        rho = self._check_nonneg(rho)
        return 0.5 * (rho[i] / self.d[i] + rho[j] / self.d[j])

    def _theta_all(self, rho: np.ndarray) -> np.ndarray:
        return 0.5 * (rho[self._ei] / self.d[self._ei] + rho[self._ej] / self.d[self._ej])

    def _check_nonneg(self, rho) -> np.ndarray:
        rho = np.asarray(rho, dtype=float)
        if rho.shape != (self.n,):
            raise DomainError(f"expected vector of length {self.n}, got shape {rho.shape}")
        if np.any(rho < 0):
            raise DomainError("density has negative entries")
        return rho

    # -- Laplacian ---------------------------------------------------------

    def laplacian(self, rho: np.ndarray) -> np.ndarray:
        """Density-weighted Laplacian L(rho); symmetric, rows sum to zero."""
        return self._laplacian_raw(self._check_nonneg(rho))

    def laplacian_directional_derivative(self, v: np.ndarray) -> np.ndarray:
        """Directional derivative of L at any base point: equals L(v).

        L is linear in its argument, so the derivative in direction v is the
        same structural formula with theta evaluated at v (sign-unrestricted).
        """
        v = np.asarray(v, dtype=float)
        if v.shape != (self.n,):
            raise DomainError(f"expected vector of length {self.n}, got shape {v.shape}")
        return self._laplacian_raw(v)

    def _laplacian_raw(self, rho: np.ndarray) -> np.ndarray:
        wt = self._w * self._theta_all(rho)
        lap = np.zeros((self.n, self.n))
        lap[self._ei, self._ej] -= wt
        lap[self._ej, self._ei] -= wt
        diag = np.zeros(self.n)
        np.add.at(diag, self._ei, wt)
        np.add.at(diag, self._ej, wt)
        np.fill_diagonal(lap, diag)
        return lap

    def quad_form_gradient(self, u: np.ndarray, v: np.ndarray) -> np.ndarray:
        """Vector with components u^T (dL/drho_i) v.

        By linearity dL/drho_i = L(e_i), giving per component
        sum_j w_ij (u_i - u_j)(v_i - v_j) / (2 d_i).
        """
        u = np.asarray(u, dtype=float)
        v = np.asarray(v, dtype=float)
        du = u[self._ei] - u[self._ej]
        dv = v[self._ei] - v[self._ej]
        contrib = self._w * du * dv
        out = np.zeros(self.n)
        np.add.at(out, self._ei, contrib / (2.0 * self.d[self._ei]))
        np.add.at(out, self._ej, contrib / (2.0 * self.d[self._ej]))
        return out

    def laplacian_solve(self, rho: np.ndarray, b: np.ndarray, tol: float = 1e-10) -> np.ndarray:
        """Solve L(rho) x = b on the mean-zero subspace.

        b must itself have zero sum (the range of L); the returned x is the
        unique mean-zero solution.  Implemented by solving with the rank-one
        regularization L + 11^T/n, which is positive definite for connected
        graphs and agrees with L on mean-zero vectors.
        """
        b = np.asarray(b, dtype=float)
        if abs(b.sum()) > tol:
            raise DomainError(f"right-hand side has non-zero sum {b.sum():.3e}")
        lap = self.laplacian(rho)
        x = np.linalg.solve(lap + np.ones((self.n, self.n)) / self.n, b)
        return x - x.mean()

    # -- serialization -----------------------------------------------------

    def to_dict(self) -> dict:
        return {"n": self.n, "edges": [[i, j, w] for i, j, w in self.edges]}

    @classmethod
    def from_dict(cls, data: dict) -> "Graph":
        if not isinstance(data, dict) or "n" not in data or "edges" not in data:
            raise GraphError("graph document must have fields 'n' and 'edges'")
        return cls(data["n"], data["edges"])

    @classmethod
    def from_file(cls, path) -> "Graph":
        with open(path) as fh:
            try:
                data = json.load(fh)
            except json.JSONDecodeError as exc:
                raise GraphError(f"{path}: invalid JSON at line {exc.lineno}: {exc.msg}")
        return cls.from_dict(data)

    def __repr__(self) -> str:
        return f"Graph(n={self.n}, edges={len(self.edges)})"


@dataclass(frozen=True)
class SimplexDensity:
    """A strictly positive probability vector.

    Positivity and unit mass are checked at construction (mass tolerance
    1e-12); the stored vector is not renormalized.
    """

    rho: np.ndarray

    def __init__(self, rho, tol: float = 1e-12):
        rho = np.asarray(rho, dtype=float)
        if rho.ndim != 1 or rho.size < 2:
            raise DomainError("density must be a vector of length >= 2")
        if np.any(rho <= 0):
            raise DomainError("density entries must be strictly positive")
        if abs(rho.sum() - 1.0) > tol:
            raise DomainError(f"density mass {rho.sum()!r} deviates from 1 beyond {tol}")
        object.__setattr__(self, "rho", rho)

    def __len__(self) -> int:
        return self.rho.size


# ---------------------------------------------------------------------------
# Metric kinds
# ---------------------------------------------------------------------------


class Euclidean:
    """Flat metric: G(q) = I for every q."""

    kind = "euclidean"
    euler_degree = 0.0
    has_christoffel = True
    is_simplex = False

    def check_point(self, q: np.ndarray) -> np.ndarray:
        q = np.asarray(q, dtype=float)
        if not np.all(np.isfinite(q)):
            raise DomainError("point has non-finite entries")
        return q

    def inverse_metric(self, q: np.ndarray) -> np.ndarray:
        q = self.check_point(q)
        return np.eye(q.size)

    def directional_derivative(self, q: np.ndarray, v: np.ndarray) -> np.ndarray:
        q = self.check_point(q)
        return np.zeros((q.size, q.size))

    def quad_form_gradient(self, q, u, v) -> np.ndarray:
        return np.zeros(np.asarray(q).size)

    def christoffel(self, q: np.ndarray) -> np.ndarray:
        q = self.check_point(q)
        n = q.size
        return np.zeros((n, n, n))

    def __repr__(self) -> str:
        return "Euclidean()"


class DiagonalPower:
    """Diagonal power-law metric G(q) = diag(q_i^m), q_i > 0, m > 0.

    Satisfies sum_i q_i dG/dq_i = m G exactly, so its Euler degree is m.
    The metric tensor is g_ii = q_i^{-m}; the only non-zero Christoffel
    symbols are Gamma^i_{ii} = -m / (2 q_i).
    """

    kind = "diagonal_power"
    has_christoffel = True
    is_simplex = False

    def __init__(self, m: float):
        if not m > 0:
            raise DomainError(f"power must be positive, got {m}")
        self.m = float(m)

    @property
    def euler_degree(self) -> float:
        return self.m

    def check_point(self, q: np.ndarray) -> np.ndarray:
        q = np.asarray(q, dtype=float)
        if np.any(q <= 0) or not np.all(np.isfinite(q)):
            raise DomainError("point must have strictly positive entries")
        return q

    def inverse_metric(self, q: np.ndarray) -> np.ndarray:
        q = self.check_point(q)
        return np.diag(q**self.m)

    def directional_derivative(self, q: np.ndarray, v: np.ndarray) -> np.ndarray:
        q = self.check_point(q)
        v = np.asarray(v, dtype=float)
        return np.diag(self.m * q ** (self.m - 1.0) * v)

    def quad_form_gradient(self, q, u, v) -> np.ndarray:
        q = self.check_point(q)
        u = np.asarray(u, dtype=float)
        v = np.asarray(v, dtype=float)
        return self.m * q ** (self.m - 1.0) * u * v

    def christoffel(self, q: np.ndarray) -> np.ndarray:
        q = self.check_point(q)
        n = q.size
        gamma = np.zeros((n, n, n))
        idx = np.arange(n)
        gamma[idx, idx, idx] = -self.m / (2.0 * q)
        return gamma

    def __repr__(self) -> str:
        return f"DiagonalPower(m={self.m})"


class GraphWasserstein:
    """Graph transport metric: G(rho) = L(rho) on the open simplex.

    L(rho) is linear in rho (Euler degree 1), positive semidefinite with a
    one-dimensional kernel spanned by the constants, so every quadratic
    form built from it is invariant under the momentum gauge p -> p + c 1.
    Domain checks require strict positivity only; unit mass is validated
    where whole states enter (initial data), since the formulas themselves
    extend to arbitrary positive vectors.
    """

    kind = "graph_wasserstein"
    euler_degree = 1.0
    has_christoffel = False
    is_simplex = True

    def __init__(self, graph: Graph):
        self.graph = graph

    def check_point(self, q: np.ndarray) -> np.ndarray:
        q = np.asarray(q, dtype=float)
        if q.shape != (self.graph.n,):
            raise DomainError(f"expected vector of length {self.graph.n}, got shape {q.shape}")
        if np.any(q <= 0) or not np.all(np.isfinite(q)):
            raise DomainError("density must have strictly positive entries")
        return q

    def inverse_metric(self, q: np.ndarray) -> np.ndarray:
        return self.graph.laplacian(self.check_point(q))

    def directional_derivative(self, q: np.ndarray, v: np.ndarray) -> np.ndarray:
        return self.graph.laplacian_directional_derivative(v)

    def quad_form_gradient(self, q, u, v) -> np.ndarray:
        return self.graph.quad_form_gradient(u, v)

    def christoffel(self, q: np.ndarray) -> np.ndarray:
        raise UnsupportedOperationError(
            "Christoffel symbols are not available for the graph metric; "
            "use the finite-difference audit path"
        )

    def __repr__(self) -> str:
        return f"GraphWasserstein({self.graph!r})"


def metric_homogeneity_degree(metric, samples) -> tuple[float, float]:
    """Least-squares Euler degree of a metric from sample points.

    Fits m in  sum_i q_i dG/dq_i = m G(q)  entrywise across all samples and
    returns (m_hat, residual) where residual is the largest absolute
    entrywise misfit at m_hat.
    """
    samples = list(samples)
    if len(samples) < 3:
        raise DomainError(f"need at least 3 sample points, got {len(samples)}")
    num = 0.0
    den = 0.0
    pairs = []
    for q in samples:
        q = metric.check_point(q)
        x = metric.directional_derivative(q, q)
        y = metric.inverse_metric(q)
        pairs.append((x, y))
        num += float(np.sum(x * y))
        den += float(np.sum(y * y))
    if den == 0.0:
        raise DomainError("degenerate samples: inverse metric vanishes everywhere")
    m_hat = num / den
    residual = max(float(np.max(np.abs(x - m_hat * y))) for x, y in pairs)
    return m_hat, residual
