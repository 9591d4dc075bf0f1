"""Boundary-value Hamiltonian flows for generalized bridge problems.

A small numerical library for controlled-gradient-flow bridge problems on
finite-dimensional state spaces: Euclidean space and the probability
simplex of a weighted graph.  It provides the phase-space change of
variables induced by a potential's gradient, verifies its symplectic
structure numerically, audits the energy-splitting chord inequalities, and
solves two-endpoint problems by shooting.
"""

__version__ = "0.1.0"

from .bridge import BridgeProblem, BridgeResult, quadratic_oracle, solve
from .dynamics import PhaseState, Trajectory, action, flow_field, hamiltonian, integrate
from .errors import (
    ConfigError,
    DomainError,
    DomainExitError,
    GraphError,
    GsbpError,
    HomogeneityError,
    NotAnEdgeError,
    ShootingError,
    StepFailureError,
    UnsupportedOperationError,
)
from .hopf_cole import (
    HopfColePair,
    SymplecticCheck,
    base_point,
    eta_flow_field,
    from_eta,
    hamiltonian_K,
    integrate_eta,
    sigma,
    symplectic_residual,
    to_eta,
)
from .metrics import (
    DiagonalPower,
    Euclidean,
    Graph,
    GraphWasserstein,
    SimplexDensity,
    metric_homogeneity_degree,
    project_mean_zero,
)
from .potentials import Entropy, HomogeneityFit, Quadratic, Renyi, homogeneity_fit
from .splitting import (
    SplitReport,
    action_identity_residual,
    alpha,
    audit_inequalities,
    c_constant,
    max_passing_lambda,
    second_derivative_check,
    split,
    splitting_rates,
)
