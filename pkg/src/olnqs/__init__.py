"""Steady states of dissipative spin-1/2 chains with neural-network density operators."""

__version__ = "0.1.0"

from .ansatz import RbmParameters, dense_matrix, init_params, param_count, tangent_vectors
from .estimators import RungeKuttaSteadyState, VariationalSteadyState
from .lindblad import LindbladModel, Liouvillian, apply_adjoint_liouvillian, apply_liouvillian, build_hamiltonian
from .observables import frobenius_distance, mean_magnetization, symmetry_residual
from .symmetry import build_group, invariant_dimension, orbit_table

__all__ = [
    "LindbladModel",
    "Liouvillian",
    "RbmParameters",
    "RungeKuttaSteadyState",
    "VariationalSteadyState",
    "apply_adjoint_liouvillian",
    "apply_liouvillian",
    "build_group",
    "build_hamiltonian",
    "dense_matrix",
    "frobenius_distance",
    "init_params",
    "invariant_dimension",
    "mean_magnetization",
    "orbit_table",
    "param_count",
    "symmetry_residual",
    "tangent_vectors",
]
