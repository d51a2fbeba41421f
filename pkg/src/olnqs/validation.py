"""Input checks shared by the estimators and the CLI."""

from __future__ import annotations

from typing import Optional

import numpy as np

from .hilbert import n_sites_from_dim
from .lindblad import LindbladModel, Liouvillian


def check_model(model) -> LindbladModel | Liouvillian:
    """Accept a model, a prebuilt Liouvillian, or a mapping of model fields."""
    if isinstance(model, (LindbladModel, Liouvillian)):
        return model
    if isinstance(model, dict):
        return LindbladModel(**model)
    raise TypeError(f"expected a LindbladModel, Liouvillian or dict, got {type(model).__name__}")


def check_density_matrix(rho, n_sites: Optional[int] = None, hermitian_tol: Optional[float] = None) -> np.ndarray:
    rho = np.asarray(rho, dtype=complex)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise ValueError(f"density matrix must be square, got shape {rho.shape}")
    n = n_sites_from_dim(rho.shape[0])
    if n_sites is not None and n != n_sites:
        raise ValueError(f"matrix is for N={n}, expected N={n_sites}")
    if not np.all(np.isfinite(rho)):
        raise ValueError("density matrix has non-finite entries")
    if hermitian_tol is not None and np.linalg.norm(rho - rho.conj().T) > hermitian_tol:
        raise ValueError("density matrix is not Hermitian")
    return rho


def n_sites_of(model) -> int:
    return model.N if isinstance(model, LindbladModel) else model.n_sites
