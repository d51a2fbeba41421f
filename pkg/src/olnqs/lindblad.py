"""Dissipative XYZ chain: Hamiltonian, Liouvillian action and the RK4 reference.

The generator is never materialized as a ``4**N x 4**N`` matrix. The
dissipator is applied site by site through index maps: ``sigma^-_j`` sends a
basis index with site ``j`` up to the same index with that bit set.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Optional, Union

import numpy as np

from .hilbert import site_mask

SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
SIGMA_MINUS = np.array([[0, 0], [1, 0]], dtype=complex)
PAULI = {"x": SIGMA_X, "y": SIGMA_Y, "z": SIGMA_Z}


@dataclass(frozen=True)
class LindbladModel:
    """XYZ chain with uniform field and uniform ``sigma^-`` decay, periodic wrap.

    Couplings and fields are in units of ``gamma``; time is in units of
    ``1/gamma``.
    """

    N: int
    J: tuple[float, float, float] = (0.0, 0.0, 0.0)
    B: tuple[float, float, float] = (0.0, 0.0, 0.0)
    gamma: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "J", tuple(float(v) for v in self.J))
        object.__setattr__(self, "B", tuple(float(v) for v in self.B))
        object.__setattr__(self, "gamma", float(self.gamma))
        if int(self.N) != self.N or self.N < 2:
            raise ValueError(f"N must be an integer >= 2, got {self.N}")
        object.__setattr__(self, "N", int(self.N))
        if len(self.J) != 3 or len(self.B) != 3:
            raise ValueError("J and B must be 3-vectors")
        if not self.gamma > 0:
            raise ValueError(f"gamma must be positive, got {self.gamma}")

    @property
    def dim(self) -> int:
        return 2**self.N


def site_operator(op: np.ndarray, site: int, n_sites: int) -> np.ndarray:
    """Embed a single-site 2x2 operator at a 0-based site (site 0 leftmost)."""
    out = np.ones((1, 1), dtype=complex)
    for j in range(n_sites):
        out = np.kron(out, op if j == site else np.eye(2))
    return out


def build_hamiltonian(model: LindbladModel) -> np.ndarray:
    """Dense XYZ Hamiltonian with periodic wrap.

    The bond sum runs over i = 1..N literally, so at N=2 the single bond is
    counted twice.
    """
    n = model.N
    ops = {k: [site_operator(PAULI[k], j, n) for j in range(n)] for k in "xyz"}
    H = np.zeros((model.dim, model.dim), dtype=complex)
    for k, jk, bk in zip("xyz", model.J, model.B):
        for i in range(n):
            if jk:
                H += jk * ops[k][i] @ ops[k][(i + 1) % n]
            if bk:
                H += bk * ops[k][i]
    return H


def maximally_mixed(n_sites: int) -> np.ndarray:
    dim = 2**n_sites
    return np.eye(dim, dtype=complex) / dim


@dataclass(frozen=True, eq=False)
class Liouvillian:
    """Matrix-free Lindblad generator with ``L_j = sigma^-_j`` at uniform rate.

    Built from a :class:`LindbladModel` via :meth:`from_model`, or directly
    from any Hamiltonian (handy for single-site checks and symmetry-breaking
    perturbations).
    """

    hamiltonian: np.ndarray
    gamma: float
    n_sites: int
    _up: tuple = field(init=False, repr=False)
    _n_up_sum: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        dim = 2**self.n_sites
        H = np.asarray(self.hamiltonian, dtype=complex)
        if H.shape != (dim, dim):
            raise ValueError(f"Hamiltonian shape {H.shape} does not match N={self.n_sites}")
        object.__setattr__(self, "hamiltonian", H)
        idx = np.arange(dim)
        up = []
        n_up = np.zeros(dim)
        for j in range(self.n_sites):
            m = site_mask(j, self.n_sites)
            is_up = (idx & m) == 0
            up.append((idx[is_up], idx[is_up] | m))
            n_up += is_up
        object.__setattr__(self, "_up", tuple(up))
        # diagonal of sum_j sigma^+_j sigma^-_j, as a row/column sum
        object.__setattr__(self, "_n_up_sum", n_up[:, None] + n_up[None, :])

    @classmethod
    def from_model(cls, model: LindbladModel) -> "Liouvillian":
        return _liouvillian_for(model)

    @property
    def dim(self) -> int:
        return 2**self.n_sites

    def _check(self, rho):
        rho = np.asarray(rho)
        if rho.shape != (self.dim, self.dim):
            raise ValueError(f"expected a {self.dim}x{self.dim} matrix, got shape {rho.shape}")
        return rho

    def apply(self, rho: np.ndarray) -> np.ndarray:
        rho = self._check(rho)
        H = self.hamiltonian
        out = -1j * (H @ rho - rho @ H)
        out -= 0.5 * self.gamma * self._n_up_sum * rho
        for up, down in self._up:
            out[np.ix_(down, down)] += self.gamma * rho[np.ix_(up, up)]
        return out

    def apply_adjoint(self, a: np.ndarray) -> np.ndarray:
        a = self._check(a)
        H = self.hamiltonian
        out = 1j * (H @ a - a @ H)
        out -= 0.5 * self.gamma * self._n_up_sum * a
        for up, down in self._up:
            out[np.ix_(up, up)] += self.gamma * a[np.ix_(down, down)]
        return out

    __call__ = apply


@lru_cache(maxsize=32)
def _liouvillian_for(model: LindbladModel) -> Liouvillian:
    return Liouvillian(build_hamiltonian(model), model.gamma, model.N)


ModelLike = Union[LindbladModel, Liouvillian]


def as_liouvillian(model: ModelLike) -> Liouvillian:
    if isinstance(model, Liouvillian):
        return model
    if isinstance(model, LindbladModel):
        return Liouvillian.from_model(model)
    raise TypeError(f"expected LindbladModel or Liouvillian, got {type(model).__name__}")


def apply_liouvillian(rho: np.ndarray, model: ModelLike) -> np.ndarray:
    return as_liouvillian(model).apply(rho)


def apply_adjoint_liouvillian(a: np.ndarray, model: ModelLike) -> np.ndarray:
    return as_liouvillian(model).apply_adjoint(a)


def rk4_step(rho: np.ndarray, dt: float, model: ModelLike) -> np.ndarray:
    """One classical fourth-order Runge-Kutta step of ``d rho/dt = L[rho]``."""
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt}")
    L = as_liouvillian(model)
    k1 = L.apply(rho)
    k2 = L.apply(rho + 0.5 * dt * k1)
    k3 = L.apply(rho + 0.5 * dt * k2)
    k4 = L.apply(rho + dt * k3)
    return rho + (dt / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)


Observer = Callable[[int, float, np.ndarray], object]


def evolve_rk(
    rho0: np.ndarray,
    dt: float,
    n_steps: int,
    model: ModelLike,
    observer: Optional[Observer] = None,
):
    """Integrate ``n_steps`` RK4 steps from ``rho0``.

    ``observer(n, t_n, rho_n)`` is called after every step ``n = 1..n_steps``;
    its non-``None`` return values are collected.

    Returns
    -------
    rho : ndarray
        Final state.
    records : list
        Whatever the observer returned, in step order.
    """
    L = as_liouvillian(model)
    rho = np.array(rho0, dtype=complex)
    if rho.shape != (L.dim, L.dim):
        raise ValueError(f"rho0 has shape {rho.shape}, expected {(L.dim, L.dim)}")
    records = []
    for n in range(1, int(n_steps) + 1):
        rho = rk4_step(rho, dt, L)
        if observer is not None:
            rec = observer(n, n * dt, rho)
            if rec is not None:
                records.append(rec)
    return rho, records

