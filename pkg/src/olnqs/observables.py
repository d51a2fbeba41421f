"""Magnetization, trajectory distances and symmetry diagnostics.

All functions accept unnormalized matrices; expectation values are taken
on the trace-normalized state, so a global rescaling of ``rho`` never
changes them.
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np

from .hilbert import n_sites_from_dim, site_mask, spin_table
from .symmetry import SymmetryGroup


class DegenerateTraceError(ValueError):
    pass


class Magnetization(NamedTuple):
    x: float
    y: float
    z: float


def trace_normalize(rho: np.ndarray) -> np.ndarray:
    rho = np.asarray(rho)
    tr = np.trace(rho)
    if abs(tr) < 1e-300:
        raise DegenerateTraceError(f"trace {tr} too small to normalize")
    return rho / tr


def site_magnetization(rho: np.ndarray) -> np.ndarray:
    """``Tr[sigma^k_j rho]`` on the normalized state, shape ``(N, 3)``."""
    rho = trace_normalize(rho)
    n = n_sites_from_dim(rho.shape[0])
    idx = np.arange(rho.shape[0])
    spins = spin_table(n)
    out = np.empty((n, 3))
    for j in range(n):
        flipped = idx ^ site_mask(j, n)
        off = rho[flipped, idx]  # <i^m| rho |i>
        out[j, 0] = off.sum().real
        out[j, 1] = (-1j * spins[:, j] * off).sum().real
        out[j, 2] = (spins[:, j] * np.diag(rho)).sum().real
    return out


def mean_magnetization(rho: np.ndarray) -> Magnetization:
    return Magnetization(*site_magnetization(rho).mean(axis=0))


def frobenius_distance(rho_a: np.ndarray, rho_b: np.ndarray) -> tuple[float, float]:
    """Distance between trace-normalized states and its natural log."""
    a, b = np.asarray(rho_a), np.asarray(rho_b)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch {a.shape} vs {b.shape}")
    d = float(np.linalg.norm(trace_normalize(a) - trace_normalize(b)))
    with np.errstate(divide="ignore"):
        return d, float(np.log(d))


def symmetry_residual(rho: np.ndarray, group: SymmetryGroup) -> float:
    rho = np.asarray(rho)
    scale = np.linalg.norm(rho)
    if scale == 0:
        return 0.0
    return max(float(np.linalg.norm(group.conjugate(rho, k) - rho)) for k in range(group.order)) / scale
