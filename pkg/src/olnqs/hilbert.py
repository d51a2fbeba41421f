"""Spin-1/2 product basis and the vectorization convention.

Site 1 is the most significant bit of a basis index and a 0 bit is spin up
(+1), so index 0 is the all-up state. Density matrices are vectorized
row-major: the pair (sigma, eta) sits at ``index(sigma) * 2**N + index(eta)``.
Every other module goes through these helpers.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np


@dataclass(frozen=True)
class SpinConfiguration:
    spins: tuple[int, ...]

    def __post_init__(self):
        if len(self.spins) == 0:
            raise ValueError("a configuration needs at least one site")
        if any(s not in (-1, 1) for s in self.spins):
            raise ValueError(f"spins must be +1 or -1, got {self.spins}")

    @property
    def n_sites(self) -> int:
        return len(self.spins)


@dataclass(frozen=True)
class BasisPair:
    bra: SpinConfiguration
    ket: SpinConfiguration

    def __post_init__(self):
        if self.bra.n_sites != self.ket.n_sites:
            raise ValueError("bra and ket must have the same number of sites")


def site_mask(site: int, n_sites: int) -> int:
    """Bit mask of a 0-based site under the site-1-is-MSB convention."""
    if not 0 <= site < n_sites:
        raise IndexError(f"site {site} out of range for N={n_sites}")
    return 1 << (n_sites - 1 - site)


def index_to_config(k: int, n_sites: int) -> SpinConfiguration:
    if not 0 <= k < 2**n_sites:
        raise IndexError(f"basis index {k} out of range [0, {2**n_sites})")
    bits = [(k >> (n_sites - 1 - i)) & 1 for i in range(n_sites)]
    return SpinConfiguration(tuple(1 - 2 * b for b in bits))


def config_to_index(cfg: SpinConfiguration) -> int:
    k = 0
    for s in cfg.spins:
        k = (k << 1) | (1 if s == -1 else 0)
    return k


def pair_index(p: BasisPair) -> int:
    n = p.bra.n_sites
    return config_to_index(p.bra) * 2**n + config_to_index(p.ket)


def pair_from_index(q: int, n_sites: int) -> BasisPair:
    dim = 2**n_sites
    if not 0 <= q < dim * dim:
        raise IndexError(f"pair index {q} out of range [0, {dim * dim})")
    return BasisPair(index_to_config(q // dim, n_sites), index_to_config(q % dim, n_sites))


@lru_cache(maxsize=None)
def _spin_table(n_sites: int) -> np.ndarray:
    idx = np.arange(2**n_sites)
    shifts = np.arange(n_sites - 1, -1, -1)
    bits = (idx[:, None] >> shifts[None, :]) & 1
    table = (1 - 2 * bits).astype(np.float64)
    table.flags.writeable = False
    return table


def spin_table(n_sites: int) -> np.ndarray:
    """All basis configurations as a read-only ``(2**N, N)`` array of +-1."""
    return _spin_table(n_sites)


def configs_to_indices(spins: np.ndarray) -> np.ndarray:
    """Vectorized inverse of :func:`spin_table` for an ``(..., N)`` array."""
    spins = np.asarray(spins)
    n_sites = spins.shape[-1]
    weights = 1 << np.arange(n_sites - 1, -1, -1)
    return ((spins < 0).astype(np.int64) * weights).sum(axis=-1)


def vectorize(rho: np.ndarray) -> np.ndarray:
    return np.asarray(rho).reshape(-1)


def unvectorize(vec: np.ndarray) -> np.ndarray:
    vec = np.asarray(vec)
    dim = int(round(np.sqrt(vec.size)))
    if dim * dim != vec.size:
        raise ValueError(f"vector of length {vec.size} is not a vectorized square matrix")
    return vec.reshape(dim, dim)


def n_sites_from_dim(dim: int) -> int:
    n = int(dim).bit_length() - 1
    if n < 1 or 2**n != dim:
        raise ValueError(f"matrix dimension {dim} is not 2**N")
    return n
