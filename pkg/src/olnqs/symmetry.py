"""Weak-symmetry permutation group of the periodic chain and its orbits.

Permutations act on basis configurations by index remapping. A site
permutation is stored as ``map[i]`` = destination of site ``i``; acting on a
configuration puts the spin of site ``i`` at site ``map[i]``.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from functools import cached_property
from typing import Sequence

import numpy as np
from scipy import sparse

from .hilbert import (
    BasisPair,
    SpinConfiguration,
    config_to_index,
    configs_to_indices,
    pair_from_index,
    spin_table,
)
from .lindblad import ModelLike, as_liouvillian


@dataclass(frozen=True)
class SitePermutation:
    map: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "map", tuple(int(v) for v in self.map))
        if sorted(self.map) != list(range(len(self.map))):
            raise ValueError(f"{self.map} is not a permutation of 0..N-1")

    @property
    def n_sites(self) -> int:
        return len(self.map)

    @classmethod
    def identity(cls, n_sites: int) -> "SitePermutation":
        return cls(tuple(range(n_sites)))

    @classmethod
    def translation(cls, n_sites: int) -> "SitePermutation":
        return cls(tuple((i + 1) % n_sites for i in range(n_sites)))

    @classmethod
    def reflection(cls, n_sites: int) -> "SitePermutation":
        return cls(tuple(n_sites - 1 - i for i in range(n_sites)))

    def __matmul__(self, other: "SitePermutation") -> "SitePermutation":
        """``self @ other`` applies ``other`` first."""
        return SitePermutation(tuple(self.map[other.map[i]] for i in range(self.n_sites)))

    def inverse(self) -> "SitePermutation":
        inv = [0] * self.n_sites
        for i, d in enumerate(self.map):
            inv[d] = i
        return SitePermutation(tuple(inv))

    def apply(self, cfg: SpinConfiguration) -> SpinConfiguration:
        out = [0] * self.n_sites
        for i, d in enumerate(self.map):
            out[d] = cfg.spins[i]
        return SpinConfiguration(tuple(out))

    def cycle_count(self) -> int:
        seen = [False] * self.n_sites
        cycles = 0
        for start in range(self.n_sites):
            if not seen[start]:
                cycles += 1
                i = start
                while not seen[i]:
                    seen[i] = True
                    i = self.map[i]
        return cycles

    def index_map(self) -> np.ndarray:
        """``perm[k]`` = basis index of the image of basis state ``k``."""
        table = spin_table(self.n_sites)
        images = np.empty_like(table)
        images[:, list(self.map)] = table
        return configs_to_indices(images)


def translation_apply(cfg: SpinConfiguration) -> SpinConfiguration:
    return SitePermutation.translation(cfg.n_sites).apply(cfg)


def reflection_apply(cfg: SpinConfiguration) -> SpinConfiguration:
    return SitePermutation.reflection(cfg.n_sites).apply(cfg)


class SymmetryGroup:
    """An explicit, closed list of site permutations (identity included)."""

    def __init__(self, elements: Sequence[SitePermutation]):
        self.elements = tuple(elements)
        if not self.elements:
            raise ValueError("a group needs at least the identity")
        self.n_sites = self.elements[0].n_sites
        if len(set(self.elements)) != len(self.elements):
            raise ValueError("duplicate group elements")
        if SitePermutation.identity(self.n_sites) not in self.elements:
            raise ValueError("group must contain the identity")

    @property
    def order(self) -> int:
        return len(self.elements)

    def __len__(self):
        return len(self.elements)

    def __iter__(self):
        return iter(self.elements)

    def is_closed(self) -> bool:
        members = set(self.elements)
        return all(g @ h in members for g in self.elements for h in self.elements) and all(
            g.inverse() in members for g in self.elements
        )

    @cached_property
    def index_maps(self) -> np.ndarray:
        """``(|G|, 2**N)`` array of basis-index images, one row per element."""
        maps = np.stack([g.index_map() for g in self.elements])
        maps.flags.writeable = False
        return maps

    def conjugate(self, rho: np.ndarray, k: int) -> np.ndarray:
        """``g rho g^dagger`` for the k-th element."""
        inv = np.argsort(self.index_maps[k])
        return rho[np.ix_(inv, inv)]

    @cached_property
    def orbits(self) -> "OrbitTable":
        return orbit_table(self)

    @cached_property
    def _orbit_mean(self):
        # (1/|G|) sum_g X(g q) equals the mean of X over the orbit of q
        table = self.orbits
        n_pairs = table.orbit_of.size
        return sparse.csr_matrix(
            (1.0 / table.sizes[table.orbit_of], (table.orbit_of, np.arange(n_pairs))),
            shape=(table.n_orbits, n_pairs),
        )

    def symmetrize(self, rho: np.ndarray) -> np.ndarray:
        """Group average ``(1/|G|) sum_g g rho g^dagger``; also works on stacks."""
        rho = np.asarray(rho)
        dim = 2**self.n_sites
        if rho.shape[-2:] != (dim, dim):
            raise ValueError(f"expected trailing shape {(dim, dim)}, got {rho.shape}")
        flat = rho.reshape(-1, dim * dim)
        means = self._orbit_mean @ flat.T  # (n_orbits, batch)
        return np.ascontiguousarray(means[self.orbits.orbit_of].T).reshape(rho.shape)


def build_group(n_sites: int) -> SymmetryGroup:
    """Z_2 for two sites, dihedral ``{T^k, R T^k}`` of order 2N otherwise."""
    if int(n_sites) != n_sites or n_sites < 2:
        raise ValueError(f"need N >= 2, got {n_sites}")
    n = int(n_sites)
    if n == 2:
        group = SymmetryGroup([SitePermutation.identity(2), SitePermutation((1, 0))])
    else:
        T = SitePermutation.translation(n)
        R = SitePermutation.reflection(n)
        rotations = []
        g = SitePermutation.identity(n)
        for _ in range(n):
            g = T @ g
            rotations.append(g)
        # T^N is the identity; list it first
        rotations = rotations[-1:] + rotations[:-1]
        group = SymmetryGroup(rotations + [R @ t for t in rotations])
    if not group.is_closed():
        raise RuntimeError(f"group for N={n} failed closure")
    return group


@dataclass(frozen=True)
class OrbitTable:
    representatives: np.ndarray  # pair index of the smallest member of each orbit
    orbit_of: np.ndarray  # orbit id per pair index, length 4**N
    sizes: np.ndarray

    @property
    def n_orbits(self) -> int:
        return len(self.representatives)

    def representative_pair(self, orbit: int, n_sites: int) -> BasisPair:
        return pair_from_index(int(self.representatives[orbit]), n_sites)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["pair_index", "orbit_id", "orbit_size"])
            for q, o in enumerate(self.orbit_of):
                w.writerow([q, int(o), int(self.sizes[o])])


def orbit_table(group: SymmetryGroup, n_sites: int | None = None) -> OrbitTable:
    """Partition all ``4**N`` projector labels under simultaneous conjugation."""
    if n_sites is not None and n_sites != group.n_sites:
        raise ValueError("group and N disagree")
    dim = 2**group.n_sites
    maps = group.index_maps
    # images of pair q = i*dim + j under every g; the orbit is the set of images
    images = maps[:, :, None] * dim + maps[:, None, :]
    smallest = images.reshape(group.order, -1).min(axis=0)
    reps, orbit_of, sizes = np.unique(smallest, return_inverse=True, return_counts=True)
    return OrbitTable(reps, orbit_of.astype(np.int64), sizes)


def invariant_dimension(group: SymmetryGroup, n_sites: int | None = None) -> int:
    """Number of orbits of projector labels, by Burnside's lemma."""
    if n_sites is not None and n_sites != group.n_sites:
        raise ValueError("group and N disagree")
    total = sum(4 ** g.cycle_count() for g in group)
    count, rem = divmod(total, group.order)
    assert rem == 0
    return count


def symmetrized_projector(p: BasisPair, group: SymmetryGroup) -> np.ndarray:
    """``(1/|G|) sum_g g|sigma><eta|g^dagger`` as a dense matrix."""
    dim = 2**group.n_sites
    i, j = config_to_index(p.bra), config_to_index(p.ket)
    out = np.zeros((dim, dim), dtype=complex)
    for perm in group.index_maps:
        out[perm[i], perm[j]] += 1.0
    return out / group.order


def random_test_matrices(dim: int, count: int, seed: int = 0) -> list[np.ndarray]:
    rng = np.random.default_rng(seed)
    return [rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim)) for _ in range(count)]


def check_weak_symmetry(model: ModelLike, group: SymmetryGroup, n_samples: int = 20, seed: int = 0) -> float:
    """Max over g and random rho of ``||g L[rho] g^+ - L[g rho g^+]|| / ||rho||``."""
    L = as_liouvillian(model)
    if L.n_sites != group.n_sites:
        raise ValueError("group built for a different N")
    worst = 0.0
    for rho in random_test_matrices(L.dim, n_samples, seed):
        l_rho = L.apply(rho)
        scale = np.linalg.norm(rho)
        for k in range(group.order):
            lhs = group.conjugate(l_rho, k)
            rhs = L.apply(group.conjugate(rho, k))
            worst = max(worst, np.linalg.norm(lhs - rhs) / scale)
    return float(worst)
