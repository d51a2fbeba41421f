"""RBM density-operator ansatz, its group-averaged version, and tangents.

Matrix elements::

    rho(s, e) = 8 exp(a.s + a*.e)
                * prod_l cosh(c_l + W_l.s + W*_l.e)
                * prod_m cosh(b_m + X_m.s) cosh(b*_m + X*_m.e)

The ansatz is not holomorphic in its parameters (both ``a`` and ``a*``
appear), so the variational vector ``chi`` holds real and imaginary parts
as separate real coordinates. With ``hermitian_c`` (the default) the
imaginary parts of ``c`` are pinned to zero and dropped from ``chi``; that
is exactly the condition for ``rho(s, e) = conj(rho(e, s))``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from .hilbert import BasisPair, spin_table
from .symmetry import SymmetryGroup

LOG8 = np.log(8.0)
KINDS = ("rbm", "invariant")


class NumericSingularityError(FloatingPointError):
    """A cosh factor vanished exactly, so the log-amplitude is undefined."""


def hidden_count(n_sites: int, density: float, name: str = "alpha") -> int:
    units = density * n_sites
    count = int(round(units))
    if abs(units - count) > 1e-9 or count < 0:
        raise ValueError(f"{name}*N = {units:g} is not a non-negative integer")
    return count


def param_count(n_sites: int, alpha: float) -> int:
    """Complex parameter count ``N + M + L + N(L + M)`` with ``M = L = alpha N``."""
    m = hidden_count(n_sites, alpha)
    return n_sites + 2 * m + n_sites * 2 * m


@dataclass(frozen=True, eq=False)
class RbmParameters:
    a: np.ndarray  # (N,)
    b: np.ndarray  # (M,)
    c: np.ndarray  # (L,)
    W: np.ndarray  # (L, N)
    X: np.ndarray  # (M, N)
    hermitian_c: bool = True

    def __post_init__(self):
        for name in "abcWX":
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=complex))
        n, m, l = self.a.size, self.b.size, self.c.size
        if self.W.shape != (l, n) or self.X.shape != (m, n):
            raise ValueError(f"inconsistent shapes W{self.W.shape} X{self.X.shape} for N={n} M={m} L={l}")
        if self.hermitian_c and np.any(self.c.imag != 0):
            raise ValueError("hermitian_c requires real c")

    @property
    def N(self) -> int:
        return self.a.size

    @property
    def M(self) -> int:
        return self.b.size

    @property
    def L(self) -> int:
        return self.c.size

    @property
    def alpha(self) -> float:
        return self.M / self.N

    @property
    def beta(self) -> float:
        return self.L / self.N

    @property
    def n_complex(self) -> int:
        return self.N + self.M + self.L + self.N * (self.L + self.M)

    @property
    def n_real(self) -> int:
        return real_size(self.N, self.M, self.L, self.hermitian_c)

    def to_chi(self) -> np.ndarray:
        parts = []
        for name in "abcWX":
            z = getattr(self, name).reshape(-1)
            if name == "c" and self.hermitian_c:
                parts.append(z.real)
            else:
                parts.append(np.stack([z.real, z.imag], axis=1).reshape(-1))
        return np.concatenate(parts)

    @classmethod
    def from_chi(cls, chi, n_sites: int, n_hidden: int, n_mixing: int, hermitian_c: bool = True) -> "RbmParameters":
        chi = np.asarray(chi, dtype=float)
        expected = real_size(n_sites, n_hidden, n_mixing, hermitian_c)
        if chi.shape != (expected,):
            raise ValueError(f"chi has shape {chi.shape}, expected ({expected},)")
        shapes = {"a": (n_sites,), "b": (n_hidden,), "c": (n_mixing,), "W": (n_mixing, n_sites), "X": (n_hidden, n_sites)}
        out, pos = {}, 0
        for name, shape in shapes.items():
            size = int(np.prod(shape))
            if name == "c" and hermitian_c:
                out[name] = chi[pos : pos + size].astype(complex)
                pos += size
            else:
                pair = chi[pos : pos + 2 * size].reshape(size, 2)
                out[name] = (pair[:, 0] + 1j * pair[:, 1]).reshape(shape)
                pos += 2 * size
        return cls(hermitian_c=hermitian_c, **out)

    def with_chi(self, chi) -> "RbmParameters":
        return RbmParameters.from_chi(chi, self.N, self.M, self.L, self.hermitian_c)

    @classmethod
    def zeros(cls, n_sites: int, n_hidden: int, n_mixing: int, hermitian_c: bool = True) -> "RbmParameters":
        return cls.from_chi(np.zeros(real_size(n_sites, n_hidden, n_mixing, hermitian_c)), n_sites, n_hidden, n_mixing, hermitian_c)


def real_size(n_sites: int, n_hidden: int, n_mixing: int, hermitian_c: bool = True) -> int:
    n_complex = n_sites + n_hidden + n_mixing + n_sites * (n_hidden + n_mixing)
    return 2 * n_complex - (n_mixing if hermitian_c else 0)


def init_params(n_sites: int, alpha: float, beta: Optional[float] = None, seed=None, hermitian_c: bool = True, scale: float = 0.01) -> RbmParameters:
    """Every free real coordinate drawn uniformly from ``[-scale, scale]``."""
    beta = alpha if beta is None else beta
    m = hidden_count(n_sites, alpha, "alpha")
    l = hidden_count(n_sites, beta, "beta")
    rng = np.random.default_rng(seed)
    chi = rng.uniform(-scale, scale, real_size(n_sites, m, l, hermitian_c))
    return RbmParameters.from_chi(chi, n_sites, m, l, hermitian_c)


def lncosh(z):
    """``log cosh z`` without overflow for large ``|Re z|``.

    Raises :class:`NumericSingularityError` when the result is not finite.
    """
    z = np.asarray(z, dtype=complex)
    s = np.where(z.real < 0, -z, z)
    with np.errstate(divide="ignore", invalid="ignore"):
        tail = np.log1p(np.exp(-2.0 * s))
    if not np.all(np.isfinite(tail)):
        raise NumericSingularityError("log cosh is singular or non-finite at an ansatz argument")
    return s + tail - np.log(2.0)


def rbm_log_element(params: RbmParameters, p: BasisPair) -> complex:
    s = np.array(p.bra.spins, dtype=float)
    e = np.array(p.ket.spins, dtype=float)
    if s.size != params.N:
        raise ValueError("pair and parameters disagree on N")
    out = LOG8 + params.a @ s + np.conj(params.a) @ e
    out += lncosh(params.c + params.W @ s + np.conj(params.W) @ e).sum()
    out += lncosh(params.b + params.X @ s).sum()
    out += lncosh(np.conj(params.b) + np.conj(params.X) @ e).sum()
    return complex(out)


class _Terms:
    """Per-pair intermediates shared by the log-elements and their derivatives."""

    def __init__(self, params: RbmParameters):
        S = spin_table(params.N)
        self.S = S
        self.params = params
        self.visible = S @ params.a  # (D,)
        u = S @ params.W.T  # (D, L)
        self.mix = params.c[None, None, :] + u[:, None, :] + np.conj(u)[None, :, :]  # (D, D, L)
        self.hid = params.b[None, :] + S @ params.X.T  # (D, M); ket side is its conjugate

    def log_elements(self, constant: float = LOG8) -> np.ndarray:
        h = lncosh(self.hid).sum(axis=1)
        log = constant + self.visible[:, None] + np.conj(self.visible)[None, :]
        log = log + h[:, None] + np.conj(h)[None, :]
        if self.params.L:
            log = log + lncosh(self.mix).sum(axis=2)
        return log

    def log_derivatives(self) -> np.ndarray:
        """``d log rho / d chi_k`` for every real slot, shape ``(n_real, D, D)``."""
        p, S = self.params, self.S
        D = S.shape[0]
        N, M, L = p.N, p.M, p.L
        out = np.empty((p.n_real, D, D), dtype=complex)
        pos = 0

        s_plus = S.T[:, :, None] + S.T[:, None, :]  # (N, D, D)
        s_minus = S.T[:, :, None] - S.T[:, None, :]
        out[pos : pos + 2 * N : 2] = s_plus
        out[pos + 1 : pos + 2 * N : 2] = 1j * s_minus
        pos += 2 * N

        th = np.tanh(self.hid)  # (D, M)
        th_bra = th.T[:, :, None]  # (M, D, 1)
        th_ket = np.conj(th).T[:, None, :]  # (M, 1, D)
        out[pos : pos + 2 * M : 2] = th_bra + th_ket
        out[pos + 1 : pos + 2 * M : 2] = 1j * (th_bra - th_ket)
        pos += 2 * M

        tm = np.moveaxis(np.tanh(self.mix), 2, 0)  # (L, D, D)
        if p.hermitian_c:
            out[pos : pos + L] = tm
            pos += L
        else:
            out[pos : pos + 2 * L : 2] = tm
            out[pos + 1 : pos + 2 * L : 2] = 1j * tm
            pos += 2 * L

        w_re = tm[:, None] * s_plus[None]  # (L, N, D, D)
        w_im = 1j * tm[:, None] * s_minus[None]
        out[pos : pos + 2 * L * N : 2] = w_re.reshape(L * N, D, D)
        out[pos + 1 : pos + 2 * L * N : 2] = w_im.reshape(L * N, D, D)
        pos += 2 * L * N

        a_bra = th.T[:, None, :, None] * S.T[None, :, :, None]  # (M, N, D, 1)
        a_ket = np.conj(th).T[:, None, None, :] * S.T[None, :, None, :]  # (M, N, 1, D)
        out[pos : pos + 2 * M * N : 2] = (a_bra + a_ket).reshape(M * N, D, D)
        out[pos + 1 : pos + 2 * M * N : 2] = (1j * (a_bra - a_ket)).reshape(M * N, D, D)
        pos += 2 * M * N
        assert pos == p.n_real
        return out


def log_elements(params: RbmParameters) -> np.ndarray:
    """All log matrix elements of the plain RBM as a ``(D, D)`` array."""
    return _Terms(params).log_elements()


def _check_kind(kind: str, group: Optional[SymmetryGroup]):
    if kind not in KINDS:
        raise ValueError(f"unknown ansatz kind {kind!r}; expected one of {KINDS}")
    if kind == "invariant" and group is None:
        raise ValueError("the invariant ansatz needs a symmetry group")


def dense_matrix(params: RbmParameters, kind: str = "rbm", group: Optional[SymmetryGroup] = None) -> np.ndarray:
    """Unscaled ansatz matrix. Raises ``OverflowError`` naming the first bad pair."""
    _check_kind(kind, group)
    log = log_elements(params)
    with np.errstate(over="ignore", invalid="ignore"):
        rho = np.exp(log)
    bad = ~np.isfinite(rho)
    if bad.any():
        i, j = np.argwhere(bad)[0]
        raise OverflowError(f"exp overflow at pair ({i}, {j}), log-element {log[i, j]:.4g}; evaluate with rescaling")
    if kind == "invariant":
        rho = group.symmetrize(rho)
    return rho


def tangent_vectors(params: RbmParameters, kind: str = "rbm", group: Optional[SymmetryGroup] = None) -> np.ndarray:
    """Unscaled ``d rho / d chi_k`` for every real slot, shape ``(n_real, D, D)``."""
    _check_kind(kind, group)
    terms = _Terms(params)
    rho = np.exp(terms.log_elements())
    if not np.all(np.isfinite(rho)):
        raise OverflowError("exp overflow in tangent evaluation; use evaluate()")
    tangents = rho[None] * terms.log_derivatives()
    if kind == "invariant":
        tangents = group.symmetrize(tangents)
    return tangents


@dataclass(frozen=True)
class AnsatzEvaluation:
    """Ansatz and tangents divided by ``exp(log_scale)``.

    Every downstream quantity is invariant under a global rescaling, so the
    common factor is kept apart to keep entries in floating-point range.
    """

    rho: np.ndarray
    tangents: Optional[np.ndarray]
    log_scale: float


def evaluate(
    params: RbmParameters,
    kind: str = "rbm",
    group: Optional[SymmetryGroup] = None,
    with_tangents: bool = True,
    scale: float = 1.0,
) -> AnsatzEvaluation:
    """Rescaled ansatz (and tangents) with the largest plain entry at modulus 1.

    ``scale`` (> 0) multiplies the represented operator. Like the ``ln 8``
    prefactor it is a global constant, so it is carried in ``log_scale``
    and never touches the entries; downstream results are therefore
    exactly independent of it.
    """
    _check_kind(kind, group)
    if not scale > 0:
        raise ValueError(f"scale must be positive, got {scale}")
    terms = _Terms(params)
    log = terms.log_elements(constant=0.0)
    shift = float(log.real.max())
    rho = np.exp(log - shift)
    tangents = rho[None] * terms.log_derivatives() if with_tangents else None
    if kind == "invariant":
        rho = group.symmetrize(rho)
        if tangents is not None:
            tangents = group.symmetrize(tangents)
    return AnsatzEvaluation(rho, tangents, shift + LOG8 + math.log(scale))


def save_params(path, params: RbmParameters, seed=None) -> None:
    """Write a JSON checkpoint; floats round-trip exactly through ``repr``."""
    record = {
        "format": "olnqs-rbm-params",
        "version": 1,
        "N": params.N,
        "M": params.M,
        "L": params.L,
        "hermitian_c": params.hermitian_c,
        "seed": seed,
        "chi": [float(v) for v in params.to_chi()],
    }
    Path(path).write_text(json.dumps(record, indent=1))


def load_params(path) -> tuple[RbmParameters, Optional[int]]:
    record = json.loads(Path(path).read_text())
    if record.get("format") != "olnqs-rbm-params":
        raise ValueError(f"{path} is not a parameter checkpoint")
    params = RbmParameters.from_chi(record["chi"], record["N"], record["M"], record["L"], record["hermitian_c"])
    return params, record.get("seed")
