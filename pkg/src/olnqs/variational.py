"""Optimization loops for the RBM ansatz.

Primary scheme: a projected-time-evolution step. With ``O_k`` the tangent
matrices and ``L`` the Liouvillian, each iteration solves
``S z = f`` with::

    S_ij = 2 Re <O_i, O_j>,    f_i = 2 Re <O_i, L[rho]>

through a truncated-SVD pseudoinverse and moves ``chi`` by ``dt_eff * z``
where ``dt_eff = dt / ||z||`` once ``||z|| >= 1``.

Secondary schemes: plain steepest descent on the normalized cost
``||L[rho]||^2 / ||rho||^2`` or the unnormalized ``||L[rho]||^2``, and a
natural-gradient variant that preconditions the cost gradient with ``S+``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Callable, Optional

import numpy as np
import scipy.linalg

from .ansatz import RbmParameters, evaluate
from .lindblad import ModelLike, as_liouvillian
from .observables import Magnetization, mean_magnetization, symmetry_residual
from .symmetry import SymmetryGroup, build_group

COSTS = ("normalized", "unnormalized")


class OptimizationError(FloatingPointError):
    def __init__(self, iteration: int, message: str):
        super().__init__(f"iteration {iteration}: {message}")
        self.iteration = iteration


@dataclass(frozen=True)
class VariationalState:
    params: RbmParameters
    kind: str = "invariant"
    group: Optional[SymmetryGroup] = None
    n: int = 0
    t: float = 0.0

    def __post_init__(self):
        if self.kind == "invariant" and self.group is None:
            object.__setattr__(self, "group", build_group(self.params.N))


@dataclass(frozen=True)
class IterationReport:
    n: int
    t: float
    step_norm: float
    dt_eff: float
    cost: float
    magnetization: Magnetization
    ln_d_rk: Optional[float] = None
    symmetry_residual: Optional[float] = None


def _as_rows(tangents: np.ndarray) -> np.ndarray:
    """Stack real and imaginary parts so Re<u, v> becomes a real dot product."""
    flat = np.asarray(tangents).reshape(len(tangents), -1)
    return np.concatenate([flat.real, flat.imag], axis=1)


def assemble_S(tangents: np.ndarray, rho: Optional[np.ndarray] = None) -> np.ndarray:
    tangents = np.asarray(tangents)
    if rho is not None and tangents.shape[1:] != np.shape(rho):
        raise ValueError(f"tangent shape {tangents.shape[1:]} does not match rho {np.shape(rho)}")
    V = _as_rows(tangents)
    S = 2.0 * (V @ V.T)
    return 0.5 * (S + S.T)


def assemble_f(tangents: np.ndarray, l_rho: np.ndarray) -> np.ndarray:
    tangents = np.asarray(tangents)
    if tangents.shape[1:] != np.shape(l_rho):
        raise ValueError(f"tangent shape {tangents.shape[1:]} does not match L[rho] {np.shape(l_rho)}")
    lv = np.asarray(l_rho).reshape(-1)
    return 2.0 * (_as_rows(tangents) @ np.concatenate([lv.real, lv.imag]))


def pseudo_solve(S: np.ndarray, f: np.ndarray, rcond: float = 1e-12) -> np.ndarray:
    """Minimum-norm least-squares solution ``S+ f``.

    Singular values below ``rcond * s_max`` are treated as zero.
    """
    S = np.asarray(S, dtype=float)
    f = np.asarray(f, dtype=float)
    if S.ndim != 2 or S.shape[0] != S.shape[1] or S.shape[0] != f.size:
        raise ValueError(f"incompatible shapes S{S.shape} f{f.shape}")
    if not (np.all(np.isfinite(S)) and np.all(np.isfinite(f))):
        raise FloatingPointError("non-finite entries in S or f")
    try:
        U, s, Vt = np.linalg.svd(S)
    except np.linalg.LinAlgError:
        # divide-and-conquer occasionally fails on badly scaled S
        U, s, Vt = scipy.linalg.svd(S, lapack_driver="gesvd")
    if s.size == 0 or s[0] == 0:
        return np.zeros_like(f)
    keep = s > rcond * s[0]
    return Vt[keep].T @ ((U[:, keep].T @ f) / s[keep])


def adaptive_step(dt_base: float, step_norm: float) -> float:
    if not dt_base > 0:
        raise ValueError(f"dt_base must be positive, got {dt_base}")
    return dt_base / step_norm if step_norm >= 1.0 else dt_base


def cost_normalized(rho: np.ndarray, model: ModelLike) -> float:
    norm2 = float(np.vdot(rho, rho).real)
    if norm2 == 0:
        raise ValueError("cost undefined for the zero matrix")
    return float(np.linalg.norm(as_liouvillian(model).apply(rho)) ** 2 / norm2)


def cost_unnormalized(rho: np.ndarray, model: ModelLike) -> float:
    return float(np.linalg.norm(as_liouvillian(model).apply(rho)) ** 2)


def _report(state: VariationalState, L, step_norm, dt_eff, scale=1.0) -> IterationReport:
    ev = evaluate(state.params, state.kind, state.group, with_tangents=False, scale=scale)
    return IterationReport(
        n=state.n,
        t=state.t,
        step_norm=float(step_norm),
        dt_eff=float(dt_eff),
        cost=cost_normalized(ev.rho, L),
        magnetization=mean_magnetization(ev.rho),
        symmetry_residual=symmetry_residual(ev.rho, state.group) if state.group is not None else None,
    )


def tdvp_direction(state: VariationalState, model: ModelLike, rcond: float = 1e-12, scale: float = 1.0) -> np.ndarray:
    """``S+ f`` at the current parameters."""
    L = as_liouvillian(model)
    ev = evaluate(state.params, state.kind, state.group, scale=scale)
    # unit Frobenius norm for conditioning; S+ f is invariant under the rescale
    norm = np.linalg.norm(ev.rho)
    rho, tangents = ev.rho / norm, ev.tangents / norm
    S = assemble_S(tangents, rho)
    f = assemble_f(tangents, L.apply(rho))
    return pseudo_solve(S, f, rcond)


def tdvp_iterate(
    state: VariationalState,
    model: ModelLike,
    dt_base: float = 1e-2,
    rcond: float = 1e-12,
    scale: float = 1.0,
) -> tuple[VariationalState, IterationReport]:
    L = as_liouvillian(model)
    try:
        z = tdvp_direction(state, L, rcond, scale)
        step_norm = float(np.linalg.norm(z))
        dt_eff = adaptive_step(dt_base, step_norm)
        chi = state.params.to_chi() + dt_eff * z
        if not np.all(np.isfinite(chi)):
            raise FloatingPointError("non-finite parameters after update")
        new = replace(state, params=state.params.with_chi(chi), n=state.n + 1, t=state.t + dt_eff)
        return new, _report(new, L, step_norm, dt_eff, scale)
    except (FloatingPointError, np.linalg.LinAlgError, OverflowError) as exc:
        raise OptimizationError(state.n + 1, str(exc)) from exc


def cost_gradient(
    params: RbmParameters,
    kind: str,
    model: ModelLike,
    which: str = "normalized",
    group: Optional[SymmetryGroup] = None,
) -> np.ndarray:
    """Gradient of a steady-state cost with respect to the real vector ``chi``."""
    if which not in COSTS:
        raise ValueError(f"which must be one of {COSTS}, got {which!r}")
    if kind == "invariant" and group is None:
        group = build_group(params.N)
    L = as_liouvillian(model)
    ev = evaluate(params, kind, group)
    rho, tangents = ev.rho, ev.tangents
    llr = L.apply_adjoint(L.apply(rho))  # M^dagger M |rho>
    V = _as_rows(tangents)
    flat = llr.reshape(-1)
    g_llr = 2.0 * (V @ np.concatenate([flat.real, flat.imag]))
    if which == "unnormalized":
        return math.exp(2.0 * ev.log_scale) * g_llr
    flat = rho.reshape(-1)
    g_norm = 2.0 * (V @ np.concatenate([flat.real, flat.imag]))
    norm2 = float(np.vdot(rho, rho).real)
    cost = float(np.vdot(rho, llr).real) / norm2
    return (g_llr - cost * g_norm) / norm2


def gradient_descent_iterate(
    state: VariationalState,
    model: ModelLike,
    d_nu: float = 1e-3,
    which: str = "normalized",
    natural: bool = False,
    rcond: float = 1e-12,
) -> tuple[VariationalState, IterationReport]:
    """One steepest-descent step ``chi <- chi - d_nu * grad C``.

    With ``natural=True`` the gradient is preconditioned by ``S+``. The
    report's ``t`` accumulates ``d_nu`` as a fictitious time.
    """
    if not d_nu > 0:
        raise ValueError(f"d_nu must be positive, got {d_nu}")
    L = as_liouvillian(model)
    try:
        g = cost_gradient(state.params, state.kind, L, which, state.group)
        if natural:
            ev = evaluate(state.params, state.kind, state.group)
            tangents = ev.tangents / np.linalg.norm(ev.rho)
            g = pseudo_solve(assemble_S(tangents), g, rcond)
        chi = state.params.to_chi() - d_nu * g
        if not np.all(np.isfinite(chi)):
            raise FloatingPointError("non-finite parameters after update")
        new = replace(state, params=state.params.with_chi(chi), n=state.n + 1, t=state.t + d_nu)
        return new, _report(new, L, np.linalg.norm(g), d_nu)
    except (FloatingPointError, np.linalg.LinAlgError, OverflowError) as exc:
        raise OptimizationError(state.n + 1, str(exc)) from exc


METHODS = ("tdvp", "gradient", "natural-gradient")


def optimize(
    state: VariationalState,
    model: ModelLike,
    method: str = "tdvp",
    max_iter: int = 1000,
    dt_base: float = 1e-2,
    rcond: float = 1e-12,
    cost_threshold: float = 1e-10,
    d_nu: float = 1e-3,
    which: str = "normalized",
    callback: Optional[Callable[[VariationalState, IterationReport], None]] = None,
) -> tuple[VariationalState, list[IterationReport]]:
    """Iterate until ``max_iter`` steps or the normalized cost drops below threshold."""
    if method not in METHODS:
        raise ValueError(f"method must be one of {METHODS}, got {method!r}")
    L = as_liouvillian(model)
    reports = []
    for _ in range(int(max_iter)):
        if method == "tdvp":
            state, rep = tdvp_iterate(state, L, dt_base, rcond)
        else:
            state, rep = gradient_descent_iterate(state, L, d_nu, which, method == "natural-gradient", rcond)
        if callback is not None:
            out = callback(state, rep)
            if out is not None:
                rep = out
        reports.append(rep)
        if rep.cost < cost_threshold:
            break
    return state, reports


def save_state(path, state: VariationalState) -> None:
    p = state.params
    record = {
        "format": "olnqs-variational-state",
        "version": 1,
        "kind": state.kind,
        "n": state.n,
        "t": state.t,
        "N": p.N,
        "M": p.M,
        "L": p.L,
        "hermitian_c": p.hermitian_c,
        "chi": [float(v) for v in p.to_chi()],
    }
    Path(path).write_text(json.dumps(record, indent=1))


def load_state(path) -> VariationalState:
    record = json.loads(Path(path).read_text())
    if record.get("format") != "olnqs-variational-state":
        raise ValueError(f"{path} is not a variational-state checkpoint")
    params = RbmParameters.from_chi(record["chi"], record["N"], record["M"], record["L"], record["hermitian_c"])
    return VariationalState(params, record["kind"], n=record["n"], t=record["t"])
