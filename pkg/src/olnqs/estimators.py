"""Scikit-learn style front end.

``fit`` takes the Lindblad model in place of a design matrix and stores the
steady-state estimate in trailing-underscore attributes, so the estimators
support ``get_params``/``set_params``/``clone`` like any other.
"""

from __future__ import annotations

from dataclasses import replace
from typing import Callable, Optional

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .ansatz import evaluate, init_params
from .lindblad import as_liouvillian, maximally_mixed, rk4_step
from .observables import frobenius_distance, mean_magnetization, trace_normalize
from .symmetry import build_group
from .validation import check_density_matrix, check_model, n_sites_of
from .variational import (
    COSTS,
    METHODS,
    IterationReport,
    VariationalState,
    cost_normalized,
    optimize,
)


class RungeKuttaSteadyState(BaseEstimator):
    """Reference steady state from fixed-step RK4 integration.

    Parameters
    ----------
    dt : float
        Time step in units of ``1/gamma``.
    n_steps : int
        Number of steps.
    rho0 : array or None
        Initial state; the maximally mixed state when ``None``.
    tol : float or None
        Stop early once the normalized cost falls below ``tol``.
    """

    def __init__(self, dt: float = 1e-2, n_steps: int = 2000, rho0=None, tol: Optional[float] = None):
        self.dt = dt
        self.n_steps = n_steps
        self.rho0 = rho0
        self.tol = tol

    def fit(self, model, y=None):
        model = check_model(model)
        L = as_liouvillian(model)
        n = n_sites_of(model)
        rho = maximally_mixed(n) if self.rho0 is None else check_density_matrix(self.rho0, n).copy()
        history = []
        for step in range(1, int(self.n_steps) + 1):
            new = rk4_step(rho, self.dt, L)
            cost = cost_normalized(new, L)
            history.append(
                IterationReport(step, step * self.dt, float(np.linalg.norm(new - rho)), self.dt, cost, mean_magnetization(new))
            )
            rho = new
            if self.tol is not None and cost < self.tol:
                break
        self.rho_ = rho
        self.history_ = history
        self.n_iter_ = len(history)
        self.magnetization_ = mean_magnetization(rho)
        return self

    def score(self, model, y=None) -> float:
        """Negative normalized cost of the fitted state under ``model``."""
        check_is_fitted(self, "rho_")
        return -cost_normalized(self.rho_, check_model(model))


class VariationalSteadyState(BaseEstimator):
    """Steady state from a variationally evolved RBM or group-averaged RBM.

    Parameters
    ----------
    kind : {"invariant", "rbm"}
    alpha, beta : float
        Hidden and mixing unit densities; ``beta`` defaults to ``alpha``.
    method : {"tdvp", "gradient", "natural-gradient"}
    dt_base : float
        Base step of the projected evolution.
    rcond : float
        Relative singular-value cutoff of the pseudoinverse.
    max_iter : int
    cost_threshold : float
        Early stop when the normalized cost drops below this.
    d_nu : float
        Learning rate of the gradient methods.
    cost : {"normalized", "unnormalized"}
        Objective of the gradient methods.
    hermitian_c : bool
        Pin the mixing biases to be real (Hermitian ansatz).
    random_state : int or None
        Seed of the parameter initialization.
    rk_reference : bool
        Integrate RK4 in lockstep (same ``dt_base``) and record the log
        distance to it in every report.
    callback : callable or None
        ``callback(state, report)`` after every iteration.
    """

    def __init__(
        self,
        kind: str = "invariant",
        alpha: float = 1.0,
        beta: Optional[float] = None,
        method: str = "tdvp",
        dt_base: float = 1e-2,
        rcond: float = 1e-12,
        max_iter: int = 7000,
        cost_threshold: float = 1e-10,
        d_nu: float = 1e-3,
        cost: str = "normalized",
        hermitian_c: bool = True,
        random_state: Optional[int] = None,
        rk_reference: bool = False,
        callback: Optional[Callable] = None,
    ):
        self.kind = kind
        self.alpha = alpha
        self.beta = beta
        self.method = method
        self.dt_base = dt_base
        self.rcond = rcond
        self.max_iter = max_iter
        self.cost_threshold = cost_threshold
        self.d_nu = d_nu
        self.cost = cost
        self.hermitian_c = hermitian_c
        self.random_state = random_state
        self.rk_reference = rk_reference
        self.callback = callback

    def _validate_params(self):
        if self.kind not in ("rbm", "invariant"):
            raise ValueError(f"kind must be 'rbm' or 'invariant', got {self.kind!r}")
        if self.method not in METHODS:
            raise ValueError(f"method must be one of {METHODS}, got {self.method!r}")
        if self.cost not in COSTS:
            raise ValueError(f"cost must be one of {COSTS}, got {self.cost!r}")
        if not self.dt_base > 0:
            raise ValueError("dt_base must be positive")
        if int(self.max_iter) < 1:
            raise ValueError("max_iter must be >= 1")

    def initial_state(self, n_sites: int) -> VariationalState:
        params = init_params(n_sites, self.alpha, self.beta, seed=self.random_state, hermitian_c=self.hermitian_c)
        group = build_group(n_sites) if self.kind == "invariant" else None
        return VariationalState(params, self.kind, group)

    def fit(self, model, y=None, state: Optional[VariationalState] = None):
        """Optimize from a fresh initialization, or resume from ``state``."""
        self._validate_params()
        model = check_model(model)
        L = as_liouvillian(model)
        n = n_sites_of(model)
        state = self.initial_state(n) if state is None else state

        rk = {"rho": maximally_mixed(n)} if self.rk_reference else None

        def step_hook(st, rep):
            if rk is not None:
                rk["rho"] = rk4_step(rk["rho"], self.dt_base, L)
                ev = evaluate(st.params, st.kind, st.group, with_tangents=False)
                rep = _with_distance(rep, frobenius_distance(ev.rho, rk["rho"])[1])
            if self.callback is not None:
                self.callback(st, rep)
            return rep

        state, history = optimize(
            state,
            L,
            method=self.method,
            max_iter=self.max_iter,
            dt_base=self.dt_base,
            rcond=self.rcond,
            cost_threshold=self.cost_threshold,
            d_nu=self.d_nu,
            which=self.cost,
            callback=step_hook,
        )
        ev = evaluate(state.params, state.kind, state.group, with_tangents=False)
        self.state_ = state
        self.params_ = state.params
        self.group_ = state.group
        self.history_ = history
        self.n_iter_ = len(history)
        self.rho_ = trace_normalize(ev.rho)
        self.magnetization_ = mean_magnetization(ev.rho)
        if rk is not None:
            self.rk_rho_ = rk["rho"]
        return self

    def score(self, model, y=None) -> float:
        """Negative normalized cost of the fitted ansatz under ``model``."""
        check_is_fitted(self, "rho_")
        return -cost_normalized(self.rho_, check_model(model))

    def distance_to(self, rho) -> float:
        check_is_fitted(self, "rho_")
        return frobenius_distance(self.rho_, check_density_matrix(rho, self.params_.N))[0]


def _with_distance(rep: IterationReport, ln_d: float) -> IterationReport:
    return replace(rep, ln_d_rk=ln_d)
