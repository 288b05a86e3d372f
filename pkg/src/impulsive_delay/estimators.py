"""scikit-learn style wrappers.

``fit`` solves (or samples and optimizes) the configured problem; ``predict``
evaluates the fitted trajectory at the requested times. There is no
training data, so ``X`` is accepted and ignored by ``fit``.
"""
from __future__ import annotations

import dataclasses

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from ._validation import check_times
from .certify import build
from .config import RunConfig, load_shipped
from .optimizer import optimize, sample_solution_set
from .solver import solve


def _resolve(config, h, picard_tol) -> RunConfig:
    cfg = load_shipped() if config is None else config
    if h is not None:
        cfg = cfg.with_h(h)
    if picard_tol is not None:
        cfg = dataclasses.replace(cfg, solver=dataclasses.replace(cfg.solver, picard_tol=float(picard_tol)))
    return cfg


class MildSolutionEstimator(BaseEstimator):
    def __init__(self, config=None, h=None, picard_tol=None, side="L"):
        self.config = config
        self.h = h
        self.picard_tol = picard_tol
        self.side = side

    def fit(self, X=None, y=None):
        cfg = _resolve(self.config, self.h, self.picard_tol)
        problem, selection = build(cfg)
        self.trajectory_ = solve(problem, selection, cfg.solver)
        self.residual_ = float(self.trajectory_.meta["residual"])
        self.n_features_out_ = problem.dim
        return self

    def predict(self, X):
        check_is_fitted(self, "trajectory_")
        t = check_times(X, self.trajectory_.t0, self.trajectory_.T)
        return self.trajectory_(t, self.side)


class SolutionSetOptimizer(BaseEstimator):
    def __init__(self, config=None, budget=None, h=None, workers=1):
        self.config = config
        self.budget = budget
        self.h = h
        self.workers = workers

    def fit(self, X=None, y=None):
        cfg = _resolve(self.config, self.h, None)
        if cfg.optimize is None:
            raise ValueError("configuration has no optimize section")
        budget = cfg.optimize.budget if self.budget is None else int(self.budget)
        problem, _ = build(cfg)
        self.family_ = sample_solution_set(problem, budget, cfg.solver, cfg.optimize.cost, self.workers)
        self.report_ = optimize(self.family_, cfg.optimize.cost)
        self.best_id_ = self.report_.best.id
        self.best_cost_ = self.report_.best_cost
        return self

    def predict(self, X):
        check_is_fitted(self, "report_")
        traj = self.report_.best.trajectory
        return traj(check_times(X, traj.t0, traj.T))

    def score(self, X=None, y=None):
        """Best cost, sign-adjusted so that larger is better."""
        check_is_fitted(self, "report_")
        return -self.best_cost_ if self.report_.direction == "minimize" else self.best_cost_


def costs_table(est: SolutionSetOptimizer):
    check_is_fitted(est, "report_")
    return np.array([r[2] for r in est.report_.table])
