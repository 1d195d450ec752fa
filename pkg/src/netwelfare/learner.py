"""End-to-end policy learning with a scikit-learn style estimator.

``NetworkPolicyLearner.fit`` runs the two-step pipeline on a dataset:
nuisance estimation (pooled, or network cross-fitted when a radius is
given), the per-unit AIPW effect table, and welfare maximization over
the declared policy class.  After solving, the optimizer's objective is
recomputed as the AIPW welfare of the returned policy; a mismatch
beyond 1e-9 raises, since the table contraction and the encoded
objective are the same quantity by construction.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator

from .crossfit import crossfit_nuisance, make_folds
from .data import Dataset
from .errors import ConfigError, NumericalError
from .nuisance import build_propensity_table, fit_pooled_nuisance
from .policyopt import PolicyClass, capacity_diagnostic, maximize_welfare
from .welfare import build_effect_table, welfare_aipw, welfare_ipw, welfare_plugin

__all__ = ["NetworkPolicyLearner"]


class NetworkPolicyLearner(BaseEstimator):
    """Learn a treatment rule maximizing estimated welfare under
    network interference.

    Parameters
    ----------
    policy_kind : "linear_threshold" or "explicit_assignment".
    coef_box : scalar or per-coefficient half widths of the symmetric
        coefficient box (intercept first).
    capacity : optional maximum treated fraction K in (0, 1].
    trim : propensity trimming threshold in [0, 0.5).
    crossfit_radius : when set, nuisances are leave-one-out fits inside
        dependence-separated folds of the given graph radius.
    backend : "auto", "cells", "branch_bound", or "heuristic".
    seed : used by the heuristic backend only.
    gamma : tail level for the capacity concentration diagnostic.

    Attributes (after fit)
    ----------------------
    policy_ : the learned policy object.
    welfare_ : AIPW welfare estimate of ``policy_`` on the sample.
    solve_result_ : full solver output (backend, certificate, nodes).
    effect_table_, propensity_table_, nuisance_ : pipeline internals.
    diagnostics_ : JSON-serializable summary dict.
    """

    def __init__(
        self,
        policy_kind: str = "linear_threshold",
        coef_box=1.0,
        capacity=None,
        trim: float = 0.0,
        crossfit_radius=None,
        backend: str = "auto",
        seed: int = 0,
        gamma: float = 0.05,
    ):
        self.policy_kind = policy_kind
        self.coef_box = coef_box
        self.capacity = capacity
        self.trim = trim
        self.crossfit_radius = crossfit_radius
        self.backend = backend
        self.seed = seed
        self.gamma = gamma

    def fit(self, dataset: Dataset) -> "NetworkPolicyLearner":
        n_folds = None
        if self.crossfit_radius is not None:
            folds = make_folds(dataset, radius=int(self.crossfit_radius))
            nuisance = crossfit_nuisance(dataset, folds)
            n_folds = int(folds.n_folds)
        else:
            nuisance = fit_pooled_nuisance(dataset)
        propensity = build_propensity_table(
            dataset, nuisance.prob1_vector, trim=self.trim, tau=dataset.tau
        )
        table = build_effect_table(dataset, nuisance, propensity)
        spec = PolicyClass(kind=self.policy_kind, coef_box=self.coef_box)
        result = maximize_welfare(
            table,
            dataset,
            spec,
            capacity=self.capacity,
            backend=self.backend,
            seed=self.seed,
        )
        welfare = welfare_aipw(result.policy, dataset, nuisance, propensity)
        if abs(welfare.value - result.objective) > 1e-9:
            raise NumericalError(
                "solver objective disagrees with the recomputed AIPW welfare: "
                f"{result.objective!r} vs {welfare.value!r}"
            )

        self.nuisance_ = nuisance
        self.propensity_table_ = propensity
        self.effect_table_ = table
        self.solve_result_ = result
        self.policy_ = result.policy
        self.welfare_ = welfare
        self.diagnostics_ = {
            "welfare": welfare.as_report(),
            "welfare_plugin": welfare_plugin(result.policy, dataset, nuisance).as_report(),
            "welfare_ipw": welfare_ipw(result.policy, dataset, propensity).as_report(),
            "trimmed_units": int(propensity.trimmed_count()),
            "crossfit_folds": n_folds,
            "capacity_bound": capacity_diagnostic(dataset, gamma=self.gamma),
        }
        return self

    def predict(self, X) -> np.ndarray:
        if not hasattr(self, "policy_"):
            raise ConfigError("learner is not fitted")
        return self.policy_.assign(X)

    def report(self) -> dict:
        """Solve report plus welfare estimates and diagnostics."""
        if not hasattr(self, "policy_"):
            raise ConfigError("learner is not fitted")
        out = self.solve_result_.report()
        out.update(self.diagnostics_)
        return out
