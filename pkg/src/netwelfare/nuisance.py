"""Nuisance estimation: outcome regression, treatment propensity, and the
joint exposure propensity implied by independent unit-level treatment.

Under unconfounded, unit-level random assignment the chance that unit
``i`` receives arm ``d`` while exactly ``s`` of its ``l`` neighbors are
treated factorizes into the unit's own arm probability times the
Poisson-binomial mass at ``s`` of the neighbors' treatment
probabilities.  With second-degree interference a third factor appears:
the mass of the multiplicity-weighted sum over distinct second-degree
neighbors.  ``build_propensity_table`` materializes these joint
probabilities per sample unit, optionally coarsened to exposure-share
buckets and flagged below a trimming threshold.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit
from sklearn.base import BaseEstimator
from sklearn.exceptions import NotFittedError

from .data import Dataset, exposure_bucket
from .errors import ConfigError, DataIntegrityError, NumericalError, SeparationError
from .graph import second_degree

__all__ = [
    "ExposureFeatures",
    "OutcomeRegression",
    "TreatmentPropensity",
    "PooledNuisance",
    "fit_pooled_nuisance",
    "observed_exposures",
    "feature_exposures",
    "bucketize_exposures",
    "neighborhood_sizes",
    "poisson_binomial_pmf",
    "weighted_bernoulli_pmf",
    "joint_propensity",
    "joint_propensity_two_degree",
    "PropensityTable",
    "build_propensity_table",
    "nuisance_diagnostics",
]

DEFAULT_TERMS = ("intercept", "d", "s", "d*s", "z", "d*z", "s*z", "l")
EWM_TERMS = ("intercept", "d", "z", "d*z")
# Spillovers entering through the treated-neighbor share s / max(l, 1)
# rather than the raw count, as in models where a neighbor's influence
# dilutes with degree.
SHARE_TERMS = ("intercept", "d", "share", "d*share", "z", "d*z", "share*z", "d*share*z")
_KNOWN_TERMS = frozenset(DEFAULT_TERMS) | frozenset(SHARE_TERMS)


def _as_cols(arr, n: int) -> np.ndarray:
    out = np.asarray(arr, dtype=float)
    if out.ndim == 1:
        out = out[:, None]
    if out.shape[0] != n:
        raise ValueError("feature inputs must share their first dimension")
    return out


class ExposureFeatures:
    """Design-matrix builder over own arm, exposure counts, covariates, degree.

    ``terms`` is an ordered subset of ``DEFAULT_TERMS``; ``s`` and ``l``
    may carry one column per interference degree, and every term
    involving them expands once per column.
    """

    def __init__(self, terms=DEFAULT_TERMS):
        if isinstance(terms, str):
            presets = {"default": DEFAULT_TERMS, "ewm": EWM_TERMS, "share": SHARE_TERMS}
            terms = presets.get(terms)
            if terms is None:
                raise ConfigError("unknown feature preset; use 'default', 'ewm', or 'share'")
        unknown = set(terms) - _KNOWN_TERMS
        if unknown:
            raise ConfigError(f"unknown feature terms {sorted(unknown)!r}")
        self.terms = tuple(terms)

    def build(self, d, s, z, l) -> np.ndarray:
        z = np.asarray(z, dtype=float)
        if z.ndim == 1:
            z = z[:, None]
        n = z.shape[0]
        d = np.asarray(d, dtype=float).reshape(n, 1)
        s = _as_cols(s, n)
        l = _as_cols(l, n)
        share = s / np.maximum(l, 1.0)
        cols = []
        for term in self.terms:
            if term == "intercept":
                cols.append(np.ones((n, 1)))
            elif term == "d":
                cols.append(d)
            elif term == "s":
                cols.append(s)
            elif term == "d*s":
                cols.append(d * s)
            elif term == "share":
                cols.append(share)
            elif term == "d*share":
                cols.append(d * share)
            elif term == "z":
                cols.append(z)
            elif term == "d*z":
                cols.append(d * z)
            elif term == "s*z":
                cols.append(np.hstack([s[:, [j]] * z for j in range(s.shape[1])]))
            elif term == "share*z":
                cols.append(np.hstack([share[:, [j]] * z for j in range(share.shape[1])]))
            elif term == "d*share*z":
                cols.append(np.hstack([d * share[:, [j]] * z for j in range(share.shape[1])]))
            elif term == "l":
                cols.append(l)
        return np.hstack(cols)

    def names(self, z_names, degree: int = 1) -> list[str]:
        s_names = ["s"] if degree == 1 else ["s1", "s2"]
        l_names = ["l"] if degree == 1 else ["l1", "l2"]
        share_names = ["share"] if degree == 1 else ["share1", "share2"]
        out: list[str] = []
        for term in self.terms:
            if term == "intercept":
                out.append("1")
            elif term == "d":
                out.append("d")
            elif term == "s":
                out += s_names
            elif term == "d*s":
                out += [f"d*{sn}" for sn in s_names]
            elif term == "share":
                out += share_names
            elif term == "d*share":
                out += [f"d*{sn}" for sn in share_names]
            elif term == "z":
                out += list(z_names)
            elif term == "d*z":
                out += [f"d*{zn}" for zn in z_names]
            elif term == "s*z":
                out += [f"{sn}*{zn}" for sn in s_names for zn in z_names]
            elif term == "share*z":
                out += [f"{sn}*{zn}" for sn in share_names for zn in z_names]
            elif term == "d*share*z":
                out += [f"d*{sn}*{zn}" for sn in share_names for zn in z_names]
            elif term == "l":
                out += l_names
        return out


class OutcomeRegression(BaseEstimator):
    """Least-squares conditional mean of the outcome given exposure.

    Ordinary least squares on the :class:`ExposureFeatures` design;
    rank-deficient designs resolve to the minimum-norm solution.  A
    positive ``ridge`` switches to a ridge solve (used by cross-fitting
    inside tiny folds) and lifts the sample-size precondition.
    """

    def __init__(self, features="default", ridge: float = 0.0):
        self.features = features
        self.ridge = ridge

    def _map(self) -> ExposureFeatures:
        f = self.features
        return f if isinstance(f, ExposureFeatures) else ExposureFeatures(f)

    def fit(self, d, s, z, l, y) -> "OutcomeRegression":
        design = self._map().build(d, s, z, l)
        y = np.asarray(y, dtype=float)
        if y.shape != (design.shape[0],):
            raise ValueError("y must be one value per row")
        if self.ridge == 0.0 and design.shape[0] < design.shape[1] + 1:
            raise ValueError(
                f"need at least {design.shape[1] + 1} rows to fit "
                f"{design.shape[1]} coefficients; got {design.shape[0]}"
            )
        if self.ridge > 0.0:
            gram = design.T @ design + self.ridge * np.eye(design.shape[1])
            self.coef_ = np.linalg.solve(gram, design.T @ y)
        else:
            self.coef_, *_ = np.linalg.lstsq(design, y, rcond=None)
        self.n_features_in_ = design.shape[1]
        return self

    def predict(self, d, s, z, l) -> np.ndarray:
        if not hasattr(self, "coef_"):
            raise NotFittedError("OutcomeRegression is not fitted yet")
        return self._map().build(d, s, z, l) @ self.coef_


class TreatmentPropensity(BaseEstimator):
    """Logistic model for the unit-level treatment probability.

    Fit by iteratively reweighted least squares with step halving;
    converged when the log-likelihood improves by less than ``tol``.
    Perfect separation (diverging coefficients) raises
    :class:`SeparationError` since the MLE does not exist.
    """

    _COEF_DIVERGENCE = 30.0

    def __init__(self, max_iter: int = 100, tol: float = 1e-10):
        self.max_iter = max_iter
        self.tol = tol

    @staticmethod
    def _design(Z) -> np.ndarray:
        Z = np.asarray(Z, dtype=float)
        if Z.ndim == 1:
            Z = Z[:, None]
        return np.hstack([np.ones((Z.shape[0], 1)), Z])

    def fit(self, Z, D) -> "TreatmentPropensity":
        X = self._design(Z)
        D = np.asarray(D, dtype=float)
        if set(np.unique(D)) - {0.0, 1.0}:
            raise ValueError("treatment labels must be binary 0/1")
        if D.min() == D.max():
            raise SeparationError("only one treatment arm present; cannot fit propensity")
        n, k = X.shape
        beta = np.zeros(k)

        def loglik(b):
            eta = X @ b
            return float(np.sum(D * eta - np.logaddexp(0.0, eta)))

        ll = loglik(beta)
        converged = False
        for _ in range(self.max_iter):
            p = expit(X @ beta)
            w = p * (1.0 - p)
            grad = X.T @ (D - p)
            hess = (X * w[:, None]).T @ X
            try:
                step = np.linalg.solve(hess, grad)
            except np.linalg.LinAlgError:
                step = np.linalg.solve(hess + 1e-10 * np.eye(k), grad)
            # Halve until the step does not degrade the likelihood.
            scale = 1.0
            for _ in range(40):
                cand = beta + scale * step
                ll_new = loglik(cand)
                if ll_new >= ll - 1e-12:
                    break
                scale *= 0.5
            beta = beta + scale * step
            if np.max(np.abs(beta)) > self._COEF_DIVERGENCE:
                raise SeparationError(
                    "treatment model coefficients diverged; data are separated"
                )
            improved = ll_new - ll
            ll = ll_new
            if improved < self.tol:
                converged = True
                break
        p = expit(X @ beta)
        self.coef_ = beta[1:]
        self.intercept_ = float(beta[0])
        self.log_likelihood_ = ll
        self.converged_ = converged
        self.grad_norm_ = float(np.max(np.abs(X.T @ (D - p))))
        self.n_features_in_ = k - 1
        if not converged:
            raise NumericalError("treatment model failed to converge")
        return self

    def _full_coef(self) -> np.ndarray:
        if not hasattr(self, "coef_"):
            raise NotFittedError("TreatmentPropensity is not fitted yet")
        return np.concatenate([[self.intercept_], self.coef_])

    def prob1(self, Z) -> np.ndarray:
        """P(D = 1 | Z) for each row."""
        return expit(self._design(Z) @ self._full_coef())

    def predict_proba(self, Z) -> np.ndarray:
        p1 = self.prob1(Z)
        return np.column_stack([1.0 - p1, p1])

    def predict(self, Z) -> np.ndarray:
        return (self.prob1(Z) >= 0.5).astype(np.int64)


@dataclass
class PooledNuisance:
    """One outcome model and one treatment model shared by all units."""

    outcome: OutcomeRegression
    treatment: TreatmentPropensity
    treatment_probs: np.ndarray  # P(D=1 | Z_j) for every unit j

    def outcome_model(self, i: int) -> OutcomeRegression:
        return self.outcome

    def prob1_vector(self, i: int) -> np.ndarray:
        return self.treatment_probs


def fit_pooled_nuisance(dataset: Dataset, features="default") -> PooledNuisance:
    """Fit outcome and treatment models on the full estimation sample.

    Samples too small for ordinary least squares on the chosen feature
    map fall back to a lightly ridged solve, with a warning."""
    idx = dataset.sample_indices
    d = dataset.D[idx]
    s = feature_exposures(dataset)[idx]
    l = neighborhood_sizes(dataset)[idx]
    model = OutcomeRegression(features=features)
    n_feat = model._map().build(d[:1], s[:1], dataset.Z[idx[:1]], l[:1]).shape[1]
    if idx.size < n_feat + 1:
        warnings.warn(
            f"{idx.size} sample rows for {n_feat} outcome features; using ridge",
            stacklevel=2,
        )
        model = OutcomeRegression(features=features, ridge=1e-8)
    outcome = model.fit(d, s, dataset.Z[idx], l, dataset.Y[idx])
    treatment = TreatmentPropensity().fit(dataset.Z[idx], d)
    return PooledNuisance(
        outcome=outcome,
        treatment=treatment,
        treatment_probs=treatment.prob1(dataset.Z),
    )


def poisson_binomial_pmf(probs) -> np.ndarray:
    """Exact distribution of a sum of independent Bernoulli variables.

    Returns the length ``len(probs) + 1`` probability vector, computed
    by sequential convolution in O(l^2).
    """
    probs = np.asarray(probs, dtype=float)
    if probs.size and (probs.min() < 0 or probs.max() > 1):
        raise ValueError("probabilities must lie in [0, 1]")
    pmf = np.zeros(probs.size + 1)
    pmf[0] = 1.0
    top = 0
    for q in probs:
        top += 1
        pmf[1 : top + 1] = pmf[1 : top + 1] * (1.0 - q) + pmf[:top] * q
        pmf[0] *= 1.0 - q
    return pmf


def weighted_bernoulli_pmf(probs, weights) -> np.ndarray:
    """Distribution of ``sum_j weights[j] * B_j`` for independent Bernoullis.

    ``weights`` are positive integers; the support is ``0..sum(weights)``
    and skipped values carry exact zeros.  With unit weights this reduces
    to :func:`poisson_binomial_pmf`.
    """
    probs = np.asarray(probs, dtype=float)
    weights = np.asarray(weights, dtype=np.int64)
    if probs.shape != weights.shape:
        raise ValueError("probs and weights must align")
    if probs.size and (probs.min() < 0 or probs.max() > 1):
        raise ValueError("probabilities must lie in [0, 1]")
    if np.any(weights < 1):
        raise ValueError("weights must be positive integers")
    total = int(weights.sum())
    pmf = np.zeros(total + 1)
    pmf[0] = 1.0
    top = 0
    for q, w in zip(probs, weights):
        w = int(w)
        top += w
        upper = pmf[w : top + 1] * (1.0 - q) + pmf[: top + 1 - w] * q
        pmf[:w] *= 1.0 - q
        pmf[w : top + 1] = upper
    return pmf


def joint_propensity(d: int, s: int, own_prob1: float, neighbor_probs1) -> float:
    """P(own arm = d, treated neighbors = s) under independent assignment."""
    own = own_prob1 if d == 1 else 1.0 - own_prob1
    pmf = poisson_binomial_pmf(neighbor_probs1)
    if not 0 <= s < pmf.size:
        raise ValueError(f"exposure count {s} outside 0..{pmf.size - 1}")
    return float(own * pmf[s])


def joint_propensity_two_degree(
    d: int, s1: int, s2: int, own_prob1: float,
    neighbor_probs1, second_probs1, second_mults,
) -> float:
    """Joint propensity with a second-degree exposure factor.

    The third factor is the mass of the multiplicity-weighted treated
    count over distinct second-degree neighbors; the three factors
    multiply even though the neighbor sets may overlap.
    """
    base = joint_propensity(d, s1, own_prob1, neighbor_probs1)
    pmf2 = weighted_bernoulli_pmf(second_probs1, second_mults)
    if not 0 <= s2 < pmf2.size:
        raise ValueError(f"second-degree exposure {s2} outside 0..{pmf2.size - 1}")
    return float(base * pmf2[s2])


def observed_exposures(dataset: Dataset, strict: bool = True) -> np.ndarray:
    """Realized treated-neighbor counts, one row per unit.

    Shape (n,) for first-degree interference; (n, 2) with the
    multiplicity-weighted second-degree count appended otherwise.
    Neighbors with unobserved treatment make the count NaN; with
    ``strict`` (the default) a NaN on a sample unit is an integrity
    error, since estimation needs realized exposures there.
    """
    g = dataset.graph
    D = np.where(dataset.D < 0, np.nan, dataset.D.astype(float))
    first = np.array([D[g.neighbors(i)].sum() if g.degree(i) else 0.0 for i in range(g.n_nodes)])
    if dataset.interference_degree == 1:
        out = first
    else:
        second = np.empty(g.n_nodes)
        for i in range(g.n_nodes):
            nodes, mult = second_degree(g, i)
            second[i] = float((D[nodes] * mult).sum()) if nodes.size else 0.0
        out = np.column_stack([first, second])
    if strict:
        bad = np.isnan(np.atleast_2d(out.T).T[dataset.is_sample]).any(axis=-1)
        if bad.any():
            culprit = int(dataset.sample_indices[np.argmax(bad)])
            raise DataIntegrityError(
                f"sample unit {culprit} has neighbors with unobserved treatment"
            )
    return out


def bucketize_exposures(s, l, tau) -> np.ndarray:
    """Map exposure counts to bucket indices, elementwise.

    ``s`` and ``l`` share a shape (or ``l`` broadcasts to it); NaN
    exposures pass through so unobserved target rows stay unobserved.
    """
    s_arr = np.asarray(s, dtype=float)
    l_arr = np.broadcast_to(np.asarray(l, dtype=float), s_arr.shape)
    out = np.empty(s_arr.shape)
    for idx in np.ndindex(s_arr.shape):
        if not np.isfinite(s_arr[idx]):
            out[idx] = np.nan
            continue
        out[idx] = exposure_bucket(int(round(s_arr[idx])), int(round(l_arr[idx])), tau)
    return out


def feature_exposures(dataset: Dataset, strict: bool = True) -> np.ndarray:
    """Observed exposures in outcome-model feature units.

    Raw treated-neighbor counts, or bucket indices when the dataset
    declares a ``tau`` grid; fit and predict paths must agree on which.
    """
    s = observed_exposures(dataset, strict=strict)
    if dataset.tau is None:
        return s
    return bucketize_exposures(s, neighborhood_sizes(dataset), dataset.tau)


def neighborhood_sizes(dataset: Dataset) -> np.ndarray:
    """Degree (and weighted second-degree size) per unit."""
    g = dataset.graph
    first = g.degrees().astype(float)
    if dataset.interference_degree == 1:
        return first
    second = np.array([second_degree(g, i)[1].sum() for i in range(g.n_nodes)], dtype=float)
    return np.column_stack([first, second])


_MAX_GRID = 10_000


@dataclass
class PropensityTable:
    """Per-unit joint exposure propensities on the (d, exposure) grid.

    ``values[i]`` has shape (2, l_i + 1) for exact first-degree tables,
    (2, n_buckets + 1) when bucketed (last bucket reserved for isolated
    units), and (2, l_i + 1, L2_i + 1) for two-degree tables.  ``trimmed``
    mirrors the shapes; an entry is flagged when its probability falls
    strictly below ``trim`` (zero-probability cells are always flagged).
    """

    sample_ids: np.ndarray
    values: list[np.ndarray]
    trimmed: list[np.ndarray]
    degree: int
    trim: float
    tau: np.ndarray | None = None

    _pos: dict = field(default_factory=dict, repr=False)

    def __post_init__(self) -> None:
        self._pos = {int(u): k for k, u in enumerate(self.sample_ids)}

    @property
    def bucketed(self) -> bool:
        return self.tau is not None

    def _entry(self, i: int) -> int:
        try:
            return self._pos[int(i)]
        except KeyError:
            raise KeyError(f"unit {i} is not a sample unit") from None

    def value(self, i: int, d: int, s) -> float:
        idx = (d, *np.atleast_1d(s).astype(int))
        return float(self.values[self._entry(i)][idx])

    def is_trimmed(self, i: int, d: int, s) -> bool:
        idx = (d, *np.atleast_1d(s).astype(int))
        return bool(self.trimmed[self._entry(i)][idx])

    def trimmed_count(self) -> int:
        return int(sum(t.sum() for t in self.trimmed))

    def unit_minmax(self, i: int) -> tuple[float, float]:
        """Smallest and largest untrimmed probability for one unit."""
        k = self._entry(i)
        keep = self.values[k][~self.trimmed[k]]
        if keep.size == 0:
            return float("nan"), float("nan")
        return float(keep.min()), float(keep.max())


def _bucketize(exact: np.ndarray, l: int, tau: np.ndarray) -> np.ndarray:
    """Aggregate an exact (2, l+1) table onto share buckets plus a
    reserved final bucket for isolated units."""
    n_buckets = tau.size
    out = np.zeros((2, n_buckets + 1))
    if l == 0:
        out[:, n_buckets] = exact[:, 0]
        return out
    for s in range(l + 1):
        out[:, exposure_bucket(s, l, tau)] += exact[:, s]
    return out


def build_propensity_table(
    dataset: Dataset,
    treatment_probs,
    *,
    trim: float = 0.0,
    tau=None,
) -> PropensityTable:
    """Materialize joint propensities for every sample unit.

    ``treatment_probs`` is either a length-n vector of own-treatment
    probabilities or a callable ``unit -> vector`` (cross-fitting hands
    each unit the predictions of the model that excluded it).
    """
    g = dataset.graph
    degree = dataset.interference_degree
    tau_arr = None if tau is None else np.asarray(tau, dtype=float)
    get_probs = treatment_probs if callable(treatment_probs) else (lambda i: treatment_probs)
    values: list[np.ndarray] = []
    trimmed: list[np.ndarray] = []
    sample_ids = dataset.sample_indices
    for i in sample_ids:
        p = np.asarray(get_probs(int(i)), dtype=float)
        nbrs = g.neighbors(i)
        own1 = float(p[i])
        pmf1 = poisson_binomial_pmf(p[nbrs])
        own = np.array([1.0 - own1, own1])
        if degree == 1:
            table = own[:, None] * pmf1[None, :]
            if tau_arr is not None:
                table = _bucketize(table, nbrs.size, tau_arr)
        else:
            nodes2, mult2 = second_degree(g, i)
            pmf2 = weighted_bernoulli_pmf(p[nodes2], mult2)
            if tau_arr is None and pmf1.size * pmf2.size > _MAX_GRID:
                raise ConfigError(
                    f"unit {int(i)}: exposure grid {pmf1.size}x{pmf2.size} exceeds "
                    f"{_MAX_GRID}; supply a tau grid to bucket exposures"
                )
            if tau_arr is not None:
                b1 = _bucketize(own[:, None] * pmf1[None, :], nbrs.size, tau_arr)
                l2 = int(mult2.sum())
                bucket2 = np.zeros(pmf2.size, dtype=np.int64)
                for s2 in range(pmf2.size):
                    bucket2[s2] = exposure_bucket(s2, l2, tau_arr) if l2 else tau_arr.size
                pmf2b = np.zeros(tau_arr.size + 1)
                np.add.at(pmf2b, bucket2, pmf2)
                table = b1[:, :, None] * pmf2b[None, None, :]
            else:
                table = own[:, None, None] * pmf1[None, :, None] * pmf2[None, None, :]
        if degree == 1 and tau_arr is None and pmf1.size > _MAX_GRID:
            raise ConfigError(
                f"unit {int(i)}: exposure grid {pmf1.size} exceeds {_MAX_GRID}; "
                "supply a tau grid to bucket exposures"
            )
        values.append(table)
        trimmed.append((table < trim) | (table <= 0.0))
    return PropensityTable(
        sample_ids=sample_ids,
        values=values,
        trimmed=trimmed,
        degree=degree,
        trim=trim,
        tau=tau_arr,
    )


def nuisance_diagnostics(
    dataset: Dataset,
    table: PropensityTable,
    treatment: TreatmentPropensity,
    outcome: OutcomeRegression,
) -> list[dict]:
    """JSON-serializable diagnostic records: one model summary line,
    then one line per sample unit."""
    feat = outcome._map()
    records: list[dict] = [
        {
            "record": "model",
            "treatment_log_likelihood": treatment.log_likelihood_,
            "treatment_converged": bool(treatment.converged_),
            "treatment_coefficients": {
                "intercept": treatment.intercept_,
                **{name: float(c) for name, c in zip(dataset.z_names, treatment.coef_)},
            },
            "outcome_coefficients": {
                name: float(c)
                for name, c in zip(
                    feat.names(dataset.z_names, dataset.interference_degree),
                    outcome.coef_,
                )
            },
            "trimmed_cells_total": table.trimmed_count(),
        }
    ]
    for i in table.sample_ids:
        lo, hi = table.unit_minmax(int(i))
        k = table._entry(int(i))
        records.append(
            {
                "record": "unit",
                "id": int(i),
                "min_propensity": lo,
                "max_propensity": hi,
                "trimmed_cells": int(table.trimmed[k].sum()),
            }
        )
    return records
