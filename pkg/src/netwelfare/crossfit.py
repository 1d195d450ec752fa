"""Cross-fitting that respects network dependence.

Units within ``radius`` hops of each other share dependent data, so
folds are the color classes of a greedy coloring of the radius-power
graph: any two units in the same fold sit strictly more than ``radius``
apart.  Each unit's nuisances are then fit on its own fold with the
unit itself left out, so no unit's outcome ever enters its own
predictions.  ``radius=0`` degenerates to plain leave-one-out on the
whole sample (a single fold).
"""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass

import numpy as np

from .data import Dataset
from .errors import SeparationError
from .graph import Graph, greedy_coloring, power_graph
from .nuisance import (
    ExposureFeatures,
    OutcomeRegression,
    TreatmentPropensity,
    feature_exposures,
    neighborhood_sizes,
)

__all__ = [
    "FoldAssignment",
    "make_folds",
    "CrossfitNuisance",
    "crossfit_nuisance",
    "write_folds_csv",
]

DEFAULT_RADIUS = 2
_RIDGE_FALLBACK = 1e-8


@dataclass(frozen=True)
class FoldAssignment:
    """Fold index per unit; -1 marks non-sample units."""

    fold: np.ndarray
    n_folds: int
    radius: int

    def members(self, k: int) -> np.ndarray:
        return np.flatnonzero(self.fold == k)


def make_folds(dataset: Dataset, radius: int = DEFAULT_RADIUS) -> FoldAssignment:
    """Partition sample units into dependence-separated folds.

    Builds the ``radius``-power graph of the (symmetrized) interference
    graph, restricts it to sample units, and greedy-colors it; folds are
    the color classes, so fold count never exceeds the restricted power
    graph's maximum degree plus one.
    """
    pg = power_graph(dataset.graph, radius)
    sample = dataset.sample_indices
    pos = {int(u): k for k, u in enumerate(sample)}
    sub_edges = [
        (pos[int(i)], pos[int(j)])
        for i, j in pg.edge_list()
        if int(i) in pos and int(j) in pos
    ]
    sub = Graph.from_edges(sample.size, sub_edges)
    colors = greedy_coloring(sub)
    fold = np.full(dataset.n_units, -1, dtype=np.int64)
    fold[sample] = colors
    n_folds = int(colors.max()) + 1 if colors.size else 0
    return FoldAssignment(fold=fold, n_folds=n_folds, radius=radius)


@dataclass
class CrossfitNuisance:
    """Per-unit leave-one-out nuisance models.

    ``outcome_models[i]`` and ``prob1[i]`` come from fits that excluded
    unit ``i``; ``prob1[i]`` holds that model's treatment probabilities
    for every unit, so unit ``i``'s joint propensities (own arm plus all
    neighbor arms) are computed from one model.
    """

    folds: FoldAssignment
    outcome_models: dict[int, OutcomeRegression]
    prob1: dict[int, np.ndarray]

    def outcome_model(self, i: int) -> OutcomeRegression:
        return self.outcome_models[int(i)]

    def prob1_vector(self, i: int) -> np.ndarray:
        return self.prob1[int(i)]


def crossfit_nuisance(
    dataset: Dataset,
    folds: FoldAssignment | None = None,
    features="default",
) -> CrossfitNuisance:
    """Fit leave-one-out nuisances inside dependence-separated folds.

    A training set smaller than the outcome design (plus one) falls back
    to a ridge solve; an empty one, or a single-arm treatment fold,
    falls back to the pooled sample minus the held-out unit.  Both emit
    warnings.
    """
    if folds is None:
        folds = make_folds(dataset)
    fmap = features if isinstance(features, ExposureFeatures) else ExposureFeatures(features)
    sample = dataset.sample_indices
    s_all = feature_exposures(dataset)
    l_all = neighborhood_sizes(dataset)
    n_feat = None

    def fit_outcome(train: np.ndarray, label: str) -> OutcomeRegression:
        nonlocal n_feat
        design_rows = train.size
        model = OutcomeRegression(features=fmap)
        if n_feat is None:
            n_feat = fmap.build(
                dataset.D[train[:1]], s_all[train[:1]], dataset.Z[train[:1]], l_all[train[:1]]
            ).shape[1]
        if design_rows < n_feat + 1:
            warnings.warn(
                f"{label}: {design_rows} rows for {n_feat} features; using ridge",
                stacklevel=3,
            )
            model = OutcomeRegression(features=fmap, ridge=_RIDGE_FALLBACK)
        return model.fit(
            dataset.D[train], s_all[train], dataset.Z[train], l_all[train], dataset.Y[train]
        )

    def fit_treatment(train: np.ndarray) -> TreatmentPropensity:
        return TreatmentPropensity().fit(dataset.Z[train], dataset.D[train])

    outcome_models: dict[int, OutcomeRegression] = {}
    prob1: dict[int, np.ndarray] = {}
    for j in sample:
        j = int(j)
        fold_members = folds.members(folds.fold[j])
        train = fold_members[fold_members != j]
        if train.size == 0:
            warnings.warn(f"fold of unit {j} has no other members; using pooled sample")
            train = sample[sample != j]
        outcome_models[j] = fit_outcome(train, f"unit {j} fold")
        arms = np.unique(dataset.D[train])
        if arms.size < 2:
            warnings.warn(f"unit {j}: single treatment arm in fold; using pooled sample")
            treatment = None
        else:
            try:
                treatment = fit_treatment(train)
            except SeparationError:
                warnings.warn(f"unit {j}: separated treatment fold; using pooled sample")
                treatment = None
        if treatment is None:
            pooled = sample[sample != j]
            if np.unique(dataset.D[pooled]).size < 2:
                raise SeparationError("pooled sample has a single treatment arm")
            treatment = fit_treatment(pooled)
        prob1[j] = treatment.prob1(dataset.Z)
    return CrossfitNuisance(folds=folds, outcome_models=outcome_models, prob1=prob1)


def write_folds_csv(path, folds: FoldAssignment) -> None:
    """Dump ``id,fold`` rows for sample units."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["id", "fold"])
        for i in np.flatnonzero(folds.fold >= 0):
            writer.writerow([int(i), int(folds.fold[i])])
