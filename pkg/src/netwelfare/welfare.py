"""Welfare estimators for candidate assignment policies.

Three estimators of average welfare under a policy: the plug-in mean
of the fitted outcome at policy-induced exposures, the
inverse-propensity-weighted (IPW) mean of realized outcomes on
policy-matching exposure cells, and the doubly robust AIPW
combination.  ``build_effect_table`` materializes the per-unit AIPW
cell values g_i(d, h); contracting that table along any policy's cells
reproduces ``welfare_aipw`` bit for bit, which is the identity the
optimizers in :mod:`netwelfare.policyopt` maximize.

All estimators average over the estimation sample in unit-id order and
apply the dataset's ``rho`` column as a pure outer weight.  When the
dataset declares a ``tau`` grid, exposures enter both the propensity
lookup and the outcome model as bucket indices (the reserved bucket
``len(tau)`` stands in for isolated units).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .data import Dataset, exposure_bucket
from .errors import ConfigError, DataIntegrityError
from .graph import second_degree
from .nuisance import (
    PropensityTable,
    bucketize_exposures,
    neighborhood_sizes,
    observed_exposures,
)

__all__ = [
    "WelfareEstimate",
    "EffectTable",
    "policy_assignments",
    "policy_exposures",
    "policy_exposure",
    "welfare_plugin",
    "welfare_ipw",
    "welfare_aipw",
    "build_effect_table",
]


@dataclass(frozen=True)
class WelfareEstimate:
    """Estimated welfare with per-unit contributions in sample-id order.

    ``value`` is the mean of ``contributions`` over all sample units.
    ``trimmed_count`` is the number of units whose policy-induced
    exposure cell fell below the overlap floor; their term was dropped
    (IPW) or reduced to its plug-in part (AIPW).  ``n_effective`` is the
    sample size minus that count.
    """

    value: float
    kind: str
    n_effective: int
    trimmed_count: int
    contributions: np.ndarray

    def as_report(self, include_contributions: bool = False) -> dict:
        out = {
            "estimator": self.kind,
            "value": self.value,
            "n_effective": self.n_effective,
            "trimmed_count": self.trimmed_count,
        }
        if include_contributions:
            out["contributions"] = [float(c) for c in self.contributions]
        return out


def policy_assignments(policy, dataset: Dataset) -> np.ndarray:
    """Binary assignment for every unit (sample and target) under ``policy``.

    ``policy`` is either an object with an ``assign(X)`` method (see
    :mod:`netwelfare.policyopt`) or an explicit 0/1 vector covering all
    units; neighbors of sample units may be target units, so a partial
    vector is an error.
    """
    if hasattr(policy, "assign"):
        pi = np.asarray(policy.assign(dataset.X))
    else:
        pi = np.asarray(policy)
    if pi.shape != (dataset.n_units,):
        raise DataIntegrityError(
            f"policy yields {pi.shape} assignments for {dataset.n_units} units"
        )
    if not np.isin(pi, (0, 1)).all():
        raise DataIntegrityError("policy assignments must be binary 0/1")
    return pi.astype(np.int64)


def policy_exposures(pi: np.ndarray, dataset: Dataset, indices=None) -> np.ndarray:
    """Policy-induced treated-neighbor counts for the given units.

    ``pi`` is a full assignment vector (see :func:`policy_assignments`);
    ``indices`` defaults to the estimation sample.  Shape (m,) under
    first-degree interference, (m, 2) with the multiplicity-weighted
    second-degree count appended otherwise.
    """
    g = dataset.graph
    idx = dataset.sample_indices if indices is None else np.asarray(indices, dtype=np.int64)
    first = np.array([float(pi[g.neighbors(i)].sum()) for i in idx])
    if dataset.interference_degree == 1:
        return first
    second = np.empty(idx.size)
    for k, i in enumerate(idx):
        nodes, mult = second_degree(g, int(i))
        second[k] = float((pi[nodes] * mult).sum()) if nodes.size else 0.0
    return np.column_stack([first, second])


def policy_exposure(policy, dataset: Dataset, i: int):
    """Own assignment and policy-induced exposure of one unit.

    Returns ``(pi_i, S_i)`` under first-degree interference and
    ``(pi_i, S1_i, S2_i)`` under second-degree interference.
    """
    pi = policy_assignments(policy, dataset)
    s = policy_exposures(pi, dataset, indices=[i])[0]
    if dataset.interference_degree == 1:
        return int(pi[i]), int(s)
    return int(pi[i]), int(s[0]), int(s[1])


def _cells(s, l, tau) -> np.ndarray:
    """Exposure counts as grid cell indices: identity without a ``tau``
    grid, bucket indices with one."""
    if tau is None:
        return np.asarray(np.rint(s), dtype=np.int64)
    return np.asarray(bucketize_exposures(s, l, tau), dtype=np.int64)


def _cell_index(d: int, cell) -> tuple:
    return (int(d), *np.atleast_1d(cell).astype(int))


def _table_tau(dataset: Dataset, table: PropensityTable):
    """The common bucket grid, or an integrity error on disagreement."""
    a, b = dataset.tau, table.tau
    if (a is None) != (b is None) or (
        a is not None and not np.array_equal(np.asarray(a, dtype=float), b)
    ):
        raise DataIntegrityError("propensity table tau grid differs from the dataset's")
    return b


def _model_for(nuisance):
    """Per-unit outcome model accessor.

    Accepts a pooled or cross-fitted nuisance bundle (anything with an
    ``outcome_model(i)`` method) or one fitted model shared by all units.
    """
    if hasattr(nuisance, "outcome_model"):
        return nuisance.outcome_model
    return lambda i: nuisance


def _estimate(kind: str, contributions: np.ndarray, trimmed: int) -> WelfareEstimate:
    n = contributions.size
    return WelfareEstimate(
        value=float(np.mean(contributions)) if n else 0.0,
        kind=kind,
        n_effective=n - trimmed,
        trimmed_count=trimmed,
        contributions=contributions,
    )


def welfare_plugin(policy, dataset: Dataset, outcome_model) -> WelfareEstimate:
    """Plug-in welfare: mean fitted outcome at policy exposures.

    (1/n) sum_i rho_i * m_hat_i(pi(X_i), S_i(pi), Z_i, l_i), with the
    exposure fed as a bucket index when the dataset declares ``tau``.
    """
    pi = policy_assignments(policy, dataset)
    idx = dataset.sample_indices
    model_at = _model_for(outcome_model)
    l = neighborhood_sizes(dataset)[idx]
    s = policy_exposures(pi, dataset)
    feat_s = s if dataset.tau is None else bucketize_exposures(s, l, dataset.tau)
    contributions = np.empty(idx.size)
    for k, i in enumerate(idx):
        i = int(i)
        pred = model_at(i).predict(
            [float(pi[i])], feat_s[k : k + 1], dataset.Z[i][None, :], l[k : k + 1]
        )
        contributions[k] = dataset.rho[i] * float(pred[0])
    return _estimate("plugin", contributions, trimmed=0)


def welfare_ipw(policy, dataset: Dataset, propensity_table: PropensityTable) -> WelfareEstimate:
    """IPW welfare: realized outcomes reweighted on policy-matching cells.

    (1/n) sum_i rho_i * 1{D_i = pi(X_i), observed cell = policy cell}
    / e_i(pi(X_i), policy cell) * Y_i.  Terms whose policy cell is
    trimmed are dropped entirely and counted.
    """
    tau = _table_tau(dataset, propensity_table)
    pi = policy_assignments(policy, dataset)
    idx = dataset.sample_indices
    l = neighborhood_sizes(dataset)[idx]
    pol_cells = _cells(policy_exposures(pi, dataset), l, tau)
    obs_cells = _cells(observed_exposures(dataset)[idx], l, tau)
    contributions = np.zeros(idx.size)
    trimmed = 0
    for k, i in enumerate(idx):
        i = int(i)
        d_pol = int(pi[i])
        if propensity_table.is_trimmed(i, d_pol, pol_cells[k]):
            trimmed += 1
            continue
        if d_pol == int(dataset.D[i]) and np.array_equal(pol_cells[k], obs_cells[k]):
            e = propensity_table.value(i, d_pol, pol_cells[k])
            contributions[k] = dataset.rho[i] * (float(dataset.Y[i]) / e)
    return _estimate("ipw", contributions, trimmed)


def welfare_aipw(
    policy, dataset: Dataset, outcome_model, propensity_table: PropensityTable
) -> WelfareEstimate:
    """Doubly robust welfare: plug-in backbone plus reweighted residual.

    (1/n) sum_i rho_i * [ 1{match}/e_i * (Y_i - m_hat_i(policy cell))
    + m_hat_i(policy cell) ].  Computed by contracting the effect table
    so the value agrees with the optimizers' objective bit for bit.
    """
    table = build_effect_table(dataset, outcome_model, propensity_table)
    return table.contract(policy, dataset)


@dataclass
class EffectTable:
    """Per-unit AIPW cell values over the (own arm, exposure cell) grid.

    ``values[k][d, cell]`` is rho_i * [ m_hat_i(d, cell) + 1{(d, cell)
    is unit i's realized cell} * (Y_i - m_hat_i(d, cell)) / e_i(d, cell) ],
    with the residual dropped (plug-in part kept) on trimmed cells, so
    every entry is finite.  ``trimmed`` mirrors the propensity table's
    overlap flags; ``l_sizes`` holds each unit's neighborhood sizes.
    """

    sample_ids: np.ndarray
    values: list[np.ndarray]
    trimmed: list[np.ndarray]
    l_sizes: np.ndarray
    degree: int
    tau: np.ndarray | None
    residual_dropped: np.ndarray

    _pos: dict = field(default_factory=dict, repr=False)

    def __post_init__(self) -> None:
        self._pos = {int(u): k for k, u in enumerate(self.sample_ids)}

    @property
    def n(self) -> int:
        return int(self.sample_ids.size)

    def unit_values(self, i: int) -> np.ndarray:
        return self.values[self._pos[int(i)]]

    def exact_grid(self, i: int) -> np.ndarray:
        """g values of unit ``i`` on the exact neighbor-count grid
        (2, deg(i) + 1), expanding bucketed cells back over raw counts.

        The optimizers maximize over integer treated-neighbor counts, so
        this is their view of the table.  First-degree tables only.
        """
        if self.degree != 1:
            raise ConfigError("exact exposure grids require interference_degree = 1")
        vals = self.values[self._pos[int(i)]]
        if self.tau is None:
            return vals
        l = int(self.l_sizes[self._pos[int(i)]])
        cols = [exposure_bucket(s, l, self.tau) for s in range(l + 1)] if l else [self.tau.size]
        return vals[:, cols]

    def contract(self, policy, dataset: Dataset) -> WelfareEstimate:
        """welfare_aipw(policy) as the mean of per-unit table lookups."""
        pi = policy_assignments(policy, dataset)
        idx = dataset.sample_indices
        if not np.array_equal(idx, self.sample_ids):
            raise DataIntegrityError("effect table was built for a different sample")
        l = neighborhood_sizes(dataset)[idx]
        cells = _cells(policy_exposures(pi, dataset), l, self.tau)
        contributions = np.empty(idx.size)
        trimmed = 0
        for k, i in enumerate(idx):
            at = _cell_index(pi[int(i)], cells[k])
            contributions[k] = self.values[k][at]
            if self.trimmed[k][at]:
                trimmed += 1
        return _estimate("aipw", contributions, trimmed)


def build_effect_table(
    dataset: Dataset, outcome_model, propensity_table: PropensityTable
) -> EffectTable:
    """Materialize the AIPW cell values g_i(d, h) for every sample unit.

    Each unit's grid matches its propensity table entry: exact neighbor
    counts, or bucket indices when a ``tau`` grid is active (in which
    case the bucket index is also what the outcome model sees as its
    exposure feature, keeping cell values well defined per cell).
    """
    tau = _table_tau(dataset, propensity_table)
    idx = dataset.sample_indices
    if not np.array_equal(idx, propensity_table.sample_ids):
        raise DataIntegrityError("propensity table was built for a different sample")
    model_at = _model_for(outcome_model)
    l_all = neighborhood_sizes(dataset)
    obs_cells = _cells(observed_exposures(dataset)[idx], l_all[idx], tau)
    values: list[np.ndarray] = []
    trimmed: list[np.ndarray] = []
    residual_dropped = np.zeros(idx.size, dtype=bool)
    for k, i in enumerate(idx):
        i = int(i)
        probs = propensity_table.values[k]
        flags = propensity_table.trimmed[k]
        # Grid coordinates double as outcome-model features: raw counts
        # on exact grids, bucket indices on bucketed ones.
        coords = np.indices(probs.shape).reshape(probs.ndim, -1).T.astype(float)
        rows = coords.shape[0]
        m = model_at(i).predict(
            coords[:, 0],
            coords[:, 1:] if probs.ndim > 2 else coords[:, 1],
            np.repeat(dataset.Z[i][None, :], rows, axis=0),
            np.tile(np.atleast_1d(l_all[i]).astype(float), (rows, 1)),
        ).reshape(probs.shape)
        vals = m.copy()
        at = _cell_index(dataset.D[i], obs_cells[k])
        if flags[at]:
            residual_dropped[k] = True
        else:
            vals[at] = m[at] + (float(dataset.Y[i]) - m[at]) / probs[at]
        values.append(dataset.rho[i] * vals)
        trimmed.append(flags)
    return EffectTable(
        sample_ids=idx,
        values=values,
        trimmed=trimmed,
        l_sizes=l_all[idx],
        degree=propensity_table.degree,
        tau=tau,
        residual_dropped=residual_dropped,
    )
