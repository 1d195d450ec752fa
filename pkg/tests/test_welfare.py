"""Welfare estimator tests.

The load-bearing oracles here are exact: IPW/AIPW unbiasedness is
checked by enumerating every assignment vector weighted by its
probability (no Monte Carlo noise), and the effect-table contraction
is compared against welfare_aipw on random policies.
"""

import itertools

import numpy as np
import pytest

from netwelfare.data import Dataset
from netwelfare.errors import ConfigError, DataIntegrityError
from netwelfare.graph import Graph
from netwelfare.nuisance import (
    ExposureFeatures,
    OutcomeRegression,
    build_propensity_table,
    fit_pooled_nuisance,
    observed_exposures,
)
from netwelfare.welfare import (
    EffectTable,
    build_effect_table,
    policy_assignments,
    policy_exposure,
    policy_exposures,
    welfare_aipw,
    welfare_ipw,
    welfare_plugin,
)

from conftest import SIX_NODE_EDGES


def make_dataset(n, edges, D, Y=None, Z=None, rho=None, degree=1, tau=None):
    g = Graph.from_edges(n, edges)
    D = np.asarray(D, dtype=np.int64)
    if Y is None:
        Y = np.zeros(n)
    if Z is None:
        Z = np.linspace(-1.0, 1.0, n)[:, None]
    Z = np.asarray(Z, dtype=float)
    if Z.ndim == 1:
        Z = Z[:, None]
    return Dataset(
        graph=g,
        Y=np.asarray(Y, dtype=float),
        D=D,
        Z=Z,
        z_names=[f"Z{j + 1}" for j in range(Z.shape[1])],
        is_sample=np.ones(n, dtype=bool),
        rho=np.ones(n) if rho is None else np.asarray(rho, dtype=float),
        interference_degree=degree,
        tau=tau,
    )


def fit_model(terms, rows, y):
    """Fit an OutcomeRegression on explicit (d, s, z, l) rows."""
    d, s, z, l = (np.asarray(col, dtype=float) for col in rows)
    return OutcomeRegression(features=ExposureFeatures(terms)).fit(d, s, z, l, y)


def constant_model(c, n_z=1):
    rows = ([0, 1, 0], [0, 1, 2], np.zeros((3, n_z)), [1, 1, 2])
    return fit_model(("intercept",), rows, np.full(3, float(c)))


def zero_model(n_z=1):
    return constant_model(0.0, n_z=n_z)


def d_plus_s_model():
    """m(d, s, z, l) = d + s, exactly."""
    rows = ([0, 1, 0, 1], [0, 0, 1, 2], np.zeros((4, 1)), [1, 1, 1, 2])
    model = fit_model(("d", "s"), rows, np.array([0.0, 1.0, 1.0, 3.0]))
    assert np.allclose(model.coef_, [1.0, 1.0], atol=1e-12)
    return model


STAR_EDGES = [(0, 1), (0, 2), (0, 3)]


class TestPolicyExposure:
    def test_all_treat_counts_neighbors(self):
        ds = make_dataset(4, STAR_EDGES, D=[0, 0, 0, 0])
        assert policy_exposure(np.ones(4, dtype=int), ds, 0) == (1, 3)
        assert policy_exposure(np.ones(4, dtype=int), ds, 1) == (1, 1)

    def test_treat_none(self):
        ds = make_dataset(4, STAR_EDGES, D=[0, 0, 0, 0])
        assert policy_exposure(np.zeros(4, dtype=int), ds, 0) == (0, 0)

    def test_six_node_second_degree_single_treated(self):
        # Treating only node 1: node 2 sees one treated neighbor and one
        # treated second-degree path (2 -> 0 -> 1).
        ds = make_dataset(6, SIX_NODE_EDGES, D=[0] * 6, degree=2)
        pi = np.zeros(6, dtype=int)
        pi[1] = 1
        assert policy_exposure(pi, ds, 2) == (0, 1, 1)

    def test_exposures_vector_matches_observed(self):
        rng = np.random.default_rng(3)
        edges = [(i, j) for i in range(8) for j in range(i + 1, 8) if rng.random() < 0.4]
        for degree in (1, 2):
            D = rng.integers(0, 2, size=8)
            ds = make_dataset(8, edges, D=D, degree=degree)
            # A policy equal to the realized assignment induces the
            # realized exposures.
            np.testing.assert_array_equal(
                policy_exposures(policy_assignments(D, ds), ds),
                observed_exposures(ds),
            )

    def test_rejects_partial_or_nonbinary_vectors(self):
        ds = make_dataset(4, STAR_EDGES, D=[0, 0, 0, 0])
        with pytest.raises(DataIntegrityError):
            policy_assignments(np.ones(3, dtype=int), ds)
        with pytest.raises(DataIntegrityError):
            policy_assignments(np.full(4, 0.5), ds)


class TestPlugin:
    def test_constant_model_gives_constant_welfare(self):
        ds = make_dataset(4, STAR_EDGES, D=[0, 1, 0, 1])
        model = constant_model(2.5)
        for pi in ([0, 0, 0, 0], [1, 1, 1, 1], [1, 0, 1, 0]):
            est = welfare_plugin(np.array(pi), ds, model)
            assert est.value == pytest.approx(2.5, abs=1e-12)
            assert est.kind == "plugin"
            assert est.n_effective == 4 and est.trimmed_count == 0

    def test_star_graph_hand_value(self):
        # m(d,s) = d + s; treat the center only: center gets d=1, s=0,
        # each leaf gets d=0, s=1, so welfare = (1 + 1 + 1 + 1)/4 = 1.
        ds = make_dataset(4, STAR_EDGES, D=[0, 0, 0, 0])
        pi = np.array([1, 0, 0, 0])
        est = welfare_plugin(pi, ds, d_plus_s_model())
        assert est.value == pytest.approx(1.0, abs=1e-8)

    def test_matches_true_mean_on_noiseless_linear_data(self):
        rng = np.random.default_rng(7)
        n = 30
        edges = [(i, j) for i in range(n) for j in range(i + 1, n) if rng.random() < 0.1]
        D = rng.integers(0, 2, size=n)
        Z = rng.uniform(-1, 1, size=(n, 1))
        g = Graph.from_edges(n, edges)
        s_obs = np.array([D[g.neighbors(i)].sum() for i in range(n)], dtype=float)

        def truth(d, s, z):
            return 2.0 * d + 3.0 * s + 0.5 * z

        Y = truth(D, s_obs, Z[:, 0])
        ds = make_dataset(n, edges, D=D, Y=Y, Z=Z)
        model = OutcomeRegression(features=ExposureFeatures(("d", "s", "z"))).fit(
            D, s_obs, Z, g.degrees().astype(float), Y
        )
        pi = (Z[:, 0] > 0).astype(int)
        s_pi = policy_exposures(policy_assignments(pi, ds), ds)
        expected = float(np.mean(truth(pi, s_pi, Z[:, 0])))
        assert welfare_plugin(pi, ds, model).value == pytest.approx(expected, abs=1e-8)

    def test_value_is_mean_of_contributions(self):
        ds = make_dataset(4, STAR_EDGES, D=[0, 1, 0, 1])
        est = welfare_plugin(np.array([1, 0, 0, 1]), ds, d_plus_s_model())
        assert est.value == pytest.approx(float(np.mean(est.contributions)))
        assert est.contributions.shape == (4,)


class TestIpw:
    def test_isolated_single_unit(self):
        ds = make_dataset(1, [], D=[1], Y=[2.0])
        table = build_propensity_table(ds, np.array([0.5]))
        est = welfare_ipw(np.array([1]), ds, table)
        assert est.value == pytest.approx(4.0, abs=1e-12)
        assert est.n_effective == 1

    def test_indicator_never_matches(self):
        ds = make_dataset(4, STAR_EDGES, D=[0, 0, 0, 0], Y=[1.0, 2.0, 3.0, 4.0])
        table = build_propensity_table(ds, np.full(4, 0.5))
        est = welfare_ipw(np.ones(4, dtype=int), ds, table)
        assert est.value == 0.0
        assert est.trimmed_count == 0

    def test_two_node_hand_computation(self):
        # Pair graph, p = (0.5, 0.25). Policy treats both. Unit 0
        # matches (D=1, neighbor treated): e = 0.5 * 0.25, term 8/0.125.
        # Unit 1 matches too: e = 0.25 * 0.5, term 4/0.125. Mean of the
        # two contributions: (64 + 32) / 2.
        ds = make_dataset(2, [(0, 1)], D=[1, 1], Y=[8.0, 4.0])
        table = build_propensity_table(ds, np.array([0.5, 0.25]))
        est = welfare_ipw(np.array([1, 1]), ds, table)
        assert est.value == pytest.approx((8.0 / 0.125 + 4.0 / 0.125) / 2.0, abs=1e-9)

    def test_trimmed_cells_dropped_and_counted(self):
        ds = make_dataset(4, STAR_EDGES, D=[1, 1, 1, 1], Y=[1.0, 1.0, 1.0, 1.0])
        # Center cell (d=1, s=3) has probability 0.5^4 = 0.0625 < trim.
        table = build_propensity_table(ds, np.full(4, 0.5), trim=0.1)
        est = welfare_ipw(np.ones(4, dtype=int), ds, table)
        assert table.is_trimmed(0, 1, 3)
        assert est.trimmed_count >= 1
        assert est.n_effective == 4 - est.trimmed_count
        assert est.contributions[0] == 0.0

    def test_exact_unbiasedness_by_enumeration(self):
        # E[IPW] over the assignment distribution equals the true
        # welfare exactly when the propensity is the truth; check by
        # summing all 2^n assignments weighted by their probability.
        n = 5
        edges = [(0, 1), (1, 2), (2, 3), (3, 4), (0, 4), (1, 4)]
        probs = np.array([0.3, 0.5, 0.6, 0.45, 0.7])
        g = Graph.from_edges(n, edges)

        def outcome(D):
            s = np.array([D[g.neighbors(i)].sum() for i in range(n)], dtype=float)
            return 1.5 * D + 0.8 * s - 0.3 * D * s + 0.25

        template = make_dataset(n, edges, D=[0] * n)
        table = build_propensity_table(template, probs)
        for pi in (np.array([1, 0, 1, 0, 1]), np.ones(n, dtype=int), np.zeros(n, dtype=int)):
            # outcome(pi) is the response the policy would realize, since
            # the DGP depends on (d, s) only.
            true_welfare = float(np.mean(outcome(pi)))
            mean_ipw = 0.0
            for bits in itertools.product((0, 1), repeat=n):
                D = np.array(bits, dtype=np.int64)
                weight = float(np.prod(np.where(D == 1, probs, 1.0 - probs)))
                ds = make_dataset(n, edges, D=D, Y=outcome(D))
                mean_ipw += weight * welfare_ipw(pi, ds, table).value
            assert mean_ipw == pytest.approx(true_welfare, abs=1e-10)

    def test_rho_scales_contributions(self):
        ds1 = make_dataset(2, [(0, 1)], D=[1, 1], Y=[8.0, 4.0])
        rho = np.array([2.0, 0.5])
        ds2 = make_dataset(2, [(0, 1)], D=[1, 1], Y=[8.0, 4.0], rho=rho)
        table = build_propensity_table(ds1, np.array([0.5, 0.25]))
        pi = np.array([1, 1])
        base = welfare_ipw(pi, ds1, table)
        weighted = welfare_ipw(pi, ds2, table)
        np.testing.assert_allclose(weighted.contributions, rho * base.contributions, rtol=1e-12)


class TestAipw:
    @staticmethod
    def _instance(seed=11, n=9, trim=0.0, tau=None):
        rng = np.random.default_rng(seed)
        edges = [(i, j) for i in range(n) for j in range(i + 1, n) if rng.random() < 0.3]
        D = rng.integers(0, 2, size=n)
        Z = rng.uniform(-1, 1, size=(n, 1))
        Y = rng.normal(size=n)
        ds = make_dataset(n, edges, D=D, Y=Y, Z=Z, tau=tau)
        probs = rng.uniform(0.3, 0.7, size=n)
        table = build_propensity_table(ds, probs, trim=trim, tau=tau)
        nuis = fit_pooled_nuisance(ds)
        return rng, ds, table, nuis

    def test_reduces_to_ipw_when_outcome_model_is_zero(self):
        rng, ds, table, _ = self._instance()
        model = zero_model()
        for _ in range(5):
            pi = rng.integers(0, 2, size=ds.n_units)
            a = welfare_aipw(pi, ds, model, table)
            b = welfare_ipw(pi, ds, table)
            np.testing.assert_array_equal(a.contributions, b.contributions)
            assert a.value == b.value

    def test_reduces_to_plugin_when_residuals_vanish(self):
        # Outcomes generated exactly by m(d,s) = d + s make every
        # residual zero, so AIPW collapses to the plug-in value.
        n = 6
        edges = [(0, 1), (1, 2), (2, 3), (3, 4), (4, 5), (5, 0)]
        rng = np.random.default_rng(5)
        D = rng.integers(0, 2, size=n)
        g = Graph.from_edges(n, edges)
        s_obs = np.array([D[g.neighbors(i)].sum() for i in range(n)], dtype=float)
        Y = D + s_obs
        ds = make_dataset(n, edges, D=D, Y=Y)
        model = d_plus_s_model()
        table = build_propensity_table(ds, np.full(n, 0.5))
        for _ in range(5):
            pi = rng.integers(0, 2, size=n)
            a = welfare_aipw(pi, ds, model, table)
            p = welfare_plugin(pi, ds, model)
            assert a.value == pytest.approx(p.value, abs=1e-10)

    def test_contraction_identity_random_policies(self):
        rng, ds, table, nuis = self._instance(seed=23)
        effect = build_effect_table(ds, nuis, table)
        for _ in range(20):
            pi = rng.integers(0, 2, size=ds.n_units)
            via_table = effect.contract(pi, ds)
            direct = welfare_aipw(pi, ds, nuis, table)
            np.testing.assert_array_equal(via_table.contributions, direct.contributions)
            assert via_table.value == direct.value
            assert via_table.kind == direct.kind == "aipw"

    def test_table_cells_match_definition(self):
        rng, ds, table, nuis = self._instance(seed=31)
        effect = build_effect_table(ds, nuis, table)
        i = int(ds.sample_indices[0])
        model = nuis.outcome_model(i)
        l = float(ds.graph.degree(i))
        d_obs = int(ds.D[i])
        s_obs = int(observed_exposures(ds)[i])
        grid = effect.unit_values(i)
        assert grid.shape == (2, int(l) + 1)
        assert np.isfinite(grid).all()
        for d in (0, 1):
            for s in range(int(l) + 1):
                m = float(model.predict([float(d)], [float(s)], ds.Z[i][None, :], [l])[0])
                expected = m
                if (d, s) == (d_obs, s_obs):
                    expected = m + (float(ds.Y[i]) - m) / table.value(i, d, s)
                assert grid[d, s] == pytest.approx(expected, abs=1e-10)

    def test_dead_indicator_rows_are_pure_plugin(self):
        rng, ds, table, nuis = self._instance(seed=43)
        effect = build_effect_table(ds, nuis, table)
        for i in map(int, ds.sample_indices):
            d_live = int(ds.D[i])
            model = nuis.outcome_model(i)
            l = float(ds.graph.degree(i))
            grid = effect.unit_values(i)
            d_dead = 1 - d_live
            for s in range(int(l) + 1):
                m = float(model.predict([float(d_dead)], [float(s)], ds.Z[i][None, :], [l])[0])
                assert grid[d_dead, s] == pytest.approx(m, abs=1e-10)

    def test_trimmed_cell_keeps_plugin_part_only(self):
        ds = make_dataset(4, STAR_EDGES, D=[1, 1, 1, 1], Y=[5.0, 1.0, 1.0, 1.0])
        table = build_propensity_table(ds, np.full(4, 0.5), trim=0.1)
        model = constant_model(2.0)
        assert table.is_trimmed(0, 1, 3)
        effect = build_effect_table(ds, model, table)
        # The realized center cell is trimmed: no residual, only m = 2.
        assert effect.unit_values(0)[1, 3] == pytest.approx(2.0, abs=1e-12)
        assert effect.residual_dropped[effect._pos[0]]
        est = welfare_aipw(np.ones(4, dtype=int), ds, model, table)
        assert est.trimmed_count >= 1
        assert est.n_effective == 4 - est.trimmed_count

    def test_exact_double_robustness_by_enumeration(self):
        # Correct propensity, arbitrary fixed outcome model: the
        # enumeration mean equals true welfare exactly. Correct outcome
        # model, distorted propensity: likewise.
        n = 4
        edges = [(0, 1), (1, 2), (2, 3), (0, 3)]
        probs = np.array([0.4, 0.55, 0.6, 0.35])
        g = Graph.from_edges(n, edges)

        def outcome(D):
            s = np.array([D[g.neighbors(i)].sum() for i in range(n)], dtype=float)
            return D + s

        template = make_dataset(n, edges, D=[0] * n)
        true_table = build_propensity_table(template, probs)
        distorted = build_propensity_table(template, 0.5 * probs + 0.25)
        wrong_model = constant_model(0.7)
        right_model = d_plus_s_model()
        pi = np.array([1, 0, 0, 1])
        true_welfare = float(np.mean(outcome(pi)))

        for model, table in ((wrong_model, true_table), (right_model, distorted)):
            mean_aipw = 0.0
            for bits in itertools.product((0, 1), repeat=n):
                D = np.array(bits, dtype=np.int64)
                weight = float(np.prod(np.where(D == 1, probs, 1.0 - probs)))
                ds = make_dataset(n, edges, D=D, Y=outcome(D))
                mean_aipw += weight * welfare_aipw(pi, ds, model, table).value
            assert mean_aipw == pytest.approx(true_welfare, abs=1e-10)

    def test_rho_ones_matches_default_and_scales_per_unit(self):
        rng, ds, table, nuis = self._instance(seed=57)
        pi = rng.integers(0, 2, size=ds.n_units)
        base = welfare_aipw(pi, ds, nuis, table)

        explicit = make_dataset(
            ds.n_units,
            ds.graph.edge_list().tolist(),
            D=ds.D,
            Y=ds.Y,
            Z=ds.Z,
            rho=np.ones(ds.n_units),
        )
        same = welfare_aipw(pi, explicit, nuis, table)
        np.testing.assert_array_equal(base.contributions, same.contributions)

        rho = rng.uniform(0.5, 2.0, size=ds.n_units)
        weighted_ds = make_dataset(
            ds.n_units, ds.graph.edge_list().tolist(), D=ds.D, Y=ds.Y, Z=ds.Z, rho=rho
        )
        weighted = welfare_aipw(pi, weighted_ds, nuis, table)
        np.testing.assert_allclose(weighted.contributions, rho * base.contributions, rtol=1e-12)


class TestBucketing:
    def test_width_one_buckets_reproduce_exact_estimators(self):
        # On a 2-regular graph the grid (0, 1/2, 1) maps the count s to
        # bucket s itself, so bucketed and exact estimates coincide.
        n = 10
        edges = [(i, (i + 1) % n) for i in range(n)]
        rng = np.random.default_rng(19)
        D = rng.integers(0, 2, size=n)
        Z = rng.uniform(-1, 1, size=(n, 1))
        g = Graph.from_edges(n, edges)
        s_obs = np.array([D[g.neighbors(i)].sum() for i in range(n)], dtype=float)
        Y = 1.0 * D + 2.0 * s_obs + rng.normal(size=n)
        tau = [0.0, 0.5, 1.0]

        exact_ds = make_dataset(n, edges, D=D, Y=Y, Z=Z)
        bucket_ds = make_dataset(n, edges, D=D, Y=Y, Z=Z, tau=tau)
        probs = rng.uniform(0.35, 0.65, size=n)
        exact_table = build_propensity_table(exact_ds, probs)
        bucket_table = build_propensity_table(bucket_ds, probs, tau=tau)
        exact_nuis = fit_pooled_nuisance(exact_ds)
        bucket_nuis = fit_pooled_nuisance(bucket_ds)

        for _ in range(5):
            pi = rng.integers(0, 2, size=n)
            assert welfare_ipw(pi, bucket_ds, bucket_table).value == pytest.approx(
                welfare_ipw(pi, exact_ds, exact_table).value, abs=1e-12
            )
            assert welfare_plugin(pi, bucket_ds, bucket_nuis).value == pytest.approx(
                welfare_plugin(pi, exact_ds, exact_nuis).value, abs=1e-12
            )
            assert welfare_aipw(pi, bucket_ds, bucket_nuis, bucket_table).value == pytest.approx(
                welfare_aipw(pi, exact_ds, exact_nuis, exact_table).value, abs=1e-12
            )

    def test_exact_grid_expands_buckets(self):
        n = 10
        edges = [(i, (i + 1) % n) for i in range(n)]
        rng = np.random.default_rng(29)
        D = rng.integers(0, 2, size=n)
        tau = [0.0, 0.5, 1.0]
        ds = make_dataset(n, edges, D=D, Y=rng.normal(size=n), tau=tau)
        table = build_propensity_table(ds, np.full(n, 0.5), tau=tau)
        effect = build_effect_table(ds, fit_pooled_nuisance(ds), table)
        grid = effect.exact_grid(0)
        assert grid.shape == (2, 3)
        np.testing.assert_array_equal(grid, effect.unit_values(0)[:, [0, 1, 2]])

    def test_isolated_unit_uses_reserved_bucket(self):
        tau = [0.5, 1.0]
        ds = make_dataset(3, [(0, 1)], D=[1, 0, 1], Y=[1.0, 2.0, 6.0], tau=tau)
        table = build_propensity_table(ds, np.array([0.5, 0.5, 0.25]), tau=tau)
        est = welfare_ipw(np.array([0, 0, 1]), ds, table)
        # Unit 2 is isolated: matched cell is the reserved bucket with
        # e = 0.25, so its contribution is 6 / 0.25 = 24.
        assert est.contributions[2] == pytest.approx(24.0, abs=1e-12)
        effect = build_effect_table(ds, zero_model(), table)
        assert effect.exact_grid(2).shape == (2, 1)
        np.testing.assert_array_equal(
            effect.exact_grid(2), effect.unit_values(2)[:, [len(tau)]]
        )

    def test_tau_mismatch_is_an_error(self):
        ds = make_dataset(2, [(0, 1)], D=[1, 0], Y=[1.0, 2.0])
        table = build_propensity_table(ds, np.full(2, 0.5), tau=[0.5, 1.0])
        with pytest.raises(DataIntegrityError):
            welfare_ipw(np.array([1, 1]), ds, table)


class TestSecondDegree:
    def test_aipw_enumeration_matches_truth_two_degree(self):
        # Triangle-free graph (6-cycle), so each unit's first- and
        # second-degree neighbor sets are disjoint and the factorized
        # propensity equals the true joint law; enumeration over all
        # 2^6 assignments then confirms exact unbiasedness.
        n = 6
        cycle = [(i, (i + 1) % n) for i in range(n)]
        probs = np.array([0.5, 0.4, 0.6, 0.5, 0.45, 0.55])
        g = Graph.from_edges(n, cycle)

        def outcome(D):
            from netwelfare.graph import second_degree

            s1 = np.array([D[g.neighbors(i)].sum() for i in range(n)], dtype=float)
            s2 = np.empty(n)
            for i in range(n):
                nodes, mult = second_degree(g, i)
                s2[i] = float((D[nodes] * mult).sum()) if nodes.size else 0.0
            return 0.5 * D + 1.0 * s1 - 0.25 * s2

        template = make_dataset(n, cycle, D=[0] * n, degree=2)
        table = build_propensity_table(template, probs)
        model = constant_model(0.3)
        pi = np.array([1, 1, 0, 0, 1, 0])
        true_welfare = float(np.mean(outcome(pi)))
        mean_aipw = 0.0
        for bits in itertools.product((0, 1), repeat=n):
            D = np.array(bits, dtype=np.int64)
            weight = float(np.prod(np.where(D == 1, probs, 1.0 - probs)))
            ds = make_dataset(n, cycle, D=D, Y=outcome(D), degree=2)
            mean_aipw += weight * welfare_aipw(pi, ds, model, table).value
        assert mean_aipw == pytest.approx(true_welfare, abs=1e-10)

    def test_exact_grid_rejects_two_degree_tables(self):
        ds = make_dataset(6, SIX_NODE_EDGES, D=[0, 1, 0, 1, 0, 1], degree=2)
        table = build_propensity_table(ds, np.full(6, 0.5))
        effect = build_effect_table(ds, constant_model(1.0), table)
        with pytest.raises(ConfigError):
            effect.exact_grid(0)


class TestEstimateContract:
    def test_report_shape(self):
        import json

        ds = make_dataset(2, [(0, 1)], D=[1, 0], Y=[1.0, 2.0])
        table = build_propensity_table(ds, np.full(2, 0.5))
        est = welfare_ipw(np.array([1, 0]), ds, table)
        report = est.as_report(include_contributions=True)
        assert set(report) == {
            "estimator",
            "value",
            "n_effective",
            "trimmed_count",
            "contributions",
        }
        json.dumps(report)

    def test_effect_table_rejects_foreign_sample(self):
        ds = make_dataset(3, [(0, 1), (1, 2)], D=[1, 0, 1], Y=[1.0, 2.0, 3.0])
        table = build_propensity_table(ds, np.full(3, 0.5))
        effect = build_effect_table(ds, zero_model(), table)
        other = ds.restrict_sample([0, 1])
        with pytest.raises(DataIntegrityError):
            effect.contract(np.array([1, 1, 1]), other)
