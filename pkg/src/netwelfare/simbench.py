"""Synthetic benchmark: network generators, a spillover outcome model,
baseline allocation rules, and a Monte Carlo driver.

The simulated outcome of a unit mixes a direct treatment effect with a
neighborhood spillover scaled by the treated share of its neighbors:

    Y_i = (X_{i,1}(b1 + b2 D_i) + mu) * S_i / max(|N_i|, 1)
          + X_{i,1} b3 D_i + eps_i,
    eps_i = eta_i / sqrt(2) + sum_{k in N_i} eta_k / sqrt(2 |N_i|),

with eta i.i.d. standard normal, so Var(eps_i) = 1 whenever the unit
has neighbors.  Coefficients are sign draws: b1, b2, mu uniform on
{-1, 1}, b3 uniform on {-1.5, 1.5}.  Covariates are i.i.d. Uniform(-1, 1)
in four columns; networks are either geometric (edges between units
close in columns 2 and 4) or preferential attachment.

Because the conditional mean depends on the assignment only through
(D_i, S_i), the true welfare of any policy is a per-unit table lookup;
``true_effect_table`` materializes that table, which makes evaluation
noise free and lets the exact cell solver double as the in-class oracle.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .data import Dataset
from .errors import ConfigError, DataIntegrityError
from .graph import Graph
from .nuisance import build_propensity_table, fit_pooled_nuisance
from .policyopt import ExplicitAssignmentPolicy, PolicyClass, enumerate_cells, solve_exact_cells
from .welfare import EffectTable, build_effect_table

__all__ = [
    "DgpSpec",
    "gen_geometric",
    "gen_barabasi_albert",
    "simulate_outcomes",
    "simulate_dataset",
    "true_effect_table",
    "true_welfare",
    "baseline_degree_centrality",
    "baseline_random",
    "baseline_ewm",
    "BenchmarkConfig",
    "BenchResult",
    "run_benchmark",
    "DEFAULT_TRIM",
]

DEFAULT_TRIM = 0.01

NETWORK_KINDS = ("geometric", "barabasi_albert", "fixed")


@dataclass(frozen=True)
class DgpSpec:
    """Shape and coefficients of one simulated world.

    ``noise_scale`` multiplies the eta draws (0 gives a noiseless
    world); ``seed`` is the default noise stream for
    :func:`simulate_outcomes` when no generator is passed explicitly.
    """

    n: int
    network: str = "geometric"
    beta1: float = 1.0
    beta2: float = 1.0
    mu: float = 1.0
    beta3: float = 1.5
    noise_scale: float = 1.0
    seed: int = 0

    def __post_init__(self) -> None:
        if self.network not in NETWORK_KINDS:
            raise ConfigError(f"network must be one of {NETWORK_KINDS}")
        if self.n < 2:
            raise ConfigError("simulated worlds need n >= 2")
        if self.noise_scale < 0:
            raise ConfigError("noise_scale must be nonnegative")

    @classmethod
    def draw(cls, n: int, network: str = "geometric", seed: int = 0, noise_scale: float = 1.0) -> "DgpSpec":
        """Draw the coefficient signs independently with equal probability."""
        rng = np.random.default_rng(seed)
        b1, b2, mu = rng.choice([-1.0, 1.0], size=3)
        b3 = float(rng.choice([-1.5, 1.5]))
        return cls(
            n=n,
            network=network,
            beta1=float(b1),
            beta2=float(b2),
            mu=float(mu),
            beta3=b3,
            noise_scale=noise_scale,
            seed=int(seed),
        )


def _draw_covariates(rng, n: int) -> np.ndarray:
    return rng.uniform(-1.0, 1.0, size=(n, 4))


def gen_geometric(n: int, seed) -> tuple[Graph, np.ndarray]:
    """Random geometric network on four uniform covariates.

    Units i and j are linked when |X_{i,2} - X_{j,2}|/2 +
    |X_{i,4} - X_{j,4}|/2 <= r_n with r_n = sqrt(4 / (2.75 n)), which
    calibrates the expected degree to stay bounded as n grows.
    Returns the graph together with the covariate matrix.
    """
    if n < 2:
        raise ConfigError("geometric networks need n >= 2")
    rng = np.random.default_rng(seed)
    X = _draw_covariates(rng, n)
    r = math.sqrt(4.0 / (2.75 * n))
    dist = (
        np.abs(X[:, 1][:, None] - X[:, 1][None, :]) / 2.0
        + np.abs(X[:, 3][:, None] - X[:, 3][None, :]) / 2.0
    )
    iu, ju = np.triu_indices(n, k=1)
    keep = dist[iu, ju] <= r
    edges = np.column_stack([iu[keep], ju[keep]])
    return Graph.from_edges(n, edges), X


def gen_barabasi_albert(n: int, seed) -> tuple[Graph, np.ndarray]:
    """Preferential-attachment network: an Erdos-Renyi core on the
    first ceil(n/5) units with edge probability 10/n, then each
    remaining unit attaches one edge to an existing unit with
    probability proportional to its current degree.

    A zero-edge core would make the attachment weights undefined; in
    that case the first arrival picks its target uniformly at random.
    Covariates are drawn alongside but do not shape this network.
    """
    if n < 10:
        raise ConfigError("preferential attachment needs n >= 10")
    rng = np.random.default_rng(seed)
    X = _draw_covariates(rng, n)
    core = math.ceil(n / 5)
    iu, ju = np.triu_indices(core, k=1)
    keep = rng.random(iu.size) < 10.0 / n
    edges = [(int(a), int(b)) for a, b in zip(iu[keep], ju[keep])]
    deg = np.zeros(n, dtype=np.int64)
    for a, b in edges:
        deg[a] += 1
        deg[b] += 1
    for v in range(core, n):
        total = int(deg[:v].sum())
        if total == 0:
            target = int(rng.integers(v))
        else:
            target = int(rng.choice(v, p=deg[:v] / total))
        edges.append((v, target))
        deg[v] += 1
        deg[target] += 1
    return Graph.from_edges(n, edges), X


def _neighbor_sums(graph: Graph, vec: np.ndarray) -> np.ndarray:
    out = np.zeros(graph.n_nodes)
    nonempty = graph.indptr[:-1] < graph.indptr[1:]
    if graph.indices.size:
        gathered = np.asarray(vec, dtype=float)[graph.indices]
        out[nonempty] = np.add.reduceat(gathered, graph.indptr[:-1][nonempty])
    return out


def simulate_outcomes(graph: Graph, covariates: np.ndarray, D, dgp: DgpSpec, rng=None) -> np.ndarray:
    """Outcomes under the spillover model; isolated units use |N_i| := 1
    in the normalization and have a zero spillover term."""
    n = graph.n_nodes
    D = np.asarray(D)
    if D.shape != (n,):
        raise DataIntegrityError(f"assignment has shape {D.shape}, expected ({n},)")
    if not np.isin(D, (0, 1)).all():
        raise DataIntegrityError("assignment must be binary 0/1")
    x1 = np.asarray(covariates, dtype=float)[:, 0]
    denom = np.maximum(graph.degrees().astype(float), 1.0)
    s = _neighbor_sums(graph, D.astype(float))
    rng = np.random.default_rng(dgp.seed if rng is None else rng)
    eta = rng.standard_normal(n) * dgp.noise_scale
    eps = eta / math.sqrt(2.0) + _neighbor_sums(graph, eta) / np.sqrt(2.0 * denom)
    direct = x1 * dgp.beta3 * D
    spill = (x1 * (dgp.beta1 + dgp.beta2 * D) + dgp.mu) * s / denom
    return spill + direct + eps


def simulate_dataset(dgp: DgpSpec, seed, graph: Graph | None = None) -> Dataset:
    """Draw one experimental world: network and covariates from the
    spec's generator, i.i.d. Bernoulli(1/2) treatments, simulated
    outcomes.  Policy covariates are the first two columns, matching
    the benchmark's linear rules 1{X1 b1 + X2 b2 + b0 >= 0}."""
    rng = np.random.default_rng(seed)
    if dgp.network == "geometric":
        g, X = gen_geometric(dgp.n, rng)
    elif dgp.network == "barabasi_albert":
        g, X = gen_barabasi_albert(dgp.n, rng)
    else:
        if graph is None:
            raise ConfigError("network kind 'fixed' needs an explicit graph")
        if graph.n_nodes != dgp.n:
            raise ConfigError(f"fixed graph has {graph.n_nodes} nodes, dgp expects {dgp.n}")
        g, X = graph, _draw_covariates(rng, dgp.n)
    D = rng.integers(0, 2, size=dgp.n).astype(np.int64)
    Y = simulate_outcomes(g, X, D, dgp, rng)
    return Dataset(
        graph=g,
        Y=Y,
        D=D,
        Z=X,
        z_names=["X1", "X2", "X3", "X4"],
        is_sample=np.ones(dgp.n, dtype=bool),
        rho=np.ones(dgp.n),
        x_names=["X1", "X2"],
        interference_degree=1,
    )


def true_effect_table(graph: Graph, covariates: np.ndarray, dgp: DgpSpec) -> EffectTable:
    """The DGP's conditional mean as a per-unit (arm, exposure) table.

    Contracting it against a policy gives that policy's exact expected
    welfare on this world, so it serves both as the noise-free
    evaluation metric and as the oracle solver's objective.
    """
    n = graph.n_nodes
    x1 = np.asarray(covariates, dtype=float)[:, 0]
    l_sizes = graph.degrees().astype(np.int64)
    values = []
    for i in range(n):
        li = int(l_sizes[i])
        share = np.arange(li + 1, dtype=float) / max(li, 1)
        g0 = (x1[i] * dgp.beta1 + dgp.mu) * share
        g1 = (x1[i] * (dgp.beta1 + dgp.beta2) + dgp.mu) * share + x1[i] * dgp.beta3
        values.append(np.vstack([g0, g1]))
    return EffectTable(
        sample_ids=np.arange(n, dtype=np.int64),
        values=values,
        trimmed=[np.zeros_like(v, dtype=bool) for v in values],
        l_sizes=l_sizes,
        degree=1,
        tau=None,
        residual_dropped=np.zeros(n, dtype=bool),
    )


def true_welfare(policy, dataset: Dataset, dgp: DgpSpec) -> float:
    """Exact expected welfare of a policy (or 0/1 vector) on a world."""
    table = true_effect_table(dataset.graph, dataset.Z, dgp)
    return float(table.contract(policy, dataset).value)


# ---------------------------------------------------------------------------
# Baselines


def _treat_count(K: float, n: int) -> int:
    if not 0.0 <= K <= 1.0:
        raise ConfigError("treated share K must lie in [0, 1]")
    return int(np.floor(K * n + 1e-9))


def baseline_degree_centrality(dataset: Dataset, K: float):
    """Treat the floor(Kn) highest-degree units, ties broken by id."""
    if K <= 0.0:
        raise ConfigError("degree targeting needs K in (0, 1]")
    n = dataset.n_units
    k = _treat_count(K, n)
    order = np.argsort(-dataset.graph.degrees(), kind="stable")
    assignment = np.zeros(n, dtype=np.int64)
    assignment[order[:k]] = 1
    return ExplicitAssignmentPolicy(assignment)


def baseline_random(dataset: Dataset, K: float, seed, reps: int, evaluate) -> float:
    """Mean welfare of random seeding: ``reps`` uniform draws of
    floor(Kn) treated units without replacement, each scored by the
    ``evaluate`` callable (assignment vector -> welfare)."""
    if reps < 1:
        raise ConfigError("random seeding needs reps >= 1")
    n = dataset.n_units
    k = _treat_count(K, n)
    rng = np.random.default_rng(seed)
    total = 0.0
    for _ in range(reps):
        d = np.zeros(n, dtype=np.int64)
        if k:
            d[rng.choice(n, size=k, replace=False)] = 1
        total += float(evaluate(d))
    return total / reps


def _ewm_effect_table(dataset: Dataset, trim: float) -> EffectTable:
    """AIPW table of a learner that ignores the network: the outcome
    model drops exposure features and the propensity is the own-arm
    probability alone, so every unit's grid is flat across exposures."""
    nuis = fit_pooled_nuisance(dataset, features="ewm")
    idx = dataset.sample_indices
    l_all = dataset.graph.degrees().astype(np.int64)
    zeros = np.zeros(1)
    values = []
    trimmed = []
    residual_dropped = np.zeros(idx.size, dtype=bool)
    for k, i in enumerate(idx):
        p1 = float(nuis.treatment_probs[i])
        own = np.array([1.0 - p1, p1])
        z = dataset.Z[i][None, :]
        m = np.array(
            [float(nuis.outcome.predict(np.array([float(d)]), zeros, z, zeros)[0]) for d in (0, 1)]
        )
        g = m.copy()
        flags = (own < trim) | (own <= 0.0)
        d_i = int(dataset.D[i])
        if flags[d_i]:
            residual_dropped[k] = True
        else:
            g[d_i] += (float(dataset.Y[i]) - m[d_i]) / own[d_i]
        g *= float(dataset.rho[i])
        width = int(l_all[i]) + 1
        values.append(np.repeat(g[:, None], width, axis=1))
        trimmed.append(np.repeat(flags[:, None], width, axis=1))
    return EffectTable(
        sample_ids=idx,
        values=values,
        trimmed=trimmed,
        l_sizes=l_all[idx],
        degree=1,
        tau=None,
        residual_dropped=residual_dropped,
    )


def baseline_ewm(dataset: Dataset, policy_class: PolicyClass, capacity=None, trim: float = DEFAULT_TRIM, cells=None):
    """Policy of the no-interference learner: maximize the flat AIPW
    table over the same class with the same exact backend.  Because the
    table and the covariates carry no network information, the fitted
    policy is invariant to rewiring the graph."""
    table = _ewm_effect_table(dataset, trim)
    result = solve_exact_cells(table, dataset, policy_class, capacity, cells=cells)
    return result.policy


# ---------------------------------------------------------------------------
# Monte Carlo driver


@dataclass(frozen=True)
class BenchmarkConfig:
    """Reference run: 200 replications at n in {100, 200}; desk-scale
    studies use fewer replications with widened tolerances.

    When ``capacity`` is unset, the degree and random baselines match
    the treated count of the learned policy on each evaluation draw so
    all methods spend the same budget.  ``redraw_dgp=False`` draws one
    coefficient vector per sample size (at replication 0) instead of
    one per replication.
    """

    n_values: tuple = (100, 200)
    n_reps: int = 200
    network: str = "geometric"
    methods: tuple = ("newm", "ewm", "degree", "random")
    capacity: float | None = None
    trim: float = DEFAULT_TRIM
    coef_box: float = 1.0
    noise_scale: float = 1.0
    random_reps: int = 20
    redraw_dgp: bool = True
    seed: int = 0

    def __post_init__(self) -> None:
        known = {"newm", "ewm", "degree", "random"}
        unknown = set(self.methods) - known
        if unknown:
            raise ConfigError(f"unknown benchmark methods {sorted(unknown)!r}")
        if not self.methods:
            raise ConfigError("benchmark needs at least one method")
        if self.n_reps < 1:
            raise ConfigError("n_reps must be >= 1")
        if not self.n_values:
            raise ConfigError("n_values must be nonempty")
        if self.network not in ("geometric", "barabasi_albert"):
            raise ConfigError("benchmark networks are geometric or barabasi_albert")


@dataclass(frozen=True)
class BenchResult:
    """Per-replication welfare draws plus medians keyed by sample size.

    ``draws`` rows are dicts with keys rep, n, method, welfare; the
    oracle (exact in-class argmax of the true welfare on the evaluation
    draw) is always included as its own method row.  ``regret`` holds
    the median of oracle minus method, per size and method.
    """

    draws: list = field(default_factory=list)
    medians: dict = field(default_factory=dict)
    regret: dict = field(default_factory=dict)

    def as_report(self) -> dict:
        return {"medians": self.medians, "regret": self.regret}

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["rep", "n", "method", "welfare"])
            for row in self.draws:
                writer.writerow([row["rep"], row["n"], row["method"], repr(row["welfare"])])

    def to_json(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.as_report(), fh, indent=2, sort_keys=True)
            fh.write("\n")


def _fit_newm_policy(train: Dataset, policy_class: PolicyClass, capacity, trim: float, cells):
    # The share basis spans this DGP's conditional mean (spillovers
    # scale with the treated-neighbor share), so the outcome model is
    # correctly specified here.
    nuisance = fit_pooled_nuisance(train, features="share")
    propensity = build_propensity_table(train, nuisance.prob1_vector, trim=trim, tau=train.tau)
    table = build_effect_table(train, nuisance, propensity)
    return solve_exact_cells(table, train, policy_class, capacity, cells=cells).policy


def _rep_seeds(master_seed: int, n: int, rep: int) -> tuple:
    # Coefficients draw from a per-replication stream shared by every
    # sample size (worlds stay size-specific), so size-to-size medians
    # compare the same coefficient population draw by draw.
    coef = np.random.SeedSequence(master_seed, spawn_key=(int(rep),))
    world = np.random.SeedSequence(master_seed, spawn_key=(int(n), int(rep)))
    s_dgp = int(coef.generate_state(1)[0])
    return (s_dgp, *(int(child.generate_state(1)[0]) for child in world.spawn(3)))


def run_benchmark(config: BenchmarkConfig) -> BenchResult:
    """Fit every method on a training world, score on a fresh world.

    Per replication: draw coefficients and a training world, fit the
    network-aware learner and the baselines, then draw an independent
    evaluation world from the same DGP and score each policy by its
    exact expected welfare there.  All randomness derives from
    ``config.seed`` through per-(size, rep) seed sequences, so equal
    configs give bitwise-equal results.
    """
    policy_class = PolicyClass(kind="linear_threshold", coef_box=config.coef_box)
    draws: list = []
    welfare_by = {}
    for n in config.n_values:
        size_dgp = None
        for rep in range(config.n_reps):
            s_dgp, s_train, s_eval, s_rand = _rep_seeds(config.seed, n, rep)
            if config.redraw_dgp or size_dgp is None:
                dgp = DgpSpec.draw(int(n), config.network, s_dgp, noise_scale=config.noise_scale)
                size_dgp = dgp
            else:
                dgp = size_dgp
            train = simulate_dataset(dgp, s_train)
            box = policy_class.bounds(train.X.shape[1] + 1)
            train_cells = enumerate_cells(train.X, box)

            eval_ds = simulate_dataset(dgp, s_eval)
            table = true_effect_table(eval_ds.graph, eval_ds.Z, dgp)
            eval_cells = enumerate_cells(eval_ds.X, box)

            def evaluate(policy) -> float:
                return float(table.contract(policy, eval_ds).value)

            oracle = solve_exact_cells(table, eval_ds, policy_class, config.capacity, cells=eval_cells)
            scores = {"oracle": float(oracle.objective)}
            budget_matched = config.capacity is None and (
                "degree" in config.methods or "random" in config.methods
            )
            newm_policy = None
            if "newm" in config.methods or budget_matched:
                newm_policy = _fit_newm_policy(
                    train, policy_class, config.capacity, config.trim, train_cells
                )
            if "newm" in config.methods:
                scores["newm"] = evaluate(newm_policy)
            if "ewm" in config.methods:
                ewm_policy = baseline_ewm(
                    train, policy_class, config.capacity, config.trim, cells=train_cells
                )
                scores["ewm"] = evaluate(ewm_policy)
            if "degree" in config.methods or "random" in config.methods:
                if config.capacity is not None:
                    k = _treat_count(config.capacity, eval_ds.n_units)
                else:
                    k = int(newm_policy.assign(eval_ds.X).sum())
                share = k / eval_ds.n_units
            if "degree" in config.methods:
                if k == 0:
                    scores["degree"] = evaluate(np.zeros(eval_ds.n_units, dtype=np.int64))
                else:
                    scores["degree"] = evaluate(baseline_degree_centrality(eval_ds, share))
            if "random" in config.methods:
                scores["random"] = baseline_random(
                    eval_ds, share, s_rand, config.random_reps, evaluate
                )
            for method in (*config.methods, "oracle"):
                draws.append({"rep": rep, "n": int(n), "method": method, "welfare": scores[method]})
                welfare_by.setdefault((int(n), method), []).append(scores[method])

    medians = {}
    regret = {}
    for (n, method), vals in sorted(welfare_by.items()):
        medians.setdefault(str(n), {})[method] = float(np.median(vals))
        if method != "oracle":
            gaps = [o - v for o, v in zip(welfare_by[(n, "oracle")], vals)]
            regret.setdefault(str(n), {})[method] = float(np.median(gaps))
    return BenchResult(draws=draws, medians=medians, regret=regret)
