"""Command-line interface.

Subcommands: ``simulate`` (draw a synthetic world to nodes/edges CSVs),
``fit`` (nuisance models and diagnostics), ``optimize`` (full pipeline
to a learned policy), ``evaluate`` (welfare of a supplied policy file,
optionally against baselines), ``benchmark`` (Monte Carlo method
comparison), and ``export-lp`` (write the welfare program in LP format).

Settings come from an optional ``--config`` file of flat ``key = value``
lines merged with command-line flags; flags win.  Reports are JSON on
stdout (or ``--out``); data tables are CSV.  Inputs are validated
before any output file is opened, so a failed run never leaves partial
artifacts.  Exit codes: 0 success, 2 config error, 3 data integrity,
4 numerical failure, 5 backend unavailable.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from .crossfit import crossfit_nuisance, make_folds
from .data import Dataset, ExperimentConfig, load_dataset, write_nodes_csv
from .errors import ConfigError, DataIntegrityError, NetwelfareError
from .graph import write_edge_csv
from .learner import NetworkPolicyLearner
from .nuisance import build_propensity_table, fit_pooled_nuisance, nuisance_diagnostics
from .policyopt import (
    ExplicitAssignmentPolicy,
    LinearThresholdPolicy,
    PolicyClass,
    encode_milp,
    export_lp,
)
from .simbench import BenchmarkConfig, DgpSpec, baseline_degree_centrality, run_benchmark, simulate_dataset
from .welfare import build_effect_table, welfare_aipw, welfare_ipw, welfare_plugin

__all__ = ["main", "build_parser"]

_NETWORK_ALIASES = {
    "geometric": "geometric",
    "barabasi": "barabasi_albert",
    "barabasi_albert": "barabasi_albert",
}


def _require_file(path, what: str):
    if not os.path.isfile(path):
        raise ConfigError(f"{what} file not found: {path}")
    return path


def _config_from_args(args) -> ExperimentConfig:
    overrides = {
        "x_columns": getattr(args, "x_columns", None),
        "interference_degree": getattr(args, "interference_degree", None),
        "tau": getattr(args, "tau", None),
        "trim": getattr(args, "trim", None),
        "capacity": getattr(args, "capacity", None),
        "policy_kind": getattr(args, "policy_kind", None),
        "coef_box": getattr(args, "coef_box", None),
        "seed": getattr(args, "seed", None),
        "estimator": getattr(args, "estimator", None),
        "backend": getattr(args, "backend", None),
        "crossfit_radius": getattr(args, "crossfit_radius", None),
    }
    if getattr(args, "config", None):
        _require_file(args.config, "config")
        return ExperimentConfig.from_file(args.config, overrides)
    return ExperimentConfig.from_dict({k: v for k, v in overrides.items() if v is not None})


def _load(args, config: ExperimentConfig) -> Dataset:
    _require_file(args.nodes, "nodes")
    _require_file(args.edges, "edges")
    return load_dataset(args.nodes, args.edges, config)


def _fit_nuisance(dataset, config: ExperimentConfig):
    """(nuisance bundle, fold count or None) per the config."""
    if config.crossfit_radius is not None:
        folds = make_folds(dataset, radius=config.crossfit_radius)
        return crossfit_nuisance(dataset, folds), int(folds.n_folds)
    return fit_pooled_nuisance(dataset), None


def _policy_from_report(raw: dict, dataset: Dataset):
    kind = raw.get("kind", raw.get("policy_kind"))
    beta = raw.get("beta", raw.get("policy_coefficients"))
    assignment = raw.get("assignment")
    if kind is None:
        kind = "linear_threshold" if beta is not None else "explicit_assignment"
    if kind == "linear_threshold":
        if beta is None:
            raise DataIntegrityError("linear policy file needs a beta array")
        beta = np.asarray(beta, dtype=float)
        if beta.size != dataset.X.shape[1] + 1:
            raise DataIntegrityError(
                f"policy has {beta.size} coefficients, dataset covariates need "
                f"{dataset.X.shape[1] + 1} (intercept first)"
            )
        return LinearThresholdPolicy(beta)
    if kind == "explicit_assignment":
        if assignment is None:
            raise DataIntegrityError("explicit policy file needs an assignment array")
        arr = np.asarray(assignment)
        if arr.shape != (dataset.n_units,):
            raise DataIntegrityError(
                f"policy assigns {arr.shape[0] if arr.ndim else 0} units, dataset has {dataset.n_units}"
            )
        return ExplicitAssignmentPolicy(arr)
    raise DataIntegrityError(f"unknown policy kind {kind!r}")


def _load_policy(path, dataset: Dataset):
    _require_file(path, "policy")
    with open(path) as fh:
        try:
            raw = json.load(fh)
        except json.JSONDecodeError as exc:
            raise DataIntegrityError(f"policy file {path} is not valid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise DataIntegrityError(f"policy file {path} must hold a JSON object")
    return _policy_from_report(raw, dataset)


# ---------------------------------------------------------------------------
# Commands


def cmd_simulate(args) -> dict:
    network = _NETWORK_ALIASES[args.dgp]
    children = np.random.SeedSequence(args.seed).spawn(2)
    s_coef, s_world = (int(c.generate_state(1)[0]) for c in children)
    dgp = DgpSpec.draw(args.n, network, s_coef, noise_scale=args.noise_scale)
    dataset = simulate_dataset(dgp, s_world)
    write_nodes_csv(args.nodes, dataset)
    write_edge_csv(args.edges, dataset.graph)
    return {
        "command": "simulate",
        "network": network,
        "n": dataset.n_units,
        "n_edges": dataset.graph.n_edges,
        "coefficients": {
            "beta1": dgp.beta1,
            "beta2": dgp.beta2,
            "mu": dgp.mu,
            "beta3": dgp.beta3,
        },
        "seed": args.seed,
        "nodes": str(args.nodes),
        "edges": str(args.edges),
    }


def cmd_fit(args) -> dict:
    config = _config_from_args(args)
    dataset = _load(args, config)
    nuisance, n_folds = _fit_nuisance(dataset, config)
    propensity = build_propensity_table(
        dataset, nuisance.prob1_vector, trim=config.trim, tau=dataset.tau
    )
    report = {
        "command": "fit",
        "n_units": dataset.n_units,
        "n_sample": int(dataset.is_sample.sum()),
        "interference_degree": dataset.interference_degree,
        "trim": config.trim,
        "trimmed_cells": int(propensity.trimmed_count()),
        "crossfit_folds": n_folds,
    }
    if n_folds is None:
        report["diagnostics"] = nuisance_diagnostics(
            dataset, propensity, nuisance.treatment, nuisance.outcome
        )
    return report


def cmd_optimize(args) -> dict:
    config = _config_from_args(args)
    dataset = _load(args, config)
    learner = NetworkPolicyLearner(
        policy_kind=config.policy_kind,
        coef_box=config.coef_box,
        capacity=config.capacity,
        trim=config.trim,
        crossfit_radius=config.crossfit_radius,
        backend=config.backend,
        seed=0 if config.seed is None else config.seed,
    ).fit(dataset)
    if getattr(args, "export_lp", None):
        spec = PolicyClass(kind=config.policy_kind, coef_box=config.coef_box)
        program = encode_milp(learner.effect_table_, dataset, spec, config.capacity)
        export_lp(program, args.export_lp)
    report = learner.report()
    report["command"] = "optimize"
    report["estimator"] = config.estimator
    report["welfare_selected"] = report[_WELFARE_KEYS[config.estimator]]
    return report


_WELFARE_KEYS = {"aipw": "welfare", "plugin": "welfare_plugin", "ipw": "welfare_ipw"}


def cmd_evaluate(args) -> dict:
    config = _config_from_args(args)
    dataset = _load(args, config)
    policy = _load_policy(args.policy, dataset)
    baselines = [b.strip() for b in (args.baselines or "").split(",") if b.strip()]
    unknown = set(baselines) - {"degree", "random"}
    if unknown:
        raise ConfigError(f"unknown baselines {sorted(unknown)!r}")
    if baselines and config.capacity is None:
        raise ConfigError("baseline comparisons need a capacity (treated share)")
    if "random" in baselines and config.seed is None:
        raise ConfigError("the random baseline needs a seed")

    nuisance, n_folds = _fit_nuisance(dataset, config)
    propensity = build_propensity_table(
        dataset, nuisance.prob1_vector, trim=config.trim, tau=dataset.tau
    )

    def estimates(pol) -> dict:
        return {
            "plugin": welfare_plugin(pol, dataset, nuisance).as_report(),
            "ipw": welfare_ipw(pol, dataset, propensity).as_report(),
            "aipw": welfare_aipw(pol, dataset, nuisance, propensity).as_report(),
        }

    main_est = estimates(policy)
    report = {
        "command": "evaluate",
        "estimator": config.estimator,
        "welfare": main_est[config.estimator]["value"],
        "estimates": main_est,
        "n_sample": int(dataset.is_sample.sum()),
        "crossfit_folds": n_folds,
    }
    if baselines:
        rows = {}
        if "degree" in baselines:
            pol = baseline_degree_centrality(dataset, config.capacity)
            rows["degree"] = estimates(pol)[config.estimator]
        if "random" in baselines:
            k = int(np.floor(config.capacity * dataset.n_units + 1e-9))
            rng = np.random.default_rng(config.seed)
            vals = []
            for _ in range(args.random_reps):
                d = np.zeros(dataset.n_units, dtype=np.int64)
                if k:
                    d[rng.choice(dataset.n_units, size=k, replace=False)] = 1
                vals.append(estimates(d)[config.estimator]["value"])
            rows["random"] = {"value": float(np.mean(vals)), "reps": int(args.random_reps)}
        report["baselines"] = rows
    return report


def cmd_benchmark(args) -> dict:
    n_values = tuple(int(v) for v in str(args.n_values).split(",") if v.strip())
    methods = tuple(m.strip() for m in args.methods.split(",") if m.strip())
    config = BenchmarkConfig(
        n_values=n_values,
        n_reps=args.reps,
        network=_NETWORK_ALIASES[args.network],
        methods=methods,
        capacity=args.capacity,
        trim=args.trim,
        coef_box=args.coef_box,
        noise_scale=args.noise_scale,
        random_reps=args.random_reps,
        redraw_dgp=not args.fixed_dgp,
        seed=args.seed,
    )
    result = run_benchmark(config)
    result.to_csv(args.out_csv)
    result.to_json(args.out_json)
    report = result.as_report()
    report["command"] = "benchmark"
    report["csv"] = str(args.out_csv)
    report["json"] = str(args.out_json)
    return report


def cmd_export_lp(args) -> dict:
    config = _config_from_args(args)
    dataset = _load(args, config)
    nuisance, _ = _fit_nuisance(dataset, config)
    propensity = build_propensity_table(
        dataset, nuisance.prob1_vector, trim=config.trim, tau=dataset.tau
    )
    table = build_effect_table(dataset, nuisance, propensity)
    spec = PolicyClass(kind=config.policy_kind, coef_box=config.coef_box)
    program = encode_milp(table, dataset, spec, config.capacity)
    export_lp(program, args.out)
    return {
        "command": "export-lp",
        "out": str(args.out),
        "n_variables": program.n_variables,
        "n_constraints": program.n_constraints,
        "kind": program.kind,
    }


# ---------------------------------------------------------------------------
# Parser


def _add_config_flags(p: argparse.ArgumentParser, *, seed_required: bool = False) -> None:
    p.add_argument("--config", help="flat key = value settings file")
    p.add_argument("--x-columns", dest="x_columns", help="comma-separated policy covariate columns")
    p.add_argument("--interference-degree", dest="interference_degree", type=int, choices=(1, 2))
    p.add_argument("--tau", help="comma-separated exposure bucket boundaries")
    p.add_argument("--trim", type=float, help="propensity trimming threshold")
    p.add_argument("--capacity", type=float, help="maximum treated share in (0, 1]")
    p.add_argument(
        "--policy-kind",
        dest="policy_kind",
        choices=("linear_threshold", "explicit_assignment"),
    )
    p.add_argument("--coef-box", dest="coef_box", help="scalar or comma-separated half widths")
    p.add_argument("--estimator", choices=("plugin", "ipw", "aipw"))
    p.add_argument("--backend", choices=("auto", "cells", "branch_bound", "heuristic"))
    p.add_argument("--crossfit-radius", dest="crossfit_radius", type=int)
    p.add_argument("--seed", type=int, required=seed_required)


def _add_data_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--nodes", required=True, help="node table CSV (id,Y,D,<covariates>,role[,rho])")
    p.add_argument("--edges", required=True, help="edge list CSV (src,dst)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="netwelfare",
        description="Policy learning under network interference.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="draw a synthetic world to nodes/edges CSVs")
    p.add_argument("--dgp", choices=sorted(_NETWORK_ALIASES), default="geometric")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--noise-scale", dest="noise_scale", type=float, default=1.0)
    p.add_argument("--nodes", default="nodes.csv")
    p.add_argument("--edges", default="edges.csv")
    p.add_argument("--out", help="write the JSON report here instead of stdout")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("fit", help="fit nuisance models and report diagnostics")
    _add_data_args(p)
    _add_config_flags(p)
    p.add_argument("--out")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("optimize", help="learn a welfare-maximizing policy")
    _add_data_args(p)
    _add_config_flags(p)
    p.add_argument("--export-lp", dest="export_lp", help="also write the MILP in LP format")
    p.add_argument("--out")
    p.set_defaults(func=cmd_optimize)

    p = sub.add_parser("evaluate", help="welfare of a supplied policy file")
    _add_data_args(p)
    p.add_argument("--policy", required=True, help="policy JSON (learned report or kind/beta/assignment)")
    p.add_argument("--baselines", help="comma-separated subset of degree,random")
    p.add_argument("--random-reps", dest="random_reps", type=int, default=20)
    _add_config_flags(p)
    p.add_argument("--out")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("benchmark", help="Monte Carlo comparison against baselines")
    p.add_argument("--n-values", dest="n_values", default="100,200")
    p.add_argument("--reps", type=int, default=200)
    p.add_argument("--network", choices=sorted(_NETWORK_ALIASES), default="geometric")
    p.add_argument("--methods", default="newm,ewm,degree,random")
    p.add_argument("--capacity", type=float)
    p.add_argument("--trim", type=float, default=0.01)
    p.add_argument("--coef-box", dest="coef_box", type=float, default=1.0)
    p.add_argument("--noise-scale", dest="noise_scale", type=float, default=1.0)
    p.add_argument("--random-reps", dest="random_reps", type=int, default=20)
    p.add_argument("--fixed-dgp", dest="fixed_dgp", action="store_true",
                   help="draw coefficients once per sample size instead of per replication")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out-csv", dest="out_csv", default="benchmark.csv")
    p.add_argument("--out-json", dest="out_json", default="benchmark.json")
    p.add_argument("--out")
    p.set_defaults(func=cmd_benchmark)

    p = sub.add_parser("export-lp", help="write the welfare program in LP format")
    _add_data_args(p)
    _add_config_flags(p)
    p.add_argument("--out", required=True, help="LP file path")
    p.set_defaults(func=cmd_export_lp)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        report = args.func(args)
    except NetwelfareError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    text = json.dumps(report, indent=2, sort_keys=True)
    out = getattr(args, "out", None)
    if out and args.command != "export-lp":
        with open(out, "w") as fh:
            fh.write(text + "\n")
    else:
        print(text)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
