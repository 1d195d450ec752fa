"""Policy classes and exact maximization of the estimated welfare.

The estimated welfare of an assignment rule is a sum of per-unit table
lookups g_i(p_i, sum of treated neighbors); maximizing it over linear
threshold rules is encoded as an exact mixed-integer linear program
(``encode_milp``, exportable to CPLEX LP format) and solved in-process
by two exact backends plus a heuristic:

- ``solve_exact_cells`` enumerates every assignment pattern a linear
  rule can realize (the full-dimensional cells of the hyperplane
  arrangement spanned by the unit covariates) and evaluates the exact
  objective on each; cost grows as O(n^dim(x)).
- ``solve_branch_bound`` runs depth-first branch and bound over the
  binary assignment variables of an encoded program (explicit
  assignment classes).
- ``solve_heuristic`` is a seeded pattern search over assignments with
  a final projection onto the linear class.

Indicator variables follow the t1/t2/u construction: t1 = 1{S >= h},
t2 = 1{S <= h}, u = p * t1 * t2, so t1 + t2 - 1 picks out S = h and the
objective is linear in the binaries.  Strict inequalities are relaxed
by ``EPS_STRICT``, exact on integer left-hand sides because consecutive
integers are 1/(deg+1) apart after normalization.
"""

from __future__ import annotations

import itertools
import re
import time
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linprog
from sklearn.linear_model import LogisticRegression

from .data import Dataset
from .errors import (
    BackendUnavailableError,
    ConfigError,
    DataIntegrityError,
    NumericalError,
)
from .welfare import EffectTable

__all__ = [
    "EPS_STRICT",
    "LinearThresholdPolicy",
    "ExplicitAssignmentPolicy",
    "evaluate_policy",
    "PolicyClass",
    "MilpProgram",
    "encode_milp",
    "construct_solution",
    "encoded_objective",
    "check_feasibility",
    "export_lp",
    "lp_text",
    "parse_lp",
    "SolveResult",
    "enumerate_cells",
    "solve_exact_cells",
    "solve_branch_bound",
    "solve_heuristic",
    "maximize_welfare",
    "capacity_diagnostic",
]

EPS_STRICT = 1e-6

_CELL_BUDGET = 2_000_000  # vertex-candidate cap for the cell enumerator
_DEGENERATE_COMBO_CAP = 4096


@dataclass(frozen=True)
class LinearThresholdPolicy:
    """pi(x) = 1{beta[0] + x . beta[1:] >= 0}; the boundary treats."""

    beta: np.ndarray
    kind: str = "linear_threshold"

    def __post_init__(self) -> None:
        beta = np.asarray(self.beta, dtype=float)
        if beta.ndim != 1 or beta.size < 1 or not np.isfinite(beta).all():
            raise ConfigError("beta must be a finite vector with the intercept first")
        object.__setattr__(self, "beta", beta)

    @property
    def n_covariates(self) -> int:
        return self.beta.size - 1

    def assign(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if X.ndim == 1:
            X = X[:, None]
        if X.shape[1] != self.n_covariates:
            raise ConfigError(
                f"policy expects {self.n_covariates} covariates, got {X.shape[1]}"
            )
        return (X @ self.beta[1:] + self.beta[0] >= 0.0).astype(np.int64)


@dataclass(frozen=True)
class ExplicitAssignmentPolicy:
    """A fixed 0/1 assignment per unit, indexed by unit id."""

    assignment: np.ndarray
    kind: str = "explicit_assignment"

    def __post_init__(self) -> None:
        arr = np.asarray(self.assignment)
        if not np.isin(arr, (0, 1)).all():
            raise ConfigError("explicit assignments must be binary 0/1")
        object.__setattr__(self, "assignment", arr.astype(np.int64))

    def assign(self, X) -> np.ndarray:
        X = np.asarray(X)
        if X.shape[0] != self.assignment.size:
            raise ConfigError(
                f"assignment covers {self.assignment.size} units, got {X.shape[0]} rows"
            )
        return self.assignment.copy()


def evaluate_policy(policy, x) -> int:
    """Deterministic binary decision for one covariate vector."""
    if isinstance(policy, ExplicitAssignmentPolicy):
        raise ConfigError("explicit assignments are unit-indexed, not covariate maps")
    return int(policy.assign(np.asarray(x, dtype=float)[None, :])[0])


@dataclass(frozen=True)
class PolicyClass:
    """Search class declaration: linear threshold rules inside a
    coefficient box, or unrestricted explicit assignments."""

    kind: str = "linear_threshold"
    coef_box: object = 1.0

    def __post_init__(self) -> None:
        if self.kind not in ("linear_threshold", "explicit_assignment"):
            raise ConfigError("policy class kind must be linear_threshold or explicit_assignment")

    def bounds(self, n_coefs: int) -> np.ndarray:
        """Per-coefficient symmetric half widths, intercept first."""
        box = self.coef_box
        arr = np.asarray(box if np.ndim(box) else [box] * n_coefs, dtype=float)
        if arr.size != n_coefs:
            raise ConfigError(f"coef_box has {arr.size} entries for {n_coefs} coefficients")
        if not np.isfinite(arr).all() or np.any(arr <= 0):
            raise ConfigError("coefficient box must be bounded with positive widths")
        return arr


def _capacity_count(capacity, n: int):
    if capacity is None:
        return None
    if not 0.0 < capacity <= 1.0:
        raise ConfigError("capacity must lie in (0, 1]")
    return int(np.floor(capacity * n + 1e-9))


# ---------------------------------------------------------------------------
# MILP encoding


@dataclass
class MilpProgram:
    """An encoded welfare-maximization program.

    ``constraints`` rows are all of the form sum(coeffs) <= rhs; the
    objective is max sum(objective) + constant.  Binaries are p_{unit},
    t1_{i}_{h}, t2_{i}_{h}, u_{i}_{h}; continuous beta_{j} carry box
    bounds.  The trailing fields mirror the instance so the in-process
    solvers need no dataset.
    """

    objective: dict
    constant: float
    constraints: list
    binaries: list
    bounds: dict
    kind: str
    n: int
    n_units: int
    sample_ids: np.ndarray
    p_units: np.ndarray
    neighbor_ids: dict
    g_tables: dict
    capacity_count: object
    eps_strict: float

    @property
    def n_variables(self) -> int:
        return len(self.binaries) + len(self.bounds)

    @property
    def n_constraints(self) -> int:
        return len(self.constraints)


def encode_milp(
    effect_table: EffectTable,
    dataset: Dataset,
    policy_class: PolicyClass,
    capacity=None,
) -> MilpProgram:
    """Encode max (1/n) sum_i g_i(p_i, sum_{k in N_i} p_k) as a MILP.

    Objective: (1/n) sum_i sum_h (g_i(1,h) - g_i(0,h)) u_{i,h}
    + g_i(0,h) (t1_{i,h} + t2_{i,h} - 1); the -g_i(0,h) pieces fold into
    the objective constant.  Constraints (all <=):

      (A) x~_i . beta / C_i < p_i <= x~_i . beta / C_i + 1, per unit with
          an assignment variable, C_i = 1 + sum_j box_j |x~_{ij}|
          (linear classes only);
      (B) (p_i + t1 + t2)/3 - 1 < u <= (p_i + t1 + t2)/3;
      (C) (S_i - h)/(l_i + 1) < t1 <= (S_i - h)/(l_i + 1) + 1;
      (D) (h - S_i)/(l_i + 1) < t2 <= (h - S_i)/(l_i + 1) + 1;
      capacity: sum of sample p_i <= floor(K n).

    Strict "<" is written as "<= rhs - EPS_STRICT".  Neighbors of sample
    units get their own p (and (A) row) even when they are target units.
    """
    g = dataset.graph
    sample_ids = dataset.sample_indices
    n = int(sample_ids.size)
    if n == 0:
        raise DataIntegrityError("cannot encode a program with an empty sample")
    referenced = set(int(i) for i in sample_ids)
    for i in sample_ids:
        referenced.update(int(k) for k in g.neighbors(int(i)))
    p_units = np.array(sorted(referenced), dtype=np.int64)
    max_l = max((g.degree(int(i)) for i in sample_ids), default=0)
    if (max_l + 1) * EPS_STRICT >= 1.0:
        raise NumericalError("degree too large for the strictness slack")

    objective: dict = {}
    constant = 0.0
    constraints: list = []
    binaries: list = [f"p_{int(u)}" for u in p_units]
    bounds: dict = {}
    neighbor_ids: dict = {}
    g_tables: dict = {}

    if policy_class.kind == "linear_threshold":
        n_coefs = dataset.X.shape[1] + 1
        box = policy_class.bounds(n_coefs)
        for j in range(n_coefs):
            bounds[f"beta_{j}"] = (-float(box[j]), float(box[j]))
        for u in p_units:
            u = int(u)
            xt = np.concatenate([[1.0], dataset.X[u]])
            c_i = 1.0 + float(np.sum(box * np.abs(xt)))
            lo = {f"beta_{j}": float(xt[j] / c_i) for j in range(n_coefs)}
            lo[f"p_{u}"] = -1.0
            constraints.append((f"A_lo_{u}", lo, -EPS_STRICT))
            up = {f"p_{u}": 1.0}
            up.update({f"beta_{j}": float(-xt[j] / c_i) for j in range(n_coefs)})
            constraints.append((f"A_up_{u}", up, 1.0))

    for i in sample_ids:
        i = int(i)
        nbrs = g.neighbors(i)
        neighbor_ids[i] = nbrs.copy()
        table = effect_table.exact_grid(i)
        if table.shape != (2, nbrs.size + 1):
            raise DataIntegrityError(
                f"effect table for unit {i} has shape {table.shape}, "
                f"expected (2, {nbrs.size + 1})"
            )
        g_tables[i] = np.asarray(table, dtype=float)
        l1 = nbrs.size + 1.0
        for h in range(nbrs.size + 1):
            t1, t2, uu = f"t1_{i}_{h}", f"t2_{i}_{h}", f"u_{i}_{h}"
            binaries += [t1, t2, uu]
            g0 = float(g_tables[i][0, h])
            g1 = float(g_tables[i][1, h])
            objective[uu] = (g1 - g0) / n
            objective[t1] = objective.get(t1, 0.0) + g0 / n
            objective[t2] = objective.get(t2, 0.0) + g0 / n
            constant -= g0 / n

            # (C)  (S - h)/(l+1) < t1 <= (S - h)/(l+1) + 1
            lo = {f"p_{int(k)}": 1.0 / l1 for k in nbrs}
            lo[t1] = -1.0
            constraints.append((f"C_lo_{i}_{h}", lo, h / l1 - EPS_STRICT))
            up = {t1: 1.0}
            up.update({f"p_{int(k)}": -1.0 / l1 for k in nbrs})
            constraints.append((f"C_up_{i}_{h}", up, 1.0 - h / l1))

            # (D)  (h - S)/(l+1) < t2 <= (h - S)/(l+1) + 1
            lo = {f"p_{int(k)}": -1.0 / l1 for k in nbrs}
            lo[t2] = -1.0
            constraints.append((f"D_lo_{i}_{h}", lo, -h / l1 - EPS_STRICT))
            up = {t2: 1.0}
            up.update({f"p_{int(k)}": 1.0 / l1 for k in nbrs})
            constraints.append((f"D_up_{i}_{h}", up, 1.0 + h / l1))

            # (B)  (p + t1 + t2)/3 - 1 < u <= (p + t1 + t2)/3
            lo = {f"p_{i}": 1 / 3, t1: 1 / 3, t2: 1 / 3, uu: -1.0}
            constraints.append((f"B_lo_{i}_{h}", lo, 1.0 - EPS_STRICT))
            up = {uu: 1.0, f"p_{i}": -1 / 3, t1: -1 / 3, t2: -1 / 3}
            constraints.append((f"B_up_{i}_{h}", up, 0.0))

    cap = _capacity_count(capacity, n)
    if cap is not None:
        row = {f"p_{int(i)}": 1.0 for i in sample_ids}
        constraints.append(("capacity", row, float(cap)))

    return MilpProgram(
        objective=objective,
        constant=constant,
        constraints=constraints,
        binaries=binaries,
        bounds=bounds,
        kind=policy_class.kind,
        n=n,
        n_units=dataset.n_units,
        sample_ids=sample_ids.copy(),
        p_units=p_units,
        neighbor_ids=neighbor_ids,
        g_tables=g_tables,
        capacity_count=cap,
        eps_strict=EPS_STRICT,
    )


def construct_solution(program: MilpProgram, assignment, beta=None) -> dict:
    """Variable values implied by an assignment over ``program.p_units``.

    Sets every t/u binary to its defining indicator; the construction
    used in the equivalence proof, and the oracle the tests compare
    against.
    """
    bits = np.asarray(assignment, dtype=np.int64)
    if bits.shape != program.p_units.shape:
        raise ConfigError("assignment must cover every p variable")
    pos = {int(u): k for k, u in enumerate(program.p_units)}
    values = {f"p_{int(u)}": float(bits[k]) for k, u in enumerate(program.p_units)}
    for i in program.sample_ids:
        i = int(i)
        s = int(sum(bits[pos[int(k)]] for k in program.neighbor_ids[i]))
        p_i = bits[pos[i]]
        for h in range(program.neighbor_ids[i].size + 1):
            t1 = 1.0 if s >= h else 0.0
            t2 = 1.0 if s <= h else 0.0
            values[f"t1_{i}_{h}"] = t1
            values[f"t2_{i}_{h}"] = t2
            values[f"u_{i}_{h}"] = float(p_i) * t1 * t2
    if beta is not None:
        for j, b in enumerate(np.asarray(beta, dtype=float)):
            values[f"beta_{j}"] = float(b)
    return values


def encoded_objective(program: MilpProgram, values: dict) -> float:
    total = program.constant
    for name, coef in program.objective.items():
        total += coef * values.get(name, 0.0)
    return float(total)


def check_feasibility(program: MilpProgram, values: dict, tol: float = 1e-9) -> list:
    """Names of violated constraint rows (empty when feasible)."""
    bad = []
    for name, coeffs, rhs in program.constraints:
        lhs = sum(coef * values.get(var, 0.0) for var, coef in coeffs.items())
        if lhs > rhs + tol:
            bad.append(name)
    for var, (lo, hi) in program.bounds.items():
        v = values.get(var, 0.0)
        if not lo - tol <= v <= hi + tol:
            bad.append(f"bound:{var}")
    return bad


# ---------------------------------------------------------------------------
# LP file format (CPLEX LP dialect)


def _lp_terms(coeffs: dict) -> str:
    parts = []
    for var, coef in coeffs.items():
        sign = "-" if coef < 0 else "+"
        parts.append(f"{sign} {repr(abs(coef))} {var}")
    text = " ".join(parts)
    return text[2:] if text.startswith("+ ") else text


def lp_text(program: MilpProgram) -> str:
    lines = [f"\\ n_units={program.n_units}", "Maximize"]
    obj = _lp_terms(program.objective)
    if program.constant:
        sign = "-" if program.constant < 0 else "+"
        obj = f"{obj} {sign} {repr(abs(program.constant))}"
    lines.append(f" obj: {obj}")
    lines.append("Subject To")
    for name, coeffs, rhs in program.constraints:
        lines.append(f" {name}: {_lp_terms(coeffs)} <= {repr(rhs)}")
    if program.bounds:
        lines.append("Bounds")
        for var, (lo, hi) in program.bounds.items():
            lines.append(f" {repr(lo)} <= {var} <= {repr(hi)}")
    lines.append("Binary")
    for var in program.binaries:
        lines.append(f" {var}")
    lines.append("End")
    return "\n".join(lines) + "\n"


def export_lp(program: MilpProgram, path) -> None:
    """Write the program as a CPLEX LP-format text file."""
    with open(path, "w") as fh:
        fh.write(lp_text(program))


_LP_TOKEN = re.compile(
    r"[+-]|[0-9]*\.?[0-9]+(?:[eE][+-]?[0-9]+)?|[A-Za-z_][A-Za-z0-9_]*"
)


def _parse_expression(text: str) -> tuple:
    """Parse 'c1 v1 + c2 v2 ... [+ c]' into (coeffs, constant).

    Numbers (including exponents) are matched atomically so a sign
    inside scientific notation is never read as an operator.
    """
    coeffs: dict = {}
    constant = 0.0
    sign = 1.0
    pending = None
    for tok in _LP_TOKEN.findall(text):
        if tok in ("+", "-"):
            if pending is not None:
                constant += sign * pending
                pending = None
            sign = 1.0 if tok == "+" else -1.0
        else:
            try:
                value = float(tok)
            except ValueError:
                coef = sign if pending is None else sign * pending
                coeffs[tok] = coeffs.get(tok, 0.0) + coef
                pending = None
                sign = 1.0
                continue
            pending = value
    if pending is not None:
        constant += sign * pending
    return coeffs, constant


def parse_lp(source) -> MilpProgram:
    """Parse an LP file produced by :func:`lp_text` back into a program.

    Rebuilds the solver metadata from the variable names and rows:
    sample units are those with indicator triples, their neighbors are
    the p variables in the h = 0 threshold row, and the g tables come
    from the objective coefficients (g0 = n * coef(t1), g1 = n * coef(u)
    + g0).
    """
    text = source if "\n" in str(source) else open(source).read()
    section = None
    objective_text = ""
    rows: list = []
    bounds: dict = {}
    binaries: list = []
    n_units = None
    for raw in text.splitlines():
        line = raw.strip()
        if line.startswith("\\"):
            if "n_units=" in line:
                n_units = int(line.split("n_units=")[1])
            continue
        if not line:
            continue
        low = line.lower()
        if low in ("maximize", "subject to", "bounds", "binary", "end"):
            section = low
            continue
        if section == "maximize":
            objective_text += " " + line.split(":", 1)[1] if ":" in line else " " + line
        elif section == "subject to":
            name, body = line.split(":", 1)
            expr, rhs = body.rsplit("<=", 1)
            coeffs, _ = _parse_expression(expr)
            rows.append((name.strip(), coeffs, float(rhs)))
        elif section == "bounds":
            lo, var, hi = line.split("<=")
            bounds[var.strip()] = (float(lo), float(hi))
        elif section == "binary":
            binaries.append(line)
    objective, constant = _parse_expression(objective_text)

    sample_ids = sorted({int(v.split("_")[1]) for v in binaries if v.startswith("t1_")})
    n = len(sample_ids)
    row_map = {name: coeffs for name, coeffs, _ in rows}
    neighbor_ids: dict = {}
    g_tables: dict = {}
    for i in sample_ids:
        hs = sorted(int(v.split("_")[2]) for v in binaries if v.startswith(f"t1_{i}_"))
        lo = row_map[f"C_lo_{i}_0"]
        neighbor_ids[i] = np.array(
            sorted(int(v.split("_")[1]) for v in lo if v.startswith("p_")), dtype=np.int64
        )
        table = np.zeros((2, len(hs)))
        for h in hs:
            g0 = n * objective.get(f"t1_{i}_{h}", 0.0)
            table[0, h] = g0
            table[1, h] = n * objective.get(f"u_{i}_{h}", 0.0) + g0
        g_tables[i] = table
    p_units = np.array(
        sorted(int(v.split("_")[1]) for v in binaries if v.startswith("p_")), dtype=np.int64
    )
    cap = None
    for name, coeffs, rhs in rows:
        if name == "capacity":
            cap = int(round(rhs))
    if n_units is None:
        n_units = int(p_units.max()) + 1 if p_units.size else 0
    return MilpProgram(
        objective=objective,
        constant=constant,
        constraints=rows,
        binaries=binaries,
        bounds=bounds,
        kind="linear_threshold" if bounds else "explicit_assignment",
        n=n,
        n_units=n_units,
        sample_ids=np.array(sample_ids, dtype=np.int64),
        p_units=p_units,
        neighbor_ids=neighbor_ids,
        g_tables=g_tables,
        capacity_count=cap,
        eps_strict=_strict_rhs(rows, sample_ids),
    )


def _strict_rhs(rows, sample_ids) -> float:
    """Strictness slack recovered from the first h=0 threshold row,
    whose right-hand side is exactly -eps."""
    if not sample_ids:
        return EPS_STRICT
    target = f"C_lo_{sample_ids[0]}_0"
    for name, _, rhs in rows:
        if name == target:
            return -rhs
    return EPS_STRICT


# ---------------------------------------------------------------------------
# Shared exact-objective evaluation


class _Objective:
    """Vectorized evaluation of (1/n) sum_i g_i(p_i, sum nbrs of p)."""

    def __init__(self, n_units, sample_ids, neighbor_ids, g_tables):
        self.n_units = int(n_units)
        self.sample_ids = np.asarray(sample_ids, dtype=np.int64)
        self.n = int(self.sample_ids.size)
        self.neighbor_ids = neighbor_ids
        nbr_mat = np.zeros((self.n_units, self.n))
        flat: list = []
        offsets = np.zeros(self.n, dtype=np.int64)
        widths = np.zeros(self.n, dtype=np.int64)
        pos = 0
        for k, i in enumerate(self.sample_ids):
            i = int(i)
            nbr_mat[neighbor_ids[i], k] = 1.0
            table = g_tables[i]
            offsets[k] = pos
            widths[k] = table.shape[1]
            flat.append(np.asarray(table, dtype=float).ravel())
            pos += table.size
        self.nbr_mat = nbr_mat
        self.flat_g = np.concatenate(flat) if flat else np.zeros(0)
        self.offsets = offsets
        self.widths = widths

    @classmethod
    def from_program(cls, program: MilpProgram) -> "_Objective":
        return cls(program.n_units, program.sample_ids, program.neighbor_ids, program.g_tables)

    @classmethod
    def from_effect_table(cls, effect_table: EffectTable, dataset: Dataset) -> "_Objective":
        ids = dataset.sample_indices
        neighbor_ids = {int(i): dataset.graph.neighbors(int(i)) for i in ids}
        g_tables = {int(i): effect_table.exact_grid(int(i)) for i in ids}
        return cls(dataset.n_units, ids, neighbor_ids, g_tables)

    def values(self, patterns: np.ndarray) -> np.ndarray:
        """Objective of each row of a (m, n_units) 0/1 pattern matrix."""
        if np.asarray(patterns).shape[0] > 131072:
            chunks = [
                self.values(patterns[k : k + 131072])
                for k in range(0, np.asarray(patterns).shape[0], 131072)
            ]
            return np.concatenate(chunks)
        P = np.asarray(patterns, dtype=float)
        s = P @ self.nbr_mat
        own = P[:, self.sample_ids]
        idx = self.offsets[None, :] + self.widths[None, :] * own.astype(np.int64) + s.astype(
            np.int64
        )
        return self.flat_g[idx].sum(axis=1) / self.n

    def value(self, pattern: np.ndarray) -> float:
        return float(self.values(np.asarray(pattern)[None, :])[0])

    def treated_sample(self, patterns: np.ndarray) -> np.ndarray:
        return np.asarray(patterns)[:, self.sample_ids].sum(axis=1)


@dataclass
class SolveResult:
    """Outcome of one welfare-maximization run.

    ``objective`` equals the exact table objective of ``assignment``;
    recomputing the AIPW welfare of ``policy`` reproduces it to 1e-9.
    ``wall_time`` is informational and never serialized (reports must be
    byte-identical across reruns).
    """

    policy: object
    assignment: np.ndarray
    objective: float
    backend: str
    certificate: bool
    nodes_explored: int
    wall_time: float = 0.0

    def report(self) -> dict:
        beta = getattr(self.policy, "beta", None)
        return {
            "backend": self.backend,
            "value": self.objective,
            "certificate": bool(self.certificate),
            "policy_kind": self.policy.kind,
            "policy_coefficients": None if beta is None else [float(b) for b in beta],
            "assignment": [int(b) for b in self.assignment],
            "nodes_explored": int(self.nodes_explored),
        }


def _lex_best(patterns: np.ndarray, values: np.ndarray, feasible: np.ndarray):
    """Index of the max-value feasible row; exact-value ties go to the
    lexicographically smallest assignment vector."""
    ok = np.flatnonzero(feasible)
    if ok.size == 0:
        return None
    vals = values[ok]
    best = vals.max()
    ties = ok[vals == best]
    if ties.size == 1:
        return int(ties[0])
    order = np.lexsort(patterns[ties].T[::-1])
    return int(ties[order[0]])


# ---------------------------------------------------------------------------
# Exact backend 1: hyperplane-arrangement cells


def _canonical_planes(X_active: np.ndarray, sigma: float):
    """Distinct slice hyperplanes {w : x_u . w + sigma = 0}, unit-normal
    form, with the unit -> plane membership map.

    Exactly duplicated covariate rows collapse onto one plane; their
    indicators are identical functions of w.
    """
    norms = np.linalg.norm(X_active, axis=1)
    normals = X_active / norms[:, None]
    consts = sigma / norms
    keys: dict = {}
    unit_plane = np.empty(X_active.shape[0], dtype=np.int64)
    plane_normals: list = []
    plane_consts: list = []
    for u in range(X_active.shape[0]):
        key = normals[u].tobytes() + consts[u].tobytes()
        if key not in keys:
            keys[key] = len(plane_normals)
            plane_normals.append(normals[u])
            plane_consts.append(consts[u])
        unit_plane[u] = keys[key]
    return np.array(plane_normals), np.array(plane_consts), unit_plane


def _interior_step(normals_T, f_other, normals_other, desired):
    """A direction and step size moving off a vertex into the cell with
    the ``desired`` strict signs on the through-planes."""
    dir_vec, *_ = np.linalg.lstsq(normals_T, desired.astype(float), rcond=None)
    rates = np.abs(normals_other @ dir_vec) if normals_other.size else np.zeros(0)
    slack = np.abs(f_other)
    with np.errstate(divide="ignore"):
        limits = np.where(rates > 1e-12, slack / np.maximum(rates, 1e-300), np.inf)
    delta = 0.5 * min(1.0, float(limits.min()) if limits.size else 1.0)
    return dir_vec, delta


def _fit_degenerate(normals, consts, sides, n_dim, radius):
    """Strictly feasible point for a full sign vector, or None.

    maximize margin m subject to side_t (a_t . w + c_t) >= m for every
    plane; realizable cells give a positive margin.
    """
    q = normals.shape[0]
    a_ub = np.hstack([-sides[:, None] * normals, np.ones((q, 1))])
    b_ub = sides * consts
    c = np.zeros(n_dim + 1)
    c[-1] = -1.0
    bnds = [(-radius, radius)] * n_dim + [(-1.0, 1.0)]
    res = linprog(c, A_ub=a_ub, b_ub=b_ub, bounds=bnds, method="highs")
    if not res.success or res.x[-1] <= 1e-7:
        return None
    return res.x[:-1]


def _sector_probes(v, normals, f_all, through):
    """Interior points of the angular sectors around a planar vertex.

    t concurrent lines cut a neighborhood of ``v`` into at most 2t
    sectors, one adjacent cell each.  The bisector direction of every
    sector, stepped short of the nearest non-incident line, lands
    strictly inside the corresponding cell.  Closed form, no solver;
    tied covariates (integer columns such as degree) concentrate many
    lines on one vertex, where sign-combination enumeration explodes
    but the sector count stays linear.
    """
    tang = np.arctan2(normals[through, 0], -normals[through, 1])
    ang = np.unique(np.mod(np.concatenate([tang, tang + np.pi]), 2.0 * np.pi))
    gaps = np.diff(np.concatenate([ang, [ang[0] + 2.0 * np.pi]]))
    mids = ang + 0.5 * gaps
    dirs = np.column_stack([np.cos(mids), np.sin(mids)])
    mask = np.ones(normals.shape[0], dtype=bool)
    mask[through] = False
    if mask.any():
        rates = np.abs(dirs @ normals[mask].T)
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = np.where(
                rates > 1e-12,
                np.abs(f_all[mask])[None, :] / np.maximum(rates, 1e-300),
                np.inf,
            )
        delta = 0.5 * np.minimum(1.0, ratio.min(axis=1))
    else:
        delta = np.full(mids.size, 0.5)
    return v[None, :] + delta[:, None] * dirs


def enumerate_cells(X: np.ndarray, box) -> tuple:
    """All assignment patterns 1{(1, x) . beta >= 0} can realize, with
    a representative interior beta per pattern (scaled into ``box``).

    Enumerates the full-dimensional cells of the central arrangement of
    the lifted covariates via its two intercept slices beta_0 = +-1.
    Tie patterns (points exactly on the boundary treat) coincide with
    the strict pattern whose tied units sit on the positive side, so
    enumerating strict cells covers every realizable pattern.  Returns
    (patterns (m, n) int8, betas (m, 1 + dim)).
    """
    X = np.asarray(X, dtype=float)
    n, dim = X.shape
    box = np.asarray(box, dtype=float)
    zero_rows = np.all(X == 0.0, axis=1)
    active = np.flatnonzero(~zero_rows)
    found: dict = {}

    def emit(full_pattern: np.ndarray, beta: np.ndarray) -> None:
        key = np.packbits(full_pattern).tobytes()
        if key not in found:
            scale = min(1.0, float((0.999999 * box / np.maximum(np.abs(beta), 1e-300)).min()))
            found[key] = (full_pattern.copy(), beta * scale)

    for sigma in (1.0, -1.0):
        base = np.zeros(n, dtype=np.int8)
        base[zero_rows] = 1 if sigma > 0 else 0
        if active.size == 0:
            emit(base, np.concatenate([[sigma], np.zeros(dim)]))
            continue
        normals, consts, unit_plane = _canonical_planes(X[active], sigma)
        q = normals.shape[0]

        def emit_signs(plane_signs: np.ndarray, w: np.ndarray) -> None:
            pattern = base.copy()
            pattern[active] = (plane_signs[unit_plane] > 0).astype(np.int8)
            emit(pattern, np.concatenate([[sigma], w]))

        total = q + 2 * dim
        n_candidates = 1
        for r in range(dim):
            n_candidates = n_candidates * (total - r) // (r + 1)
        if n_candidates > _CELL_BUDGET:
            raise BackendUnavailableError(
                f"cell enumeration needs {n_candidates} vertex candidates; "
                "use the heuristic backend or export the program"
            )

        # The box must cover the nearest point of every plane-subset
        # intersection: the closest point of any cell to the origin is
        # the min-norm solution of such a subsystem, so a box this size
        # meets every nonempty cell.
        r0 = float(np.abs(consts).max())
        if q >= 2 and dim >= 2:
            pairs = np.array(list(itertools.combinations(range(q), 2)), dtype=np.int64)
            a1, a2 = normals[pairs[:, 0]], normals[pairs[:, 1]]
            c1, c2 = consts[pairs[:, 0]], consts[pairs[:, 1]]
            dot = np.sum(a1 * a2, axis=1)
            det = 1.0 - dot * dot
            ok = np.abs(det) > 1e-12
            alpha = (-c1[ok] + dot[ok] * c2[ok]) / det[ok]
            gamma = (dot[ok] * c1[ok] - c2[ok]) / det[ok]
            feet = alpha[:, None] * a1[ok] + gamma[:, None] * a2[ok]
            if feet.size:
                r0 = max(r0, float(np.abs(feet).max()))
        if q >= 3 and dim >= 3:
            for subset in itertools.combinations(range(q), 3):
                mat = normals[list(subset)]
                if abs(np.linalg.det(mat)) < 1e-12:
                    continue
                v = np.linalg.solve(mat, -consts[list(subset)])
                r0 = max(r0, float(np.abs(v).max()))
        radius = 2.0 * (1.0 + r0)

        all_normals = np.vstack([normals, np.eye(dim), np.eye(dim)])
        all_consts = np.concatenate([consts, np.full(dim, -radius), np.full(dim, radius)])

        degenerate_slow: list = []
        if dim == 2 and q >= 2:
            # Bulk of the candidates: pairwise plane intersections,
            # solved and perturbed in closed form as one batch.
            i_idx, j_idx = np.triu_indices(q, k=1)
            a1, a2 = normals[i_idx], normals[j_idx]
            c1, c2 = consts[i_idx], consts[j_idx]
            det = a1[:, 0] * a2[:, 1] - a1[:, 1] * a2[:, 0]
            ok = np.abs(det) > 1e-12
            a1, a2, c1, c2, det = a1[ok], a2[ok], c1[ok], c2[ok], det[ok]
            V = np.column_stack(
                [
                    (-c1 * a2[:, 1] + c2 * a1[:, 1]) / det,
                    (-c2 * a1[:, 0] + c1 * a2[:, 0]) / det,
                ]
            )
            inside = np.abs(V).max(axis=1) <= radius + 1e-9
            a1, a2, det, V = a1[inside], a2[inside], det[inside], V[inside]
            if V.shape[0]:
                # Coincidence tolerance scales with the vertex itself:
                # tying it to the global radius would flag every vertex
                # as degenerate once one near-parallel pair inflates the
                # coverage radius.
                tol_v = 1e-9 * (1.0 + np.abs(V).max(axis=1))
                F = V @ normals.T + consts
                n_through = (np.abs(F) <= tol_v[:, None]).sum(axis=1)
                degenerate_slow.extend(V[n_through > 2])
                clean = n_through == 2
                a1, a2, det, V, F = a1[clean], a2[clean], det[clean], V[clean], F[clean]
                tol_v = tol_v[clean]
            if V.shape[0]:
                slack = np.abs(F)
                keep_sign = slack > tol_v[:, None]
                for u_sgn, v_sgn in ((1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)):
                    dirs = np.column_stack(
                        [
                            (a2[:, 1] * u_sgn - a1[:, 1] * v_sgn) / det,
                            (-a2[:, 0] * u_sgn + a1[:, 0] * v_sgn) / det,
                        ]
                    )
                    rates = np.abs(dirs @ normals.T)
                    with np.errstate(divide="ignore", invalid="ignore"):
                        ratio = np.where(
                            keep_sign & (rates > 1e-12),
                            slack / np.maximum(rates, 1e-300),
                            np.inf,
                        )
                    delta = 0.5 * np.minimum(1.0, ratio.min(axis=1))
                    W = V + delta[:, None] * dirs
                    plane_pos = (W @ normals.T + consts) > 0
                    full = np.repeat(base[None, :], W.shape[0], axis=0)
                    full[:, active] = plane_pos[:, unit_plane].astype(np.int8)
                    packed = np.packbits(full, axis=1)
                    for row in range(W.shape[0]):
                        key = packed[row].tobytes()
                        if key not in found:
                            beta = np.concatenate([[sigma], W[row]])
                            scale = min(
                                1.0,
                                float((0.999999 * box / np.maximum(np.abs(beta), 1e-300)).min()),
                            )
                            found[key] = (full[row], beta * scale)

        for subset in itertools.combinations(range(total), dim):
            if dim == 2 and q >= 2 and subset[-1] < q:
                continue
            rows = list(subset)
            mat = all_normals[rows]
            if abs(np.linalg.det(mat)) < 1e-12:
                continue
            v = np.linalg.solve(mat, -all_consts[rows])
            if np.abs(v).max() > radius + 1e-9:
                continue
            f_all = normals @ v + consts
            through = np.flatnonzero(np.abs(f_all) <= 1e-9 * (1.0 + float(np.abs(v).max())))
            defining = [r for r in rows if r < q]
            if through.size == 0:
                # Box-corner vertex interior to a cell: one pattern.
                emit_signs(np.where(f_all > 0, 1, -1), v)
                continue
            degenerate = through.size > len(defining) or through.size > dim
            strict = np.where(f_all > 0, 1, -1)
            if degenerate and dim == 2:
                for w_row in _sector_probes(v, normals, f_all, through):
                    f_w = normals @ w_row + consts
                    emit_signs(np.where(f_w > 0, 1, -1), w_row)
                continue
            if degenerate and 2 ** through.size > _DEGENERATE_COMBO_CAP:
                raise NumericalError(
                    "covariate arrangement too degenerate for cell enumeration"
                )
            for combo in itertools.product((1, -1), repeat=through.size):
                signs = strict.copy()
                signs[through] = combo
                if degenerate:
                    w = _fit_degenerate(normals, consts, signs.astype(float), dim, radius)
                    if w is None:
                        continue
                    emit_signs(signs, w)
                else:
                    other = np.setdiff1d(np.arange(q), through, assume_unique=False)
                    dir_vec, delta = _interior_step(
                        normals[through],
                        f_all[other],
                        normals[other] if other.size else np.zeros((0, dim)),
                        np.asarray(combo),
                    )
                    emit_signs(signs, v + delta * dir_vec)

        # Collected only on the dim == 2 batched path, so the sector
        # sweep always applies here.
        for v in degenerate_slow:
            f_all = normals @ v + consts
            through = np.flatnonzero(np.abs(f_all) <= 1e-9 * (1.0 + float(np.abs(v).max())))
            for w_row in _sector_probes(v, normals, f_all, through):
                f_w = normals @ w_row + consts
                emit_signs(np.where(f_w > 0, 1, -1), w_row)

    patterns = np.array([p for p, _ in found.values()], dtype=np.int8)
    betas = np.array([b for _, b in found.values()])
    return patterns, betas


def solve_exact_cells(
    effect_table: EffectTable,
    dataset: Dataset,
    policy_class: PolicyClass,
    capacity=None,
    *,
    cells=None,
) -> SolveResult:
    """Exact maximization by enumerating realizable assignment patterns.

    Linear classes enumerate arrangement cells (dim(x) <= 3); explicit
    classes enumerate all 2^m assignments over the referenced units
    (m <= 20).  ``cells`` accepts a precomputed ``enumerate_cells``
    result so repeated solves on the same covariates share the
    enumeration.
    """
    start = time.perf_counter()
    obj = _Objective.from_effect_table(effect_table, dataset)
    cap = _capacity_count(capacity, obj.n)

    if policy_class.kind == "explicit_assignment":
        referenced = sorted(
            set(int(i) for i in obj.sample_ids)
            | {int(k) for i in obj.sample_ids for k in obj.neighbor_ids[int(i)]}
        )
        m = len(referenced)
        if m > 20:
            raise BackendUnavailableError(
                f"exhaustive enumeration over {m} assignment variables is too large"
            )
        combos = np.array(list(itertools.product((0, 1), repeat=m)), dtype=np.int8)
        patterns = np.zeros((combos.shape[0], dataset.n_units), dtype=np.int8)
        patterns[:, referenced] = combos
        betas = None
    else:
        if dataset.X.shape[1] > 3:
            raise BackendUnavailableError(
                "cell enumeration supports at most 3 policy covariates; "
                "use the heuristic backend or export the program"
            )
        if cells is None:
            n_coefs = dataset.X.shape[1] + 1
            cells = enumerate_cells(dataset.X, policy_class.bounds(n_coefs))
        patterns, betas = cells

    values = obj.values(patterns)
    feasible = (
        np.ones(patterns.shape[0], dtype=bool)
        if cap is None
        else obj.treated_sample(patterns) <= cap
    )
    pick = _lex_best(patterns, values, feasible)
    if pick is None:
        raise NumericalError("no feasible assignment pattern")
    assignment = patterns[pick].astype(np.int64)
    if betas is None:
        policy = ExplicitAssignmentPolicy(assignment)
    else:
        policy = LinearThresholdPolicy(betas[pick])
        realized = policy.assign(dataset.X)
        if not np.array_equal(realized, assignment):
            raise NumericalError("representative beta does not reproduce its cell")
    return SolveResult(
        policy=policy,
        assignment=assignment,
        objective=float(values[pick]),
        backend="cells",
        certificate=True,
        nodes_explored=int(patterns.shape[0]),
        wall_time=time.perf_counter() - start,
    )


# ---------------------------------------------------------------------------
# Exact backend 2: branch and bound over the encoded program


def solve_branch_bound(program: MilpProgram, node_budget: int = 2_000_000) -> SolveResult:
    """Depth-first branch and bound on the assignment binaries.

    Bound: per sample unit, the maximum g over own arms still allowed
    and the exposure interval consistent with decided neighbors and the
    remaining capacity.  Exact with a certificate unless the node
    budget trips, in which case the best incumbent is returned with
    ``certificate=False``.  Explicit-assignment programs only: linear
    classes restrict assignments through beta, which this search does
    not model.
    """
    if program.kind != "explicit_assignment":
        raise ConfigError(
            "branch and bound solves explicit-assignment programs; "
            "use cells or the heuristic for linear classes"
        )
    start = time.perf_counter()
    p_units = program.p_units
    m = p_units.size
    pos = {int(u): k for k, u in enumerate(p_units)}
    sample_set = set(int(i) for i in program.sample_ids)
    obj = _Objective.from_program(program)
    cap = program.capacity_count if program.capacity_count is not None else len(sample_set)

    # For each p variable, the sample units whose exposure it enters.
    affects: list = [[] for _ in range(m)]
    sample_order = [int(i) for i in program.sample_ids]
    samp_idx = {i: t for t, i in enumerate(sample_order)}
    for i in sample_order:
        for k in program.neighbor_ids[i]:
            affects[pos[int(k)]].append(samp_idx[i])
    is_sample_nbr = [
        np.array([int(k) in sample_set for k in program.neighbor_ids[i]], dtype=bool)
        for i in sample_order
    ]

    decided_treated = np.zeros(len(sample_order), dtype=np.int64)
    undecided_sample = np.array(
        [int(mask.sum()) for mask in is_sample_nbr], dtype=np.int64
    )
    undecided_other = np.array(
        [int((~mask).sum()) for mask in is_sample_nbr], dtype=np.int64
    )
    g_list = [program.g_tables[i] for i in sample_order]

    def _expand(bvec: np.ndarray) -> np.ndarray:
        full = np.zeros(program.n_units, dtype=np.int64)
        full[p_units] = bvec
        return full

    bits = np.zeros(m, dtype=np.int64)
    # Seed with all-zeros (always feasible, lexicographically smallest)
    # so a tripped node budget still returns a valid incumbent.
    best_bits = np.zeros(m, dtype=np.int64)
    best_val = obj.value(_expand(best_bits))
    nodes = 0
    budget_hit = False

    def bound(depth: int, treated: int) -> float:
        r = cap - treated
        total = 0.0
        for t, i in enumerate(sample_order):
            g = g_list[t]
            lo = int(decided_treated[t])
            hi = lo + int(undecided_other[t]) + min(int(undecided_sample[t]), r)
            k = pos[i]
            if k < depth:
                total += g[bits[k], lo : hi + 1].max()
            elif i in sample_set and r <= 0:
                total += g[0, lo : hi + 1].max()
            else:
                total += g[:, lo : hi + 1].max()
        return total / obj.n

    def dfs(depth: int, treated: int) -> None:
        nonlocal best_val, best_bits, nodes, budget_hit
        if budget_hit:
            return
        nodes += 1
        if nodes > node_budget:
            budget_hit = True
            return
        if depth == m:
            value = obj.value(_expand(bits))
            if value > best_val:
                best_val = value
                best_bits = bits.copy()
            return
        if bound(depth, treated) < best_val:
            return
        u = int(p_units[depth])
        in_sample = u in sample_set
        for b in (0, 1):
            if b == 1 and in_sample and treated + 1 > cap:
                continue
            bits[depth] = b
            for t in affects[depth]:
                if in_sample:
                    undecided_sample[t] -= 1
                else:
                    undecided_other[t] -= 1
                decided_treated[t] += b
            dfs(depth + 1, treated + (b if in_sample else 0))
            for t in affects[depth]:
                if in_sample:
                    undecided_sample[t] += 1
                else:
                    undecided_other[t] += 1
                decided_treated[t] -= b
        bits[depth] = 0

    dfs(0, 0)
    if best_bits is None:
        raise NumericalError("branch and bound found no feasible assignment")
    assignment = _expand(best_bits)
    return SolveResult(
        policy=ExplicitAssignmentPolicy(assignment),
        assignment=assignment,
        objective=float(best_val),
        backend="branch_bound",
        certificate=not budget_hit,
        nodes_explored=nodes,
        wall_time=time.perf_counter() - start,
    )


# ---------------------------------------------------------------------------
# Heuristic backend


def _local_search(obj: _Objective, neighbor_sets, start_bits, cap) -> tuple:
    """First-improvement pattern search, scanned in unit order.

    Moves: flip one unit, flip a unit jointly with one neighbor, and
    flip a unit with its whole closed neighborhood.
    """
    bits = start_bits.copy()
    value = obj.value(bits)
    improved = True
    while improved:
        improved = False
        for u in range(bits.size):
            moves = [(u,)]
            moves += [(u, v) for v in neighbor_sets[u] if v != u]
            moves.append(neighbor_sets[u])
            for flip in moves:
                cand = bits.copy()
                cand[list(flip)] = 1 - cand[list(flip)]
                if cap is not None and obj.treated_sample(cand[None, :])[0] > cap:
                    continue
                cand_val = obj.value(cand)
                if cand_val > value:
                    bits, value = cand, cand_val
                    improved = True
                    break
            if improved:
                break
    return bits, value


def solve_heuristic(
    effect_table: EffectTable,
    dataset: Dataset,
    policy_class: PolicyClass,
    capacity=None,
    seed: int = 0,
    n_restarts: int = 8,
    init_assignment=None,
) -> SolveResult:
    """Seeded pattern search, then projection onto the linear class.

    Runs first-improvement flip search from deterministic and random
    starts; for linear classes the incumbent labels are then projected
    onto threshold rules via a logistic fit and covariate-subset
    hyperplanes, and the best realizable pattern wins.  Never certifies
    optimality.
    """
    start = time.perf_counter()
    rng = np.random.default_rng(seed)
    obj = _Objective.from_effect_table(effect_table, dataset)
    cap = _capacity_count(capacity, obj.n)
    n_units = dataset.n_units
    neighbor_sets = [
        tuple(sorted({u, *map(int, dataset.graph.neighbors(u))})) for u in range(n_units)
    ]

    def repair(bits: np.ndarray) -> np.ndarray:
        if cap is None:
            return bits
        treated = [int(i) for i in obj.sample_ids if bits[int(i)]]
        while len(treated) > cap:
            drop = treated.pop(int(rng.integers(len(treated))))
            bits[drop] = 0
        return bits

    starts = []
    if init_assignment is not None:
        init = np.asarray(init_assignment, dtype=np.int64)
        if init.shape != (n_units,) or not np.isin(init, (0, 1)).all():
            raise ConfigError("init_assignment must be a 0/1 vector over all units")
        starts.append(repair(init.copy()))
    starts.append(np.zeros(n_units, dtype=np.int64))
    direct_gain = np.zeros(n_units)
    for k, i in enumerate(obj.sample_ids):
        g = obj.flat_g[obj.offsets[k] : obj.offsets[k] + 2 * obj.widths[k]]
        direct_gain[int(i)] = g[obj.widths[k]] - g[0]
    sample_mask = np.zeros(n_units, dtype=bool)
    sample_mask[obj.sample_ids] = True
    greedy = np.zeros(n_units, dtype=np.int64)
    order = np.argsort(-direct_gain, kind="stable")
    budget = cap if cap is not None else obj.n
    for u in order:
        if direct_gain[u] > 0 and (budget > 0 or not sample_mask[u]):
            greedy[u] = 1
            if sample_mask[u]:
                budget -= 1
    starts.append(greedy)
    starts.append(repair(np.ones(n_units, dtype=np.int64)))
    while len(starts) < n_restarts + (init_assignment is not None):
        starts.append(repair(rng.integers(0, 2, size=n_units).astype(np.int64)))

    best_bits, best_val = None, -np.inf
    for s in starts:
        bits, value = _local_search(obj, neighbor_sets, s, cap)
        if value > best_val:
            best_bits, best_val = bits, value

    # Iterated kicks: perturb the incumbent, re-descend, keep strict wins.
    kick_size = max(2, n_units // 4)
    for _ in range(2 * n_restarts):
        kicked = best_bits.copy()
        flip = rng.choice(n_units, size=min(kick_size, n_units), replace=False)
        kicked[flip] = 1 - kicked[flip]
        bits, value = _local_search(obj, neighbor_sets, repair(kicked), cap)
        if value > best_val:
            best_bits, best_val = bits, value

    if policy_class.kind == "explicit_assignment":
        assignment = best_bits
        return SolveResult(
            policy=ExplicitAssignmentPolicy(assignment),
            assignment=assignment,
            objective=float(best_val),
            backend="heuristic",
            certificate=False,
            nodes_explored=len(starts),
            wall_time=time.perf_counter() - start,
        )

    dim = dataset.X.shape[1]
    box = policy_class.bounds(dim + 1)
    candidates = [
        np.concatenate([[1.0], np.zeros(dim)]),
        np.concatenate([[-1.0], np.zeros(dim)]),
    ]
    labels = best_bits
    if 0 < labels.sum() < n_units:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            clf = LogisticRegression(C=1e6, max_iter=500).fit(dataset.X, labels)
        candidates.append(np.concatenate([clf.intercept_, clf.coef_[0]]))
    lifted = np.hstack([np.ones((n_units, 1)), dataset.X])
    subsets = list(itertools.combinations(range(n_units), dim))
    if len(subsets) > 2000:
        pick = rng.choice(len(subsets), size=2000, replace=False)
        subsets = [subsets[int(t)] for t in sorted(pick)]
    for sub in subsets:
        mat = lifted[list(sub)]
        _, _, vh = np.linalg.svd(mat)
        base = vh[-1]
        for orient in (base, -base):
            candidates.append(orient)

    cand = np.array(candidates)
    scale = np.minimum(1.0, (0.999999 * box / np.maximum(np.abs(cand), 1e-300)).min(axis=1))
    cand = cand * scale[:, None]
    patterns = (dataset.X @ cand[:, 1:].T + cand[:, 0][None, :] >= 0.0).T.astype(np.int8)
    values = obj.values(patterns)
    feasible = (
        np.ones(patterns.shape[0], dtype=bool)
        if cap is None
        else obj.treated_sample(patterns) <= cap
    )
    pick = _lex_best(patterns, values, feasible)
    if pick is None:
        raise NumericalError("no feasible candidate rule")
    assignment = patterns[pick].astype(np.int64)
    return SolveResult(
        policy=LinearThresholdPolicy(cand[pick]),
        assignment=assignment,
        objective=float(values[pick]),
        backend="heuristic",
        certificate=False,
        nodes_explored=len(starts) + patterns.shape[0],
        wall_time=time.perf_counter() - start,
    )


def maximize_welfare(
    effect_table: EffectTable,
    dataset: Dataset,
    policy_class: PolicyClass,
    capacity=None,
    backend: str = "auto",
    seed: int = 0,
) -> SolveResult:
    """Backend dispatch: cells for small-dimension linear classes,
    branch and bound for small explicit classes, heuristic otherwise."""
    if backend == "auto":
        if policy_class.kind == "linear_threshold" and dataset.X.shape[1] <= 3 and dataset.n_units <= 5000:
            backend = "cells"
        elif policy_class.kind == "explicit_assignment" and dataset.n_units <= 20:
            backend = "cells"
        elif policy_class.kind == "explicit_assignment" and dataset.n_units <= 60:
            backend = "branch_bound"
        else:
            backend = "heuristic"
    if backend == "cells":
        return solve_exact_cells(effect_table, dataset, policy_class, capacity)
    if backend == "branch_bound":
        program = encode_milp(effect_table, dataset, policy_class, capacity)
        return solve_branch_bound(program)
    if backend == "heuristic":
        return solve_heuristic(effect_table, dataset, policy_class, capacity, seed=seed)
    raise ConfigError(f"unknown backend {backend!r}")


def capacity_diagnostic(dataset: Dataset, gamma: float = 0.05, *, m=None, c_bar: float = 1.0) -> float:
    """Concentration bound on |sample treated share - population share|.

    c_bar sqrt(vc/n) + 2 m sqrt(log(2/gamma)/n) with vc = dim(x) + 1
    (linear threshold rules) and m defaulting to max degree + 1, the
    size of a dependency neighborhood.  c_bar is a universal constant
    normalized to 1 here; the bound is a relative diagnostic, not a
    sharp constant.
    """
    if not 0.0 < gamma < 1.0:
        raise ConfigError("gamma must lie in (0, 1)")
    n = dataset.sample_indices.size
    if n == 0:
        raise DataIntegrityError("capacity diagnostic needs a nonempty sample")
    vc = dataset.X.shape[1] + 1
    if m is None:
        m = int(dataset.graph.degrees().max(initial=0)) + 1
    return float(c_bar * np.sqrt(vc / n) + 2.0 * m * np.sqrt(np.log(2.0 / gamma) / n))
