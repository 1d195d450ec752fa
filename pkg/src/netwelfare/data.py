"""Dataset container, CSV loaders, experiment configuration, exposure buckets.

The on-disk format is two CSVs.  Nodes: ``id,Y,D,Z1..Zp,role[,rho]``
with 0-based consecutive ids, ``role`` in {sample, target}, and Y/D
allowed empty only on target rows.  Edges: ``src,dst`` (see
``netwelfare.graph``).  Experiment settings live in a flat ``key = value``
file; see ``ExperimentConfig`` for the key list.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, fields, replace

import numpy as np

from .errors import ConfigError, DataIntegrityError
from .graph import Graph, read_edge_csv

__all__ = [
    "ExperimentConfig",
    "Dataset",
    "UnitRecord",
    "load_dataset",
    "write_nodes_csv",
    "exposure_bucket",
    "validate_tau",
]

_ESTIMATORS = ("aipw", "ipw", "plugin")
_BACKENDS = ("auto", "cells", "branch_bound", "heuristic")


@dataclass
class ExperimentConfig:
    """Settings shared by the CLI and the high-level learner.

    File keys (flat ``key = value``, ``#`` comments, lists comma
    separated): ``x_columns``, ``interference_degree``, ``tau``,
    ``trim``, ``capacity``, ``policy_kind``, ``coef_box``,
    ``directed``, ``seed``, ``estimator``, ``backend``,
    ``crossfit_radius``.
    """

    x_columns: list[str] | None = None
    interference_degree: int = 1
    tau: list[float] | None = None
    trim: float = 0.0
    capacity: float | None = None
    policy_kind: str = "linear_threshold"
    coef_box: float | list[float] = 1.0
    directed: bool = False
    seed: int | None = None
    estimator: str = "aipw"
    backend: str = "auto"
    crossfit_radius: int | None = None

    def __post_init__(self) -> None:
        if self.interference_degree not in (1, 2):
            raise ConfigError("interference_degree must be 1 or 2")
        if self.policy_kind not in ("linear_threshold", "explicit_assignment"):
            raise ConfigError("policy_kind must be linear_threshold or explicit_assignment")
        if not 0.0 <= self.trim < 1.0:
            raise ConfigError("trim must lie in [0, 1)")
        if self.capacity is not None and not 0.0 < self.capacity <= 1.0:
            raise ConfigError("capacity must lie in (0, 1]")
        if self.tau is not None:
            validate_tau(self.tau)
        if self.estimator not in _ESTIMATORS:
            raise ConfigError(f"estimator must be one of {_ESTIMATORS}")
        if self.backend not in _BACKENDS:
            raise ConfigError(f"backend must be one of {_BACKENDS}")
        if self.crossfit_radius is not None and self.crossfit_radius < 0:
            raise ConfigError("crossfit_radius must be nonnegative")
        box = self.coef_box
        for b in box if isinstance(box, list) else [box]:
            if not b > 0:
                raise ConfigError("coef_box bounds must be positive")

    @classmethod
    def from_file(cls, path, overrides: dict | None = None) -> "ExperimentConfig":
        raw: dict = {}
        with open(path) as fh:
            for lineno, line in enumerate(fh, start=1):
                line = line.split("#", 1)[0].strip()
                if not line:
                    continue
                if "=" not in line:
                    raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
                key, value = (part.strip() for part in line.split("=", 1))
                raw[key] = value
        if overrides:
            raw.update({k: v for k, v in overrides.items() if v is not None})
        return cls.from_dict(raw)

    @classmethod
    def from_dict(cls, raw: dict) -> "ExperimentConfig":
        known = {f.name: f for f in fields(cls)}
        parsed: dict = {}
        for key, value in raw.items():
            if key not in known:
                raise ConfigError(f"unknown config key {key!r}")
            parsed[key] = _parse_value(key, value)
        return cls(**parsed)

    def with_overrides(self, **kwargs) -> "ExperimentConfig":
        return replace(self, **{k: v for k, v in kwargs.items() if v is not None})

    def coef_bounds(self, n_coefs: int) -> np.ndarray:
        """Per-coefficient symmetric box half widths, length ``n_coefs``."""
        box = self.coef_box
        if isinstance(box, list):
            if len(box) != n_coefs:
                raise ConfigError(
                    f"coef_box has {len(box)} entries, policy has {n_coefs} coefficients"
                )
            return np.asarray(box, dtype=float)
        return np.full(n_coefs, float(box))


def _parse_value(key: str, value):
    """Coerce a raw config value (string from file, or native) by key."""
    if key == "x_columns":
        if isinstance(value, str):
            value = [v.strip() for v in value.split(",") if v.strip()]
        return list(value) if value is not None else None
    if key in ("tau", "coef_box"):
        if isinstance(value, str):
            parts = [v.strip() for v in value.split(",") if v.strip()]
            try:
                value = [float(v) for v in parts]
            except ValueError as exc:
                raise ConfigError(f"config key {key!r}: bad number in {parts!r}") from exc
        if key == "coef_box" and isinstance(value, (int, float)):
            return float(value)
        if key == "coef_box" and isinstance(value, list) and len(value) == 1:
            return float(value[0])
        return [float(v) for v in value] if value is not None else None
    if key == "directed":
        if isinstance(value, str):
            low = value.lower()
            if low not in ("true", "false"):
                raise ConfigError("directed must be true or false")
            return low == "true"
        return bool(value)
    if key in ("interference_degree", "seed", "crossfit_radius"):
        if value is None:
            return None
        try:
            return int(value)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"config key {key!r} must be an integer") from exc
    if key in ("trim", "capacity"):
        if value is None:
            return None
        try:
            return float(value)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"config key {key!r} must be a number") from exc
    if key in ("estimator", "backend", "policy_kind"):
        return str(value)
    return value


def validate_tau(tau) -> np.ndarray:
    arr = np.asarray(tau, dtype=float)
    if arr.ndim != 1 or arr.size == 0:
        raise ConfigError("tau must be a nonempty 1-d grid")
    if np.any(np.diff(arr) <= 0):
        raise ConfigError("tau must be strictly increasing")
    if not (0 <= arr[0] and abs(arr[-1] - 1.0) < 1e-12):
        raise ConfigError("tau must lie in [0, 1] and end at 1")
    return arr


def exposure_bucket(s: int, l: int, tau) -> int:
    """Bucket index of exposure count ``s`` among ``l`` neighbors.

    Returns the smallest ``m`` with ``tau[m] >= s / l`` (the lowest cut
    at or above the treated share; share 0 always lands in bucket 0).
    Isolated units (``l = 0``) get the reserved bucket ``len(tau)``.
    """
    arr = validate_tau(tau)
    if l == 0:
        return int(arr.size)
    if not 0 <= s <= l:
        raise ValueError(f"exposure count s={s} outside 0..{l}")
    share = s / l
    # Nudge guards equality cases computed through floating point.
    m = int(np.searchsorted(arr, share - 1e-12, side="left"))
    return min(m, int(arr.size) - 1)


@dataclass(frozen=True)
class UnitRecord:
    """Read-only view of one unit's row, mostly for inspection."""

    id: int
    y: float
    d: int
    z: np.ndarray
    x: np.ndarray
    is_sample: bool
    rho: float
    neighbors: np.ndarray


@dataclass
class Dataset:
    """Columnar experiment data plus the interference graph.

    ``Y`` is NaN and ``D`` is -1 where missing (target rows may omit
    both).  ``X`` is the policy-covariate matrix resolved from
    ``x_names`` and is available for every unit, sample or target.
    """

    graph: Graph
    Y: np.ndarray
    D: np.ndarray
    Z: np.ndarray
    z_names: list[str]
    is_sample: np.ndarray
    rho: np.ndarray
    x_names: list[str] = field(default_factory=list)
    X: np.ndarray = field(default=None)  # type: ignore[assignment]
    interference_degree: int = 1
    tau: np.ndarray | None = None

    def __post_init__(self) -> None:
        n = self.graph.n_nodes
        self.Y = np.asarray(self.Y, dtype=float)
        self.D = np.asarray(self.D, dtype=np.int64)
        self.Z = np.asarray(self.Z, dtype=float)
        self.is_sample = np.asarray(self.is_sample, dtype=bool)
        self.rho = np.asarray(self.rho, dtype=float)
        for name, arr in (("Y", self.Y), ("D", self.D), ("is_sample", self.is_sample), ("rho", self.rho)):
            if arr.shape != (n,):
                raise DataIntegrityError(f"{name} must have one entry per node")
        if self.Z.shape[0] != n:
            raise DataIntegrityError("Z must have one row per node")
        if np.isnan(self.Z).any():
            raise DataIntegrityError("covariates Z must be fully observed")
        if not self.x_names:
            self.x_names = list(self.z_names)
        if self.X is None:
            self.X = resolve_policy_covariates(self.graph, self.Z, self.z_names, self.x_names)
        sample = self.is_sample
        if np.isnan(self.Y[sample]).any():
            raise DataIntegrityError("sample units must have observed outcomes")
        d_sample = self.D[sample]
        if not np.isin(d_sample, (0, 1)).all():
            raise DataIntegrityError("sample treatment must be binary 0/1")
        d_known = self.D[self.D >= 0]
        if d_known.size and not np.isin(d_known, (0, 1)).all():
            raise DataIntegrityError("treatment must be binary where observed")
        if np.any(self.rho < 0) or np.isnan(self.rho).any():
            raise DataIntegrityError("rho weights must be nonnegative")
        if self.interference_degree not in (1, 2):
            raise ConfigError("interference_degree must be 1 or 2")
        if self.tau is not None:
            self.tau = validate_tau(self.tau)

    @property
    def n_units(self) -> int:
        return self.graph.n_nodes

    @property
    def sample_indices(self) -> np.ndarray:
        return np.flatnonzero(self.is_sample)

    @property
    def target_indices(self) -> np.ndarray:
        return np.flatnonzero(~self.is_sample)

    def unit(self, i: int) -> UnitRecord:
        return UnitRecord(
            id=i,
            y=float(self.Y[i]),
            d=int(self.D[i]),
            z=self.Z[i],
            x=self.X[i],
            is_sample=bool(self.is_sample[i]),
            rho=float(self.rho[i]),
            neighbors=self.graph.neighbors(i),
        )

    def restrict_sample(self, indices) -> "Dataset":
        """Same data with the estimation sample replaced by ``indices``."""
        mask = np.zeros(self.n_units, dtype=bool)
        mask[np.asarray(indices, dtype=np.int64)] = True
        if np.isnan(self.Y[mask]).any() or not np.isin(self.D[mask], (0, 1)).all():
            raise DataIntegrityError("new sample units must have observed Y and binary D")
        return Dataset(
            graph=self.graph,
            Y=self.Y,
            D=self.D,
            Z=self.Z,
            z_names=self.z_names,
            is_sample=mask,
            rho=self.rho,
            x_names=self.x_names,
            X=self.X,
            interference_degree=self.interference_degree,
            tau=self.tau,
        )


def resolve_policy_covariates(graph: Graph, Z: np.ndarray, z_names, x_names) -> np.ndarray:
    """Assemble the policy covariate matrix; ``degree`` is a virtual column."""
    cols = []
    for name in x_names:
        if name == "degree":
            cols.append(graph.degrees().astype(float))
        elif name in z_names:
            cols.append(Z[:, list(z_names).index(name)])
        else:
            raise ConfigError(f"x_columns entry {name!r} is not a covariate column")
    if not cols:
        raise ConfigError("x_columns must name at least one column")
    return np.column_stack(cols)


def _parse_cell(text: str, column: str, lineno: int):
    text = text.strip()
    if text == "":
        return math.nan
    try:
        return float(text)
    except ValueError as exc:
        raise DataIntegrityError(f"nodes row {lineno}: bad {column} value {text!r}") from exc


def load_dataset(nodes_path, edges_path, config: ExperimentConfig) -> Dataset:
    """Load node and edge CSVs into a validated :class:`Dataset`."""
    with open(nodes_path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise DataIntegrityError(f"{nodes_path}: empty file")
        header = [h.strip() for h in header]
        rows = [row for row in reader if any(cell.strip() for cell in row)]
    required = ["id", "Y", "D"]
    if header[:3] != required:
        raise ConfigError(f"{nodes_path}: header must start with id,Y,D")
    if "role" not in header:
        raise ConfigError(f"{nodes_path}: missing role column")
    role_pos = header.index("role")
    z_names = header[3:role_pos]
    has_rho = header[role_pos + 1 :] == ["rho"]
    if header[role_pos + 1 :] not in ([], ["rho"]):
        raise ConfigError(f"{nodes_path}: unexpected trailing columns {header[role_pos + 1:]}")

    n = len(rows)
    ids = np.empty(n, dtype=np.int64)
    Y = np.empty(n)
    D = np.empty(n, dtype=np.int64)
    Z = np.empty((n, len(z_names)))
    is_sample = np.empty(n, dtype=bool)
    rho = np.ones(n)
    for r, row in enumerate(rows):
        lineno = r + 2
        if len(row) != len(header):
            raise DataIntegrityError(f"nodes row {lineno}: expected {len(header)} cells")
        ids[r] = int(_parse_cell(row[0], "id", lineno))
        Y[r] = _parse_cell(row[1], "Y", lineno)
        d_raw = _parse_cell(row[2], "D", lineno)
        if math.isnan(d_raw):
            D[r] = -1
        elif d_raw in (0.0, 1.0):
            D[r] = int(d_raw)
        else:
            raise DataIntegrityError(f"nodes row {lineno}: treatment must be 0 or 1")
        for c in range(len(z_names)):
            Z[r, c] = _parse_cell(row[3 + c], z_names[c], lineno)
        role = row[role_pos].strip()
        if role not in ("sample", "target"):
            raise DataIntegrityError(f"nodes row {lineno}: role must be sample or target")
        is_sample[r] = role == "sample"
        if has_rho:
            rho[r] = _parse_cell(row[role_pos + 1], "rho", lineno)

    if sorted(ids.tolist()) != list(range(n)):
        raise DataIntegrityError(f"{nodes_path}: ids must be 0..{n - 1} without gaps")
    order = np.argsort(ids)
    Y, D, Z, is_sample, rho = Y[order], D[order], Z[order], is_sample[order], rho[order]

    graph = read_edge_csv(edges_path, n, directed=config.directed)
    x_names = config.x_columns if config.x_columns else list(z_names)
    return Dataset(
        graph=graph,
        Y=Y,
        D=D,
        Z=Z,
        z_names=list(z_names),
        is_sample=is_sample,
        rho=rho,
        x_names=list(x_names),
        X=None,
        interference_degree=config.interference_degree,
        tau=None if config.tau is None else np.asarray(config.tau, dtype=float),
    )


def write_nodes_csv(path, dataset: Dataset) -> None:
    """Write the node table back out in the loader's format."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["id", "Y", "D"] + list(dataset.z_names) + ["role", "rho"])
        for i in range(dataset.n_units):
            y = "" if math.isnan(dataset.Y[i]) else repr(float(dataset.Y[i]))
            d = "" if dataset.D[i] < 0 else str(int(dataset.D[i]))
            row = [i, y, d]
            row += [repr(float(v)) for v in dataset.Z[i]]
            row.append("sample" if dataset.is_sample[i] else "target")
            row.append(repr(float(dataset.rho[i])))
            writer.writerow(row)
