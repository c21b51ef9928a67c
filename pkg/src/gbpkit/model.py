"""Scalar linear Gaussian models and their factor graphs.

A model is a set of scalar variables x_i with zero-mean Gaussian priors
(variance prior_var) and a set of scalar observations, one per factor,

    obs_n = sum_i coeff_{n,i} * x_i + noise_n,    noise_n ~ N(0, noise_var_n).

The posterior over x is Gaussian; :func:`lingauss_to_gmrf` builds its
information form and :func:`build_factor_graph` the bipartite graph that
message passing runs on.
"""
from __future__ import annotations

import json
import math
from collections import deque
from dataclasses import dataclass, replace
from functools import cached_property
from typing import Iterable, Mapping, Sequence

import numpy as np

TOPOLOGY_FOREST = "forest"
TOPOLOGY_SINGLE_LOOP = "forest-plus-single-loop"
TOPOLOGY_MULTI_LOOP = "multi-loop"


class InvalidModelError(ValueError):
    """Raised when a model violates a structural invariant.

    ``violations`` lists every failed check, one message per offence.
    """

    def __init__(self, violations: Sequence[str]):
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


@dataclass(frozen=True)
class Variable:
    id: str
    prior_var: float


@dataclass(frozen=True)
class Factor:
    id: str
    coeffs: Mapping[str, float]
    noise_var: float
    obs: float


@dataclass(frozen=True)
class LinearGaussianModel:
    variables: tuple[Variable, ...]
    factors: tuple[Factor, ...]

    @cached_property
    def variables_by_id(self) -> dict[str, Variable]:
        return {v.id: v for v in self.variables}

    @cached_property
    def factors_by_id(self) -> dict[str, Factor]:
        return {f.id: f for f in self.factors}

    def prior_var(self, var_id: str) -> float:
        return self.variables_by_id[var_id].prior_var


@dataclass(frozen=True)
class FactorGraph:
    """Bipartite variable/factor graph with frozen canonical orderings.

    Canonical index order is position in the model's variables/factors
    arrays.  Neighbor tuples and the two directed edge lists are sorted by
    those indices: ``fv_edges`` ascending first on the factor then on the
    variable, ``vf_edges`` ascending first on the variable then on the
    factor.  Every iteration in the engine and the simulator walks these
    orderings, which is what makes runs reproducible bit for bit.
    """

    variable_ids: tuple[str, ...]
    factor_ids: tuple[str, ...]
    variable_order: Mapping[str, int]
    factor_order: Mapping[str, int]
    variable_neighbors: Mapping[str, tuple[str, ...]]
    factor_neighbors: Mapping[str, tuple[str, ...]]
    fv_edges: tuple[tuple[str, str], ...]
    vf_edges: tuple[tuple[str, str], ...]


@dataclass(frozen=True)
class GMRFModel:
    """Information form of the posterior: precision matrix and potential.

    ``information_matrix`` is symmetric positive definite for any valid
    model (positive definiteness is exercised by the dense oracle's
    Cholesky factorization).  Row/column order is the canonical variable
    order.
    """

    information_matrix: np.ndarray
    potential: np.ndarray
    variable_ids: tuple[str, ...]


@dataclass(frozen=True)
class TopologyReport:
    """Graph class plus the cyclomatic number of each connected component."""

    kind: str
    component_cycles: tuple[int, ...]

    @property
    def total_cycles(self) -> int:
        return sum(self.component_cycles)


def _is_number(x) -> bool:
    return isinstance(x, (int, float)) and not isinstance(x, bool) and math.isfinite(x)


def find_violations(model: LinearGaussianModel) -> list[str]:
    """Collect every structural violation; empty list means valid."""
    problems: list[str] = []
    seen_vars: set[str] = set()
    for v in model.variables:
        if not isinstance(v.id, str) or not v.id:
            problems.append(f"variable id {v.id!r}: must be a non-empty string")
            continue
        if v.id in seen_vars:
            problems.append(f"variable {v.id!r}: duplicate id")
        seen_vars.add(v.id)
        if not _is_number(v.prior_var) or v.prior_var <= 0:
            problems.append(f"variable {v.id!r}: prior_var must be a positive finite number")

    seen_factors: set[str] = set()
    for f in model.factors:
        if not isinstance(f.id, str) or not f.id:
            problems.append(f"factor id {f.id!r}: must be a non-empty string")
            continue
        if f.id in seen_factors:
            problems.append(f"factor {f.id!r}: duplicate id")
        seen_factors.add(f.id)
        if not _is_number(f.noise_var) or f.noise_var <= 0:
            problems.append(f"factor {f.id!r}: noise_var must be a positive finite number")
        if not _is_number(f.obs):
            problems.append(f"factor {f.id!r}: obs must be a finite number")
        for var_id, coeff in f.coeffs.items():
            if var_id not in seen_vars:
                problems.append(f"factor {f.id!r}: references unknown variable {var_id!r}")
            if not _is_number(coeff):
                problems.append(f"factor {f.id!r}: coefficient for {var_id!r} must be a finite number")
            elif coeff == 0:
                problems.append(f"factor {f.id!r}: stored zero coefficient for {var_id!r}")
    return problems


def validate_model(model: LinearGaussianModel) -> LinearGaussianModel:
    """Return the model unchanged, or raise InvalidModelError listing all violations."""
    problems = find_violations(model)
    if problems:
        raise InvalidModelError(problems)
    return model


def build_factor_graph(model: LinearGaussianModel) -> FactorGraph:
    """Build the bipartite graph with canonical edge orderings.

    The model is validated first; isolated variables are kept as nodes
    with no edges, and the graph may be disconnected.
    """
    validate_model(model)
    variable_ids = tuple(v.id for v in model.variables)
    factor_ids = tuple(f.id for f in model.factors)
    variable_order = {vid: k for k, vid in enumerate(variable_ids)}
    factor_order = {fid: k for k, fid in enumerate(factor_ids)}

    factor_neighbors = {
        f.id: tuple(sorted(f.coeffs, key=variable_order.__getitem__)) for f in model.factors
    }
    var_adj: dict[str, list[str]] = {vid: [] for vid in variable_ids}
    for fid in factor_ids:
        for vid in factor_neighbors[fid]:
            var_adj[vid].append(fid)
    variable_neighbors = {
        vid: tuple(sorted(adj, key=factor_order.__getitem__)) for vid, adj in var_adj.items()
    }

    fv_edges = tuple((fid, vid) for fid in factor_ids for vid in factor_neighbors[fid])
    vf_edges = tuple((vid, fid) for vid in variable_ids for fid in variable_neighbors[vid])
    return FactorGraph(
        variable_ids=variable_ids,
        factor_ids=factor_ids,
        variable_order=variable_order,
        factor_order=factor_order,
        variable_neighbors=variable_neighbors,
        factor_neighbors=factor_neighbors,
        fv_edges=fv_edges,
        vf_edges=vf_edges,
    )


def lingauss_to_gmrf(model: LinearGaussianModel) -> GMRFModel:
    """Information form of the posterior.

    J = C^T diag(1/noise_var) C + diag(1/prior_var) and
    h = C^T diag(1/noise_var) obs, where C stacks the factor coefficient
    rows in canonical order.  J is symmetrized explicitly to scrub the
    ulp-level asymmetry a BLAS product can introduce.
    """
    validate_model(model)
    n_vars = len(model.variables)
    n_factors = len(model.factors)
    variable_order = {v.id: k for k, v in enumerate(model.variables)}

    coeff_matrix = np.zeros((n_factors, n_vars))
    noise = np.empty(n_factors)
    obs = np.empty(n_factors)
    for n, f in enumerate(model.factors):
        noise[n] = f.noise_var
        obs[n] = f.obs
        for vid, c in f.coeffs.items():
            coeff_matrix[n, variable_order[vid]] = c

    prior_prec = np.array([1.0 / v.prior_var for v in model.variables])
    if n_factors:
        info = coeff_matrix.T @ (coeff_matrix / noise[:, None]) + np.diag(prior_prec)
        potential = coeff_matrix.T @ (obs / noise)
    else:
        info = np.diag(prior_prec)
        potential = np.zeros(n_vars)
    info = (info + info.T) / 2.0
    return GMRFModel(
        information_matrix=info,
        potential=potential,
        variable_ids=tuple(v.id for v in model.variables),
    )


def classify_topology(graph: FactorGraph) -> TopologyReport:
    """Classify by per-component cyclomatic number c = E - V + 1.

    All components at c = 0 is a forest; a single extra independent cycle
    across the whole graph (total c = 1) leaves every other component a
    tree; anything beyond that is multi-loop.
    """
    nodes: list[tuple[str, str]] = [("v", vid) for vid in graph.variable_ids]
    nodes += [("f", fid) for fid in graph.factor_ids]
    adjacency: dict[tuple[str, str], list[tuple[str, str]]] = {n: [] for n in nodes}
    for fid, vid in graph.fv_edges:
        adjacency[("f", fid)].append(("v", vid))
        adjacency[("v", vid)].append(("f", fid))

    cycles: list[int] = []
    visited: set[tuple[str, str]] = set()
    for start in nodes:
        if start in visited:
            continue
        comp_nodes = 0
        comp_edge_ends = 0
        queue = deque([start])
        visited.add(start)
        while queue:
            node = queue.popleft()
            comp_nodes += 1
            comp_edge_ends += len(adjacency[node])
            for peer in adjacency[node]:
                if peer not in visited:
                    visited.add(peer)
                    queue.append(peer)
        cycles.append(comp_edge_ends // 2 - comp_nodes + 1)

    total = sum(cycles)
    if total == 0:
        kind = TOPOLOGY_FOREST
    elif total == 1:
        kind = TOPOLOGY_SINGLE_LOOP
    else:
        kind = TOPOLOGY_MULTI_LOOP
    return TopologyReport(kind=kind, component_cycles=tuple(cycles))


def with_observations(
    model: LinearGaussianModel, observations: Sequence[float] | Mapping[str, float]
) -> LinearGaussianModel:
    """Copy of the model with factor observations replaced.

    Accepts either a sequence in canonical factor order or a mapping from
    factor id; a mapping may be partial.
    """
    if isinstance(observations, Mapping):
        unknown = set(observations) - {f.id for f in model.factors}
        if unknown:
            raise KeyError(f"unknown factor ids: {sorted(unknown)}")
        new_factors = tuple(
            replace(f, obs=float(observations.get(f.id, f.obs))) for f in model.factors
        )
    else:
        if len(observations) != len(model.factors):
            raise ValueError(
                f"expected {len(model.factors)} observations, got {len(observations)}"
            )
        new_factors = tuple(
            replace(f, obs=float(y)) for f, y in zip(model.factors, observations)
        )
    return replace(model, factors=new_factors)


# --- file format ------------------------------------------------------------
#
# {"variables": [{"id": "x1", "prior_var": 2.0}, ...],
#  "factors":   [{"id": "f1", "coeffs": {"x1": 0.5, ...},
#                 "noise_var": 1.0, "obs": 0.25}, ...]}
#
# Array order defines the canonical index order.  Values round-trip as IEEE
# doubles (json emits repr, which parses back to the identical bits).


def model_to_dict(model: LinearGaussianModel) -> dict:
    return {
        "variables": [{"id": v.id, "prior_var": v.prior_var} for v in model.variables],
        "factors": [
            {
                "id": f.id,
                "coeffs": dict(f.coeffs),
                "noise_var": f.noise_var,
                "obs": f.obs,
            }
            for f in model.factors
        ],
    }


def _reject_duplicate_keys(pairs: Iterable[tuple[str, object]]) -> dict:
    out: dict = {}
    for key, value in pairs:
        if key in out:
            raise ValueError(f"duplicate key {key!r} in object")
        out[key] = value
    return out


def model_from_dict(data: dict) -> LinearGaussianModel:
    """Parse and validate; raises InvalidModelError on any shape problem."""
    problems: list[str] = []
    if not isinstance(data, dict):
        raise InvalidModelError(["top level must be an object"])
    extra = set(data) - {"variables", "factors"}
    if extra:
        problems.append(f"unknown top-level keys: {sorted(extra)}")

    variables: list[Variable] = []
    raw_vars = data.get("variables")
    if not isinstance(raw_vars, list):
        problems.append("'variables' must be an array")
        raw_vars = []
    for k, item in enumerate(raw_vars):
        if not isinstance(item, dict) or set(item) != {"id", "prior_var"}:
            problems.append(f"variables[{k}]: expected keys id, prior_var")
            continue
        variables.append(Variable(id=item["id"], prior_var=item["prior_var"]))

    factors: list[Factor] = []
    raw_factors = data.get("factors")
    if not isinstance(raw_factors, list):
        problems.append("'factors' must be an array")
        raw_factors = []
    for k, item in enumerate(raw_factors):
        if not isinstance(item, dict) or set(item) != {"id", "coeffs", "noise_var", "obs"}:
            problems.append(f"factors[{k}]: expected keys id, coeffs, noise_var, obs")
            continue
        if not isinstance(item["coeffs"], dict):
            problems.append(f"factors[{k}]: 'coeffs' must be an object")
            continue
        factors.append(
            Factor(
                id=item["id"],
                coeffs=item["coeffs"],
                noise_var=item["noise_var"],
                obs=item["obs"],
            )
        )
    if problems:
        raise InvalidModelError(problems)
    return validate_model(LinearGaussianModel(tuple(variables), tuple(factors)))


def loads_model(text: str) -> LinearGaussianModel:
    try:
        data = json.loads(text, object_pairs_hook=_reject_duplicate_keys)
    except json.JSONDecodeError as err:
        raise InvalidModelError(
            [f"parse error at line {err.lineno} column {err.colno}: {err.msg}"]
        ) from err
    except ValueError as err:
        raise InvalidModelError([str(err)]) from err
    return model_from_dict(data)


def dumps_model(model: LinearGaussianModel) -> str:
    return json.dumps(model_to_dict(model), indent=2) + "\n"


def load_model(path) -> LinearGaussianModel:
    with open(path, "r", encoding="utf-8") as fh:
        return loads_model(fh.read())


def save_model(model: LinearGaussianModel, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps_model(model))
