"""Synchronous Gaussian belief propagation over a factor graph.

Messages are scalar Gaussians in information form.  A factor-to-variable
message carries a precision and a mean; the variable-to-factor parameters
are derived from the stored factor-to-variable state each sweep:

    variable j -> factor f:   prec = 1/prior_var_j + sum of incoming factor
                              precisions except f's; mean = the matching
                              precision-weighted average.
    factor f -> variable i:   prec = c_i^2 / (noise_var + sum over the other
                              scope variables of c_j^2 / prec_{j->f});
                              mean = (obs - sum c_j * mean_{j->f}) / c_i.

All arithmetic is plain-float and walks the graph's canonical edge order,
so two runs over the same model are identical bit for bit.  The
distributed simulator reuses these kernels; keep them dependency-free.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Sequence

from .model import FactorGraph, LinearGaussianModel

Edge = tuple[str, str]
ScalarMessage = tuple[float, float]  # (precision, mean)

STATUS_CONVERGED = "converged"
STATUS_MAX_ITERS = "max-iters"
STATUS_DIVERGED = "diverged"

DEFAULT_TOLERANCE = 1e-10
DEFAULT_MAX_ITERS = 10000
DIVERGENCE_GUARD = 1e12

INIT_ZERO = "zero"
INIT_LOWER = "lower"
INIT_UPPER = "upper"
INIT_EXPLICIT = "explicit"


@dataclass(frozen=True)
class InitStrategy:
    """Initial factor-to-variable message assignment.

    ``lower``/``upper`` start from the closed-form envelope of the
    precision recursion (see :func:`edge_bound_dicts`); ``explicit`` takes
    per-edge values, nonnegative precisions required, missing edges
    defaulting to zero.
    """

    kind: str
    precisions: Mapping[Edge, float] | None = None
    means: Mapping[Edge, float] | None = None

    @classmethod
    def zero(cls) -> "InitStrategy":
        return cls(INIT_ZERO)

    @classmethod
    def lower_bound(cls) -> "InitStrategy":
        return cls(INIT_LOWER)

    @classmethod
    def upper_bound(cls) -> "InitStrategy":
        return cls(INIT_UPPER)

    @classmethod
    def explicit(
        cls,
        precisions: Mapping[Edge, float],
        means: Mapping[Edge, float] | None = None,
    ) -> "InitStrategy":
        return cls(INIT_EXPLICIT, precisions=precisions, means=means)


@dataclass
class MessageState:
    """Factor-to-variable messages after ``iteration`` sweeps."""

    precisions: dict[Edge, float]
    means: dict[Edge, float]
    iteration: int = 0


@dataclass(frozen=True)
class BeliefSet:
    """Per-variable marginal estimates at some sweep."""

    variances: dict[str, float]
    means: dict[str, float]
    iteration: int


@dataclass(frozen=True)
class RunResult:
    beliefs: BeliefSet
    state: MessageState
    status: str


def _variable_message(prior_var: float, incoming: Sequence[ScalarMessage]) -> ScalarMessage:
    precision = 1.0 / prior_var
    weighted = 0.0
    for msg_precision, msg_mean in incoming:
        precision += msg_precision
        weighted += msg_precision * msg_mean
    return precision, weighted / precision


def _factor_message(
    target_coeff: float,
    other_coeffs: Sequence[float],
    other_messages: Sequence[ScalarMessage],
    noise_var: float,
    obs: float,
) -> ScalarMessage:
    total_var = noise_var
    residual = obs
    for coeff, (msg_precision, msg_mean) in zip(other_coeffs, other_messages):
        total_var += coeff * coeff / msg_precision
        residual -= coeff * msg_mean
    return target_coeff * target_coeff / total_var, residual / target_coeff


def _belief_params(prior_var: float, incoming: Sequence[ScalarMessage]) -> tuple[float, float]:
    precision = 1.0 / prior_var
    weighted = 0.0
    for msg_precision, msg_mean in incoming:
        precision += msg_precision
        weighted += msg_precision * msg_mean
    return 1.0 / precision, weighted / precision


def edge_bound_dicts(
    graph: FactorGraph, model: LinearGaussianModel
) -> tuple[dict[Edge, float], dict[Edge, float]]:
    """Per-edge envelope of the factor-to-variable precision recursion.

    Upper: c_i^2 / noise_var, the precision when the other scope variables
    are known exactly.  Lower: c_i^2 divided by the noise variance plus the
    full prior variance of every other scope variable, the precision when
    nothing else has been learned.  Every post-first-sweep iterate lies in
    between regardless of initialization.
    """
    lower: dict[Edge, float] = {}
    upper: dict[Edge, float] = {}
    for fid, vid in graph.fv_edges:
        factor = model.factors_by_id[fid]
        target = factor.coeffs[vid]
        upper[(fid, vid)] = target * target / factor.noise_var
        denom = factor.noise_var
        for other in graph.factor_neighbors[fid]:
            if other == vid:
                continue
            coeff = factor.coeffs[other]
            denom += coeff * coeff * model.prior_var(other)
        lower[(fid, vid)] = target * target / denom
    return lower, upper


def init_messages(
    graph: FactorGraph, model: LinearGaussianModel, strategy: InitStrategy
) -> MessageState:
    """Message state at iteration 0 under the given strategy."""
    if strategy.kind == INIT_ZERO:
        precisions = {edge: 0.0 for edge in graph.fv_edges}
    elif strategy.kind in (INIT_LOWER, INIT_UPPER):
        lower, upper = edge_bound_dicts(graph, model)
        precisions = lower if strategy.kind == INIT_LOWER else upper
    elif strategy.kind == INIT_EXPLICIT:
        given = dict(strategy.precisions or {})
        unknown = set(given) - set(graph.fv_edges)
        if unknown:
            raise ValueError(f"explicit init references unknown edges: {sorted(unknown)}")
        negative = [edge for edge, value in given.items() if value < 0]
        if negative:
            raise ValueError(f"explicit init has negative precisions at {sorted(negative)}")
        precisions = {edge: float(given.get(edge, 0.0)) for edge in graph.fv_edges}
    else:
        raise ValueError(f"unknown init strategy kind {strategy.kind!r}")

    if strategy.kind == INIT_EXPLICIT and strategy.means is not None:
        unknown = set(strategy.means) - set(graph.fv_edges)
        if unknown:
            raise ValueError(f"explicit init references unknown edges: {sorted(unknown)}")
        means = {edge: float(strategy.means.get(edge, 0.0)) for edge in graph.fv_edges}
    else:
        means = {edge: 0.0 for edge in graph.fv_edges}
    return MessageState(precisions=precisions, means=means, iteration=0)


def variable_to_factor(
    graph: FactorGraph,
    model: LinearGaussianModel,
    state: MessageState,
    edge: Edge,
) -> ScalarMessage:
    """Message for a directed (variable, factor) edge from the current state."""
    vid, fid = edge
    incoming = [
        (state.precisions[(other, vid)], state.means[(other, vid)])
        for other in graph.variable_neighbors[vid]
        if other != fid
    ]
    return _variable_message(model.prior_var(vid), incoming)


def factor_to_variable(
    graph: FactorGraph,
    model: LinearGaussianModel,
    state: MessageState,
    edge: Edge,
) -> ScalarMessage:
    """Next-iteration message for a directed (factor, variable) edge.

    Derives the variable-to-factor parameters of the other scope variables
    from ``state`` first, so a single call evaluates the full composed
    update for this edge.
    """
    fid, vid = edge
    factor = model.factors_by_id[fid]
    others = [v for v in graph.factor_neighbors[fid] if v != vid]
    other_msgs = [variable_to_factor(graph, model, state, (v, fid)) for v in others]
    return _factor_message(
        factor.coeffs[vid],
        [factor.coeffs[v] for v in others],
        other_msgs,
        factor.noise_var,
        factor.obs,
    )


def sweep(graph: FactorGraph, model: LinearGaussianModel, state: MessageState) -> MessageState:
    """One synchronous round: all variable-to-factor messages from the
    previous state, then all factor-to-variable messages from those."""
    vf: dict[Edge, ScalarMessage] = {}
    for vid, fid in graph.vf_edges:
        vf[(vid, fid)] = variable_to_factor(graph, model, state, (vid, fid))

    precisions: dict[Edge, float] = {}
    means: dict[Edge, float] = {}
    for fid, vid in graph.fv_edges:
        factor = model.factors_by_id[fid]
        others = [v for v in graph.factor_neighbors[fid] if v != vid]
        precision, mean = _factor_message(
            factor.coeffs[vid],
            [factor.coeffs[v] for v in others],
            [vf[(v, fid)] for v in others],
            factor.noise_var,
            factor.obs,
        )
        precisions[(fid, vid)] = precision
        means[(fid, vid)] = mean
    return MessageState(precisions=precisions, means=means, iteration=state.iteration + 1)


def compute_beliefs(
    graph: FactorGraph, model: LinearGaussianModel, state: MessageState
) -> BeliefSet:
    """Marginal estimates from the current messages.

    An isolated variable keeps its prior.  Estimates are exact on forests
    once messages have settled; on loopy graphs the means are exact at
    convergence while the variances are approximations.
    """
    variances: dict[str, float] = {}
    means: dict[str, float] = {}
    for vid in graph.variable_ids:
        incoming = [
            (state.precisions[(fid, vid)], state.means[(fid, vid)])
            for fid in graph.variable_neighbors[vid]
        ]
        variance, mean = _belief_params(model.prior_var(vid), incoming)
        variances[vid] = variance
        means[vid] = mean
    return BeliefSet(variances=variances, means=means, iteration=state.iteration)


def max_message_delta(old: MessageState, new: MessageState) -> float:
    """Max-norm change across precisions and means, 0.0 for an edgeless graph."""
    delta = 0.0
    for edge, precision in new.precisions.items():
        dp = abs(precision - old.precisions[edge])
        if dp > delta:
            delta = dp
        dm = abs(new.means[edge] - old.means[edge])
        if dm > delta:
            delta = dm
    return delta


def state_diverged(state: MessageState) -> bool:
    for mean in state.means.values():
        if not math.isfinite(mean) or abs(mean) > DIVERGENCE_GUARD:
            return True
    return False


def step_status(old: MessageState, new: MessageState, tolerance: float) -> str | None:
    """Outcome of one sweep: diverged, converged, or None to continue.

    The simulator calls this with its own mirrored states; engine and
    simulator must share the exact comparison sequence.
    """
    if state_diverged(new):
        return STATUS_DIVERGED
    if max_message_delta(old, new) < tolerance:
        return STATUS_CONVERGED
    return None


def run(
    graph: FactorGraph,
    model: LinearGaussianModel,
    strategy: InitStrategy | None = None,
    tolerance: float = DEFAULT_TOLERANCE,
    max_iters: int = DEFAULT_MAX_ITERS,
) -> RunResult:
    """Sweep until messages settle, the guard trips, or the budget runs out."""
    if tolerance <= 0:
        raise ValueError("tolerance must be positive")
    if max_iters < 1:
        raise ValueError("max_iters must be at least 1")
    state = init_messages(graph, model, strategy or InitStrategy.zero())
    status = STATUS_MAX_ITERS
    for _ in range(max_iters):
        new = sweep(graph, model, state)
        outcome = step_status(state, new, tolerance)
        state = new
        if outcome is not None:
            status = outcome
            break
    return RunResult(beliefs=compute_beliefs(graph, model, state), state=state, status=status)
