"""Conditional-probability queries and evolving-state reconstruction.

A query asks for the probability of one region's (outcome, program) pair
conditioned on another's.  The answer is read off two composite r-vectors:
v for the joint pair and u for the conditioning event summed over the first
region's outcomes.  The probability is well defined exactly when v is
parallel to u; otherwise only preparation-dependent bounds exist.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .cards import Location, Region, enumerate_configs
from .compression import DEFAULT_TOL, RVector, State, first_level_compress
from .errors import (ModelFileError, NonlinearEvolutionError,
                     UnconditionableError, ZeroConditioningError)
from .models import ModelOracle, grouped_table, region_table
from .structure import Causaloid, clump, composite_r_vector

DEFAULT_EPSILON = 1e-9


@dataclass(frozen=True)
class Query:
    """Ask for Prob of region1's pair alpha1 conditioned on region2's pair
    alpha2; regions must be disjoint."""

    region1: Region
    alpha1: int
    region2: Region
    alpha2: int

    def __post_init__(self):
        if self.region1.locations & self.region2.locations:
            raise ValueError("query regions overlap")


@dataclass(frozen=True)
class Verdict:
    well_defined: bool
    value: float | None
    bounds: tuple[float, float] | None
    parallelism_angle: float


def decode_alpha(alphabet_sizes: dict, nodes: tuple[Location, ...],
                 alpha: int) -> dict[Location, int]:
    """Split a region's alpha index into per-node alpha indices.

    The region index is lexicographic over (outcome tuple, setting tuple);
    a node's own index is outcome-major over its (outcome, setting) grid.
    """
    o_dims = [alphabet_sizes[x][0] for x in nodes]
    s_dims = [alphabet_sizes[x][1] for x in nodes]
    s_total = int(np.prod(s_dims))
    a_idx, s_idx = divmod(alpha, s_total)
    a_parts = np.unravel_index(a_idx, o_dims) if nodes else ()
    s_parts = np.unravel_index(s_idx, s_dims) if nodes else ()
    return {x: int(a_parts[i]) * s_dims[i] + int(s_parts[i])
            for i, x in enumerate(nodes)}


def sibling_alphas(alphabet_sizes: dict, nodes: tuple[Location, ...],
                   alpha: int) -> list[int]:
    """All alpha indices of the region sharing ``alpha``'s settings: the
    outcome sets consistent with the same program restriction."""
    s_dims = [alphabet_sizes[x][1] for x in nodes]
    o_dims = [alphabet_sizes[x][0] for x in nodes]
    s_total = int(np.prod(s_dims))
    o_total = int(np.prod(o_dims))
    s_idx = alpha % s_total
    return [a * s_total + s_idx for a in range(o_total)]


def query_vectors(causaloid: Causaloid, query: Query) -> tuple[RVector, RVector]:
    """The joint r-vector v = r_{a1 a2} and the conditioning r-vector
    u = sum over region1 outcome sets consistent with the same program."""
    region = query.region1.union(query.region2)
    lam = clump(causaloid, region)
    sizes = causaloid.alphabet_sizes
    nodes1 = query.region1.sorted_locations
    nodes2 = query.region2.sorted_locations
    per_node2 = decode_alpha(sizes, nodes2, query.alpha2)

    def composite(alpha1: int) -> RVector:
        per_node = decode_alpha(sizes, nodes1, alpha1)
        per_node.update(per_node2)
        return composite_r_vector(
            lam, {x: causaloid.r_vector(x, per_node[x]) for x in lam.nodes})

    v = composite(query.alpha1)
    total = np.zeros_like(v.values)
    for beta1 in sibling_alphas(sizes, nodes1, query.alpha1):
        total += composite(beta1).values
    u = RVector(total, v.basis, ("sum", query.alpha2))
    return v, u


def well_defined(v: RVector, u: RVector,
                 epsilon: float = DEFAULT_EPSILON) -> Verdict:
    """Parallelness test: well defined iff 1 - cos(angle(v, u)) <= epsilon;
    the value is then the length ratio |v| / |u|."""
    nu = float(np.linalg.norm(u.values))
    if nu == 0.0:
        raise ZeroConditioningError("conditioning r-vector is zero")
    nv = float(np.linalg.norm(v.values))
    if nv == 0.0:
        return Verdict(True, 0.0, (0.0, 0.0), 0.0)
    cos = float(v.values @ u.values) / (nv * nu)
    angle = float(np.arccos(np.clip(cos, -1.0, 1.0)))
    if 1.0 - cos <= epsilon:
        value = nv / nu
        return Verdict(True, value, (value, value), angle)
    return Verdict(False, None, None, angle)


def probability_bounds_literal(v: RVector, u: RVector,
                               tol: float = DEFAULT_TOL) -> tuple[float, float]:
    """Bounds from the decomposition of v into components parallel and
    perpendicular to u, taken at face value:

        lo, hi = |v_par| / |u|  -/+  |v_perp| / (|v| cos(phi))

    with phi the angle between v and v_perp.  That angle makes the second
    term collapse to one whenever both components are nonzero, so the raw
    interval is typically the vacuous ratio +/- 1; callers clamp to [0, 1]
    for reporting.  Returned unclamped.
    """
    nu = float(np.linalg.norm(u.values))
    nv = float(np.linalg.norm(v.values))
    if nu == 0.0:
        raise ZeroConditioningError("conditioning r-vector is zero")
    if nv == 0.0:
        raise ValueError("literal bounds need a nonzero joint r-vector")
    coeff = float(v.values @ u.values) / (nu * nu)
    v_par = coeff * u.values
    v_perp = v.values - v_par
    n_par = float(np.linalg.norm(v_par))
    n_perp = float(np.linalg.norm(v_perp))
    if n_perp <= tol * nv:
        ratio = nv / nu
        return ratio, ratio
    if n_par <= tol * nv:
        return 0.0, 1.0
    cos_phi = float(v.values @ v_perp) / (nv * n_perp)
    term = n_perp / (nv * cos_phi)
    return n_par / nu - term, n_par / nu + term


def clamp_bounds(bounds: tuple[float, float]) -> tuple[float, float]:
    lo, hi = bounds
    return max(0.0, min(1.0, lo)), max(0.0, min(1.0, hi))


def probability_bounds_oracle(model: ModelOracle, causaloid: Causaloid,
                              query: Query, tol: float = DEFAULT_TOL) -> tuple[float, float]:
    """Envelope of the conditional over every spanning preparation: min and
    max of (v.p)/(u.p) over preparation states p with u.p > tol."""
    from .models import fiducial_states

    v, u = query_vectors(causaloid, query)
    if not np.any(v.values):
        return 0.0, 0.0  # the ratio vanishes for every preparation
    region = query.region1.union(query.region2)
    states = fiducial_states(model, region, v.basis, nodewise=True)
    weights = u.values @ states
    numerators = v.values @ states
    ratios = [n / w for n, w in zip(numerators, weights) if w > tol]
    if not ratios:
        raise UnconditionableError("no preparation supports the conditioning event")
    return float(min(ratios)), float(max(ratios))


def answer_query(model: ModelOracle, causaloid: Causaloid, query: Query,
                 epsilon: float = DEFAULT_EPSILON,
                 tol: float = DEFAULT_TOL) -> Verdict:
    """Full verdict: parallelness test plus the oracle envelope as bounds
    when the probability is not well defined."""
    v, u = query_vectors(causaloid, query)
    verdict = well_defined(v, u, epsilon)
    if verdict.well_defined:
        return verdict
    bounds = probability_bounds_oracle(model, causaloid, query, tol)
    return Verdict(False, None, bounds, verdict.parallelism_angle)


# ---------------------------------------------------------------------------
# Evolving state over a nested family of regions


@dataclass(frozen=True)
class NestedFoliation:
    """Strictly nested regions from the full region down to the empty one,
    with a fixed (setting, outcome) assignment supplying the slice data."""

    regions: tuple[Region, ...]
    settings: dict[Location, str]
    outcomes: dict[Location, str]

    def validate(self, model: ModelOracle) -> None:
        if not self.regions:
            raise ModelFileError("FOLIATION_NOT_NESTED", "empty foliation")
        if set(self.regions[0].locations) != set(model.node_ids):
            raise ModelFileError("FOLIATION_NOT_NESTED",
                                 "first region must be the whole region")
        if self.regions[-1].locations:
            raise ModelFileError("FOLIATION_NOT_NESTED",
                                 "last region must be empty")
        for a, b in zip(self.regions, self.regions[1:]):
            if not (b.locations < a.locations):
                raise ModelFileError("FOLIATION_NOT_NESTED",
                                     "regions must be strictly nested")
        for x in model.node_ids:
            if x not in self.settings or x not in self.outcomes:
                raise ModelFileError("FOLIATION_DATA_INCOMPLETE",
                                     f"no slice data for node {x}")


@dataclass(eq=False)
class EvolutionStep:
    matrix: np.ndarray
    residual: float
    slice_nodes: tuple[Location, ...]
    dim_from: int
    dim_to: int


def _config_index(model: ModelOracle, nodes: tuple[Location, ...],
                  settings: dict, outcomes: dict) -> int:
    """Alpha index of a fully specified configuration on ``nodes``."""
    o_dims = [len(model.outcomes_of(x)) for x in nodes]
    s_dims = [len(model.settings_of(x)) for x in nodes]
    a_idx = 0
    s_idx = 0
    for i, x in enumerate(nodes):
        a_idx = a_idx * o_dims[i] + model.outcomes_of(x).index(outcomes[x])
        s_idx = s_idx * s_dims[i] + model.settings_of(x).index(settings[x])
    return a_idx * int(np.prod(s_dims)) + s_idx


def evolve_state(model: ModelOracle, foliation: NestedFoliation,
                 tol: float = DEFAULT_TOL) -> tuple[list[State], list[EvolutionStep]]:
    """Reconstruct the evolving state and its linear step maps.

    For each region R_t the state vector is the fiducial part of the region
    table (first-level compression).  The step map Z is fitted by least
    squares over all spanning preparations of R_t's complement, each extended
    by the fixed slice data; the fit residual must stay below ``tol``.
    """
    foliation.validate(model)
    all_nodes = model.node_ids

    tables = []
    compressions = []
    comp_nodes = []
    for reg in foliation.regions:
        nodes = reg.sorted_locations
        table = grouped_table(model, [list(nodes)])
        tables.append(table)
        compressions.append(first_level_compress(table, tol))
        comp_nodes.append(tuple(x for x in all_nodes if x not in reg.locations))

    states = []
    steps = []
    for t, reg in enumerate(foliation.regions):
        fl = compressions[t]
        p_matrix = tables[t].matrix[list(fl.omega.positions)]
        # the realized state: the column whose preparation matches the
        # accumulated slice data
        realized = _config_index(model, comp_nodes[t],
                                 foliation.settings, foliation.outcomes)
        try:
            col = tables[t].col_labels.index(realized)
            state_values = p_matrix[:, col]
        except ValueError:  # zero-probability preparation was dropped
            state_values = np.zeros(len(fl.omega))
        states.append(State(state_values.copy(), fl.omega.labels))

        if t + 1 == len(foliation.regions):
            break
        fl_next = compressions[t + 1]
        next_full = grouped_table(model, [list(foliation.regions[t + 1].sorted_locations)],
                                  drop_zero_columns=False)
        next_rows = next_full.matrix[list(fl_next.omega.positions)]
        configs = enumerate_configs(model, comp_nodes[t])
        target_cols = []
        for label in tables[t].col_labels:
            cfg = configs[label]
            merged_s = dict(zip(cfg.nodes, cfg.settings))
            merged_a = dict(zip(cfg.nodes, cfg.outcomes))
            for x in comp_nodes[t + 1]:
                if x not in merged_s:
                    merged_s[x] = foliation.settings[x]
                    merged_a[x] = foliation.outcomes[x]
            target_cols.append(_config_index(model, comp_nodes[t + 1],
                                             merged_s, merged_a))
        p_next = next_rows[:, target_cols]
        z_t, *_ = np.linalg.lstsq(p_matrix.T, p_next.T, rcond=None)
        z = z_t.T
        residual = float(np.max(np.abs(z @ p_matrix - p_next), initial=0.0))
        if residual >= tol:
            raise NonlinearEvolutionError(
                f"step {t} residual {residual:.3e} exceeds tolerance {tol:.3e}")
        slice_nodes = tuple(sorted(reg.locations - foliation.regions[t + 1].locations))
        steps.append(EvolutionStep(z, residual, slice_nodes,
                                   dim_from=len(fl.omega), dim_to=len(fl_next.omega)))
    return states, steps
