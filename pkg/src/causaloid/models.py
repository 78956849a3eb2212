"""Generative model oracles with exact joint probabilities.

Classical stochastic circuits and small quantum circuits of pairwise
interacting (qu)bits, plus a mixture-of-wiring-orders fixture.  Every model
exposes one joint tensor Prob(all outcomes | all settings), computed exactly
by enumeration (classical) or density-operator propagation with instrument
branching (quantum); probability tables for arbitrary regions are slices of
this tensor.
"""

from __future__ import annotations

import itertools
import warnings
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .cards import (Card, CardSet, EMPTY_SIGNAL, Location, Program, Region,
                    RegionConfig, Stack, enumerate_configs)
from .compression import (DEFAULT_TOL, ProbabilityTable, first_level_compress,
                          greedy_pivot_rows, numerical_rank,
                          second_level_compress)
from .errors import CompressionViolationError, GateSetError, ModelFileError
from .structure import Causaloid, CausaloidDiagram

STOCHASTIC_TOL = 1e-12
COMPLETENESS_TOL = 1e-10


class InconsistentQueryWarning(UserWarning):
    """An outcome set inconsistent with its program restriction was queried."""


@dataclass(frozen=True)
class Node:
    """One gate location: its wires, alphabets, and whether it physicalizes
    its received wire values as a signal r."""

    id: Location
    wires: tuple[str, ...]
    settings: tuple[str, ...]
    outcomes: tuple[str, ...]
    receives_signal: bool = False


@dataclass(frozen=True)
class Wire:
    """A (qu)bit path: the ordered nodes it visits and its initial value."""

    name: str
    path: tuple[Location, ...]
    initial: int = 0
    num_states: int = 2


@dataclass(frozen=True)
class ClassicalGate:
    """Stochastic map: per setting, a table input-bits -> distribution over
    (output bits, outcome)."""

    tables: dict[str, dict[tuple[int, ...], tuple[tuple[tuple[int, ...], str, float], ...]]]

    def validate(self, node: Node, wire_dims: tuple[int, ...]) -> None:
        if set(self.tables) != set(node.settings):
            raise ModelFileError("GATE_SETTINGS_MISMATCH",
                                 f"gate settings {sorted(self.tables)} do not match "
                                 f"node settings {sorted(node.settings)}", str(node.id))
        for s, table in self.tables.items():
            expected_inputs = set(itertools.product(*[range(d) for d in wire_dims]))
            if set(table) != expected_inputs:
                raise ModelFileError("GATE_INPUTS_MISMATCH",
                                     f"setting {s!r} does not cover all input tuples",
                                     str(node.id))
            for inputs, rows in table.items():
                total = 0.0
                for outputs, outcome, p in rows:
                    if outcome not in node.outcomes:
                        raise ModelFileError("UNDECLARED_OUTCOME",
                                             f"outcome {outcome!r} not declared", str(node.id))
                    if len(outputs) != len(wire_dims):
                        raise ModelFileError("GATE_ARITY_MISMATCH",
                                             "output arity differs from wire count",
                                             str(node.id))
                    if p < 0:
                        raise ModelFileError("GATE_NOT_STOCHASTIC",
                                             "negative probability", str(node.id))
                    total += p
                if abs(total - 1.0) > STOCHASTIC_TOL:
                    raise ModelFileError("GATE_NOT_STOCHASTIC",
                                         f"row for input {inputs} sums to {total}",
                                         str(node.id))


@dataclass(frozen=True)
class QuantumGate:
    """An instrument: per setting, per outcome, a family of Kraus operators
    on the node's (qu)bits; outcomes together form a trace-preserving map."""

    kraus: dict[str, dict[str, tuple[np.ndarray, ...]]]

    def validate(self, node: Node, dim: int) -> None:
        if set(self.kraus) != set(node.settings):
            raise ModelFileError("GATE_SETTINGS_MISMATCH",
                                 "instrument settings do not match node settings",
                                 str(node.id))
        for s, branches in self.kraus.items():
            if set(branches) != set(node.outcomes):
                raise ModelFileError("GATE_OUTCOMES_MISMATCH",
                                     f"setting {s!r} does not cover all outcomes",
                                     str(node.id))
            total = np.zeros((dim, dim), dtype=complex)
            for outcome, operators in branches.items():
                for op in operators:
                    if op.shape != (dim, dim):
                        raise ModelFileError("GATE_DIMENSION_MISMATCH",
                                             f"Kraus operator shape {op.shape} != {(dim, dim)}",
                                             str(node.id))
                    total += op.conj().T @ op
            if np.max(np.abs(total - np.eye(dim))) > COMPLETENESS_TOL:
                raise ModelFileError("INSTRUMENT_NOT_COMPLETE",
                                     f"setting {s!r} is not trace preserving",
                                     str(node.id))


class CircuitModel:
    """Common machinery of classical and quantum circuit models."""

    kind = "abstract"

    def __init__(self, model_id: str, nodes: list[Node], wires: list[Wire],
                 gates: dict[Location, object], gate_set: tuple[str, ...] | None = None,
                 order: tuple[Location, ...] | None = None):
        self.model_id = model_id
        self.nodes = {node.id: node for node in nodes}
        self.wires = {w.name: w for w in wires}
        self.gates = dict(gates)
        self.order = tuple(order) if order is not None else tuple(sorted(self.nodes))
        all_settings = sorted({s for node in nodes for s in node.settings})
        self.gate_set = tuple(gate_set) if gate_set is not None else tuple(all_settings)
        self._validate()

    # -- validation ---------------------------------------------------------

    def _validate(self) -> None:
        if sorted(self.order) != sorted(self.nodes):
            raise ModelFileError("BAD_ORDER", "execution order must list every node once")
        position = {x: i for i, x in enumerate(self.order)}
        for w in self.wires.values():
            for x in w.path:
                if x not in self.nodes:
                    raise ModelFileError("UNDECLARED_NODE",
                                         f"wire {w.name!r} visits undeclared node {x}")
            steps = [position[x] for x in w.path]
            if steps != sorted(steps) or len(set(steps)) != len(steps):
                raise ModelFileError("WIRING_NOT_ACYCLIC",
                                     f"wire {w.name!r} does not follow the declared order")
        for node in self.nodes.values():
            if len(node.wires) > 2:
                raise ModelFileError("TOO_MANY_WIRES",
                                     f"node {node.id} carries more than two wires")
            for w in node.wires:
                if w not in self.wires or node.id not in self.wires[w].path:
                    raise ModelFileError("UNDECLARED_WIRE",
                                         f"node {node.id} references wire {w!r} that "
                                         "does not pass through it")
            for s in node.settings:
                if s not in self.gate_set:
                    raise ModelFileError("SETTING_OUTSIDE_GATE_SET",
                                         f"setting {s!r} of node {node.id} not in gate set")
        self._validate_gates()

    def _validate_gates(self) -> None:
        raise NotImplementedError

    # -- card-model protocol ------------------------------------------------

    @property
    def node_ids(self) -> tuple[Location, ...]:
        return tuple(sorted(self.nodes))

    def settings_of(self, x: Location) -> tuple[str, ...]:
        return self.nodes[x].settings

    def outcomes_of(self, x: Location) -> tuple[str, ...]:
        return self.nodes[x].outcomes

    def full_region(self) -> Region:
        return Region.of(self.model_id, self.node_ids)

    def region(self, locations) -> Region:
        return Region.of(self.model_id, locations)

    def diagram(self) -> CausaloidDiagram:
        wires = tuple(sorted((w.name, w.path) for w in self.wires.values()))
        return CausaloidDiagram(self.node_ids, wires)

    # -- the joint tensor ---------------------------------------------------

    @cached_property
    def tensor(self) -> np.ndarray:
        """Prob(all outcomes | all settings), axes: one setting axis per node
        (sorted by location id) followed by one outcome axis per node."""
        t = self._compute_tensor()
        t.setflags(write=False)
        return t

    def _compute_tensor(self) -> np.ndarray:
        raise NotImplementedError

    def _axis_permutation_to_sorted(self) -> list[int]:
        """Map [s, a interleaved in execution order] to [s sorted, a sorted]."""
        exec_pos = {x: i for i, x in enumerate(self.order)}
        s_axes = [2 * exec_pos[x] for x in self.node_ids]
        a_axes = [2 * exec_pos[x] + 1 for x in self.node_ids]
        return s_axes + a_axes


class ClassicalCircuitModel(CircuitModel):
    kind = "classical"

    def _validate_gates(self) -> None:
        for x, node in self.nodes.items():
            if x not in self.gates:
                raise ModelFileError("MISSING_GATE", f"node {x} has no gate")
            dims = tuple(self.wires[w].num_states for w in node.wires)
            self.gates[x].validate(node, dims)

    def _compute_tensor(self) -> np.ndarray:
        wire_names = tuple(sorted(self.wires))
        wire_dims = [self.wires[w].num_states for w in wire_names]
        state = np.zeros(wire_dims)
        state[tuple(self.wires[w].initial for w in wire_names)] = 1.0

        # integer axis labels for the einsum sublist interface
        wire_axis = {w: i for i, w in enumerate(wire_names)}
        next_axis = len(wire_names)
        current = state
        current_axes = [wire_axis[w] for w in wire_names]
        sa_axes = {}
        for x in self.order:
            node = self.nodes[x]
            gate_arr, out_axes_count = self._gate_array(x)
            in_axes = [wire_axis[w] for w in node.wires]
            out_axes = list(range(next_axis, next_axis + len(node.wires)))
            s_axis, a_axis = next_axis + len(node.wires), next_axis + len(node.wires) + 1
            next_axis += len(node.wires) + 2
            gate_axes = in_axes + out_axes + [s_axis, a_axis]
            result_axes = [out_axes[node.wires.index(w)] if w in node.wires else wire_axis[w]
                           for w in wire_names]
            result_axes += [ax for ax in current_axes if ax not in set(wire_axis.values())]
            result_axes += [s_axis, a_axis]
            current = np.einsum(current, current_axes, gate_arr, gate_axes, result_axes)
            # renumber: the out axes become the wire axes
            renumber = {old: wire_axis[w] for old, w in zip(out_axes, node.wires)}
            current_axes = [renumber.get(ax, ax) for ax in result_axes]
            sa_axes[x] = (s_axis, a_axis)
        # sum out the wire axes, order the rest [s sorted..., a sorted...]
        keep = [sa_axes[x][0] for x in self.node_ids] + [sa_axes[x][1] for x in self.node_ids]
        current = np.einsum(current, current_axes, keep)
        return current

    def _gate_array(self, x: Location) -> tuple[np.ndarray, int]:
        """Dense gate tensor [inputs..., outputs..., setting, outcome]."""
        node = self.nodes[x]
        dims = tuple(self.wires[w].num_states for w in node.wires)
        shape = dims + dims + (len(node.settings), len(node.outcomes))
        arr = np.zeros(shape)
        for si, s in enumerate(node.settings):
            for inputs, rows in self.gates[x].tables[s].items():
                for outputs, outcome, p in rows:
                    arr[inputs + outputs + (si, node.outcomes.index(outcome))] += p
        return arr, len(dims)

    # -- sampling -----------------------------------------------------------

    def sample_run(self, func, rng) -> list[Card]:
        wire_names = tuple(sorted(self.wires))
        state = {w: self.wires[w].initial for w in wire_names}
        cards = []
        for x in self.order:
            node = self.nodes[x]
            inputs = tuple(state[w] for w in node.wires)
            r = "".join(str(v) for v in inputs) if node.receives_signal else EMPTY_SIGNAL
            s = func(x, 0, r)
            _check_setting(self, x, s)
            rows = self.gates[x].tables[s][inputs]
            u = rng.random()
            acc = 0.0
            for outputs, outcome, p in rows:
                acc += p
                if u < acc or (outputs, outcome, p) == rows[-1]:
                    for w, v in zip(node.wires, outputs):
                        state[w] = v
                    cards.append(Card(x, 0, r, s, outcome))
                    break
        return cards


class QuantumCircuitModel(CircuitModel):
    kind = "quantum"

    def _validate_gates(self) -> None:
        if len(self.wires) > 4:
            raise ModelFileError("TOO_MANY_QUBITS", "at most 4 qubit wires supported")
        for x, node in self.nodes.items():
            if x not in self.gates:
                raise ModelFileError("MISSING_GATE", f"node {x} has no gate")
            self.gates[x].validate(node, 2 ** len(node.wires))

    def _initial_density(self) -> np.ndarray:
        wire_names = tuple(sorted(self.wires))
        index = 0
        for w in wire_names:
            index = index * 2 + self.wires[w].initial
        dim = 2 ** len(wire_names)
        rho = np.zeros((dim, dim), dtype=complex)
        rho[index, index] = 1.0
        return rho

    @cached_property
    def _embedded(self) -> dict:
        """Full-space Kraus operators per (node, setting, outcome)."""
        wire_names = tuple(sorted(self.wires))
        nq = len(wire_names)
        table = {}
        for x, node in self.nodes.items():
            positions = [wire_names.index(w) for w in node.wires]
            for s in node.settings:
                for a in node.outcomes:
                    ops = [_embed_operator(k, positions, nq)
                           for k in self.gates[x].kraus[s][a]]
                    table[(x, s, a)] = ops
        return table

    def _compute_tensor(self) -> np.ndarray:
        sorted_nodes = self.node_ids
        shape = tuple(len(self.nodes[x].settings) for x in sorted_nodes) + \
            tuple(len(self.nodes[x].outcomes) for x in sorted_nodes)
        tensor = np.zeros(shape)
        setting_lists = [self.nodes[x].settings for x in sorted_nodes]
        for s_idx in itertools.product(*[range(len(s)) for s in setting_lists]):
            chosen = {x: setting_lists[i][s_idx[i]] for i, x in enumerate(sorted_nodes)}
            frontier = {(): self._initial_density()}
            for x in self.order:
                node = self.nodes[x]
                new = {}
                for prefix, rho in frontier.items():
                    for ai, a in enumerate(node.outcomes):
                        branch = np.zeros_like(rho)
                        for op in self._embedded[(x, chosen[x], a)]:
                            branch += op @ rho @ op.conj().T
                        new[prefix + (ai,)] = branch
                frontier = new
            exec_pos = {x: i for i, x in enumerate(self.order)}
            for prefix, rho in frontier.items():
                a_idx = tuple(prefix[exec_pos[x]] for x in sorted_nodes)
                tensor[s_idx + a_idx] = float(np.real(np.trace(rho)))
        return tensor

    def sample_run(self, func, rng) -> list[Card]:
        rho = self._initial_density()
        cards = []
        for x in self.order:
            node = self.nodes[x]
            s = func(x, 0, EMPTY_SIGNAL)
            _check_setting(self, x, s)
            branches = []
            for a in node.outcomes:
                out = np.zeros_like(rho)
                for op in self._embedded[(x, s, a)]:
                    out += op @ rho @ op.conj().T
                branches.append((a, out, float(np.real(np.trace(out)))))
            probs = np.array([b[2] for b in branches])
            probs = probs / probs.sum()
            pick = int(rng.choice(len(branches), p=probs))
            a, out, weight = branches[pick]
            rho = out / weight
            cards.append(Card(x, 0, EMPTY_SIGNAL, s, a))
        return cards


def _embed_operator(op: np.ndarray, positions: list[int], nq: int) -> np.ndarray:
    """Lift an operator on a qubit subset to the full register."""
    dim = 2 ** nq
    out = np.zeros((dim, dim), dtype=complex)
    others = [q for q in range(nq) if q not in positions]
    k = len(positions)
    for i in range(dim):
        ib = [(i >> (nq - 1 - q)) & 1 for q in range(nq)]
        ki = sum(ib[p] << (k - 1 - t) for t, p in enumerate(positions))
        for j in range(dim):
            jb = [(j >> (nq - 1 - q)) & 1 for q in range(nq)]
            if any(ib[q] != jb[q] for q in others):
                continue
            kj = sum(jb[p] << (k - 1 - t) for t, p in enumerate(positions))
            out[i, j] = op[ki, kj]
    return out


class MixedOrderModel:
    """A hidden coin selects which of several wirings applies in a run.

    Components share the node set and alphabets; the joint tensor is the
    convex combination of the component tensors.
    """

    kind = "mixed"

    def __init__(self, model_id: str, components: list[CircuitModel],
                 weights: list[float]):
        if len(components) < 2 or len(components) != len(weights):
            raise ModelFileError("BAD_MIXTURE", "need one weight per component, >= 2 components")
        if any(w < 0 for w in weights) or abs(sum(weights) - 1.0) > 1e-12:
            raise ModelFileError("BAD_MIXTURE", f"weights must be >= 0 and sum to 1")
        base = components[0]
        for comp in components[1:]:
            if comp.node_ids != base.node_ids:
                raise ModelFileError("BAD_MIXTURE", "components declare different nodes")
            for x in base.node_ids:
                if (comp.settings_of(x) != base.settings_of(x)
                        or comp.outcomes_of(x) != base.outcomes_of(x)):
                    raise ModelFileError("BAD_MIXTURE",
                                         f"alphabets differ at node {x}")
        self.model_id = model_id
        self.components = list(components)
        self.weights = list(weights)
        self.gate_set = base.gate_set

    @property
    def node_ids(self):
        return self.components[0].node_ids

    def settings_of(self, x):
        return self.components[0].settings_of(x)

    def outcomes_of(self, x):
        return self.components[0].outcomes_of(x)

    def full_region(self) -> Region:
        return Region.of(self.model_id, self.node_ids)

    def region(self, locations) -> Region:
        return Region.of(self.model_id, locations)

    def diagram(self) -> CausaloidDiagram:
        wires = []
        for i, comp in enumerate(self.components):
            for w in sorted(comp.wires):
                wires.append((f"{i}:{w}", comp.wires[w].path))
        return CausaloidDiagram(self.node_ids, tuple(wires))

    @cached_property
    def tensor(self) -> np.ndarray:
        t = sum(w * comp.tensor for w, comp in zip(self.weights, self.components))
        t = np.asarray(t)
        t.setflags(write=False)
        return t

    def sample_run(self, func, rng) -> list[Card]:
        pick = int(rng.choice(len(self.components), p=np.array(self.weights)))
        return self.components[pick].sample_run(func, rng)


ModelOracle = ClassicalCircuitModel | QuantumCircuitModel | MixedOrderModel


def _check_setting(model, x: Location, s: str) -> None:
    if s not in model.gate_set or s not in model.nodes[x].settings:
        raise GateSetError(f"setting {s!r} at node {x} outside the gate set")


# ---------------------------------------------------------------------------
# Oracle queries


def joint_probability(model: ModelOracle, outcome_set, program_restriction) -> float:
    """Exact Prob(Y_R | F_R) for a full-region program.

    Accepts card sets or plain dicts {x: symbol}.  Settings must cover every
    node; outcomes may cover a subset (the rest is marginalized).  An outcome
    set inconsistent with the program restriction yields 0 with a warning.
    """
    outcomes, settings, consistent = _as_dicts(model, outcome_set, program_restriction)
    if not consistent:
        warnings.warn("outcome set inconsistent with program restriction",
                      InconsistentQueryWarning, stacklevel=2)
        return 0.0
    nodes = model.node_ids
    missing = [x for x in nodes if x not in settings]
    if missing:
        raise ValueError(f"program restriction must cover every node; missing {missing}")
    t = model.tensor
    s_index = tuple(model.settings_of(x).index(settings[x]) for x in nodes)
    sub = t[s_index]
    for pos in reversed(range(len(nodes))):
        x = nodes[pos]
        if x in outcomes:
            sub = np.take(sub, model.outcomes_of(x).index(outcomes[x]), axis=pos)
        else:
            sub = sub.sum(axis=pos)
    return float(sub)


def _as_dicts(model, outcome_set, program_restriction):
    if isinstance(outcome_set, dict):
        return dict(outcome_set), dict(program_restriction), True
    outcomes, settings = {}, {}
    for card in program_restriction.cards:
        if card.x in settings and settings[card.x] != card.s:
            raise ValueError(f"program restriction sets two settings at {card.x}")
        settings[card.x] = card.s
    consistent = True
    for card in outcome_set.cards:
        outcomes[card.x] = card.a
        if settings.get(card.x, card.s) != card.s:
            consistent = False
    return outcomes, settings, consistent


def preparation_family(model: ModelOracle, region: Region) -> list[RegionConfig]:
    """All (outcome, setting) configurations of the region's complement with
    nonzero probability, in canonical order; these are the generalized
    preparations used as table columns."""
    table = region_table(model, region)
    complement = tuple(x for x in model.node_ids if x not in region.locations)
    configs = enumerate_configs(model, complement)
    return [configs[i] for i in table.col_labels]


def grouped_table(model: ModelOracle, groups: list[list[Location]],
                  drop_zero_columns: bool = True) -> ProbabilityTable:
    """Probability table with rows labelled by tuples of per-group alpha
    indices and columns by preparations on the complement of all groups."""
    nodes = model.node_ids
    n = len(nodes)
    used = [x for group in groups for x in group]
    if len(set(used)) != len(used):
        raise ValueError("groups overlap")
    group_pos = [[nodes.index(x) for x in sorted(group)] for group in groups]
    comp_pos = [i for i in range(n) if nodes[i] not in set(used)]

    perm = []
    for pos in group_pos:
        perm += [n + i for i in pos]
        perm += pos
    perm += [n + j for j in comp_pos]
    perm += comp_pos
    t = model.tensor.transpose(perm)

    group_sizes = []
    for pos in group_pos:
        size = 1
        for i in pos:
            size *= len(model.outcomes_of(nodes[i])) * len(model.settings_of(nodes[i]))
        group_sizes.append(size)
    n_rows = int(np.prod(group_sizes)) if group_sizes else 1
    mat = t.reshape(n_rows, -1)

    if len(groups) == 1:
        row_labels = tuple(range(group_sizes[0]))
    else:
        row_labels = tuple(itertools.product(*[range(s) for s in group_sizes]))
    col_labels = tuple(range(mat.shape[1]))
    if drop_zero_columns:
        keep = np.flatnonzero(mat.max(axis=0) > 0.0)
        mat = mat[:, keep]
        col_labels = tuple(int(i) for i in keep)
    return ProbabilityTable(mat, row_labels, col_labels)


def region_table(model: ModelOracle, region: Region) -> ProbabilityTable:
    """Rows: the region's alpha-indexed (outcome, program) pairs; columns:
    the nonzero preparations of the complement."""
    return grouped_table(model, [list(region.sorted_locations)])


def pair_table(model: ModelOracle, region1: Region, region2: Region) -> ProbabilityTable:
    """Rows labelled by (alpha1, alpha2) pairs, alpha1-major."""
    return grouped_table(model, [list(region1.sorted_locations),
                                 list(region2.sorted_locations)])


def composite_omega(model: ModelOracle, region: Region,
                    node_omegas: dict, tol: float = DEFAULT_TOL) -> tuple:
    """Directly computed composite fiducial set: tuples of per-node fiducial
    labels, chosen greedily among the product of the node omegas.

    Raises CompressionViolationError if the product rows cannot span the
    region's table.
    """
    nodes = region.sorted_locations
    table = grouped_table(model, [[x] for x in nodes])
    candidates = list(itertools.product(*[node_omegas[x] for x in nodes]))
    positions = [table.row_position(lab if len(nodes) > 1 else lab[0])
                 for lab in candidates]
    sub = table.matrix[positions]
    rank = numerical_rank(table.matrix, tol)
    picked = greedy_pivot_rows(sub, rank)
    if len(picked) < rank or numerical_rank(sub, tol) < rank:
        raise CompressionViolationError(
            f"composite omega of {nodes} not contained in the node-omega product")
    return tuple(sorted(candidates[i] for i in picked))


def fiducial_states(model: ModelOracle, region: Region, omega_labels,
                    nodewise: bool = False) -> np.ndarray:
    """Matrix of spanning states: one column per preparation, rows indexed by
    ``omega_labels``.

    With ``nodewise`` the labels are tuples of per-node alpha indices (the
    form produced by clumping); otherwise they are the region's own alpha
    indices.
    """
    nodes = region.sorted_locations
    if nodewise:
        table = grouped_table(model, [[x] for x in nodes])
        labels = [lab if len(nodes) > 1 else lab[0] for lab in omega_labels]
    else:
        table = region_table(model, region)
        labels = list(omega_labels)
    rows = [table.row_position(lab) for lab in labels]
    return table.matrix[rows]


# ---------------------------------------------------------------------------
# Sampling


def run_program(model: ModelOracle, program, seed: int) -> Stack:
    """One seeded sampled run; identical seeds give identical stacks."""
    func = program.func if isinstance(program, Program) else program
    for x in model.node_ids:
        node = (model.components[0].nodes[x] if isinstance(model, MixedOrderModel)
                else model.nodes[x])
        if not node.receives_signal:
            s = func(x, 0, EMPTY_SIGNAL)
            if s not in model.gate_set or s not in node.settings:
                raise GateSetError(f"setting {s!r} at node {x} outside the gate set")
    rng = np.random.default_rng(seed)
    cards = model.sample_run(func, rng)
    return CardSet.of(model.model_id, cards)


# ---------------------------------------------------------------------------
# Building the causaloid


def build_causaloid(model: ModelOracle, tol: float = DEFAULT_TOL) -> Causaloid:
    """First- and second-level compression for all nodes and linked pairs,
    assembled with the diagram and the rule set.

    Unlinked pairs are checked for hidden correlation (their Omega must be
    the product of the node Omegas); violating pairs are recorded so that
    clumping refuses to merge them.
    """
    diagram = model.diagram()
    first_level = {}
    for x in model.node_ids:
        first_level[x] = first_level_compress(
            region_table(model, model.region([x])), tol)

    links = sorted(diagram.links)
    pairwise = {}
    for x1, x2 in links:
        result = second_level_compress(
            region_table(model, model.region([x1])),
            region_table(model, model.region([x2])),
            pair_table(model, model.region([x1]), model.region([x2])),
            first_level[x1].omega, first_level[x2].omega, tol)
        pairwise[(x1, x2)] = result

    correlated = set()
    node_omegas = {x: first_level[x].omega.labels for x in model.node_ids}
    for x1, x2 in itertools.combinations(model.node_ids, 2):
        if (x1, x2) in pairwise:
            continue
        try:
            omega = composite_omega(model, model.region([x1, x2]), node_omegas, tol)
        except CompressionViolationError:
            correlated.add((x1, x2))
            continue
        if len(omega) != len(node_omegas[x1]) * len(node_omegas[x2]):
            correlated.add((x1, x2))

    sizes = {x: (len(model.outcomes_of(x)), len(model.settings_of(x)))
             for x in model.node_ids}
    return Causaloid(model.model_id, diagram, first_level, pairwise,
                     frozenset(correlated), alphabet_sizes=sizes)
