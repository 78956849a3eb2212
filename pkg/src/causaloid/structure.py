"""The causaloid object and third-level compression.

A causaloid stores first-level Lambda matrices for every node, pairwise
Lambda matrices for every linked node pair, and the diagram.  All other
Lambda matrices are synthesized by the clumping method: the product identity
merges clumps whose Omega sets multiply, and the chain identities fold
sequential segments using only pairwise matrices.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .cards import Location, Region
from .compression import FirstLevelResult, SecondLevelResult, RVector
from .errors import (ClumpingError, ForeignRegionError, GateSetError,
                     IdentityPreconditionError)

CLUMP_FAILED = "clumping failed: region requires unstored higher-order Lambda"


@dataclass(frozen=True)
class CausaloidDiagram:
    """Nodes, wires (ordered node paths per (qu)bit) and the links between
    adjacent nodes sharing a wire.  A mixed-wiring model's diagram is the
    union of its component diagrams, so nodes may carry extra wire variants;
    the per-circuit two-wire limit is enforced on the circuit models."""

    nodes: tuple[Location, ...]
    wires: tuple[tuple[str, tuple[Location, ...]], ...]

    def __post_init__(self):
        node_set = set(self.nodes)
        for name, path in self.wires:
            for x in path:
                if x not in node_set:
                    raise ValueError(f"wire {name!r} visits undeclared node {x}")

    @property
    def links(self) -> frozenset[tuple[Location, Location]]:
        pairs = set()
        for _, path in self.wires:
            for a, b in zip(path, path[1:]):
                pairs.add(tuple(sorted((a, b))))
        return frozenset(pairs)

    def wires_at(self, x: Location) -> tuple[str, ...]:
        return tuple(name for name, path in self.wires if x in path)


@dataclass(eq=False)
class RegionLambda:
    """A Lambda matrix for a (possibly composite) region.

    Row labels are tuples of per-node fiducial labels (the composite Omega);
    column labels are tuples of per-node labels.  ``nodes`` fixes the tuple
    positions.
    """

    nodes: tuple[Location, ...]
    row_labels: tuple
    col_labels: tuple
    matrix: np.ndarray

    def __post_init__(self):
        self.matrix = np.asarray(self.matrix, dtype=float)
        if self.matrix.shape != (len(self.row_labels), len(self.col_labels)):
            raise ValueError("region lambda shape does not match labels")

    def canonical(self) -> "RegionLambda":
        """Sort row and column labels; makes results comparable across
        decomposition orders."""
        r_order = sorted(range(len(self.row_labels)), key=lambda i: self.row_labels[i])
        c_order = sorted(range(len(self.col_labels)), key=lambda j: self.col_labels[j])
        return RegionLambda(self.nodes,
                            tuple(self.row_labels[i] for i in r_order),
                            tuple(self.col_labels[j] for j in c_order),
                            self.matrix[np.ix_(r_order, c_order)])


@dataclass(eq=False)
class PairBlock:
    """Pairwise compression data for two nodes, oriented: ``nodes[0]`` first.

    ``matrix`` rows are the pairs in ``omega_pair``; columns run over
    omega1 x omega2, major in omega1.
    """

    nodes: tuple[Location, Location]
    omega1: tuple
    omega2: tuple
    omega_pair: tuple
    matrix: np.ndarray

    def __post_init__(self):
        self.matrix = np.asarray(self.matrix, dtype=float)
        expected = (len(self.omega_pair), len(self.omega1) * len(self.omega2))
        if self.matrix.shape != expected:
            raise ValueError(f"pair block shape {self.matrix.shape} != {expected}")

    def reversed(self) -> "PairBlock":
        """The same data oriented from the second node to the first."""
        n1, n2 = len(self.omega1), len(self.omega2)
        # new column (omega2[j], omega1[i]) sits at j*n1+i and copies old i*n2+j
        perm = [i * n2 + j for j in range(n2) for i in range(n1)]
        return PairBlock((self.nodes[1], self.nodes[0]),
                         self.omega2, self.omega1,
                         tuple((b, a) for a, b in self.omega_pair),
                         self.matrix[:, perm])


@dataclass(eq=False)
class OmegaStructure:
    """Omega index sets gathered for identity checks: per node, per pair,
    and (when directly computed) per composite region."""

    node_omegas: dict = field(default_factory=dict)
    pair_omegas: dict = field(default_factory=dict)
    composite_omegas: dict = field(default_factory=dict)


def omega_marginal(pair_set, keep: int) -> tuple:
    """Projection of a set of index tuples onto one kept position."""
    return tuple(sorted({t[keep] for t in pair_set}))


def _is_product(pairs, left, right) -> bool:
    return set(pairs) == set(itertools.product(left, right))


@dataclass(eq=False)
class Causaloid:
    """Stored Lambda subset, diagram and rules: everything needed to
    synthesize the Lambda matrix of any decomposable region."""

    model_id: str
    diagram: CausaloidDiagram
    first_level: dict[Location, FirstLevelResult]
    pairwise: dict[tuple[Location, Location], SecondLevelResult]
    correlated_unlinked: frozenset[tuple[Location, Location]] = frozenset()
    rules: tuple[str, ...] = ("product-identity", "chain-identity")
    # per node: (number of outcomes, number of settings); used to decode a
    # composite region's alpha index into per-node indices
    alphabet_sizes: dict = field(default_factory=dict)

    def __post_init__(self):
        for key, res in self.pairwise.items():
            x1, x2 = key
            n1 = len(self.first_level[x1].omega)
            n2 = len(self.first_level[x2].omega)
            if res.lam.matrix.shape[1] != n1 * n2:
                raise ValueError(f"pairwise lambda for {key} inconsistent with node omegas")

    def omega_of(self, x: Location) -> tuple:
        return self.first_level[x].omega.labels

    def r_vector(self, x: Location, alpha: int) -> RVector:
        return self.first_level[x].lam.r_vector(alpha)

    @property
    def stored_matrix_count(self) -> int:
        return len(self.first_level) + len(self.pairwise)

    def omega_structure(self) -> OmegaStructure:
        return OmegaStructure(
            node_omegas={x: res.omega.labels for x, res in self.first_level.items()},
            pair_omegas={k: res.omega12.labels for k, res in self.pairwise.items()})

    def pair_block(self, pair: tuple[Location, Location]) -> PairBlock:
        """The stored pairwise data oriented along ``pair``."""
        key = tuple(sorted(pair))
        res = self.pairwise[key]
        block = PairBlock(key, self.omega_of(key[0]), self.omega_of(key[1]),
                          res.omega12.labels, res.lam.matrix)
        return block if pair == key else block.reversed()


def spacetime_cost(region: Region) -> int:
    """The unified resource count: the number of gate locations used."""
    return len(region.locations)


@dataclass(frozen=True)
class Computer:
    """A computer is a causaloid together with a restricted gate set."""

    causaloid: Causaloid
    gate_set: frozenset[str]
    max_gates: int = 10

    def __post_init__(self):
        if len(self.gate_set) > self.max_gates:
            raise GateSetError(
                f"gate set of size {len(self.gate_set)} exceeds bound {self.max_gates}")

    def check_settings(self, settings) -> None:
        """Reject any program setting outside the gate set."""
        for s in settings:
            if s not in self.gate_set:
                raise GateSetError(f"setting {s!r} outside the computer's gate set")


# ---------------------------------------------------------------------------
# Third-level identities


def _merge_nodes(nodes_a, nodes_b):
    merged = tuple(sorted(nodes_a + nodes_b))
    src = list(nodes_a) + list(nodes_b)
    perm = tuple(src.index(x) for x in merged)
    return merged, perm


def _permute_labels(labels, perm):
    return tuple(tuple(lab[p] for p in perm) for lab in labels)


def apply_identity_product(lam_a: RegionLambda, lam_b: RegionLambda,
                           omega_check=None) -> RegionLambda:
    """When Omega sets multiply, so do Lambda matrices.

    ``omega_check``, when given, is the independently known composite Omega
    (tuples over the merged, sorted node order); the identity refuses to fire
    unless it equals the product of the two row-label sets.
    """
    if set(lam_a.nodes) & set(lam_b.nodes):
        raise ValueError("clumps overlap")
    merged, perm = _merge_nodes(lam_a.nodes, lam_b.nodes)
    rows = _permute_labels(tuple(a + b for a in lam_a.row_labels for b in lam_b.row_labels), perm)
    cols = _permute_labels(tuple(a + b for a in lam_a.col_labels for b in lam_b.col_labels), perm)
    if omega_check is not None and set(omega_check) != set(rows):
        raise IdentityPreconditionError(
            "identity precondition violated: composite Omega is not the product "
            "of the clump Omegas")
    matrix = np.kron(lam_a.matrix, lam_b.matrix)
    return RegionLambda(merged, rows, cols, matrix).canonical()


def _dense_block(block: PairBlock) -> np.ndarray:
    """Pair matrix as a dense array [row, l1, l2]."""
    n1, n2 = len(block.omega1), len(block.omega2)
    return block.matrix.reshape(len(block.omega_pair), n1, n2)


def _factored_block(block: PairBlock):
    """Rows rearranged to dense [kL, kR, l1, l2]; requires the pair Omega to
    be the product of its two projections."""
    proj_l = omega_marginal(block.omega_pair, 0)
    proj_r = omega_marginal(block.omega_pair, 1)
    if not _is_product(block.omega_pair, proj_l, proj_r):
        raise IdentityPreconditionError(
            f"identity precondition violated: Omega of pair {block.nodes} does "
            "not factor into its marginals")
    dense = _dense_block(block)
    out = np.empty((len(proj_l), len(proj_r), dense.shape[1], dense.shape[2]))
    pos = {lab: i for i, lab in enumerate(block.omega_pair)}
    for i, kl in enumerate(proj_l):
        for j, kr in enumerate(proj_r):
            out[i, j] = dense[pos[(kl, kr)]]
    return proj_l, proj_r, out


def fold_chain(blocks: list[PairBlock], composite_omega=None) -> RegionLambda:
    """Fold a sequential segment of m nodes from its m-1 pairwise blocks.

    Implements the chain identity family: the composite Lambda is a sum over
    interior fiducial labels of products of pairwise Lambdas.  Every interior
    pair's Omega set must factor into its marginals; ``composite_omega``,
    when supplied, must equal the predicted composite fiducial set (tuples in
    path order).
    """
    if not blocks:
        raise ValueError("need at least one pair block")
    path = [blocks[0].nodes[0]]
    for b in blocks:
        if b.nodes[0] != path[-1]:
            raise ValueError("blocks do not form a chain")
        path.append(b.nodes[1])
    if len(set(path)) != len(path):
        raise ValueError("chain revisits a node")
    for prev, nxt in zip(blocks, blocks[1:]):
        if prev.omega2 != nxt.omega1:
            raise ValueError("shared-node fiducial sets disagree between blocks")

    if len(blocks) == 1:
        b = blocks[0]
        rows = b.omega_pair
        cols = tuple(itertools.product(b.omega1, b.omega2))
        if composite_omega is not None and set(composite_omega) != set(rows):
            raise IdentityPreconditionError(
                "identity precondition violated: supplied composite Omega differs "
                "from the stored pair Omega")
        return RegionLambda(tuple(path), rows, cols, b.matrix)

    # dense factored forms for the interior blocks
    factored = [_factored_block(b) for b in blocks[1:]]

    # fold right to left; G axes: [k'_j, flattened k-rest, flattened l-rest]
    proj_l, proj_r, arr = factored[-1]
    rest_k = [proj_r]
    last = blocks[-1]
    rest_l_dims = len(last.omega1) * len(last.omega2)
    g = arr.reshape(len(proj_l), len(proj_r), rest_l_dims)
    for j in range(len(factored) - 2, -1, -1):
        proj_l, proj_r, arr = factored[j]
        block = blocks[j + 1]
        next_proj_l = factored[j + 1][0]
        # restrict the right l-axis to the next block's left marginal
        sel = [block.omega2.index(k) for k in next_proj_l]
        arr_res = arr[:, :, :, sel]
        g = np.einsum("abcd,def->abecf", arr_res, g)
        rest_k.insert(0, proj_r)
        g = g.reshape(len(proj_l),
                      g.shape[1] * g.shape[2],
                      g.shape[3] * g.shape[4])

    first = blocks[0]
    dense0 = _dense_block(first)
    next_proj_l = factored[0][0]
    sel = [first.omega2.index(k) for k in next_proj_l]
    dense0_res = dense0[:, :, sel]
    out = np.einsum("rcd,def->recf", dense0_res, g)
    n_rows = out.shape[0] * out.shape[1]
    n_cols = out.shape[2] * out.shape[3]
    matrix = out.reshape(n_rows, n_cols)

    rows = tuple(pair + rest
                 for pair in first.omega_pair
                 for rest in itertools.product(*rest_k))
    node_omegas = [first.omega1] + [b.omega2 for b in blocks]
    cols = tuple(itertools.product(*node_omegas))
    if composite_omega is not None and set(composite_omega) != set(rows):
        raise IdentityPreconditionError(
            "identity precondition violated: composite Omega does not equal the "
            "product structure predicted by the chain identity")
    return RegionLambda(tuple(path), rows, cols, matrix)


def apply_identity_chain3(block12: PairBlock, block23: PairBlock,
                          omega123=None) -> RegionLambda:
    """Three-node chain identity: sum over the middle marginal of products of
    the two pairwise Lambdas."""
    return fold_chain([block12, block23], composite_omega=omega123)


def apply_identity_chain4(block12: PairBlock, block23: PairBlock,
                          block34: PairBlock, omega1234=None) -> RegionLambda:
    """Four-node chain identity: double sum over the two interior marginals."""
    return fold_chain([block12, block23, block34], composite_omega=omega1234)


# ---------------------------------------------------------------------------
# Exact wire-segment contraction
#
# The literal chain identities above require Omega-set product conditions
# that stored greedy fiducial choices rarely satisfy on open segment ends,
# and the composite condition cannot even be checked from stored data.  The
# clumping method therefore uses an equivalent exact contraction: every pair
# block except the first is re-expressed over a fiducial basis of the form
# (free label on the near node, one fixed label on the far node).  Chained
# substitution of these exact expansions synthesizes the segment Lambda with
# no precondition beyond the existence of such a basis.


def rebase_block(block: PairBlock, tol: float = 1e-9) -> PairBlock:
    """Change the pair's fiducial rows to a product set K1 x K2 with the
    smallest possible factor on the second node.

    The new rows are existing columns of the stored matrix, so this is pure
    basis change on stored data.  Rows come out near-label major.  Raises
    ClumpingError when no product basis is invertible.
    """
    r = len(block.omega_pair)
    n1, n2 = len(block.omega1), len(block.omega2)
    for d_far in range(1, n2 + 1):
        if r % d_far:
            continue
        d_near = r // d_far
        if d_near > n1:
            continue
        for k_far in itertools.combinations(range(n2), d_far):
            for k_near in itertools.combinations(range(n1), d_near):
                idx = [i1 * n2 + i2 for i1 in k_near for i2 in k_far]
                basis = block.matrix[:, idx]
                scale = max(1.0, np.abs(basis).max())
                if np.linalg.matrix_rank(basis, tol=tol * scale) < r:
                    continue
                new_matrix = np.linalg.solve(basis, block.matrix)
                rows = tuple((block.omega1[i1], block.omega2[i2])
                             for i1 in k_near for i2 in k_far)
                return PairBlock(block.nodes, block.omega1, block.omega2,
                                 rows, new_matrix)
    raise ClumpingError(
        CLUMP_FAILED + f" (no product fiducial basis for pair {block.nodes})")


def segment_lambda(blocks: list[PairBlock], tol: float = 1e-9) -> RegionLambda:
    """Exact Lambda matrix of a linked path from its pairwise blocks.

    Rows are tuples in path order: the first pair's fiducial pairs extended
    by the fixed labels of the rebased interior blocks; columns run over the
    product of the node fiducial sets.
    """
    if not blocks:
        raise ValueError("need at least one pair block")
    path = [blocks[0].nodes[0]]
    for b in blocks:
        if b.nodes[0] != path[-1]:
            raise ValueError("blocks do not form a chain")
        path.append(b.nodes[1])
    if len(set(path)) != len(path):
        raise ValueError("chain revisits a node")
    for prev, nxt in zip(blocks, blocks[1:]):
        if prev.omega2 != nxt.omega1:
            raise ValueError("shared-node fiducial sets disagree between blocks")

    first = blocks[0]
    cols = tuple(itertools.product(*([first.omega1] + [b.omega2 for b in blocks])))
    if len(blocks) == 1:
        rows = first.omega_pair
        return RegionLambda(tuple(path), rows, cols, first.matrix.copy())

    rebased = [rebase_block(b, tol) for b in blocks[1:]]

    def factors(blk):
        near = tuple(dict.fromkeys(lab[0] for lab in blk.omega_pair))
        far = tuple(dict.fromkeys(lab[1] for lab in blk.omega_pair))
        return near, far

    last = rebased[-1]
    near, far = factors(last)
    # axes: [near free label, surviving far row labels, column labels]
    current = last.matrix.reshape(
        len(near), len(far), len(last.omega1) * len(last.omega2))
    far_labels = [far]
    for blk in reversed(rebased[:-1]):
        n1, n2 = len(blk.omega1), len(blk.omega2)
        b_near, b_far = factors(blk)
        sel = [blk.omega2.index(k) for k in near]
        a = blk.matrix.reshape(len(b_near), len(b_far), n1, n2)[:, :, :, sel]
        current = np.einsum("nfck,kFT->nfFcT", a, current).reshape(
            len(b_near), len(b_far) * current.shape[1], n1 * current.shape[2])
        near = b_near
        far_labels.insert(0, b_far)
    n1, n2 = len(first.omega1), len(first.omega2)
    sel = [first.omega2.index(k) for k in near]
    a = first.matrix.reshape(len(first.omega_pair), n1, n2)[:, :, sel]
    out = np.einsum("rck,kFT->rFcT", a, current).reshape(
        len(first.omega_pair) * current.shape[1], n1 * current.shape[2])
    rows = tuple(pair + trail
                 for pair in first.omega_pair
                 for trail in itertools.product(*far_labels))
    return RegionLambda(tuple(path), rows, cols, out)


# ---------------------------------------------------------------------------
# Clumping


def _identity_clump(causaloid: Causaloid, x: Location) -> RegionLambda:
    omega = causaloid.omega_of(x)
    labels = tuple((l,) for l in omega)
    return RegionLambda((x,), labels, labels, np.eye(len(omega)))


def _path_order(component: list[Location], links) -> list[Location]:
    adj = {x: [] for x in component}
    for a, b in itertools.combinations(sorted(component), 2):
        if (a, b) in links:
            adj[a].append(b)
            adj[b].append(a)
    degrees = {x: len(v) for x, v in adj.items()}
    if any(d > 2 for d in degrees.values()):
        raise ClumpingError(CLUMP_FAILED + " (branching segment)")
    ends = sorted(x for x, d in degrees.items() if d <= 1)
    if len(component) > 1 and len(ends) != 2:
        raise ClumpingError(CLUMP_FAILED + " (cyclic segment)")
    start = ends[0]
    order = [start]
    prev = None
    while len(order) < len(component):
        nxt = [y for y in adj[order[-1]] if y != prev]
        prev = order[-1]
        order.append(nxt[0])
    return order


def _fold_component(causaloid: Causaloid, component: list[Location]) -> RegionLambda:
    if len(component) == 1:
        return _identity_clump(causaloid, component[0])
    order = _path_order(component, causaloid.diagram.links)
    attempts = []
    for attempt in (order, list(reversed(order))):
        blocks = [causaloid.pair_block((a, b)) for a, b in zip(attempt, attempt[1:])]
        attempts.append((attempt, blocks))
    # a smaller first-pair fiducial set gives a tighter (often minimal) row set
    attempts.sort(key=lambda item: len(item[1][0].omega_pair))
    failure = None
    for attempt, blocks in attempts:
        try:
            folded = segment_lambda(blocks)
        except ClumpingError as exc:
            failure = exc
            continue
        merged = tuple(sorted(attempt))
        perm = tuple(attempt.index(x) for x in merged)
        return RegionLambda(merged,
                            _permute_labels(folded.row_labels, perm),
                            _permute_labels(folded.col_labels, perm),
                            folded.matrix).canonical()
    raise failure


def clump(causaloid: Causaloid, region: Region,
          component_order=None) -> RegionLambda:
    """Synthesize the Lambda matrix of a region from the stored matrices.

    The region is split into link-connected components; each component must
    be a simple wire segment (folded with the chain identities) and the
    components are merged with the product identity.  ``component_order``
    overrides the merge order; the result is order-independent.
    """
    if region.model_id != causaloid.model_id:
        raise ForeignRegionError(
            f"region of model {region.model_id!r} used with causaloid of "
            f"{causaloid.model_id!r}")
    nodes = region.sorted_locations
    if not nodes:
        raise ClumpingError("cannot clump the empty region")
    missing = [x for x in nodes if x not in causaloid.first_level]
    if missing:
        raise ClumpingError(f"nodes {missing} not covered by the causaloid")
    if len(nodes) == 1:
        fl = causaloid.first_level[nodes[0]]
        rows = tuple((l,) for l in fl.omega.labels)
        cols = tuple((a,) for a in fl.lam.col_labels)
        return RegionLambda(nodes, rows, cols, fl.lam.matrix.copy())

    links = causaloid.diagram.links
    components = _connected_components(nodes, links)
    for comp_a, comp_b in itertools.combinations(components, 2):
        for a, b in itertools.product(comp_a, comp_b):
            if tuple(sorted((a, b))) in causaloid.correlated_unlinked:
                raise ClumpingError(
                    CLUMP_FAILED + f" (unlinked pair {tuple(sorted((a, b)))} "
                    "carries hidden correlation)")

    parts = [_fold_component(causaloid, comp) for comp in components]
    if component_order is not None:
        parts = [parts[i] for i in component_order]
    result = parts[0]
    for part in parts[1:]:
        result = apply_identity_product(result, part)
    return result.canonical()


def _connected_components(nodes, links) -> list[list[Location]]:
    remaining = set(nodes)
    components = []
    while remaining:
        seed = min(remaining)
        seen = {seed}
        frontier = [seed]
        while frontier:
            current = frontier.pop()
            for other in list(remaining):
                if other not in seen and tuple(sorted((current, other))) in links:
                    seen.add(other)
                    frontier.append(other)
        components.append(sorted(seen))
        remaining -= seen
    return sorted(components)


def composite_r_vector(region_lambda: RegionLambda, r_vectors: dict) -> RVector:
    """Apply first-level r-vectors through a clumped Lambda:
    the composite r-vector of one per-node alpha assignment.

    ``r_vectors`` maps each node of the region to that node's RVector.
    """
    coeffs = np.ones(1)
    for x in region_lambda.nodes:
        coeffs = np.kron(coeffs, r_vectors[x].values)
    # columns of a clumped multi-node lambda run over the product of the
    # node omegas in sorted node order, which is exactly the kron order
    values = region_lambda.matrix @ coeffs
    label = tuple(r_vectors[x].label for x in region_lambda.nodes)
    return RVector(values, region_lambda.row_labels, label)
