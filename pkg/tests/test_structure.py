import itertools

import numpy as np
import pytest

from causaloid import library as lib
from causaloid.cards import Region
from causaloid.errors import (ClumpingError, ForeignRegionError,
                              IdentityPreconditionError)
from causaloid.models import composite_omega
from causaloid.structure import (apply_identity_chain3, apply_identity_chain4,
                                 apply_identity_product, clump,
                                 composite_r_vector, rebase_block,
                                 segment_lambda, spacetime_cost)

from conftest import built, clump_functional_residual, lambda_vs_direct


# every (model, region) pair clumping must reproduce exactly; regions cover
# full segments, segments with skipped interior nodes, and whole models
CLUMP_CASES = [
    (lib.classical_chain, (3,), [[(1,), (2,)], [(2,), (3,)], [(1,), (3,)],
                                 [(1,), (2,), (3,)]]),
    (lib.classical_chain, (4,), [[(1,), (2,), (3,)], [(2,), (3,), (4,)],
                                 [(1,), (2,), (3,), (4,)], [(1,), (2,), (4,)],
                                 [(1,), (3,), (4,)]]),
    (lib.classical_chain, (5,), [[(2,), (3,), (4,)],
                                 [(1,), (2,), (3,), (4,), (5,)],
                                 [(2,), (3,), (4,), (5,)]]),
    (lib.fanin_chain, (), [[(1,), (2,)], [(2,), (3,)], [(1,), (2,), (3,)],
                           [(1,), (3,)]]),
    (lib.diamond_grid, (), [[(1,), (2,)], [(1,), (2,), (4,)], [(2,), (4,)],
                            [(1,), (3,), (4,)]]),
    (lib.qubit_tomography_pair, (), [[(1,), (2,)]]),
    (lib.quantum_chain3, (), [[(1,), (2,)], [(2,), (3,)], [(1,), (2,), (3,)]]),
    (lib.two_qubit_bell, (), [[(1,), (3,)], [(2,), (3,)], [(1,), (2,)],
                              [(1,), (2,), (3,)]]),
    (lib.mixed_direction, (), [[(1,), (2,)], [(2,), (3,)],
                               [(1,), (2,), (3,)]]),
]

_PARAMS = [(factory, args, nodes)
           for factory, args, regions in CLUMP_CASES for nodes in regions]


@pytest.mark.parametrize("factory,args,nodes", _PARAMS,
                         ids=lambda v: getattr(v, "__name__", str(v)))
def test_clump_is_functionally_exact(factory, args, nodes):
    model, causaloid = built(factory, *args)
    lam = clump(causaloid, model.region(nodes))
    worst = clump_functional_residual(model, causaloid, lam, nodes)
    assert worst < 1e-9


def test_clump_refuses_hidden_correlation():
    model, causaloid = built(lib.diamond_grid)
    # nodes 2 and 3 are unlinked but correlated through their common source
    with pytest.raises(ClumpingError, match="hidden correlation"):
        clump(causaloid, model.region([(2,), (3,)]))
    model, causaloid = built(lib.fanout_common_cause)
    with pytest.raises(ClumpingError):
        clump(causaloid, model.region([(2,), (3,)]))


def test_clump_refuses_cyclic_components():
    model, causaloid = built(lib.mixed_triangle)
    with pytest.raises(ClumpingError):
        clump(causaloid, model.region(model.node_ids))


def test_clump_rejects_foreign_region():
    _, causaloid = built(lib.classical_chain, 3)
    with pytest.raises(ForeignRegionError):
        clump(causaloid, Region.of("someone-else", [(1,)]))


def test_pair_block_orientation_round_trip():
    model, causaloid = built(lib.classical_chain, 4)
    fwd = causaloid.pair_block(((2,), (3,)))
    rev = causaloid.pair_block(((3,), (2,)))
    assert rev.nodes == ((3,), (2,))
    assert rev.reversed().omega_pair == fwd.omega_pair
    assert np.allclose(rev.reversed().matrix, fwd.matrix)
    # reversing relabels columns consistently: entry for (l2, l1) against
    # row (o2, o1) must equal the forward entry for (l1, l2) against (o1, o2)
    n1, n2 = len(fwd.omega1), len(fwd.omega2)
    for i, j in itertools.product(range(n1), range(n2)):
        fcol = fwd.matrix[:, i * n2 + j]
        rcol = rev.matrix[:, j * n1 + i]
        for row_idx, (o1, o2) in enumerate(fwd.omega_pair):
            rrow = rev.omega_pair.index((o2, o1))
            assert rcol[rrow] == fcol[row_idx]


def test_rebase_block_is_an_exact_basis_change():
    model, causaloid = built(lib.classical_chain, 4)
    block = causaloid.pair_block(((2,), (3,)))
    rebased = rebase_block(block)
    # rows factor as near x far
    near = tuple(dict.fromkeys(l[0] for l in rebased.omega_pair))
    far = tuple(dict.fromkeys(l[1] for l in rebased.omega_pair))
    assert set(rebased.omega_pair) == set(itertools.product(near, far))
    # basis columns of the stored matrix times the new matrix give it back
    n2 = len(block.omega2)
    cols = [block.omega1.index(a) * n2 + block.omega2.index(b)
            for a, b in rebased.omega_pair]
    basis = block.matrix[:, cols]
    assert np.max(np.abs(basis @ rebased.matrix - block.matrix)) < 1e-9


def test_segment_lambda_matches_clump_on_a_path():
    model, causaloid = built(lib.classical_chain, 4)
    blocks = [causaloid.pair_block(((1,), (2,))),
              causaloid.pair_block(((2,), (3,))),
              causaloid.pair_block(((3,), (4,)))]
    lam = segment_lambda(blocks).canonical()
    worst = clump_functional_residual(model, causaloid, lam,
                                      [(1,), (2,), (3,), (4,)])
    assert worst < 1e-9


def test_three_chain_identity_on_singleton_far_blocks():
    model, causaloid = built(lib.noisy_chain, 5)
    for path in [((2,), (3,), (4,)), ((1,), (2,), (3,))]:
        b12 = causaloid.pair_block((path[0], path[1]))
        b23 = rebase_block(causaloid.pair_block((path[1], path[2])))
        lam = apply_identity_chain3(b12, b23)
        assert lambda_vs_direct(model, path, lam) < 1e-9


def test_four_chain_identity_on_singleton_far_blocks():
    model, causaloid = built(lib.noisy_chain, 6)
    path = ((2,), (3,), (4,), (5,))
    b12 = causaloid.pair_block((path[0], path[1]))
    b23 = rebase_block(causaloid.pair_block((path[1], path[2])))
    b34 = rebase_block(causaloid.pair_block((path[2], path[3])))
    lam = apply_identity_chain4(b12, b23, b34)
    assert lambda_vs_direct(model, path, lam) < 1e-9


def test_product_identity_on_an_unlinked_pair():
    model, causaloid = built(lib.noisy_chain, 4)
    lam1 = clump(causaloid, model.region([(1,)]))
    lam3 = clump(causaloid, model.region([(3,)]))
    om13 = composite_omega(model, model.region([(1,), (3,)]),
                           {x: causaloid.omega_of(x) for x in model.node_ids})
    lam13 = apply_identity_product(lam1, lam3, omega_check=om13)
    assert lambda_vs_direct(model, ((1,), (3,)), lam13) < 1e-9


def test_chain_identity_precondition_violation_is_detected():
    model, causaloid = built(lib.mixed_triangle)
    b21 = causaloid.pair_block(((2,), (1,)))
    b13 = rebase_block(causaloid.pair_block(((1,), (3,))))
    om = composite_omega(model, model.region([(1,), (2,), (3,)]),
                         {x: causaloid.omega_of(x) for x in model.node_ids})
    # composite labels come in sorted node order; the path runs 2 -> 1 -> 3
    path_labels = tuple((lab[1], lab[0], lab[2]) for lab in om)
    with pytest.raises(IdentityPreconditionError):
        apply_identity_chain3(b21, b13, omega123=path_labels)


def test_product_identity_precondition_violation_is_detected():
    model, causaloid = built(lib.mixed_direction)
    lam1 = clump(causaloid, model.region([(1,)]))
    lam3 = clump(causaloid, model.region([(3,)]))
    with pytest.raises((IdentityPreconditionError, Exception)):
        om13 = composite_omega(model, model.region([(1,), (3,)]),
                               {x: causaloid.omega_of(x)
                                for x in model.node_ids})
        apply_identity_product(lam1, lam3, omega_check=om13)


def test_clump_result_is_order_independent():
    model, causaloid = built(lib.noisy_chain, 4)
    region = model.region([(1,), (3,)])
    a = clump(causaloid, region)
    b = clump(causaloid, region, component_order=[1, 0])
    assert a.row_labels == b.row_labels
    assert a.col_labels == b.col_labels
    assert np.allclose(a.matrix, b.matrix)


def test_spacetime_cost_counts_locations():
    model, _ = built(lib.classical_chain, 5)
    assert spacetime_cost(model.region(model.node_ids)) == 5
    assert spacetime_cost(model.region([(2,), (4,)])) == 2
