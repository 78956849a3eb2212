"""Shared fixtures and oracle helpers.

Causaloid builds are cached per session: the fixture models are immutable and
building the larger ones (chains, the 4-node grid, the two-qubit circuits)
dominates test runtime.
"""

import itertools

import numpy as np
import pytest

from causaloid import build_causaloid
from causaloid.compression import numerical_rank
from causaloid.models import grouped_table
from causaloid.structure import composite_r_vector

_BUILT = {}


def built(factory, *args):
    key = (factory.__name__,) + args
    if key not in _BUILT:
        model = factory(*args)
        _BUILT[key] = (model, build_causaloid(model))
    return _BUILT[key]


@pytest.fixture(scope="session")
def build():
    """Callable (factory, *args) -> (model, causaloid), cached."""
    return built


def clump_functional_residual(model, causaloid, region_lambda, nodes):
    """Worst reconstruction error of the synthesized Lambda over every alpha
    assignment of the region, measured against the exact nodewise table.

    This is the ground-truth check for clumping: the composite r-vector for
    each assignment, contracted with the fiducial rows, must reproduce the
    exact probability row for every preparation of the complement.
    """
    nodes = tuple(sorted(nodes))
    table = grouped_table(model, [[x] for x in nodes])
    pos = [table.row_position(lab if len(nodes) > 1 else lab[0])
           for lab in region_lambda.row_labels]
    basis = table.matrix[pos]
    sizes = [len(model.outcomes_of(x)) * len(model.settings_of(x))
             for x in nodes]
    worst = 0.0
    if len(nodes) == 1:
        # a single-node lambda stores one expansion column per alpha
        for alpha in range(sizes[0]):
            col = region_lambda.matrix[:, region_lambda.col_labels.index(
                (alpha,))]
            exact = table.matrix[table.row_position(alpha)]
            worst = max(worst, float(np.max(np.abs(col @ basis - exact))))
        return worst
    for alphas in itertools.product(*(range(s) for s in sizes)):
        rv = composite_r_vector(
            region_lambda,
            {x: causaloid.r_vector(x, a) for x, a in zip(nodes, alphas)})
        exact = table.matrix[table.row_position(
            tuple(alphas) if len(nodes) > 1 else alphas[0])]
        worst = max(worst, float(np.max(np.abs(rv.values @ basis - exact))))
    return worst


def direct_lambda(model, nodes, rows):
    """Unique expansion coefficients of the nodewise table over ``rows``.

    Asserts the rows are independent and span the table, so the expansion is
    the one a direct compression over that row set would produce.
    """
    table = grouped_table(model, [[x] for x in nodes])
    pos = [table.row_position(lab) for lab in rows]
    basis = table.matrix[pos]
    rank = numerical_rank(table.matrix)
    assert numerical_rank(basis) == len(rows) == rank
    coef, *_ = np.linalg.lstsq(basis.T, table.matrix.T, rcond=None)
    return table, coef  # coef[:, j] = expansion of table row j


def lambda_vs_direct(model, nodes, region_lambda):
    """Worst componentwise gap between a synthesized Lambda and the direct
    expansion over the same row labels."""
    table, coef = direct_lambda(model, list(nodes), region_lambda.row_labels)
    worst = 0.0
    for j, col in enumerate(region_lambda.col_labels):
        direct = coef[:, table.row_position(col if len(nodes) > 1 else col[0])]
        worst = max(worst, float(np.max(np.abs(
            region_lambda.matrix[:, j] - direct))))
    return worst
