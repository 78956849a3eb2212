import itertools

import numpy as np
import pytest

from causaloid import library as lib
from causaloid.compression import RVector
from causaloid.errors import (ModelFileError, UnconditionableError,
                              ZeroConditioningError)
from causaloid.inference import (NestedFoliation, Query, answer_query,
                                 clamp_bounds, evolve_state,
                                 probability_bounds_literal,
                                 probability_bounds_oracle, query_vectors,
                                 sibling_alphas, well_defined)

from conftest import built


def _alpha_count(model, nodes):
    total = 1
    for x in nodes:
        total *= len(model.outcomes_of(x)) * len(model.settings_of(x))
    return total


def _wire_past_queries(model, r2_nodes):
    """All (query, region sizes) for R1 = full wire past of R2."""
    r2 = model.region(r2_nodes)
    r1 = lib.wire_past(model, r2)
    assert r1.locations, "fixture must have a nonempty wire past"
    n1 = _alpha_count(model, r1.sorted_locations)
    n2 = _alpha_count(model, r2.sorted_locations)
    return [Query(r1, a1, r2, a2)
            for a1, a2 in itertools.product(range(n1), range(n2))]


# -- well-defined conditionals on fixed-order models ------------------------

SWEEPS = [
    (lib.prep_measure_pair, (), [(2,)]),
    (lib.classical_chain, (3,), [(2,)]),
    (lib.classical_chain, (3,), [(3,)]),
    (lib.classical_chain, (4,), [(4,)]),
    (lib.fanin_chain, (), [(3,)]),
    (lib.qubit_tomography_pair, (), [(2,)]),
    (lib.quantum_chain3, (), [(2,)]),
    (lib.two_qubit_bell, (), [(3,)]),
]


@pytest.mark.parametrize("factory,args,r2_nodes", SWEEPS,
                         ids=lambda v: getattr(v, "__name__", str(v)))
def test_wire_past_queries_match_the_oracle(factory, args, r2_nodes):
    model, causaloid = built(factory, *args)
    answered = 0
    for query in _wire_past_queries(model, r2_nodes):
        try:
            verdict = answer_query(model, causaloid, query)
        except (ZeroConditioningError, UnconditionableError):
            continue
        assert verdict.well_defined
        try:
            lo, hi = probability_bounds_oracle(model, causaloid, query)
        except UnconditionableError:
            continue  # no preparation supports this conditioning event
        assert abs(verdict.value - lo) < 1e-9
        assert abs(verdict.value - hi) < 1e-9
        answered += 1
    assert answered > 0


def test_well_defined_values_normalize_over_outcomes():
    model, causaloid = built(lib.classical_chain, 3)
    r2 = model.region([(3,)])
    r1 = lib.wire_past(model, r2)
    nodes1 = r1.sorted_locations
    sizes = causaloid.alphabet_sizes
    for a2 in range(_alpha_count(model, r2.sorted_locations)):
        for a1 in range(_alpha_count(model, nodes1)):
            siblings = sibling_alphas(sizes, nodes1, a1)
            total = 0.0
            skip = False
            for beta in siblings:
                try:
                    verdict = answer_query(model, causaloid,
                                           Query(r1, beta, r2, a2))
                except (ZeroConditioningError, UnconditionableError):
                    skip = True
                    break
                total += verdict.value
            if not skip:
                assert abs(total - 1.0) < 1e-6
            break  # one sibling class per setting block is enough


def test_mixed_order_queries_are_not_well_defined():
    model, causaloid = built(lib.mixed_direction)
    r2 = model.region([(3,)])
    r1 = lib.wire_past(model, r2)  # both orders pooled: nodes 1 and 2
    n1 = _alpha_count(model, r1.sorted_locations)
    hits = 0
    for a1, a2 in itertools.product(range(n1), range(4)):
        try:
            verdict = answer_query(model, causaloid, Query(r1, a1, r2, a2))
        except (ZeroConditioningError, UnconditionableError):
            continue
        if not verdict.well_defined:
            lo, hi = verdict.bounds
            assert lo <= hi
            hits += 1
    assert hits > 0


def test_collider_conditionals_have_wide_envelopes():
    # regions 2 and 3 share only the hidden source 1: conditioning on a
    # postselected descendant leaves the conditional preparation-dependent
    model, causaloid = built(lib.collider_common_cause)
    r1 = model.region([(2,)])
    r2 = model.region([(3,)])
    widest = 0.0
    for a1, a2 in itertools.product(
            range(_alpha_count(model, r1.sorted_locations)),
            range(_alpha_count(model, r2.sorted_locations))):
        query = Query(r1, a1, r2, a2)
        try:
            verdict = answer_query(model, causaloid, query)
        except (ZeroConditioningError, UnconditionableError):
            continue
        if verdict.well_defined:
            continue
        lo, hi = verdict.bounds
        widest = max(widest, hi - lo)
    assert widest > 1e-3


def test_oracle_envelope_contains_every_preparation_conditional():
    from causaloid.models import joint_probability, preparation_family

    model, causaloid = built(lib.collider_common_cause)
    r1 = model.region([(2,)])
    r2 = model.region([(3,)])
    query = Query(r1, 0, r2, 0)
    lo, hi = probability_bounds_oracle(model, causaloid, query)
    region = r1.union(r2)
    for prep in preparation_family(model, region):
        prep_settings, prep_outcomes = prep.as_dicts()
        settings = dict(prep_settings)
        settings[(2,)] = model.settings_of((2,))[0]
        settings[(3,)] = model.settings_of((3,))[0]
        joint = joint_probability(
            model, {**prep_outcomes, (2,): "0", (3,): "0"}, settings)
        cond_on = joint_probability(
            model, {**prep_outcomes, (3,): "0"}, settings)
        if cond_on <= 1e-9:
            continue
        assert lo - 1e-9 <= joint / cond_on <= hi + 1e-9


def test_zero_conditioning_is_an_error_and_zero_joint_is_certainly_zero():
    u = RVector(np.zeros(3), (0, 1, 2), "u")
    v = RVector(np.array([0.1, 0.2, 0.3]), (0, 1, 2), "v")
    with pytest.raises(ZeroConditioningError):
        well_defined(v, u)
    verdict = well_defined(RVector(np.zeros(3), (0, 1, 2), "v"), v)
    assert verdict.well_defined and verdict.value == 0.0


def test_literal_bounds_contain_the_value_when_nonempty():
    model, causaloid = built(lib.classical_chain, 3)
    r2 = model.region([(3,)])
    r1 = lib.wire_past(model, r2)
    checked = 0
    for query in _wire_past_queries(model, [(3,)]):
        try:
            v, u = query_vectors(causaloid, query)
            verdict = well_defined(v, u)
            raw = probability_bounds_literal(v, u)
        except (ZeroConditioningError, ValueError):
            continue
        if not verdict.well_defined or verdict.value == 0.0:
            continue
        lo, hi = clamp_bounds(raw)
        if lo <= hi:
            assert lo - 1e-9 <= verdict.value <= hi + 1e-9
            checked += 1
    assert checked > 0


# -- evolving states over nested regions ------------------------------------


def _shedding_foliation(model, order, settings, outcomes):
    regions = [model.region(order[i:]) for i in range(len(order) + 1)]
    return NestedFoliation(tuple(regions), settings, outcomes)


FOLIATIONS = [
    (lib.classical_chain, (4,), {(i,): "g0" for i in range(1, 5)},
     {(i,): "0" for i in range(1, 5)},
     [[(1,), (2,), (3,), (4,)], [(4,), (3,), (2,), (1,)],
      [(2,), (4,), (1,), (3,)]]),
    (lib.fanin_chain, (), {(1,): "g0", (2,): "r0", (3,): "m0"},
     {(i,): "0" for i in (1, 2, 3)},
     [[(1,), (2,), (3,)], [(3,), (2,), (1,)], [(2,), (1,), (3,)]]),
    (lib.quantum_chain3, (), {(1,): "px", (2,): "z", (3,): "mx"},
     {(1,): "p", (2,): "+", (3,): "+"},
     [[(1,), (2,), (3,)], [(3,), (1,), (2,)], [(2,), (3,), (1,)]]),
    (lib.mixed_direction, (), {(1,): "g0", (2,): "r0", (3,): "m0"},
     {(i,): "0" for i in (1, 2, 3)},
     [[(1,), (2,), (3,)], [(3,), (2,), (1,)], [(1,), (3,), (2,)]]),
]


@pytest.mark.parametrize("factory,args,settings,outcomes,orders", FOLIATIONS,
                         ids=lambda v: getattr(v, "__name__", str(v)))
def test_evolution_is_linear_on_every_nesting(factory, args, settings,
                                              outcomes, orders):
    model, _ = built(factory, *args)
    for order in orders:
        fol = _shedding_foliation(model, order, settings, outcomes)
        states, steps = evolve_state(model, fol)
        assert len(states) == len(order) + 1
        for step in steps:
            assert step.residual < 1e-9
        # shedding one node at a time: each step is a genuine linear map
        for prev, step in zip(states, steps):
            assert step.dim_from == len(prev.values)


def test_foliation_validation_rejects_non_nested_regions():
    model, _ = built(lib.classical_chain, 3)
    settings = {(i,): "g0" for i in (1, 2, 3)}
    outcomes = {(i,): "0" for i in (1, 2, 3)}
    bad = NestedFoliation(
        (model.region([(1,), (2,)]), model.region([(3,)]),
         model.region([])), settings, outcomes)
    with pytest.raises(ModelFileError):
        bad.validate(model)
