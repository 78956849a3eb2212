import itertools

import pytest
from hypothesis import given, settings as hyp_settings, strategies as st

from causaloid import library as lib
from causaloid.cards import (Card, CardSet, Region, config_to_card_sets,
                             enumerate_configs, enumerate_region_pairs,
                             full_pack, restrict_outcome, restrict_program)
from causaloid.errors import ForeignRegionError
from causaloid.inference import decode_alpha, sibling_alphas
from causaloid.models import run_program


MODEL = lib.prep_measure_pair()
CHAIN = lib.classical_chain(3)


def test_region_basics():
    r = Region.of("m", [(1,), (3,)])
    assert (1,) in r and (2,) not in r
    assert len(r) == 2
    assert r.sorted_locations == ((1,), (3,))
    assert r.union(Region.of("m", [(2,)])).sorted_locations == ((1,), (2,), (3,))


def test_region_union_rejects_foreign_model():
    with pytest.raises(ForeignRegionError):
        Region.of("a", [(1,)]).union(Region.of("b", [(2,)]))


def test_enumerate_configs_is_outcome_major():
    nodes = MODEL.node_ids
    configs = enumerate_configs(MODEL, nodes)
    n_out = 1
    n_set = 1
    for x in nodes:
        n_out *= len(MODEL.outcomes_of(x))
        n_set *= len(MODEL.settings_of(x))
    assert len(configs) == n_out * n_set
    assert len(set(configs)) == len(configs)
    # first block shares the all-first outcome tuple and cycles settings
    first_outcomes = tuple(MODEL.outcomes_of(x)[0] for x in nodes)
    for cfg in configs[:n_set]:
        assert cfg.outcomes == first_outcomes
    assert configs[0].settings == tuple(MODEL.settings_of(x)[0] for x in nodes)


def test_decode_alpha_round_trips_config_positions():
    nodes = tuple(sorted(CHAIN.node_ids))
    sizes = {x: (len(CHAIN.outcomes_of(x)), len(CHAIN.settings_of(x)))
             for x in nodes}
    configs = enumerate_configs(CHAIN, nodes)
    for alpha in range(0, len(configs), 7):
        per_node = decode_alpha(sizes, nodes, alpha)
        cfg = configs[alpha]
        for x in nodes:
            o_idx, s_idx = divmod(per_node[x], sizes[x][1])
            assert CHAIN.outcomes_of(x)[o_idx] == cfg.outcome_of(x)
            assert CHAIN.settings_of(x)[s_idx] == cfg.setting_of(x)


def test_sibling_alphas_fix_settings_and_cover_outcomes():
    nodes = tuple(sorted(CHAIN.node_ids))
    sizes = {x: (len(CHAIN.outcomes_of(x)), len(CHAIN.settings_of(x)))
             for x in nodes}
    configs = enumerate_configs(CHAIN, nodes)
    sibs = sibling_alphas(sizes, nodes, 5)
    assert 5 in sibs
    outcome_tuples = {configs[a].outcomes for a in sibs}
    assert all(configs[a].settings == configs[5].settings for a in sibs)
    assert len(outcome_tuples) == len(sibs)  # each outcome set exactly once


def test_config_card_sets_and_region_pairs():
    region = MODEL.region(MODEL.node_ids)
    pairs = enumerate_region_pairs(region, MODEL)
    assert len(pairs) == len(enumerate_configs(MODEL, region.sorted_locations))
    outcome_set, program_restriction = pairs[0]
    assert len(outcome_set) == len(MODEL.node_ids)
    assert outcome_set <= program_restriction
    assert outcome_set <= full_pack(MODEL)


def test_run_program_stack_is_in_full_pack():
    settings = {x: MODEL.settings_of(x)[0] for x in MODEL.node_ids}
    stack = run_program(MODEL, lib.constant_program(settings), seed=3)
    assert len(stack) == len(MODEL.node_ids)
    pack_xsa = {(c.x, c.s, c.a) for c in full_pack(MODEL)}
    assert all((c.x, c.s, c.a) in pack_xsa for c in stack)


@st.composite
def _node_subsets(draw):
    nodes = sorted(CHAIN.node_ids)
    return (draw(st.sets(st.sampled_from(nodes))),
            draw(st.sets(st.sampled_from(nodes))))


@given(_node_subsets())
@hyp_settings(max_examples=40, deadline=None)
def test_outcome_restriction_distributes_over_union(subsets):
    a, b = subsets
    settings = {x: "g0" for x in CHAIN.node_ids}
    stack = run_program(CHAIN, lib.constant_program(settings), seed=11)
    ra, rb = CHAIN.region(a), CHAIN.region(b)
    merged = restrict_outcome(stack, ra.union(rb))
    split = restrict_outcome(stack, ra).union(restrict_outcome(stack, rb))
    assert set(merged) == set(split)


def test_restrict_program_keeps_only_region_cards():
    region = CHAIN.region([(2,)])
    program = CardSet.of(CHAIN.model_id,
                         [Card((1,), 0, "", "g0", "0"),
                          Card((2,), 0, "", "g1", "1")])
    restricted = restrict_program(program, region)
    assert {c.x for c in restricted} == {(2,)}
