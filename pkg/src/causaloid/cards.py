"""Raw data model: cards, stacks, programs, regions.

A card records one observation ``(x, n, r, s, a)``: location, wire/probe id,
received signal, setting and outcome.  Locations are opaque ordered tuples of
integers; no coordinate is singled out as time.  Ordering is used only to make
enumerations reproducible.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable, Iterable, Protocol

from .errors import ForeignRegionError

Location = tuple[int, ...]

EMPTY_SIGNAL = ""


@dataclass(frozen=True, order=True)
class Card:
    """One observation record.

    ``r`` is the received-signal value; models without physicalized signals
    use the empty string.  ``(x, n)`` identify at most one card per stack.
    """

    x: Location
    n: int
    r: str
    s: str
    a: str


class CardModel(Protocol):
    """What the card layer needs to know about a generative model."""

    model_id: str

    @property
    def node_ids(self) -> tuple[Location, ...]: ...

    def settings_of(self, x: Location) -> tuple[str, ...]: ...

    def outcomes_of(self, x: Location) -> tuple[str, ...]: ...


@dataclass(frozen=True)
class Region:
    """A set of location ids; the derived card set is the union of the
    elementary regions R_x for x in ``locations``."""

    model_id: str
    locations: frozenset[Location]

    @staticmethod
    def of(model_id: str, locations: Iterable[Location]) -> "Region":
        return Region(model_id, frozenset(tuple(x) for x in locations))

    def __contains__(self, x: Location) -> bool:
        return x in self.locations

    def union(self, other: "Region") -> "Region":
        _check_same_model(self.model_id, other.model_id)
        return Region(self.model_id, self.locations | other.locations)

    def __len__(self) -> int:
        return len(self.locations)

    @property
    def sorted_locations(self) -> tuple[Location, ...]:
        return tuple(sorted(self.locations))


@dataclass(frozen=True)
class CardSet:
    """An immutable set of cards tagged with the model it belongs to.

    Used for stacks (Y), programs viewed as sets (F), full packs (V) and
    their restrictions to regions.
    """

    model_id: str
    cards: frozenset[Card]

    @staticmethod
    def of(model_id: str, cards: Iterable[Card]) -> "CardSet":
        return CardSet(model_id, frozenset(cards))

    def __len__(self) -> int:
        return len(self.cards)

    def __iter__(self):
        return iter(sorted(self.cards))

    def __le__(self, other: "CardSet") -> bool:
        return self.cards <= other.cards

    def union(self, other: "CardSet") -> "CardSet":
        _check_same_model(self.model_id, other.model_id)
        return CardSet(self.model_id, self.cards | other.cards)


# A stack is the card set collected in one run; a full pack is the set of all
# logically possible cards.  Both are plain CardSets.
Stack = CardSet
FullPack = CardSet


@dataclass(frozen=True)
class Program:
    """A program is a function (x, n, r) -> s and, equivalently, the card set
    it induces: every card whose setting matches the function."""

    model_id: str
    cards: frozenset[Card]
    func: Callable[[Location, int, str], str] = field(compare=False)

    @staticmethod
    def from_function(model: CardModel, func: Callable[[Location, int, str], str],
                      full_pack: "CardSet") -> "Program":
        chosen = frozenset(c for c in full_pack.cards if c.s == func(c.x, c.n, c.r))
        return Program(model.model_id, chosen, func)

    def as_card_set(self) -> CardSet:
        return CardSet(self.model_id, self.cards)


def _check_same_model(a: str, b: str) -> None:
    if a != b:
        raise ForeignRegionError(f"model mismatch: {a!r} vs {b!r}")


def restrict_outcome(stack: CardSet, region: Region) -> CardSet:
    """Y ∩ R: the results seen in the region."""
    _check_same_model(stack.model_id, region.model_id)
    return CardSet(stack.model_id,
                   frozenset(c for c in stack.cards if c.x in region.locations))


def restrict_program(program: CardSet | Program, region: Region) -> CardSet:
    """F ∩ R: the program instructions in the region."""
    cards = program.cards if isinstance(program, Program) else program.cards
    _check_same_model(program.model_id, region.model_id)
    return CardSet(region.model_id,
                   frozenset(c for c in cards if c.x in region.locations))


@dataclass(frozen=True)
class RegionConfig:
    """One (outcome set, program restriction) pair of a region, in
    configuration form: per-node settings and outcomes, nodes sorted by
    location id."""

    nodes: tuple[Location, ...]
    outcomes: tuple[str, ...]
    settings: tuple[str, ...]

    def outcome_of(self, x: Location) -> str:
        return self.outcomes[self.nodes.index(x)]

    def setting_of(self, x: Location) -> str:
        return self.settings[self.nodes.index(x)]

    def as_dicts(self) -> tuple[dict, dict]:
        return (dict(zip(self.nodes, self.settings)),
                dict(zip(self.nodes, self.outcomes)))


def enumerate_configs(model: CardModel, nodes: tuple[Location, ...]) -> list[RegionConfig]:
    """All per-node (setting, outcome) configurations of ``nodes``, in the
    canonical order: lexicographic over (outcome tuple, setting tuple), with
    symbol order taken from the model's declared alphabets.

    The position of a configuration in this list is its alpha index.
    """
    outcome_alphabets = [model.outcomes_of(x) for x in nodes]
    setting_alphabets = [model.settings_of(x) for x in nodes]
    configs = []
    for outcome_tuple in itertools.product(*outcome_alphabets):
        for setting_tuple in itertools.product(*setting_alphabets):
            configs.append(RegionConfig(nodes, outcome_tuple, setting_tuple))
    return configs


def config_to_card_sets(model: CardModel, config: RegionConfig) -> tuple[CardSet, CardSet]:
    """Expand a configuration into its (Y, F) card-set pair.

    The outcome set holds one card per node; the program restriction holds,
    for each node, every card consistent with the chosen setting.
    """
    outcome_cards = []
    program_cards = []
    for x, s, a in zip(config.nodes, config.settings, config.outcomes):
        outcome_cards.append(Card(x, 0, EMPTY_SIGNAL, s, a))
        for a_any in model.outcomes_of(x):
            program_cards.append(Card(x, 0, EMPTY_SIGNAL, s, a_any))
    return (CardSet.of(model.model_id, outcome_cards),
            CardSet.of(model.model_id, program_cards))


def enumerate_region_pairs(region: Region, model: CardModel) -> list[tuple[CardSet, CardSet]]:
    """Deterministic enumeration of all (outcome set, program restriction)
    pairs of a region; the list position is the alpha index.

    The empty region yields the single pair (∅, ∅).
    """
    _check_same_model(region.model_id, model.model_id)
    nodes = region.sorted_locations
    return [config_to_card_sets(model, cfg) for cfg in enumerate_configs(model, nodes)]


def full_pack(model: CardModel) -> FullPack:
    """The set V of all logically possible cards of a model."""
    cards = [Card(x, 0, EMPTY_SIGNAL, s, a)
             for x in model.node_ids
             for s in model.settings_of(x)
             for a in model.outcomes_of(x)]
    return CardSet.of(model.model_id, cards)
