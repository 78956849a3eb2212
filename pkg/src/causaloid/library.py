"""Ready-made small models used by the test suite and the CLI examples.

All gates use simple rational probabilities so that tables are exact and
compression residuals sit at machine precision.
"""

from __future__ import annotations

import numpy as np

from .cards import Location, Region
from .models import (ClassicalCircuitModel, ClassicalGate, MixedOrderModel,
                     Node, QuantumCircuitModel, QuantumGate, Wire)

BITS = ("0", "1")

# P(output bit = 0 | input bit), per setting; output bit doubles as outcome
CHAIN_GATES = {"g0": (0.8, 0.2), "g1": (0.3, 0.6)}


def _relay_gate(settings: dict[str, tuple[float, float]]) -> ClassicalGate:
    """One-wire gate: outcome = output bit, biased by the input bit."""
    tables = {}
    for s, (p_in0, p_in1) in settings.items():
        table = {}
        for i, p0 in ((0, p_in0), (1, p_in1)):
            table[(i,)] = (((0,), "0", p0), ((1,), "1", 1.0 - p0))
        tables[s] = table
    return ClassicalGate(tables)


def _readout_gate(settings: dict[str, float], combine=None) -> ClassicalGate:
    """Two-wire gate: noisily reads a bit function of the inputs, forwards
    the first input and writes the outcome to the second wire."""
    if combine is None:
        combine = lambda a, b: a ^ b
    tables = {}
    for s, p_correct in settings.items():
        table = {}
        for i in (0, 1):
            for j in (0, 1):
                true_bit = combine(i, j)
                table[(i, j)] = (
                    ((i, true_bit), str(true_bit), p_correct),
                    ((i, 1 - true_bit), str(1 - true_bit), 1.0 - p_correct))
        tables[s] = table
    return ClassicalGate(tables)


def classical_chain(n: int) -> ClassicalCircuitModel:
    """n relay nodes on one bit wire; interior nodes have 4-dimensional
    states, the endpoints 2-dimensional ones."""
    nodes = [Node((i,), ("w",), tuple(CHAIN_GATES), BITS) for i in range(1, n + 1)]
    wire = Wire("w", tuple((i,) for i in range(1, n + 1)))
    gates = {(i,): _relay_gate(CHAIN_GATES) for i in range(1, n + 1)}
    return ClassicalCircuitModel(f"chain{n}", nodes, [wire], gates)


def _blurry_gate(settings: dict[str, tuple[float, float]]) -> ClassicalGate:
    """One-wire gate whose outcome is a noisy reading of the input while the
    output bit is an independently noisy copy: no outcome pins the output."""
    tables = {}
    for s, (read_acc, copy_acc) in settings.items():
        table = {}
        for i in (0, 1):
            entries = []
            for a in (0, 1):
                p_read = read_acc if a == i else 1.0 - read_acc
                for o in (0, 1):
                    p_copy = copy_acc if o == i else 1.0 - copy_acc
                    entries.append(((o,), str(a), p_read * p_copy))
            table[(i,)] = tuple(entries)
        tables[s] = table
    return ClassicalGate(tables)


BLURRY_GATES = {"h0": (0.9, 0.8), "h1": (0.6, 0.7)}


def noisy_chain(n: int) -> ClassicalCircuitModel:
    """Chain of blurry relays: reading and forwarding are independently
    noisy, which keeps every single-label slice of a pair full rank."""
    nodes = [Node((i,), ("w",), tuple(BLURRY_GATES), BITS)
             for i in range(1, n + 1)]
    wire = Wire("w", tuple((i,) for i in range(1, n + 1)))
    gates = {(i,): _blurry_gate(BLURRY_GATES) for i in range(1, n + 1)}
    return ClassicalCircuitModel(f"noisy_chain{n}", nodes, [wire], gates)


def prep_measure_pair() -> ClassicalCircuitModel:
    """Biased preparation followed by an exact readout."""
    prep = _relay_gate({"p0": (0.9, 0.9), "p1": (0.1, 0.1)})
    measure = ClassicalGate({"m": {(0,): (((0,), "0", 1.0),),
                                   (1,): (((1,), "1", 1.0),)}})
    nodes = [Node((1,), ("w",), ("p0", "p1"), BITS),
             Node((2,), ("w",), ("m",), BITS)]
    wire = Wire("w", ((1,), (2,)))
    return ClassicalCircuitModel("prep_measure", nodes, [wire],
                                 {(1,): prep, (2,): measure})


def fanin_chain() -> ClassicalCircuitModel:
    """Bit from node 1 feeds node 2, whose outcome is written onto a second
    wire read by node 3; node 3's wire starts at node 2."""
    nodes = [Node((1,), ("p",), tuple(CHAIN_GATES), BITS),
             Node((2,), ("p", "q"), ("r0", "r1"), BITS),
             Node((3,), ("q",), ("m0", "m1"), BITS)]
    wires = [Wire("p", ((1,), (2,))), Wire("q", ((2,), (3,)))]
    gates = {(1,): _relay_gate(CHAIN_GATES),
             (2,): _readout_gate({"r0": 0.85, "r1": 0.6}),
             (3,): _relay_gate({"m0": (0.95, 0.05), "m1": (0.7, 0.3)})}
    return ClassicalCircuitModel("fanin", nodes, wires, gates)


def fanout_common_cause() -> ClassicalCircuitModel:
    """A coin at node 1 is copied onto two wires read by nodes 2 and 3; the
    unlinked pair (2, 3) is correlated through the coin."""
    coin = ClassicalGate({"c": {(i, j): (((0, 0), "0", 0.5), ((1, 1), "1", 0.5))
                                for i in (0, 1) for j in (0, 1)}})
    nodes = [Node((1,), ("u", "v"), ("c",), BITS),
             Node((2,), ("u",), ("m0", "m1"), BITS),
             Node((3,), ("v",), ("m0", "m1"), BITS)]
    wires = [Wire("u", ((1,), (2,))), Wire("v", ((1,), (3,)))]
    gates = {(1,): coin,
             (2,): _relay_gate({"m0": (0.9, 0.1), "m1": (0.65, 0.35)}),
             (3,): _relay_gate({"m0": (0.9, 0.1), "m1": (0.65, 0.35)})}
    return ClassicalCircuitModel("fanout", nodes, wires, gates)


def collider_common_cause() -> ClassicalCircuitModel:
    """Node 1's coin feeds both node 2 and node 3, and node 2 also feeds
    node 3.  The linked pair (2, 3) shares the external cause at node 1, so
    conditionals across the link depend on the preparation."""
    coin = ClassicalGate({
        "c": {(i, j): (((0, 0), "0", 0.5), ((1, 1), "1", 0.5))
              for i in (0, 1) for j in (0, 1)},
        "e": {(i, j): (((0, 0), "0", 0.85), ((1, 1), "1", 0.15))
              for i in (0, 1) for j in (0, 1)}})
    nodes = [Node((1,), ("u", "v"), ("c", "e"), BITS),
             Node((2,), ("u", "w"), ("r0", "r1"), BITS),
             Node((3,), ("v", "w"), ("m0", "m1"), BITS)]
    wires = [Wire("u", ((1,), (2,))), Wire("v", ((1,), (3,))),
             Wire("w", ((2,), (3,)))]
    gates = {(1,): coin,
             (2,): _readout_gate({"r0": 0.9, "r1": 0.55},
                                 combine=lambda a, b: a),
             (3,): _readout_gate({"m0": 0.95, "m1": 0.7})}
    return ClassicalCircuitModel("collider", nodes, wires, gates)


def diamond_grid() -> ClassicalCircuitModel:
    """Four nodes whose link graph is a 4-cycle: 1 fans out to 2 and 3, which
    both feed 4.  Decomposable only by direct compression, not by clumping."""
    split = ClassicalGate({
        "c": {(i, j): (((0, 0), "0", 0.5), ((1, 1), "1", 0.5))
              for i in (0, 1) for j in (0, 1)},
        "d": {(i, j): tuple(((z, w), str(z), 0.25)
                            for z in (0, 1) for w in (0, 1))
              for i in (0, 1) for j in (0, 1)}})
    nodes = [Node((1,), ("u", "v"), ("c", "d"), BITS),
             Node((2,), ("u", "s"), ("m0", "m1"), BITS),
             Node((3,), ("v", "t"), ("m0", "m1"), BITS),
             Node((4,), ("s", "t"), ("m0", "m1"), BITS)]
    wires = [Wire("u", ((1,), (2,))), Wire("v", ((1,), (3,))),
             Wire("s", ((2,), (4,))), Wire("t", ((3,), (4,)))]
    gates = {(1,): split,
             (2,): _readout_gate({"m0": 0.9, "m1": 0.6}, combine=lambda a, b: a),
             (3,): _readout_gate({"m0": 0.9, "m1": 0.6}, combine=lambda a, b: a),
             (4,): _readout_gate({"m0": 0.95, "m1": 0.7})}
    return ClassicalCircuitModel("grid", nodes, wires, gates)


# ---------------------------------------------------------------------------
# Quantum fixtures

_KET = {
    "0": np.array([1.0, 0.0], dtype=complex),
    "1": np.array([0.0, 1.0], dtype=complex),
    "+": np.array([1.0, 1.0], dtype=complex) / np.sqrt(2),
    "-": np.array([1.0, -1.0], dtype=complex) / np.sqrt(2),
    "i": np.array([1.0, 1.0j], dtype=complex) / np.sqrt(2),
    "j": np.array([1.0, -1.0j], dtype=complex) / np.sqrt(2),
}


def _prepare(label: str) -> QuantumGate:
    """Trace in, fixed pure state out; single dummy outcome."""
    psi = _KET[label]
    ops = tuple(np.outer(psi, _KET[b].conj()) for b in ("0", "1"))
    return {"p": ops}


def _projective(plus: str, minus: str):
    return {"+": (np.outer(_KET[plus], _KET[plus].conj()),),
            "-": (np.outer(_KET[minus], _KET[minus].conj()),)}


def qubit_tomography_pair() -> QuantumCircuitModel:
    """Four preparations spanning the Bloch ball, then X/Y/Z measurements:
    the preparation node has a 4-dimensional state."""
    prep = QuantumGate({"p0": _prepare("0"), "p1": _prepare("1"),
                        "px": _prepare("+"), "py": _prepare("i")})
    tomo = QuantumGate({"mx": _projective("+", "-"),
                        "my": _projective("i", "j"),
                        "mz": _projective("0", "1")})
    nodes = [Node((1,), ("q",), ("p0", "p1", "px", "py"), ("p",)),
             Node((2,), ("q",), ("mx", "my", "mz"), ("+", "-"))]
    wire = Wire("q", ((1,), (2,)))
    return QuantumCircuitModel("qubit_pair", nodes, [wire],
                               {(1,): prep, (2,): tomo})


def quantum_chain3() -> QuantumCircuitModel:
    """Preparation, mid-circuit projective instrument, final tomography."""
    prep = QuantumGate({"p0": _prepare("0"), "p1": _prepare("1"),
                        "px": _prepare("+"), "py": _prepare("i")})
    mid = QuantumGate({"z": _projective("0", "1"), "x": _projective("+", "-")})
    tomo = QuantumGate({"mx": _projective("+", "-"),
                        "mz": _projective("0", "1")})
    nodes = [Node((1,), ("q",), ("p0", "p1", "px", "py"), ("p",)),
             Node((2,), ("q",), ("z", "x"), ("+", "-")),
             Node((3,), ("q",), ("mx", "mz"), ("+", "-"))]
    wire = Wire("q", ((1,), (2,), (3,)))
    return QuantumCircuitModel("qchain3", nodes, [wire],
                               {(1,): prep, (2,): mid, (3,): tomo})


def two_qubit_bell() -> QuantumCircuitModel:
    """Two independent preparations meeting at a joint measurement in either
    the product or the Bell basis."""
    prep = QuantumGate({"z0": _prepare("0"), "x+": _prepare("+")})
    bell_states = [
        np.array([1, 0, 0, 1], dtype=complex) / np.sqrt(2),
        np.array([1, 0, 0, -1], dtype=complex) / np.sqrt(2),
        np.array([0, 1, 1, 0], dtype=complex) / np.sqrt(2),
        np.array([0, 1, -1, 0], dtype=complex) / np.sqrt(2),
    ]
    outcomes = ("00", "01", "10", "11")
    zz = {}
    bell = {}
    for k, a in enumerate(outcomes):
        e = np.zeros(4, dtype=complex)
        e[k] = 1.0
        zz[a] = (np.outer(e, e.conj()),)
        bell[a] = (np.outer(bell_states[k], bell_states[k].conj()),)
    joint = QuantumGate({"zz": zz, "bell": bell})
    nodes = [Node((1,), ("q1",), ("z0", "x+"), ("p",)),
             Node((2,), ("q2",), ("z0", "x+"), ("p",)),
             Node((3,), ("q1", "q2"), ("zz", "bell"), outcomes)]
    wires = [Wire("q1", ((1,), (3,))), Wire("q2", ((2,), (3,)))]
    return QuantumCircuitModel("bell", nodes, wires,
                               {(1,): prep, (2,): prep, (3,): joint})


# ---------------------------------------------------------------------------
# Mixed-wiring fixtures: a hidden coin decides which circuit order ran


def mixed_direction() -> MixedOrderModel:
    """Nodes 2 and 3 share a wire whose direction is undetermined: it runs
    2 -> 3 in one component and 3 -> 2 in the other; node 1 always prepares
    the input of node 2."""
    nodes = [Node((1,), ("p",), tuple(CHAIN_GATES), BITS),
             Node((2,), ("p", "q"), ("r0", "r1"), BITS),
             Node((3,), ("q",), ("m0", "m1"), BITS)]
    gates = {(1,): _relay_gate(CHAIN_GATES),
             (2,): _readout_gate({"r0": 0.85, "r1": 0.6}),
             (3,): _relay_gate({"m0": (0.95, 0.05), "m1": (0.7, 0.3)})}
    forward = ClassicalCircuitModel(
        "direction_fwd", nodes,
        [Wire("p", ((1,), (2,))), Wire("q", ((2,), (3,)))],
        gates, order=((1,), (2,), (3,)))
    backward = ClassicalCircuitModel(
        "direction_bwd", nodes,
        [Wire("p", ((1,), (2,))), Wire("q", ((3,), (2,)))],
        gates, order=((1,), (3,), (2,)))
    return MixedOrderModel("direction_mix", [forward, backward], [0.5, 0.5])


def mixed_triangle() -> MixedOrderModel:
    """Three relays on one wire whose visiting order is undetermined; the
    union link graph is a triangle, so no wire-segment decomposition exists."""
    nodes = [Node((i,), ("w",), tuple(CHAIN_GATES), BITS) for i in (1, 2, 3)]
    gates = {(i,): _relay_gate(CHAIN_GATES) for i in (1, 2, 3)}
    a = ClassicalCircuitModel("tri_a", nodes, [Wire("w", ((1,), (2,), (3,)))],
                              gates, order=((1,), (2,), (3,)))
    b = ClassicalCircuitModel("tri_b", nodes, [Wire("w", ((1,), (3,), (2,)))],
                              gates, order=((1,), (3,), (2,)))
    return MixedOrderModel("triangle_mix", [a, b], [0.5, 0.5])


# ---------------------------------------------------------------------------
# Helpers


def constant_program(settings: dict[Location, str]):
    """Program function applying a fixed setting at each node."""
    def func(x, n, r):
        return settings[x]
    return func


def wire_past(model, region: Region) -> Region:
    """All nodes outside ``region`` from which a wire path leads into it."""
    edges = set()
    components = model.components if hasattr(model, "components") else [model]
    for comp in components:
        for w in comp.wires.values():
            edges.update(zip(w.path, w.path[1:]))
    past = set()
    frontier = set(region.locations)
    while True:
        grew = False
        for a, b in edges:
            if b in frontier | past and a not in past and a not in region.locations:
                past.add(a)
                grew = True
        if not grew:
            break
    return Region.of(model.model_id, past)


ALL_MODELS = (classical_chain, noisy_chain, prep_measure_pair, fanin_chain,
              fanout_common_cause, collider_common_cause, diamond_grid,
              qubit_tomography_pair,
              quantum_chain3, two_qubit_bell, mixed_direction, mixed_triangle)
