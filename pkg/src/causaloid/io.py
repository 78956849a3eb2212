"""JSON file formats: models, query batches, foliations, and programs.

Node ids are comma-joined integer strings ("1", "0,1"); complex entries are
[re, im] pairs.  Serialization is canonical (sorted keys, no whitespace
surprises) so identical inputs give byte-identical files.
"""

from __future__ import annotations

import json

import numpy as np

from .cards import Location, Region
from .errors import ModelFileError
from .inference import NestedFoliation, Query, _config_index
from .models import (ClassicalCircuitModel, ClassicalGate, MixedOrderModel,
                     Node, QuantumCircuitModel, QuantumGate, Wire)

MODEL_FORMAT = "causaloid-model/1"
QUERY_FORMAT = "causaloid-queries/1"
FOLIATION_FORMAT = "causaloid-foliation/1"
PROGRAM_FORMAT = "causaloid-program/1"


# ---------------------------------------------------------------------------
# Shared helpers


def location_string(loc: Location) -> str:
    return ",".join(str(i) for i in loc)


def parse_location(text: str, where: str = "") -> Location:
    try:
        return tuple(int(part) for part in str(text).split(","))
    except ValueError:
        raise ModelFileError("BAD_NODE_ID",
                             f"node id {text!r} is not a comma-joined integer tuple",
                             where)


def _require(doc: dict, key: str, kind, where: str):
    if not isinstance(doc, dict) or key not in doc:
        raise ModelFileError("SCHEMA", f"missing field {key!r}", where)
    value = doc[key]
    if kind is not None and not isinstance(value, kind):
        raise ModelFileError("SCHEMA",
                             f"field {key!r} has type {type(value).__name__}", where)
    return value


def _load(path: str, expected_format: str) -> dict:
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise ModelFileError("UNREADABLE", str(exc), path)
    except json.JSONDecodeError as exc:
        raise ModelFileError("BAD_JSON", str(exc), path)
    if not isinstance(doc, dict) or doc.get("format") != expected_format:
        raise ModelFileError("BAD_FORMAT",
                             f"expected a {expected_format!r} document", path)
    return doc


def _dump(doc: dict, path: str | None = None) -> str:
    text = json.dumps(doc, sort_keys=True, indent=2) + "\n"
    if path is not None:
        with open(path, "w") as fh:
            fh.write(text)
    return text


# ---------------------------------------------------------------------------
# Models


def _complex_pair(value, where: str) -> complex:
    if (not isinstance(value, (list, tuple)) or len(value) != 2
            or not all(isinstance(v, (int, float)) for v in value)):
        raise ModelFileError("BAD_COMPLEX",
                             f"complex entries must be [re, im] pairs, got {value!r}",
                             where)
    return complex(value[0], value[1])


def _matrix_from_json(rows, where: str) -> np.ndarray:
    return np.array([[_complex_pair(v, where) for v in row] for row in rows],
                    dtype=complex)


def _matrix_to_json(op: np.ndarray) -> list:
    return [[[float(v.real), float(v.imag)] for v in row] for row in op]


def _classical_gate_from_json(doc: dict, where: str) -> ClassicalGate:
    tables = {}
    for setting, table in doc.items():
        if not isinstance(table, dict):
            raise ModelFileError("SCHEMA", f"gate table for setting {setting!r} "
                                 "must be an object", where)
        parsed = {}
        for key, rows in table.items():
            inputs = tuple(int(p) for p in key.split(",")) if key else ()
            entries = []
            for row in rows:
                if not isinstance(row, list) or len(row) != 3:
                    raise ModelFileError("SCHEMA",
                                         "gate rows are [outputs, outcome, p]", where)
                outputs, outcome, p = row
                entries.append((tuple(int(o) for o in outputs), str(outcome),
                                float(p)))
            parsed[inputs] = tuple(entries)
        tables[setting] = parsed
    return ClassicalGate(tables)


def _classical_gate_to_json(gate: ClassicalGate) -> dict:
    doc = {}
    for setting, table in gate.tables.items():
        doc[setting] = {
            ",".join(str(i) for i in inputs): [
                [list(outputs), outcome, p] for outputs, outcome, p in rows]
            for inputs, rows in table.items()}
    return doc


def _quantum_gate_from_json(doc: dict, where: str) -> QuantumGate:
    kraus = {}
    for setting, branches in doc.items():
        if not isinstance(branches, dict):
            raise ModelFileError("SCHEMA", f"instrument for setting {setting!r} "
                                 "must map outcomes to operator lists", where)
        kraus[setting] = {
            outcome: tuple(_matrix_from_json(op, where) for op in ops)
            for outcome, ops in branches.items()}
    return QuantumGate(kraus)


def _quantum_gate_to_json(gate: QuantumGate) -> dict:
    return {setting: {outcome: [_matrix_to_json(op) for op in ops]
                      for outcome, ops in branches.items()}
            for setting, branches in gate.kraus.items()}


def _circuit_from_json(doc: dict, where: str):
    kind = _require(doc, "type", str, where)
    if kind not in ("classical", "quantum"):
        raise ModelFileError("SCHEMA", f"unknown model type {kind!r}", where)
    model_id = _require(doc, "id", str, where)
    nodes = []
    for entry in _require(doc, "nodes", list, where):
        nodes.append(Node(
            parse_location(_require(entry, "id", str, where), where),
            tuple(_require(entry, "wires", list, where)),
            tuple(_require(entry, "settings", list, where)),
            tuple(_require(entry, "outcomes", list, where)),
            bool(entry.get("receives_signal", False))))
    declared = {n.id for n in nodes}
    wires = []
    for entry in _require(doc, "wires", list, where):
        path = tuple(parse_location(p, where)
                     for p in _require(entry, "path", list, where))
        for x in path:
            if x not in declared:
                raise ModelFileError("UNDECLARED_ID",
                                     f"wire {entry.get('name')!r} visits undeclared "
                                     f"node {location_string(x)}", where)
        wires.append(Wire(_require(entry, "name", str, where), path,
                          int(entry.get("initial", 0)),
                          int(entry.get("num_states", 2))))
    gates = {}
    for key, gate_doc in _require(doc, "gates", dict, where).items():
        x = parse_location(key, where)
        if x not in declared:
            raise ModelFileError("UNDECLARED_ID",
                                 f"gate declared for unknown node {key!r}", where)
        if kind == "classical":
            gates[x] = _classical_gate_from_json(gate_doc, where)
        else:
            gates[x] = _quantum_gate_from_json(gate_doc, where)
    order = doc.get("order")
    if order is not None:
        order = tuple(parse_location(p, where) for p in order)
    gate_set = doc.get("gate_set")
    cls = ClassicalCircuitModel if kind == "classical" else QuantumCircuitModel
    return cls(model_id, nodes, wires, gates,
               gate_set=tuple(gate_set) if gate_set else None, order=order)


def _circuit_to_json(model) -> dict:
    kind = "classical" if isinstance(model, ClassicalCircuitModel) else "quantum"
    doc = {
        "type": kind,
        "id": model.model_id,
        "nodes": [{
            "id": location_string(node.id),
            "wires": list(node.wires),
            "settings": list(node.settings),
            "outcomes": list(node.outcomes),
            "receives_signal": node.receives_signal,
        } for node in (model.nodes[x] for x in sorted(model.nodes))],
        "wires": [{
            "name": w.name,
            "path": [location_string(x) for x in w.path],
            "initial": w.initial,
            "num_states": w.num_states,
        } for w in (model.wires[n] for n in sorted(model.wires))],
        "gates": {
            location_string(x): (_classical_gate_to_json(g) if kind == "classical"
                                 else _quantum_gate_to_json(g))
            for x, g in sorted(model.gates.items())},
        "gate_set": list(model.gate_set),
        "order": [location_string(x) for x in model.order],
    }
    return doc


def model_from_dict(doc: dict, where: str = "<memory>"):
    kind = _require(doc, "type", str, where)
    if kind == "mixed":
        components = [_circuit_from_json(entry, where)
                      for entry in _require(doc, "components", list, where)]
        weights = [float(w) for w in _require(doc, "weights", list, where)]
        return MixedOrderModel(_require(doc, "id", str, where), components, weights)
    return _circuit_from_json(doc, where)


def model_to_dict(model) -> dict:
    if isinstance(model, MixedOrderModel):
        doc = {
            "type": "mixed",
            "id": model.model_id,
            "components": [_circuit_to_json(c) for c in model.components],
            "weights": list(model.weights),
        }
    else:
        doc = _circuit_to_json(model)
    doc["format"] = MODEL_FORMAT
    return doc


def parse_model(path: str):
    """Load and validate a model file; all validation diagnostics carry a
    stable error code and the offending location."""
    return model_from_dict(_load(path, MODEL_FORMAT), path)


def serialize_model(model, path: str | None = None) -> str:
    return _dump(model_to_dict(model), path)


# ---------------------------------------------------------------------------
# Queries


def _region_and_alpha(model, doc: dict, suffix: str, where: str):
    nodes = tuple(sorted(parse_location(p, where)
                         for p in _require(doc, "region" + suffix, list, where)))
    outcomes = {parse_location(k, where): str(v)
                for k, v in _require(doc, "outcomes" + suffix, dict, where).items()}
    settings = {parse_location(k, where): str(v)
                for k, v in _require(doc, "settings" + suffix, dict, where).items()}
    for x in nodes:
        if x not in model.node_ids:
            raise ModelFileError("UNDECLARED_ID",
                                 f"query region names unknown node {location_string(x)}",
                                 where)
        if x not in outcomes or x not in settings:
            raise ModelFileError("QUERY_DATA_INCOMPLETE",
                                 f"no outcome/setting for node {location_string(x)}",
                                 where)
        if outcomes[x] not in model.outcomes_of(x):
            raise ModelFileError("UNDECLARED_OUTCOME",
                                 f"outcome {outcomes[x]!r} at {location_string(x)}",
                                 where)
        if settings[x] not in model.settings_of(x):
            raise ModelFileError("UNDECLARED_SETTING",
                                 f"setting {settings[x]!r} at {location_string(x)}",
                                 where)
    region = Region.of(model.model_id, nodes)
    alpha = _config_index(model, nodes, settings, outcomes)
    return region, alpha


def parse_queries(path: str, model) -> list[Query]:
    doc = _load(path, QUERY_FORMAT)
    queries = []
    for i, entry in enumerate(_require(doc, "queries", list, path)):
        where = f"{path}#queries[{i}]"
        region1, alpha1 = _region_and_alpha(model, entry, "1", where)
        region2, alpha2 = _region_and_alpha(model, entry, "2", where)
        queries.append(Query(region1, alpha1, region2, alpha2))
    return queries


def serialize_queries(model, entries: list[dict], path: str | None = None) -> str:
    return _dump({"format": QUERY_FORMAT, "queries": entries}, path)


# ---------------------------------------------------------------------------
# Foliations and programs


def parse_foliation(path: str, model) -> NestedFoliation:
    doc = _load(path, FOLIATION_FORMAT)
    regions = tuple(
        Region.of(model.model_id,
                  [parse_location(p, path) for p in entry])
        for entry in _require(doc, "regions", list, path))
    settings = {parse_location(k, path): str(v)
                for k, v in _require(doc, "settings", dict, path).items()}
    outcomes = {parse_location(k, path): str(v)
                for k, v in _require(doc, "outcomes", dict, path).items()}
    foliation = NestedFoliation(regions, settings, outcomes)
    foliation.validate(model)
    return foliation


def serialize_foliation(foliation: NestedFoliation, path: str | None = None) -> str:
    doc = {
        "format": FOLIATION_FORMAT,
        "regions": [[location_string(x) for x in reg.sorted_locations]
                    for reg in foliation.regions],
        "settings": {location_string(x): s for x, s in foliation.settings.items()},
        "outcomes": {location_string(x): a for x, a in foliation.outcomes.items()},
    }
    return _dump(doc, path)


def parse_program(path: str, model) -> dict[Location, str]:
    doc = _load(path, PROGRAM_FORMAT)
    settings = {parse_location(k, path): str(v)
                for k, v in _require(doc, "settings", dict, path).items()}
    for x in model.node_ids:
        if x not in settings:
            raise ModelFileError("PROGRAM_DATA_INCOMPLETE",
                                 f"no setting for node {location_string(x)}", path)
        if settings[x] not in model.settings_of(x):
            raise ModelFileError("UNDECLARED_SETTING",
                                 f"setting {settings[x]!r} at {location_string(x)}",
                                 path)
    return settings
