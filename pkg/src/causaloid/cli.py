"""Command-line pipeline: compress | query | evolve | run | report.

All reports are deterministic: numeric fields go through a fixed 12
significant digit rendering and JSON documents are emitted with sorted keys,
so identical inputs produce byte-identical output.

Exit codes: 0 success, 2 parse error, 3 numerical/validation error,
4 clumping or identity failure.
"""

from __future__ import annotations

import argparse
import json
import sys

from . import io as cio
from .cards import Region
from .errors import (CausaloidError, ClumpingError, CompressionViolationError,
                     GateSetError, IdentityPreconditionError, ModelFileError,
                     NonlinearEvolutionError, UnconditionableError,
                     ZeroConditioningError)
from .inference import (NestedFoliation, answer_query, clamp_bounds,
                        evolve_state, probability_bounds_literal,
                        probability_bounds_oracle, query_vectors, well_defined)
from .models import MixedOrderModel, build_causaloid, run_program
from .structure import spacetime_cost

EXIT_PARSE = 2
EXIT_NUMERICAL = 3
EXIT_CLUMPING = 4

# the literal bound formula's phi makes its correction term collapse to one;
# the report flags any query where that inflates the interval (see README)
PHI_FLAG_MARGIN = 0.5


def _num(x: float) -> float:
    """Clip to 12 significant digits for stable rendering."""
    return float(f"{float(x):.12g}")


def _fmt(x: float) -> str:
    return f"{float(x):.12g}"


def _loc(x) -> str:
    return cio.location_string(x)


# ---------------------------------------------------------------------------
# Report assembly


def compress_report(model, tol: float) -> dict:
    causaloid = build_causaloid(model, tol)
    nodes = []
    for x in model.node_ids:
        fl = causaloid.first_level[x]
        nodes.append({"node": _loc(x), "omega_size": len(fl.omega),
                      "residual": _num(fl.residual)})
    pairs = []
    for key in sorted(causaloid.pairwise):
        res = causaloid.pairwise[key]
        pairs.append({"pair": [_loc(key[0]), _loc(key[1])],
                      "omega_size": len(res.omega12),
                      "residual": _num(res.residual)})
    n = len(model.node_ids)
    return {
        "model": model.model_id,
        "kind": getattr(model, "kind", "mixed"),
        "nodes": nodes,
        "pairs": pairs,
        "correlated_unlinked": [[_loc(a), _loc(b)]
                                for a, b in sorted(causaloid.correlated_unlinked)],
        "stored_matrices": causaloid.stored_matrix_count,
        "region_count": 2 ** n - 1,
        "spacetime_cost_full": spacetime_cost(
            Region.of(model.model_id, model.node_ids)),
    }


def _query_row(model, causaloid, query, epsilon: float, tol: float,
               oracle_check: bool) -> dict:
    row = {
        "region1": [_loc(x) for x in query.region1.sorted_locations],
        "alpha1": query.alpha1,
        "region2": [_loc(x) for x in query.region2.sorted_locations],
        "alpha2": query.alpha2,
    }
    try:
        v, u = query_vectors(causaloid, query)
    except ClumpingError as exc:
        row["error"] = {"code": "CLUMPING", "message": str(exc)}
        return row
    try:
        verdict = well_defined(v, u, epsilon)
    except ZeroConditioningError as exc:
        row["error"] = {"code": "ZERO_CONDITIONING", "message": str(exc)}
        return row
    row["well_defined"] = verdict.well_defined
    row["parallelism_angle"] = _num(verdict.parallelism_angle)
    if verdict.well_defined:
        row["value"] = _num(verdict.value)
    try:
        literal = probability_bounds_literal(v, u, tol)
        row["literal_bounds_raw"] = [_num(literal[0]), _num(literal[1])]
        clamped = clamp_bounds(literal)
        row["literal_bounds"] = [_num(clamped[0]), _num(clamped[1])]
    except (ZeroConditioningError, ValueError):
        literal = None
    if oracle_check or not verdict.well_defined:
        try:
            lo, hi = probability_bounds_oracle(model, causaloid, query, tol)
            row["oracle_bounds"] = [_num(lo), _num(hi)]
            if literal is not None:
                clamped = clamp_bounds(literal)
                width_excess = (clamped[1] - clamped[0]) - (hi - lo)
                row["phi_degenerate_flag"] = bool(width_excess > PHI_FLAG_MARGIN)
        except UnconditionableError as exc:
            row["error"] = {"code": "UNCONDITIONABLE", "message": str(exc)}
    return row


def query_report(model, queries, epsilon: float, tol: float,
                 oracle_check: bool) -> dict:
    causaloid = build_causaloid(model, tol)
    rows = [_query_row(model, causaloid, q, epsilon, tol, oracle_check)
            for q in queries]
    return {"model": model.model_id, "queries": rows}


def evolve_report(model, foliation: NestedFoliation, tol: float) -> dict:
    states, steps = evolve_state(model, foliation, tol)
    doc = {
        "model": model.model_id,
        "regions": [[_loc(x) for x in reg.sorted_locations]
                    for reg in foliation.regions],
        "state_dims": [len(s.values) for s in states],
        "states": [[_num(v) for v in s.values] for s in states],
        "steps": [{
            "slice": [_loc(x) for x in st.slice_nodes],
            "dim_from": st.dim_from,
            "dim_to": st.dim_to,
            "residual": _num(st.residual),
        } for st in steps],
    }
    if isinstance(model, MixedOrderModel):
        comparison = {}
        for comp in model.components:
            comp_fol = NestedFoliation(
                tuple(Region.of(comp.model_id, reg.sorted_locations)
                      for reg in foliation.regions),
                foliation.settings, foliation.outcomes)
            comp_states, _ = evolve_state(comp, comp_fol, tol)
            comparison[comp.model_id] = [len(s.values) for s in comp_states]
        doc["component_state_dims"] = comparison
    return doc


def run_report(model, settings, seed: int, shots: int) -> dict:
    from .library import constant_program

    program = constant_program(settings)
    counts: dict[str, int] = {}
    first_stack = None
    for i in range(shots):
        stack = run_program(model, program, seed + i)
        key = " ".join(f"{_loc(c.x)}:{c.a}" for c in
                       sorted(stack.cards, key=lambda c: c.x))
        counts[key] = counts.get(key, 0) + 1
        if first_stack is None:
            first_stack = stack
    return {
        "model": model.model_id,
        "seed": seed,
        "shots": shots,
        "settings": {_loc(x): s for x, s in sorted(settings.items())},
        "counts": dict(sorted(counts.items())),
        "first_stack": [{"x": _loc(c.x), "n": c.n, "r": list(c.r),
                         "s": c.s, "a": c.a}
                        for c in sorted(first_stack.cards, key=lambda c: c.x)],
    }


# ---------------------------------------------------------------------------
# Rendering


def _render_text(doc: dict, indent: str = "") -> str:
    lines = []

    def emit(key, value, depth):
        pad = "  " * depth
        if isinstance(value, dict):
            lines.append(f"{pad}{key}:")
            for k in value:
                emit(k, value[k], depth + 1)
        elif isinstance(value, list) and value and isinstance(value[0], dict):
            lines.append(f"{pad}{key}:")
            for item in value:
                lines.append(f"{pad}  -")
                for k in item:
                    emit(k, item[k], depth + 2)
        else:
            lines.append(f"{pad}{key}: {_scalar(value)}")

    def _scalar(value):
        if isinstance(value, float):
            return _fmt(value)
        if isinstance(value, list):
            return "[" + ", ".join(_scalar(v) for v in value) + "]"
        return str(value)

    for key in doc:
        emit(key, doc[key], 0)
    return "\n".join(lines) + "\n"


def emit(doc: dict, fmt: str) -> None:
    if fmt == "structured":
        sys.stdout.write(json.dumps(doc, sort_keys=True, indent=2) + "\n")
    else:
        sys.stdout.write(_render_text(doc))


# ---------------------------------------------------------------------------
# Entry point


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="causaloid",
        description="compress probabilistic circuit models into causaloids, "
                    "answer conditional-probability queries, and reconstruct "
                    "evolving states")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, queryish=False, seeded=False):
        p.add_argument("model", help="model JSON file")
        p.add_argument("--tol", type=float, default=1e-9,
                       help="numerical tolerance (default 1e-9)")
        p.add_argument("--format", choices=("text", "structured"),
                       default="text")
        if queryish:
            p.add_argument("--epsilon-parallel", type=float, default=1e-9,
                           help="parallelness threshold (default 1e-9)")
            p.add_argument("--oracle-check", action="store_true",
                           help="add the oracle envelope to every row")
        if seeded:
            p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("compress", help="fiducial sets and storage counts")
    common(p)
    p = sub.add_parser("query", help="answer a batch of conditional queries")
    common(p, queryish=True)
    p.add_argument("queries", help="query JSON file")
    p = sub.add_parser("evolve", help="evolving state over a foliation")
    common(p)
    p.add_argument("foliation", help="foliation JSON file")
    p = sub.add_parser("run", help="sampled card stacks for a program")
    common(p, seeded=True)
    p.add_argument("program", help="program JSON file")
    p.add_argument("--shots", type=int, default=1)
    p = sub.add_parser("report", help="combined report")
    common(p, queryish=True, seeded=True)
    p.add_argument("--queries", help="query JSON file")
    p.add_argument("--foliation", help="foliation JSON file")
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        model = cio.parse_model(args.model)
        if args.command == "compress":
            emit(compress_report(model, args.tol), args.format)
        elif args.command == "query":
            queries = cio.parse_queries(args.queries, model)
            emit(query_report(model, queries, args.epsilon_parallel,
                              args.tol, args.oracle_check), args.format)
        elif args.command == "evolve":
            foliation = cio.parse_foliation(args.foliation, model)
            emit(evolve_report(model, foliation, args.tol), args.format)
        elif args.command == "run":
            settings = cio.parse_program(args.program, model)
            emit(run_report(model, settings, args.seed, args.shots),
                 args.format)
        elif args.command == "report":
            doc = {"compression": compress_report(model, args.tol)}
            if args.queries:
                queries = cio.parse_queries(args.queries, model)
                doc["queries"] = query_report(
                    model, queries, args.epsilon_parallel, args.tol,
                    args.oracle_check)["queries"]
            if args.foliation:
                foliation = cio.parse_foliation(args.foliation, model)
                doc["evolution"] = evolve_report(model, foliation, args.tol)
            emit(doc, args.format)
    except ModelFileError as exc:
        print(f"error[{exc.code}] {exc}", file=sys.stderr)
        return EXIT_PARSE
    except (ClumpingError, IdentityPreconditionError) as exc:
        print(f"error[CLUMPING] {exc}", file=sys.stderr)
        return EXIT_CLUMPING
    except (CompressionViolationError, NonlinearEvolutionError, GateSetError,
            ZeroConditioningError, UnconditionableError) as exc:
        print(f"error[NUMERICAL] {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except CausaloidError as exc:
        print(f"error[CAUSALOID] {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    return 0


if __name__ == "__main__":
    sys.exit(main())
