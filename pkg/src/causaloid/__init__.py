"""Causal-structure-free probability: compression, composition, inference.

Compresses exact joint-probability models of regions into fiducial sets and
Lambda matrices, composes them with the causaloid product and the product and
chain identities, and answers conditional-probability queries without
assuming any time foliation.
"""

from .cards import (Card, CardSet, FullPack, Location, Program, Region,
                    RegionConfig, Stack, enumerate_configs,
                    enumerate_region_pairs, full_pack, restrict_outcome,
                    restrict_program)
from .compression import (DEFAULT_TOL, FiducialSet, FirstLevelResult,
                          LambdaMatrix, ProbabilityTable, RVector,
                          SecondLevelResult, State, causaloid_product,
                          first_level_compress, numerical_rank,
                          second_level_compress)
from .errors import (CausaloidError, ClumpingError, CompressionViolationError,
                     ForeignRegionError, GateSetError,
                     IdentityPreconditionError, ModelFileError,
                     NonlinearEvolutionError, UnconditionableError,
                     ZeroConditioningError)
from .inference import (DEFAULT_EPSILON, EvolutionStep, NestedFoliation,
                        Query, Verdict, answer_query, clamp_bounds,
                        evolve_state, probability_bounds_literal,
                        probability_bounds_oracle, query_vectors,
                        well_defined)
from .models import (CircuitModel, ClassicalCircuitModel, ClassicalGate,
                     MixedOrderModel, Node, QuantumCircuitModel, QuantumGate,
                     Wire, build_causaloid, composite_omega, fiducial_states,
                     grouped_table, joint_probability, pair_table,
                     preparation_family, region_table, run_program)
from .io import (parse_foliation, parse_model, parse_program, parse_queries,
                 serialize_foliation, serialize_model)
from .structure import (Causaloid, CausaloidDiagram, Computer, PairBlock,
                        RegionLambda, apply_identity_chain3,
                        apply_identity_chain4, apply_identity_product, clump,
                        composite_r_vector, fold_chain, rebase_block,
                        segment_lambda, spacetime_cost)

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
