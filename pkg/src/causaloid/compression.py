"""First- and second-level physical compression.

Probability tables (rows: measurement-outcome pairs of a region, columns:
generalized preparations in the region's complement) are compressed by
finding a minimal fiducial row set and expressing every row as a linear
combination of the fiducial rows.  The coefficient vectors are the r-vectors;
stacked, they form the Lambda matrix of the region.  Second-level compression
does the same for a composite region, with the fiducial rows constrained to
the cartesian product of the component fiducial sets.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import CompressionViolationError

DEFAULT_TOL = 1e-9


@dataclass(eq=False)
class ProbabilityTable:
    """Matrix of exact probabilities with hashable row/column labels.

    Rows are indexed by alpha labels (ints for a single region, int pairs for
    a two-region composite); columns by preparation indices.
    """

    matrix: np.ndarray
    row_labels: tuple
    col_labels: tuple
    _row_pos: dict = field(init=False, repr=False)

    def __post_init__(self):
        self.matrix = np.asarray(self.matrix, dtype=float)
        if self.matrix.shape != (len(self.row_labels), len(self.col_labels)):
            raise ValueError("table shape does not match labels")
        lo, hi = self.matrix.min(initial=0.0), self.matrix.max(initial=0.0)
        if lo < -1e-9 or hi > 1 + 1e-9:
            raise ValueError(f"entries outside [0,1]: min={lo}, max={hi}")
        self._row_pos = {lab: i for i, lab in enumerate(self.row_labels)}

    def row_position(self, label) -> int:
        return self._row_pos[label]

    @property
    def shape(self):
        return self.matrix.shape


@dataclass(frozen=True)
class FiducialSet:
    """Ordered fiducial labels and their row positions in the source table."""

    labels: tuple
    positions: tuple[int, ...]

    def __len__(self):
        return len(self.labels)

    def __iter__(self):
        return iter(self.labels)

    def __contains__(self, label):
        return label in self.labels


@dataclass(eq=False)
class RVector:
    """Coefficients expressing one row's probability as a linear functional
    of the fiducial state: p_alpha = r_alpha . p."""

    values: np.ndarray
    basis: tuple
    label: object = None

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)

    def dot(self, state: "State") -> float:
        if state.basis != self.basis:
            raise ValueError("r-vector and state use different fiducial sets")
        return float(self.values @ state.values)


@dataclass(eq=False)
class State:
    """Fiducial probability vector of a region for one fixed preparation.

    Components lie in [0,1] but need not sum to 1: fiducial labels may
    correspond to outcomes of incompatible measurements.
    """

    values: np.ndarray
    basis: tuple

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)


@dataclass(eq=False)
class LambdaMatrix:
    """Compression matrix: rows indexed by fiducial labels, columns by alpha
    labels (first level) or by component fiducial-label tuples (higher
    levels).  Columns at fiducial labels form the identity pattern."""

    matrix: np.ndarray
    row_labels: tuple
    col_labels: tuple
    _col_pos: dict = field(init=False, repr=False)

    def __post_init__(self):
        self.matrix = np.asarray(self.matrix, dtype=float)
        if self.matrix.shape != (len(self.row_labels), len(self.col_labels)):
            raise ValueError("lambda shape does not match labels")
        self._col_pos = {lab: i for i, lab in enumerate(self.col_labels)}

    def column(self, label) -> np.ndarray:
        return self.matrix[:, self._col_pos[label]]

    def r_vector(self, label) -> RVector:
        return RVector(self.column(label).copy(), self.row_labels, label)


@dataclass(eq=False)
class FirstLevelResult:
    omega: FiducialSet
    r_vectors: list[RVector]
    lam: LambdaMatrix
    residual: float
    degenerate: bool = False


@dataclass(eq=False)
class SecondLevelResult:
    omega12: FiducialSet
    lam: LambdaMatrix
    r_vectors: dict
    residual: float


def numerical_rank(matrix: np.ndarray, tol: float = DEFAULT_TOL) -> int:
    """Rank with a singular-value cutoff relative to the largest value."""
    matrix = np.asarray(matrix, dtype=float)
    if matrix.size == 0 or not np.any(matrix):
        return 0
    sv = np.linalg.svd(matrix, compute_uv=False)
    return int(np.sum(sv > tol * sv[0]))


def _greedy_pivot_rows(matrix: np.ndarray, count: int) -> list[int]:
    """Greedy row pivoting: repeatedly take the row with the largest residual
    norm after projecting out already-chosen rows.  np.argmax breaks ties in
    favour of the smaller index."""
    residual = np.array(matrix, dtype=float)
    chosen = []
    for _ in range(count):
        norms = np.linalg.norm(residual, axis=1)
        idx = int(np.argmax(norms))
        if norms[idx] == 0.0:
            break
        q = residual[idx] / norms[idx]
        residual = residual - np.outer(residual @ q, q)
        residual[idx] = 0.0
        chosen.append(idx)
    return chosen


# public alias: higher layers pick restricted fiducial rows the same way
greedy_pivot_rows = _greedy_pivot_rows


def _expansion_coefficients(matrix: np.ndarray, pivot_rows: list[int]) -> tuple[np.ndarray, float]:
    """Least-squares coefficients expressing every row over the pivot rows,
    and the worst-case reconstruction residual."""
    if not pivot_rows:
        return np.zeros((0, matrix.shape[0])), float(np.max(np.abs(matrix), initial=0.0))
    basis = matrix[pivot_rows]
    coef, *_ = np.linalg.lstsq(basis.T, matrix.T, rcond=None)
    residual = float(np.max(np.abs(matrix - coef.T @ basis), initial=0.0))
    return coef, residual


def first_level_compress(table: ProbabilityTable, tol: float = DEFAULT_TOL) -> FirstLevelResult:
    """Extract a minimal fiducial set, r-vectors and Lambda matrix.

    The fiducial set is chosen by greedy row pivoting (deterministic; ties go
    to the smaller alpha) and presented in ascending alpha order.  An all-zero
    table yields the empty fiducial set, flagged degenerate.
    """
    mat = table.matrix
    rank = numerical_rank(mat, tol)
    if rank == 0:
        lam = LambdaMatrix(np.zeros((0, len(table.row_labels))), (), table.row_labels)
        empty = [RVector(np.zeros(0), (), lab) for lab in table.row_labels]
        return FirstLevelResult(FiducialSet((), ()), empty, lam,
                                residual=float(np.max(np.abs(mat), initial=0.0)),
                                degenerate=True)
    pivots = sorted(_greedy_pivot_rows(mat, rank))
    coef, residual = _expansion_coefficients(mat, pivots)
    labels = tuple(table.row_labels[i] for i in pivots)
    lam = LambdaMatrix(coef, labels, table.row_labels)
    r_vectors = [lam.r_vector(lab) for lab in table.row_labels]
    return FirstLevelResult(FiducialSet(labels, tuple(pivots)), r_vectors, lam, residual)


def second_level_compress(table1: ProbabilityTable, table2: ProbabilityTable,
                          pair_table: ProbabilityTable,
                          omega1: FiducialSet, omega2: FiducialSet,
                          tol: float = DEFAULT_TOL) -> SecondLevelResult:
    """Compress a two-region composite with fiducial rows restricted to
    Omega1 x Omega2.

    Raises CompressionViolationError if the product rows cannot span the
    composite table, i.e. the central subset result fails numerically.
    """
    if len(omega1) > len(table1.row_labels) or len(omega2) > len(table2.row_labels):
        raise ValueError("fiducial sets do not match component tables")
    candidates = [(l1, l2) for l1 in omega1.labels for l2 in omega2.labels]
    cand_pos = [pair_table.row_position(lab) for lab in candidates]
    cand_matrix = pair_table.matrix[cand_pos]

    full_rank = numerical_rank(pair_table.matrix, tol)
    picked = _greedy_pivot_rows(cand_matrix, full_rank)
    if len(picked) < full_rank or numerical_rank(cand_matrix, tol) < full_rank:
        raise CompressionViolationError(
            "composite fiducial set not contained in the product of component "
            f"fiducial sets (rank {full_rank}, achievable {len(picked)})")

    picked = sorted(picked)
    omega12 = FiducialSet(tuple(candidates[i] for i in picked),
                          tuple(cand_pos[i] for i in picked))
    coef, residual = _expansion_coefficients(pair_table.matrix, list(omega12.positions))

    col_of = {lab: j for j, lab in enumerate(pair_table.row_labels)}
    lam_cols = coef[:, [col_of[lab] for lab in candidates]]
    lam = LambdaMatrix(lam_cols, omega12.labels, tuple(candidates))
    r_vectors = {lab: RVector(coef[:, j].copy(), omega12.labels, lab)
                 for j, lab in enumerate(pair_table.row_labels)}
    return SecondLevelResult(omega12, lam, r_vectors, residual)


def causaloid_product(r1: RVector, r2: RVector, lam: LambdaMatrix) -> RVector:
    """Compose component r-vectors into the composite r-vector:
    r^{a1 a2}_{k1 k2} = sum_{l1 l2} r^{a1}_{l1} r^{a2}_{l2} L^{k1 k2}_{l1 l2}.

    The Lambda columns must run over basis1 x basis2 in major order of the
    first argument, as produced by second_level_compress.
    """
    expected = tuple((l1, l2) for l1 in r1.basis for l2 in r2.basis)
    if lam.col_labels != expected:
        raise ValueError("lambda columns do not match the r-vector bases")
    values = lam.matrix @ np.kron(r1.values, r2.values)
    return RVector(values, lam.row_labels, (r1.label, r2.label))
