"""Neighborhood matrices of a complex: incidence, Laplacians, adjacencies,
degrees, plus homological diagnostics used to validate construction.

Conventions. The rank-r incidence matrix B_r has shape n_{r-1} x n_r: entry
(i, j) is the cover sign of rank-(r-1) cell i bounding rank-r cell j (+-1 on
oriented domains, +1 on hypergraphs and combinatorial complexes). The square
n_r x n_r operators follow:

    down Laplacian   L_down,r = B_r^T B_r
    up Laplacian     L_up,r   = B_{r+1} B_{r+1}^T   (zero if no (r+1)-cells)
    Hodge Laplacian  H_r      = L_down,r + L_up,r   (H_0 = L_up,0)
    up adjacency     A_up,r   = D_r - L_up,r
    down adjacency   A_down,r = diag(L_down,r) - L_down,r

where D_r counts the (r+1)-cells covering each r-cell. L_up,0 is the usual
graph Laplacian. Entries stay exact integers until normalization.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np
import scipy.sparse as sp

from .complex import CC, SC, Complex, ValidationError

__all__ = [
    "NeighborhoodMatrix",
    "incidence",
    "coboundary",
    "down_laplacian",
    "up_laplacian",
    "hodge_laplacian",
    "degree",
    "adjacency_up",
    "adjacency_down",
    "incidence_between",
    "normalize",
    "betti",
    "rank_exact",
    "to_coo_text",
]

# above this many nonzeros, betti falls back to floating-point rank
_EXACT_RANK_NNZ_LIMIT = 2000


@dataclass(frozen=True)
class NeighborhoodMatrix:
    """A sparse matrix tagged with the ranks it connects.

    The matrix maps rank source_rank features to rank target_rank features,
    i.e. its shape is n_{target} x n_{source}.
    """

    kind: str
    source_rank: int
    target_rank: int
    matrix: sp.csr_matrix

    @property
    def shape(self):
        return self.matrix.shape

    def toarray(self) -> np.ndarray:
        return self.matrix.toarray()


def _csr(rows, cols, vals, shape, dtype=np.int64) -> sp.csr_matrix:
    m = sp.csr_matrix(
        (np.asarray(vals, dtype=dtype), (np.asarray(rows, dtype=np.int64), np.asarray(cols, dtype=np.int64))),
        shape=shape,
    )
    m.sum_duplicates()
    m.sort_indices()
    return m


def _check_rank(complex: Complex, r: int, low: int = 0):
    if not low <= r <= complex.max_rank:
        raise ValidationError(
            f"rank {r} out of range [{low}, {complex.max_rank}]"
        )


def incidence(complex: Complex, r: int) -> NeighborhoodMatrix:
    """Signed incidence B_r (n_{r-1} x n_r) recording which (r-1)-cells
    bound which r-cells."""
    _check_rank(complex, r, low=1)
    rows, cols, vals = [], [], []
    for i, j, s in complex.cover_pairs(r - 1, r):
        rows.append(i)
        cols.append(j)
        vals.append(s)
    m = _csr(rows, cols, vals, (complex.n_cells(r - 1), complex.n_cells(r)))
    return NeighborhoodMatrix("boundary", r, r - 1, m)


def coboundary(complex: Complex, r: int) -> NeighborhoodMatrix:
    """Transpose of incidence: maps rank r-1 to rank r."""
    b = incidence(complex, r)
    return NeighborhoodMatrix("coboundary", r - 1, r, b.matrix.T.tocsr())


def down_laplacian(complex: Complex, r: int) -> NeighborhoodMatrix:
    _check_rank(complex, r, low=1)
    b = incidence(complex, r).matrix
    m = (b.T @ b).tocsr()
    m.sort_indices()
    return NeighborhoodMatrix("down_laplacian", r, r, m)


def up_laplacian(complex: Complex, r: int) -> NeighborhoodMatrix:
    _check_rank(complex, r)
    n = complex.n_cells(r)
    if r + 1 > complex.max_rank:
        m = sp.csr_matrix((n, n), dtype=np.int64)
    else:
        b = incidence(complex, r + 1).matrix
        m = (b @ b.T).tocsr()
        m.sort_indices()
    return NeighborhoodMatrix("up_laplacian", r, r, m)


def hodge_laplacian(complex: Complex, r: int) -> NeighborhoodMatrix:
    _check_rank(complex, r)
    m = up_laplacian(complex, r).matrix
    if r >= 1:
        m = (m + down_laplacian(complex, r).matrix).tocsr()
        m.sort_indices()
    return NeighborhoodMatrix("hodge", r, r, m)


def degree(complex: Complex, r: int) -> NeighborhoodMatrix:
    """Diagonal counts of (r+1)-cells covering each r-cell."""
    _check_rank(complex, r)
    n = complex.n_cells(r)
    counts = np.zeros(n, dtype=np.int64)
    if r + 1 <= complex.max_rank:
        for i, _j, _s in complex.cover_pairs(r, r + 1):
            counts[i] += 1
    m = sp.diags(counts, format="csr", dtype=np.int64) if n else sp.csr_matrix((0, 0), dtype=np.int64)
    return NeighborhoodMatrix("degree", r, r, m)


def adjacency_up(complex: Complex, r: int) -> NeighborhoodMatrix:
    m = (degree(complex, r).matrix - up_laplacian(complex, r).matrix).tocsr()
    m.sort_indices()
    return NeighborhoodMatrix("adjacency_up", r, r, m)


def adjacency_down(complex: Complex, r: int) -> NeighborhoodMatrix:
    """diag(L_down) - L_down: lower degrees live on the diagonal of the down
    Laplacian, which keeps the shapes at rank r."""
    _check_rank(complex, r, low=1)
    ld = down_laplacian(complex, r).matrix
    m = (sp.diags(ld.diagonal(), format="csr", dtype=np.int64) - ld).tocsr()
    m.sort_indices()
    return NeighborhoodMatrix("adjacency_down", r, r, m)


def incidence_between(complex: Complex, r_low: int, r_high: int) -> NeighborhoodMatrix:
    """Unsigned 0/1 containment of rank r_low cells in rank r_high cells
    (n_low x n_high), for message passing between arbitrary ranks."""
    if r_low >= r_high:
        raise ValidationError(f"need r_low < r_high, got {r_low} >= {r_high}")
    _check_rank(complex, r_high, low=1)
    shape = (complex.n_cells(r_low), complex.n_cells(r_high))
    if complex.kind.oriented:
        # compose unsigned boundary steps and clip to containment
        m = None
        for r in range(r_low + 1, r_high + 1):
            step = incidence(complex, r).matrix.copy()
            step.data = np.abs(step.data)
            m = step if m is None else (m @ step)
        m = m.tocsr()
        m.data = np.ones_like(m.data)
    else:
        rows, cols = [], []
        for i, j, _s in complex.cover_pairs(r_low, r_high):
            rows.append(i)
            cols.append(j)
        m = _csr(rows, cols, np.ones(len(rows)), shape)
    m.sort_indices()
    return NeighborhoodMatrix("incidence_between", r_high, r_low, m)


def normalize(nm: NeighborhoodMatrix, scheme: str = "none") -> NeighborhoodMatrix:
    """Degree-normalize a neighborhood matrix.

    sym_degree scales rows and columns by 1/sqrt of their absolute sums;
    row_stochastic scales rows by their absolute sums. Zero rows/columns are
    left untouched rather than producing NaNs.
    """
    if scheme == "none":
        return nm
    m = nm.matrix.astype(np.float64).tocsr()
    absm = abs(m)
    if scheme == "sym_degree":
        dr = np.asarray(absm.sum(axis=1)).ravel()
        dc = np.asarray(absm.sum(axis=0)).ravel()
        sr = np.zeros_like(dr)
        sr[dr > 0] = 1.0 / np.sqrt(dr[dr > 0])
        sc = np.zeros_like(dc)
        sc[dc > 0] = 1.0 / np.sqrt(dc[dc > 0])
        m = sp.diags(sr) @ m @ sp.diags(sc)
    elif scheme == "row_stochastic":
        dr = np.asarray(absm.sum(axis=1)).ravel()
        sr = np.zeros_like(dr)
        sr[dr > 0] = 1.0 / dr[dr > 0]
        m = sp.diags(sr) @ m
    else:
        raise ValidationError(f"unknown normalization scheme: {scheme!r}")
    m = m.tocsr()
    m.sort_indices()
    return NeighborhoodMatrix(nm.kind, nm.source_rank, nm.target_rank, m)


def rank_exact(matrix) -> int:
    """Matrix rank over the rationals by Gaussian elimination with exact
    Fraction arithmetic."""
    a = np.asarray(matrix if not sp.issparse(matrix) else matrix.toarray())
    rows = [[Fraction(int(v)) for v in row] for row in a]
    nrows = len(rows)
    ncols = a.shape[1] if a.ndim == 2 else 0
    rank = 0
    for col in range(ncols):
        pivot = next((r for r in range(rank, nrows) if rows[r][col] != 0), None)
        if pivot is None:
            continue
        rows[rank], rows[pivot] = rows[pivot], rows[rank]
        prow = rows[rank]
        inv = Fraction(1, 1) / prow[col]
        for r in range(rank + 1, nrows):
            factor = rows[r][col] * inv
            if factor:
                rows[r] = [x - factor * p for x, p in zip(rows[r], prow)]
        rank += 1
        if rank == nrows:
            break
    return rank


def _matrix_rank(m: sp.csr_matrix) -> int:
    if min(m.shape) == 0 or m.nnz == 0:
        return 0
    if m.nnz <= _EXACT_RANK_NNZ_LIMIT:
        return rank_exact(m)
    sv = np.linalg.svd(m.toarray().astype(np.float64), compute_uv=False)
    return int(np.sum(sv > 1e-10 * sv[0]))


def betti(complex: Complex, r: int) -> int:
    """r-th Betti number via rank-nullity over the boundary maps; equals the
    kernel dimension of the r-Hodge Laplacian."""
    if complex.kind not in (SC, CC):
        raise ValidationError(
            f"betti is undefined on an orientation-free domain ({complex.kind.value})"
        )
    _check_rank(complex, r)
    rank_low = _matrix_rank(incidence(complex, r).matrix) if r >= 1 else 0
    rank_high = (
        _matrix_rank(incidence(complex, r + 1).matrix) if r + 1 <= complex.max_rank else 0
    )
    return complex.n_cells(r) - rank_low - rank_high


def to_coo_text(nm: NeighborhoodMatrix) -> str:
    """Coordinate-list export: one 'row col value' line per nonzero."""
    coo = nm.matrix.tocoo()
    order = np.lexsort((coo.col, coo.row))
    lines = []
    for k in order:
        v = coo.data[k]
        val = str(int(v)) if float(v).is_integer() else format(float(v), ".17g")
        lines.append(f"{coo.row[k]} {coo.col[k]} {val}")
    return "\n".join(lines) + ("\n" if lines else "")
