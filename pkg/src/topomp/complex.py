"""Discrete topological domains: hypergraphs, simplicial, cellular and
combinatorial complexes.

A :class:`Complex` is an immutable ranked collection of cells together with a
cover relation (which lower cells bound which higher cells, with orientation
signs for the oriented domain kinds). Construction goes through
:func:`build_complex`, which validates all domain-specific invariants and
fixes a deterministic canonical ordering per rank, so that every matrix
derived downstream is reproducible.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from itertools import combinations
from typing import Iterable, Mapping, Sequence

import numpy as np

__all__ = [
    "DomainKind",
    "HG",
    "SC",
    "CC",
    "CCC",
    "ValidationError",
    "CellId",
    "CellSpec",
    "Cell",
    "Complex",
    "FeatureStore",
    "build_complex",
    "close_downward",
    "skeleton",
    "boundary_cells",
    "permute",
    "flip_orientation",
]


class ValidationError(ValueError):
    """A complex, cell or feature store violates a domain invariant."""


class DomainKind(enum.Enum):
    """The four discrete domains."""

    HYPERGRAPH = "hypergraph"
    SIMPLICIAL = "simplicial"
    CELLULAR = "cellular"
    COMBINATORIAL = "combinatorial"

    @property
    def oriented(self) -> bool:
        """Whether incidence entries carry +-1 orientation signs."""
        return self in (DomainKind.SIMPLICIAL, DomainKind.CELLULAR)

    @classmethod
    def parse(cls, value) -> "DomainKind":
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower()
        aliases = {
            "hg": cls.HYPERGRAPH,
            "hypergraph": cls.HYPERGRAPH,
            "sc": cls.SIMPLICIAL,
            "simplicial": cls.SIMPLICIAL,
            "cc": cls.CELLULAR,
            "cellular": cls.CELLULAR,
            "ccc": cls.COMBINATORIAL,
            "combinatorial": cls.COMBINATORIAL,
        }
        if key not in aliases:
            raise ValidationError(f"unknown domain kind: {value!r}")
        return aliases[key]


HG = DomainKind.HYPERGRAPH
SC = DomainKind.SIMPLICIAL
CC = DomainKind.CELLULAR
CCC = DomainKind.COMBINATORIAL


@dataclass(frozen=True, order=True)
class CellId:
    """Position of a cell: its rank and its index in the rank's skeleton."""

    rank: int
    index: int


@dataclass(frozen=True)
class CellSpec:
    """Declarative description of one cell, input to :func:`build_complex`.

    Args:
        vertices: labels of the vertices the cell touches, in any order.
        rank: hierarchical level (nodes 0, (hyper)edges 1, faces 2, ...).
        cycle: ordered vertex cycle fixing the orientation of a cellular
            2-cell; the traversal (v_i, v_{i+1}) of an edge counts +1 when it
            runs from the smaller to the larger label.
        boundary: explicit boundary as (ref, sign) pairs, where ref is a
            CellSpec, a vertex set, or an index into the cell list passed to
            build_complex. Required for cellular cells of rank >= 3.
    """

    vertices: tuple
    rank: int
    cycle: tuple | None = None
    boundary: tuple | None = None

    def __init__(self, vertices, rank, cycle=None, boundary=None):
        object.__setattr__(self, "vertices", tuple(vertices))
        object.__setattr__(self, "rank", int(rank))
        object.__setattr__(self, "cycle", None if cycle is None else tuple(cycle))
        if boundary is not None:
            boundary = tuple(
                (ref if isinstance(ref, (CellSpec, int)) else frozenset(ref), int(sign))
                for ref, sign in boundary
            )
        object.__setattr__(self, "boundary", boundary)


@dataclass(frozen=True)
class Cell:
    """A finalized cell inside a built Complex."""

    rank: int
    index: int
    vertices: tuple  # sorted labels
    cycle: tuple | None = None
    orientation: int = 1

    @property
    def vertex_set(self) -> frozenset:
        return frozenset(self.vertices)

    @property
    def cell_id(self) -> CellId:
        return CellId(self.rank, self.index)


class Complex:
    """Immutable ranked collection of cells with a signed cover relation.

    Do not instantiate directly; use :func:`build_complex`,
    :func:`close_downward` or one of the lifting maps.
    """

    __slots__ = ("kind", "max_rank", "_skeletons", "_boundary")

    def __init__(self, kind, skeletons, boundary):
        self.kind = kind
        self._skeletons = tuple(tuple(cells) for cells in skeletons)
        self.max_rank = len(self._skeletons) - 1
        self._boundary = boundary  # dict CellId -> tuple[(CellId, raw sign)]

    # -- basic queries ---------------------------------------------------

    @property
    def vertices(self) -> tuple:
        """Vertex labels in canonical (sorted) order."""
        return tuple(c.vertices[0] for c in self._skeletons[0])

    def n_cells(self, rank: int) -> int:
        if 0 <= rank <= self.max_rank:
            return len(self._skeletons[rank])
        return 0

    @property
    def shape(self) -> tuple:
        """Cells per rank, (n_0, ..., n_max)."""
        return tuple(len(s) for s in self._skeletons)

    def skeleton(self, rank: int) -> tuple:
        if not 0 <= rank <= self.max_rank:
            raise ValidationError(
                f"rank {rank} out of range (max rank {self.max_rank})"
            )
        return self._skeletons[rank]

    def cell(self, cid: CellId) -> Cell:
        if not 0 <= cid.rank <= self.max_rank:
            raise ValidationError(f"unknown cell {cid}: rank out of range")
        skel = self._skeletons[cid.rank]
        if not 0 <= cid.index < len(skel):
            raise ValidationError(f"unknown cell {cid}: index out of range")
        return skel[cid.index]

    def boundary_of(self, cid: CellId) -> tuple:
        """Cover entries into cid as ((CellId, sign), ...) in canonical order,
        with orientation flags applied."""
        x = self.cell(cid)
        out = []
        for low_id, sign in self._boundary.get(cid, ()):
            y = self.cell(low_id)
            out.append((low_id, sign * y.orientation * x.orientation))
        out.sort(key=lambda e: e[0])
        return tuple(out)

    def cover_pairs(self, low_rank: int, high_rank: int):
        """Yield (low index, high index, signed value) for cover entries
        between the two ranks."""
        for j, x in enumerate(self._skeletons[high_rank]):
            for low_id, sign in self._boundary.get(x.cell_id, ()):
                if low_id.rank == low_rank:
                    y = self._skeletons[low_rank][low_id.index]
                    yield low_id.index, j, sign * y.orientation * x.orientation

    def find(self, rank: int, vertex_set) -> int | None:
        """Index of the unique rank-r cell with this vertex set, or None."""
        want = frozenset(vertex_set)
        hits = [c.index for c in self._skeletons[rank] if c.vertex_set == want]
        if len(hits) > 1:
            raise ValidationError(
                f"vertex set {sorted(want)} names {len(hits)} cells at rank {rank}"
            )
        return hits[0] if hits else None

    def __repr__(self):
        return f"Complex({self.kind.value}, shape={self.shape})"


class FeatureStore(Mapping):
    """Per-rank feature matrices, one row per cell in canonical order.

    Heterogeneous feature dimensions across ranks are allowed. Arrays are
    stored as read-only float64.
    """

    def __init__(self, features: Mapping[int, np.ndarray], t: int = 0):
        data = {}
        for rank in sorted(features):
            arr = np.ascontiguousarray(np.asarray(features[rank], dtype=np.float64))
            if arr.ndim != 2:
                raise ValidationError(
                    f"features for rank {rank} must be 2-d, got shape {arr.shape}"
                )
            arr.setflags(write=False)
            data[int(rank)] = arr
        self._data = data
        self.t = t

    def __getitem__(self, rank: int) -> np.ndarray:
        return self._data[rank]

    def __iter__(self):
        return iter(self._data)

    def __len__(self):
        return len(self._data)

    def dim(self, rank: int) -> int:
        return self._data[rank].shape[1]

    def replace(self, rank: int, values: np.ndarray) -> "FeatureStore":
        merged = dict(self._data)
        merged[rank] = values
        return FeatureStore(merged, t=self.t)

    def validate_for(self, complex: Complex) -> "FeatureStore":
        for rank, arr in self._data.items():
            n = complex.n_cells(rank)
            if arr.shape[0] != n:
                raise ValidationError(
                    f"rank {rank} features have {arr.shape[0]} rows, "
                    f"skeleton has {n} cells"
                )
        return self

    def permuted(self, perms: Mapping[int, Sequence[int]]) -> "FeatureStore":
        """Reorder rows so row pi[i] of the result is row i of the input."""
        out = {}
        for rank, arr in self._data.items():
            pi = perms.get(rank)
            if pi is None:
                out[rank] = arr
            else:
                moved = np.empty_like(arr)
                moved[np.asarray(pi)] = arr
                out[rank] = moved
        return FeatureStore(out, t=self.t)


# ---------------------------------------------------------------------------
# construction


def _check_vertices(vertices) -> list:
    labels = list(vertices)
    if len(set(labels)) != len(labels):
        raise ValidationError("duplicate vertex labels")
    try:
        return sorted(labels)
    except TypeError as exc:
        raise ValidationError(f"vertex labels must be mutually orderable: {exc}")


def _canonical_key(spec: CellSpec):
    return tuple(sorted(spec.vertices))


def _validate_spec(kind: DomainKind, spec: CellSpec, vertex_set: set):
    verts = spec.vertices
    if len(verts) == 0:
        raise ValidationError("cell with empty vertex set")
    if len(set(verts)) != len(verts):
        raise ValidationError(f"cell {verts} repeats a vertex")
    unknown = [v for v in verts if v not in vertex_set]
    if unknown:
        raise ValidationError(f"cell {verts} references unknown vertex {unknown[0]!r}")
    r, size = spec.rank, len(verts)
    if r < 0:
        raise ValidationError(f"cell {verts} has negative rank {r}")
    if r == 0 and size != 1:
        raise ValidationError(f"rank-0 cell {verts} must be a single vertex")
    if kind is HG:
        if r not in (0, 1):
            raise ValidationError(f"hypergraph cell {verts} has rank {r}, only 0/1 allowed")
    elif kind is SC:
        if size != r + 1:
            raise ValidationError(
                f"simplex {verts} at rank {r} must have exactly {r + 1} vertices, has {size}"
            )
    elif kind is CC:
        if r == 1 and size != 2:
            raise ValidationError(f"cellular edge {verts} must have exactly 2 vertices")
        if r == 2 and spec.cycle is None and spec.boundary is None:
            raise ValidationError(
                f"cellular 2-cell {verts} needs an orientation cycle or explicit boundary"
            )
        if r >= 3 and spec.boundary is None:
            raise ValidationError(
                f"cellular rank-{r} cell {verts} needs an explicit boundary"
            )
        if spec.cycle is not None:
            cyc = spec.cycle
            if r != 2:
                raise ValidationError("orientation cycles only apply to 2-cells")
            if len(cyc) < 3 or len(set(cyc)) != len(cyc):
                raise ValidationError(f"orientation cycle {cyc} must list >=3 distinct vertices")
            if set(cyc) != set(verts):
                raise ValidationError(f"cycle {cyc} does not match cell vertices {verts}")
    elif kind is CCC:
        if size == 1 and r != 0:
            raise ValidationError(
                f"combinatorial singleton {verts} must have rank 0, got {r}"
            )
        if size > 1 and r < 1:
            raise ValidationError(f"combinatorial cell {verts} of size {size} needs rank >= 1")


def _simplex_boundary(cell: Cell, lower_index: dict) -> list:
    """Alternating-sign faces of a simplex: dropping the i-th sorted vertex
    contributes (-1)**i, so the boundary of a boundary telescopes to zero."""
    out = []
    for i in range(len(cell.vertices)):
        face = cell.vertices[:i] + cell.vertices[i + 1:]
        idx = lower_index.get(frozenset(face))
        if idx is None:
            raise ValidationError(
                f"missing face {face} of simplex {cell.vertices}; "
                "build from close_downward to materialize faces"
            )
        out.append((CellId(cell.rank - 1, idx), (-1) ** i))
    return out


def _cycle_boundary(cell: Cell, edges_by_set: dict) -> list:
    out = []
    cyc = cell.cycle
    for i, a in enumerate(cyc):
        b = cyc[(i + 1) % len(cyc)]
        key = frozenset((a, b))
        hits = edges_by_set.get(key, ())
        if len(hits) == 0:
            raise ValidationError(
                f"2-cell cycle {cyc} uses edge {sorted(key)} that is not in the complex"
            )
        if len(hits) > 1:
            raise ValidationError(
                f"2-cell cycle {cyc}: edge {sorted(key)} is ambiguous "
                "(parallel edges need an explicit boundary)"
            )
        sign = 1 if a < b else -1
        out.append((CellId(1, hits[0]), sign))
    return out


def build_complex(kind, vertices, cells: Iterable[CellSpec]) -> Complex:
    """Validate cell specs and assemble a finalized, canonically ordered Complex.

    Vertices are ordered by label; cells of each rank lexicographically by
    sorted vertex labels, insertion order breaking ties. Raises
    ValidationError on any domain-invariant violation.
    """
    kind = DomainKind.parse(kind)
    labels = _check_vertices(vertices)
    vertex_set = set(labels)
    specs_in = list(cells)

    for spec in specs_in:
        if not isinstance(spec, CellSpec):
            raise ValidationError(f"expected CellSpec, got {type(spec).__name__}")
        _validate_spec(kind, spec, vertex_set)

    # resolve int boundary refs against the input list before reordering
    def resolve_ref(ref):
        if isinstance(ref, int):
            if not 0 <= ref < len(specs_in):
                raise ValidationError(f"boundary reference #{ref} out of range")
            return specs_in[ref]
        return ref

    # drop explicit rank-0 specs: vertices are materialized from the label list
    specs = [s for s in specs_in if s.rank > 0]
    max_rank = max((s.rank for s in specs), default=0)
    by_rank: list[list[CellSpec]] = [[] for _ in range(max_rank + 1)]
    for s in specs:
        by_rank[s.rank].append(s)

    # canonical ordering: label order at rank 0, lexicographic sorted-vertex
    # tuples above, stable in insertion order
    skeletons: list[list[Cell]] = [
        [Cell(0, i, (lab,)) for i, lab in enumerate(labels)]
    ]
    spec_position: dict[int, CellId] = {}
    for r in range(1, max_rank + 1):
        ordered = sorted(by_rank[r], key=_canonical_key)
        if kind in (SC, HG, CCC):
            seen = {}
            for s in ordered:
                key = frozenset(s.vertices)
                if key in seen:
                    raise ValidationError(
                        f"duplicate rank-{r} cell {tuple(sorted(s.vertices))}"
                    )
                seen[key] = s
        skeletons.append(
            [
                Cell(r, i, tuple(sorted(s.vertices)), cycle=s.cycle)
                for i, s in enumerate(ordered)
            ]
        )
        for i, s in enumerate(ordered):
            spec_position[id(s)] = CellId(r, i)

    vertex_pos = {lab: i for i, lab in enumerate(labels)}
    lower_index_by_rank = [
        {c.vertex_set: c.index for c in skel} if kind in (SC, HG, CCC) else {}
        for skel in skeletons
    ]
    edges_by_set: dict[frozenset, list[int]] = {}
    if len(skeletons) > 1:
        for c in skeletons[1]:
            edges_by_set.setdefault(c.vertex_set, []).append(c.index)

    spec_by_position = {}
    for r in range(1, max_rank + 1):
        for s in by_rank[r]:
            spec_by_position[spec_position[id(s)]] = s

    boundary: dict[CellId, tuple] = {}
    for r in range(1, max_rank + 1):
        for cell in skeletons[r]:
            spec = spec_by_position[cell.cell_id]
            entries: list
            if spec.boundary is not None:
                entries = []
                for ref, sign in spec.boundary:
                    ref = resolve_ref(ref)
                    if isinstance(ref, CellSpec):
                        if ref.rank == 0:
                            target = CellId(0, vertex_pos[ref.vertices[0]])
                        else:
                            target = spec_position.get(id(ref))
                        if target is None:
                            raise ValidationError(
                                f"boundary of {cell.vertices} references a cell "
                                "that is not part of this complex"
                            )
                    else:  # vertex set
                        idx = None
                        want = frozenset(ref)
                        cands = [
                            c.index for c in skeletons[r - 1] if c.vertex_set == want
                        ] if r - 1 < len(skeletons) else []
                        if len(cands) != 1:
                            raise ValidationError(
                                f"boundary ref {sorted(want)} of {cell.vertices} "
                                f"matches {len(cands)} rank-{r - 1} cells"
                            )
                        idx = cands[0]
                        target = CellId(r - 1, idx)
                    if target.rank != r - 1:
                        raise ValidationError(
                            f"boundary of rank-{r} cell {cell.vertices} must have "
                            f"rank {r - 1}, got rank {target.rank}"
                        )
                    if sign not in (1, -1):
                        raise ValidationError(f"boundary sign must be +-1, got {sign}")
                    entries.append((target, sign))
            elif kind is SC or (kind is CC and r == 1):
                if r == 1:
                    a, b = cell.vertices
                    entries = [
                        (CellId(0, vertex_pos[a]), -1),
                        (CellId(0, vertex_pos[b]), +1),
                    ]
                else:
                    entries = _simplex_boundary(cell, lower_index_by_rank[r - 1])
            elif kind is CC and cell.cycle is not None:
                entries = _cycle_boundary(cell, edges_by_set)
            elif kind is HG:
                entries = [(CellId(0, vertex_pos[v]), +1) for v in cell.vertices]
            elif kind is CCC:
                entries = []  # filled below by containment
            else:  # pragma: no cover - guarded by _validate_spec
                raise ValidationError(f"cannot derive boundary of {cell.vertices}")
            if entries:
                boundary[cell.cell_id] = tuple(entries)

    if kind is CCC:
        # cover by vertex-set containment, any rank gap allowed
        all_cells = [c for skel in skeletons for c in skel]
        for hi in all_cells:
            entries = []
            for lo in all_cells:
                if lo.rank < hi.rank and lo.vertex_set <= hi.vertex_set:
                    entries.append((lo.cell_id, +1))
            if entries:
                boundary[hi.cell_id] = tuple(entries)
        # rank monotonicity on proper containment (a cell may sit at a higher
        # rank than another cell with the same vertex set)
        for a in all_cells:
            for b in all_cells:
                if a.vertex_set < b.vertex_set and a.rank > b.rank:
                    raise ValidationError(
                        f"rank monotonicity violated: {tuple(sorted(a.vertex_set))} "
                        f"(rank {a.rank}) is contained in {tuple(sorted(b.vertex_set))} "
                        f"(rank {b.rank})"
                    )

    cx = Complex(kind, skeletons, boundary)

    if kind is CC:
        for r in range(2, max_rank + 1):
            for cell in skeletons[r]:
                entries = boundary.get(cell.cell_id, ())
                if len(entries) < r + 1:
                    raise ValidationError(
                        f"cellular rank-{r} cell {cell.vertices} has "
                        f"{len(entries)} boundary cells, needs at least {r + 1}"
                    )
        _check_boundary_squares_to_zero(cx)

    return cx


def _check_boundary_squares_to_zero(cx: Complex):
    # exact integer check that composing two boundary steps vanishes
    for r in range(2, cx.max_rank + 1):
        lo, mid, hi = cx.n_cells(r - 2), cx.n_cells(r - 1), cx.n_cells(r)
        if lo == 0 or mid == 0 or hi == 0:
            continue
        b1 = np.zeros((lo, mid), dtype=np.int64)
        for i, j, s in cx.cover_pairs(r - 2, r - 1):
            b1[i, j] = s
        b2 = np.zeros((mid, hi), dtype=np.int64)
        for i, j, s in cx.cover_pairs(r - 1, r):
            b2[i, j] = s
        if np.any(b1 @ b2):
            raise ValidationError(
                f"boundary of boundary is nonzero between ranks {r - 2}..{r}: "
                "explicit boundary signs do not form closed cycles"
            )


def close_downward(vertices, top_cells: Iterable) -> Complex:
    """Build a simplicial complex as the downward closure of the given top
    cells (every subset of every top cell is materialized)."""
    seen: dict[frozenset, tuple] = {}
    for cell in top_cells:
        verts = tuple(sorted(set(cell)))
        for k in range(1, len(verts) + 1):
            for sub in combinations(verts, k):
                seen.setdefault(frozenset(sub), sub)
    specs = [
        CellSpec(verts, rank=len(verts) - 1)
        for verts in seen.values()
        if len(verts) > 1
    ]
    return build_complex(SC, vertices, specs)


def skeleton(complex: Complex, rank: int) -> tuple:
    """All rank-r cells in canonical order."""
    return complex.skeleton(rank)


def boundary_cells(complex: Complex, x: CellId) -> tuple:
    """Cover entries into x as ((CellId, sign), ...); empty for rank 0."""
    return complex.boundary_of(x)


def permute(complex: Complex, perms: Mapping[int, Sequence[int]]):
    """Reorder skeletons by per-rank index permutations.

    perms maps rank -> pi where cell i moves to position pi[i]. Ranks not
    present are left in place. Returns (permuted complex, full permutation
    map including identities).
    """
    full: dict[int, tuple] = {}
    for r in range(complex.max_rank + 1):
        n = complex.n_cells(r)
        pi = tuple(perms.get(r, range(n)))
        if sorted(pi) != list(range(n)):
            raise ValidationError(f"permutation for rank {r} is not a bijection on 0..{n - 1}")
        full[r] = pi

    skeletons = []
    for r in range(complex.max_rank + 1):
        pi = full[r]
        moved: list = [None] * len(pi)
        for cell in complex.skeleton(r):
            moved[pi[cell.index]] = cell
        skeletons.append(
            [
                Cell(r, i, c.vertices, cycle=c.cycle, orientation=c.orientation)
                for i, c in enumerate(moved)
            ]
        )

    boundary = {}
    for cid, entries in complex._boundary.items():
        new_id = CellId(cid.rank, full[cid.rank][cid.index])
        boundary[new_id] = tuple(
            (CellId(low.rank, full[low.rank][low.index]), sign) for low, sign in entries
        )
    return Complex(complex.kind, skeletons, boundary), full


def flip_orientation(complex: Complex, rank: int, indices: Iterable[int]) -> Complex:
    """Flip the orientation of the given rank-r cells (oriented domains only).

    Flipping a cell negates its column in the incidence matrix of its rank
    and its row in the incidence matrix one rank up.
    """
    if not complex.kind.oriented:
        raise ValidationError(f"{complex.kind.value} complexes carry no orientation")
    if rank < 1 or rank > complex.max_rank:
        raise ValidationError(f"cannot flip orientation at rank {rank}")
    flip = set(indices)
    n = complex.n_cells(rank)
    for i in flip:
        if not 0 <= i < n:
            raise ValidationError(f"cell index {i} out of range at rank {rank}")
    skeletons = []
    for r in range(complex.max_rank + 1):
        cells = []
        for c in complex.skeleton(r):
            o = -c.orientation if (r == rank and c.index in flip) else c.orientation
            cells.append(Cell(r, c.index, c.vertices, cycle=c.cycle, orientation=o))
        skeletons.append(cells)
    return Complex(complex.kind, skeletons, complex._boundary)
