"""Lifting maps: pre-processing a graph (or cellular complex) into a richer
computational domain."""

from __future__ import annotations

from typing import Iterable, Sequence

from .complex import CC, CCC, CellSpec, Complex, ValidationError, build_complex

__all__ = [
    "graph_of",
    "clique_lift",
    "cycle_lift",
    "group_lift",
    "hyperedge_augment",
]

# enumeration guard for cycle_lift
MAX_CYCLES = 10_000


def graph_of(complex: Complex):
    """Extract (vertices, edges) from the 1-skeleton of any complex; only
    size-2 rank-1 cells count as edges."""
    vertices = list(complex.vertices)
    edges = []
    if complex.max_rank >= 1:
        for c in complex.skeleton(1):
            if len(c.vertices) == 2:
                edges.append(tuple(c.vertices))
    return vertices, edges


def _check_simple(vertices: Sequence, edges: Iterable) -> list[tuple]:
    vset = set(vertices)
    if len(vset) != len(list(vertices)):
        raise ValidationError("duplicate vertex labels")
    out = []
    seen = set()
    for e in edges:
        a, b = sorted(e)
        if a == b:
            raise ValidationError(f"self-loop {a!r} not allowed in a simple graph")
        if a not in vset or b not in vset:
            raise ValidationError(f"edge {e} references unknown vertex")
        if (a, b) in seen:
            continue
        seen.add((a, b))
        out.append((a, b))
    return sorted(out)


def clique_lift(vertices: Sequence, edges: Iterable, max_rank: int) -> Complex:
    """Lift a simple graph to a simplicial complex: every (k+1)-clique with
    k <= max_rank becomes a rank-k simplex."""
    if max_rank < 1:
        raise ValidationError("max_rank must be >= 1")
    simple = _check_simple(vertices, edges)
    adj: dict = {v: set() for v in vertices}
    for a, b in simple:
        adj[a].add(b)
        adj[b].add(a)

    order = sorted(vertices)
    cliques = []

    def extend(base: tuple, candidates: list):
        if 2 <= len(base) <= max_rank + 1:
            cliques.append(base)
        if len(base) == max_rank + 1:
            return
        for i, v in enumerate(candidates):
            extend(base + (v,), [w for w in candidates[i + 1:] if w in adj[v]])

    for v in order:
        extend((v,), sorted(w for w in adj[v] if w > v))

    specs = [CellSpec(c, rank=len(c) - 1) for c in cliques]
    return build_complex("simplicial", vertices, specs)


def _chordless_cycles(vertices: Sequence, edges: list[tuple], max_len: int):
    """All chordless cycles of length 3..max_len, each a tuple starting at
    its smallest vertex in its lexicographically smaller direction.

    Grows induced paths whose start is the cycle minimum; a candidate
    adjacent to the start closes a cycle and is never extended, so any
    adjacency to a non-consecutive path vertex (a chord) prunes the branch.
    """
    adj: dict = {v: set() for v in vertices}
    for a, b in edges:
        adj[a].add(b)
        adj[b].add(a)
    cycles = []

    def search(path: tuple, blocked: frozenset):
        if len(cycles) > MAX_CYCLES:
            raise ValidationError(
                f"more than {MAX_CYCLES} chordless cycles; lower max_len or prune the graph"
            )
        head, tail = path[0], path[-1]
        for nxt in sorted(adj[tail]):
            if nxt <= head or nxt in blocked:
                continue
            if any(w in adj[nxt] for w in path[1:-1]):
                continue
            if len(path) >= 2 and head in adj[nxt]:
                if len(path) + 1 <= max_len and path[1] < nxt:
                    cycles.append(path + (nxt,))
                continue
            if len(path) < max_len:
                search(path + (nxt,), blocked | {nxt})

    for v in sorted(vertices):
        search((v,), frozenset((v,)))
    return sorted(cycles)


def cycle_lift(vertices: Sequence, edges: Iterable, max_len: int) -> Complex:
    """Lift a simple graph to a cellular complex: each chordless cycle of
    length 3..max_len becomes an oriented 2-cell."""
    if max_len < 3:
        raise ValidationError("max_len must be >= 3")
    simple = _check_simple(vertices, edges)
    specs = [CellSpec(e, rank=1) for e in simple]
    for cyc in _chordless_cycles(vertices, simple, max_len):
        specs.append(CellSpec(tuple(sorted(cyc)), rank=2, cycle=cyc))
    return build_complex("cellular", vertices, specs)


def group_lift(
    vertices: Sequence,
    edges: Iterable,
    groups: Iterable,
    keep_edges: bool = True,
) -> Complex:
    """Lift a graph to a hypergraph: one hyperedge per group, plus the
    original edges as size-2 hyperedges when keep_edges is set."""
    simple = _check_simple(vertices, edges)
    seen = set()
    specs = []
    for g in groups:
        key = frozenset(g)
        if not key:
            raise ValidationError("empty group")
        if key in seen:
            continue
        seen.add(key)
        specs.append(CellSpec(tuple(sorted(key)), rank=1))
    if keep_edges:
        for e in simple:
            if frozenset(e) not in seen:
                seen.add(frozenset(e))
                specs.append(CellSpec(e, rank=1))
    return build_complex("hypergraph", vertices, specs)


def hyperedge_augment(complex: Complex, hyper_cells: Iterable[tuple]) -> Complex:
    """Add ranked hyper-cells to a cellular complex, lifting it to a
    combinatorial complex. Cells equal to an existing (rank, vertex set)
    pair are skipped; rank-monotonicity violations raise."""
    if complex.kind not in (CC, CCC):
        raise ValidationError(
            f"hyperedge_augment lifts cellular complexes, got {complex.kind.value}"
        )
    existing = set()
    specs = []
    for r in range(1, complex.max_rank + 1):
        for c in complex.skeleton(r):
            key = (r, c.vertex_set)
            if key in existing:
                continue
            existing.add(key)
            specs.append(CellSpec(c.vertices, rank=r))
    for verts, rank in hyper_cells:
        key = (int(rank), frozenset(verts))
        if key in existing:
            continue
        existing.add(key)
        specs.append(CellSpec(tuple(sorted(set(verts))), rank=int(rank)))
    return build_complex("combinatorial", complex.vertices, specs)
