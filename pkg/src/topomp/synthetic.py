"""Seeded generators: random complexes for property testing and the two
desk-scale task datasets (edge-flow trajectory classification on a holed
grid, node classification on a two-block hypergraph)."""

from __future__ import annotations

import random
from itertools import combinations

import numpy as np

from .complex import CellSpec, Complex, FeatureStore, build_complex, close_downward
from .lifting import cycle_lift, hyperedge_augment

__all__ = [
    "random_graph",
    "random_simplicial",
    "random_cellular",
    "random_hypergraph",
    "random_combinatorial",
    "random_features",
    "holed_grid_complex",
    "trajectory_dataset",
    "block_hypergraph_dataset",
]


def _labels(n: int) -> list[str]:
    width = len(str(n - 1)) if n > 1 else 1
    return [f"v{i:0{width}d}" for i in range(n)]


def random_graph(seed: int, n_min: int = 4, n_max: int = 12, p: float = 0.35):
    """Erdos-Renyi style graph; returns (vertices, edges)."""
    rng = random.Random(seed)
    n = rng.randint(n_min, n_max)
    vertices = _labels(n)
    edges = [
        (a, b) for a, b in combinations(vertices, 2) if rng.random() < p
    ]
    return vertices, edges


def random_simplicial(seed: int, max_vertices: int = 15, max_rank: int = 3) -> Complex:
    """Random downward-closed simplicial complex."""
    rng = random.Random(seed ^ 0x5C)
    n = rng.randint(3, max_vertices)
    vertices = _labels(n)
    tops = []
    for _ in range(rng.randint(2, max(3, n // 2))):
        size = rng.randint(2, min(max_rank + 1, n))
        tops.append(tuple(rng.sample(vertices, size)))
    return close_downward(vertices, tops)


def random_cellular(seed: int, n_min: int = 4, n_max: int = 10) -> Complex:
    """Cycle-lift of a random graph (2-cells on chordless cycles)."""
    vertices, edges = random_graph(seed ^ 0xCC, n_min, n_max, p=0.4)
    return cycle_lift(vertices, edges, max_len=5)


def random_hypergraph(seed: int, n_min: int = 4, n_max: int = 12) -> Complex:
    rng = random.Random(seed ^ 0x49)
    n = rng.randint(n_min, n_max)
    vertices = _labels(n)
    seen = set()
    specs = []
    for _ in range(rng.randint(2, n)):
        size = rng.randint(1, min(5, n))
        he = frozenset(rng.sample(vertices, size))
        if he in seen:
            continue
        seen.add(he)
        specs.append(CellSpec(tuple(sorted(he)), rank=1))
    return build_complex("hypergraph", vertices, specs)


def random_combinatorial(seed: int, n_min: int = 4, n_max: int = 10) -> Complex:
    """Random cellular complex augmented with a few high-rank hyper-cells."""
    rng = random.Random(seed ^ 0x3C)
    base = random_cellular(seed, n_min, n_max)
    vertices = list(base.vertices)
    cells = []
    max_existing = base.max_rank
    for _ in range(rng.randint(1, 3)):
        size = rng.randint(3, max(3, len(vertices) // 2))
        vs = tuple(sorted(rng.sample(vertices, min(size, len(vertices)))))
        cells.append((vs, max_existing + 1))
    try:
        return hyperedge_augment(base, cells)
    except Exception:
        # containment clash with an existing cell: fall back to the full set
        return hyperedge_augment(base, [(tuple(vertices), max_existing + 1)])


def random_features(complex: Complex, dims, seed: int) -> FeatureStore:
    """Gaussian features; dims is an int (homogeneous) or a rank->dim map."""
    rng = np.random.default_rng(seed)
    feats = {}
    for r in range(complex.max_rank + 1):
        d = dims if isinstance(dims, int) else dims.get(r)
        if d is None:
            continue
        feats[r] = rng.standard_normal((complex.n_cells(r), d))
    return FeatureStore(feats)


# ---------------------------------------------------------------------------
# trajectory task: triangulated grid with two square holes


def _grid_vertex(i: int, j: int, cols: int) -> str:
    return f"v{i:02d}{j:02d}"


def holed_grid_complex(cells_per_side: int = 8, holes=((1, 1), (4, 4), (5, 4), (4, 5), (5, 5))):
    """Triangulated square grid as a simplicial complex, with the listed unit
    squares removed (their faces and interior-only edges dropped).

    By default one single-cell hole sits near the lower-left corner and one
    2x2 hole near the upper-right, so the two holes have distinct local
    structure. Returns (complex, hole_centers) where hole_centers are (x, y)
    midpoints of the holes in grid coordinates.
    """
    n = cells_per_side
    holes = set(holes)
    for (i, j) in holes:
        if not (0 <= i < n and 0 <= j < n):
            raise ValueError(f"hole square {(i, j)} outside the {n}x{n} grid")
    tris = []
    for i in range(n):
        for j in range(n):
            if (i, j) in holes:
                continue
            a = _grid_vertex(i, j, n)
            b = _grid_vertex(i + 1, j, n)
            c = _grid_vertex(i, j + 1, n)
            d = _grid_vertex(i + 1, j + 1, n)
            tris.append((a, b, d))
            tris.append((a, d, c))
    used = sorted({v for t in tris for v in t})
    cx = close_downward(used, tris)

    # connected components of hole squares under 4-adjacency
    remaining = set(holes)
    groups: list[list] = []
    while remaining:
        seed_sq = min(remaining)
        comp = {seed_sq}
        frontier = [seed_sq]
        while frontier:
            x, y = frontier.pop()
            for nb in ((x + 1, y), (x - 1, y), (x, y + 1), (x, y - 1)):
                if nb in remaining and nb not in comp:
                    comp.add(nb)
                    frontier.append(nb)
        remaining -= comp
        groups.append(sorted(comp))
    groups.sort(key=lambda g: g[0])
    centers = [
        (sum(s[0] for s in g) / len(g) + 0.5, sum(s[1] for s in g) / len(g) + 0.5)
        for g in groups
    ]
    return cx, centers


def _loop_around(center, radius: float, rng: random.Random, n: int):
    """Counterclockwise lattice loop hugging a hole: the offset rectangle
    with per-side jitter (kept tight so hole-adjacent structure stays within
    a two-layer locality radius), plus a few outward one-cell detours."""
    cx, cy = center
    rx = radius + rng.choice((0.0, 0.5))
    ry = radius + rng.choice((0.0, 0.5))
    x0 = max(0, int(round(cx - rx)))
    x1 = min(n, int(round(cx + rx)))
    y0 = max(0, int(round(cy - ry)))
    y1 = min(n, int(round(cy + ry)))
    path = []
    for x in range(x0, x1):
        path.append((x, y0))
    for y in range(y0, y1):
        path.append((x1, y))
    for x in range(x1, x0, -1):
        path.append((x, y1))
    for y in range(y1, y0, -1):
        path.append((x0, y))
    if x0 >= x1 or y0 >= y1:
        return []
    for _ in range(rng.randint(0, 3)):
        path = _bump(path, rng, n)
    return path


def _bump(path: list, rng: random.Random, n: int):
    """Replace one straight step with a three-step outward detour."""
    i = rng.randrange(len(path))
    (ax, ay) = path[i]
    (bx, by) = path[(i + 1) % len(path)]
    dx, dy = bx - ax, by - ay
    # outward normal for a counterclockwise loop is the right-hand side
    ox, oy = dy, -dx
    p1 = (ax + ox, ay + oy)
    p2 = (bx + ox, by + oy)
    for (x, y) in (p1, p2):
        if not (0 <= x <= n and 0 <= y <= n):
            return path
    return path[: i + 1] + [p1, p2] + path[i + 1:]


def trajectory_dataset(n_samples: int = 400, seed: int = 0, cells_per_side: int = 8):
    """Synthetic edge-flow classification set: loops circling one of the two
    grid holes, labeled by which hole they circle.

    Each sample is a counterclockwise loop encoded as a +-1 flow against the
    canonical edge orientations. Returns (complex, samples, train_idx,
    test_idx) with a 75/25 split; samples are (edge_indices, signs, label).
    """
    cx, centers = holed_grid_complex(cells_per_side)
    rng = random.Random(seed)
    edge_index = {c.vertex_set: c.index for c in cx.skeleton(1)}

    samples = []
    attempts = 0
    while len(samples) < n_samples and attempts < n_samples * 50:
        attempts += 1
        label = rng.randint(0, 1)
        loop = _loop_around(centers[label], rng.choice((1.0, 1.5)), rng, cells_per_side)
        idxs, signs = [], []
        ok = len(loop) >= 4
        for k in range(len(loop)):
            (xi, yi) = loop[k]
            (xj, yj) = loop[(k + 1) % len(loop)]
            a = _grid_vertex(xi, yi, cells_per_side)
            b = _grid_vertex(xj, yj, cells_per_side)
            e = edge_index.get(frozenset((a, b)))
            if e is None or e in idxs:
                ok = False
                break
            idxs.append(e)
            signs.append(1 if a < b else -1)
        if not ok:
            continue
        samples.append((tuple(idxs), tuple(signs), label))

    order = list(range(len(samples)))
    rng.shuffle(order)
    cut = len(order) - len(order) // 4
    return cx, samples, order[:cut], order[cut:]


def flow_features(complex: Complex, edge_indices, signs) -> FeatureStore:
    """Encode a trajectory as an n_edges x 1 flow vector."""
    flow = np.zeros((complex.n_cells(1), 1))
    for e, s in zip(edge_indices, signs):
        flow[e, 0] = s
    return FeatureStore({1: flow})


# ---------------------------------------------------------------------------
# hypergraph node classification task


def block_hypergraph_dataset(
    n_nodes: int = 60,
    n_hyperedges: int = 30,
    noise: float = 0.10,
    seed: int = 0,
    feature_dim: int = 8,
):
    """Two-block hypergraph: hyperedges drawn within one block, a noise
    fraction drawn across the whole node set. Node features are noisy block
    indicators. Returns (complex, features, labels, train_idx, test_idx)."""
    rng = random.Random(seed)
    nrng = np.random.default_rng(seed)
    vertices = _labels(n_nodes)
    half = n_nodes // 2
    labels = [0 if i < half else 1 for i in range(n_nodes)]
    blocks = [vertices[:half], vertices[half:]]

    seen = set()
    specs = []
    while len(specs) < n_hyperedges:
        size = rng.randint(3, 6)
        if rng.random() < noise:
            members = rng.sample(vertices, size)
        else:
            members = rng.sample(blocks[len(specs) % 2], size)
        key = frozenset(members)
        if key in seen:
            continue
        seen.add(key)
        specs.append(CellSpec(tuple(sorted(key)), rank=1))
    cx = build_complex("hypergraph", vertices, specs)

    base = nrng.standard_normal((n_nodes, feature_dim)) * 0.5
    centers = nrng.standard_normal((2, feature_dim))
    for i, lab in enumerate(labels):
        base[i] += centers[lab] * 0.3
    feats = FeatureStore({0: base, 1: np.zeros((cx.n_cells(1), feature_dim))})

    order = list(range(n_nodes))
    rng.shuffle(order)
    cut = n_nodes - n_nodes // 4
    return cx, feats, labels, order[:cut], order[cut:]
