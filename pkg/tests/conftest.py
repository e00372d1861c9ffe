import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

import numpy as np
import pytest

from topomp import CellSpec, build_complex, close_downward


@pytest.fixture
def filled_triangle():
    return close_downward(["a", "b", "c"], [("a", "b", "c")])


@pytest.fixture
def triangle_graph():
    """C_3 as an SC of max rank 1 (no face)."""
    return close_downward(["a", "b", "c"], [("a", "b"), ("b", "c"), ("a", "c")])


@pytest.fixture
def c4_cycle():
    return close_downward(
        ["a", "b", "c", "d"], [("a", "b"), ("b", "c"), ("c", "d"), ("a", "d")]
    )


@pytest.fixture
def path_graph():
    """a - b - c."""
    return close_downward(["a", "b", "c"], [("a", "b"), ("b", "c")])


@pytest.fixture
def tetra_surface():
    """Boundary of a tetrahedron: all triangles of {a,b,c,d}, no volume."""
    verts = ["a", "b", "c", "d"]
    tris = [("a", "b", "c"), ("a", "b", "d"), ("a", "c", "d"), ("b", "c", "d")]
    return close_downward(verts, tris)


@pytest.fixture
def two_triangles():
    return close_downward(
        ["a", "b", "c", "p", "q", "r"], [("a", "b", "c"), ("p", "q", "r")]
    )


@pytest.fixture
def hg_example():
    """Hypergraph over {a,b,c,d} with hyperedges {a,b,c} and {c,d}."""
    return build_complex(
        "hypergraph",
        ["a", "b", "c", "d"],
        [CellSpec(("a", "b", "c"), 1), CellSpec(("c", "d"), 1)],
    )


@pytest.fixture
def cube_surface():
    """Surface of a cube as a CC: 8 vertices, 12 edges, 6 square 2-cells."""
    verts = [f"{x}{y}{z}" for x in "01" for y in "01" for z in "01"]
    edges = []
    for v in verts:
        for i in range(3):
            if v[i] == "0":
                w = v[:i] + "1" + v[i + 1:]
                edges.append((v, w))
    faces = []
    for axis in range(3):
        for side in "01":
            ring = [v for v in verts if v[axis] == side]
            a, b, c, d = ring  # 00, 01, 10, 11 in the two free axes
            faces.append((a, b, d, c))
    specs = [CellSpec(e, 1) for e in edges]
    specs += [CellSpec(tuple(sorted(f)), 2, cycle=f) for f in faces]
    return build_complex("cellular", verts, specs)


def dense(nm):
    """NeighborhoodMatrix -> dense int/float array."""
    return np.asarray(nm.matrix.toarray())
