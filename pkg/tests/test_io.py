import json
import warnings

import numpy as np
import pytest

from topomp import FeatureStore, ValidationError, betti, build_complex, CellSpec
from topomp.io_formats import (
    SchemaError,
    complex_to_doc,
    doc_to_complex,
    dumps_canonical,
    read_complex,
    read_hyperedge_list,
    read_off_mesh,
    write_complex,
)
from topomp.lifting import cycle_lift
from topomp.synthetic import random_features, random_simplicial


TRIANGLE_DOC = {
    "kind": "simplicial",
    "vertices": ["a", "b", "c"],
    "cells": [
        {"vertices": ["a", "b"], "rank": 1},
        {"vertices": ["a", "c"], "rank": 1},
        {"vertices": ["b", "c"], "rank": 1},
        {"vertices": ["a", "b", "c"], "rank": 2},
    ],
}


def test_filled_triangle_doc():
    cx, feats = doc_to_complex(TRIANGLE_DOC)
    assert cx.shape == (3, 3, 1)
    assert feats is None


def test_roundtrip_random_sc(tmp_path):
    cx = random_simplicial(13)
    h = random_features(cx, 3, seed=1)
    p = tmp_path / "sc.json"
    write_complex(cx, h, p)
    cx2, h2 = read_complex(p)
    assert cx2.shape == cx.shape
    for r in range(cx.max_rank + 1):
        assert [c.vertices for c in cx2.skeleton(r)] == [c.vertices for c in cx.skeleton(r)]
    for r in h:
        assert np.array_equal(np.asarray(h2[r]), np.asarray(h[r]))


def test_roundtrip_stability(tmp_path):
    cx = random_simplicial(29)
    h = random_features(cx, 2, seed=2)
    p1, p2 = tmp_path / "one.json", tmp_path / "two.json"
    write_complex(cx, h, p1)
    write_complex(*read_complex(p1), p2)
    assert p1.read_bytes() == p2.read_bytes()


def test_unknown_kind_schema_error():
    with pytest.raises(SchemaError, match="kind"):
        doc_to_complex({"kind": "poset", "vertices": [], "cells": []})


def test_schema_error_paths():
    with pytest.raises(SchemaError, match=r"cells\[0\]"):
        doc_to_complex({"kind": "simplicial", "vertices": ["a"], "cells": [{"rank": 1}]})
    with pytest.raises(SchemaError, match="unknown field"):
        doc_to_complex({"kind": "simplicial", "vertices": [], "cells": [], "zzz": 1})


def test_reader_validates_invariants():
    doc = {
        "kind": "simplicial",
        "vertices": ["a", "b", "c"],
        "cells": [{"vertices": ["a", "b", "c"], "rank": 2}],
    }
    with pytest.raises(ValidationError, match="missing face"):
        doc_to_complex(doc)


def test_cellular_roundtrip_with_cycles(tmp_path):
    cc = cycle_lift(["a", "b", "c", "d"], [("a", "b"), ("b", "c"), ("c", "d"), ("a", "d")], 4)
    p = tmp_path / "cc.json"
    write_complex(cc, None, p)
    cc2, _ = read_complex(p)
    assert cc2.shape == cc.shape
    assert [c.cycle for c in cc2.skeleton(2)] == [c.cycle for c in cc.skeleton(2)]


def test_explicit_boundary_roundtrip(tmp_path):
    # a 3-cell with explicit boundary over two squares glued along an edge
    # keeps its signs through write/read
    cc = cycle_lift(["a", "b", "c", "d"], [("a", "b"), ("b", "c"), ("c", "d"), ("a", "d")], 4)
    doc = complex_to_doc(cc)
    assert "cycle" in doc["cells"][-1]
    cx2, _ = doc_to_complex(doc)
    from topomp.neighborhoods import incidence

    assert np.array_equal(
        incidence(cx2, 2).matrix.toarray(), incidence(cc, 2).matrix.toarray()
    )


def test_float_precision_roundtrip(tmp_path):
    cx = build_complex("simplicial", ["a", "b"], [CellSpec(("a", "b"), 1)])
    vals = np.array([[0.1], [1 / 3]])
    p = tmp_path / "f.json"
    write_complex(cx, FeatureStore({0: vals}), p)
    _cx, h = read_complex(p)
    assert np.array_equal(np.asarray(h[0]), vals)


def test_dumps_canonical_deterministic():
    cx = random_simplicial(31)
    doc = complex_to_doc(cx, random_features(cx, 2, seed=3))
    assert dumps_canonical(doc) == dumps_canonical(doc)


def test_hyperedge_list(tmp_path):
    p = tmp_path / "edges.txt"
    p.write_text("a b c\n\nc d\n", encoding="utf-8")
    hg = read_hyperedge_list(p)
    assert hg.shape == (4, 2)


def test_hyperedge_list_duplicates_warn(tmp_path):
    p = tmp_path / "dup.txt"
    p.write_text("a b\nb a\n", encoding="utf-8")
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        hg = read_hyperedge_list(p)
    assert hg.shape == (2, 1)
    assert any("duplicate" in str(w.message) for w in caught)


SINGLE_TRIANGLE_OFF = """OFF
3 1 3
0.0 0.0 0.0
1.0 0.0 0.0
0.0 1.0 0.0
3 0 1 2
"""


def test_off_single_triangle(tmp_path):
    p = tmp_path / "tri.off"
    p.write_text(SINGLE_TRIANGLE_OFF, encoding="utf-8")
    cx, feats = read_off_mesh(p)
    assert cx.shape == (3, 3, 1)
    assert feats[0].shape == (3, 3)
    assert feats[0][1, 0] == 1.0


def test_off_tetra_surface_betti(tmp_path):
    off = "OFF\n4 4 6\n0 0 0\n1 0 0\n0 1 0\n0 0 1\n3 0 1 2\n3 0 1 3\n3 0 2 3\n3 1 2 3\n"
    p = tmp_path / "tet.off"
    p.write_text(off, encoding="utf-8")
    cx, _ = read_off_mesh(p)
    assert [betti(cx, r) for r in range(3)] == [1, 0, 1]


def test_off_rejects_quads(tmp_path):
    off = "OFF\n4 1 4\n0 0 0\n1 0 0\n1 1 0\n0 1 0\n4 0 1 2 3\n"
    p = tmp_path / "quad.off"
    p.write_text(off, encoding="utf-8")
    with pytest.raises(SchemaError, match="triangles"):
        read_off_mesh(p)
