"""File formats: canonical JSON complexes, hyperedge lists, OFF triangle
meshes. Floats are serialized with 17 significant digits so write/read
round-trips bit-exactly, and cells are written in canonical order so golden
files diff cleanly."""

from __future__ import annotations

import json
import warnings
from pathlib import Path

import numpy as np

from .complex import (
    CC,
    CellSpec,
    Complex,
    DomainKind,
    FeatureStore,
    ValidationError,
    build_complex,
    close_downward,
)

__all__ = [
    "SchemaError",
    "dumps_canonical",
    "complex_to_doc",
    "doc_to_complex",
    "write_complex",
    "read_complex",
    "read_hyperedge_list",
    "read_off_mesh",
]


class SchemaError(ValueError):
    """A document does not match the expected schema."""


def _fmt(value) -> str:
    if isinstance(value, bool) or value is None:
        return json.dumps(value)
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".17g")
    if isinstance(value, str):
        return json.dumps(value)
    raise SchemaError(f"cannot serialize {type(value).__name__}")


def _ser(obj, out: list, indent: int):
    pad = " " * indent
    if isinstance(obj, dict):
        if not obj:
            out.append("{}")
            return
        out.append("{\n")
        for i, (k, v) in enumerate(obj.items()):
            out.append(pad + "  " + json.dumps(str(k)) + ": ")
            _ser(v, out, indent + 2)
            out.append(",\n" if i < len(obj) - 1 else "\n")
        out.append(pad + "}")
    elif isinstance(obj, (list, tuple)):
        items = list(obj)
        if not items:
            out.append("[]")
            return
        nested = any(isinstance(v, (dict, list, tuple)) for v in items)
        if nested:
            out.append("[\n")
            for i, v in enumerate(items):
                out.append(pad + "  ")
                _ser(v, out, indent + 2)
                out.append(",\n" if i < len(items) - 1 else "\n")
            out.append(pad + "]")
        else:
            out.append("[" + ", ".join(_fmt(v) for v in items) + "]")
    else:
        out.append(_fmt(obj))


def dumps_canonical(doc) -> str:
    """Deterministic pretty JSON: insertion-ordered keys, 17-significant-digit
    floats, one scalar list per line."""
    out: list[str] = []
    _ser(doc, out, 0)
    out.append("\n")
    return "".join(out)


def complex_to_doc(complex: Complex, features: FeatureStore | None = None) -> dict:
    offsets = {}
    at = 0
    for r in range(1, complex.max_rank + 1):
        offsets[r] = at
        at += complex.n_cells(r)
    cells = []
    for r in range(1, complex.max_rank + 1):
        for cell in complex.skeleton(r):
            entry = {"vertices": list(cell.vertices), "rank": r}
            if complex.kind is CC:
                if cell.cycle is not None:
                    entry["cycle"] = list(cell.cycle)
                elif r >= 2:
                    entry["boundary"] = [
                        {"cell": offsets[cid.rank] + cid.index, "sign": sign}
                        for cid, sign in complex.boundary_of(cell.cell_id)
                    ]
            cells.append(entry)
    doc = {
        "kind": complex.kind.value,
        "vertices": list(complex.vertices),
        "cells": cells,
    }
    if features is not None:
        doc["features"] = {
            str(r): [list(row) for row in np.asarray(features[r])] for r in features
        }
    return doc


def _expect(cond: bool, where: str, what: str):
    if not cond:
        raise SchemaError(f"{where}: {what}")


def _no_unknown(present, allowed: set, where: str):
    unknown = set(present) - allowed
    if unknown:
        raise SchemaError(f"{where}: unknown field {sorted(unknown)[0]!r}")


def doc_to_complex(doc) -> tuple[Complex, FeatureStore | None]:
    _expect(isinstance(doc, dict), "document", "expected a JSON object")
    _no_unknown(doc, {"kind", "vertices", "cells", "features"}, "document")
    _expect("kind" in doc, "document", "missing 'kind'")
    try:
        kind = DomainKind.parse(doc["kind"])
    except ValidationError as exc:
        raise SchemaError(f"kind: {exc}") from exc
    _expect(isinstance(doc.get("vertices"), list), "vertices", "expected a list")
    raw_cells = doc.get("cells", [])
    _expect(isinstance(raw_cells, list), "cells", "expected a list")

    specs: list[CellSpec] = []
    pending: list[tuple[int, list]] = []
    for i, c in enumerate(raw_cells):
        where = f"cells[{i}]"
        _expect(isinstance(c, dict), where, "expected an object")
        _no_unknown(c, {"vertices", "rank", "cycle", "boundary"}, where)
        _expect(isinstance(c.get("vertices"), list), where, "missing vertex list")
        _expect(isinstance(c.get("rank"), int), where, "rank must be an integer")
        cycle = c.get("cycle")
        if cycle is not None:
            _expect(isinstance(cycle, list), where, "cycle must be a list")
        boundary = None
        if "boundary" in c:
            _expect(isinstance(c["boundary"], list), where, "boundary must be a list")
            entries = []
            for j, b in enumerate(c["boundary"]):
                bw = f"{where}.boundary[{j}]"
                _expect(isinstance(b, dict), bw, "expected an object")
                _expect(isinstance(b.get("cell"), int), bw, "cell must be an index")
                _expect(b.get("sign") in (1, -1), bw, "sign must be +-1")
                _expect(0 <= b["cell"] < len(raw_cells), bw, "cell index out of range")
                entries.append((b["cell"], b["sign"]))
            pending.append((i, entries))
        specs.append(CellSpec(c["vertices"], c["rank"], cycle=cycle, boundary=boundary))
    for i, entries in pending:
        resolved = tuple((specs[idx], sign) for idx, sign in entries)
        specs[i] = CellSpec(
            specs[i].vertices, specs[i].rank, cycle=specs[i].cycle, boundary=resolved
        )

    cx = build_complex(kind, doc["vertices"], specs)

    features = None
    if "features" in doc:
        _expect(isinstance(doc["features"], dict), "features", "expected an object")
        mats = {}
        for key, m in doc["features"].items():
            _expect(str(key).lstrip("-").isdigit(), f"features.{key}", "rank keys must be integers")
            _expect(isinstance(m, list), f"features.{key}", "expected a matrix")
            try:
                arr = np.asarray(m, dtype=np.float64)
            except (TypeError, ValueError) as exc:
                raise SchemaError(f"features.{key}: not a numeric matrix: {exc}") from exc
            if arr.size == 0:
                arr = arr.reshape(len(m), 0)
            _expect(arr.ndim == 2, f"features.{key}", "expected one row per cell")
            mats[int(key)] = arr
        features = FeatureStore(mats).validate_for(cx)
    return cx, features


def write_complex(complex: Complex, features: FeatureStore | None, path) -> None:
    Path(path).write_text(dumps_canonical(complex_to_doc(complex, features)), encoding="utf-8")


def read_complex(path) -> tuple[Complex, FeatureStore | None]:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}: invalid JSON at line {exc.lineno}: {exc.msg}") from exc
    return doc_to_complex(doc)


def read_hyperedge_list(path) -> Complex:
    """One hyperedge per line, whitespace-separated vertex labels; vertices
    inferred, blank lines ignored, duplicate hyperedges kept once."""
    seen: dict[frozenset, tuple] = {}
    vertices: set = set()
    for ln, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        tokens = line.split()
        if not tokens:
            continue
        key = frozenset(tokens)
        vertices.update(tokens)
        if key in seen:
            warnings.warn(f"{path}:{ln}: duplicate hyperedge {' '.join(sorted(key))}")
            continue
        seen[key] = tuple(sorted(key))
    specs = [CellSpec(verts, rank=1) for verts in seen.values()]
    return build_complex("hypergraph", sorted(vertices), specs)


def read_off_mesh(path) -> tuple[Complex, FeatureStore]:
    """OFF triangle mesh as a simplicial complex; vertex coordinates become
    rank-0 features and edges are inferred by downward closure."""
    lines = []
    for raw in Path(path).read_text(encoding="utf-8").splitlines():
        body = raw.split("#", 1)[0].strip()
        if body:
            lines.append(body)
    _expect(bool(lines) and lines[0].upper() == "OFF", path, "missing OFF header")
    _expect(len(lines) >= 2, path, "missing counts line")
    counts = lines[1].split()
    _expect(len(counts) >= 2, path, "counts line needs vertex and face counts")
    try:
        nv, nf = int(counts[0]), int(counts[1])
    except ValueError as exc:
        raise SchemaError(f"{path}: bad counts line: {exc}") from exc
    _expect(len(lines) >= 2 + nv + nf, path, "truncated file")

    width = max(len(str(max(nv - 1, 0))), 1)
    labels = [f"v{i:0{width}d}" for i in range(nv)]
    coords = np.zeros((nv, 3))
    for i in range(nv):
        parts = lines[2 + i].split()
        _expect(len(parts) >= 3, f"{path} vertex {i}", "needs 3 coordinates")
        coords[i] = [float(x) for x in parts[:3]]

    tris = []
    for f in range(nf):
        parts = lines[2 + nv + f].split()
        _expect(len(parts) >= 1, f"{path} face {f}", "empty face line")
        k = int(parts[0])
        if k != 3:
            raise SchemaError(
                f"{path} face {f}: only triangles are supported here "
                f"(got {k} vertices; use a cellular-complex format for polygons)"
            )
        idx = [int(x) for x in parts[1:4]]
        _expect(all(0 <= j < nv for j in idx), f"{path} face {f}", "vertex index out of range")
        tris.append(tuple(labels[j] for j in idx))

    cx = close_downward(labels, tris)
    order = {lab: i for i, lab in enumerate(labels)}
    rows = [coords[order[c.vertices[0]]] for c in cx.skeleton(0)]
    return cx, FeatureStore({0: np.asarray(rows)})
