"""Thin scripting bindings for topomp: plain Python lists/dicts in, plain
lists/dicts out.

Inputs and outputs mirror the core package's JSON wire formats (complex
documents, model configs, dataset documents), and every result is produced by
the core code paths — these functions only marshal. Validation failures
propagate as the core's exceptions with their diagnostic text intact.
"""

from __future__ import annotations

import numpy as np

from topomp import __version__ as _core_version
from topomp.engine import forward_model
from topomp.io_formats import complex_to_doc, doc_to_complex
from topomp.layers import init_model_params, model_from_config
from topomp.lifting import clique_lift, cycle_lift, graph_of, group_lift, hyperedge_augment
from topomp.neighborhoods import (
    adjacency_down,
    adjacency_up,
    coboundary,
    degree,
    down_laplacian,
    hodge_laplacian,
    incidence,
    up_laplacian,
)
from topomp.training import load_dataset, train

__version__ = _core_version

__all__ = [
    "__version__",
    "bind_build",
    "bind_lift",
    "bind_matrices",
    "bind_forward",
    "bind_train",
]

_MATRIX_OPS = {
    "B": incidence,
    "Bt": coboundary,
    "Ldown": down_laplacian,
    "Lup": up_laplacian,
    "H": hodge_laplacian,
    "Aup": adjacency_up,
    "Adown": adjacency_down,
    "D": degree,
}


def _listify(arr) -> list:
    return [[float(v) for v in row] for row in np.asarray(arr)]


def bind_build(kind, vertices, cells, features=None) -> dict:
    """Validate and canonicalize a complex given as native lists; returns the
    canonical complex document (the same content `topomp build` writes).

    `cells` entries are dicts with "vertices" and "rank" (plus optional
    "cycle"/"boundary"), exactly as in the JSON schema.
    """
    doc = {"kind": kind, "vertices": list(vertices), "cells": list(cells)}
    if features is not None:
        doc["features"] = {str(r): _listify(m) for r, m in features.items()}
    cx, feats = doc_to_complex(doc)
    return complex_to_doc(cx, feats)


def bind_lift(complex_doc: dict, method: str, *, max_rank: int = 2, max_len: int = 4,
              groups=None, cells=None, keep_edges: bool = True) -> dict:
    """Lift a complex document; returns the lifted canonical document."""
    cx, _feats = doc_to_complex(complex_doc)
    if method == "clique":
        vs, es = graph_of(cx)
        out = clique_lift(vs, es, max_rank)
    elif method == "cycles":
        vs, es = graph_of(cx)
        out = cycle_lift(vs, es, max_len)
    elif method == "groups":
        vs, es = graph_of(cx)
        out = group_lift(vs, es, groups or [], keep_edges=keep_edges)
    elif method == "augment":
        out = hyperedge_augment(cx, [(tuple(c["vertices"]), int(c["rank"])) for c in cells or []])
    else:
        raise ValueError(f"unknown lift method {method!r}")
    return complex_to_doc(out)


def bind_matrices(complex_doc: dict, name: str) -> list:
    """A neighborhood matrix as a dense nested list. Names follow the CLI
    export grammar: B_1, Bt_1, Ldown_1, Lup_0, H_1, Aup_0, Adown_1, D_0."""
    cx, _feats = doc_to_complex(complex_doc)
    kind, _, rank = name.partition("_")
    if kind not in _MATRIX_OPS or not rank.isdigit():
        raise ValueError(
            f"cannot parse matrix name {name!r}; expected one of "
            f"{sorted(_MATRIX_OPS)} with a rank suffix like B_1"
        )
    nm = _MATRIX_OPS[kind](cx, int(rank))
    return _listify(nm.toarray())


def bind_forward(complex_doc: dict, model_config: dict, seed: int = 0) -> dict:
    """Run a model config over a complex document with features; returns
    {rank: matrix} of output features, numerically identical to the CLI's
    `forward --seed` output."""
    cx, feats = doc_to_complex(complex_doc)
    if feats is None:
        raise ValueError("bind_forward needs a 'features' block in the complex document")
    layers, rspec = model_from_config(model_config)
    params = init_model_params(layers, rspec, seed=seed)
    out = forward_model(cx, layers, feats, params)
    return {int(r): _listify(out[r]) for r in sorted(out)}


def bind_train(dataset_doc: dict, model_config: dict, *, epochs: int, lr: float = 1e-3,
               seed: int = 0, batch_size: int = 32) -> dict:
    """Train a model on a dataset document; returns history, test accuracy
    and the final parameters as nested lists (matching `topomp train`)."""
    data = load_dataset(dataset_doc)
    layers, rspec = model_from_config(model_config)
    params = init_model_params(layers, rspec, seed=seed)
    result = train(data, layers, rspec, params, epochs=epochs, lr=lr, seed=seed,
                   batch_size=batch_size)
    return {
        "history": result.history,
        "test_accuracy": result.test_accuracy,
        "params": {name: _listify(p.value) for name, p in result.params.items()},
    }
