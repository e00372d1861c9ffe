"""Deterministic training loops for the three desk-scale tasks: edge-flow
trajectory classification, transductive node classification, and whole-complex
classification. Dataset documents are JSON; see load_dataset."""

from __future__ import annotations

import random
from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from .autodiff import Adam, Tape, Tensor, backward, zero_grads
from .complex import Complex, FeatureStore, ValidationError
from .engine import NeighborhoodCache, forward_model_tensors
from .io_formats import SchemaError, complex_to_doc, doc_to_complex
from .layers import ReadoutSpec, readout_tensors
from .synthetic import flow_features

__all__ = [
    "TrajectoryData",
    "NodeClassData",
    "ComplexClassData",
    "load_dataset",
    "dataset_to_doc",
    "train",
    "TrainResult",
]

TASKS = ("trajectory", "node-class", "complex-class")


@dataclass
class TrajectoryData:
    complex: Complex
    samples: list  # (edge_indices, signs, label)
    train_idx: list
    test_idx: list
    task = "trajectory"


@dataclass
class NodeClassData:
    complex: Complex
    features: FeatureStore
    labels: np.ndarray
    train_idx: list
    test_idx: list
    task = "node-class"


@dataclass
class ComplexClassData:
    samples: list  # (Complex, FeatureStore, label)
    train_idx: list
    test_idx: list
    task = "complex-class"


@dataclass
class TrainResult:
    history: list
    test_accuracy: float
    params: dict


def dataset_to_doc(data) -> dict:
    if isinstance(data, TrajectoryData):
        return {
            "task": "trajectory",
            "complex": complex_to_doc(data.complex),
            "samples": [
                {"edges": list(e), "signs": list(s), "label": int(l)}
                for e, s, l in data.samples
            ],
            "train": list(data.train_idx),
            "test": list(data.test_idx),
        }
    if isinstance(data, NodeClassData):
        return {
            "task": "node-class",
            "complex": complex_to_doc(data.complex, data.features),
            "labels": [int(l) for l in data.labels],
            "train": list(data.train_idx),
            "test": list(data.test_idx),
        }
    if isinstance(data, ComplexClassData):
        return {
            "task": "complex-class",
            "samples": [
                {"complex": complex_to_doc(cx, h), "label": int(l)}
                for cx, h, l in data.samples
            ],
            "train": list(data.train_idx),
            "test": list(data.test_idx),
        }
    raise ValidationError(f"unknown dataset type {type(data).__name__}")


def load_dataset(doc: dict):
    if not isinstance(doc, dict) or "task" not in doc:
        raise SchemaError("dataset: missing 'task'")
    task = doc["task"]
    train_idx = [int(i) for i in doc.get("train", [])]
    test_idx = [int(i) for i in doc.get("test", [])]
    if task == "trajectory":
        cx, _h = doc_to_complex(doc["complex"])
        samples = []
        for i, s in enumerate(doc.get("samples", [])):
            edges = [int(e) for e in s["edges"]]
            signs = [int(v) for v in s["signs"]]
            if len(edges) != len(signs):
                raise SchemaError(f"samples[{i}]: edges and signs differ in length")
            samples.append((tuple(edges), tuple(signs), int(s["label"])))
        return TrajectoryData(cx, samples, train_idx, test_idx)
    if task == "node-class":
        cx, h = doc_to_complex(doc["complex"])
        if h is None:
            raise SchemaError("node-class dataset needs node features")
        labels = np.asarray([int(l) for l in doc["labels"]], dtype=np.int64)
        if labels.shape[0] != cx.n_cells(0):
            raise SchemaError("one label per node required")
        return NodeClassData(cx, h, labels, train_idx, test_idx)
    if task == "complex-class":
        samples = []
        for s in doc.get("samples", []):
            cx, h = doc_to_complex(s["complex"])
            if h is None:
                raise SchemaError("complex-class samples need features")
            samples.append((cx, h, int(s["label"])))
        return ComplexClassData(samples, train_idx, test_idx)
    raise SchemaError(f"unknown task {task!r} (expected one of {TASKS})")


# ---------------------------------------------------------------------------


def _sample_features(data, idx):
    if data.task == "trajectory":
        edges, signs, label = data.samples[idx]
        return flow_features(data.complex, edges, signs), label
    cx, h, label = data.samples[idx]
    return h, label


def _per_sample_logits(data, idx, layers, rspec, params, caches):
    if data.task == "trajectory":
        cx = data.complex
        cache = caches.setdefault(0, NeighborhoodCache(cx))
    else:
        cx = data.samples[idx][0]
        cache = caches.setdefault(idx, NeighborhoodCache(cx))
    h, label = _sample_features(data, idx)
    Ht = {r: Tensor(h[r]) for r in h}
    out = forward_model_tensors(cx, layers, Ht, params, cache=cache)
    return readout_tensors(cx, out, rspec, params), label


def _eval_per_sample(data, idxs, layers, rspec, params, caches):
    hits = 0
    for i in idxs:
        logits, label = _per_sample_logits(data, i, layers, rspec, params, caches)
        hits += int(np.argmax(logits.value[0]) == label)
    return hits / max(len(idxs), 1)


def _node_class_logits(data, layers, rspec, params, cache):
    Ht = {r: Tensor(data.features[r]) for r in data.features}
    out = forward_model_tensors(data.complex, layers, Ht, params, cache=cache)
    return readout_tensors(data.complex, out, rspec, params)


def train(
    data,
    layers,
    rspec: ReadoutSpec,
    params: dict,
    epochs: int,
    lr: float,
    seed: int,
    batch_size: int = 32,
    log=None,
) -> TrainResult:
    """Adam training; deterministic given the seed. Returns per-epoch history
    (loss, train/test accuracy) and the trained parameters."""
    if rspec is None:
        raise ValidationError("training needs a readout in the model config")
    opt = Adam(list(params.values()), lr=lr)
    rng = random.Random(seed)
    history = []
    caches: dict = {}

    if data.task == "node-class":
        cache = NeighborhoodCache(data.complex)
        train_idx = np.asarray(data.train_idx, dtype=np.int64)
        test_idx = np.asarray(data.test_idx, dtype=np.int64)
        for epoch in range(epochs):
            zero_grads(params.values())
            with Tape() as tape:
                logits = _node_class_logits(data, layers, rspec, params, cache)
                loss = ad.cross_entropy_logits(
                    ad.gather_rows(logits, train_idx), data.labels[train_idx]
                )
            backward(tape, loss)
            opt.step()
            pred = np.argmax(logits.value, axis=1)
            entry = {
                "epoch": epoch,
                "loss": float(loss.value),
                "train_acc": float(np.mean(pred[train_idx] == data.labels[train_idx])),
                "test_acc": float(np.mean(pred[test_idx] == data.labels[test_idx])),
            }
            history.append(entry)
            if log:
                log(entry)
        logits = _node_class_logits(data, layers, rspec, params, cache)
        pred = np.argmax(logits.value, axis=1)
        test_acc = float(np.mean(pred[test_idx] == data.labels[test_idx])) if len(test_idx) else 0.0
        return TrainResult(history, test_acc, params)

    order = list(data.train_idx)
    for epoch in range(epochs):
        rng.shuffle(order)
        total_loss = 0.0
        hits = 0
        for at in range(0, len(order), batch_size):
            batch = order[at:at + batch_size]
            zero_grads(params.values())
            with Tape() as tape:
                losses = []
                for i in batch:
                    logits, label = _per_sample_logits(data, i, layers, rspec, params, caches)
                    losses.append(ad.cross_entropy_logits(logits, np.array([label])))
                    hits += int(np.argmax(logits.value[0]) == label)
                loss = losses[0]
                for extra in losses[1:]:
                    loss = ad.add(loss, extra)
                loss = ad.scale(loss, 1.0 / len(losses))
            backward(tape, loss)
            opt.step()
            total_loss += float(loss.value) * len(batch)
        entry = {
            "epoch": epoch,
            "loss": total_loss / max(len(order), 1),
            "train_acc": hits / max(len(order), 1),
        }
        history.append(entry)
        if log:
            log(entry)
    test_acc = _eval_per_sample(data, data.test_idx, layers, rspec, params, caches)
    return TrainResult(history, test_acc, params)
