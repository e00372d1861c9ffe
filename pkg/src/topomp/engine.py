"""Four-step message passing over a complex, driven by declarative layer
specs: (1) per-neighbor messages, (2) within-neighborhood aggregation,
(3) between-neighborhood aggregation, (4) feature update.

Selectors are named by the matrix they apply: `boundary` is B_r and maps
rank r to rank r-1, `coboundary` is B_r^T and maps r-1 to r. Square
selectors (Laplacians, adjacencies, hodge, identity, their matrix powers)
keep the rank. `incidence_between` connects arbitrary rank pairs by
containment. Ranks with no cells degrade to zero-width matrices, and ranks a
layer does not target pass through bitwise unchanged.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping

import numpy as np
import scipy.sparse as sp

from . import autodiff as ad
from . import neighborhoods as nb
from .autodiff import Parameter, Tensor
from .complex import Complex, FeatureStore, ValidationError

__all__ = [
    "NeighborhoodSelector",
    "MessageSpec",
    "UpdateSpec",
    "Stage",
    "LayerSpec",
    "NeighborhoodCache",
    "selector_matrix",
    "step_message",
    "attention_coefficients",
    "aggregate_within",
    "aggregate_between",
    "update_features",
    "forward_layer",
    "forward_model",
    "forward_model_tensors",
    "init_params",
    "glorot",
]

_SQUARE_KINDS = {
    "identity",
    "down_laplacian",
    "up_laplacian",
    "hodge",
    "adjacency_up",
    "adjacency_down",
    "degree",
}
_ORIENTED_ONLY = {"down_laplacian", "up_laplacian", "hodge", "adjacency_up", "adjacency_down"}
_ACTIVATIONS = {
    "identity": lambda x: x,
    "relu": ad.relu,
    "tanh": ad.tanh,
    "sigmoid": ad.sigmoid,
}


@dataclass(frozen=True)
class NeighborhoodSelector:
    """Names one neighborhood matrix: kind plus source/target ranks.

    The implied matrix has shape n_target x n_source. matrix_power raises a
    square base kind to an integer power (power 0 is the identity);
    normalization is applied after the power.
    """

    kind: str
    source_rank: int
    target_rank: int
    normalization: str = "none"
    base_kind: str | None = None
    power: int = 1

    def validate(self, kind_oriented: bool):
        k = self.kind
        if k == "boundary":
            if self.target_rank != self.source_rank - 1:
                raise ValidationError("boundary selector maps rank r to rank r-1")
        elif k == "coboundary":
            if self.target_rank != self.source_rank + 1:
                raise ValidationError("coboundary selector maps rank r to rank r+1")
        elif k in _SQUARE_KINDS:
            if self.target_rank != self.source_rank:
                raise ValidationError(f"{k} selector keeps the rank")
        elif k == "matrix_power":
            if self.base_kind not in _SQUARE_KINDS:
                raise ValidationError(f"matrix_power base must be square, got {self.base_kind!r}")
            if self.power < 0:
                raise ValidationError("matrix_power needs power >= 0")
            if self.target_rank != self.source_rank:
                raise ValidationError("matrix_power keeps the rank")
        elif k == "incidence_between":
            if self.source_rank == self.target_rank:
                raise ValidationError("incidence_between needs distinct ranks")
        else:
            raise ValidationError(f"unknown selector kind: {k!r}")
        base = self.base_kind if k == "matrix_power" else k
        if base in _ORIENTED_ONLY and not kind_oriented:
            raise ValidationError(
                f"{base} selector is undefined on orientation-free domains"
            )


def _square_matrix(complex: Complex, kind: str, r: int) -> sp.csr_matrix:
    n = complex.n_cells(r)
    if n == 0:
        return sp.csr_matrix((0, 0))
    if kind == "identity":
        return sp.identity(n, format="csr")
    if kind == "down_laplacian":
        if r < 1:
            return sp.csr_matrix((n, n))
        return nb.down_laplacian(complex, r).matrix
    if kind == "adjacency_down":
        if r < 1:
            return sp.csr_matrix((n, n))
        return nb.adjacency_down(complex, r).matrix
    if kind == "up_laplacian":
        return nb.up_laplacian(complex, r).matrix
    if kind == "hodge":
        return nb.hodge_laplacian(complex, r).matrix
    if kind == "adjacency_up":
        return nb.adjacency_up(complex, r).matrix
    if kind == "degree":
        return nb.degree(complex, r).matrix
    raise ValidationError(f"unknown square selector kind {kind!r}")


def selector_matrix(complex: Complex, sel: NeighborhoodSelector) -> sp.csr_matrix:
    """Build the selector's matrix (n_target x n_source, float64)."""
    sel.validate(complex.kind.oriented)
    n_t = complex.n_cells(sel.target_rank)
    n_s = complex.n_cells(sel.source_rank)
    k = sel.kind
    if n_t == 0 or n_s == 0:
        m = sp.csr_matrix((n_t, n_s))
    elif k == "boundary":
        m = nb.incidence(complex, sel.source_rank).matrix
    elif k == "coboundary":
        m = nb.incidence(complex, sel.target_rank).matrix.T.tocsr()
    elif k == "incidence_between":
        lo, hi = sorted((sel.source_rank, sel.target_rank))
        if hi > complex.max_rank:
            m = sp.csr_matrix((n_t, n_s))
        else:
            m = nb.incidence_between(complex, lo, hi).matrix
            if sel.target_rank == hi:
                m = m.T.tocsr()
    elif k == "matrix_power":
        base = _square_matrix(complex, sel.base_kind, sel.source_rank)
        m = sp.identity(n_s, format="csr")
        for _ in range(sel.power):
            m = (m @ base).tocsr()
    else:
        m = _square_matrix(complex, k, sel.source_rank)
    if sel.normalization != "none":
        wrapped = nb.NeighborhoodMatrix(k, sel.source_rank, sel.target_rank, m.tocsr())
        m = nb.normalize(wrapped, sel.normalization).matrix
    m = m.astype(np.float64).tocsr()
    m.sort_indices()
    return m


class NeighborhoodCache:
    """Per-complex cache of selector matrices and their COO structure."""

    def __init__(self, complex: Complex):
        self.complex = complex
        self._mats: dict = {}
        self._coo: dict = {}

    def matrix(self, sel: NeighborhoodSelector) -> sp.csr_matrix:
        if sel not in self._mats:
            self._mats[sel] = selector_matrix(self.complex, sel)
        return self._mats[sel]

    def structure(self, sel: NeighborhoodSelector):
        """(rows, cols, values) of the selector matrix in row-major order."""
        if sel not in self._coo:
            coo = self.matrix(sel).tocoo()
            self._coo[sel] = (
                coo.row.astype(np.int64),
                coo.col.astype(np.int64),
                coo.data.astype(np.float64),
            )
        return self._coo[sel]

    def mean_scaled(self, sel: NeighborhoodSelector) -> sp.csr_matrix:
        key = (sel, "mean")
        if key not in self._mats:
            m = self.matrix(sel).copy()
            counts = np.diff(m.indptr)
            scalevec = np.ones(m.shape[0])
            scalevec[counts > 0] = 1.0 / counts[counts > 0]
            self._mats[key] = (sp.diags(scalevec) @ m).tocsr()
        return self._mats[key]


@dataclass(frozen=True)
class MessageSpec:
    """One neighborhood's message function within a layer.

    d_in is the source rank's feature dimension, d_out the target rank's
    output dimension; theta is d_in x d_out. d_target (the target rank's
    input dimension) is only needed by the attentional and general types and
    defaults to d_in.
    """

    selector: NeighborhoodSelector
    d_in: int
    d_out: int
    message_type: str = "standard"
    within_agg: str = "sum"
    fixed_weight: float | None = None
    d_target: int | None = None
    hidden: int | None = None

    def __post_init__(self):
        if self.message_type not in ("standard", "attentional", "general"):
            raise ValidationError(f"unknown message type {self.message_type!r}")
        if self.within_agg not in ("sum", "mean", "max"):
            raise ValidationError(f"unknown within aggregator {self.within_agg!r}")
        if self.message_type == "attentional" and self.within_agg != "sum":
            raise ValidationError("attention coefficients already weight a sum")

    @property
    def target_dim(self) -> int:
        return self.d_in if self.d_target is None else self.d_target

    def param_shapes(self) -> dict:
        shapes = {}
        if self.message_type in ("standard", "attentional"):
            shapes["theta"] = (self.d_in, self.d_out)
        if self.message_type == "attentional":
            z_tgt = self.d_out if self.target_dim == self.d_in else self.target_dim
            shapes["att"] = (z_tgt + self.d_out, 1)
        if self.message_type == "general":
            hidden = self.hidden or 2 * self.d_out
            shapes["w1"] = (self.target_dim + self.d_in, hidden)
            shapes["w2"] = (hidden, self.d_out)
        return shapes


@dataclass(frozen=True)
class UpdateSpec:
    """Step-4 update: activation over the aggregated message, optionally plus
    the previous feature (residual) and a learned map of the model's initial
    feature (recurrent; recurrent_dim is that feature's dimension)."""

    activation: str = "identity"
    residual: bool = False
    recurrent: bool = False
    recurrent_dim: int | None = None

    def __post_init__(self):
        if self.activation not in _ACTIVATIONS:
            raise ValidationError(f"unknown activation {self.activation!r}")
        if self.recurrent and not self.recurrent_dim:
            raise ValidationError("recurrent update needs recurrent_dim")


@dataclass(frozen=True)
class Stage:
    """MessageSpecs executed against one snapshot of the features, plus the
    between-neighborhood aggregation and update applied per target rank."""

    messages: tuple
    between_agg: str = "sum"
    update: UpdateSpec = UpdateSpec()
    concat_dim: int | None = None

    def __post_init__(self):
        if self.between_agg not in ("sum", "mean", "max", "concat_linear"):
            raise ValidationError(f"unknown between aggregator {self.between_agg!r}")
        object.__setattr__(self, "messages", tuple(self.messages))


@dataclass(frozen=True)
class LayerSpec:
    """One message-passing layer: ordered stages sharing a parameter scope.

    Most layers are a single stage; sequential schemes (hypergraph two-phase)
    use one stage per phase so later phases see updated features.
    """

    name: str
    stages: tuple

    def __post_init__(self):
        object.__setattr__(self, "stages", tuple(self.stages))


# ---------------------------------------------------------------------------
# parameters


def glorot(rng: np.random.Generator, shape) -> np.ndarray:
    a = np.sqrt(6.0 / (shape[0] + shape[1]))
    return rng.uniform(-a, a, size=shape)


def _layer_param_specs(layer: LayerSpec):
    """Yield (name, shape) for every parameter of a layer, in a fixed order."""
    for si, stage in enumerate(layer.stages):
        targets = {}
        for mi, msg in enumerate(stage.messages):
            for pname, shape in msg.param_shapes().items():
                yield f"{layer.name}/s{si}/m{mi}/{pname}", shape
            targets.setdefault(msg.selector.target_rank, []).append(msg)
        for rank in sorted(targets):
            specs = targets[rank]
            if stage.between_agg == "concat_linear" and len(specs) > 1:
                total = sum(m.d_out for m in specs)
                out = stage.concat_dim or specs[0].d_out
                yield f"{layer.name}/s{si}/r{rank}/mix", (total, out)
            if stage.update.recurrent:
                out = stage.concat_dim if (
                    stage.between_agg == "concat_linear" and len(specs) > 1 and stage.concat_dim
                ) else specs[0].d_out
                yield f"{layer.name}/s{si}/r{rank}/rec", (stage.update.recurrent_dim, out)


def init_params(layers: Iterable[LayerSpec], seed: int, extra: Mapping | None = None) -> dict:
    """Deterministically initialize all layer parameters: uniform(-a, a) with
    a = sqrt(6 / (d_in + d_out)). `extra` adds named (shape or array) entries
    such as readout heads."""
    rng = np.random.default_rng(seed)
    params: dict[str, Parameter] = {}
    for layer in layers:
        for name, shape in _layer_param_specs(layer):
            params[name] = Parameter(glorot(rng, shape), name)
    for name, spec in (extra or {}).items():
        if isinstance(spec, tuple):
            params[name] = Parameter(glorot(rng, spec), name)
        else:
            params[name] = Parameter(np.asarray(spec, dtype=np.float64), name)
    return params


def _param(params: Mapping, name: str) -> Parameter:
    if name not in params:
        raise ValidationError(f"missing parameter {name!r}")
    return params[name]


# ---------------------------------------------------------------------------
# message computation (tensor level)


def _source_features(complex, spec, H, context: str):
    n_s = complex.n_cells(spec.selector.source_rank)
    if n_s == 0:
        return None
    h = H.get(spec.selector.source_rank)
    if h is None:
        raise ValidationError(
            f"{context}: no features at source rank {spec.selector.source_rank}"
        )
    n, d = h.value.shape if isinstance(h, Tensor) else h.shape
    if n != n_s or d != spec.d_in:
        raise ValidationError(
            f"{context}: source features are {n}x{d}, expected {n_s}x{spec.d_in}"
        )
    return h if isinstance(h, Tensor) else Tensor(h)


def _count_empty(matrix: sp.csr_matrix) -> int:
    return int(np.sum(np.diff(matrix.indptr) == 0))


def _attention_values(complex, spec, H, params, prefix, cache):
    """Per-nonzero attention coefficients (softmax within each target row,
    multiplied by the selector's orientation signs) and the COO structure."""
    sel = spec.selector
    rows, cols, vals = cache.structure(sel)
    n_t = complex.n_cells(sel.target_rank)
    h_src = _source_features(complex, spec, H, prefix)
    h_tgt = H.get(sel.target_rank)
    if h_tgt is None:
        raise ValidationError(f"{prefix}: attention needs target-rank features")
    h_tgt = h_tgt if isinstance(h_tgt, Tensor) else Tensor(h_tgt)
    theta = _param(params, f"{prefix}/theta")
    att = _param(params, f"{prefix}/att")
    z_src = ad.matmul(h_src, theta)
    z_tgt = ad.matmul(h_tgt, theta) if spec.target_dim == spec.d_in else h_tgt
    cat = ad.concat_cols([ad.gather_rows(z_tgt, rows), ad.gather_rows(z_src, cols)])
    scores = ad.leaky_relu(ad.matmul(cat, att), 0.2)
    alpha = ad.segment_softmax(scores, rows, n_t)
    signs = np.sign(vals)[:, None]
    signed = ad.hadamard(alpha, Tensor(np.broadcast_to(signs, alpha.value.shape).copy()))
    return signed, z_src, rows, cols


def _spec_message(complex, spec: MessageSpec, H, params, prefix, cache, diag) -> Tensor:
    """Steps 1+2 for one MessageSpec: per-neighbor messages aggregated over
    each target's neighborhood; returns an n_target x d_out tensor."""
    sel = spec.selector
    n_t = complex.n_cells(sel.target_rank)
    n_s = complex.n_cells(sel.source_rank)
    if n_s == 0:
        return Tensor(np.zeros((n_t, spec.d_out)))
    h_src = _source_features(complex, spec, H, prefix)

    if spec.message_type == "standard":
        if spec.within_agg in ("sum", "mean"):
            m = cache.matrix(sel) if spec.within_agg == "sum" else cache.mean_scaled(sel)
            if diag is not None and spec.within_agg == "mean":
                diag["empty_neighborhoods"] = diag.get("empty_neighborhoods", 0) + _count_empty(m)
            out = ad.matmul(ad.spmm(m, h_src), _param(params, f"{prefix}/theta"))
        else:  # max
            rows, cols, vals = cache.structure(sel)
            if diag is not None:
                diag["empty_neighborhoods"] = diag.get("empty_neighborhoods", 0) + (
                    n_t - len(np.unique(rows))
                )
            z = ad.matmul(h_src, _param(params, f"{prefix}/theta"))
            per_edge = ad.scale_rows(ad.gather_rows(z, cols), Tensor(vals[:, None]))
            out = ad.segment_reduce(per_edge, rows, n_t, "max")
    elif spec.message_type == "attentional":
        signed, z_src, rows, cols = _attention_values(complex, spec, H, params, prefix, cache)
        per_edge = ad.scale_rows(ad.gather_rows(z_src, cols), signed)
        out = ad.segment_reduce(per_edge, rows, n_t, "sum")
        if diag is not None:
            diag["empty_neighborhoods"] = diag.get("empty_neighborhoods", 0) + (
                n_t - len(np.unique(rows))
            )
    else:  # general: per-edge MLP on [h_x || h_y], scaled by the matrix entry
        rows, cols, vals = cache.structure(sel)
        h_tgt = H.get(sel.target_rank)
        if h_tgt is None:
            raise ValidationError(f"{prefix}: general messages need target-rank features")
        h_tgt = h_tgt if isinstance(h_tgt, Tensor) else Tensor(h_tgt)
        inp = ad.concat_cols([ad.gather_rows(h_tgt, rows), ad.gather_rows(h_src, cols)])
        hidden = ad.relu(ad.matmul(inp, _param(params, f"{prefix}/w1")))
        per_edge = ad.matmul(hidden, _param(params, f"{prefix}/w2"))
        per_edge = ad.scale_rows(per_edge, Tensor(vals[:, None]))
        out = ad.segment_reduce(per_edge, rows, n_t, spec.within_agg)
        if diag is not None and spec.within_agg in ("mean", "max"):
            diag["empty_neighborhoods"] = diag.get("empty_neighborhoods", 0) + (
                n_t - len(np.unique(rows))
            )
    if spec.fixed_weight is not None:
        out = ad.scale(out, spec.fixed_weight)
    return out


def _run_stage(complex, stage: Stage, H, H0, params, prefix, cache, diag):
    by_target: dict[int, list] = {}
    for mi, msg in enumerate(stage.messages):
        by_target.setdefault(msg.selector.target_rank, []).append((mi, msg))
    out = dict(H)
    for rank in sorted(by_target):
        n_t = complex.n_cells(rank)
        if n_t == 0:
            continue
        # messages from an empty skeleton are vacuous, not zero: a rank whose
        # every message is vacuous is not targeted and passes through
        entries = [
            (mi, m)
            for mi, m in by_target[rank]
            if complex.n_cells(m.selector.source_rank) > 0
        ]
        if not entries:
            continue
        dims = {m.d_out for _i, m in entries}
        if len(dims) > 1 and stage.between_agg != "concat_linear":
            raise ValidationError(
                f"messages targeting rank {rank} disagree on output dims {sorted(dims)}; "
                "use concat_linear"
            )
        parts = [
            _spec_message(complex, m, H, params, f"{prefix}/m{mi}", cache, diag)
            for mi, m in entries
        ]
        if len(parts) == 1:
            m = parts[0]
        elif stage.between_agg == "sum":
            m = parts[0]
            for p in parts[1:]:
                m = ad.add(m, p)
        elif stage.between_agg == "mean":
            m = parts[0]
            for p in parts[1:]:
                m = ad.add(m, p)
            m = ad.scale(m, 1.0 / len(parts))
        elif stage.between_agg == "max":
            m = parts[0]
            for p in parts[1:]:
                m = ad.maximum(m, p)
        else:  # concat_linear
            m = ad.matmul(ad.concat_cols(parts), _param(params, f"{prefix}/r{rank}/mix"))
        upd = stage.update
        if upd.residual:
            prev = H.get(rank)
            if prev is None or tuple(prev.shape) != tuple(m.shape):
                raise ValidationError(
                    f"residual update at rank {rank} needs matching previous features"
                )
            m = ad.add(m, prev if isinstance(prev, Tensor) else Tensor(prev))
        if upd.recurrent:
            h0 = H0.get(rank) if H0 is not None else None
            if h0 is None:
                raise ValidationError(f"recurrent update at rank {rank} needs initial features")
            h0 = h0 if isinstance(h0, Tensor) else Tensor(h0)
            m = ad.add(m, ad.matmul(h0, _param(params, f"{prefix}/r{rank}/rec")))
        out[rank] = _ACTIVATIONS[upd.activation](m)
    return out


def forward_layer_tensors(complex, layer: LayerSpec, H, params, H0=None, cache=None, diag=None):
    cache = cache or NeighborhoodCache(complex)
    if H0 is None:
        H0 = H
    cur = H
    for si, stage in enumerate(layer.stages):
        cur = _run_stage(complex, stage, cur, H0, params, f"{layer.name}/s{si}", cache, diag)
    return cur


def forward_model_tensors(complex, layers, H, params, cache=None, diag=None):
    cache = cache or NeighborhoodCache(complex)
    H0 = H
    cur = H
    for layer in layers:
        cur = forward_layer_tensors(complex, layer, cur, params, H0=H0, cache=cache, diag=diag)
    return cur


def _to_tensors(H) -> dict:
    return {r: Tensor(H[r]) for r in H}


def _to_store(Ht, t: int = 0) -> FeatureStore:
    return FeatureStore({r: v.value if isinstance(v, Tensor) else v for r, v in Ht.items()}, t=t)


def forward_layer(complex, layer: LayerSpec, H: FeatureStore, params,
                  H0: FeatureStore | None = None, cache=None, diagnostics=None) -> FeatureStore:
    """Run one layer over a feature store; ranks the layer does not target
    are returned bitwise unchanged."""
    H.validate_for(complex)
    out = forward_layer_tensors(
        complex, layer, _to_tensors(H), params,
        H0=_to_tensors(H0) if H0 is not None else None,
        cache=cache, diag=diagnostics,
    )
    return _to_store(out, t=H.t + 1)


def forward_model(complex, layers, H: FeatureStore, params, cache=None, diagnostics=None) -> FeatureStore:
    H.validate_for(complex)
    out = forward_model_tensors(complex, layers, _to_tensors(H), params, cache=cache, diag=diagnostics)
    return _to_store(out, t=H.t + len(list(layers)))


# ---------------------------------------------------------------------------
# single-step helpers mirroring the four message-passing steps


def step_message(complex, spec: MessageSpec, H: FeatureStore, params,
                 prefix: str = "msg", cache=None, diagnostics=None) -> np.ndarray:
    """Steps 1+2 for a single MessageSpec on plain arrays."""
    cache = cache or NeighborhoodCache(complex)
    out = _spec_message(complex, spec, _to_tensors(H), params, prefix, cache, diagnostics)
    return out.value


def attention_coefficients(complex, spec: MessageSpec, H: FeatureStore, params,
                           prefix: str = "msg", cache=None) -> sp.csr_matrix:
    """Sparse matrix of attention coefficients (softmax per target row times
    the selector's orientation signs)."""
    if spec.message_type != "attentional":
        raise ValidationError("attention_coefficients needs an attentional MessageSpec")
    cache = cache or NeighborhoodCache(complex)
    signed, _z, rows, cols = _attention_values(
        complex, spec, _to_tensors(H), params, prefix, cache
    )
    n_t = complex.n_cells(spec.selector.target_rank)
    n_s = complex.n_cells(spec.selector.source_rank)
    return sp.csr_matrix((signed.value[:, 0], (rows, cols)), shape=(n_t, n_s))


def aggregate_within(per_edge: np.ndarray, targets, n_targets: int, agg: str = "sum") -> np.ndarray:
    """Step 2 on plain arrays: reduce per-edge message rows into each
    target's neighborhood; empty neighborhoods yield zero rows."""
    return ad.segment_reduce(Tensor(per_edge), targets, n_targets, agg).value


def aggregate_between(parts, agg: str = "sum", mix: np.ndarray | None = None) -> np.ndarray:
    """Step 3 on plain arrays: reduce across neighborhoods."""
    arrays = [np.asarray(p, dtype=np.float64) for p in parts]
    if not arrays:
        raise ValidationError("aggregate_between needs at least one message")
    if agg == "concat_linear":
        if mix is None:
            raise ValidationError("concat_linear needs the mixing matrix")
        return np.concatenate(arrays, axis=1) @ mix
    out = arrays[0]
    for a in arrays[1:]:
        out = np.maximum(out, a) if agg == "max" else out + a
    if agg == "mean":
        out = out / len(arrays)
    elif agg not in ("sum", "max"):
        raise ValidationError(f"unknown between aggregator {agg!r}")
    return out


def update_features(h_prev: np.ndarray | None, m: np.ndarray, update: UpdateSpec,
                    h_initial: np.ndarray | None = None,
                    recurrent_theta: np.ndarray | None = None) -> np.ndarray:
    """Step 4 on plain arrays."""
    out = Tensor(np.asarray(m, dtype=np.float64))
    if update.residual:
        if h_prev is None:
            raise ValidationError("residual update needs the previous features")
        out = ad.add(out, Tensor(h_prev))
    if update.recurrent:
        if h_initial is None or recurrent_theta is None:
            raise ValidationError("recurrent update needs initial features and theta")
        out = ad.add(out, ad.matmul(Tensor(h_initial), Tensor(recurrent_theta)))
    return _ACTIVATIONS[update.activation](out).value


# ---------------------------------------------------------------------------
# serialization


def selector_to_dict(sel: NeighborhoodSelector) -> dict:
    d = {
        "kind": sel.kind,
        "source_rank": sel.source_rank,
        "target_rank": sel.target_rank,
    }
    if sel.normalization != "none":
        d["normalization"] = sel.normalization
    if sel.kind == "matrix_power":
        d["base_kind"] = sel.base_kind
        d["power"] = sel.power
    return d


def selector_from_dict(d: Mapping) -> NeighborhoodSelector:
    return NeighborhoodSelector(
        kind=d["kind"],
        source_rank=int(d["source_rank"]),
        target_rank=int(d["target_rank"]),
        normalization=d.get("normalization", "none"),
        base_kind=d.get("base_kind"),
        power=int(d.get("power", 1)),
    )


def message_to_dict(m: MessageSpec) -> dict:
    d = {
        "selector": selector_to_dict(m.selector),
        "d_in": m.d_in,
        "d_out": m.d_out,
        "message_type": m.message_type,
        "within_agg": m.within_agg,
    }
    if m.fixed_weight is not None:
        d["fixed_weight"] = m.fixed_weight
    if m.d_target is not None:
        d["d_target"] = m.d_target
    if m.hidden is not None:
        d["hidden"] = m.hidden
    return d


def message_from_dict(d: Mapping) -> MessageSpec:
    return MessageSpec(
        selector=selector_from_dict(d["selector"]),
        d_in=int(d["d_in"]),
        d_out=int(d["d_out"]),
        message_type=d.get("message_type", "standard"),
        within_agg=d.get("within_agg", "sum"),
        fixed_weight=d.get("fixed_weight"),
        d_target=d.get("d_target"),
        hidden=d.get("hidden"),
    )


def layer_to_dict(layer: LayerSpec) -> dict:
    return {
        "name": layer.name,
        "stages": [
            {
                "messages": [message_to_dict(m) for m in st.messages],
                "between_agg": st.between_agg,
                "concat_dim": st.concat_dim,
                "update": {
                    "activation": st.update.activation,
                    "residual": st.update.residual,
                    "recurrent": st.update.recurrent,
                    "recurrent_dim": st.update.recurrent_dim,
                },
            }
            for st in layer.stages
        ],
    }


def layer_from_dict(d: Mapping) -> LayerSpec:
    stages = []
    for st in d["stages"]:
        u = st.get("update", {})
        stages.append(
            Stage(
                messages=tuple(message_from_dict(m) for m in st["messages"]),
                between_agg=st.get("between_agg", "sum"),
                concat_dim=st.get("concat_dim"),
                update=UpdateSpec(
                    activation=u.get("activation", "identity"),
                    residual=bool(u.get("residual", False)),
                    recurrent=bool(u.get("recurrent", False)),
                    recurrent_dim=u.get("recurrent_dim"),
                ),
            )
        )
    return LayerSpec(name=d["name"], stages=tuple(stages))
