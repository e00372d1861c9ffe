"""Reference layer catalog: named constructors for message-passing schemes
from the hypergraph / simplicial / cellular / combinatorial literature, plus
readout heads and model-config parsing for the CLI.

Orientation equivariance requires an odd activation: scone_layer and
hodge_conv default to tanh and keep it; relu-based layers (mpsn_layer,
hg_two_phase, ccc_attention_layer) are permutation-equivariant but exempt
from orientation equivariance."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from . import autodiff as ad
from .autodiff import Tensor
from .complex import Complex, FeatureStore, ValidationError
from .engine import (
    LayerSpec,
    MessageSpec,
    NeighborhoodSelector,
    Stage,
    UpdateSpec,
    init_params,
    layer_from_dict,
    layer_to_dict,
)

__all__ = [
    "hg_two_phase",
    "hodge_conv",
    "scone_layer",
    "mpsn_layer",
    "ccc_attention_layer",
    "ReadoutSpec",
    "readout",
    "readout_tensors",
    "model_from_config",
    "model_to_config",
    "init_model_params",
    "CATALOG",
]


def _dims_map(dims, ranks) -> dict:
    if isinstance(dims, Mapping):
        return {int(r): int(dims[r]) for r in dims}
    return {int(r): int(dims) for r in ranks}


def hg_two_phase(
    d_node: int,
    d_edge: int,
    d_out: int | None = None,
    agg: str = "sum",
    attentional: bool = False,
    activation: str = "relu",
    name: str = "hg_two_phase",
) -> LayerSpec:
    """Two-phase hypergraph scheme: node features flow up to hyperedges, the
    updated hyperedge features flow back down to the nodes. Each phase has
    its own weight matrix; the attentional flag switches both phases to
    attention (which implies a weighted-sum aggregation)."""
    d_out = d_node if d_out is None else d_out
    mtype = "attentional" if attentional else "standard"
    within = "sum" if attentional else agg
    up = MessageSpec(
        selector=NeighborhoodSelector("coboundary", source_rank=0, target_rank=1),
        d_in=d_node,
        d_out=d_edge,
        message_type=mtype,
        within_agg=within,
        d_target=d_node,
    )
    down = MessageSpec(
        selector=NeighborhoodSelector("boundary", source_rank=1, target_rank=0),
        d_in=d_edge,
        d_out=d_out,
        message_type=mtype,
        within_agg=within,
        d_target=d_node,
    )
    upd = UpdateSpec(activation=activation)
    return LayerSpec(name, (Stage((up,), update=upd), Stage((down,), update=upd)))


def hodge_conv(
    rank: int,
    d_in: int,
    d_out: int | None = None,
    poly_order: int = 1,
    include_identity: bool = True,
    activation: str = "tanh",
    name: str = "hodge_conv",
) -> LayerSpec:
    """Hodge convolution at one rank: polynomial filters in the down and up
    Laplacians, each power with its own weight matrix, so rank-r features
    never leave rank r. poly_order 0 with the identity term is a pointwise
    linear layer; multi-hop diffusion grows with the polynomial order."""
    d_out = d_in if d_out is None else d_out
    msgs = []
    if include_identity:
        msgs.append(
            MessageSpec(
                selector=NeighborhoodSelector("identity", rank, rank),
                d_in=d_in,
                d_out=d_out,
            )
        )
    for j in range(1, poly_order + 1):
        if rank >= 1:
            msgs.append(
                MessageSpec(
                    selector=NeighborhoodSelector(
                        "matrix_power", rank, rank, base_kind="down_laplacian", power=j
                    ),
                    d_in=d_in,
                    d_out=d_out,
                )
            )
        msgs.append(
            MessageSpec(
                selector=NeighborhoodSelector(
                    "matrix_power", rank, rank, base_kind="up_laplacian", power=j
                ),
                d_in=d_in,
                d_out=d_out,
            )
        )
    if not msgs:
        raise ValidationError("hodge_conv with poly_order 0 needs the identity term")
    return LayerSpec(name, (Stage(tuple(msgs), update=UpdateSpec(activation=activation)),))


def scone_layer(
    d_in: int,
    d_out: int | None = None,
    activation: str = "tanh",
    normalization: str = "none",
    name: str = "scone",
) -> LayerSpec:
    """Edge-feature layer with separately weighted down-Laplacian,
    up-Laplacian and identity paths. The default odd activation keeps the
    layer orientation-equivariant; so does degree normalization, which
    rescales by sign-invariant absolute degrees."""
    d_out = d_in if d_out is None else d_out
    msgs = tuple(
        MessageSpec(
            selector=NeighborhoodSelector(
                kind, 1, 1, normalization="none" if kind == "identity" else normalization
            ),
            d_in=d_in,
            d_out=d_out,
        )
        for kind in ("down_laplacian", "up_laplacian", "identity")
    )
    return LayerSpec(name, (Stage(msgs, update=UpdateSpec(activation=activation)),))


def mpsn_layer(
    ranks: Sequence[int],
    dims,
    d_out=None,
    activation: str = "relu",
    residual: bool = True,
    name: str = "mpsn",
) -> LayerSpec:
    """Simplicial message passing using all four neighborhood structures
    (boundary, coboundary, down- and up-adjacency) per rank, each with its
    own weight matrix, summed and passed through the update."""
    ranks = sorted(int(r) for r in ranks)
    din = _dims_map(dims, ranks)
    dout = _dims_map(d_out if d_out is not None else dims, ranks)
    msgs = []
    for r in ranks:
        if r + 1 in din:
            msgs.append(
                MessageSpec(
                    selector=NeighborhoodSelector("boundary", r + 1, r),
                    d_in=din[r + 1],
                    d_out=dout[r],
                    d_target=din[r],
                )
            )
        if r - 1 in din:
            msgs.append(
                MessageSpec(
                    selector=NeighborhoodSelector("coboundary", r - 1, r),
                    d_in=din[r - 1],
                    d_out=dout[r],
                    d_target=din[r],
                )
            )
        msgs.append(
            MessageSpec(
                selector=NeighborhoodSelector("adjacency_up", r, r),
                d_in=din[r],
                d_out=dout[r],
            )
        )
        if r >= 1:
            msgs.append(
                MessageSpec(
                    selector=NeighborhoodSelector("adjacency_down", r, r),
                    d_in=din[r],
                    d_out=dout[r],
                )
            )
    residual = residual and all(din[r] == dout[r] for r in ranks)
    upd = UpdateSpec(activation=activation, residual=residual)
    return LayerSpec(name, (Stage(tuple(msgs), update=upd),))


def ccc_attention_layer(
    rank_pairs: Sequence,
    dims,
    activation: str = "relu",
    name: str = "ccc_attention",
) -> LayerSpec:
    """Attentional messages along containment incidences between arbitrary
    rank pairs of a combinatorial complex, both directions per pair."""
    pairs = [tuple(sorted((int(a), int(b)))) for a, b in rank_pairs]
    if any(a == b for a, b in pairs):
        raise ValidationError("rank pairs must connect distinct ranks")
    ranks = sorted({r for p in pairs for r in p})
    dmap = _dims_map(dims, ranks)
    msgs = []
    for lo, hi in pairs:
        for src, tgt in ((lo, hi), (hi, lo)):
            msgs.append(
                MessageSpec(
                    selector=NeighborhoodSelector("incidence_between", src, tgt),
                    d_in=dmap[src],
                    d_out=dmap[tgt],
                    message_type="attentional",
                    d_target=dmap[tgt],
                )
            )
    return LayerSpec(name, (Stage(tuple(msgs), update=UpdateSpec(activation=activation)),))


# ---------------------------------------------------------------------------
# readout


@dataclass(frozen=True)
class ReadoutSpec:
    """Prediction head: per-cell linear map at node/edge level, or pooling
    over one rank followed by a linear head at complex level."""

    level: str
    d_in: int
    n_out: int
    rank: int = 0
    agg: str = "mean"
    name: str = "readout"

    def __post_init__(self):
        if self.level not in ("node", "edge", "complex"):
            raise ValidationError(f"unknown readout level {self.level!r}")
        if self.agg not in ("sum", "mean", "max"):
            raise ValidationError(f"unknown readout aggregator {self.agg!r}")

    @property
    def source_rank(self) -> int:
        return {"node": 0, "edge": 1}.get(self.level, self.rank)

    def param_shapes(self) -> dict:
        return {"w": (self.d_in, self.n_out), "b": (1, self.n_out)}


def readout_tensors(complex: Complex, H, spec: ReadoutSpec, params, diag=None):
    rank = spec.source_rank
    n = complex.n_cells(rank)
    if n == 0:
        if diag is not None:
            diag["empty_readout"] = diag.get("empty_readout", 0) + 1
        rows = 1 if spec.level == "complex" else 0
        return Tensor(np.zeros((rows, spec.n_out)))
    h = H.get(rank)
    if h is None:
        raise ValidationError(f"readout needs features at rank {rank}")
    h = h if isinstance(h, Tensor) else Tensor(h)
    if h.value.shape[1] != spec.d_in:
        raise ValidationError(
            f"readout expects dim {spec.d_in}, features have {h.value.shape[1]}"
        )
    if spec.level == "complex":
        h = ad.reduce_rows(h, spec.agg)
    w = params[f"{spec.name}/w"]
    b = params[f"{spec.name}/b"]
    return ad.add_row(ad.matmul(h, w), b)


def readout(complex: Complex, H: FeatureStore, spec: ReadoutSpec, params, diagnostics=None) -> np.ndarray:
    """Predictions as plain arrays: (n_cells, n_out) for node/edge level,
    (1, n_out) for complex level."""
    Ht = {r: Tensor(H[r]) for r in H}
    return readout_tensors(complex, Ht, spec, params, diag=diagnostics).value


# ---------------------------------------------------------------------------
# model configuration


def _take(cfg: Mapping, allowed: set, context: str) -> dict:
    bad = set(cfg) - allowed
    if bad:
        raise ValidationError(f"unknown config key {sorted(bad)[0]!r} in {context}")
    return dict(cfg)


def _build_hg_two_phase(cfg, name):
    c = _take(cfg, {"id", "name", "d_node", "d_edge", "d_out", "agg", "attentional", "activation"}, name)
    return hg_two_phase(
        d_node=int(c["d_node"]),
        d_edge=int(c["d_edge"]),
        d_out=c.get("d_out"),
        agg=c.get("agg", "sum"),
        attentional=bool(c.get("attentional", False)),
        activation=c.get("activation", "relu"),
        name=name,
    )


def _build_hodge_conv(cfg, name):
    c = _take(cfg, {"id", "name", "rank", "d_in", "d_out", "poly_order", "include_identity", "activation"}, name)
    return hodge_conv(
        rank=int(c.get("rank", 1)),
        d_in=int(c["d_in"]),
        d_out=c.get("d_out"),
        poly_order=int(c.get("poly_order", 1)),
        include_identity=bool(c.get("include_identity", True)),
        activation=c.get("activation", "tanh"),
        name=name,
    )


def _build_scone(cfg, name):
    c = _take(cfg, {"id", "name", "d_in", "d_out", "activation", "normalization"}, name)
    return scone_layer(
        int(c["d_in"]),
        c.get("d_out"),
        c.get("activation", "tanh"),
        normalization=c.get("normalization", "none"),
        name=name,
    )


def _build_mpsn(cfg, name):
    c = _take(cfg, {"id", "name", "ranks", "dims", "d_out", "activation", "residual"}, name)
    return mpsn_layer(
        ranks=c["ranks"],
        dims=c["dims"],
        d_out=c.get("d_out"),
        activation=c.get("activation", "relu"),
        residual=bool(c.get("residual", True)),
        name=name,
    )


def _build_ccc_attention(cfg, name):
    c = _take(cfg, {"id", "name", "rank_pairs", "dims", "activation"}, name)
    return ccc_attention_layer(c["rank_pairs"], c["dims"], c.get("activation", "relu"), name=name)


def _build_custom(cfg, name):
    c = _take(cfg, {"id", "name", "spec"}, name)
    spec = dict(c["spec"])
    spec["name"] = name
    return layer_from_dict(spec)


CATALOG = {
    "hg_two_phase": _build_hg_two_phase,
    "hodge_conv": _build_hodge_conv,
    "scone": _build_scone,
    "mpsn": _build_mpsn,
    "ccc_attention": _build_ccc_attention,
    "custom": _build_custom,
}


def model_from_config(cfg: Mapping):
    """Parse {"layers": [...], "readout": {...}} into (layers, readout spec).

    Unknown catalog ids or config keys raise ValidationError naming the
    offender."""
    cfg = _take(cfg, {"layers", "readout"}, "model config")
    layers = []
    for i, lc in enumerate(cfg.get("layers", [])):
        lid = lc.get("id")
        if lid not in CATALOG:
            raise ValidationError(f"unknown layer id {lid!r} (layer {i})")
        name = lc.get("name", f"layer{i}")
        layers.append(CATALOG[lid](lc, name))
    rspec = None
    rc = cfg.get("readout")
    if rc is not None:
        c = _take(rc, {"level", "d_in", "n_out", "rank", "agg", "name"}, "readout")
        rspec = ReadoutSpec(
            level=c["level"],
            d_in=int(c["d_in"]),
            n_out=int(c["n_out"]),
            rank=int(c.get("rank", 0)),
            agg=c.get("agg", "mean"),
            name=c.get("name", "readout"),
        )
    return layers, rspec


def model_to_config(layers, readout_spec: ReadoutSpec | None = None) -> dict:
    """Serialize layers (as custom specs) plus the readout; round-trips
    through model_from_config."""
    cfg = {
        "layers": [
            {"id": "custom", "name": l.name, "spec": layer_to_dict(l)} for l in layers
        ]
    }
    if readout_spec is not None:
        cfg["readout"] = {
            "level": readout_spec.level,
            "d_in": readout_spec.d_in,
            "n_out": readout_spec.n_out,
            "rank": readout_spec.rank,
            "agg": readout_spec.agg,
            "name": readout_spec.name,
        }
    return cfg


def init_model_params(layers, readout_spec: ReadoutSpec | None, seed: int) -> dict:
    extra = {}
    if readout_spec is not None:
        shapes = readout_spec.param_shapes()
        extra[f"{readout_spec.name}/w"] = shapes["w"]
        extra[f"{readout_spec.name}/b"] = np.zeros(shapes["b"])
    return init_params(layers, seed, extra=extra)
