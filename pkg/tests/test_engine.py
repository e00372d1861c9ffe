import numpy as np
import pytest

from topomp import CellSpec, FeatureStore, ValidationError, build_complex, close_downward
from topomp.engine import (
    LayerSpec,
    MessageSpec,
    NeighborhoodCache,
    NeighborhoodSelector,
    Stage,
    UpdateSpec,
    aggregate_between,
    aggregate_within,
    attention_coefficients,
    forward_layer,
    forward_model,
    init_params,
    layer_from_dict,
    layer_to_dict,
    selector_matrix,
    step_message,
    update_features,
)
from topomp.synthetic import random_features, random_simplicial
from topomp.harness import orientation_deviation, permutation_deviation
from topomp.layers import scone_layer


def identity_params(*specs, prefix="layer"):
    """Parameters with theta = identity for standard messages."""
    from topomp.autodiff import Parameter

    params = {}
    for si, stage_specs in enumerate(specs):
        for mi, m in enumerate(stage_specs):
            name = f"{prefix}/s{si}/m{mi}/theta"
            params[name] = Parameter(np.eye(m.d_in, m.d_out), name)
    return params


def single_stage_layer(*messages, name="layer", update=None, between="sum"):
    return LayerSpec(name, (Stage(tuple(messages), between_agg=between, update=update or UpdateSpec()),))


def test_identity_selector_message(filled_triangle):
    h = FeatureStore({0: np.arange(6.0).reshape(3, 2)})
    spec = MessageSpec(NeighborhoodSelector("identity", 0, 0), d_in=2, d_out=2)
    params = identity_params([spec])
    out = step_message(filled_triangle, spec, h, params, prefix="layer/s0/m0")
    assert np.array_equal(out, h[0])


def test_coboundary_hypergraph_sum():
    hg = build_complex("hypergraph", ["a", "b", "c"], [CellSpec(("a", "b", "c"), 1)])
    h = FeatureStore({0: np.array([[1.0], [2.0], [4.0]])})
    spec = MessageSpec(NeighborhoodSelector("coboundary", 0, 1), d_in=1, d_out=1)
    params = identity_params([spec])
    out = step_message(hg, spec, h, params, prefix="layer/s0/m0")
    assert out.shape == (1, 1) and out[0, 0] == 7.0


def test_fixed_weight_zero(filled_triangle):
    h = FeatureStore({0: np.ones((3, 2))})
    spec = MessageSpec(
        NeighborhoodSelector("coboundary", 0, 1), d_in=2, d_out=2, fixed_weight=0.0
    )
    params = identity_params([spec])
    out = step_message(filled_triangle, spec, h, params, prefix="layer/s0/m0")
    assert not out.any()


def test_dimension_mismatch_error(filled_triangle):
    h = FeatureStore({0: np.ones((3, 3))})
    spec = MessageSpec(NeighborhoodSelector("identity", 0, 0), d_in=2, d_out=2)
    params = identity_params([spec])
    with pytest.raises(ValidationError, match="expected"):
        step_message(filled_triangle, spec, h, params, prefix="layer/s0/m0")


def test_laplacian_selector_rejected_on_hypergraph(hg_example):
    spec = MessageSpec(NeighborhoodSelector("down_laplacian", 1, 1), d_in=1, d_out=1)
    params = identity_params([spec])
    h = FeatureStore({1: np.ones((2, 1))})
    with pytest.raises(ValidationError, match="orientation-free"):
        step_message(hg_example, spec, h, params, prefix="layer/s0/m0")


def test_attention_equal_features_uniform(filled_triangle):
    # identical neighbor features -> equal coefficients 1/|N(x)|
    h = FeatureStore({0: np.ones((3, 2)), 1: np.ones((3, 2))})
    spec = MessageSpec(
        NeighborhoodSelector("coboundary", 0, 1),
        d_in=2,
        d_out=2,
        message_type="attentional",
        d_target=2,
    )
    params = init_params([single_stage_layer(spec)], seed=3)
    coef = attention_coefficients(
        filled_triangle, spec, h, params, prefix="layer/s0/m0"
    ).toarray()
    nz = coef[coef != 0]
    assert np.allclose(np.abs(nz), 0.5)
    assert np.allclose(np.abs(coef).sum(axis=1), 1.0)


def test_attention_single_neighbor_is_one():
    hg = build_complex("hypergraph", ["a", "b"], [CellSpec(("a",), 1)])
    h = FeatureStore({0: np.random.default_rng(0).standard_normal((2, 3)), 1: np.zeros((1, 3))})
    spec = MessageSpec(
        NeighborhoodSelector("coboundary", 0, 1),
        d_in=3,
        d_out=3,
        message_type="attentional",
        d_target=3,
    )
    params = init_params([single_stage_layer(spec)], seed=0)
    coef = attention_coefficients(hg, spec, h, params, prefix="layer/s0/m0").toarray()
    assert np.isclose(coef[0].sum(), 1.0)


def test_attention_rowsums_with_empty_rows():
    # second hyperedge over {}, impossible; instead isolated target: rank-0
    # cells with no incident hyperedges get all-zero coefficient rows
    hg = build_complex("hypergraph", ["a", "b", "z"], [CellSpec(("a", "b"), 1)])
    h = FeatureStore({0: np.ones((3, 2)), 1: np.ones((1, 2))})
    spec = MessageSpec(
        NeighborhoodSelector("boundary", 1, 0),
        d_in=2,
        d_out=2,
        message_type="attentional",
        d_target=2,
    )
    params = init_params([single_stage_layer(spec)], seed=1)
    coef = attention_coefficients(hg, spec, h, params, prefix="layer/s0/m0").toarray()
    sums = np.abs(coef).sum(axis=1)
    assert np.allclose(sorted(sums), [0.0, 1.0, 1.0])


def test_aggregate_within_examples():
    per_edge = np.array([[1.0], [2.0], [3.0]])
    assert aggregate_within(per_edge, [0, 0, 0], 1, "sum")[0, 0] == 6.0
    # empty neighborhood mean -> zero vector
    out = aggregate_within(per_edge, [0, 0, 0], 2, "mean")
    assert out[1, 0] == 0.0


def test_aggregate_within_max_matches_enumeration(filled_triangle):
    rng = np.random.default_rng(5)
    h = rng.standard_normal((3, 2))
    cache = NeighborhoodCache(filled_triangle)
    sel = NeighborhoodSelector("coboundary", 0, 1)
    rows, cols, vals = cache.structure(sel)
    per_edge = h[cols] * vals[:, None]
    got = aggregate_within(per_edge, rows, 3, "max")
    # brute-force neighborhood enumeration from the incidence structure
    for e in range(3):
        members = [h[c] * v for r, c, v in zip(rows, cols, vals) if r == e]
        assert np.allclose(got[e], np.max(members, axis=0))


def test_aggregate_between_examples():
    a = np.array([[1.0, 2.0]])
    assert np.array_equal(aggregate_between([a]), a)
    assert np.array_equal(aggregate_between([a, a], "sum"), 2 * a)
    assert np.array_equal(aggregate_between([a, 3 * a], "max"), 3 * a)
    mix = np.ones((4, 2))
    out = aggregate_between([a, a], "concat_linear", mix=mix)
    assert out.shape == (1, 2)


def test_between_sum_laplacians_equals_hodge(c4_cycle):
    # L_down message + L_up message with shared theta == Hodge message
    h = FeatureStore({1: np.random.default_rng(1).standard_normal((4, 2))})
    down = MessageSpec(NeighborhoodSelector("down_laplacian", 1, 1), d_in=2, d_out=2)
    up = MessageSpec(NeighborhoodSelector("up_laplacian", 1, 1), d_in=2, d_out=2)
    hodge = MessageSpec(NeighborhoodSelector("hodge", 1, 1), d_in=2, d_out=2)
    params = identity_params([down, up, hodge])
    m_down = step_message(c4_cycle, down, h, params, prefix="layer/s0/m0")
    m_up = step_message(c4_cycle, up, h, params, prefix="layer/s0/m1")
    m_h = step_message(c4_cycle, hodge, h, params, prefix="layer/s0/m2")
    assert np.allclose(m_down + m_up, m_h)


def test_update_examples():
    m = np.zeros((3, 2))
    out = update_features(None, m, UpdateSpec("identity"))
    assert not out.any()
    h_prev = np.arange(6.0).reshape(3, 2)
    out = update_features(h_prev, m, UpdateSpec("identity", residual=True))
    assert np.array_equal(out, h_prev)
    big = np.array([[-8.0, 8.0], [0.5, -3.0]])
    out = update_features(None, big, UpdateSpec("tanh"))
    assert np.all(np.abs(out) < 1.0)


def test_forward_layer_empty_spec_passthrough(filled_triangle):
    h = random_features(filled_triangle, 3, seed=2)
    layer = LayerSpec("noop", (Stage((), update=UpdateSpec("relu")),))
    out = forward_layer(filled_triangle, layer, h, {})
    for r in h:
        assert out[r] is not None
        assert np.array_equal(out[r], h[r])


def test_forward_layer_identity_everything(filled_triangle):
    h = random_features(filled_triangle, 2, seed=3)
    spec = MessageSpec(NeighborhoodSelector("identity", 0, 0), d_in=2, d_out=2)
    layer = single_stage_layer(spec)
    params = identity_params([spec])
    out = forward_layer(filled_triangle, layer, h, params)
    assert np.allclose(out[0], h[0])
    assert np.array_equal(out[1], h[1])  # untargeted ranks bitwise unchanged


def test_two_layer_composition_referential(filled_triangle):
    h = random_features(filled_triangle, 2, seed=4)
    layer = scone_layer(2, name="layer0")
    layer2 = scone_layer(2, name="layer1")
    params = init_params([layer, layer2], seed=9)
    chained = forward_layer(
        filled_triangle, layer2, forward_layer(filled_triangle, layer, h, params), params
    )
    combined = forward_model(filled_triangle, [layer, layer2], h, params)
    for r in chained:
        assert np.allclose(chained[r], combined[r])


def test_locality_boundary_only_layer():
    cx = close_downward(["a", "b", "c", "d"], [("a", "b", "c", "d")])
    h = random_features(cx, 2, seed=5)
    # rank-0 cells pull from rank-1 via the boundary matrix only
    spec = MessageSpec(NeighborhoodSelector("boundary", 1, 0), d_in=2, d_out=2)
    layer = single_stage_layer(spec)
    params = init_params([layer], seed=6)
    out = forward_layer(cx, layer, h, params)
    assert np.array_equal(out[2], h[2])
    assert np.array_equal(out[3], h[3])
    # perturbing rank-2 features cannot reach rank 0 in one application
    h2 = h.replace(2, np.array(h[2]) + 100.0)
    out2 = forward_layer(cx, layer, h2, params)
    assert np.array_equal(out2[0], out[0])


def test_zero_message_neutrality():
    cx = close_downward(["a", "b", "z"], [("a", "b")])  # z isolated
    h = FeatureStore({0: np.array([[1.0], [2.0], [5.0]]), 1: np.ones((1, 1))})
    spec = MessageSpec(NeighborhoodSelector("boundary", 1, 0), d_in=1, d_out=1)
    layer = single_stage_layer(spec, update=UpdateSpec("identity", residual=True))
    params = identity_params([spec])
    out = forward_layer(cx, layer, h, params)
    assert out[0][2, 0] == 5.0  # h + 0 for the isolated node


def test_empty_neighborhood_diagnostics():
    cx = close_downward(["a", "b", "z"], [("a", "b")])
    h = FeatureStore({0: np.ones((3, 1)), 1: np.ones((1, 1))})
    spec = MessageSpec(
        NeighborhoodSelector("boundary", 1, 0), d_in=1, d_out=1, within_agg="mean"
    )
    layer = single_stage_layer(spec)
    params = identity_params([spec])
    diag = {}
    forward_layer(cx, layer, h, params, diagnostics=diag)
    assert diag["empty_neighborhoods"] == 1


def test_heterogeneous_dims_per_messagespec(filled_triangle):
    h = FeatureStore({0: np.ones((3, 5)), 1: np.ones((3, 2))})
    spec = MessageSpec(NeighborhoodSelector("coboundary", 0, 1), d_in=5, d_out=4)
    layer = single_stage_layer(spec)
    params = init_params([layer], seed=0)
    out = forward_layer(filled_triangle, layer, h, params)
    assert out[1].shape == (3, 4)
    assert out[0].shape == (3, 5)


def test_mismatched_dims_need_concat(filled_triangle):
    a = MessageSpec(NeighborhoodSelector("identity", 0, 0), d_in=2, d_out=2)
    b = MessageSpec(NeighborhoodSelector("adjacency_up", 0, 0), d_in=2, d_out=3)
    layer = single_stage_layer(a, b)
    params = init_params([layer], seed=0)
    h = FeatureStore({0: np.ones((3, 2))})
    with pytest.raises(ValidationError, match="concat_linear"):
        forward_layer(filled_triangle, layer, h, params)


def test_concat_linear_shapes(filled_triangle):
    a = MessageSpec(NeighborhoodSelector("identity", 0, 0), d_in=2, d_out=2)
    b = MessageSpec(NeighborhoodSelector("adjacency_up", 0, 0), d_in=2, d_out=3)
    layer = LayerSpec(
        "layer",
        (Stage((a, b), between_agg="concat_linear", concat_dim=4, update=UpdateSpec()),),
    )
    params = init_params([layer], seed=0)
    h = FeatureStore({0: np.ones((3, 2))})
    out = forward_layer(filled_triangle, layer, h, params)
    assert out[0].shape == (3, 4)


def test_selector_matrix_power(c4_cycle):
    sel1 = NeighborhoodSelector("down_laplacian", 1, 1)
    sel2 = NeighborhoodSelector("matrix_power", 1, 1, base_kind="down_laplacian", power=2)
    m1 = selector_matrix(c4_cycle, sel1).toarray()
    m2 = selector_matrix(c4_cycle, sel2).toarray()
    assert np.allclose(m2, m1 @ m1)
    ident = selector_matrix(
        c4_cycle, NeighborhoodSelector("matrix_power", 1, 1, base_kind="hodge", power=0)
    ).toarray()
    assert np.array_equal(ident, np.eye(4))


def test_selector_rank_rules(filled_triangle):
    with pytest.raises(ValidationError):
        selector_matrix(filled_triangle, NeighborhoodSelector("boundary", 1, 1))
    with pytest.raises(ValidationError):
        selector_matrix(filled_triangle, NeighborhoodSelector("coboundary", 1, 0))
    with pytest.raises(ValidationError):
        selector_matrix(filled_triangle, NeighborhoodSelector("identity", 0, 1))


def test_layer_spec_roundtrip():
    layer = scone_layer(4, 8, name="roundtrip")
    again = layer_from_dict(layer_to_dict(layer))
    assert again == layer


def test_engine_permutation_equivariance():
    cx = random_simplicial(17, max_vertices=9)
    h = random_features(cx, 3, seed=7)
    layer = scone_layer(3, name="layer0")
    params = init_params([layer], seed=8)
    assert permutation_deviation(cx, [layer], params, h, seed=1) < 1e-9


def test_engine_orientation_equivariance():
    cx = close_downward(["a", "b", "c", "d"], [("a", "b", "c"), ("b", "c", "d")])
    h = FeatureStore({1: np.random.default_rng(2).standard_normal((cx.n_cells(1), 2))})
    layer = scone_layer(2, name="layer0", activation="tanh")
    params = init_params([layer], seed=3)
    dev = orientation_deviation(cx, [layer], params, h, rank=1, flip_indices=[0, 3])
    assert dev < 1e-9
