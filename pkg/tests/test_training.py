import numpy as np
import pytest

import topomp.autodiff as ad
from topomp import CellSpec, FeatureStore, build_complex, close_downward
from topomp.autodiff import grad_check
from topomp.engine import (
    LayerSpec,
    MessageSpec,
    NeighborhoodCache,
    NeighborhoodSelector,
    Stage,
    UpdateSpec,
    forward_layer,
    forward_model_tensors,
    init_params,
)
from topomp.harness import permutation_deviation
from topomp.layers import ReadoutSpec, init_model_params, model_from_config
from topomp.synthetic import random_features, random_simplicial
from topomp.training import (
    ComplexClassData,
    NodeClassData,
    TrajectoryData,
    dataset_to_doc,
    load_dataset,
    train,
)


def test_general_message_type_values():
    # unsigned domain: each hyperedge sums w2^T relu(w1^T [h_x||h_y]) over members
    hg = build_complex("hypergraph", ["a", "b", "c"], [CellSpec(("a", "b", "c"), 1)])
    spec = MessageSpec(
        NeighborhoodSelector("coboundary", 0, 1),
        d_in=2,
        d_out=2,
        message_type="general",
        d_target=2,
        hidden=3,
    )
    layer = LayerSpec("layer0", (Stage((spec,), update=UpdateSpec()),))
    params = init_params([layer], seed=0)
    h = FeatureStore({0: np.ones((3, 2)), 1: np.zeros((1, 2))})
    out = forward_layer(hg, layer, h, params)
    w1 = params["layer0/s0/m0/w1"].value
    w2 = params["layer0/s0/m0/w2"].value
    per_member = np.maximum(np.concatenate([np.zeros(2), np.ones(2)]) @ w1, 0) @ w2
    assert np.allclose(out[1], 3 * per_member[None, :])


def test_general_message_grad_and_equivariance():
    cx = random_simplicial(8, max_vertices=8)
    spec = MessageSpec(
        NeighborhoodSelector("adjacency_up", 0, 0),
        d_in=3,
        d_out=3,
        message_type="general",
        d_target=3,
        within_agg="mean",
    )
    layer = LayerSpec("layer0", (Stage((spec,), update=UpdateSpec("tanh")),))
    params = init_params([layer], seed=1)
    h = random_features(cx, 3, seed=2)
    assert permutation_deviation(cx, [layer], params, h, seed=3) < 1e-9

    cache = NeighborhoodCache(cx)
    target = np.random.default_rng(4).standard_normal((cx.n_cells(0), 3))

    def f():
        Ht = {r: ad.Tensor(h[r]) for r in h}
        out = forward_model_tensors(cx, [layer], Ht, params, cache=cache)
        return ad.mse(out[0], target)

    assert grad_check(f, list(params.values()), h=1e-5) < 1e-4


def test_recurrent_update_uses_initial_features(filled_triangle):
    spec = MessageSpec(NeighborhoodSelector("adjacency_up", 0, 0), d_in=2, d_out=2)
    layer = LayerSpec(
        "layer0",
        (
            Stage(
                (spec,),
                update=UpdateSpec("identity", recurrent=True, recurrent_dim=2),
            ),
        ),
    )
    params = init_params([layer], seed=5)
    params["layer0/s0/m0/theta"].value = np.zeros((2, 2))
    h = random_features(filled_triangle, 2, seed=6)
    out = forward_layer(filled_triangle, layer, h, params)
    rec = params["layer0/s0/r0/rec"].value
    assert np.allclose(out[0], np.asarray(h[0]) @ rec)


def test_recurrent_propagates_through_model(filled_triangle):
    # layer 2's recurrent term sees the model input, not layer 1's output
    spec = MessageSpec(NeighborhoodSelector("adjacency_up", 0, 0), d_in=2, d_out=2)

    def make(name):
        return LayerSpec(
            name,
            (Stage((spec,), update=UpdateSpec("identity", recurrent=True, recurrent_dim=2)),),
        )

    from topomp.engine import forward_model

    layers = [make("layer0"), make("layer1")]
    params = init_params(layers, seed=7)
    for name in ("layer0/s0/m0/theta", "layer1/s0/m0/theta"):
        params[name].value = np.zeros((2, 2))
    params["layer0/s0/r0/rec"].value = np.zeros((2, 2))
    h = random_features(filled_triangle, 2, seed=8)
    out = forward_model(filled_triangle, layers, h, params)
    rec2 = params["layer1/s0/r0/rec"].value
    assert np.allclose(out[0], np.asarray(h[0]) @ rec2)


def test_reduce_rows_mean_max_grads():
    from topomp.autodiff import Parameter, Tape, backward

    for op in ("mean", "max"):
        p = Parameter(np.random.default_rng(9).standard_normal((4, 3)), "p")

        def f():
            return ad.sum_all(ad.reduce_rows(p, op))

        assert grad_check(f, [p], h=1e-6) < 1e-4


def test_normalize_rectangular():
    from topomp.neighborhoods import incidence, normalize

    cx = close_downward(["a", "b", "c"], [("a", "b", "c")])
    b = normalize(incidence(cx, 1), "sym_degree").matrix.toarray()
    # node degree 2, edge size 2: entries +-1/2
    assert np.allclose(np.abs(b[b != 0]), 0.5)
    rs = normalize(incidence(cx, 1), "row_stochastic").matrix.toarray()
    assert np.allclose(np.abs(rs).sum(axis=1), 1.0)


def test_aggregate_between_mean():
    from topomp.engine import aggregate_between

    a = np.array([[2.0, 4.0]])
    assert np.array_equal(aggregate_between([a, 3 * a], "mean"), 2 * a)


def test_complex_class_task_end_to_end():
    # distinguish complexes with a filled face from hollow ones
    samples = []
    rng = np.random.default_rng(10)
    for i in range(24):
        filled = i % 2 == 0
        tops = [("a", "b", "c")] if filled else [("a", "b"), ("b", "c"), ("a", "c")]
        cx = close_downward(["a", "b", "c"], tops)
        feats = {
            0: np.ones((3, 2)) + rng.standard_normal((3, 2)) * 0.05,
            1: np.ones((3, 2)) + rng.standard_normal((3, 2)) * 0.05,
        }
        if cx.max_rank >= 2:
            feats[2] = np.ones((1, 2))
        samples.append((cx, FeatureStore(feats), int(filled)))
    data = ComplexClassData(samples, list(range(16)), list(range(16, 24)))
    cfg = {
        "layers": [{"id": "scone", "d_in": 2, "d_out": 8}],
        "readout": {"level": "complex", "rank": 1, "agg": "max", "d_in": 8, "n_out": 2},
    }
    layers, rspec = model_from_config(cfg)
    params = init_model_params(layers, rspec, seed=11)
    result = train(data, layers, rspec, params, epochs=60, lr=1e-2, seed=12)
    assert result.test_accuracy >= 0.9


def test_dataset_roundtrips():
    cx = close_downward(["a", "b", "c"], [("a", "b", "c")])
    h = random_features(cx, 2, seed=13)
    node = NodeClassData(cx, h, np.array([0, 1, 0]), [0, 1], [2])
    again = load_dataset(dataset_to_doc(node))
    assert again.task == "node-class"
    assert np.array_equal(again.labels, node.labels)
    traj = TrajectoryData(cx, [((0, 1), (1, -1), 1)], [0], [])
    again = load_dataset(dataset_to_doc(traj))
    assert again.samples == [((0, 1), (1, -1), 1)]
    cc = ComplexClassData([(cx, h, 1)], [0], [])
    again = load_dataset(dataset_to_doc(cc))
    assert again.samples[0][2] == 1


def test_train_requires_readout():
    cx = close_downward(["a", "b"], [("a", "b")])
    data = NodeClassData(cx, random_features(cx, 2, seed=0), np.array([0, 1]), [0], [1])
    with pytest.raises(Exception, match="readout"):
        train(data, [], None, {}, epochs=1, lr=0.1, seed=0)
