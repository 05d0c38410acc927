"""Analytic gradients versus central finite differences."""

import numpy as np
import pytest

from linkresolve.data import graph_from_pairs, split_edges
from linkresolve.gat import (
    GatModel,
    GatLayer,
    backward,
    bce_link_grad,
    default_model,
    forward,
    grad_check,
    model_params,
)

from conftest import random_graph


def _random_instance(rng, n=8, in_dim=5):
    graph = random_graph(rng, n, edge_prob=0.4)
    X = rng.normal(size=(n, in_dim))
    model = default_model(
        in_dim=in_dim,
        hidden_channels=4,
        heads=3,
        embedding_dim=3,
        num_layers=3,
        seed=int(rng.integers(0, 2**31)),
    )
    m = int(rng.integers(3, 8))
    pairs = rng.integers(0, n, size=(m, 2))
    pairs = np.array([(i, j) if i != j else (i, (j + 1) % n) for i, j in pairs])
    labels = rng.integers(0, 2, size=m)
    return model, X, graph, pairs, labels


def test_grad_check_passes_on_random_instances():
    rng = np.random.Generator(np.random.PCG64(7))
    for _ in range(3):
        model, X, graph, pairs, labels = _random_instance(rng)
        report = grad_check(model, X, graph, pairs, labels)
        assert report.passed, f"max rel err {report.max_rel_error} at {report.worst_param}"


def test_grad_check_zero_parameters_finite(tiny_graph, rng):
    X = rng.normal(size=(5, 4))
    model = default_model(in_dim=4, hidden_channels=3, heads=2, embedding_dim=2, seed=0)
    for layer in model.layers:
        layer.weight[:] = 0.0
        layer.attn[:] = 0.0
    Z, state = forward(model, X, tiny_graph)
    loss, dZ = bce_link_grad(Z, np.array([(0, 1), (2, 3)]), np.array([1, 0]))
    grads = backward(model, tiny_graph, state, dZ)
    for dw, da in grads.layers:
        assert np.all(np.isfinite(dw))
        assert np.all(np.isfinite(da))


def test_grad_check_detects_injected_fault(rng):
    gen = np.random.Generator(np.random.PCG64(11))
    model, X, graph, pairs, labels = _random_instance(gen)
    Z, state = forward(model, X, graph)
    _, dZ = bce_link_grad(Z, pairs, labels)
    grads = backward(model, graph, state, dZ)
    flat = grads.flat()
    # perturb one weight-gradient entry by 10%
    target = flat[0]
    idx = np.unravel_index(np.argmax(np.abs(target)), target.shape)
    target[idx] *= 1.10

    from linkresolve.optim import gradient_check

    params, names = model_params(model)

    def loss_fn(_):
        Zc, _s = forward(model, X, graph)
        l, _g = bce_link_grad(Zc, pairs, labels)
        return l

    report = gradient_check(loss_fn, params, flat, names=names)
    assert not report.passed
    assert report.worst_param.startswith("layer0.weight")


def test_grad_check_rejects_zero_delta(rng, tiny_graph):
    X = rng.normal(size=(5, 3))
    model = default_model(in_dim=3, hidden_channels=2, heads=2, embedding_dim=2, seed=0)
    with pytest.raises(ValueError):
        grad_check(model, X, tiny_graph, [(0, 1)], [1], delta=0.0)


def test_unused_head_zero_gradient():
    # one isolated node: its only message is the self-loop; if its transformed
    # features are zero, attention parameters feeding it get zero gradient
    graph = graph_from_pairs([], 1)
    X = np.zeros((1, 3))
    model = default_model(in_dim=3, hidden_channels=2, heads=2, embedding_dim=2, seed=5)
    Z, state = forward(model, X, graph)
    dZ = np.ones_like(Z)
    grads = backward(model, graph, state, dZ)
    for dw, da in grads.layers:
        # zero input features => zero W h everywhere => attention vector unused
        assert np.allclose(da, 0.0)


def test_input_gradient_matches_finite_differences(rng):
    gen = np.random.Generator(np.random.PCG64(23))
    graph = random_graph(gen, 6, edge_prob=0.5)
    X = gen.normal(size=(6, 4))
    model = default_model(in_dim=4, hidden_channels=3, heads=2, embedding_dim=2, seed=9)
    pairs = np.array([(0, 1), (2, 3), (4, 5)])
    labels = np.array([1, 0, 1])

    Z, state = forward(model, X, graph)
    _, dZ = bce_link_grad(Z, pairs, labels)
    grads = backward(model, graph, state, dZ, need_input_grad=True)

    delta = 1e-6
    numeric = np.zeros_like(X)
    for i in range(X.shape[0]):
        for j in range(X.shape[1]):
            X[i, j] += delta
            up, _ = bce_link_grad(forward(model, X, graph)[0], pairs, labels)
            X[i, j] -= 2 * delta
            down, _ = bce_link_grad(forward(model, X, graph)[0], pairs, labels)
            X[i, j] += delta
            numeric[i, j] = (up - down) / (2 * delta)
    denom = np.maximum(1e-8, np.abs(numeric) + np.abs(grads.d_input))
    assert np.max(np.abs(numeric - grads.d_input) / denom) < 1e-4


def test_edge_scale_gradient_matches_finite_differences(rng):
    gen = np.random.Generator(np.random.PCG64(29))
    graph = random_graph(gen, 5, edge_prob=0.6)
    X = gen.normal(size=(5, 3))
    model = default_model(in_dim=3, hidden_channels=3, heads=2, embedding_dim=2, seed=13)
    pairs = np.array([(0, 1), (2, 3)])
    labels = np.array([1, 0])
    scale = gen.uniform(0.2, 1.0, size=graph.n_messages)

    Z, state = forward(model, X, graph, edge_scale=scale)
    _, dZ = bce_link_grad(Z, pairs, labels)
    grads = backward(model, graph, state, dZ, edge_scale=scale, need_edge_grad=True)

    delta = 1e-6
    numeric = np.zeros_like(scale)
    for m in range(len(scale)):
        scale[m] += delta
        up, _ = bce_link_grad(forward(model, X, graph, edge_scale=scale)[0], pairs, labels)
        scale[m] -= 2 * delta
        down, _ = bce_link_grad(forward(model, X, graph, edge_scale=scale)[0], pairs, labels)
        scale[m] += delta
        numeric[m] = (up - down) / (2 * delta)
    denom = np.maximum(1e-8, np.abs(numeric) + np.abs(grads.d_edge_scale))
    assert np.max(np.abs(numeric - grads.d_edge_scale) / denom) < 1e-4
