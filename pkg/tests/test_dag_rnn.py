import itertools

import numpy as np
import pytest

from dagrnn.dag_rnn import (
    DirectionParams,
    EnsembleParams,
    backward_direction,
    backward_ensemble,
    chain_rnn_forward,
    forward_direction,
    forward_ensemble,
    init_direction,
    init_ensemble,
)
from dagrnn.errors import ContractError, DimensionError, StructureError
from dagrnn.gradcheck import numeric_gradient, relative_error
from dagrnn.grid import DIRECTIONS, Direction, GridSpec, Neighborhood, decompose, decompose_all, is_topological

N4, N8 = Neighborhood.N4, Neighborhood.N8
identity = lambda z: z  # noqa: E731


def scalar_params(u=1.0, w=1.0, v=1.0, b=0.0):
    return DirectionParams(np.array([[u]]), np.array([[w]]), np.array([[v]]), np.array([b]))


def random_params(rng, d_in, hidden, d_out, bias=0.2):
    p = init_direction(d_in, hidden, d_out, rng, recurrent_scale=1.0)
    p.b[:] = rng.uniform(0, bias, hidden)
    return p


def test_two_vertex_chain():
    dag = decompose(GridSpec(1, 2, N4), Direction.SE)
    h = forward_direction(scalar_params(), dag, np.array([[1.0], [2.0]]))
    assert np.array_equal(h, [[1.0], [3.0]])


def test_2x2_sink_value():
    dag = decompose(GridSpec(2, 2, N4), Direction.SE)
    h = forward_direction(scalar_params(), dag, np.ones((4, 1)))
    assert np.array_equal(h.ravel(), [1.0, 2.0, 2.0, 5.0])


def test_no_recurrence_is_pointwise(rng):
    dag = decompose(GridSpec(3, 4, N8), Direction.NE)
    p = random_params(rng, 3, 4, 2)
    p.W[:] = 0
    p.b[:] = 0
    x = rng.normal(size=(12, 3))
    assert np.allclose(forward_direction(p, dag, x), np.maximum(x @ p.U.T, 0), atol=1e-15)


def test_source_has_empty_predecessor_sum(rng):
    dag = decompose(GridSpec(3, 3, N8), Direction.SW)
    t = forward_direction(random_params(rng, 2, 3, 2), dag, rng.normal(size=(9, 2)), return_trace=True)
    assert np.array_equal(t.hhat[dag.sources()[0]], np.zeros(3))


def test_input_shape_error(rng):
    dag = decompose(GridSpec(2, 2, N4), Direction.SE)
    with pytest.raises(DimensionError):
        forward_direction(random_params(rng, 2, 3, 1), dag, np.zeros((3, 2)))
    with pytest.raises(DimensionError):
        forward_direction(random_params(rng, 2, 3, 1), dag, np.zeros((4, 5)))


@pytest.mark.parametrize("T", range(1, 11))
def test_chain_equivalence(T, rng):
    dag = decompose(GridSpec(1, T, N8), Direction.SE)
    for _ in range(5):
        U, W, V = rng.normal(size=(4, 3)), rng.normal(size=(4, 4)) * 0.5, rng.normal(size=(2, 4))
        b, c = rng.normal(size=4), rng.normal(size=2)
        xs = rng.normal(size=(T, 3))
        hs, ys = chain_rnn_forward(U, W, V, b, c, xs)
        h = forward_direction(DirectionParams(U, W, V, b), dag, xs)
        assert np.max(np.abs(h - hs)) <= 1e-12
        assert np.allclose(ys.sum(axis=1), 1.0)


def test_chain_examples():
    hs, _ = chain_rnn_forward([[1.0]], [[1.0]], [[1.0]], [0.0], [0.0], [[1.0], [2.0], [3.0]], g=identity)
    assert np.array_equal(hs.ravel(), [1.0, 3.0, 6.0])
    hs, ys = chain_rnn_forward([[2.0]], [[5.0]], [[1.0]], [0.5], [1.0], [[1.0]], g=identity)
    assert np.array_equal(hs.ravel(), [2.5]) and np.array_equal(ys.ravel(), [3.5])


def test_any_topological_order_gives_same_states(rng):
    spec = GridSpec(4, 5, N8)
    x = rng.normal(size=(20, 3))
    for d in DIRECTIONS:
        dag = decompose(spec, d)
        p = random_params(rng, 3, 4, 2)
        fast = forward_direction(p, dag, x)
        raster = forward_direction(p, dag, x, order=dag.topo_order)
        assert np.max(np.abs(fast - raster)) <= 1e-12
        for _ in range(3):
            # random topological order: repeatedly pick a random ready vertex
            indeg = [len(q) for q in dag.predecessors]
            ready = [v for v, k in enumerate(indeg) if k == 0]
            order = []
            while ready:
                v = ready.pop(rng.integers(len(ready)))
                order.append(v)
                for s in dag.successors[v]:
                    indeg[s] -= 1
                    if indeg[s] == 0:
                        ready.append(s)
            assert is_topological(dag, order)
            assert np.max(np.abs(forward_direction(p, dag, x, order=order) - raster)) <= 1e-12


def test_non_topological_order_rejected(rng):
    dag = decompose(GridSpec(2, 2, N4), Direction.SE)
    with pytest.raises(ContractError):
        forward_direction(scalar_params(), dag, np.ones((4, 1)), order=[3, 2, 1, 0])


def test_ensemble_structure_errors(rng):
    params = init_ensemble(2, 3, 2, rng)
    dags = decompose_all(GridSpec(2, 2, N4))
    dags[Direction.NE] = decompose(GridSpec(2, 3, N4), Direction.NE)
    with pytest.raises(StructureError):
        forward_ensemble(params, dags, np.zeros((4, 2)))
    with pytest.raises(StructureError):
        EnsembleParams({Direction.SE: params[Direction.SE]}, params.c)


def test_ensemble_zero_projection_gives_bias(rng):
    params = init_ensemble(2, 3, 4, rng)
    for p in params.directions.values():
        p.V[:] = 0
    params.c[:] = [1.0, -2.0, 0.5, 3.0]
    tr = forward_ensemble(params, decompose_all(GridSpec(3, 3, N8)), rng.normal(size=(9, 2)))
    assert np.array_equal(tr.pre, np.tile(params.c, (9, 1)))


def test_ensemble_single_direction_mask(rng):
    spec = GridSpec(3, 3, N4)
    params = init_ensemble(2, 3, 2, rng)
    for d in (Direction.SW, Direction.NW, Direction.NE):
        params[d].V[:] = 0
    x = rng.normal(size=(9, 2))
    tr = forward_ensemble(params, decompose_all(spec), x)
    h = forward_direction(params[Direction.SE], decompose(spec, Direction.SE), x)
    assert np.allclose(tr.pre, h @ params[Direction.SE].V.T + params.c, atol=1e-15)


def test_ensemble_is_sum_of_directions(rng):
    spec = GridSpec(3, 3, N8)
    params = init_ensemble(3, 4, 2, rng, recurrent_scale=1.0)
    params.c[:] = rng.normal(size=2)
    x = rng.normal(size=(9, 3))
    tr = forward_ensemble(params, decompose_all(spec), x, apply_softmax=True)
    ref = params.c + sum(
        forward_direction(params[d], decompose(spec, d), x) @ params[d].V.T for d in DIRECTIONS
    )
    assert np.max(np.abs(tr.pre - ref)) <= 1e-12
    assert np.allclose(tr.out.sum(axis=1), 1.0, atol=1e-12)
    assert forward_ensemble(params, decompose_all(spec), x).out is None


def test_locality_without_recurrence(rng):
    spec = GridSpec(4, 4, N8)
    params = init_ensemble(2, 3, 2, rng)
    for p in params.directions.values():
        p.W[:] = 0
    x = rng.normal(size=(16, 2))
    base = forward_ensemble(params, decompose_all(spec), x).pre
    x2 = x.copy()
    x2[15] += 5.0
    moved = forward_ensemble(params, decompose_all(spec), x2).pre
    assert np.array_equal(base[:15], moved[:15])


def test_propagation_across_diagonal():
    spec = GridSpec(4, 5, N8)
    dag = decompose(spec, Direction.SE)
    p = DirectionParams(np.ones((2, 1)), 0.5 * np.eye(2), np.ones((1, 2)), np.full(2, 0.1))
    x = np.ones((20, 1))
    h = forward_direction(p, dag, x)
    x[0] += 1.0
    h2 = forward_direction(p, dag, x)
    assert np.all(h2[19] != h[19])


def test_zero_upstream_error_gives_zero_gradients(rng):
    dag = decompose(GridSpec(3, 4, N8), Direction.SE)
    p = random_params(rng, 3, 4, 2)
    x = rng.normal(size=(12, 3))
    t = forward_direction(p, dag, x, return_trace=True)
    g = backward_direction(p, dag, x, t, np.zeros((12, 2)))
    for k in ("U", "W", "V", "b", "c", "dh", "x"):
        assert not np.any(g[k])


def test_backward_needs_trace(rng):
    dag = decompose(GridSpec(2, 2, N4), Direction.SE)
    p = random_params(rng, 1, 2, 1)
    x = np.ones((4, 1))
    h = forward_direction(p, dag, x)
    with pytest.raises(ContractError):
        backward_direction(p, dag, x, h, np.ones((4, 1)))


def test_two_step_chain_hand_gradients():
    # h1 = relu(u x1 + b), h2 = relu(u x2 + w h1 + b), L = a1 (v h1 + c) + a2 (v h2 + c)
    u, w, v, b = 0.5, 0.8, 1.5, 0.1
    x1, x2, a1, a2 = 1.0, 2.0, 0.3, -0.7
    h1 = u * x1 + b
    h2 = u * x2 + w * h1 + b
    dh2 = a2 * v
    dh1 = a1 * v + w * dh2
    dag = decompose(GridSpec(1, 2, N4), Direction.SE)
    p = scalar_params(u, w, v, b)
    x = np.array([[x1], [x2]])
    t = forward_direction(p, dag, x, return_trace=True)
    assert np.allclose(t.h.ravel(), [h1, h2])
    g = backward_direction(p, dag, x, t, np.array([[a1], [a2]]))
    assert g["U"][0, 0] == pytest.approx(dh1 * x1 + dh2 * x2)
    assert g["W"][0, 0] == pytest.approx(dh2 * h1)
    assert g["V"][0, 0] == pytest.approx(a1 * h1 + a2 * h2)
    assert g["b"][0] == pytest.approx(dh1 + dh2)
    assert g["c"][0] == pytest.approx(a1 + a2)
    assert np.allclose(g["dh"].ravel(), [dh1, dh2])
    assert np.allclose(g["x"].ravel(), [u * dh1, u * dh2])


def direction_fd_errors(rng, spec, direction, hidden=3, d_in=2, d_out=2):
    dag = decompose(spec, direction)
    p = random_params(rng, d_in, hidden, d_out)
    x = rng.normal(size=(spec.size, d_in))
    R = rng.normal(size=(spec.size, d_out))
    c = np.zeros(d_out)

    def loss():
        return float(np.sum(R * (forward_direction(p, dag, x) @ p.V.T + c)))

    t = forward_direction(p, dag, x, return_trace=True)
    g = backward_direction(p, dag, x, t, R)
    errs = {}
    for name, arr in (("U", p.U), ("W", p.W), ("V", p.V), ("b", p.b), ("c", c), ("x", x)):
        errs[name] = relative_error(g[name], numeric_gradient(loss, arr).reshape(arr.shape)).max()
    return errs


@pytest.mark.parametrize("nb,direction", list(itertools.product((N4, N8), DIRECTIONS)))
def test_direction_gradients_match_finite_differences(nb, direction, rng):
    errs = direction_fd_errors(rng, GridSpec(4, 5, nb), direction)
    assert max(errs.values()) < 1e-5, errs


@pytest.mark.parametrize("nb", (N4, N8))
def test_ensemble_gradients_match_finite_differences(nb, rng):
    spec = GridSpec(3, 4, nb)
    params = init_ensemble(2, 4, 3, rng, recurrent_scale=1.0)
    for p in params.directions.values():
        p.b[:] = rng.uniform(0, 0.2, p.b.shape)
    dags = decompose_all(spec)
    x = rng.normal(size=(12, 2))
    R = rng.normal(size=(12, 3))
    loss = lambda: float(np.sum(R * forward_ensemble(params, dags, x).pre))  # noqa: E731
    grads, dx = backward_ensemble(params, dags, x, forward_ensemble(params, dags, x), R)
    for d in DIRECTIONS:
        for k in "UWVb":
            arr = getattr(params[d], k)
            num = numeric_gradient(loss, arr).reshape(arr.shape)
            assert relative_error(grads[d][k], num).max() < 1e-5, (d, k)
    assert relative_error(grads["c"], numeric_gradient(loss, params.c)).max() < 1e-5
    assert relative_error(dx, numeric_gradient(loss, x).reshape(x.shape)).max() < 1e-5


def test_corrupted_gradient_is_detected(rng):
    spec = GridSpec(3, 3, N8)
    dag = decompose(spec, Direction.SE)
    p = random_params(rng, 2, 3, 2)
    x = rng.normal(size=(9, 2))
    R = rng.normal(size=(9, 2))
    loss = lambda: float(np.sum(R * (forward_direction(p, dag, x) @ p.V.T)))  # noqa: E731
    g = backward_direction(p, dag, x, forward_direction(p, dag, x, return_trace=True), R)
    num = numeric_gradient(loss, p.W).reshape(p.W.shape)
    assert relative_error(g["W"], num).max() < 1e-5
    assert relative_error(2 * g["W"], num).max() > 0.1
