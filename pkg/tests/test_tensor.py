import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from dagrnn.errors import DimensionError
from dagrnn.tensor import hadamard, matvec, outer, relu, relu_grad, softmax

finite = st.floats(-50, 50, allow_nan=False)


def naive_matvec(m, v):
    out = [0.0] * len(m)
    for i in range(len(m)):
        for j in range(len(v)):
            out[i] += m[i][j] * v[j]
    return out


def test_matvec_examples():
    assert np.array_equal(matvec(np.eye(2), [3, 4]), [3, 4])
    assert np.array_equal(matvec([[1, 2], [3, 4]], [1, 1]), [3, 7])
    assert np.array_equal(matvec(np.zeros((2, 3)), [1, 2, 3]), [0, 0])


def test_matvec_shape_error_names_shapes():
    with pytest.raises(DimensionError, match=r"\(2, 3\).*\(2,\)"):
        matvec(np.zeros((2, 3)), np.zeros(2))


def test_matvec_matches_loop_oracle(rng):
    for _ in range(10):
        m, v = rng.normal(size=(8, 8)), rng.normal(size=8)
        assert np.allclose(matvec(m, v), naive_matvec(m.tolist(), v.tolist()), atol=1e-12, rtol=0)


def test_outer_examples():
    assert np.array_equal(outer([1, 0], [0, 1]), [[0, 1], [0, 0]])
    assert np.array_equal(outer([2], [3]), [[6]])
    assert np.array_equal(outer([0, 0], [5, 7]), np.zeros((2, 2)))


def test_hadamard(rng):
    assert np.array_equal(hadamard([1, 2], [3, 4]), [3, 8])
    x = rng.normal(size=(3, 4))
    assert np.array_equal(hadamard(x, np.ones_like(x)), x)
    assert np.array_equal(hadamard(x, np.zeros_like(x)), np.zeros_like(x))
    with pytest.raises(DimensionError):
        hadamard(np.zeros(2), np.zeros(3))


def test_relu_and_grad():
    assert np.array_equal(relu([-1, 0, 2]), [0, 0, 2])
    assert np.array_equal(relu_grad([0.5, 0, -3]), [1, 0, 0])
    assert np.array_equal(relu(np.zeros(4)), np.zeros(4))


def test_softmax_examples():
    assert np.allclose(softmax([0, 0, 0]), [1 / 3] * 3, atol=1e-15)
    assert np.allclose(softmax([np.log(1), np.log(3)]), [0.25, 0.75], atol=1e-15)
    s = softmax([1000.0, 0.0])
    assert np.all(np.isfinite(s)) and s[0] == pytest.approx(1.0) and s[1] < 1e-300


def test_inputs_not_mutated(rng):
    m, v = rng.normal(size=(3, 3)), rng.normal(size=3)
    m0, v0 = m.copy(), v.copy()
    matvec(m, v), softmax(v), relu(v), hadamard(v, v)
    assert np.array_equal(m, m0) and np.array_equal(v, v0)


@settings(max_examples=200, deadline=None)
@given(arrays(np.float64, st.integers(1, 12), elements=finite), finite)
def test_softmax_normalised_and_shift_invariant(z, shift):
    s = softmax(z)
    assert np.all(s > 0)
    assert abs(s.sum() - 1.0) < 1e-12
    assert np.allclose(softmax(z + shift), s, atol=1e-12, rtol=0)


@given(arrays(np.float64, st.integers(1, 20), elements=finite))
def test_relu_grad_marks_positive_outputs(x):
    r = relu(x)
    assert np.array_equal(relu_grad(r) == 1, r > 0)
