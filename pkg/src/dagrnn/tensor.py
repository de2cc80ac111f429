"""Dense float64 primitives.

Tensors are plain ``numpy.ndarray`` objects of dtype float64. The helpers
here add the shape checks the rest of the package relies on; none of them
mutate their arguments.
"""
import numpy as np

from .errors import DimensionError

DTYPE = np.float64


def as_tensor(x):
    return np.asarray(x, dtype=DTYPE)


def matvec(m, v):
    m, v = as_tensor(m), as_tensor(v)
    if m.ndim != 2 or v.ndim != 1 or m.shape[1] != v.shape[0]:
        raise DimensionError(f"matvec: cannot multiply {m.shape} by {v.shape}")
    return m @ v


def outer(a, b):
    return np.outer(as_tensor(a), as_tensor(b))


def hadamard(a, b):
    a, b = as_tensor(a), as_tensor(b)
    if a.shape != b.shape:
        raise DimensionError(f"hadamard: shapes {a.shape} and {b.shape} differ")
    return a * b


def relu(x):
    return np.maximum(as_tensor(x), 0.0)


def relu_grad(h):
    """Derivative of ReLU evaluated at stored activations; 0 at exactly 0."""
    return (as_tensor(h) > 0).astype(DTYPE)


def softmax(z, axis=-1):
    """Numerically stable softmax along ``axis`` (rank-1 input is the common case)."""
    z = as_tensor(z)
    e = np.exp(z - z.max(axis=axis, keepdims=True))
    return e / e.sum(axis=axis, keepdims=True)
