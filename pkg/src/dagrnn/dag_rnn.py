"""Recurrent networks over directed acyclic grid graphs.

Hidden state at a vertex is ``relu(U x + W * sum(h over predecessors) + b)``.
Four directional graphs run independently and their hidden states are
projected and summed into one output pre-activation per vertex.

Inputs and hidden states are stored as ``[num_vertices, dim]`` arrays in
vertex-id order.
"""
from dataclasses import dataclass, field

import numpy as np

from .errors import ContractError, DimensionError, StructureError
from .grid import DIRECTIONS, Direction, is_topological
from .tensor import DTYPE, relu, relu_grad, softmax


@dataclass
class DirectionParams:
    U: np.ndarray  # [hidden, d_in]
    W: np.ndarray  # [hidden, hidden]
    V: np.ndarray  # [d_out, hidden]
    b: np.ndarray  # [hidden]

    def __post_init__(self):
        h = self.U.shape[0]
        if self.W.shape != (h, h) or self.V.shape[1] != h or self.b.shape != (h,):
            raise DimensionError(
                f"inconsistent direction parameters U{self.U.shape} W{self.W.shape} "
                f"V{self.V.shape} b{self.b.shape}"
            )

    @property
    def hidden_dim(self):
        return self.U.shape[0]

    @property
    def input_dim(self):
        return self.U.shape[1]

    @property
    def output_dim(self):
        return self.V.shape[0]


@dataclass
class EnsembleParams:
    directions: dict  # Direction -> DirectionParams
    c: np.ndarray  # [d_out]

    def __post_init__(self):
        if set(self.directions) != set(DIRECTIONS):
            raise StructureError("ensemble needs exactly the four directions SE, SW, NW, NE")
        shapes = {tuple(getattr(p, k).shape for k in "UWVb") for p in self.directions.values()}
        if len(shapes) != 1:
            raise DimensionError(f"direction parameter shapes differ: {sorted(shapes)}")
        if self.c.shape != (self[Direction.SE].output_dim,):
            raise DimensionError(f"output bias shape {self.c.shape} does not match V")

    def __getitem__(self, direction):
        return self.directions[Direction(direction)]

    def named_arrays(self, prefix="rnn"):
        out = {}
        for d in DIRECTIONS:
            p = self.directions[d]
            for k in "UWVb":
                out[f"{prefix}.{d.value}.{k}"] = getattr(p, k)
        out[f"{prefix}.c"] = self.c
        return out


def glorot_range(fan_in, fan_out):
    return np.sqrt(6.0 / (fan_in + fan_out))


def init_direction(d_in, hidden, d_out, rng, recurrent_scale=0.1):
    r_u = glorot_range(d_in, hidden)
    r_v = glorot_range(hidden, d_out)
    r_w = recurrent_scale * glorot_range(hidden, hidden)
    return DirectionParams(
        U=rng.uniform(-r_u, r_u, (hidden, d_in)),
        W=rng.uniform(-r_w, r_w, (hidden, hidden)),
        V=rng.uniform(-r_v, r_v, (d_out, hidden)),
        b=np.zeros(hidden),
    )


def init_ensemble(d_in, hidden, d_out, rng, recurrent_scale=0.1):
    dirs = {d: init_direction(d_in, hidden, d_out, rng, recurrent_scale) for d in DIRECTIONS}
    return EnsembleParams(dirs, np.zeros(d_out))


@dataclass
class DirectionTrace:
    h: np.ndarray  # [N, hidden]
    hhat: np.ndarray  # [N, hidden], summed predecessor states


@dataclass
class DagRnnTrace:
    directions: dict  # Direction -> DirectionTrace
    pre: np.ndarray  # [N, d_out], sum_d V_d h_d + c
    out: np.ndarray = None  # softmax(pre) in standalone mode


def _check_input(params, dag, x):
    if x.ndim != 2 or x.shape[0] != dag.num_vertices:
        raise DimensionError(f"input {x.shape} does not match a DAG with {dag.num_vertices} vertices")
    if x.shape[1] != params.input_dim:
        raise DimensionError(f"input dim {x.shape[1]} does not match U{params.U.shape}")


def forward_direction(params, dag, x, order=None, return_trace=False):
    """Hidden states of one directional DAG-RNN.

    With ``order=None`` vertices are processed level by level (every level
    is an antichain of the DAG). Passing an explicit topological ``order``
    runs the plain vertex-at-a-time recurrence instead.
    """
    x = np.asarray(x, dtype=DTYPE)
    _check_input(params, dag, x)
    n, hd = dag.num_vertices, params.hidden_dim
    h = np.zeros((n + 1, hd))  # row n stays zero: padding slot for pred_table
    hhat = np.zeros((n, hd))
    if order is None:
        table = dag.pred_table
        ux = x @ params.U.T + params.b
        for level in dag.levels:
            s = h[table[level]].sum(axis=1)
            hhat[level] = s
            h[level] = relu(ux[level] + s @ params.W.T)
    else:
        if not is_topological(dag, order):
            raise ContractError("order is not a topological order of the DAG")
        for v in order:
            s = np.zeros(hd)
            for u in dag.predecessors[v]:
                s = s + h[u]
            hhat[v] = s
            h[v] = relu(params.U @ x[v] + params.W @ s + params.b)
    trace = DirectionTrace(h[:n], hhat)
    return trace if return_trace else trace.h


def backward_direction(params, dag, x, trace, d_out):
    """Gradients of one direction given the error on its output projection.

    ``d_out`` is ``dL/d(pre-activation)`` per vertex, shape ``[N, d_out]``.
    Returns a dict with ``U, W, V, b, c`` parameter gradients, the total
    hidden-state error ``dh`` and the input error ``x``.
    """
    x = np.asarray(x, dtype=DTYPE)
    _check_input(params, dag, x)
    n = dag.num_vertices
    if isinstance(trace, np.ndarray):
        raise ContractError("backward_direction needs the full trace (forward_direction(..., return_trace=True))")
    h, hhat = trace.h, trace.hhat
    if h.shape != (n, params.hidden_dim) or d_out.shape != (n, params.output_dim):
        raise ContractError(
            f"trace {h.shape} / upstream error {d_out.shape} inconsistent with parameters and DAG"
        )
    table = dag.pred_table
    dh = np.zeros((n + 1, params.hidden_dim))
    dh[:n] = d_out @ params.V  # direct error through V
    delta = np.zeros((n, params.hidden_dim))
    for level in reversed(dag.levels):
        dl = dh[level] * relu_grad(h[level])
        delta[level] = dl
        np.add.at(dh, table[level], (dl @ params.W)[:, None, :])
    return {
        "U": delta.T @ x,
        "W": delta.T @ hhat,
        "V": d_out.T @ h,
        "b": delta.sum(axis=0),
        "c": d_out.sum(axis=0),
        "dh": dh[:n],
        "x": delta @ params.U,
    }


def _check_dags(dags):
    if set(dags) != set(DIRECTIONS):
        raise StructureError("need one DAG per direction")
    specs = {(g.spec.height, g.spec.width) for g in dags.values()}
    if len(specs) != 1:
        raise StructureError(f"DAGs come from different grids: {sorted(specs)}")


def forward_ensemble(params, dags, x, apply_softmax=False):
    """Four-direction forward pass.

    ``trace.pre`` holds ``sum_d V_d h_d + c``; ``trace.out`` is its row
    softmax only when ``apply_softmax`` is set (standalone use). The full
    labelling network leaves the softmax to after upsampling.
    """
    _check_dags(dags)
    pre = np.broadcast_to(params.c, (dags[Direction.SE].num_vertices, params.c.size)).copy()
    traces = {}
    for d in DIRECTIONS:
        p = params[d]
        t = forward_direction(p, dags[d], x, return_trace=True)
        traces[d] = t
        pre += t.h @ p.V.T
    out = softmax(pre, axis=1) if apply_softmax else None
    return DagRnnTrace(traces, pre, out)


def backward_ensemble(params, dags, x, trace, d_pre):
    """Gradients for all four directions plus the shared bias and the input.

    Returns ``(grads, dx)`` where ``grads`` maps ``Direction`` to a dict of
    ``U, W, V, b`` and the key ``"c"`` to the shared output-bias gradient.
    """
    _check_dags(dags)
    grads = {}
    dx = np.zeros_like(np.asarray(x, dtype=DTYPE))
    for d in DIRECTIONS:
        g = backward_direction(params[d], dags[d], x, trace.directions[d], d_pre)
        grads[d] = {k: g[k] for k in "UWVb"}
        dx += g["x"]
    grads["c"] = d_pre.sum(axis=0)
    return grads, dx


def chain_rnn_forward(U, W, V, b, c, xs, f=relu, g=softmax):
    """Elman recurrence over a sequence, starting from a zero hidden state."""
    U, W, V = (np.asarray(a, dtype=DTYPE) for a in (U, W, V))
    h_prev = np.zeros(U.shape[0])
    hs, ys = [], []
    for x_t in np.asarray(xs, dtype=DTYPE):
        h_prev = f(U @ x_t + W @ h_prev + b)
        hs.append(h_prev)
        ys.append(g(V @ h_prev + c))
    return np.array(hs), np.array(ys)
