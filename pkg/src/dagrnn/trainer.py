"""Per-image SGD with momentum, the learning-rate schedule, training loop and checkpoints."""
import json
import struct
from dataclasses import dataclass, field

import numpy as np

from . import conv as cv
from .dag_rnn import EnsembleParams, DirectionParams
from .errors import CheckpointError, DivergenceError
from .grid import DIRECTIONS
from .metrics import evaluate
from .network import FullNetwork, backward_full, predict
from .objective import ClassWeights

MAGIC = b"DAGRNN1\n"
FORMAT_VERSION = 1


def learning_rate(epoch, base=1e-3, decay=0.9, start=10, mode="per_epoch"):
    """Learning rate for 1-based ``epoch``.

    ``per_epoch``: constant through epoch ``start``, then multiplied by
    ``decay`` once per further epoch. ``step10``: multiplied by ``decay``
    once per completed block of ten epochs after ``start``.
    """
    over = max(0, epoch - start)
    if mode == "per_epoch":
        return base * decay**over
    if mode == "step10":
        return base * decay ** (-(-over // 10))
    raise ValueError(f"unknown schedule {mode!r}")


@dataclass
class SGDMomentum:
    momentum: float = 0.9
    clip: float = 0.0
    velocity: dict = field(default_factory=dict)

    def step(self, params, grads, lr):
        """``v <- mu * v - lr * g``; ``theta <- theta + v`` (in place)."""
        if self.clip > 0:
            norm = np.sqrt(sum(float(np.sum(g * g)) for g in grads.values()))
            if norm > self.clip:
                grads = {k: g * (self.clip / norm) for k, g in grads.items()}
        for name, p in params.items():
            v = self.velocity.get(name)
            if v is None:
                v = self.velocity[name] = np.zeros_like(p)
            v *= self.momentum
            v -= lr * grads[name]
            p += v


@dataclass
class EpochLog:
    epoch: int
    lr: float
    loss: float
    global_acc: float
    class_acc: float

    def line(self):
        return f"{self.epoch}\t{self.lr:.6g}\t{self.loss:.10f}\t{self.global_acc:.6f}\t{self.class_acc:.6f}"


def epoch_order(n, seed, epoch):
    return np.random.default_rng([seed, epoch]).permutation(n)


def train(net, samples, epochs=35, seed=0, optimizer=None, base_lr=1e-3, decay=0.9,
          decay_start=10, schedule="per_epoch", start_epoch=1, on_epoch=None):
    """Train ``net`` one image at a time; returns ``(logs, optimizer)``.

    Image order in epoch ``e`` is a permutation seeded by ``(seed, e)``, so
    resuming from ``start_epoch`` continues the exact same trajectory.
    """
    if not samples:
        raise ValueError("training needs at least one sample")
    optimizer = optimizer if optimizer is not None else SGDMomentum()
    params = net.parameters()
    C = net.config.num_classes
    logs = []
    for epoch in range(start_epoch, start_epoch + epochs):
        lr = learning_rate(epoch, base_lr, decay, decay_start, schedule)
        total, preds, truths = 0.0, [], []
        for idx in epoch_order(len(samples), seed, epoch):
            s = samples[idx]
            loss, grads, probs = backward_full(net, s.image, s.labels)
            if not np.isfinite(loss):
                raise DivergenceError(f"loss became {loss} on image index {idx} ({s.id}) in epoch {epoch}")
            optimizer.step(params, grads, lr)
            total += loss
            preds.append(probs.argmax(axis=2))
            truths.append(s.labels)
        res = evaluate(preds, truths, C)
        entry = EpochLog(epoch, lr, total / len(samples), res.global_acc, res.class_acc)
        logs.append(entry)
        if on_epoch is not None:
            on_epoch(entry)
    return logs, optimizer


def evaluate_network(net, samples):
    return evaluate([predict(net, s.image) for s in samples], [s.labels for s in samples], net.config.num_classes)


# ------------------------------------------------------------- checkpoints


def save_checkpoint(path, net, optimizer=None, epoch=0, run_config=None):
    params = net.parameters()
    sections = [(name, arr) for name, arr in params.items()]
    sections.append(("class_weights", net.weights.weights))
    if optimizer is not None:
        sections += [(f"velocity/{n}", optimizer.velocity[n]) for n in params if n in optimizer.velocity]
    header = {
        "version": FORMAT_VERSION,
        "epoch": int(epoch),
        "net": {
            "preset": net.config.name,
            "num_classes": net.config.num_classes,
            "hidden_dim": net.config.hidden_dim,
            "neighborhood": net.neighborhood.value,
            "recurrent": net.recurrent,
            "frozen": list(net.frozen),
            "eta": net.weights.eta,
            "k": net.weights.k,
        },
        "optimizer": None if optimizer is None else {"momentum": optimizer.momentum, "clip": optimizer.clip},
        "config": run_config or {},
        "sections": [{"name": n, "shape": list(a.shape)} for n, a in sections],
    }
    blob = json.dumps(header, sort_keys=True).encode()
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<I", len(blob)))
        fh.write(blob)
        for _, arr in sections:
            fh.write(np.ascontiguousarray(arr, dtype="<f8").tobytes())


def load_checkpoint(path):
    """Returns ``(net, optimizer, epoch, run_config_dict)``."""
    with open(path, "rb") as fh:
        data = fh.read()
    if not data.startswith(MAGIC):
        raise CheckpointError(f"{path}: bad magic {data[:len(MAGIC)]!r}")
    pos = len(MAGIC)
    try:
        (hlen,) = struct.unpack_from("<I", data, pos)
        header = json.loads(data[pos + 4 : pos + 4 + hlen])
    except (struct.error, ValueError) as exc:
        raise CheckpointError(f"{path}: unreadable header ({exc})") from None
    if header.get("version") != FORMAT_VERSION:
        raise CheckpointError(f"{path}: unsupported format version {header.get('version')}")
    pos += 4 + hlen
    arrays = {}
    for sec in header["sections"]:
        shape = tuple(sec["shape"])
        n = int(np.prod(shape)) * 8
        if pos + n > len(data):
            raise CheckpointError(f"{path}: section {sec['name']} truncated")
        arrays[sec["name"]] = np.frombuffer(data[pos : pos + n], dtype="<f8").reshape(shape).astype(np.float64)
        pos += n

    meta = header["net"]
    config = cv.build_preset(meta["preset"], meta["num_classes"], meta["hidden_dim"])
    layers = [
        cv.ConvLayer(arrays[f"conv{i}.kernel"], arrays[f"conv{i}.bias"], 1, cv.same_padding(spec.kernel))
        for i, spec in enumerate(config.layers)
    ]
    dirs = {
        d: DirectionParams(*(arrays[f"rnn.{d.value}.{k}"] for k in "UWVb")) for d in DIRECTIONS
    }
    rnn = EnsembleParams(dirs, arrays["rnn.c"])
    deconv = cv.DeconvLayer(arrays["deconv.kernel"], config.downsample)
    weights = ClassWeights(arrays["class_weights"], meta["eta"], meta["k"])
    net = FullNetwork(config, layers, rnn, deconv, weights, meta["neighborhood"], meta["recurrent"], tuple(meta["frozen"]))
    optimizer = None
    if header["optimizer"] is not None:
        optimizer = SGDMomentum(header["optimizer"]["momentum"], header["optimizer"]["clip"])
        for name in net.parameters():
            if f"velocity/{name}" in arrays:
                optimizer.velocity[name] = arrays[f"velocity/{name}"]
    return net, optimizer, header["epoch"], header["config"]


def check_shapes(net, reference):
    """Names of parameters whose shapes differ between two networks."""
    a, b = net.parameters(), reference.parameters()
    bad = [f"{n}: {a[n].shape} vs {b[n].shape}" for n in a if n in b and a[n].shape != b[n].shape]
    bad += [f"{n}: missing" for n in set(a) ^ set(b)]
    return bad
