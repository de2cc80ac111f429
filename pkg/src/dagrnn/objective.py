"""Class-frequency statistics, rare-class weighting and the weighted cross-entropy loss."""
import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError

IGNORE = 255
LOG_FLOOR = 1e-12


@dataclass
class ClassStats:
    frequencies: np.ndarray  # [C], fraction of labelled pixels per class
    counts: np.ndarray = None

    @property
    def num_classes(self):
        return len(self.frequencies)


@dataclass
class ClassWeights:
    weights: np.ndarray
    eta: float
    k: float = 2.0

    def rare(self, stats):
        return np.asarray(stats.frequencies) < self.eta


def class_frequencies(label_maps, num_classes, ignore=IGNORE):
    """Pixel-weighted class fractions over a collection of label maps."""
    label_maps = list(label_maps)
    if not label_maps:
        raise ConfigurationError("cannot compute class frequencies of an empty dataset")
    counts = np.zeros(num_classes, dtype=np.int64)
    for lab in label_maps:
        lab = np.asarray(lab).ravel()
        lab = lab[lab != ignore]
        counts += np.bincount(lab, minlength=num_classes)[:num_classes]
    total = counts.sum()
    if total == 0:
        raise ConfigurationError("dataset has no labelled pixels")
    return ClassStats(counts / total, counts)


def _round_down_one_digit(x):
    if x <= 0:
        return 0.0
    scale = 10.0 ** math.floor(math.log10(x))
    return math.floor(x / scale + 1e-9) * scale


def frequent_split(frequencies, mass=0.85):
    """Number of most-frequent classes whose cumulative frequency best matches ``mass``.

    Only boundaries between strictly different frequencies are candidates;
    the boundary whose cumulative mass is closest to ``mass`` wins, ties
    going to the larger frequent set.
    """
    f = np.sort(np.asarray(frequencies, dtype=float))[::-1]
    f = f[f > 0]
    cum = np.cumsum(f)
    total = cum[-1]
    best, best_gap = len(f), None
    for n in range(1, len(f) + 1):
        if n < len(f) and f[n] == f[n - 1]:
            continue
        gap = abs(cum[n - 1] / total - mass)
        if best_gap is None or gap < best_gap - 1e-12 or (abs(gap - best_gap) <= 1e-12):
            best, best_gap = n, gap
    return best


def compute_eta(stats, mass=0.85):
    """Rare-class threshold from the 85%/15% rule.

    The threshold is the frequency of the least frequent "frequent" class,
    rounded down to one significant digit when there are rare classes and
    the rounding does not move any class across the frequent/rare boundary.
    """
    f = np.asarray(stats.frequencies, dtype=float)
    present = f[f > 0]
    if len(present) <= 1:
        return 0.0
    n = frequent_split(present, mass)
    ordered = np.sort(present)[::-1]
    boundary = float(ordered[n - 1])
    below = float(ordered[n]) if n < len(ordered) else 0.0
    if n == len(ordered):
        return boundary
    rounded = _round_down_one_digit(boundary)
    return rounded if rounded > below else boundary


def class_weights(stats, eta, k=2.0):
    """``k ** ceil(log10(eta / f_j))`` per class; unseen classes get the largest observed weight."""
    if not eta > 0:
        raise ConfigurationError(f"eta must be positive, got {eta}")
    f = np.asarray(stats.frequencies, dtype=float)
    w = np.zeros_like(f)
    seen = f > 0
    w[seen] = [float(k) ** math.ceil(math.log10(eta / fj)) for fj in f[seen]]
    if seen.any():
        w[~seen] = w[seen].max()
    else:
        w[:] = 1.0
    return ClassWeights(w, float(eta), float(k))


def weighted_ce_loss(probs, labels, weights, ignore=IGNORE):
    """Average weighted cross-entropy and its gradient w.r.t. the pre-softmax logits.

    ``probs`` is ``[..., C]`` (rows already softmax-normalised) and
    ``labels`` the matching integer map. The average runs over non-ignored
    pixels; if every pixel is ignored the loss and gradient are zero.
    """
    w = weights.weights if isinstance(weights, ClassWeights) else np.asarray(weights, dtype=float)
    C = probs.shape[-1]
    p = probs.reshape(-1, C)
    y = np.asarray(labels).reshape(-1)
    if y.shape[0] != p.shape[0]:
        raise ConfigurationError(f"labels {np.shape(labels)} do not match predictions {probs.shape}")
    valid = y != ignore
    n = int(valid.sum())
    grad = np.zeros_like(p)
    if n == 0:
        return 0.0, grad.reshape(probs.shape)
    idx = np.flatnonzero(valid)
    yv = y[idx]
    if yv.max() >= C or yv.min() < 0:
        raise ConfigurationError(f"label id out of range [0, {C})")
    wy = w[yv]
    logp = np.log(np.maximum(p[idx, yv], LOG_FLOOR))
    loss = -float(np.sum(wy * logp)) / n
    g = p[idx].copy()
    g[np.arange(len(idx)), yv] -= 1.0
    grad[idx] = g * (wy / n)[:, None]
    return loss, grad.reshape(probs.shape)


def format_weight_table(stats, weights, names=None):
    """Rows ``class_id freq weight`` sorted by descending frequency."""
    f = np.asarray(stats.frequencies)
    order = sorted(range(len(f)), key=lambda j: (-f[j], j))
    lines = [f"# eta {weights.eta:g} k {weights.k:g}", "class_id\tfreq\tweight" + ("\tname" if names else "")]
    for j in order:
        row = f"{j}\t{f[j]:.6g}\t{weights.weights[j]:g}"
        if names:
            row += f"\t{names[j]}"
        lines.append(row)
    return "\n".join(lines) + "\n"


def parse_weight_table(text):
    rows = {}
    for line in text.splitlines():
        if not line or line.startswith("#") or line.startswith("class_id"):
            continue
        parts = line.split("\t")
        rows[int(parts[0])] = (float(parts[1]), float(parts[2]))
    return rows
