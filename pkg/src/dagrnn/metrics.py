"""Global and per-class pixel accuracy."""
from dataclasses import dataclass

import numpy as np

from .errors import ContractError
from .objective import IGNORE


@dataclass
class EvalResult:
    confusion: np.ndarray  # [C, C], rows = ground truth, cols = prediction
    include_absent: bool = False  # count classes missing from the truth as 0 recall

    @property
    def global_acc(self):
        total = self.confusion.sum()
        return float(np.trace(self.confusion) / total) if total else 0.0

    @property
    def recalls(self):
        """Per-class recall, NaN for classes absent from the ground truth."""
        rows = self.confusion.sum(axis=1)
        with np.errstate(invalid="ignore", divide="ignore"):
            return np.where(rows > 0, np.diag(self.confusion) / np.maximum(rows, 1), np.nan)

    @property
    def class_acc(self):
        r = self.recalls
        r = np.nan_to_num(r) if self.include_absent else r[~np.isnan(r)]
        return float(r.mean()) if r.size else 0.0


def confusion_matrix(pred, truth, num_classes, ignore=IGNORE):
    pred = np.asarray(pred).ravel().astype(np.int64)
    truth = np.asarray(truth).ravel().astype(np.int64)
    if pred.shape != truth.shape:
        raise ContractError(f"prediction and truth sizes differ: {pred.size} vs {truth.size}")
    keep = truth != ignore
    idx = truth[keep] * num_classes + np.clip(pred[keep], 0, num_classes - 1)
    return np.bincount(idx, minlength=num_classes * num_classes).reshape(num_classes, num_classes)


def evaluate(predictions, truths, num_classes, ignore=IGNORE, include_absent=False):
    predictions, truths = list(predictions), list(truths)
    if len(predictions) != len(truths):
        raise ContractError(f"{len(predictions)} predictions for {len(truths)} ground-truth maps")
    conf = np.zeros((num_classes, num_classes), dtype=np.int64)
    for p, t in zip(predictions, truths):
        if np.shape(p) != np.shape(t):
            raise ContractError(f"prediction {np.shape(p)} and truth {np.shape(t)} extents differ")
        conf += confusion_matrix(p, t, num_classes, ignore)
    return EvalResult(conf, include_absent)


def format_result(result, names=None):
    lines = [f"global {100 * result.global_acc:.1f} class {100 * result.class_acc:.1f}"]
    for j, r in enumerate(result.recalls):
        name = names[j] if names else str(j)
        lines.append(f"{name}\t{'-' if np.isnan(r) else f'{100 * r:.1f}'}")
    return "\n".join(lines) + "\n"
