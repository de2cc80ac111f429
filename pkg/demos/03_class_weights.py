"""Rare-class weights for a long-tailed label distribution (SiftFlow-like)."""
import sys
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "tests"))
from siftflow import NAMES, frequencies  # noqa: E402

from dagrnn.objective import ClassStats, class_weights, compute_eta, format_weight_table

stats = ClassStats(frequencies())
eta = compute_eta(stats)
cw = class_weights(stats, eta, k=2)
print("eta", eta, "rare classes", int(np.sum(stats.frequencies < eta)))
print(format_weight_table(stats, cw, NAMES))
