"""Finite-difference check of the full network on a small random image."""
import numpy as np

from dagrnn.conv import build_preset
from dagrnn.gradcheck import grad_check
from dagrnn.network import FullNetwork, backward_full, loss_full

rng = np.random.default_rng(0)
net = FullNetwork.create(build_preset("tiny", 3), rng)
image = rng.uniform(size=(12, 12, 3))
labels = rng.integers(0, 3, (12, 12))

loss, grads, _ = backward_full(net, image, labels)
print("loss", loss)

# sampled entries per tensor keep this quick
report = grad_check(lambda: loss_full(net, image, labels), net.parameters(), grads,
                    step=1e-6, tol=1e-4, max_entries=32, rng=rng)
print(report.format())
