"""Central finite-difference gradient checking."""
from dataclasses import dataclass, field

import numpy as np

SCALE_FLOOR = 1e-3
ABS_FLOOR = 1e-10


def relative_error(analytic, numeric, scale_floor=SCALE_FLOOR):
    """Entrywise ``|a - n| / max(|a|, |n|, floor)``.

    ``floor`` is ``scale_floor`` times the largest numeric entry of the
    tensor, so entries far below the tensor's scale (where central
    differences are dominated by roundoff) are judged at that scale.
    """
    a, n = np.asarray(analytic, float), np.asarray(numeric, float)
    floor = max(scale_floor * float(np.abs(n).max(initial=0.0)), ABS_FLOOR)
    return np.abs(a - n) / np.maximum(np.maximum(np.abs(a), np.abs(n)), floor)


def numeric_gradient(f, arr, step=1e-6, indices=None):
    """Central differences of scalar ``f()`` w.r.t. entries of ``arr`` (perturbed in place, then restored)."""
    flat = arr.reshape(-1)
    if indices is None:
        indices = range(flat.size)
    out = np.zeros(len(indices))
    for k, i in enumerate(indices):
        old = flat[i]
        flat[i] = old + step
        fp = f()
        flat[i] = old - step
        fm = f()
        flat[i] = old
        out[k] = (fp - fm) / (2 * step)
    return out


@dataclass
class GradCheckReport:
    tol: float
    errors: dict = field(default_factory=dict)  # name -> max relative error
    checked: dict = field(default_factory=dict)  # name -> number of entries compared

    @property
    def passed(self):
        return all(e < self.tol for e in self.errors.values())

    @property
    def max_error(self):
        return max(self.errors.values(), default=0.0)

    def format(self):
        lines = []
        for name, err in self.errors.items():
            status = "PASS" if err < self.tol else "FAIL"
            lines.append(f"{name}\t{err:.3e}\t{self.checked[name]}\t{status}")
        lines.append(f"overall\t{self.max_error:.3e}\t{sum(self.checked.values())}\t{'PASS' if self.passed else 'FAIL'}")
        return "\n".join(lines) + "\n"


def grad_check(loss_fn, params, grads, step=1e-6, tol=1e-5, max_entries=None, rng=None, scale_floor=SCALE_FLOOR):
    """Compare analytic ``grads`` against central differences of ``loss_fn()``.

    ``params`` and ``grads`` map names to arrays of equal shape; ``loss_fn``
    must read the current contents of ``params``. With ``max_entries`` set,
    larger tensors are checked on a random subset of entries.
    """
    rng = rng if rng is not None else np.random.default_rng(0)
    report = GradCheckReport(tol)
    for name, arr in params.items():
        g = np.asarray(grads[name]).reshape(-1)
        if max_entries is not None and arr.size > max_entries:
            idx = np.sort(rng.choice(arr.size, max_entries, replace=False))
        else:
            idx = np.arange(arr.size)
        num = numeric_gradient(loss_fn, arr, step, idx)
        report.errors[name] = float(relative_error(g[idx], num, scale_floor).max()) if idx.size else 0.0
        report.checked[name] = int(idx.size)
    return report
