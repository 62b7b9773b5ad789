"""Finite-difference verification of the analytic gradients.

Central differences on randomly drawn small networks, for every weight, bias
and input coordinate. Coordinates whose perturbation flips a relu activation
are skipped: across a kink the loss is only piecewise smooth and the central
difference no longer estimates the one-sided analytic derivative.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import MlpModel, backward, forward, init_model, mse_loss
from .numerics import RngStream, subseed

__all__ = ["GradCheckResult", "check_gradients", "run_gradcheck", "FD_STEP", "REL_TOL"]

FD_STEP = 1e-5
REL_TOL = 1e-4

# Dimension pool for the random small nets; kept small so a full coordinate
# sweep stays fast.
_DIM_CHOICES = ((3, 5, 4, 2), (5, 8, 6, 4), (7, 10, 6, 5), (4, 6, 6, 3))


@dataclass
class GradCheckResult:
    max_rel_err: float
    n_checked: int
    n_skipped: int
    worst: str

    @property
    def passed(self) -> bool:
        return self.max_rel_err < REL_TOL


def _rel_err(a: float, b: float) -> float:
    scale = max(abs(a), abs(b))
    if scale < 1e-6:
        # Both effectively zero: agreement down to fd noise counts as exact.
        return 0.0 if abs(a - b) < 1e-8 else 1.0
    return abs(a - b) / scale


def _eval_point(model: MlpModel, x: np.ndarray, label: np.ndarray) -> tuple:
    """(loss, relu activation pattern) at one point."""
    y, cache = forward(model, x)
    pattern = ((cache["z1"] > 0.0).tobytes(), (cache["z2"] > 0.0).tobytes())
    return mse_loss(y, label), pattern


def check_gradients(model: MlpModel, x: np.ndarray, label: np.ndarray, step: float = FD_STEP):
    """Compare analytic gradients against central differences, coordinate by
    coordinate. Returns (max_rel_err, n_checked, n_skipped, worst_desc)."""
    _, cache = forward(model, x)
    grads, dx = backward(model, cache, label)

    max_err, worst = 0.0, "none"
    checked = skipped = 0
    _, base_pattern = _eval_point(model, x, label)

    names = ["W1", "b1", "W2", "b2", "W3", "b3"]
    params = model.params()
    for name, p, g in zip(names, params, grads):
        flat_p = p.reshape(-1)
        flat_g = g.reshape(-1)
        for i in range(flat_p.size):
            old = flat_p[i]
            flat_p[i] = old + step
            loss_hi, pat_hi = _eval_point(model, x, label)
            flat_p[i] = old - step
            loss_lo, pat_lo = _eval_point(model, x, label)
            flat_p[i] = old
            if pat_hi != base_pattern or pat_lo != base_pattern:
                skipped += 1
                continue
            fd = (loss_hi - loss_lo) / (2.0 * step)
            err = _rel_err(float(flat_g[i]), fd)
            checked += 1
            if err > max_err:
                max_err, worst = err, f"{name}[{i}] analytic={flat_g[i]:.6e} fd={fd:.6e}"

    xp = x.copy()
    for j in range(x.size):
        old = xp[j]
        xp[j] = old + step
        loss_hi, pat_hi = _eval_point(model, xp, label)
        xp[j] = old - step
        loss_lo, pat_lo = _eval_point(model, xp, label)
        xp[j] = old
        if pat_hi != base_pattern or pat_lo != base_pattern:
            skipped += 1
            continue
        fd = (loss_hi - loss_lo) / (2.0 * step)
        err = _rel_err(float(dx[j]), fd)
        checked += 1
        if err > max_err:
            max_err, worst = err, f"x[{j}] analytic={dx[j]:.6e} fd={fd:.6e}"

    return max_err, checked, skipped, worst


def run_gradcheck(trials: int, seed: int = 73) -> GradCheckResult:
    """Full suite: `trials` random (net, input, label) triples."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    max_err, total_checked, total_skipped, worst = 0.0, 0, 0, "none"
    for t in range(trials):
        rng = RngStream(subseed(seed, "gradcheck", t))
        dims = _DIM_CHOICES[t % len(_DIM_CHOICES)]
        model = init_model(subseed(seed, "gradcheck-model", t), dims)
        x = rng.normal(0.0, 1.0, size=dims[0])
        label = rng.normal(0.0, 1.0, size=dims[-1])
        err, checked, skipped, w = check_gradients(model, x, label)
        total_checked += checked
        total_skipped += skipped
        if err > max_err:
            max_err, worst = err, f"trial {t}: {w}"
    return GradCheckResult(max_rel_err=max_err, n_checked=total_checked, n_skipped=total_skipped, worst=worst)
