"""Checking the hand-written backprop, and reading the network's input
Jacobian as a physics summary.

Run from the repo root:  python3 demos/05_gradients_and_jacobian.py
"""

import sys
import time

sys.path.insert(0, "src")

import numpy as np

from edfagain import RngStream, forward, init_model, input_jacobian, run_gradcheck

# ---------------------------------------------------------------------------
# Gradient check: central differences vs the analytic gradients, on random
# small nets. Coordinates whose probe flips a relu unit are skipped; across a
# kink a central difference measures nothing useful.

t0 = time.time()
result = run_gradcheck(trials=25)
print(f"gradcheck: {result.n_checked} coordinates in {time.time() - t0:.1f} s, "
      f"{result.n_skipped} skipped at activation boundaries")
print(f"max relative error {result.max_rel_err:.2e} (pass: {result.passed})")

# ---------------------------------------------------------------------------
# The input Jacobian d(output)/d(input) of an untrained full-size net.

model = init_model(7)
rng = RngStream(123)
x = np.concatenate((rng.normal(-19.2, 1.0, size=83), [0.1, 1.5]))
jac = input_jacobian(model, x)
print(f"\nJacobian shape: {jac.shape}  (83 outputs x 85 inputs)")
print(f"spectrum block magnitude ~ {np.abs(jac[:, :83]).mean():.4f}, "
      f"power columns ~ {np.abs(jac[:, 83:]).mean():.4f}")

# ---------------------------------------------------------------------------
# Between relu kinks the network is exactly affine, so a small enough step
# moves the output by exactly J @ delta.

y0, _ = forward(model, x)
delta = 1e-4 * rng.child("delta").normal(0.0, 1.0, size=85)
y1, _ = forward(model, x + delta)
linear_prediction = y0 + jac @ delta
print(f"\naffine-step check: max |f(x+d) - (f(x) + J d)| = "
      f"{np.abs(y1 - linear_prediction).max():.2e}")

# The same Jacobian row falls out of a backward pass seeded with a unit
# cotangent on that output; stacking rows or masking weight products are two
# routes to the same matrix.
_, cache = forward(model, x)
m1 = (cache["z1"][0] > 0).astype(float)
m2 = (cache["z2"][0] > 0).astype(float)
w1, w2, w3 = model.weights
by_hand = w3 @ (m2[:, None] * w2) @ (m1[:, None] * w1)
print(f"masked-product route matches: {np.allclose(jac, by_hand, atol=1e-12)}")
print(f"\nactive hidden units at this input: {int(m1.sum())}/256 and {int(m2.sum())}/128")
