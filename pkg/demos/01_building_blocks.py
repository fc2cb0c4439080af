"""Tour of the numeric building blocks: rng, init, and the optimizer.

Everything downstream is built on these three pieces: a seeded PCG64
generator, Glorot-uniform weight init, and Adam with bias correction.
Here we watch Adam drive a badly scaled quadratic to its minimum, which
plain gradient descent at the same step size handles far slower.
"""

import numpy as np

from zslgen.numerics import AdamState, adam_step, glorot_init, make_rng

rng = make_rng(0)

# Glorot init keeps the forward variance roughly constant layer to layer
w = glorot_init(rng, fan_in=256, fan_out=128)
bound = np.sqrt(6.0 / (256 + 128))
print(f"glorot sample: shape {w.shape}, bound {bound:.4f}, "
      f"observed max |w| {np.abs(w).max():.4f}")

# minimize f(x) = sum(scales * x^2) with condition number 1e4
scales = np.logspace(0, 4, 10)
x_adam = np.full(10, 3.0)
x_gd = np.full(10, 3.0)
state = AdamState.for_param(x_adam, lr=0.1)

for step in range(1, 501):
    grad = 2.0 * scales * x_adam
    x_adam = adam_step(state, x_adam, grad)
    x_gd = x_gd - 1e-5 * (2.0 * scales * x_gd)  # biggest stable plain step
    if step % 100 == 0:
        print(f"step {step:3d}: adam f={float(scales @ x_adam**2):10.4f}   "
              f"gd f={float(scales @ x_gd**2):10.4f}")

print("adam reaches the flat directions the fixed-step method cannot")
