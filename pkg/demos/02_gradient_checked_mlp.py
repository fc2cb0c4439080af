"""Build a small MLP, verify its gradients, then fit a toy regression.

The layers compute their own backward passes by hand, so before trusting
them we compare every analytic gradient against central finite
differences. Then the same network learns y = sin(3x) from 200 points.
"""

import numpy as np

from zslgen.nn import feedforward
from zslgen.numerics import AdamState, adam_step, make_rng

rng = make_rng(1)
net = feedforward([1, 32, 32, 1], rng)

# --- gradient check -------------------------------------------------------
x = rng.standard_normal((5, 1))
target = rng.standard_normal((5, 1))


def loss():
    out = net.forward(x, training=False)
    return float(((out - target) ** 2).mean())


def analytic_grads():
    out = net.forward(x, training=False)
    net.backward(2.0 * (out - target) / out.shape[0])
    return [(layer.grad_w.copy(), layer.grad_b.copy())
            for layer in net.dense_layers()]


grads = analytic_grads()
worst = 0.0
h = 1e-5
for li, layer in enumerate(net.dense_layers()):
    for arr, g in ((layer.weights, grads[li][0]), (layer.bias, grads[li][1])):
        it = np.nditer(arr, flags=["multi_index"])
        for _ in it:
            idx = it.multi_index
            keep = arr[idx]
            arr[idx] = keep + h
            f_plus = loss()
            arr[idx] = keep - h
            f_minus = loss()
            arr[idx] = keep
            numeric = (f_plus - f_minus) / (2.0 * h)
            denom = max(abs(numeric), abs(g[idx]), 1e-3)
            worst = max(worst, abs(numeric - g[idx]) / denom)
print(f"gradient check: worst relative error {worst:.2e}")
assert worst < 1e-4

# --- fit sin(3x) ----------------------------------------------------------
x = rng.uniform(-1.0, 1.0, (200, 1))
y = np.sin(3.0 * x)
states = [(layer, AdamState.for_param(layer.weights, lr=1e-2),
           AdamState.for_param(layer.bias, lr=1e-2))
          for layer in net.dense_layers()]

for epoch in range(1, 401):
    out = net.forward(x, training=False)
    mse = float(((out - y) ** 2).mean())
    net.backward(2.0 * (out - y) / x.shape[0])
    for layer, sw, sb in states:
        layer.weights = adam_step(sw, layer.weights, layer.grad_w)
        layer.bias = adam_step(sb, layer.bias, layer.grad_b)
    if epoch % 100 == 0:
        print(f"epoch {epoch:3d}: mse {mse:.5f}")

probe = np.array([[-0.5], [0.0], [0.5]])
print("predictions at -0.5, 0, 0.5:", np.round(net.forward(probe).ravel(), 3),
      "truth:", np.round(np.sin(3.0 * probe).ravel(), 3))
