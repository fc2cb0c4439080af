"""Feed-forward building blocks with hand-derived backward passes.

Each layer caches during forward exactly what its backward pass needs,
and backward consumes the cache. A network being trained is therefore
single-owner; in inference mode outputs are a pure function of the
input (dropout becomes the identity).
"""

import numpy as np

from .errors import ConfigError, InputError, ShapeError, StateError
from .numerics import Matrix, Rng, glorot_init


class DenseLayer:
    """Affine map x @ weights + bias.

    backward leaves grad_w and grad_b on the layer and returns the
    gradient with respect to the input.
    """

    def __init__(self, in_dim: int, out_dim: int, rng: Rng | None = None,
                 weights: Matrix | None = None, bias: np.ndarray | None = None):
        if in_dim < 1 or out_dim < 1:
            raise ConfigError(f"dense dims must be positive, got {in_dim}x{out_dim}")
        if weights is None:
            if rng is None:
                raise ConfigError("dense layer needs an rng when weights are not given")
            weights = glorot_init(rng, in_dim, out_dim)
        weights = np.asarray(weights, dtype=np.float64)
        if weights.shape != (in_dim, out_dim):
            raise ShapeError(f"weights shape {weights.shape} != ({in_dim}, {out_dim})")
        if bias is None:
            bias = np.zeros(out_dim)
        bias = np.asarray(bias, dtype=np.float64).reshape(-1)
        if bias.shape != (out_dim,):
            raise ShapeError(f"bias shape {bias.shape} != ({out_dim},)")
        self.in_dim = in_dim
        self.out_dim = out_dim
        self.weights = weights
        self.bias = bias
        self.grad_w: Matrix | None = None
        self.grad_b: np.ndarray | None = None
        self._input: Matrix | None = None

    def forward(self, x: Matrix, rng: Rng | None = None, training: bool = False) -> Matrix:
        if x.ndim != 2 or x.shape[1] != self.in_dim:
            raise ShapeError(f"dense layer expects (*, {self.in_dim}) input, got {x.shape}")
        self._input = x
        return x @ self.weights + self.bias

    def backward(self, grad_out: Matrix) -> Matrix:
        if self._input is None:
            raise StateError("dense backward called before forward")
        if grad_out.shape != (self._input.shape[0], self.out_dim):
            raise ShapeError(
                f"dense backward expects {(self._input.shape[0], self.out_dim)} "
                f"gradient, got {grad_out.shape}")
        self.grad_w = self._input.T @ grad_out
        self.grad_b = grad_out.sum(axis=0)
        grad_in = grad_out @ self.weights.T
        self._input = None
        return grad_in


class ReluLayer:
    """Elementwise max(0, x); the subgradient at 0 is taken as 0."""

    def __init__(self):
        self._input: Matrix | None = None

    def forward(self, x: Matrix, rng: Rng | None = None, training: bool = False) -> Matrix:
        self._input = x
        return np.maximum(x, 0.0)

    def backward(self, grad_out: Matrix) -> Matrix:
        if self._input is None:
            raise StateError("relu backward called before forward")
        if grad_out.shape != self._input.shape:
            raise ShapeError(f"relu backward got {grad_out.shape}, forward saw {self._input.shape}")
        grad_in = grad_out * (self._input > 0.0)
        self._input = None
        return grad_in


class DropoutLayer:
    """Inverted dropout: kept units are scaled by 1/(1-rate).

    In training mode each unit is dropped independently with the given
    probability; the same mask is applied in backward. In inference mode
    the layer is the identity, so no rescaling is needed at test time.
    """

    def __init__(self, rate: float):
        if not 0.0 <= rate < 1.0:
            raise ConfigError(f"dropout rate must be in [0, 1), got {rate}")
        self.rate = rate
        self._mask: Matrix | None = None
        self._saw_forward = False

    def forward(self, x: Matrix, rng: Rng | None = None, training: bool = False) -> Matrix:
        if not training or self.rate == 0.0:
            self._saw_forward = True
            self._mask = None
            return x
        if rng is None:
            raise InputError("dropout forward in training mode needs an rng")
        self._saw_forward = True
        keep = rng.random(x.shape) >= self.rate
        self._mask = keep / (1.0 - self.rate)
        return x * self._mask

    def backward(self, grad_out: Matrix) -> Matrix:
        if not self._saw_forward:
            raise StateError("dropout backward called before forward")
        self._saw_forward = False
        if self._mask is None:
            return grad_out
        grad_in = grad_out * self._mask
        self._mask = None
        return grad_in


class Mlp:
    """An ordered stack of layers; backward traverses them in reverse.

    Dense dimensions must chain, checked at construction. forward with
    training=True caches activations and consumes the rng for dropout;
    backward then fills grad_w / grad_b on every dense layer.
    """

    def __init__(self, layers):
        layers = list(layers)
        if not layers:
            raise ConfigError("network needs at least one layer")
        dense = [lyr for lyr in layers if isinstance(lyr, DenseLayer)]
        if not dense:
            raise ConfigError("network needs at least one dense layer")
        for prev, nxt in zip(dense, dense[1:]):
            if prev.out_dim != nxt.in_dim:
                raise ConfigError(
                    f"dense dimensions do not chain: {prev.out_dim} feeds {nxt.in_dim}")
        self.layers = layers
        self.in_dim = dense[0].in_dim
        self.out_dim = dense[-1].out_dim

    def forward(self, x: Matrix, rng: Rng | None = None, training: bool = False) -> Matrix:
        for layer in self.layers:
            x = layer.forward(x, rng=rng, training=training)
        return x

    def backward(self, grad_out: Matrix) -> Matrix:
        for layer in reversed(self.layers):
            grad_out = layer.backward(grad_out)
        return grad_out

    def dense_layers(self) -> list[DenseLayer]:
        return [lyr for lyr in self.layers if isinstance(lyr, DenseLayer)]


def feedforward(dims, rng: Rng, dropout_rate: float = 0.0,
                dropout_after: int | None = None) -> Mlp:
    """Dense stack with ReLU between layers and a linear last layer.

    dims is the full width chain, input first. dropout_after names the
    hidden layer index (0-based) whose activation is followed by a
    dropout layer; None disables dropout regardless of rate.
    """
    dims = list(dims)
    if len(dims) < 2:
        raise ConfigError(f"need an input and output width, got {dims}")
    layers = []
    n_dense = len(dims) - 1
    for i in range(n_dense):
        layers.append(DenseLayer(dims[i], dims[i + 1], rng=rng))
        if i < n_dense - 1:
            layers.append(ReluLayer())
            if dropout_after == i and dropout_rate > 0.0:
                layers.append(DropoutLayer(dropout_rate))
    return Mlp(layers)
