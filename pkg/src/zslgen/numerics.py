"""Matrix primitives, seeded randomness, Glorot init, and Adam.

Matrices are plain 2-D float64 numpy arrays and all randomness flows
through numpy Generators (PCG64), so a single integer seed reproduces a
whole run bit for bit on the same numpy build.
"""

from dataclasses import dataclass

import numpy as np

from .errors import ShapeError

# aliases used in signatures throughout the package
Matrix = np.ndarray
Rng = np.random.Generator


def make_rng(seed: int) -> Rng:
    """Seeded PCG64 generator. Same seed, same stream."""
    return np.random.default_rng(seed)


def as_matrix(values) -> Matrix:
    """Coerce to a 2-D float64 array, rejecting other ranks."""
    m = np.asarray(values, dtype=np.float64)
    if m.ndim != 2:
        raise ShapeError(f"expected a 2-D matrix, got ndim={m.ndim}")
    return m


def matmul(a: Matrix, b: Matrix) -> Matrix:
    """Matrix product a @ b with an explicit shape check."""
    a = np.asarray(a)
    b = np.asarray(b)
    if a.ndim != 2 or b.ndim != 2:
        raise ShapeError(f"matmul needs 2-D operands, got ndim {a.ndim} and {b.ndim}")
    if a.shape[1] != b.shape[0]:
        raise ShapeError(f"cannot multiply {a.shape} by {b.shape}: inner dimensions differ")
    return a @ b


def sample_standard_normal(rng: Rng, rows: int, cols: int) -> Matrix:
    """i.i.d. N(0, 1) entries, shape (rows, cols)."""
    return rng.standard_normal((rows, cols))


def glorot_init(rng: Rng, fan_in: int, fan_out: int) -> Matrix:
    """Uniform Glorot weights, shape (fan_in, fan_out).

    Entries are uniform on +-sqrt(6 / (fan_in + fan_out)), which keeps
    forward and backward variances roughly constant across layers.
    """
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=(fan_in, fan_out))


@dataclass
class AdamState:
    """Adam moment estimates for one parameter array.

    t counts completed steps; m and v are the biased first and second
    moment accumulators, bias-corrected inside adam_step.
    """

    m: np.ndarray
    v: np.ndarray
    t: int = 0
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def for_param(cls, param: np.ndarray, lr: float = 1e-3, beta1: float = 0.9,
                  beta2: float = 0.999, eps: float = 1e-8) -> "AdamState":
        return cls(m=np.zeros_like(param), v=np.zeros_like(param),
                   lr=lr, beta1=beta1, beta2=beta2, eps=eps)


def adam_step(state: AdamState, param: np.ndarray, grad: np.ndarray) -> np.ndarray:
    """One bias-corrected Adam update; mutates state, returns the new param."""
    if param.shape != grad.shape or param.shape != state.m.shape:
        raise ShapeError(
            f"adam_step shape mismatch: param {param.shape}, grad {grad.shape}, "
            f"state {state.m.shape}")
    state.t += 1
    state.m = state.beta1 * state.m + (1.0 - state.beta1) * grad
    state.v = state.beta2 * state.v + (1.0 - state.beta2) * grad * grad
    m_hat = state.m / (1.0 - state.beta1 ** state.t)
    v_hat = state.v / (1.0 - state.beta2 ** state.t)
    return param - state.lr * m_hat / (np.sqrt(v_hat) + state.eps)
