"""Minimal dense-network engine: tensors, layers, loss and Adam.

Data is batch-major throughout: a batch of inputs is a ``(batch, in_dim)``
array and a layer's weights are ``(out_dim, in_dim)``, so a layer computes
``f(x @ W.T + b)`` row by row.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import DegenerateInputError, DimensionError, NumericError, StateError

ACTIVATIONS = {
    "linear": kernels.LINEAR,
    "relu": kernels.RELU,
    "elu": kernels.ELU,
    "tanh": kernels.TANH,
    "softmax": kernels.SOFTMAX,
}

PROB_FLOOR = 1e-15


@dataclass
class Tensor:
    """A 2-D float64 array with optional same-shape gradient storage."""

    values: np.ndarray
    grad: np.ndarray | None = None
    name: str = ""

    def __post_init__(self):
        self.values = np.ascontiguousarray(self.values, dtype=np.float64)
        if self.values.ndim != 2:
            raise DimensionError(f"tensor {self.name!r} must be 2-D, got shape {self.values.shape}")
        if not np.all(np.isfinite(self.values)):
            raise NumericError(f"tensor {self.name!r} has non-finite values")
        if self.grad is not None and self.grad.shape != self.values.shape:
            raise DimensionError(
                f"gradient shape {self.grad.shape} does not match values {self.values.shape}"
            )

    @property
    def shape(self):
        return self.values.shape

    @property
    def rows(self):
        return self.values.shape[0]

    @property
    def cols(self):
        return self.values.shape[1]

    def zero_grad(self):
        self.grad = np.zeros_like(self.values)


def glorot_uniform(rng, out_dim, in_dim):
    limit = np.sqrt(6.0 / (in_dim + out_dim))
    return rng.uniform(-limit, limit, size=(out_dim, in_dim))


class DenseLayer:
    """Fully connected layer ``f(x @ W.T + b)`` with a fixed activation."""

    def __init__(self, in_dim, out_dim, activation, rng=None, weights=None, bias=None, name="dense"):
        if activation not in ACTIVATIONS:
            raise ValueError(f"unknown activation {activation!r}; choose from {sorted(ACTIVATIONS)}")
        self._activation = activation
        self._act_code = ACTIVATIONS[activation]
        self.in_dim = int(in_dim)
        self.out_dim = int(out_dim)
        self.name = name
        if weights is None:
            if rng is None:
                raise ValueError("need an rng to initialize weights")
            weights = glorot_uniform(rng, self.out_dim, self.in_dim)
        if bias is None:
            bias = np.zeros((self.out_dim, 1))
        self.weights = Tensor(weights, name=f"{name}.weights")
        self.bias = Tensor(np.reshape(bias, (-1, 1)), name=f"{name}.bias")
        if self.weights.shape != (self.out_dim, self.in_dim):
            raise DimensionError(
                f"{name}: weights shape {self.weights.shape} != ({self.out_dim}, {self.in_dim})"
            )
        if self.bias.shape != (self.out_dim, 1):
            raise DimensionError(f"{name}: bias shape {self.bias.shape} != ({self.out_dim}, 1)")
        self._cache = None

    @property
    def activation(self):
        return self._activation

    def params(self):
        return [self.weights, self.bias]

    def forward(self, x):
        x = np.ascontiguousarray(x, dtype=np.float64)
        if x.ndim != 2 or x.shape[1] != self.in_dim:
            raise DimensionError(
                f"{self.name}: input shape {x.shape} incompatible with weights "
                f"{self.weights.shape} (expected (batch, {self.in_dim}))"
            )
        z, a = kernels.active.dense_forward(x, self.weights.values, self.bias.values.reshape(-1), self._act_code)
        self._cache = (x, z, a)
        return a

    def infer(self, x):
        """Forward pass without caching; safe on a shared frozen layer."""
        x = np.ascontiguousarray(x, dtype=np.float64)
        if x.ndim != 2 or x.shape[1] != self.in_dim:
            raise DimensionError(
                f"{self.name}: input shape {x.shape} incompatible with weights {self.weights.shape}"
            )
        return kernels.active.dense_forward(x, self.weights.values, self.bias.values.reshape(-1), self._act_code)[1]

    def backward(self, grad_out, from_preactivation=False):
        """Backpropagate; returns the gradient w.r.t. the layer input.

        With ``from_preactivation=True`` the incoming gradient is taken to be
        w.r.t. the pre-activation already (used for fused softmax + loss).
        """
        if self._cache is None:
            raise StateError(f"{self.name}: backward called before forward")
        x, z, a = self._cache
        grad_out = np.ascontiguousarray(grad_out, dtype=np.float64)
        if grad_out.shape != z.shape:
            raise DimensionError(f"{self.name}: gradient shape {grad_out.shape} != output {z.shape}")
        if from_preactivation:
            grad_z = grad_out
        else:
            grad_z = kernels.active.activation_backward(z, a, grad_out, self._act_code)
        grad_x, grad_w, grad_b = kernels.active.dense_backward(x, self.weights.values, grad_z)
        self.weights.grad = grad_w
        self.bias.grad = grad_b.reshape(-1, 1)
        return grad_x

    def copy(self):
        return DenseLayer(
            self.in_dim,
            self.out_dim,
            self._activation,
            weights=self.weights.values.copy(),
            bias=self.bias.values.copy(),
            name=self.name,
        )


class PowerNorm:
    """Rescale each row to squared norm ``n`` (per-component power 0.5 for 2n components)."""

    def __init__(self, n):
        self.n = int(n)
        self.name = "power_norm"
        self._cache = None

    def params(self):
        return []

    def forward(self, u):
        x, norms = _normalize(u, self.n)
        self._cache = (x, norms)
        return x

    def infer(self, u):
        return _normalize(u, self.n)[0]

    def backward(self, grad_out):
        if self._cache is None:
            raise StateError("power_norm: backward called before forward")
        x, norms = self._cache
        return kernels.active.power_normalize_backward(
            x, norms, np.ascontiguousarray(grad_out, dtype=np.float64), self.n
        )

    def copy(self):
        return PowerNorm(self.n)


class Sequential:
    """Fixed ordered stack of layers."""

    def __init__(self, layers):
        self.layers = list(layers)

    def __iter__(self):
        return iter(self.layers)

    def __len__(self):
        return len(self.layers)

    def params(self):
        return [p for layer in self.layers for p in layer.params()]

    def forward(self, x):
        for layer in self.layers:
            x = layer.forward(x)
        return x

    def infer(self, x):
        for layer in self.layers:
            x = layer.infer(x)
        return x

    def backward(self, grad_out, from_preactivation=False):
        """Populate every parameter gradient and return d(loss)/d(input)."""
        *head, last = self.layers
        if from_preactivation:
            grad = last.backward(grad_out, from_preactivation=True)
        else:
            grad = last.backward(grad_out)
        for layer in reversed(head):
            grad = layer.backward(grad)
        return grad

    def copy(self):
        return Sequential([layer.copy() for layer in self.layers])


def softmax(z):
    """Row-wise softmax with max subtraction; a 1-D input is treated as one row."""
    z = np.asarray(z, dtype=np.float64)
    if z.size == 0:
        raise DimensionError("softmax of an empty array")
    if z.ndim == 1:
        return kernels.active.softmax_rows(np.ascontiguousarray(z[None, :]))[0]
    return kernels.active.softmax_rows(np.ascontiguousarray(z))


def cross_entropy_loss(probs, targets):
    """Categorical cross-entropy ``-log p[target]``, averaged over rows.

    Accepts one probability vector with a scalar target or a batch with a
    vector of targets. Probabilities are floored at 1e-15.
    """
    probs = np.asarray(probs, dtype=np.float64)
    if probs.ndim == 1:
        probs = probs[None, :]
    targets = np.atleast_1d(np.asarray(targets, dtype=np.int64))
    if len(targets) != probs.shape[0]:
        raise DimensionError(f"{len(targets)} targets for {probs.shape[0]} probability rows")
    if np.any(targets < 0) or np.any(targets >= probs.shape[1]):
        raise IndexError(f"target index out of range for M={probs.shape[1]}")
    picked = probs[np.arange(len(targets)), targets]
    return float(np.mean(-np.log(np.maximum(picked, PROB_FLOOR))))


def cross_entropy_grad(probs, targets):
    """Gradient of the mean loss w.r.t. the pre-softmax logits: (p - onehot) / batch."""
    probs = np.ascontiguousarray(probs, dtype=np.float64)
    return kernels.active.softmax_xent_grad(probs, np.asarray(targets, dtype=np.int64))


def _normalize(u, n):
    u = np.ascontiguousarray(u, dtype=np.float64)
    if u.ndim == 1:
        u = u[None, :]
    if u.shape[0] == 0:
        raise DimensionError("power_normalize of an empty batch")
    if np.any(~u.any(axis=1)):
        raise DegenerateInputError("cannot normalize an all-zero codeword")
    return kernels.active.power_normalize(u, n)


def power_normalize(batch, n):
    """Rescale each 2n-vector to squared norm ``n``, preserving direction."""
    single = np.ndim(batch) == 1
    x, _ = _normalize(batch, n)
    return x[0] if single else x


@dataclass
class Adam:
    """Adam with bias correction over a list of named tensors."""

    params: list
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    step_count: int = 0
    first_moment: list = field(default_factory=list)
    second_moment: list = field(default_factory=list)

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ValueError("learning rate must be positive")
        if not (0 < self.beta1 < 1 and 0 < self.beta2 < 1):
            raise ValueError("beta1 and beta2 must lie in (0, 1)")
        if not self.first_moment:
            self.first_moment = [np.zeros_like(p.values) for p in self.params]
            self.second_moment = [np.zeros_like(p.values) for p in self.params]

    def step(self):
        for p in self.params:
            if p.grad is None:
                raise StateError(f"{p.name}: no gradient to apply")
            if not np.all(np.isfinite(p.grad)):
                raise NumericError(f"non-finite gradient in {p.name}")
        self.step_count += 1
        for p, m, v in zip(self.params, self.first_moment, self.second_moment):
            kernels.active.adam_update(
                p.values, p.grad, m, v,
                self.learning_rate, self.beta1, self.beta2, self.epsilon, self.step_count,
            )
