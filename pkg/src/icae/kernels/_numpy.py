"""Pure-numpy reference kernels.

Every function here has a numba twin in ``_numba.py`` with the same
signature and semantics. Arrays are float64, batch-major: inputs are
``(batch, features)`` and weights are ``(out, in)``.
"""

import numpy as np

LINEAR, RELU, ELU, TANH, SOFTMAX = 0, 1, 2, 3, 4


def softmax_rows(z):
    shifted = z - z.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


def activate(z, act):
    if act == LINEAR:
        return z.copy()
    if act == RELU:
        return np.maximum(z, 0.0)
    if act == ELU:
        return np.where(z > 0.0, z, np.expm1(np.minimum(z, 0.0)))
    if act == TANH:
        return np.tanh(z)
    if act == SOFTMAX:
        return softmax_rows(z)
    raise ValueError(f"unknown activation code {act}")


def activation_backward(z, a, grad_a, act):
    """Gradient w.r.t. the pre-activation given the gradient w.r.t. the output."""
    if act == LINEAR:
        return grad_a.copy()
    if act == RELU:
        return grad_a * (z > 0.0)
    if act == ELU:
        return grad_a * np.where(z > 0.0, 1.0, a + 1.0)
    if act == TANH:
        return grad_a * (1.0 - a * a)
    if act == SOFTMAX:
        inner = (grad_a * a).sum(axis=1, keepdims=True)
        return a * (grad_a - inner)
    raise ValueError(f"unknown activation code {act}")


def dense_forward(x, w, b, act):
    z = x @ w.T + b
    return z, activate(z, act)


def dense_backward(x, w, grad_z):
    return grad_z @ w, grad_z.T @ x, grad_z.sum(axis=0)


def power_normalize(u, n):
    norms = np.sqrt((u * u).sum(axis=1))
    return u * (np.sqrt(n) / norms)[:, None], norms


def power_normalize_backward(x, norms, grad_x, n):
    # x / sqrt(n) is the unit direction of the pre-normalization vector
    unit = x / np.sqrt(n)
    radial = (grad_x * unit).sum(axis=1, keepdims=True)
    return (grad_x - unit * radial) * (np.sqrt(n) / norms)[:, None]


def softmax_xent_grad(probs, targets):
    """Mean categorical cross-entropy gradient w.r.t. the softmax logits."""
    g = probs.copy()
    g[np.arange(len(targets)), targets] -= 1.0
    return g / len(targets)


def adam_update(param, grad, m, v, lr, beta1, beta2, eps, t):
    m *= beta1
    m += (1.0 - beta1) * grad
    v *= beta2
    v += (1.0 - beta2) * grad * grad
    m_hat = m / (1.0 - beta1**t)
    v_hat = v / (1.0 - beta2**t)
    param -= lr * m_hat / (np.sqrt(v_hat) + eps)


def argmax_rows(p):
    # np.argmax returns the first maximum, i.e. lowest index on ties
    return np.argmax(p, axis=1)
