"""Numba-compiled kernels, loop-for-loop twins of ``_numpy.py``.

The networks here are tiny (widths <= 16), so the cost of a numpy call
dominates the arithmetic. Explicit loops under ``njit`` remove that
overhead. ``fastmath`` stays off so results are reproducible run to run.
"""

import math

import numpy as np
from numba import njit

LINEAR, RELU, ELU, TANH, SOFTMAX = 0, 1, 2, 3, 4

_jit = njit(cache=True, nogil=True)


@_jit
def softmax_rows(z):
    rows, cols = z.shape
    out = np.empty_like(z)
    for i in range(rows):
        top = z[i, 0]
        for j in range(1, cols):
            if z[i, j] > top:
                top = z[i, j]
        total = 0.0
        for j in range(cols):
            e = math.exp(z[i, j] - top)
            out[i, j] = e
            total += e
        for j in range(cols):
            out[i, j] /= total
    return out


@_jit
def activate(z, act):
    if act == SOFTMAX:
        return softmax_rows(z)
    rows, cols = z.shape
    out = np.empty_like(z)
    for i in range(rows):
        for j in range(cols):
            v = z[i, j]
            if act == LINEAR:
                out[i, j] = v
            elif act == RELU:
                out[i, j] = v if v > 0.0 else 0.0
            elif act == ELU:
                out[i, j] = v if v > 0.0 else math.expm1(v)
            elif act == TANH:
                out[i, j] = math.tanh(v)
            else:
                raise ValueError("unknown activation code")
    return out


@_jit
def activation_backward(z, a, grad_a, act):
    rows, cols = z.shape
    out = np.empty_like(z)
    if act == SOFTMAX:
        for i in range(rows):
            inner = 0.0
            for j in range(cols):
                inner += grad_a[i, j] * a[i, j]
            for j in range(cols):
                out[i, j] = a[i, j] * (grad_a[i, j] - inner)
        return out
    for i in range(rows):
        for j in range(cols):
            g = grad_a[i, j]
            if act == LINEAR:
                out[i, j] = g
            elif act == RELU:
                out[i, j] = g if z[i, j] > 0.0 else 0.0
            elif act == ELU:
                out[i, j] = g if z[i, j] > 0.0 else g * (a[i, j] + 1.0)
            elif act == TANH:
                out[i, j] = g * (1.0 - a[i, j] * a[i, j])
            else:
                raise ValueError("unknown activation code")
    return out


@_jit
def dense_forward(x, w, b, act):
    rows = x.shape[0]
    n_out, n_in = w.shape
    z = np.empty((rows, n_out))
    for i in range(rows):
        for o in range(n_out):
            acc = b[o]
            for j in range(n_in):
                acc += x[i, j] * w[o, j]
            z[i, o] = acc
    return z, activate(z, act)


@_jit
def dense_backward(x, w, grad_z):
    rows = x.shape[0]
    n_out, n_in = w.shape
    grad_x = np.zeros((rows, n_in))
    grad_w = np.zeros((n_out, n_in))
    grad_b = np.zeros(n_out)
    for i in range(rows):
        for o in range(n_out):
            g = grad_z[i, o]
            if g == 0.0:
                continue
            grad_b[o] += g
            for j in range(n_in):
                grad_x[i, j] += g * w[o, j]
                grad_w[o, j] += g * x[i, j]
    return grad_x, grad_w, grad_b


@_jit
def power_normalize(u, n):
    rows, cols = u.shape
    out = np.empty_like(u)
    norms = np.empty(rows)
    root = math.sqrt(n)
    for i in range(rows):
        acc = 0.0
        for j in range(cols):
            acc += u[i, j] * u[i, j]
        norm = math.sqrt(acc)
        norms[i] = norm
        for j in range(cols):
            out[i, j] = u[i, j] * (root / norm)
    return out, norms


@_jit
def power_normalize_backward(x, norms, grad_x, n):
    rows, cols = x.shape
    out = np.empty_like(x)
    root = math.sqrt(n)
    for i in range(rows):
        radial = 0.0
        for j in range(cols):
            radial += grad_x[i, j] * (x[i, j] / root)
        scale = root / norms[i]
        for j in range(cols):
            out[i, j] = (grad_x[i, j] - (x[i, j] / root) * radial) * scale
    return out


@_jit
def softmax_xent_grad(probs, targets):
    rows = probs.shape[0]
    g = probs.copy()
    for i in range(rows):
        g[i, targets[i]] -= 1.0
    return g / rows


@_jit
def adam_update(param, grad, m, v, lr, beta1, beta2, eps, t):
    c1 = 1.0 - beta1**t
    c2 = 1.0 - beta2**t
    p = param.ravel()
    g = grad.ravel()
    mf = m.ravel()
    vf = v.ravel()
    for i in range(p.size):
        mf[i] = beta1 * mf[i] + (1.0 - beta1) * g[i]
        vf[i] = beta2 * vf[i] + (1.0 - beta2) * g[i] * g[i]
        p[i] -= lr * (mf[i] / c1) / (math.sqrt(vf[i] / c2) + eps)


@_jit
def argmax_rows(p):
    rows, cols = p.shape
    out = np.empty(rows, dtype=np.int64)
    for i in range(rows):
        best = 0
        for j in range(1, cols):
            if p[i, j] > p[i, best]:
                best = j
        out[i] = best
    return out
