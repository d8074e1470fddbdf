"""Hot numeric kernels with a numba fast path and a pure-numpy fallback.

The backend is chosen once at import time from the ``DGANIDS_BACKEND``
environment variable: ``numba`` (require the JIT path), ``numpy`` (force the
fallback), or ``auto`` (default: numba when importable). Both paths implement
the same arithmetic; ``benchmarks/bench_kernels.py`` times them against each
other and checks agreement.

Activation tags are shared with the weight-file format:
0=identity, 1=sigmoid, 2=tanh, 3=relu.
"""

from __future__ import annotations

import math
import os

import numpy as np

IDENTITY, SIGMOID, TANH, RELU = 0, 1, 2, 3

ACTIVATION_TAGS = {"identity": IDENTITY, "sigmoid": SIGMOID, "tanh": TANH, "relu": RELU}
ACTIVATION_NAMES = {v: k for k, v in ACTIVATION_TAGS.items()}


# ── pure-numpy implementations ──────────────────────────────────────────

def _np_affine_forward(x, w, b):
    return x @ w.T + b


def _np_activate(z, tag):
    if tag == IDENTITY:
        return z.copy()
    if tag == SIGMOID:
        # branch on sign for stability; exp only ever sees non-positive args
        out = np.empty_like(z)
        pos = z >= 0.0
        out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
        ez = np.exp(z[~pos])
        out[~pos] = ez / (1.0 + ez)
        return out
    if tag == TANH:
        return np.tanh(z)
    if tag == RELU:
        return np.maximum(z, 0.0)
    raise ValueError(f"unknown activation tag {tag}")


def _np_activation_backward(delta, z, a, tag):
    if tag == IDENTITY:
        return delta.copy()
    if tag == SIGMOID:
        return delta * (a * (1.0 - a))
    if tag == TANH:
        return delta * (1.0 - a * a)
    if tag == RELU:
        return np.where(z > 0.0, delta, 0.0)
    raise ValueError(f"unknown activation tag {tag}")


def _np_affine_backward(delta, a_prev, w):
    dw = delta.T @ a_prev
    db = delta.sum(axis=0)
    delta_prev = delta @ w
    return dw, db, delta_prev


def _np_adam_update(p, g, m, v, alpha, beta1, beta2, eps, t):
    m *= beta1
    m += (1.0 - beta1) * g
    v *= beta2
    v += (1.0 - beta2) * (g * g)
    mhat = m / (1.0 - beta1 ** t)
    vhat = v / (1.0 - beta2 ** t)
    p -= alpha * mhat / (np.sqrt(vhat) + eps)


# ── numba implementations ───────────────────────────────────────────────

try:
    from numba import njit

    HAS_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    njit = None
    HAS_NUMBA = False

if HAS_NUMBA:

    @njit(cache=True)
    def _nb_affine_forward(x, w, b):
        # np.dot hits the same BLAS as numpy; the broadcast add is fused here
        y = np.dot(x, w.T)
        m, nout = y.shape
        for i in range(m):
            for o in range(nout):
                y[i, o] += b[o]
        return y

    @njit(cache=True)
    def _nb_activate(z, tag):
        m, n = z.shape
        out = np.empty_like(z)
        if tag == IDENTITY:
            for i in range(m):
                for j in range(n):
                    out[i, j] = z[i, j]
        elif tag == SIGMOID:
            for i in range(m):
                for j in range(n):
                    x = z[i, j]
                    if x >= 0.0:
                        out[i, j] = 1.0 / (1.0 + math.exp(-x))
                    else:
                        ex = math.exp(x)
                        out[i, j] = ex / (1.0 + ex)
        elif tag == TANH:
            for i in range(m):
                for j in range(n):
                    out[i, j] = math.tanh(z[i, j])
        else:
            for i in range(m):
                for j in range(n):
                    x = z[i, j]
                    out[i, j] = x if x > 0.0 else 0.0
        return out

    @njit(cache=True)
    def _nb_activation_backward(delta, z, a, tag):
        m, n = delta.shape
        out = np.empty_like(delta)
        if tag == IDENTITY:
            for i in range(m):
                for j in range(n):
                    out[i, j] = delta[i, j]
        elif tag == SIGMOID:
            for i in range(m):
                for j in range(n):
                    s = a[i, j]
                    out[i, j] = delta[i, j] * (s * (1.0 - s))
        elif tag == TANH:
            for i in range(m):
                for j in range(n):
                    th = a[i, j]
                    out[i, j] = delta[i, j] * (1.0 - th * th)
        else:
            for i in range(m):
                for j in range(n):
                    out[i, j] = delta[i, j] if z[i, j] > 0.0 else 0.0
        return out

    @njit(cache=True)
    def _nb_affine_backward(delta, a_prev, w):
        dw = np.dot(delta.T, a_prev)
        m, nout = delta.shape
        db = np.zeros(nout)
        for i in range(m):
            for o in range(nout):
                db[o] += delta[i, o]
        delta_prev = np.dot(delta, w)
        return dw, db, delta_prev

    @njit(cache=True)
    def _nb_adam_update(p, g, m, v, alpha, beta1, beta2, eps, t):
        c1 = 1.0 - beta1 ** t
        c2 = 1.0 - beta2 ** t
        for i in range(p.shape[0]):
            m[i] = beta1 * m[i] + (1.0 - beta1) * g[i]
            v[i] = beta2 * v[i] + (1.0 - beta2) * (g[i] * g[i])
            mhat = m[i] / c1
            vhat = v[i] / c2
            p[i] -= alpha * mhat / (math.sqrt(vhat) + eps)


def _pick_backend() -> str:
    choice = os.environ.get("DGANIDS_BACKEND", "auto").lower()
    if choice not in ("auto", "numba", "numpy"):
        raise ValueError(f"DGANIDS_BACKEND must be auto|numba|numpy, got {choice!r}")
    if choice == "numba" and not HAS_NUMBA:
        raise ImportError("DGANIDS_BACKEND=numba but numba is not importable")
    if choice == "numpy":
        return "numpy"
    return "numba" if HAS_NUMBA else "numpy"


BACKEND = _pick_backend()

if BACKEND == "numba":
    affine_forward = _nb_affine_forward
    activate = _nb_activate
    activation_backward = _nb_activation_backward
    affine_backward = _nb_affine_backward
    _adam_flat = _nb_adam_update
else:
    affine_forward = _np_affine_forward
    activate = _np_activate
    activation_backward = _np_activation_backward
    affine_backward = _np_affine_backward
    _adam_flat = _np_adam_update


def adam_update(p, g, m, v, alpha, beta1, beta2, eps, t):
    """In-place Adam update on arrays of any (shared) shape."""
    _adam_flat(p.reshape(-1), g.reshape(-1), m.reshape(-1), v.reshape(-1),
               alpha, beta1, beta2, eps, t)


def warmup() -> None:
    """Trigger JIT compilation so later timings exclude compile cost."""
    x = np.ones((2, 3))
    w = np.ones((2, 3))
    b = np.zeros(2)
    y = affine_forward(x, w, b)
    for tag in (IDENTITY, SIGMOID, TANH, RELU):
        a = activate(y, tag)
        activation_backward(a, y, a, tag)
    affine_backward(y, x, w)
    adam_update(np.ones(4), np.ones(4), np.zeros(4), np.zeros(4),
                0.001, 0.9, 0.999, 1e-8, 1)
