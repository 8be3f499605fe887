"""Numeric kernels, numba-jitted when available.

Every hot inner-loop kernel lives here, written once in a form that is
valid both as plain vectorized numpy and under numba's nopython mode.
Backend selection happens at import time: numba is used when importable
unless the environment variable ``CHANNELGAN_NUMBA`` is set to ``0``,
``false`` or ``off``. The un-jitted originals stay reachable through
``PURE`` so the two backends can be compared in-process.

All kernels take and return float64 C-contiguous arrays; numba's np.dot
requires contiguity, hence the ascontiguousarray calls on transposes and
strided slices.
"""

import os

import numpy as np

try:
    from numba import njit as _njit

    _HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    _HAVE_NUMBA = False


def _numba_requested() -> bool:
    return os.environ.get("CHANNELGAN_NUMBA", "1").strip().lower() not in (
        "0",
        "false",
        "off",
    )


NUMBA_ENABLED = _HAVE_NUMBA and _numba_requested()

PURE = {}


def _kernel(fn):
    PURE[fn.__name__] = fn
    if NUMBA_ENABLED:
        return _njit(cache=True)(fn)
    return fn


@_kernel
def affine_forward(x, w, b):
    return np.dot(x, w) + b


@_kernel
def affine_backward(x, w, g):
    """Grads of an affine map: returns (dw, db, dx) for output grad g."""
    dw = np.dot(np.ascontiguousarray(x.T), g)
    db = np.sum(g, axis=0)
    dx = np.dot(g, np.ascontiguousarray(w.T))
    return dw, db, dx


@_kernel
def relu_forward(z):
    return np.maximum(z, 0.0)


@_kernel
def relu_backward(z, g):
    # subgradient at exactly 0 is taken as 0
    return np.where(z > 0.0, g, 0.0)


@_kernel
def sigmoid_forward(z):
    # clip first so both np.where branches stay overflow-free; the clip is
    # inert below |z| = 60 and sigmoid saturates in float64 long before that
    zc = np.minimum(np.maximum(z, -60.0), 60.0)
    return np.where(zc >= 0.0, 1.0 / (1.0 + np.exp(-zc)), np.exp(zc) / (1.0 + np.exp(zc)))


@_kernel
def sigmoid_backward(s, g):
    return g * s * (1.0 - s)


@_kernel
def softplus_forward(z):
    return np.maximum(z, 0.0) + np.log1p(np.exp(-np.abs(z)))


@_kernel
def sampler_forward_kernel(pre, eps):
    """z_j = mu_j + softplus(s_j) * eps_j with (mu_j, s_j) interleaved in pre."""
    mu = np.ascontiguousarray(pre[:, 0::2])
    s = np.ascontiguousarray(pre[:, 1::2])
    sp = np.maximum(s, 0.0) + np.log1p(np.exp(-np.abs(s)))
    return mu + sp * eps


@_kernel
def sampler_backward_kernel(pre, eps, g):
    """Grad w.r.t. pre: pass-through on mu, eps * sigmoid(s) on the scale pre-activation."""
    s = np.ascontiguousarray(pre[:, 1::2])
    sc = np.minimum(np.maximum(s, -60.0), 60.0)
    dsp = np.where(sc >= 0.0, 1.0 / (1.0 + np.exp(-sc)), np.exp(sc) / (1.0 + np.exp(sc)))
    gpre = np.zeros_like(pre)
    gpre[:, 0::2] = g
    gpre[:, 1::2] = g * eps * dsp
    return gpre


@_kernel
def adam_update(p, g, m, v, t, lr, b1, b2, eps):
    """One in-place Adam step with bias correction on a single parameter array."""
    m[:] = b1 * m + (1.0 - b1) * g
    v[:] = b2 * v + (1.0 - b2) * g * g
    p -= lr * (m / (1.0 - b1 ** t)) / (np.sqrt(v / (1.0 - b2 ** t)) + eps)


@_kernel
def clip_inplace(p, c):
    p[:] = np.minimum(np.maximum(p, -c), c)
