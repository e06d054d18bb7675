"""Layer primitives with explicit backward passes.

Each forward returns (output, cache); the matching backward consumes the
cache and the upstream gradient. Convolution is implemented as im2col plus
one matrix multiply so the heavy lifting stays inside BLAS.
"""

from __future__ import annotations

import numpy as np

from ..errors import ShapeMismatch


def _im2col(xp: np.ndarray, kh: int, kw: int, out_h: int, out_w: int) -> np.ndarray:
    """Gather kh*kw shifted views of the padded input.

    Returns (N, out_h, out_w, kh*kw*C) with patch samples ordered by
    (kernel row, kernel col, channel), matching kernel.reshape(-1, C_out).
    """
    n, _, _, c = xp.shape
    cols = np.empty((n, out_h, out_w, kh * kw * c), dtype=xp.dtype)
    k = 0
    for i in range(kh):
        for j in range(kw):
            cols[..., k * c : (k + 1) * c] = xp[:, i : i + out_h, j : j + out_w, :]
            k += 1
    return cols


def conv2d_forward(x: np.ndarray, kernel: np.ndarray, bias: np.ndarray):
    """3x3 (or any odd-size) convolution, stride 1, same padding.

    x: (N, H, W, C_in); kernel: (kh, kw, C_in, C_out); bias: (C_out,).
    """
    if x.ndim != 4 or kernel.ndim != 4 or x.shape[3] != kernel.shape[2]:
        raise ShapeMismatch(
            f"conv input {getattr(x, 'shape', None)} does not match kernel {kernel.shape}"
        )
    n, h, w, _ = x.shape
    kh, kw, _, c_out = kernel.shape
    ph, pw = kh // 2, kw // 2
    xp = np.pad(x, ((0, 0), (ph, ph), (pw, pw), (0, 0)))
    cols = _im2col(xp, kh, kw, h, w)
    y = cols.reshape(n * h * w, -1) @ kernel.reshape(-1, c_out)
    y = y.reshape(n, h, w, c_out) + bias
    return y, (cols, x.shape, kernel.shape)


def conv2d_backward(dy: np.ndarray, cache, kernel: np.ndarray):
    """Returns (dx, dkernel, dbias)."""
    cols, x_shape, k_shape = cache
    if kernel.shape != k_shape:
        raise ShapeMismatch(f"kernel shape {kernel.shape} does not match cached {k_shape}")
    n, h, w, c_in = x_shape
    kh, kw, _, c_out = k_shape
    dy_flat = dy.reshape(n * h * w, c_out)
    dkernel = (cols.reshape(n * h * w, -1).T @ dy_flat).reshape(k_shape)
    dbias = dy_flat.sum(axis=0)
    dcols = (dy_flat @ kernel.reshape(-1, c_out).T).reshape(n, h, w, kh * kw * c_in)
    ph, pw = kh // 2, kw // 2
    dxp = np.zeros((n, h + 2 * ph, w + 2 * pw, c_in), dtype=dy.dtype)
    k = 0
    for i in range(kh):
        for j in range(kw):
            dxp[:, i : i + h, j : j + w, :] += dcols[..., k * c_in : (k + 1) * c_in]
            k += 1
    dx = dxp[:, ph : ph + h, pw : pw + w, :]
    return dx, dkernel, dbias


def relu_forward(x: np.ndarray):
    return np.maximum(x, 0), x


def relu_backward(dy: np.ndarray, cache) -> np.ndarray:
    return dy * (cache > 0)


def maxpool2_forward(x: np.ndarray):
    """2x2 max pooling, stride 2. Odd trailing rows/columns are dropped.

    Ties inside a window route the gradient to the first maximum (row-major
    window order), which keeps backward deterministic.
    """
    n, h, w, c = x.shape
    h2, w2 = h // 2, w // 2
    xr = x[:, : h2 * 2, : w2 * 2, :].reshape(n, h2, 2, w2, 2, c)
    windows = xr.transpose(0, 1, 3, 2, 4, 5).reshape(n, h2, w2, 4, c)
    arg = windows.argmax(axis=3)
    y = np.take_along_axis(windows, arg[:, :, :, None, :], axis=3)[:, :, :, 0, :]
    return y, (x.shape, arg)


def maxpool2_backward(dy: np.ndarray, cache) -> np.ndarray:
    x_shape, arg = cache
    n, h, w, c = x_shape
    h2, w2 = h // 2, w // 2
    dwin = np.zeros((n, h2, w2, 4, c), dtype=dy.dtype)
    np.put_along_axis(dwin, arg[:, :, :, None, :], dy[:, :, :, None, :], axis=3)
    dx = np.zeros(x_shape, dtype=dy.dtype)
    dx[:, : h2 * 2, : w2 * 2, :] = (
        dwin.reshape(n, h2, w2, 2, 2, c).transpose(0, 1, 3, 2, 4, 5).reshape(n, h2 * 2, w2 * 2, c)
    )
    return dx


def gap_forward(x: np.ndarray):
    """Global average pooling: (N, H, W, C) -> (N, C)."""
    return x.mean(axis=(1, 2)), x.shape


def gap_backward(dy: np.ndarray, cache) -> np.ndarray:
    n, h, w, c = cache
    return np.broadcast_to(dy[:, None, None, :] / (h * w), (n, h, w, c)).astype(dy.dtype)


def dense_forward(x: np.ndarray, weight: np.ndarray, bias: np.ndarray):
    if x.ndim != 2 or x.shape[1] != weight.shape[0]:
        raise ShapeMismatch(
            f"dense input {getattr(x, 'shape', None)} does not match weight {weight.shape}"
        )
    return x @ weight + bias, x


def dense_backward(dy: np.ndarray, cache, weight: np.ndarray):
    x = cache
    return dy @ weight.T, x.T @ dy, dy.sum(axis=0)


def softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)
