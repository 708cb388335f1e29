"""Independent brute-force references used to validate the fast kernels.

Everything here is written as plain nested loops / direct summation, sharing
no code with src/, so agreement between the two is meaningful evidence.
"""

import numpy as np


def conv2d_naive(x, w, b=None, stride=1, pad=0):
    n, c, h, wid = x.shape
    oc, ic, kh, kw = w.shape
    assert c == ic
    xp = np.pad(x, ((0, 0), (0, 0), (pad, pad), (pad, pad)))
    oh = (h + 2 * pad - kh) // stride + 1
    ow = (wid + 2 * pad - kw) // stride + 1
    out = np.zeros((n, oc, oh, ow), dtype=x.dtype)
    for ni in range(n):
        for o in range(oc):
            for t in range(oh):
                for u in range(ow):
                    acc = 0.0
                    for ci in range(c):
                        for dy in range(kh):
                            for dx in range(kw):
                                acc += xp[ni, ci, stride * t + dy, stride * u + dx] * w[o, ci, dy, dx]
                    out[ni, o, t, u] = acc + (b[o] if b is not None else 0.0)
    return out


def tconv2d_naive(x, w, stride=2, pad=1):
    """Scatter-accumulate transposed convolution, weight layout (inC,outC,kh,kw)."""
    n, c, h, wid = x.shape
    ic, oc, kh, kw = w.shape
    assert c == ic
    oh = stride * (h - 1) + kh - 2 * pad
    ow = stride * (wid - 1) + kw - 2 * pad
    out = np.zeros((n, oc, oh, ow), dtype=x.dtype)
    for ni in range(n):
        for ci in range(c):
            for y in range(h):
                for xx in range(wid):
                    v = x[ni, ci, y, xx]
                    for o in range(oc):
                        for a in range(kh):
                            for bb in range(kw):
                                oy = stride * y - pad + a
                                ox = stride * xx - pad + bb
                                if 0 <= oy < oh and 0 <= ox < ow:
                                    out[ni, o, oy, ox] += v * w[ci, o, a, bb]
    return out


def numeric_grad(f, x, h=1e-4):
    """Central finite differences of scalar f with respect to array x."""
    x = x.astype(np.float64)
    g = np.zeros_like(x)
    flat = x.reshape(-1)
    gf = g.reshape(-1)
    for i in range(flat.size):
        keep = flat[i]
        flat[i] = keep + h
        fp = f(x)
        flat[i] = keep - h
        fm = f(x)
        flat[i] = keep
        gf[i] = (fp - fm) / (2 * h)
    return g


def bicubic_weight(t, a=-0.5):
    t = abs(float(t))
    if t <= 1.0:
        return (a + 2) * t**3 - (a + 3) * t**2 + 1
    if t < 2.0:
        return a * t**3 - 5 * a * t**2 + 8 * a * t - 4 * a
    return 0.0


def imresize_naive(img, scale=None, out_shape=None, antialias=True):
    """Direct (non-separable in code) per-pixel evaluation of the classic
    imresize convention: half-pixel phase, Keys a=-0.5 kernel, support widened
    by 1/scale when downscaling with antialiasing, symmetric edge replication,
    weights normalized per output sample, output dims ceil(dim*scale)."""
    img = np.asarray(img, dtype=np.float64)
    h, w = img.shape
    if out_shape is None:
        oh = int(np.ceil(h * scale))
        ow = int(np.ceil(w * scale))
        sy = sx = scale
    else:
        oh, ow = out_shape
        sy = oh / h
        sx = ow / w

    def axis_weights(n_in, n_out, s):
        rows = []
        for i in range(n_out):
            u = (i + 1) / s + 0.5 * (1 - 1 / s)  # 1-based center
            if s < 1 and antialias:
                width = 4.0 / s
                kern = lambda t: s * bicubic_weight(s * t)
            else:
                width = 4.0
                kern = bicubic_weight
            p = int(np.ceil(width)) + 2
            left = int(np.floor(u - width / 2))
            idx = np.arange(left, left + p)
            wts = np.array([kern(u - j) for j in idx])
            wts /= wts.sum()
            aux = np.concatenate([np.arange(1, n_in + 1), np.arange(n_in, 0, -1)])
            idx = aux[np.mod(idx - 1, 2 * n_in)] - 1  # to 0-based valid indices
            rows.append((idx, wts))
        return rows

    rows_y = axis_weights(h, oh, sy)
    rows_x = axis_weights(w, ow, sx)
    out = np.zeros((oh, ow))
    for i in range(oh):
        iy, wy = rows_y[i]
        for j in range(ow):
            ix, wx = rows_x[j]
            acc = 0.0
            for yi, vy in zip(iy, wy):
                for xi, vx in zip(ix, wx):
                    acc += vy * vx * img[yi, xi]
            out[i, j] = acc
    return out
