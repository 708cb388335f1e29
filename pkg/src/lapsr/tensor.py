"""Dense NCHW tensor kernels.

Tensors are plain C-contiguous numpy arrays with layout (batch N, channels C,
height H, width W), float32 for training and inference.  Every kernel also
accepts float64 inputs and then computes in float64; that mode exists for
gradient checking only.

Convolution is cross-correlation (no kernel flip).  The kernels are lowered
per sample to an im2col buffer followed by a single BLAS matmul; the buffer
is a few MB and is reused across the batch, so peak memory stays near one
padded copy of the input.  Loop order and BLAS calls are fixed, so repeated
runs on the same thread count are bit-identical.
"""

from dataclasses import dataclass

import numpy as np


class ShapeError(ValueError):
    """Raised when operand shapes disagree with the operation contract."""


@dataclass(frozen=True)
class ConvSpec:
    """Geometry of a (transposed) convolution.

    The model only uses two configurations: 3x3/stride 1/pad 1 convolutions
    (size preserving) and 4x4/stride 2/pad 1 transposed convolutions
    (exact 2x upsampling).
    """

    kernel_h: int
    kernel_w: int
    stride: int
    pad: int
    in_channels: int
    out_channels: int

    def __post_init__(self):
        if self.kernel_h <= 0 or self.kernel_w <= 0:
            raise ShapeError(f"kernel dims must be positive, got {self.kernel_h}x{self.kernel_w}")
        if self.stride <= 0:
            raise ShapeError(f"stride must be positive, got {self.stride}")
        if self.pad < 0:
            raise ShapeError(f"pad must be non-negative, got {self.pad}")
        if self.in_channels <= 0 or self.out_channels <= 0:
            raise ShapeError(
                f"channel counts must be positive, got in={self.in_channels} out={self.out_channels}"
            )


def _as_nchw(x, name):
    x = np.asarray(x)
    if x.ndim != 4:
        raise ShapeError(f"{name} must be rank 4 (N,C,H,W), got rank {x.ndim}")
    return np.ascontiguousarray(x)


def _check_conv_operands(x, w, spec, weight_layout):
    c = x.shape[1]
    if weight_layout == "oikk":
        wo, wi, kh, kw = w.shape
    else:  # "iokk" layout of transposed-convolution weights
        wi, wo, kh, kw = w.shape
    if c != spec.in_channels:
        raise ShapeError(f"input channels={c} != spec.in_channels={spec.in_channels}")
    if wi != spec.in_channels:
        raise ShapeError(f"weight in_channels={wi} != spec.in_channels={spec.in_channels}")
    if wo != spec.out_channels:
        raise ShapeError(f"weight out_channels={wo} != spec.out_channels={spec.out_channels}")
    if (kh, kw) != (spec.kernel_h, spec.kernel_w):
        raise ShapeError(f"weight kernel={kh}x{kw} != spec kernel={spec.kernel_h}x{spec.kernel_w}")
    if x.dtype != w.dtype:
        raise ShapeError(f"input dtype {x.dtype} != weight dtype {w.dtype}")


def _pad_hw(x, pad):
    if pad == 0:
        return x
    return np.pad(x, ((0, 0), (0, 0), (pad, pad), (pad, pad)))


def _out_dim(size, kernel, stride, pad):
    return (size + 2 * pad - kernel) // stride + 1


def _fill_cols(cols, xpn, kh, kw, s, oh, ow):
    """cols (C, kh*kw, oh, ow) <- sliding windows of one padded sample (C,Hp,Wp)."""
    t = 0
    for dy in range(kh):
        for dx in range(kw):
            cols[:, t] = xpn[:, dy : dy + s * (oh - 1) + 1 : s, dx : dx + s * (ow - 1) + 1 : s]
            t += 1


def conv2d_forward(x, w, b, spec):
    """Cross-correlate x (N,C,H,W) with w (outC,inC,kh,kw) plus optional bias.

    Output spatial dims follow (H + 2*pad - kh)//stride + 1.
    """
    x = _as_nchw(x, "input")
    w = np.ascontiguousarray(w)
    if w.ndim != 4:
        raise ShapeError(f"weight must be rank 4, got rank {w.ndim}")
    _check_conv_operands(x, w, spec, "oikk")
    n, c, h, wid = x.shape
    kh, kw, s, p = spec.kernel_h, spec.kernel_w, spec.stride, spec.pad
    oh = _out_dim(h, kh, s, p)
    ow = _out_dim(wid, kw, s, p)
    if oh <= 0 or ow <= 0:
        raise ShapeError(f"non-positive output dims {oh}x{ow} for input {h}x{wid}")
    oc = spec.out_channels
    if b is not None:
        b = np.asarray(b)
        if b.shape != (oc,):
            raise ShapeError(f"bias shape {b.shape} != ({oc},)")
        bcol = b.reshape(oc, 1).astype(x.dtype)

    xp = _pad_hw(x, p)
    w2 = w.reshape(oc, c * kh * kw)
    out = np.empty((n, oc, oh, ow), dtype=x.dtype)
    cols = np.empty((c, kh * kw, oh, ow), dtype=x.dtype)
    cols2 = cols.reshape(c * kh * kw, oh * ow)
    for ni in range(n):
        _fill_cols(cols, xp[ni], kh, kw, s, oh, ow)
        o2 = out[ni].reshape(oc, oh * ow)
        np.matmul(w2, cols2, out=o2)
        if b is not None:
            o2 += bcol
    return out


def conv2d_backward(grad_out, x, w, spec, with_bias=True):
    """Adjoints of conv2d_forward: (grad_input, grad_weight, grad_bias)."""
    x = _as_nchw(x, "input")
    w = np.ascontiguousarray(w)
    grad_out = _as_nchw(grad_out, "grad_out")
    _check_conv_operands(x, w, spec, "oikk")
    n, c, h, wid = x.shape
    kh, kw, s, p = spec.kernel_h, spec.kernel_w, spec.stride, spec.pad
    oh = _out_dim(h, kh, s, p)
    ow = _out_dim(wid, kw, s, p)
    oc = spec.out_channels
    if grad_out.shape != (n, oc, oh, ow):
        raise ShapeError(f"grad_out shape {grad_out.shape} != expected {(n, oc, oh, ow)}")

    xp = _pad_hw(x, p)
    gxp = np.zeros_like(xp)
    w2 = w.reshape(oc, c * kh * kw)
    gw2 = np.zeros((oc, c * kh * kw), dtype=x.dtype)
    cols = np.empty((c, kh * kw, oh, ow), dtype=x.dtype)
    cols2 = cols.reshape(c * kh * kw, oh * ow)
    dcols = np.empty_like(cols)
    dcols2 = dcols.reshape(c * kh * kw, oh * ow)
    for ni in range(n):
        g2 = grad_out[ni].reshape(oc, oh * ow)
        _fill_cols(cols, xp[ni], kh, kw, s, oh, ow)
        gw2 += g2 @ cols2.T
        np.matmul(w2.T, g2, out=dcols2)
        gxpn = gxp[ni]
        t = 0
        for dy in range(kh):
            for dx in range(kw):
                gxpn[:, dy : dy + s * (oh - 1) + 1 : s, dx : dx + s * (ow - 1) + 1 : s] += dcols[:, t]
                t += 1
    gx = gxp[:, :, p : p + h, p : p + wid] if p else gxp
    gw = gw2.reshape(w.shape)
    gb = grad_out.sum(axis=(0, 2, 3)) if with_bias else None
    return np.ascontiguousarray(gx), gw, gb


def _check_tconv_spec(spec):
    if (spec.kernel_h, spec.kernel_w, spec.stride, spec.pad) != (4, 4, 2, 1):
        raise ShapeError(
            "transposed convolution supports only kernel 4x4, stride 2, pad 1; "
            f"got kernel {spec.kernel_h}x{spec.kernel_w} stride {spec.stride} pad {spec.pad}"
        )


def _tconv_phase_weights(w, dtype):
    """Per output parity (py,px), the (outC, inC*4) matrix of kernel taps.

    With stride 2, pad 1 and a 4x4 kernel, output pixel (2t+py, 2u+px) only
    sees the four input pixels (t-1+py+dy, u-1+px+dx), dy,dx in {0,1}, through
    kernel entries ((3-py)-2*dy, (3-px)-2*dx).
    """
    phase = {}
    for py in (0, 1):
        for px in (0, 1):
            taps = []
            for dy in (0, 1):
                for dx in (0, 1):
                    taps.append(w[:, :, (3 - py) - 2 * dy, (3 - px) - 2 * dx])  # (inC,outC)
            stacked = np.stack(taps, axis=2)  # (inC, outC, 4)
            phase[(py, px)] = np.ascontiguousarray(
                stacked.transpose(1, 0, 2).reshape(w.shape[1], w.shape[0] * 4)
            ).astype(dtype, copy=False)
    return phase


def tconv2d_forward(x, w, spec):
    """Transposed convolution, weight layout (inC,outC,4,4), exact 2x upsampling.

    Computed per output parity: each of the four (row, col) parities of the
    output is a stride-1 2x2 cross-correlation of the padded input with a
    parity slice of the 4x4 kernel, so no zero-stuffed intermediate is built.
    """
    x = _as_nchw(x, "input")
    w = np.ascontiguousarray(w)
    if w.ndim != 4:
        raise ShapeError(f"weight must be rank 4, got rank {w.ndim}")
    _check_tconv_spec(spec)
    _check_conv_operands(x, w, spec, "iokk")
    n, c, h, wid = x.shape
    oc = spec.out_channels
    xp = _pad_hw(x, 1)
    phase_w = _tconv_phase_weights(w, x.dtype)
    out = np.empty((n, oc, 2 * h, 2 * wid), dtype=x.dtype)
    cols = np.empty((c, 4, h, wid), dtype=x.dtype)
    cols2 = cols.reshape(c * 4, h * wid)
    for ni in range(n):
        xpn = xp[ni]
        for (py, px), pw in phase_w.items():
            t = 0
            for dy in (0, 1):
                for dx in (0, 1):
                    cols[:, t] = xpn[:, py + dy : py + dy + h, px + dx : px + dx + wid]
                    t += 1
            out[ni, :, py::2, px::2] = (pw @ cols2).reshape(oc, h, wid)
    return out


def tconv2d_backward(grad_out, x, w, spec):
    """Adjoints of tconv2d_forward: (grad_input, grad_weight).

    grad_input is the stride-2 forward convolution of grad_out with the same
    kernel (the adjoint pair of the upsampling scatter).
    """
    x = _as_nchw(x, "input")
    w = np.ascontiguousarray(w)
    grad_out = _as_nchw(grad_out, "grad_out")
    _check_tconv_spec(spec)
    _check_conv_operands(x, w, spec, "iokk")
    n, c, h, wid = x.shape
    oc = spec.out_channels
    if grad_out.shape != (n, oc, 2 * h, 2 * wid):
        raise ShapeError(f"grad_out shape {grad_out.shape} != expected {(n, oc, 2 * h, 2 * wid)}")

    conv_spec = ConvSpec(4, 4, 2, 1, in_channels=oc, out_channels=c)
    gx = conv2d_forward(grad_out, w, None, conv_spec)

    # grad_weight: gw[ci,co,a,b] = sum_n,y,x x[n,ci,y,x] * gpad[n,co,2y+a,2x+b]
    gop = _pad_hw(grad_out, 1)
    gw2 = np.zeros((c, oc * 16), dtype=x.dtype)
    gcols = np.empty((oc, 16, h, wid), dtype=x.dtype)
    gcols2 = gcols.reshape(oc * 16, h * wid)
    for ni in range(n):
        gopn = gop[ni]
        t = 0
        for a in range(4):
            for bb in range(4):
                gcols[:, t] = gopn[:, a : a + 2 * h : 2, bb : bb + 2 * wid : 2]
                t += 1
        x2 = x[ni].reshape(c, h * wid)
        gw2 += x2 @ gcols2.T
    return gx, gw2.reshape(w.shape)


def leaky_relu(x, slope=0.2):
    """Elementwise max(x, slope*x); x=0 stays 0 (positive branch)."""
    if not 0.0 < slope < 1.0:
        raise ValueError(f"slope must be in (0,1), got {slope}")
    x = np.asarray(x)
    return np.where(x >= 0, x, x * x.dtype.type(slope))


def leaky_relu_backward(grad_out, x, slope=0.2):
    """Gradient of leaky_relu; the kink at 0 uses the positive branch (slope 1)."""
    x = np.asarray(x)
    grad_out = np.asarray(grad_out)
    if grad_out.shape != x.shape:
        raise ShapeError(f"grad_out shape {grad_out.shape} != input shape {x.shape}")
    return np.where(x >= 0, grad_out, grad_out * x.dtype.type(slope))


def elementwise_add(a, b):
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape:
        raise ShapeError(f"operand shapes differ: {a.shape} vs {b.shape}")
    return a + b


def bilinear_kernel(dtype=np.float32):
    """4x4 separable kernel performing exact bilinear 2x upsampling under
    tconv2d_forward (per-pixel tap weights sum to 1 away from the border)."""
    v = np.array([0.25, 0.75, 0.75, 0.25], dtype=dtype)
    return np.outer(v, v)
