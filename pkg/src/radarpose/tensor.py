"""Dense real tensors with reverse-mode automatic differentiation.

Everything the pose network needs runs through the ops in this module:
elementwise arithmetic, matmul, strided N-d convolution (via im2col GEMMs),
one-axis max pooling, batch normalization, and the usual activations.
Gradients are computed by recording a tape of operations and replaying it
in reverse topological order.
"""

from __future__ import annotations

import math
from typing import Callable, Iterable, Optional, Sequence, Union

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy.special import expit

__all__ = [
    "Tensor",
    "GradTape",
    "no_grad",
    "set_debug_checks",
    "matmul",
    "relu",
    "prelu",
    "sigmoid",
    "softmax",
    "log",
    "clip",
    "concat",
    "pad_zeros",
    "upsample_nearest2d",
    "conv2d",
    "conv3d",
    "maxpool",
    "batchnorm",
]

_DEBUG_CHECKS = False
_GRAD_ENABLED = True


def set_debug_checks(enabled: bool) -> None:
    """Enable assertions that every op output is finite (slow; for debugging)."""
    global _DEBUG_CHECKS
    _DEBUG_CHECKS = bool(enabled)


class no_grad:
    """Context manager that disables tape recording inside its block."""

    def __enter__(self):
        global _GRAD_ENABLED
        self._prev = _GRAD_ENABLED
        _GRAD_ENABLED = False
        return self

    def __exit__(self, *exc):
        global _GRAD_ENABLED
        _GRAD_ENABLED = self._prev
        return False


ArrayLike = Union[np.ndarray, float, int, Sequence]


class Tensor:
    """A dense N-dimensional real array with optional gradient tracking.

    ``data`` is always a float ndarray (f32 or f64). ``grad`` is lazily
    allocated with the same shape and accumulated across backward passes
    until explicitly cleared.
    """

    __slots__ = ("data", "requires_grad", "grad", "_parents", "_backward", "op")

    def __init__(
        self,
        data: ArrayLike,
        requires_grad: bool = False,
        dtype: Optional[np.dtype] = None,
        _parents: tuple = (),
        _backward: Optional[Callable[[np.ndarray], None]] = None,
        op: str = "leaf",
    ):
        arr = np.asarray(data, dtype=dtype)
        if not np.issubdtype(arr.dtype, np.floating):
            arr = arr.astype(np.float64)
        self.data = arr
        self.requires_grad = bool(requires_grad)
        self.grad: Optional[np.ndarray] = None
        self._parents = _parents
        self._backward = _backward
        self.op = op
        if _DEBUG_CHECKS and not np.all(np.isfinite(arr)):
            raise FloatingPointError(f"non-finite values in output of op '{op}'")

    # ------------------------------------------------------------------
    # basic introspection
    @property
    def shape(self) -> tuple:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def size(self) -> int:
        return self.data.size

    @property
    def dtype(self):
        return self.data.dtype

    def __repr__(self):
        return f"Tensor(shape={self.shape}, dtype={self.data.dtype}, requires_grad={self.requires_grad})"

    def item(self) -> float:
        return float(self.data)

    def detach(self) -> "Tensor":
        return Tensor(self.data, requires_grad=False)

    def zero_grad(self) -> None:
        self.grad = None

    def accumulate_grad(self, g: np.ndarray) -> None:
        if self.grad is None:
            # copy: backward closures may hand the same array to two parents
            self.grad = np.array(g, dtype=self.data.dtype)
        else:
            self.grad += g

    # ------------------------------------------------------------------
    # autodiff driver
    def backward(self, grad: Optional[np.ndarray] = None) -> "GradTape":
        """Run reverse-mode differentiation from this tensor.

        Gradients accumulate into ``.grad`` of every reachable tensor with
        ``requires_grad=True``. Returns the tape that was replayed.
        """
        if grad is None:
            if self.size != 1:
                raise ValueError("backward() without an explicit gradient needs a scalar output")
            grad = np.ones_like(self.data)
        tape = GradTape.trace(self)
        self.accumulate_grad(np.asarray(grad, dtype=self.data.dtype))
        for node in reversed(tape.nodes):
            if node._backward is not None and node.grad is not None:
                node._backward(node.grad)
        return tape

    # ------------------------------------------------------------------
    # operator sugar
    def _coerce(self, other) -> "Tensor":
        if isinstance(other, Tensor):
            return other
        return Tensor(np.asarray(other, dtype=self.data.dtype))

    def __add__(self, other):
        return add(self, self._coerce(other))

    def __radd__(self, other):
        return add(self._coerce(other), self)

    def __sub__(self, other):
        return sub(self, self._coerce(other))

    def __rsub__(self, other):
        return sub(self._coerce(other), self)

    def __mul__(self, other):
        return mul(self, self._coerce(other))

    def __rmul__(self, other):
        return mul(self._coerce(other), self)

    def __truediv__(self, other):
        return div(self, self._coerce(other))

    def __rtruediv__(self, other):
        return div(self._coerce(other), self)

    def __neg__(self):
        return mul(self, Tensor(np.asarray(-1.0, dtype=self.data.dtype)))

    def __matmul__(self, other):
        return matmul(self, other)

    def __getitem__(self, idx):
        return take_slice(self, idx)

    def reshape(self, *shape):
        return reshape(self, shape if len(shape) > 1 or isinstance(shape[0], int) else shape[0])

    def transpose(self, *axes):
        return transpose(self, axes)

    def sum(self, axis=None, keepdims=False):
        return tsum(self, axis=axis, keepdims=keepdims)

    def mean(self, axis=None, keepdims=False):
        return tmean(self, axis=axis, keepdims=keepdims)


class GradTape:
    """Topologically ordered record of the ops reaching one output tensor.

    ``nodes`` lists every tensor in the graph with all inputs preceding the
    ops that consume them; the backward pass walks the list once, in
    reverse.
    """

    def __init__(self, nodes: list):
        self.nodes = nodes

    @classmethod
    def trace(cls, root: Tensor) -> "GradTape":
        nodes: list = []
        visited: set = set()
        stack = [(root, False)]
        while stack:
            node, expanded = stack.pop()
            if expanded:
                nodes.append(node)
                continue
            if id(node) in visited:
                continue
            visited.add(id(node))
            stack.append((node, True))
            for p in node._parents:
                if id(p) not in visited:
                    stack.append((p, False))
        return cls(nodes)


def _make(data: np.ndarray, parents: tuple, backward: Optional[Callable], op: str) -> Tensor:
    req = _GRAD_ENABLED and any(p.requires_grad for p in parents)
    if not req:
        return Tensor(data, requires_grad=False, op=op)
    return Tensor(data, requires_grad=True, _parents=parents, _backward=backward, op=op)


def _unbroadcast(g: np.ndarray, shape: tuple) -> np.ndarray:
    """Sum gradient over axes that were broadcast in the forward pass."""
    while g.ndim > len(shape):
        g = g.sum(axis=0)
    for ax, n in enumerate(shape):
        if n == 1 and g.shape[ax] != 1:
            g = g.sum(axis=ax, keepdims=True)
    return g


# ----------------------------------------------------------------------
# elementwise arithmetic


def add(a: Tensor, b: Tensor) -> Tensor:
    out_data = a.data + b.data

    def backward(g):
        if a.requires_grad:
            a.accumulate_grad(_unbroadcast(g, a.shape))
        if b.requires_grad:
            b.accumulate_grad(_unbroadcast(g, b.shape))

    return _make(out_data, (a, b), backward, "add")


def sub(a: Tensor, b: Tensor) -> Tensor:
    out_data = a.data - b.data

    def backward(g):
        if a.requires_grad:
            a.accumulate_grad(_unbroadcast(g, a.shape))
        if b.requires_grad:
            b.accumulate_grad(_unbroadcast(-g, b.shape))

    return _make(out_data, (a, b), backward, "sub")


def mul(a: Tensor, b: Tensor) -> Tensor:
    out_data = a.data * b.data

    def backward(g):
        if a.requires_grad:
            a.accumulate_grad(_unbroadcast(g * b.data, a.shape))
        if b.requires_grad:
            b.accumulate_grad(_unbroadcast(g * a.data, b.shape))

    return _make(out_data, (a, b), backward, "mul")


def div(a: Tensor, b: Tensor) -> Tensor:
    out_data = a.data / b.data

    def backward(g):
        if a.requires_grad:
            a.accumulate_grad(_unbroadcast(g / b.data, a.shape))
        if b.requires_grad:
            b.accumulate_grad(_unbroadcast(-g * a.data / (b.data * b.data), b.shape))

    return _make(out_data, (a, b), backward, "div")


def log(x: Tensor) -> Tensor:
    out_data = np.log(x.data)

    def backward(g):
        if x.requires_grad:
            x.accumulate_grad(g / x.data)

    return _make(out_data, (x,), backward, "log")


def clip(x: Tensor, lo: float, hi: float) -> Tensor:
    """Clamp values to [lo, hi]; gradient is zero where the clamp is active."""
    out_data = np.clip(x.data, lo, hi)
    inside = (x.data >= lo) & (x.data <= hi)

    def backward(g):
        if x.requires_grad:
            x.accumulate_grad(g * inside)

    return _make(out_data, (x,), backward, "clip")


# ----------------------------------------------------------------------
# structural ops


def reshape(x: Tensor, shape) -> Tensor:
    shape = tuple(shape) if isinstance(shape, (tuple, list)) else (shape,)
    out_data = x.data.reshape(shape)

    def backward(g):
        if x.requires_grad:
            x.accumulate_grad(g.reshape(x.shape))

    return _make(out_data, (x,), backward, "reshape")


def transpose(x: Tensor, axes) -> Tensor:
    axes = tuple(axes)
    inv = tuple(np.argsort(axes))
    out_data = np.ascontiguousarray(x.data.transpose(axes))

    def backward(g):
        if x.requires_grad:
            x.accumulate_grad(g.transpose(inv))

    return _make(out_data, (x,), backward, "transpose")


def take_slice(x: Tensor, idx) -> Tensor:
    out_data = x.data[idx]

    def backward(g):
        if x.requires_grad:
            full = np.zeros_like(x.data)
            np.add.at(full, idx, g)
            x.accumulate_grad(full)

    return _make(np.ascontiguousarray(out_data), (x,), backward, "slice")


def concat(tensors: Sequence[Tensor], axis: int = 0) -> Tensor:
    out_data = np.concatenate([t.data for t in tensors], axis=axis)
    sizes = [t.shape[axis] for t in tensors]
    offsets = np.cumsum([0] + sizes)

    def backward(g):
        for t, lo, hi in zip(tensors, offsets[:-1], offsets[1:]):
            if t.requires_grad:
                sl = [slice(None)] * g.ndim
                sl[axis] = slice(lo, hi)
                t.accumulate_grad(g[tuple(sl)])

    return _make(out_data, tuple(tensors), backward, "concat")


def pad_zeros(x: Tensor, pads: Sequence[tuple]) -> Tensor:
    """Zero-pad with per-axis (before, after) amounts."""
    pads = tuple((int(lo), int(hi)) for lo, hi in pads)
    out_data = np.pad(x.data, pads)

    def backward(g):
        if x.requires_grad:
            sl = tuple(slice(lo, g.shape[i] - hi if hi else None) for i, (lo, hi) in enumerate(pads))
            x.accumulate_grad(g[sl])

    return _make(out_data, (x,), backward, "pad")


def tsum(x: Tensor, axis=None, keepdims=False) -> Tensor:
    out_data = x.data.sum(axis=axis, keepdims=keepdims)

    def backward(g):
        if not x.requires_grad:
            return
        if axis is None:
            x.accumulate_grad(np.broadcast_to(g, x.shape).copy())
            return
        axes = (axis,) if isinstance(axis, int) else tuple(axis)
        if not keepdims:
            for ax in sorted(a % x.ndim for a in axes):
                g = np.expand_dims(g, ax)
        x.accumulate_grad(np.broadcast_to(g, x.shape).copy())

    return _make(out_data, (x,), backward, "sum")


def tmean(x: Tensor, axis=None, keepdims=False) -> Tensor:
    if axis is None:
        n = x.size
    else:
        axes = (axis,) if isinstance(axis, int) else tuple(axis)
        n = 1
        for ax in axes:
            n *= x.shape[ax % x.ndim]
    s = tsum(x, axis=axis, keepdims=keepdims)
    return mul(s, Tensor(np.asarray(1.0 / n, dtype=x.data.dtype)))


def upsample_nearest2d(x: Tensor, scale: int = 2) -> Tensor:
    """Nearest-neighbour upsampling of the two trailing axes."""
    s = int(scale)
    out_data = x.data.repeat(s, axis=-2).repeat(s, axis=-1)

    def backward(g):
        if not x.requires_grad:
            return
        lead = g.shape[:-2]
        h, w = x.shape[-2], x.shape[-1]
        gr = g.reshape(lead + (h, s, w, s)).sum(axis=(-3, -1))
        x.accumulate_grad(gr)

    return _make(out_data, (x,), backward, "upsample2d")


# ----------------------------------------------------------------------
# matmul


def matmul(a: Tensor, b: Tensor) -> Tensor:
    if a.ndim < 2 or b.ndim < 2:
        raise ValueError("matmul expects tensors of rank >= 2")
    if a.shape[-1] != b.shape[-2]:
        raise ValueError(
            f"matmul: inner dimensions disagree ({a.shape[-1]} vs {b.shape[-2]}) "
            f"for shapes {a.shape} x {b.shape}"
        )
    out_data = a.data @ b.data

    def backward(g):
        if a.requires_grad:
            a.accumulate_grad(_unbroadcast(g @ np.swapaxes(b.data, -1, -2), a.shape))
        if b.requires_grad:
            b.accumulate_grad(_unbroadcast(np.swapaxes(a.data, -1, -2) @ g, b.shape))

    return _make(out_data, (a, b), backward, "matmul")


# ----------------------------------------------------------------------
# activations


def relu(x: Tensor) -> Tensor:
    mask = x.data > 0
    out_data = np.where(mask, x.data, 0.0).astype(x.data.dtype, copy=False)

    def backward(g):
        if x.requires_grad:
            x.accumulate_grad(g * mask)

    return _make(out_data, (x,), backward, "relu")


def prelu(x: Tensor, alpha: Tensor) -> Tensor:
    """PReLU with a learnable scalar slope for the negative part."""
    neg = np.minimum(x.data, 0.0)
    out_data = np.maximum(x.data, 0.0) + alpha.data * neg

    def backward(g):
        if x.requires_grad:
            x.accumulate_grad(g * np.where(x.data > 0, 1.0, alpha.data).astype(x.data.dtype))
        if alpha.requires_grad:
            alpha.accumulate_grad(np.asarray((g * neg).sum(), dtype=alpha.data.dtype).reshape(alpha.shape))

    return _make(out_data, (x, alpha), backward, "prelu")


def sigmoid(x: Tensor) -> Tensor:
    out_data = expit(x.data)

    def backward(g):
        if x.requires_grad:
            x.accumulate_grad(g * out_data * (1.0 - out_data))

    return _make(out_data, (x,), backward, "sigmoid")


def softmax(x: Tensor, axis: int = -1) -> Tensor:
    shifted = x.data - x.data.max(axis=axis, keepdims=True)
    # floor far-below-max entries: their weight is ~1e-35 anyway and f32
    # subnormals in exp() are an order of magnitude slower
    np.maximum(shifted, -80.0, out=shifted)
    e = np.exp(shifted)
    out_data = e / e.sum(axis=axis, keepdims=True)

    def backward(g):
        if x.requires_grad:
            dot = (g * out_data).sum(axis=axis, keepdims=True)
            x.accumulate_grad(out_data * (g - dot))

    return _make(out_data, (x,), backward, "softmax")


# ----------------------------------------------------------------------
# convolution


def _norm_per_axis(val, n_axes, name):
    """Normalize stride/padding arguments to per-axis tuples."""
    if isinstance(val, int):
        return ((val,) * n_axes) if name == "stride" else (((val, val),) * n_axes)
    val = tuple(val)
    if len(val) != n_axes:
        raise ValueError(f"{name} must have {n_axes} entries, got {len(val)}")
    if name == "stride":
        return tuple(int(v) for v in val)
    out = []
    for v in val:
        if isinstance(v, int):
            out.append((v, v))
        else:
            lo, hi = v
            out.append((int(lo), int(hi)))
    return tuple(out)


def _im2col(x: np.ndarray, ksize, stride, pad):
    """Patches of a batched (B, C, *S) array laid out for one GEMM.

    The gather runs channels-last so each copied stencil element is a
    contiguous C-sized block. Returns (cols, out_spatial) with cols of
    shape (B*prod(out_spatial), prod(ksize)*C).
    """
    n_sp = len(ksize)
    xcl = np.ascontiguousarray(np.moveaxis(x, 1, -1))  # (B, *S, C)
    xp = np.pad(xcl, ((0, 0),) + tuple(pad) + ((0, 0),))
    for ax, k in enumerate(ksize):
        if xp.shape[1 + ax] < k:
            raise ValueError(
                f"conv: kernel size {k} exceeds padded input extent {xp.shape[1 + ax]} "
                f"on spatial axis {ax}"
            )
    win = sliding_window_view(xp, ksize, axis=tuple(range(1, 1 + n_sp)))
    win = win[(slice(None),) + tuple(slice(None, None, s) for s in stride)]
    out_spatial = win.shape[1 : 1 + n_sp]
    # (B, *So, C, *K) -> (B, *So, *K, C)
    perm = tuple(range(0, 1 + n_sp)) + tuple(range(2 + n_sp, 2 + 2 * n_sp)) + (1 + n_sp,)
    cols = np.ascontiguousarray(win.transpose(perm)).reshape(x.shape[0] * int(np.prod(out_spatial)), -1)
    return cols, out_spatial


def _weight_matrix(w: np.ndarray) -> np.ndarray:
    """(Cout, Cin, *K) -> (prod(K)*Cin, Cout), matching the im2col layout."""
    c_out = w.shape[0]
    wt = np.moveaxis(w, 1, -1)  # (Cout, *K, Cin)
    return np.ascontiguousarray(wt.reshape(c_out, -1).T)


def _conv_nd_data(x: np.ndarray, w: np.ndarray, b: Optional[np.ndarray], stride, pad):
    """Batched cross-correlation on raw arrays. x: (B, Cin, *S), w: (Cout, Cin, *K).

    Returns (out, cols) so the backward pass can reuse the patch matrix.
    """
    n_sp = w.ndim - 2
    c_out = w.shape[0]
    cols, out_spatial = _im2col(x, w.shape[2:], stride, pad)
    y = cols @ _weight_matrix(w)  # (B*prod(out_spatial), Cout)
    out = y.reshape((x.shape[0],) + tuple(out_spatial) + (c_out,))
    out = np.ascontiguousarray(np.moveaxis(out, -1, 1))
    if b is not None:
        out += b.reshape((1, c_out) + (1,) * n_sp)
    return out, cols


def _conv_nd(x: Tensor, w: Tensor, b: Optional[Tensor], stride, pad, name: str) -> Tensor:
    n_sp = w.ndim - 2
    unbatched = x.ndim == w.ndim - 1
    xd = x.data[None] if unbatched else x.data
    if xd.ndim != w.ndim:
        raise ValueError(f"{name}: input rank {x.ndim} incompatible with weight rank {w.ndim}")
    if xd.shape[1] != w.shape[1]:
        raise ValueError(
            f"{name}: input channel dimension is {xd.shape[1]} but weight expects {w.shape[1]}"
        )
    stride = _norm_per_axis(stride, n_sp, "stride")
    pad = _norm_per_axis(pad, n_sp, "pad")
    if any(s < 1 for s in stride):
        raise ValueError(f"{name}: stride must be >= 1")
    bd = b.data if b is not None else None
    out_data, cols = _conv_nd_data(xd, w.data, bd, stride, pad)

    def backward(g):
        gb = g[None] if unbatched else g
        if b is not None and b.requires_grad:
            b.accumulate_grad(gb.sum(axis=(0,) + tuple(range(2, gb.ndim))))
        if w.requires_grad:
            c_out = w.shape[0]
            gmat = np.ascontiguousarray(np.moveaxis(gb, 1, -1)).reshape(-1, c_out)
            gw = (gmat.T @ cols).reshape((c_out,) + w.shape[2:] + (w.shape[1],))
            w.accumulate_grad(np.moveaxis(gw, -1, 1))
        if x.requires_grad:
            gx = _conv_input_grad(gb, w.data, xd.shape, stride, pad)
            x.accumulate_grad(gx[0] if unbatched else gx)

    return _make(out_data[0] if unbatched else out_data, tuple(p for p in (x, w, b) if p is not None), backward, name)


def _conv_input_grad(g: np.ndarray, w: np.ndarray, x_shape, stride, pad) -> np.ndarray:
    """Gradient w.r.t. conv input, computed as a stride-1 correlation GEMM."""
    n_sp = w.ndim - 2
    ksize = w.shape[2:]
    # dilate the output gradient by the stride, then pad so a plain
    # correlation with the flipped, channel-swapped kernel lands on x_shape
    dil_shape = []
    for ax in range(n_sp):
        s_in = x_shape[2 + ax]
        lo, hi = pad[ax]
        extra = (s_in + lo + hi - ksize[ax]) % stride[ax]
        dil_shape.append((g.shape[2 + ax] - 1) * stride[ax] + 1 + extra)
    gd = np.zeros((g.shape[0], g.shape[1]) + tuple(dil_shape), dtype=g.dtype)
    slicer = (slice(None), slice(None)) + tuple(slice(None, (n - 1) * s + 1, s) for n, s in zip(g.shape[2:], stride))
    gd[slicer] = g
    flip = tuple(range(-n_sp, 0))
    w_sw = np.ascontiguousarray(np.flip(w, axis=flip).swapaxes(0, 1))  # (Cin, Cout, *K)
    back_pad = tuple((ksize[ax] - 1 - pad[ax][0], ksize[ax] - 1 - pad[ax][1]) for ax in range(n_sp))
    return _conv_nd_data(gd, w_sw, None, (1,) * n_sp, back_pad)[0]


def conv2d(x: Tensor, w: Tensor, b: Optional[Tensor] = None, stride=1, padding=0) -> Tensor:
    """2-D cross-correlation.

    Args:
        x: input of shape (C_in, H, W) or (B, C_in, H, W).
        w: weights of shape (C_out, C_in, kH, kW).
        b: optional bias of shape (C_out,).
        stride: int or per-axis pair.
        padding: int, per-axis ints, or per-axis (before, after) pairs.
    """
    if w.ndim != 4:
        raise ValueError(f"conv2d: weight must be rank 4, got {w.ndim}")
    return _conv_nd(x, w, b, stride, padding, "conv2d")


def conv3d(x: Tensor, w: Tensor, b: Optional[Tensor] = None, stride=1, padding=0) -> Tensor:
    """3-D cross-correlation over (T, H, W); see conv2d for conventions."""
    if w.ndim != 5:
        raise ValueError(f"conv3d: weight must be rank 5, got {w.ndim}")
    return _conv_nd(x, w, b, stride, padding, "conv3d")


def maxpool(x: Tensor, axis: int, window: int, stride: int) -> Tensor:
    """Max pooling along a single axis; ties route gradient to the first index."""
    axis = axis % x.ndim
    n = x.shape[axis]
    if window > n:
        raise ValueError(f"maxpool: window {window} exceeds axis length {n}")
    if stride < 1:
        raise ValueError("maxpool: stride must be >= 1")
    win = sliding_window_view(x.data, window, axis=axis)
    slicer = [slice(None)] * x.ndim
    slicer[axis] = slice(None, None, stride)
    win = win[tuple(slicer)]  # (..., n_out along axis, ..., window) with window last
    out_data = win.max(axis=-1)
    arg = win.argmax(axis=-1)  # first max wins: np.argmax returns first occurrence

    def backward(g):
        if not x.requires_grad:
            return
        full = np.zeros_like(x.data)
        starts = np.arange(out_data.shape[axis]) * stride
        shp = [1] * out_data.ndim
        shp[axis] = -1
        src_idx = arg + starts.reshape(shp)
        grid = np.ogrid[tuple(slice(0, s) for s in out_data.shape)]
        idx = list(grid)
        idx[axis] = src_idx
        if stride >= window:  # windows disjoint: plain scatter
            full[tuple(idx)] = g
        else:
            np.add.at(full, tuple(idx), g)
        x.accumulate_grad(full)

    return _make(np.ascontiguousarray(out_data), (x,), backward, "maxpool")


# ----------------------------------------------------------------------
# batch normalization


def batchnorm(
    x: Tensor,
    gamma: Tensor,
    beta: Tensor,
    running_mean: np.ndarray,
    running_var: np.ndarray,
    channel_axis: int = 1,
    momentum: float = 0.1,
    eps: float = 1e-5,
    training: bool = True,
) -> Tensor:
    """Batch normalization over all axes except ``channel_axis``.

    In training mode the batch statistics normalize the input and the
    running buffers are updated in place; in eval mode the running buffers
    are used instead. gamma/beta are per-channel affine parameters.
    """
    axes = tuple(a for a in range(x.ndim) if a != channel_axis)
    shape = [1] * x.ndim
    shape[channel_axis] = x.shape[channel_axis]
    if training:
        mu = x.data.mean(axis=axes)
        var = x.data.var(axis=axes)
        running_mean *= 1.0 - momentum
        running_mean += momentum * mu
        running_var *= 1.0 - momentum
        running_var += momentum * var
    else:
        mu = running_mean
        var = running_var
    mu_b = mu.reshape(shape).astype(x.data.dtype)
    inv = (1.0 / np.sqrt(var + eps)).reshape(shape).astype(x.data.dtype)
    xhat = (x.data - mu_b) * inv
    out_data = gamma.data.reshape(shape) * xhat + beta.data.reshape(shape)

    def backward(g):
        if gamma.requires_grad:
            gamma.accumulate_grad((g * xhat).sum(axis=axes))
        if beta.requires_grad:
            beta.accumulate_grad(g.sum(axis=axes))
        if x.requires_grad:
            gm = gamma.data.reshape(shape)
            if training:
                gxhat = g * gm
                term1 = gxhat
                term2 = gxhat.mean(axis=axes, keepdims=True)
                term3 = xhat * (gxhat * xhat).mean(axis=axes, keepdims=True)
                x.accumulate_grad((term1 - term2 - term3) * inv)
            else:
                x.accumulate_grad(g * gm * inv)

    return _make(out_data, (x, gamma, beta), backward, "batchnorm")
