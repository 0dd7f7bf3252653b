"""Complex tensors and the FFT kernels used by the radar pre-processing."""

from __future__ import annotations

from typing import Sequence, Union

import numpy as np

__all__ = ["ComplexTensor", "fft1d", "ifft1d", "fftshift"]


class ComplexTensor:
    """A dense N-dimensional complex array (no gradient tracking).

    Raw radar cubes and every FFT stage live here; the (real, imaginary)
    split into a real Tensor happens only when a map is handed to the
    network.
    """

    __slots__ = ("data",)

    def __init__(self, data: Union[np.ndarray, Sequence]):
        arr = np.asarray(data)
        if not np.issubdtype(arr.dtype, np.complexfloating):
            arr = arr.astype(np.complex128)
        self.data = arr

    @property
    def shape(self) -> tuple:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def dtype(self):
        return self.data.dtype

    def __repr__(self):
        return f"ComplexTensor(shape={self.shape}, dtype={self.data.dtype})"

    def __add__(self, other):
        other = other.data if isinstance(other, ComplexTensor) else other
        return ComplexTensor(self.data + other)

    def __sub__(self, other):
        other = other.data if isinstance(other, ComplexTensor) else other
        return ComplexTensor(self.data - other)

    def __mul__(self, other):
        other = other.data if isinstance(other, ComplexTensor) else other
        return ComplexTensor(self.data * other)

    __rmul__ = __mul__

    def __getitem__(self, idx):
        return ComplexTensor(self.data[idx])

    def abs(self) -> np.ndarray:
        return np.abs(self.data)

    def conj(self) -> "ComplexTensor":
        return ComplexTensor(np.conj(self.data))


def _check_axis(x: ComplexTensor, axis: int) -> int:
    if not -x.ndim <= axis < x.ndim:
        raise ValueError(f"axis {axis} out of range for rank-{x.ndim} tensor")
    return axis % x.ndim


def fft1d(x: ComplexTensor, axis: int) -> ComplexTensor:
    """Unnormalized forward DFT along one axis.

    The axis length must be a power of two; inputs needing other lengths
    are zero-padded by the caller before this is applied.
    """
    axis = _check_axis(x, axis)
    n = x.shape[axis]
    if n <= 0 or (n & (n - 1)) != 0:
        raise ValueError(f"fft1d: axis length {n} is not a power of two")
    return ComplexTensor(np.fft.fft(x.data, axis=axis))


def ifft1d(x: ComplexTensor, axis: int) -> ComplexTensor:
    """Inverse DFT via the conjugation trick: conj(fft(conj(x))) / N."""
    axis = _check_axis(x, axis)
    n = x.shape[axis]
    if n <= 0 or (n & (n - 1)) != 0:
        raise ValueError(f"ifft1d: axis length {n} is not a power of two")
    return ComplexTensor(np.conj(np.fft.fft(np.conj(x.data), axis=axis)) / n)


def fftshift(x: ComplexTensor, axis: int) -> ComplexTensor:
    """Cyclic rotation by floor(N/2): bin 0 (zero frequency) moves to index N//2."""
    axis = _check_axis(x, axis)
    return ComplexTensor(np.roll(x.data, x.shape[axis] // 2, axis=axis))
