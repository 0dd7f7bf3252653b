"""Radar cube pre-processing into network input maps.

Three pipelines share the same front end (range FFT + gate, azimuth and
elevation zero-pad + FFT + center shift):

* RDAE/VRDAE additionally take a doppler FFT across chirps and keep the K
  doppler bins centered on zero velocity.
* RAE skips the doppler FFT and instead samples K chirps uniformly.
* RA is RAE with the physical elevation channels summed out first.

Doppler, azimuth, and elevation axes are fftshifted (range is not), so zero
velocity and boresight sit at the center bins and the K-bin velocity slice
is symmetric around zero.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from typing import Optional, Tuple, Union

import numpy as np

from .errors import DataError
from .fft import ComplexTensor, fft1d, fftshift
from .radar import AdcCube

__all__ = [
    "PreprocConfig",
    "VrdaeMap",
    "RaeMap",
    "RaMap",
    "HeatmapDump",
    "make_rdae",
    "make_vrdae",
    "make_rae",
    "make_ra",
    "range_azimuth_elevation",
    "write_map",
    "read_map",
]

MAP_MAGIC = b"HUPRMAP1"
MAP_VERSION = 1
KIND_RA, KIND_RAE, KIND_VRDAE, KIND_HEATMAP = 0, 1, 2, 3

_WINDOWS = ("rect", "hann")


def _is_pow2(n: int) -> bool:
    return n > 0 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class PreprocConfig:
    """Range gate, angle padding, velocity-slice width, and taper choice."""

    start_bin: int = 8
    length: int = 64
    az_pad: int = 64
    el_pad: int = 8
    k: int = 8
    window: str = "rect"

    def __post_init__(self):
        if self.start_bin < 0:
            raise ValueError("start_bin must be non-negative")
        for name in ("length", "az_pad", "el_pad"):
            if not _is_pow2(getattr(self, name)):
                raise ValueError(f"PreprocConfig.{name} must be a power of two")
        if self.k < 2 or self.k % 2 != 0:
            raise ValueError("PreprocConfig.k must be even and at least 2")
        if self.window not in _WINDOWS:
            raise ValueError(f"unknown window {self.window!r}; expected one of {_WINDOWS}")


@dataclass
class VrdaeMap:
    """(2, K, H, W, E) real tensor: (re, im) x velocity x range x azimuth x elevation."""

    data: np.ndarray
    frame_index: int = -1
    kind = KIND_VRDAE


@dataclass
class RaeMap:
    """(2, K, H, W, E) real tensor with K uniformly sampled chirps instead of velocities."""

    data: np.ndarray
    frame_index: int = -1
    kind = KIND_RAE


@dataclass
class RaMap:
    """(2, K, H, W) real tensor: RAE with the elevation channels summed out."""

    data: np.ndarray
    frame_index: int = -1
    kind = KIND_RA


@dataclass
class HeatmapDump:
    """(C, H, W) real tensor, used for raw heatmap dumps from inference."""

    data: np.ndarray
    frame_index: int = -1
    kind = KIND_HEATMAP


def _validate(cube: AdcCube, cfg: PreprocConfig, need_k_divides: bool = False) -> None:
    n, m, p, q = cube.data.shape
    if cfg.start_bin + cfg.length > n:
        raise ValueError(
            f"range gate [{cfg.start_bin}, {cfg.start_bin + cfg.length}) exceeds {n} range bins"
        )
    if cfg.az_pad < p:
        raise ValueError(f"az_pad {cfg.az_pad} smaller than {p} physical azimuth channels")
    if cfg.el_pad < q:
        raise ValueError(f"el_pad {cfg.el_pad} smaller than {q} physical elevation channels")
    if cfg.k > m:
        raise ValueError(f"K={cfg.k} exceeds {m} chirps")
    if need_k_divides and m % cfg.k != 0:
        raise ValueError(f"chirp count {m} is not a multiple of K={cfg.k}")


def _taper(x: np.ndarray, cfg: PreprocConfig) -> np.ndarray:
    if cfg.window == "rect":
        return x
    n, m = x.shape[0], x.shape[1]
    wn = np.hanning(n)[:, None, None, None]
    wm = np.hanning(m)[None, :, None, None]
    return x * wn * wm


def _pad_axis(x: np.ndarray, axis: int, size: int) -> np.ndarray:
    pads = [(0, 0)] * x.ndim
    pads[axis] = (0, size - x.shape[axis])
    return np.pad(x, pads)


def _angle_process(x: np.ndarray, cfg: PreprocConfig, do_elevation: bool = True) -> np.ndarray:
    """Zero-pad + FFT + center shift on the azimuth (and elevation) axes."""
    t = ComplexTensor(_pad_axis(x, 2, cfg.az_pad))
    t = fftshift(fft1d(t, 2), 2)
    if do_elevation:
        t = ComplexTensor(_pad_axis(t.data, 3, cfg.el_pad))
        t = fftshift(fft1d(t, 3), 3)
    return t.data


def _range_gate(cube: AdcCube, cfg: PreprocConfig) -> np.ndarray:
    x = _taper(cube.data.data, cfg)
    r = fft1d(ComplexTensor(x), 0).data
    return r[cfg.start_bin : cfg.start_bin + cfg.length]


def make_rdae(cube: AdcCube, cfg: PreprocConfig) -> ComplexTensor:
    """Full range-doppler-azimuth-elevation map, (length, n_chirps, az_pad, el_pad)."""
    _validate(cube, cfg)
    x = _range_gate(cube, cfg)
    x = fftshift(fft1d(ComplexTensor(x), 1), 1).data
    return ComplexTensor(_angle_process(x, cfg))


def _split_complex(x: np.ndarray) -> np.ndarray:
    return np.stack([x.real, x.imag]).astype(np.float64 if x.dtype == np.complex128 else np.float32)


def make_vrdae(cube: AdcCube, cfg: PreprocConfig) -> VrdaeMap:
    """Velocity slice of the RDAE map: the K doppler bins centered on zero."""
    rdae = make_rdae(cube, cfg).data
    m = rdae.shape[1]
    lo = m // 2 - cfg.k // 2
    sliced = rdae[:, lo : lo + cfg.k]  # (H, K, W, E)
    return VrdaeMap(_split_complex(sliced.transpose(1, 0, 2, 3)), cube.frame_index)


def range_azimuth_elevation(cube: AdcCube, cfg: PreprocConfig) -> ComplexTensor:
    """Range-gated, angle-processed map with the chirp axis untouched.

    Shape (length, n_chirps, az_pad, el_pad); the doppler FFT of this
    intermediate equals the RDAE map because FFTs on distinct axes commute.
    """
    _validate(cube, cfg)
    return ComplexTensor(_angle_process(_range_gate(cube, cfg), cfg))


def make_rae(cube: AdcCube, cfg: PreprocConfig) -> RaeMap:
    """Traditional map: no doppler FFT, K chirps sampled at stride n_chirps/K."""
    _validate(cube, cfg, need_k_divides=True)
    x = range_azimuth_elevation(cube, cfg).data
    m = x.shape[1]
    picks = np.arange(cfg.k) * (m // cfg.k)
    sampled = x[:, picks]  # (H, K, W, E)
    return RaeMap(_split_complex(sampled.transpose(1, 0, 2, 3)), cube.frame_index)


def make_ra(cube: AdcCube, cfg: PreprocConfig) -> RaMap:
    """Range-azimuth map: elevation channels summed out before angle FFT."""
    _validate(cube, cfg, need_k_divides=True)
    x = _range_gate(cube, cfg).sum(axis=3, keepdims=True)
    x = _angle_process(x, cfg, do_elevation=False)[..., 0]  # (H, M, W)
    m = x.shape[1]
    picks = np.arange(cfg.k) * (m // cfg.k)
    sampled = x[:, picks]
    return RaMap(_split_complex(sampled.transpose(1, 0, 2)), cube.frame_index)


# ----------------------------------------------------------------------
# map files

_KIND_TO_CLS = {KIND_RA: RaMap, KIND_RAE: RaeMap, KIND_VRDAE: VrdaeMap, KIND_HEATMAP: HeatmapDump}


def write_map(path, m: Union[VrdaeMap, RaeMap, RaMap, HeatmapDump], dtype: str = "f32") -> None:
    """Write a map: magic, version, kind, dims[5], scalar tag, row-major payload."""
    if dtype not in ("f32", "f64"):
        raise ValueError(f"unsupported scalar type {dtype!r}")
    tag = 0 if dtype == "f32" else 1
    dims = list(m.data.shape)
    if len(dims) > 5:
        raise ValueError(f"map rank {len(dims)} exceeds the 5 dims of the file format")
    dims += [1] * (5 - len(dims))
    header = struct.pack("<8sIB5II", MAP_MAGIC, MAP_VERSION, m.kind, *dims, tag)
    scalar = np.dtype("<f4") if tag == 0 else np.dtype("<f8")
    with open(path, "wb") as f:
        f.write(header)
        f.write(np.ascontiguousarray(m.data, dtype=scalar).tobytes())


def read_map(path) -> Union[VrdaeMap, RaeMap, RaMap, HeatmapDump]:
    with open(path, "rb") as f:
        raw = f.read()
    header_size = struct.calcsize("<8sIB5II")
    if len(raw) < header_size:
        raise DataError(f"{path}: truncated header")
    magic, version, kind, d0, d1, d2, d3, d4, tag = struct.unpack_from("<8sIB5II", raw, 0)
    if magic != MAP_MAGIC:
        raise DataError(f"{path}: bad magic {magic!r}")
    if version != MAP_VERSION:
        raise DataError(f"{path}: unsupported version {version}")
    if kind not in _KIND_TO_CLS:
        raise DataError(f"{path}: unknown map kind {kind}")
    if tag not in (0, 1):
        raise DataError(f"{path}: unknown scalar type tag {tag}")
    scalar = np.dtype("<f4") if tag == 0 else np.dtype("<f8")
    dims = (d0, d1, d2, d3, d4)
    count = int(np.prod(dims))
    if len(raw) != header_size + count * scalar.itemsize:
        raise DataError(f"{path}: payload length does not match header dims {dims}")
    data = np.frombuffer(raw, dtype=scalar, offset=header_size).reshape(dims)
    # trailing singleton axes are padding added by the writer
    rank = {KIND_RA: 4, KIND_RAE: 5, KIND_VRDAE: 5, KIND_HEATMAP: 3}[kind]
    data = data.reshape(dims[:rank])
    from .radar import _frame_index_from_name

    return _KIND_TO_CLS[kind](np.array(data), _frame_index_from_name(path))
