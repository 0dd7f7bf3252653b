"""FMCW radar configuration, point-scatterer frame synthesis, and cube files.

The synthesis model is the usual dechirped point-target approximation: each
scatterer contributes a complex exponential whose frequency along the ADC
axis encodes range, along the chirp axis encodes radial velocity, and along
the two antenna axes encodes the direction cosines. Contributions add
linearly; optional complex white Gaussian noise is drawn from a per-frame
counter-based seed so frames can be synthesized in any order.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field, replace
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .errors import DataError
from .fft import ComplexTensor

__all__ = [
    "SPEED_OF_LIGHT",
    "RadarConfig",
    "Target",
    "ScatterScene",
    "AdcCube",
    "synthesize_frame",
    "write_cube",
    "read_cube",
]

SPEED_OF_LIGHT = 299792458.0

ADC_MAGIC = b"HUPRADC1"
ADC_VERSION = 1


@dataclass(frozen=True)
class RadarConfig:
    """Sensor and waveform parameters plus the derived resolutions.

    ``range_resolution`` is authoritative for the range-to-bin mapping used
    in synthesis (beat frequency = range / (range_resolution * n_adc) cycles
    per sample). The configured ``freq_slope`` and ``sample_rate`` are kept
    for validation and reference; at the stock settings they imply a
    slightly finer resolution (about 4.3 cm) than the 4.8 cm the sensor is
    quoted at, so the quoted value wins.
    """

    n_adc: int = 256
    n_chirps: int = 64
    n_az_rx: int = 8
    n_el_rx: int = 2
    freq_slope: float = 60.012e6 / 1e-6  # Hz per second
    sample_rate: float = 4.4e6
    chirp_duration: float = 72e-6
    fps: float = 10.0
    carrier_wavelength: float = SPEED_OF_LIGHT / 77e9
    antenna_spacing: Optional[float] = None
    range_resolution: float = 0.048
    max_range: float = 11.0

    def __post_init__(self):
        if self.antenna_spacing is None:
            object.__setattr__(self, "antenna_spacing", self.carrier_wavelength / 2.0)
        for name in (
            "n_adc",
            "n_chirps",
            "n_az_rx",
            "n_el_rx",
            "freq_slope",
            "sample_rate",
            "chirp_duration",
            "fps",
            "carrier_wavelength",
            "antenna_spacing",
            "range_resolution",
            "max_range",
        ):
            if getattr(self, name) <= 0:
                raise ValueError(f"RadarConfig.{name} must be strictly positive")
        if self.n_adc / self.sample_rate > self.chirp_duration + 1e-12:
            raise ValueError(
                f"RadarConfig: {self.n_adc} samples at {self.sample_rate:g} S/s do not fit "
                f"inside a {self.chirp_duration:g} s chirp"
            )

    @property
    def cube_shape(self) -> Tuple[int, int, int, int]:
        return (self.n_adc, self.n_chirps, self.n_az_rx, self.n_el_rx)

    @property
    def frame_duration(self) -> float:
        return 1.0 / self.fps

    @property
    def doppler_bin_width(self) -> float:
        """Radial speed (m/s) spanned by one doppler bin."""
        return self.carrier_wavelength / (2.0 * self.n_chirps * self.chirp_duration)

    @property
    def max_azimuth_deg(self) -> float:
        return 60.0

    @property
    def max_elevation_deg(self) -> float:
        return 15.0


@dataclass
class Target:
    """One point scatterer: position/velocity in meters, m/s; unitless amplitude."""

    position: np.ndarray
    velocity: np.ndarray
    reflectivity: float = 1.0

    def __post_init__(self):
        self.position = np.asarray(self.position, dtype=np.float64)
        self.velocity = np.asarray(self.velocity, dtype=np.float64)
        if self.position.shape != (3,) or self.velocity.shape != (3,):
            raise ValueError("Target position/velocity must be 3-vectors")
        if self.reflectivity <= 0:
            raise ValueError("Target reflectivity must be positive")


@dataclass
class ScatterScene:
    """A set of point targets, optionally animated by a named motion script.

    The coordinate frame is sensor-centric: x right, y boresight (depth),
    z up. Without a motion script the scene is a single snapshot and
    ``targets_at`` returns the stored targets for any frame.
    """

    targets: List[Target]
    duration: float = 1.0
    motion_script: Optional[str] = None
    motion_params: dict = field(default_factory=dict)

    def targets_at(self, frame_index: int, fps: float = 10.0) -> List[Target]:
        if self.motion_script is None:
            return self.targets
        from .scenes import apply_motion_script  # lazy: scenes imports this module

        return apply_motion_script(self, frame_index, fps)


@dataclass
class AdcCube:
    """One raw radar frame of shape (n_adc, n_chirps, n_az_rx, n_el_rx)."""

    frame_index: int
    data: ComplexTensor


def _direction(position: np.ndarray) -> Tuple[float, float, float, float, float]:
    """Range, azimuth/elevation angles (radians) and direction cosines."""
    x, y, z = position
    r = float(np.sqrt(x * x + y * y + z * z))
    if r <= 0:
        raise ValueError("target at the sensor origin has no defined direction")
    azimuth = float(np.arctan2(x, y))
    elevation = float(np.arcsin(np.clip(z / r, -1.0, 1.0)))
    return r, azimuth, elevation, x / r, z / r


def synthesize_frame(
    config: RadarConfig,
    scene: ScatterScene,
    frame_index: int,
    snr_db: Optional[float] = None,
    seed: int = 0,
    channel: str = "horizontal",
) -> AdcCube:
    """Synthesize one dechirped ADC cube from the scene at ``frame_index``.

    Args:
        config: sensor parameters.
        scene: point targets (animated or snapshot).
        frame_index: frame number; also keys the per-frame noise stream.
        snr_db: SNR of the additive complex white Gaussian noise relative
            to the strongest target's per-sample power; None disables noise
            (the noiseless path is bitwise independent of the seed).
        seed: base entropy for the noise stream.
        channel: "horizontal" or "vertical"; the vertical sensor is the
            same array rotated 90 degrees, so its antenna axes see the
            elevation and azimuth direction cosines swapped.

    Raises:
        ValueError: if a target lies outside the field of view or beyond
            the maximum range, naming the target index.
    """
    if channel not in ("horizontal", "vertical"):
        raise ValueError(f"unknown radar channel {channel!r}")
    targets = scene.targets_at(frame_index, config.fps)
    n, m, p, q = config.cube_shape
    cube = np.zeros((n, m, p, q), dtype=np.complex128)
    idx_n = np.arange(n)
    idx_m = np.arange(m)
    idx_p = np.arange(p)
    idx_q = np.arange(q)
    d_over_lambda = config.antenna_spacing / config.carrier_wavelength
    max_amp = 0.0
    for t_i, tgt in enumerate(targets):
        r, az, el, u, v = _direction(tgt.position)
        if r >= config.max_range:
            raise ValueError(f"target {t_i} at range {r:.2f} m is beyond max range {config.max_range} m")
        if abs(np.degrees(az)) > config.max_azimuth_deg:
            raise ValueError(f"target {t_i} at azimuth {np.degrees(az):.1f} deg is outside the field of view")
        if abs(np.degrees(el)) > config.max_elevation_deg:
            raise ValueError(f"target {t_i} at elevation {np.degrees(el):.1f} deg is outside the field of view")
        # approach rate is positive toward the sensor
        v_radial = -float(np.dot(tgt.velocity, tgt.position)) / r
        f_range = r / (config.range_resolution * config.n_adc)  # cycles per ADC sample
        f_doppler = 2.0 * v_radial / config.carrier_wavelength * config.chirp_duration
        if channel == "horizontal":
            f_p, f_q = d_over_lambda * u, d_over_lambda * v
        else:
            f_p, f_q = d_over_lambda * v, d_over_lambda * u
        e_n = np.exp(2j * np.pi * f_range * idx_n)
        e_m = np.exp(2j * np.pi * f_doppler * idx_m)
        e_p = np.exp(2j * np.pi * f_p * idx_p)
        e_q = np.exp(2j * np.pi * f_q * idx_q)
        nm = np.outer(e_n, e_m)
        pq = tgt.reflectivity * np.outer(e_p, e_q)
        cube += nm[:, :, None, None] * pq[None, None, :, :]
        max_amp = max(max_amp, tgt.reflectivity)
    if snr_db is not None and np.isfinite(snr_db) and max_amp > 0:
        tag = 0 if channel == "horizontal" else 1
        rng = np.random.Generator(
            np.random.PCG64(np.random.SeedSequence(entropy=int(seed), spawn_key=(tag, int(frame_index))))
        )
        noise_var = max_amp**2 * 10.0 ** (-snr_db / 10.0)
        sigma = np.sqrt(noise_var / 2.0)
        cube += sigma * (rng.standard_normal(cube.shape) + 1j * rng.standard_normal(cube.shape))
    return AdcCube(frame_index=frame_index, data=ComplexTensor(cube))


# ----------------------------------------------------------------------
# cube files


def write_cube(path, cube: AdcCube, dtype: str = "f32") -> None:
    """Write a cube as little-endian interleaved (real, imag) pairs."""
    if dtype not in ("f32", "f64"):
        raise ValueError(f"unsupported scalar type {dtype!r}")
    tag = 0 if dtype == "f32" else 1
    data = cube.data.data
    if data.ndim != 4:
        raise ValueError("AdcCube payload must be rank 4")
    header = struct.pack(
        "<8sIIIIII",
        ADC_MAGIC,
        ADC_VERSION,
        data.shape[0],
        data.shape[1],
        data.shape[2],
        data.shape[3],
        tag,
    )
    scalar = np.float32 if tag == 0 else np.float64
    interleaved = np.empty(data.shape + (2,), dtype=scalar)
    interleaved[..., 0] = data.real
    interleaved[..., 1] = data.imag
    with open(path, "wb") as f:
        f.write(header)
        f.write(interleaved.tobytes())


def read_cube(path) -> AdcCube:
    """Read a cube written by :func:`write_cube`; validates magic and sizes."""
    with open(path, "rb") as f:
        raw = f.read()
    header_size = struct.calcsize("<8sIIIIII")
    if len(raw) < header_size:
        raise DataError(f"{path}: truncated header")
    magic, version, n, m, p, q, tag = struct.unpack_from("<8sIIIIII", raw, 0)
    if magic != ADC_MAGIC:
        raise DataError(f"{path}: bad magic {magic!r}")
    if version != ADC_VERSION:
        raise DataError(f"{path}: unsupported version {version}")
    if tag not in (0, 1):
        raise DataError(f"{path}: unknown scalar type tag {tag}")
    scalar = np.dtype("<f4") if tag == 0 else np.dtype("<f8")
    count = n * m * p * q * 2
    if len(raw) != header_size + count * scalar.itemsize:
        raise DataError(f"{path}: payload length {len(raw) - header_size} does not match header dims")
    flat = np.frombuffer(raw, dtype=scalar, offset=header_size)
    pairs = flat.reshape(n, m, p, q, 2)
    data = (pairs[..., 0] + 1j * pairs[..., 1]).astype(np.complex128 if tag else np.complex64)
    frame_index = _frame_index_from_name(path)
    return AdcCube(frame_index=frame_index, data=ComplexTensor(data))


def _frame_index_from_name(path) -> int:
    import re

    m = re.search(r"frame_(\d+)", str(path))
    return int(m.group(1)) if m else -1
