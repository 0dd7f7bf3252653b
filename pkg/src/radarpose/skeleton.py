"""The 14-keypoint human graph, ground-truth heatmaps, and coordinate maps.

Camera coordinates live in [0, 256) pixels; heatmap grids use a
center-of-pixel convention, so a keypoint quantized to cell (i, j) maps
back to camera coordinates ((j + 0.5) * 256 / W, (i + 0.5) * 256 / H).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Dict, List, Sequence, Tuple

import numpy as np

from .errors import DataError

__all__ = [
    "CAMERA_SIZE",
    "KEYPOINT_NAMES",
    "KEYPOINT_GROUPS",
    "EDGES",
    "Skeleton2D",
    "SkeletonGraph",
    "adjacency",
    "gt_heatmaps",
    "extract_keypoints",
    "save_gt_file",
    "load_gt_file",
]

CAMERA_SIZE = 256

KEYPOINT_NAMES = (
    "head",
    "neck",
    "r_shoulder",
    "l_shoulder",
    "r_elbow",
    "l_elbow",
    "r_wrist",
    "l_wrist",
    "r_hip",
    "l_hip",
    "r_knee",
    "l_knee",
    "r_ankle",
    "l_ankle",
)

# report columns: left/right merged as in the usual keypoint AP tables
KEYPOINT_GROUPS: Dict[str, Tuple[int, ...]] = {
    "head": (0,),
    "neck": (1,),
    "shoulder": (2, 3),
    "elbow": (4, 5),
    "wrist": (6, 7),
    "hip": (8, 9),
    "knee": (10, 11),
    "ankle": (12, 13),
}

# limbs chain off the neck; the pelvis is not a node, so the neck links to
# both hips to keep the graph connected
EDGES = (
    (0, 1),  # head - neck
    (1, 2),  # neck - r_shoulder
    (1, 3),  # neck - l_shoulder
    (2, 4),  # r_shoulder - r_elbow
    (4, 6),  # r_elbow - r_wrist
    (3, 5),  # l_shoulder - l_elbow
    (5, 7),  # l_elbow - l_wrist
    (1, 8),  # neck - r_hip
    (1, 9),  # neck - l_hip
    (8, 10),  # r_hip - r_knee
    (10, 12),  # r_knee - r_ankle
    (9, 11),  # l_hip - l_knee
    (11, 13),  # l_knee - l_ankle
    (8, 9),  # hip - hip
)


@dataclass
class Skeleton2D:
    """14 keypoint coordinates in camera pixels plus per-keypoint visibility."""

    coords: np.ndarray
    visibility: np.ndarray = None

    def __post_init__(self):
        self.coords = np.asarray(self.coords, dtype=np.float64)
        if self.coords.shape != (14, 2):
            raise ValueError(f"Skeleton2D needs exactly 14 (x, y) pairs, got {self.coords.shape}")
        if self.visibility is None:
            self.visibility = np.ones(14, dtype=bool)
        else:
            self.visibility = np.asarray(self.visibility, dtype=bool)
            if self.visibility.shape != (14,):
                raise ValueError("Skeleton2D visibility must have 14 entries")


@dataclass
class SkeletonGraph:
    """Symmetric 0/1 adjacency over the 14 keypoints (zero diagonal)."""

    adjacency: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.adjacency, dtype=np.float64)
        if a.shape != (14, 14):
            raise ValueError("adjacency must be 14x14")
        if not np.array_equal(a, a.T):
            raise ValueError("adjacency must be symmetric")
        if np.any(np.diag(a) != 0):
            raise ValueError("adjacency diagonal must be zero")
        self.adjacency = a

    def a_hat(self) -> np.ndarray:
        """A + I, the propagation matrix of the refinement network."""
        return self.adjacency + np.eye(14)

    def degrees(self) -> np.ndarray:
        return self.adjacency.sum(axis=1)


def adjacency() -> SkeletonGraph:
    """The fixed 14-node skeleton graph."""
    a = np.zeros((14, 14))
    for i, j in EDGES:
        a[i, j] = 1.0
        a[j, i] = 1.0
    return SkeletonGraph(a)


def camera_to_grid(coords: np.ndarray, h: int, w: int) -> np.ndarray:
    """Quantize camera (x, y) to integer heatmap cells (col, row).

    Cell j covers camera span [j*256/W, (j+1)*256/W), so quantization is a
    floor; this keeps one-cell translations exact.
    """
    coords = np.asarray(coords, dtype=np.float64)
    gx = np.clip(np.floor(coords[..., 0] * w / CAMERA_SIZE), 0, w - 1)
    gy = np.clip(np.floor(coords[..., 1] * h / CAMERA_SIZE), 0, h - 1)
    return np.stack([gx, gy], axis=-1).astype(np.int64)


def grid_to_camera(cells: np.ndarray, h: int, w: int) -> np.ndarray:
    """Map integer heatmap cells (col, row) to camera pixel centers."""
    cells = np.asarray(cells, dtype=np.float64)
    x = (cells[..., 0] + 0.5) * CAMERA_SIZE / w
    y = (cells[..., 1] + 0.5) * CAMERA_SIZE / h
    return np.stack([x, y], axis=-1)


def gt_heatmaps(sk: Skeleton2D, h: int = 64, w: int = 64, sigma: float = 2.0) -> np.ndarray:
    """Unit-peak Gaussian target heatmaps, one channel per keypoint.

    Invisible keypoints produce an all-zero channel (they are also masked
    out of the training loss).
    """
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    cells = camera_to_grid(sk.coords, h, w)
    ii = np.arange(h)[:, None]
    jj = np.arange(w)[None, :]
    maps = np.zeros((14, h, w))
    for c in range(14):
        if not sk.visibility[c]:
            continue
        gx, gy = cells[c]
        maps[c] = np.exp(-((ii - gy) ** 2 + (jj - gx) ** 2) / (2.0 * sigma**2))
    return maps


def extract_keypoints(heatmaps: np.ndarray) -> Tuple[Skeleton2D, np.ndarray]:
    """Argmax decoding of per-keypoint heatmaps.

    Ties resolve to the smallest row-major index. Returns the skeleton in
    camera coordinates and the per-keypoint confidences (peak values).
    """
    heatmaps = np.asarray(heatmaps)
    if heatmaps.ndim != 3 or heatmaps.shape[0] != 14:
        raise ValueError(f"expected (14, H, W) heatmaps, got {heatmaps.shape}")
    _, h, w = heatmaps.shape
    flat = heatmaps.reshape(14, -1)
    idx = flat.argmax(axis=1)
    conf = flat[np.arange(14), idx]
    rows, cols = np.divmod(idx, w)
    coords = grid_to_camera(np.stack([cols, rows], axis=-1), h, w)
    return Skeleton2D(coords), conf


# ----------------------------------------------------------------------
# ground-truth keypoint files


def save_gt_file(path, skeletons: Sequence[Skeleton2D], fps: float = 10.0) -> None:
    frames = []
    for i, sk in enumerate(skeletons):
        kps = [[float(x), float(y), int(v)] for (x, y), v in zip(sk.coords, sk.visibility)]
        frames.append({"frame": i, "keypoints": kps})
    doc = {"image_size": CAMERA_SIZE, "fps": fps, "num_keypoints": 14, "frames": frames}
    with open(path, "w") as f:
        json.dump(doc, f, indent=None, separators=(",", ":"), sort_keys=True)


def load_gt_file(path) -> List[Skeleton2D]:
    try:
        with open(path) as f:
            doc = json.load(f)
    except json.JSONDecodeError as e:
        raise DataError(f"{path}: not valid keypoint JSON ({e})") from e
    if "frames" not in doc:
        raise DataError(f"{path}: missing 'frames'")
    out = []
    for entry in sorted(doc["frames"], key=lambda d: d["frame"]):
        kps = entry["keypoints"]
        if len(kps) != 14:
            raise DataError(f"{path}: frame {entry['frame']} has {len(kps)} keypoints, expected 14")
        coords = np.array([[k[0], k[1]] for k in kps])
        vis = np.array([bool(k[2]) if len(k) > 2 else True for k in kps])
        out.append(Skeleton2D(coords, vis))
    return out
