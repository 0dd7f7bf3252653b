"""Sliding-window access to preprocessed radar sequences on disk.

A sequence directory holds paired per-frame maps (``frame_00000_h.rmap`` /
``frame_00000_v.rmap``) plus a ``gt.json`` keypoint file. A training sample
is an N-frame window of both radars together with the ground-truth heatmaps
of the window's center frame.
"""

from __future__ import annotations

import os
import re
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .errors import DataError
from .preproc import read_map
from .skeleton import Skeleton2D, gt_heatmaps, load_gt_file

__all__ = ["WindowDataset", "find_sequence_dirs"]


def find_sequence_dirs(root) -> List[str]:
    """Sequence subdirectories of a root, or the root itself if it is one."""
    root = str(root)
    if os.path.isfile(os.path.join(root, "gt.json")):
        return [root]
    dirs = sorted(
        os.path.join(root, d)
        for d in os.listdir(root)
        if os.path.isdir(os.path.join(root, d)) and os.path.isfile(os.path.join(root, d, "gt.json"))
    )
    if not dirs:
        raise DataError(f"{root}: no sequence directories with gt.json found")
    return dirs


_FRAME_RE = re.compile(r"frame_(\d+)_h\.rmap$")


@dataclass
class _Sequence:
    path: str
    frames: List[int]
    skeletons: List[Skeleton2D]


class WindowDataset:
    """Paired-radar sliding windows with center-frame heatmap targets."""

    def __init__(
        self,
        root,
        n_frames: int,
        heatmap_h: int,
        heatmap_w: int,
        sigma: float = 2.0,
        center_index: Optional[int] = None,
    ):
        self.n_frames = int(n_frames)
        self.heatmap_h = int(heatmap_h)
        self.heatmap_w = int(heatmap_w)
        self.sigma = float(sigma)
        self.center_index = self.n_frames // 2 if center_index is None else int(center_index)
        self.sequences: List[_Sequence] = []
        for d in find_sequence_dirs(root):
            frames = sorted(
                int(m.group(1)) for f in os.listdir(d) if (m := _FRAME_RE.search(f)) is not None
            )
            if not frames:
                raise DataError(f"{d}: no frame_*_h.rmap files")
            if frames != list(range(frames[0], frames[0] + len(frames))):
                raise DataError(f"{d}: frame numbering has gaps")
            skeletons = load_gt_file(os.path.join(d, "gt.json"))
            if len(skeletons) < len(frames):
                raise DataError(f"{d}: gt.json covers {len(skeletons)} frames but {len(frames)} maps exist")
            self.sequences.append(_Sequence(d, frames, skeletons))
        self._windows: List[Tuple[int, int]] = []  # (sequence index, start frame offset)
        for si, seq in enumerate(self.sequences):
            for start in range(len(seq.frames) - self.n_frames + 1):
                self._windows.append((si, start))
        if not self._windows:
            raise DataError(f"{root}: sequences shorter than the {self.n_frames}-frame window")
        self._cache: Dict[int, Tuple[np.ndarray, np.ndarray]] = {}

    def __len__(self) -> int:
        return len(self._windows)

    def window_info(self, i: int) -> Tuple[str, int, int]:
        """(sequence path, start frame, center frame) of window i."""
        si, start = self._windows[i]
        seq = self.sequences[si]
        return seq.path, seq.frames[start], seq.frames[start + self.center_index]

    def _load_sequence(self, si: int) -> Tuple[np.ndarray, np.ndarray]:
        if si not in self._cache:
            seq = self.sequences[si]
            hs, vs = [], []
            for fr in seq.frames:
                for suffix, acc in (("h", hs), ("v", vs)):
                    m = read_map(os.path.join(seq.path, f"frame_{fr:05d}_{suffix}.rmap"))
                    data = m.data
                    if data.ndim == 4:  # RA maps carry no elevation axis
                        data = data[..., None]
                    acc.append(np.asarray(data, dtype=np.float32))
            self._cache[si] = (np.stack(hs), np.stack(vs))
        return self._cache[si]

    def drop_cache(self) -> None:
        self._cache.clear()

    def sample(self, i: int) -> dict:
        si, start = self._windows[i]
        seq = self.sequences[si]
        maps_h, maps_v = self._load_sequence(si)
        sk = seq.skeletons[start + self.center_index]
        target = gt_heatmaps(sk, self.heatmap_h, self.heatmap_w, self.sigma)
        return {
            "maps_h": maps_h[start : start + self.n_frames],
            "maps_v": maps_v[start : start + self.n_frames],
            "target": target.astype(np.float32),
            "visibility": sk.visibility.astype(np.float32),
            "skeleton": sk,
        }

    def batch(self, indices: Sequence[int]) -> dict:
        samples = [self.sample(i) for i in indices]
        return {
            "maps_h": np.stack([s["maps_h"] for s in samples]),
            "maps_v": np.stack([s["maps_v"] for s in samples]),
            "target": np.stack([s["target"] for s in samples]),
            "visibility": np.stack([s["visibility"] for s in samples]),
            "skeletons": [s["skeleton"] for s in samples],
        }

    def suggest_input_scale(self, n_probe: int = 16, per_bin: bool = True):
        """1 / RMS of probe maps; per velocity bin by default.

        Per-bin standardization matters for the velocity-sliced maps: the
        static-return channel is tens of times stronger than the channels
        carrying moving limbs, and a single global scale would leave those
        nearly invisible to the stem. The same rule applied to chirp-sampled
        maps is a uniform scale (all chirp channels share statistics).
        """
        probes = []
        per_seq = max(1, n_probe // len(self.sequences))
        for si in range(len(self.sequences)):
            maps_h, _ = self._load_sequence(si)
            probes.append(maps_h[:per_seq].astype(np.float64))
            if sum(p.shape[0] for p in probes) >= n_probe:
                break
        probe = np.concatenate(probes)  # (n, 2, K, H, W, E)
        if not per_bin:
            rms = float(np.sqrt(np.mean(probe**2)))
            return 1.0 / rms if rms > 0 and np.isfinite(rms) else 1.0
        rms = np.sqrt(np.mean(probe**2, axis=(0, 1, 3, 4, 5)))
        rms = np.where(np.isfinite(rms) & (rms > 0), rms, 1.0)
        return tuple(float(1.0 / r) for r in rms)
