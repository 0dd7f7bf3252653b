"""Static PNG rendering of heatmaps and skeleton overlays."""

from __future__ import annotations

from typing import Optional, Sequence

import numpy as np
from PIL import Image, ImageDraw

from .skeleton import CAMERA_SIZE, EDGES, Skeleton2D

__all__ = ["heatmap_png", "skeleton_png"]


def heatmap_png(heatmaps: np.ndarray, path, channel: Optional[int] = None) -> None:
    """Write a heatmap as an 8-bit grayscale PNG, one pixel per cell.

    With ``channel=None`` the channels are composited with a per-pixel max.
    Values are clipped to [0, 1] and scaled to 0..255.
    """
    arr = np.asarray(heatmaps, dtype=np.float64)
    if arr.ndim == 3:
        arr = arr[channel] if channel is not None else arr.max(axis=0)
    if arr.ndim != 2:
        raise ValueError(f"expected (H, W) or (C, H, W) heatmaps, got shape {heatmaps.shape}")
    img = (np.clip(arr, 0.0, 1.0) * 255.0).round().astype(np.uint8)
    Image.fromarray(img, mode="L").save(path)


def skeleton_png(
    skeletons: Sequence[Skeleton2D],
    path,
    size: int = CAMERA_SIZE,
    colors: Optional[Sequence[str]] = None,
) -> None:
    """Draw one or more skeletons as line figures on a black canvas."""
    img = Image.new("RGB", (size, size), "black")
    draw = ImageDraw.Draw(img)
    scale = size / CAMERA_SIZE
    palette = list(colors) if colors else ["white", "orange", "cyan", "magenta"]
    for s_i, sk in enumerate(skeletons):
        color = palette[s_i % len(palette)]
        pts = sk.coords * scale
        for i, j in EDGES:
            if sk.visibility[i] and sk.visibility[j]:
                draw.line([tuple(pts[i]), tuple(pts[j])], fill=color, width=1)
        for c in range(14):
            if sk.visibility[c]:
                x, y = pts[c]
                draw.ellipse([x - 1.5, y - 1.5, x + 1.5, y + 1.5], fill=color)
    img.save(path)
