"""Object-keypoint-similarity metrics: OKS, averaged precision, and MPJPE."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .skeleton import KEYPOINT_GROUPS, KEYPOINT_NAMES, Skeleton2D

__all__ = [
    "OksConfig",
    "default_thresholds",
    "oks",
    "average_precision",
    "evaluate_keypoints",
    "mpjpe",
    "format_report",
]

# COCO per-keypoint constants (2 * sigma), mapped onto the 14-keypoint set;
# the neck reuses the shoulder constant, the head uses the nose constant.
_DEFAULT_K = np.array(
    [
        0.052,  # head
        0.158,  # neck
        0.158,  # r_shoulder
        0.158,  # l_shoulder
        0.144,  # r_elbow
        0.144,  # l_elbow
        0.124,  # r_wrist
        0.124,  # l_wrist
        0.214,  # r_hip
        0.214,  # l_hip
        0.174,  # r_knee
        0.174,  # l_knee
        0.178,  # r_ankle
        0.178,  # l_ankle
    ]
)


@dataclass
class OksConfig:
    """Per-keypoint falloff constants and the AP ranking mode."""

    k: np.ndarray = field(default_factory=lambda: _DEFAULT_K.copy())
    ranked: bool = True  # False: AP@t is the plain fraction of correct frames

    def __post_init__(self):
        self.k = np.asarray(self.k, dtype=np.float64)
        if self.k.shape != (14,):
            raise ValueError("OksConfig.k must have 14 entries")
        if np.any(self.k <= 0):
            raise ValueError("OksConfig.k must be strictly positive")


def default_thresholds() -> List[float]:
    """The ten OKS thresholds 0.50, 0.55, ..., 0.95."""
    return [(50 + 5 * i) / 100.0 for i in range(10)]


def _bbox_area(sk: Skeleton2D) -> float:
    pts = sk.coords[sk.visibility]
    w = pts[:, 0].max() - pts[:, 0].min()
    h = pts[:, 1].max() - pts[:, 1].min()
    return float(w * h)


def oks(
    pred: Skeleton2D,
    gt: Skeleton2D,
    cfg: Optional[OksConfig] = None,
    scale_sq: Optional[float] = None,
    keypoint_subset: Optional[Sequence[int]] = None,
) -> float:
    """Object keypoint similarity between a prediction and the ground truth.

    Args:
        pred, gt: 14-keypoint skeletons; only GT-visible keypoints count.
        cfg: falloff constants.
        scale_sq: squared object scale; defaults to the bounding-box area
            of the visible GT keypoints.
        keypoint_subset: restrict the similarity to these keypoint indices
            (used for per-keypoint AP); the scale stays whole-skeleton.

    Raises:
        ValueError: if no visible keypoint remains in the selection.
    """
    cfg = cfg or OksConfig()
    vis = gt.visibility.copy()
    if scale_sq is None:
        if not vis.any():
            raise ValueError("OKS undefined: ground truth has no visible keypoints")
        scale_sq = _bbox_area(gt)
    if keypoint_subset is not None:
        mask = np.zeros(14, dtype=bool)
        mask[list(keypoint_subset)] = True
        vis &= mask
    if not vis.any():
        raise ValueError("OKS undefined: no visible keypoints in selection")
    d2 = ((pred.coords - gt.coords) ** 2).sum(axis=1)
    denom = 2.0 * (scale_sq + np.spacing(1.0)) * cfg.k**2
    terms = np.exp(-d2[vis] / denom[vis])
    return float(terms.sum() / vis.sum())


def _ap_at_threshold(oks_values: np.ndarray, confidences: np.ndarray, t: float, ranked: bool) -> float:
    """AP at one threshold; a frame counts as correct iff its OKS exceeds t.

    In ranked mode this is the precision integrated over the
    confidence-ranked list, with tied confidences treated as one block so
    the result does not depend on their relative order.
    """
    correct = oks_values > t
    n = len(oks_values)
    if not ranked:
        return float(correct.sum() / n)
    order = np.argsort(-confidences, kind="stable")
    conf_sorted = confidences[order]
    correct_sorted = correct[order]
    ap = 0.0
    seen = 0
    hits = 0
    i = 0
    while i < n:
        j = i
        while j < n and conf_sorted[j] == conf_sorted[i]:
            j += 1
        g = int(correct_sorted[i:j].sum())
        seen = j
        hits += g
        if g:
            ap += g * (hits / seen)
        i = j
    return ap / n


def average_precision(
    pairs: Sequence[Tuple[Skeleton2D, Skeleton2D, float]],
    thresholds: Optional[Sequence[float]] = None,
    cfg: Optional[OksConfig] = None,
    keypoint_subset: Optional[Sequence[int]] = None,
) -> Dict[str, float]:
    """Average precision of (pred, gt, confidence) frames over OKS thresholds.

    Returns percentages: ``ap`` (mean over all thresholds), ``ap50``,
    ``ap75``, and the per-threshold values.
    """
    if len(pairs) == 0:
        raise ValueError("average_precision needs at least one (pred, gt, confidence) pair")
    cfg = cfg or OksConfig()
    thresholds = list(default_thresholds() if thresholds is None else thresholds)
    oks_values = np.array([oks(p, g, cfg, keypoint_subset=keypoint_subset) for p, g, _ in pairs])
    confs = np.array([c for _, _, c in pairs], dtype=np.float64)
    per_t = [_ap_at_threshold(oks_values, confs, t, cfg.ranked) for t in thresholds]
    out = {
        "ap": 100.0 * float(np.mean(per_t)),
        "per_threshold": {f"{t:.2f}": 100.0 * v for t, v in zip(thresholds, per_t)},
    }
    for tag, t in (("ap50", 0.5), ("ap75", 0.75)):
        if t in thresholds:
            out[tag] = 100.0 * per_t[thresholds.index(t)]
    return out


def evaluate_keypoints(
    pairs: Sequence[Tuple[Skeleton2D, Skeleton2D, float]],
    cfg: Optional[OksConfig] = None,
) -> Dict:
    """Full evaluation report: total AP/AP50/AP75 plus per-keypoint columns."""
    cfg = cfg or OksConfig()
    total = average_precision(pairs, cfg=cfg)
    report = {
        "num_frames": len(pairs),
        "ap": total["ap"],
        "ap50": total["ap50"],
        "ap75": total["ap75"],
        "per_threshold": total["per_threshold"],
        "per_keypoint": {},
        "per_group": {},
    }
    for c, name in enumerate(KEYPOINT_NAMES):
        report["per_keypoint"][name] = average_precision(pairs, cfg=cfg, keypoint_subset=[c])["ap"]
    for name, idxs in KEYPOINT_GROUPS.items():
        report["per_group"][name] = average_precision(pairs, cfg=cfg, keypoint_subset=idxs)["ap"]
    return report


def format_report(report: Dict) -> str:
    """Text table with the merged keypoint columns followed by the totals."""
    cols = list(KEYPOINT_GROUPS.keys())
    header = " ".join(f"{c:>9s}" for c in cols) + f" | {'AP':>6s} {'AP50':>6s} {'AP75':>6s}"
    row = " ".join(f"{report['per_group'][c]:9.1f}" for c in cols)
    row += f" | {report['ap']:6.1f} {report['ap50']:6.1f} {report['ap75']:6.1f}"
    return header + "\n" + row


def mpjpe(pred3d: np.ndarray, gt3d: np.ndarray) -> Tuple[float, np.ndarray]:
    """Mean per-joint position error in millimeters (overall, per joint)."""
    pred3d = np.asarray(pred3d, dtype=np.float64)
    gt3d = np.asarray(gt3d, dtype=np.float64)
    if pred3d.shape != gt3d.shape or pred3d.ndim != 2 or pred3d.shape[1] != 3:
        raise ValueError(f"mpjpe expects matching (J, 3) arrays, got {pred3d.shape} vs {gt3d.shape}")
    per_joint = np.linalg.norm(pred3d - gt3d, axis=1)
    return float(per_joint.mean()), per_joint
