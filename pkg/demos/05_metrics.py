"""How the pose metrics behave: OKS falloff and threshold-averaged AP.

Run:  python demos/05_metrics.py
"""

import os

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from radarpose.metrics import OksConfig, average_precision, default_thresholds, oks
from radarpose.skeleton import KEYPOINT_NAMES, Skeleton2D

OUT = os.path.join(os.path.dirname(__file__), "out")
os.makedirs(OUT, exist_ok=True)

gt = Skeleton2D(np.stack([np.linspace(90, 170, 14), np.linspace(60, 210, 14)], axis=1))
cfg = OksConfig()

# OKS as every keypoint drifts together
offsets = np.linspace(0, 40, 60)
scores = [oks(Skeleton2D(gt.coords + [d, 0.0]), gt, cfg) for d in offsets]
fig, ax = plt.subplots(figsize=(6, 3.5))
ax.plot(offsets, scores)
for t in (0.5, 0.75, 0.95):
    ax.axhline(t, color="gray", lw=0.6, ls=":")
ax.set_xlabel("uniform keypoint error [px]")
ax.set_ylabel("OKS")
ax.set_title("OKS falloff (whole skeleton drifting)")
fig.tight_layout()
fig.savefig(os.path.join(OUT, "05_oks_falloff.png"), dpi=120)

# per-keypoint tolerance: the same 6 px error costs the head far more than a hip
for name, idx in (("head", 0), ("r_wrist", 6), ("r_hip", 8)):
    pred = Skeleton2D(gt.coords.copy())
    pred.coords[idx] += [6.0, 0.0]
    print(f"6 px error on {name:9s}: per-keypoint OKS "
          f"{oks(pred, gt, cfg, keypoint_subset=[idx]):.3f} (k={cfg.k[idx]})")

# AP over the threshold ladder for a mixed batch of predictions
rng = np.random.default_rng(3)
pairs = []
for i in range(40):
    drift = rng.uniform(0, 18)
    pred = Skeleton2D(gt.coords + rng.normal(scale=drift, size=(14, 2)))
    confidence = 1.0 / (1.0 + drift)  # confident when close, as a model should be
    pairs.append((pred, gt, confidence))
rep = average_precision(pairs)
print(f"\nAP {rep['ap']:.1f}  AP50 {rep['ap50']:.1f}  AP75 {rep['ap75']:.1f}")
vals = [rep["per_threshold"][f"{t:.2f}"] for t in default_thresholds()]
fig, ax = plt.subplots(figsize=(6, 3.5))
ax.bar([f"{t:.2f}" for t in default_thresholds()], vals)
ax.set_xlabel("OKS threshold")
ax.set_ylabel("AP@t [%]")
ax.set_title("average precision across the threshold ladder")
fig.tight_layout()
fig.savefig(os.path.join(OUT, "05_ap_ladder.png"), dpi=120)
print(f"figures in {OUT}")
