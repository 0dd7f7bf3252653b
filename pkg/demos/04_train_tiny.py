"""End-to-end miniature run: simulate, preprocess, train, infer, score.

Uses a shrunken radar (32 ADC samples, 8 chirps) and a small network so the
whole loop takes about a minute on a laptop core. Outputs: an AP report on
held-out frames and a side-by-side PNG of predicted and true skeletons.

Run:  python demos/04_train_tiny.py
"""

import os
import time

import numpy as np

from radarpose.dataset import WindowDataset
from radarpose.model import ModelConfig
from radarpose.preproc import PreprocConfig, make_vrdae, write_map
from radarpose.radar import RadarConfig, synthesize_frame
from radarpose.render import skeleton_png
from radarpose.scenes import make_scene, project_to_camera, skeleton_positions
from radarpose.skeleton import save_gt_file
from radarpose.train import TrainSettings, evaluate_model, infer_window, train_model
from radarpose.metrics import format_report

OUT = os.path.join(os.path.dirname(__file__), "out")
DATA = os.path.join(OUT, "tiny_data")
os.makedirs(OUT, exist_ok=True)

rcfg = RadarConfig(n_adc=32, n_chirps=8, range_resolution=0.2)
pcfg = PreprocConfig(start_bin=8, length=16, az_pad=16, el_pad=4, k=4)

t0 = time.time()
if not os.path.isdir(DATA):
    for s, script in enumerate(["wave_one_hand", "walk_wave", "wave_two_hands"]):
        seq = os.path.join(DATA, f"seq_{s:04d}")
        os.makedirs(seq)
        scene = make_scene(script, 6.0)
        sks = []
        for fr in range(60):
            for ch, suf in (("horizontal", "h"), ("vertical", "v")):
                cube = synthesize_frame(rcfg, scene, fr, snr_db=25.0, seed=s, channel=ch)
                write_map(os.path.join(seq, f"frame_{fr:05d}_{suf}.rmap"), make_vrdae(cube, pcfg))
            pos, _ = skeleton_positions(script, None, fr, rcfg.fps)
            sks.append(project_to_camera(pos))
        save_gt_file(os.path.join(seq, "gt.json"), sks, fps=rcfg.fps)
    print(f"simulated + preprocessed 3 sequences in {time.time()-t0:.0f}s")

ds = WindowDataset(DATA, n_frames=4, heatmap_h=16, heatmap_w=16, sigma=1.5)
cfg = ModelConfig(
    n_frames=4, k=4, stem_channels=8, scales=2, heatmap_h=16, heatmap_w=16,
    sigma=1.5, input_scale=ds.suggest_input_scale(),
)
# hold out the last sequence
paths = [s.path for s in ds.sequences]
train_idx = [i for i in range(len(ds)) if paths.index(ds.window_info(i)[0]) < 2]
eval_idx = [i for i in range(len(ds)) if i not in set(train_idx)]

t0 = time.time()
model, records = train_model(ds, cfg, TrainSettings(steps=150, batch_size=4, lr=5e-4, seed=0), indices=train_idx)
print(f"trained 150 steps in {time.time()-t0:.0f}s; "
      f"loss {records[0].loss:.0f} -> {records[-1].loss:.0f}")

report = evaluate_model(model, ds, indices=eval_idx, stride=2)
print("held-out sequence report:")
print(format_report(report))

s = ds.sample(eval_idx[len(eval_idx) // 2])
_, pred_sk, conf = infer_window(model, s["maps_h"], s["maps_v"])
png = os.path.join(OUT, "04_pred_vs_gt.png")
skeleton_png([s["skeleton"], pred_sk], png, colors=["white", "orange"])
print(f"white = ground truth, orange = prediction: {png}")
