"""Command-line pipeline: simulate, preprocess, train, infer, eval, render, ablate.

Exit codes: 0 success, 1 usage/configuration error, 2 data error,
3 numerical failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import shutil
import sys
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .dataset import WindowDataset, find_sequence_dirs
from .errors import DataError, NumericalError, RadarPoseError, UsageError
from .metrics import evaluate_keypoints, format_report
from .model import ModelConfig, build_model, load_checkpoint, save_checkpoint
from .preproc import (
    HeatmapDump,
    PreprocConfig,
    make_ra,
    make_rae,
    make_vrdae,
    read_map,
    write_map,
)
from .radar import RadarConfig, read_cube, synthesize_frame, write_cube
from .render import heatmap_png, skeleton_png
from .scenes import SCRIPT_NAMES, make_scene, project_to_camera, skeleton_positions
from .skeleton import Skeleton2D, load_gt_file, save_gt_file
from .train import TrainSettings, evaluate_model, infer_window, train_model

__all__ = ["RunConfig", "default_config_dict", "main"]


@dataclass(frozen=True)
class SimSettings:
    snr_db: Optional[float] = 20.0
    script: str = "wave_one_hand"
    duration: float = 1.0

    def to_dict(self):
        return dataclasses.asdict(self)


@dataclass(frozen=True)
class RunConfig:
    """One experiment: sensor, pre-processing, model, and training settings."""

    seed: int = 0
    radar: RadarConfig = field(default_factory=RadarConfig)
    preproc: PreprocConfig = field(default_factory=PreprocConfig)
    model: ModelConfig = field(default_factory=ModelConfig)
    train: TrainSettings = field(default_factory=TrainSettings)
    sim: SimSettings = field(default_factory=SimSettings)

    @classmethod
    def from_dict(cls, doc: dict) -> "RunConfig":
        sections = {"radar": RadarConfig, "preproc": PreprocConfig, "model": ModelConfig, "train": TrainSettings, "sim": SimSettings}
        unknown = set(doc) - set(sections) - {"seed"}
        if unknown:
            raise UsageError(f"unknown config keys: {sorted(unknown)}")
        kwargs = {"seed": int(doc.get("seed", 0))}
        for name, klass in sections.items():
            sub = doc.get(name, {})
            if not isinstance(sub, dict):
                raise UsageError(f"config section {name!r} must be an object")
            known = set(klass.__dataclass_fields__)
            bad = set(sub) - known
            if bad:
                raise UsageError(f"unknown keys in config section {name!r}: {sorted(bad)}")
            try:
                kwargs[name] = klass(**sub)
            except (ValueError, TypeError) as e:
                raise UsageError(f"invalid config section {name!r}: {e}") from e
        return cls(**kwargs)

    @classmethod
    def from_file(cls, path) -> "RunConfig":
        try:
            with open(path) as f:
                doc = json.load(f)
        except FileNotFoundError as e:
            raise UsageError(f"config file not found: {path}") from e
        except json.JSONDecodeError as e:
            raise UsageError(f"{path}: invalid JSON ({e})") from e
        return cls.from_dict(doc)


def default_config_dict() -> dict:
    cfg = RunConfig()
    return {
        "seed": cfg.seed,
        "radar": dataclasses.asdict(cfg.radar),
        "preproc": dataclasses.asdict(cfg.preproc),
        "model": cfg.model.to_dict(),
        "train": cfg.train.to_dict(),
        "sim": cfg.sim.to_dict(),
    }


def _load_config(args) -> RunConfig:
    return RunConfig.from_file(args.config) if args.config else RunConfig()


# ----------------------------------------------------------------------
# simulate


def cmd_simulate(args) -> int:
    cfg = _load_config(args)
    script = args.script or cfg.sim.script
    if script not in SCRIPT_NAMES:
        raise UsageError(f"unknown script {script!r}; choose from {', '.join(SCRIPT_NAMES)}")
    duration = args.duration if args.duration is not None else cfg.sim.duration
    if duration <= 0:
        raise UsageError("--duration must be positive")
    seed = args.seed if args.seed is not None else cfg.seed
    snr = cfg.sim.snr_db if args.snr is None else (None if args.snr.lower() in ("inf", "none") else float(args.snr))
    os.makedirs(args.out, exist_ok=True)
    scene = make_scene(script, duration)
    n_frames = int(round(duration * cfg.radar.fps))
    skeletons = []
    for fr in range(n_frames):
        for channel, suffix in (("horizontal", "h"), ("vertical", "v")):
            cube = synthesize_frame(cfg.radar, scene, fr, snr_db=snr, seed=seed, channel=channel)
            write_cube(os.path.join(args.out, f"frame_{fr:05d}_{suffix}.adc"), cube, dtype="f32")
        pos, _ = skeleton_positions(script, scene.motion_params, fr, cfg.radar.fps)
        skeletons.append(project_to_camera(pos))
    save_gt_file(os.path.join(args.out, "gt.json"), skeletons, fps=cfg.radar.fps)
    print(f"wrote {n_frames} frame pairs to {args.out}")
    return 0


# ----------------------------------------------------------------------
# preprocess

_MAKERS = {"ra": make_ra, "rae": make_rae, "vrdae": make_vrdae}


def _cube_seq_dirs(root) -> List[str]:
    root = str(root)
    if os.path.isfile(os.path.join(root, "gt.json")):
        return [root]
    dirs = sorted(
        os.path.join(root, d)
        for d in os.listdir(root)
        if os.path.isdir(os.path.join(root, d)) and os.path.isfile(os.path.join(root, d, "gt.json"))
    )
    if not dirs:
        raise DataError(f"{root}: no sequence directories found")
    return dirs


def _preprocess_dir(seq_dir, out_dir, mode: str, pcfg: PreprocConfig) -> int:
    os.makedirs(out_dir, exist_ok=True)
    maker = _MAKERS[mode]
    frames = sorted(f for f in os.listdir(seq_dir) if f.endswith("_h.adc"))
    if not frames:
        raise DataError(f"{seq_dir}: no frame_*_h.adc cubes")
    for fname in frames:
        for suffix in ("h", "v"):
            in_path = os.path.join(seq_dir, fname.replace("_h.adc", f"_{suffix}.adc"))
            try:
                cube = read_cube(in_path)
                m = maker(cube, pcfg)
            except ValueError as e:
                raise DataError(f"{in_path}: {e}") from e
            out_path = os.path.join(out_dir, fname.replace("_h.adc", f"_{suffix}.rmap"))
            write_map(out_path, m, dtype="f32")
    shutil.copyfile(os.path.join(seq_dir, "gt.json"), os.path.join(out_dir, "gt.json"))
    return len(frames)


def cmd_preprocess(args) -> int:
    cfg = _load_config(args)
    if args.mode not in _MAKERS:
        raise UsageError(f"unknown mode {args.mode!r}; choose from ra, rae, vrdae")
    ks = [int(v) for v in str(args.k).split(",")] if args.k else [cfg.preproc.k]
    seq_dirs = _cube_seq_dirs(args.in_dir)
    for k in ks:
        try:
            pcfg = dataclasses.replace(cfg.preproc, k=k)
        except ValueError as e:
            raise UsageError(str(e)) from e
        base = args.out if len(ks) == 1 else os.path.join(args.out, f"k{k}")
        for seq in seq_dirs:
            out_dir = base if len(seq_dirs) == 1 and os.path.isfile(os.path.join(args.in_dir, "gt.json")) else os.path.join(
                base, os.path.basename(os.path.normpath(seq))
            )
            n = _preprocess_dir(seq, out_dir, args.mode, pcfg)
            print(f"{seq}: {n} frames -> {out_dir} ({args.mode}, K={pcfg.k})")
    return 0


# ----------------------------------------------------------------------
# train / infer / eval


def _resolved_model_cfg(cfg: RunConfig, dataset: WindowDataset, steps_override=None, seed_override=None):
    model_cfg = cfg.model
    sample = dataset.sample(0)
    k, h, w = sample["maps_h"].shape[2], sample["maps_h"].shape[3], sample["maps_h"].shape[4]
    if (model_cfg.k, model_cfg.heatmap_h, model_cfg.heatmap_w) != (k, h, w):
        raise DataError(
            f"dataset maps have (K, H, W) = {(k, h, w)} but the model config expects "
            f"{(model_cfg.k, model_cfg.heatmap_h, model_cfg.heatmap_w)}"
        )
    if not isinstance(model_cfg.input_scale, tuple) and model_cfg.input_scale <= 0:
        model_cfg = dataclasses.replace(model_cfg, input_scale=dataset.suggest_input_scale())
    settings = cfg.train
    if steps_override is not None:
        settings = dataclasses.replace(settings, steps=steps_override)
    if seed_override is not None:
        settings = dataclasses.replace(settings, seed=seed_override)
    return model_cfg, settings


def cmd_train(args) -> int:
    cfg = _load_config(args)
    dataset = WindowDataset(
        args.data,
        cfg.model.n_frames,
        cfg.model.heatmap_h,
        cfg.model.heatmap_w,
        cfg.model.sigma,
    )
    model_cfg, settings = _resolved_model_cfg(cfg, dataset, args.steps, args.seed)
    model, records = train_model(dataset, model_cfg, settings)
    state = {**model.named_parameters(), **model.named_buffers()}
    state_arrays = {k: (v.data if hasattr(v, "data") else v) for k, v in state.items()}
    save_checkpoint(args.out, model_cfg, state_arrays, len(records))
    with open(args.out + ".losses.csv", "w") as f:
        for r in records:
            f.write(f"{r.epoch},{r.step},{r.loss!r}\n")
    print(f"trained {len(records)} steps; final loss {records[-1].loss:.4f}; checkpoint {args.out}")
    return 0


def _model_from_checkpoint(path):
    cfg, state, step = load_checkpoint(path)
    model = build_model(cfg, seed=0)
    model.load_state(state)
    model.eval()
    return model, cfg, step


def cmd_infer(args) -> int:
    model, cfg, _ = _model_from_checkpoint(args.checkpoint)
    dataset = WindowDataset(args.data, cfg.n_frames, cfg.heatmap_h, cfg.heatmap_w, cfg.sigma)
    os.makedirs(args.out, exist_ok=True)
    per_seq: Dict[str, List[dict]] = {}
    for i in range(0, len(dataset), max(1, args.stride)):
        s = dataset.sample(i)
        seq_path, _, center = dataset.window_info(i)
        heat, sk, conf = infer_window(model, s["maps_h"], s["maps_v"])
        name = os.path.basename(os.path.normpath(seq_path))
        per_seq.setdefault(name, []).append(
            {
                "frame": center,
                "keypoints": [[float(x), float(y), float(c)] for (x, y), c in zip(sk.coords, conf)],
            }
        )
        if args.dump_heatmaps:
            dump = HeatmapDump(heat.astype(np.float32), center)
            write_map(os.path.join(args.out, f"{name}_frame_{center:05d}_pred.rmap"), dump, dtype="f32")
    for name, frames in per_seq.items():
        with open(os.path.join(args.out, f"pred_{name}.json"), "w") as f:
            json.dump({"frames": frames}, f, sort_keys=True, separators=(",", ":"))
    print(f"wrote predictions for {len(per_seq)} sequences to {args.out}")
    return 0


def _load_predictions(path) -> Dict[str, List[dict]]:
    """pred_<seq>.json files from a directory (or one file) -> frames by sequence."""
    if os.path.isfile(path):
        files = [path]
    else:
        files = sorted(
            os.path.join(path, f) for f in os.listdir(path) if f.startswith("pred_") and f.endswith(".json")
        )
    if not files:
        raise DataError(f"{path}: no pred_*.json files")
    out = {}
    for fp in files:
        name = os.path.basename(fp)[len("pred_") : -len(".json")]
        with open(fp) as f:
            doc = json.load(f)
        out[name] = doc["frames"]
    return out


def cmd_eval(args) -> int:
    preds = _load_predictions(args.pred)
    pairs = []
    for seq_name, frames in preds.items():
        gt_path = os.path.join(args.data, seq_name, "gt.json")
        if not os.path.isfile(gt_path):
            gt_path = os.path.join(args.data, "gt.json")
        gts = load_gt_file(gt_path)
        for entry in frames:
            fr = entry["frame"]
            if fr >= len(gts):
                raise DataError(f"prediction for frame {fr} but ground truth has {len(gts)} frames")
            kps = np.array(entry["keypoints"], dtype=np.float64)
            if kps.shape != (14, 3):
                raise DataError(f"prediction frame {fr}: expected 14 x (x, y, conf)")
            pred_sk = Skeleton2D(kps[:, :2])
            pairs.append((pred_sk, gts[fr], float(kps[:, 2].mean())))
    report = evaluate_keypoints(pairs)
    if args.out:
        with open(args.out, "w") as f:
            json.dump(report, f, indent=2, sort_keys=True)
    print(format_report(report))
    return 0


# ----------------------------------------------------------------------
# render


def cmd_render(args) -> int:
    os.makedirs(args.out, exist_ok=True)
    stem = os.path.splitext(os.path.basename(args.input))[0]
    if args.input.endswith(".rmap"):
        m = read_map(args.input)
        if not isinstance(m, HeatmapDump):
            raise UsageError("render expects a heatmap .rmap (kind 3) or a keypoint .json")
        out = os.path.join(args.out, f"{stem}.png")
        heatmap_png(m.data, out, channel=args.channel)
        print(f"wrote {out}")
        return 0
    if args.input.endswith(".json"):
        with open(args.input) as f:
            doc = json.load(f)
        if "frames" not in doc:
            raise DataError(f"{args.input}: missing 'frames'")
        wanted = None if args.frame is None else int(args.frame)
        n = 0
        for entry in doc["frames"]:
            if wanted is not None and entry["frame"] != wanted:
                continue
            kps = np.array(entry["keypoints"], dtype=np.float64)
            sk = Skeleton2D(kps[:, :2], kps[:, 2] > 0 if kps.shape[1] > 2 else None)
            out = os.path.join(args.out, f"{stem}_frame_{entry['frame']:05d}.png")
            skeleton_png([sk], out)
            n += 1
        print(f"wrote {n} skeleton images to {args.out}")
        return 0
    raise UsageError("render input must be a .rmap heatmap or a keypoint .json")


# ----------------------------------------------------------------------
# ablate


def _variant_grid() -> List[Tuple[str, dict]]:
    return [
        ("baseline", {"use_cross": False, "use_self": False, "use_prgcn": False}),
        ("CA", {"use_cross": True, "use_self": False, "use_prgcn": False}),
        ("SA", {"use_cross": False, "use_self": True, "use_prgcn": False}),
        ("CSAM", {"use_cross": True, "use_self": True, "use_prgcn": False}),
        ("CSAM+PRGCN", {"use_cross": True, "use_self": True, "use_prgcn": True}),
    ]


def _ablate_train_eval(pre_root, cfg: RunConfig, flags: dict, steps: int) -> dict:
    dataset = WindowDataset(pre_root, cfg.model.n_frames, cfg.model.heatmap_h, cfg.model.heatmap_w, cfg.model.sigma)
    k = dataset.sample(0)["maps_h"].shape[2]
    model_cfg = dataclasses.replace(cfg.model, k=k, **flags)
    run_cfg = dataclasses.replace(cfg, model=model_cfg)
    model_cfg, settings = _resolved_model_cfg(run_cfg, dataset, steps_override=steps, seed_override=cfg.seed)
    n_seq = len(dataset.sequences)
    n_eval_seq = max(1, n_seq // 5) if n_seq > 1 else 0
    train_idx, eval_idx = [], []
    for i in range(len(dataset)):
        seq_path, _, _ = dataset.window_info(i)
        si = [s.path for s in dataset.sequences].index(seq_path)
        (eval_idx if si >= n_seq - n_eval_seq else train_idx).append(i)
    if not eval_idx:
        eval_idx = train_idx  # single-sequence smoke runs evaluate in-sample
    model, _ = train_model(dataset, model_cfg, settings, indices=train_idx)
    report = evaluate_model(model, dataset, indices=eval_idx, stride=max(1, len(eval_idx) // 64))
    dataset.drop_cache()
    return report


def cmd_ablate(args) -> int:
    cfg = _load_config(args)
    steps = args.steps if args.steps is not None else cfg.train.steps
    work = args.work or (args.out + ".work")
    os.makedirs(work, exist_ok=True)
    seq_dirs = _cube_seq_dirs(args.data)

    def preprocess_to(mode: str, k: int) -> str:
        root = os.path.join(work, f"{mode}_k{k}")
        if not os.path.isdir(root):
            pcfg = dataclasses.replace(cfg.preproc, k=k)
            for seq in seq_dirs:
                _preprocess_dir(seq, os.path.join(root, os.path.basename(os.path.normpath(seq))), mode, pcfg)
        return root

    lines = []
    lines.append("== model variants (VRDAEMap, K=%d) ==" % cfg.preproc.k)
    vr_root = preprocess_to("vrdae", cfg.preproc.k)
    for name, flags in _variant_grid():
        rep = _ablate_train_eval(vr_root, cfg, flags, steps)
        lines.append(f"{name:>12s}: AP {rep['ap']:5.1f}  AP50 {rep['ap50']:5.1f}  AP75 {rep['ap75']:5.1f}")
        print(lines[-1])
    lines.append("")
    lines.append("== pre-processing comparison (CSAM+PRGCN) ==")
    full = {"use_cross": True, "use_self": True, "use_prgcn": True}
    for mode in ("rae", "vrdae"):
        rep = _ablate_train_eval(preprocess_to(mode, cfg.preproc.k), cfg, full, steps)
        lines.append(f"{mode:>12s}: AP {rep['ap']:5.1f}  AP50 {rep['ap50']:5.1f}  AP75 {rep['ap75']:5.1f}")
        print(lines[-1])
    lines.append("")
    lines.append("== velocity range sweep (VRDAEMap, CSAM+PRGCN) ==")
    probe_frame = sorted(f for f in os.listdir(seq_dirs[0]) if f.endswith("_h.adc"))[0]
    n_chirps = read_cube(os.path.join(seq_dirs[0], probe_frame)).data.shape[1]
    for k in (2, 4, 8, 16):
        if k > n_chirps:
            lines.append(f"{'K=' + str(k):>12s}: skipped (only {n_chirps} chirps per frame)")
            print(lines[-1])
            continue
        rep = _ablate_train_eval(preprocess_to("vrdae", k), cfg, full, steps)
        lines.append(f"{'K=' + str(k):>12s}: AP {rep['ap']:5.1f}  AP50 {rep['ap50']:5.1f}  AP75 {rep['ap75']:5.1f}")
        print(lines[-1])
    with open(args.out, "w") as f:
        f.write("\n".join(lines) + "\n")
    print(f"wrote {args.out}")
    return 0


# ----------------------------------------------------------------------
# argument parsing


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _build_parser() -> _Parser:
    p = _Parser(prog="radarpose", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("simulate", help="synthesize a radar sequence from a motion script")
    sp.add_argument("--config")
    sp.add_argument("--script", help=f"one of: {', '.join(SCRIPT_NAMES)}")
    sp.add_argument("--duration", type=float)
    sp.add_argument("--seed", type=int)
    sp.add_argument("--snr", help="noise SNR in dB, or 'inf' for noiseless")
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("preprocess", help="turn raw cubes into network input maps")
    sp.add_argument("--config")
    sp.add_argument("--in", dest="in_dir", required=True)
    sp.add_argument("--mode", required=True, help="ra, rae, or vrdae")
    sp.add_argument("--k", help="velocity bins; a comma list sweeps K")
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=cmd_preprocess)

    sp = sub.add_parser("train", help="train the pose network on preprocessed maps")
    sp.add_argument("--config")
    sp.add_argument("--data", required=True)
    sp.add_argument("--steps", type=int)
    sp.add_argument("--seed", type=int)
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=cmd_train)

    sp = sub.add_parser("infer", help="predict keypoints with a trained checkpoint")
    sp.add_argument("--checkpoint", required=True)
    sp.add_argument("--data", required=True)
    sp.add_argument("--stride", type=int, default=1)
    sp.add_argument("--dump-heatmaps", action="store_true")
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=cmd_infer)

    sp = sub.add_parser("eval", help="score predictions against ground truth")
    sp.add_argument("--pred", required=True)
    sp.add_argument("--data", required=True, help="preprocessed root holding gt.json files")
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_eval)

    sp = sub.add_parser("render", help="write heatmap or skeleton PNGs")
    sp.add_argument("--input", required=True)
    sp.add_argument("--frame", type=int)
    sp.add_argument("--channel", type=int)
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=cmd_render)

    sp = sub.add_parser("ablate", help="train and score the ablation grid")
    sp.add_argument("--config")
    sp.add_argument("--data", required=True, help="directory of simulated sequences (.adc)")
    sp.add_argument("--steps", type=int)
    sp.add_argument("--work", help="scratch directory for preprocessed variants")
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=cmd_ablate)

    sp = sub.add_parser("defaults", help="print the full default configuration")
    sp.set_defaults(func=lambda args: print(json.dumps(default_config_dict(), indent=2, sort_keys=True)) or 0)
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args) or 0
    except UsageError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except ValueError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except DataError as e:
        print(f"data error: {e}", file=sys.stderr)
        return 2
    except NumericalError as e:
        print(f"numerical failure: {e}", file=sys.stderr)
        return 3
    except FileNotFoundError as e:
        print(f"data error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
