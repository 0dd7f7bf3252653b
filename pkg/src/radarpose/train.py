"""Training loop, inference, and model-level evaluation."""

from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .dataset import WindowDataset
from .errors import NumericalError
from .metrics import OksConfig, evaluate_keypoints
from .model import ModelConfig, PoseNet, build_model, pose_loss
from .optim import Adam
from .skeleton import Skeleton2D, extract_keypoints
from .tensor import no_grad

__all__ = ["TrainSettings", "LossRecord", "train_model", "infer_window", "evaluate_model"]


@dataclass(frozen=True)
class TrainSettings:
    steps: int = 500
    batch_size: int = 4
    lr: float = 1e-4
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    weight_decay: float = 1e-4
    lr_decay: float = 0.999
    lr_decay_every: int = 2000
    seed: int = 0

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class LossRecord:
    epoch: int
    step: int
    loss: float


class _BatchSampler:
    """Deterministic shuffled batches, reshuffling at each epoch boundary."""

    def __init__(self, n: int, batch_size: int, seed: int):
        self.n = n
        self.batch_size = min(batch_size, n)
        self.rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(entropy=seed, spawn_key=(13,))))
        self.epoch = -1
        self._queue: List[int] = []

    def next_batch(self) -> List[int]:
        if len(self._queue) < self.batch_size:
            self._queue = list(self.rng.permutation(self.n))
            self.epoch += 1
        out, self._queue = self._queue[: self.batch_size], self._queue[self.batch_size :]
        return out


def train_model(
    dataset: WindowDataset,
    cfg: ModelConfig,
    settings: TrainSettings,
    stop_loss: Optional[float] = None,
    indices: Optional[Sequence[int]] = None,
) -> Tuple[PoseNet, List[LossRecord]]:
    """Train a model on the dataset's windows.

    Args:
        dataset: window source.
        cfg: architecture config (``input_scale`` should already be resolved).
        settings: optimization settings; ``settings.seed`` drives both the
            weight init and the batch order, so equal seeds give bitwise
            equal checkpoints.
        stop_loss: optional early-stop threshold on the per-step loss.
        indices: restrict training to these window indices (defaults to all).

    Raises:
        NumericalError: if a non-finite loss appears.
    """
    model = build_model(cfg, settings.seed)
    model.train(True)
    opt = Adam(
        model.named_parameters(),
        lr=settings.lr,
        beta1=settings.beta1,
        beta2=settings.beta2,
        eps=settings.eps,
        weight_decay=settings.weight_decay,
        lr_decay=settings.lr_decay,
        lr_decay_every=settings.lr_decay_every,
    )
    pool = list(range(len(dataset))) if indices is None else list(indices)
    sampler = _BatchSampler(len(pool), settings.batch_size, settings.seed)
    records: List[LossRecord] = []
    for step in range(settings.steps):
        picks = [pool[j] for j in sampler.next_batch()]
        batch = dataset.batch(picks)
        b_hat, b, _ = model.forward(batch["maps_h"], batch["maps_v"])
        loss = pose_loss(b_hat, b, batch["target"], cfg.alpha, batch["visibility"])
        value = float(loss.data)
        if not np.isfinite(value):
            raise NumericalError(f"non-finite loss {value} at step {step}")
        opt.zero_grad()
        loss.backward()
        opt.step()
        records.append(LossRecord(epoch=sampler.epoch, step=step, loss=value))
        if stop_loss is not None and value <= stop_loss:
            break
    model.eval()
    return model, records


def infer_window(model: PoseNet, maps_h: np.ndarray, maps_v: np.ndarray):
    """Run the network on one window pair (no batch axis).

    Returns (final heatmaps (C, H, W), Skeleton2D, per-keypoint confidences).
    The refined heatmaps are used when the refinement stage is enabled.
    """
    if maps_h.ndim != 6 or maps_v.ndim != 6:
        raise ValueError("infer_window expects (N, 2, K, H, W, E) windows")
    if maps_h.shape[0] != model.cfg.n_frames:
        raise ValueError(f"window length {maps_h.shape[0]} does not match N={model.cfg.n_frames}")
    was_training = model.training
    model.eval()
    try:
        with no_grad():
            b_hat, b, _ = model.forward(maps_h[None], maps_v[None])
    finally:
        model.train(was_training)
    final = (b if b is not None else b_hat).data[0]
    sk, conf = extract_keypoints(final)
    return final, sk, conf


def evaluate_model(
    model: PoseNet,
    dataset: WindowDataset,
    indices: Optional[Sequence[int]] = None,
    stride: int = 1,
    oks_cfg: Optional[OksConfig] = None,
) -> Dict:
    """OKS/AP report over dataset windows; frames ranked by mean confidence."""
    idxs = list(range(len(dataset))) if indices is None else list(indices)
    idxs = idxs[::stride]
    pairs = []
    for i in idxs:
        s = dataset.sample(i)
        _, sk, conf = infer_window(model, s["maps_h"], s["maps_v"])
        pairs.append((sk, s["skeleton"], float(conf.mean())))
    return evaluate_keypoints(pairs, oks_cfg)
