"""The radar-to-pose network and its training objective.

Two radar branches (horizontal and vertical) share an architecture but not
weights: an elevation-averaging velocity-fusion stem produces per-frame
feature maps, a multi-scale spatio-temporal 3D-conv encoder summarizes the
frame window at each scale, cross-/self-attention fuses the branches per
scale, and a coarse-to-fine 2D decoder emits keypoint heatmaps that a
graph-convolutional refinement stage propagates over the skeleton.
"""

from __future__ import annotations

import json
import struct
from dataclasses import asdict, dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from . import tensor as T
from .errors import DataError
from .layers import BasicBlock2d, BasicBlock3d, Conv2d, Conv3d, Module
from .skeleton import adjacency
from .tensor import Tensor, _make

__all__ = [
    "ModelConfig",
    "Stem",
    "EncoderBranch",
    "CSAM",
    "Decoder",
    "PRGCN",
    "PoseNet",
    "build_model",
    "bce_sum",
    "pose_loss",
    "save_checkpoint",
    "load_checkpoint",
]

CKPT_MAGIC = b"HUPRCKPT"
CKPT_VERSION = 1


@dataclass(frozen=True)
class ModelConfig:
    """Architecture hyper-parameters; defaults follow the full-scale profile."""

    n_frames: int = 8  # N: input window length
    k: int = 8  # velocity bins of the input maps
    stem_channels: int = 32  # D
    scales: int = 3  # S
    n_keypoints: int = 14
    heatmap_h: int = 64
    heatmap_w: int = 64
    alpha: float = 1.0
    sigma: float = 2.0  # GT heatmap std in heatmap pixels
    use_cross: bool = True
    use_self: bool = True
    use_prgcn: bool = True
    bias: bool = True
    dtype: str = "f32"
    # scalar, or one value per velocity bin; 0 means "derive from the data"
    input_scale: object = 0.0

    def __post_init__(self):
        if isinstance(self.input_scale, (list, tuple, np.ndarray)):
            scale = tuple(float(v) for v in self.input_scale)
            if len(scale) != self.k:
                raise ValueError(f"input_scale has {len(scale)} entries but k={self.k}")
            if any(v <= 0 for v in scale):
                raise ValueError("per-bin input_scale entries must be positive")
            object.__setattr__(self, "input_scale", scale)
        else:
            object.__setattr__(self, "input_scale", float(self.input_scale))
        if self.n_keypoints != 14:
            raise ValueError("the pose head is defined for exactly 14 keypoints")
        if self.scales < 1:
            raise ValueError("need at least one scale")
        down = 2 ** (self.scales - 1)
        if self.n_frames % down != 0:
            raise ValueError(f"n_frames={self.n_frames} must be divisible by 2^(scales-1)={down}")
        if self.k < 2 or self.k % 2 != 0:
            raise ValueError("k must be even and at least 2")
        if (self.heatmap_h * self.heatmap_w) % 4 != 0:
            raise ValueError("heatmap area must be divisible by 4")
        if self.heatmap_h % down != 0 or self.heatmap_w % down != 0:
            raise ValueError("heatmap size must be divisible by the total spatial downsampling")
        if self.dtype not in ("f32", "f64"):
            raise ValueError("dtype must be 'f32' or 'f64'")

    @property
    def np_dtype(self):
        return np.float32 if self.dtype == "f32" else np.float64

    @property
    def center_index(self) -> int:
        """Window index whose ground truth the network predicts."""
        return self.n_frames // 2

    def scale_channels(self, i: int) -> int:
        return 2**i * self.stem_channels

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "ModelConfig":
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown ModelConfig keys: {sorted(unknown)}")
        return cls(**d)


class Stem(Module):
    """Velocity-fusion stem: elevation average, then convolution + max
    pooling along the velocity axis down to one per-frame feature map."""

    def __init__(self, cfg: ModelConfig, *, rng):
        super().__init__()
        self.k = cfg.k
        k_half = cfg.k // 2
        pad_lo = (k_half - 1) // 2
        pad_hi = (k_half - 1) - pad_lo
        dt = cfg.np_dtype
        self.conv1 = Conv3d(
            2, cfg.stem_channels, (k_half, 1, 1), padding=((pad_lo, pad_hi), 0, 0), bias=cfg.bias, rng=rng, dtype=dt
        )
        self.conv2 = Conv3d(cfg.stem_channels, cfg.stem_channels, (2, 1, 1), bias=cfg.bias, rng=rng, dtype=dt)

    def forward(self, x: np.ndarray) -> Tensor:
        """(B, N, 2, K, H, W) array of elevation-averaged maps -> (B, D, N, H, W)."""
        b, n = x.shape[0], x.shape[1]
        t = Tensor(x.reshape((b * n,) + x.shape[2:]))
        # pool before the clamp (pointwise identical to relu-then-pool, but
        # the pooled pre-activations have no tied zero plateaus)
        y = T.maxpool(self.conv1.forward(t), axis=2, window=self.k // 2, stride=self.k // 2)
        y = T.relu(y)
        y = self.conv2.forward(y)  # velocity axis collapsed to 1; linear tail,
        # the encoder blocks that consume this begin with conv + norm + relu
        y = T.reshape(y, (b, n) + (y.shape[1], y.shape[3], y.shape[4]))
        return T.transpose(y, (0, 2, 1, 3, 4))


class EncoderBranch(Module):
    """Multi-scale spatio-temporal encoder for one radar branch.

    Scale 1 keeps full resolution; each later scale halves time and space
    and doubles channels. Every scale also emits a 2D snapshot through a
    temporal-collapse convolution spanning the remaining frames.
    """

    def __init__(self, cfg: ModelConfig, *, rng):
        super().__init__()
        self.cfg = cfg
        dt = cfg.np_dtype
        c_prev = cfg.stem_channels
        t_i = cfg.n_frames
        for i in range(1, cfg.scales + 1):
            c_i = cfg.scale_channels(i)
            stride = 1 if i == 1 else 2
            t_i = t_i if i == 1 else t_i // 2
            setattr(self, f"scale{i}_block1", BasicBlock3d(c_prev, c_i, stride=stride, bias=cfg.bias, rng=rng, dtype=dt))
            setattr(self, f"scale{i}_block2", BasicBlock3d(c_i, c_i, stride=1, bias=cfg.bias, rng=rng, dtype=dt))
            setattr(self, f"scale{i}_collapse", Conv3d(c_i, c_i, (t_i, 1, 1), bias=cfg.bias, rng=rng, dtype=dt))
            c_prev = c_i

    def forward(self, x: Tensor) -> List[Tensor]:
        outs = []
        for i in range(1, self.cfg.scales + 1):
            x = getattr(self, f"scale{i}_block1").forward(x)
            x = getattr(self, f"scale{i}_block2").forward(x)
            f = getattr(self, f"scale{i}_collapse").forward(x)  # (B, C, 1, h, w)
            outs.append(T.reshape(f, (f.shape[0], f.shape[1], f.shape[3], f.shape[4])))
        return outs


class CSAM(Module):
    """Cross- and self-attention between the two radar branches at one scale.

    Cross-attention uses one branch's projected features as queries against
    the other's keys/values and adds the result back to the reference
    branch (residual); self-attention uses a single branch for all three
    and is emitted without a residual. The active outputs are concatenated
    along channels.
    """

    def __init__(self, ch: int, use_cross: bool, use_self: bool, bias: bool, *, rng, dtype):
        super().__init__()
        self.ch = ch
        self.use_cross = use_cross
        self.use_self = use_self
        d = ch // 2
        self.proj_dim = d
        if use_cross or use_self:
            for branch in ("h", "v"):
                setattr(self, f"q_{branch}", Conv2d(ch, d, 1, bias=bias, rng=rng, dtype=dtype))
                setattr(self, f"k_{branch}", Conv2d(ch, d, 1, bias=bias, rng=rng, dtype=dtype))
                setattr(self, f"v_{branch}", Conv2d(ch, d, 1, bias=bias, rng=rng, dtype=dtype))
        if use_cross:
            self.cross_out_h = Conv2d(d, ch, 1, bias=bias, rng=rng, dtype=dtype)
            self.cross_out_v = Conv2d(d, ch, 1, bias=bias, rng=rng, dtype=dtype)
        if use_self:
            self.self_out_h = Conv2d(d, ch, 1, bias=bias, rng=rng, dtype=dtype)
            self.self_out_v = Conv2d(d, ch, 1, bias=bias, rng=rng, dtype=dtype)

    @staticmethod
    def _flatten(x: Tensor) -> Tensor:
        b, c, h, w = x.shape
        return T.transpose(T.reshape(x, (b, c, h * w)), (0, 2, 1))  # (B, hw, c)

    @staticmethod
    def _unflatten(x: Tensor, h: int, w: int) -> Tensor:
        b, hw, c = x.shape
        return T.reshape(T.transpose(x, (0, 2, 1)), (b, c, h, w))

    def _attend(self, q: Tensor, k: Tensor, v: Tensor) -> Tensor:
        scale = 1.0 / np.sqrt(self.proj_dim)
        scores = T.matmul(q, T.transpose(k, (0, 2, 1))) * scale
        attn = T.softmax(scores, axis=-1)  # rows sum to 1
        return T.matmul(attn, v)

    def attention_map(self, f_query: Tensor, f_ref: Tensor, query_branch: str) -> np.ndarray:
        """The (hw x hw) row-softmax map, for inspection and tests."""
        q = self._flatten(getattr(self, f"q_{query_branch}").forward(f_query))
        ref_branch = "v" if query_branch == "h" else "h"
        k = self._flatten(getattr(self, f"k_{ref_branch}").forward(f_ref))
        scores = T.matmul(q, T.transpose(k, (0, 2, 1))) * (1.0 / np.sqrt(self.proj_dim))
        return T.softmax(scores, axis=-1).data

    def forward(self, fh: Tensor, fv: Tensor) -> Tensor:
        if fh.shape != fv.shape:
            raise ValueError(f"branch features disagree: {fh.shape} vs {fv.shape}")
        parts: List[Tensor] = []
        h, w = fh.shape[2], fh.shape[3]
        if self.use_cross or self.use_self:
            q_h = self._flatten(self.q_h.forward(fh))
            k_h = self._flatten(self.k_h.forward(fh))
            v_h = self._flatten(self.v_h.forward(fh))
            q_v = self._flatten(self.q_v.forward(fv))
            k_v = self._flatten(self.k_v.forward(fv))
            v_v = self._flatten(self.v_v.forward(fv))
        if self.use_cross:
            # vertical queries attend over horizontal keys/values, updating h
            att_h = self.cross_out_h.forward(self._unflatten(self._attend(q_v, k_h, v_h), h, w))
            att_v = self.cross_out_v.forward(self._unflatten(self._attend(q_h, k_v, v_v), h, w))
            parts.append(fh + att_h)
            parts.append(fv + att_v)
        if self.use_self:
            s_h = self.self_out_h.forward(self._unflatten(self._attend(q_h, k_h, v_h), h, w))
            s_v = self.self_out_v.forward(self._unflatten(self._attend(q_v, k_v, v_v), h, w))
            parts.append(s_h)  # no residual on the self-attended path
            parts.append(s_v)
        if not parts:
            parts = [fh, fv]
        return T.concat(parts, axis=1)

    @property
    def out_channels(self) -> int:
        n = 0
        n += 2 if self.use_cross else 0
        n += 2 if self.use_self else 0
        return max(n, 2) * self.ch


class Decoder(Module):
    """Coarse-to-fine heatmap decoder: nearest upsampling, concat merge,
    PReLU conv blocks without batch norm, and a final 1x1 projection."""

    def __init__(self, cfg: ModelConfig, fused_channels: Sequence[int], *, rng):
        super().__init__()
        self.cfg = cfg
        dt = cfg.np_dtype
        s = cfg.scales
        width = cfg.scale_channels(s)
        setattr(self, f"block{s}_1", BasicBlock2d(fused_channels[s - 1], width, bias=cfg.bias, rng=rng, dtype=dt))
        setattr(self, f"block{s}_2", BasicBlock2d(width, width, bias=cfg.bias, rng=rng, dtype=dt))
        for i in range(s - 1, 0, -1):
            c_in = width + fused_channels[i - 1]
            width = cfg.scale_channels(i)
            setattr(self, f"block{i}_1", BasicBlock2d(c_in, width, bias=cfg.bias, rng=rng, dtype=dt))
            setattr(self, f"block{i}_2", BasicBlock2d(width, width, bias=cfg.bias, rng=rng, dtype=dt))
        self.head = Conv2d(width, cfg.n_keypoints, 1, bias=cfg.bias, rng=rng, dtype=dt)

    def forward(self, fused: Sequence[Tensor]) -> Tensor:
        s = self.cfg.scales
        x = getattr(self, f"block{s}_1").forward(fused[s - 1])
        x = getattr(self, f"block{s}_2").forward(x)
        for i in range(s - 1, 0, -1):
            x = T.upsample_nearest2d(x, 2)
            x = T.concat([x, fused[i - 1]], axis=1)
            x = getattr(self, f"block{i}_1").forward(x)
            x = getattr(self, f"block{i}_2").forward(x)
        return self.head.forward(x)  # logits f_bar, (B, C, H, W)


# ----------------------------------------------------------------------
# graph refinement


def _graph_aggregate(x: Tensor, nbr_idx: np.ndarray, nbr_mask: np.ndarray) -> Tensor:
    """(A + I) @ x for a 0/1 adjacency, summing neighbors in ascending value
    order so that relabeling the nodes permutes the output bitwise."""

    def agg(arr: np.ndarray) -> np.ndarray:
        g = arr[:, nbr_idx, :] * nbr_mask[None, :, :, None].astype(arr.dtype)
        g = np.sort(g, axis=2)
        return g.sum(axis=2)

    out_data = agg(x.data)

    def backward(g):
        if x.requires_grad:
            x.accumulate_grad(agg(g))  # A + I is symmetric

    return _make(out_data, (x,), backward, "graph_aggregate")


def _rowwise_matmul(x: Tensor, w: Tensor) -> Tensor:
    """x[b, c] @ w computed row by row with an identical kernel per row
    (keeps node relabelings bitwise-exact)."""
    b, c, f = x.shape
    out_data = np.empty((b, c, w.shape[1]), dtype=x.data.dtype)
    for bi in range(b):
        for ci in range(c):
            out_data[bi, ci] = x.data[bi, ci] @ w.data

    def backward(g):
        if x.requires_grad:
            x.accumulate_grad(g @ w.data.T)
        if w.requires_grad:
            w.accumulate_grad(np.einsum("bcf,bcg->fg", x.data, g))

    return _make(out_data, (x, w), backward, "rowwise_matmul")


class PRGCN(Module):
    """Three propagation layers over the skeleton graph applied to
    downscaled, flattened heatmap logits; sigmoid on the last layer."""

    def __init__(self, n_nodes: int, h: int, w: int, adj: np.ndarray, *, rng, dtype):
        super().__init__()
        adj = np.asarray(adj, dtype=np.float64)
        if adj.shape != (n_nodes, n_nodes):
            raise ValueError(f"adjacency must be {n_nodes}x{n_nodes}, got {adj.shape}")
        if not np.array_equal(adj, adj.T):
            raise ValueError("adjacency must be symmetric")
        if np.any(np.diag(adj) != 0) or not np.isin(adj, (0.0, 1.0)).all():
            raise ValueError("adjacency must be 0/1 with zero diagonal")
        if h % 2 or w % 2:
            raise ValueError("heatmap size must be even for the 2x downscale")
        self.h, self.w = h, w
        feat = (h // 2) * (w // 2)
        a_hat = adj + np.eye(n_nodes)
        max_deg = int(a_hat.sum(axis=1).max())
        idx = np.zeros((n_nodes, max_deg), dtype=np.int64)
        mask = np.zeros((n_nodes, max_deg))
        for i in range(n_nodes):
            nbrs = np.flatnonzero(a_hat[i])
            idx[i, : len(nbrs)] = nbrs
            mask[i, : len(nbrs)] = 1.0
        self._nbr_idx = idx
        self._nbr_mask = mask
        # no degree normalization on A + I; compensate in the init scale
        bound = 1.0 / (np.sqrt(feat) * max_deg)
        self.w1 = Tensor(rng.uniform(-bound, bound, (feat, feat)).astype(dtype), requires_grad=True)
        self.w2 = Tensor(rng.uniform(-bound, bound, (feat, feat)).astype(dtype), requires_grad=True)
        self.w3 = Tensor(rng.uniform(-bound, bound, (feat, feat)).astype(dtype), requires_grad=True)

    def forward(self, f_bar: Tensor) -> Tensor:
        b, c, h, w = f_bar.shape
        if (h, w) != (self.h, self.w):
            raise ValueError(f"expected {self.h}x{self.w} heatmaps, got {h}x{w}")
        x = T.reshape(f_bar, (b, c, h // 2, 2, w // 2, 2))
        x = T.tmean(x, axis=(3, 5))  # 2x2 average-pool downscale
        v = T.reshape(x, (b, c, (h // 2) * (w // 2)))
        v = T.relu(_rowwise_matmul(_graph_aggregate(v, self._nbr_idx, self._nbr_mask), self.w1))
        v = T.relu(_rowwise_matmul(_graph_aggregate(v, self._nbr_idx, self._nbr_mask), self.w2))
        hg = T.sigmoid(_rowwise_matmul(_graph_aggregate(v, self._nbr_idx, self._nbr_mask), self.w3))
        maps = T.reshape(hg, (b, c, h // 2, w // 2))
        return T.upsample_nearest2d(maps, 2)


class PoseNet(Module):
    """Full pipeline: stems, per-branch encoders, per-scale fusion, decoder,
    and optional graph refinement."""

    def __init__(self, cfg: ModelConfig, *, rng):
        super().__init__()
        self.cfg = cfg
        dt = cfg.np_dtype
        self.stem_h = Stem(cfg, rng=rng)
        self.stem_v = Stem(cfg, rng=rng)
        self.enc_h = EncoderBranch(cfg, rng=rng)
        self.enc_v = EncoderBranch(cfg, rng=rng)
        fused_channels = []
        for i in range(1, cfg.scales + 1):
            block = CSAM(cfg.scale_channels(i), cfg.use_cross, cfg.use_self, cfg.bias, rng=rng, dtype=dt)
            setattr(self, f"csam{i}", block)
            fused_channels.append(block.out_channels)
        self.decoder = Decoder(cfg, fused_channels, rng=rng)
        if cfg.use_prgcn:
            self.prgcn = PRGCN(
                cfg.n_keypoints,
                cfg.heatmap_h,
                cfg.heatmap_w,
                adjacency().adjacency,
                rng=rng,
                dtype=dt,
            )
        else:
            self.prgcn = None

    def _prepare(self, maps: np.ndarray) -> np.ndarray:
        """Validate one branch's input, scale it, and average out elevation."""
        cfg = self.cfg
        if maps.ndim != 7:
            raise ValueError(f"expected (B, N, 2, K, H, W, E) input, got shape {maps.shape}")
        b, n, two, k, h, w, _ = maps.shape
        if (n, two, k, h, w) != (cfg.n_frames, 2, cfg.k, cfg.heatmap_h, cfg.heatmap_w):
            raise ValueError(
                f"input window {maps.shape[1:]} does not match the model "
                f"(N={cfg.n_frames}, K={cfg.k}, H={cfg.heatmap_h}, W={cfg.heatmap_w})"
            )
        if isinstance(cfg.input_scale, tuple):
            scale = np.asarray(cfg.input_scale).reshape(1, 1, 1, cfg.k, 1, 1)
        else:
            scale = cfg.input_scale if cfg.input_scale > 0 else 1.0
        out = maps.mean(axis=-1, dtype=np.float64) * scale
        return out.astype(cfg.np_dtype)

    def forward(self, maps_h: np.ndarray, maps_v: np.ndarray) -> Tuple[Tensor, Optional[Tensor], Tensor]:
        """Returns (initial heatmaps B-hat, refined heatmaps B or None, logits f-bar)."""
        f_h = self.stem_h.forward(self._prepare(maps_h))
        f_v = self.stem_v.forward(self._prepare(maps_v))
        feats_h = self.enc_h.forward(f_h)
        feats_v = self.enc_v.forward(f_v)
        fused = [
            getattr(self, f"csam{i}").forward(fh, fv)
            for i, (fh, fv) in enumerate(zip(feats_h, feats_v), start=1)
        ]
        f_bar = self.decoder.forward(fused)
        b_hat = T.sigmoid(f_bar)
        b = self.prgcn.forward(f_bar) if self.prgcn is not None else None
        return b_hat, b, f_bar


def build_model(cfg: ModelConfig, seed: int = 0) -> PoseNet:
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(entropy=seed, spawn_key=(7,))))
    return PoseNet(cfg, rng=rng)


# ----------------------------------------------------------------------
# objective


def bce_sum(
    pred: Tensor,
    target: np.ndarray,
    visibility: Optional[np.ndarray] = None,
    eps: float = 1e-7,
) -> Tensor:
    """Summed pixel-wise binary cross-entropy against heatmap targets.

    ``target`` values must lie in [0, 1]; predictions are clamped to
    [eps, 1-eps]. ``visibility`` masks whole keypoint channels out of the
    sum (shape (C,) or (B, C)).
    """
    target = np.asarray(target, dtype=pred.data.dtype)
    if target.shape != pred.shape:
        raise ValueError(f"target shape {target.shape} does not match prediction {pred.shape}")
    if target.min() < 0.0 or target.max() > 1.0:
        raise ValueError("target heatmap values must lie in [0, 1]")
    p = T.clip(pred, eps, 1.0 - eps)
    t = Tensor(target)
    one = Tensor(np.asarray(1.0, dtype=pred.data.dtype))
    loss_map = -(t * T.log(p) + (one - t) * T.log(one - p))
    if visibility is not None:
        vis = np.asarray(visibility, dtype=pred.data.dtype)
        vis = vis.reshape(vis.shape + (1, 1))  # (..., C, 1, 1) broadcasts over pixels
        loss_map = loss_map * Tensor(vis)
    return T.tsum(loss_map)


def pose_loss(
    b_hat: Tensor,
    b: Optional[Tensor],
    target: np.ndarray,
    alpha: float = 1.0,
    visibility: Optional[np.ndarray] = None,
) -> Tensor:
    """BCE(b_hat, T) + alpha * BCE(b, T); the second term drops out when the
    refinement stage is disabled."""
    loss = bce_sum(b_hat, target, visibility)
    if b is not None:
        loss = loss + bce_sum(b, target, visibility) * alpha
    return loss


# ----------------------------------------------------------------------
# checkpoints


def save_checkpoint(path, cfg: ModelConfig, state: Dict[str, np.ndarray], step: int) -> None:
    """Write config, named f32 tensors, and the step counter."""
    cfg_bytes = json.dumps(cfg.to_dict(), sort_keys=True).encode()
    with open(path, "wb") as f:
        f.write(CKPT_MAGIC)
        f.write(struct.pack("<I", CKPT_VERSION))
        f.write(struct.pack("<I", len(cfg_bytes)))
        f.write(cfg_bytes)
        f.write(struct.pack("<I", len(state)))
        for name in state:
            arr = np.asarray(state[name], dtype="<f4", order="C")  # keeps 0-d scalars 0-d
            nb = name.encode()
            f.write(struct.pack("<I", len(nb)))
            f.write(nb)
            f.write(struct.pack("<I", arr.ndim))
            f.write(struct.pack(f"<{arr.ndim}I", *arr.shape))
            f.write(arr.tobytes())
        f.write(struct.pack("<Q", step))


def load_checkpoint(path) -> Tuple[ModelConfig, Dict[str, np.ndarray], int]:
    with open(path, "rb") as f:
        raw = f.read()
    off = 0

    def need(n):
        nonlocal off
        if off + n > len(raw):
            raise DataError(f"{path}: truncated checkpoint")
        chunk = raw[off : off + n]
        off += n
        return chunk

    if need(8) != CKPT_MAGIC:
        raise DataError(f"{path}: bad magic")
    (version,) = struct.unpack("<I", need(4))
    if version != CKPT_VERSION:
        raise DataError(f"{path}: unsupported checkpoint version {version}")
    (cfg_len,) = struct.unpack("<I", need(4))
    try:
        cfg = ModelConfig.from_dict(json.loads(need(cfg_len).decode()))
    except (ValueError, json.JSONDecodeError) as e:
        raise DataError(f"{path}: bad embedded config ({e})") from e
    (n_tensors,) = struct.unpack("<I", need(4))
    state = {}
    for _ in range(n_tensors):
        (name_len,) = struct.unpack("<I", need(4))
        name = need(name_len).decode()
        (ndim,) = struct.unpack("<I", need(4))
        shape = struct.unpack(f"<{ndim}I", need(4 * ndim))
        count = int(np.prod(shape)) if ndim else 1
        arr = np.frombuffer(need(4 * count), dtype="<f4").reshape(shape)
        state[name] = np.array(arr)
    (step,) = struct.unpack("<Q", need(8))
    if off != len(raw):
        raise DataError(f"{path}: trailing bytes after checkpoint payload")
    return cfg, state, step
