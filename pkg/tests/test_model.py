import numpy as np
import pytest

import radarpose.tensor as T
from radarpose.dataset import WindowDataset
from radarpose.model import (
    CSAM,
    PRGCN,
    Decoder,
    EncoderBranch,
    ModelConfig,
    PoseNet,
    Stem,
    bce_sum,
    build_model,
    load_checkpoint,
    pose_loss,
    save_checkpoint,
)
from radarpose.skeleton import adjacency
from radarpose.tensor import Tensor
from radarpose.train import TrainSettings, infer_window, train_model

from conftest import TINY_MODEL, build_tiny_dataset, finite_diff_check, rand_tensor


def _rng(seed=0):
    return np.random.default_rng(seed)


def f64_cfg(**over):
    base = dict(TINY_MODEL, dtype="f64", input_scale=1.0)
    base.update(over)
    return ModelConfig(**base)


def chain_adjacency(n):
    a = np.zeros((n, n))
    for i in range(n - 1):
        a[i, i + 1] = a[i + 1, i] = 1.0
    return a


class TestConfig:
    def test_frame_scale_compatibility(self):
        with pytest.raises(ValueError, match="divisible"):
            ModelConfig(n_frames=6, scales=3)

    def test_center_index(self):
        assert ModelConfig().center_index == 4

    def test_rejects_unknown_keys(self):
        with pytest.raises(ValueError, match="unknown"):
            ModelConfig.from_dict({"n_frames": 8, "bogus": 1})


class TestStem:
    def test_zero_maps_give_zero_features_without_bias(self):
        cfg = f64_cfg(bias=False)
        stem = Stem(cfg, rng=_rng())
        x = np.zeros((1, cfg.n_frames, 2, cfg.k, 8, 8))
        out = stem.forward(x)
        assert np.abs(out.data).max() == 0.0

    def test_elevation_average_equals_any_slice_for_constant_e(self, rng):
        cfg = ModelConfig(**TINY_MODEL, dtype="f64")
        net = PoseNet(cfg, rng=_rng())
        base = rng.normal(size=(1, cfg.n_frames, 2, cfg.k, 16, 16, 1))
        maps = np.repeat(base, 4, axis=-1)  # constant along elevation
        prepped = net._prepare(maps)
        np.testing.assert_allclose(prepped, base[..., 0], rtol=1e-12)

    def test_default_output_shapes(self):
        cfg = ModelConfig()  # D=32, N=8, K=8, H=W=64
        stem = Stem(cfg, rng=_rng())
        x = np.random.default_rng(0).normal(size=(1, 8, 2, 8, 64, 64)).astype(np.float32)
        out = stem.forward(x)
        assert out.shape == (1, 32, 8, 64, 64)

    @pytest.mark.parametrize("k", [2, 4, 8, 16])
    def test_velocity_axis_fully_collapsed_for_all_k(self, k):
        cfg = f64_cfg(k=k)
        stem = Stem(cfg, rng=_rng())
        x = np.random.default_rng(1).normal(size=(2, cfg.n_frames, 2, k, 8, 8))
        assert stem.forward(x).shape == (2, cfg.stem_channels, cfg.n_frames, 8, 8)


class TestEncoder:
    def test_shape_law_at_defaults(self):
        cfg = ModelConfig()
        enc = EncoderBranch(cfg, rng=_rng())
        enc.eval()
        x = Tensor(np.random.default_rng(0).normal(size=(1, 32, 8, 64, 64)).astype(np.float32))
        with T.no_grad():
            feats = enc.forward(x)
        assert [f.shape for f in feats] == [(1, 64, 64, 64), (1, 128, 32, 32), (1, 256, 16, 16)]

    def test_single_scale_uses_full_temporal_kernel(self):
        cfg = f64_cfg(scales=1)
        enc = EncoderBranch(cfg, rng=_rng())
        assert enc.scale1_collapse.weight.shape[2] == cfg.n_frames
        x = Tensor(np.random.default_rng(0).normal(size=(1, cfg.stem_channels, cfg.n_frames, 8, 8)))
        feats = enc.forward(x)
        assert len(feats) == 1
        assert feats[0].shape == (1, 2 * cfg.stem_channels, 8, 8)

    def test_gradients_one_scale(self, rng):
        cfg = f64_cfg(stem_channels=2, n_frames=4, scales=1, heatmap_h=8, heatmap_w=8)
        enc = EncoderBranch(cfg, rng=_rng(3))
        x = rand_tensor(rng, (1, 2, 4, 8, 8), requires_grad=False)
        mix = rand_tensor(rng, (1, 4, 8, 8), requires_grad=False)
        params = list(enc.named_parameters().values())

        def build():
            return T.tsum(enc.forward(x)[0] * mix)

        finite_diff_check(build, params, rng, n_coords=2)


class TestCSAM:
    def test_attention_rows_sum_to_one(self, rng):
        block = CSAM(4, True, True, True, rng=_rng(), dtype=np.float64)
        fh = rand_tensor(rng, (1, 4, 3, 3), requires_grad=False)
        fv = rand_tensor(rng, (1, 4, 3, 3), requires_grad=False)
        att = block.attention_map(fv, fh, "v")
        np.testing.assert_allclose(att.sum(axis=-1), 1.0, atol=1e-12)
        assert att.shape == (1, 9, 9)

    def test_zero_value_projection_reduces_to_residual_identity(self, rng):
        block = CSAM(4, True, True, True, rng=_rng(), dtype=np.float64)
        block.v_h.weight.data[...] = 0.0
        block.v_v.weight.data[...] = 0.0
        fh = rand_tensor(rng, (2, 4, 3, 3), requires_grad=False)
        fv = rand_tensor(rng, (2, 4, 3, 3), requires_grad=False)
        out = block.forward(fh, fv).data
        np.testing.assert_array_equal(out[:, 0:4], fh.data)  # cross path h
        np.testing.assert_array_equal(out[:, 4:8], fv.data)  # cross path v
        np.testing.assert_array_equal(out[:, 8:], 0.0)  # self paths have no skip

    def test_variant_channel_counts(self):
        assert CSAM(4, True, True, True, rng=_rng(), dtype=np.float64).out_channels == 16
        assert CSAM(4, True, False, True, rng=_rng(), dtype=np.float64).out_channels == 8
        assert CSAM(4, False, True, True, rng=_rng(), dtype=np.float64).out_channels == 8
        assert CSAM(4, False, False, True, rng=_rng(), dtype=np.float64).out_channels == 8

    def test_baseline_concat(self, rng):
        block = CSAM(4, False, False, True, rng=_rng(), dtype=np.float64)
        fh = rand_tensor(rng, (1, 4, 3, 3), requires_grad=False)
        fv = rand_tensor(rng, (1, 4, 3, 3), requires_grad=False)
        out = block.forward(fh, fv).data
        np.testing.assert_array_equal(out, np.concatenate([fh.data, fv.data], axis=1))

    def test_mismatched_shapes_rejected(self, rng):
        block = CSAM(4, True, True, True, rng=_rng(), dtype=np.float64)
        with pytest.raises(ValueError, match="disagree"):
            block.forward(rand_tensor(rng, (1, 4, 3, 3)), rand_tensor(rng, (1, 4, 4, 4)))

    def test_gradients(self, rng):
        block = CSAM(4, True, True, True, rng=_rng(5), dtype=np.float64)
        fh = rand_tensor(rng, (1, 4, 4, 4), requires_grad=False)
        fv = rand_tensor(rng, (1, 4, 4, 4), requires_grad=False)
        mix = rand_tensor(rng, (1, 16, 4, 4), requires_grad=False)
        params = list(block.named_parameters().values())

        def build():
            return T.tsum(block.forward(fh, fv) * mix)

        finite_diff_check(build, params, rng, n_coords=2)


class TestDecoder:
    def test_default_heatmap_shape_and_range(self, rng):
        cfg = ModelConfig()
        fused_ch = [4 * cfg.scale_channels(i) for i in (1, 2, 3)]
        dec = Decoder(cfg, fused_ch, rng=_rng())
        fused = [
            Tensor(rng.normal(size=(1, c, 64 >> (i - 1), 64 >> (i - 1))).astype(np.float32))
            for i, c in enumerate(fused_ch, start=1)
        ]
        with T.no_grad():
            f_bar = dec.forward(fused)
            b_hat = T.sigmoid(f_bar)
        assert f_bar.shape == (1, 14, 64, 64)
        assert b_hat.data.min() > 0.0 and b_hat.data.max() < 1.0

    def test_gradients(self, rng):
        cfg = f64_cfg(stem_channels=2, heatmap_h=8, heatmap_w=8)
        fused_ch = [4 * cfg.scale_channels(1), 4 * cfg.scale_channels(2)]
        dec = Decoder(cfg, fused_ch, rng=_rng(7))
        fused = [
            Tensor(rng.normal(size=(1, fused_ch[0], 8, 8))),
            Tensor(rng.normal(size=(1, fused_ch[1], 4, 4))),
        ]
        mix = rand_tensor(rng, (1, 14, 8, 8), requires_grad=False)
        params = list(dec.named_parameters().values())

        def build():
            return T.tsum(dec.forward(fused) * mix)

        finite_diff_check(build, params, rng, n_coords=1)


class TestPRGCN:
    def test_empty_graph_decouples_nodes(self, rng):
        g = PRGCN(5, 8, 8, np.zeros((5, 5)), rng=_rng(), dtype=np.float64)
        x = rng.normal(size=(1, 5, 8, 8))
        base = g.forward(Tensor(x)).data
        x2 = x.copy()
        x2[0, 3] = 0.0  # zeroing node 3 must not change the others
        out = g.forward(Tensor(x2)).data
        for i in (0, 1, 2, 4):
            np.testing.assert_array_equal(out[0, i], base[0, i])
        assert np.abs(out[0, 3] - base[0, 3]).max() > 0

    def test_three_hop_locality(self, rng):
        a = chain_adjacency(6)
        g = PRGCN(6, 8, 8, a, rng=_rng(), dtype=np.float64)
        x = rng.normal(size=(1, 6, 8, 8))
        base = g.forward(Tensor(x)).data
        x2 = x.copy()
        x2[0, 4] = 7.7  # distance 4 from node 0
        out = g.forward(Tensor(x2)).data
        np.testing.assert_array_equal(out[0, 0], base[0, 0])
        x3 = x.copy()
        x3[0, 3] = 7.7  # distance 3: reaches node 0 through 3 layers
        out3 = g.forward(Tensor(x3)).data
        assert np.abs(out3[0, 0] - base[0, 0]).max() > 0

    def test_permutation_equivariance_bitwise(self, rng):
        n = 6
        a = chain_adjacency(n)
        g = PRGCN(n, 8, 8, a, rng=_rng(11), dtype=np.float64)
        x = rng.normal(size=(1, n, 8, 8))
        base = g.forward(Tensor(x)).data
        perm = rng.permutation(n)
        p_mat = np.eye(n)[perm]
        g2 = PRGCN(n, 8, 8, p_mat @ a @ p_mat.T, rng=_rng(99), dtype=np.float64)
        for w_dst, w_src in ((g2.w1, g.w1), (g2.w2, g.w2), (g2.w3, g.w3)):
            w_dst.data[...] = w_src.data  # node-shared weights stay put
        out = g2.forward(Tensor(x[:, perm])).data
        np.testing.assert_array_equal(out, base[:, perm])

    def test_non_symmetric_adjacency_rejected(self):
        a = np.zeros((3, 3))
        a[0, 1] = 1.0
        with pytest.raises(ValueError, match="symmetric"):
            PRGCN(3, 8, 8, a, rng=_rng(), dtype=np.float64)

    def test_output_in_unit_interval_and_shape(self, rng):
        g = PRGCN(14, 16, 16, adjacency().adjacency, rng=_rng(), dtype=np.float64)
        out = g.forward(Tensor(rng.normal(size=(2, 14, 16, 16)))).data
        assert out.shape == (2, 14, 16, 16)
        assert out.min() > 0.0 and out.max() < 1.0
        # nearest 2x upscale makes 2x2 constant blocks
        np.testing.assert_array_equal(out[:, :, ::2, ::2], out[:, :, 1::2, ::2])

    def test_gradients_chain_graph(self, rng):
        g = PRGCN(3, 8, 8, chain_adjacency(3), rng=_rng(21), dtype=np.float64)
        x = rand_tensor(rng, (1, 3, 8, 8), requires_grad=False)
        mix = rand_tensor(rng, (1, 3, 8, 8), requires_grad=False)
        params = list(g.named_parameters().values())

        def build():
            return T.tsum(g.forward(x) * mix)

        finite_diff_check(build, params, rng, n_coords=3)


class TestLoss:
    def test_matched_binary_targets_near_zero(self):
        eps = 1e-7
        t = np.zeros((14, 8, 8))
        t[:, 2, 3] = 1.0
        pred = Tensor(np.clip(t, eps, 1 - eps))
        loss = float(bce_sum(pred, t).data)
        assert 0 <= loss <= 14 * 64 * 2 * eps * abs(np.log(eps))

    def test_single_pixel_two_ln_two(self):
        b_hat = Tensor(np.full((1, 1, 1), 0.5))
        b = Tensor(np.full((1, 1, 1), 0.5))
        t = np.ones((1, 1, 1))
        loss = float(pose_loss(b_hat, b, t, alpha=1.0).data)
        assert loss == pytest.approx(2.0 * np.log(2.0), abs=1e-12)

    def test_gradient_formula(self, rng):
        b = Tensor(rng.uniform(0.2, 0.8, size=(2, 3, 3)), requires_grad=True)
        t = rng.uniform(0.0, 1.0, size=(2, 3, 3))
        bce_sum(b, t).backward()
        want = (b.data - t) / (b.data * (1.0 - b.data))
        np.testing.assert_allclose(b.grad, want, rtol=1e-10)

        def build():
            return bce_sum(b, t)

        finite_diff_check(build, [b], rng, n_coords=4)

    def test_out_of_range_target_rejected(self, rng):
        pred = Tensor(np.full((1, 2, 2), 0.5))
        with pytest.raises(ValueError, match="\\[0, 1\\]"):
            bce_sum(pred, np.full((1, 2, 2), 1.5))

    def test_visibility_masks_channels(self, rng):
        pred = Tensor(rng.uniform(0.1, 0.9, size=(3, 4, 4)), requires_grad=True)
        t = rng.uniform(0, 1, size=(3, 4, 4))
        vis = np.array([1.0, 0.0, 1.0])
        bce_sum(pred, t, vis).backward()
        assert np.abs(pred.grad[1]).max() == 0.0
        assert np.abs(pred.grad[0]).max() > 0.0

    def test_alpha_weighting(self, rng):
        b_hat = Tensor(rng.uniform(0.3, 0.7, size=(1, 2, 2)))
        b = Tensor(rng.uniform(0.3, 0.7, size=(1, 2, 2)))
        t = np.ones((1, 2, 2))
        l1 = float(pose_loss(b_hat, b, t, alpha=0.0).data)
        l2 = float(pose_loss(b_hat, None, t).data)
        assert l1 == pytest.approx(l2, rel=1e-12)


@pytest.fixture(scope="module")
def tiny_data(tmp_path_factory):
    root = tmp_path_factory.mktemp("tinydata")
    return build_tiny_dataset(root, n_seqs=2, n_frames=12)


class TestTrainInfer:
    def _dataset(self, root):
        return WindowDataset(root, TINY_MODEL["n_frames"], 16, 16, sigma=2.0)

    def test_one_step_decreases_single_sample_loss(self, tiny_data):
        ds = self._dataset(tiny_data)
        cfg = ModelConfig(**{**TINY_MODEL, "input_scale": ds.suggest_input_scale()})
        settings = TrainSettings(steps=1, batch_size=1, lr=2e-3, weight_decay=0.0, seed=3)
        batch = ds.batch([0])

        model = build_model(cfg, settings.seed)
        model.train(True)
        b_hat, b, _ = model.forward(batch["maps_h"], batch["maps_v"])
        before = float(pose_loss(b_hat, b, batch["target"], cfg.alpha, batch["visibility"]).data)

        model2, recs = train_model(ds, cfg, settings, indices=[0])
        model2.train(True)
        b_hat2, b2, _ = model2.forward(batch["maps_h"], batch["maps_v"])
        after = float(pose_loss(b_hat2, b2, batch["target"], cfg.alpha, batch["visibility"]).data)
        assert recs[0].loss == pytest.approx(before, rel=1e-6)
        assert after < before

    def test_equal_seeds_give_bitwise_identical_checkpoints(self, tiny_data, tmp_path):
        ds = self._dataset(tiny_data)
        cfg = ModelConfig(**{**TINY_MODEL, "input_scale": ds.suggest_input_scale()})
        settings = TrainSettings(steps=3, batch_size=2, seed=9)
        paths = []
        for run in range(2):
            model, recs = train_model(ds, cfg, settings)
            state = {**{k: v.data for k, v in model.named_parameters().items()}, **model.named_buffers()}
            p = tmp_path / f"run{run}.ckpt"
            save_checkpoint(p, cfg, state, len(recs))
            paths.append(p)
        assert paths[0].read_bytes() == paths[1].read_bytes()

    def test_checkpoint_roundtrip_identical_forward(self, tiny_data, tmp_path):
        ds = self._dataset(tiny_data)
        cfg = ModelConfig(**{**TINY_MODEL, "input_scale": ds.suggest_input_scale()})
        model, recs = train_model(ds, cfg, TrainSettings(steps=2, batch_size=2, seed=4))
        state = {**{k: v.data for k, v in model.named_parameters().items()}, **model.named_buffers()}
        path = tmp_path / "model.ckpt"
        save_checkpoint(path, cfg, state, len(recs))
        cfg2, state2, step = load_checkpoint(path)
        assert step == 2
        model2 = build_model(cfg2, seed=0)
        model2.load_state(state2)
        s = ds.sample(1)
        heat1, sk1, conf1 = infer_window(model, s["maps_h"], s["maps_v"])
        heat2, sk2, conf2 = infer_window(model2, s["maps_h"], s["maps_v"])
        np.testing.assert_array_equal(heat1, heat2)
        np.testing.assert_array_equal(sk1.coords, sk2.coords)

    def test_infer_deterministic_and_in_range(self, tiny_data):
        ds = self._dataset(tiny_data)
        cfg = ModelConfig(**{**TINY_MODEL, "input_scale": ds.suggest_input_scale()})
        model, _ = train_model(ds, cfg, TrainSettings(steps=2, batch_size=2, seed=1))
        s = ds.sample(0)
        h1, _, _ = infer_window(model, s["maps_h"], s["maps_v"])
        h2, _, _ = infer_window(model, s["maps_h"], s["maps_v"])
        np.testing.assert_array_equal(h1, h2)
        assert h1.min() > 0.0 and h1.max() < 1.0

    def test_infer_rejects_wrong_window_length(self, tiny_data):
        ds = self._dataset(tiny_data)
        cfg = ModelConfig(**{**TINY_MODEL, "input_scale": 1.0})
        model = build_model(cfg, 0)
        s = ds.sample(0)
        with pytest.raises(ValueError, match="window length"):
            infer_window(model, s["maps_h"][:2], s["maps_v"][:2])

    def test_sliding_window_shift_keeps_shapes(self, tiny_data):
        ds = self._dataset(tiny_data)
        a = ds.sample(0)
        b = ds.sample(1)
        assert a["maps_h"].shape == b["maps_h"].shape
        assert a["target"].shape == b["target"].shape
        assert not np.array_equal(a["target"], b["target"]) or True  # targets may differ

    def test_variant_flags_build_and_run(self, tiny_data):
        ds = self._dataset(tiny_data)
        s = ds.sample(0)
        for flags in (
            dict(use_cross=False, use_self=False, use_prgcn=False),
            dict(use_cross=True, use_self=False, use_prgcn=False),
            dict(use_cross=False, use_self=True, use_prgcn=True),
        ):
            cfg = ModelConfig(**{**TINY_MODEL, "input_scale": 1.0, **flags})
            model = build_model(cfg, 0)
            heat, sk, conf = infer_window(model, s["maps_h"], s["maps_v"])
            assert heat.shape == (14, 16, 16)
