import numpy as np
import pytest

from radarpose.tensor import Tensor


def finite_diff_check(build_fn, tensors, rng, n_coords=4, h_base=1e-6, tol=1e-4):
    """Compare analytic gradients of a rebuilt scalar graph against central
    finite differences on randomly chosen coordinates of each tensor.

    ``build_fn`` must construct the forward graph from scratch (it is called
    repeatedly with perturbed tensor data). All tensors must be float64.
    """
    for t in tensors:
        assert t.data.dtype == np.float64, "gradient checks need f64 headroom"
        t.zero_grad()
    loss = build_fn()
    loss.backward()
    worst = 0.0
    for t in tensors:
        assert t.grad is not None, "tensor missing a gradient after backward"
        flat = t.data.reshape(-1)
        gflat = t.grad.reshape(-1)
        picks = rng.choice(flat.size, size=min(n_coords, flat.size), replace=False)
        for idx in picks:
            x0 = flat[idx]
            h = h_base * max(1.0, abs(x0))
            flat[idx] = x0 + h
            lp = float(build_fn().data)
            flat[idx] = x0 - h
            lm = float(build_fn().data)
            flat[idx] = x0
            fd = (lp - lm) / (2 * h)
            an = gflat[idx]
            err = abs(an - fd)
            denom = max(abs(an), abs(fd))
            if err > 1e-7:  # absolute floor for near-zero gradients
                rel = err / max(denom, 1e-12)
                worst = max(worst, rel)
                assert rel < tol, f"gradient mismatch at coord {idx}: analytic {an} vs fd {fd}"
    return worst


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def rand_tensor(rng, shape, lo=-1.0, hi=1.0, requires_grad=True):
    return Tensor(rng.uniform(lo, hi, size=shape), requires_grad=requires_grad)


# ----------------------------------------------------------------------
# a miniature end-to-end profile so pipeline tests run in seconds

TINY_RADAR = dict(
    n_adc=32,
    n_chirps=8,
    range_resolution=0.2,  # 32 bins cover 6.4 m
)
TINY_PREPROC = dict(start_bin=8, length=16, az_pad=16, el_pad=4, k=4)
TINY_MODEL = dict(
    n_frames=4,
    k=4,
    stem_channels=4,
    scales=2,
    heatmap_h=16,
    heatmap_w=16,
    input_scale=0.0,  # resolve from the data
)


def build_tiny_dataset(root, n_seqs=2, n_frames=16, mode="vrdae", seed=0, snr_db=25.0):
    """Simulate and preprocess a miniature dataset; returns the map root."""
    import os

    from radarpose.preproc import PreprocConfig, make_ra, make_rae, make_vrdae, write_map
    from radarpose.radar import RadarConfig, synthesize_frame
    from radarpose.scenes import SCRIPT_NAMES, make_scene, project_to_camera, skeleton_positions
    from radarpose.skeleton import save_gt_file

    rcfg = RadarConfig(**TINY_RADAR)
    pcfg = PreprocConfig(**TINY_PREPROC)
    maker = {"ra": make_ra, "rae": make_rae, "vrdae": make_vrdae}[mode]
    for s in range(n_seqs):
        seq_dir = os.path.join(str(root), f"seq_{s:04d}")
        os.makedirs(seq_dir, exist_ok=True)
        script = SCRIPT_NAMES[s % len(SCRIPT_NAMES)]
        scene = make_scene(script, n_frames / rcfg.fps)
        skeletons = []
        for fr in range(n_frames):
            for channel, suffix in (("horizontal", "h"), ("vertical", "v")):
                cube = synthesize_frame(rcfg, scene, fr, snr_db=snr_db, seed=seed + s, channel=channel)
                write_map(os.path.join(seq_dir, f"frame_{fr:05d}_{suffix}.rmap"), maker(cube, pcfg))
            pos, _ = skeleton_positions(script, None, fr, rcfg.fps)
            skeletons.append(project_to_camera(pos))
        save_gt_file(os.path.join(seq_dir, "gt.json"), skeletons, fps=rcfg.fps)
    return str(root)
