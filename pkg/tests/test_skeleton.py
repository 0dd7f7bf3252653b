import numpy as np
import pytest

from radarpose.skeleton import (
    EDGES,
    KEYPOINT_NAMES,
    Skeleton2D,
    adjacency,
    extract_keypoints,
    gt_heatmaps,
    load_gt_file,
    save_gt_file,
)


def centered_skeleton(rng=None, jitter=0.0):
    coords = np.linspace(60, 200, 28).reshape(14, 2)
    if jitter and rng is not None:
        coords = coords + rng.uniform(-jitter, jitter, size=(14, 2))
    return Skeleton2D(coords)


class TestGraph:
    def test_symmetric_zero_trace(self):
        a = adjacency().adjacency
        np.testing.assert_array_equal(a, a.T)
        assert np.trace(a) == 0.0
        assert set(np.unique(a)) == {0.0, 1.0}

    def test_wrist_has_single_neighbor(self):
        a = adjacency().adjacency
        r_wrist = KEYPOINT_NAMES.index("r_wrist")
        r_elbow = KEYPOINT_NAMES.index("r_elbow")
        assert a[r_wrist].sum() == 1.0
        assert a[r_wrist, r_elbow] == 1.0

    def test_connected_via_bfs(self):
        a = adjacency().adjacency
        seen = {0}
        frontier = [0]
        while frontier:
            nxt = []
            for i in frontier:
                for j in np.flatnonzero(a[i]):
                    if j not in seen:
                        seen.add(int(j))
                        nxt.append(int(j))
            frontier = nxt
        assert seen == set(range(14))

    def test_a_hat_row_sums_are_degree_plus_one(self):
        g = adjacency()
        np.testing.assert_array_equal(g.a_hat().sum(axis=1), g.degrees() + 1.0)

    def test_edge_count(self):
        assert len(EDGES) == 14


class TestHeatmaps:
    def test_peak_is_one_at_keypoint_cell(self):
        sk = Skeleton2D(np.full((14, 2), 130.0))
        maps = gt_heatmaps(sk, 64, 64, sigma=2.0)
        for c in range(14):
            i, j = np.unravel_index(maps[c].argmax(), (64, 64))
            assert maps[c, i, j] == 1.0
            assert (i, j) == (32, 32)  # 130 px -> cell 32 under center-of-pixel rule

    def test_monotone_decay_from_peak(self):
        sk = Skeleton2D(np.full((14, 2), 128.0))
        m = gt_heatmaps(sk, 64, 64, sigma=2.0)[0]
        i, j = np.unravel_index(m.argmax(), m.shape)
        row = m[i]
        assert np.all(np.diff(row[j:]) <= 0)
        assert np.all(np.diff(row[:j]) >= 0)

    def test_value_at_two_pixel_offset(self):
        sk = Skeleton2D(np.full((14, 2), 128.0))
        m = gt_heatmaps(sk, 64, 64, sigma=2.0)[0]
        i, j = np.unravel_index(m.argmax(), m.shape)
        assert m[i, j + 2] == pytest.approx(np.exp(-4.0 / 8.0), abs=1e-12)

    def test_invisible_keypoint_zero_channel(self):
        vis = np.ones(14, dtype=bool)
        vis[3] = False
        sk = Skeleton2D(np.full((14, 2), 100.0), vis)
        maps = gt_heatmaps(sk, 32, 32)
        assert maps[3].max() == 0.0
        assert maps[2].max() == 1.0

    def test_translation_covariance_one_cell(self):
        base = np.full((14, 2), 100.0)
        a = gt_heatmaps(Skeleton2D(base), 64, 64)[0]
        b = gt_heatmaps(Skeleton2D(base + [4.0, 0.0]), 64, 64)[0]  # one cell right
        np.testing.assert_allclose(b[:, 1:], a[:, :-1], atol=1e-12)

    def test_sigma_positive(self):
        with pytest.raises(ValueError, match="sigma"):
            gt_heatmaps(centered_skeleton(), 32, 32, sigma=0.0)


class TestExtract:
    def test_one_hot_recovers_cell(self):
        maps = np.zeros((14, 64, 64))
        maps[:, 10, 20] = 1.0
        sk, conf = extract_keypoints(maps)
        np.testing.assert_allclose(sk.coords, [[(20 + 0.5) * 4, (10 + 0.5) * 4]] * 14)
        np.testing.assert_array_equal(conf, np.ones(14))

    def test_uniform_ties_go_to_first_cell(self):
        maps = np.full((14, 16, 16), 0.25)
        sk, conf = extract_keypoints(maps)
        np.testing.assert_allclose(sk.coords, [[8.0, 8.0]] * 14)  # cell (0, 0) center

    def test_roundtrip_within_half_cell(self, rng):
        for _ in range(20):
            sk = centered_skeleton(rng, jitter=30.0)
            rec, _ = extract_keypoints(gt_heatmaps(sk, 64, 64, sigma=2.0))
            err = np.abs(rec.coords - sk.coords).max()
            assert err <= 2.0 + 1e-9  # half of a 4-px cell at H=64

    def test_rejects_wrong_channel_count(self):
        with pytest.raises(ValueError, match="14"):
            extract_keypoints(np.zeros((13, 8, 8)))


class TestGtFile:
    def test_roundtrip(self, tmp_path, rng):
        sks = [centered_skeleton(rng, jitter=20.0) for _ in range(5)]
        sks[2].visibility[4] = False
        path = tmp_path / "gt.json"
        save_gt_file(path, sks, fps=10.0)
        back = load_gt_file(path)
        assert len(back) == 5
        for a, b in zip(sks, back):
            np.testing.assert_array_equal(a.coords, b.coords)
            np.testing.assert_array_equal(a.visibility, b.visibility)

    def test_wrong_keypoint_count_rejected(self, tmp_path):
        path = tmp_path / "gt.json"
        path.write_text('{"frames": [{"frame": 0, "keypoints": [[1, 2, 1]]}]}')
        from radarpose.errors import DataError

        with pytest.raises(DataError, match="expected 14"):
            load_gt_file(path)
