import numpy as np
import pytest

import spritecheck as sc


def random_image(seed, h=32, w=32):
    rng = np.random.default_rng(seed)
    return rng.integers(0, 256, size=(h, w, 3), dtype=np.uint8)


def test_identical_images_are_perfect():
    a = random_image(1)
    assert sc.pct(a, a) == 1.0
    assert sc.mse(a, a) == 0.0
    assert sc.ssim(a, a) == 1.0
    assert sc.esim(a, a) == 1.0


def test_mse_matches_numpy():
    a, b = random_image(2), random_image(3)
    expected = np.mean((a.astype(np.float64) - b.astype(np.float64)) ** 2)
    assert sc.mse(a, b) == pytest.approx(expected, abs=1e-9)


def test_ssim_matches_skimage():
    metrics = pytest.importorskip("skimage.metrics")
    a = random_image(4)
    b = a.copy()
    b[::3, ::2] = random_image(5)[::3, ::2]
    expected = metrics.structural_similarity(a, b, win_size=7, channel_axis=2, data_range=255)
    assert sc.ssim(a, b) == pytest.approx(expected, abs=1e-6)


def test_shape_errors():
    with pytest.raises(ValueError):
        sc.pct(np.zeros((4, 4), np.uint8), np.zeros((4, 4), np.uint8))
    with pytest.raises(sc.Error):
        sc.pct(np.zeros((4, 4, 3), np.uint8), np.zeros((4, 5, 3), np.uint8))


def test_stats():
    assert sc.format_percent(107, 133) == "44.6%"
    assert sc.cliffs_delta([1, 2, 3], [4, 5, 6]) == (-1.0, "large")
    r = sc.mann_whitney_u([1, 2], [3, 4])
    assert r["u_x"] == 0.0 and r["u_x"] + r["u_y"] == 4.0


def test_catalog():
    bugs = sc.list_bugs()
    assert len(bugs) == 24
    assert [b["key"] for b in bugs[:3]] == ["S1", "S2", "S3"]


def test_simulated_bundle_pairs_are_exact(tmp_path):
    dirs = sc.simulate(3, tmp_path / "run", width=640, height=360, snapshots=2)
    assert len(dirs) == 2
    pairs = sc.build_pairs(dirs[-1])
    compared = [p for p in pairs if not p["skipped"]]
    assert compared
    for p in compared:
        assert np.array_equal(p["oracle"], p["object"])


def test_cli_in_process():
    code, out, _ = sc.run_cli(["list-bugs", "--markdown"])
    assert code == 0
    assert "| S1 |" in out
    code, _, err = sc.run_cli(["no-such-verb"])
    assert code == 2
    assert "error" in err
