# Import necessary libraries and packages
import sys
import os
sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

import math
import numpy as np
import pytest

from algorithms.zoom_kernel import ImageGrid, MaskConfig, ZoomParams, soft_mask
from algorithms.zoom_search import (
    compatibility_with_zoom_grad, optimize_zoom, window_search, window_to_zoom
)
from models.core import AttributeMatrix, EmbeddingModel
from models.extractors import BlockMeanPooling, RandomLinearExtractor
from utils.config_handler import ZoomOptConfig
from utils.exceptions import InvalidArgumentError, NumericFailureError
from utils.gradient_check import check_gradient


def brute_force_window(values: np.ndarray, side: int):
    activations = values.sum(axis=2)
    H, W = activations.shape
    best, best_pos = None, None
    for row in range(H - side + 1):
        for col in range(W - side + 1):
            total = activations[row:row + side, col:col + side].sum()
            if best is None or total > best:
                best, best_pos = total, (row, col)
    return best_pos


def quadrant_fixture():
    """8×8 image lit in its top-left quadrant; the score is the top-left block mean."""
    image = np.zeros((8, 8))
    image[:4, :4] = 1.0
    extractor = BlockMeanPooling(2, 2)
    w_att = np.zeros((4, 1))
    w_att[0, 0] = 1.0
    model = EmbeddingModel(w_att=w_att, w_lat=np.zeros((4, 1)))
    attrs = AttributeMatrix((0,), [[1.0]])
    return ImageGrid(image), extractor, model, attrs


def test_window_search_hot_cell_bottom_right():
    grid = np.zeros((4, 4))
    grid[3, 3] = 1.0
    zoom = window_search(ImageGrid(grid), 0.5)
    assert zoom == ZoomParams(0.75, 0.75, 0.5), f"Expected the bottom-right 2×2 window, got {zoom}"


def test_window_search_ties_go_top_left():
    assert window_search(ImageGrid(np.ones((4, 4))), 0.5) == ZoomParams(0.25, 0.25, 0.5)
    grid = np.zeros((4, 4))
    grid[0, 0] = 5.0
    assert window_search(ImageGrid(grid), 0.5) == ZoomParams(0.25, 0.25, 0.5)


def test_window_search_on_wide_grid_hot_corner():
    grid = np.zeros((4, 8))
    grid[2:4, 6:8] = 1.0
    zoom = window_search(ImageGrid(grid), 0.5)
    assert zoom == ZoomParams(0.875, 0.75, 0.5)
    covered = soft_mask(zoom, MaskConfig(steepness=1000.0, rescale=False), 4, 8).values > 0.5
    assert np.array_equal(covered, grid > 0), "The mask of the found zoom covers exactly the hot 2×2 block"


@pytest.mark.parametrize("seed", range(10))
def test_window_zoom_mask_covers_found_window(seed):
    rng = np.random.RandomState(500 + seed)
    H, W = 0, 0
    while H == W:
        H, W = rng.randint(2, 17, size=2)
    values = rng.rand(H, W, 1)
    side = math.ceil(0.5 * min(H, W))
    row, col = brute_force_window(values, side)

    zoom = window_search(ImageGrid(values), 0.5)
    covered = soft_mask(zoom, MaskConfig(steepness=1000.0, rescale=False), H, W).values > 0.5
    expected = np.zeros((H, W), dtype=bool)
    expected[row:row + side, col:col + side] = True
    assert np.array_equal(covered, expected), f"Seed {seed}: {H}×{W} window at ({row}, {col}) side {side}"


def test_window_search_rejects_bad_fraction():
    with pytest.raises(InvalidArgumentError):
        window_search(ImageGrid(np.ones((4, 4))), 0.0)
    with pytest.raises(InvalidArgumentError):
        window_search(ImageGrid(np.ones((4, 4))), 1.5)


@pytest.mark.parametrize("seed", range(50))
def test_window_search_matches_exhaustive_enumeration(seed):
    rng = np.random.RandomState(seed)
    H, W = rng.randint(1, 17, size=2)
    C = rng.randint(1, 4)
    # small integer activations make ties common and sums exact
    values = rng.randint(0, 3, size=(H, W, C)).astype(float)
    frac = [0.25, 0.5, 0.75, 1.0][seed % 4]
    side = math.ceil(frac * min(H, W))

    row, col = brute_force_window(values, side)
    expected = window_to_zoom(row, col, side, H, W)
    assert window_search(ImageGrid(values), frac) == expected, f"Seed {seed}: {H}×{W}×{C}, side {side}"


@pytest.mark.parametrize("seed", range(10))
def test_block_pooling_backward_is_adjoint(seed):
    rng = np.random.RandomState(seed)
    grid = ImageGrid(rng.randn(7, 9, 2))
    extractor = BlockMeanPooling(2, 3)
    upstream = rng.randn(extractor.output_dim(grid.shape))
    lhs = float(upstream @ extractor.extract(grid))
    rhs = float(np.sum(extractor.backward(grid, upstream) * grid.values))
    assert abs(lhs - rhs) < 1e-10, "Backward must be the adjoint of the linear pooling"


def random_smooth_zoom(rng, H, W, margin=1e-3):
    while True:
        z = np.array([rng.uniform(0.3, 0.7), rng.uniform(0.3, 0.7), rng.uniform(0.3, 0.8)])
        rel_y = (np.arange(H) + 0.5) / H
        rel_x = (np.arange(W) + 0.5) / W
        p = (z[1] - 0.5 * z[2] + z[2] * rel_y) * H - 0.5
        q = (z[0] - 0.5 * z[2] + z[2] * rel_x) * W - 0.5
        positions = np.concatenate([p, q])
        if np.min(np.abs(positions - np.round(positions))) > margin:
            return z


@pytest.mark.parametrize("seed", range(10))
def test_compatibility_gradient_matches_finite_differences(seed):
    rng = np.random.RandomState(seed)
    H, W, C = 8, 8, 2
    image = ImageGrid(rng.rand(H, W, C))
    extractor = RandomLinearExtractor((H, W, C), d=5, seed=seed)
    model = EmbeddingModel(rng.randn(5, 3), rng.randn(5, 2))
    attrs = AttributeMatrix((0, 1, 2, 3), rng.rand(4, 3))
    cfg = MaskConfig()
    z = random_smooth_zoom(rng, H, W)

    def objective(params):
        score, _ = compatibility_with_zoom_grad(image, ZoomParams(*params), extractor, model, attrs, 2, cfg)
        return score

    _, analytic = compatibility_with_zoom_grad(image, ZoomParams(*z), extractor, model, attrs, 2, cfg)
    error = check_gradient(objective, analytic, z)
    assert error < 1e-4, f"Seed {seed}: relative error {error:.2e}"


def test_optimize_zoom_zero_learning_rate_is_constant():
    image, extractor, model, attrs = quadrant_fixture()
    trajectory = optimize_zoom(image, extractor, model, attrs, 0, ZoomOptConfig(steps=5, learning_rate=0.0))
    assert len(trajectory.params) == 6, "Trajectory includes the initial point"
    assert all(p == ZoomParams(0.5, 0.5, 0.5) for p in trajectory.params)
    assert len(set(trajectory.scores)) == 1


def test_optimize_zoom_moves_toward_signal():
    image, extractor, model, attrs = quadrant_fixture()
    trajectory = optimize_zoom(image, extractor, model, attrs, 0, ZoomOptConfig(steps=25, learning_rate=0.01))
    start = np.array([0.5, 0.5])
    final = np.array([trajectory.final.z_x, trajectory.final.z_y])
    target = np.array([0.25, 0.25])
    assert np.linalg.norm(final - target) < np.linalg.norm(start - target), (
        f"Zoom center {final} should approach the lit quadrant"
    )
    assert trajectory.scores[-1] > trajectory.scores[0]


def test_optimize_zoom_small_steps_never_decrease_score():
    image, extractor, model, attrs = quadrant_fixture()
    trajectory = optimize_zoom(image, extractor, model, attrs, 0, ZoomOptConfig(steps=10, learning_rate=1e-3))
    for step, (before, after) in enumerate(zip(trajectory.scores, trajectory.scores[1:])):
        assert after >= before - 1e-9, f"Score dropped at step {step}: {before} -> {after}"
    assert trajectory.losses == [-s for s in trajectory.scores]


def test_optimize_zoom_stays_in_valid_range():
    image, extractor, model, attrs = quadrant_fixture()
    trajectory = optimize_zoom(image, extractor, model, attrs, 0, ZoomOptConfig(steps=20, learning_rate=5.0))
    for p in trajectory.params:
        assert 0 < p.z_x < 1 and 0 < p.z_y < 1 and 0.05 <= p.z_s <= 1.0


class ExplodingExtractor(BlockMeanPooling):
    def backward(self, grid, upstream):
        return np.full(grid.shape, 1e308)


def test_optimize_zoom_reports_failing_step():
    image, _, model, attrs = quadrant_fixture()
    with pytest.raises(NumericFailureError) as excinfo:
        optimize_zoom(image, ExplodingExtractor(2, 2), model, attrs, 0, ZoomOptConfig(steps=3))
    assert excinfo.value.step == 0


if __name__ == "__main__":
    pytest.main([__file__, "-v"])
