# Import necessary libraries and packages
import logging
import math
import numpy as np
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

from models.core import AttributeMatrix, EmbeddingModel
from models.extractors import DifferentiableFeatureExtractor
from utils.config_handler import ZoomOptConfig
from utils.exceptions import InvalidArgumentError, NumericFailureError
from .zoom_kernel import ImageGrid, MaskConfig, ZoomParams, zoom_backward, zoom_forward


@dataclass
class ZoomTrajectory:
    """Zoom parameters and true-class scores at every optimization step."""
    params: List[ZoomParams] = field(default_factory=list)
    scores: List[float] = field(default_factory=list)

    @property
    def losses(self) -> List[float]:
        return [-s for s in self.scores]

    @property
    def final(self) -> ZoomParams:
        return self.params[-1]


def window_sums(activations: np.ndarray, side: int) -> np.ndarray:
    """Sum of every side×side window at every integer position (stride 1)."""
    windows = np.lib.stride_tricks.sliding_window_view(activations, (side, side))
    return windows.sum(axis=(-2, -1))


def window_search(feature_grid: ImageGrid, window_frac: float = 0.5) -> ZoomParams:
    """Square window with the highest channel-summed activation.

    Ties go to the smallest (row, col) position.
    """
    if not 0.0 < window_frac <= 1.0:
        raise InvalidArgumentError(f"window_frac must lie in (0, 1], got {window_frac}")
    H, W = feature_grid.height, feature_grid.width
    side = math.ceil(window_frac * min(H, W))
    if side > min(H, W):
        raise InvalidArgumentError(f"window of side {side} does not fit a {H}×{W} grid")

    sums = window_sums(feature_grid.values.sum(axis=2), side)
    # argmax returns the first maximum in row-major order
    row, col = np.unravel_index(int(np.argmax(sums)), sums.shape)
    return window_to_zoom(int(row), int(col), side, H, W)


def window_to_zoom(row: int, col: int, side: int, H: int, W: int) -> ZoomParams:
    """Normalized parameters of a pixel window; the side is measured on the shorter axis."""
    return ZoomParams.clamped(
        z_x=(col + 0.5 * side) / W,
        z_y=(row + 0.5 * side) / H,
        z_s=side / min(H, W)
    )


def compatibility_with_zoom_grad(
    image: ImageGrid,
    zoom: ZoomParams,
    extractor: DifferentiableFeatureExtractor,
    model: EmbeddingModel,
    attrs: AttributeMatrix,
    true_class: int,
    mask_cfg: MaskConfig
) -> Tuple[float, np.ndarray]:
    """True-class score <w_attᵀ·extractor(zoom(image)), a^true> and its
    gradient w.r.t. (z_x, z_y, z_s)."""
    zoomed = zoom_forward(image, zoom, mask_cfg)
    feature = extractor.extract(zoomed)
    if feature.shape != (model.d,):
        raise InvalidArgumentError(
            f"extractor yields {feature.shape[0]} features, model expects {model.d}"
        )
    a_true = attrs.row(true_class)
    score = float((model.w_att.T @ feature) @ a_true)

    g_feature = model.w_att @ a_true
    g_grid = extractor.backward(zoomed, g_feature)
    grad = np.array(zoom_backward(image, zoom, mask_cfg, ImageGrid(g_grid)))
    return score, grad


def optimize_zoom(
    image: ImageGrid,
    extractor: DifferentiableFeatureExtractor,
    model: EmbeddingModel,
    attrs: AttributeMatrix,
    true_class: int,
    opt: ZoomOptConfig,
    mask_cfg: Optional[MaskConfig] = None
) -> ZoomTrajectory:
    """Gradient ascent on the true-class compatibility score w.r.t. the zoom
    parameters, clamping to the valid ranges after every step."""
    logger = logging.getLogger(__name__)
    mask_cfg = mask_cfg or MaskConfig(steepness=opt.steepness, rescale=opt.rescale_steepness)

    zoom = ZoomParams.clamped(*opt.init)
    trajectory = ZoomTrajectory()

    for step in range(opt.steps + 1):
        score, grad = compatibility_with_zoom_grad(
            image, zoom, extractor, model, attrs, true_class, mask_cfg
        )
        trajectory.params.append(zoom)
        trajectory.scores.append(score)

        if step == opt.steps:
            break
        if not (np.isfinite(score) and np.all(np.isfinite(grad))):
            logger.error(f"Non-finite zoom gradient at step {step}: {grad}")
            raise NumericFailureError("non-finite zoom gradient", step=step)

        zoom = ZoomParams.clamped(*(zoom.as_array() + opt.learning_rate * grad))
        logger.debug(f"step {step}: score={score:.6f} zoom={zoom}")

    logger.info(
        f"Zoom optimization finished after {opt.steps} steps: "
        f"score {trajectory.scores[0]:.4f} -> {trajectory.scores[-1]:.4f}"
    )
    return trajectory
