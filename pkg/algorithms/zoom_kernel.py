# Import necessary libraries and packages
import numpy as np
from dataclasses import dataclass
from scipy.special import expit
from typing import Tuple

from utils.exceptions import InvalidArgumentError

# Coordinates are normalized to [0, 1] per axis with pixel centers at (i + 0.5) / n.
# z_x is the horizontal (column) center, z_y the vertical (row) center and z_s
# the side of the attended square as a fraction of the shorter axis, so the
# square keeps its pixel shape on non-square grids.

S_MIN = 0.05
COORD_EPS = 1e-6


@dataclass(frozen=True)
class ZoomParams:
    z_x: float
    z_y: float
    z_s: float

    def __post_init__(self):
        for name in ('z_x', 'z_y', 'z_s'):
            value = float(getattr(self, name))
            if not np.isfinite(value):
                raise InvalidArgumentError(f"{name} must be finite")
            object.__setattr__(self, name, value)
        if not (0.0 < self.z_x < 1.0 and 0.0 < self.z_y < 1.0):
            raise InvalidArgumentError(f"zoom center ({self.z_x}, {self.z_y}) must lie in (0, 1)")
        if not S_MIN <= self.z_s <= 1.0:
            raise InvalidArgumentError(f"zoom side {self.z_s} must lie in [{S_MIN}, 1]")

    @classmethod
    def clamped(cls, z_x: float, z_y: float, z_s: float) -> 'ZoomParams':
        """Project arbitrary values onto the valid parameter ranges."""
        return cls(
            z_x=float(np.clip(z_x, COORD_EPS, 1.0 - COORD_EPS)),
            z_y=float(np.clip(z_y, COORD_EPS, 1.0 - COORD_EPS)),
            z_s=float(np.clip(z_s, S_MIN, 1.0))
        )

    def as_array(self) -> np.ndarray:
        return np.array([self.z_x, self.z_y, self.z_s])


@dataclass(frozen=True)
class MaskConfig:
    steepness: float = 10.0
    rescale: bool = True
    reference_size: int = 14  # grid size the default steepness is tuned for

    def __post_init__(self):
        if not self.steepness > 0:
            raise InvalidArgumentError("mask steepness must be positive")

    def effective_steepness(self, H: int, W: int) -> float:
        if not self.rescale:
            return self.steepness
        return self.steepness * min(H, W) / self.reference_size


@dataclass(frozen=True)
class ImageGrid:
    """H×W×C array of activations or pixel values."""
    values: np.ndarray

    def __post_init__(self):
        values = np.array(self.values, dtype=np.float64, copy=True)
        if values.ndim == 2:
            values = values[:, :, None]
        if values.ndim != 3 or min(values.shape) < 1:
            raise InvalidArgumentError(f"image grid must be H×W×C, got shape {values.shape}")
        if not np.all(np.isfinite(values)):
            raise InvalidArgumentError("image grid contains non-finite values")
        values.setflags(write=False)
        object.__setattr__(self, 'values', values)

    @property
    def shape(self) -> Tuple[int, int, int]:
        return self.values.shape

    @property
    def height(self) -> int:
        return self.values.shape[0]

    @property
    def width(self) -> int:
        return self.values.shape[1]

    @property
    def channels(self) -> int:
        return self.values.shape[2]


@dataclass(frozen=True)
class SoftMask:
    values: np.ndarray

    def __post_init__(self):
        values = np.array(self.values, dtype=np.float64, copy=True)
        if values.ndim != 2:
            raise InvalidArgumentError("mask must be two-dimensional")
        # entries are in (0, 1) mathematically; float rounding can reach the bounds
        if not np.all((values >= 0.0) & (values <= 1.0)):
            raise InvalidArgumentError("mask entries must lie in [0, 1]")
        values.setflags(write=False)
        object.__setattr__(self, 'values', values)


def pixel_centers(n: int) -> np.ndarray:
    return (np.arange(n) + 0.5) / n


def axis_scales(H: int, W: int) -> Tuple[float, float]:
    """Factors turning z_s into the normalized (vertical, horizontal) extent of the square."""
    short = min(H, W)
    return short / H, short / W


def mask_profile(coords: np.ndarray, center: float, side: float, k_eff: float) -> np.ndarray:
    """One axis of the soft mask: f(u - c + s/2) - f(u - c - s/2), f a sigmoid of steepness k_eff."""
    coords = np.asarray(coords, dtype=np.float64)
    return expit(k_eff * (coords - center + 0.5 * side)) - expit(k_eff * (coords - center - 0.5 * side))


def mask_profile_grad(coords, center, side, k_eff):
    """Partials of `mask_profile` w.r.t. center and side."""
    sa = expit(k_eff * (coords - center + 0.5 * side))
    sb = expit(k_eff * (coords - center - 0.5 * side))
    da = sa * (1.0 - sa)
    db = sb * (1.0 - sb)
    return k_eff * (db - da), 0.5 * k_eff * (da + db)


def soft_mask(zoom: ZoomParams, cfg: MaskConfig, H: int, W: int) -> SoftMask:
    if H < 2 or W < 2:
        raise InvalidArgumentError(f"mask grid must be at least 2×2, got {H}×{W}")
    k_eff = cfg.effective_steepness(H, W)
    r_y, r_x = axis_scales(H, W)
    m_x = mask_profile(pixel_centers(W), zoom.z_x, zoom.z_s * r_x, k_eff)
    m_y = mask_profile(pixel_centers(H), zoom.z_y, zoom.z_s * r_y, k_eff)
    return SoftMask(np.outer(m_y, m_x))


def apply_mask(image: ImageGrid, mask: SoftMask) -> ImageGrid:
    if mask.values.shape != image.values.shape[:2]:
        raise InvalidArgumentError(
            f"mask shape {mask.values.shape} does not match image {image.values.shape[:2]}"
        )
    return ImageGrid(image.values * mask.values[:, :, None])


def _sample_positions(center: float, side: float, n_in: int, n_out: int):
    """Continuous source pixel index for every output pixel along one axis.

    The output spans the crop square [center - side/2, center + side/2],
    i.e. an upsampling factor of 1/side when n_out == n_in.
    """
    rel = pixel_centers(n_out)
    return (center - 0.5 * side + side * rel) * n_in - 0.5, rel


def _interpolation_matrices(positions: np.ndarray, n_in: int):
    """Linear interpolation matrix R (n_out×n_in) with border clamping, and
    its derivative D w.r.t. each row's source position."""
    n_out = positions.shape[0]
    base = np.floor(positions)
    frac = positions - base
    lo = np.clip(base, 0, n_in - 1).astype(np.int64)
    hi = np.clip(base + 1, 0, n_in - 1).astype(np.int64)
    rows = np.arange(n_out)
    R = np.zeros((n_out, n_in))
    D = np.zeros((n_out, n_in))
    np.add.at(R, (rows, lo), 1.0 - frac)
    np.add.at(R, (rows, hi), frac)
    np.add.at(D, (rows, lo), -1.0)
    np.add.at(D, (rows, hi), 1.0)
    return R, D


def bilinear_zoom(crop: ImageGrid, zoom: ZoomParams, out_H: int, out_W: int) -> ImageGrid:
    """Resample the crop square onto an out_H×out_W grid.

    Each output value is sum over a, b in {0, 1} of
    |1 - a - {p}| * |1 - b - {q}| * crop[[p] + a, [q] + b], with (p, q) the
    source position offset by the crop origin; indices are clamped to the border.
    """
    if out_H < 2 or out_W < 2:
        raise InvalidArgumentError(f"zoom output must be at least 2×2, got {out_H}×{out_W}")
    H, W, _ = crop.shape
    r_y, r_x = axis_scales(H, W)
    p, _ = _sample_positions(zoom.z_y, zoom.z_s * r_y, H, out_H)
    q, _ = _sample_positions(zoom.z_x, zoom.z_s * r_x, W, out_W)
    R_y, _ = _interpolation_matrices(p, H)
    R_x, _ = _interpolation_matrices(q, W)
    return ImageGrid(np.einsum('ih,hwc,jw->ijc', R_y, crop.values, R_x, optimize=True))


def zoom_forward(image: ImageGrid, zoom: ZoomParams, cfg: MaskConfig, out_H: int = None, out_W: int = None) -> ImageGrid:
    """soft_mask → apply_mask → bilinear_zoom; output defaults to the input size."""
    mask = soft_mask(zoom, cfg, image.height, image.width)
    return bilinear_zoom(
        apply_mask(image, mask), zoom,
        out_H or image.height, out_W or image.width
    )


def zoom_backward(image: ImageGrid, zoom: ZoomParams, cfg: MaskConfig, upstream: ImageGrid) -> Tuple[float, float, float]:
    """Gradient of <upstream, zoom_forward(image, zoom)> w.r.t. (z_x, z_y, z_s).

    Both paths are included: through the sigmoid mask and through the
    bilinear sampling positions.
    """
    H, W, C = image.shape
    out_H, out_W, out_C = upstream.shape
    if out_C != C or out_H < 2 or out_W < 2:
        raise InvalidArgumentError(
            f"upstream gradient of shape {upstream.shape} does not match a zoom of {image.shape}"
        )
    if H < 2 or W < 2:
        raise InvalidArgumentError(f"image must be at least 2×2, got {H}×{W}")

    img = image.values
    up = upstream.values
    k_eff = cfg.effective_steepness(H, W)
    r_y, r_x = axis_scales(H, W)
    s_x, s_y = zoom.z_s * r_x, zoom.z_s * r_y

    u = pixel_centers(W)
    v = pixel_centers(H)
    m_x = mask_profile(u, zoom.z_x, s_x, k_eff)
    m_y = mask_profile(v, zoom.z_y, s_y, k_eff)
    dmx_dc, dmx_ds = mask_profile_grad(u, zoom.z_x, s_x, k_eff)
    dmy_dc, dmy_ds = mask_profile_grad(v, zoom.z_y, s_y, k_eff)
    crop = img * np.outer(m_y, m_x)[:, :, None]

    p, rel_y = _sample_positions(zoom.z_y, s_y, H, out_H)
    q, rel_x = _sample_positions(zoom.z_x, s_x, W, out_W)
    R_y, D_y = _interpolation_matrices(p, H)
    R_x, D_x = _interpolation_matrices(q, W)

    # mask path
    g_crop = np.einsum('ih,ijc,jw->hwc', R_y, up, R_x, optimize=True)
    g_mask = np.sum(g_crop * img, axis=2)
    g_mx = g_mask.T @ m_y
    g_my = g_mask @ m_x
    dz_x = g_mx @ dmx_dc
    dz_y = g_my @ dmy_dc
    dz_s = r_x * (g_mx @ dmx_ds) + r_y * (g_my @ dmy_ds)

    # sampling path
    g_p = np.einsum('ih,hwc,jw,ijc->i', D_y, crop, R_x, up, optimize=True)
    g_q = np.einsum('ih,hwc,jw,ijc->j', R_y, crop, D_x, up, optimize=True)
    dz_y += H * np.sum(g_p)
    dz_x += W * np.sum(g_q)
    dz_s += r_y * H * (g_p @ (rel_y - 0.5)) + r_x * W * (g_q @ (rel_x - 0.5))

    return float(dz_x), float(dz_y), float(dz_s)
