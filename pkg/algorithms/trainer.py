# Import necessary libraries and packages
import logging
import numpy as np
import pandas as pd
from dataclasses import dataclass, field
from tqdm import tqdm
from typing import List, Optional, Sequence, Tuple

from models.core import AttributeMatrix, EmbeddingModel, FeatureSet, l2_normalize
from utils.config_handler import TrainConfig
from utils.exceptions import InvalidArgumentError, NumericFailureError
from .embedding import (
    Triplet, batch_triplet_loss_grad, sample_triplets, softmax_loss_embedded
)


@dataclass
class EpochRecord:
    epoch: int
    scale_id: int
    l_att: float
    l_lat: float
    total: float


@dataclass
class TrainReport:
    """Per-epoch, per-scale loss history plus the trained models."""
    records: List[EpochRecord] = field(default_factory=list)
    models: List[EmbeddingModel] = field(default_factory=list)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            [(r.epoch, r.scale_id, r.l_att, r.l_lat, r.total) for r in self.records],
            columns=['epoch', 'scale', 'L_att', 'L_lat', 'total']
        )

    def history(self, column: str, scale_id: Optional[int] = None) -> np.ndarray:
        """Loss column per epoch; summed over scales unless one is given."""
        frame = self.to_frame()
        if scale_id is not None:
            frame = frame[frame['scale'] == scale_id]
        return frame.groupby('epoch')[column].sum().to_numpy()


@dataclass
class ObjectiveResult:
    l_att: float
    l_lat: float
    total: float
    grad_att: np.ndarray
    grad_lat: np.ndarray


def augmented_objective(
    w_att: np.ndarray,
    w_lat: np.ndarray,
    features: np.ndarray,
    label_idx: np.ndarray,
    attr_values: np.ndarray,
    triplets: Sequence[Triplet],
    margin: float,
    loss_weights: Tuple[float, float] = (1.0, 1.0)
) -> ObjectiveResult:
    """One scale's weighted L_att + L_lat on a batch, with gradients w.r.t. both projections."""
    w_a, w_l = loss_weights
    l_att, g_att_phi = softmax_loss_embedded(features @ w_att, label_idx, attr_values)
    l_lat, g_lat_phi = batch_triplet_loss_grad(features @ w_lat, triplets, margin)
    return ObjectiveResult(
        l_att=l_att,
        l_lat=l_lat,
        total=w_a * l_att + w_l * l_lat,
        grad_att=w_a * (features.T @ g_att_phi),
        grad_lat=w_l * (features.T @ g_lat_phi)
    )


class EmbeddingTrainer:
    """Mini-batch SGD over every scale's (w_att, w_lat) against the summed
    per-scale objective. Scales share samples, batches and labels."""

    def __init__(self, cfg: TrainConfig):
        self.cfg = cfg
        self.logger = logging.getLogger(__name__)

    def initialize(self, dims: Sequence[int], k: int, k_lat: int) -> List[List[np.ndarray]]:
        """Uniform(-1/sqrt(d), 1/sqrt(d)) weights; scales draw from one seeded stream in turn."""
        rng = np.random.RandomState(self.cfg.seed)
        weights = []
        for d in dims:
            bound = 1.0 / np.sqrt(d)
            weights.append([
                rng.uniform(-bound, bound, size=(d, k)),
                rng.uniform(-bound, bound, size=(d, k_lat))
            ])
        return weights

    def fit(self, feature_sets: Sequence[FeatureSet], attrs: AttributeMatrix) -> Tuple[List[EmbeddingModel], TrainReport]:
        cfg = self.cfg
        if not feature_sets:
            raise InvalidArgumentError("at least one scale is required")
        first = feature_sets[0]
        for fs in feature_sets[1:]:
            if fs.n != first.n or not np.array_equal(fs.labels, first.labels):
                raise InvalidArgumentError(
                    f"scale {fs.scale_id} samples are not aligned with scale {first.scale_id}"
                )
        label_idx = attrs.label_indices(first.labels)
        k_lat = cfg.k_lat or attrs.k

        weights = self.initialize([fs.d for fs in feature_sets], attrs.k, k_lat)
        velocity = [[np.zeros_like(w) for w in pair] for pair in weights]

        rng = np.random.RandomState(cfg.seed + 1)
        report = TrainReport()
        n = first.n

        self.logger.info(
            f"Training {len(feature_sets)} scale(s) on {n} samples, {attrs.n_classes} seen classes, "
            f"k={attrs.k}, k_lat={k_lat}"
        )

        for epoch in tqdm(range(1, cfg.epochs + 1), desc='train', disable=not cfg.show_progress):
            order = rng.permutation(n)
            sums = np.zeros((len(feature_sets), 2))
            n_batches = 0

            for batch, start in enumerate(range(0, n, cfg.batch_size)):
                idx = order[start:start + cfg.batch_size]
                batch_labels = label_idx[idx]
                n_batches += 1

                for s, fs in enumerate(feature_sets):
                    w_att, w_lat = weights[s]
                    feats = fs.features[idx]
                    triplets = sample_triplets(
                        batch_labels, cfg.triplet_strategy, rng,
                        lat=feats @ w_lat, max_triplets=cfg.triplet_cap
                    )
                    result = augmented_objective(
                        w_att, w_lat, feats, batch_labels, attrs.values,
                        triplets, cfg.margin, cfg.loss_weights
                    )
                    if not np.isfinite(result.total):
                        self.logger.error(f"Non-finite loss on scale {fs.scale_id}")
                        raise NumericFailureError("non-finite training loss", epoch=epoch, batch=batch)

                    for j, grad in enumerate((result.grad_att, result.grad_lat)):
                        velocity[s][j] = cfg.momentum * velocity[s][j] + grad
                        weights[s][j] = weights[s][j] - cfg.learning_rate * velocity[s][j]
                    sums[s] += (result.l_att, result.l_lat)

            means = sums / n_batches
            for s, fs in enumerate(feature_sets):
                l_att, l_lat = means[s]
                total = cfg.loss_weights[0] * l_att + cfg.loss_weights[1] * l_lat
                report.records.append(EpochRecord(epoch, fs.scale_id, float(l_att), float(l_lat), float(total)))
                self.logger.debug(f"epoch {epoch} scale {fs.scale_id}: L_att={l_att:.4f} L_lat={l_lat:.4f}")
            self.logger.info(f"epoch {epoch}/{cfg.epochs}: total loss {report.history('total')[-1]:.4f}")

        report.models = [
            EmbeddingModel(w_att=w_att, w_lat=w_lat, scale_id=fs.scale_id)
            for (w_att, w_lat), fs in zip(weights, feature_sets)
        ]
        return report.models, report


def train(feature_sets: Sequence[FeatureSet], attrs: AttributeMatrix, cfg: TrainConfig) -> Tuple[List[EmbeddingModel], TrainReport]:
    return EmbeddingTrainer(cfg).fit(feature_sets, attrs)


@dataclass(frozen=True)
class MultiScaleCombiner:
    """W_com mapping concatenated per-scale UA features (S·k) back to k dims."""
    w_com: np.ndarray

    def __post_init__(self):
        w_com = np.array(self.w_com, dtype=np.float64, copy=True)
        if w_com.ndim != 2 or w_com.shape[0] % w_com.shape[1] != 0:
            raise InvalidArgumentError(f"combiner matrix of shape {w_com.shape} is not (S·k)×k")
        if not np.all(np.isfinite(w_com)):
            raise InvalidArgumentError("combiner weights must be finite")
        w_com.setflags(write=False)
        object.__setattr__(self, 'w_com', w_com)

    @property
    def k(self) -> int:
        return self.w_com.shape[1]

    @property
    def n_scales(self) -> int:
        return self.w_com.shape[0] // self.w_com.shape[1]

    @property
    def scale_weights(self) -> np.ndarray:
        """Mean diagonal of each scale's k×k block; alpha_s when W_com is block-scalar."""
        return _block_scalars(self.w_com, self.k, self.n_scales) / self.k

    def is_block_scalar(self) -> bool:
        return np.allclose(self.w_com, np.kron(self.scale_weights[:, None], np.eye(self.k)))

    @classmethod
    def averaging(cls, k: int, n_scales: int = 2) -> 'MultiScaleCombiner':
        return cls(np.vstack([np.eye(k)] * n_scales) / n_scales)

    def combine(self, ua_per_scale: Sequence[np.ndarray]) -> np.ndarray:
        if len(ua_per_scale) != self.n_scales:
            raise InvalidArgumentError(
                f"combiner expects {self.n_scales} scales, got {len(ua_per_scale)}"
            )
        return np.concatenate([np.asarray(u, dtype=np.float64) for u in ua_per_scale], axis=-1) @ self.w_com


def _block_scalars(grad: np.ndarray, k: int, n_scales: int) -> np.ndarray:
    """Trace of each scale's k×k block of an (S·k)×k matrix."""
    return np.array([np.trace(grad[s * k:(s + 1) * k]) for s in range(n_scales)])


def combiner_loss(
    ua_per_scale: Sequence[np.ndarray],
    labels: Sequence[int],
    attrs: AttributeMatrix,
    combiner: MultiScaleCombiner
) -> float:
    loss, _ = softmax_loss_embedded(combiner.combine(ua_per_scale), attrs.label_indices(labels), attrs.values)
    return loss


def train_combiner(
    ua_per_scale: Sequence[np.ndarray],
    labels: Sequence[int],
    attrs: AttributeMatrix,
    cfg: TrainConfig,
    init: Optional[MultiScaleCombiner] = None,
    holdout: Optional[Tuple[Sequence[np.ndarray], Sequence[int]]] = None
) -> MultiScaleCombiner:
    """Fit W_com with the UA softmax loss on frozen per-scale UA features.

    In 'scalar' mode only one weight per scale is learned, W_com staying
    [alpha_1·I; ...; alpha_S·I]; 'full' learns every entry. With a holdout
    (per-scale UA features, labels) the weights of the epoch with the lowest
    holdout loss are returned, epoch 0 being the initialization.
    """
    logger = logging.getLogger(__name__)
    n_scales = len(ua_per_scale)
    if n_scales < 2:
        raise InvalidArgumentError("combining needs at least two scales")
    stacked = np.concatenate([np.atleast_2d(u) for u in ua_per_scale], axis=1)
    if stacked.shape[1] != attrs.k * n_scales:
        raise InvalidArgumentError("every scale must provide k-dim UA features")
    label_idx = attrs.label_indices(labels)
    k = attrs.k

    start = init or MultiScaleCombiner.averaging(k, n_scales)
    w_com = np.array(start.w_com)
    scalar = cfg.combiner_mode == 'scalar'
    if scalar and not start.is_block_scalar():
        raise InvalidArgumentError("scalar combiner training needs a block-scalar initialization")
    velocity = np.zeros(n_scales) if scalar else np.zeros_like(w_com)
    rng = np.random.RandomState(cfg.seed + 2)
    n = stacked.shape[0]

    best, best_loss, best_epoch = w_com, np.inf, 0
    if holdout is not None:
        best_loss = combiner_loss(holdout[0], holdout[1], attrs, MultiScaleCombiner(w_com))

    for epoch in range(1, (cfg.combiner_epochs or cfg.epochs) + 1):
        order = rng.permutation(n)
        losses = []
        for batch, start in enumerate(range(0, n, cfg.batch_size)):
            idx = order[start:start + cfg.batch_size]
            x = stacked[idx]
            loss, grad_phi = softmax_loss_embedded(x @ w_com, label_idx[idx], attrs.values)
            if not np.isfinite(loss):
                raise NumericFailureError("non-finite combiner loss", epoch=epoch, batch=batch)
            grad = x.T @ grad_phi
            if scalar:
                velocity = cfg.momentum * velocity + _block_scalars(grad, k, n_scales)
                w_com = w_com - cfg.learning_rate * np.kron(velocity[:, None], np.eye(k))
            else:
                velocity = cfg.momentum * velocity + grad
                w_com = w_com - cfg.learning_rate * velocity
            losses.append(loss)
        message = f"combiner epoch {epoch}: L_att={np.mean(losses):.4f}"

        if holdout is not None:
            held = combiner_loss(holdout[0], holdout[1], attrs, MultiScaleCombiner(w_com))
            message += f", holdout={held:.4f}"
            if held < best_loss:
                best, best_loss, best_epoch = w_com, held, epoch
        logger.debug(message)

    if holdout is None:
        best, best_epoch = w_com, cfg.combiner_epochs or cfg.epochs
    logger.info(f"Trained {n_scales}-scale UA combiner ({cfg.combiner_mode}), kept epoch {best_epoch}")
    return MultiScaleCombiner(best)


def combine_la(*lats: np.ndarray) -> np.ndarray:
    """Concatenate the l2-normalized LA features of every scale (vectors or row batches)."""
    if not lats:
        raise InvalidArgumentError("no LA features to combine")
    return np.concatenate([l2_normalize(lat) for lat in lats], axis=-1)
