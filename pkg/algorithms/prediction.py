# Import necessary libraries and packages
import logging
import numpy as np
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

from models.core import AttributeMatrix, EmbeddingModel, project_batch
from utils.config_handler import Space
from utils.exceptions import InvalidArgumentError
from utils.metrics import GzslReport, gzsl_report, mca
from .trainer import MultiScaleCombiner, combine_la
from .transfer import PrototypeSet

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class PredictionResult:
    """Predicted class id and score row per sample; score columns follow `class_ids`."""
    predicted: np.ndarray
    scores: np.ndarray
    class_ids: Tuple[int, ...]
    space: str


@dataclass(frozen=True)
class EmbeddedBatch:
    """UA and LA embeddings of a batch of samples with their labels."""
    att: np.ndarray
    lat: np.ndarray
    labels: np.ndarray


def _argmax_lowest_id(scores: np.ndarray, class_ids: Sequence[int]) -> np.ndarray:
    # scan columns in ascending id order so the first maximum is the lowest id
    order = np.argsort(np.asarray(class_ids), kind='stable')
    best = np.argmax(scores[:, order], axis=1)
    return np.asarray(class_ids, dtype=np.int64)[order][best]


def _result(scores: np.ndarray, class_ids: Sequence[int], space: str) -> PredictionResult:
    if not np.all(np.isfinite(scores)):
        raise InvalidArgumentError(f"non-finite {space} scores")
    return PredictionResult(
        predicted=_argmax_lowest_id(scores, class_ids),
        scores=scores,
        class_ids=tuple(int(c) for c in class_ids),
        space=space
    )


def _as_batch(v: np.ndarray, dim: int, name: str) -> np.ndarray:
    v = np.atleast_2d(np.asarray(v, dtype=np.float64))
    if v.shape[1] != dim:
        raise InvalidArgumentError(f"{name} of dimension {v.shape[1]} does not match {dim}")
    return v


def ua_scores(phi_att: np.ndarray, attrs: AttributeMatrix) -> np.ndarray:
    if attrs.n_classes == 0:
        raise InvalidArgumentError("no candidate classes")
    return _as_batch(phi_att, attrs.k, 'UA feature') @ attrs.values.T


def la_scores(phi_lat: np.ndarray, prototypes: PrototypeSet) -> np.ndarray:
    if not prototypes.class_ids:
        raise InvalidArgumentError("no candidate prototypes")
    return _as_batch(phi_lat, prototypes.dim, 'LA feature') @ prototypes.values.T


def _zscore(scores: np.ndarray) -> np.ndarray:
    std = scores.std()
    centered = scores - scores.mean()
    return centered / std if std > 0 else centered


def predict_ua(phi_att: np.ndarray, unseen_attrs: AttributeMatrix) -> PredictionResult:
    """argmax_c <phi_att, a^c>; accepts one k-vector or an (n, k) batch."""
    return _result(ua_scores(phi_att, unseen_attrs), unseen_attrs.class_ids, 'ua')


def predict_la(phi_lat: np.ndarray, prototypes: PrototypeSet) -> PredictionResult:
    """argmax_c <phi_lat, prototype_c>."""
    return _result(la_scores(phi_lat, prototypes), prototypes.class_ids, 'la')


def predict_combined(
    phi_att: np.ndarray,
    phi_lat: np.ndarray,
    unseen_attrs: AttributeMatrix,
    prototypes: PrototypeSet,
    normalize_scores: bool = False
) -> PredictionResult:
    """argmax_c (<phi_att, a^c> + <phi_lat, prototype_c>).

    With `normalize_scores` each term is z-scored over the whole batch first.
    """
    prototypes = prototypes.subset(unseen_attrs.class_ids)
    ua = ua_scores(phi_att, unseen_attrs)
    la = la_scores(phi_lat, prototypes)
    if ua.shape[0] != la.shape[0]:
        raise InvalidArgumentError(f"{ua.shape[0]} UA rows but {la.shape[0]} LA rows")
    if normalize_scores:
        ua, la = _zscore(ua), _zscore(la)
    return _result(ua + la, unseen_attrs.class_ids, 'ua+la')


def predict_space(
    space: Space,
    phi_att: np.ndarray,
    phi_lat: np.ndarray,
    attrs: AttributeMatrix,
    prototypes: Optional[PrototypeSet],
    normalize_scores: bool = False
) -> PredictionResult:
    if space == 'ua':
        return predict_ua(phi_att, attrs)
    if prototypes is None:
        raise InvalidArgumentError(f"space '{space}' needs LA prototypes")
    if space == 'la':
        return predict_la(phi_lat, prototypes.subset(attrs.class_ids))
    if space == 'ua+la':
        return predict_combined(phi_att, phi_lat, attrs, prototypes, normalize_scores)
    raise InvalidArgumentError(f"unknown prediction space '{space}'")


def embed_multiscale(
    features_per_scale: Sequence[np.ndarray],
    models: Sequence[EmbeddingModel],
    combiner: MultiScaleCombiner
) -> Tuple[np.ndarray, np.ndarray]:
    """Combined UA (through W_com) and combined LA (normalized concatenation)."""
    if len(models) != combiner.n_scales:
        raise InvalidArgumentError(f"{len(models)} models for a {combiner.n_scales}-scale combiner")
    if len(features_per_scale) != len(models):
        raise InvalidArgumentError(
            f"features for {len(features_per_scale)} scales, models for {len(models)}"
        )
    projected = [
        project_batch(model, np.atleast_2d(np.asarray(x, dtype=np.float64)))
        for x, model in zip(features_per_scale, models)
    ]
    ua = combiner.combine([att for att, _ in projected])
    la = combine_la(*[lat for _, lat in projected])
    return ua, la


def predict_multiscale(
    features_per_scale: Sequence[np.ndarray],
    models: Sequence[EmbeddingModel],
    combiner: MultiScaleCombiner,
    prototypes: PrototypeSet,
    unseen_attrs: AttributeMatrix,
    normalize_scores: bool = False
) -> PredictionResult:
    """predict_combined on the combined UA and LA features of every scale."""
    ua, la = embed_multiscale(features_per_scale, models, combiner)
    return predict_combined(ua, la, unseen_attrs, prototypes, normalize_scores)


def gzsl_eval(
    unseen_test: EmbeddedBatch,
    seen_test: EmbeddedBatch,
    joint_attrs: AttributeMatrix,
    joint_prototypes: Optional[PrototypeSet],
    space: Space = 'ua+la',
    normalize_scores: bool = False
) -> GzslReport:
    """A_U→T and A_S→T as per-class MCA over the joint argmax, and their harmonic mean."""
    if unseen_test.labels.size == 0 or seen_test.labels.size == 0:
        raise InvalidArgumentError("both gZSL partitions need at least one sample")

    accuracies = []
    for batch in (unseen_test, seen_test):
        result = predict_space(space, batch.att, batch.lat, joint_attrs, joint_prototypes, normalize_scores)
        accuracies.append(mca(result.predicted, batch.labels, joint_attrs.class_ids).mca)

    report = gzsl_report(*accuracies)
    logger.info(f"gZSL ({space}): A_U->T={report.a_u_to_t:.2f} A_S->T={report.a_s_to_t:.2f} H={report.h:.2f}")
    return report
