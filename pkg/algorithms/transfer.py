# Import necessary libraries and packages
import logging
import numpy as np
from dataclasses import dataclass
from enum import Enum
from scipy.linalg import LinAlgError, cho_factor, cho_solve
from typing import Sequence, Tuple

from models.core import AttributeMatrix, EmbeddingModel, FeatureSet, l2_normalize, project_batch
from utils.config_handler import TransferConfig
from utils.exceptions import InvalidArgumentError, NumericFailureError


class Provenance(str, Enum):
    EMPIRICAL_MEAN = 'empirical-mean'
    TRANSFERRED = 'transferred'


@dataclass(frozen=True)
class TransferWeights:
    """Row u holds the ridge coefficients of unseen class u over the seen classes."""
    unseen_ids: Tuple[int, ...]
    seen_ids: Tuple[int, ...]
    betas: np.ndarray

    def __post_init__(self):
        betas = np.array(self.betas, dtype=np.float64, copy=True)
        if betas.shape != (len(self.unseen_ids), len(self.seen_ids)):
            raise InvalidArgumentError(
                f"betas of shape {betas.shape} for {len(self.unseen_ids)} unseen × {len(self.seen_ids)} seen classes"
            )
        if not np.all(np.isfinite(betas)):
            raise InvalidArgumentError("transfer weights must be finite")
        betas.setflags(write=False)
        object.__setattr__(self, 'unseen_ids', tuple(int(c) for c in self.unseen_ids))
        object.__setattr__(self, 'seen_ids', tuple(int(c) for c in self.seen_ids))
        object.__setattr__(self, 'betas', betas)


@dataclass(frozen=True)
class PrototypeSet:
    """Per-class LA prototypes with per-class provenance."""
    class_ids: Tuple[int, ...]
    values: np.ndarray
    provenance: Tuple[Provenance, ...]

    def __post_init__(self):
        values = np.array(self.values, dtype=np.float64, copy=True)
        if values.ndim != 2 or values.shape[0] != len(self.class_ids):
            raise InvalidArgumentError(
                f"prototype matrix of shape {values.shape} for {len(self.class_ids)} classes"
            )
        if len(self.provenance) != len(self.class_ids):
            raise InvalidArgumentError("one provenance flag per class is required")
        if not np.all(np.isfinite(values)):
            raise InvalidArgumentError("prototypes must be finite")
        values.setflags(write=False)
        object.__setattr__(self, 'class_ids', tuple(int(c) for c in self.class_ids))
        object.__setattr__(self, 'provenance', tuple(Provenance(p) for p in self.provenance))
        object.__setattr__(self, 'values', values)

    @property
    def dim(self) -> int:
        return self.values.shape[1]

    def subset(self, class_ids: Sequence[int]) -> 'PrototypeSet':
        lookup = {c: i for i, c in enumerate(self.class_ids)}
        missing = [c for c in class_ids if c not in lookup]
        if missing:
            raise InvalidArgumentError(f"no prototypes for classes {missing}")
        rows = [lookup[c] for c in class_ids]
        return PrototypeSet(tuple(class_ids), self.values[rows], tuple(self.provenance[r] for r in rows))

    @staticmethod
    def concat(*sets: 'PrototypeSet') -> 'PrototypeSet':
        return PrototypeSet(
            class_ids=tuple(c for s in sets for c in s.class_ids),
            values=np.vstack([s.values for s in sets]),
            provenance=tuple(p for s in sets for p in s.provenance)
        )


def ridge_betas(seen_attrs: np.ndarray, unseen_attr: np.ndarray, lam: float) -> np.ndarray:
    """argmin_β |a^u - Aᵀβ|² + λ|β|², i.e. β = (A Aᵀ + λI)⁻¹ A a^u.

    `unseen_attr` may be one k-vector or a (c_u, k) matrix, giving one row of
    coefficients per unseen class.
    """
    A = np.asarray(seen_attrs, dtype=np.float64)
    targets = np.asarray(unseen_attr, dtype=np.float64)
    if lam < 0:
        raise InvalidArgumentError(f"ridge coefficient must be >= 0, got {lam}")
    if A.ndim != 2 or targets.shape[-1] != A.shape[1]:
        raise InvalidArgumentError(
            f"seen attributes {A.shape} and unseen attributes {targets.shape} disagree on k"
        )

    gram = A @ A.T + lam * np.eye(A.shape[0])
    if lam == 0 and np.linalg.matrix_rank(gram) < A.shape[0]:
        raise NumericFailureError("seen-attribute Gram matrix is singular at lambda = 0")
    try:
        factor = cho_factor(gram)
    except LinAlgError as e:
        raise NumericFailureError(f"ridge system is not positive definite: {e}") from e
    return cho_solve(factor, A @ targets.T).T


def compute_transfer_weights(seen: AttributeMatrix, unseen: AttributeMatrix, cfg: TransferConfig) -> TransferWeights:
    if seen.k != unseen.k:
        raise InvalidArgumentError("seen and unseen attributes must share k")
    betas = ridge_betas(seen.values, unseen.values, cfg.lambda_)
    logging.getLogger(__name__).info(
        f"Ridge transfer: {unseen.n_classes} unseen over {seen.n_classes} seen classes, "
        f"lambda={cfg.lambda_}, max |beta|={np.max(np.abs(betas)):.4f}"
    )
    return TransferWeights(unseen.class_ids, seen.class_ids, betas)


def class_mean_prototypes(
    lat: np.ndarray,
    labels: np.ndarray,
    class_ids: Sequence[int],
    normalize_first: bool = False
) -> PrototypeSet:
    """Arithmetic mean of LA rows per class; every listed class needs a sample."""
    lat = np.asarray(lat, dtype=np.float64)
    if normalize_first:
        lat = l2_normalize(lat)
    labels = np.asarray(labels)
    rows = []
    for class_id in class_ids:
        members = labels == class_id
        if not np.any(members):
            raise InvalidArgumentError(f"class {class_id} has no samples to average")
        rows.append(lat[members].mean(axis=0))
    return PrototypeSet(
        class_ids=tuple(class_ids),
        values=np.vstack(rows),
        provenance=(Provenance.EMPIRICAL_MEAN,) * len(rows)
    )


def seen_prototypes(
    model: EmbeddingModel,
    features: FeatureSet,
    seen_ids: Sequence[int],
    normalize_first: bool = False
) -> PrototypeSet:
    """Empirical-mean LA prototype of every seen class."""
    _, lat = project_batch(model, features.features)
    return class_mean_prototypes(lat, features.labels, seen_ids, normalize_first)


def unseen_prototypes(betas: TransferWeights, seen: PrototypeSet) -> PrototypeSet:
    """Apply the UA-space relationship to the LA space: Σ_c β_c^u · prototype_c."""
    if betas.seen_ids != seen.class_ids:
        raise InvalidArgumentError(
            "transfer weights are not indexed over the seen prototype classes"
        )
    return PrototypeSet(
        class_ids=betas.unseen_ids,
        values=betas.betas @ seen.values,
        provenance=(Provenance.TRANSFERRED,) * len(betas.unseen_ids)
    )
