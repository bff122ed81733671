# Import necessary libraries and packages
import numpy as np
from dataclasses import dataclass
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

from utils.exceptions import InvalidArgumentError

# Class identifiers are dense integers; matrices are float64, row-major by class
# (attributes, prototypes) or by sample (features). Arrays are copied on
# construction and marked read-only.
NORM_EPS = 1e-12


def _frozen_array(values, ndim: int, name: str) -> np.ndarray:
    array = np.array(values, dtype=np.float64, copy=True)
    if array.ndim != ndim:
        raise InvalidArgumentError(f"{name} must be {ndim}-dimensional, got shape {array.shape}")
    array.setflags(write=False)
    return array


@dataclass(frozen=True)
class AttributeMatrix:
    """Per-class user-defined attribute vectors, one row per class id."""
    class_ids: Tuple[int, ...]
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, 'class_ids', tuple(int(c) for c in self.class_ids))
        object.__setattr__(self, 'values', _frozen_array(self.values, 2, 'attribute values'))
        if self.values.shape[1] < 1:
            raise InvalidArgumentError("attribute dimension k must be >= 1")
        if len(set(self.class_ids)) != len(self.class_ids):
            raise InvalidArgumentError("attribute class ids must be unique")
        if self.values.shape[0] != len(self.class_ids):
            raise InvalidArgumentError(
                f"{self.values.shape[0]} attribute rows for {len(self.class_ids)} classes"
            )

    @property
    def k(self) -> int:
        return self.values.shape[1]

    @property
    def n_classes(self) -> int:
        return len(self.class_ids)

    def index_of(self, class_id: int) -> int:
        try:
            return self.class_ids.index(int(class_id))
        except ValueError:
            raise InvalidArgumentError(f"class {class_id} has no attribute row") from None

    def row(self, class_id: int) -> np.ndarray:
        return self.values[self.index_of(class_id)]

    def label_indices(self, labels: Iterable[int]) -> np.ndarray:
        """Map class ids to row indices, rejecting ids without a row."""
        lookup = {c: i for i, c in enumerate(self.class_ids)}
        try:
            return np.array([lookup[int(y)] for y in labels], dtype=np.int64)
        except KeyError as e:
            raise InvalidArgumentError(f"label {e.args[0]} is not among the attribute classes") from None

    def subset(self, class_ids: Sequence[int]) -> 'AttributeMatrix':
        rows = [self.index_of(c) for c in class_ids]
        return AttributeMatrix(class_ids=tuple(class_ids), values=self.values[rows])


@dataclass(frozen=True)
class FeatureSet:
    """Labeled d-dim feature vectors for one scale."""
    scale_id: int
    features: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        if int(self.scale_id) < 1:
            raise InvalidArgumentError("scale_id must be >= 1")
        features = _frozen_array(self.features, 2, 'features')
        labels = np.array(self.labels, dtype=np.int64, copy=True).reshape(-1)
        labels.setflags(write=False)
        if features.shape[0] < 1:
            raise InvalidArgumentError("a feature set needs at least one sample")
        if labels.shape[0] != features.shape[0]:
            raise InvalidArgumentError(
                f"{labels.shape[0]} labels for {features.shape[0]} feature rows"
            )
        object.__setattr__(self, 'scale_id', int(self.scale_id))
        object.__setattr__(self, 'features', features)
        object.__setattr__(self, 'labels', labels)

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def d(self) -> int:
        return self.features.shape[1]

    def take(self, indices: Sequence[int]) -> 'FeatureSet':
        indices = np.asarray(indices, dtype=np.int64)
        return FeatureSet(self.scale_id, self.features[indices], self.labels[indices])

    def for_classes(self, class_ids: Iterable[int]) -> 'FeatureSet':
        return self.take(np.flatnonzero(np.isin(self.labels, list(class_ids))))


@dataclass(frozen=True)
class Split:
    """Seen (training) and unseen (test) class lists.

    Disjointness is reported by `validate_dataset` rather than enforced here,
    so that an inconsistent split can still be inspected.
    """
    seen_classes: Tuple[int, ...]
    unseen_classes: Tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, 'seen_classes', tuple(int(c) for c in self.seen_classes))
        object.__setattr__(self, 'unseen_classes', tuple(int(c) for c in self.unseen_classes))
        if not self.seen_classes or not self.unseen_classes:
            raise InvalidArgumentError("seen and unseen class lists must be non-empty")

    @property
    def overlap(self) -> Tuple[int, ...]:
        return tuple(sorted(set(self.seen_classes) & set(self.unseen_classes)))

    @property
    def all_classes(self) -> Tuple[int, ...]:
        return self.seen_classes + tuple(c for c in self.unseen_classes if c not in self.seen_classes)


@dataclass(frozen=True)
class EmbeddedFeature:
    att: np.ndarray
    lat: np.ndarray


@dataclass(frozen=True)
class EmbeddingModel:
    """Projections of d-dim features into the UA (k) and LA (k_lat) spaces."""
    w_att: np.ndarray
    w_lat: np.ndarray
    scale_id: int = 1

    def __post_init__(self):
        w_att = _frozen_array(self.w_att, 2, 'w_att')
        w_lat = _frozen_array(self.w_lat, 2, 'w_lat')
        if w_att.shape[0] != w_lat.shape[0]:
            raise InvalidArgumentError(
                f"w_att and w_lat disagree on feature dimension ({w_att.shape[0]} vs {w_lat.shape[0]})"
            )
        if w_att.shape[1] < 1 or w_lat.shape[1] < 1:
            raise InvalidArgumentError("k and k_lat must both be >= 1")
        if not (np.all(np.isfinite(w_att)) and np.all(np.isfinite(w_lat))):
            raise InvalidArgumentError("embedding weights must be finite")
        object.__setattr__(self, 'w_att', w_att)
        object.__setattr__(self, 'w_lat', w_lat)
        object.__setattr__(self, 'scale_id', int(self.scale_id))

    @property
    def d(self) -> int:
        return self.w_att.shape[0]

    @property
    def k(self) -> int:
        return self.w_att.shape[1]

    @property
    def k_lat(self) -> int:
        return self.w_lat.shape[1]

    @property
    def w_aug(self) -> np.ndarray:
        return np.hstack([self.w_att, self.w_lat])


def project(model: EmbeddingModel, feature: np.ndarray) -> EmbeddedFeature:
    """att = w_attᵀ·feature, lat = w_latᵀ·feature."""
    feature = np.asarray(feature, dtype=np.float64)
    if feature.shape != (model.d,):
        raise InvalidArgumentError(
            f"feature of shape {feature.shape} does not match model dimension {model.d}"
        )
    return EmbeddedFeature(att=model.w_att.T @ feature, lat=model.w_lat.T @ feature)


def project_batch(model: EmbeddingModel, features: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Row-wise `project` over an (n, d) matrix; returns (n, k) and (n, k_lat)."""
    features = np.asarray(features, dtype=np.float64)
    if features.ndim != 2 or features.shape[1] != model.d:
        raise InvalidArgumentError(
            f"features of shape {features.shape} do not match model dimension {model.d}"
        )
    return features @ model.w_att, features @ model.w_lat


def split_embedding(phi_e: np.ndarray, k: int, k_lat: Optional[int] = None) -> EmbeddedFeature:
    """Split an augmented embedding into its first k (UA) and remaining (LA) entries."""
    phi_e = np.asarray(phi_e, dtype=np.float64).reshape(-1)
    if k_lat is None:
        k_lat = phi_e.shape[0] - k
    if k < 1 or k_lat < 1:
        raise InvalidArgumentError(f"k={k} and k_lat={k_lat} must both be >= 1")
    if phi_e.shape[0] != k + k_lat:
        raise InvalidArgumentError(
            f"embedding of length {phi_e.shape[0]} cannot split into {k} + {k_lat}"
        )
    return EmbeddedFeature(att=phi_e[:k].copy(), lat=phi_e[k:].copy())


def l2_normalize(v: np.ndarray, eps: float = NORM_EPS) -> np.ndarray:
    """Unit-normalize a vector (or each row of a matrix); near-zero rows pass through."""
    v = np.asarray(v, dtype=np.float64)
    norms = np.linalg.norm(v, axis=-1, keepdims=True)
    safe = np.where(norms > eps, norms, 1.0)
    return np.where(norms > eps, v / safe, v)


def holdout_split(
    labels: np.ndarray,
    class_ids: Sequence[int],
    fraction: float,
    seed: int
) -> Tuple[np.ndarray, np.ndarray]:
    """Seeded per-class holdout: returns (train_indices, holdout_indices).

    Each class listed in `class_ids` contributes round(fraction * count)
    samples to the holdout, at least one when it has two or more samples,
    and always keeps at least one for training.
    """
    if not 0.0 < fraction < 1.0:
        raise InvalidArgumentError(f"holdout fraction must lie in (0, 1), got {fraction}")
    rng = np.random.RandomState(seed)
    labels = np.asarray(labels)
    train: List[int] = []
    held: List[int] = []
    for class_id in class_ids:
        members = np.flatnonzero(labels == class_id)
        if members.size == 0:
            continue
        members = members[rng.permutation(members.size)]
        n_hold = int(round(fraction * members.size))
        if members.size >= 2:
            n_hold = min(max(n_hold, 1), members.size - 1)
        else:
            n_hold = 0
        held.extend(members[:n_hold].tolist())
        train.extend(members[n_hold:].tolist())
    return np.array(sorted(train), dtype=np.int64), np.array(sorted(held), dtype=np.int64)


def class_names_to_ids(names: Sequence[str]) -> Dict[str, int]:
    """Dense id assignment: the i-th name becomes class i."""
    if len(set(names)) != len(names):
        raise InvalidArgumentError("class names must be unique")
    return {name: i for i, name in enumerate(names)}
