# Import necessary libraries and packages
import numpy as np
from dataclasses import dataclass
from scipy.special import logsumexp, softmax
from typing import List, Optional, Sequence, Tuple

from models.core import AttributeMatrix
from utils.exceptions import InvalidArgumentError

# UA branch: softmax over seen-class compatibility scores.
# LA branch: squared-distance triplet hinge.
Triplet = Tuple[int, int, int]


@dataclass
class SoftmaxLossResult:
    loss: float
    grad_w: np.ndarray
    grad_features: np.ndarray


@dataclass
class TripletLossResult:
    loss: float
    grad_anchor: np.ndarray
    grad_positive: np.ndarray
    grad_negative: np.ndarray


def compatibility_scores(w: np.ndarray, feature: np.ndarray, attrs: AttributeMatrix) -> np.ndarray:
    """s^c = <wᵀ·feature, a^c> for every class row; accepts one vector or an (n, d) batch."""
    w = np.asarray(w, dtype=np.float64)
    feature = np.asarray(feature, dtype=np.float64)
    if w.ndim != 2 or w.shape[1] != attrs.k:
        raise InvalidArgumentError(f"projection of shape {w.shape} does not map into k={attrs.k}")
    if feature.shape[-1] != w.shape[0]:
        raise InvalidArgumentError(
            f"feature dimension {feature.shape[-1]} does not match projection rows {w.shape[0]}"
        )
    return (feature @ w) @ attrs.values.T


def softmax_loss_embedded(phi: np.ndarray, label_idx: np.ndarray, attr_values: np.ndarray) -> Tuple[float, np.ndarray]:
    """Mean softmax cross-entropy of <phi_i, a^c> scores and its gradient w.r.t. phi."""
    scores = phi @ attr_values.T
    n = scores.shape[0]
    rows = np.arange(n)
    loss = float(np.mean(logsumexp(scores, axis=1) - scores[rows, label_idx]))
    d_scores = softmax(scores, axis=1)
    d_scores[rows, label_idx] -= 1.0
    d_scores /= n
    return loss, d_scores @ attr_values


def softmax_loss_grad(w: np.ndarray, features: np.ndarray, labels: Sequence[int], attrs: AttributeMatrix) -> SoftmaxLossResult:
    """Softmax loss of compatibility scores over the classes in `attrs`.

    Returns gradients w.r.t. the projection and w.r.t. the input features,
    the latter for chaining into the zoom kernel.
    """
    features = np.atleast_2d(np.asarray(features, dtype=np.float64))
    w = np.asarray(w, dtype=np.float64)
    if features.shape[1] != w.shape[0] or w.shape[1] != attrs.k:
        raise InvalidArgumentError(
            f"features {features.shape}, projection {w.shape} and k={attrs.k} do not agree"
        )
    label_idx = attrs.label_indices(labels)
    if label_idx.shape[0] != features.shape[0]:
        raise InvalidArgumentError("one label per feature row is required")

    loss, grad_phi = softmax_loss_embedded(features @ w, label_idx, attrs.values)
    return SoftmaxLossResult(
        loss=loss,
        grad_w=features.T @ grad_phi,
        grad_features=grad_phi @ w.T
    )


def triplet_loss_grad(anchor: np.ndarray, positive: np.ndarray, negative: np.ndarray, margin: float) -> TripletLossResult:
    """max(0, m + |a - p|² - |a - n|²) and its gradients."""
    anchor = np.asarray(anchor, dtype=np.float64)
    positive = np.asarray(positive, dtype=np.float64)
    negative = np.asarray(negative, dtype=np.float64)
    if not (anchor.shape == positive.shape == negative.shape):
        raise InvalidArgumentError("triplet members must share one dimension")

    d_pos = float(np.sum((anchor - positive) ** 2))
    d_neg = float(np.sum((anchor - negative) ** 2))
    hinge = margin + d_pos - d_neg
    if hinge <= 0.0:
        zero = np.zeros_like(anchor)
        return TripletLossResult(0.0, zero, zero.copy(), zero.copy())

    return TripletLossResult(
        loss=hinge,
        grad_anchor=2.0 * (negative - positive),
        grad_positive=-2.0 * (anchor - positive),
        grad_negative=2.0 * (anchor - negative)
    )


def batch_triplet_loss_grad(lat: np.ndarray, triplets: Sequence[Triplet], margin: float) -> Tuple[float, np.ndarray]:
    """Mean triplet loss over index triples into `lat` and its gradient w.r.t. `lat`."""
    grad = np.zeros_like(lat)
    if not triplets:
        return 0.0, grad
    idx = np.asarray(triplets, dtype=np.int64)
    a, p, n = lat[idx[:, 0]], lat[idx[:, 1]], lat[idx[:, 2]]
    hinge = margin + np.sum((a - p) ** 2, axis=1) - np.sum((a - n) ** 2, axis=1)
    active = hinge > 0.0
    count = len(triplets)

    w = active[:, None] / count
    np.add.at(grad, idx[:, 0], 2.0 * (n - p) * w)
    np.add.at(grad, idx[:, 1], -2.0 * (a - p) * w)
    np.add.at(grad, idx[:, 2], 2.0 * (a - n) * w)
    return float(np.sum(hinge[active]) / count), grad


def sample_triplets(
    labels: Sequence[int],
    strategy: str,
    rng: np.random.RandomState,
    lat: Optional[np.ndarray] = None,
    max_triplets: Optional[int] = None
) -> List[Triplet]:
    """(anchor, positive, negative) index triples within one batch.

    Every anchor with a same-class partner gets one uniformly drawn positive.
    The negative is uniform for 'random'; for 'semi-hard' it is the closest
    negative still farther than the positive (falling back to the farthest
    negative when none is), with ties to the lowest index.
    """
    labels = np.asarray(labels)
    if strategy not in ('random', 'semi-hard'):
        raise InvalidArgumentError(f"unknown triplet strategy '{strategy}'")
    if strategy == 'semi-hard' and lat is None:
        raise InvalidArgumentError("semi-hard mining needs the batch LA features")

    triplets: List[Triplet] = []
    indices = np.arange(labels.shape[0])
    for anchor in indices:
        positives = indices[(labels == labels[anchor]) & (indices != anchor)]
        negatives = indices[labels != labels[anchor]]
        if positives.size == 0 or negatives.size == 0:
            continue
        positive = int(rng.choice(positives))
        if strategy == 'random':
            negative = int(rng.choice(negatives))
        else:
            d_pos = np.sum((lat[anchor] - lat[positive]) ** 2)
            d_neg = np.sum((lat[anchor] - lat[negatives]) ** 2, axis=1)
            farther = d_neg > d_pos
            if np.any(farther):
                negative = int(negatives[farther][np.argmin(d_neg[farther])])
            else:
                negative = int(negatives[np.argmax(d_neg)])
        triplets.append((int(anchor), positive, negative))

    if max_triplets is not None and len(triplets) > max_triplets:
        keep = np.sort(rng.choice(len(triplets), size=max_triplets, replace=False))
        triplets = [triplets[i] for i in keep]
    return triplets
