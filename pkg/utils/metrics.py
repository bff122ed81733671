# Import necessary libraries and packages
import numpy as np
from dataclasses import dataclass, field
from sklearn.metrics import recall_score
from typing import Dict, Optional, Sequence

from .exceptions import InvalidArgumentError


@dataclass(frozen=True)
class McaReport:
    """Per-class accuracies (percent) and their unweighted mean."""
    per_class: Dict[int, float] = field(default_factory=dict)
    mca: float = 0.0
    n_samples: int = 0


@dataclass(frozen=True)
class GzslReport:
    """Generalized ZSL accuracies over the joint label space, all in percent."""
    a_u_to_t: float
    a_s_to_t: float
    h: float

    def as_dict(self) -> Dict[str, float]:
        return {'A_U->T': self.a_u_to_t, 'A_S->T': self.a_s_to_t, 'H': self.h}


def mca(predictions: Sequence[int], labels: Sequence[int], class_ids: Optional[Sequence[int]] = None) -> McaReport:
    """Multi-way classification accuracy: mean of per-class accuracies over
    the classes present among `labels`."""
    predictions = np.asarray(predictions, dtype=np.int64).reshape(-1)
    labels = np.asarray(labels, dtype=np.int64).reshape(-1)
    if labels.size == 0:
        raise InvalidArgumentError("cannot compute accuracy on an empty prediction set")
    if predictions.shape != labels.shape:
        raise InvalidArgumentError(f"{predictions.size} predictions for {labels.size} labels")
    if class_ids is not None:
        unknown = sorted(set(labels.tolist()) - {int(c) for c in class_ids})
        if unknown:
            raise InvalidArgumentError(f"labels {unknown} are outside the evaluated class set")

    # per-class accuracy is the recall of that class
    present = np.unique(labels)
    recalls = recall_score(labels, predictions, labels=present, average=None, zero_division=0)
    per_class = {int(c): 100.0 * float(r) for c, r in zip(present, recalls)}
    return McaReport(
        per_class=per_class,
        mca=float(np.mean(list(per_class.values()))),
        n_samples=int(labels.size)
    )


def harmonic_mean(a_u: float, a_s: float) -> float:
    """H = 2·a_u·a_s / (a_u + a_s), defined as 0 when both are 0."""
    if a_u < 0 or a_s < 0:
        raise InvalidArgumentError("accuracies must be nonnegative")
    if a_u + a_s == 0:
        return 0.0
    return 2.0 * a_u * a_s / (a_u + a_s)


def gzsl_report(a_u_to_t: float, a_s_to_t: float) -> GzslReport:
    return GzslReport(a_u_to_t, a_s_to_t, harmonic_mean(a_u_to_t, a_s_to_t))
