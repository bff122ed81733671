# Import necessary libraries and packages
import logging
import numpy as np
import pandas as pd
from dataclasses import dataclass
from pathlib import Path
from sklearn.metrics.pairwise import cosine_similarity
from tabulate import tabulate
from typing import Dict, List, Sequence, Tuple

from algorithms.transfer import class_mean_prototypes
from models.core import AttributeMatrix, EmbeddingModel, project_batch
from .exceptions import InvalidArgumentError
from .metrics import GzslReport, McaReport

logger = logging.getLogger(__name__)

# (sample index, label, element value)
RankedSample = Tuple[int, int, float]


@dataclass(frozen=True)
class ActivationReport:
    space: str
    element: int
    top: List[RankedSample]
    bottom: List[RankedSample]

    def to_frame(self) -> pd.DataFrame:
        rows = [('top', rank, *entry) for rank, entry in enumerate(self.top, start=1)]
        rows += [('bottom', rank, *entry) for rank, entry in enumerate(self.bottom, start=1)]
        return pd.DataFrame(rows, columns=['list', 'rank', 'sample', 'label', 'value'])


def activation_report(
    model: EmbeddingModel,
    features: np.ndarray,
    labels: Sequence[int],
    space: str,
    element: int,
    top_k: int = 5
) -> ActivationReport:
    """Samples with the largest and smallest value of one UA or LA element.

    Equal values are ordered by sample index; top_k is clamped to n.
    """
    if space not in ('ua', 'la'):
        raise InvalidArgumentError(f"activation space must be 'ua' or 'la', got '{space}'")
    if top_k < 1:
        raise InvalidArgumentError("top_k must be >= 1")
    att, lat = project_batch(model, features)
    embedded = att if space == 'ua' else lat
    if not 0 <= element < embedded.shape[1]:
        raise InvalidArgumentError(
            f"element {element} out of range for {space.upper()} dimension {embedded.shape[1]}"
        )
    labels = np.asarray(labels, dtype=np.int64)
    values = embedded[:, element]
    index = np.arange(values.size)
    k = min(top_k, values.size)

    def ranked(order: np.ndarray) -> List[RankedSample]:
        return [(int(i), int(labels[i]), float(values[i])) for i in order[:k]]

    return ActivationReport(
        space=space,
        element=element,
        top=ranked(np.lexsort((index, -values))),
        bottom=ranked(np.lexsort((index, values)))
    )


def similarity_frames(
    unseen_attrs: AttributeMatrix,
    unseen_lat: np.ndarray,
    unseen_labels: Sequence[int],
    class_names: Sequence[str]
) -> Dict[str, pd.DataFrame]:
    """Cosine similarity between unseen classes from their attribute rows and
    from directly averaged LA features of their samples."""
    lat_means = class_mean_prototypes(unseen_lat, unseen_labels, unseen_attrs.class_ids)
    names = [class_names[c] for c in unseen_attrs.class_ids]
    frames = {}
    for space, values in (('ua', unseen_attrs.values), ('la', lat_means.values)):
        frame = pd.DataFrame(cosine_similarity(values), columns=names)
        frame.insert(0, 'class', names)
        frames[space] = frame
    return frames


def format_table(frame: pd.DataFrame, floatfmt: str = '.2f') -> str:
    return tabulate(frame, headers='keys', tablefmt='grid', floatfmt=floatfmt, showindex=False)


def mca_frame(report: McaReport, class_names: Sequence[str]) -> pd.DataFrame:
    rows = [(c, class_names[c], acc) for c, acc in sorted(report.per_class.items())]
    return pd.DataFrame(rows, columns=['class_id', 'class', 'accuracy'])


def write_report(frame: pd.DataFrame, out_dir: Path, name: str, summary: str = '') -> Path:
    """Write `<name>.csv` and a human-readable `<name>.txt` beside it."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    csv_path = out_dir / f'{name}.csv'
    frame.to_csv(csv_path, index=False)
    with open(out_dir / f'{name}.txt', 'w') as f:
        if summary:
            f.write(summary + '\n\n')
        f.write(format_table(frame) + '\n')
    logger.info(f"Wrote {csv_path}")
    return csv_path


def gzsl_frame(report: GzslReport, space: str) -> pd.DataFrame:
    return pd.DataFrame([{'space': space, **report.as_dict()}])
