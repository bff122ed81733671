# Import necessary libraries and packages
import logging
import numpy as np
from dataclasses import dataclass, field
from typing import List, Sequence

from .core import AttributeMatrix, FeatureSet, Split


@dataclass(frozen=True)
class Violation:
    kind: str  # overlap, unknown-label, missing-attributes, dimension-mismatch, non-finite, duplicate-scale
    message: str


@dataclass
class ValidationReport:
    """Dataset consistency findings; an empty report means the data is usable."""
    violations: List[Violation] = field(default_factory=list)

    @property
    def is_valid(self) -> bool:
        return not self.violations

    def kinds(self) -> List[str]:
        return [v.kind for v in self.violations]

    def add(self, kind: str, message: str):
        self.violations.append(Violation(kind, message))


def validate_dataset(
    features: Sequence[FeatureSet],
    attrs: AttributeMatrix,
    split: Split,
    require_equal_dims: bool = False
) -> ValidationReport:
    """Check a multi-scale dataset against its attributes and split.

    Problems are collected, never raised. Dimension mismatches across scales
    are only flagged when `require_equal_dims` is set (a model that shares
    one feature dimension across scales).
    """
    logger = logging.getLogger(__name__)
    report = ValidationReport()

    for class_id in split.overlap:
        report.add('overlap', f"class {class_id} is listed as both seen and unseen")

    known = set(attrs.class_ids)
    for class_id in split.all_classes:
        if class_id not in known:
            report.add('missing-attributes', f"class {class_id} has no attribute row")

    if not np.all(np.isfinite(attrs.values)):
        bad_rows = np.flatnonzero(~np.all(np.isfinite(attrs.values), axis=1))
        report.add('non-finite', f"attribute rows {bad_rows.tolist()} contain non-finite values")

    split_classes = set(split.all_classes)
    seen_scales = set()
    for fs in features:
        if fs.scale_id in seen_scales:
            report.add('duplicate-scale', f"scale {fs.scale_id} appears more than once")
        seen_scales.add(fs.scale_id)

        unknown = sorted(set(np.unique(fs.labels).tolist()) - split_classes)
        if unknown:
            report.add('unknown-label', f"scale {fs.scale_id}: labels {unknown} are in neither class list")

        if not np.all(np.isfinite(fs.features)):
            n_bad = int(np.sum(~np.all(np.isfinite(fs.features), axis=1)))
            report.add('non-finite', f"scale {fs.scale_id}: {n_bad} feature rows contain non-finite values")

    if require_equal_dims and len({fs.d for fs in features}) > 1:
        dims = ', '.join(f"scale {fs.scale_id}: d={fs.d}" for fs in features)
        report.add('dimension-mismatch', f"feature dimensions differ across scales ({dims})")

    if len(features) > 1:
        first = features[0]
        for fs in features[1:]:
            if fs.n != first.n or not np.array_equal(fs.labels, first.labels):
                report.add(
                    'dimension-mismatch',
                    f"scale {fs.scale_id} samples are not aligned with scale {first.scale_id}"
                )

    for v in report.violations:
        logger.debug(f"validation: {v.kind}: {v.message}")
    return report
