# Import necessary libraries and packages
import json
import logging
import struct
import numpy as np
import pandas as pd
from dataclasses import dataclass
from pathlib import Path
from sklearn.preprocessing import MinMaxScaler, normalize
from typing import Dict, List, Sequence, Tuple, Union

from algorithms.transfer import PrototypeSet, TransferWeights
from algorithms.zoom_kernel import ImageGrid
from models.core import AttributeMatrix, EmbeddingModel, FeatureSet, Split, class_names_to_ids
from .exceptions import DataError, FormatError, InvalidArgumentError

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

MAGIC = b'ZSLM'
VERSION = 1
# magic, version u16, rows u32, cols u32, dtype u8, one pad byte
HEADER = struct.Struct('<4sHIIBx')
DTYPES = {0: np.dtype('<f4'), 1: np.dtype('<f8')}
DTYPE_CODES = {'f32': 0, 'f64': 1}

CLASSES_FILE = 'classes.json'
SPLIT_FILE = 'split.json'
ATTRIBUTES_FILE = 'attributes.zslm'


def features_file(scale_id: int) -> str:
    return f'features_s{scale_id}.zslm'


def labels_file(scale_id: int) -> str:
    return f'labels_s{scale_id}.zslm'


def save_matrix(matrix: np.ndarray, path: PathLike, dtype: str = 'f64'):
    """Write a 2-D matrix in the binary ZSLM layout (or CSV for a .csv path)."""
    matrix = np.asarray(matrix)
    if matrix.ndim != 2:
        raise InvalidArgumentError(f"only 2-D matrices can be saved, got shape {matrix.shape}")
    if dtype not in DTYPE_CODES:
        raise InvalidArgumentError(f"unknown matrix dtype '{dtype}'")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)

    if path.suffix.lower() == '.csv':
        pd.DataFrame(matrix).to_csv(path, header=False, index=False, float_format='%.17g')
        return

    code = DTYPE_CODES[dtype]
    rows, cols = matrix.shape
    payload = np.ascontiguousarray(matrix, dtype=DTYPES[code]).tobytes(order='C')
    with open(path, 'wb') as f:
        f.write(HEADER.pack(MAGIC, VERSION, rows, cols, code))
        f.write(payload)


def load_matrix(path: PathLike) -> np.ndarray:
    """Read a ZSLM (or CSV) matrix as float64.

    Raises FormatError with the offending byte offset on a malformed file
    and DataError when the payload holds NaN.
    """
    path = Path(path)
    if not path.exists():
        raise DataError(f"matrix file not found: {path}")

    if path.suffix.lower() == '.csv':
        try:
            values = pd.read_csv(path, header=None, float_precision='round_trip').to_numpy(dtype=np.float64)
        except (ValueError, pd.errors.ParserError) as e:
            raise DataError(f"cannot parse CSV matrix {path}: {e}") from e
        return _check_payload(values, path)

    data = path.read_bytes()
    if data[:len(MAGIC)] != MAGIC:
        if len(data) < len(MAGIC) and MAGIC.startswith(data):
            raise FormatError(f"truncated header in {path}", offset=len(data))
        raise FormatError(f"bad magic in {path}", offset=0)
    if len(data) < HEADER.size:
        raise FormatError(f"truncated header in {path}", offset=len(data))

    _, version, rows, cols, code = HEADER.unpack_from(data)
    if version != VERSION:
        raise FormatError(f"unsupported version {version} in {path}", offset=4)
    if code not in DTYPES:
        raise FormatError(f"unknown dtype code {code} in {path}", offset=14)

    dtype = DTYPES[code]
    end = HEADER.size + rows * cols * dtype.itemsize
    if len(data) < end:
        raise FormatError(f"truncated payload in {path}", offset=len(data))
    if len(data) > end:
        raise FormatError(f"trailing bytes in {path}", offset=end)

    values = np.frombuffer(data, dtype=dtype, count=rows * cols, offset=HEADER.size)
    return _check_payload(values.reshape(rows, cols).astype(np.float64), path)


def _check_payload(values: np.ndarray, path: Path) -> np.ndarray:
    if np.any(np.isnan(values)):
        raise DataError(f"NaN values in {path}")
    return values


def load_labels(path: PathLike) -> np.ndarray:
    values = load_matrix(path).reshape(-1)
    if not np.all(values == np.round(values)):
        raise DataError(f"non-integer class labels in {path}")
    return values.astype(np.int64)


def save_labels(labels: Sequence[int], path: PathLike):
    save_matrix(np.asarray(labels, dtype=np.float64).reshape(-1, 1), path)


def _read_json(path: Path):
    try:
        with open(path, 'r') as f:
            return json.load(f)
    except FileNotFoundError:
        raise DataError(f"file not found: {path}") from None
    except json.JSONDecodeError as e:
        raise DataError(f"invalid JSON in {path}: {e}") from e


def _write_json(payload, path: Path):
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, 'w') as f:
        json.dump(payload, f, indent=2)


@dataclass(frozen=True)
class Dataset:
    feature_sets: Tuple[FeatureSet, ...]
    attributes: AttributeMatrix
    split: Split
    class_names: Tuple[str, ...]

    @property
    def seen_attributes(self) -> AttributeMatrix:
        return self.attributes.subset(self.split.seen_classes)

    @property
    def unseen_attributes(self) -> AttributeMatrix:
        return self.attributes.subset(self.split.unseen_classes)

    @property
    def joint_attributes(self) -> AttributeMatrix:
        return self.attributes.subset(self.split.all_classes)


def normalize_attributes(values: np.ndarray, method: str) -> np.ndarray:
    """'l2' scales each class row to unit length; 'minmax' maps each column to [0, 1]."""
    if method == 'none':
        return values
    if method == 'l2':
        return normalize(values, norm='l2', axis=1)
    if method == 'minmax':
        return MinMaxScaler().fit_transform(values)
    raise InvalidArgumentError(f"unknown attribute normalization '{method}'")


def load_split(path: PathLike, class_ids: Dict[str, int]) -> Split:
    raw = _read_json(Path(path))
    try:
        return Split(
            seen_classes=tuple(class_ids[name] for name in raw['seen']),
            unseen_classes=tuple(class_ids[name] for name in raw['unseen'])
        )
    except KeyError as e:
        raise DataError(f"split file {path} refers to unknown class or key {e}") from None


def load_dataset(
    feature_paths: Sequence[PathLike],
    label_paths: Sequence[PathLike],
    attributes_path: PathLike,
    classes_path: PathLike,
    split_path: PathLike,
    attribute_normalization: str = 'none'
) -> Dataset:
    """Read the on-disk dataset layout; scale ids follow the order of `feature_paths`."""
    names = _read_json(Path(classes_path))
    if not isinstance(names, list):
        raise DataError(f"{classes_path} must hold a list of class names")
    class_ids = class_names_to_ids(names)

    values = load_matrix(attributes_path)
    if values.shape[0] != len(names):
        raise DataError(f"{values.shape[0]} attribute rows for {len(names)} classes")
    attrs = AttributeMatrix(
        class_ids=tuple(range(len(names))),
        values=normalize_attributes(values, attribute_normalization)
    )

    feature_sets = tuple(
        FeatureSet(scale_id=s, features=load_matrix(fp), labels=load_labels(lp))
        for s, (fp, lp) in enumerate(zip(feature_paths, label_paths), start=1)
    )
    split = load_split(split_path, class_ids)
    logger.info(
        f"Loaded {len(feature_sets)} scale(s), {feature_sets[0].n} samples, "
        f"{len(names)} classes ({len(split.seen_classes)} seen / {len(split.unseen_classes)} unseen)"
    )
    return Dataset(feature_sets, attrs, split, tuple(names))


def save_dataset(dataset: Dataset, out_dir: PathLike) -> Dict[str, List[str]]:
    """Write the layout read by `load_dataset`; returns the relative file names."""
    out_dir = Path(out_dir)
    names = list(dataset.class_names)
    _write_json(names, out_dir / CLASSES_FILE)
    _write_json({
        'seen': [names[c] for c in dataset.split.seen_classes],
        'unseen': [names[c] for c in dataset.split.unseen_classes]
    }, out_dir / SPLIT_FILE)
    save_matrix(dataset.attributes.values, out_dir / ATTRIBUTES_FILE)
    for fs in dataset.feature_sets:
        save_matrix(fs.features, out_dir / features_file(fs.scale_id))
        save_labels(fs.labels, out_dir / labels_file(fs.scale_id))
    return {
        'feature_paths': [features_file(fs.scale_id) for fs in dataset.feature_sets],
        'label_paths': [labels_file(fs.scale_id) for fs in dataset.feature_sets]
    }


def save_models(models: Sequence[EmbeddingModel], out_dir: PathLike):
    out_dir = Path(out_dir)
    for model in models:
        save_matrix(model.w_att, out_dir / f'model_s{model.scale_id}_att.zslm')
        save_matrix(model.w_lat, out_dir / f'model_s{model.scale_id}_lat.zslm')


def load_models(out_dir: PathLike, n_scales: int) -> List[EmbeddingModel]:
    out_dir = Path(out_dir)
    return [
        EmbeddingModel(
            w_att=load_matrix(out_dir / f'model_s{s}_att.zslm'),
            w_lat=load_matrix(out_dir / f'model_s{s}_lat.zslm'),
            scale_id=s
        )
        for s in range(1, n_scales + 1)
    ]


def save_prototypes(prototypes: PrototypeSet, path: PathLike):
    """Values as a ZSLM matrix, class ids and provenance in a JSON sidecar."""
    path = Path(path)
    save_matrix(prototypes.values, path)
    _write_json({
        'class_ids': list(prototypes.class_ids),
        'provenance': [p.value for p in prototypes.provenance]
    }, path.with_suffix('.json'))


def load_prototypes(path: PathLike) -> PrototypeSet:
    path = Path(path)
    meta = _read_json(path.with_suffix('.json'))
    values = load_matrix(path)
    try:
        return PrototypeSet(tuple(meta['class_ids']), values, tuple(meta['provenance']))
    except (KeyError, ValueError) as e:
        raise DataError(f"inconsistent prototype sidecar for {path}: {e}") from e


def save_transfer_weights(weights: TransferWeights, path: PathLike):
    path = Path(path)
    save_matrix(weights.betas, path)
    _write_json({
        'unseen_ids': list(weights.unseen_ids),
        'seen_ids': list(weights.seen_ids)
    }, path.with_suffix('.json'))


def load_transfer_weights(path: PathLike) -> TransferWeights:
    path = Path(path)
    meta = _read_json(path.with_suffix('.json'))
    try:
        return TransferWeights(tuple(meta['unseen_ids']), tuple(meta['seen_ids']), load_matrix(path))
    except (KeyError, ValueError) as e:
        raise DataError(f"inconsistent transfer-weight sidecar for {path}: {e}") from e


def save_grid(grid: ImageGrid, path: PathLike):
    """Store an H×W×C grid as an H×(W·C) matrix, channels interleaved per pixel."""
    save_matrix(grid.values.reshape(grid.height, -1), path)


def load_grid(path: PathLike, channels: int = 1) -> ImageGrid:
    values = load_matrix(path)
    if channels < 1 or values.shape[1] % channels != 0:
        raise DataError(f"{values.shape[1]} columns in {path} do not split into {channels} channels")
    return ImageGrid(values.reshape(values.shape[0], -1, channels))
