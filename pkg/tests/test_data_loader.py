# Import necessary libraries and packages
import sys
import os
sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

import numpy as np
import pytest

from algorithms.transfer import PrototypeSet, Provenance, TransferWeights
from algorithms.zoom_kernel import ImageGrid
from models.core import EmbeddingModel
from utils.config_handler import SynthConfig
from utils.data_generator import gen_synthetic
from utils.data_loader import (
    HEADER, load_dataset, load_grid, load_labels, load_matrix, load_models,
    load_prototypes, load_transfer_weights, normalize_attributes, save_dataset,
    save_grid, save_labels, save_matrix, save_models, save_prototypes,
    save_transfer_weights
)
from utils.exceptions import DataError, FormatError, InvalidArgumentError


def test_matrix_file_is_bit_exact(tmp_path):
    rng = np.random.RandomState(0)
    matrix = rng.randn(7, 3)
    matrix[0, 0] = np.inf
    save_matrix(matrix, tmp_path / 'm.zslm')
    loaded = load_matrix(tmp_path / 'm.zslm')
    assert loaded.dtype == np.float64
    assert loaded.tobytes() == matrix.tobytes(), "Double precision must survive exactly"
    assert (tmp_path / 'm.zslm').stat().st_size == HEADER.size + 7 * 3 * 8


def test_single_precision_file_upcasts(tmp_path):
    matrix = np.random.RandomState(1).randn(4, 5)
    save_matrix(matrix, tmp_path / 'm.zslm', dtype='f32')
    loaded = load_matrix(tmp_path / 'm.zslm')
    assert loaded.dtype == np.float64
    assert np.array_equal(loaded, matrix.astype(np.float32).astype(np.float64))


def test_bad_magic_reports_offset_zero(tmp_path):
    path = tmp_path / 'bad.zslm'
    path.write_bytes(b'XXXX' + bytes(12))
    with pytest.raises(FormatError) as excinfo:
        load_matrix(path)
    assert excinfo.value.offset == 0
    assert 'byte offset 0' in str(excinfo.value)


def test_truncated_and_trailing_bytes(tmp_path):
    path = tmp_path / 'm.zslm'
    save_matrix(np.ones((2, 2)), path)
    data = path.read_bytes()

    path.write_bytes(data[:-3])
    with pytest.raises(FormatError) as excinfo:
        load_matrix(path)
    assert excinfo.value.offset == len(data) - 3

    path.write_bytes(data + b'\x00')
    with pytest.raises(FormatError) as excinfo:
        load_matrix(path)
    assert excinfo.value.offset == len(data)

    path.write_bytes(data[:10])
    with pytest.raises(FormatError) as excinfo:
        load_matrix(path)
    assert excinfo.value.offset == 10


def test_unknown_version_and_dtype(tmp_path):
    path = tmp_path / 'm.zslm'
    path.write_bytes(HEADER.pack(b'ZSLM', 2, 1, 1, 1) + bytes(8))
    with pytest.raises(FormatError) as excinfo:
        load_matrix(path)
    assert excinfo.value.offset == 4

    path.write_bytes(HEADER.pack(b'ZSLM', 1, 1, 1, 7) + bytes(8))
    with pytest.raises(FormatError) as excinfo:
        load_matrix(path)
    assert excinfo.value.offset == 14


def test_csv_matrix(tmp_path):
    path = tmp_path / 'm.csv'
    path.write_text("1,2\n3,4\n")
    assert np.array_equal(load_matrix(path), [[1.0, 2.0], [3.0, 4.0]])

    matrix = np.random.RandomState(2).randn(3, 2)
    save_matrix(matrix, tmp_path / 'out.csv')
    assert np.array_equal(load_matrix(tmp_path / 'out.csv'), matrix), "17 significant digits round-trip doubles"


def test_nan_payload_is_data_error(tmp_path):
    save_matrix(np.array([[1.0, np.nan]]), tmp_path / 'm.zslm')
    with pytest.raises(DataError):
        load_matrix(tmp_path / 'm.zslm')
    (tmp_path / 'm.csv').write_text("1,nan\n")
    with pytest.raises(DataError):
        load_matrix(tmp_path / 'm.csv')


def test_missing_file_and_bad_arguments(tmp_path):
    with pytest.raises(DataError):
        load_matrix(tmp_path / 'absent.zslm')
    with pytest.raises(InvalidArgumentError):
        save_matrix(np.ones(3), tmp_path / 'v.zslm')
    with pytest.raises(InvalidArgumentError):
        save_matrix(np.ones((1, 1)), tmp_path / 'v.zslm', dtype='f16')


def test_labels(tmp_path):
    save_labels([3, 0, 2], tmp_path / 'labels.zslm')
    labels = load_labels(tmp_path / 'labels.zslm')
    assert labels.dtype == np.int64 and labels.tolist() == [3, 0, 2]

    save_matrix(np.array([[0.5]]), tmp_path / 'frac.zslm')
    with pytest.raises(DataError):
        load_labels(tmp_path / 'frac.zslm')


def test_dataset_layout_round_trip(tmp_path):
    dataset = gen_synthetic(SynthConfig(c_s=4, c_u=2, k=5, k_lat_signal=3, d=6, n_per_class=3, n_scales=2))
    files = save_dataset(dataset, tmp_path)
    assert files['feature_paths'] == ['features_s1.zslm', 'features_s2.zslm']

    loaded = load_dataset(
        [tmp_path / f for f in files['feature_paths']],
        [tmp_path / f for f in files['label_paths']],
        tmp_path / 'attributes.zslm', tmp_path / 'classes.json', tmp_path / 'split.json'
    )
    assert loaded.class_names == dataset.class_names
    assert loaded.split == dataset.split
    assert np.array_equal(loaded.attributes.values, dataset.attributes.values)
    for a, b in zip(loaded.feature_sets, dataset.feature_sets):
        assert a.scale_id == b.scale_id
        assert np.array_equal(a.features, b.features) and np.array_equal(a.labels, b.labels)


def test_split_with_unknown_class(tmp_path):
    dataset = gen_synthetic(SynthConfig(c_s=2, c_u=1, k=2, k_lat_signal=1, d=3, n_per_class=2, n_scales=1))
    save_dataset(dataset, tmp_path)
    (tmp_path / 'split.json').write_text('{"seen": ["class_000", "zebra"], "unseen": ["class_002"]}')
    with pytest.raises(DataError):
        load_dataset([tmp_path / 'features_s1.zslm'], [tmp_path / 'labels_s1.zslm'],
                     tmp_path / 'attributes.zslm', tmp_path / 'classes.json', tmp_path / 'split.json')


def test_attribute_normalization():
    values = np.array([[3.0, 4.0], [1.0, 0.0], [2.0, 2.0]])
    assert np.allclose(np.linalg.norm(normalize_attributes(values, 'l2'), axis=1), 1.0)
    scaled = normalize_attributes(values, 'minmax')
    assert np.allclose(scaled.min(axis=0), 0.0) and np.allclose(scaled.max(axis=0), 1.0)
    assert normalize_attributes(values, 'none') is values
    with pytest.raises(InvalidArgumentError):
        normalize_attributes(values, 'zscore')


def test_models_round_trip(tmp_path):
    rng = np.random.RandomState(3)
    models = [EmbeddingModel(rng.randn(4, 2), rng.randn(4, 3), scale_id=s) for s in (1, 2)]
    save_models(models, tmp_path)
    assert (tmp_path / 'model_s2_lat.zslm').exists()
    for saved, loaded in zip(models, load_models(tmp_path, 2)):
        assert np.array_equal(saved.w_att, loaded.w_att) and np.array_equal(saved.w_lat, loaded.w_lat)
        assert saved.scale_id == loaded.scale_id


def test_prototypes_keep_ids_and_provenance(tmp_path):
    protos = PrototypeSet((7, 2), [[0.1, 0.2], [0.3, 0.4]], (Provenance.EMPIRICAL_MEAN, Provenance.TRANSFERRED))
    save_prototypes(protos, tmp_path / 'protos.zslm')
    assert (tmp_path / 'protos.json').exists()
    loaded = load_prototypes(tmp_path / 'protos.zslm')
    assert loaded.class_ids == (7, 2)
    assert loaded.provenance == (Provenance.EMPIRICAL_MEAN, Provenance.TRANSFERRED)
    assert np.array_equal(loaded.values, protos.values)

    (tmp_path / 'protos.json').write_text('{"class_ids": [7], "provenance": ["transferred"]}')
    with pytest.raises(DataError):
        load_prototypes(tmp_path / 'protos.zslm')


def test_transfer_weights_round_trip(tmp_path):
    weights = TransferWeights((5, 6), (0, 1, 2), np.arange(6.0).reshape(2, 3))
    save_transfer_weights(weights, tmp_path / 'betas.zslm')
    loaded = load_transfer_weights(tmp_path / 'betas.zslm')
    assert loaded.unseen_ids == (5, 6) and loaded.seen_ids == (0, 1, 2)
    assert np.array_equal(loaded.betas, weights.betas)


def test_grid_round_trip(tmp_path):
    grid = ImageGrid(np.random.RandomState(4).rand(3, 4, 2))
    save_grid(grid, tmp_path / 'grid.csv')
    assert load_matrix(tmp_path / 'grid.csv').shape == (3, 8)
    assert np.array_equal(load_grid(tmp_path / 'grid.csv', channels=2).values, grid.values)
    with pytest.raises(DataError):
        load_grid(tmp_path / 'grid.csv', channels=3)


if __name__ == "__main__":
    pytest.main([__file__, "-v"])
