# Import necessary libraries and packages
import logging
import numpy as np
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Tuple

from algorithms.prediction import (
    EmbeddedBatch, PredictionResult, embed_multiscale, gzsl_eval, predict_multiscale, predict_space
)
from algorithms.trainer import EmbeddingTrainer, MultiScaleCombiner, TrainReport, train, train_combiner
from algorithms.transfer import (
    PrototypeSet, TransferWeights, class_mean_prototypes, compute_transfer_weights, unseen_prototypes
)
from models.core import EmbeddingModel, holdout_split, project_batch
from models.validation import ValidationReport, validate_dataset
from .config_handler import EvalConfig, RunConfig, Space, TrainConfig, TransferConfig
from .data_loader import (
    Dataset, load_dataset, load_matrix, load_models, save_matrix, save_models,
    save_prototypes, save_transfer_weights
)
from .exceptions import DataError, InvalidArgumentError
from .metrics import GzslReport, McaReport, mca

COMBINER_FILE = 'combiner.zslm'


@dataclass(frozen=True)
class Partitions:
    """Sample indices: seen-class training set, seen-class holdout, unseen-class test set."""
    seen_train: np.ndarray
    seen_holdout: np.ndarray
    unseen_test: np.ndarray


@dataclass(frozen=True)
class TrainedState:
    models: Tuple[EmbeddingModel, ...]
    combiner: Optional[MultiScaleCombiner] = None


@dataclass(frozen=True)
class PrototypeBundle:
    betas: TransferWeights
    seen: PrototypeSet
    unseen: PrototypeSet

    @property
    def joint(self) -> PrototypeSet:
        return PrototypeSet.concat(self.seen, self.unseen)


def suffix(space: str, scale: Optional[int]) -> str:
    name = space.replace('+', '_')
    return f'{name}_s{scale}' if scale else name


class ZSLPipeline:
    """Training, transfer and evaluation over one dataset.

    Every stage is a deterministic function of the dataset and the seed, so
    commands may recompute upstream stages instead of reading them back.
    """

    def __init__(
        self,
        dataset: Dataset,
        seed: int,
        train_cfg: TrainConfig,
        transfer_cfg: TransferConfig,
        eval_cfg: EvalConfig,
        output_dir: Path
    ):
        self.dataset = dataset
        self.seed = seed
        self.train_cfg = train_cfg
        self.transfer_cfg = transfer_cfg
        self.eval_cfg = eval_cfg
        self.output_dir = Path(output_dir)
        self.logger = logging.getLogger(__name__)
        self.partitions = self._partition()

    @classmethod
    def from_run_config(cls, cfg: RunConfig) -> 'ZSLPipeline':
        dataset = load_dataset(
            cfg.feature_paths, cfg.label_paths, cfg.attributes_path,
            cfg.classes_path, cfg.split_path, cfg.attribute_normalization
        )
        return cls(dataset, cfg.seed, cfg.train, cfg.transfer, cfg.evaluation, cfg.output_dir)

    @property
    def n_scales(self) -> int:
        return len(self.dataset.feature_sets)

    def check_scale(self, scale: int) -> int:
        if not 1 <= scale <= self.n_scales:
            raise InvalidArgumentError(f"scale {scale} not in 1..{self.n_scales}")
        return scale

    def _partition(self) -> Partitions:
        labels = self.dataset.feature_sets[0].labels
        train_idx, holdout_idx = holdout_split(
            labels, self.dataset.split.seen_classes, self.eval_cfg.holdout_fraction, self.seed
        )
        unseen_idx = np.flatnonzero(np.isin(labels, self.dataset.split.unseen_classes))
        return Partitions(train_idx, holdout_idx, unseen_idx)

    def validate(self) -> ValidationReport:
        return validate_dataset(self.dataset.feature_sets, self.dataset.attributes, self.dataset.split)

    def _require_valid(self):
        report = self.validate()
        if not report.is_valid:
            details = '; '.join(v.message for v in report.violations)
            raise DataError(f"dataset failed validation: {details}")

    # Training

    def train(self, train_cfg: Optional[TrainConfig] = None) -> Tuple[TrainedState, TrainReport]:
        self._require_valid()
        cfg = train_cfg or self.train_cfg
        seen_attrs = self.dataset.seen_attributes
        train_sets = [fs.take(self.partitions.seen_train) for fs in self.dataset.feature_sets]
        models, report = train(train_sets, seen_attrs, cfg)

        combiner = None
        if len(models) > 1:
            ua = [project_batch(m, fs.features)[0] for m, fs in zip(models, train_sets)]
            holdout = None
            if self.partitions.seen_holdout.size:
                held_sets = [fs.take(self.partitions.seen_holdout) for fs in self.dataset.feature_sets]
                held = [project_batch(m, fs.features)[0] for m, fs in zip(models, held_sets)]
                holdout = (held, held_sets[0].labels)
            combiner = train_combiner(ua, train_sets[0].labels, seen_attrs, cfg, holdout=holdout)
        return TrainedState(tuple(models), combiner), report

    def save_state(self, state: TrainedState):
        save_models(state.models, self.output_dir)
        if state.combiner is not None:
            save_matrix(state.combiner.w_com, self.output_dir / COMBINER_FILE)
        self.logger.info(f"Saved {len(state.models)} model(s) to {self.output_dir}")

    def load_state(self) -> TrainedState:
        models = load_models(self.output_dir, self.n_scales)
        combiner = None
        if self.n_scales > 1:
            combiner = MultiScaleCombiner(load_matrix(self.output_dir / COMBINER_FILE))
        return TrainedState(tuple(models), combiner)

    # Embedding and transfer

    def embed(self, state: TrainedState, indices: np.ndarray, scale: Optional[int] = None) -> EmbeddedBatch:
        """UA/LA embeddings of the given samples for one scale, or combined over all scales."""
        labels = self.dataset.feature_sets[0].labels[indices]
        if scale is None and self.n_scales == 1:
            scale = 1
        if scale is not None:
            self.check_scale(scale)
            fs = self.dataset.feature_sets[scale - 1]
            att, lat = project_batch(state.models[scale - 1], fs.features[indices])
        else:
            if state.combiner is None:
                raise InvalidArgumentError("multi-scale embedding needs a trained combiner")
            att, lat = embed_multiscale(
                [fs.features[indices] for fs in self.dataset.feature_sets],
                state.models, state.combiner
            )
        return EmbeddedBatch(att=att, lat=lat, labels=labels)

    def transfer(self, state: TrainedState, scale: Optional[int] = None) -> PrototypeBundle:
        """Seen-class empirical LA means and ridge-transferred unseen prototypes."""
        seen_ids = self.dataset.split.seen_classes
        train_emb = self.embed(state, self.partitions.seen_train, scale)
        seen = class_mean_prototypes(
            train_emb.lat, train_emb.labels, seen_ids, self.transfer_cfg.normalize_before_mean
        )
        betas = compute_transfer_weights(
            self.dataset.seen_attributes, self.dataset.unseen_attributes, self.transfer_cfg
        )
        return PrototypeBundle(betas, seen, unseen_prototypes(betas, seen))

    def save_transfer(self, bundle: PrototypeBundle, scale: Optional[int] = None):
        tag = f's{scale}' if scale else ('s1' if self.n_scales == 1 else 'ms')
        save_transfer_weights(bundle.betas, self.output_dir / 'transfer_betas.zslm')
        save_prototypes(bundle.seen, self.output_dir / f'prototypes_seen_{tag}.zslm')
        save_prototypes(bundle.unseen, self.output_dir / f'prototypes_unseen_{tag}.zslm')

    # Prediction and evaluation

    def predict(self, state: TrainedState, space: Space, scale: Optional[int] = None) -> Tuple[PredictionResult, np.ndarray]:
        """Zero-shot prediction of every unseen-class test sample over the unseen classes."""
        unseen_attrs = self.dataset.unseen_attributes
        bundle = self.transfer(state, scale) if space != 'ua' else None
        idx = self.partitions.unseen_test

        if scale is None and self.n_scales > 1 and space == 'ua+la':
            result = predict_multiscale(
                [fs.features[idx] for fs in self.dataset.feature_sets],
                state.models, state.combiner, bundle.unseen, unseen_attrs,
                self.eval_cfg.normalize_scores
            )
        else:
            emb = self.embed(state, idx, scale)
            result = predict_space(
                space, emb.att, emb.lat, unseen_attrs,
                bundle.unseen if bundle else None, self.eval_cfg.normalize_scores
            )
        return result, self.dataset.feature_sets[0].labels[idx]

    def evaluate(self, state: TrainedState, space: Space, scale: Optional[int] = None) -> McaReport:
        result, labels = self.predict(state, space, scale)
        report = mca(result.predicted, labels, self.dataset.split.unseen_classes)
        self.logger.info(f"ZSL MCA ({suffix(space, scale)}): {report.mca:.2f}%")
        return report

    def gzsl(self, state: TrainedState, space: Space, scale: Optional[int] = None) -> GzslReport:
        split = self.dataset.split
        joint_prototypes = None
        if space != 'ua':
            joint_prototypes = self.transfer(state, scale).joint.subset(split.all_classes)
        return gzsl_eval(
            self.embed(state, self.partitions.unseen_test, scale),
            self.embed(state, self.partitions.seen_holdout, scale),
            self.dataset.joint_attributes, joint_prototypes, space,
            self.eval_cfg.normalize_scores
        )

    def unseen_lat(self, state: TrainedState, scale: Optional[int] = None) -> EmbeddedBatch:
        return self.embed(state, self.partitions.unseen_test, scale)

    def untrained_state(self) -> TrainedState:
        """Models at their seeded initialization, with an averaging combiner."""
        cfg = self.train_cfg
        k = self.dataset.attributes.k
        weights = EmbeddingTrainer(cfg).initialize([fs.d for fs in self.dataset.feature_sets], k, cfg.k_lat or k)
        models = tuple(
            EmbeddingModel(w_att, w_lat, scale_id=fs.scale_id)
            for (w_att, w_lat), fs in zip(weights, self.dataset.feature_sets)
        )
        combiner = MultiScaleCombiner.averaging(k, self.n_scales) if self.n_scales > 1 else None
        return TrainedState(models, combiner)

