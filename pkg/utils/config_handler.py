# Import necessary libraries and packages
import json
import yaml
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional, Tuple
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from .exceptions import UsageError

DEFAULT_CONFIG_PATH = Path(__file__).resolve().parent.parent / "config" / "default_config.yaml"

Space = Literal['ua', 'la', 'ua+la']


def load_defaults(config_path: Optional[str] = None) -> Dict[str, Any]:
    """Load the YAML defaults file as a plain dictionary."""
    with open(config_path or DEFAULT_CONFIG_PATH, 'r') as f:
        return yaml.safe_load(f) or {}


class TrainConfig(BaseModel):
    """SGD settings for the augmented embedding and the multi-scale combiner."""
    model_config = ConfigDict(extra='forbid', frozen=True)

    epochs: int = Field(30, ge=1)
    learning_rate: float = Field(0.05, ge=0.0)
    batch_size: int = Field(32, ge=1)
    margin: float = Field(1.0, gt=0.0)
    triplet_strategy: Literal['random', 'semi-hard'] = 'random'
    seed: int = 42
    loss_weights: Tuple[float, float] = (1.0, 1.0)
    k_lat: Optional[int] = Field(None, ge=1)
    momentum: float = Field(0.0, ge=0.0, lt=1.0)
    max_triplets_per_batch: Optional[int] = Field(None, ge=1)
    combiner_mode: Literal['scalar', 'full'] = 'scalar'
    combiner_epochs: Optional[int] = Field(None, ge=1)
    show_progress: bool = False

    @field_validator('loss_weights')
    @classmethod
    def _nonnegative_weights(cls, value):
        if any(w < 0 for w in value):
            raise ValueError("loss weights must be nonnegative")
        return value

    @model_validator(mode='after')
    def _triplets_need_pairs(self):
        if self.loss_weights[1] > 0 and self.batch_size < 2:
            raise ValueError("batch_size must be >= 2 when the triplet term is active")
        return self

    @property
    def triplet_cap(self) -> int:
        return self.max_triplets_per_batch or self.batch_size


class TransferConfig(BaseModel):
    model_config = ConfigDict(extra='forbid', frozen=True, populate_by_name=True)

    lambda_: float = Field(1.0, ge=0.0, alias='lambda')
    normalize_before_mean: bool = False


class SynthConfig(BaseModel):
    """Shape of the synthetic benchmark written by `gen-synth`."""
    model_config = ConfigDict(extra='forbid', frozen=True)

    c_s: int = Field(20, ge=2)
    c_u: int = Field(5, ge=1)
    k: int = Field(20, ge=1)
    k_lat_signal: int = Field(10, ge=1)
    d: int = Field(64, ge=1)
    n_per_class: int = Field(30, ge=1)
    noise_sigma: float = Field(0.1, ge=0.0)
    latent_amplitude: float = Field(1.0, ge=0.0)
    n_scales: int = Field(2, ge=1)
    seed: int = 42


class ZoomOptConfig(BaseModel):
    model_config = ConfigDict(extra='forbid', frozen=True)

    steps: int = Field(50, ge=0)
    learning_rate: float = Field(0.01, ge=0.0)
    init: Tuple[float, float, float] = (0.5, 0.5, 0.5)
    steepness: float = Field(10.0, gt=0.0)
    rescale_steepness: bool = True
    window_frac: float = Field(0.5, gt=0.0, le=1.0)


class EvalConfig(BaseModel):
    model_config = ConfigDict(extra='forbid', frozen=True)

    holdout_fraction: float = Field(0.2, gt=0.0, lt=1.0)
    normalize_scores: bool = False
    top_k: int = Field(5, ge=1)


def default_train_config(**overrides) -> TrainConfig:
    return TrainConfig(**{**load_defaults().get('train', {}), **overrides})


def default_synth_config(**overrides) -> SynthConfig:
    return SynthConfig(**{**load_defaults().get('synthetic', {}), **overrides})


def default_zoom_config(**overrides) -> ZoomOptConfig:
    return ZoomOptConfig(**{**load_defaults().get('zoom', {}), **overrides})


class RunConfig(BaseModel):
    """Everything a CLI command needs to run one pipeline step."""
    model_config = ConfigDict(extra='forbid', frozen=True)

    seed: int
    feature_paths: List[Path] = Field(min_length=1)
    label_paths: List[Path] = Field(min_length=1)
    attributes_path: Path
    classes_path: Path
    split_path: Path
    attribute_normalization: Literal['none', 'l2', 'minmax'] = 'none'
    train: TrainConfig = TrainConfig()
    transfer: TransferConfig = TransferConfig()
    evaluation: EvalConfig = EvalConfig()
    space: Space = 'ua+la'
    output_dir: Path = Path('run')

    @model_validator(mode='after')
    def _check_paths(self):
        if len(self.feature_paths) != len(self.label_paths):
            raise ValueError("feature_paths and label_paths must list one file per scale")
        inputs = [*self.feature_paths, *self.label_paths,
                  self.attributes_path, self.classes_path, self.split_path]
        missing = [str(p) for p in inputs if not p.exists()]
        if missing:
            raise ValueError(f"referenced paths do not exist: {', '.join(missing)}")
        return self

    @property
    def n_scales(self) -> int:
        return len(self.feature_paths)

    @classmethod
    def from_json(cls, path: str, overrides: Optional[Dict[str, Any]] = None) -> 'RunConfig':
        """Load a RunConfig from JSON, layering YAML defaults underneath and
        dotted-key overrides (e.g. ``{'train.epochs': 5}``) on top.

        Relative paths are resolved against the JSON file's directory.
        """
        path = Path(path)
        if not path.exists():
            raise UsageError(f"config file not found: {path}")
        try:
            with open(path, 'r') as f:
                raw = json.load(f)
        except json.JSONDecodeError as e:
            raise UsageError(f"invalid JSON in {path}: {e}") from e

        defaults = load_defaults()
        merged = dict(raw)
        for section in ('train', 'transfer', 'evaluation'):
            merged[section] = {**defaults.get(section, {}), **raw.get(section, {})}

        base = path.parent
        for key in ('attributes_path', 'classes_path', 'split_path', 'output_dir'):
            if key in merged:
                merged[key] = _resolve(base, merged[key])
        for key in ('feature_paths', 'label_paths'):
            if key in merged:
                merged[key] = [_resolve(base, p) for p in merged[key]]

        # override paths stay relative to the working directory
        for key, value in (overrides or {}).items():
            if value is None:
                continue
            if '.' in key:
                section, name = key.split('.', 1)
                merged.setdefault(section, {})[name] = value
            else:
                merged[key] = value

        if 'seed' in merged:
            merged['train'].setdefault('seed', merged['seed'])

        return cls.model_validate(merged)


def _resolve(base: Path, value: str) -> Path:
    p = Path(value)
    return p if p.is_absolute() else base / p
