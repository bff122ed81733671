# Import necessary libraries and packages
import json
import logging
import numpy as np
from pathlib import Path
from typing import Optional, Tuple

from models.core import AttributeMatrix, FeatureSet, Split
from .config_handler import SynthConfig
from .data_loader import ATTRIBUTES_FILE, CLASSES_FILE, SPLIT_FILE, Dataset, save_dataset

RUN_CONFIG_FILE = 'run.json'


class SyntheticDataGenerator:
    """Desk-scale zero-shot benchmark.

    Class c gets attributes a^c ~ U[0,1]^k and a one-hot latent trait
    e_(c mod k_lat_signal). Every scale draws its own fixed maps G (d×k) and
    H (d×k_lat_signal) and emits x = G·a^c + amplitude·H·e + noise, so the
    trait carries signal that the attributes cannot explain. Classes
    0..c_s-1 are seen, the rest unseen.
    """

    def __init__(self, cfg: SynthConfig):
        self.cfg = cfg
        self.rng = np.random.RandomState(cfg.seed)
        self.logger = logging.getLogger(__name__)

    def class_names(self) -> Tuple[str, ...]:
        n_classes = self.cfg.c_s + self.cfg.c_u
        return tuple(f'class_{c:03d}' for c in range(n_classes))

    def generate(self) -> Dataset:
        cfg = self.cfg
        n_classes = cfg.c_s + cfg.c_u

        attributes = self.rng.uniform(0.0, 1.0, size=(n_classes, cfg.k))
        traits = np.zeros((n_classes, cfg.k_lat_signal))
        traits[np.arange(n_classes), np.arange(n_classes) % cfg.k_lat_signal] = 1.0

        labels = np.repeat(np.arange(n_classes), cfg.n_per_class)
        feature_sets = []
        for scale_id in range(1, cfg.n_scales + 1):
            G = self.rng.normal(0.0, 1.0 / np.sqrt(cfg.k), size=(cfg.d, cfg.k))
            H = self.rng.normal(0.0, 1.0 / np.sqrt(cfg.k_lat_signal), size=(cfg.d, cfg.k_lat_signal))
            clean = attributes[labels] @ G.T + cfg.latent_amplitude * traits[labels] @ H.T
            noise = self.rng.normal(0.0, cfg.noise_sigma, size=clean.shape) if cfg.noise_sigma > 0 else 0.0
            feature_sets.append(FeatureSet(scale_id=scale_id, features=clean + noise, labels=labels))

        split = Split(
            seen_classes=tuple(range(cfg.c_s)),
            unseen_classes=tuple(range(cfg.c_s, n_classes))
        )
        self.logger.info(
            f"Generated {cfg.n_scales} scale(s) of {labels.size} samples: "
            f"{cfg.c_s} seen / {cfg.c_u} unseen classes, d={cfg.d}, k={cfg.k}"
        )
        return Dataset(
            feature_sets=tuple(feature_sets),
            attributes=AttributeMatrix(tuple(range(n_classes)), attributes),
            split=split,
            class_names=self.class_names()
        )


def gen_synthetic(cfg: SynthConfig) -> Dataset:
    return SyntheticDataGenerator(cfg).generate()


def write_synthetic(cfg: SynthConfig, out_dir: str, output_dir: Optional[str] = None) -> Path:
    """Generate, save the dataset layout and a ready-to-use run.json; returns its path."""
    out = Path(out_dir)
    files = save_dataset(gen_synthetic(cfg), out)
    run_config = {
        'seed': cfg.seed,
        **files,
        'attributes_path': ATTRIBUTES_FILE,
        'classes_path': CLASSES_FILE,
        'split_path': SPLIT_FILE,
        'output_dir': output_dir or 'run'
    }
    path = out / RUN_CONFIG_FILE
    with open(path, 'w') as f:
        json.dump(run_config, f, indent=2)
    return path
