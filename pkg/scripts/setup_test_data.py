# Import necessary libraries and packages
import sys
import os
sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from pathlib import Path

from utils.config_handler import default_synth_config
from utils.data_generator import write_synthetic


def setup_test_data(root: str = "data"):
    """Write the default synthetic dataset and a latent-free variant."""
    variants = {
        'synthetic': default_synth_config(),
        'synthetic_no_latent': default_synth_config(latent_amplitude=0.0),
    }
    for name, cfg in variants.items():
        out = Path(root) / name
        run_config = write_synthetic(cfg, str(out), output_dir=str(Path('..') / '..' / 'run' / name))
        print(f"{name}: {cfg.c_s} seen / {cfg.c_u} unseen classes, {cfg.n_scales} scale(s) -> {run_config}")


if __name__ == "__main__":
    setup_test_data()
