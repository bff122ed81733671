import sys
import os
import time
import logging
import pandas as pd
from datetime import datetime
from tabulate import tabulate
from typing import List, Optional, Sequence, Tuple

# Add project root
project_root = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
sys.path.append(project_root)

from utils.config_handler import (
    EvalConfig, SynthConfig, TrainConfig, TransferConfig,
    default_synth_config, default_train_config
)
from utils.data_generator import gen_synthetic
from utils.pipeline import TrainedState, ZSLPipeline


class AblationStudy:
    """MCA of each embedding variant and prediction space on one synthetic dataset.

    Variants: the untrained model, the baseline embedding trained without
    the triplet term, and the augmented embedding, evaluated per scale and
    with all scales combined. A final sweep retrains the augmented embedding
    with k_lat = m·k for each multiplier m and scores the LA space alone.
    """

    def __init__(
        self,
        synth_cfg: Optional[SynthConfig] = None,
        train_cfg: Optional[TrainConfig] = None,
        transfer_cfg: Optional[TransferConfig] = None,
        eval_cfg: Optional[EvalConfig] = None,
        lat_multipliers: Sequence[int] = (1, 2, 3)
    ):
        self.logger = logging.getLogger(__name__)
        self.lat_multipliers = tuple(lat_multipliers)
        self.synth_cfg = synth_cfg or default_synth_config()
        self.train_cfg = train_cfg or default_train_config(seed=self.synth_cfg.seed)
        self.pipeline = ZSLPipeline(
            gen_synthetic(self.synth_cfg), self.synth_cfg.seed, self.train_cfg,
            transfer_cfg or TransferConfig(), eval_cfg or EvalConfig(), output_dir='results'
        )
        self.rows: List[Tuple[str, str, str, float]] = []

    def _scales(self) -> List[Optional[int]]:
        per_scale = list(range(1, self.pipeline.n_scales + 1))
        return per_scale + [None] if self.pipeline.n_scales > 1 else per_scale

    def _record(self, variant: str, state: TrainedState, spaces, scales):
        for scale in scales:
            for space in spaces:
                result = self.pipeline.evaluate(state, space, scale)
                label = f's{scale}' if scale else 'multi-scale'
                self.rows.append((variant, label, space, result.mca))

    def run(self) -> pd.DataFrame:
        print("\nRunning zero-shot ablation...")
        start_time = time.time()
        scales = self._scales()

        print("Evaluating untrained model...")
        self._record('untrained', self.pipeline.untrained_state(), ['ua'], scales)

        print("Training baseline embedding (UA loss only)...")
        baseline_cfg = self.train_cfg.model_copy(update={'loss_weights': (1.0, 0.0)})
        baseline, _ = self.pipeline.train(baseline_cfg)
        self._record('baseline', baseline, ['ua'], scales)

        print("Training augmented embedding...")
        augmented, _ = self.pipeline.train()
        self._record('augmented', augmented, ['ua', 'la', 'ua+la'], scales)

        k = self.synth_cfg.k
        for m in self.lat_multipliers:
            print(f"Training augmented embedding with k_lat = {m}k...")
            if m * k == (self.train_cfg.k_lat or k):
                state = augmented
            else:
                state, _ = self.pipeline.train(self.train_cfg.model_copy(update={'k_lat': m * k}))
            self._record(f'k_lat={m}k', state, ['la'], scales)

        self.logger.info(f"Ablation finished in {time.time() - start_time:.1f}s")
        return self.to_frame()

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(self.rows, columns=['variant', 'scale', 'space', 'mca'])

    def print_summary(self):
        frame = self.to_frame()
        print(tabulate(frame, headers='keys', tablefmt='grid', floatfmt='.2f', showindex=False))

    def save_results(self, out_dir: str = 'results') -> str:
        timestamp = datetime.now().strftime("%Y%m%d_%H%M")
        os.makedirs(out_dir, exist_ok=True)
        filename = os.path.join(out_dir, f"ablation_{timestamp}.csv")
        self.to_frame().to_csv(filename, index=False)
        return filename


if __name__ == "__main__":
    logging.basicConfig(level=logging.INFO)
    study = AblationStudy()
    study.run()
    study.print_summary()
    print(f"\nSaved {study.save_results()}")
