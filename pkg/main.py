# main.py
import argparse
import sys
import numpy as np
import pandas as pd
from pathlib import Path
from pydantic import ValidationError

from algorithms.zoom_kernel import ImageGrid, MaskConfig, soft_mask, zoom_forward
from algorithms.zoom_search import optimize_zoom, window_search
from models.core import AttributeMatrix, EmbeddingModel
from models.extractors import BlockMeanPooling
from utils.config_handler import RunConfig, default_synth_config, default_zoom_config
from utils.data_generator import write_synthetic
from utils.data_loader import load_grid, save_grid, save_matrix
from utils.exceptions import UsageError, ZSLError
from utils.logger import setup_logger
from utils.pipeline import ZSLPipeline, suffix
from utils.reports import (
    activation_report, format_table, gzsl_frame, mca_frame, similarity_frames, write_report
)

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2

SPACES = ('ua', 'la', 'ua+la')


def load_run_config(args) -> RunConfig:
    overrides = {
        'seed': getattr(args, 'seed', None),
        'output_dir': getattr(args, 'output_dir', None),
        'space': getattr(args, 'space', None),
        'train.epochs': getattr(args, 'epochs', None),
        'train.learning_rate': getattr(args, 'learning_rate', None),
        'train.batch_size': getattr(args, 'batch_size', None),
        'train.triplet_strategy': getattr(args, 'triplet_strategy', None),
        'train.combiner_mode': getattr(args, 'combiner_mode', None),
        'transfer.lambda': getattr(args, 'ridge_lambda', None),
    }
    if getattr(args, 'seed', None) is not None:
        overrides['train.seed'] = args.seed
    return RunConfig.from_json(args.config, overrides)


def cmd_gen_synth(args, logger):
    overrides = {
        name: getattr(args, name) for name in
        ('seed', 'c_s', 'c_u', 'k', 'k_lat_signal', 'd', 'n_per_class',
         'noise_sigma', 'latent_amplitude', 'n_scales')
        if getattr(args, name) is not None
    }
    cfg = default_synth_config(**overrides)
    path = write_synthetic(cfg, args.out)
    logger.info(f"Synthetic dataset written; run config at {path}")
    print(path)


def cmd_validate(args, logger):
    pipeline = ZSLPipeline.from_run_config(load_run_config(args))
    report = pipeline.validate()
    if report.is_valid:
        print("dataset is valid")
        return
    for v in report.violations:
        print(f"{v.kind}: {v.message}")
    raise ZSLError(f"{len(report.violations)} validation problem(s)")


def cmd_train(args, logger):
    pipeline = ZSLPipeline.from_run_config(load_run_config(args))
    state, report = pipeline.train()
    pipeline.save_state(state)
    write_report(report.to_frame(), pipeline.output_dir, 'train_report')


def cmd_transfer(args, logger):
    pipeline = ZSLPipeline.from_run_config(load_run_config(args))
    bundle = pipeline.transfer(pipeline.load_state(), args.scale)
    pipeline.save_transfer(bundle, args.scale)


def cmd_predict(args, logger):
    cfg = load_run_config(args)
    pipeline = ZSLPipeline.from_run_config(cfg)
    result, labels = pipeline.predict(pipeline.load_state(), cfg.space, args.scale)
    frame = pd.DataFrame({
        'sample': pipeline.partitions.unseen_test,
        'label': labels,
        'predicted': result.predicted
    })
    pipeline.output_dir.mkdir(parents=True, exist_ok=True)
    name = f'predictions_{suffix(cfg.space, args.scale)}'
    frame.to_csv(pipeline.output_dir / f'{name}.csv', index=False)
    logger.info(f"Wrote {len(frame)} predictions to {name}.csv")


def cmd_eval(args, logger):
    cfg = load_run_config(args)
    pipeline = ZSLPipeline.from_run_config(cfg)
    report = pipeline.evaluate(pipeline.load_state(), cfg.space, args.scale)
    summary = f"ZSL MCA ({cfg.space}): {report.mca:.2f}% over {len(report.per_class)} unseen classes"
    write_report(
        mca_frame(report, pipeline.dataset.class_names), pipeline.output_dir,
        f'eval_{suffix(cfg.space, args.scale)}', summary
    )
    print(summary)


def cmd_gzsl_eval(args, logger):
    cfg = load_run_config(args)
    pipeline = ZSLPipeline.from_run_config(cfg)
    report = pipeline.gzsl(pipeline.load_state(), cfg.space, args.scale)
    frame = gzsl_frame(report, cfg.space)
    write_report(frame, pipeline.output_dir, f'gzsl_{suffix(cfg.space, args.scale)}')
    print(format_table(frame))


def cmd_report(args, logger):
    cfg = load_run_config(args)
    pipeline = ZSLPipeline.from_run_config(cfg)
    state = pipeline.load_state()
    scale = pipeline.check_scale(1 if args.scale is None else args.scale)
    features = pipeline.dataset.feature_sets[scale - 1]
    idx = pipeline.partitions.unseen_test

    activations = activation_report(
        state.models[scale - 1], features.features[idx], features.labels[idx],
        args.activation_space, args.element, args.top_k or cfg.evaluation.top_k
    )
    write_report(
        activations.to_frame(), pipeline.output_dir,
        f'activations_{args.activation_space}_e{args.element}_s{scale}'
    )

    unseen = pipeline.unseen_lat(state, args.scale)
    frames = similarity_frames(
        pipeline.dataset.unseen_attributes, unseen.lat, unseen.labels, pipeline.dataset.class_names
    )
    for space, frame in frames.items():
        write_report(frame, pipeline.output_dir, f'similarity_{space}')


def demo_image(size: int, seed: int) -> ImageGrid:
    """Dim noise with one bright square of side size/4 at a seeded position."""
    rng = np.random.RandomState(seed)
    values = 0.1 * rng.uniform(size=(size, size))
    side = max(size // 4, 1)
    row, col = rng.randint(0, size - side + 1, size=2)
    values[row:row + side, col:col + side] += 1.0
    return ImageGrid(values)


def cmd_zoom_demo(args, logger):
    opt = default_zoom_config(**{
        name: getattr(args, name) for name in ('steps', 'learning_rate')
        if getattr(args, name) is not None
    })
    image = load_grid(args.image) if args.image else demo_image(args.size, args.seed)
    mask_cfg = MaskConfig(steepness=opt.steepness, rescale=opt.rescale_steepness)

    start = window_search(image, opt.window_frac)
    logger.info(f"Window search selected {start}")

    # the score rewards zoomed views that look like the selected window
    extractor = BlockMeanPooling(2, 2)
    template = extractor.extract(zoom_forward(image, start, mask_cfg))
    model = EmbeddingModel(w_att=template[:, None], w_lat=np.zeros((template.size, 1)))
    attrs = AttributeMatrix((0,), np.ones((1, 1)))
    trajectory = optimize_zoom(
        image, extractor, model, attrs, 0,
        opt.model_copy(update={'init': tuple(start.as_array())}), mask_cfg
    )

    out = Path(args.out)
    final = trajectory.final
    save_grid(ImageGrid(soft_mask(final, mask_cfg, image.height, image.width).values), out / 'zoom_mask.csv')
    save_grid(zoom_forward(image, final, mask_cfg), out / 'zoom_output.csv')
    save_matrix(image.values.reshape(image.height, -1), out / 'zoom_input.csv')
    pd.DataFrame(
        [(step, *p.as_array(), s) for step, (p, s) in enumerate(zip(trajectory.params, trajectory.scores))],
        columns=['step', 'z_x', 'z_y', 'z_s', 'score']
    ).to_csv(out / 'zoom_trajectory.csv', index=False)
    print(f"final zoom: z_x={final.z_x:.4f} z_y={final.z_y:.4f} z_s={final.z_s:.4f}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog='zsl-ldf', description="Zero-shot learning with latent discriminative features")
    sub = parser.add_subparsers(dest='command', required=True)

    gen = sub.add_parser('gen-synth', help="write a synthetic dataset and run config")
    gen.add_argument('--out', required=True)
    gen.add_argument('--seed', type=int)
    for flag, kind in (('--c-s', int), ('--c-u', int), ('--k', int), ('--k-lat-signal', int),
                       ('--d', int), ('--n-per-class', int), ('--noise-sigma', float),
                       ('--latent-amplitude', float), ('--n-scales', int)):
        gen.add_argument(flag, type=kind)
    gen.set_defaults(handler=cmd_gen_synth)

    def with_config(name, handler, help_text, space=False, scale=False):
        p = sub.add_parser(name, help=help_text)
        p.add_argument('--config', required=True, help="RunConfig JSON file")
        p.add_argument('--seed', type=int)
        p.add_argument('--output-dir')
        if space:
            p.add_argument('--space', choices=SPACES)
        if scale:
            p.add_argument('--scale', type=int, help="evaluate one scale instead of the multi-scale combination")
        p.set_defaults(handler=handler)
        return p

    with_config('validate', cmd_validate, "check dataset consistency")
    train = with_config('train', cmd_train, "train the per-scale embeddings and combiner")
    train.add_argument('--epochs', type=int)
    train.add_argument('--learning-rate', type=float)
    train.add_argument('--batch-size', type=int)
    train.add_argument('--triplet-strategy', choices=('random', 'semi-hard'))
    train.add_argument('--combiner-mode', choices=('scalar', 'full'))
    transfer = with_config('transfer', cmd_transfer, "compute ridge weights and LA prototypes", scale=True)
    transfer.add_argument('--lambda', dest='ridge_lambda', type=float)
    with_config('predict', cmd_predict, "predict unseen-class test samples", space=True, scale=True)
    with_config('eval', cmd_eval, "zero-shot MCA on unseen classes", space=True, scale=True)
    with_config('gzsl-eval', cmd_gzsl_eval, "generalized zero-shot accuracies", space=True, scale=True)
    report = with_config('report', cmd_report, "activation and class-similarity reports", scale=True)
    report.add_argument('--activation-space', choices=('ua', 'la'), default='ua')
    report.add_argument('--element', type=int, default=0)
    report.add_argument('--top-k', type=int)

    zoom = sub.add_parser('zoom-demo', help="window search and zoom optimization on one grid")
    zoom.add_argument('--out', required=True)
    zoom.add_argument('--image', help="single-channel grid as a matrix file")
    zoom.add_argument('--size', type=int, default=16)
    zoom.add_argument('--seed', type=int, default=0)
    zoom.add_argument('--steps', type=int)
    zoom.add_argument('--learning-rate', type=float)
    zoom.set_defaults(handler=cmd_zoom_demo)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logger = setup_logger()
    try:
        args.handler(args, logger)
    except (UsageError, ValidationError) as e:
        if isinstance(e, ValidationError):
            message = "invalid configuration: " + "; ".join(err["msg"] for err in e.errors())
        else:
            message = str(e)
        print(f"error: {message}", file=sys.stderr)
        return EXIT_USAGE
    except (ZSLError, ValueError, ArithmeticError) as e:
        logger.error(str(e))
        print(f"error: {e}", file=sys.stderr)
        return EXIT_FAILURE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
