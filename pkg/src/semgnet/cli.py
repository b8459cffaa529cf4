"""Command-line frontend.

Subcommands: synth, preprocess, train, evaluate, report.  Training
resolves its configuration in three layers: built-in defaults, then an
optional JSON config file, then explicit command-line flags.  Exit
codes: 1 for configuration problems, 2 for data or file problems, 3 for
numeric failures during training.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from dataclasses import asdict, dataclass, fields
from pathlib import Path

import numpy as np

from . import dataio, models, reporting
from .cvharness import TrainConfig, aggregate, make_folds, run_folds
from .errors import (
    ConfigError,
    DataError,
    FormatError,
    NumericError,
    ParameterError,
    ShapeError,
)
from .nn import BatchNorm, GlobalAvgPool, load_network, save_network


@dataclass
class RunConfig:
    model: str = "A"
    subject: tuple[str, ...] = ()
    seed: int = 0
    batchnorm: bool = True
    dropout: float | None = None     # None: the architecture's default
    activation: str = "elu"
    pooling: str = "none"            # none | max | avg, after the first stage
    init: str = "xavier"
    batch_size: int = 256
    max_epochs: int = 100
    patience: int = 5
    learning_rate: float = 0.001
    parallel_folds: int = 1
    out: str = "runs"

    def resolved(self) -> dict:
        data = asdict(self)
        data["model"] = models.canonical_name(self.model)
        if data["dropout"] is None:
            data["dropout"] = models.default_dropout(data["model"])
        data["subject"] = list(self.subject)
        return data


_CONFIG_KEYS = {f.name for f in fields(RunConfig)}


def _merge_config(args: argparse.Namespace) -> RunConfig:
    """defaults < JSON config file < explicit flags"""
    layers = {}
    if args.config is not None:
        try:
            loaded = json.loads(Path(args.config).read_text())
        except FileNotFoundError:
            raise
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot parse config {args.config}: {exc}")
        if not isinstance(loaded, dict):
            raise ConfigError("config file must hold a JSON object")
        unknown = set(loaded) - _CONFIG_KEYS
        if unknown:
            raise ConfigError(
                f"unknown config keys: {', '.join(sorted(unknown))}"
            )
        layers.update(loaded)
    for name in _CONFIG_KEYS:
        value = getattr(args, name, None)
        if value is not None:
            layers[name] = value
    if "subject" in layers:
        layers["subject"] = tuple(layers["subject"])
    try:
        return RunConfig(**layers)
    except TypeError as exc:
        raise ConfigError(str(exc))


def _data_options(model_name: str, batchnorm: bool) -> dict:
    # without batch normalization the pixels are rescaled to [0, 1];
    # the all-convolutional model needs square frames
    return {
        "normalize": not batchnorm,
        "pad_square": models.canonical_name(model_name) == "AllConv",
    }


# ------------------------------------------------------------------ commands

def cmd_synth(args) -> int:
    spec = dataio.SynthSpec(
        gestures=args.gestures, trials=args.trials,
        samples_per_trial=args.samples, noise_mv=args.noise,
        amplitude_mv=args.amplitude, blob_width=args.blob_width,
        sample_rate=args.sample_rate, subject_id=args.subject_id,
        seed=args.seed,
    )
    values = dataio.generate_synthetic(spec)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    dataio.write_emgb(out, values, sample_rate=spec.sample_rate,
                      subject_id=spec.subject_id)
    print(out)
    return 0


def cmd_preprocess(args) -> int:
    x, labels, index = dataio.load_training_set(
        args.subject, normalize=args.normalize, pad_square=args.pad_square,
    )
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    np.savez(
        out, images=x, labels=labels,
        gestures=index.gestures, trials=index.trials,
        samples_per_trial=index.samples_per_trial,
        subject_id=index.subject_id,
    )
    print(f"{out}: {len(x)} images of {x.shape[2]}x{x.shape[3]}")
    return 0


def cmd_train(args) -> int:
    config = _merge_config(args)
    resolved = config.resolved()
    if args.print_config:
        sys.stdout.write(reporting.dump_canonical_json(resolved))
        return 0
    if not config.subject:
        raise ConfigError("no --subject file given")

    train_cfg = TrainConfig(
        batch_size=config.batch_size, max_epochs=config.max_epochs,
        patience=config.patience, learning_rate=config.learning_rate,
        seed=config.seed,
    )
    options = _data_options(config.model, config.batchnorm)
    for subject_path in config.subject:
        started = time.monotonic()
        x, labels, index = dataio.load_training_set(subject_path, **options)
        plans = make_folds(index, seed=config.seed)

        def build_model(seed):
            return models.build(
                resolved["model"], class_count=index.gestures,
                batchnorm=config.batchnorm, dropout_p=resolved["dropout"],
                activation=config.activation, pooling=config.pooling,
                init_scheme=config.init, seed=seed,
            )

        results, final_model = run_folds(
            x, labels, plans, build_model, train_cfg,
            parallel=config.parallel_folds, keep_last_model=True,
        )
        report = aggregate(results, subject_id=index.subject_id)

        outdir = Path(config.out) / f"subject_{index.subject_id}"
        outdir.mkdir(parents=True, exist_ok=True)
        reporting.write_fold_reports(results, outdir)
        # only settings that shape the result belong in the summary;
        # paths and worker counts would break byte-for-byte comparisons
        stored = {k: v for k, v in resolved.items()
                  if k not in ("subject", "out", "parallel_folds")}
        summary = reporting.subject_summary(report, results,
                                            resolved["model"], config=stored)
        reporting.write_summary(summary, outdir / "summary.json")
        reporting.write_timing(outdir / "timing.json",
                               wall_seconds=time.monotonic() - started)
        save_network(final_model, outdir / "model.ckpt")
        sys.stdout.write(reporting.dump_canonical_json(summary))
    return 0


def _infer_eval_options(net) -> dict:
    normalize = not isinstance(net.layers[0], BatchNorm)
    pad_square = isinstance(net.layers[-1], GlobalAvgPool)
    return {"normalize": normalize, "pad_square": pad_square}


def cmd_evaluate(args) -> int:
    net = load_network(args.checkpoint)
    options = _infer_eval_options(net)
    if args.normalize is not None:
        options["normalize"] = args.normalize
    if args.pad_square is not None:
        options["pad_square"] = args.pad_square
    x, labels, index = dataio.load_training_set(args.subject, **options)

    if args.trial is not None:
        keep = np.concatenate([
            np.asarray(index.block(g, args.trial), dtype=np.int64)
            for g in range(1, index.gestures + 1)
        ])
        x, labels = x[keep], labels[keep]
    predicted = net.predict(x)
    from .cvharness import confusion_matrix
    confusion = confusion_matrix(labels, predicted, index.gestures)
    payload = {
        "subject_id": index.subject_id,
        "checkpoint": str(args.checkpoint),
        "trial": args.trial,
        "total_images": int(confusion.sum()),
        "accuracy": float(np.trace(confusion) / confusion.sum()),
        "confusion": confusion.tolist(),
    }
    text = reporting.dump_canonical_json(payload)
    if args.out:
        Path(args.out).write_text(text)
    sys.stdout.write(text)
    return 0


def cmd_report(args) -> int:
    summaries = []
    for pattern in args.summaries:
        path = Path(pattern)
        if path.is_dir():
            found = sorted(path.rglob("summary.json"))
            if not found:
                raise DataError(f"no summary.json under {path}")
            summaries.extend(reporting.load_summary(p) for p in found)
        else:
            summaries.append(reporting.load_summary(path))
    if not summaries:
        raise DataError("no summaries given")

    csv_text = reporting.aggregate_csv(summaries)
    svg_text = reporting.svg_bar_chart(summaries)
    Path(args.out_csv).parent.mkdir(parents=True, exist_ok=True)
    Path(args.out_csv).write_text(csv_text)
    Path(args.out_svg).parent.mkdir(parents=True, exist_ok=True)
    Path(args.out_svg).write_text(svg_text)

    means = [s["mean_accuracy"] for s in summaries]
    print(f"{len(summaries)} summaries, overall mean accuracy "
          f"{float(np.mean(means)):.4f}")
    return 0


# -------------------------------------------------------------------- parser

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="semgnet",
        description="Train and evaluate gesture classifiers on "
                    "instantaneous muscle-activity images.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic subject file")
    p.add_argument("--out", required=True, help="output .emgb path")
    p.add_argument("--gestures", type=int, default=8)
    p.add_argument("--trials", type=int, default=10)
    p.add_argument("--samples", type=int, default=200,
                   help="samples per trial")
    p.add_argument("--noise", type=float, default=0.1,
                   help="white-noise amplitude in mV")
    p.add_argument("--amplitude", type=float, default=1.5,
                   help="blob peak in mV")
    p.add_argument("--blob-width", type=float, default=1.5)
    p.add_argument("--sample-rate", type=int, default=1000)
    p.add_argument("--subject-id", type=int, default=0)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("preprocess",
                       help="filter a subject file and save its image stack")
    p.add_argument("--subject", required=True, help="input .emgb path")
    p.add_argument("--out", required=True, help="output .npz path")
    p.add_argument("--normalize", action="store_true",
                   help="rescale each image to [0, 1]")
    p.add_argument("--pad-square", action="store_true",
                   help="zero-pad 16x8 frames to 16x16")
    p.set_defaults(func=cmd_preprocess)

    p = sub.add_parser("train",
                       help="leave-one-trial-out training for one subject")
    p.add_argument("--config", help="JSON file with RunConfig keys")
    p.add_argument("--print-config", action="store_true",
                   help="print the resolved configuration and exit")
    p.add_argument("--model", choices=models.MODEL_NAMES, default=None)
    p.add_argument("--subject", action="append", default=None,
                   help="subject .emgb path (repeatable)")
    p.add_argument("--seed", type=int, default=None)
    bn = p.add_mutually_exclusive_group()
    bn.add_argument("--bn", dest="batchnorm", action="store_true",
                    default=None, help="batch normalization on (default)")
    bn.add_argument("--no-bn", dest="batchnorm", action="store_false",
                    default=None,
                    help="off; images are then rescaled to [0, 1]")
    p.add_argument("--dropout", type=float, default=None,
                   help="dropout probability (default: 0.35, AllConv 0.25)")
    p.add_argument("--activation", default=None,
                   choices=("elu", "relu", "leaky-relu", "sigmoid"))
    p.add_argument("--pooling", choices=("none", "max", "avg"), default=None,
                   help="2x2 pool after the first convolution stage")
    p.add_argument("--init", choices=("xavier", "he"), default=None)
    p.add_argument("--batch-size", type=int, default=None)
    p.add_argument("--max-epochs", type=int, default=None)
    p.add_argument("--patience", type=int, default=None)
    p.add_argument("--learning-rate", type=float, default=None)
    p.add_argument("--parallel-folds", type=int, default=None,
                   help="train folds on this many worker threads")
    p.add_argument("--out", default=None, help="output directory")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evaluate",
                       help="score a saved checkpoint on a subject file")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--subject", required=True)
    p.add_argument("--trial", type=int, default=None,
                   help="restrict to one trial (default: every image)")
    p.add_argument("--normalize", action="store_true", default=None)
    p.add_argument("--pad-square", action="store_true", default=None)
    p.add_argument("--out", help="also write the JSON result here")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("report",
                       help="aggregate summaries into a CSV and a bar chart")
    p.add_argument("summaries", nargs="+",
                   help="summary.json files or run directories")
    p.add_argument("--out-csv", default="report.csv")
    p.add_argument("--out-svg", default="report.svg")
    p.set_defaults(func=cmd_report)
    return parser


_EXIT_CODES = (
    ((ConfigError, ParameterError), 1),
    ((DataError, FormatError, ShapeError, FileNotFoundError), 2),
    ((NumericError,), 3),
)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except BaseException as exc:
        for kinds, code in _EXIT_CODES:
            if isinstance(exc, kinds):
                print(f"error: {exc}", file=sys.stderr)
                return code
        raise


if __name__ == "__main__":
    sys.exit(main())
