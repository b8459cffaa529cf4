"""Train the compact model on a small synthetic set, fold by fold.

Runs the full leave-one-trial-out loop through the library API (the
`semgnet` command line wraps the same calls) and prints per-fold
accuracies plus the pooled confusion matrix.
"""

import tempfile
from pathlib import Path

import numpy as np

from semgnet import cvharness, dataio, models


def main():
    spec = dataio.SynthSpec(gestures=4, trials=4, samples_per_trial=40,
                            noise_mv=0.3, seed=5)
    workdir = Path(tempfile.mkdtemp(prefix="semgnet-demo-"))
    path = workdir / "subject_0.emgb"
    dataio.write_emgb(path, dataio.generate_synthetic(spec))
    print(f"wrote {path} ({path.stat().st_size:,} bytes)")

    x, labels, index = dataio.load_training_set(path)
    print(f"{x.shape[0]} images of {x.shape[2]}x{x.shape[3]}, "
          f"{index.gestures} gestures, {index.trials} trials")

    config = cvharness.TrainConfig(batch_size=64, max_epochs=5, seed=0)
    plans = cvharness.make_folds(index, seed=config.seed)

    def build(seed):
        return models.build("C-s2", class_count=index.gestures, seed=seed)

    results = cvharness.run_folds(x, labels, plans, build, config)
    for r in results:
        print(f"fold {r.trial}: accuracy {r.accuracy:.4f} "
              f"({r.epochs_trained} epochs, "
              f"final val loss {r.val_losses[-1]:.4f})")

    report = cvharness.aggregate(results, subject_id=index.subject_id)
    print(f"\nmean accuracy over {len(results)} folds: "
          f"{report.mean_accuracy:.4f}")
    print("pooled confusion (rows true, columns predicted):")
    print(np.array2string(report.confusion, prefix="  "))


if __name__ == "__main__":
    main()
