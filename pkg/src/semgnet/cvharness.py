"""Leave-one-trial-out cross-validation.

The dataset for one subject is an ordered stack of images: gesture-major,
then trial, then sample instant.  Fold t holds out trial t of every
gesture for testing, samples an eighth of the remaining images for
validation, and trains on the rest.  Each fold trains a freshly
initialized model; folds are independent and may run in parallel with
results identical to sequential execution.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from threadpoolctl import threadpool_limits

from .errors import DataError, NumericError, ParameterError
from .nn import Network, SoftmaxCrossEntropy
from .optim import Adam, EarlyStopping


@dataclass(frozen=True)
class DatasetIndex:
    """Image-index bookkeeping for one subject's stack.

    Images are stored gesture-major, then trial, then sample, so each
    (gesture, trial) pair owns one contiguous block.  Gesture and trial
    ids are 1-based.
    """

    gestures: int
    trials: int
    samples_per_trial: int
    subject_id: int = 0

    def __post_init__(self):
        for name in ("gestures", "trials", "samples_per_trial"):
            if getattr(self, name) < 1:
                raise ParameterError(f"{name} must be >= 1")

    @property
    def total(self) -> int:
        return self.gestures * self.trials * self.samples_per_trial

    def block(self, gesture: int, trial: int) -> range:
        """Index range of one gesture/trial recording."""
        if not 1 <= gesture <= self.gestures:
            raise ParameterError(f"gesture {gesture} outside 1..{self.gestures}")
        if not 1 <= trial <= self.trials:
            raise ParameterError(f"trial {trial} outside 1..{self.trials}")
        start = ((gesture - 1) * self.trials + (trial - 1)) * self.samples_per_trial
        return range(start, start + self.samples_per_trial)

    def labels(self) -> np.ndarray:
        """Gesture label (1..G) of every image, in storage order."""
        return np.repeat(np.arange(1, self.gestures + 1, dtype=np.int64),
                         self.trials * self.samples_per_trial)


@dataclass(frozen=True)
class FoldPlan:
    trial: int
    test_indices: np.ndarray
    val_indices: np.ndarray
    train_indices: np.ndarray

    def __post_init__(self):
        test = set(self.test_indices.tolist())
        val = set(self.val_indices.tolist())
        train = set(self.train_indices.tolist())
        if (test & val) or (test & train) or (val & train):
            raise DataError(f"fold {self.trial}: overlapping index sets")
        if (len(test) != self.test_indices.size
                or len(val) != self.val_indices.size
                or len(train) != self.train_indices.size):
            raise DataError(f"fold {self.trial}: duplicate indices")


@dataclass(frozen=True)
class FoldResult:
    trial: int
    confusion: np.ndarray        # (G, G) ints, rows true, columns predicted
    accuracy: float
    per_class_correct: np.ndarray
    total: int
    epochs_trained: int
    val_losses: tuple[float, ...]


@dataclass(frozen=True)
class TrainConfig:
    batch_size: int = 256
    max_epochs: int = 100
    patience: int = 5
    learning_rate: float = 0.001
    seed: int = 0

    def __post_init__(self):
        if self.batch_size < 1:
            raise ParameterError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.max_epochs < 1:
            raise ParameterError(f"max_epochs must be >= 1, got {self.max_epochs}")


def make_folds(index: DatasetIndex, seed: int = 0) -> list[FoldPlan]:
    """One plan per trial: hold that trial out of every gesture.

    An eighth of the remaining images (sampled without replacement,
    deterministically from the seed) forms the validation set.
    """
    if index.trials < 2:
        raise DataError(
            f"need at least 2 trials for leave-one-trial-out, got {index.trials}"
        )
    children = np.random.SeedSequence(seed).spawn(index.trials)
    everything = np.arange(index.total, dtype=np.int64)
    plans = []
    for t in range(1, index.trials + 1):
        test = np.concatenate(
            [np.asarray(index.block(g, t), dtype=np.int64)
             for g in range(1, index.gestures + 1)]
        )
        mask = np.ones(index.total, dtype=bool)
        mask[test] = False
        remaining = everything[mask]
        rng = np.random.default_rng(children[t - 1])
        val = rng.choice(remaining, size=remaining.size // 8, replace=False)
        val.sort()
        val_mask = np.zeros(index.total, dtype=bool)
        val_mask[val] = True
        train = remaining[~val_mask[remaining]]
        plans.append(FoldPlan(t, test, val, train))
    return plans


def fold_seed(master_seed: int, trial: int) -> int:
    """Stable per-fold integer seed derived from the master seed."""
    return int(np.random.SeedSequence([master_seed, trial]).generate_state(1)[0])


def _mean_loss(net: Network, head: SoftmaxCrossEntropy, x, labels,
               batch_size: int = 1024) -> float:
    total = 0.0
    for start in range(0, len(x), batch_size):
        xb = x[start:start + batch_size]
        scores = net.forward(xb, mode="eval")
        loss, _ = head.forward(scores, labels[start:start + batch_size])
        total += loss * len(xb)
    return total / len(x)


def confusion_matrix(true_labels, predicted, classes: int) -> np.ndarray:
    """Integer count matrix, rows = true class, columns = predicted."""
    out = np.zeros((classes, classes), dtype=np.int64)
    np.add.at(out, (np.asarray(true_labels) - 1, np.asarray(predicted) - 1), 1)
    return out


def train_fold(images: np.ndarray, labels: np.ndarray, plan: FoldPlan,
               build_model, config: TrainConfig) -> tuple[Network, FoldResult]:
    """Train on one fold, evaluate its held-out trial, keep the model.

    build_model is a callable taking an integer seed and returning a
    fresh network; the model is reinitialized here, never warm-started.
    """
    hi = max(plan.test_indices.max(initial=-1), plan.val_indices.max(initial=-1),
             plan.train_indices.max(initial=-1))
    if hi >= len(images):
        raise DataError(
            f"fold {plan.trial}: index {int(hi)} outside dataset of "
            f"{len(images)} images"
        )
    with threadpool_limits(limits=1):
        return _run_fold_inner(images, labels, plan, build_model, config)


def run_fold(images: np.ndarray, labels: np.ndarray, plan: FoldPlan,
             build_model, config: TrainConfig) -> FoldResult:
    """train_fold without keeping the trained network around."""
    return train_fold(images, labels, plan, build_model, config)[1]


def _run_fold_inner(images, labels, plan, build_model, config) -> FoldResult:
    seed = fold_seed(config.seed, plan.trial)
    net = build_model(seed)
    head = SoftmaxCrossEntropy()
    opt = Adam(net.params(), learning_rate=config.learning_rate)
    stopper = EarlyStopping(patience=config.patience,
                            max_epochs=config.max_epochs)

    x_train = images[plan.train_indices]
    y_train = labels[plan.train_indices]
    x_val = images[plan.val_indices]
    y_val = labels[plan.val_indices]

    classes = int(labels.max())
    val_losses = []
    epoch = 0
    while True:
        epoch += 1
        rng = np.random.default_rng([seed, epoch])
        order = rng.permutation(len(x_train))
        for step, start in enumerate(range(0, len(order), config.batch_size)):
            take = order[start:start + config.batch_size]
            scores = net.forward(x_train[take], mode="train", rng=rng)
            loss, _ = head.forward(scores, y_train[take])
            if not np.isfinite(loss):
                raise NumericError(
                    f"non-finite training loss at epoch {epoch}, step {step}"
                )
            net.backward(head.backward())
            opt.step(net.grads())
        val_loss = _mean_loss(net, head, x_val, y_val)
        if not np.isfinite(val_loss):
            raise NumericError(f"non-finite validation loss at epoch {epoch}")
        val_losses.append(float(val_loss))
        if stopper.update(val_loss):
            break

    result = evaluate_fold(net, images, labels, plan, classes,
                           epochs_trained=epoch, val_losses=tuple(val_losses))
    return net, result


def evaluate_fold(net, images, labels, plan: FoldPlan, classes: int,
                  epochs_trained: int = 0,
                  val_losses: tuple[float, ...] = ()) -> FoldResult:
    """Score a trained classifier on the fold's held-out trial.

    Prediction runs in eval mode (frozen normalization statistics, no
    dropout); accuracy is the confusion trace over its sum, exactly.
    """
    predicted = net.predict(images[plan.test_indices])
    confusion = confusion_matrix(labels[plan.test_indices], predicted, classes)
    return FoldResult(
        trial=plan.trial,
        confusion=confusion,
        accuracy=float(np.trace(confusion) / confusion.sum()),
        per_class_correct=np.diag(confusion).copy(),
        total=int(confusion.sum()),
        epochs_trained=epochs_trained,
        val_losses=val_losses,
    )


def run_folds(images, labels, plans, build_model, config: TrainConfig,
              parallel: int = 1, keep_last_model: bool = False):
    """All folds, sequentially or across worker threads.

    Per-fold seeding makes the results independent of scheduling, so
    parallel output is identical to sequential output.  With
    keep_last_model the trained network of the last plan is returned
    alongside the results.
    """
    if parallel < 1:
        raise ParameterError(f"parallel must be >= 1, got {parallel}")
    if parallel == 1:
        pairs = [train_fold(images, labels, p, build_model, config)
                 for p in plans]
    else:
        with ThreadPoolExecutor(max_workers=parallel) as pool:
            futures = [pool.submit(train_fold, images, labels, p, build_model,
                                   config) for p in plans]
            pairs = [f.result() for f in futures]
    results = [r for _, r in pairs]
    if keep_last_model:
        return results, (pairs[-1][0] if pairs else None)
    return results


@dataclass(frozen=True)
class SubjectReport:
    subject_id: int
    fold_accuracies: tuple[float, ...]
    mean_accuracy: float
    confusion: np.ndarray        # summed over folds
    total_images: int


@dataclass(frozen=True)
class OverallReport:
    subject_ids: tuple[int, ...]
    subject_means: tuple[float, ...]
    mean_accuracy: float


def aggregate(results: list[FoldResult], subject_id: int = 0) -> SubjectReport:
    """Unweighted mean of fold accuracies plus the summed confusion."""
    if not results:
        raise ParameterError("no fold results to aggregate")
    accs = tuple(r.accuracy for r in results)
    confusion = np.sum([r.confusion for r in results], axis=0)
    return SubjectReport(
        subject_id=subject_id,
        fold_accuracies=accs,
        mean_accuracy=float(np.mean(accs)),
        confusion=confusion,
        total_images=int(confusion.sum()),
    )


def aggregate_subjects(reports: list[SubjectReport]) -> OverallReport:
    if not reports:
        raise ParameterError("no subject reports to aggregate")
    means = tuple(r.mean_accuracy for r in reports)
    return OverallReport(
        subject_ids=tuple(r.subject_id for r in reports),
        subject_means=means,
        mean_accuracy=float(np.mean(means)),
    )
