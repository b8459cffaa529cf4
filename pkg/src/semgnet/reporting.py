"""Run artifacts: confusion CSVs, JSON summaries, charts, size report.

Summaries are canonical JSON (sorted keys, fixed indentation) so that
two runs with the same seed produce byte-identical files.  Anything
hardware-dependent, wall time in particular, goes into a separate
timing.json sidecar to keep the summary reproducible.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .cvharness import FoldResult, SubjectReport
from .errors import DataError, FormatError
from .models import MODEL_NAMES, NOMINAL_MILLIONS, param_count


# -------------------------------------------------------------- confusion CSV

def confusion_to_csv(result: FoldResult) -> str:
    """One fold's confusion matrix: rows true class, columns predicted."""
    classes = result.confusion.shape[0]
    lines = ["true\\predicted," + ",".join(str(c) for c in range(1, classes + 1))]
    for g in range(classes):
        lines.append(str(g + 1) + "," + ",".join(
            str(int(v)) for v in result.confusion[g]))
    return "\n".join(lines) + "\n"


def csv_to_confusion(text: str) -> np.ndarray:
    lines = [ln for ln in text.strip().splitlines() if ln]
    if not lines or not lines[0].startswith("true\\predicted"):
        raise FormatError("missing confusion header row")
    rows = []
    for ln in lines[1:]:
        cells = ln.split(",")
        rows.append([int(v) for v in cells[1:]])
    matrix = np.array(rows, dtype=np.int64)
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        raise FormatError(f"confusion matrix must be square, got {matrix.shape}")
    return matrix


def write_fold_reports(results: list[FoldResult], outdir) -> list[Path]:
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    paths = []
    for r in results:
        path = outdir / f"fold_{r.trial:02d}_confusion.csv"
        path.write_text(confusion_to_csv(r))
        paths.append(path)
    return paths


# ------------------------------------------------------------------ summaries

def subject_summary(report: SubjectReport, results: list[FoldResult],
                    model_name: str, config: dict) -> dict:
    """Everything reproducible about one subject's run, JSON-ready."""
    pc = param_count(model_name, class_count=report.confusion.shape[0],
                     include_batchnorm=bool(config.get("batchnorm", True)))
    return {
        "subject_id": report.subject_id,
        "model": model_name,
        "config": dict(sorted(config.items())),
        "gestures": int(report.confusion.shape[0]),
        "folds": [
            {
                "trial": r.trial,
                "accuracy": r.accuracy,
                "test_images": r.total,
                "epochs_trained": r.epochs_trained,
                "per_class_correct": [int(v) for v in r.per_class_correct],
            }
            for r in results
        ],
        "fold_accuracies": list(report.fold_accuracies),
        "mean_accuracy": report.mean_accuracy,
        "total_test_images": report.total_images,
        "parameter_count": pc.total,
    }


def dump_canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2) + "\n"


def write_summary(summary: dict, path) -> None:
    Path(path).write_text(dump_canonical_json(summary))


def write_timing(path, wall_seconds: float, **extra) -> None:
    payload = {"wall_time_seconds": wall_seconds}
    payload.update(extra)
    Path(path).write_text(dump_canonical_json(payload))


def load_summary(path) -> dict:
    return json.loads(Path(path).read_text())


# ----------------------------------------------------------------- validation

def validate_artifacts(outdir) -> dict:
    """Re-derive the invariants a finished run must satisfy.

    From the emitted files alone: every fold's accuracy equals the
    trace of its confusion CSV over the matrix sum; fold test sizes are
    equal and sum to the dataset total; the mean matches the folds.
    Returns the parsed summary on success.
    """
    outdir = Path(outdir)
    summary = load_summary(outdir / "summary.json")
    folds = summary["folds"]
    if not folds:
        raise DataError("summary lists no folds")

    test_sizes = []
    for fold in folds:
        path = outdir / f"fold_{fold['trial']:02d}_confusion.csv"
        matrix = csv_to_confusion(path.read_text())
        total = int(matrix.sum())
        if total != fold["test_images"]:
            raise DataError(
                f"fold {fold['trial']}: CSV holds {total} images, summary "
                f"says {fold['test_images']}"
            )
        expected = np.trace(matrix) / matrix.sum()
        if fold["accuracy"] != expected:
            raise DataError(
                f"fold {fold['trial']}: accuracy {fold['accuracy']} is not "
                f"trace/sum = {expected}"
            )
        if [int(v) for v in np.diag(matrix)] != fold["per_class_correct"]:
            raise DataError(f"fold {fold['trial']}: per-class counts disagree")
        test_sizes.append(total)

    if len(set(test_sizes)) != 1:
        raise DataError(f"unequal fold test sizes {sorted(set(test_sizes))}")
    if sum(test_sizes) != summary["total_test_images"]:
        raise DataError(
            f"fold test sets cover {sum(test_sizes)} images, summary says "
            f"{summary['total_test_images']}"
        )
    accs = [fold["accuracy"] for fold in folds]
    if abs(summary["mean_accuracy"] - float(np.mean(accs))) > 1e-12:
        raise DataError("mean_accuracy is not the mean of fold accuracies")
    if summary["fold_accuracies"] != accs:
        raise DataError("fold_accuracies does not match the folds list")
    return summary


# --------------------------------------------------------------- aggregation

def aggregate_csv(summaries: list[dict]) -> str:
    """Per-subject means, one row per (subject, model)."""
    lines = ["subject_id,model,mean_accuracy"]
    for s in sorted(summaries, key=lambda s: (str(s["model"]), s["subject_id"])):
        lines.append(f"{s['subject_id']},{s['model']},{s['mean_accuracy']!r}")
    return "\n".join(lines) + "\n"


def svg_bar_chart(summaries: list[dict], width: int = 640,
                  height: int = 360) -> str:
    """Accuracy bars, one per subject per model, grouped by subject."""
    entries = sorted(
        ((s["subject_id"], str(s["model"]), float(s["mean_accuracy"]))
         for s in summaries),
        key=lambda e: (e[0], e[1]),
    )
    if not entries:
        raise DataError("nothing to chart")
    margin, axis = 40, 30
    plot_w = width - margin - 10
    plot_h = height - axis - 20
    bar_w = plot_w / len(entries)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" '
        f'height="{height}" viewBox="0 0 {width} {height}">',
        f'<line x1="{margin}" y1="20" x2="{margin}" y2="{20 + plot_h}" '
        'stroke="black"/>',
        f'<line x1="{margin}" y1="{20 + plot_h}" x2="{margin + plot_w}" '
        f'y2="{20 + plot_h}" stroke="black"/>',
    ]
    for frac in (0.0, 0.25, 0.5, 0.75, 1.0):
        y = 20 + plot_h * (1 - frac)
        parts.append(
            f'<text x="{margin - 6}" y="{y + 4:.1f}" font-size="10" '
            f'text-anchor="end">{frac:.2f}</text>'
        )
    palette = ("#4878d0", "#ee854a", "#6acc64", "#d65f5f", "#956cb4")
    models = sorted({m for _, m, _ in entries})
    color = {m: palette[i % len(palette)] for i, m in enumerate(models)}
    for i, (subject, model, acc) in enumerate(entries):
        h = plot_h * acc
        x = margin + i * bar_w
        parts.append(
            f'<rect class="bar" data-subject="{subject}" data-model="{model}" '
            f'x="{x + 1:.1f}" y="{20 + plot_h - h:.1f}" '
            f'width="{max(bar_w - 2, 1):.1f}" height="{h:.1f}" '
            f'fill="{color[model]}"/>'
        )
        parts.append(
            f'<text x="{x + bar_w / 2:.1f}" y="{20 + plot_h + 12}" '
            f'font-size="9" text-anchor="middle">s{subject}</text>'
        )
    for i, model in enumerate(models):
        parts.append(
            f'<text x="{margin + 8 + i * 90}" y="12" font-size="10" '
            f'fill="{color[model]}">{model}</text>'
        )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


# ------------------------------------------------------------ size reporting

def parameter_report(class_count: int = 8) -> dict:
    """Exact closed-form sizes for all five models, with the nominal
    approximate totals they are usually quoted at and the gap between
    the two."""
    models = {}
    for name in MODEL_NAMES:
        pc = param_count(name, class_count=class_count)
        nominal = NOMINAL_MILLIONS[name]
        exact_millions = pc.total / 1e6
        models[name] = {
            "per_layer": [[label, count] for label, count in pc.per_layer],
            "total": pc.total,
            "exact_millions": round(exact_millions, 6),
            "nominal_millions": nominal,
            "discrepancy_millions": round(exact_millions - nominal, 6),
        }
    a_total = models["A"]["total"]
    c_total = models["C-s2"]["total"]
    return {
        "class_count": class_count,
        "models": models,
        "compact_ratio": c_total / a_total,
        "notes": [
            "Totals count convolution and dense weights and biases only; "
            "batch-norm scale/shift pairs are excluded.",
            "Exact closed-form totals differ from the nominal approximate "
            "millions listed alongside; the discrepancy_millions column "
            "records exact minus nominal for each model.",
            "The compact model C-s2 is smaller than A by the compact_ratio "
            "above.",
        ],
    }


def parameter_report_text(report: dict) -> str:
    lines = ["model,total,exact_millions,nominal_millions,discrepancy_millions"]
    for name in MODEL_NAMES:
        m = report["models"][name]
        lines.append(
            f"{name},{m['total']},{m['exact_millions']!r},"
            f"{m['nominal_millions']!r},{m['discrepancy_millions']!r}"
        )
    lines.append("")
    lines.append(f"compact_ratio(C-s2/A),{report['compact_ratio']!r}")
    for note in report["notes"]:
        lines.append(f"# {note}")
    return "\n".join(lines) + "\n"
