"""Batch converter from MAT recording archives to EMGB containers.

The upstream archive stores one MAT file per gesture-trial, each holding
a samples x 128 matrix of raw channel values plus (in most releases)
scalar subject/gesture/trial fields. This tool groups the files by
subject, refuses to write anything unless every gesture-trial cell of a
subject is present, and emits one `subject_<id>.emgb` per subject in
gesture-major order, values passed through untouched apart from the
32-bit float representation.

Output is atomic: each container is written to a temporary name and
renamed into place, so a reader never sees a partial file. A
`manifest.json` next to the outputs records which source file and which
matrix key filled every (gesture, trial) cell, since field naming
varies between archive releases.
"""

import argparse
import json
import re
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.io

from semgnet.dataio import write_emgb

__version__ = "0.1.0"

CHANNELS = 128

_FILENAME = re.compile(r"(\d+)-(\d+)-(\d+)\.mat$", re.IGNORECASE)


class ConversionError(Exception):
    """Any condition that must abort the batch without partial output."""


@dataclass(frozen=True)
class SourceMatrix:
    """One gesture-trial recording located inside a MAT file."""

    subject: int
    gesture: int
    trial: int
    path: Path
    key: str  # the matrix variable name that was matched
    values: np.ndarray  # (samples, 128) float32


@dataclass
class ConversionManifest:
    """Everything the batch intends to write, validated before any IO."""

    input_dir: Path
    output_dir: Path
    subjects: dict = field(default_factory=dict)  # id -> [SourceMatrix]

    def add(self, source: SourceMatrix):
        self.subjects.setdefault(source.subject, []).append(source)

    def validate(self):
        """Every subject must fill a complete gesture x trial grid."""
        if not self.subjects:
            raise ConversionError(f"no MAT recordings found in {self.input_dir}")
        for subject_id in sorted(self.subjects):
            entries = self.subjects[subject_id]
            cells = {(e.gesture, e.trial) for e in entries}
            if len(cells) != len(entries):
                dupes = sorted(
                    c for c in cells
                    if sum(1 for e in entries
                           if (e.gesture, e.trial) == c) > 1)
                raise ConversionError(
                    f"subject {subject_id}: duplicate recordings for "
                    f"gesture/trial {dupes}")
            gestures = max(g for g, _ in cells)
            trials = max(t for _, t in cells)
            missing = [(g, t) for g in range(1, gestures + 1)
                       for t in range(1, trials + 1) if (g, t) not in cells]
            if missing:
                gaps = ", ".join(f"gesture {g} trial {t}" for g, t in missing)
                raise ConversionError(
                    f"subject {subject_id}: incomplete archive, missing "
                    f"{gaps}")
            lengths = {e.values.shape[0] for e in entries}
            if len(lengths) != 1:
                raise ConversionError(
                    f"subject {subject_id}: recordings disagree on sample "
                    f"count: {sorted(lengths)}")

    def as_log(self):
        return {
            "input_dir": str(self.input_dir),
            "output_dir": str(self.output_dir),
            "subjects": {
                str(sid): [
                    {"gesture": e.gesture, "trial": e.trial,
                     "source": str(e.path), "matrix_key": e.key,
                     "samples": int(e.values.shape[0])}
                    for e in sorted(entries,
                                    key=lambda e: (e.gesture, e.trial))
                ]
                for sid, entries in sorted(self.subjects.items())
            },
        }


def _scalar(variables, *names):
    for name in names:
        if name in variables:
            return int(np.squeeze(variables[name]))
    return None


def _find_matrix(variables, path):
    """The recording matrix: prefer a variable named 'data', otherwise
    the single 2-D numeric array in the file."""
    if "data" in variables and getattr(variables["data"], "ndim", 0) == 2:
        key = "data"
    else:
        candidates = [k for k, v in variables.items()
                      if not k.startswith("__")
                      and isinstance(v, np.ndarray) and v.ndim == 2
                      and v.size > 1  # (1,1) scalars are metadata fields
                      and np.issubdtype(v.dtype, np.number)]
        if len(candidates) != 1:
            raise ConversionError(
                f"{path}: cannot identify the recording matrix among "
                f"variables {sorted(k for k in variables if not k.startswith('__'))}")
        key = candidates[0]
    matrix = np.asarray(variables[key])
    if matrix.ndim != 2 or matrix.shape[1] != CHANNELS:
        raise ConversionError(
            f"{path}: variable {key!r} has shape {matrix.shape}, expected "
            f"(samples, {CHANNELS})")
    return key, matrix.astype(np.float32)


def read_source(path) -> SourceMatrix:
    """Load one MAT file and identify subject, gesture, trial and data."""
    path = Path(path)
    try:
        variables = scipy.io.loadmat(path)
    except Exception as exc:
        raise ConversionError(f"{path}: not a readable MAT file ({exc})")
    key, values = _find_matrix(variables, path)
    subject = _scalar(variables, "subject", "subj")
    gesture = _scalar(variables, "gesture", "gest", "label")
    trial = _scalar(variables, "trial", "rep")
    if subject is None or gesture is None or trial is None:
        m = _FILENAME.search(path.name)
        if not m:
            raise ConversionError(
                f"{path}: no subject/gesture/trial fields and the name "
                f"does not follow sss-ggg-ttt.mat")
        subject, gesture, trial = (int(x) for x in m.groups())
    if gesture < 1 or trial < 1 or subject < 0:
        raise ConversionError(
            f"{path}: ids must be positive, got subject {subject} "
            f"gesture {gesture} trial {trial}")
    return SourceMatrix(subject, gesture, trial, path, key, values)


def scan(input_dir, subjects=None) -> "ConversionManifest":
    """Build and validate a manifest for the whole input directory."""
    input_dir = Path(input_dir)
    if not input_dir.is_dir():
        raise ConversionError(f"input directory {input_dir} does not exist")
    manifest = ConversionManifest(input_dir, Path("."))
    for path in sorted(input_dir.rglob("*.mat")):
        source = read_source(path)
        if subjects is not None and source.subject not in subjects:
            continue
        manifest.add(source)
    manifest.validate()
    return manifest


def convert(input_dir, output_dir, subjects=None, sample_rate=1000):
    """Convert every (selected) subject; returns the written paths.

    Validation happens before the first write, and each container goes
    through a temporary file plus rename, so a failed batch leaves no
    partial output behind.
    """
    manifest = scan(input_dir, subjects)
    output_dir = Path(output_dir)
    output_dir.mkdir(parents=True, exist_ok=True)
    manifest.output_dir = output_dir

    written = []
    for subject_id in sorted(manifest.subjects):
        entries = sorted(manifest.subjects[subject_id],
                         key=lambda e: (e.gesture, e.trial))
        gestures = max(e.gesture for e in entries)
        trials = max(e.trial for e in entries)
        samples = entries[0].values.shape[0]
        block = np.empty((gestures, trials, samples, CHANNELS),
                         dtype=np.float32)
        for e in entries:
            block[e.gesture - 1, e.trial - 1] = e.values

        final = output_dir / f"subject_{subject_id}.emgb"
        temp = final.with_suffix(".emgb.tmp")
        try:
            write_emgb(temp, block, sample_rate=sample_rate,
                       subject_id=subject_id)
            temp.replace(final)
        except BaseException:
            temp.unlink(missing_ok=True)
            raise
        written.append(final)

    log_path = output_dir / "manifest.json"
    log_path.write_text(json.dumps(manifest.as_log(), indent=2,
                                   sort_keys=True) + "\n")
    return written, log_path


def _parse_subjects(text):
    try:
        ids = {int(part) for part in text.split(",") if part.strip()}
    except ValueError:
        raise ConversionError(f"--subjects must be a comma list of ids, got {text!r}")
    if not ids:
        raise ConversionError("--subjects selected nothing")
    return ids


def build_parser():
    parser = argparse.ArgumentParser(
        prog="matconvert",
        description="Convert a MAT recording archive to per-subject EMGB files.")
    parser.add_argument("--in", dest="input_dir", required=True,
                        help="directory holding the .mat files")
    parser.add_argument("--out", dest="output_dir", required=True,
                        help="directory for subject_<id>.emgb outputs")
    parser.add_argument("--subjects", default=None,
                        help="comma-separated subject ids (default: all)")
    parser.add_argument("--sample-rate", type=int, default=1000,
                        help="sampling rate stored in the containers")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        subjects = _parse_subjects(args.subjects) if args.subjects else None
        written, log_path = convert(args.input_dir, args.output_dir,
                                    subjects=subjects,
                                    sample_rate=args.sample_rate)
    except ConversionError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    for path in written:
        print(path)
    print(f"manifest: {log_path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
