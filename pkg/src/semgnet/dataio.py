"""On-disk dataset container, synthetic data, and the image pipeline.

One subject's recordings live in a single flat binary file:

    header (26 bytes, little-endian):
        magic "EMGB" | version u32 | sample_rate u32 | channels u16 |
        gestures u16 | trials u16 | samples_per_trial u32 | subject_id u32
    payload:
        float32 voltages in mV, ordered gesture-major, then trial,
        then sample instant, then channel

Files are conventionally named subject_<id>.emgb.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .cvharness import DatasetIndex
from .dsp import FilterSpec, design_bandstop, filter_block
from .errors import DataError, FormatError, ParameterError
from .imaging import GridLayout, frames_to_pixels, max_min_normalize, pad_to_square

EMGB_MAGIC = b"EMGB"
EMGB_VERSION = 1
_HEADER = struct.Struct("<4sIIHHHII")

VOLT_LIMIT = 2.5  # mV, matches the imaging pixel map's clamp range


@dataclass(frozen=True)
class EmgbHeader:
    sample_rate: int
    channels: int
    gestures: int
    trials: int
    samples_per_trial: int
    subject_id: int

    @property
    def frame_count(self) -> int:
        return self.gestures * self.trials * self.samples_per_trial

    @property
    def payload_bytes(self) -> int:
        return self.frame_count * self.channels * 4


@dataclass(frozen=True)
class EmgRecording:
    """One gesture/trial block: (samples, channels) voltages in mV."""

    values: np.ndarray
    subject_id: int
    gesture: int    # 1-based
    trial: int      # 1-based
    sample_rate: int


def write_emgb(path, values: np.ndarray, sample_rate: int = 1000,
               subject_id: int = 0) -> None:
    """Write a (gestures, trials, samples, channels) voltage array."""
    values = np.asarray(values)
    if values.ndim != 4:
        raise ParameterError(
            f"expected (gestures, trials, samples, channels), got {values.shape}"
        )
    if not np.all(np.isfinite(values)):
        flat = np.argwhere(~np.isfinite(values))[0]
        raise DataError(f"non-finite voltage at (g,t,s,c)={tuple(flat.tolist())}")
    g, t, s, c = values.shape
    header = _HEADER.pack(EMGB_MAGIC, EMGB_VERSION, sample_rate, c, g, t, s,
                          subject_id)
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(np.ascontiguousarray(values, dtype="<f4").tobytes())


def read_emgb(path) -> tuple[list[EmgRecording], DatasetIndex]:
    """Load a subject file back into per-trial recordings plus its index."""
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < _HEADER.size:
        raise FormatError(
            f"file is {len(raw)} bytes; header needs {_HEADER.size} (at byte 0)"
        )
    magic, version, rate, channels, gestures, trials, samples, subject = (
        _HEADER.unpack_from(raw, 0)
    )
    if magic != EMGB_MAGIC:
        raise FormatError(f"bad magic {magic!r} at byte 0; expected {EMGB_MAGIC!r}")
    if version != EMGB_VERSION:
        raise FormatError(f"unsupported version {version} at byte 4")
    header = EmgbHeader(rate, channels, gestures, trials, samples, subject)
    expected = _HEADER.size + header.payload_bytes
    if len(raw) < expected:
        raise FormatError(
            f"payload truncated: file ends at byte {len(raw)}, header "
            f"promises {expected} bytes"
        )
    if len(raw) > expected:
        raise FormatError(
            f"{len(raw) - expected} trailing bytes at byte {expected}"
        )
    values = np.frombuffer(raw, dtype="<f4", offset=_HEADER.size)
    values = values.reshape(gestures, trials, samples, channels)
    if not np.all(np.isfinite(values)):
        flat = np.argwhere(~np.isfinite(values))[0]
        raise DataError(f"non-finite voltage at (g,t,s,c)={tuple(flat.tolist())}")

    recordings = [
        EmgRecording(values[g, t].copy(), subject, g + 1, t + 1, rate)
        for g in range(gestures)
        for t in range(trials)
    ]
    index = DatasetIndex(gestures, trials, samples, subject_id=subject)
    return recordings, index


@dataclass(frozen=True)
class SynthSpec:
    """Deterministic synthetic subject: one spatial blob per gesture.

    Every frame of gesture g carries a Gaussian intensity bump centred
    on that gesture's grid cell, plus white noise.  Centers default to
    an even spread over the electrode grid.
    """

    gestures: int = 8
    trials: int = 10
    samples_per_trial: int = 200
    centers: tuple[tuple[int, int], ...] | None = None
    noise_mv: float = 0.1
    amplitude_mv: float = 1.5
    blob_width: float = 1.5
    sample_rate: int = 1000
    subject_id: int = 0
    seed: int = 0

    def __post_init__(self):
        if self.gestures < 1 or self.trials < 1 or self.samples_per_trial < 1:
            raise ParameterError("gestures, trials and samples_per_trial "
                                 "must all be >= 1")
        if self.noise_mv < 0:
            raise ParameterError(f"noise_mv must be >= 0, got {self.noise_mv}")
        if self.blob_width <= 0:
            raise ParameterError(f"blob_width must be > 0, got {self.blob_width}")
        if self.centers is not None and len(self.centers) != self.gestures:
            raise ParameterError(
                f"{len(self.centers)} centers for {self.gestures} gestures"
            )

    def resolved_centers(self, layout: GridLayout) -> tuple[tuple[int, int], ...]:
        if self.centers is not None:
            for r, c in self.centers:
                if not (0 <= r < layout.rows and 0 <= c < layout.cols):
                    raise ParameterError(
                        f"center ({r}, {c}) outside the "
                        f"{layout.rows}x{layout.cols} grid"
                    )
            return tuple(tuple(c) for c in self.centers)
        rows = np.linspace(1, layout.rows - 2, self.gestures).round().astype(int)
        cols = [layout.cols // 4 if i % 2 == 0 else (3 * layout.cols) // 4
                for i in range(self.gestures)]
        return tuple((int(r), int(c)) for r, c in zip(rows, cols))


def generate_synthetic(spec: SynthSpec,
                       layout: GridLayout | None = None) -> np.ndarray:
    """Voltage array (gestures, trials, samples, channels) for write_emgb."""
    layout = layout or GridLayout()
    centers = spec.resolved_centers(layout)
    rows = layout.channel_to_cell[:, 0].astype(np.float64)
    cols = layout.channel_to_cell[:, 1].astype(np.float64)

    per_gesture = np.empty((spec.gestures, layout.n_channels), dtype=np.float64)
    for g, (cr, cc) in enumerate(centers):
        dist2 = (rows - cr) ** 2 + (cols - cc) ** 2
        per_gesture[g] = spec.amplitude_mv * np.exp(
            -dist2 / (2.0 * spec.blob_width ** 2)
        )

    rng = np.random.default_rng(spec.seed)
    shape = (spec.gestures, spec.trials, spec.samples_per_trial,
             layout.n_channels)
    values = np.broadcast_to(per_gesture[:, None, None, :], shape).copy()
    if spec.noise_mv > 0:
        values += rng.normal(0.0, spec.noise_mv, size=shape)
    np.clip(values, -VOLT_LIMIT, VOLT_LIMIT, out=values)
    return values.astype(np.float32)


def preprocess(recordings: list[EmgRecording],
               filter_spec: FilterSpec | None = None,
               layout: GridLayout | None = None) -> list:
    """Band-stop filter every channel, then image every sample instant.

    Returns one image per frame, in the order the recordings were given.
    """
    from .imaging import frame_to_image

    layout = layout or GridLayout()
    cascade = design_bandstop(filter_spec or FilterSpec())
    images = []
    for rec in recordings:
        filtered = filter_block(cascade, rec.values)
        for s in range(filtered.shape[0]):
            images.append(frame_to_image(
                filtered[s], layout, gesture_label=rec.gesture,
                subject_id=rec.subject_id, trial_id=rec.trial,
                sample_index=s,
            ))
    return images


def load_training_set(path, filter_spec: FilterSpec | None = None,
                      layout: GridLayout | None = None,
                      normalize: bool = False, pad_square: bool = False,
                      ) -> tuple[np.ndarray, np.ndarray, DatasetIndex]:
    """File to model input: (N, 1, H, W) float32, labels 1..G, index.

    Filtering always runs.  Max-min rescaling to [0, 1] is for networks
    without batch normalization; pad_square grows 16x8 frames to 16x16
    for the all-convolutional model.
    """
    recordings, index = read_emgb(path)
    layout = layout or GridLayout()
    cascade = design_bandstop(filter_spec or FilterSpec())

    blocks = []
    for rec in recordings:
        filtered = filter_block(cascade, rec.values)
        blocks.append(frames_to_pixels(filtered, layout))
    pixels = np.concatenate(blocks, axis=0)

    x = pixels.astype(np.float32)
    if normalize:
        x = max_min_normalize(x).astype(np.float32)
    if pad_square:
        x = pad_to_square(x)
    return x[:, None, :, :], index.labels(), index
