"""Turning multichannel sEMG samples into grayscale image frames.

One time sample across the electrode grid becomes one image: channel
voltages clamp to [-2.5, 2.5] mV and map affinely onto pixel intensities
0..255 (round half up), land on the grid per the electrode layout, and
can then be rescaled to any target intensity range by each image's own
min and max.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DataError, ParameterError, ShapeError

__all__ = [
    "GridLayout",
    "SemgImage",
    "NormalizationSpec",
    "frame_to_image",
    "frames_to_pixels",
    "max_min_normalize",
    "pad_to_square",
    "VOLT_RANGE",
    "PIXEL_RANGE",
]

VOLT_RANGE = (-2.5, 2.5)
PIXEL_RANGE = (0, 255)


def _default_cells(rows: int, cols: int) -> np.ndarray:
    k = np.arange(rows * cols)
    return np.stack([k // cols, k % cols], axis=1)


@dataclass(frozen=True)
class GridLayout:
    """Electrode grid geometry: channel k lands at cell (row, col).

    The default layout is row-major (channel k -> (k // cols, k % cols)).
    Any bijective channel-to-cell permutation is accepted.
    """

    rows: int = 16
    cols: int = 8
    channel_to_cell: np.ndarray = None

    def __post_init__(self):
        if self.rows < 1 or self.cols < 1:
            raise ParameterError(f"grid must be positive, got {self.rows}x{self.cols}")
        cells = (self.channel_to_cell if self.channel_to_cell is not None
                 else _default_cells(self.rows, self.cols))
        cells = np.asarray(cells, dtype=np.int64)
        n = self.rows * self.cols
        if cells.shape != (n, 2):
            raise ParameterError(
                f"layout needs {n} (row, col) entries, got shape {cells.shape}"
            )
        flat = cells[:, 0] * self.cols + cells[:, 1]
        in_range = ((cells[:, 0] >= 0) & (cells[:, 0] < self.rows)
                    & (cells[:, 1] >= 0) & (cells[:, 1] < self.cols))
        if not in_range.all() or len(np.unique(flat)) != n:
            raise ParameterError("layout must map channels onto grid cells bijectively")
        object.__setattr__(self, "channel_to_cell", cells)
        object.__setattr__(self, "_flat_cells", flat)

    @property
    def n_channels(self) -> int:
        return self.rows * self.cols

    @classmethod
    def from_file(cls, path, rows: int = 16, cols: int = 8) -> "GridLayout":
        """Read a plain-text layout: one 'channel row col' triple per line."""
        cells = np.zeros((rows * cols, 2), dtype=np.int64)
        seen = np.zeros(rows * cols, dtype=bool)
        with open(path) as fh:
            for lineno, line in enumerate(fh, start=1):
                text = line.split("#", 1)[0].strip()
                if not text:
                    continue
                parts = text.split()
                if len(parts) != 3:
                    raise DataError(f"{path}:{lineno}: expected 'channel row col'")
                ch, r, c = (int(p) for p in parts)
                if not 0 <= ch < rows * cols:
                    raise DataError(f"{path}:{lineno}: channel {ch} out of range")
                if seen[ch]:
                    raise DataError(f"{path}:{lineno}: duplicate channel {ch}")
                seen[ch] = True
                cells[ch] = (r, c)
        if not seen.all():
            missing = int(np.flatnonzero(~seen)[0])
            raise DataError(f"{path}: no entry for channel {missing}")
        return cls(rows=rows, cols=cols, channel_to_cell=cells)


@dataclass(frozen=True)
class SemgImage:
    """One instantaneous frame plus its provenance tags."""

    pixels: np.ndarray
    gesture_label: int = 0
    subject_id: int = 0
    trial_id: int = 0
    sample_index: int = 0


@dataclass(frozen=True)
class NormalizationSpec:
    """Affine intensity remap: [source_min, source_max] -> [target_min, target_max]."""

    source_min: float
    source_max: float
    target_min: float = 0.0
    target_max: float = 1.0

    def __post_init__(self):
        if not self.target_min < self.target_max:
            raise ParameterError(
                f"target range must be increasing, "
                f"got [{self.target_min}, {self.target_max}]"
            )

    def apply(self, values) -> np.ndarray:
        """Remap values; a degenerate source range maps everything to target_min."""
        x = np.asarray(values, dtype=np.float64)
        span = self.source_max - self.source_min
        if span == 0.0:
            return np.full_like(x, self.target_min)
        # divide before scaling so source_max lands exactly on target_max
        unit = (x - self.source_min) / span
        return unit * (self.target_max - self.target_min) + self.target_min


def _pixels_from_values(values: np.ndarray) -> np.ndarray:
    lo, hi = VOLT_RANGE
    scale = (PIXEL_RANGE[1] - PIXEL_RANGE[0]) / (hi - lo)
    clamped = np.clip(values, lo, hi)
    # affine map then round half up: floor(x + 0.5)
    return np.floor(clamped * scale + 127.5 + 0.5).astype(np.uint8)


def frames_to_pixels(frames, layout: GridLayout = GridLayout()) -> np.ndarray:
    """Vectorized mV -> pixel conversion: (n, channels) -> (n, rows, cols) uint8."""
    x = np.asarray(frames, dtype=np.float64)
    single = x.ndim == 1
    if single:
        x = x[None]
    if x.ndim != 2 or x.shape[1] != layout.n_channels:
        raise ShapeError(
            f"expected (n, {layout.n_channels}) mV frames, got shape {np.asarray(frames).shape}"
        )
    bad = ~np.isfinite(x)
    if bad.any():
        n, ch = np.unravel_index(int(np.argmax(bad)), x.shape)
        raise DataError(f"non-finite value at frame {n}, channel {ch}")
    pixels = np.zeros((x.shape[0], layout.rows, layout.cols), dtype=np.uint8)
    pixels.reshape(x.shape[0], -1)[:, layout._flat_cells] = _pixels_from_values(x)
    return pixels[0] if single else pixels


def frame_to_image(frame, layout: GridLayout = GridLayout(), *,
                   gesture_label: int = 0, subject_id: int = 0,
                   trial_id: int = 0, sample_index: int = 0) -> SemgImage:
    """Convert one 128-value mV frame into a grid image with its tags."""
    return SemgImage(
        pixels=frames_to_pixels(frame, layout),
        gesture_label=gesture_label,
        subject_id=subject_id,
        trial_id=trial_id,
        sample_index=sample_index,
    )


def max_min_normalize(pixels, target_min: float = 0.0,
                      target_max: float = 1.0) -> np.ndarray:
    """Rescale each image to the target range by its own min and max.

    Accepts one image (rows, cols) or a stack (n, rows, cols). A constant
    image carries no spread and maps to all target_min.
    """
    if not target_min < target_max:
        raise ParameterError(
            f"target range must be increasing, got [{target_min}, {target_max}]"
        )
    x = np.asarray(pixels, dtype=np.float64)
    single = x.ndim == 2
    if single:
        x = x[None]
    if x.ndim != 3:
        raise ShapeError(f"expected (n, rows, cols) images, got shape {x.shape}")
    lo = x.min(axis=(1, 2), keepdims=True)
    hi = x.max(axis=(1, 2), keepdims=True)
    span = hi - lo
    flat = span == 0.0
    unit = (x - lo) / np.where(flat, 1.0, span)
    out = unit * (target_max - target_min) + target_min
    if flat.any():
        out = np.where(flat, target_min, out)
    return out[0] if single else out


def pad_to_square(pixels) -> np.ndarray:
    """Zero-pad image columns symmetrically until width equals height.

    Works on (rows, cols) or (n, rows, cols); the content stays centered,
    so the height-width difference must be even.
    """
    x = np.asarray(pixels)
    if x.ndim not in (2, 3):
        raise ShapeError(f"expected (rows, cols) or (n, rows, cols), got shape {x.shape}")
    rows, cols = x.shape[-2], x.shape[-1]
    if cols > rows or (rows - cols) % 2 != 0:
        raise ShapeError(f"cannot center a {rows}x{cols} image in a square")
    side = (rows - cols) // 2
    if side == 0:
        return x.copy()
    pad = [(0, 0)] * (x.ndim - 1) + [(side, side)]
    return np.pad(x, pad)
