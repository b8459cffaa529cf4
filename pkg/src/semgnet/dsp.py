"""Butterworth band-stop filtering for mains-interference removal.

Design runs entirely in double precision: analog low-pass prototype,
low-pass to band-stop transformation, then bilinear transform with the
band edges and the stop-band centre prewarped so the notch zeros land
exactly on the interference frequency. The result is a cascade of
second-order sections applied causally (direct-form II transposed).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DataError, ParameterError

__all__ = [
    "FilterSpec",
    "BiquadCascade",
    "design_bandstop",
    "filter_channel",
    "filter_block",
    "frequency_response",
]


@dataclass(frozen=True)
class FilterSpec:
    """Band-stop design parameters.

    sample_rate, low_cut and high_cut are in Hz; order is the order of
    the analog low-pass prototype (the digital filter has 2*order poles).
    """

    sample_rate: float = 1000.0
    low_cut: float = 45.0
    high_cut: float = 55.0
    order: int = 2

    def __post_init__(self):
        if self.order < 1:
            raise ParameterError(f"filter order must be >= 1, got {self.order}")
        if not 0.0 < self.low_cut < self.high_cut:
            raise ParameterError(
                f"band edges must satisfy 0 < low < high, got [{self.low_cut}, {self.high_cut}]"
            )
        if self.high_cut >= self.sample_rate / 2.0:
            raise ParameterError(
                f"high cut {self.high_cut} Hz must lie below the Nyquist "
                f"frequency {self.sample_rate / 2.0} Hz"
            )


@dataclass(frozen=True)
class BiquadCascade:
    """Second-order sections, one row per section: [b0, b1, b2, 1, a1, a2]."""

    sections: np.ndarray
    sample_rate: float

    def __post_init__(self):
        sec = np.asarray(self.sections, dtype=np.float64)
        if sec.ndim != 2 or sec.shape[1] != 6:
            raise ParameterError(f"sections must be (n, 6), got {sec.shape}")
        object.__setattr__(self, "sections", sec)

    @property
    def n_sections(self) -> int:
        return self.sections.shape[0]

    def pole_radii(self) -> np.ndarray:
        """Magnitude of every pole, section by section."""
        radii = []
        for _, _, _, _, a1, a2 in self.sections:
            radii.extend(np.abs(np.roots([1.0, a1, a2])))
        return np.asarray(radii)


def _butterworth_prototype_poles(order: int) -> np.ndarray:
    k = np.arange(1, order + 1)
    theta = np.pi * (2.0 * k + order - 1.0) / (2.0 * order)
    return np.exp(1j * theta)


def design_bandstop(spec: FilterSpec) -> BiquadCascade:
    """Design the band-stop cascade for the given spec.

    The returned cascade has unity DC gain, all poles strictly inside the
    unit circle, and transmission zeros on the unit circle at the centre
    of the stop band.
    """
    fs = float(spec.sample_rate)
    c = 2.0 * fs
    # Prewarp the band edges and pin the notch to the stop-band centre,
    # so the digital zeros sit exactly on the interference frequency.
    f_centre = 0.5 * (spec.low_cut + spec.high_cut)
    w1 = c * np.tan(np.pi * spec.low_cut / fs)
    w2 = c * np.tan(np.pi * spec.high_cut / fs)
    w0 = c * np.tan(np.pi * f_centre / fs)
    bw = w2 - w1

    # Low-pass prototype -> band-stop: each prototype pole p becomes the
    # root pair of s^2 - (bw/p) s + w0^2; zeros go to +-j*w0.
    proto = _butterworth_prototype_poles(spec.order)
    half = bw / (2.0 * proto)
    disc = np.sqrt(half**2 - w0**2 + 0j)
    analog_poles = np.concatenate([half + disc, half - disc])

    # Bilinear transform (z = (c + s) / (c - s)).
    zd_angle = 2.0 * np.arctan(w0 / c)
    digital_zero = np.exp(1j * zd_angle)
    digital_poles = (c + analog_poles) / (c - analog_poles)
    if np.any(np.abs(digital_poles) >= 1.0):
        raise ParameterError("designed filter is unstable; check the band edges")

    # Group poles into pairs: conjugate pairs for complex poles, sorted
    # consecutive pairs for real ones (real poles always arrive in even
    # numbers here). Every section gets one copy of the conjugate zero
    # pair. Per-section gain is fixed by unity DC gain, which reproduces
    # the designed transfer function exactly (the full band-stop has
    # unity gain at z = 1).
    tol = 1e-12
    complex_upper = sorted(
        (p for p in digital_poles if p.imag > tol), key=lambda p: -abs(p)
    )
    real = sorted(p.real for p in digital_poles if abs(p.imag) <= tol)
    pairs = [(p, p.conjugate()) for p in complex_upper]
    pairs += [(real[i], real[i + 1]) for i in range(0, len(real), 2)]
    rows = []
    for p1, p2 in pairs:
        b = np.array([1.0, -2.0 * digital_zero.real, 1.0])
        a = np.array([1.0, -(p1 + p2).real, (p1 * p2).real])
        b *= a.sum() / b.sum()
        rows.append(np.concatenate([b, a]))
    return BiquadCascade(sections=np.asarray(rows), sample_rate=fs)


def frequency_response(cascade: BiquadCascade, freqs_hz, *, sample_rate: float | None = None):
    """Complex response of the cascade at the given frequencies (Hz)."""
    fs = cascade.sample_rate if sample_rate is None else sample_rate
    w = 2.0 * np.pi * np.asarray(freqs_hz, dtype=np.float64) / fs
    z = np.exp(1j * w)
    h = np.ones_like(z)
    for b0, b1, b2, _, a1, a2 in cascade.sections:
        zi = 1.0 / z
        h *= (b0 + b1 * zi + b2 * zi**2) / (1.0 + a1 * zi + a2 * zi**2)
    return h


def _check_finite(x: np.ndarray):
    bad = ~np.isfinite(x)
    if bad.any():
        idx = np.unravel_index(int(np.argmax(bad)), x.shape)
        pos = idx[0] if len(idx) == 1 else idx
        raise DataError(f"non-finite sample at index {pos}")


def _sosfilt(sections: np.ndarray, x: np.ndarray) -> np.ndarray:
    # x: (n_samples, n_signals), float64. Causal DF2T, zero initial state.
    y = x.astype(np.float64, copy=True)
    n = y.shape[0]
    for b0, b1, b2, _, a1, a2 in sections:
        s1 = np.zeros(y.shape[1])
        s2 = np.zeros(y.shape[1])
        for t in range(n):
            xt = y[t]
            yt = b0 * xt + s1
            s1 = b1 * xt - a1 * yt + s2
            s2 = b2 * xt - a2 * yt
            y[t] = yt
    return y


def filter_channel(cascade: BiquadCascade, signal) -> np.ndarray:
    """Filter one channel causally; output has the input's length."""
    x = np.asarray(signal, dtype=np.float64)
    if x.ndim != 1:
        raise ParameterError(f"expected a 1-D signal, got shape {x.shape}")
    _check_finite(x)
    return _sosfilt(cascade.sections, x[:, None])[:, 0]


def filter_block(cascade: BiquadCascade, signals) -> np.ndarray:
    """Filter (n_samples, n_channels) columns independently in one pass.

    Equivalent to calling filter_channel per column; channels never share
    filter state.
    """
    x = np.asarray(signals, dtype=np.float64)
    if x.ndim != 2:
        raise ParameterError(f"expected (n_samples, n_channels), got shape {x.shape}")
    _check_finite(x)
    return _sosfilt(cascade.sections, x)
