"""Signal analysis for sampled trajectories: periods, envelopes and shape checks."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.ndimage import uniform_filter1d
from scipy.signal import find_peaks

from phonon_tc.fock import DomainError

__all__ = [
    "Segment",
    "cycle_extrema",
    "dominant_period",
    "monotone_segments",
    "noise_floor",
    "oscillation_period",
]


def dominant_period(t: np.ndarray, x: np.ndarray) -> float:
    """Period of the largest non-DC peak of the (linearly detrended) spectrum."""
    t = np.asarray(t, float)
    x = np.asarray(x, float)
    dt = t[1] - t[0]
    y = x - np.polyval(np.polyfit(t, x, 1), t)
    spec = np.abs(np.fft.rfft(y * np.hanning(len(y))))
    freqs = np.fft.rfftfreq(len(y), dt)
    k = int(np.argmax(spec[1:])) + 1
    return 1.0 / freqs[k]


def _detrended(t: np.ndarray, x: np.ndarray, period: float) -> np.ndarray:
    """Subtract a running mean one period wide (removes a slowly drifting midline)."""
    dt = t[1] - t[0]
    width = max(3, int(round(period / dt)))
    return x - uniform_filter1d(x, size=width, mode="nearest")


def _upward_crossings(t: np.ndarray, y: np.ndarray) -> np.ndarray:
    idx = np.nonzero((y[:-1] < 0) & (y[1:] >= 0))[0]
    frac = -y[idx] / (y[idx + 1] - y[idx])
    return t[idx] + frac * (t[idx + 1] - t[idx])


def oscillation_period(t, x, t_min: float | None = None, t_max: float | None = None) -> tuple[float, int]:
    """Mean period from upward midline crossings, with the number of full cycles used.

    The midline is a one-period running mean (seeded from the spectral
    peak); the period is the slope of a least-squares fit of crossing time
    against crossing index. Crossings within one period of either end of
    the window are discarded because the running mean is biased there.
    """
    t = np.asarray(t, float)
    x = np.asarray(x, float)
    sel = np.ones_like(t, dtype=bool)
    if t_min is not None:
        sel &= t >= t_min
    if t_max is not None:
        sel &= t <= t_max
    t, x = t[sel], x[sel]
    if len(t) < 8:
        raise DomainError("too few samples for period analysis")
    rough = dominant_period(t, x)
    crossings = _upward_crossings(t, _detrended(t, x, rough))
    crossings = crossings[(crossings > t[0] + rough) & (crossings < t[-1] - rough)]
    if len(crossings) < 3:
        raise DomainError("fewer than three midline crossings in the window")
    # drop spurious near-duplicate crossings caused by noise on the midline
    keep = np.concatenate([[True], np.diff(crossings) > 0.5 * rough])
    crossings = crossings[keep]
    slope = np.polyfit(np.arange(len(crossings)), crossings, 1)[0]
    return float(slope), len(crossings) - 1


def cycle_extrema(t, x, period: float):
    """Per-cycle maxima and minima: ``(t_max, x_max, t_min, x_min)`` arrays."""
    t = np.asarray(t, float)
    x = np.asarray(x, float)
    dt = t[1] - t[0]
    dist = max(1, int(0.6 * period / dt))
    imax, _ = find_peaks(x, distance=dist)
    imin, _ = find_peaks(-x, distance=dist)
    return t[imax], x[imax], t[imin], x[imin]


@dataclass(frozen=True)
class Segment:
    start: int
    stop: int  # inclusive
    direction: int  # +1 rising, -1 falling

    def length(self) -> int:
        return self.stop - self.start


def monotone_segments(x, min_change: float = 0.0) -> list[Segment]:
    """Split ``x`` into maximal monotone runs; runs changing by less than ``min_change`` are merged."""
    x = np.asarray(x, float)
    dx = np.diff(x)
    signs = np.sign(dx)
    segs: list[Segment] = []
    start = 0
    cur = 0
    for i, s in enumerate(signs):
        if s == 0:
            continue
        if cur == 0:
            cur = int(s)
        elif s != cur:
            segs.append(Segment(start, i, cur))
            start, cur = i, int(s)
    segs.append(Segment(start, len(x) - 1, cur))
    if min_change > 0:
        merged: list[Segment] = []
        for seg in segs:
            small = abs(x[seg.stop] - x[seg.start]) < min_change
            if merged and (small or seg.direction == merged[-1].direction):
                last = merged[-1]
                merged[-1] = Segment(last.start, seg.stop, last.direction)
            else:
                merged.append(seg)
        segs = merged
    return segs


def noise_floor(x) -> float:
    """Robust sample-to-sample noise scale (standard-deviation units).

    Median absolute deviation of the second difference, divided by
    sqrt(6) so white noise of standard deviation s returns about s. A
    smooth oscillation sampled many times per period barely contributes.
    """
    x = np.asarray(x, float)
    d2 = np.diff(x, 2)
    return float(1.4826 * np.median(np.abs(d2 - np.median(d2))) / np.sqrt(6.0))
