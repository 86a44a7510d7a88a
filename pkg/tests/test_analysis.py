import numpy as np
import pytest

from phonon_tc.analysis import (
    Segment,
    cycle_extrema,
    dominant_period,
    monotone_segments,
    noise_floor,
    oscillation_period,
)
from phonon_tc.fock import DomainError


def test_dominant_period_of_sine():
    t = np.linspace(0, 10, 4001)
    assert dominant_period(t, 3 + np.sin(2 * np.pi * t / 0.5)) == pytest.approx(0.5, rel=0.02)


def test_period_with_drifting_midline_and_decay():
    t = np.linspace(0, 10, 10001)
    T = 0.2001
    x = 60 + 2 * t + 30 * np.exp(-t / 8) * np.sin(2 * np.pi * t / T + 0.3)
    period, cycles = oscillation_period(t, x)
    assert period == pytest.approx(T, rel=1e-4)
    assert cycles >= 45


def test_period_window_and_errors():
    t = np.linspace(0, 10, 5001)
    x = np.sin(2 * np.pi * t / 0.4)
    period, cycles = oscillation_period(t, x, t_min=2.0, t_max=6.0)
    assert period == pytest.approx(0.4, rel=1e-4)
    assert cycles == 6  # crossings within one period of the window edges are dropped
    with pytest.raises(DomainError):
        oscillation_period(t[:5], x[:5])
    with pytest.raises(DomainError):
        oscillation_period(t, np.sin(2 * np.pi * t / 8.0))


def test_cycle_extrema():
    t = np.linspace(0, 3, 3001)
    x = np.sin(2 * np.pi * t)
    tmax, xmax, tmin, xmin = cycle_extrema(t, x, 1.0)
    np.testing.assert_allclose(tmax, [0.25, 1.25, 2.25], atol=1e-3)
    np.testing.assert_allclose(xmin, -1, atol=1e-5)


def test_monotone_segments():
    x = [0, 1, 2, 3, 2, 1, 1, 2]
    segs = monotone_segments(x)
    assert segs == [Segment(0, 3, 1), Segment(3, 6, -1), Segment(6, 7, 1)]
    assert segs[0].length() == 3
    # a small wiggle is merged into the surrounding run
    y = [0, 1, 2, 1.99, 3, 4]
    assert len(monotone_segments(y)) == 3
    assert len(monotone_segments(y, min_change=0.1)) == 1


def test_noise_floor():
    rng = np.random.default_rng(0)
    t = np.linspace(0, 10, 20001)
    smooth = 50 * np.sin(2 * np.pi * t)
    assert noise_floor(smooth) < 1e-3
    noisy = smooth + 0.5 * rng.normal(size=t.size)
    assert noise_floor(noisy) == pytest.approx(0.5, rel=0.05)
