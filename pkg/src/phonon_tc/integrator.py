"""Adaptive Dormand-Prince 5(4) stepping for complex state vectors.

Error control uses the max norm over real components (complex entries
count as two real ones). An RMS norm (as in
``scipy.integrate``) averages over tens of thousands of density-matrix
entries and lets a handful of stiff high-Fock components run away
unnoticed; the max norm does not.

Steps are clipped so that every requested output time is hit exactly, so
no interpolant is needed. Every stage is a real-coefficient linear
combination, which keeps linear invariants (trace, Hermiticity) intact to
rounding; the combinations run as BLAS matrix-vector products on a real
view of the stage array.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterator

import numpy as np

__all__ = ["IntegrationError", "StepSizeUnderflow", "SolverStats", "dopri5"]

_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = [
    np.array([]),
    np.array([1 / 5]),
    np.array([3 / 40, 9 / 40]),
    np.array([44 / 45, -56 / 15, 32 / 9]),
    np.array([19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729]),
    np.array([9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656]),
    np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84]),
]
_E = np.array(
    [
        71 / 57600,
        0.0,
        -71 / 16695,
        71 / 1920,
        -17253 / 339200,
        22 / 525,
        -1 / 40,
    ]
)
_SAFETY = 0.9
_MIN_FACTOR = 0.2
_MAX_FACTOR = 5.0


class IntegrationError(RuntimeError):
    """Time integration could not proceed."""

    def __init__(self, message: str, time: float | None = None):
        super().__init__(message)
        self.time = time


class StepSizeUnderflow(IntegrationError):
    pass


@dataclass
class SolverStats:
    steps: int = 0
    rejected: int = 0
    nfev: int = 0
    last_step: float = 0.0
    min_step: float = np.inf


def _initial_step(f, t0, y0, f0, rtol, atol, span):
    scale = atol + rtol * np.abs(y0)
    d0 = np.max(np.abs(y0) / scale)
    d1 = np.max(np.abs(f0) / scale)
    if d0 < 1e-5 or d1 < 1e-5:
        h0 = 1e-6 * span
    else:
        h0 = 0.01 * d0 / d1
    h0 = min(h0, span)
    y1 = y0 + h0 * f0
    f1 = f(t0 + h0, y1)
    d2 = np.max(np.abs(f1 - f0) / scale) / h0
    if max(d1, d2) <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** (1 / 5)
    return min(100 * h0, h1, span)


def dopri5(
    f: Callable[[float, np.ndarray], np.ndarray],
    t_grid,
    y0: np.ndarray,
    rtol: float = 1e-8,
    atol: float = 1e-10,
    first_step: float | None = None,
    max_steps: int = 50_000_000,
    stats: SolverStats | None = None,
) -> Iterator[tuple[float, np.ndarray]]:
    """Yield ``(t, y)`` at every entry of ``t_grid`` (the first entry yields ``y0``).

    Raises :class:`StepSizeUnderflow` when the controller asks for a step
    below rounding resolution, :class:`IntegrationError` on non-finite
    values or when ``max_steps`` is exhausted.
    """
    t_grid = np.asarray(t_grid, dtype=float)
    if t_grid.ndim != 1 or t_grid.size == 0:
        raise ValueError("t_grid must be a non-empty 1-d sequence")
    if np.any(np.diff(t_grid) <= 0):
        raise ValueError("t_grid must be strictly increasing")
    stats = stats if stats is not None else SolverStats()
    y = np.array(y0, copy=True)
    t = float(t_grid[0])
    yield t, y.copy()
    if t_grid.size == 1:
        return

    dtype = np.result_type(y.dtype, float)
    y = y.astype(dtype, copy=False)
    k = np.empty((7, y.size), dtype=dtype)
    kr = k.view(np.float64)  # (7, n) or (7, 2n) for complex states
    k[0] = f(t, y).ravel()
    stats.nfev += 1
    span = float(t_grid[-1] - t_grid[0])
    h = first_step if first_step is not None else _initial_step(f, t, y, k[0].reshape(y.shape), rtol, atol, span)
    stats.nfev += 1

    for t_next in t_grid[1:]:
        while t < t_next:
            remaining = t_next - t
            hit = h >= remaining
            hh = remaining if hit else h
            if hh <= 16 * np.spacing(max(abs(t), abs(t_next))):
                raise StepSizeUnderflow(f"step size underflow at t = {t:.9g}", time=t)
            yr = y.reshape(-1).view(np.float64)
            for i in range(1, 7):
                y_stage = (yr + hh * (_A[i] @ kr[:i])).view(dtype).reshape(y.shape)
                k[i] = f(t + _C[i] * hh, y_stage).ravel()
            stats.nfev += 6
            err = hh * (_E @ kr)
            scale = atol + rtol * np.maximum(np.abs(yr), np.abs(y_stage.reshape(-1).view(np.float64)))
            err_norm = float(np.max(np.abs(err) / scale))
            if not np.isfinite(err_norm):
                raise IntegrationError(f"non-finite state encountered near t = {t:.9g}", time=t)
            if err_norm <= 1.0:
                t = float(t_next) if hit else t + hh
                y = y_stage
                k[0] = k[6]
                stats.steps += 1
                stats.last_step = hh
                stats.min_step = min(stats.min_step, hh)
                if stats.steps > max_steps:
                    raise IntegrationError(f"exceeded {max_steps} steps at t = {t:.9g}", time=t)
                factor = _MAX_FACTOR if err_norm == 0 else min(_MAX_FACTOR, _SAFETY * err_norm ** -0.2)
                # a step clipped to land on an output time only ever shrinks h
                h = min(h, hh * factor) if hit else hh * factor
            else:
                stats.rejected += 1
                h = hh * max(_MIN_FACTOR, _SAFETY * err_norm ** -0.2)
        yield t, y.copy()
