"""Phonon number, purity, Fock populations and Husimi Q grids."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from phonon_tc.fock import DensityMatrix, DomainError, FockSpace, _coherent_amplitudes

__all__ = [
    "HusimiGrid",
    "default_husimi_range",
    "fock_populations",
    "husimi_q",
    "phonon_number",
    "purity",
    "purity_entrywise",
]


def _arr(rho) -> np.ndarray:
    return rho.data if isinstance(rho, DensityMatrix) else np.asarray(rho, dtype=complex)


def phonon_number(rho) -> float:
    r = _arr(rho)
    val = complex(np.dot(np.arange(r.shape[0]), np.diagonal(r)))
    if abs(val.imag) > 1e-10:
        raise DomainError(f"<a^dag a> has imaginary part {val.imag:.3e}")
    return val.real


def purity(rho) -> float:
    """Tr(rho^2) as the trace of the matrix square."""
    r = _arr(rho)
    return float(np.trace(r @ r).real)


def purity_entrywise(rho) -> float:
    """Tr(rho^2) as sum |rho_ij|^2, valid for Hermitian rho."""
    r = _arr(rho)
    return float(np.sum(r.real**2 + r.imag**2))


def fock_populations(rho, indices) -> np.ndarray:
    r = _arr(rho)
    idx = np.asarray(list(indices), dtype=int)
    if idx.size and (idx.min() < 0 or idx.max() >= r.shape[0]):
        raise DomainError(f"Fock indices must lie in [0, {r.shape[0]})")
    p = np.diagonal(r)[idx]
    if np.any(p.real < -1e-12):
        raise DomainError("negative Fock population")
    return p.real.copy()


@dataclass
class HusimiGrid:
    """Q(alpha) sampled at alpha = q + i p; ``values[i, j]`` belongs to (q[i], p[j])."""

    q: np.ndarray
    p: np.ndarray
    values: np.ndarray

    @property
    def q_range(self) -> tuple[float, float]:
        return float(self.q[0]), float(self.q[-1])

    @property
    def p_range(self) -> tuple[float, float]:
        return float(self.p[0]), float(self.p[-1])

    @property
    def resolution(self) -> tuple[int, int]:
        return len(self.q), len(self.p)

    @property
    def cell_area(self) -> float:
        return float((self.q[1] - self.q[0]) * (self.p[1] - self.p[0]))

    def total(self) -> float:
        """Riemann sum of Q over the grid; approaches 1 as the grid covers the state."""
        return float(self.values.sum() * self.cell_area)

    def argmax(self) -> complex:
        i, j = np.unravel_index(np.argmax(self.values), self.values.shape)
        return complex(self.q[i], self.p[j])

    def radial_profile(self, center: complex = 0.0, bin_width: float | None = None):
        """Mean Q in annuli about ``center``; returns (bin centres, means)."""
        bin_width = bin_width or float(self.q[1] - self.q[0])
        qq, pp = np.meshgrid(self.q, self.p, indexing="ij")
        r = np.abs(qq + 1j * pp - center)
        bins = np.floor(r / bin_width).astype(int)
        sums = np.bincount(bins.ravel(), weights=self.values.ravel())
        counts = np.bincount(bins.ravel())
        # keep only annuli lying completely inside the grid
        r_max = min(
            abs(self.q[0] - center.real), abs(self.q[-1] - center.real),
            abs(self.p[0] - center.imag), abs(self.p[-1] - center.imag),
        )
        n_keep = int(r_max / bin_width)
        with np.errstate(invalid="ignore"):
            means = sums[:n_keep] / counts[:n_keep]
        return (np.arange(n_keep) + 0.5) * bin_width, means


def default_husimi_range(g: float, kappa: float) -> float:
    """Half-width 2 sqrt(g / 2 kappa): twice the undriven limit-cycle radius."""
    return 2.0 * math.sqrt(g / (2.0 * kappa))


def husimi_q(
    rho,
    q_range: tuple[float, float],
    p_range: tuple[float, float] | None = None,
    resolution: int | tuple[int, int] = 201,
) -> HusimiGrid:
    """Q(alpha) = <alpha| rho |alpha> / pi on a rectangular grid.

    The coherent-state coefficients are the exact (unrenormalized) projection
    onto the cutoff, so Q is exact for any state living below the cutoff.
    """
    r = _arr(rho)
    d = r.shape[0]
    p_range = p_range or q_range
    nq, np_ = (resolution, resolution) if isinstance(resolution, int) else resolution
    q = np.linspace(q_range[0], q_range[1], nq)
    p = np.linspace(p_range[0], p_range[1], np_)
    values = np.empty((nq, np_))
    n = np.arange(d)
    half_lgamma = 0.5 * np.array([math.lgamma(k + 1.0) for k in n])
    for i, qi in enumerate(q):
        alphas = qi + 1j * p
        mod = np.abs(alphas)
        with np.errstate(divide="ignore", invalid="ignore"):
            log_mod = np.log(mod)
            log_c = -0.5 * mod[None, :] ** 2 + n[:, None] * log_mod[None, :] - half_lgamma[:, None]
        log_c[0, :] = -0.5 * mod**2
        C = np.exp(log_c) * np.exp(1j * n[:, None] * np.angle(alphas)[None, :])
        values[i] = np.einsum("nk,nk->k", C.conj(), r @ C).real / math.pi
    grid = HusimiGrid(q=q, p=p, values=values)
    vmax = values.max()
    edge = max(values[0].max(), values[-1].max(), values[:, 0].max(), values[:, -1].max())
    if vmax > 0 and edge > 1e-4 * vmax:
        warnings.warn(
            f"Husimi grid does not cover the state: boundary value {edge:.2e} vs max {vmax:.2e}",
            stacklevel=2,
        )
    return grid


def coherent_overlap_check(space: FockSpace, alpha: complex) -> float:
    """Norm of the exact truncated coherent projection (1 minus the discarded tail)."""
    c = _coherent_amplitudes(alpha, space.cutoff)
    return float(np.vdot(c, c).real)
