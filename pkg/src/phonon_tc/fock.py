"""Truncated Fock-space operators and states.

Operators are ``scipy.sparse`` CSR matrices of complex dtype; density
matrices are dense and wrapped in :class:`DensityMatrix`, which checks the
physical invariants on construction.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

__all__ = [
    "HERMITIAN_TOL",
    "TRACE_TOL",
    "DensityMatrix",
    "DomainError",
    "FockSpace",
    "TruncationWarning",
    "annihilation_op",
    "coherent_state_vector",
    "creation_op",
    "dagger",
    "fock_state",
    "identity_op",
    "number_op",
    "psd_tolerance",
    "thermal_state",
]

HERMITIAN_TOL = 1e-10
TRACE_TOL = 1e-8
TAIL_MASS_WARN = 1e-6


def psd_tolerance(dim: int) -> float:
    return 1e-8 * dim


class DomainError(ValueError):
    """Raised when an argument lies outside the domain of an operation."""


class TruncationWarning(UserWarning):
    """A state constructor dropped more probability mass than the cutoff budget allows."""


@dataclass(frozen=True)
class FockSpace:
    """Fock basis |0>, ..., |cutoff - 1>."""

    cutoff: int

    def __post_init__(self):
        if int(self.cutoff) != self.cutoff or self.cutoff < 2:
            raise DomainError(f"Fock cutoff must be an integer >= 2, got {self.cutoff!r}")

    @property
    def dim(self) -> int:
        return self.cutoff


def dagger(op):
    """Conjugate transpose of a sparse or dense operator."""
    if sp.issparse(op):
        return op.conj().T.tocsr()
    return np.asarray(op).conj().T


def annihilation_op(space: FockSpace) -> sp.csr_matrix:
    d = space.cutoff
    return sp.diags(np.sqrt(np.arange(1, d, dtype=float)), 1, shape=(d, d), format="csr", dtype=complex)


def creation_op(space: FockSpace) -> sp.csr_matrix:
    return dagger(annihilation_op(space))


def number_op(space: FockSpace) -> sp.csr_matrix:
    d = space.cutoff
    return sp.diags(np.arange(d, dtype=float), 0, shape=(d, d), format="csr", dtype=complex)


def identity_op(dim: int) -> sp.csr_matrix:
    return sp.identity(dim, dtype=complex, format="csr")


class DensityMatrix:
    """Hermitian, unit-trace, positive semidefinite matrix.

    The wrapped array is copied and made read-only so instances can be shared
    between workers. Invariants are checked against ``HERMITIAN_TOL``,
    ``TRACE_TOL`` and ``psd_tolerance(dim)`` unless ``check=False``.
    """

    __slots__ = ("_data",)

    def __init__(self, data, check: bool = True):
        arr = np.array(data, dtype=complex, copy=True)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
            raise DomainError(f"density matrix must be square, got shape {arr.shape}")
        arr.setflags(write=False)
        self._data = arr
        if check:
            self.check()

    @property
    def data(self) -> np.ndarray:
        return self._data

    @property
    def dim(self) -> int:
        return self._data.shape[0]

    def hermiticity_error(self) -> float:
        return float(np.max(np.abs(self._data - self._data.conj().T)))

    def trace_error(self) -> float:
        return float(abs(np.trace(self._data) - 1.0))

    def min_eigenvalue(self) -> float:
        herm = 0.5 * (self._data + self._data.conj().T)
        return float(np.linalg.eigvalsh(herm)[0])

    def check(self) -> None:
        if not np.all(np.isfinite(self._data)):
            raise DomainError("density matrix has non-finite entries")
        herm = self.hermiticity_error()
        if herm > HERMITIAN_TOL:
            raise DomainError(f"density matrix not Hermitian: max |rho - rho^dag| = {herm:.3e}")
        tr = self.trace_error()
        if tr > TRACE_TOL:
            raise DomainError(f"density matrix trace deviates from 1 by {tr:.3e}")
        lam = self.min_eigenvalue()
        if lam < -psd_tolerance(self.dim):
            raise DomainError(f"density matrix has negative eigenvalue {lam:.3e}")

    def __array__(self, dtype=None, copy=None):
        return self._data if dtype is None else self._data.astype(dtype)

    def __repr__(self) -> str:
        return f"DensityMatrix(dim={self.dim})"


def fock_state(space: FockSpace, n: int) -> DensityMatrix:
    """Projector |n><n|."""
    if not 0 <= n < space.cutoff:
        raise DomainError(f"Fock index {n} outside [0, {space.cutoff})")
    rho = np.zeros((space.cutoff, space.cutoff), dtype=complex)
    rho[n, n] = 1.0
    return DensityMatrix(rho)


def _coherent_amplitudes(alpha: complex, dim: int) -> np.ndarray:
    # log-space keeps large |alpha| from overflowing alpha**n / sqrt(n!)
    n = np.arange(dim)
    r = abs(alpha)
    if r == 0.0:
        out = np.zeros(dim, dtype=complex)
        out[0] = 1.0
        return out
    log_mag = -0.5 * r * r + n * math.log(r) - 0.5 * np.array([math.lgamma(k + 1.0) for k in n])
    return np.exp(log_mag) * np.exp(1j * n * np.angle(alpha))


def coherent_state_vector(space: FockSpace, alpha: complex, normalize: bool = True) -> np.ndarray:
    """Coefficients exp(-|alpha|^2/2) alpha^n / sqrt(n!) for n < cutoff.

    With ``normalize=True`` the truncated vector is rescaled to unit norm and
    a :class:`TruncationWarning` is emitted when the discarded tail exceeds
    1e-6 or |alpha|^2 > cutoff / 2. ``normalize=False`` returns the exact
    projection of the infinite-dimensional coherent state.
    """
    c = _coherent_amplitudes(complex(alpha), space.cutoff)
    if not normalize:
        return c
    norm2 = float(np.vdot(c, c).real)
    tail = 1.0 - norm2
    if abs(alpha) ** 2 > space.cutoff / 2 or tail > TAIL_MASS_WARN:
        warnings.warn(
            f"coherent state alpha={alpha} truncated at cutoff {space.cutoff} "
            f"(discarded mass {tail:.2e})",
            TruncationWarning,
            stacklevel=2,
        )
    return c / math.sqrt(norm2)


def thermal_populations(n_bar: float, dim: int) -> np.ndarray:
    """Unnormalized p_n = n_bar^n / (n_bar + 1)^(n + 1) for n < dim."""
    if n_bar < 0:
        raise DomainError(f"mean phonon number must be >= 0, got {n_bar}")
    p = np.zeros(dim)
    if n_bar == 0:
        p[0] = 1.0
        return p
    n = np.arange(dim)
    return np.exp(n * math.log(n_bar / (n_bar + 1.0)) - math.log1p(n_bar))


def thermal_state(space: FockSpace, n_bar0: float) -> DensityMatrix:
    """Diagonal thermal state with mean phonon number ``n_bar0``, renormalized on the cutoff."""
    p = thermal_populations(n_bar0, space.cutoff)
    tail = 1.0 - p.sum()
    if tail > TAIL_MASS_WARN:
        warnings.warn(
            f"thermal state n_bar0={n_bar0} truncated at cutoff {space.cutoff} "
            f"(discarded mass {tail:.2e})",
            TruncationWarning,
            stacklevel=2,
        )
    return DensityMatrix(np.diag(p / p.sum()).astype(complex))
