import math
import warnings

import numpy as np
import pytest

from phonon_tc.fock import DomainError, FockSpace, coherent_state_vector, fock_state, thermal_state
from phonon_tc.observables import (
    HusimiGrid,
    default_husimi_range,
    fock_populations,
    husimi_q,
    phonon_number,
    purity,
    purity_entrywise,
)


def random_density(d, rank, rng):
    X = rng.normal(size=(d, rank)) + 1j * rng.normal(size=(d, rank))
    rho = X @ X.conj().T
    return rho / np.trace(rho).real


def test_number_and_purity_examples():
    space = FockSpace(80)
    assert phonon_number(fock_state(space, 7)) == pytest.approx(7.0)
    th = thermal_state(space, 2.0)
    assert purity(th) == pytest.approx(1 / 5, rel=1e-9)
    assert phonon_number(th) == pytest.approx(2.0, rel=1e-9)
    psi = coherent_state_vector(space, 1.5 + 0.5j)
    rho = np.outer(psi, psi.conj())
    assert phonon_number(rho) == pytest.approx(2.5, rel=1e-10)
    assert purity(rho) == pytest.approx(1.0, abs=1e-12)


def test_number_rejects_complex_trace():
    rho = np.zeros((3, 3), complex)
    rho[1, 1] = 1j
    with pytest.raises(DomainError):
        phonon_number(rho)


def test_purity_forms_agree():
    rng = np.random.default_rng(7)
    for rank in (1, 3, 12):
        rho = random_density(12, rank, rng)
        assert abs(purity(rho) - purity_entrywise(rho)) < 1e-12


def test_fock_populations():
    space = FockSpace(40)
    th = thermal_state(space, 1.0)
    p = fock_populations(th, [0, 1, 2])
    np.testing.assert_allclose(p, [0.5, 0.25, 0.125], rtol=1e-10)
    np.testing.assert_allclose(fock_populations(fock_state(space, 3), range(40)), np.eye(40)[3])
    with pytest.raises(DomainError):
        fock_populations(th, [40])
    bad = np.diag([1.1, -0.1]).astype(complex)
    with pytest.raises(DomainError):
        fock_populations(bad, [0, 1])


def test_vacuum_closed_form():
    space = FockSpace(20)
    grid = husimi_q(fock_state(space, 0), (-4, 4), resolution=81)
    qq, pp = np.meshgrid(grid.q, grid.p, indexing="ij")
    np.testing.assert_allclose(grid.values, np.exp(-(qq**2 + pp**2)) / math.pi, atol=1e-15)
    assert grid.values[40, 40] == pytest.approx(1 / math.pi, abs=1e-12)
    assert grid.argmax() == 0


def test_coherent_state_peak():
    space = FockSpace(40)
    alpha = 1.5 - 0.75j
    psi = coherent_state_vector(space, alpha)
    grid = husimi_q(np.outer(psi, psi.conj()), (-5, 5), resolution=81)
    assert grid.argmax() == pytest.approx(alpha)
    assert grid.values.max() == pytest.approx(1 / math.pi, rel=1e-10)


def test_rotation_by_quarter_turn_permutes_grid():
    # U = exp(-i pi/2 n) rotates phase space by -pi/2, so Q'(alpha) = Q(i alpha)
    rng = np.random.default_rng(3)
    d = 16
    rho = random_density(d, 2, rng)
    U = np.diag(np.exp(-0.5j * math.pi * np.arange(d)))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        g0 = husimi_q(rho, (-3, 3), resolution=41)
        g1 = husimi_q(U @ rho @ U.conj().T, (-3, 3), resolution=41)
    # i (q + i p) = -p + i q
    expected = np.empty_like(g0.values)
    n = len(g0.q)
    for i in range(n):
        for j in range(n):
            expected[i, j] = g0.values[n - 1 - j, i]
    np.testing.assert_allclose(g1.values, expected, atol=1e-13)


def test_normalization_converges_with_resolution():
    space = FockSpace(40)
    th = thermal_state(space, 2.0)
    coarse = husimi_q(th, (-8, 8), resolution=81).total()
    fine = husimi_q(th, (-8, 8), resolution=161).total()
    assert fine == pytest.approx(1.0, abs=1e-6)
    assert coarse == pytest.approx(1.0, abs=1e-4)


def test_uncovered_grid_warns():
    space = FockSpace(150)
    with pytest.warns(UserWarning, match="does not cover"):
        husimi_q(thermal_state(space, 5.0), (-1, 1), resolution=11)


def test_radial_profile_of_ring():
    q = np.linspace(-6, 6, 121)
    qq, pp = np.meshgrid(q, q, indexing="ij")
    r = np.hypot(qq, pp)
    grid = HusimiGrid(q, q, np.exp(-((r - 3.0) ** 2)))
    radii, means = grid.radial_profile()
    assert radii[-1] <= 6.0
    assert abs(radii[np.argmax(means)] - 3.0) <= grid.q[1] - grid.q[0]
    assert grid.q_range == (-6.0, 6.0) and grid.resolution == (121, 121)


def test_default_range():
    assert default_husimi_range(2.0, 0.01) == pytest.approx(20.0)
