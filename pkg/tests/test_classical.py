import math

import numpy as np
import pytest

from phonon_tc.classical import (
    ClassicalParams,
    Regime,
    classify_regime,
    hopf_threshold,
    integrate_classical,
    limit_cycle_orbit,
    undriven_radius,
    vdp_rhs,
)
from phonon_tc.fock import DomainError


def test_rhs_examples():
    p = ClassicalParams(g=2.0, kappa=0.5, delta=1.0, epsilon=0.25)
    assert vdp_rhs(0.0, p) == pytest.approx(-0.25j)
    # |alpha|^2 = 2: radial factor 1 - 1 = 0, leaving the rotation
    a = math.sqrt(2.0)
    assert vdp_rhs(a, p) == pytest.approx(1j * a - 0.25j)


def test_from_rescaled_drive():
    p = ClassicalParams.from_rescaled_drive(1.0, 0.04, 2.0, 3.0, phase=math.pi / 2)
    assert abs(p.epsilon) * math.sqrt(p.kappa) == pytest.approx(3.0)
    assert p.epsilon == pytest.approx(15j)
    with pytest.raises(DomainError):
        ClassicalParams.from_rescaled_drive(1.0, 0.0, 2.0, 3.0)
    with pytest.raises(DomainError):
        ClassicalParams(-1.0, 0.1, 0.0)


def test_undriven_growth_is_logistic():
    g, kappa, delta = 1.3, 0.02, 4.0
    p = ClassicalParams(g, kappa, delta)
    t = np.linspace(0, 12, 301)
    x0 = 0.01
    traj = integrate_classical(math.sqrt(x0), p, t)
    K = g / (2 * kappa)
    exact = K / (1 + (K / x0 - 1) * np.exp(-g * t))
    np.testing.assert_allclose(traj.abs2, exact, rtol=1e-8)
    assert undriven_radius(p) == pytest.approx(math.sqrt(K))
    # the phase winds at delta
    phase = np.unwrap(np.angle(traj.alphas))
    np.testing.assert_allclose(phase, delta * t, atol=1e-7)


def test_grid_validation_and_single_point():
    p = ClassicalParams(1.0, 0.1, 0.0)
    with pytest.raises(DomainError):
        integrate_classical(0.0, p, [0.0, 1.0, 0.5])
    assert integrate_classical(0.3, p, [0.0]).alphas[0] == 0.3


def test_hopf_threshold_examples():
    assert hopf_threshold(4.0, 0.0) == pytest.approx(2.0)
    assert hopf_threshold(1.0, 1.0) == pytest.approx(math.sqrt(5) / 4)


def test_regimes_either_side_of_threshold():
    g, delta = 1.0, 1.0
    kappa = g / 200
    x_h = hopf_threshold(g, delta)
    lc = classify_regime(ClassicalParams.from_rescaled_drive(g, kappa, delta, 0.3 * x_h), horizon=200)
    fp = classify_regime(ClassicalParams.from_rescaled_drive(g, kappa, delta, 3.0 * x_h), horizon=200)
    assert lc is Regime.LIMIT_CYCLE
    assert fp is Regime.FIXED_POINT


def test_limit_cycle_orbit_radius_weak_drive():
    # a weak drive seeds the instability from alpha = 0 and barely shifts the orbit
    p = ClassicalParams(1.0, 0.005, 1.0, epsilon=1e-3)
    orbit, center, radius = limit_cycle_orbit(p, settle=60.0, span=20 * math.pi)
    assert abs(center) < 1e-2 * radius
    assert radius == pytest.approx(undriven_radius(p), rel=1e-3)
