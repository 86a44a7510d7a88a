import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from phonon_tc.fock import FockSpace, annihilation_op, coherent_state_vector, dagger, fock_state, number_op
from phonon_tc.master_eq import (
    IntegratorOptions,
    InvariantBreach,
    LindbladModel,
    expect,
    integrate,
    lindblad_rhs,
    mean_field_residual,
    phonon_hamiltonian,
    phonon_model,
)
from phonon_tc.fock import DomainError


def random_state(d, support, rng):
    A = np.zeros((d, d), complex)
    A[:support, :support] = rng.normal(size=(support, support)) + 1j * rng.normal(size=(support, support))
    rho = A @ A.conj().T
    return rho / np.trace(rho)


def dense_rhs(H, channels, rho):
    out = -1j * (H @ rho - rho @ H)
    for rate, L in channels:
        Ld = L.conj().T
        out += rate * (L @ rho @ Ld - 0.5 * (Ld @ L @ rho + rho @ Ld @ L))
    return out


def test_phonon_hamiltonian_examples():
    sp5 = FockSpace(5)
    assert phonon_hamiltonian(0.0, 0.0, sp5).count_nonzero() == 0
    H = phonon_hamiltonian(2.0, 0.3, sp5).toarray()
    np.testing.assert_allclose(H, H.T)
    assert np.isrealobj(H) or np.abs(H.imag).max() == 0
    assert H[1, 1] == -2.0


def test_rhs_examples():
    sp4 = FockSpace(4)
    a = annihilation_op(sp4)
    zero = np.zeros((4, 4))
    gain = LindbladModel(zero, [(0.7, dagger(a))])
    np.testing.assert_allclose(lindblad_rhs(gain, fock_state(sp4, 0)), 0.7 * np.diag([-1, 1, 0, 0]), atol=1e-15)
    loss = LindbladModel(zero, [(0.3, a @ a)])
    np.testing.assert_allclose(lindblad_rhs(loss, fock_state(sp4, 2)), 2 * 0.3 * np.diag([1, 0, -1, 0]), atol=1e-15)


def test_rhs_matches_dense_formula_and_is_traceless():
    rng = np.random.default_rng(0)
    d = 12
    m = phonon_model(FockSpace(d), 0.8, 0.05, 1.3, 0.4 - 0.2j)
    a = annihilation_op(FockSpace(d)).toarray()
    channels = [(0.8, a.conj().T), (0.05, a @ a)]
    for _ in range(100):
        rho = random_state(d, d, rng)
        out = lindblad_rhs(m, rho)
        np.testing.assert_allclose(out, dense_rhs(m.H.toarray(), channels, rho), atol=1e-13)
        assert abs(np.trace(out)) < 1e-14
        assert np.max(np.abs(out - out.conj().T)) == 0.0


def test_dimension_mismatch():
    m = phonon_model(FockSpace(4), 1, 1, 1, 0)
    with pytest.raises(DomainError):
        lindblad_rhs(m, np.eye(5) / 5)


def test_model_validation():
    with pytest.raises(DomainError):
        LindbladModel(np.array([[0, 1], [0, 0]]))
    with pytest.raises(DomainError):
        LindbladModel(np.zeros((2, 2)), [(-1.0, np.eye(2))])


def test_zero_model_is_static():
    sp_ = FockSpace(5)
    rho0 = np.diag([0.5, 0.3, 0.2, 0, 0]).astype(complex)
    tr = integrate(LindbladModel(np.zeros((5, 5))), rho0, np.linspace(0, 1, 5))
    for s in tr.states.values():
        np.testing.assert_array_equal(s.data, rho0)


def test_pure_gain_short_time_slope():
    g = 2.0
    sp_ = FockSpace(6)
    m = LindbladModel(np.zeros((6, 6)), [(g, dagger(annihilation_op(sp_)))])
    t = 1e-3 / g
    tr = integrate(m, fock_state(sp_, 0), [0.0, t], populations=1, opts=IntegratorOptions(rtol=1e-12, atol=1e-14))
    slope = tr.observables["populations"][-1, 1] / t
    assert slope == pytest.approx(g, rel=1e-2)


def test_mean_field_residual_identities():
    rng = np.random.default_rng(1)
    d = 24
    sp_ = FockSpace(d)
    m = phonon_model(sp_, 0.9, 0.07, 1.7, 0.5 + 0.3j)
    a = annihilation_op(sp_)
    gain_only = phonon_model(sp_, 1.0, 0.0, 0.0, 0.0)
    loss_only = phonon_model(sp_, 0.0, 1.0, 0.0, 0.0)
    cubic = (dagger(a) @ a @ a).tocsr()
    for _ in range(100):
        rho = random_state(d, d // 2, rng)
        assert abs(mean_field_residual(m, rho)) < 1e-10
        assert abs(expect(a, lindblad_rhs(gain_only, rho)) - 0.5 * expect(a, rho)) < 1e-12
        assert abs(expect(a, lindblad_rhs(loss_only, rho)) + expect(cubic, rho)) < 1e-12


def test_mean_field_residual_vacuum():
    sp_ = FockSpace(10)
    m = phonon_model(sp_, 0.9, 0.07, 1.7, 0.5 + 0.3j)
    assert abs(mean_field_residual(m, fock_state(sp_, 0))) < 1e-14


def test_factorization_regime_for_coherent_state():
    sp_ = FockSpace(60)
    c = coherent_state_vector(sp_, 3.0)
    rho = np.outer(c, c.conj())
    a = annihilation_op(sp_)
    mean_a = expect(a, rho)
    cubic = expect((dagger(a) @ a @ a).tocsr(), rho)
    assert abs(cubic - abs(mean_a) ** 2 * mean_a) < 0.05 * abs(cubic)


def test_integration_invariants_and_breach():
    sp_ = FockSpace(30)
    m = phonon_model(sp_, 1.0, 0.1, 2.0, 0.5)
    tr = integrate(m, fock_state(sp_, 0), np.linspace(0, 3, 31), e_ops={"N": number_op(sp_)})
    mon = tr.monitor
    assert mon["max_trace_drift"] < 1e-12
    assert mon["max_hermiticity"] == 0.0
    assert mon["min_eigenvalue"] > -1e-10
    assert all(1 / 30 <= p <= 1 + 1e-10 for p in tr.observables["purity"])
    for s in tr.states.values():
        s.check()
    tight = IntegratorOptions(rtol=1e-2, atol=1e-2, psd_budget=1e-30, trace_budget=1e-30)
    with pytest.raises(InvariantBreach) as exc:
        integrate(m, fock_state(sp_, 0), np.linspace(0, 3, 31), tight)
    assert exc.value.time is not None


def test_tolerance_refinement_changes_little():
    sp_ = FockSpace(30)
    m = phonon_model(sp_, 1.0, 0.1, 2.0, 0.5)
    t = np.linspace(0, 3, 31)
    n1 = integrate(m, fock_state(sp_, 0), t, IntegratorOptions(1e-8, 1e-10), e_ops={"N": number_op(sp_)}, store="none")
    n2 = integrate(m, fock_state(sp_, 0), t, IntegratorOptions(5e-9, 5e-11), e_ops={"N": number_op(sp_)}, store="none")
    rel = np.abs(n1.observables["N"][1:] - n2.observables["N"][1:]) / n2.observables["N"][1:]
    assert rel.max() < 1e-4


def test_store_selection():
    sp_ = FockSpace(6)
    m = phonon_model(sp_, 1.0, 0.1, 2.0, 0.5)
    tr = integrate(m, fock_state(sp_, 0), np.linspace(0, 1, 11), store=[0.5])
    assert list(tr.states) == [0.5]
    with pytest.raises(DomainError):
        integrate(m, fock_state(sp_, 0), np.linspace(0, 1, 11), store=[0.55])
