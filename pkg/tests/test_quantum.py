"""Core state/propagator tests, frozen oracles first."""

import numpy as np
import pytest

from mcmr.quantum import (
    LindbladSystem,
    Operator,
    QuantumState,
    fidelity,
    propagate_lindblad,
    propagate_unitary,
    rotation_from_vector,
    rotation_vector,
)

SX = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
SZ = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)


def random_hermitian(rng, dim, scale=1.0):
    m = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    return scale * 0.5 * (m + m.conj().T)


def random_pure(rng, dim):
    v = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    return QuantumState.pure(v)


class TestStateInvariants:
    def test_pure_norm_enforced(self):
        with pytest.raises(ValueError):
            QuantumState(np.array([1.0, 1.0]), "pure")

    def test_mixed_trace_enforced(self):
        with pytest.raises(ValueError):
            QuantumState(np.eye(2, dtype=complex), "mixed")

    def test_mixed_hermiticity_enforced(self):
        bad = np.array([[0.5, 0.3], [0.0, 0.5]], dtype=complex)
        with pytest.raises(ValueError):
            QuantumState(bad, "mixed")

    def test_mixed_negative_eigenvalue_rejected(self):
        bad = np.diag([1.5, -0.5]).astype(complex)
        with pytest.raises(ValueError):
            QuantumState(bad, "mixed")

    def test_labels_default_and_mismatch(self):
        s = QuantumState.basis(3, 0)
        assert s.labels == ("0", "1", "2")
        with pytest.raises(ValueError):
            QuantumState.basis(3, 0, labels=("a", "b"))

    def test_density_promotion(self):
        s = QuantumState.pure([1.0, 1.0])
        rho = s.to_mixed()
        assert rho.kind == "mixed"
        assert rho.population(0) == pytest.approx(0.5)
        assert np.allclose(rho.data, 0.5 * np.ones((2, 2)))


class TestOperatorFlags:
    def test_unitary_flag_checked(self):
        with pytest.raises(ValueError):
            Operator(2 * np.eye(2), unitary=True)

    def test_hermitian_flag_checked(self):
        with pytest.raises(ValueError):
            Operator(np.array([[0, 1j], [1j, 0]]), hermitian=True)

    def test_identity_is_both(self):
        op = Operator.identity(4)
        assert op.hermitian and op.unitary


class TestUnitaryPropagation:
    def test_zero_duration_identity(self):
        s = QuantumState.pure([0.6, 0.8])
        h = Operator.hermitian_op(SX)
        out = propagate_unitary(s, h, 0.0)
        assert np.allclose(out.data, s.data)

    def test_resonant_pi_pulse(self):
        # H = (omega/2) sigma_x for t = pi/omega maps |0> to -i|1>.
        omega = 2.0 * np.pi * 1e6
        h = Operator.hermitian_op(0.5 * omega * SX)
        out = propagate_unitary(QuantumState.basis(2, 0), h, np.pi / omega)
        assert abs(out.data[0]) < 1e-12
        assert out.data[1] == pytest.approx(-1j, abs=1e-12)

    def test_detuned_drive_eigenvalues(self):
        # Frozen oracle: generator delta|0><0| + (omega/2) sigma_x at
        # delta = 0.5 omega has eigenvalues (delta +- sqrt(omega^2 +
        # delta^2))/2 = {0.80901699, -0.30901699} in units of omega.
        h = np.array([[0.5, 0.5], [0.5, 0.0]], dtype=complex)
        vals = np.sort(np.linalg.eigvalsh(h))
        assert vals[1] == pytest.approx(0.80901699, abs=1e-8)
        assert vals[0] == pytest.approx(-0.30901699, abs=1e-8)

    def test_requires_hermitian_flag(self):
        with pytest.raises(ValueError):
            propagate_unitary(QuantumState.basis(2, 0), Operator(SX), 1.0)

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            propagate_unitary(
                QuantumState.basis(3, 0), Operator.hermitian_op(SX), 1.0)

    def test_norm_and_inner_product_preserved(self):
        rng = np.random.default_rng(11)
        for _ in range(20):
            dim = int(rng.integers(2, 9))
            t = float(rng.uniform(0.1, 100.0))
            h = Operator.hermitian_op(random_hermitian(rng, dim, 1.0 / t))
            a, b = random_pure(rng, dim), random_pure(rng, dim)
            before = np.vdot(a.data, b.data)
            ua = propagate_unitary(a, h, t)
            ub = propagate_unitary(b, h, t)
            assert abs(np.linalg.norm(ua.data) - 1) < 1e-12
            assert abs(np.vdot(ua.data, ub.data) - before) < 1e-12

    def test_mixed_state_conjugation(self):
        rng = np.random.default_rng(3)
        h = Operator.hermitian_op(random_hermitian(rng, 2))
        rho = QuantumState.mixed(np.diag([0.25, 0.75]))
        out = propagate_lindblad(rho, LindbladSystem(h), 0.0)
        assert np.allclose(out.data, rho.data)


class TestLindblad:
    def test_closed_system_matches_unitary(self):
        rng = np.random.default_rng(5)
        h = Operator.hermitian_op(random_hermitian(rng, 3))
        hnorm = np.max(np.abs(np.linalg.eigvalsh(h.entries)))
        t = 0.5 / hnorm
        psi = random_pure(rng, 3)
        want = propagate_unitary(psi, h, t).to_mixed()
        got = propagate_lindblad(
            psi, LindbladSystem(h), t, dt_max=0.01 / hnorm)
        assert np.max(np.abs(got.data - want.data)) < 1e-8

    def test_exponential_decay(self):
        gamma = 1.0e4
        lower = Operator(np.array([[0, 1], [0, 0]], dtype=complex))
        sys = LindbladSystem(Operator.hermitian_op(np.zeros((2, 2))),
                             ((lower, gamma),))
        excited = QuantumState.basis(2, 1)
        for t in (0.3 / gamma, 1.0 / gamma, 2.5 / gamma):
            out = propagate_lindblad(excited, sys, t)
            assert out.population(1) == pytest.approx(np.exp(-gamma * t),
                                                      abs=1e-6)

    def test_pure_dephasing_coherence(self):
        # L = sigma_z at rate 1/(2 T2): off-diagonal decays as exp(-t/T2).
        t2 = 1.0e-3
        sys = LindbladSystem(
            Operator.hermitian_op(np.zeros((2, 2))),
            ((Operator(SZ), 1.0 / (2 * t2)),))
        plus = QuantumState.pure([1.0, 1.0])
        for t in (0.1 * t2, t2, 3 * t2):
            out = propagate_lindblad(plus, sys, t)
            want = 0.5 * np.exp(-t / t2)
            assert abs(out.data[0, 1]) == pytest.approx(want, abs=1e-6)
            # Populations untouched by pure dephasing.
            assert out.population(0) == pytest.approx(0.5, abs=1e-9)

    def test_trace_and_positivity_random_systems(self):
        rng = np.random.default_rng(17)
        for _ in range(10):
            dim = int(rng.integers(2, 5))
            h = Operator.hermitian_op(random_hermitian(rng, dim))
            hnorm = max(1.0, np.max(np.abs(np.linalg.eigvalsh(h.entries))))
            ops = []
            for _ in range(int(rng.integers(1, 4))):
                m = rng.normal(size=(dim, dim)) + 1j * rng.normal(
                    size=(dim, dim))
                ops.append((Operator(m / np.linalg.norm(m)),
                            float(rng.uniform(0.1, 2.0)) * hnorm))
            sys = LindbladSystem(h, tuple(ops))
            out = propagate_lindblad(random_pure(rng, dim), sys,
                                     2.0 / hnorm)
            assert abs(np.trace(out.data).real - 1.0) < 1e-8
            assert np.linalg.eigvalsh(out.data).min() >= -1e-8

    def test_time_dependent_envelope(self):
        # Ramp the drive with a sine envelope; effective area is the
        # integral of the envelope, checked against the constant drive
        # of the same area.
        omega = 2 * np.pi * 1e5
        tau = 10e-6

        def hfun(t):
            return 0.5 * omega * np.sin(np.pi * t / tau) * SX

        area = omega * tau * 2 / np.pi  # integral of the envelope
        sys = LindbladSystem(hfun)
        out = propagate_lindblad(QuantumState.basis(2, 0), sys, tau,
                                 dt_max=tau / 2000)
        want = np.cos(area / 2) ** 2
        assert out.population(0) == pytest.approx(want, abs=1e-6)

    def test_rate_validation(self):
        with pytest.raises(ValueError):
            LindbladSystem(Operator.hermitian_op(SZ),
                           ((Operator(SX), -1.0),))

    def test_dt_max_validation(self):
        sys = LindbladSystem(Operator.hermitian_op(SZ))
        with pytest.raises(ValueError):
            propagate_lindblad(QuantumState.basis(2, 0), sys, 1.0,
                               dt_max=0.0)


class TestFidelity:
    def test_self_fidelity(self):
        s = QuantumState.pure([0.6, 0.8j])
        assert fidelity(s, s) == pytest.approx(1.0)

    def test_orthogonal(self):
        assert fidelity(QuantumState.basis(2, 0),
                        QuantumState.basis(2, 1)) == 0.0

    def test_half_overlap(self):
        plus = QuantumState.pure([1.0, 1.0])
        assert fidelity(QuantumState.basis(2, 0), plus) == pytest.approx(0.5)

    def test_pure_mixed_consistency(self):
        rng = np.random.default_rng(23)
        for _ in range(10):
            a, b = random_pure(rng, 3), random_pure(rng, 3)
            want = fidelity(a, b)
            assert fidelity(a, b.to_mixed()) == pytest.approx(want, abs=1e-10)
            assert fidelity(a.to_mixed(), b) == pytest.approx(want, abs=1e-10)
            # Rank-deficient inputs limit the matrix square root to
            # sqrt(machine eps) accuracy.
            assert fidelity(a.to_mixed(), b.to_mixed()) == pytest.approx(
                want, abs=1e-6)

    def test_uhlmann_known_value(self):
        # F(I/2, |0><0|) = 1/2 for the maximally mixed qubit.
        mm = QuantumState.mixed(0.5 * np.eye(2))
        assert fidelity(mm, QuantumState.basis(2, 0).to_mixed()) == \
            pytest.approx(0.5, abs=1e-10)

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            fidelity(QuantumState.basis(2, 0), QuantumState.basis(3, 0))


class TestRotationVector:
    def test_identity(self):
        assert np.allclose(rotation_vector(Operator.identity(2)), 0.0)

    def test_pi_about_x(self):
        u = rotation_from_vector([np.pi, 0, 0])
        assert np.allclose(rotation_vector(u), [np.pi, 0, 0], atol=1e-12)

    def test_quarter_turn_about_z(self):
        u = np.diag([np.exp(-1j * np.pi / 4), np.exp(1j * np.pi / 4)])
        assert np.allclose(rotation_vector(u), [0, 0, np.pi / 2],
                           atol=1e-12)

    def test_global_phase_stripped(self):
        rng = np.random.default_rng(7)
        v = rng.normal(size=3)
        v *= 2.0 / np.linalg.norm(v)
        u = rotation_from_vector(v).entries
        for phase in (0.3, np.pi, -1.2):
            got = rotation_vector(np.exp(1j * phase) * u)
            assert np.allclose(got, v, atol=1e-10)

    def test_round_trip_random(self):
        rng = np.random.default_rng(41)
        for _ in range(50):
            axis = rng.normal(size=3)
            axis /= np.linalg.norm(axis)
            angle = float(rng.uniform(1e-3, np.pi - 1e-3))
            v = angle * axis
            got = rotation_vector(rotation_from_vector(v))
            assert np.allclose(got, v, atol=1e-10)

    def test_angle_wraps_into_range(self):
        # A 3pi/2 rotation about x is reported as pi/2 about -x.
        u = rotation_from_vector([1.5 * np.pi, 0, 0])
        got = rotation_vector(u)
        assert np.allclose(got, [-0.5 * np.pi, 0, 0], atol=1e-12)

    def test_rejects_non_unitary(self):
        with pytest.raises(ValueError):
            rotation_vector(np.array([[1, 0], [0, 2]], dtype=complex))
