from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from qtgn import _backend, qsim
from qtgn.errors import DimensionOverflow, ZeroVector

from .oracles import chain_unitary, circuit_z, cnot_matrix


class TestAmplitudeEmbed:
    def test_basis_vector(self):
        s = qsim.amplitude_embed([1, 0, 0, 0], 2)
        np.testing.assert_array_equal(s.amplitudes, [1, 0, 0, 0])

    def test_pads_and_normalizes(self):
        s = qsim.amplitude_embed([3, 4], 2)
        np.testing.assert_allclose(s.amplitudes, [0.6, 0.8, 0, 0], atol=1e-15)
        assert np.all(s.amplitudes.imag == 0)

    def test_direct_normalization(self):
        s = qsim.amplitude_embed([1, 2, 3, 4], 2)
        np.testing.assert_allclose(s.amplitudes, np.array([1, 2, 3, 4]) / np.sqrt(30), atol=1e-15)

    def test_zero_vector(self):
        with pytest.raises(ZeroVector):
            qsim.amplitude_embed([0, 0], 2)

    def test_overflow(self):
        with pytest.raises(DimensionOverflow):
            qsim.amplitude_embed(np.ones(5), 2)

    def test_state_is_immutable(self):
        s = qsim.amplitude_embed([1, 1], 1)
        with pytest.raises(ValueError):
            s.amplitudes[0] = 0

    def test_rejects_unnormalized_state(self):
        with pytest.raises(ValueError):
            qsim.QuantumState(1, [1.0, 1.0])


class TestCnotChain:
    def test_control_zero_is_identity(self, backend):
        s = qsim.apply_cnot_chain(qsim.QuantumState(2, [1, 0, 0, 0]))
        np.testing.assert_array_equal(s.amplitudes, [1, 0, 0, 0])

    def test_control_one_flips_target(self, backend):
        s = qsim.apply_cnot_chain(qsim.QuantumState(2, [0, 0, 1, 0]))
        np.testing.assert_array_equal(s.amplitudes, [0, 0, 0, 1])

    def test_worked_example(self, backend):
        s = qsim.apply_cnot_chain(qsim.amplitude_embed([1, 2, 3, 4], 2))
        expected = cnot_matrix(2, 0, 1) @ (np.array([1, 2, 3, 4]) / np.sqrt(30))
        np.testing.assert_allclose(s.amplitudes, expected, atol=1e-15)
        np.testing.assert_allclose(s.amplitudes, np.array([1, 2, 4, 3]) / np.sqrt(30), atol=1e-15)

    @pytest.mark.parametrize("n", [1, 2, 3, 4, 5])
    def test_matches_dense_unitary(self, backend, rng, n):
        for _ in range(20):
            psi = rng.standard_normal(1 << n) + 1j * rng.standard_normal(1 << n)
            psi /= np.linalg.norm(psi)
            out = qsim.apply_cnot_chain(qsim.QuantumState(n, psi))
            np.testing.assert_allclose(out.amplitudes, chain_unitary(n) @ psi, atol=1e-12)

    @pytest.mark.parametrize("n", [2, 3, 4])
    def test_single_cnot_is_involution(self, backend, rng, n):
        psi = rng.standard_normal(1 << n)
        s = qsim.QuantumState(n, psi / np.linalg.norm(psi))
        for c in range(n):
            for t in range(n):
                if c != t:
                    twice = qsim.apply_cnot(qsim.apply_cnot(s, c, t), c, t)
                    np.testing.assert_array_equal(twice.amplitudes, s.amplitudes)
                    np.testing.assert_allclose(
                        qsim.apply_cnot(s, c, t).amplitudes, cnot_matrix(n, c, t) @ s.amplitudes, atol=1e-14
                    )

    def test_norm_preserved(self, backend, rng):
        for n in range(1, 9):
            psi = rng.standard_normal(1 << n)
            out = qsim.apply_cnot_chain(qsim.QuantumState(n, psi / np.linalg.norm(psi)))
            assert abs(np.linalg.norm(out.amplitudes) - 1.0) <= 1e-12


class TestExpectZ:
    def test_all_zeros_state(self, backend):
        np.testing.assert_array_equal(qsim.expect_z_all(qsim.QuantumState(2, [1, 0, 0, 0])), [1, 1])

    def test_uniform_state(self, backend):
        np.testing.assert_allclose(qsim.expect_z_all(qsim.QuantumState(2, [0.5] * 4)), [0, 0], atol=1e-15)

    def test_worked_example_rational(self, backend):
        # probabilities after the chain are (1, 4, 16, 9)/30
        p = [Fraction(v, 30) for v in (1, 4, 16, 9)]
        exact = [p[0] + p[1] - p[2] - p[3], p[0] - p[1] + p[2] - p[3]]
        assert exact == [Fraction(-2, 3), Fraction(2, 15)]
        z = qsim.expect_z_all(qsim.apply_cnot_chain(qsim.amplitude_embed([1, 2, 3, 4], 2)))
        np.testing.assert_allclose(z, [float(v) for v in exact], rtol=0, atol=1e-15)

    @given(arrays(np.float64, st.integers(1, 16), elements=st.floats(-10, 10)))
    @settings(max_examples=200, deadline=None)
    def test_encode_z_matches_oracle(self, x):
        if np.linalg.norm(x) < 1e-6:
            return
        n = max(1, int(np.ceil(np.log2(x.size))))
        z = qsim.encode_z(x, n)
        np.testing.assert_allclose(z, circuit_z(x, n), atol=1e-10)
        assert np.all(np.abs(z) <= 1.0 + 1e-12)


class TestSampling:
    def test_deterministic_distribution(self, backend):
        c = qsim.sample_bitstrings(qsim.QuantumState(2, [1, 0, 0, 0]), 100, seed=3)
        assert c.counts == {0: 100}
        assert c.total_shots == 100

    def test_uniform_concentration(self):
        shots = 10**6
        c = qsim.sample_bitstrings(qsim.QuantumState(2, [0.5] * 4), shots, seed=1)
        bound = 3 * np.sqrt(shots * 0.25 * 0.75)
        for b in range(4):
            assert abs(c.counts[b] - 250000) <= bound

    def test_same_seed_same_counts(self, rng):
        psi = rng.standard_normal(8)
        s = qsim.QuantumState(3, psi / np.linalg.norm(psi))
        assert qsim.sample_bitstrings(s, 500, 9).counts == qsim.sample_bitstrings(s, 500, 9).counts

    def test_counts_sum(self):
        with pytest.raises(ValueError):
            qsim.ShotCounts(2, {0: 3, 1: 2}, total_shots=6)


class TestExpectZFromCounts:
    def test_single_outcome(self):
        np.testing.assert_array_equal(qsim.expect_z_from_counts(qsim.ShotCounts(2, {0: 100})), [1, 1])

    def test_balanced(self):
        np.testing.assert_array_equal(qsim.expect_z_from_counts(qsim.ShotCounts(2, {0: 50, 3: 50})), [0, 0])

    def test_hand_tally(self):
        # index 1 = |01>, index 2 = |10>
        z = qsim.expect_z_from_counts(qsim.ShotCounts(2, {1: 30, 2: 70}))
        np.testing.assert_allclose(z, [-0.4, 0.4], atol=1e-15)

    def test_kernel_tally_agrees(self, backend, rng):
        samples = rng.integers(0, 16, size=1000)
        values, counts = np.unique(samples, return_counts=True)
        c = qsim.ShotCounts(4, dict(zip(values.tolist(), counts.tolist())))
        np.testing.assert_allclose(_backend.kernels.z_from_samples(samples, 4), qsim.expect_z_from_counts(c), atol=1e-15)

    def test_shot_consistency(self, rng):
        psi = rng.standard_normal(16)
        s = qsim.QuantumState(4, psi / np.linalg.norm(psi))
        exact = qsim.expect_z_all(s)
        shots = 1000
        ok = [
            np.all(np.abs(qsim.expect_z_from_counts(qsim.sample_bitstrings(s, shots, seed)) - exact) <= 3 / np.sqrt(shots))
            for seed in range(100)
        ]
        assert np.mean(ok) >= 0.99


def test_backends_agree_on_random_states(rng):
    if len(_backend.BACKENDS) < 2:
        pytest.skip("compiled kernels not built")
    c, p = _backend.get("cython"), _backend.get("python")
    for n in range(1, 9):
        x = rng.standard_normal(1 << n)
        x /= np.linalg.norm(x)
        np.testing.assert_allclose(c.circuit_z_real(x, n), p.circuit_z_real(x, n), atol=1e-13)
        np.testing.assert_array_equal(c.cnot_chain(x, n), p.cnot_chain(x, n))
        np.testing.assert_allclose(c.expect_z(x.astype(complex), n), p.expect_z(x.astype(complex), n), atol=1e-13)
        samples = rng.integers(0, 1 << n, size=300)
        u = rng.random((300, n))
        np.testing.assert_array_equal(c.flip_bits(samples, n, 0.3, u), p.flip_bits(samples, n, 0.3, u))
        np.testing.assert_array_equal(c.z_from_samples(samples, n), p.z_from_samples(samples, n))
