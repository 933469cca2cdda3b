"""Tests for state vectors, density matrices, and spin measurements."""

import numpy as np
import pytest

from qkdlab.qstate import (
    AXIS_X,
    AXIS_Z,
    DensityMatrix,
    MeasurementAxis,
    QuantumState,
    apply_operator,
    apply_unitary,
    bell_basis,
    bell_vectors,
    density,
    fidelity,
    measure_pair,
    partial_trace,
    random_axes,
    random_rotation,
    random_unitary,
    reduced_density,
    spin_projectors,
    von_neumann_entropy,
)
from qkdlab.rng import stream


class TestBellBasis:
    def test_orthonormal(self):
        vecs = bell_vectors()
        gram = vecs.conj() @ vecs.T
        assert np.allclose(gram, np.eye(4), atol=1e-12)

    def test_computational_amplitudes(self):
        s = 1 / np.sqrt(2)
        vecs = bell_vectors()
        assert np.allclose(vecs[0], [0, s, -s, 0])
        assert np.allclose(vecs[1], [0, s, s, 0])
        assert np.allclose(vecs[2], [s, 0, 0, s])
        assert np.allclose(vecs[3], [s, 0, 0, -s])

    def test_states_normalized(self):
        for psi in bell_basis():
            assert psi.dims == (2, 2)
            assert np.linalg.norm(psi.amplitudes) == pytest.approx(1.0)

    def test_singlet_rotation_invariant(self):
        """The first basis state is fixed (up to phase) by any R (x) R."""
        rng = stream(101)
        psi0 = bell_vectors()[0]
        for _ in range(100):
            r = random_rotation(rng)
            rotated = np.kron(r, r) @ psi0
            assert abs(np.vdot(psi0, rotated)) == pytest.approx(1.0, abs=1e-9)


class TestFidelity:
    def test_pure_singlet(self):
        psi0 = bell_basis()[0]
        assert fidelity(density(psi0)) == pytest.approx(1.0)

    def test_maximally_mixed(self):
        mixed = DensityMatrix(np.eye(4) / 4)
        assert fidelity(mixed) == pytest.approx(0.25)

    def test_rotation_invariant(self):
        rng = stream(102)
        vecs = bell_vectors()
        rho = 0.6 * np.outer(vecs[0], vecs[0].conj()) + 0.4 * np.outer(
            vecs[2], vecs[2].conj()
        )
        base = fidelity(DensityMatrix(rho))
        for _ in range(25):
            r = random_rotation(rng)
            rr = np.kron(r, r)
            rotated = DensityMatrix(rr @ rho @ rr.conj().T)
            assert fidelity(rotated) == pytest.approx(base, abs=1e-9)

    def test_rejects_wrong_dimension(self):
        with pytest.raises(ValueError):
            fidelity(DensityMatrix(np.eye(2) / 2))


class TestMeasurementAxis:
    def test_validates_norm(self):
        with pytest.raises(ValueError):
            MeasurementAxis(1.0, 1.0, 0.0)

    def test_random_axes_unit_and_isotropic(self):
        rng = stream(103)
        axes = random_axes(20000, rng)
        norms = np.linalg.norm(axes, axis=1)
        assert np.allclose(norms, 1.0, atol=1e-12)
        # components of a sphere-uniform vector have mean 0, variance 1/3
        assert np.all(np.abs(axes.mean(axis=0)) < 3 * np.sqrt(1 / 3 / 20000))


class TestSpinProjectors:
    def test_z_axis(self):
        up, down = spin_projectors(AXIS_Z)
        assert np.allclose(up, np.diag([1.0, 0.0]))
        assert np.allclose(down, np.diag([0.0, 1.0]))

    def test_x_axis(self):
        up, _ = spin_projectors(AXIS_X)
        assert np.allclose(up, np.full((2, 2), 0.5))

    def test_idempotent_and_complete(self):
        rng = stream(104)
        for vec in random_axes(1000, rng):
            up, down = spin_projectors(MeasurementAxis.from_array(vec))
            assert np.allclose(up @ up, up, atol=1e-9)
            assert np.allclose(down @ down, down, atol=1e-9)
            assert np.allclose(up + down, np.eye(2), atol=1e-12)


class TestMeasurePair:
    def test_singlet_always_antiparallel(self):
        rng = stream(105)
        psi0 = bell_basis()[0]
        for vec in random_axes(50, rng):
            axis = MeasurementAxis.from_array(vec)
            a, b, _ = measure_pair(psi0, 0, axis, axis, rng)
            assert a != b

    def test_triplet_z_antiparallel_x_parallel(self):
        rng = stream(106)
        psi1 = bell_basis()[1]
        for _ in range(50):
            a, b, _ = measure_pair(psi1, 0, AXIS_Z, AXIS_Z, rng)
            assert a != b
            a, b, _ = measure_pair(psi1, 0, AXIS_X, AXIS_X, rng)
            assert a == b

    def test_nonsinglet_antiparallel_third_of_the_time(self):
        """Each triplet averages P(antiparallel) = 1/3 over random axes."""
        rng = stream(107)
        n = 10 ** 5
        for which in (1, 2, 3):
            psi = bell_basis()[which]
            axes = random_axes(n, rng)
            # closed form per axis: nz^2, ny^2, nx^2 for psi1, psi2, psi3
            comp = {1: 2, 2: 1, 3: 0}[which]
            p_anti = axes[:, comp] ** 2
            hits = (rng.random(n) < p_anti).sum()
            assert hits / n == pytest.approx(1 / 3, abs=0.01)
        # and the sampled projector path agrees on a smaller run
        psi = bell_basis()[1]
        hits = 0
        trials = 2000
        for vec in random_axes(trials, rng):
            axis = MeasurementAxis.from_array(vec)
            a, b, _ = measure_pair(psi, 0, axis, axis, rng)
            hits += a != b
        sigma = np.sqrt((1 / 3) * (2 / 3) / trials)
        assert abs(hits / trials - 1 / 3) < 3 * sigma

    def test_post_state_normalized(self):
        rng = stream(108)
        psi = QuantumState(
            np.kron(bell_vectors()[2], bell_vectors()[0]), (2, 2, 2, 2)
        )
        for pair in (0, 1):
            _, _, post = measure_pair(psi, pair, AXIS_Z, AXIS_X, rng)
            assert np.linalg.norm(post.amplitudes) == pytest.approx(1.0, abs=1e-9)


class TestPartialTrace:
    def test_singlet_member_maximally_mixed(self):
        rho = density(bell_basis()[0])
        half = partial_trace(rho, keep=(0,))
        assert np.allclose(half.matrix, np.eye(2) / 2, atol=1e-12)

    def test_keep_everything_is_identity(self):
        rho = density(bell_basis()[2])
        same = partial_trace(rho, keep=(0, 1))
        assert np.allclose(same.matrix, rho.matrix, atol=1e-12)

    def test_product_state_factors(self):
        rng = stream(109)
        a = rng.normal(size=2) + 1j * rng.normal(size=2)
        a /= np.linalg.norm(a)
        b = rng.normal(size=2) + 1j * rng.normal(size=2)
        b /= np.linalg.norm(b)
        rho = DensityMatrix(
            np.kron(np.outer(a, a.conj()), np.outer(b, b.conj())), (2, 2)
        )
        got = partial_trace(rho, keep=(0,))
        assert np.allclose(got.matrix, np.outer(a, a.conj()), atol=1e-12)

    def test_empty_keep_rejected(self):
        with pytest.raises(ValueError):
            partial_trace(density(bell_basis()[0]), keep=())

    def test_reduced_density_matches(self):
        rng = stream(110)
        amps = rng.normal(size=16) + 1j * rng.normal(size=16)
        amps /= np.linalg.norm(amps)
        state = QuantumState(amps, (2, 2, 4))
        via_rho = partial_trace(DensityMatrix(np.outer(amps, amps.conj()), state.dims),
                                keep=(2,))
        direct = reduced_density(state, keep=(2,))
        assert np.allclose(via_rho.matrix, direct.matrix, atol=1e-12)


class TestEntropy:
    def test_pure_state_zero(self):
        assert von_neumann_entropy(density(bell_basis()[3])) == pytest.approx(
            0.0, abs=1e-12
        )

    def test_maximally_mixed_qubit(self):
        assert von_neumann_entropy(DensityMatrix(np.eye(2) / 2)) == pytest.approx(1.0)

    def test_half_of_singlet_is_one_bit(self):
        rho = partial_trace(density(bell_basis()[0]), keep=(1,))
        assert von_neumann_entropy(rho) == pytest.approx(1.0, abs=1e-9)

    def test_binary_mixture_curve(self):
        for p in (0.1, 0.3, 0.5):
            rho = DensityMatrix(np.diag([p, 1 - p]))
            expect = -p * np.log2(p) - (1 - p) * np.log2(1 - p)
            assert von_neumann_entropy(rho) == pytest.approx(expect)

    def test_rejects_negative_eigenvalue(self):
        with pytest.raises(ValueError):
            DensityMatrix(np.diag([1.2, -0.2]))


class TestRotationCovariance:
    """Simultaneous pair rotations preserve the non-singlet count."""

    def _count_projector_weights(self, amps, n_pairs):
        """Weight of the state on each non-singlet-count subspace."""
        vecs = bell_vectors()
        tensor = amps.reshape((4,) * n_pairs) if n_pairs > 1 else amps
        # transform each pair axis to the Bell basis
        out = amps.reshape((4,) * n_pairs).copy()
        for ax in range(n_pairs):
            out = np.tensordot(vecs.conj(), out, axes=([1], [ax]))
            out = np.moveaxis(out, 0, ax)
        weights = np.zeros(n_pairs + 1)
        flat = out.reshape(-1)
        for idx in range(flat.size):
            digits = np.base_repr(idx, base=4).zfill(n_pairs)
            n_nonsinglet = sum(d != "0" for d in digits)
            weights[n_nonsinglet] += abs(flat[idx]) ** 2
        return weights

    def test_counts_preserved_under_pair_rotations(self):
        rng = stream(111)
        vecs = bell_vectors()
        # |psi1 psi0 psi3> has exactly two non-singlet slots
        amps = np.kron(np.kron(vecs[1], vecs[0]), vecs[3])
        before = self._count_projector_weights(amps, 3)
        assert before[2] == pytest.approx(1.0, abs=1e-12)
        state = QuantumState(amps, (2,) * 6)
        for _ in range(20):
            rotated = state
            for pair in range(3):
                r = random_rotation(rng)
                rotated = apply_unitary(rotated, r, (2 * pair,))
                rotated = apply_unitary(rotated, r, (2 * pair + 1,))
            after = self._count_projector_weights(rotated.amplitudes, 3)
            assert after[2] == pytest.approx(1.0, abs=1e-9)


class TestOperators:
    def test_apply_operator_matches_kron(self):
        rng = stream(112)
        amps = rng.normal(size=8) + 1j * rng.normal(size=8)
        amps /= np.linalg.norm(amps)
        u = random_unitary(2, rng)
        got = apply_operator(amps, (2, 2, 2), u, (1,))
        want = np.kron(np.kron(np.eye(2), u), np.eye(2)) @ amps
        assert np.allclose(got, want, atol=1e-12)

    def test_random_unitary_is_unitary(self):
        rng = stream(113)
        for dim in (2, 3, 4):
            u = random_unitary(dim, rng)
            assert np.allclose(u @ u.conj().T, np.eye(dim), atol=1e-12)

    def test_random_rotation_special(self):
        rng = stream(114)
        r = random_rotation(rng)
        assert np.linalg.det(r) == pytest.approx(1.0, abs=1e-12)
        assert np.allclose(r @ r.conj().T, np.eye(2), atol=1e-12)
