import numpy as np
import pytest

from mpemba.errors import ResourceError, ValidationError
from mpemba.hamiltonian import HamiltonianSpec, HermitianOperator, build_hamiltonian, eigendecompose
from mpemba.sector import enumerate_sector, full_space, total_sz_diagonal

import oracles


def test_two_site_xxz_matrix_and_spectrum():
    basis = enumerate_sector(2, 1)
    spec = HamiltonianSpec.xxz(2, 1.0, boundary="open")
    ham = build_hamiltonian(spec, basis)
    expected = oracles.project(oracles.full_hamiltonian(spec), basis)
    assert np.allclose(ham.dense(), [[0.25, -0.5], [-0.5, 0.25]], atol=1e-15)
    assert np.array_equal(ham.dense(), expected)
    eigendecompose(ham)
    assert np.allclose(ham.eigenvalues, [-0.25, 0.75], atol=1e-14)


def test_zero_couplings_give_zero_matrix():
    basis = enumerate_sector(4, 2)
    spec = HamiltonianSpec(j1=0.0, j2=0.0, delta1=1.0, delta2=0.0, boundary="periodic", num_sites=4)
    ham = build_hamiltonian(spec, basis)
    assert ham.matrix.nnz == 0
    eigendecompose(ham)
    assert np.all(ham.eigenvalues == 0)


@pytest.mark.parametrize("boundary", ["open", "periodic"])
@pytest.mark.parametrize("delta,ratio", [(1.0, 0.0), (0.7, 0.0), (1.0, -0.25), (1.3, 0.4)])
def test_sector_hamiltonian_matches_full_space_oracle(boundary, delta, ratio):
    num_sites = 6
    basis = enumerate_sector(num_sites, 3)
    spec = HamiltonianSpec.j1j2(num_sites, ratio, delta=delta, boundary=boundary)
    ham = build_hamiltonian(spec, basis)
    assert np.array_equal(ham.dense(), oracles.project(oracles.full_hamiltonian(spec), basis))


def test_l8_pbc_ground_energy_vs_full_diagonalization():
    basis = enumerate_sector(8, 4)
    spec = HamiltonianSpec.xxz(8, 1.0, boundary="periodic")
    ham = build_hamiltonian(spec, basis)
    eigendecompose(ham)
    full = oracles.full_hamiltonian(spec)
    sector_full = oracles.project(full, basis)
    evals = np.linalg.eigvalsh(sector_full)
    assert abs(ham.eigenvalues[0] - evals[0]) < 1e-10


def test_sign_flip_spectral_symmetry():
    basis = enumerate_sector(6, 3)
    for delta, ratio in [(1.0, 0.0), (0.8, -0.2)]:
        plus = build_hamiltonian(HamiltonianSpec.j1j2(6, ratio, delta=delta, j1=-1.0), basis)
        minus = build_hamiltonian(HamiltonianSpec.j1j2(6, ratio, delta=delta, j1=1.0), basis)
        eigendecompose(plus)
        eigendecompose(minus)
        assert np.allclose(np.sort(plus.eigenvalues), -np.sort(minus.eigenvalues)[::-1], atol=1e-10)


def test_commutes_with_total_magnetization():
    basis = enumerate_sector(6, 2)
    ham = build_hamiltonian(HamiltonianSpec.xxz(6, 1.3, boundary="periodic"), basis)
    m = np.diag(total_sz_diagonal(basis))
    h = ham.dense()
    assert np.all(h @ m - m @ h == 0)


def test_open_chain_mirror_relabeling_invariance():
    num_sites = 5
    basis = enumerate_sector(num_sites, 2)
    spec = HamiltonianSpec.xxz(num_sites, 0.7, boundary="open")
    ham = build_hamiltonian(spec, basis)
    # Relabel site j -> L-1-j via the full-space oracle.
    full = np.zeros((2**num_sites, 2**num_sites))
    for i, j, j_n, delta_n in spec.bonds():
        mi, mj = num_sites - 1 - i, num_sites - 1 - j
        full += j_n * (
            oracles.full_flip_flop(num_sites, mi, mj) + delta_n * oracles.full_zz(num_sites, mi, mj)
        )
    mirrored = oracles.project(full, basis)
    eigendecompose(ham)
    assert np.allclose(np.linalg.eigvalsh(mirrored), ham.eigenvalues, atol=1e-12)


def test_open_boundary_next_nearest_bond_count():
    spec = HamiltonianSpec.j1j2(3, -0.3, boundary="open")
    bonds = spec.bonds()
    assert [(i, j) for i, j, *_ in bonds] == [(0, 1), (1, 2), (0, 2)]


def test_periodic_range_too_long_rejected():
    spec = HamiltonianSpec.j1j2(2, -0.3, boundary="periodic")
    with pytest.raises(ValidationError):
        spec.bonds()


def test_dimension_mismatch_rejected():
    basis = enumerate_sector(4, 2)
    with pytest.raises(ValidationError):
        build_hamiltonian(HamiltonianSpec.xxz(6, 1.0), basis)


def test_eigendecompose_diag_example():
    op = HermitianOperator(np.diag([3.0, 1.0, 2.0]))
    eigendecompose(op)
    assert np.array_equal(op.eigenvalues, [1.0, 2.0, 3.0])
    assert np.allclose(np.abs(op.eigenvectors), np.eye(3)[:, [1, 2, 0]])


def test_eigensystem_contracts_and_idempotence():
    rng = np.random.default_rng(3)
    m = rng.normal(size=(12, 12)) + 1j * rng.normal(size=(12, 12))
    op = HermitianOperator(0.5 * (m + m.conj().T))
    evals, evecs = op.eigensystem()
    assert np.all(np.diff(evals) >= 0)
    assert np.abs(evecs.conj().T @ evecs - np.eye(12)).max() < 1e-12
    h = op.dense()
    residual = np.abs(h @ evecs - evecs * evals[None, :]).max()
    assert residual <= 1e-10 * np.linalg.norm(h)
    again, _ = op.eigensystem()
    assert again is evals  # cached, idempotent


def test_eigensystem_dense_cap():
    op = HermitianOperator(np.eye(8))
    with pytest.raises(ResourceError):
        op.eigensystem(dense_cap=4)


def test_non_hermitian_rejected():
    with pytest.raises(ValidationError):
        HermitianOperator(np.array([[0.0, 1.0], [0.0, 0.0]]))


def test_negated_maps_eigensystem_exactly():
    basis = enumerate_sector(4, 2)
    ham = build_hamiltonian(HamiltonianSpec.xxz(4, 1.0), basis)
    eigendecompose(ham)
    neg = ham.negated()
    assert np.array_equal(neg.eigenvalues, -ham.eigenvalues[::-1])
    assert np.array_equal(neg.eigenvectors, ham.eigenvectors[:, ::-1])
    assert np.abs(neg.dense() + ham.dense()).max() == 0


def test_single_site_chain_has_no_bonds():
    basis = full_space(1)
    ham = build_hamiltonian(HamiltonianSpec.xxz(1, 1.0, boundary="open"), basis)
    assert ham.dim == 2
    assert ham.matrix.nnz == 0
