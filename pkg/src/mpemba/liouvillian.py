"""Lindblad generator for Hamiltonian-plus-dephasing dynamics.

The jump operator on site j is the spin-up projector S_j^z + 1/2, with a
nonnegative rate gamma_j per site.  Vectorization uses column stacking
throughout: vec(A rho B) = (B^T kron A) vec(rho), i.e. numpy order="F".

The full non-Hermitian spectrum comes with biorthonormal left/right mode
pairs, Tr(l_m^dag r_n) = delta_mn, sorted by descending real part (the
zero mode first, ties broken by ascending |Im| then ascending Im).
Right modes carry unit Frobenius norm except the unique steady mode,
which is rescaled to unit trace (so its left partner is the identity and
the steady-state expansion coefficient of any unit-trace state is 1).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
import scipy.linalg
import scipy.sparse as sp

from .errors import (
    DefectiveSpectrumError,
    DegenerateSteadyStateError,
    NumericalError,
    ResourceError,
    ValidationError,
)
from .hamiltonian import HermitianOperator
from .sector import SectorBasis

logger = logging.getLogger(__name__)

DENSE_SUPEROP_DIM_CAP = 128
ZERO_EIGENVALUE_TOL = 1e-10
BIORTH_TOL = 1e-6
REAL_PART_SLACK = 1e-9


def vec(rho: np.ndarray) -> np.ndarray:
    """Column-stacking vectorization."""
    return rho.reshape(-1, order="F")


def unvec(v: np.ndarray, dim: int) -> np.ndarray:
    """Inverse of ``vec``."""
    return v.reshape((dim, dim), order="F")


@dataclass(frozen=True)
class DissipationSpec:
    """Per-site dephasing rates; the jump operators themselves are fixed."""

    gammas: tuple[float, ...]

    def __post_init__(self) -> None:
        if any(g < 0 or not np.isfinite(g) for g in self.gammas):
            raise ValidationError("dephasing rates must be finite and nonnegative")

    @classmethod
    def uniform(cls, gamma: float, num_sites: int) -> "DissipationSpec":
        return cls(gammas=(float(gamma),) * num_sites)


def dephasing_jump_diagonals(basis: SectorBasis) -> np.ndarray:
    """(L, dim) diagonals of the site projectors S_j^z + 1/2."""
    return basis.occupations().T.astype(float)


def lindblad_rhs(
    hamiltonian: np.ndarray | sp.spmatrix,
    jump_ops: list[np.ndarray],
    gammas: np.ndarray | list[float],
    rho: np.ndarray,
) -> np.ndarray:
    """-i[H, rho] + sum_j gamma_j (L rho L^dag - {L^dag L, rho}/2), by direct matrix products.

    This is the reference form: it never touches the vectorized
    superoperator and therefore serves as its independent check.
    """
    h = hamiltonian.toarray() if sp.issparse(hamiltonian) else np.asarray(hamiltonian)
    if h.shape != rho.shape:
        raise ValidationError(f"shape mismatch: H is {h.shape}, rho is {rho.shape}")
    out = -1j * (h @ rho - rho @ h)
    for g, jump in zip(gammas, jump_ops):
        if g == 0.0:
            continue
        if jump.shape != rho.shape:
            raise ValidationError(f"jump operator shape {jump.shape} does not match rho {rho.shape}")
        jdj = jump.conj().T @ jump
        out = out + g * (jump @ rho @ jump.conj().T - 0.5 * (jdj @ rho + rho @ jdj))
    return out


def apply_lindblad_rhs(
    hamiltonian: HermitianOperator,
    dissipation: DissipationSpec,
    rho: np.ndarray,
    basis: SectorBasis,
) -> np.ndarray:
    """The canonical dephasing right-hand side on a sector basis."""
    if len(dissipation.gammas) != basis.num_sites:
        raise ValidationError(
            f"{len(dissipation.gammas)} rates for {basis.num_sites} sites"
        )
    jumps = [np.diag(d) for d in dephasing_jump_diagonals(basis)]
    return lindblad_rhs(hamiltonian.matrix, jumps, dissipation.gammas, rho)


class LindbladRHS:
    """Prepared fast right-hand side for dephasing dissipation.

    For diagonal jumps the dissipator is entrywise multiplication by
    W_ab = sum_j gamma_j [n_j(a) n_j(b) - (n_j(a) + n_j(b)) / 2] <= 0,
    so one apply costs a sparse H product plus an elementwise product.
    This is the required path once the sector is too large for the dense
    superoperator.
    """

    def __init__(self, hamiltonian: HermitianOperator, dissipation: DissipationSpec, basis: SectorBasis):
        if hamiltonian.dim != basis.dim:
            raise ValidationError(f"Hamiltonian dim {hamiltonian.dim} does not match basis dim {basis.dim}")
        if len(dissipation.gammas) != basis.num_sites:
            raise ValidationError(
                f"{len(dissipation.gammas)} rates for {basis.num_sites} sites"
            )
        self.dim = basis.dim
        self._h = hamiltonian.matrix
        self._h_t = hamiltonian.matrix.T.tocsr()
        occ = basis.occupations().astype(float)  # (dim, L)
        g = np.asarray(dissipation.gammas)
        weighted = occ * g
        site_sum = occ @ g
        self.decay_weights = weighted @ occ.T - 0.5 * (site_sum[:, None] + site_sum[None, :])

    def __call__(self, rho: np.ndarray) -> np.ndarray:
        h_rho = self._h @ rho
        rho_h = (self._h_t @ rho.T).T
        return -1j * (h_rho - rho_h) + self.decay_weights * rho

    def deriv_vec(self, _t: float, y: np.ndarray) -> np.ndarray:
        """ODE-solver signature on the column-stacked state."""
        return vec(self(unvec(y, self.dim)))


def superoperator_matrix(
    hamiltonian: np.ndarray | sp.spmatrix,
    jump_ops: list[np.ndarray | sp.spmatrix],
    gammas: np.ndarray | list[float],
) -> np.ndarray:
    """Dense vectorized generator for arbitrary jump operators.

    L = -i (I kron H - H^T kron I)
        + sum_j gamma_j [conj(L_j) kron L_j
                         - (I kron L_j^dag L_j + (L_j^dag L_j)^T kron I) / 2]
    under the column-stacking convention.
    """
    h = sp.csr_matrix(hamiltonian)
    dim = h.shape[0]
    eye = sp.identity(dim, format="csr")
    total = -1j * (sp.kron(eye, h) - sp.kron(h.T, eye))
    for g, jump in zip(gammas, jump_ops):
        if g == 0.0:
            continue
        j = sp.csr_matrix(jump)
        jdj = (j.conjugate().T @ j).tocsr()
        total = total + g * (
            sp.kron(j.conjugate(), j) - 0.5 * (sp.kron(eye, jdj) + sp.kron(jdj.T, eye))
        )
    return np.asarray(total.todense(), dtype=complex)


def build_superoperator(
    hamiltonian: HermitianOperator,
    dissipation: DissipationSpec,
    basis: SectorBasis,
    *,
    dense_cap_dim: int = DENSE_SUPEROP_DIM_CAP,
) -> np.ndarray:
    """Dense (dim^2, dim^2) generator for the dephasing model."""
    if basis.dim > dense_cap_dim:
        raise ResourceError(
            f"sector dimension {basis.dim} exceeds the dense superoperator cap "
            f"{dense_cap_dim}; use the matrix-free path"
        )
    if len(dissipation.gammas) != basis.num_sites:
        raise ValidationError(
            f"{len(dissipation.gammas)} rates for {basis.num_sites} sites"
        )
    jumps = [sp.diags(d) for d in dephasing_jump_diagonals(basis)]
    return superoperator_matrix(hamiltonian.matrix, jumps, dissipation.gammas)


class LiouvillianSpectrum:
    """Full biorthogonal eigensystem of the vectorized generator.

    ``right``/``left`` hold vec'd modes as columns, sorted together with
    ``eigenvalues``.  Use ``right_mode``/``left_mode`` for the (d, d)
    matrix view of a single mode.

    ``defective_modes`` lists sorted positions whose eigendirections
    could not be biorthonormalized (near-Jordan structure).  Their left
    columns are zero, so they never contribute to expansions; any state
    with genuine support on them fails the reconstruction checks in the
    consumers instead of silently producing garbage.
    """

    def __init__(
        self,
        eigenvalues: np.ndarray,
        right: np.ndarray,
        left: np.ndarray,
        dim_rho: int,
        biorth_residual: float,
        defective_modes: tuple[int, ...] = (),
    ):
        self.eigenvalues = eigenvalues
        self.right = right
        self.left = left
        self.dim_rho = dim_rho
        self.biorth_residual = biorth_residual
        self.defective_modes = defective_modes
        self._steady: np.ndarray | None = None

    @property
    def size(self) -> int:
        return len(self.eigenvalues)

    def right_mode(self, n: int) -> np.ndarray:
        return unvec(self.right[:, n], self.dim_rho)

    def left_mode(self, n: int) -> np.ndarray:
        return unvec(self.left[:, n], self.dim_rho)

    def zero_mode_count(self, *, tol: float = ZERO_EIGENVALUE_TOL) -> int:
        return int(np.count_nonzero(np.abs(self.eigenvalues) <= tol))

    def gap(self) -> float:
        """|Re| of the slowest nonzero mode."""
        nonzero = np.abs(self.eigenvalues) > ZERO_EIGENVALUE_TOL
        if not np.any(nonzero):
            raise NumericalError("spectrum has no nonzero mode")
        return float(-self.eigenvalues[nonzero].real.max())

    def coefficients(self, rho0: np.ndarray) -> np.ndarray:
        """Expansion coefficients c_n = Tr(l_n^dag rho0)."""
        if rho0.shape != (self.dim_rho, self.dim_rho):
            raise ValidationError(
                f"state shape {rho0.shape} does not match mode dimension {self.dim_rho}"
            )
        return self.left.conj().T @ vec(rho0)

    def reconstruct(self, coefficients: np.ndarray, t: float = 0.0) -> np.ndarray:
        """sum_n c_n r_n exp(lambda_n t) as a (d, d) matrix."""
        phases = np.exp(self.eigenvalues * t)
        return unvec(self.right @ (coefficients * phases), self.dim_rho)

    def steady_state(self, target: np.ndarray | None = None) -> np.ndarray:
        """The unique stationary density matrix, or verify a supplied one.

        With a degenerate zero eigenvalue a unique steady state does not
        exist; in that case a caller-supplied ``target`` is verified to
        be stationary (its coefficients on all decaying modes vanish)
        and returned.
        """
        if target is None and self._steady is not None:
            return self._steady
        count = self.zero_mode_count()
        if count == 0:
            raise NumericalError("no zero eigenvalue found in the spectrum")
        if count > 1:
            if target is None:
                raise DegenerateSteadyStateError(
                    f"zero eigenvalue has multiplicity {count}; pass the intended steady state"
                )
            coeffs = self.coefficients(target)
            decaying = np.abs(self.eigenvalues) > ZERO_EIGENVALUE_TOL
            residual = float(np.abs(coeffs[decaying]).max()) if np.any(decaying) else 0.0
            if residual > 1e-8:
                raise ValidationError(f"supplied target is not stationary (residual {residual:.3e})")
            return target
        rho = self.right_mode(0)
        rho = rho / np.trace(rho)
        rho = 0.5 * (rho + rho.conj().T)
        min_eig = float(np.linalg.eigvalsh(rho).min())
        if min_eig < -1e-10:
            raise NumericalError(f"steady state not positive semidefinite (min eig {min_eig:.3e})")
        mixed_dev = float(np.abs(rho - np.eye(self.dim_rho) / self.dim_rho).max())
        logger.info("steady state deviation from maximally mixed: %.3e", mixed_dev)
        if target is not None:
            dev = float(np.abs(rho - target).max())
            if dev > 1e-8:
                raise ValidationError(f"steady state deviates from supplied target by {dev:.3e}")
        self._steady = rho
        return rho


def _linked_runs(order: np.ndarray, values: np.ndarray, tol: float) -> list[np.ndarray]:
    runs = []
    start = 0
    sorted_vals = values[order]
    for k in range(1, len(order)):
        if sorted_vals[k] - sorted_vals[k - 1] > tol:
            runs.append(order[start:k])
            start = k
    runs.append(order[start:])
    return runs


def _eigenvalue_clusters(eigenvalues: np.ndarray, tol: float) -> list[list[int]]:
    """Indices grouped by eigenvalue proximity.

    Two-level one-dimensional linkage (real part, then imaginary part
    within each real-part run); exact for degenerate multiplets whose
    separation from the rest is far above the tolerance.
    """
    clusters: list[list[int]] = []
    re_order = np.argsort(eigenvalues.real, kind="stable")
    for group in _linked_runs(re_order, eigenvalues.real, tol):
        im_order = group[np.argsort(eigenvalues.imag[group], kind="stable")]
        for run in _linked_runs(im_order, eigenvalues.imag, tol):
            clusters.append([int(x) for x in run])
    return clusters


def _biorthogonalize_symmetric(
    eigenvalues: np.ndarray, right: np.ndarray, scale: float, defect_tol: float
) -> tuple[np.ndarray, np.ndarray, list[int]]:
    """Left/right pairing for a complex-symmetric generator.

    When the generator equals its plain transpose (real Hamiltonian,
    real diagonal jumps), left eigenvectors are the conjugates of right
    ones and biorthogonality reduces to r_m^T r_n = delta_mn.  That is
    enforced cluster by cluster, so accuracy is set by local eigenvalue
    gaps instead of the global eigenbasis condition number.  Modes whose
    symmetric Gram is (near-)singular have no biorthonormal partner;
    they are the near-Jordan directions and come back flagged.
    """
    defective: list[int] = []
    for cluster in _eigenvalue_clusters(eigenvalues, 1e-8 * scale):
        block = right[:, cluster]
        if len(cluster) == 1:
            g = block[:, 0] @ block[:, 0]
            if abs(g) < defect_tol:
                defective.extend(cluster)
            else:
                right[:, cluster] = block / np.sqrt(g)
            continue
        q, _ = np.linalg.qr(block)
        gram = q.T @ q
        smin = float(np.linalg.svd(gram, compute_uv=False)[-1])
        if smin < defect_tol:
            defective.extend(cluster)
        else:
            right[:, cluster] = q @ np.linalg.inv(scipy.linalg.sqrtm(gram))
    left = right.conj().copy()
    left[:, defective] = 0.0
    return right, left, defective


def spectral_decomposition(
    superoperator: np.ndarray,
    *,
    biorth_tol: float = BIORTH_TOL,
    defect_tol: float = 1e-6,
) -> LiouvillianSpectrum:
    """Full eigensystem with verified biorthonormal left/right pairs.

    The canonical dephasing generator is complex symmetric, and the
    structured pairing of :func:`_biorthogonalize_symmetric` is used;
    a generic generator falls back to inverting the right eigenvector
    matrix.  Either way the residual max|Tr(l_m^dag r_n) - delta_mn|
    over the usable (non-defective) modes is measured explicitly, and
    the decomposition is rejected rather than allowed to produce bad
    overlaps.
    """
    d2 = superoperator.shape[0]
    dim_rho = int(round(np.sqrt(d2)))
    if dim_rho * dim_rho != d2 or superoperator.shape != (d2, d2):
        raise ValidationError(f"superoperator shape {superoperator.shape} is not a square of a square")
    sym_defect = float(np.abs(superoperator - superoperator.T).max())
    scale = max(float(np.abs(superoperator).max()), 1.0)

    eigenvalues, right = scipy.linalg.eig(superoperator)
    order = np.lexsort((eigenvalues.imag, np.abs(eigenvalues.imag), -eigenvalues.real))
    eigenvalues = eigenvalues[order]
    right = right[:, order]
    right = right / np.linalg.norm(right, axis=0)

    max_real = float(eigenvalues.real.max())
    if max_real > REAL_PART_SLACK:
        raise NumericalError(f"eigenvalue with positive real part {max_real:.3e}")

    defective: list[int] = []
    if sym_defect <= 1e-12 * scale:
        right, left, defective = _biorthogonalize_symmetric(
            eigenvalues, right, float(np.abs(eigenvalues).max()), defect_tol
        )
    else:
        try:
            left = np.linalg.inv(right).conj().T
        except np.linalg.LinAlgError as exc:
            raise DefectiveSpectrumError("right eigenvector matrix is singular") from exc

    usable = np.ones(d2, dtype=bool)
    usable[defective] = False
    gram = left[:, usable].conj().T @ right[:, usable]
    residual = float(np.abs(gram - np.eye(int(usable.sum()))).max())
    if residual > biorth_tol:
        raise DefectiveSpectrumError(
            f"biorthonormality residual {residual:.3e} exceeds {biorth_tol:.0e}; "
            "generator is near-defective"
        )
    if defective:
        logger.warning(
            "flagged %d near-defective modes (eigenvalues near %s)",
            len(defective),
            np.unique(np.round(eigenvalues[defective], 6)),
        )

    # Canonical steady-pair scaling: for a unique zero mode make the
    # right mode unit trace (left partner becomes the identity), so the
    # stationary coefficient of any unit-trace state is exactly 1.
    zero = np.abs(eigenvalues) <= ZERO_EIGENVALUE_TOL
    if np.count_nonzero(zero) == 1:
        n = int(np.nonzero(zero)[0][0])
        tau = np.trace(unvec(right[:, n], dim_rho))
        if abs(tau) > 1e-12:
            right[:, n] /= tau
            left[:, n] *= np.conj(tau)

    return LiouvillianSpectrum(eigenvalues, right, left, dim_rho, residual, tuple(defective))


def steady_state(spectrum: LiouvillianSpectrum, target: np.ndarray | None = None) -> np.ndarray:
    """Module-level convenience wrapper around ``LiouvillianSpectrum.steady_state``."""
    return spectrum.steady_state(target)
