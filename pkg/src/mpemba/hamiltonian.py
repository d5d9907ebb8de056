"""Anisotropic spin-chain Hamiltonians on a magnetization sector.

Couplings follow the convention J = 1, hbar = 1, k_B = 1: energies are in
units of J, times in 1/J, temperatures in J.  The standard chain preset
uses J1 = -1 so the isotropic point delta = 1 sits at the ferromagnetic
transition; the sign is a free parameter throughout.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg
import scipy.sparse as sp

from .errors import ResourceError, ValidationError
from .sector import SectorBasis, bond_flip_flop, zz_coupling

DENSE_EIG_CAP = 4096

BOUNDARIES = ("open", "periodic")


@dataclass(frozen=True)
class HamiltonianSpec:
    """Couplings and geometry of the two-neighbor anisotropic chain.

    ``j1``/``delta1`` act on nearest-neighbor bonds, ``j2``/``delta2`` on
    next-nearest ones.  A coupling of exactly zero contributes no bonds.
    """

    j1: float
    j2: float
    delta1: float
    delta2: float
    boundary: str
    num_sites: int

    def __post_init__(self) -> None:
        if self.boundary not in BOUNDARIES:
            raise ValidationError(f"boundary must be one of {BOUNDARIES}, got {self.boundary!r}")
        # A single site carries no bonds (H = 0); still allowed so the
        # one-site dephasing toy can run through the same pipeline.
        if self.num_sites < 1:
            raise ValidationError(f"need at least one site, got {self.num_sites}")
        for name in ("j1", "j2", "delta1", "delta2"):
            if not np.isfinite(getattr(self, name)):
                raise ValidationError(f"{name} must be finite")

    @classmethod
    def xxz(cls, num_sites: int, delta: float, *, boundary: str = "periodic", j: float = 1.0) -> "HamiltonianSpec":
        """Nearest-neighbor chain with J1 = -j and anisotropy ``delta``."""
        return cls(j1=-j, j2=0.0, delta1=delta, delta2=0.0, boundary=boundary, num_sites=num_sites)

    @classmethod
    def j1j2(
        cls,
        num_sites: int,
        ratio: float,
        *,
        delta: float = 1.0,
        boundary: str = "periodic",
        j1: float = -1.0,
    ) -> "HamiltonianSpec":
        """Two-neighbor chain with J2 = ratio * J1 and equal anisotropies."""
        return cls(j1=j1, j2=ratio * j1, delta1=delta, delta2=delta, boundary=boundary, num_sites=num_sites)

    def bonds(self) -> list[tuple[int, int, float, float]]:
        """(i, j, J, delta) per bond; open chains keep j + n < L, periodic wrap mod L."""
        out = []
        for n, (j_n, delta_n) in enumerate([(self.j1, self.delta1), (self.j2, self.delta2)], start=1):
            if j_n == 0.0:
                continue
            if self.boundary == "open":
                out.extend((i, i + n, j_n, delta_n) for i in range(self.num_sites - n))
            else:
                if n >= self.num_sites:
                    raise ValidationError(
                        f"periodic range-{n} bonds on {self.num_sites} sites are degenerate geometry"
                    )
                out.extend((i, (i + n) % self.num_sites, j_n, delta_n) for i in range(self.num_sites))
        return out


class HermitianOperator:
    """A Hermitian sector operator with a lazily computed dense eigensystem.

    The sparse matrix is the primary representation; ``dense()`` and the
    eigensystem are cached on first request.  Eigenvalues come back in
    ascending order with orthonormal eigenvector columns.
    """

    def __init__(self, matrix: sp.spmatrix | np.ndarray):
        m = sp.csr_matrix(matrix)
        if m.shape[0] != m.shape[1]:
            raise ValidationError(f"operator must be square, got {m.shape}")
        scale = max(abs(m).max(), 1.0) if m.nnz else 1.0
        herm_defect = abs(m - m.conjugate().T).max() if m.nnz else 0.0
        if herm_defect > 1e-12 * scale:
            raise ValidationError(f"matrix is not Hermitian (defect {herm_defect:.3e})")
        self.matrix = m
        self.dim = m.shape[0]
        self._dense: np.ndarray | None = None
        self._eigenvalues: np.ndarray | None = None
        self._eigenvectors: np.ndarray | None = None

    def dense(self) -> np.ndarray:
        if self._dense is None:
            self._dense = self.matrix.toarray()
        return self._dense

    @property
    def has_eigensystem(self) -> bool:
        return self._eigenvalues is not None

    def eigensystem(self, *, dense_cap: int = DENSE_EIG_CAP) -> tuple[np.ndarray, np.ndarray]:
        """Ascending eigenvalues and orthonormal eigenvectors (idempotent)."""
        if self._eigenvalues is None:
            if self.dim > dense_cap:
                raise ResourceError(
                    f"dense eigensystem of dimension {self.dim} exceeds the cap {dense_cap}"
                )
            evals, evecs = scipy.linalg.eigh(self.dense())
            self._eigenvalues = evals
            self._eigenvectors = evecs
        return self._eigenvalues, self._eigenvectors

    @property
    def eigenvalues(self) -> np.ndarray:
        if self._eigenvalues is None:
            raise ValidationError("eigensystem not computed yet; call eigensystem()")
        return self._eigenvalues

    @property
    def eigenvectors(self) -> np.ndarray:
        if self._eigenvectors is None:
            raise ValidationError("eigensystem not computed yet; call eigensystem()")
        return self._eigenvectors

    def negated(self) -> "HermitianOperator":
        """-H with the eigensystem mapped exactly (energies negated, order reversed).

        Deriving the eigensystem instead of re-diagonalizing keeps the
        spectral mapping between a model and its sign-flipped partner
        exact at the floating-point level.
        """
        out = HermitianOperator(-self.matrix)
        if self._eigenvalues is not None:
            out._eigenvalues = -self._eigenvalues[::-1].copy()
            out._eigenvectors = self._eigenvectors[:, ::-1].copy()
        return out


def build_hamiltonian(spec: HamiltonianSpec, basis: SectorBasis) -> HermitianOperator:
    """Assemble sum_bonds J [flip-flop + delta * S^z S^z] on the basis."""
    if basis.num_sites != spec.num_sites:
        raise ValidationError(
            f"basis has {basis.num_sites} sites but spec has {spec.num_sites}"
        )
    dim = basis.dim
    h = sp.csr_matrix((dim, dim))
    diag = np.zeros(dim)
    for i, j, j_n, delta_n in spec.bonds():
        h = h + j_n * bond_flip_flop(basis, i, j)
        if delta_n != 0.0:
            diag += j_n * delta_n * zz_coupling(basis, i, j)
    h = h + sp.diags(diag)
    return HermitianOperator(h)


def eigendecompose(operator: HermitianOperator, *, dense_cap: int = DENSE_EIG_CAP) -> HermitianOperator:
    """Populate the operator's eigensystem in place and return it."""
    operator.eigensystem(dense_cap=dense_cap)
    return operator
