"""Fixed-magnetization spin-1/2 bases and sector-restricted operators.

Both the chain Hamiltonian and the dephasing dissipator conserve total
S^z, so all heavy computation runs inside the subspace with a fixed
number of up spins.  A configuration is an integer bit pattern: bit j set
means spin-up at site j, sites numbered 0..L-1.  Configurations are
stored in strictly ascending integer order; that ordering is the
package-wide canonical convention and every exported basis index refers
to it.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from math import comb

import numpy as np
import scipy.sparse as sp

from .errors import ResourceError, ValidationError

# Cap on dim**2 (one density matrix worth of entries); a dense matrix at
# the cap is ~4 GiB of complex doubles.
DEFAULT_ENTRY_CAP = 2**28


@dataclass(frozen=True)
class SectorBasis:
    """Ordered basis of spin configurations with a fixed up-spin count.

    ``num_up`` is None for the unrestricted 2**L space, which is used by
    single-site toys and by brute-force cross-checks; the operator
    builders below work on either kind of basis.
    """

    num_sites: int
    num_up: int | None
    configs: np.ndarray  # uint64, strictly ascending

    @property
    def dim(self) -> int:
        return len(self.configs)

    def index_of(self, config: int) -> int:
        """Basis index of a configuration; inverse of ``configs[k]``."""
        k = int(np.searchsorted(self.configs, config))
        if k == self.dim or self.configs[k] != config:
            raise KeyError(f"configuration {config:#b} not in basis")
        return k

    def occupations(self) -> np.ndarray:
        """(dim, L) array of 0/1 site occupations, one row per configuration."""
        sites = np.arange(self.num_sites, dtype=np.uint64)
        return ((self.configs[:, None] >> sites[None, :]) & np.uint64(1)).astype(np.int8)


def _check_entry_cap(dim: int, entry_cap: int) -> None:
    if dim * dim > entry_cap:
        raise ResourceError(
            f"sector dimension {dim} needs {dim * dim} matrix entries, "
            f"above the cap of {entry_cap}"
        )


def enumerate_sector(num_sites: int, num_up: int, *, entry_cap: int = DEFAULT_ENTRY_CAP) -> SectorBasis:
    """Enumerate the subspace with exactly ``num_up`` up spins on ``num_sites`` sites."""
    if num_sites < 1:
        raise ValidationError(f"need at least one site, got {num_sites}")
    if not 0 <= num_up <= num_sites:
        raise ValidationError(f"num_up={num_up} outside [0, {num_sites}]")
    dim = comb(num_sites, num_up)
    _check_entry_cap(dim, entry_cap)
    configs = np.fromiter(
        (sum(1 << p for p in positions) for positions in itertools.combinations(range(num_sites), num_up)),
        dtype=np.uint64,
        count=dim,
    )
    configs.sort()
    return SectorBasis(num_sites=num_sites, num_up=num_up, configs=configs)


def full_space(num_sites: int, *, entry_cap: int = DEFAULT_ENTRY_CAP) -> SectorBasis:
    """The unrestricted 2**L space with the same configuration ordering."""
    if num_sites < 1:
        raise ValidationError(f"need at least one site, got {num_sites}")
    dim = 2**num_sites
    _check_entry_cap(dim, entry_cap)
    return SectorBasis(num_sites=num_sites, num_up=None, configs=np.arange(dim, dtype=np.uint64))


def _check_site(basis: SectorBasis, site: int) -> None:
    if not 0 <= site < basis.num_sites:
        raise IndexError(f"site {site} outside 0..{basis.num_sites - 1}")


def _bit(basis: SectorBasis, site: int) -> np.ndarray:
    return ((basis.configs >> np.uint64(site)) & np.uint64(1)).astype(np.int64)


def sz_diagonal(basis: SectorBasis, site: int) -> np.ndarray:
    """Diagonal of S^z at ``site``: +1/2 where the spin is up, -1/2 where down."""
    _check_site(basis, site)
    return np.where(_bit(basis, site) == 1, 0.5, -0.5)


def total_sz_diagonal(basis: SectorBasis) -> np.ndarray:
    """Diagonal of the total-S^z operator (constant on a fixed-num_up basis)."""
    counts = basis.occupations().sum(axis=1)
    return counts - basis.num_sites / 2.0


def zz_coupling(basis: SectorBasis, i: int, j: int) -> np.ndarray:
    """Diagonal of S_i^z S_j^z: +1/4 for aligned spins, -1/4 otherwise."""
    _check_site(basis, i)
    _check_site(basis, j)
    if i == j:
        raise IndexError("zz_coupling needs two distinct sites")
    return np.where(_bit(basis, i) == _bit(basis, j), 0.25, -0.25)


def bond_flip_flop(basis: SectorBasis, i: int, j: int) -> sp.csr_matrix:
    """(S_i^+ S_j^- + S_i^- S_j^+)/2 restricted to the basis.

    Matrix element 1/2 between configurations that differ exactly by
    exchanging an up spin at one of the sites with a down spin at the
    other; real symmetric, at most one off-diagonal entry per row.
    """
    _check_site(basis, i)
    _check_site(basis, j)
    if i == j:
        raise IndexError("bond_flip_flop needs two distinct sites")
    dim = basis.dim
    flip = np.uint64((1 << i) | (1 << j))
    movable = (_bit(basis, i) == 1) & (_bit(basis, j) == 0)
    cols = np.nonzero(movable)[0]
    partners = basis.configs[cols] ^ flip
    rows = np.searchsorted(basis.configs, partners)
    # On a fixed-num_up basis every partner exists; on a truncated custom
    # basis it might not, which would be a construction bug.
    if np.any(rows >= dim) or np.any(basis.configs[np.minimum(rows, dim - 1)] != partners):
        raise ValidationError("basis is not closed under the flip-flop move")
    half = sp.coo_matrix((np.full(len(cols), 0.5), (rows, cols)), shape=(dim, dim))
    return (half + half.T).tocsr()
