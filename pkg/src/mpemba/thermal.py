"""Gibbs initial states on the sector eigenbasis.

Supports finite temperatures of either sign, the two zero-temperature
limits, and the infinite-temperature (maximally mixed) state.  With
k_B = 1 the weights are exp(-E_n / T) / Z over the Hamiltonian
eigenstates.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .hamiltonian import HermitianOperator

# Relative gap below which eigenstates count as one degenerate multiplet
# in the zero-temperature limits.
DEGENERACY_RTOL = 1e-9


@dataclass(frozen=True)
class TemperatureSpec:
    """One initial-state temperature: finite (nonzero, either sign) or a limit."""

    kind: str  # finite | zero_plus | zero_minus | infinite
    value: float | None = None

    def __post_init__(self) -> None:
        if self.kind not in ("finite", "zero_plus", "zero_minus", "infinite"):
            raise ValidationError(f"unknown temperature kind {self.kind!r}")
        if self.kind == "finite":
            if self.value is None or not np.isfinite(self.value):
                raise ValidationError("finite temperature needs a finite value")
            if self.value == 0.0:
                raise ValidationError("T = 0 is not a finite temperature; use zero_plus or zero_minus")
        elif self.value is not None:
            raise ValidationError(f"{self.kind} takes no numeric value")

    @classmethod
    def finite(cls, value: float) -> "TemperatureSpec":
        return cls("finite", float(value))

    @classmethod
    def zero_plus(cls) -> "TemperatureSpec":
        return cls("zero_plus")

    @classmethod
    def zero_minus(cls) -> "TemperatureSpec":
        return cls("zero_minus")

    @classmethod
    def infinite(cls) -> "TemperatureSpec":
        return cls("infinite")

    @classmethod
    def parse(cls, text: str) -> "TemperatureSpec":
        token = text.strip().lower()
        if token in ("zero_plus", "0+"):
            return cls.zero_plus()
        if token in ("zero_minus", "0-"):
            return cls.zero_minus()
        if token in ("infinite", "inf"):
            return cls.infinite()
        try:
            value = float(token)
        except ValueError as exc:
            raise ValidationError(f"cannot parse temperature {text!r}") from exc
        return cls.finite(value)

    def label(self) -> str:
        if self.kind == "finite":
            return repr(self.value)
        return {"zero_plus": "0+", "zero_minus": "0-", "infinite": "inf"}[self.kind]


def _degenerate_multiplet(evals: np.ndarray, top: bool) -> np.ndarray:
    spread = float(evals[-1] - evals[0])
    tol = DEGENERACY_RTOL * spread
    if top:
        return np.nonzero(evals >= evals[-1] - tol)[0]
    return np.nonzero(evals <= evals[0] + tol)[0]


def _content_sorted(columns: np.ndarray) -> np.ndarray:
    """Columns reordered by their byte content.

    Any fixed order works; sorting by content makes the result
    independent of how a degenerate cluster happened to be indexed, so a
    model and its sign-flipped partner accumulate identical sequences.
    """
    order = sorted(range(columns.shape[1]), key=lambda k: columns[:, k].tobytes())
    return columns[:, order]


def thermal_state(hamiltonian: HermitianOperator, temperature: TemperatureSpec) -> np.ndarray:
    """Gibbs density matrix for the given temperature.

    Finite T uses max-shifted exponentials (shift E_min for T > 0, E_max
    for T < 0) so that weights never overflow.  The zero-temperature
    limits return the equal mixture over the degenerate extremal
    multiplet; infinite temperature returns the maximally mixed state.
    """
    if temperature.kind == "infinite":
        return np.eye(hamiltonian.dim, dtype=complex) / hamiltonian.dim
    if not hamiltonian.has_eigensystem:
        raise ValidationError("thermal_state needs the Hamiltonian eigensystem; call eigensystem() first")
    evals, evecs = hamiltonian.eigenvalues, hamiltonian.eigenvectors

    if temperature.kind in ("zero_plus", "zero_minus"):
        idx = _degenerate_multiplet(evals, top=temperature.kind == "zero_minus")
        sub = _content_sorted(evecs[:, idx])
        rho = (sub @ sub.conj().T) / len(idx)
        return np.asarray(rho, dtype=complex)

    t = float(temperature.value)
    ref = evals.min() if t > 0 else evals.max()
    exponent = -(evals - ref) / t
    raw = np.exp(exponent)
    # Normalize and accumulate in descending-weight order (exact ties
    # broken by the unrounded exponent, then by eigenvector content):
    # the sign-flipped model at -T then processes bitwise-identical
    # terms in the identical sequence, keeping the spectral mapping
    # exact.
    order = list(np.lexsort((-exponent, -raw)))
    k = 0
    while k < len(order) - 1:
        j = k + 1
        while j < len(order) and raw[order[j]] == raw[order[k]] and exponent[order[j]] == exponent[order[k]]:
            j += 1
        if j - k > 1:
            order[k:j] = sorted(order[k:j], key=lambda idx: evecs[:, idx].tobytes())
        k = j
    order = np.asarray(order)
    ordered = raw[order]
    weights = ordered / ordered.sum()
    v = evecs[:, order]
    rho = (v * weights) @ v.conj().T
    rho = 0.5 * (rho + rho.conj().T)
    return np.asarray(rho, dtype=complex)


def state_diagnostics(rho: np.ndarray) -> dict[str, float]:
    """Scalar diagnostics of a density matrix: trace, purity, entropy, min eigenvalue."""
    trace = float(np.trace(rho).real)
    purity = float(np.sum(np.abs(rho) ** 2))
    evals = np.linalg.eigvalsh(0.5 * (rho + rho.conj().T))
    positive = evals[evals > 1e-15]
    entropy = float(-np.sum(positive * np.log(positive)))
    return {
        "trace": trace,
        "purity": purity,
        "entropy": entropy,
        "min_eigenvalue": float(evals.min()),
    }


def assert_density_matrix(
    rho: np.ndarray,
    *,
    herm_tol: float = 1e-12,
    trace_tol: float = 1e-12,
    psd_tol: float = 1e-10,
) -> None:
    """Raise ValidationError unless rho is Hermitian, unit-trace, and PSD within tolerance."""
    herm = float(np.abs(rho - rho.conj().T).max())
    if herm > herm_tol:
        raise ValidationError(f"density matrix Hermiticity defect {herm:.3e} > {herm_tol:.0e}")
    trace = complex(np.trace(rho))
    if abs(trace - 1.0) > trace_tol:
        raise ValidationError(f"density matrix trace {trace} deviates from 1 by more than {trace_tol:.0e}")
    min_eig = float(np.linalg.eigvalsh(0.5 * (rho + rho.conj().T)).min())
    if min_eig < -psd_tol:
        raise ValidationError(f"density matrix min eigenvalue {min_eig:.3e} < -{psd_tol:.0e}")
