"""Time evolution of density matrices and the distance observable.

Two propagation routes cover all sector sizes: spectral reconstruction
from the full mode decomposition (small sectors) and matrix-free
adaptive Runge-Kutta integration of the master equation (any size).
Wherever both apply they agree to integrator tolerance, which is tested
as a standing cross-validation contract.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.integrate import solve_ivp

from .errors import DefectiveSpectrumError, NumericalError, ValidationError
from .hamiltonian import HermitianOperator
from .liouvillian import DissipationSpec, LindbladRHS, LiouvillianSpectrum, unvec, vec
from .sector import SectorBasis

DEFAULT_GRID_POINTS = 400
DEFAULT_T_MIN = 1e-2
T_MAX_GAP_FACTOR = 15.0
DEFAULT_RTOL = 1e-9
DEFAULT_ATOL = 1e-12
STATE_STORE_DIM_CAP = 256
# Spectral coefficients below this relative size cannot move the
# reconstruction above ~1e-10 and are dropped for speed.
COEFF_RTOL = 1e-14


@dataclass(frozen=True)
class TimeGrid:
    """Strictly increasing sample times starting at t = 0."""

    points: np.ndarray
    spacing: str  # "linear" | "logarithmic"

    def __post_init__(self) -> None:
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim != 1 or len(pts) < 2:
            raise ValidationError("time grid needs at least two points")
        if pts[0] != 0.0:
            raise ValidationError("time grid must start at t = 0")
        if not np.all(np.isfinite(pts)):
            raise ValidationError("time grid must be finite")
        if np.any(np.diff(pts) <= 0):
            raise ValidationError("time grid must be strictly increasing")
        object.__setattr__(self, "points", pts)

    @classmethod
    def linear(cls, t_max: float, num: int = DEFAULT_GRID_POINTS) -> "TimeGrid":
        return cls(np.linspace(0.0, t_max, num + 1), "linear")

    @classmethod
    def logarithmic(cls, t_max: float, num: int = DEFAULT_GRID_POINTS, t_min: float = DEFAULT_T_MIN) -> "TimeGrid":
        """num log-spaced points on [t_min, t_max] with t = 0 prepended."""
        if not 0 < t_min < t_max:
            raise ValidationError(f"need 0 < t_min < t_max, got ({t_min}, {t_max})")
        pts = np.concatenate([[0.0], np.geomspace(t_min, t_max, num)])
        return cls(pts, "logarithmic")

    @property
    def t_max(self) -> float:
        return float(self.points[-1])


def default_grid(
    spectrum: LiouvillianSpectrum | None = None,
    *,
    t_max: float | None = None,
    num: int = DEFAULT_GRID_POINTS,
) -> TimeGrid:
    """Log grid up to t_max, defaulting to 15 / |Re lambda_2| when a spectrum is known."""
    if t_max is None:
        if spectrum is None:
            raise ValidationError("t_max is required when no spectrum is available")
        t_max = T_MAX_GAP_FACTOR / spectrum.gap()
    return TimeGrid.logarithmic(t_max, num)


@dataclass
class Trajectory:
    """Sampled distances D(t_k) = Tr[(rho(t_k) - rho_ss)^2] plus provenance.

    ``states`` is populated only on request (or for small sectors, where
    crossing refinement wants them); ``evaluate`` returns D at arbitrary
    t when the propagation route supports it.
    """

    grid: TimeGrid
    distances: np.ndarray
    metadata: dict = field(default_factory=dict)
    states: np.ndarray | None = None
    trace_drift: float = 0.0
    herm_drift: float = 0.0
    evaluate: Callable[[float], float] | None = None


def distance(rho: np.ndarray, rho_ss: np.ndarray) -> float:
    """Squared L2 (Frobenius) distance Tr[(rho - rho_ss)^2] for Hermitian inputs."""
    if rho.shape != rho_ss.shape:
        raise ValidationError(f"shape mismatch: {rho.shape} vs {rho_ss.shape}")
    diff = rho - rho_ss
    return float(np.sum(np.abs(diff) ** 2))


def _drift(states: np.ndarray) -> tuple[float, float]:
    traces = np.abs(np.trace(states, axis1=1, axis2=2) - 1.0)
    herm = np.abs(states - states.conj().transpose(0, 2, 1)).max() if len(states) else 0.0
    return float(traces.max()), float(herm)


def evolve_spectral(
    spectrum: LiouvillianSpectrum,
    rho0: np.ndarray,
    grid: TimeGrid,
    *,
    steady: np.ndarray | None = None,
    store_states: bool = False,
    coeff_rtol: float = COEFF_RTOL,
) -> Trajectory:
    """rho(t) = sum_n c_n r_n exp(lambda_n t) with c_n = Tr(l_n^dag rho0)."""
    d = spectrum.dim_rho
    if rho0.shape != (d, d):
        raise ValidationError(f"state shape {rho0.shape} does not match sector dimension {d}")
    rho_ss = spectrum.steady_state() if steady is None else steady
    coeffs = spectrum.coefficients(rho0)

    keep = np.abs(coeffs) > coeff_rtol * np.abs(coeffs).max()
    lam = spectrum.eigenvalues[keep]
    modes = spectrum.right[:, keep]
    c = coeffs[keep]

    phases = np.exp(np.outer(lam, grid.points))  # (K, T); Re(lam) <= 0 so bounded
    stacked = modes @ (c[:, None] * phases)  # (d^2, T)
    states = stacked.T.reshape(len(grid.points), d, d).transpose(0, 2, 1)  # undo F-order per column
    trace_drift, herm_drift = _drift(states)
    states = 0.5 * (states + states.conj().transpose(0, 2, 1))
    recon = float(np.abs(states[0] - rho0).max())
    if recon > 1e-8:
        # Either the state has support on flagged near-Jordan directions
        # or the mode basis is unusable; the integrator route handles
        # such states exactly.
        raise DefectiveSpectrumError(
            f"mode expansion fails to reconstruct the initial state ({recon:.3e} > 1e-8)"
        )
    distances = np.sum(np.abs(states - rho_ss) ** 2, axis=(1, 2))

    def evaluate(t: float) -> float:
        rho_t = unvec(modes @ (c * np.exp(lam * t)), d)
        rho_t = 0.5 * (rho_t + rho_t.conj().T)
        return distance(rho_t, rho_ss)

    return Trajectory(
        grid=grid,
        distances=distances,
        metadata={"method": "spectral"},
        states=states if store_states else None,
        trace_drift=trace_drift,
        herm_drift=herm_drift,
        evaluate=evaluate,
    )


def evolve_integrate(
    hamiltonian: HermitianOperator,
    dissipation: DissipationSpec,
    basis: SectorBasis,
    rho0: np.ndarray,
    grid: TimeGrid,
    *,
    rtol: float = DEFAULT_RTOL,
    atol: float = DEFAULT_ATOL,
    steady: np.ndarray | None = None,
    store_states: bool | None = None,
    solver: str = "DOP853",
) -> Trajectory:
    """Adaptive embedded Runge-Kutta integration of the master equation.

    Works matrix-free through :class:`LindbladRHS`.  The steady state
    defaults to the maximally mixed sector state, which is stationary
    for every Hermitian-jump dissipator.  Trace drift is reported on the
    trajectory and never corrected.
    """
    d = basis.dim
    if rho0.shape != (d, d):
        raise ValidationError(f"state shape {rho0.shape} does not match sector dimension {d}")
    rhs = LindbladRHS(hamiltonian, dissipation, basis)
    rho_ss = np.eye(d) / d if steady is None else steady
    if store_states is None:
        store_states = d <= STATE_STORE_DIM_CAP

    sol = solve_ivp(
        rhs.deriv_vec,
        (0.0, grid.t_max),
        vec(rho0.astype(complex)),
        t_eval=grid.points,
        method=solver,
        rtol=rtol,
        atol=atol,
    )
    if not sol.success:
        raise NumericalError(f"integration failed: {sol.message}")

    states = sol.y.T.reshape(len(grid.points), d, d).transpose(0, 2, 1)
    trace_drift, herm_drift = _drift(states)
    states_h = 0.5 * (states + states.conj().transpose(0, 2, 1))
    distances = np.sum(np.abs(states_h - rho_ss) ** 2, axis=(1, 2))

    evaluate = None
    if store_states:

        def evaluate(t: float) -> float:
            k = int(np.searchsorted(grid.points, t, side="right") - 1)
            k = max(k, 0)
            if t == grid.points[k]:
                return float(distances[k])
            seg = solve_ivp(
                rhs.deriv_vec,
                (grid.points[k], t),
                vec(states[k]),
                method=solver,
                rtol=rtol,
                atol=atol,
            )
            if not seg.success:
                raise NumericalError(f"refinement integration failed: {seg.message}")
            rho_t = unvec(seg.y[:, -1], d)
            rho_t = 0.5 * (rho_t + rho_t.conj().T)
            return distance(rho_t, rho_ss)

    return Trajectory(
        grid=grid,
        distances=distances,
        metadata={"method": "integrate", "rtol": rtol, "atol": atol, "solver": solver},
        states=states_h if store_states else None,
        trace_drift=trace_drift,
        herm_drift=herm_drift,
        evaluate=evaluate,
    )


@dataclass(frozen=True)
class RateFit:
    """Late-time decay rate estimate: the implied Re(lambda_max) and fit residual."""

    rate: float
    residual: float


def late_time_rate(trajectory: Trajectory, window: tuple[float, float]) -> RateFit:
    """Least-squares slope of ln D over the window, halved.

    D is quadratic in rho - rho_ss, so ln D decays at 2 |Re lambda_max|;
    the returned rate is the implied Re(lambda_max) <= 0.  A window that
    straddles oscillations from complex modes shows up as a large
    residual rather than an error.
    """
    lo, hi = window
    pts = trajectory.grid.points
    mask = (pts >= lo) & (pts <= hi)
    if np.count_nonzero(mask) < 3:
        raise ValidationError(f"window ({lo}, {hi}) covers fewer than 3 grid points")
    d_vals = trajectory.distances[mask]
    if np.any(d_vals <= 0):
        raise ValidationError("distances must be strictly positive on the fit window")
    t = pts[mask]
    log_d = np.log(d_vals)
    slope, intercept = np.polyfit(t, log_d, 1)
    fit = slope * t + intercept
    residual = float(np.sqrt(np.mean((log_d - fit) ** 2)))
    return RateFit(rate=float(slope / 2.0), residual=residual)
