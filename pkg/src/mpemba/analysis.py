"""Trajectory-crossing detection, relaxation-anomaly classification, and sweeps.

Two heating trajectories from states at different effective temperatures
exhibit the anomaly when the initially farther ("cold" here, since the
dynamics heats toward the maximally mixed state) trajectory crosses the
closer one.  Aggregating crossings over a grid of comparison
temperatures yields the verdict: "strong" when every tested temperature
is crossed, "weak" when some are, "none" otherwise.
"""

from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DefectiveSpectrumError,
    MpembaError,
    NumericalError,
    ResourceError,
    ValidationError,
)
from .hamiltonian import HamiltonianSpec, build_hamiltonian
from .liouvillian import (
    DissipationSpec,
    LiouvillianSpectrum,
    build_superoperator,
    spectral_decomposition,
)
from .propagation import TimeGrid, Trajectory, default_grid, distance, evolve_integrate, evolve_spectral
from .sector import enumerate_sector
from .thermal import TemperatureSpec, thermal_state

logger = logging.getLogger(__name__)

NOISE_FLOOR = 1e-12
INITIAL_ORDER_TOL = 1e-9
PERSISTENCE_POINTS = 3
REFINE_RTOL = 1e-4
SLOW_WEIGHT_THRESHOLD = 1e-10
SPECTRAL_DIM_CAP = 128
# Grid of comparison temperatures used to certify the strong form when
# the caller does not supply one.
DEFAULT_HOT_GRID = (0.5, 1.0, 2.0, 5.0, 10.0, 100.0)
SWEEP_T_MAX = 100.0


@dataclass(frozen=True)
class CrossingReport:
    """Outcome of comparing one trajectory pair."""

    crossed: bool
    t_cross: float | None
    margin: float  # D_cold - D_hot at the final grid time
    refined: str | None = None  # "bisection" | "interpolation"

    def __post_init__(self) -> None:
        if self.crossed != (self.t_cross is not None):
            raise ValidationError("crossed flag and t_cross presence must agree")
        if self.t_cross is not None and self.t_cross <= 0:
            raise ValidationError("crossing time must be positive")


@dataclass(frozen=True)
class QmeVerdict:
    """Aggregated classification over a grid of comparison temperatures."""

    qme_class: str  # none | weak | strong
    temperatures: tuple[TemperatureSpec, ...]
    reports: dict[str, CrossingReport]
    dropped: tuple[str, ...] = ()


@dataclass(frozen=True)
class OverlapSpectrum:
    """Mode-resolved weights |Tr(l_n^dag rho0)| of one initial state.

    Indices are 1-based positions in the sorted eigenvalue list, so the
    steady mode is index 1 and ``first_slow_index`` is the smallest
    n >= 2 carrying weight above the threshold; the eigenvalue there is
    the effective late-time rate of the state.
    """

    weights: np.ndarray
    steady_weight: float
    first_slow_index: int
    rate_eigenvalue: complex
    reconstruction_residual: float


def detect_crossing(
    traj_cold: Trajectory,
    traj_hot: Trajectory,
    *,
    abs_tol: float = INITIAL_ORDER_TOL,
    noise_floor: float = NOISE_FLOOR,
    persistence: int = PERSISTENCE_POINTS,
    refine_rtol: float = REFINE_RTOL,
) -> CrossingReport:
    """First persistent sign change of g(t) = D_cold(t) - D_hot(t).

    The cold trajectory must start strictly farther from the steady
    state.  A sign change counts only when |g| clears the noise floor on
    both sides and the new sign persists for ``persistence`` grid
    points, which suppresses spurious flips from oscillatory beats.  The
    bracketed crossing is refined by bisection on the underlying
    dynamics when both trajectories can be evaluated off-grid, otherwise
    by linear interpolation.
    """
    if not np.array_equal(traj_cold.grid.points, traj_hot.grid.points):
        raise ValidationError("trajectories must share one time grid")
    g = traj_cold.distances - traj_hot.distances
    if g[0] <= abs_tol:
        raise ValidationError(
            f"initial ordering violated: D_cold(0) - D_hot(0) = {g[0]:.3e} <= {abs_tol:.0e}"
        )
    pts = traj_cold.grid.points

    bracket = None
    for k in range(len(g) - persistence):
        if g[k] > noise_floor and np.all(g[k + 1 : k + 1 + persistence] < -noise_floor):
            bracket = k
            break

    margin = float(g[-1])
    if abs(margin) <= noise_floor:
        margin = 0.0
    if bracket is None:
        return CrossingReport(crossed=False, t_cross=None, margin=margin)

    a, b = float(pts[bracket]), float(pts[bracket + 1])
    if traj_cold.evaluate is not None and traj_hot.evaluate is not None:
        ga = float(g[bracket])
        while (b - a) > refine_rtol * max(b, 1e-12):
            mid = 0.5 * (a + b)
            gm = traj_cold.evaluate(mid) - traj_hot.evaluate(mid)
            if (gm > 0) == (ga > 0):
                a, ga = mid, gm
            else:
                b = mid
        t_cross = 0.5 * (a + b)
        refined = "bisection"
    else:
        ga, gb = float(g[bracket]), float(g[bracket + 1])
        t_cross = a + ga * (b - a) / (ga - gb)
        refined = "interpolation"
    return CrossingReport(crossed=True, t_cross=float(t_cross), margin=margin, refined=refined)


def aggregate_verdict(
    cold_trajectory: Trajectory,
    hot_trajectories: dict[str, Trajectory],
    temperatures: tuple[TemperatureSpec, ...],
    *,
    abs_tol: float = INITIAL_ORDER_TOL,
) -> QmeVerdict:
    """Run crossing detection per comparison state and classify.

    Comparison states that do not start strictly closer to the steady
    state are dropped and recorded, never silently included.
    """
    reports: dict[str, CrossingReport] = {}
    dropped: list[str] = []
    for label, traj in hot_trajectories.items():
        if cold_trajectory.distances[0] <= traj.distances[0] + abs_tol:
            logger.warning("dropping comparison state T=%s: not closer at t=0", label)
            dropped.append(label)
            continue
        reports[label] = detect_crossing(cold_trajectory, traj, abs_tol=abs_tol)
    if not reports:
        raise ValidationError("no admissible comparison states remain after the ordering filter")
    crossings = [r.crossed for r in reports.values()]
    if all(crossings):
        qme_class = "strong"
    elif any(crossings):
        qme_class = "weak"
    else:
        qme_class = "none"
    return QmeVerdict(
        qme_class=qme_class,
        temperatures=temperatures,
        reports=reports,
        dropped=tuple(dropped),
    )


def _resolve_method(method: str, dim: int) -> str:
    if method == "auto":
        return "spectral" if dim <= SPECTRAL_DIM_CAP else "integrate"
    if method not in ("spectral", "integrate"):
        raise ValidationError(f"unknown method {method!r}")
    return method


def evolve_thermal_trajectories(
    ham_spec: HamiltonianSpec,
    num_up: int,
    dissipation: DissipationSpec,
    temperatures: list[TemperatureSpec],
    *,
    method: str = "auto",
    grid: TimeGrid | None = None,
    t_max: float | None = None,
    rtol: float = 1e-9,
    spectrum: LiouvillianSpectrum | None = None,
) -> tuple[dict[str, Trajectory], LiouvillianSpectrum | None]:
    """Shared-grid trajectories of the thermal states at the given temperatures.

    Resolves the propagation route, building (or reusing) the spectral
    decomposition only when the spectral route is in effect; returns the
    spectrum alongside so callers can report mode diagnostics.
    """
    basis = enumerate_sector(ham_spec.num_sites, num_up)
    ham = build_hamiltonian(ham_spec, basis)
    ham.eigensystem()
    route = _resolve_method(method, basis.dim)

    if route == "spectral":
        if spectrum is None:
            superop = build_superoperator(ham, dissipation, basis)
            spectrum = spectral_decomposition(superop)
        steady = spectrum.steady_state()
        if grid is None:
            grid = default_grid(spectrum, t_max=t_max)
    else:
        spectrum = None
        steady = np.eye(basis.dim) / basis.dim
        if grid is None:
            grid = default_grid(None, t_max=t_max)

    trajectories: dict[str, Trajectory] = {}
    for temp in temperatures:
        rho0 = thermal_state(ham, temp)
        if route == "spectral":
            traj = evolve_spectral(spectrum, rho0, grid, steady=steady)
        else:
            traj = evolve_integrate(ham, dissipation, basis, rho0, grid, rtol=rtol, steady=steady)
        traj.metadata.update(
            {
                "temperature": temp.label(),
                "j1": ham_spec.j1,
                "j2": ham_spec.j2,
                "delta1": ham_spec.delta1,
                "delta2": ham_spec.delta2,
                "boundary": ham_spec.boundary,
                "num_sites": ham_spec.num_sites,
                "num_up": num_up,
                "gammas": list(dissipation.gammas),
            }
        )
        trajectories[temp.label()] = traj
    return trajectories, spectrum


def classify_qme(
    ham_spec: HamiltonianSpec,
    num_up: int,
    dissipation: DissipationSpec,
    cold: TemperatureSpec,
    hot: list[TemperatureSpec],
    *,
    method: str = "auto",
    grid: TimeGrid | None = None,
    t_max: float | None = None,
    rtol: float = 1e-9,
    spectrum: LiouvillianSpectrum | None = None,
) -> QmeVerdict:
    """Full classification pipeline for one model point."""
    if not hot:
        raise ValidationError("need at least one comparison temperature")
    trajectories, _ = evolve_thermal_trajectories(
        ham_spec,
        num_up,
        dissipation,
        [cold, *hot],
        method=method,
        grid=grid,
        t_max=t_max,
        rtol=rtol,
        spectrum=spectrum,
    )
    cold_traj = trajectories[cold.label()]
    hot_trajs = {t.label(): trajectories[t.label()] for t in hot}
    return aggregate_verdict(cold_traj, hot_trajs, tuple(hot))


def overlap_spectrum(
    spectrum: LiouvillianSpectrum,
    rho0: np.ndarray,
    *,
    slow_weight_threshold: float = SLOW_WEIGHT_THRESHOLD,
) -> OverlapSpectrum:
    """Mode weights of an initial state and its effective slowest coupled mode."""
    coeffs = spectrum.coefficients(rho0)
    recon = spectrum.reconstruct(coeffs, 0.0)
    residual = float(np.abs(recon - rho0).max())
    if residual > 1e-8:
        if spectrum.defective_modes:
            raise DefectiveSpectrumError(
                f"state has support on near-defective modes (reconstruction residual {residual:.3e})"
            )
        raise NumericalError(f"mode reconstruction residual {residual:.3e} exceeds 1e-8")
    weights = np.abs(coeffs)
    decaying = np.abs(spectrum.eigenvalues) > 1e-10
    slow = np.nonzero(decaying & (weights > slow_weight_threshold))[0]
    if len(slow) == 0:
        raise NumericalError("state has no weight on any decaying mode")
    first = int(slow[0]) + 1  # 1-based sorted index; the steady mode is index 1
    return OverlapSpectrum(
        weights=weights,
        steady_weight=float(weights[0]),
        first_slow_index=first,
        rate_eigenvalue=complex(spectrum.eigenvalues[first - 1]),
        reconstruction_residual=residual,
    )


@dataclass(frozen=True)
class SweepRow:
    """One (model point, comparison temperature) record of a sweep."""

    num_sites: int
    delta: float
    ratio: float
    temperature: str
    gamma: float
    boundary: str
    crossed: bool | None
    t_cross: float | None
    verdict: str
    error: str | None = None


@dataclass(frozen=True)
class WindowInterval:
    """Maximal contiguous run of anisotropy values exhibiting crossings."""

    num_sites: int
    temperature: str
    lo: float
    hi: float


@dataclass
class SweepResult:
    rows: list[SweepRow]
    intervals: list[WindowInterval] = field(default_factory=list)

    def interval_width(self, num_sites: int, temperature: str) -> float:
        return sum(
            iv.hi - iv.lo
            for iv in self.intervals
            if iv.num_sites == num_sites and iv.temperature == temperature
        )


def _sweep_point(args) -> list[SweepRow]:
    """Worker for one (L, delta | ratio) sweep point; returns per-temperature rows."""
    (num_sites, delta, ratio, temps, gamma, boundary, cold_kind, method, t_max, rtol, num_up) = args
    j1 = -1.0
    spec = HamiltonianSpec(
        j1=j1,
        j2=ratio * j1,
        delta1=delta,
        delta2=delta if ratio != 0.0 else 0.0,
        boundary=boundary,
        num_sites=num_sites,
    )
    diss = DissipationSpec.uniform(gamma, num_sites)
    cold = TemperatureSpec(cold_kind)
    hot = [TemperatureSpec.finite(t) for t in temps]
    rows: list[SweepRow] = []
    try:
        trajectories, _ = evolve_thermal_trajectories(
            spec, num_up, diss, [cold, *hot], method=method, t_max=t_max, rtol=rtol
        )
        cold_traj = trajectories[cold.label()]
        verdict = aggregate_verdict(
            cold_traj, {t.label(): trajectories[t.label()] for t in hot}, tuple(hot)
        )
        for t in hot:
            report = verdict.reports.get(t.label())
            rows.append(
                SweepRow(
                    num_sites=num_sites,
                    delta=delta,
                    ratio=ratio,
                    temperature=t.label(),
                    gamma=gamma,
                    boundary=boundary,
                    crossed=None if report is None else report.crossed,
                    t_cross=None if report is None else report.t_cross,
                    verdict=verdict.qme_class,
                    error="dropped: not closer at t=0" if report is None else None,
                )
            )
    except MpembaError as exc:
        logger.warning("sweep point L=%d delta=%g ratio=%g failed: %s", num_sites, delta, ratio, exc)
        for t in hot:
            rows.append(
                SweepRow(
                    num_sites=num_sites,
                    delta=delta,
                    ratio=ratio,
                    temperature=t.label(),
                    gamma=gamma,
                    boundary=boundary,
                    crossed=None,
                    t_cross=None,
                    verdict="error",
                    error=str(exc),
                )
            )
    return rows


def _run_points(tasks: list, jobs: int) -> list[SweepRow]:
    rows: list[SweepRow] = []
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            for chunk in pool.map(_sweep_point, tasks):
                rows.extend(chunk)
    else:
        for task in tasks:
            rows.extend(_sweep_point(task))
    return rows


def _crossed_intervals(deltas: np.ndarray, crossed: list[bool | None]) -> list[tuple[float, float]]:
    intervals = []
    start = None
    for value, flag in zip(deltas, crossed):
        if flag and start is None:
            start = value
        elif not flag and start is not None:
            intervals.append((start, prev))
            start = None
        prev = value
    if start is not None:
        intervals.append((start, float(deltas[-1])))
    return intervals


def delta_window_sweep(
    sizes: list[int],
    temperatures: list[float],
    deltas: np.ndarray,
    *,
    gamma: float = 1.0,
    boundary: str = "periodic",
    cold_kind: str = "zero_plus",
    method: str = "integrate",
    t_max: float = SWEEP_T_MAX,
    rtol: float = 1e-9,
    jobs: int = 1,
) -> SweepResult:
    """Crossing presence over an anisotropy scan, per system size and temperature.

    The default route is the matrix-free integrator with a fixed time
    window: the scan visits hundreds of model points, where per-point
    dense spectral decompositions would be prohibitive.
    """
    deltas = np.asarray(deltas, dtype=float)
    if len(deltas) == 0:
        raise ValidationError("anisotropy scan range is empty")
    tasks = [
        (int(num_sites), float(d), 0.0, tuple(temperatures), gamma, boundary, cold_kind, method, t_max, rtol, int(num_sites) // 2)
        for num_sites in sizes
        for d in deltas
    ]
    rows = _run_points(tasks, jobs)

    result = SweepResult(rows=rows)
    for num_sites in sizes:
        for t in temperatures:
            label = TemperatureSpec.finite(t).label()
            flags = [
                next(
                    (r.crossed for r in rows if r.num_sites == num_sites and r.delta == d and r.temperature == label),
                    None,
                )
                for d in deltas
            ]
            for lo, hi in _crossed_intervals(deltas, flags):
                result.intervals.append(WindowInterval(num_sites=num_sites, temperature=label, lo=lo, hi=hi))
    return result


def j1j2_sweep(
    ratios: list[float],
    temperatures: list[float],
    num_sites: int,
    *,
    delta: float = 1.0,
    gamma: float = 1.0,
    boundary: str = "periodic",
    cold_kind: str = "zero_plus",
    method: str = "integrate",
    t_max: float = SWEEP_T_MAX,
    rtol: float = 1e-9,
    jobs: int = 1,
) -> SweepResult:
    """Verdicts across next-nearest-neighbor coupling ratios at fixed anisotropy."""
    if not ratios:
        raise ValidationError("ratio list is empty")
    tasks = [
        (num_sites, float(delta), float(r), tuple(temperatures), gamma, boundary, cold_kind, method, t_max, rtol, num_sites // 2)
        for r in ratios
    ]
    rows = _run_points(tasks, jobs)
    return SweepResult(rows=rows)
