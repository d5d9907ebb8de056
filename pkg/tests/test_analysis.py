import numpy as np
import pytest

from mpemba.analysis import (
    CrossingReport,
    aggregate_verdict,
    classify_qme,
    delta_window_sweep,
    detect_crossing,
    j1j2_sweep,
    overlap_spectrum,
)
from mpemba.errors import ValidationError
from mpemba.hamiltonian import HamiltonianSpec, build_hamiltonian, eigendecompose
from mpemba.liouvillian import DissipationSpec, build_superoperator, spectral_decomposition
from mpemba.propagation import TimeGrid, Trajectory
from mpemba.sector import enumerate_sector, full_space
from mpemba.thermal import TemperatureSpec, thermal_state

import oracles


def exponential_trajectory(grid: TimeGrid, amplitude: float, rate: float) -> Trajectory:
    return Trajectory(
        grid=grid,
        distances=amplitude * np.exp(-rate * grid.points),
        evaluate=lambda t: amplitude * np.exp(-rate * t),
    )


def test_crossing_of_closed_form_exponentials():
    grid = TimeGrid.linear(10.0, 400)
    cold = exponential_trajectory(grid, 0.9, 1.0)
    hot = exponential_trajectory(grid, 0.5, 0.5)
    report = detect_crossing(cold, hot)
    assert report.crossed
    assert report.refined == "bisection"
    assert report.t_cross == pytest.approx(np.log(1.8) / 0.5, rel=2e-4)
    assert report.margin < 0


def test_crossing_refinement_by_interpolation():
    grid = TimeGrid.linear(10.0, 400)
    cold = exponential_trajectory(grid, 0.9, 1.0)
    hot = exponential_trajectory(grid, 0.5, 0.5)
    cold.evaluate = None
    report = detect_crossing(cold, hot)
    assert report.crossed
    assert report.refined == "interpolation"
    assert report.t_cross == pytest.approx(np.log(1.8) / 0.5, rel=1e-3)


def test_parallel_curves_do_not_cross():
    grid = TimeGrid.linear(10.0, 200)
    cold = exponential_trajectory(grid, 1.0, 0.7)
    hot = exponential_trajectory(grid, 0.5, 0.7)
    report = detect_crossing(cold, hot)
    assert not report.crossed
    assert report.t_cross is None


def test_crossing_requires_matching_grids_and_ordering():
    cold = exponential_trajectory(TimeGrid.linear(10.0, 100), 0.9, 1.0)
    hot = exponential_trajectory(TimeGrid.linear(10.0, 101), 0.5, 0.5)
    with pytest.raises(ValidationError):
        detect_crossing(cold, hot)
    grid = TimeGrid.linear(10.0, 100)
    with pytest.raises(ValidationError):
        detect_crossing(exponential_trajectory(grid, 0.5, 0.5), exponential_trajectory(grid, 0.9, 1.0))


def test_crossing_persistence_filter_suppresses_single_point_flips():
    grid = TimeGrid.linear(5.0, 50)
    g = np.full(len(grid.points), 0.1)
    g[10] = -1e-6  # single-point dip, no persistent sign change
    cold = Trajectory(grid=grid, distances=1.0 + g)
    hot = Trajectory(grid=grid, distances=np.ones(len(grid.points)))
    report = detect_crossing(cold, hot)
    assert not report.crossed


def test_noise_floor_margin_reported_as_zero():
    grid = TimeGrid.linear(5.0, 50)
    cold = Trajectory(grid=grid, distances=np.full(51, 1.0 + 1e-13) * np.exp(-grid.points))
    hot = Trajectory(grid=grid, distances=np.exp(-grid.points))
    cold.distances[0] = hot.distances[0] + 1.0  # satisfy ordering at t=0
    report = detect_crossing(cold, hot)
    assert not report.crossed
    assert report.margin == 0.0


def test_crossing_label_swap_consistency():
    grid = TimeGrid.linear(10.0, 400)
    a = exponential_trajectory(grid, 0.9, 1.0)
    b = exponential_trajectory(grid, 0.5, 0.5)
    forward = detect_crossing(a, b)
    # After the crossing, b sits above a; restarting the comparison from
    # a later origin with roles swapped finds no further crossing.
    shift = np.searchsorted(grid.points, forward.t_cross) + 4
    tail = TimeGrid(np.concatenate([[0.0], grid.points[shift:] - grid.points[shift] + 1e-3]), "linear")
    swapped = detect_crossing(
        Trajectory(grid=tail, distances=b.distances[shift - 1 :]),
        Trajectory(grid=tail, distances=a.distances[shift - 1 :]),
    )
    assert not swapped.crossed


def test_crossing_report_field_consistency():
    with pytest.raises(ValidationError):
        CrossingReport(crossed=True, t_cross=None, margin=0.0)
    with pytest.raises(ValidationError):
        CrossingReport(crossed=False, t_cross=1.0, margin=0.0)
    with pytest.raises(ValidationError):
        CrossingReport(crossed=True, t_cross=-1.0, margin=0.0)


def test_aggregate_verdict_classes():
    grid = TimeGrid.linear(10.0, 400)
    cold = exponential_trajectory(grid, 0.9, 1.0)
    crossing_hot = exponential_trajectory(grid, 0.5, 0.5)
    parallel_hot = exponential_trajectory(grid, 0.45, 1.0)
    temps = (TemperatureSpec.finite(1.0), TemperatureSpec.finite(2.0))

    strong = aggregate_verdict(cold, {"1.0": crossing_hot, "2.0": crossing_hot}, temps)
    assert strong.qme_class == "strong"
    weak = aggregate_verdict(cold, {"1.0": crossing_hot, "2.0": parallel_hot}, temps)
    assert weak.qme_class == "weak"
    none_v = aggregate_verdict(cold, {"1.0": parallel_hot, "2.0": parallel_hot}, temps)
    assert none_v.qme_class == "none"


def test_aggregate_verdict_drops_misordered_states():
    grid = TimeGrid.linear(10.0, 100)
    cold = exponential_trajectory(grid, 0.5, 1.0)
    too_far = exponential_trajectory(grid, 0.9, 1.0)
    ok = exponential_trajectory(grid, 0.25, 1.0)
    verdict = aggregate_verdict(cold, {"bad": too_far, "ok": ok}, (TemperatureSpec.finite(1.0),))
    assert verdict.dropped == ("bad",)
    assert set(verdict.reports) == {"ok"}
    with pytest.raises(ValidationError):
        aggregate_verdict(cold, {"bad": too_far}, (TemperatureSpec.finite(1.0),))


def test_classify_small_chain_strong_at_isotropic_point():
    spec = HamiltonianSpec.xxz(6, 1.0, boundary="periodic")
    diss = DissipationSpec.uniform(1.0, 6)
    verdict = classify_qme(
        spec, 3, diss, TemperatureSpec.zero_plus(), [TemperatureSpec.finite(1.0)], method="spectral"
    )
    assert verdict.qme_class == "strong"
    report = verdict.reports["1.0"]
    assert report.crossed and report.t_cross > 0


def test_classify_spectral_and_integrator_agree():
    spec = HamiltonianSpec.xxz(6, 1.0, boundary="periodic")
    diss = DissipationSpec.uniform(1.0, 6)
    hot = [TemperatureSpec.finite(1.0), TemperatureSpec.finite(10.0)]
    spectral = classify_qme(spec, 3, diss, TemperatureSpec.zero_plus(), hot, method="spectral")
    integrated = classify_qme(
        spec, 3, diss, TemperatureSpec.zero_plus(), hot, method="integrate", t_max=100.0
    )
    for label in ("1.0", "10.0"):
        assert spectral.reports[label].crossed == integrated.reports[label].crossed
        assert spectral.reports[label].t_cross == pytest.approx(
            integrated.reports[label].t_cross, rel=1e-3
        )


def test_classify_requires_comparison_temperatures():
    spec = HamiltonianSpec.xxz(4, 1.0, boundary="periodic")
    with pytest.raises(ValidationError):
        classify_qme(spec, 2, DissipationSpec.uniform(1.0, 4), TemperatureSpec.zero_plus(), [])


def test_overlap_spectrum_of_steady_state():
    basis = enumerate_sector(4, 2)
    ham = build_hamiltonian(HamiltonianSpec.xxz(4, 1.0, boundary="periodic"), basis)
    diss = DissipationSpec.uniform(1.0, 4)
    spectrum = spectral_decomposition(build_superoperator(ham, diss, basis))
    rho_ss = spectrum.steady_state()
    coeffs = np.abs(spectrum.coefficients(rho_ss))
    assert coeffs[0] == pytest.approx(1.0, abs=1e-10)
    assert coeffs[1:].max() <= 1e-10


def test_overlap_spectrum_single_qubit_coherence_modes():
    basis = full_space(1)
    ham = build_hamiltonian(HamiltonianSpec.xxz(1, 1.0, boundary="open"), basis)
    diss = DissipationSpec.uniform(1.0, 1)
    spectrum = spectral_decomposition(build_superoperator(ham, diss, basis))
    plus = np.full((2, 2), 0.5, dtype=complex)
    overlaps = overlap_spectrum(spectrum, plus)
    # Weight sits on the stationary sector (indices 1-2) and the two
    # coherence modes at lambda = -1/2 (indices 3-4).
    assert overlaps.first_slow_index in (3, 4)
    assert overlaps.rate_eigenvalue == pytest.approx(-0.5 + 0j, abs=1e-10)
    decaying = np.abs(spectrum.eigenvalues) > 1e-10
    assert np.abs(overlaps.weights[decaying] > 1e-10).sum() == 2


def test_overlap_zero_temperature_couples_deeper_than_finite(capsys):
    basis = enumerate_sector(6, 3)
    ham = build_hamiltonian(HamiltonianSpec.xxz(6, 1.0, boundary="periodic"), basis)
    eigendecompose(ham)
    diss = DissipationSpec.uniform(1.0, 6)
    spectrum = spectral_decomposition(build_superoperator(ham, diss, basis))
    cold = overlap_spectrum(spectrum, thermal_state(ham, TemperatureSpec.zero_plus()))
    for t in (1.0, 10.0, 100.0):
        hot = overlap_spectrum(spectrum, thermal_state(ham, TemperatureSpec.finite(t)))
        assert cold.first_slow_index > hot.first_slow_index
        assert hot.reconstruction_residual <= 1e-8
    assert cold.reconstruction_residual <= 1e-8


def test_delta_sweep_mechanics_and_intervals():
    result = delta_window_sweep(
        [4], [1.0], np.array([0.8, 1.0, 1.2]), method="spectral", t_max=60.0
    )
    assert len(result.rows) == 3
    for row in result.rows:
        assert row.verdict in ("strong", "weak", "none", "error")
        assert row.temperature == "1.0"
    widths = result.interval_width(4, "1.0")
    assert widths >= 0.0


def test_delta_sweep_empty_range_rejected():
    with pytest.raises(ValidationError):
        delta_window_sweep([4], [1.0], np.array([]))


def test_j1j2_zero_ratio_reduces_to_xxz():
    ratios = [0.0]
    temps = [1.0]
    sweep = j1j2_sweep(ratios, temps, 6, delta=1.0, method="spectral")
    xxz = classify_qme(
        HamiltonianSpec.xxz(6, 1.0, boundary="periodic"),
        3,
        DissipationSpec.uniform(1.0, 6),
        TemperatureSpec.zero_plus(),
        [TemperatureSpec.finite(1.0)],
        method="spectral",
    )
    row = sweep.rows[0]
    assert row.verdict == xxz.qme_class
    assert row.crossed == xxz.reports["1.0"].crossed
    assert row.t_cross == pytest.approx(xxz.reports["1.0"].t_cross, rel=1e-6)


def test_sweep_records_per_point_failures():
    # num_sites=2 periodic with next-nearest bonds is degenerate
    # geometry; the sweep must record the failure and keep going.
    result = j1j2_sweep([-0.25], [1.0], 2, delta=1.0, method="spectral")
    assert result.rows[0].verdict == "error"
    assert result.rows[0].error
