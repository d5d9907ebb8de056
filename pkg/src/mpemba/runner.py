"""Command pipelines: orchestration plus bit-stable result emission.

CSV cells hold the shortest round-trip representation of each double, so
identical configs produce identical CSV bytes; wall-clock information is
confined to JSON sidecars.  Every emitted file is listed with a content
checksum in ``manifest.json``.
"""

from __future__ import annotations

import hashlib
import json
import logging
import time
from dataclasses import asdict, dataclass
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from .analysis import (
    aggregate_verdict,
    delta_window_sweep,
    evolve_thermal_trajectories,
    j1j2_sweep,
    overlap_spectrum,
)
from .config import COMMANDS, RunConfig, config_hash
from .errors import ValidationError
from .hamiltonian import HamiltonianSpec, build_hamiltonian
from .liouvillian import DissipationSpec, build_superoperator, spectral_decomposition
from .propagation import TimeGrid
from .sector import enumerate_sector, full_space
from .thermal import thermal_state

logger = logging.getLogger(__name__)


@dataclass
class ResultRecord:
    command: str
    config_hash: str
    timings: dict[str, float]
    outputs: list[dict]


def fmt(value) -> str:
    """Shortest round-trip cell representation."""
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def write_csv(path: Path, header: list[str], rows: list[list]) -> None:
    with open(path, "w", newline="\n") as handle:
        handle.write(",".join(header) + "\n")
        for row in rows:
            handle.write(",".join(fmt(cell) for cell in row) + "\n")


def write_json(path: Path, payload: dict) -> None:
    with open(path, "w", newline="\n") as handle:
        json.dump(payload, handle, indent=2, sort_keys=True)
        handle.write("\n")


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _model_spec(config: RunConfig) -> HamiltonianSpec:
    return HamiltonianSpec(
        j1=config.j1,
        j2=config.j2,
        delta1=config.delta1,
        delta2=config.delta2,
        boundary=config.boundary,
        num_sites=config.num_sites,
    )


def _basis(config: RunConfig):
    num_up = config.resolved_num_up()
    if num_up == "all":
        return full_space(config.num_sites)
    return enumerate_sector(config.num_sites, num_up)


def _model_metadata(config: RunConfig) -> dict:
    return {
        "model": config.model,
        "j1": config.j1,
        "j2": config.j2,
        "delta1": config.delta1,
        "delta2": config.delta2,
        "num_sites": config.num_sites,
        "boundary": config.boundary,
        "num_up": config.resolved_num_up(),
        "gammas": list(config.gamma_list()),
        "method": config.method,
        "rtol": config.rtol,
        "seed": config.seed,
    }


def _dump_modes(path: Path, dim_rho: int, modes: np.ndarray) -> None:
    """Binary layout: uint64 d, then one row-major complex128 (d, d) block per mode."""
    with open(path, "wb") as handle:
        np.array([dim_rho], dtype="<u8").tofile(handle)
        for n in range(modes.shape[1]):
            modes[:, n].reshape((dim_rho, dim_rho), order="F").astype("<c16").tofile(handle)


def _spectral_setup(config: RunConfig):
    basis = _basis(config)
    ham = build_hamiltonian(_model_spec(config), basis)
    diss = DissipationSpec(config.gamma_list())
    superop = build_superoperator(ham, diss, basis)
    return basis, ham, diss, spectral_decomposition(superop)


def _cmd_spectrum(config: RunConfig, out: Path) -> list[Path]:
    _, _, _, spectrum = _spectral_setup(config)
    files = [out / "spectrum.csv"]
    write_csv(
        files[0],
        ["n", "re_lambda", "im_lambda"],
        [[n + 1, lam.real, lam.imag] for n, lam in enumerate(spectrum.eigenvalues)],
    )
    if "modes" in config.formats:
        for name, block in (("modes_right.bin", spectrum.right), ("modes_left.bin", spectrum.left)):
            _dump_modes(out / name, spectrum.dim_rho, block)
            files.append(out / name)
    if "png" in config.formats:
        from . import plots

        figure = out / "spectrum.png"
        plots.save_spectrum_figure(str(figure), spectrum.eigenvalues)
        files.append(figure)
    return files


def _trajectories(config: RunConfig, temps):
    grid = None
    if config.t_max is not None:
        grid = TimeGrid.logarithmic(config.t_max, config.grid_points)
    return evolve_thermal_trajectories(
        _model_spec(config),
        config.resolved_num_up(),
        DissipationSpec(config.gamma_list()),
        temps,
        method=config.method,
        grid=grid,
        rtol=config.rtol,
    )


def _cmd_evolve(config: RunConfig, out: Path) -> list[Path]:
    trajectories, _ = _trajectories(config, [config.cold])
    traj = trajectories[config.cold.label()]
    files = [out / "trajectory.csv", out / "trajectory_meta.json"]
    write_csv(files[0], ["t", "D"], list(map(list, zip(traj.grid.points, traj.distances))))
    write_json(
        files[1],
        {
            **_model_metadata(config),
            "temperature": config.cold.label(),
            "trajectory_method": traj.metadata.get("method"),
            "trace_drift": traj.trace_drift,
            "hermiticity_drift": traj.herm_drift,
            "created_utc": datetime.now(timezone.utc).isoformat(),
        },
    )
    if "png" in config.formats:
        from . import plots

        figure = out / "trajectory.png"
        plots.save_trajectory_figure(
            str(figure), traj.grid.points, {config.cold.label(): traj.distances}
        )
        files.append(figure)
    return files


def _cmd_classify(config: RunConfig, out: Path) -> list[Path]:
    if not config.hot:
        raise ValidationError("classify needs a nonempty initial.hot grid")
    trajectories, _ = _trajectories(config, [config.cold, *config.hot])
    cold_traj = trajectories[config.cold.label()]
    hot_trajs = {t.label(): trajectories[t.label()] for t in config.hot}
    verdict = aggregate_verdict(cold_traj, hot_trajs, tuple(config.hot))

    pts = cold_traj.grid.points
    labels = [config.cold.label(), *hot_trajs.keys()]
    files = [out / "trajectories.csv", out / "crossings.csv", out / "verdict.json"]
    write_csv(
        files[0],
        ["t"] + [f"D[T={label}]" for label in labels],
        [[pts[k]] + [trajectories[label].distances[k] for label in labels] for k in range(len(pts))],
    )
    write_csv(
        files[1],
        ["temperature", "crossed", "t_cross", "margin"],
        [
            [label, report.crossed, report.t_cross, report.margin]
            for label, report in verdict.reports.items()
        ],
    )
    write_json(
        files[2],
        {
            **_model_metadata(config),
            "class": verdict.qme_class,
            "cold": config.cold.label(),
            "temperatures": [t.label() for t in verdict.temperatures],
            "dropped": list(verdict.dropped),
            "reports": {label: asdict(report) for label, report in verdict.reports.items()},
            "created_utc": datetime.now(timezone.utc).isoformat(),
        },
    )
    if "png" in config.formats:
        from . import plots

        figure = out / "classify.png"
        plots.save_trajectory_figure(
            str(figure),
            pts,
            {label: trajectories[label].distances for label in labels},
            crossings={label: r.t_cross for label, r in verdict.reports.items()},
            title=f"verdict: {verdict.qme_class}",
        )
        files.append(figure)
    return files


def _cmd_overlaps(config: RunConfig, out: Path) -> list[Path]:
    basis, ham, _, spectrum = _spectral_setup(config)
    ham.eigensystem()
    temps = [config.cold, *config.hot]
    rows = []
    summary = {}
    weights_by_label = {}
    for temp in temps:
        rho0 = thermal_state(ham, temp)
        overlaps = overlap_spectrum(spectrum, rho0)
        weights_by_label[temp.label()] = overlaps.weights
        summary[temp.label()] = {
            "first_slow_index": overlaps.first_slow_index,
            "rate_re": overlaps.rate_eigenvalue.real,
            "rate_im": overlaps.rate_eigenvalue.imag,
            "steady_weight": overlaps.steady_weight,
            "reconstruction_residual": overlaps.reconstruction_residual,
        }
        for n, weight in enumerate(overlaps.weights, start=1):
            rows.append([temp.label(), n, spectrum.eigenvalues[n - 1].real, weight])
    files = [out / "overlaps.csv", out / "overlaps.json"]
    write_csv(files[0], ["temperature", "n", "re_lambda", "weight"], rows)
    write_json(
        files[1],
        {
            **_model_metadata(config),
            "states": summary,
            "created_utc": datetime.now(timezone.utc).isoformat(),
        },
    )
    if "png" in config.formats:
        from . import plots

        figure = out / "overlaps.png"
        plots.save_overlap_figure(str(figure), weights_by_label)
        files.append(figure)
    return files


_SWEEP_HEADER = ["L", "delta", "J2_over_J1", "T", "gamma", "boundary", "crossed", "t_cross", "verdict"]


def _sweep_rows(result) -> list[list]:
    return [
        [
            row.num_sites,
            row.delta,
            row.ratio,
            row.temperature,
            row.gamma,
            row.boundary,
            row.crossed,
            row.t_cross,
            row.verdict,
        ]
        for row in result.rows
    ]


def _sweep_gamma(config: RunConfig) -> float:
    if isinstance(config.gammas, tuple):
        raise ValidationError("sweeps take a scalar dissipation.gamma (uniform across sites and sizes)")
    return float(config.gammas)


def _cmd_sweep_delta(config: RunConfig, out: Path, jobs: int) -> list[Path]:
    if config.sweep_delta_stop < config.sweep_delta_start:
        raise ValidationError("sweep.delta_stop must not be below sweep.delta_start")
    count = int(round((config.sweep_delta_stop - config.sweep_delta_start) / config.sweep_delta_step)) + 1
    deltas = config.sweep_delta_start + config.sweep_delta_step * np.arange(count)
    result = delta_window_sweep(
        list(config.sweep_sizes),
        list(config.sweep_temperatures),
        deltas,
        gamma=_sweep_gamma(config),
        boundary=config.boundary,
        cold_kind=config.cold.kind,
        method=config.sweep_method,
        t_max=config.sweep_t_max,
        rtol=config.rtol,
        jobs=jobs,
    )
    files = [out / "sweep.csv", out / "intervals.json"]
    write_csv(files[0], _SWEEP_HEADER, _sweep_rows(result))
    write_json(
        files[1],
        {
            **_model_metadata(config),
            "intervals": [
                {
                    "L": iv.num_sites,
                    "T": iv.temperature,
                    "lo": iv.lo,
                    "hi": iv.hi,
                }
                for iv in result.intervals
            ],
            "widths": {
                f"L={ns},T={t}": result.interval_width(ns, t)
                for ns in {iv.num_sites for iv in result.intervals}
                for t in {iv.temperature for iv in result.intervals}
            },
            "created_utc": datetime.now(timezone.utc).isoformat(),
        },
    )
    if "png" in config.formats and result.intervals:
        from . import plots

        figure = out / "sweep_delta.png"
        plots.save_delta_window_figure(str(figure), result.intervals)
        files.append(figure)
    return files


def _cmd_sweep_j1j2(config: RunConfig, out: Path, jobs: int) -> list[Path]:
    if not config.sweep_ratios:
        raise ValidationError("sweep.ratios is empty")
    result = j1j2_sweep(
        list(config.sweep_ratios),
        list(config.sweep_temperatures),
        config.num_sites,
        delta=config.delta1,
        gamma=_sweep_gamma(config),
        boundary=config.boundary,
        cold_kind=config.cold.kind,
        method=config.sweep_method,
        t_max=config.sweep_t_max,
        rtol=config.rtol,
        jobs=jobs,
    )
    verdicts = {}
    for row in result.rows:
        verdicts.setdefault(repr(row.ratio), row.verdict)
    files = [out / "sweep.csv", out / "verdicts.json"]
    write_csv(files[0], _SWEEP_HEADER, _sweep_rows(result))
    write_json(
        files[1],
        {
            **_model_metadata(config),
            "verdicts": verdicts,
            "created_utc": datetime.now(timezone.utc).isoformat(),
        },
    )
    if "png" in config.formats:
        from . import plots

        figure = out / "sweep_j1j2.png"
        ratios = [float(r) for r in verdicts]
        plots.save_ratio_verdict_figure(str(figure), ratios, list(verdicts.values()))
        files.append(figure)
    return files


def run_command(command: str, config: RunConfig, *, out_dir: str | None = None, jobs: int = 1) -> ResultRecord:
    """Execute one CLI command and emit its artifacts plus the manifest."""
    if command not in COMMANDS:
        raise ValidationError(f"unknown command {command!r}; known: {COMMANDS}")
    out = Path(out_dir if out_dir is not None else config.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    started = time.perf_counter()
    if command == "spectrum":
        files = _cmd_spectrum(config, out)
    elif command == "evolve":
        files = _cmd_evolve(config, out)
    elif command == "classify":
        files = _cmd_classify(config, out)
    elif command == "overlaps":
        files = _cmd_overlaps(config, out)
    elif command == "sweep-delta":
        files = _cmd_sweep_delta(config, out, jobs)
    else:
        files = _cmd_sweep_j1j2(config, out, jobs)
    elapsed = time.perf_counter() - started

    record = ResultRecord(
        command=command,
        config_hash=config_hash(config),
        timings={"total_seconds": elapsed},
        outputs=[
            {"path": f.name, "sha256": _sha256(f), "bytes": f.stat().st_size}
            for f in files
        ],
    )
    manifest = out / "manifest.json"
    write_json(
        manifest,
        {
            "command": record.command,
            "config_hash": record.config_hash,
            "timings": record.timings,
            "outputs": record.outputs,
            "created_utc": datetime.now(timezone.utc).isoformat(),
        },
    )
    logger.info("%s: wrote %d files to %s in %.2fs", command, len(files) + 1, out, elapsed)
    return record
