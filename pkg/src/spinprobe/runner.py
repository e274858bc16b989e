"""Experiment orchestration: simulation jobs, CSV/manifest persistence, figures.

A campaign fans out independent (engine, jx, realization) jobs, writes one
time-series CSV per job plus a summary CSV, a coupling-statistics table and
overlay figures, and records every job's outcome in a manifest. All floats
are serialized with repr so identical configs reproduce identical bytes.
"""

from __future__ import annotations

import csv
import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .config import ExperimentConfig, sample_realization
from .errors import ConfigError, NumericalError
from .exact import initial_detector_state, propagate_exact
from .master_equation import MemoryKernel, MESolverConfig, solve_markovian, solve_master_equation
from .observables import ObservableSeries, estimate_bbar, estimate_jx, extract_period
from .thermal import (
    CouplingStatsTable,
    bath_statistics,
    coupling_frequency_spread,
    diagonalize_bath,
)
from .operators import build_bath_coupling

#: Kernel rate used when the bath gives no frequency scale (zero coupling).
FALLBACK_KERNEL_RATE = 1.0


def _fmt(value) -> str:
    """Full-precision, round-trippable text for CSV cells."""
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def write_csv(path: Path, header, rows) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


def write_series_csv(path: Path, series: ObservableSeries) -> None:
    rows = zip(
        series.times, series.pop0, series.pop1,
        series.coh_re, series.coh_im, series.purity, series.fidelity,
    )
    write_csv(path, ObservableSeries.COLUMNS, rows)


def read_series_csv(path) -> ObservableSeries:
    data = np.genfromtxt(path, delimiter=",", names=True)
    return ObservableSeries(
        times=np.atleast_1d(data["t"]),
        pop0=np.atleast_1d(data["pop0"]),
        pop1=np.atleast_1d(data["pop1"]),
        coh_re=np.atleast_1d(data["coh_re"]),
        coh_im=np.atleast_1d(data["coh_im"]),
        purity=np.atleast_1d(data["purity"]),
        fidelity=np.atleast_1d(data["fidelity"]),
    )


def write_stats_csv(path: Path, table: CouplingStatsTable) -> None:
    write_csv(path, CouplingStatsTable.COLUMNS, table.rows())


def read_stats_csv(path) -> CouplingStatsTable:
    data = np.genfromtxt(path, delimiter=",", names=True)
    return CouplingStatsTable(
        jx=np.atleast_1d(data["jx"]),
        mean_abs_bbar=np.atleast_1d(data["mean_abs_bbar"]),
        mean_c=np.atleast_1d(data["mean_c"]),
        stderr_bbar=np.atleast_1d(data["stderr_bbar"]),
        stderr_c=np.atleast_1d(data["stderr_c"]),
        realizations=0,
    )


def kernel_rates(config: ExperimentConfig, spread: float) -> tuple[float, float]:
    """Kernel rates from config, else from the bath transition spread."""
    if config.p is not None:
        return float(config.p), float(config.q)
    if spread <= 0.0:
        return FALLBACK_KERNEL_RATE, FALLBACK_KERNEL_RATE
    return 2.0 * spread, 2.0 * spread


@dataclass(frozen=True)
class RunResult:
    """One job's observables and scalar summary values."""

    jx: float
    realization: int
    engine: str
    b_bar: float
    c_var: float
    p: float
    q: float
    series: ObservableSeries
    purity_final: float
    rabi_period: float
    fidelity_period: float


def simulate_run(
    config: ExperimentConfig,
    jx: float,
    stream: int,
    engine: str,
    t_final: float | None = None,
    dt: float | None = None,
) -> RunResult:
    """Sample a realization and run one engine over the requested horizon."""
    if engine not in ("exact", "nmme", "markovian"):
        raise ConfigError(f"unknown engine {engine!r}")
    horizon = config.t_final_short if t_final is None else t_final
    step = config.dt if dt is None else dt
    t_grid = np.arange(0.0, horizon + 0.5 * step, step)

    model = sample_realization(config, jx, stream)
    spectrum = diagonalize_bath(model, n_cut=config.n_cut, kT=config.kT)
    coupling = build_bath_coupling(model)
    stats = bath_statistics(spectrum, coupling)
    spread = coupling_frequency_spread(spectrum, coupling)
    p, q = kernel_rates(config, spread)

    if engine == "exact":
        rhos = propagate_exact(model, spectrum, t_grid, backend=config.backend)
    else:
        kernel = MemoryKernel(p=p, q=q, n_grid=config.n_grid, dt=config.dt)
        solver_config = MESolverConfig(
            b_bar=stats.b_bar,
            c_var=stats.c_var,
            b0z=config.b0z,
            kernel=kernel,
            mode="markovian" if engine == "markovian" else "non_markovian",
            tau_b=config.tau_b,
        )
        solve = solve_markovian if engine == "markovian" else solve_master_equation
        rhos = solve(solver_config, initial_detector_state(), t_grid)

    series = ObservableSeries.from_densities(t_grid, rhos, config.b0z)

    def try_period(channel: str) -> float:
        try:
            return extract_period(series, channel)
        except NumericalError:
            return float("nan")

    return RunResult(
        jx=float(jx),
        realization=stream,
        engine=engine,
        b_bar=stats.b_bar,
        c_var=stats.c_var,
        p=p,
        q=q,
        series=series,
        purity_final=float(series.purity[-1]),
        rabi_period=try_period("pop0"),
        fidelity_period=try_period("fidelity"),
    )


def _job_worker(args):
    config_dict, jx, stream, engine = args
    config = ExperimentConfig.from_dict(config_dict)
    return simulate_run(config, jx, stream, engine)


def _series_filename(jx: float, stream: int, engine: str) -> str:
    return f"jx{jx:.3f}_r{stream:03d}_{engine}.csv"


def run_experiment(config: ExperimentConfig, out_dir) -> Path:
    """Run the configured campaign and write all artifacts under out_dir.

    Produces config.json, stats_vs_jx.csv, one series CSV per job under
    series/, summary.csv, manifest.json and overlay figures under figures/.
    Job failures are recorded in the manifest without aborting the rest.
    """
    config.validate()
    out = Path(out_dir)
    (out / "series").mkdir(parents=True, exist_ok=True)
    config.to_file(out / "config.json")

    stats_n = config.stats_realizations or config.realizations
    table = statistics_table(config, stats_n)
    write_stats_csv(out / "stats_vs_jx.csv", table)

    jobs = [
        (jx, stream, engine)
        for engine in config.engines
        for jx in config.jx_list
        for stream in range(config.realizations)
    ]
    results: dict[tuple, RunResult | Exception] = {}
    if config.workers > 1:
        payload = [(config.to_dict(), jx, stream, engine) for jx, stream, engine in jobs]
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            futures = {
                job: pool.submit(_job_worker, args) for job, args in zip(jobs, payload)
            }
        for job, future in futures.items():
            exc = future.exception()
            results[job] = exc if exc is not None else future.result()
    else:
        for job in jobs:
            jx, stream, engine = job
            try:
                results[job] = simulate_run(config, jx, stream, engine)
            except (NumericalError, ConfigError) as exc:
                results[job] = exc

    manifest_jobs = []
    summary_rows = []
    for job in jobs:
        jx, stream, engine = job
        outcome = results[job]
        entry = {"engine": engine, "jx": jx, "realization": stream}
        if isinstance(outcome, Exception):
            entry["status"] = "error"
            entry["error"] = str(outcome)
        else:
            filename = _series_filename(jx, stream, engine)
            write_series_csv(out / "series" / filename, outcome.series)
            entry["status"] = "ok"
            entry["series_file"] = f"series/{filename}"
            summary_rows.append(
                (
                    outcome.jx, outcome.realization, outcome.engine,
                    outcome.b_bar, outcome.c_var, outcome.purity_final,
                    outcome.rabi_period, outcome.fidelity_period,
                )
            )
        manifest_jobs.append(entry)

    write_csv(
        out / "summary.csv",
        ("jx", "realization", "engine", "b_bar", "c_var", "purity_final",
         "rabi_period", "fidelity_period"),
        summary_rows,
    )
    manifest = {
        "schema_version": 1,
        "package_version": __version__,
        "jobs": manifest_jobs,
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")

    from . import plots  # deferred: matplotlib import is slow

    plots.render_experiment_figures(out, config)
    return out


def statistics_table(config: ExperimentConfig, realizations: int) -> CouplingStatsTable:
    """Disorder-averaged coupling statistics on the configured jx grid."""

    def sampler(jx, stream):
        return sample_realization(config, jx, stream)

    from .thermal import statistics_vs_jx

    return statistics_vs_jx(
        sampler, config.jx_list, realizations, n_cut=config.n_cut, kT=config.kT
    )


@dataclass(frozen=True)
class EstimationReport:
    """Outcome of the period -> B_bar -> jx estimation pipeline."""

    target_jx: float
    engine: str
    outcome: str
    fidelity_period: float | None
    b_bar_estimate: float | None
    b_bar_small_shift: float | None
    b_bar_thermal: float
    jx_estimate: float | None
    jx_band_stderr: tuple | None
    jx_band_scatter: tuple | None
    table_realizations: int
    detail: str = ""

    def to_dict(self) -> dict:
        data = asdict(self)
        data["jx_band_stderr"] = list(self.jx_band_stderr) if self.jx_band_stderr else None
        data["jx_band_scatter"] = list(self.jx_band_scatter) if self.jx_band_scatter else None
        return data


def _invert_with_band(
    b_value: float, sigma: float, table: CouplingStatsTable
) -> tuple[float, tuple]:
    """Interpolate jx at b_value and at b_value +- sigma (clipped to range)."""
    knots = table.mean_abs_bbar
    estimate = estimate_jx(b_value, table)
    lo = float(np.interp(max(abs(b_value) - sigma, knots[0]), knots, table.jx))
    hi = float(np.interp(min(abs(b_value) + sigma, knots[-1]), knots, table.jx))
    return estimate, (lo, hi)


def run_jx_estimation(config: ExperimentConfig, target_jx: float, out_dir) -> EstimationReport:
    """Measure a fresh realization's fidelity period and invert it to jx.

    Builds the inversion table from `realizations` disorder draws, then
    simulates one additional realization (stream index = realizations) at
    target_jx over the long horizon with the configured estimation engine.
    Failure modes (flat fidelity, measured |B_bar| outside the table) are
    reported as outcomes rather than raised.
    """
    config.validate()
    if not (min(config.jx_list) <= target_jx <= max(config.jx_list)):
        raise ConfigError(
            f"target_jx {target_jx} outside the configured jx grid hull"
        )
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    config.to_file(out / "config.json")

    stats_n = config.stats_realizations or config.realizations
    table = statistics_table(config, stats_n)
    write_stats_csv(out / "stats_vs_jx.csv", table)

    dt_out = config.estimation_dt if config.estimation_dt is not None else config.dt
    result = simulate_run(
        config,
        target_jx,
        stream=config.realizations,
        engine=config.estimation_engine,
        t_final=config.t_final_long,
        dt=dt_out,
    )
    write_series_csv(out / "target_series.csv", result.series)

    outcome = "ok"
    detail = ""
    period = None
    bbar_est = None
    bbar_approx = None
    jx_est = None
    band_err = None
    band_scatter = None
    try:
        period = extract_period(result.series, "fidelity")
    except NumericalError as exc:
        outcome = "no_oscillation"
        detail = str(exc)

    if period is not None:
        est = estimate_bbar(period, config.b0z)
        bbar_est = est.exact
        bbar_approx = est.small_shift_approx
        sigma = float(np.interp(est.exact, table.mean_abs_bbar, table.stderr_bbar))
        try:
            jx_est, band_err = _invert_with_band(est.exact, sigma, table)
            _, band_scatter = _invert_with_band(
                est.exact, sigma * np.sqrt(stats_n), table
            )
        except NumericalError as exc:
            outcome = "inversion_failed"
            detail = str(exc)

    report = EstimationReport(
        target_jx=float(target_jx),
        engine=config.estimation_engine,
        outcome=outcome,
        fidelity_period=period,
        b_bar_estimate=bbar_est,
        b_bar_small_shift=bbar_approx,
        b_bar_thermal=result.b_bar,
        jx_estimate=jx_est,
        jx_band_stderr=band_err,
        jx_band_scatter=band_scatter,
        table_realizations=stats_n,
        detail=detail,
    )
    (out / "estimation.json").write_text(json.dumps(report.to_dict(), indent=2) + "\n")

    from . import plots

    plots.render_estimation_figure(out, config)
    return report
