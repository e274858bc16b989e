"""Figure rendering for run directories.

All plots are drawn from the CSV artifacts (not in-memory state), so a run
directory can be re-plotted at any time. Figures are written next to the
delimited output in a figures/ subdirectory; the default format is PDF with
the creation date stripped so artifacts stay byte-reproducible.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np


def _savefig(fig, path: Path, fmt: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    metadata = {"CreationDate": None} if fmt in ("pdf", "svg") else None
    # stem may contain dots (jx values), so append rather than with_suffix
    fig.savefig(path.parent / f"{path.name}.{fmt}", metadata=metadata)
    plt.close(fig)


def _load_series(path: Path) -> dict:
    data = np.genfromtxt(path, delimiter=",", names=True)
    return {name: np.atleast_1d(data[name]) for name in data.dtype.names}


def render_stats_figure(run_dir: Path, fmt: str = "pdf") -> None:
    """Coupling statistics vs jx: mean |B_bar| and variance with error bars."""
    stats_path = run_dir / "stats_vs_jx.csv"
    if not stats_path.exists():
        return
    data = np.genfromtxt(stats_path, delimiter=",", names=True)
    jx = np.atleast_1d(data["jx"])
    fig, (ax_b, ax_c) = plt.subplots(2, 1, figsize=(5.0, 6.0), sharex=True)
    ax_b.errorbar(jx, np.atleast_1d(data["mean_abs_bbar"]),
                  yerr=np.atleast_1d(data["stderr_bbar"]), marker="o")
    ax_b.set_ylabel(r"mean $|\bar{B}|$")
    ax_c.errorbar(jx, np.atleast_1d(data["mean_c"]),
                  yerr=np.atleast_1d(data["stderr_c"]), marker="s", color="tab:red")
    ax_c.set_ylabel("mean $C$")
    ax_c.set_xlabel(r"$J_x$")
    fig.tight_layout()
    _savefig(fig, run_dir / "figures" / "stats_vs_jx", fmt)


def render_experiment_figures(run_dir, config) -> None:
    """Render all standard figures for a completed experiment directory."""
    run_dir = Path(run_dir)
    fmt = config.figure_format
    render_stats_figure(run_dir, fmt)

    series_dir = run_dir / "series"
    for engine in config.engines:
        fig, (ax_p, ax_f) = plt.subplots(2, 1, figsize=(6.0, 6.5), sharex=True)
        plotted = False
        for jx in config.jx_list:
            path = series_dir / f"jx{jx:.3f}_r000_{engine}.csv"
            if not path.exists():
                continue
            data = _load_series(path)
            ax_p.plot(data["t"], data["purity"], label=rf"$J_x={jx:g}$", lw=0.9)
            ax_f.plot(data["t"], data["fidelity"], lw=0.9)
            plotted = True
        if not plotted:
            plt.close(fig)
            continue
        ax_p.set_ylabel(r"purity $\mathcal{P}(t)$")
        ax_f.set_ylabel(r"fidelity $\mathcal{F}(t)$")
        ax_f.set_xlabel(r"$t\ (\hbar/\epsilon)$")
        ax_p.legend(fontsize=8, ncol=2)
        ax_p.set_title(engine)
        fig.tight_layout()
        _savefig(fig, run_dir / "figures" / f"purity_fidelity_{engine}", fmt)

    overlay_engines = [e for e in ("exact", "nmme", "markovian") if e in config.engines]
    if len(overlay_engines) >= 2:
        styles = {"exact": dict(ls="-", lw=1.0), "nmme": dict(ls="", marker=".", ms=2.5),
                  "markovian": dict(ls="--", lw=0.9)}
        for jx in config.jx_list:
            fig, (ax_pop, ax_coh) = plt.subplots(2, 1, figsize=(6.0, 6.5), sharex=True)
            plotted = False
            for engine in overlay_engines:
                path = series_dir / f"jx{jx:.3f}_r000_{engine}.csv"
                if not path.exists():
                    continue
                data = _load_series(path)
                st = styles[engine]
                ax_pop.plot(data["t"], data["pop0"], color="tab:blue", **st,
                            label=f"{engine} " + r"$\rho_{00}$")
                ax_pop.plot(data["t"], data["pop1"], color="k", **st)
                ax_coh.plot(data["t"], data["coh_re"], color="tab:green", **st,
                            label=f"{engine} " + r"Re$\,\rho_{01}$")
                ax_coh.plot(data["t"], data["coh_im"], color="tab:red", **st)
                plotted = True
            if not plotted:
                plt.close(fig)
                continue
            ax_pop.set_ylabel("populations")
            ax_coh.set_ylabel("coherences")
            ax_coh.set_xlabel(r"$t\ (\hbar/\epsilon)$")
            ax_pop.legend(fontsize=8)
            ax_coh.legend(fontsize=8)
            ax_pop.set_title(rf"$J_x={jx:g}$")
            fig.tight_layout()
            _savefig(fig, run_dir / "figures" / f"overlay_jx{jx:.3f}", fmt)


def render_estimation_figure(run_dir, config) -> None:
    """Fidelity trace of the estimation target run with the stats figure."""
    run_dir = Path(run_dir)
    fmt = config.figure_format
    render_stats_figure(run_dir, fmt)
    series_path = run_dir / "target_series.csv"
    if not series_path.exists():
        return
    data = _load_series(series_path)
    fig, ax = plt.subplots(figsize=(6.5, 3.5))
    ax.plot(data["t"], data["fidelity"], lw=0.8)
    ax.set_xlabel(r"$t\ (\hbar/\epsilon)$")
    ax.set_ylabel(r"fidelity $\mathcal{F}(t)$")
    fig.tight_layout()
    _savefig(fig, run_dir / "figures" / "target_fidelity", fmt)
