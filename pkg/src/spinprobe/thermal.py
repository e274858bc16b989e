"""Bath diagonalization, the truncated thermal ensemble, and coupling statistics.

The initial bath state is a Boltzmann mixture over the lowest n_cut
eigenstates of the bath Hamiltonian, with populations renormalized over the
retained states only. The canonical mean and variance of the coupling
operator computed from this ensemble feed both the exact propagator and the
master-equation coefficients, so the two engines always share one ensemble.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, NumericalError
from .operators import SpinBathModel, build_bath_coupling, build_bath_hamiltonian

#: Relative tolerance used to detect a degenerate multiplet at the
#: truncation boundary; the cutoff is extended to include the whole multiplet
#: so the ensemble never depends on eigensolver ordering within it.
DEGENERACY_RTOL = 1e-9


@dataclass(frozen=True)
class BathSpectrum:
    """Lowest eigenpairs of the bath Hamiltonian plus thermal populations.

    energies are sorted ascending; states holds the matching eigenvectors as
    columns. populations are Boltzmann weights at temperature kT normalized
    over the retained states. truncation_residual records the Boltzmann
    weight (relative to the full spectrum) carried by the discarded states.
    """

    energies: np.ndarray
    states: np.ndarray
    n_cut: int
    kT: float
    populations: np.ndarray
    truncation_residual: float = field(default=0.0)

    def __post_init__(self):
        for name in ("energies", "states", "populations"):
            arr = np.asarray(getattr(self, name))
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)


@dataclass(frozen=True)
class BathStatistics:
    """Canonical mean and variance of the bath coupling operator."""

    b_bar: float
    c_var: float


def diagonalize_bath(model: SpinBathModel, n_cut: int = 20, kT: float = 0.25) -> BathSpectrum:
    """Diagonalize H_B and build the truncated thermal ensemble.

    Keeps the n_cut lowest eigenstates (extended to close any degenerate
    multiplet straddling the boundary) and assigns populations
    p_n = exp(-E_n/kT) / sum_m exp(-E_m/kT) over the retained states.
    """
    if kT <= 0:
        raise ConfigError(f"kT must be positive, got {kT}")
    dim = model.bath_dim
    if not 1 <= n_cut <= dim:
        raise ConfigError(f"n_cut must be in [1, {dim}], got {n_cut}")

    h_b = build_bath_hamiltonian(model)
    try:
        energies, states = np.linalg.eigh(h_b)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - LAPACK failure
        raise NumericalError(f"bath eigensolver failed: {exc}") from exc

    scale = max(abs(energies[0]), abs(energies[-1]), 1.0)
    cut = n_cut
    while cut < dim and abs(energies[cut] - energies[cut - 1]) <= DEGENERACY_RTOL * scale:
        cut += 1

    retained = energies[:cut]
    weights = np.exp(-(retained - retained[0]) / kT)
    populations = weights / weights.sum()
    full_weights = np.exp(-(energies - energies[0]) / kT)
    residual = float(full_weights[cut:].sum() / full_weights.sum())

    return BathSpectrum(
        energies=retained,
        states=states[:, :cut],
        n_cut=cut,
        kT=kT,
        populations=populations,
        truncation_residual=residual,
    )


def bath_statistics(spectrum: BathSpectrum, coupling: np.ndarray) -> BathStatistics:
    """Thermal mean B_bar and variance C of a bath operator.

    B_bar = sum_n p_n <phi_n|B|phi_n> and C = sum_n p_n <phi_n|B^2|phi_n>
    - B_bar^2 over the truncated ensemble; tiny negative variances from
    roundoff are clamped to zero.
    """
    if coupling.shape != (spectrum.states.shape[0],) * 2:
        raise ConfigError(
            f"coupling shape {coupling.shape} does not match bath dimension "
            f"{spectrum.states.shape[0]}"
        )
    b_states = coupling @ spectrum.states
    diag_b = np.einsum("in,in->n", spectrum.states.conj(), b_states).real
    diag_b2 = np.einsum("in,in->n", b_states.conj(), b_states).real
    b_bar = float(spectrum.populations @ diag_b)
    c_var = float(spectrum.populations @ diag_b2) - b_bar**2
    if c_var < -1e-12:
        raise NumericalError(f"variance came out negative beyond tolerance: {c_var}")
    return BathStatistics(b_bar=b_bar, c_var=max(c_var, 0.0))


def coupling_frequency_spread(spectrum: BathSpectrum, coupling: np.ndarray) -> float:
    """RMS bath transition frequency weighted by coupling matrix elements.

    Averages (E_n - E_m)^2 over thermally populated rows n and all retained
    columns m != n with weight p_n |<n|B|m>|^2. This is the frequency scale
    on which the bath coupling fluctuates, and it sets the default decay
    rates of the memory function (matching its short-time expansion to the
    exact one). Returns 0 when the coupling has no off-diagonal weight.
    """
    b_nm = spectrum.states.conj().T @ coupling @ spectrum.states
    weights = np.abs(b_nm) ** 2
    np.fill_diagonal(weights, 0.0)
    gaps = spectrum.energies[:, None] - spectrum.energies[None, :]
    num = float(np.einsum("n,nm,nm->", spectrum.populations, weights, gaps**2))
    den = float(np.einsum("n,nm->", spectrum.populations, weights))
    if den <= 0.0:
        return 0.0
    return float(np.sqrt(num / den))


@dataclass(frozen=True)
class CouplingStatsTable:
    """Disorder-averaged coupling statistics per intra-bath coupling value.

    Column layout matches the CSV the stats command emits: one row per jx
    with the mean of |B_bar|, the mean of C, and standard errors of both.
    """

    jx: np.ndarray
    mean_abs_bbar: np.ndarray
    mean_c: np.ndarray
    stderr_bbar: np.ndarray
    stderr_c: np.ndarray
    realizations: int

    COLUMNS = ("jx", "mean_abs_bbar", "mean_c", "stderr_bbar", "stderr_c")

    def __post_init__(self):
        for name in ("jx", "mean_abs_bbar", "mean_c", "stderr_bbar", "stderr_c"):
            arr = np.asarray(getattr(self, name), dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    def rows(self):
        for k in range(len(self.jx)):
            yield (
                self.jx[k],
                self.mean_abs_bbar[k],
                self.mean_c[k],
                self.stderr_bbar[k],
                self.stderr_c[k],
            )


def statistics_vs_jx(
    sampler,
    jx_grid,
    realizations: int,
    n_cut: int = 20,
    kT: float = 0.25,
) -> CouplingStatsTable:
    """Disorder-averaged |B_bar| and C over a grid of intra-bath couplings.

    `sampler(jx, stream)` must return a SpinBathModel for realization index
    `stream` at coupling bound `jx`; realizations are averaged per grid
    point. The resulting table is what the period measurement inverts to
    estimate jx.
    """
    jx_grid = list(jx_grid)
    if not jx_grid:
        raise ConfigError("jx_grid must not be empty")
    if realizations < 1:
        raise ConfigError(f"realizations must be >= 1, got {realizations}")

    mean_b, mean_c, err_b, err_c = [], [], [], []
    for jx in jx_grid:
        abs_bbars = np.empty(realizations)
        c_vars = np.empty(realizations)
        for stream in range(realizations):
            model = sampler(jx, stream)
            spectrum = diagonalize_bath(model, n_cut=n_cut, kT=kT)
            stats = bath_statistics(spectrum, build_bath_coupling(model))
            abs_bbars[stream] = abs(stats.b_bar)
            c_vars[stream] = stats.c_var
        mean_b.append(abs_bbars.mean())
        mean_c.append(c_vars.mean())
        if realizations > 1:
            err_b.append(abs_bbars.std(ddof=1) / np.sqrt(realizations))
            err_c.append(c_vars.std(ddof=1) / np.sqrt(realizations))
        else:
            err_b.append(0.0)
            err_c.append(0.0)

    return CouplingStatsTable(
        jx=np.array(jx_grid, dtype=float),
        mean_abs_bbar=np.array(mean_b),
        mean_c=np.array(mean_c),
        stderr_bbar=np.array(err_b),
        stderr_c=np.array(err_c),
        realizations=realizations,
    )
