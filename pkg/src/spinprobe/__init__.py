"""spinprobe: a central spin-1/2 detector coupled to a self-interacting spin bath.

Exact thermally-averaged wavefunction dynamics, a positivity-preserving
non-Markovian mean-field master equation, detector observables, and the
pipeline that turns the detector's fidelity-oscillation period into an
estimate of the intra-bath coupling strength.
"""

__version__ = "0.1.0"

from .errors import ConfigError, NumericalError
from .operators import (
    SIGMA_X,
    SIGMA_Y,
    SIGMA_Z,
    SpinBathModel,
    build_bath_coupling,
    build_bath_hamiltonian,
    build_system_hamiltonian,
    build_total_hamiltonian,
    pauli,
)
from .thermal import (
    BathSpectrum,
    BathStatistics,
    CouplingStatsTable,
    bath_statistics,
    coupling_frequency_spread,
    diagonalize_bath,
    statistics_vs_jx,
)
from .exact import (
    initial_detector_state,
    partial_trace_bath,
    propagate_exact,
    validate_density,
)
from .master_equation import (
    MemoryKernel,
    MESolverConfig,
    damping_function,
    derivative_matrix,
    kernel_rates_from_variance,
    memory_function,
    memory_time,
    solve_markovian,
    solve_master_equation,
)
from .observables import (
    BbarEstimate,
    ObservableSeries,
    ShiftModel,
    analytic_fidelity,
    estimate_bbar,
    estimate_jx,
    extract_period,
    fidelity,
    ideal_density,
    purity,
)
from .config import ExperimentConfig, sample_realization
from .runner import (
    EstimationReport,
    RunResult,
    run_experiment,
    run_jx_estimation,
    simulate_run,
)

__all__ = [
    "ConfigError",
    "NumericalError",
    "SIGMA_X",
    "SIGMA_Y",
    "SIGMA_Z",
    "SpinBathModel",
    "pauli",
    "build_system_hamiltonian",
    "build_bath_coupling",
    "build_bath_hamiltonian",
    "build_total_hamiltonian",
    "BathSpectrum",
    "BathStatistics",
    "CouplingStatsTable",
    "diagonalize_bath",
    "bath_statistics",
    "coupling_frequency_spread",
    "statistics_vs_jx",
    "initial_detector_state",
    "partial_trace_bath",
    "propagate_exact",
    "validate_density",
    "MemoryKernel",
    "MESolverConfig",
    "memory_function",
    "damping_function",
    "derivative_matrix",
    "memory_time",
    "kernel_rates_from_variance",
    "solve_master_equation",
    "solve_markovian",
    "ObservableSeries",
    "ShiftModel",
    "BbarEstimate",
    "purity",
    "fidelity",
    "ideal_density",
    "analytic_fidelity",
    "extract_period",
    "estimate_bbar",
    "estimate_jx",
    "ExperimentConfig",
    "sample_realization",
    "RunResult",
    "EstimationReport",
    "simulate_run",
    "run_experiment",
    "run_jx_estimation",
]
