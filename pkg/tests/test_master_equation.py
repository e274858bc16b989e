"""Memory kernel, derivative grid, and master-equation solver contracts."""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from spinprobe import (
    ConfigError,
    MemoryKernel,
    MESolverConfig,
    damping_function,
    derivative_matrix,
    initial_detector_state,
    kernel_rates_from_variance,
    memory_function,
    memory_time,
    solve_markovian,
    solve_master_equation,
)

SX = np.array([[0, 1], [1, 0]], dtype=complex)
SZ = np.array([[1, 0], [0, -1]], dtype=complex)


def shifted_evolution_oracle(b_bar, b0z, t):
    """Closed-form two-level evolution of |+> under -(b0z/2)Z + b_bar X.

    exp(-iHt) = cos(Omega t) I - i sin(Omega t) (n . sigma) with
    H = Omega (n . sigma).
    """
    h = -0.5 * b0z * SZ + b_bar * SX
    omega = np.sqrt(b_bar**2 + 0.25 * b0z**2)
    n_op = h / omega
    u = np.cos(omega * t) * np.eye(2) - 1j * np.sin(omega * t) * n_op
    psi = u @ (np.array([1, 1], dtype=complex) / np.sqrt(2))
    return np.outer(psi, psi.conj())


class TestMemoryFunction:
    def test_value_at_zero(self):
        k = MemoryKernel(p=0.7, q=1.3)
        assert memory_function(k, 0.0) == 1.0

    @settings(max_examples=50, deadline=None)
    @given(st.floats(min_value=-50.0, max_value=50.0, allow_nan=False))
    def test_even_in_time(self, t):
        k = MemoryKernel(p=1.1, q=0.9)
        assert memory_function(k, t) == memory_function(k, -t)

    def test_unit_rate_value(self):
        # direct arithmetic on the defining expression at p = q = t = 1
        bracket = 1.0 - 4.0 / (3.0 * np.pi) + 1.0 / 8.0 - 4.0 / (45.0 * np.pi)
        expected = bracket * np.exp(-1.0 / 8.0)
        k = MemoryKernel(p=1.0, q=1.0)
        np.testing.assert_allclose(memory_function(k, 1.0), expected, rtol=1e-14)
        np.testing.assert_allclose(expected, 0.59330, atol=5e-6)

    def test_vectorized(self):
        k = MemoryKernel(p=1.0, q=1.0)
        ts = np.linspace(-3, 3, 7)
        vals = memory_function(k, ts)
        assert vals.shape == ts.shape
        np.testing.assert_allclose(vals, [memory_function(k, t) for t in ts])


class TestDampingFunction:
    def test_unity_at_zero(self):
        k = MemoryKernel(p=1.0, q=1.0)
        assert damping_function(k, 0.0) == 1.0

    def test_default_grid_coefficient(self):
        # n = 40, l = int(0.338*40) = 13, dt = 0.2: g = 9.9 / (27*0.2)^2
        k = MemoryKernel(p=1.0, q=1.0, n_grid=40, dt=0.2)
        assert k.l_grid == 13
        np.testing.assert_allclose(k.g, 9.9 / (27 * 0.2) ** 2, rtol=1e-14)
        np.testing.assert_allclose(k.g, 0.33951, atol=5e-6)

    @settings(max_examples=30, deadline=None)
    @given(st.floats(min_value=0.01, max_value=20.0), st.floats(min_value=1.01, max_value=3.0))
    def test_strictly_decreasing_in_abs_u(self, u, factor):
        k = MemoryKernel(p=1.0, q=1.0)
        assert damping_function(k, factor * u) < damping_function(k, u)


class TestKernelGrid:
    def test_zero_node_exact(self):
        k = MemoryKernel(p=1.0, q=1.0, n_grid=40, dt=0.2)
        assert k.u[k.zero_index] == 0.0
        assert k.u[0] == -k.l_grid * k.dt
        np.testing.assert_allclose(np.diff(k.u), k.dt)

    def test_invalid_grids(self):
        with pytest.raises(ConfigError):
            MemoryKernel(p=1.0, q=1.0, n_grid=4)
        with pytest.raises(ConfigError):
            MemoryKernel(p=1.0, q=1.0, dt=0.0)
        with pytest.raises(ConfigError):
            MemoryKernel(p=1.0, q=1.0, n_grid=40, l_grid=40)

    def test_rates_from_variance(self):
        p, q = kernel_rates_from_variance(0.0025)
        assert p == q == 2 * np.sqrt(0.0025)


class TestDerivativeMatrix:
    def test_annihilates_constants(self):
        k = MemoryKernel(p=1.0, q=1.0)
        d = derivative_matrix(k)
        assert np.abs(d @ np.ones(k.n_grid)).max() < 1e-10

    def test_linear_function(self):
        k = MemoryKernel(p=1.0, q=1.0)
        d = derivative_matrix(k)
        interior = slice(2, k.n_grid - 5)
        assert np.abs((d @ k.u - 1.0)[interior]).max() < 1e-6

    def test_sine_derivative(self):
        k = MemoryKernel(p=1.0, q=1.0)
        d = derivative_matrix(k)
        for wavenumber in (1.0, 2.0):
            err = d @ np.sin(wavenumber * k.u) - wavenumber * np.cos(wavenumber * k.u)
            interior = slice(2, k.n_grid - 5)
            assert np.abs(err[interior]).max() < 1e-4

    def test_small_grid_allowed(self):
        k = MemoryKernel(p=1.0, q=1.0, n_grid=5, dt=0.2)
        d = derivative_matrix(k)
        assert np.abs(d @ np.ones(5)).max() < 1e-10
        # 5-point full stencil is exact on degree-4 polynomials
        np.testing.assert_allclose(d @ k.u**2, 2 * k.u, atol=1e-8)


def paper_kernel(**overrides):
    defaults = dict(p=2.0, q=2.0, n_grid=40, dt=0.2)
    defaults.update(overrides)
    return MemoryKernel(**defaults)


class TestNonMarkovianSolver:
    def test_free_phase_evolution(self):
        # C = 0, B_bar = 0: commutator-only dynamics of the |+> state
        config = MESolverConfig(b_bar=0.0, c_var=0.0, b0z=1.0, kernel=paper_kernel())
        ts = np.arange(0.0, 30.0 + 1e-12, 0.2)
        rhos = solve_master_equation(config, initial_detector_state(), ts)
        np.testing.assert_allclose(rhos[:, 0, 0].real, 0.5, atol=1e-10)
        np.testing.assert_allclose(rhos[:, 0, 1], 0.5 * np.exp(1j * ts), atol=1e-9)

    def test_shift_only_matches_closed_form(self):
        b_bar = 0.1
        config = MESolverConfig(b_bar=b_bar, c_var=0.0, b0z=1.0, kernel=paper_kernel())
        ts = np.arange(0.0, 50.0 + 1e-12, 0.5)
        rhos = solve_master_equation(config, initial_detector_state(), ts)
        for k in (10, 50, 100):
            oracle = shifted_evolution_oracle(b_bar, 1.0, ts[k])
            assert np.abs(rhos[k] - oracle).max() < 1e-8

    def test_shift_only_purity_stays_one(self):
        config = MESolverConfig(b_bar=0.2, c_var=0.0, b0z=1.0, kernel=paper_kernel())
        ts = np.arange(0.0, 100.0 + 1e-12, 0.5)
        rhos = solve_master_equation(config, initial_detector_state(), ts)
        purity = np.real(np.einsum("tij,tji->t", rhos, rhos))
        np.testing.assert_allclose(purity, 1.0, atol=1e-9)

    def test_trace_hermiticity_positivity(self):
        config = MESolverConfig(b_bar=0.05, c_var=0.005, b0z=1.0, kernel=paper_kernel())
        ts = np.arange(0.0, 100.0 + 1e-12, 0.2)
        rhos = solve_master_equation(config, initial_detector_state(), ts)
        traces = np.trace(rhos, axis1=1, axis2=2)
        assert np.abs(traces - 1.0).max() < 1e-10
        herm = np.abs(rhos - rhos.conj().transpose(0, 2, 1)).max()
        assert herm < 1e-9
        assert np.linalg.eigvalsh(rhos).min() >= -1e-6

    def test_grid_doubling_converged(self):
        ts = np.arange(0.0, 100.0 + 1e-12, 0.5)
        rho_final = {}
        for n_grid in (40, 80):
            config = MESolverConfig(
                b_bar=0.05, c_var=0.005, b0z=1.0, kernel=paper_kernel(n_grid=n_grid)
            )
            rho_final[n_grid] = solve_master_equation(config, initial_detector_state(), ts)[-1]
        assert np.abs(rho_final[40] - rho_final[80]).max() < 1e-3

    def test_offset_shift_stability(self):
        # moving the readout offset by one node barely changes the solution
        ts = np.arange(0.0, 60.0 + 1e-12, 0.5)
        finals = []
        for l_grid in (12, 13, 14):
            config = MESolverConfig(
                b_bar=0.05, c_var=0.005, b0z=1.0, kernel=paper_kernel(l_grid=l_grid)
            )
            finals.append(solve_master_equation(config, initial_detector_state(), ts)[-1])
        assert np.abs(finals[0] - finals[1]).max() < 1e-3
        assert np.abs(finals[2] - finals[1]).max() < 1e-3

    def test_dissipation_damps_purity(self):
        config = MESolverConfig(b_bar=0.0, c_var=0.01, b0z=1.0, kernel=paper_kernel())
        ts = np.arange(0.0, 50.0 + 1e-12, 0.5)
        rhos = solve_master_equation(config, initial_detector_state(), ts)
        purity = np.real(np.einsum("tij,tji->t", rhos, rhos))
        assert purity[-1] < 0.9


class TestMarkovianSolver:
    def test_zero_memory_time_is_unitary(self):
        kernel = paper_kernel()
        ts = np.arange(0.0, 40.0 + 1e-12, 0.4)
        markov = solve_markovian(
            MESolverConfig(b_bar=0.1, c_var=0.01, b0z=1.0, kernel=kernel,
                           mode="markovian", tau_b=0.0),
            initial_detector_state(), ts,
        )
        unitary = solve_master_equation(
            MESolverConfig(b_bar=0.1, c_var=0.0, b0z=1.0, kernel=kernel),
            initial_detector_state(), ts,
        )
        assert np.abs(markov - unitary).max() < 1e-8

    def test_trace_preserved(self):
        config = MESolverConfig(b_bar=0.1, c_var=0.01, b0z=1.0,
                                kernel=paper_kernel(), mode="markovian", tau_b=1.0)
        ts = np.arange(0.0, 200.0 + 1e-12, 0.5)
        rhos = solve_markovian(config, initial_detector_state(), ts)
        assert np.abs(np.trace(rhos, axis1=1, axis2=2) - 1.0).max() < 1e-10

    def test_exponential_coherence_envelope(self):
        config = MESolverConfig(b_bar=0.1, c_var=0.01, b0z=1.0,
                                kernel=paper_kernel(), mode="markovian", tau_b=1.0)
        ts = np.arange(0.0, 400.0 + 1e-12, 0.1)
        rhos = solve_markovian(config, initial_detector_state(), ts)
        coh = np.abs(rhos[:, 0, 1])
        # local maxima of |coherence| trace the envelope
        peaks = [k for k in range(1, len(coh) - 1)
                 if coh[k] >= coh[k - 1] and coh[k] >= coh[k + 1] and coh[k] > 1e-6]
        peaks = peaks[1:]  # drop the t ~ 0 transient
        assert len(peaks) > 20
        log_env = np.log(coh[peaks])
        t_env = ts[peaks]
        slope, intercept = np.polyfit(t_env, log_env, 1)
        fit = slope * t_env + intercept
        residual = np.abs(np.exp(fit) - coh[peaks]) / coh[peaks]
        assert residual.max() < 0.05
        assert slope < 0

    def test_default_tau_from_memory_time(self):
        kernel = paper_kernel()
        tau = memory_time(kernel)
        ts = np.arange(0.0, 20.0 + 1e-12, 0.5)
        auto = solve_markovian(
            MESolverConfig(b_bar=0.1, c_var=0.01, b0z=1.0, kernel=kernel,
                           mode="markovian"),
            initial_detector_state(), ts,
        )
        explicit = solve_markovian(
            MESolverConfig(b_bar=0.1, c_var=0.01, b0z=1.0, kernel=kernel,
                           mode="markovian", tau_b=tau),
            initial_detector_state(), ts,
        )
        np.testing.assert_allclose(auto, explicit, atol=1e-12)


class TestMemoryTime:
    def test_matches_riemann_oracle(self):
        kernel = MemoryKernel(p=1.5, q=1.5)
        ts = np.linspace(0.0, 15.0, 300001)
        riemann = np.trapezoid(memory_function(kernel, ts), ts)
        np.testing.assert_allclose(memory_time(kernel), riemann, atol=1e-7)


class TestSolverValidation:
    def test_negative_variance_rejected(self):
        with pytest.raises(ConfigError):
            MESolverConfig(b_bar=0.0, c_var=-1.0, b0z=1.0, kernel=paper_kernel())

    def test_unknown_mode_rejected(self):
        with pytest.raises(ConfigError):
            MESolverConfig(b_bar=0.0, c_var=0.0, b0z=1.0, kernel=paper_kernel(),
                           mode="semigroup")

    def test_bad_rho0_rejected(self):
        config = MESolverConfig(b_bar=0.0, c_var=0.0, b0z=1.0, kernel=paper_kernel())
        with pytest.raises(ConfigError):
            solve_master_equation(config, np.eye(3), np.array([0.0, 1.0]))
