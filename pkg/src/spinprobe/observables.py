"""Purity, fidelity, oscillation periods, and the period -> coupling inversion.

Fidelity is measured against the freely evolving detector, whose density is
known in closed form, so the reference carries no integrator noise. The
shifted detector beats at Omega = sqrt(B_bar^2 + b0z^2/4) against the free
phase evolution at omega = b0z/2; populations oscillate with period
pi/Omega and the fidelity carries a large-amplitude component of period
pi/(Omega - omega). Measuring that long period pins down |B_bar|, and a
monotone table of disorder-averaged |B_bar| versus the intra-bath coupling
bound turns it into a coupling estimate.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, NumericalError
from .thermal import CouplingStatsTable


def purity(rho: np.ndarray) -> float:
    """Tr(rho^2); 1 for pure states, 1/2 for the maximally mixed qubit."""
    return float(np.real(np.trace(rho @ rho)))


def fidelity(rho: np.ndarray, rho_ideal: np.ndarray) -> float:
    """Trace overlap Tr(rho rho_ideal) with the freely evolved density."""
    return float(np.real(np.trace(rho @ rho_ideal)))


def ideal_density(b0z: float, t) -> np.ndarray:
    """Free evolution of (|0> + |1>)/sqrt(2) under the bare detector splitting.

    Populations stay at 1/2 and the coherence rotates as exp(+i b0z t)/2.
    Accepts a scalar or an array of times; returns (..., 2, 2).
    """
    t = np.asarray(t, dtype=float)
    phase = np.exp(1j * b0z * t)
    out = np.empty(t.shape + (2, 2), dtype=complex)
    out[..., 0, 0] = 0.5
    out[..., 1, 1] = 0.5
    out[..., 0, 1] = 0.5 * phase
    out[..., 1, 0] = 0.5 * phase.conj()
    return out


@dataclass(frozen=True)
class ShiftModel:
    """Frequencies of the coherently shifted two-level dynamics."""

    b_bar: float
    b0z: float

    @property
    def omega(self) -> float:
        """Free phase frequency b0z / 2."""
        return 0.5 * self.b0z

    @property
    def omega_big(self) -> float:
        """Shifted beat frequency sqrt(B_bar^2 + b0z^2 / 4)."""
        return float(np.sqrt(self.b_bar**2 + 0.25 * self.b0z**2))

    @property
    def rabi_period(self) -> float:
        return float(np.pi / self.omega_big)

    @property
    def fidelity_period(self) -> float:
        gap = self.omega_big - self.omega
        if gap <= 0:
            raise ConfigError("fidelity period undefined at zero shift")
        return float(np.pi / gap)


def analytic_fidelity(shift: ShiftModel, t) -> np.ndarray | float:
    """Closed-form fidelity of shift-only (decoherence-free) evolution.

    F(t) = 1/2 [ 1 + (B/Omega)^2 cos 2wt
                 - b0z (Omega - b0z/2) / (4 Omega^2) cos 2(Omega + w)t
                 + b0z (Omega + b0z/2) / (4 Omega^2) cos 2(Omega - w)t ]
    with w = b0z/2; the four coefficients sum to 2 so F(0) = 1.
    """
    t = np.asarray(t, dtype=float)
    omega = shift.omega
    big = shift.omega_big
    b0z = shift.b0z
    c_slow = (shift.b_bar / big) ** 2
    c_fast = b0z * (big - 0.5 * b0z) / (4.0 * big**2)
    c_beat = b0z * (big + 0.5 * b0z) / (4.0 * big**2)
    value = 0.5 * (
        1.0
        + c_slow * np.cos(2.0 * omega * t)
        - c_fast * np.cos(2.0 * (big + omega) * t)
        + c_beat * np.cos(2.0 * (big - omega) * t)
    )
    return value if value.shape else float(value)


@dataclass(frozen=True)
class ObservableSeries:
    """Per-run time series of the detector observables."""

    times: np.ndarray
    purity: np.ndarray
    fidelity: np.ndarray
    pop0: np.ndarray
    pop1: np.ndarray
    coh_re: np.ndarray
    coh_im: np.ndarray

    COLUMNS = ("t", "pop0", "pop1", "coh_re", "coh_im", "purity", "fidelity")

    def __post_init__(self):
        for name in ("times", "purity", "fidelity", "pop0", "pop1", "coh_re", "coh_im"):
            arr = np.asarray(getattr(self, name), dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @classmethod
    def from_densities(cls, times, rhos: np.ndarray, b0z: float) -> "ObservableSeries":
        times = np.asarray(times, dtype=float)
        rhos = np.asarray(rhos)
        ideal = ideal_density(b0z, times)
        pur = np.real(np.einsum("tij,tji->t", rhos, rhos))
        fid = np.real(np.einsum("tij,tji->t", rhos, ideal))
        return cls(
            times=times,
            purity=pur,
            fidelity=fid,
            pop0=rhos[:, 0, 0].real,
            pop1=rhos[:, 1, 1].real,
            coh_re=rhos[:, 0, 1].real,
            coh_im=rhos[:, 0, 1].imag,
        )

    def column(self, name: str) -> np.ndarray:
        key = "times" if name == "t" else name
        return getattr(self, key)


def extract_period(
    series: ObservableSeries,
    channel: str = "fidelity",
    min_amplitude: float = 1e-8,
) -> float:
    """Dominant oscillation period of a channel via FFT peak interpolation.

    The channel is mean-subtracted, Hann-windowed, and the amplitude-
    largest FFT peak is refined by parabolic interpolation of the log
    magnitude. For the fidelity of a shifted detector this picks the
    large-amplitude slow beat rather than the weak fast components.
    Raises NumericalError when the series is flat (no oscillation) or
    covers less than two periods of the detected component.
    """
    if channel not in ("fidelity", "pop0", "pop1", "purity", "coh_re", "coh_im"):
        raise ConfigError(f"unknown channel {channel!r}")
    values = series.column(channel)
    times = series.times
    if len(values) < 8:
        raise NumericalError("series too short for period extraction")
    dt = times[1] - times[0]
    if not np.allclose(np.diff(times), dt, rtol=1e-9, atol=1e-12):
        raise ConfigError("period extraction requires a uniform time grid")

    detrended = values - values.mean()
    if np.abs(detrended).max() < min_amplitude:
        raise NumericalError("no oscillation detected: series is flat")

    window = np.hanning(len(detrended))
    spectrum = np.abs(np.fft.rfft(detrended * window))
    spectrum[0] = 0.0
    peak = int(np.argmax(spectrum))
    if peak == 0 or spectrum[peak] <= 0.0:
        raise NumericalError("no oscillation detected: empty spectrum")

    if 1 <= peak < len(spectrum) - 1 and spectrum[peak - 1] > 0 and spectrum[peak + 1] > 0:
        logs = np.log(spectrum[peak - 1 : peak + 2])
        denom = logs[0] - 2.0 * logs[1] + logs[2]
        shift = 0.5 * (logs[0] - logs[2]) / denom if denom != 0.0 else 0.0
        shift = float(np.clip(shift, -0.5, 0.5))
    else:
        shift = 0.0
    freq = (peak + shift) / (len(detrended) * dt)
    if freq <= 0.0:
        raise NumericalError("no oscillation detected")
    period = 1.0 / freq

    span = times[-1] - times[0]
    if span < 2.0 * period:
        raise NumericalError(
            f"series spans {span:.3g}, less than two periods of {period:.3g}"
        )
    return float(period)


@dataclass(frozen=True)
class BbarEstimate:
    """Coupling-mean estimate from a measured fidelity period.

    `exact` inverts pi/(Omega - omega) = period algebraically;
    `small_shift_approx` applies the leading-order relation
    period ~ pi b0z / B_bar^2 and is reported for comparison only.
    """

    exact: float
    small_shift_approx: float


def estimate_bbar(period: float, b0z: float) -> BbarEstimate:
    """Invert a fidelity-oscillation period to the coupling mean |B_bar|.

    With Delta = pi/period, the beat condition Omega = Delta + b0z/2 gives
    B_bar = sqrt((Delta + b0z/2)^2 - b0z^2/4) exactly.
    """
    if period <= 0:
        raise ConfigError(f"period must be positive, got {period}")
    if b0z <= 0:
        raise ConfigError(f"b0z must be positive, got {b0z}")
    delta = np.pi / period
    exact = float(np.sqrt((delta + 0.5 * b0z) ** 2 - 0.25 * b0z**2))
    approx = float(np.sqrt(np.pi * b0z / period))
    return BbarEstimate(exact=exact, small_shift_approx=approx)


def estimate_jx(b_bar_measured: float, table: CouplingStatsTable) -> float:
    """Interpolate the coupling bound jx from a measured |B_bar|.

    Requires at least three table rows and a strictly increasing mean
    |B_bar| column; refuses to extrapolate outside the tabulated range.
    """
    if len(table.jx) < 3:
        raise ConfigError(f"inversion table needs >= 3 rows, got {len(table.jx)}")
    knots = table.mean_abs_bbar
    if np.any(np.diff(knots) <= 0):
        raise NumericalError("inversion table is not monotone in mean |B_bar|")
    b = abs(b_bar_measured)
    if b < knots[0] or b > knots[-1]:
        raise NumericalError(
            f"measured |B_bar| = {b:.4g} outside table range "
            f"[{knots[0]:.4g}, {knots[-1]:.4g}]; refusing to extrapolate"
        )
    return float(np.interp(b, knots, table.jx))
