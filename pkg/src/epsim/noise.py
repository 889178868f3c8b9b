"""Input-referred noise model of the transimpedance front end.

Implements the analytic current-noise PSDs of the continuous-time and
switched-integrator architectures, the integrated input-referred voltage
noise over a measurement band, the minimum-coupling SNR solver, and a
sampled-noise synthesizer whose measured PSD matches the analytic model.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate, optimize

from .constants import K_B, Q_E
from .errors import DomainError, QuadratureError
from .waveform import WaveformBuffer

ARCH_CT = "ct"
ARCH_SI = "si"

# Reset-switch technology for the switched integrator noise term.
SWITCH_SEMICONDUCTOR = "semiconductor"
SWITCH_ELECTROMECHANICAL = "electromechanical"


@dataclass
class NoiseSpec:
    """Op-amp, leakage, and switch noise parameters.

    Defaults follow the ADA-4530-1 (14 nV/rtHz white voltage noise with a
    300 Hz 1/f corner, 0.07 fA/rtHz current noise i.e. I_b,eff = 15.3 fA,
    C_in = 8 pF, R_in = 100 TOhm) and the PAD-1 reset diode (100 fA).
    """

    e_n_white: float = 14e-9         # V/rtHz, high-frequency floor
    e_n_corner: float = 300.0        # Hz, 1/f corner of e_n
    i_b_eff: float = 15.3e-15        # A, effective bias current for shot noise
    c_in: float = 8e-12              # F, op-amp input capacitance
    r_in: float = 1e14               # Ohm, op-amp input resistance
    r_leak: float = math.inf         # Ohm, board/package leakage (guarded)
    r_f: float = 150e9               # Ohm, CT feedback resistor
    c_f: float = 0.1e-12             # F, CT feedback shunt capacitance
    c_f_si: float = 10e-12           # F, switched-integrator feedback cap
    i_rst: float = 100e-15           # A, reset-switch leakage (semiconductor)
    r_rst: float = math.inf          # Ohm, off-state resistance (electromech.)
    reset_switch: str = SWITCH_SEMICONDUCTOR
    temperature: float = 298.15      # K

    def __post_init__(self):
        for name in ("e_n_white", "e_n_corner", "i_b_eff", "c_in", "r_in",
                     "r_leak", "r_f", "c_f", "c_f_si", "r_rst", "temperature"):
            if getattr(self, name) <= 0:
                raise DomainError(f"{name} must be positive")
        if self.i_rst < 0:
            raise DomainError("i_rst must be non-negative")
        if self.reset_switch not in (SWITCH_SEMICONDUCTOR,
                                     SWITCH_ELECTROMECHANICAL):
            raise DomainError(f"unknown reset_switch {self.reset_switch!r}")

    @property
    def i_n_sq_white(self) -> float:
        """White current-noise PSD 2 q I_b,eff (A^2/Hz)."""
        return 2.0 * Q_E * self.i_b_eff

    @property
    def r_n(self) -> float:
        """Noise matching resistance sqrt(e_n^2 / i_n^2) at the white floor."""
        return math.sqrt(self.e_n_white ** 2 / self.i_n_sq_white)

    def e_n_sq(self, f):
        """Voltage-noise PSD with the 1/f corner: e_n^2 (1 + f_c/f)."""
        return self.e_n_white ** 2 * (1.0 + self.e_n_corner / np.asarray(f))


@dataclass
class BandSpec:
    """Measurement band [f1, f2] in Hz."""

    f1: float
    f2: float
    name: str = ""

    def __post_init__(self):
        if not (0 < self.f1 < self.f2):
            raise DomainError("band requires 0 < f1 < f2")

    @classmethod
    def ecg(cls) -> "BandSpec":
        return cls(1.0, 150.0, "ecg")

    @classmethod
    def eeg(cls) -> "BandSpec":
        return cls(2.0, 40.0, "eeg")

    @classmethod
    def emg(cls) -> "BandSpec":
        return cls(10.0, 500.0, "emg")


def _check_freq(f) -> np.ndarray:
    f = np.asarray(f, dtype=float)
    if np.any(f <= 0):
        raise DomainError("frequency must be positive")
    return f


def _input_node_admittance_sq(spec: NoiseSpec, c_c: float, f: np.ndarray,
                              architecture: str) -> np.ndarray:
    """|1 / (Z_in || Z_s || Z_f)|^2 at the inverting input node."""
    w = 2 * math.pi * f
    g = 1.0 / spec.r_in
    if architecture == ARCH_CT:
        g = g + 1.0 / spec.r_f
        c_fb = spec.c_f
    else:
        c_fb = spec.c_f_si
    b = w * (spec.c_in + c_c + c_fb)
    return g * g + b * b


def noise_psd_terms(spec: NoiseSpec, c_c: float, f,
                    architecture: str = ARCH_CT):
    """Input-referred current-noise PSD terms (A^2/Hz).

    Returns (shot, e_n, thermal, total) where ``thermal`` collects the
    4kT/R terms of the architecture (plus 4qI_rst or 4kT/R_rst for the
    switched integrator) and ``e_n`` is the voltage noise divided by the
    squared parallel input impedance.
    """
    f = _check_freq(f)
    if c_c <= 0:
        raise DomainError("coupling capacitance must be positive")
    shot = np.full_like(f, spec.i_n_sq_white)
    e_n = spec.e_n_sq(f) * _input_node_admittance_sq(spec, c_c, f, architecture)
    thermal = 4.0 * K_B * spec.temperature / spec.r_leak
    if architecture == ARCH_CT:
        thermal = thermal + 4.0 * K_B * spec.temperature / spec.r_f
    elif architecture == ARCH_SI:
        if spec.reset_switch == SWITCH_SEMICONDUCTOR:
            thermal = thermal + 4.0 * Q_E * spec.i_rst
        else:
            thermal = thermal + 4.0 * K_B * spec.temperature / spec.r_rst
    else:
        raise DomainError(f"unknown architecture {architecture!r}")
    thermal = np.full_like(f, thermal)
    return shot, e_n, thermal, shot + e_n + thermal


def ct_noise_psd(spec: NoiseSpec, c_c: float, f):
    """Continuous-time TIA input-referred current-noise PSD (A^2/Hz)."""
    return noise_psd_terms(spec, c_c, f, ARCH_CT)[3]


def si_noise_psd(spec: NoiseSpec, c_c: float, f):
    """Switched-integrator input-referred current-noise PSD (A^2/Hz)."""
    return noise_psd_terms(spec, c_c, f, ARCH_SI)[3]


def noise_psd(spec: NoiseSpec, c_c: float, f, architecture: str = ARCH_CT):
    if architecture == ARCH_CT:
        return ct_noise_psd(spec, c_c, f)
    if architecture == ARCH_SI:
        return si_noise_psd(spec, c_c, f)
    raise DomainError(f"unknown architecture {architecture!r}")


def voltage_noise_psd(spec: NoiseSpec, c_c: float, f,
                      architecture: str = ARCH_CT):
    """Input-referred voltage-noise PSD i_n,tot^2 |Z_s|^2 with Z_s = 1/(j w C_c)."""
    f = _check_freq(f)
    zs_sq = 1.0 / (2 * math.pi * f * c_c) ** 2
    return noise_psd(spec, c_c, f, architecture) * zs_sq


def integrated_input_noise(spec: NoiseSpec, c_c: float, band: BandSpec,
                           architecture: str = ARCH_CT) -> float:
    """Total input-referred voltage noise over the band (V rms).

    Adaptive quadrature of i_n,tot^2(f) |Z_s(f)|^2 with relative
    tolerance 1e-6; the source impedance is purely capacitive.
    """
    def integrand(f):
        return float(voltage_noise_psd(spec, c_c, f, architecture))

    # epsabs=0: the integral is ~1e-9 V^2, far below quad's default
    # absolute tolerance, so convergence must be purely relative.
    v_sq, abserr = integrate.quad(integrand, band.f1, band.f2,
                                  epsabs=0.0, epsrel=1e-6, limit=200)
    if v_sq <= 0 or not math.isfinite(v_sq):
        raise QuadratureError(
            f"noise integral did not converge over [{band.f1}, {band.f2}] Hz: "
            f"value={v_sq}, abserr={abserr}")
    if abserr > 1e-4 * v_sq:
        raise QuadratureError(
            f"noise integral accuracy {abserr / v_sq:.2e} worse than requested "
            f"over [{band.f1}, {band.f2}] Hz")
    return math.sqrt(v_sq)


C_MIN_BRACKET = 0.01e-12
C_MAX_BRACKET = 100e-12

STATUS_OK = "ok"
STATUS_LOWER_BOUND = "lower_bound"
STATUS_OUT_OF_RANGE = "out_of_range"


@dataclass
class MinCouplingResult:
    c_c: float
    status: str
    achieved_snr: float


def min_coupling_for_snr(spec: NoiseSpec, signal_amplitude: float,
                         target_snr: float, band: BandSpec,
                         architecture: str = ARCH_CT) -> MinCouplingResult:
    """Smallest coupling capacitance achieving SNR = amplitude / v_n,in.

    Bisects on log C_c over [0.01, 100] pF; SNR grows monotonically with
    C_c because v_n,in shrinks.  Returns the lower bracket when any
    capacitance suffices and an out-of-range result when none does.
    """
    if target_snr <= 0:
        raise DomainError("target SNR must be positive")

    def snr_at(c_c: float) -> float:
        return signal_amplitude / integrated_input_noise(
            spec, c_c, band, architecture)

    lo, hi = C_MIN_BRACKET, C_MAX_BRACKET
    if snr_at(lo) >= target_snr:
        return MinCouplingResult(lo, STATUS_LOWER_BOUND, snr_at(lo))
    if snr_at(hi) < target_snr:
        return MinCouplingResult(hi, STATUS_OUT_OF_RANGE, snr_at(hi))
    log_c = optimize.brentq(
        lambda lc: snr_at(10.0 ** lc) - target_snr,
        math.log10(lo), math.log10(hi), xtol=1e-4)
    c_c = 10.0 ** log_c
    return MinCouplingResult(c_c, STATUS_OK, snr_at(c_c))


def _shape_noise(psd_one_sided: np.ndarray, n: int, fs: float,
                 rng: np.random.Generator) -> np.ndarray:
    """Time series whose one-sided PSD matches ``psd_one_sided`` on the rfft grid."""
    nf = psd_one_sided.size
    spec = rng.standard_normal(nf) + 1j * rng.standard_normal(nf)
    spec[0] = spec[0].real * math.sqrt(2.0)
    if n % 2 == 0:
        spec[-1] = spec[-1].real * math.sqrt(2.0)
    # Interior bins: E|X_k|^2 = N fs S_k / 2 for a one-sided PSD S.
    amp = np.sqrt(psd_one_sided * fs * n / 2.0)
    return np.fft.irfft(spec / math.sqrt(2.0) * amp, n=n)


_PSD_CLAMP_HZ = 0.5  # hold the synthesis PSD flat below this frequency


def synth_noise(spec: NoiseSpec, c_c: float, architecture: str, fs: float,
                duration: float, seed: int = 0) -> WaveformBuffer:
    """Sampled input-referred voltage noise matching the analytic PSD.

    Frequency-domain shaping: a white Gaussian spectrum is multiplied by
    sqrt(PSD) and inverse transformed.  The PSD is clamped flat below
    0.5 Hz to keep the record variance finite.
    """
    n = int(round(duration * fs))
    f = np.fft.rfftfreq(n, 1.0 / fs)
    f_eval = np.maximum(f, _PSD_CLAMP_HZ)
    psd = voltage_noise_psd(spec, c_c, f_eval, architecture)
    rng = np.random.default_rng(seed)
    return WaveformBuffer(_shape_noise(psd, n, fs, rng), fs, 0.0,
                          f"v_noise_{architecture}")


def synth_noise_current(spec: NoiseSpec, c_c: float, architecture: str,
                        fs: float, duration: float,
                        seed: int = 0) -> WaveformBuffer:
    """Sampled input-referred current noise (A) for front-end injection."""
    n = int(round(duration * fs))
    f = np.fft.rfftfreq(n, 1.0 / fs)
    f_eval = np.maximum(f, _PSD_CLAMP_HZ)
    psd = noise_psd(spec, c_c, f_eval, architecture)
    rng = np.random.default_rng(seed)
    return WaveformBuffer(_shape_noise(psd, n, fs, rng), fs, 0.0,
                          f"i_noise_{architecture}")


def noise_budget_rows(spec: NoiseSpec, c_c: float, freqs,
                      architecture: str = ARCH_CT) -> list[tuple]:
    """Rows (f_hz, term_shot, term_en, term_thermal, total) for the budget report."""
    freqs = _check_freq(freqs)
    shot, e_n, thermal, total = noise_psd_terms(spec, c_c, freqs, architecture)
    return list(zip(freqs.tolist(), shot.tolist(), e_n.tolist(),
                    thermal.tolist(), total.tolist()))
