"""Ground-truth physiological and interference waveform generators.

All generators are deterministic for a fixed seed and return exact event
times alongside the waveforms so the analysis pipeline can be scored
against known truth.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError
from .waveform import WaveformBuffer

# Typical surface amplitudes of the electrical biosignals.
ECG_PTP_VOLTS = 0.5e-3
EEG_RMS_VOLTS = 20e-6

# ECG beat template: three Gaussian bumps (amplitude rel. to R, center s, width s).
_ECG_TEMPLATE = (
    (0.12, -0.200, 0.025),   # P wave
    (1.00, 0.000, 0.010),    # QRS, narrow and tall
    (0.35, 0.250, 0.045),    # T wave
)

# Frequency of the slow sinusoidal mains drift used by synth_pli.
_PLI_DRIFT_HZ = 0.05


@dataclass
class SubjectProfile:
    """Subject-level parameters that drive the synthesizers.

    ``hr_bpm`` may be a scalar or a sequence; a sequence is interpreted as a
    piecewise-linear heart-rate trajectory spanning the synthesis window.
    ``eeg_band_peaks`` lists (center_hz, relative_power) spectral bumps on
    top of the 1/f**gamma continuum.
    """

    hr_bpm: float | tuple[float, ...] = 72.0
    hrv_jitter_s: float = 0.02
    rr_per_min: float = 12.0
    rc_pattern: str = "shallow"            # "shallow" | "forced_fvc"
    breath_amp_m: float = 0.005
    fvc_depth_factor: float = 5.0
    eeg_gamma: float = 2.36
    eeg_band_peaks: tuple[tuple[float, float], ...] = ((10.0, 2.0), (30.0, 0.8))
    eyes: str = "open"                     # "open" | "closed"
    blink_rate: float = 0.0                # events/min

    def __post_init__(self):
        hr = np.atleast_1d(np.asarray(self.hr_bpm, dtype=float))
        if np.any(hr <= 20) or np.any(hr >= 240):
            raise DomainError("heart rate must lie in (20, 240) bpm")
        if not (2 < self.rr_per_min < 60):
            raise DomainError("respiration rate must lie in (2, 60) per minute")
        if self.eeg_gamma < 0:
            raise DomainError("eeg_gamma must be non-negative")
        if self.rc_pattern not in ("shallow", "forced_fvc"):
            raise DomainError(f"unknown rc_pattern {self.rc_pattern!r}")
        if self.eyes not in ("open", "closed"):
            raise DomainError(f"unknown eyes mode {self.eyes!r}")


def _hr_at(profile: SubjectProfile, frac: float) -> float:
    hr = np.atleast_1d(np.asarray(profile.hr_bpm, dtype=float))
    if hr.size == 1:
        return float(hr[0])
    grid = np.linspace(0.0, 1.0, hr.size)
    return float(np.interp(frac, grid, hr))


def synth_ecg(profile: SubjectProfile, fs: float, duration: float,
              seed: int = 0) -> tuple[WaveformBuffer, np.ndarray]:
    """Synthesize a surface-potential ECG and its exact R-peak times.

    The per-beat template is a sum of three Gaussians (P, QRS, T) whose
    peak-to-peak span is normalized to 0.5 mV.  Beat intervals follow the
    heart-rate trajectory with independent Gaussian jitter of standard
    deviation ``profile.hrv_jitter_s``.

    Returns
    -------
    (waveform, r_times)
        The waveform (label ``ecg_surface``) and the R-peak times in
        seconds from the start of the record.
    """
    mean_interval = 60.0 / _hr_at(profile, 0.0)
    if duration < 2 * mean_interval:
        raise DomainError("duration must cover at least 2 beats")
    rng = np.random.default_rng(seed)

    r_times = []
    t = 0.6 * mean_interval
    while t < duration - 0.3 * mean_interval:
        r_times.append(t)
        interval = 60.0 / _hr_at(profile, t / duration)
        if profile.hrv_jitter_s > 0:
            interval += rng.normal(0.0, profile.hrv_jitter_s)
        t += max(interval, 0.25)
    r_times = np.array(r_times)
    if r_times.size < 2:
        raise DomainError("duration must cover at least 2 beats")

    n = int(round(duration * fs))
    x = np.zeros(n)
    tgrid = np.arange(n) / fs
    for rk in r_times:
        lo = max(0, int((rk - 0.45) * fs))
        hi = min(n, int((rk + 0.55) * fs))
        seg = tgrid[lo:hi] - rk
        for amp, mu, sigma in _ECG_TEMPLATE:
            x[lo:hi] += amp * np.exp(-0.5 * ((seg - mu) / sigma) ** 2)
    # Template bumps are positive, so template ptp equals the R amplitude.
    x *= ECG_PTP_VOLTS
    return WaveformBuffer(x, fs, 0.0, "ecg_surface"), r_times


def _fvc_maneuver(fs: float, amp: float, depth: float) -> np.ndarray:
    """Chest displacement profile of one FVC maneuver (gap convention).

    Deep inspiration narrows the body-electrode gap (displacement falls,
    linear ramp over 1.5 s); forced expiration widens it exponentially
    (time constant 0.4 s) past the resting point, followed by a slow
    relaxation back to baseline.
    """
    t_insp, tau_exp, overshoot, t_exp, t_relax = 1.5, 0.4, 0.5, 2.4, 2.0
    n_i = int(t_insp * fs)
    n_e = int(t_exp * fs)
    n_r = int(t_relax * fs)
    insp = np.linspace(0.0, -depth * amp, n_i, endpoint=False)
    te = np.arange(n_e) / fs
    top = overshoot * depth * amp
    exp_seg = top - (top + depth * amp) * np.exp(-te / tau_exp)
    start_relax = exp_seg[-1]
    tr = np.arange(1, n_r + 1) / fs  # start one step in: unique global max
    relax = start_relax * np.maximum(1.0 - tr / t_relax, 0.0) ** 2
    return np.concatenate([insp, exp_seg, relax])


def synth_respiration(profile: SubjectProfile, fs: float,
                      duration: float) -> tuple[WaveformBuffer, np.ndarray]:
    """Synthesize chest-wall displacement and its exact peak times.

    Displacement follows the gap convention of the coupling model:
    positive values widen the body-electrode gap, so expiration raises
    the trace and the returned peaks mark end-expiration.  ``shallow``
    is a sinusoid at the respiration rate; ``forced_fvc`` appends one
    deep-inspiration / forced-expiration maneuver to a shallow segment.
    """
    f = profile.rr_per_min / 60.0
    if duration < 2.0 / f:
        raise DomainError("duration must cover at least 2 respiration cycles")
    n = int(round(duration * fs))
    t = np.arange(n) / fs
    amp = profile.breath_amp_m

    if profile.rc_pattern == "shallow":
        x = amp * np.sin(2 * math.pi * f * t)
        k = np.arange(0, int(duration * f) + 1)
        peaks = (0.25 + k) / f
        peaks = peaks[peaks < duration]
        return WaveformBuffer(x, fs, 0.0, "chest_displacement"), peaks

    # forced_fvc: shallow breathing, then one maneuver starting at a
    # zero crossing of the sinusoid so the trace is continuous.
    maneuver = _fvc_maneuver(fs, amp, profile.fvc_depth_factor)
    t_m = duration - len(maneuver) / fs - 0.5
    if t_m < 2.0 / f:
        raise DomainError("duration too short for shallow segment plus maneuver")
    t_m = math.floor(t_m * f) / f  # snap to a full cycle: sin phase = 0
    m0 = int(round(t_m * fs))
    x = np.zeros(n)
    x[:m0] = amp * np.sin(2 * math.pi * f * t[:m0])
    m1 = min(n, m0 + len(maneuver))
    x[m0:m1] = maneuver[:m1 - m0]

    k = np.arange(0, int(t_m * f) + 1)
    shallow_peaks = (0.25 + k) / f
    shallow_peaks = shallow_peaks[shallow_peaks < t_m]
    i_peak = m0 + int(np.argmax(x[m0:m1]))
    peaks = np.append(shallow_peaks, i_peak / fs)
    return WaveformBuffer(x, fs, 0.0, "chest_displacement"), peaks


def _eeg_target_psd(f: np.ndarray, gamma: float,
                    peaks: tuple[tuple[float, float], ...],
                    alpha_boost: float) -> np.ndarray:
    """Relative one-sided PSD: 1/f**gamma continuum with Gaussian band bumps.

    The continuum is clamped flat below 1 Hz to keep the synthesis
    variance finite; the fit band of interest starts at 2 Hz.
    """
    base = np.maximum(f, 1.0) ** (-gamma)
    shape = np.ones_like(f)
    for fc, rel in peaks:
        boost = alpha_boost if 8.0 <= fc <= 14.0 else 1.0
        shape += rel * boost * np.exp(-0.5 * ((f - fc) / 0.5) ** 2)
    return base * shape


def synth_eeg(profile: SubjectProfile, fs: float, duration: float,
              seed: int = 0) -> WaveformBuffer:
    """Synthesize scalp EEG as colored noise with band peaks.

    The PSD follows 1/f**gamma with Gaussian bumps at the configured band
    peaks; the alpha-band bump is raised 4x in eyes-closed mode.  The
    output is normalized to an RMS of 20 uV.  Blink artifacts (slow
    positive deflections) are added in eyes-open mode at ``blink_rate``.
    """
    if fs < 200:
        raise DomainError("EEG synthesis requires fs >= 200 Hz")
    rng = np.random.default_rng(seed)
    n = int(round(duration * fs))
    freqs = np.fft.rfftfreq(n, 1.0 / fs)
    alpha_boost = 4.0 if profile.eyes == "closed" else 1.0
    psd = _eeg_target_psd(freqs, profile.eeg_gamma, profile.eeg_band_peaks,
                          alpha_boost)

    nf = freqs.size
    spec = rng.standard_normal(nf) + 1j * rng.standard_normal(nf)
    spec[0] = spec[0].real * math.sqrt(2.0)
    if n % 2 == 0:
        spec[-1] = spec[-1].real * math.sqrt(2.0)
    x = np.fft.irfft(spec * np.sqrt(psd / 2.0), n=n)
    x *= EEG_RMS_VOLTS / np.std(x)

    if profile.blink_rate > 0 and profile.eyes == "open":
        n_blinks = rng.poisson(profile.blink_rate * duration / 60.0)
        t = np.arange(n) / fs
        for tb in np.sort(rng.uniform(0.5, duration - 0.5, n_blinks)):
            x += 4.0 * EEG_RMS_VOLTS * np.exp(-0.5 * ((t - tb) / 0.15) ** 2)
    return WaveformBuffer(x, fs, 0.0, "eeg_surface")


@dataclass
class PliSpec:
    """Power-line interference description: 50/60 Hz fundamental plus harmonics.

    ``harmonic_amplitudes`` maps harmonic index (1 = fundamental) to peak
    amplitude in volts at the electrode.
    """

    f0: float = 60.0
    harmonic_amplitudes: dict[int, float] = field(
        default_factory=lambda: {1: 0.1, 2: 0.02})
    drift_ppm: float = 0.0

    def __post_init__(self):
        if self.f0 <= 0:
            raise DomainError("PLI fundamental must be positive")


def synth_pli(f0: float, harmonic_amplitudes: dict[int, float],
              drift_ppm: float, fs: float, duration: float) -> WaveformBuffer:
    """Sum of mains harmonics with a slow sinusoidal frequency drift.

    ``drift_ppm`` modulates the instantaneous frequency by that many
    parts per million at 0.05 Hz; zero drift gives a coherent tone.
    """
    n = int(round(duration * fs))
    t = np.arange(n) / fs
    if drift_ppm:
        wd = 2 * math.pi * _PLI_DRIFT_HZ
        phase = 2 * math.pi * f0 * (
            t + drift_ppm * 1e-6 * (1 - np.cos(wd * t)) / wd)
    else:
        phase = 2 * math.pi * f0 * t
    x = np.zeros(n)
    for k, amp in harmonic_amplitudes.items():
        x += amp * np.sin(k * phase)
    return WaveformBuffer(x, fs, 0.0, "pli")


def synth_motion_artifact(event_times, amplitude: float, fs: float,
                          duration: float, seed: int = 0) -> WaveformBuffer:
    """Gross-body-motion displacement transients at the given event times.

    Each event is a Gaussian displacement bump (width 0.4-0.8 s, so
    essentially all energy sits below 2 Hz) with a seeded +-20% amplitude
    spread.  Units follow the chest-displacement gap convention (m).
    """
    if amplitude < 0:
        raise DomainError("amplitude must be non-negative")
    rng = np.random.default_rng(seed)
    n = int(round(duration * fs))
    t = np.arange(n) / fs
    x = np.zeros(n)
    for tk in np.asarray(event_times, dtype=float):
        sigma = rng.uniform(0.4, 0.8)
        scale = amplitude * rng.uniform(0.8, 1.2)
        x += scale * np.exp(-0.5 * ((t - tk) / sigma) ** 2)
    return WaveformBuffer(x, fs, 0.0, "motion_displacement")
