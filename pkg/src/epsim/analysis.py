"""Downstream biosignal analysis: wavelet filtering, beat and breath
event detection, timing statistics, spirometry parameters, and EEG
spectral analysis."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate, signal as sps

from .errors import DomainError, InsufficientDataError
from .waveform import WaveformBuffer

MORLET_W0 = 6.0
# Torrence & Compo reconstruction constants for the Morlet wavelet, w0 = 6.
_MORLET_CDELTA = 0.776
_MORLET_PSI0 = math.pi ** -0.25
# Fourier factor: wavelength = factor * scale.
_MORLET_FOURIER = 4 * math.pi / (MORLET_W0 + math.sqrt(2 + MORLET_W0 ** 2))

# EEG band edges (Hz).
BAND_THETA = (4.0, 8.0)
BAND_ALPHA = (8.0, 14.0)
BAND_BETA = (14.0, 30.0)

# Welch estimation parameters: 4 s Hann segments, 50% overlap.
_WELCH_SEGMENT_S = 4.0


@dataclass
class EventSeries:
    """Sorted event times in seconds."""

    times: np.ndarray
    kind: str = "r_peak"

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        if self.times.size and np.any(np.diff(self.times) <= 0):
            raise DomainError("event times must be strictly increasing")

    def __len__(self) -> int:
        return self.times.size

    def intervals(self) -> np.ndarray:
        return np.diff(self.times)


@dataclass
class TimingComparison:
    """Interval-wise timing statistics between two event series."""

    mean_diff: float
    std_diff: float
    diffs: np.ndarray
    gaussian_fit: tuple[float, float]

    def cdf(self, x) -> np.ndarray:
        """Empirical CDF of the interval differences."""
        xs = np.sort(self.diffs)
        return np.searchsorted(xs, np.asarray(x, dtype=float),
                               side="right") / xs.size


@dataclass
class SpirometryResult:
    fvc: float
    pef: float
    fef_25_75: float
    fv_loop: np.ndarray  # columns: spirometer volume, flow
    clockwise: bool


@dataclass
class EegAnalysis:
    gamma_slope: float
    band_powers: dict[str, float]
    welch_f: np.ndarray
    welch_psd: np.ndarray


def welch_psd(waveform: WaveformBuffer,
              segment_s: float = _WELCH_SEGMENT_S) -> tuple[np.ndarray, np.ndarray]:
    nper = min(len(waveform), int(segment_s * waveform.fs))
    return sps.welch(waveform.samples, fs=waveform.fs, window="hann",
                     nperseg=nper, noverlap=nper // 2)


def band_power(waveform: WaveformBuffer, band: tuple[float, float]) -> float:
    f, pxx = welch_psd(waveform)
    m = (f >= band[0]) & (f <= band[1])
    return float(np.trapezoid(pxx[m], f[m]))


# ---------------------------------------------------------------------------
# Continuous wavelet transform filtering
# ---------------------------------------------------------------------------

def _morlet_scales(f_lo: float, f_hi: float,
                   dj: float = 0.0625) -> tuple[np.ndarray, float]:
    s_min = 1.0 / (_MORLET_FOURIER * f_hi)
    s_max = 1.0 / (_MORLET_FOURIER * f_lo)
    n = int(math.ceil(math.log2(s_max / s_min) / dj)) + 1
    return s_min * 2.0 ** (dj * np.arange(n)), dj


def cwt_filter(waveform: WaveformBuffer, f_lo: float,
               f_hi: float) -> WaveformBuffer:
    """Band-limited reconstruction from the Morlet CWT.

    Coefficients are computed on log-spaced scales whose center
    frequencies cover [f_lo, f_hi] and summed back with the standard
    reconstruction factor; the result is a linear, zero-phase
    band-pass filtering of the input.
    """
    fs = waveform.fs
    if not (0 < f_lo < f_hi < fs / 2):
        raise DomainError("band must satisfy 0 < f_lo < f_hi < fs/2")
    x = waveform.samples
    n = x.size
    dt = 1.0 / fs
    scales, dj = _morlet_scales(f_lo, f_hi)

    # FFT-based CWT with the T&C-normalized Morlet in frequency domain.
    nfft = int(2 ** math.ceil(math.log2(n)))
    w = 2 * math.pi * np.fft.fftfreq(nfft, dt)
    xf = np.fft.fft(x, nfft)
    recon = np.zeros(n)
    for s in scales:
        psi_hat = (math.pi ** -0.25 * math.sqrt(2 * math.pi * s / dt)
                   * np.exp(-0.5 * (s * w - MORLET_W0) ** 2) * (w > 0))
        coef = np.fft.ifft(xf * psi_hat)[:n]
        recon += coef.real / math.sqrt(s)
    recon *= dj * math.sqrt(dt) / (_MORLET_CDELTA * _MORLET_PSI0)
    return waveform.with_samples(recon, label=waveform.label + "_cwt")


# ---------------------------------------------------------------------------
# Event detection
# ---------------------------------------------------------------------------

def detect_r_peaks(ecg: WaveformBuffer, refractory_s: float = 0.25) -> EventSeries:
    """QRS detector: zero-phase 5-25 Hz band-pass, squared energy
    envelope, adaptive threshold, then peak refinement on the band-passed
    trace within +-40 ms."""
    fs = ecg.fs
    if ecg.duration < 2.0:
        raise DomainError("R-peak detection needs at least 2 s of signal")
    x = ecg.samples
    if np.max(np.abs(x)) == 0.0:
        return EventSeries(np.array([]), "r_peak")
    sos = sps.butter(2, [5.0, 25.0], btype="bandpass", fs=fs, output="sos")
    y = sps.sosfiltfilt(sos, x)
    env = sps.convolve(y * y, np.ones(int(0.06 * fs)) / (0.06 * fs),
                       mode="same")
    thr = 0.35 * np.quantile(env, 0.998)
    if thr <= 0:
        return EventSeries(np.array([]), "r_peak")
    locs, _ = sps.find_peaks(env, height=thr, distance=int(refractory_s * fs))
    half = int(0.040 * fs)
    peaks = []
    for loc in locs:
        lo, hi = max(0, loc - half), min(len(y), loc + half + 1)
        peaks.append(lo + int(np.argmax(y[lo:hi])))
    peaks = np.unique(peaks)
    return EventSeries(ecg.t0 + peaks / fs, "r_peak")


def integrate_rc(rc_channel: WaveformBuffer) -> WaveformBuffer:
    """Cumulative trapezoidal integral of the RC channel with drift removal.

    Drift removal is a linear detrend followed by a zero-phase
    first-order 0.05 Hz high-pass, so the output stays in phase with the
    chest displacement.
    """
    x = rc_channel.samples
    dt = 1.0 / rc_channel.fs
    v = integrate.cumulative_trapezoid(x, dx=dt, initial=0.0)
    v = sps.detrend(v, type="linear")
    b, a = sps.butter(1, 0.05, btype="highpass", fs=rc_channel.fs)
    v = sps.filtfilt(b, a, v)
    return rc_channel.with_samples(v, label=rc_channel.label + "_int")


def detect_breath_peaks(integrated: WaveformBuffer,
                        refractory_s: float = 1.0) -> EventSeries:
    """Breath events at local maxima of the integrated RC signal."""
    x = integrated.samples
    fs = integrated.fs
    if np.max(np.abs(x)) == 0.0:
        return EventSeries(np.array([]), "breath_peak")
    span = np.max(x) - np.min(x)
    locs, _ = sps.find_peaks(x, prominence=0.25 * span,
                             distance=int(refractory_s * fs))
    return EventSeries(integrated.t0 + locs / fs, "breath_peak")


# ---------------------------------------------------------------------------
# Timing statistics
# ---------------------------------------------------------------------------

def _match_events(reference: np.ndarray, test: np.ndarray,
                  tolerance: float) -> list[tuple[int, int]]:
    """Nearest-neighbor pairs (ref_idx, test_idx) within the tolerance."""
    pairs = []
    j_used = -1
    for i, tr in enumerate(reference):
        j = int(np.searchsorted(test, tr))
        best, best_err = None, tolerance
        for cand in (j - 1, j):
            if 0 <= cand < test.size and cand > j_used:
                err = abs(test[cand] - tr)
                if err <= best_err:
                    best, best_err = cand, err
        if best is not None:
            pairs.append((i, best))
            j_used = best
    return pairs


def timing_stats(reference: EventSeries, test: EventSeries) -> TimingComparison:
    """Interval-wise differences between matched events of two series.

    Events are matched nearest-neighbor within half the median reference
    interval; only intervals between consecutively matched events are
    compared, so a constant clock offset between the series cancels.
    """
    if len(reference) < 2 or len(test) < 2:
        raise InsufficientDataError("need at least 2 events in each series")
    ref_iv = reference.intervals()
    tol = 0.5 * float(np.median(ref_iv))
    pairs = _match_events(reference.times, test.times, tol)
    if len(pairs) < 2:
        raise InsufficientDataError("fewer than 2 matched events")
    diffs = []
    for (i0, j0), (i1, j1) in zip(pairs[:-1], pairs[1:]):
        if i1 == i0 + 1:  # consecutive reference beats only
            ref_d = reference.times[i1] - reference.times[i0]
            test_d = test.times[j1] - test.times[j0]
            diffs.append(test_d - ref_d)
    if not diffs:
        raise InsufficientDataError("no consecutive matched intervals")
    diffs = np.asarray(diffs)
    mu = float(np.mean(diffs))
    sigma = float(np.std(diffs))
    return TimingComparison(mu, sigma, diffs, (mu, sigma))


# ---------------------------------------------------------------------------
# Spirometry
# ---------------------------------------------------------------------------

def spirometry_analyze(flow: WaveformBuffer,
                       maneuver_factor: float = 2.5) -> SpirometryResult | None:
    """Extract FVC, PEF, and FEF25-75 from an expiratory-positive flow trace.

    The spirometer volume is the running integral of flow.  A maneuver is
    recognized when the volume excursion exceeds ``maneuver_factor`` times
    the median tidal excursion; returns None when no maneuver is found.
    """
    fs = flow.fs
    dt = 1.0 / fs
    vol = integrate.cumulative_trapezoid(flow.samples, dx=dt, initial=0.0)
    span = np.max(vol) - np.min(vol)
    # Tidal reference: median peak-to-trough swing of the volume trace.
    locs, _ = sps.find_peaks(vol, distance=int(1.0 * fs))
    troughs, _ = sps.find_peaks(-vol, distance=int(1.0 * fs))
    swings = []
    for p in locs:
        t_prev = troughs[troughs < p]
        if t_prev.size:
            swings.append(vol[p] - vol[t_prev[-1]])
    tidal = float(np.median(swings)) if swings else span
    if tidal <= 0 or span < maneuver_factor * tidal:
        return None

    i_min = int(np.argmin(vol))                     # end of deep inspiration
    after = vol[i_min:]
    i_max = i_min + int(np.argmax(after))           # end of forced expiration
    fvc = float(vol[i_max] - vol[i_min])
    seg_flow = flow.samples[i_min:i_max + 1]
    seg_vol = vol[i_min:i_max + 1] - vol[i_min]     # expired volume, 0..FVC
    pef = float(np.max(seg_flow))

    t25 = np.interp(0.25 * fvc, seg_vol, np.arange(seg_vol.size) * dt)
    t75 = np.interp(0.75 * fvc, seg_vol, np.arange(seg_vol.size) * dt)
    fef = 0.5 * fvc / (t75 - t25)

    lead = max(0, i_min - int(0.5 * fs))
    loop = np.column_stack((vol[lead:i_max + 1], flow.samples[lead:i_max + 1]))
    circulation = np.trapezoid(loop[:, 1], loop[:, 0])  # integral of flow dV
    return SpirometryResult(fvc=fvc, pef=pef, fef_25_75=float(fef),
                            fv_loop=loop, clockwise=bool(circulation > 0))


# ---------------------------------------------------------------------------
# EEG spectral analysis
# ---------------------------------------------------------------------------

def eeg_analyze(eeg: WaveformBuffer,
                exclude_peaks_hz: tuple[float, ...] = (10.0, 30.0),
                fit_band: tuple[float, float] = (2.0, 40.0)) -> EegAnalysis:
    """Power-law slope and band powers from Welch's PSD estimate.

    The slope gamma is fit by least squares on log PSD vs log f over the
    fit band, excluding +-1 Hz around each configured band peak.
    """
    if eeg.duration < 30.0:
        raise DomainError("EEG slope fit needs at least 30 s of signal")
    f, pxx = welch_psd(eeg)
    m = (f >= fit_band[0]) & (f <= fit_band[1])
    for fp in exclude_peaks_hz:
        m &= np.abs(f - fp) > 1.0
    if np.any(pxx[m] <= 0):
        raise DomainError("non-positive PSD bins in fit band")
    slope, _ = np.polyfit(np.log10(f[m]), np.log10(pxx[m]), 1)
    powers = {}
    for name, band in (("theta", BAND_THETA), ("alpha", BAND_ALPHA),
                       ("beta", BAND_BETA)):
        bm = (f >= band[0]) & (f <= band[1])
        powers[name] = float(np.trapezoid(pxx[bm], f[bm]))
    return EegAnalysis(gamma_slope=float(-slope), band_powers=powers,
                       welch_f=f, welch_psd=pxx)


# ---------------------------------------------------------------------------
# Spectral amplitude
# ---------------------------------------------------------------------------

def fft_amplitude(waveform: WaveformBuffer, f_target: float,
                  search_hz: float = 0.5) -> float:
    """Peak spectral amplitude within f_target +- search_hz.

    Uses a flat-top window (negligible scalloping loss) with coherent
    gain correction, so a unit sinusoid reads 1.0 regardless of bin
    alignment.
    """
    if waveform.duration < 10.0 / f_target:
        raise DomainError("record must cover at least 10 cycles of f_target")
    x = waveform.samples
    n = x.size
    win = sps.windows.flattop(n)
    spec = np.abs(np.fft.rfft(x * win)) * 2.0 / np.sum(win)
    f = np.fft.rfftfreq(n, 1.0 / waveform.fs)
    m = np.abs(f - f_target) <= search_hz
    if not np.any(m):
        raise DomainError("search window contains no FFT bins")
    return float(np.max(spec[m]))


def spectral_peak(waveform: WaveformBuffer,
                  band: tuple[float, float]) -> tuple[float, float]:
    """(frequency, amplitude) of the largest spectral line in the band."""
    x = waveform.samples
    win = sps.windows.flattop(x.size)
    spec = np.abs(np.fft.rfft(x * win)) * 2.0 / np.sum(win)
    f = np.fft.rfftfreq(x.size, 1.0 / waveform.fs)
    m = (f >= band[0]) & (f <= band[1])
    idx = int(np.argmax(spec[m]))
    return float(f[m][idx]), float(spec[m][idx])
