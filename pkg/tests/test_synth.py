import math

import numpy as np
import pytest
from scipy import signal as sps

from epsim.analysis import eeg_analyze
from epsim.errors import DomainError
from epsim.synth import (ECG_PTP_VOLTS, EEG_RMS_VOLTS, SubjectProfile,
                         synth_ecg, synth_eeg, synth_motion_artifact,
                         synth_pli, synth_respiration)

FS = 1000.0


def test_profile_validation():
    with pytest.raises(DomainError):
        SubjectProfile(hr_bpm=10.0)
    with pytest.raises(DomainError):
        SubjectProfile(hr_bpm=300.0)
    with pytest.raises(DomainError):
        SubjectProfile(rr_per_min=1.0)
    with pytest.raises(DomainError):
        SubjectProfile(eeg_gamma=-0.1)
    with pytest.raises(DomainError):
        SubjectProfile(rc_pattern="zigzag")


def test_ecg_mean_rr_at_72_bpm():
    _, r = synth_ecg(SubjectProfile(hr_bpm=72.0, hrv_jitter_s=0.0), FS, 30.0, 0)
    assert np.mean(np.diff(r)) == pytest.approx(60.0 / 72.0, rel=1e-9)
    assert np.mean(np.diff(r)) == pytest.approx(0.8333, abs=1e-4)


def test_ecg_zero_jitter_gives_equal_intervals():
    _, r = synth_ecg(SubjectProfile(hrv_jitter_s=0.0), FS, 30.0, 3)
    assert np.ptp(np.diff(r)) < 1e-9


def test_ecg_amplitude_normalized():
    w, _ = synth_ecg(SubjectProfile(hrv_jitter_s=0.0), FS, 30.0, 0)
    assert np.ptp(w.samples) == pytest.approx(ECG_PTP_VOLTS, abs=1e-6 * 0.5e-3)


def test_ecg_requires_two_beats():
    with pytest.raises(DomainError):
        synth_ecg(SubjectProfile(hr_bpm=60.0), FS, 1.0, 0)


def test_ecg_event_times_inside_record():
    for seed in range(5):
        w, r = synth_ecg(SubjectProfile(), FS, 20.0, seed)
        assert np.all(r >= w.t0) and np.all(r <= w.t0 + w.duration)


def test_ecg_deterministic():
    a, ra = synth_ecg(SubjectProfile(), FS, 15.0, 11)
    b, rb = synth_ecg(SubjectProfile(), FS, 15.0, 11)
    assert np.array_equal(a.samples, b.samples)
    assert np.array_equal(ra, rb)


def test_respiration_peak_spacing_exact():
    _, peaks = synth_respiration(SubjectProfile(rr_per_min=12.0), FS, 60.0)
    assert np.allclose(np.diff(peaks), 5.0, rtol=0, atol=1e-12)


def test_respiration_requires_two_cycles():
    with pytest.raises(DomainError):
        synth_respiration(SubjectProfile(rr_per_min=12.0), FS, 8.0)


def test_respiration_fvc_single_global_maximum():
    prof = SubjectProfile(rr_per_min=12.0, rc_pattern="forced_fvc")
    w, peaks = synth_respiration(prof, FS, 60.0)
    x = w.samples
    i_max = int(np.argmax(x))
    # the global maximum is the maneuver peak and it is unique
    assert np.count_nonzero(x == x[i_max]) == 1
    assert peaks[-1] == pytest.approx(i_max / FS, abs=1e-9)
    shallow_peak = np.max(np.abs(x[:int(10 * FS)]))
    assert x[i_max] > 2 * shallow_peak


def test_respiration_flow_integrates_back_to_displacement():
    # Midpoint-grid flow (forward difference) and its running integral
    # form an exact inverse pair; the round trip must recover the trace.
    prof = SubjectProfile(rr_per_min=12.0, rc_pattern="forced_fvc")
    w, _ = synth_respiration(prof, FS, 60.0)
    flow = np.diff(w.samples) * FS
    redisp = w.samples[0] + np.concatenate(([0.0], np.cumsum(flow) / FS))
    err = np.max(np.abs(redisp - w.samples)) / np.max(np.abs(w.samples))
    assert err < 1e-6


def test_eeg_slope_recovery():
    prof = SubjectProfile(eeg_gamma=2.36)
    fits = [eeg_analyze(synth_eeg(prof, FS, 60.0, seed)).gamma_slope
            for seed in range(10)]
    assert np.mean(fits) == pytest.approx(2.36, abs=0.1)


def test_eeg_white_case_flat_and_variance_matched():
    prof = SubjectProfile(eeg_gamma=0.0, eeg_band_peaks=())
    w = synth_eeg(prof, FS, 60.0, 5)
    assert np.var(w.samples) == pytest.approx(EEG_RMS_VOLTS ** 2, rel=0.05)
    res = eeg_analyze(w, exclude_peaks_hz=())
    assert abs(res.gamma_slope) < 0.1


def test_eeg_eyes_closed_raises_alpha_power():
    for seed in (0, 1, 2):
        a_open = eeg_analyze(synth_eeg(SubjectProfile(eyes="open"), FS, 60.0,
                                       seed)).band_powers["alpha"]
        a_closed = eeg_analyze(synth_eeg(SubjectProfile(eyes="closed"), FS,
                                         60.0, seed)).band_powers["alpha"]
        assert a_closed > a_open


def test_eeg_requires_min_rate():
    with pytest.raises(DomainError):
        synth_eeg(SubjectProfile(), 100.0, 60.0, 0)


def test_eeg_deterministic():
    a = synth_eeg(SubjectProfile(), FS, 30.0, 4)
    b = synth_eeg(SubjectProfile(), FS, 30.0, 4)
    assert np.array_equal(a.samples, b.samples)


def test_pli_fundamental_rms():
    w = synth_pli(60.0, {1: 1.0}, 0.0, FS, 20.0)
    assert np.std(w.samples) == pytest.approx(1 / math.sqrt(2), rel=1e-4)


def test_pli_harmonic_bins():
    # fs and N chosen so 60 and 120 Hz fall on exact FFT bins
    fs, dur = 1000.0, 4.0
    w = synth_pli(60.0, {1: 1.0, 2: 0.3}, 0.0, fs, dur)
    spec = np.abs(np.fft.rfft(w.samples)) / (len(w) / 2)
    f = np.fft.rfftfreq(len(w), 1 / fs)
    assert spec[np.argmin(np.abs(f - 60))] == pytest.approx(1.0, rel=1e-6)
    assert spec[np.argmin(np.abs(f - 120))] == pytest.approx(0.3, rel=1e-6)


def test_pli_zero_drift_single_bin_leakage():
    fs, dur = 1000.0, 4.0
    w = synth_pli(60.0, {1: 1.0}, 0.0, fs, dur)
    spec = np.abs(np.fft.rfft(w.samples))
    f = np.fft.rfftfreq(len(w), 1 / fs)
    k0 = int(np.argmin(np.abs(f - 60)))
    carrier = spec[k0]
    others = np.delete(spec, [k0])
    assert 20 * np.log10(np.max(others) / carrier) < -60


def test_motion_zero_events_is_silent():
    w = synth_motion_artifact([], 1.0, FS, 10.0, 0)
    assert np.all(w.samples == 0.0)


def test_motion_energy_below_2hz():
    w = synth_motion_artifact([3.0, 7.0, 12.0], 0.02, FS, 20.0, 2)
    f, pxx = sps.periodogram(w.samples, fs=FS)
    total = np.trapezoid(pxx, f)
    low = np.trapezoid(pxx[f <= 2.0], f[f <= 2.0])
    assert low / total >= 0.95


def test_motion_deterministic_and_nonnegative_amp_check():
    a = synth_motion_artifact([2.0], 0.01, FS, 5.0, 7)
    b = synth_motion_artifact([2.0], 0.01, FS, 5.0, 7)
    assert np.array_equal(a.samples, b.samples)
    with pytest.raises(DomainError):
        synth_motion_artifact([2.0], -0.5, FS, 5.0, 7)
