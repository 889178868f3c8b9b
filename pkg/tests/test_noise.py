import math
from dataclasses import replace

import numpy as np
import pytest
from scipy import signal as sps

from epsim.constants import K_B, Q_E
from epsim.errors import DomainError
from epsim.noise import (ARCH_CT, ARCH_SI, STATUS_LOWER_BOUND,
                         STATUS_OUT_OF_RANGE, BandSpec, NoiseSpec,
                         ct_noise_psd, integrated_input_noise,
                         min_coupling_for_snr, noise_psd_terms, si_noise_psd,
                         synth_noise, voltage_noise_psd)

# Golden value: dense-trapezoid oracle (1e6 + 1 uniform points over the
# ECG band) of the default NoiseSpec CT voltage-noise PSD at C_c = 1 pF.
GOLDEN_VN_ECG_CT_1PF = 5.396478173404647e-05


def test_spec_reproduces_published_current_noise_floor():
    spec = NoiseSpec()
    # 2 q I_b,eff with I_b,eff = 15.3 fA gives 0.07 fA/rtHz
    assert math.sqrt(spec.i_n_sq_white) == pytest.approx(0.07e-15, rel=0.01)


def test_spec_validation():
    with pytest.raises(DomainError):
        NoiseSpec(e_n_white=-1.0)
    with pytest.raises(DomainError):
        NoiseSpec(temperature=0.0)
    with pytest.raises(DomainError):
        NoiseSpec(reset_switch="relay")
    with pytest.raises(DomainError):
        BandSpec(10.0, 5.0)


def test_ct_psd_reduces_to_shot_floor():
    # voltage-noise and thermal paths disabled: PSD = 2 q I_b,eff
    spec = NoiseSpec(e_n_white=1e-30, r_f=1e30, r_leak=math.inf)
    psd = ct_noise_psd(spec, 1e-12, 10.0)
    assert psd == pytest.approx(spec.i_n_sq_white, rel=1e-6)
    assert math.sqrt(psd) == pytest.approx(0.07e-15, rel=0.01)


def test_thermal_term_alone():
    # sqrt(4kT/R_f) at 300 K and 150 GOhm is about 0.33 fA/rtHz
    assert math.sqrt(4 * K_B * 300.0 / 150e9) == pytest.approx(0.33e-15,
                                                               rel=0.01)
    spec = NoiseSpec(temperature=300.0)
    _, _, thermal, _ = noise_psd_terms(spec, 1e-12, 10.0, ARCH_CT)
    assert float(thermal) == pytest.approx(4 * K_B * 300.0 / 150e9, rel=1e-9)


def test_ct_psd_increases_with_coupling_capacitance():
    spec = NoiseSpec()
    vals = [float(ct_noise_psd(spec, c * 1e-12, 10.0)) for c in (1, 4, 8)]
    assert vals[0] < vals[1] < vals[2]


def test_si_reset_shot_term():
    # sqrt(4 q I_rst) with the 100 fA reset diode is about 0.25 fA/rtHz
    assert math.sqrt(4 * Q_E * 100e-15) == pytest.approx(0.25e-15, rel=0.02)
    spec = NoiseSpec(r_leak=math.inf)
    _, _, thermal, _ = noise_psd_terms(spec, 1e-12, 10.0, ARCH_SI)
    assert float(thermal) == pytest.approx(4 * Q_E * spec.i_rst, rel=1e-9)


def test_si_reduces_to_ct_with_open_feedback():
    # I_rst = 0 and R_leak -> inf: Eq with the reset term removed equals
    # the continuous-time form with R_f -> inf and the SI feedback cap.
    spec_si = NoiseSpec(i_rst=0.0, r_leak=math.inf)
    spec_ct = replace(spec_si, r_f=1e30, c_f=spec_si.c_f_si)
    f = np.logspace(-1, 3, 50)
    a = si_noise_psd(spec_si, 2e-12, f)
    b = ct_noise_psd(spec_ct, 2e-12, f)
    assert np.allclose(a, b, rtol=1e-9)


def test_si_electromechanical_variant():
    spec = NoiseSpec(reset_switch="electromechanical", r_rst=1e12,
                     r_leak=math.inf)
    _, _, thermal, _ = noise_psd_terms(spec, 1e-12, 10.0, ARCH_SI)
    assert float(thermal) == pytest.approx(
        4 * K_B * spec.temperature / 1e12, rel=1e-9)


def test_si_psd_dominates_open_feedback_ct():
    # adding the non-negative reset shot term can only raise the PSD
    spec = NoiseSpec()
    spec_ct = replace(spec, r_f=1e30, c_f=spec.c_f_si)
    f = np.logspace(-2, 4, 200)
    assert np.all(si_noise_psd(spec, 1e-12, f)
                  >= ct_noise_psd(spec_ct, 1e-12, f))


def test_psd_positive_and_continuous():
    spec = NoiseSpec()
    f = np.logspace(math.log10(0.01), 4, 4000)
    for arch in (ARCH_CT, ARCH_SI):
        psd = np.asarray([float(x) for x in
                          np.atleast_1d(ct_noise_psd(spec, 1e-12, f)
                                        if arch == ARCH_CT
                                        else si_noise_psd(spec, 1e-12, f))])
        assert np.all(np.isfinite(psd)) and np.all(psd > 0)
        # no jumps: neighboring samples stay within 5% on this fine grid
        assert np.max(np.abs(np.diff(psd) / psd[:-1])) < 0.05


def test_psd_rejects_nonpositive_frequency():
    spec = NoiseSpec()
    with pytest.raises(DomainError):
        ct_noise_psd(spec, 1e-12, 0.0)
    with pytest.raises(DomainError):
        ct_noise_psd(spec, 1e-12, -5.0)


def test_integrated_noise_matches_trapezoid_golden():
    spec = NoiseSpec()
    v = integrated_input_noise(spec, 1e-12, BandSpec.ecg(), ARCH_CT)
    assert v == pytest.approx(GOLDEN_VN_ECG_CT_1PF, rel=1e-3)


def test_integrated_noise_monotone_and_emg_lowest():
    spec = NoiseSpec()
    for arch in (ARCH_CT, ARCH_SI):
        per_band = {}
        for band in (BandSpec.ecg(), BandSpec.eeg(), BandSpec.emg()):
            vals = [integrated_input_noise(spec, c * 1e-12, band, arch)
                    for c in (1, 2, 4, 8)]
            assert all(a > b for a, b in zip(vals, vals[1:]))
            per_band[band.name] = vals
        for i in range(4):
            assert per_band["emg"][i] < per_band["ecg"][i]
            assert per_band["emg"][i] < per_band["eeg"][i]


def test_integrated_noise_inverse_capacitance_slope():
    # with voltage-noise and thermal terms switched off the shot term
    # dominates and v_n scales exactly as 1/C_c
    spec = NoiseSpec(e_n_white=1e-30, r_f=1e30, r_leak=math.inf)
    cs = np.array([1, 2, 4, 8]) * 1e-12
    vals = np.array([integrated_input_noise(spec, c, BandSpec.ecg(), ARCH_CT)
                     for c in cs])
    slope = np.polyfit(np.log(cs), np.log(vals), 1)[0]
    assert slope == pytest.approx(-1.0, abs=1e-6)


def test_min_coupling_thresholds():
    spec = NoiseSpec()
    ecg = min_coupling_for_snr(spec, 0.5e-3, 10.0, BandSpec.ecg(), ARCH_CT)
    assert ecg.status == "ok"
    assert 0.5e-12 <= ecg.c_c <= 2e-12          # within factor 2 of 1 pF
    eeg = min_coupling_for_snr(spec, 20e-6, 2.0, BandSpec.eeg(), ARCH_CT)
    assert eeg.status == "ok"
    assert 2e-12 <= eeg.c_c <= 8e-12            # within factor 2 of 4 pF


def test_min_coupling_bracket_edges():
    spec = NoiseSpec()
    low = min_coupling_for_snr(spec, 0.5e-3, 1e-9, BandSpec.ecg(), ARCH_CT)
    assert low.status == STATUS_LOWER_BOUND and low.c_c == 0.01e-12
    high = min_coupling_for_snr(spec, 1e-9, 1e6, BandSpec.ecg(), ARCH_CT)
    assert high.status == STATUS_OUT_OF_RANGE
    with pytest.raises(DomainError):
        min_coupling_for_snr(spec, 1.0, 0.0, BandSpec.ecg(), ARCH_CT)


def test_synth_noise_deterministic():
    spec = NoiseSpec()
    a = synth_noise(spec, 1e-12, ARCH_CT, 1000.0, 10.0, 3)
    b = synth_noise(spec, 1e-12, ARCH_CT, 1000.0, 10.0, 3)
    assert np.array_equal(a.samples, b.samples)


def test_synth_noise_flat_psd_variance():
    # a flat one-sided PSD S integrates to S * fs/2 of variance
    from epsim.noise import _shape_noise
    fs, n = 1000.0, 120_000
    s0 = 2.5e-9
    psd = np.full(n // 2 + 1, s0)
    rng = np.random.default_rng(0)
    x = _shape_noise(psd, n, fs, rng)
    assert np.var(x) == pytest.approx(s0 * fs / 2, rel=0.05)


@pytest.mark.parametrize("arch", [ARCH_CT, ARCH_SI])
def test_synth_noise_psd_matches_model_per_octave(arch):
    spec = NoiseSpec()
    fs, dur = 2000.0, 60.0
    ratios = []
    for seed in range(4):
        w = synth_noise(spec, 1e-12, arch, fs, dur, seed)
        f, pxx = sps.welch(w.samples, fs=fs, nperseg=int(8 * fs),
                           noverlap=int(4 * fs))
        m = f >= 1.0
        ratios.append(pxx[m] / voltage_noise_psd(spec, 1e-12, f[m], arch))
    r = np.mean(ratios, axis=0)
    fgrid = f[m]
    lo = 1.0
    while lo * 2 <= fs / 4:
        sel = (fgrid >= lo) & (fgrid < lo * 2)
        dev_db = 10 * np.log10(np.mean(r[sel]))
        assert abs(dev_db) <= 1.0, f"octave {lo}-{lo * 2} Hz off by {dev_db} dB"
        lo *= 2
