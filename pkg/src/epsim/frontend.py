"""Analog front-end model: TIA variants, the adaptive cancellation loop,
twin-T notches, and the parallel ECG/RC channel chains.

Every continuous-time block is an s-domain rational transfer function;
time-domain runs discretize each block with the bilinear transform,
prewarped at that block's critical frequency.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import signal as sps

from .errors import ConfigurationError, ContractError, DomainError
from .noise import ARCH_CT, NoiseSpec, synth_noise_current
from .waveform import WaveformBuffer


# ---------------------------------------------------------------------------
# Transfer-function plumbing
# ---------------------------------------------------------------------------

class AnalogTF:
    """Rational transfer function in s with helpers for evaluation,
    cascading, and prewarped bilinear discretization."""

    def __init__(self, num, den, name: str = ""):
        self.num = np.atleast_1d(np.asarray(num, dtype=float))
        self.den = np.atleast_1d(np.asarray(den, dtype=float))
        self.name = name

    def response(self, f):
        """Complex response at frequency f (Hz, scalar or array)."""
        s = 2j * math.pi * np.asarray(f, dtype=float)
        return np.polyval(self.num, s) / np.polyval(self.den, s)

    def magnitude_db(self, f):
        return 20.0 * np.log10(np.abs(self.response(f)))

    def phase_deg(self, f):
        return np.degrees(np.angle(self.response(f)))

    def cascade(self, other: "AnalogTF", name: str = "") -> "AnalogTF":
        return AnalogTF(np.polymul(self.num, other.num),
                        np.polymul(self.den, other.den), name or self.name)

    def poles(self) -> np.ndarray:
        return np.roots(self.den)

    def discretize(self, fs: float, prewarp_hz: float | None = None
                   ) -> "DigitalFilter":
        """Bilinear transform, prewarped so ``prewarp_hz`` maps exactly."""
        if prewarp_hz is not None:
            if not 0 < prewarp_hz < fs / 2:
                raise ConfigurationError(
                    f"prewarp frequency {prewarp_hz} Hz outside (0, fs/2)")
            wc = 2 * math.pi * prewarp_hz
            fs_eff = wc / (2 * math.tan(wc / (2 * fs)))
        else:
            fs_eff = fs
        b, a = sps.bilinear(self.num, self.den, fs=fs_eff)
        filt = DigitalFilter(b, a, self.name)
        filt.check_stable()
        return filt

    def frequency_rows(self, freqs) -> list[tuple[float, float, float]]:
        """(f_hz, mag_db, phase_deg) rows for the frequency-response dump."""
        freqs = np.asarray(freqs, dtype=float)
        h = self.response(freqs)
        mag = 20.0 * np.log10(np.maximum(np.abs(h), 1e-300))
        ph = np.degrees(np.angle(h))
        return list(zip(freqs.tolist(), mag.tolist(), ph.tolist()))


@dataclass
class DigitalFilter:
    b: np.ndarray
    a: np.ndarray
    name: str = ""

    def check_stable(self) -> None:
        poles = np.roots(self.a)
        if poles.size and np.max(np.abs(poles)) > 1.0 + 1e-9:
            raise ConfigurationError(
                f"filter {self.name!r} is unstable after discretization "
                f"(|pole| = {np.max(np.abs(poles)):.6f})")

    def apply(self, x: np.ndarray) -> np.ndarray:
        return sps.lfilter(self.b, self.a, x)


def lowpass2_tf(f_c: float, name: str = "") -> AnalogTF:
    """Second-order Butterworth low-pass."""
    w = 2 * math.pi * f_c
    return AnalogTF([w * w], [1.0, math.sqrt(2.0) * w, w * w], name)


def highpass2_tf(f_c: float, name: str = "") -> AnalogTF:
    """Second-order Butterworth high-pass."""
    w = 2 * math.pi * f_c
    return AnalogTF([1.0, 0.0, 0.0], [1.0, math.sqrt(2.0) * w, w * w], name)


# ---------------------------------------------------------------------------
# Configuration
# ---------------------------------------------------------------------------

@dataclass
class BpfConfig:
    """Feedback band-pass filter of the adaptive cancellation loop.

    ``q`` is the quality factor of the closed-loop cancellation notch,
    f_center / (notch -3 dB bandwidth).  The realizing biquad needs a
    quality factor of q * sqrt(a^2 + 2a - 1) for the notch to reach its
    -3 dB points where |1 + H_bpf| = sqrt(2).
    """

    f_center: float = 60.0
    peak_gain_a: float = 2.0
    q: float = 35.0

    def __post_init__(self):
        if self.q <= 0.5:
            raise DomainError("q must exceed 0.5")
        if self.peak_gain_a <= 0:
            raise DomainError("peak gain must be positive")
        if self.f_center <= 0:
            raise DomainError("center frequency must be positive")

    @property
    def biquad_q(self) -> float:
        a = self.peak_gain_a
        factor = a * a + 2 * a - 1
        # The -3 dB notch-width mapping only exists for a > sqrt(2) - 1;
        # below that the cancellation never reaches 3 dB and the biquad
        # quality factor is taken as q directly.
        return self.q * math.sqrt(factor) if factor > 0 else self.q


@dataclass
class SwitchedIntegratorConfig:
    c_f_si: float = 10e-12
    t_s: float = 1.0 / 60.0
    i_rst: float = 100e-15

    def __post_init__(self):
        if self.t_s <= 0 or self.c_f_si <= 0:
            raise DomainError("t_s and c_f_si must be positive")


@dataclass
class ChannelConfig:
    midband_gain_db: float
    f_high: float
    f_low: float | None = None  # None: no band-selector high-pass


@dataclass
class MclConfig:
    estimator_cutoff: float = 2.0
    attenuation: float = 0.7


@dataclass
class FrontEndConfig:
    r_f: float = 150e9
    c_f: float = 0.1e-12
    c_c_nominal: float = 1e-12
    acl_bpf: BpfConfig = field(default_factory=BpfConfig)
    acl_on: bool = True
    aux_loop_db: float = 22.0        # measured PLI suppression of the aux loop
    notch_f0: float = 60.0
    notch_2f0: float = 120.0
    notch_depth_db: float = 30.0
    notch_width_hz: float = 0.8
    ecg_chain: ChannelConfig = field(default_factory=lambda: ChannelConfig(
        midband_gain_db=24.0, f_high=154.0, f_low=0.5))
    rc_chain: ChannelConfig = field(default_factory=lambda: ChannelConfig(
        midband_gain_db=0.0, f_high=5.0))
    mcl: MclConfig = field(default_factory=MclConfig)
    rails_v: float = 4.0

    def __post_init__(self):
        if min(self.r_f, self.c_f, self.c_c_nominal) <= 0:
            raise DomainError("r_f, c_f, c_c_nominal must be positive")
        if self.ecg_chain.f_high <= self.rc_chain.f_high:
            raise DomainError("ECG channel bandwidth must exceed RC bandwidth")

    @property
    def corner_f1(self) -> float:
        """TIA feedback corner 1/(2 pi R_f C_f)."""
        return 1.0 / (2 * math.pi * self.r_f * self.c_f)


# ---------------------------------------------------------------------------
# TIA transfer functions
# ---------------------------------------------------------------------------

def tia_open_loop_tf(cfg: FrontEndConfig, c_c: float) -> AnalogTF:
    """Voltage transfer H0(s) = s C_c R_f / (s C_f R_f + 1).

    First-order high-pass with corner 1/(R_f C_f) and high-frequency
    gain C_c / C_f.
    """
    return AnalogTF([c_c * cfg.r_f, 0.0], [cfg.c_f * cfg.r_f, 1.0],
                    "tia_open_loop")


def tia_transimpedance_tf(cfg: FrontEndConfig) -> AnalogTF:
    """Inverting transimpedance -Z_f(s) = -R_f / (1 + s R_f C_f)."""
    return AnalogTF([-cfg.r_f], [cfg.r_f * cfg.c_f, 1.0], "tia_transimpedance")


def bpf_tf(bpf: BpfConfig) -> AnalogTF:
    """Feedback band-pass biquad with peak gain A at f_center."""
    w0 = 2 * math.pi * bpf.f_center
    beta = w0 / bpf.biquad_q
    return AnalogTF([bpf.peak_gain_a * beta, 0.0], [1.0, beta, w0 * w0], "acl_bpf")


def _acl_polynomials(cfg: FrontEndConfig, c_c: float):
    """Shared numerator pieces and denominator D(s) of the closed loop.

    H(s) = -H0 / (H_bpf (1 + H0) + 1) expands to
    D(s) = A b s (1 + s R_f (C_f + C_c)) + (s^2 + b s + w0^2)(1 + s C_f R_f)
    with b = w0 / Q_biquad.
    """
    bpf = cfg.acl_bpf
    w0 = 2 * math.pi * bpf.f_center
    beta = w0 / bpf.biquad_q
    a_pk = bpf.peak_gain_a
    biquad_den = np.array([1.0, beta, w0 * w0])
    feedback_term = np.polymul([a_pk * beta, 0.0],
                               [cfg.r_f * (cfg.c_f + c_c), 1.0])
    passive_term = np.polymul(biquad_den, [cfg.c_f * cfg.r_f, 1.0])
    den = np.polyadd(feedback_term, passive_term)
    return biquad_den, den


def _check_continuous_stability(den: np.ndarray, name: str) -> None:
    poles = np.roots(den)
    if poles.size and np.max(poles.real) > 0:
        raise ConfigurationError(
            f"{name}: closed loop has a right-half-plane pole "
            f"(max Re = {np.max(poles.real):.3e}); the feedback BPF must be inverting")


def closed_loop_tf(cfg: FrontEndConfig, c_c: float) -> AnalogTF:
    """Closed-loop voltage transfer H = -H0 / (H_bpf (1 + H0) + 1).

    At the BPF center the gain drops by (1 + A) relative to H0 when the
    coupling is weak (|H0| << 1).
    """
    biquad_den, den = _acl_polynomials(cfg, c_c)
    _check_continuous_stability(den, "closed_loop_tf")
    num = np.polymul([-c_c * cfg.r_f, 0.0], biquad_den)
    return AnalogTF(num, den, "tia_closed_loop")


def closed_loop_transimpedance_tf(cfg: FrontEndConfig, c_c: float) -> AnalogTF:
    """Current-to-voltage transfer of the TIA with the cancellation loop,
    -R_f (s^2 + b s + w0^2) / D(s)."""
    biquad_den, den = _acl_polynomials(cfg, c_c)
    _check_continuous_stability(den, "closed_loop_transimpedance_tf")
    num = -cfg.r_f * biquad_den
    return AnalogTF(num, den, "acl_transimpedance")


def weak_coupling_tf(cfg: FrontEndConfig, c_c: float) -> AnalogTF:
    """Weak-coupling approximation H = -H0 / (H_bpf + 1)."""
    bpf = cfg.acl_bpf
    w0 = 2 * math.pi * bpf.f_center
    beta = w0 / bpf.biquad_q
    biquad_den = np.array([1.0, beta, w0 * w0])
    den = np.polymul(np.polyadd([bpf.peak_gain_a * beta, 0.0], biquad_den),
                     [cfg.c_f * cfg.r_f, 1.0])
    num = np.polymul([-c_c * cfg.r_f, 0.0], biquad_den)
    return AnalogTF(num, den, "tia_closed_loop_weak")


def switched_integrator_tz(si: SwitchedIntegratorConfig, f):
    """Complex transimpedance (1 - e^(-s T_s)) / (s C_f) of the switched
    integrator, with the DC limit T_s / C_f handled analytically."""
    f = np.asarray(f, dtype=float)
    if np.any(f < 0):
        raise DomainError("frequency must be non-negative")
    w = 2 * math.pi * f
    with np.errstate(divide="ignore", invalid="ignore"):
        z = np.where(w == 0,
                     si.t_s / si.c_f_si + 0j,
                     -np.expm1(-1j * w * si.t_s) / (1j * w * si.c_f_si))
    if np.isscalar(f) or f.ndim == 0:
        return complex(z)
    return z


def twin_t_notch_tf(f_notch: float, depth_db: float = 30.0,
                    width_hz: float = 0.8) -> AnalogTF:
    """Twin-T notch with finite depth and a -3 dB width of ``width_hz``.

    H(s) = (s^2 + (w0/Qz) s + w0^2) / (s^2 + (w0/Qp) s + w0^2) with
    Qp = f_notch / width and Qz = Qp * 10^(depth/20); passband gain is
    exactly one on both sides of the notch.
    """
    if f_notch <= 0:
        raise DomainError("notch frequency must be positive")
    w0 = 2 * math.pi * f_notch
    q_p = f_notch / width_hz
    q_z = q_p * 10.0 ** (depth_db / 20.0)
    return AnalogTF([1.0, w0 / q_z, w0 * w0], [1.0, w0 / q_p, w0 * w0],
                    f"notch_{f_notch:g}")


def channel_chain_tf(chan: ChannelConfig, name: str) -> AnalogTF:
    """Band-selector + VGA + LPF combined into one rational block."""
    gain = 10.0 ** (chan.midband_gain_db / 20.0)
    tf = AnalogTF([gain], [1.0], name)
    if chan.f_low is not None:
        tf = tf.cascade(highpass2_tf(chan.f_low), name)
    return tf.cascade(lowpass2_tf(chan.f_high), name)


def _channel_sections(chan: ChannelConfig, fs: float, name: str
                      ) -> list[DigitalFilter]:
    """Discretized channel sections, each prewarped at its own corner."""
    gain = 10.0 ** (chan.midband_gain_db / 20.0)
    sections = []
    if chan.f_low is not None:
        sections.append(highpass2_tf(chan.f_low, f"{name}_hp")
                        .discretize(fs, prewarp_hz=chan.f_low))
    lp = lowpass2_tf(chan.f_high, f"{name}_lp")
    lp = AnalogTF(lp.num * gain, lp.den, lp.name)
    sections.append(lp.discretize(fs, prewarp_hz=chan.f_high))
    return sections


def _apply_sections(sections: list[DigitalFilter], x: np.ndarray) -> np.ndarray:
    for sec in sections:
        x = sec.apply(x)
    return x


# ---------------------------------------------------------------------------
# Time-domain simulation
# ---------------------------------------------------------------------------

@dataclass
class FrontEndResult:
    """Two-channel sensor output plus noise-free references and run metadata."""

    ecg_channel: WaveformBuffer
    rc_channel: WaveformBuffer
    ecg_reference: WaveformBuffer
    rc_reference: WaveformBuffer
    tia_output: WaveformBuffer
    tia_reference: WaveformBuffer
    metadata: dict


def _clip_flag(x: np.ndarray, rails: float) -> tuple[np.ndarray, int]:
    n_clipped = int(np.count_nonzero(np.abs(x) > rails))
    if n_clipped:
        x = np.clip(x, -rails, rails)
    return x, n_clipped


def simulate_frontend(source, cfg: FrontEndConfig,
                      noise: NoiseSpec | None = None, seed: int = 0,
                      noise_scale: float = 1.0) -> FrontEndResult:
    """Run the Norton source through the full analog chain.

    Signal path: auxiliary-loop PLI attenuation (tagged PLI component
    only, when the ACL is on), closed-loop TIA transimpedance, f0 and
    2 f0 twin-T notches, then the parallel ECG and RC channels.  Noise
    is injected as input-referred current from the noise model; the
    noise-free path is returned alongside for SNR accounting.  Channel
    saturation clips at the rails and is flagged in the metadata.
    """
    fs = source.i_in.fs
    n = len(source.i_in)
    if fs < 4 * cfg.ecg_chain.f_high:
        raise ContractError(
            f"source rate {fs} Hz below 4x ECG bandwidth "
            f"({4 * cfg.ecg_chain.f_high} Hz)")

    aux_gain = 10.0 ** (-cfg.aux_loop_db / 20.0) if cfg.acl_on else 1.0
    i_sig = np.zeros(n)
    for tag, term in source.components.items():
        i_sig += term * (aux_gain if tag == "pli" else 1.0)

    c_c_eff = float(np.mean(source.c_c.samples))
    if cfg.acl_on:
        tia = closed_loop_transimpedance_tf(cfg, c_c_eff).discretize(
            fs, prewarp_hz=cfg.acl_bpf.f_center)
    else:
        tia = tia_transimpedance_tf(cfg).discretize(
            fs, prewarp_hz=cfg.corner_f1)
    notches = [
        twin_t_notch_tf(cfg.notch_f0, cfg.notch_depth_db, cfg.notch_width_hz)
        .discretize(fs, prewarp_hz=cfg.notch_f0),
        twin_t_notch_tf(cfg.notch_2f0, cfg.notch_depth_db, cfg.notch_width_hz)
        .discretize(fs, prewarp_hz=cfg.notch_2f0),
    ]
    ecg_sections = _channel_sections(cfg.ecg_chain, fs, "ecg")
    rc_sections = _channel_sections(cfg.rc_chain, fs, "rc")

    v_ref = tia.apply(i_sig)
    if noise is not None:
        i_noise = synth_noise_current(noise, c_c_eff, ARCH_CT, fs, n / fs,
                                      seed).samples * noise_scale
        v_tia = v_ref + tia.apply(i_noise)
    else:
        v_tia = v_ref.copy()

    v_tia, clipped_tia = _clip_flag(v_tia, cfg.rails_v)
    v_f = _apply_sections(notches, v_tia)
    v_f_ref = _apply_sections(notches, v_ref)

    ecg = _apply_sections(ecg_sections, v_f)
    rc = _apply_sections(rc_sections, v_f)
    ecg_ref = _apply_sections(ecg_sections, v_f_ref)
    rc_ref = _apply_sections(rc_sections, v_f_ref)
    ecg, clipped_ecg = _clip_flag(ecg, cfg.rails_v)
    rc, clipped_rc = _clip_flag(rc, cfg.rails_v)

    meta = {
        "c_c_eff": c_c_eff,
        "acl_on": cfg.acl_on,
        "aux_loop_db": cfg.aux_loop_db if cfg.acl_on else 0.0,
        "seed": seed,
        "noise_scale": noise_scale if noise is not None else 0.0,
        "saturated": bool(clipped_tia or clipped_ecg or clipped_rc),
        "clipped_samples": {"tia": clipped_tia, "ecg": clipped_ecg,
                            "rc": clipped_rc},
    }
    mk = lambda x, label: WaveformBuffer(x, fs, source.i_in.t0, label)
    return FrontEndResult(
        ecg_channel=mk(ecg, "ecg"), rc_channel=mk(rc, "rc"),
        ecg_reference=mk(ecg_ref, "ecg_ref"), rc_reference=mk(rc_ref, "rc_ref"),
        tia_output=mk(v_tia, "tia"), tia_reference=mk(v_ref, "tia_ref"),
        metadata=meta)


# ---------------------------------------------------------------------------
# Motion cancellation loop
# ---------------------------------------------------------------------------

@dataclass
class MclResult:
    cancelled: WaveformBuffer
    suppression_db: float


def _band_power(x: np.ndarray, fs: float, band: tuple[float, float]) -> float:
    nper = min(len(x), int(8 * fs))
    f, pxx = sps.welch(x, fs=fs, nperseg=nper)
    m = (f >= band[0]) & (f <= band[1])
    return float(np.trapezoid(pxx[m], f[m]))


def mcl_apply(waveform: WaveformBuffer, mcl: MclConfig,
              artifact_band: tuple[float, float] = (0.05, 2.0)) -> MclResult:
    """Subtract an attenuated low-pass motion estimate from the signal.

    ``suppression_db`` is the artifact-band power ratio before/after.
    The estimator cutoff must sit below the signal band of interest and
    the attenuation strictly below one for loop stability.
    """
    if mcl.attenuation >= 1.0:
        raise ConfigurationError("MCL attenuation must be < 1 for stability")
    if mcl.estimator_cutoff <= 0:
        raise ConfigurationError("estimator cutoff must be positive")
    est = lowpass2_tf(mcl.estimator_cutoff, "mcl_estimator").discretize(
        waveform.fs, prewarp_hz=mcl.estimator_cutoff)
    x = waveform.samples
    out = x - mcl.attenuation * est.apply(x)
    before = _band_power(x, waveform.fs, artifact_band)
    after = _band_power(out, waveform.fs, artifact_band)
    if after <= 0 or before <= 0:
        supp = 0.0
    else:
        supp = 10.0 * math.log10(before / after)
    return MclResult(waveform.with_samples(out, label=waveform.label + "_mcl"),
                     supp)


# Named blocks for the frequency-response dump.
def named_block_tf(name: str, cfg: FrontEndConfig, c_c: float | None = None
                   ) -> AnalogTF:
    c_c = cfg.c_c_nominal if c_c is None else c_c
    if name == "tia_open_loop":
        return tia_open_loop_tf(cfg, c_c)
    if name == "tia_closed_loop":
        return closed_loop_tf(cfg, c_c)
    if name == "acl_transimpedance":
        return closed_loop_transimpedance_tf(cfg, c_c)
    if name == "acl_bpf":
        return bpf_tf(cfg.acl_bpf)
    if name == "notch_f0":
        return twin_t_notch_tf(cfg.notch_f0, cfg.notch_depth_db,
                               cfg.notch_width_hz)
    if name == "notch_2f0":
        return twin_t_notch_tf(cfg.notch_2f0, cfg.notch_depth_db,
                               cfg.notch_width_hz)
    if name == "ecg_chain":
        return channel_chain_tf(cfg.ecg_chain, "ecg_chain")
    if name == "rc_chain":
        return channel_chain_tf(cfg.rc_chain, "rc_chain")
    raise DomainError(f"unknown block {name!r}")
