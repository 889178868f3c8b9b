"""Scenario configuration (line-oriented text format) and the
synthesize -> couple -> simulate pipeline behind the CLI.

Config files use ``[section]`` headers and ``key = value`` lines with
explicit units in key names (e.g. ``distance_cm``); unknown sections or
keys are rejected with line diagnostics.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .coupling import (CouplingGeometry, SubjectSignals, TriboelectricState,
                       build_norton_source)
from .errors import EpsimError
from .frontend import (BpfConfig, ChannelConfig, FrontEndConfig, MclConfig,
                       FrontEndResult, mcl_apply, simulate_frontend)
from .noise import NoiseSpec
from .synth import (PliSpec, SubjectProfile, synth_ecg, synth_eeg,
                    synth_motion_artifact, synth_respiration)
from .waveform import WaveformBuffer


class ConfigError(EpsimError, ValueError):
    """Invalid scenario configuration; message carries line/field context."""


# Attenuation presets for the cardiac path in sleep-like postures.
POSTURE_ECG_SCALE = {"upright": 1.0, "upward": 1.0, "side": 0.5}

# Section -> key -> (type tag, default).  Type tags: f float, i int,
# b bool, s string.
_SCHEMA: dict[str, dict[str, tuple[str, object]]] = {
    "run": {
        "duration_s": ("f", 40.0),
        "fs_hz": ("f", 1000.0),
        "seed": ("i", 0),
        "signals": ("s", "ecg,rc"),
    },
    "subject": {
        "hr_bpm": ("f", 72.0),
        "hrv_jitter_ms": ("f", 20.0),
        "rr_per_min": ("f", 12.0),
        "rc_pattern": ("s", "shallow"),
        "breath_amp_mm": ("f", 5.0),
        "fvc_depth_factor": ("f", 5.0),
        "eeg_gamma": ("f", 2.36),
        "eeg_alpha_hz": ("f", 10.0),
        "eeg_alpha_rel": ("f", 2.0),
        "eeg_beta_hz": ("f", 30.0),
        "eeg_beta_rel": ("f", 0.8),
        "eyes": ("s", "open"),
        "blink_per_min": ("f", 0.0),
    },
    "geometry": {
        "distance_cm": ("f", 30.0),
        "angle_deg": ("f", 0.0),
        "electrode_side_mm": ("f", 40.0),
        "ecg_decay_exponent": ("f", 2.5),
        "rc_decay_exponent": ("f", 2.0),
        "reference_distance_cm": ("f", 30.0),
        "posture": ("s", "upright"),
    },
    "coupling": {
        "v_body_v": ("f", 10.0),
        "bcg_peak_disp_um": ("f", 500.0),
        "tribo_initial_scale": ("f", 1.0),
        "tribo_tau_s": ("f", 25.0),
    },
    "pli": {
        "enabled": ("b", False),
        "f0_hz": ("f", 60.0),
        "amplitude_v": ("f", 0.05),
        "harmonic2_v": ("f", 0.01),
        "drift_ppm": ("f", 0.0),
    },
    "frontend": {
        "r_f_gohm": ("f", 150.0),
        "c_f_pf": ("f", 0.1),
        "acl_on": ("b", True),
        "aux_loop_db": ("f", 22.0),
        "bpf_center_hz": ("f", 60.0),
        "bpf_gain": ("f", 2.0),
        "bpf_q": ("f", 35.0),
        "notch_f0_hz": ("f", 60.0),
        "notch_2f0_hz": ("f", 120.0),
        "notch_depth_db": ("f", 30.0),
        "notch_width_hz": ("f", 0.8),
        "ecg_gain_db": ("f", 24.0),
        "ecg_f_high_hz": ("f", 154.0),
        "ecg_f_low_hz": ("f", 0.5),
        "rc_f_high_hz": ("f", 5.0),
        "rails_v": ("f", 4.0),
    },
    "noise": {
        "enabled": ("b", True),
        "scale": ("f", 1.0),
        "e_n_nv": ("f", 14.0),
        "e_n_corner_hz": ("f", 300.0),
        "i_b_eff_fa": ("f", 15.3),
        "c_in_pf": ("f", 8.0),
    },
    "mcl": {
        "enabled": ("b", False),
        "estimator_cutoff_hz": ("f", 2.0),
        "attenuation": ("f", 0.7),
    },
    "motion": {
        "enabled": ("b", False),
        "event_interval_s": ("f", 4.0),
        "amplitude_mm": ("f", 20.0),
    },
    "sweep": {
        "parameter": ("s", ""),
        "start": ("f", 0.0),
        "stop": ("f", 0.0),
        "step": ("f", 1.0),
        "repeats": ("i", 1),
    },
}

_VALID_SIGNALS = ("ecg", "rc", "eeg", "motion")


def _parse_value(tag: str, raw: str, where: str):
    raw = raw.strip()
    try:
        if tag == "f":
            return float(raw)
        if tag == "i":
            return int(raw)
        if tag == "b":
            if raw.lower() in ("true", "yes", "on", "1"):
                return True
            if raw.lower() in ("false", "no", "off", "0"):
                return False
            raise ValueError(f"not a boolean: {raw!r}")
        return raw
    except ValueError as exc:
        raise ConfigError(f"{where}: {exc}") from exc


@dataclass
class ScenarioConfig:
    """Fully validated scenario: section -> key -> typed value."""

    values: dict[str, dict[str, object]]
    text: str = ""

    def __getitem__(self, section: str) -> dict[str, object]:
        return self.values[section]

    @property
    def seed(self) -> int:
        return int(self.values["run"]["seed"])

    def config_hash(self) -> str:
        return hashlib.sha256(self.text.encode("utf-8")).hexdigest()

    def signals(self) -> list[str]:
        raw = str(self.values["run"]["signals"])
        return [s.strip() for s in raw.split(",") if s.strip()]

    def sweep_points(self) -> list[tuple[int, float, int]]:
        """(recording index, swept value, repeat) triples; a single point
        when no sweep is configured."""
        sweep = self.values["sweep"]
        if not sweep["parameter"]:
            return [(0, float("nan"), 0)]
        start, stop, step = (float(sweep["start"]), float(sweep["stop"]),
                             float(sweep["step"]))
        if step <= 0 or stop < start:
            raise ConfigError("[sweep]: require step > 0 and stop >= start")
        n = int(round((stop - start) / step)) + 1
        points = []
        idx = 0
        for rep in range(int(sweep["repeats"])):
            for k in range(n):
                points.append((idx, start + k * step, rep))
                idx += 1
        return points


def parse_config(text: str) -> ScenarioConfig:
    """Parse and validate a scenario config; unknown keys are errors."""
    values = {sec: {k: default for k, (_, default) in keys.items()}
              for sec, keys in _SCHEMA.items()}
    section = None
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if stripped.startswith("[") and stripped.endswith("]"):
            section = stripped[1:-1].strip()
            if section not in _SCHEMA:
                raise ConfigError(f"line {lineno}: unknown section [{section}]")
            continue
        if "=" not in stripped:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        if section is None:
            raise ConfigError(f"line {lineno}: key outside any [section]")
        key, raw = (part.strip() for part in stripped.split("=", 1))
        if key not in _SCHEMA[section]:
            raise ConfigError(f"line {lineno}: unknown key {key!r} in [{section}]")
        tag = _SCHEMA[section][key][0]
        values[section][key] = _parse_value(tag, raw, f"line {lineno}: {key}")

    cfg = ScenarioConfig(values=values, text=text)
    for sig in cfg.signals():
        if sig not in _VALID_SIGNALS:
            raise ConfigError(f"[run] signals: unknown signal {sig!r}")
    posture = str(values["geometry"]["posture"])
    if posture not in POSTURE_ECG_SCALE:
        raise ConfigError(f"[geometry] posture: unknown posture {posture!r}")
    sweep_param = str(values["sweep"]["parameter"])
    if sweep_param and sweep_param != "distance_cm":
        raise ConfigError("[sweep] parameter: only distance_cm is sweepable")
    return cfg


def load_config(path) -> ScenarioConfig:
    with open(path) as fh:
        return parse_config(fh.read())


def build_profile(cfg: ScenarioConfig) -> SubjectProfile:
    s = cfg["subject"]
    return SubjectProfile(
        hr_bpm=float(s["hr_bpm"]),
        hrv_jitter_s=float(s["hrv_jitter_ms"]) * 1e-3,
        rr_per_min=float(s["rr_per_min"]),
        rc_pattern=str(s["rc_pattern"]),
        breath_amp_m=float(s["breath_amp_mm"]) * 1e-3,
        fvc_depth_factor=float(s["fvc_depth_factor"]),
        eeg_gamma=float(s["eeg_gamma"]),
        eeg_band_peaks=((float(s["eeg_alpha_hz"]), float(s["eeg_alpha_rel"])),
                        (float(s["eeg_beta_hz"]), float(s["eeg_beta_rel"]))),
        eyes=str(s["eyes"]),
        blink_rate=float(s["blink_per_min"]),
    )


def build_geometry(cfg: ScenarioConfig, distance_cm: float | None = None
                   ) -> CouplingGeometry:
    g = cfg["geometry"]
    d_cm = float(g["distance_cm"]) if distance_cm is None else distance_cm
    return CouplingGeometry(
        electrode_side_w=float(g["electrode_side_mm"]) * 1e-3,
        distance_d=d_cm * 1e-2,
        angle_theta=math.radians(float(g["angle_deg"])),
        ecg_decay_exponent=float(g["ecg_decay_exponent"]),
        rc_decay_exponent=float(g["rc_decay_exponent"]),
    )


def build_frontend(cfg: ScenarioConfig) -> FrontEndConfig:
    f = cfg["frontend"]
    return FrontEndConfig(
        r_f=float(f["r_f_gohm"]) * 1e9,
        c_f=float(f["c_f_pf"]) * 1e-12,
        acl_on=bool(f["acl_on"]),
        aux_loop_db=float(f["aux_loop_db"]),
        acl_bpf=BpfConfig(f_center=float(f["bpf_center_hz"]),
                          peak_gain_a=float(f["bpf_gain"]),
                          q=float(f["bpf_q"])),
        notch_f0=float(f["notch_f0_hz"]),
        notch_2f0=float(f["notch_2f0_hz"]),
        notch_depth_db=float(f["notch_depth_db"]),
        notch_width_hz=float(f["notch_width_hz"]),
        ecg_chain=ChannelConfig(midband_gain_db=float(f["ecg_gain_db"]),
                                f_high=float(f["ecg_f_high_hz"]),
                                f_low=float(f["ecg_f_low_hz"])),
        rc_chain=ChannelConfig(midband_gain_db=0.0,
                               f_high=float(f["rc_f_high_hz"])),
        mcl=MclConfig(estimator_cutoff=float(cfg["mcl"]["estimator_cutoff_hz"]),
                      attenuation=float(cfg["mcl"]["attenuation"])),
        rails_v=float(f["rails_v"]),
    )


def build_noise(cfg: ScenarioConfig) -> NoiseSpec | None:
    n = cfg["noise"]
    if not n["enabled"]:
        return None
    return NoiseSpec(
        e_n_white=float(n["e_n_nv"]) * 1e-9,
        e_n_corner=float(n["e_n_corner_hz"]),
        i_b_eff=float(n["i_b_eff_fa"]) * 1e-15,
        c_in=float(n["c_in_pf"]) * 1e-12,
    )


@dataclass
class Recording:
    """One simulated recording plus its ground truth."""

    index: int
    distance_cm: float
    repeat: int
    seed: int
    result: FrontEndResult
    truth_events: dict[str, np.ndarray]
    truth_waveforms: dict[str, WaveformBuffer]
    mcl_suppression_db: float | None = None


def run_recording(cfg: ScenarioConfig, *, index: int = 0,
                  distance_cm: float | None = None, repeat: int = 0
                  ) -> Recording:
    """Synthesize subject signals, couple them, and run the front end."""
    run = cfg["run"]
    fs = float(run["fs_hz"])
    duration = float(run["duration_s"])
    seed = int(run["seed"]) + 7919 * index
    signals = cfg.signals()
    profile = build_profile(cfg)
    geometry = build_geometry(cfg, distance_cm)
    fe_cfg = build_frontend(cfg)
    noise_spec = build_noise(cfg)
    posture_scale = POSTURE_ECG_SCALE[str(cfg["geometry"]["posture"])]

    subject = SubjectSignals()
    truth_events: dict[str, np.ndarray] = {}
    truth_waveforms: dict[str, WaveformBuffer] = {}
    if "ecg" in signals:
        ecg, r_times = synth_ecg(profile, fs, duration, seed)
        if posture_scale != 1.0:
            ecg = ecg.with_samples(ecg.samples * posture_scale,
                                   label=ecg.label)
        subject.ecg_surface = ecg
        subject.r_times = r_times
        truth_events["r_peak"] = r_times
        truth_waveforms["ecg_surface"] = ecg
    if "rc" in signals:
        disp, peaks = synth_respiration(profile, fs, duration)
        subject.chest_displacement = disp
        truth_events["breath_peak"] = peaks
        truth_waveforms["chest_displacement"] = disp
    if "eeg" in signals:
        eeg = synth_eeg(profile, fs, duration, seed + 1)
        if posture_scale != 1.0:
            eeg = eeg.with_samples(eeg.samples * posture_scale, label=eeg.label)
        subject.eeg_surface = eeg
        truth_waveforms["eeg_surface"] = eeg
    if "motion" in signals:
        m = cfg["motion"]
        interval = float(m["event_interval_s"])
        events = np.arange(interval, duration - 2.0, interval)
        subject.motion_displacement = synth_motion_artifact(
            events, float(m["amplitude_mm"]) * 1e-3, fs, duration, seed + 2)
        truth_events["motion"] = events

    c = cfg["coupling"]
    tribo = TriboelectricState(initial_scale=float(c["tribo_initial_scale"]),
                               tau=float(c["tribo_tau_s"]))
    p = cfg["pli"]
    pli = None
    if p["enabled"]:
        pli = PliSpec(f0=float(p["f0_hz"]),
                      harmonic_amplitudes={1: float(p["amplitude_v"]),
                                           2: float(p["harmonic2_v"])},
                      drift_ppm=float(p["drift_ppm"]))

    source = build_norton_source(
        subject, geometry, tribo, pli,
        v_body=float(c["v_body_v"]),
        reference_distance=float(cfg["geometry"]["reference_distance_cm"]) * 1e-2,
        bcg_peak_disp=float(c["bcg_peak_disp_um"]) * 1e-6,
        seed=seed)
    result = simulate_frontend(source, fe_cfg, noise=noise_spec, seed=seed + 3,
                               noise_scale=float(cfg["noise"]["scale"]))

    mcl_db = None
    if cfg["mcl"]["enabled"]:
        mres = mcl_apply(result.tia_output, fe_cfg.mcl)
        mcl_db = mres.suppression_db

    d_cm = (float(cfg["geometry"]["distance_cm"]) if distance_cm is None
            else distance_cm)
    return Recording(index=index, distance_cm=d_cm, repeat=repeat, seed=seed,
                     result=result, truth_events=truth_events,
                     truth_waveforms=truth_waveforms,
                     mcl_suppression_db=mcl_db)


def run_scenario(cfg: ScenarioConfig) -> list[Recording]:
    """All recordings of the scenario (one per sweep point)."""
    recordings = []
    for index, value, rep in cfg.sweep_points():
        d_cm = None if math.isnan(value) else value
        recordings.append(run_recording(cfg, index=index, distance_cm=d_cm,
                                        repeat=rep))
    return recordings


def manifest_dict(cfg: ScenarioConfig, n_recordings: int) -> dict:
    """Reproducibility manifest: everything needed to re-run bit-exactly."""
    return {
        "config_hash": cfg.config_hash(),
        "seed": cfg.seed,
        "epsim_version": __version__,
        "recordings": n_recordings,
    }
