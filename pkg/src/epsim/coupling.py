"""Body-to-electrode coupling: capacitance vs distance, empirical decay
laws, and assembly of the Norton-equivalent source current that drives
the front end.

Displacement sign convention used throughout: positive chest/body
displacement widens the body-electrode gap, matching the sinusoidal gap
model I_in = -V_body (eps0 A / d0^2) w dd cos(wt).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .constants import EPS0
from .errors import ContractError, DomainError
from .synth import PliSpec, synth_pli
from .waveform import WaveformBuffer, require_same_grid

KIND_ECG = "ecg"
KIND_RC = "rc"


@dataclass
class CouplingGeometry:
    """Electrode size, subject position, and field-sharing decay exponents.

    The square electrode of side ``electrode_side_w`` is analyzed as a
    circular electrode of equal area, radius ``w / sqrt(pi)``.  The decay
    exponents describe how the received amplitude falls with distance for
    the two coupling paths; field sharing makes them steeper than the
    bare capacitance model predicts.
    """

    electrode_side_w: float = 0.040
    distance_d: float = 0.30
    angle_theta: float = 0.0
    ecg_decay_exponent: float = 2.5
    rc_decay_exponent: float = 2.0
    equivalent_radius_a: float | None = None

    def __post_init__(self):
        if self.electrode_side_w <= 0:
            raise DomainError("electrode side must be positive")
        if self.distance_d <= 0:
            raise DomainError("distance must be positive")
        if self.ecg_decay_exponent <= 0 or self.rc_decay_exponent <= 0:
            raise DomainError("decay exponents must be positive")
        a_expected = self.electrode_side_w / math.sqrt(math.pi)
        if self.equivalent_radius_a is None:
            self.equivalent_radius_a = a_expected
        elif not math.isclose(self.equivalent_radius_a, a_expected,
                              rel_tol=1e-12):
            raise DomainError(
                "equivalent_radius_a must equal electrode_side_w / sqrt(pi)")


def coupling_capacitance(geom: CouplingGeometry, distance: float | np.ndarray
                         | None = None):
    """Coupling capacitance C_c(d) = eps0 pi a^2 / d + 8 eps0 a.

    The sum matches the parallel-plate formula for d << a and the disc
    self-capacitance 8 eps0 a for d >> a.
    """
    a = geom.equivalent_radius_a
    d = geom.distance_d if distance is None else distance
    if np.any(np.asarray(d) <= 0):
        raise DomainError("distance must be positive")
    if a <= 0:
        raise DomainError("electrode radius must be positive")
    return EPS0 * math.pi * a * a / d + 8.0 * EPS0 * a


def capacitance_distance_slope(geom: CouplingGeometry, distance: float) -> float:
    """dC_c/dd at the given distance (negative; the self-capacitance term is flat)."""
    if distance <= 0:
        raise DomainError("distance must be positive")
    a = geom.equivalent_radius_a
    return -EPS0 * math.pi * a * a / (distance * distance)


def signal_amplitude_at_distance(kind: str, k: float, d: float,
                                 geom: CouplingGeometry) -> float:
    """Empirical received-amplitude decay law s(d) = k / d^p.

    ``kind`` selects the exponent: the cardiac path decays with
    ``ecg_decay_exponent`` (default 2.5), the respiration path with
    ``rc_decay_exponent`` (default 2.0).
    """
    if d <= 0:
        raise DomainError("distance must be positive")
    if k <= 0:
        raise DomainError("amplitude constant must be positive")
    if kind == KIND_ECG:
        p = geom.ecg_decay_exponent
    elif kind == KIND_RC:
        p = geom.rc_decay_exponent
    else:
        raise DomainError(f"unknown decay kind {kind!r}")
    return k / d ** p


def respiration_current(v_body: float, area_a: float, d0: float,
                        delta_d: float, f_rr: float, t):
    """Small-signal displacement current induced by sinusoidal chest motion.

    I(t) = -V_body (eps0 A / d0^2) w dd cos(w t), valid for dd << d0.
    A warning is emitted when dd/d0 >= 0.2.
    """
    if d0 <= 0:
        raise DomainError("mean distance d0 must be positive")
    if delta_d / d0 >= 0.2:
        warnings.warn("delta_d/d0 >= 0.2: small-signal approximation degraded",
                      stacklevel=2)
    w = 2 * math.pi * f_rr
    return -v_body * (EPS0 * area_a / d0 ** 2) * w * delta_d * np.cos(
        w * np.asarray(t, dtype=float))


@dataclass
class TriboelectricState:
    """Exponential decay of triboelectric charge on the body surface.

    The cardiac-motion (BCG) coupling is scaled by
    ``1 + (initial_scale - 1) exp(-t/tau)``, which relaxes toward 1.
    """

    initial_scale: float = 1.0
    tau: float = 25.0

    def __post_init__(self):
        if self.initial_scale < 1:
            raise DomainError("initial_scale must be >= 1")
        if self.tau <= 0:
            raise DomainError("tau must be positive")

    def scale(self, t):
        return 1.0 + (self.initial_scale - 1.0) * np.exp(
            -np.asarray(t, dtype=float) / self.tau)


@dataclass
class SubjectSignals:
    """Source waveforms feeding the Norton model, all on one sampling grid."""

    ecg_surface: WaveformBuffer | None = None
    r_times: np.ndarray | None = None
    chest_displacement: WaveformBuffer | None = None
    motion_displacement: WaveformBuffer | None = None
    eeg_surface: WaveformBuffer | None = None


@dataclass
class NortonSource:
    """Norton-equivalent source: injected current plus the C_c trajectory.

    ``components`` keeps the noise-free current terms separately tagged
    (ecg, bcg, rc, motion, pli, eeg) for ground-truth comparisons;
    ``i_in`` is their sum.
    """

    i_in: WaveformBuffer
    c_c: WaveformBuffer
    v_body_dc: float
    components: dict[str, np.ndarray]

    def __post_init__(self):
        if np.any(self.c_c.samples <= 0):
            raise DomainError("coupling capacitance trajectory must stay positive")
        if not np.all(np.isfinite(self.i_in.samples)):
            raise DomainError("source current must be finite")


def _bcg_displacement(r_times: np.ndarray, fs: float, n: int,
                      peak_disp: float) -> np.ndarray:
    """Per-beat displacement bump time-locked 40 ms after each R peak."""
    x = np.zeros(n)
    t = np.arange(n) / fs
    for rk in r_times:
        lo = max(0, int((rk - 0.10) * fs))
        hi = min(n, int((rk + 0.25) * fs))
        seg = t[lo:hi] - rk - 0.040
        x[lo:hi] += peak_disp * np.exp(-0.5 * (seg / 0.030) ** 2)
    return x


def build_norton_source(signals: SubjectSignals, geom: CouplingGeometry,
                        tribo: TriboelectricState | None = None,
                        pli: PliSpec | None = None, *,
                        v_body: float = 10.0,
                        reference_distance: float = 0.30,
                        bcg_peak_disp: float = 5e-4,
                        seed: int = 0) -> NortonSource:
    """Superpose the tagged source-current terms at the electrode.

    Electrical paths (ECG, EEG) inject C_ref * s(d)/s(d_ref) * dV/dt and
    are scaled by cos(theta) clipped at zero; motion paths (respiration,
    BCG, gross motion) inject -V_body * |dC/dd|_ref * s(d)/s(d_ref) * dx/dt
    and are angle-independent.  The BCG term is multiplied by the
    triboelectric scale trajectory.  Field sharing enters through the
    configured decay exponents, anchored at ``reference_distance``; the
    reported C_c trajectory stays the physical capacitance model.
    """
    fs, n = require_same_grid(*(w for w in (
        signals.ecg_surface, signals.chest_displacement,
        signals.motion_displacement, signals.eeg_surface) if w is not None))
    dt = 1.0 / fs
    d = geom.distance_d
    tvec = np.arange(n) * dt

    c_ref = coupling_capacitance(geom, reference_distance)
    dcdd_ref = abs(capacitance_distance_slope(geom, reference_distance))
    decay_ecg = (reference_distance / d) ** geom.ecg_decay_exponent
    decay_rc = (reference_distance / d) ** geom.rc_decay_exponent
    cos_theta = max(math.cos(geom.angle_theta), 0.0)

    components: dict[str, np.ndarray] = {}
    displacement = np.zeros(n)

    if signals.ecg_surface is not None:
        dv = np.gradient(signals.ecg_surface.samples, dt)
        components["ecg"] = c_ref * decay_ecg * cos_theta * dv
        if signals.r_times is not None and len(signals.r_times):
            scale = (tribo.scale(tvec) if tribo is not None else
                     np.ones(n))
            bcg = _bcg_displacement(np.asarray(signals.r_times), fs, n,
                                    bcg_peak_disp)
            displacement = displacement + bcg
            components["bcg"] = (-v_body * dcdd_ref * decay_rc * scale
                                 * np.gradient(bcg, dt))

    if signals.eeg_surface is not None:
        dv = np.gradient(signals.eeg_surface.samples, dt)
        components["eeg"] = c_ref * decay_ecg * cos_theta * dv

    if signals.chest_displacement is not None:
        x = signals.chest_displacement.samples
        displacement = displacement + x
        components["rc"] = (-v_body * dcdd_ref * decay_rc
                            * np.gradient(x, dt))

    if signals.motion_displacement is not None:
        x = signals.motion_displacement.samples
        displacement = displacement + x
        components["motion"] = (-v_body * dcdd_ref * decay_rc
                                * np.gradient(x, dt))

    c_traj = coupling_capacitance(geom, d + displacement)

    if pli is not None:
        v_pli = synth_pli(pli.f0, pli.harmonic_amplitudes, pli.drift_ppm,
                          fs, n / fs).samples
        components["pli"] = c_traj * np.gradient(v_pli, dt)

    i_total = np.zeros(n)
    for term in components.values():
        i_total += term
    return NortonSource(
        i_in=WaveformBuffer(i_total, fs, 0.0, "i_in"),
        c_c=WaveformBuffer(c_traj, fs, 0.0, "c_c"),
        v_body_dc=v_body,
        components=components,
    )
