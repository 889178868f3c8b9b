import math

import numpy as np
import pytest

from epsim.constants import EPS0
from epsim.coupling import (CouplingGeometry, SubjectSignals,
                            TriboelectricState, build_norton_source,
                            coupling_capacitance, respiration_current,
                            signal_amplitude_at_distance)
from epsim.errors import ContractError, DomainError
from epsim.synth import PliSpec, SubjectProfile, synth_ecg
from epsim.waveform import WaveformBuffer


def test_geometry_radius_derived_from_side():
    g = CouplingGeometry(electrode_side_w=0.040)
    assert g.equivalent_radius_a == pytest.approx(0.040 / math.sqrt(math.pi),
                                                  rel=1e-15)
    # explicit radius must agree with w/sqrt(pi) to 1e-12 relative
    CouplingGeometry(equivalent_radius_a=0.040 / math.sqrt(math.pi))
    with pytest.raises(DomainError):
        CouplingGeometry(equivalent_radius_a=0.0226)


def test_geometry_validation():
    with pytest.raises(DomainError):
        CouplingGeometry(distance_d=0.0)
    with pytest.raises(DomainError):
        CouplingGeometry(ecg_decay_exponent=-1.0)
    with pytest.raises(DomainError):
        CouplingGeometry(electrode_side_w=-0.01)


def test_capacitance_far_limit_is_disc_self_capacitance():
    # 8 eps0 a with a = 22.6 mm evaluates to about 1.60 pF
    g = CouplingGeometry()
    a = g.equivalent_radius_a
    assert 8 * EPS0 * a == pytest.approx(1.60e-12, rel=0.005)
    assert coupling_capacitance(g, 1e6) == pytest.approx(8 * EPS0 * a, rel=1e-6)


def test_capacitance_near_limit_is_parallel_plate():
    g = CouplingGeometry()
    a = g.equivalent_radius_a
    # at d = 1 mm the plate term dominates: ~14.2 pF of ~15.8 pF total
    plate = EPS0 * math.pi * a * a / 0.001
    assert plate == pytest.approx(14.2e-12, rel=0.01)
    assert coupling_capacitance(g, 0.001) == pytest.approx(
        plate + 8 * EPS0 * a, rel=1e-12)


def test_capacitance_at_d_equals_a_is_sum_of_terms():
    g = CouplingGeometry()
    a = g.equivalent_radius_a
    expected = EPS0 * math.pi * a + 8 * EPS0 * a
    assert coupling_capacitance(g, a) == pytest.approx(expected, rel=1e-12)


def test_capacitance_asymptote_tolerances():
    g = CouplingGeometry()
    a = g.equivalent_radius_a
    # Additive model: the self-capacitance term contributes 8(d/a)/pi
    # relative to the plate term, so the 1% plate agreement is reached
    # for d/a below pi/800 ~ 0.004.
    d_near = 0.003 * a
    assert coupling_capacitance(g, d_near) == pytest.approx(
        EPS0 * math.pi * a * a / d_near, rel=0.01)
    d_mid = 0.009 * a
    assert coupling_capacitance(g, d_mid) == pytest.approx(
        EPS0 * math.pi * a * a / d_mid, rel=8 * 0.009 / math.pi + 1e-6)
    d_far = 101 * a
    assert coupling_capacitance(g, d_far) == pytest.approx(8 * EPS0 * a,
                                                           rel=0.01)


def test_capacitance_monotone_in_distance_and_radius():
    rng = np.random.default_rng(42)
    for _ in range(50):
        w = rng.uniform(0.005, 0.2)
        d = np.sort(rng.uniform(1e-4, 2.0, 8))
        g = CouplingGeometry(electrode_side_w=w)
        c = coupling_capacitance(g, d)
        assert np.all(np.diff(c) < 0)  # strictly decreasing in d
    for _ in range(50):
        d = rng.uniform(1e-3, 1.0)
        ws = np.sort(rng.uniform(0.005, 0.2, 8))
        caps = [coupling_capacitance(CouplingGeometry(electrode_side_w=w), d)
                for w in ws]
        assert np.all(np.diff(caps) > 0)  # strictly increasing in a


def test_capacitance_domain_errors():
    g = CouplingGeometry()
    with pytest.raises(DomainError):
        coupling_capacitance(g, 0.0)
    with pytest.raises(DomainError):
        coupling_capacitance(g, -0.1)


def test_decay_law_exponents():
    g = CouplingGeometry()
    # doubling distance on the cardiac path: (1/2)^2.5
    r = (signal_amplitude_at_distance("ecg", 1.0, 0.30, g)
         / signal_amplitude_at_distance("ecg", 1.0, 0.15, g))
    assert r == pytest.approx(0.5 ** 2.5, rel=1e-12)
    assert 0.5 ** 2.5 == pytest.approx(0.177, abs=0.001)
    # respiration path 10 cm -> 100 cm: factor 0.01
    r = (signal_amplitude_at_distance("rc", 1.0, 1.0, g)
         / signal_amplitude_at_distance("rc", 1.0, 0.10, g))
    assert r == pytest.approx(0.01, rel=1e-12)
    # unit distance returns k itself
    assert signal_amplitude_at_distance("ecg", 3.7, 1.0, g) == pytest.approx(3.7)
    with pytest.raises(DomainError):
        signal_amplitude_at_distance("ecg", 1.0, 0.0, g)
    with pytest.raises(DomainError):
        signal_amplitude_at_distance("nope", 1.0, 1.0, g)


def test_respiration_current_value():
    # direct evaluation of the small-signal formula at t = 0
    i = respiration_current(10.0, 2.5e-3, 0.2, 5e-3, 0.25, 0.0)
    assert abs(i) == pytest.approx(4.35e-14, rel=0.005)
    # no motion, no current
    t = np.linspace(0, 10, 1000)
    assert np.all(respiration_current(10.0, 2.5e-3, 0.2, 0.0, 0.25, t) == 0.0)
    # quadrature zero crossing: cos(w t) = 0 at t = 1 s for f = 0.25 Hz
    assert respiration_current(10.0, 2.5e-3, 0.2, 5e-3, 0.25, 1.0) == \
        pytest.approx(0.0, abs=1e-28)
    with pytest.raises(DomainError):
        respiration_current(10.0, 2.5e-3, -0.2, 5e-3, 0.25, 0.0)


def test_respiration_current_warns_when_not_small_signal():
    with pytest.warns(UserWarning):
        respiration_current(10.0, 2.5e-3, 0.2, 0.05, 0.25, 0.0)


def test_respiration_current_scales_inverse_square_in_d0():
    amps = []
    for d0 in (0.1, 0.2, 0.4):
        amps.append(abs(respiration_current(10.0, 2.5e-3, d0, 1e-3, 0.25, 0.0)))
    assert amps[0] / amps[1] == pytest.approx(4.0, rel=1e-9)
    assert amps[1] / amps[2] == pytest.approx(4.0, rel=1e-9)


def test_tribo_scale():
    ts = TriboelectricState(initial_scale=40.0, tau=25.0)
    # 1 + 39 e^-1 at t = tau
    assert ts.scale(25.0) == pytest.approx(1 + 39 * math.exp(-1), rel=1e-12)
    assert ts.scale(25.0) == pytest.approx(15.3, abs=0.1)
    t = np.linspace(0, 200, 500)
    s = ts.scale(t)
    assert np.all(np.diff(s) <= 0) and s[-1] >= 1.0
    with pytest.raises(DomainError):
        TriboelectricState(initial_scale=0.5)
    with pytest.raises(DomainError):
        TriboelectricState(tau=-1.0)


def _subject(fs=1000.0, duration=10.0, seed=0):
    ecg, r = synth_ecg(SubjectProfile(), fs, duration, seed)
    return SubjectSignals(ecg_surface=ecg, r_times=r)


def test_norton_zero_sources_give_zero_current():
    fs, n = 1000.0, 5000
    zeros = WaveformBuffer(np.zeros(n), fs)
    sig = SubjectSignals(ecg_surface=zeros, r_times=np.array([]),
                         chest_displacement=zeros)
    src = build_norton_source(sig, CouplingGeometry())
    assert np.all(src.i_in.samples == 0.0)


def test_norton_deterministic_for_fixed_seed():
    sig = _subject()
    pli = PliSpec(drift_ppm=20.0)
    a = build_norton_source(sig, CouplingGeometry(), pli=pli, seed=9)
    b = build_norton_source(sig, CouplingGeometry(), pli=pli, seed=9)
    assert np.array_equal(a.i_in.samples, b.i_in.samples)


def test_norton_mismatched_rates_rejected():
    fs = 1000.0
    ecg, r = synth_ecg(SubjectProfile(), fs, 10.0, 0)
    bad = WaveformBuffer(np.zeros(123), 500.0)
    sig = SubjectSignals(ecg_surface=ecg, r_times=r, chest_displacement=bad)
    with pytest.raises(ContractError):
        build_norton_source(sig, CouplingGeometry())


def test_norton_components_tagged_and_summed():
    sig = _subject()
    src = build_norton_source(sig, CouplingGeometry(), pli=PliSpec())
    assert set(src.components) == {"ecg", "bcg", "pli"}
    total = sum(src.components.values())
    assert np.allclose(total, src.i_in.samples, rtol=0, atol=0)
    assert np.all(src.c_c.samples > 0)


def test_norton_angle_model():
    sig = _subject()
    src0 = build_norton_source(sig, CouplingGeometry(angle_theta=0.0))
    for theta in (math.radians(30), math.radians(-30)):
        srca = build_norton_source(sig, CouplingGeometry(angle_theta=theta))
        # cardiac electrical path shrinks with |theta|
        assert (np.max(np.abs(srca.components["ecg"]))
                < np.max(np.abs(src0.components["ecg"])))
        # mechanically coupled path is angle independent
        assert np.array_equal(srca.components["bcg"], src0.components["bcg"])


def test_norton_tribo_scales_bcg_only():
    sig = _subject()
    base = build_norton_source(sig, CouplingGeometry(),
                               tribo=TriboelectricState(1.0))
    boosted = build_norton_source(sig, CouplingGeometry(),
                                  tribo=TriboelectricState(40.0, tau=25.0))
    assert np.array_equal(base.components["ecg"], boosted.components["ecg"])
    assert (np.max(np.abs(boosted.components["bcg"]))
            > 10 * np.max(np.abs(base.components["bcg"])))
