"""Virtual device, finger-pad model, and synthetic responder tests."""

import json
import math

import numpy as np
import pytest

from deltapad.geometry import DeltaGeometry, WorkspaceSpec, max_normal_force
from deltapad.patterns import CONTACT_IDS, STRETCH_DIRECTIONS, PatternLayout
from deltapad.playback import exact_pulses, pulses_for_pose
from deltapad.protocol import ServoCalibration, encode_frame, pulse_to_angle
from deltapad.simulator import (
    FingerPadModel,
    VirtualDevice,
    contact_force,
    default_contact_responder,
    default_stretch_responder,
    perfect_responder,
    responder_from_json,
    responder_rng,
    responder_to_json,
    simulate_trial,
    step,
    subject_ability,
    synthetic_response,
)
from deltapad.trajectory import RenderConfig, render_contact_trial

GEOM = DeltaGeometry()
SPEC = WorkspaceSpec()
CFG = RenderConfig()
PAD = FingerPadModel()


def test_step_applies_command_after_latency():
    dev = VirtualDevice.at_pose(GEOM, (0, 0, 22.0))
    start = dev.current_angles.copy()
    target = start + 0.001
    pulses = tuple(
        round(500 + (math.degrees(a) + 90) / 180 * 2000) for a in target)
    # first step only loads the pipeline (1 tick command latency)
    step(dev, encode_frame(pulses, 0.0, 0), 0.01)
    assert np.allclose(dev.current_angles, start)
    step(dev, encode_frame(pulses, 0.0, 1), 0.01)
    assert not np.allclose(dev.current_angles, start)


def test_step_slew_limit():
    dev = VirtualDevice.at_pose(GEOM, (0, 0, 22.0))
    max_step = math.radians(dev.servo_slew_limit) * 0.01
    # command a big jump and verify per-tick motion is clamped
    far = encode_frame((2200, 2200, 2200), 0.0, 0)
    prev = dev.current_angles.copy()
    for seq in range(10):
        step(dev, encode_frame((2200, 2200, 2200), 0.0, seq), 0.01)
        delta = np.abs(dev.current_angles - prev)
        assert np.all(delta <= max_step + 1e-12)
        prev = dev.current_angles.copy()
    assert np.max(np.abs(dev.current_angles - prev)) <= max_step


def test_step_clamps_to_joint_limits():
    dev = VirtualDevice.at_pose(GEOM, (0, 0, 22.0))
    lo, hi = GEOM.limits_rad
    for seq in range(400):
        step(dev, encode_frame((2500, 2500, 2500), 0.0, seq % 256), 0.01)
    assert np.all(dev.current_angles <= hi + 1e-12)


def test_contact_force_normal_law():
    ev = contact_force(PAD, (0, 0, 27.5), (0, 0, 0))
    assert ev.in_contact
    assert ev.normal_force == pytest.approx(PAD.stiffness * 0.5)
    assert ev.shear_force == pytest.approx((0.0, 0.0))
    out = contact_force(PAD, (0, 0, 26.9), (0, 0, 0))
    assert not out.in_contact
    assert out.normal_force == 0.0


def test_contact_force_shear_follows_velocity():
    # tactor sliding +x under 1 N: friction drags the skin along +x
    ev = contact_force(PAD, (0, 0, 27.5), (20.0, 0, 0))
    n = PAD.stiffness * 0.5
    assert ev.shear_force[0] == pytest.approx(PAD.friction_mu * n)
    assert ev.shear_force[1] == pytest.approx(0.0)
    ev2 = contact_force(PAD, (0, 0, 27.5), (0, -10.0, 0))
    assert ev2.shear_force[1] == pytest.approx(-PAD.friction_mu * n)


def test_simulate_trial_event_stream():
    dev = VirtualDevice.at_pose(GEOM, (0, 0, 22.0))
    traj = render_contact_trial("C", CFG, GEOM, SPEC)
    events = simulate_trial(traj, dev, PAD, CFG)
    assert len(events) == len(traj.waypoints)
    peak = max(e.normal_force for e in events)
    # servo lag shaves a little off the 1 N command
    assert peak == pytest.approx(1.0, abs=0.05)
    assert any(e.in_contact for e in events)
    assert not events[0].in_contact


def test_pulse_selection_force_error_under_two_percent():
    """Quantized playback keeps contact-point force error below 2%."""
    cal = ServoCalibration()
    layout = PatternLayout()
    from deltapad.geometry import forward_kinematics
    from deltapad.patterns import contact_point_position

    for pid in CONTACT_IDS:
        target = contact_point_position(pid, layout) + np.array([0, 0, 0.5])
        pulses = pulses_for_pose(GEOM, cal, target)
        angles = [pulse_to_angle(p, cal, ch) for ch, p in enumerate(pulses)]
        reached = forward_kinematics(GEOM, angles)
        f_cmd = max_normal_force(GEOM, target)
        f_real = max_normal_force(GEOM, reached)
        rel = abs(f_real - f_cmd) / f_cmd
        assert rel < 0.02, f"{pid}: force error {rel:.4%}"
        # and the chosen pulses stay within one us of the exact solution
        exact = exact_pulses(GEOM, cal, target)
        for p, e in zip(pulses, exact):
            assert abs(p - e) <= 1.0


def test_responders_are_row_stochastic():
    for r in (default_contact_responder(), default_stretch_responder(),
              perfect_responder("contact"), perfect_responder("stretch")):
        for pat in r.patterns:
            row = r.confusion[pat]
            assert sum(row.values()) == pytest.approx(1.0, abs=1e-9)
            assert all(v >= 0 for v in row.values())


def test_contact_responder_rates():
    r = default_contact_responder()
    diag = {p: r.confusion[p][p] for p in r.patterns}
    assert diag["C"] == pytest.approx(0.93)
    assert diag["L"] == pytest.approx(0.62)
    mean = sum(diag.values()) / len(diag)
    assert mean == pytest.approx(0.75, abs=1e-9)


def test_stretch_responder_rates():
    r = default_stretch_responder()
    diag = {p: r.confusion[p][p] for p in r.patterns}
    assert diag["D"] == pytest.approx(0.90)
    assert diag["DR"] == pytest.approx(0.73)
    mean = sum(diag.values()) / len(diag)
    assert mean == pytest.approx(0.83, abs=1e-9)


def test_named_confusions_present():
    r = default_contact_responder()
    assert r.confusion["UL"]["U"] == pytest.approx(0.20)
    assert r.confusion["U"]["UL"] == pytest.approx(0.03)
    s = default_stretch_responder()
    assert s.confusion["DR"]["R"] == pytest.approx(0.13)
    assert s.confusion["DR"]["D"] == pytest.approx(0.13)


def test_perfect_responder_identity():
    r = perfect_responder("stretch")
    rng = responder_rng(0, "x")
    for pat in r.patterns:
        ans, conf = synthetic_response(r, pat, rng)
        assert ans == pat
        assert 1 <= conf <= 5


def test_synthetic_response_deterministic():
    r = default_contact_responder()

    def stream(seed):
        rng = responder_rng(seed, "s")
        return [synthetic_response(r, "L", rng, 1) for _ in range(50)]

    assert stream(3) == stream(3)
    assert stream(3) != stream(4)


def test_subject_ability_two_point():
    seen = {subject_ability(responder_rng(i, f"s{i}")) for i in range(50)}
    assert seen == {-1, 1}


def test_ability_shifts_rates():
    r = default_contact_responder()
    strong = r.row_for("L", +1)
    weak = r.row_for("L", -1)
    base = r.confusion["L"]["L"]
    assert strong["L"] > base > weak["L"]
    assert sum(strong.values()) == pytest.approx(1.0)
    assert sum(weak.values()) == pytest.approx(1.0)


def test_confidence_range_and_mean():
    r = default_contact_responder()
    rng = responder_rng(11, "conf")
    confs = [synthetic_response(r, "C", rng, 1)[1] for _ in range(4000)]
    assert set(confs) <= {1, 2, 3, 4, 5}
    assert sum(confs) / len(confs) == pytest.approx(r.confidence_mean, abs=0.1)


def test_responder_json_roundtrip():
    r = default_stretch_responder()
    r2 = responder_from_json(responder_to_json(r))
    assert r2 == r


def test_pad_model_validation():
    with pytest.raises(ValueError):
        FingerPadModel(stiffness=-1.0)
    with pytest.raises(ValueError):
        FingerPadModel(friction_mu=-0.1)
