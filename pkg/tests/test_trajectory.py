"""Trajectory renderer tests: choreography, phases, sampling, export."""

import csv
import math

import numpy as np
import pytest

from deltapad.errors import InfeasibleForce, NegativeForce, OutOfRange, WorkspaceViolation
from deltapad.geometry import DeltaGeometry, WorkspaceSpec
from deltapad.patterns import CONTACT_IDS, STRETCH_DIRECTIONS, PatternLayout
from deltapad.trajectory import (
    RenderConfig,
    force_to_depth,
    render_contact_trial,
    render_encounter,
    render_stretch_trial,
    sample,
    write_csv,
)

GEOM = DeltaGeometry()
SPEC = WorkspaceSpec()
CFG = RenderConfig()
LAYOUT = PatternLayout()
HOVER_Z = LAYOUT.contact_plane_z - CFG.hover_height


def test_force_to_depth():
    assert force_to_depth(1.0, 2.0, 1.5) == (0.5, False)
    assert force_to_depth(10.0, 2.0, 1.5) == (1.5, True)
    assert force_to_depth(0.0, 2.0, 1.5) == (0.0, False)
    with pytest.raises(NegativeForce):
        force_to_depth(-0.1, 2.0, 1.5)


def test_contact_trial_starts_and_ends_at_hover():
    traj = render_contact_trial("UR", CFG, GEOM, SPEC)
    first, last = traj.waypoints[0], traj.waypoints[-1]
    assert first.pose == (0.0, 0.0, HOVER_Z)
    # retract ends at the hover point above the target
    assert last.pose[2] == pytest.approx(HOVER_Z)


def test_contact_trial_hover_height_exact():
    traj = render_contact_trial("C", CFG, GEOM, SPEC)
    z0 = traj.waypoints[0].pose[2]
    assert z0 == LAYOUT.contact_plane_z - 5.0  # exact, not approximate


def test_contact_phase_spans_half_second():
    for pid in ("C", "L", "DR"):
        traj = render_contact_trial(pid, CFG, GEOM, SPEC)
        contact = [w for w in traj.waypoints if w.phase == "contact"]
        span = contact[-1].t - contact[0].t
        assert abs(span - 0.5) <= CFG.dt + 1e-12
        # first contact waypoint is the arrival at depth
        assert contact[0].pose[2] > LAYOUT.contact_plane_z


def test_contact_depth_matches_force():
    force = 1.0
    traj = render_contact_trial("C", CFG, GEOM, SPEC, force=force)
    depth = force / CFG.pad_stiffness
    zmax = max(w.pose[2] for w in traj.waypoints)
    assert zmax == pytest.approx(LAYOUT.contact_plane_z + depth)
    in_contact = [w for w in traj.waypoints if w.phase == "contact"]
    for w in in_contact:
        assert w.target_force[2] == pytest.approx(force)


def test_speed_never_exceeded():
    for traj in (render_contact_trial("UL", CFG, GEOM, SPEC),
                 render_stretch_trial("DR", CFG, GEOM, SPEC)):
        speeds = {"approach": CFG.approach_speed, "retract": CFG.retract_speed,
                  "stroke": LAYOUT.stretch_speed, "contact": CFG.approach_speed,
                  "dwell": CFG.approach_speed}
        wps = traj.waypoints
        for a, b in zip(wps, wps[1:]):
            d = math.dist(a.pose, b.pose)
            v = d / (b.t - a.t)
            # an arrival waypoint is labeled with the phase it starts, so
            # the segment belongs to whichever phase allows more speed
            assert v <= max(speeds[a.phase], speeds[b.phase]) + 1e-9


def test_tick_spacing_uniform():
    traj = render_stretch_trial("U", CFG, GEOM, SPEC)
    ts = [w.t for w in traj.waypoints]
    diffs = {round(b - a, 9) for a, b in zip(ts, ts[1:])}
    assert diffs == {round(CFG.dt, 9)}


def test_stretch_trial_ends_at_center_hover():
    for d in STRETCH_DIRECTIONS:
        traj = render_stretch_trial(d, CFG, GEOM, SPEC)
        assert np.allclose(traj.waypoints[-1].pose, (0.0, 0.0, HOVER_Z),
                           atol=1e-12)


def test_stretch_stroke_length_and_speed():
    traj = render_stretch_trial("R", CFG, GEOM, SPEC)
    stroke = [w for w in traj.waypoints if w.phase == "stroke"]
    xs = [w.pose[0] for w in stroke]
    assert max(xs) - min(xs) == pytest.approx(LAYOUT.stretch_length)
    # stroke depth constant
    zs = {round(w.pose[2], 9) for w in stroke}
    assert len(zs) == 1


def test_encounter_has_no_contact():
    traj = render_encounter((2.0, 1.0, 26.0), CFG, SPEC)
    for w in traj.waypoints:
        assert w.pose[2] < LAYOUT.contact_plane_z
        assert w.target_force == (0.0, 0.0, 0.0)
    park = traj.waypoints[-1].pose
    assert park == pytest.approx((2.0, 1.0, 21.0))


def test_render_rejects_infeasible_force():
    with pytest.raises(InfeasibleForce):
        render_contact_trial("C", CFG, GEOM, SPEC, force=50.0)


def test_render_rejects_workspace_violation():
    with pytest.raises(WorkspaceViolation):
        render_encounter((10.0, 0.0, 26.0), CFG, SPEC)


def test_sample_interpolates():
    traj = render_contact_trial("C", CFG, GEOM, SPEC)
    w0, w1 = traj.waypoints[0], traj.waypoints[1]
    mid = sample(traj, w0.t + CFG.dt / 2)
    for a, b, m in zip(w0.pose, w1.pose, mid.pose):
        assert m == pytest.approx((a + b) / 2)
    # phase comes from the earlier waypoint
    assert mid.phase == w0.phase
    # exact hits return the waypoint as-is
    assert sample(traj, w1.t).pose == pytest.approx(w1.pose)


def test_sample_out_of_range():
    traj = render_contact_trial("C", CFG, GEOM, SPEC)
    with pytest.raises(OutOfRange):
        sample(traj, -0.01)
    with pytest.raises(OutOfRange):
        sample(traj, traj.total_duration + 0.01)


def test_total_duration_matches_last_waypoint():
    traj = render_stretch_trial("L", CFG, GEOM, SPEC)
    assert traj.total_duration == pytest.approx(traj.waypoints[-1].t)


def test_write_csv(tmp_path):
    traj = render_contact_trial("D", CFG, GEOM, SPEC)
    out = tmp_path / "traj.csv"
    write_csv(traj, out)
    rows = list(csv.DictReader(open(out)))
    assert len(rows) == len(traj.waypoints)
    assert set(rows[0]) == {"t", "x", "y", "z", "fx", "fy", "fz", "duty", "phase"}
    zs = [float(r["z"]) for r in rows]
    assert max(zs) > LAYOUT.contact_plane_z


def test_all_catalog_patterns_render():
    for pid in CONTACT_IDS:
        traj = render_contact_trial(pid, CFG, GEOM, SPEC)
        assert len(traj.waypoints) > 60
    for d in STRETCH_DIRECTIONS:
        traj = render_stretch_trial(d, CFG, GEOM, SPEC)
        assert len(traj.waypoints) > 60


def test_render_config_validation():
    with pytest.raises(ValueError):
        RenderConfig(tick_rate=10.0)
    with pytest.raises(ValueError):
        RenderConfig(hover_height=0.0)
