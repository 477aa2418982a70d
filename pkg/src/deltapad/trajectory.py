"""Render stimuli into fixed-tick trajectories.

A trajectory is a list of waypoints, one per control tick, tracing the trial
choreography: park at the center hover point, translate at hover depth,
descend, act (dwell or stroke), retract. Rendering is pure; re-rendering the
same inputs yields identical waypoints.
"""

from dataclasses import dataclass
from typing import NamedTuple
import csv
import math

import numpy as np

from .errors import InfeasibleForce, NegativeForce, OutOfRange, WorkspaceViolation
from .geometry import DeltaGeometry, WorkspaceSpec
from . import patterns
from .patterns import PatternLayout, contact_stimulus, stretch_stimulus, validate_stimulus

PHASES = ("approach", "contact", "stroke", "dwell", "retract")


@dataclass(frozen=True)
class RenderConfig:
    tick_rate: float = 100.0
    hover_height: float = 5.0
    contact_dwell: float = 0.5
    approach_speed: float = 30.0
    retract_speed: float = 30.0
    pad_stiffness: float = 2.0
    max_penetration: float = 1.5

    def __post_init__(self):
        if self.tick_rate < 50.0:
            raise ValueError("tick_rate must be at least 50 Hz")
        for name in ("hover_height", "contact_dwell", "approach_speed",
                     "retract_speed", "pad_stiffness", "max_penetration"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")

    @property
    def dt(self):
        return 1.0 / self.tick_rate


@dataclass(frozen=True)
class Waypoint:
    t: float
    pose: tuple
    target_force: tuple
    vibration_duty: float
    phase: str


@dataclass(frozen=True)
class Trajectory:
    waypoints: tuple
    total_duration: float


class DepthResult(NamedTuple):
    depth: float
    clamped: bool


def force_to_depth(force: float, stiffness: float, max_penetration: float) -> DepthResult:
    """Penetration depth of the linear pad model, clamped to the cap."""
    if force < 0:
        raise NegativeForce(f"force {force} N")
    if stiffness <= 0 or max_penetration <= 0:
        raise ValueError("stiffness and max_penetration must be positive")
    raw = force / stiffness
    if raw > max_penetration:
        return DepthResult(max_penetration, True)
    return DepthResult(raw, False)


class _Builder:
    def __init__(self, cfg: RenderConfig, start_pose):
        self.cfg = cfg
        self.tick = 0
        self.pose = np.asarray(start_pose, dtype=float)
        self.points = [Waypoint(0.0, tuple(self.pose), (0.0, 0.0, 0.0), 0.0, "approach")]

    def _emit(self, pose, force, duty, phase):
        self.tick += 1
        t = self.tick / self.cfg.tick_rate
        self.points.append(Waypoint(t, tuple(pose), tuple(force), duty, phase))

    def move(self, target, speed, phase, arrival_phase=None, force=(0.0, 0.0, 0.0), duty=0.0):
        """Linear translation to target; tick count rounded up so the actual
        speed never exceeds the limit."""
        target = np.asarray(target, dtype=float)
        dist = float(np.linalg.norm(target - self.pose))
        if dist < 1e-12:
            return
        n = max(1, math.ceil(dist / (speed * self.cfg.dt) - 1e-9))
        start = self.pose.copy()
        for k in range(1, n + 1):
            pose = start + (target - start) * (k / n)
            ph = arrival_phase if (arrival_phase and k == n) else phase
            self._emit(pose, force, duty, ph)
        self.pose = target

    def hold(self, n_ticks, phase, force=(0.0, 0.0, 0.0), duty=0.0):
        for _ in range(n_ticks):
            self._emit(self.pose, force, duty, phase)

    def build(self) -> Trajectory:
        return Trajectory(tuple(self.points), self.points[-1].t)


def _center_hover(cfg: RenderConfig, layout: PatternLayout):
    return np.array([0.0, 0.0, layout.contact_plane_z - cfg.hover_height])


def _raise_on_violations(violations):
    for v in violations:
        if v.code == "ForceInfeasible":
            raise InfeasibleForce(v.detail)
    if violations:
        raise WorkspaceViolation("; ".join(f"{v.code}: {v.detail}" for v in violations))


def render_contact_trial(pattern_id: str, cfg: RenderConfig, geom: DeltaGeometry,
                         spec: WorkspaceSpec = None, layout: PatternLayout = None,
                         force: float = 1.0) -> Trajectory:
    """Contact trial: hover above the target, press for contact_dwell, retract.

    The trajectory starts at the center hover pose and ends at the target's
    hover pose. The contact phase holds the penetration depth for exactly
    contact_dwell (waypoint timestamps first to last).
    """
    spec = spec or WorkspaceSpec()
    layout = layout or PatternLayout(contact_plane_z=spec.contact_plane_z)
    stim = contact_stimulus(pattern_id, layout, force)
    _raise_on_violations(validate_stimulus(stim, geom, spec))
    depth = force_to_depth(force, cfg.pad_stiffness, cfg.max_penetration)
    target = np.asarray(stim.point)
    hover = target - np.array([0.0, 0.0, cfg.hover_height])
    pressed = target + np.array([0.0, 0.0, depth.depth])
    f_contact = (0.0, 0.0, cfg.pad_stiffness * depth.depth)

    b = _Builder(cfg, _center_hover(cfg, layout))
    b.move(hover, cfg.approach_speed, "approach")
    # descent arrival is the first contact sample, so the dwell spans
    # exactly contact_dwell between its first and last waypoint
    b.move(pressed, cfg.approach_speed, "approach",
           arrival_phase="contact", force=f_contact)
    b.hold(round(cfg.contact_dwell * cfg.tick_rate), "contact", force=f_contact)
    b.move(hover, cfg.retract_speed, "retract")
    return b.build()


def render_stretch_trial(direction: str, cfg: RenderConfig, geom: DeltaGeometry,
                         spec: WorkspaceSpec = None, layout: PatternLayout = None,
                         normal_force: float = 1.0) -> Trajectory:
    """Stretch trial: press at the stroke start, translate at constant depth
    along the direction, retract, and return to the center hover pose."""
    spec = spec or WorkspaceSpec()
    layout = layout or PatternLayout(contact_plane_z=spec.contact_plane_z)
    stim = stretch_stimulus(direction, layout, normal_force)
    _raise_on_violations(validate_stimulus(stim, geom, spec))
    depth = force_to_depth(normal_force, cfg.pad_stiffness, cfg.max_penetration)
    start, end = patterns.stretch_path(direction, layout)
    dz = np.array([0.0, 0.0, depth.depth])
    hz = np.array([0.0, 0.0, cfg.hover_height])
    f_contact = (0.0, 0.0, cfg.pad_stiffness * depth.depth)

    b = _Builder(cfg, _center_hover(cfg, layout))
    b.move(start - hz, cfg.approach_speed, "approach")
    b.move(start + dz, cfg.approach_speed, "approach",
           arrival_phase="stroke", force=f_contact)
    b.move(end + dz, layout.stretch_speed, "stroke", force=f_contact)
    b.move(end - hz, cfg.retract_speed, "retract")
    b.move(_center_hover(cfg, layout), cfg.retract_speed, "retract")
    return b.build()


def render_encounter(target, cfg: RenderConfig,
                     spec: WorkspaceSpec = None, layout: PatternLayout = None) -> Trajectory:
    """Reposition to the hover point above target at top speed and park.

    No waypoint is in contact; the device waits there for a contact command.
    """
    spec = spec or WorkspaceSpec()
    layout = layout or PatternLayout(contact_plane_z=spec.contact_plane_z)
    target = np.asarray(target, dtype=float)
    park = target - np.array([0.0, 0.0, cfg.hover_height])
    if not spec.contains(target):
        raise WorkspaceViolation(f"encounter target {tuple(target)} outside workspace")
    if not spec.contains(park):
        raise WorkspaceViolation(f"park pose {tuple(park)} outside workspace")
    b = _Builder(cfg, _center_hover(cfg, layout))
    b.move(park, max(cfg.approach_speed, cfg.retract_speed), "approach",
           arrival_phase="dwell")
    b.hold(1, "dwell")
    return b.build()


def sample(traj: Trajectory, t: float) -> Waypoint:
    """Interpolated waypoint at time t.

    Pose, force, and duty interpolate linearly between the bracketing
    waypoints; the phase is the earlier waypoint's.
    """
    if t < 0 or t > traj.total_duration + 1e-12:
        raise OutOfRange(f"t={t} outside [0, {traj.total_duration}]")
    pts = traj.waypoints
    lo, hi = 0, len(pts) - 1
    while lo < hi:
        mid = (lo + hi + 1) // 2
        if pts[mid].t <= t:
            lo = mid
        else:
            hi = mid - 1
    a = pts[lo]
    if a.t == t or lo == len(pts) - 1:
        return a
    b = pts[lo + 1]
    u = (t - a.t) / (b.t - a.t)
    pose = tuple(pa + (pb - pa) * u for pa, pb in zip(a.pose, b.pose))
    force = tuple(fa + (fb - fa) * u for fa, fb in zip(a.target_force, b.target_force))
    duty = a.vibration_duty + (b.vibration_duty - a.vibration_duty) * u
    return Waypoint(t, pose, force, duty, a.phase)


def write_csv(traj: Trajectory, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "x", "y", "z", "fx", "fy", "fz", "duty", "phase"])
        for wp in traj.waypoints:
            w.writerow([
                f"{wp.t:.6f}",
                *(f"{c:.6f}" for c in wp.pose),
                *(f"{c:.6f}" for c in wp.target_force),
                f"{wp.vibration_duty:.4f}",
                wp.phase,
            ])
