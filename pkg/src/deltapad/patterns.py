"""Stimulus pattern catalog: 9 contact points, 8 stretch directions, and the
five-mode stimulus data model.

Layout convention: +y points toward the fingertip, so U (up) is +y, R is +x
as seen looking down at the pad. The 8 peripheral contact points sit on a
ring at 45 deg steps; stretch strokes are centered on the pad center.
"""

from dataclasses import dataclass
import math

import numpy as np

from .errors import Singular, TorqueLimitExceeded, Unreachable, JointLimit, NoIntersection
from .geometry import DeltaGeometry, WorkspaceSpec, inverse_kinematics, max_normal_force

CONTACT_IDS = ("C", "U", "UR", "R", "DR", "D", "DL", "L", "UL")
STRETCH_DIRECTIONS = ("U", "UR", "R", "DR", "D", "DL", "L", "UL")

# compass angle of each non-center id, deg CCW from +x
_ANGLES = {
    "U": 90.0, "UR": 45.0, "R": 0.0, "DR": -45.0,
    "D": -90.0, "DL": -135.0, "L": 180.0, "UL": 135.0,
}


@dataclass(frozen=True)
class PatternLayout:
    ring_radius: float = 4.5
    stretch_length: float = 6.0
    stretch_speed: float = 20.0
    contact_plane_z: float = 27.0

    def __post_init__(self):
        if self.ring_radius <= 0 or self.stretch_length <= 0 or self.stretch_speed <= 0:
            raise ValueError("layout lengths and speed must be positive")


def direction_unit(direction: str) -> np.ndarray:
    """Unit vector in the pad plane for a compass direction id."""
    if direction not in _ANGLES:
        raise ValueError(f"unknown direction {direction!r}")
    a = math.radians(_ANGLES[direction])
    return np.array([math.cos(a), math.sin(a)])


def opposite(direction: str) -> str:
    swap = {"U": "D", "D": "U", "L": "R", "R": "L"}
    return "".join(swap[c] for c in direction)


def contact_point_position(pattern_id: str, layout: PatternLayout) -> np.ndarray:
    """Pose of a contact pattern on the contact plane."""
    if pattern_id == "C":
        return np.array([0.0, 0.0, layout.contact_plane_z])
    if pattern_id not in _ANGLES:
        raise ValueError(f"unknown contact pattern {pattern_id!r}")
    u = direction_unit(pattern_id) * layout.ring_radius
    return np.array([u[0], u[1], layout.contact_plane_z])


def stretch_path(direction: str, layout: PatternLayout):
    """(start, end) poses of a stretch stroke: -L/2 to +L/2 along the
    direction, through the pad center, on the contact plane."""
    u = direction_unit(direction)
    half = 0.5 * layout.stretch_length
    start = np.array([-half * u[0], -half * u[1], layout.contact_plane_z])
    end = np.array([half * u[0], half * u[1], layout.contact_plane_z])
    return start, end


# stimulus model: one dataclass per mode, Stimulus is their union

@dataclass(frozen=True)
class Contact:
    point: tuple
    force: float = 1.0


@dataclass(frozen=True)
class Pressure:
    point: tuple
    force: float
    duration: float


@dataclass(frozen=True)
class Encounter:
    point: tuple
    hover_height: float = 5.0


@dataclass(frozen=True)
class SkinStretch:
    direction: str
    start: tuple
    length: float
    speed: float
    normal_force: float = 1.0


@dataclass(frozen=True)
class Vibration:
    duty: float
    duration: float
    envelope: str = "constant"


Stimulus = (Contact, Pressure, Encounter, SkinStretch, Vibration)


@dataclass(frozen=True)
class Violation:
    code: str
    detail: str


def _check_point(tag, point, geom, spec, violations, penetration_allowance=0.0):
    pose = np.asarray(point, dtype=float)
    if not spec.contains(pose, penetration_allowance):
        violations.append(Violation("PathOutsideWorkspace", f"{tag} {tuple(pose)} outside workspace"))
        return None
    try:
        inverse_kinematics(geom, pose)
    except (Unreachable, JointLimit, NoIntersection, Singular) as e:
        violations.append(Violation("PathOutsideWorkspace", f"{tag}: {e}"))
        return None
    return pose


def _check_force(tag, force, pose, geom, violations):
    if force <= 0:
        violations.append(Violation("ForceInfeasible", f"{tag} force must be positive"))
        return
    if pose is None:
        return
    try:
        limit = max_normal_force(geom, pose)
    except (Singular, Unreachable, JointLimit, NoIntersection):
        return  # already reported as a workspace violation
    if force > limit + 1e-12:
        violations.append(Violation(
            "ForceInfeasible", f"{tag} {force:.3g} N exceeds {limit:.3g} N limit"))


def validate_stimulus(stimulus, geom: DeltaGeometry, spec: WorkspaceSpec) -> list:
    """Check a stimulus against the workspace and force envelope.

    Returns a list of Violation values (empty means ok); collects every
    violation rather than stopping at the first.
    """
    v = []
    if isinstance(stimulus, Contact):
        pose = _check_point("contact point", stimulus.point, geom, spec, v)
        _check_force("contact", stimulus.force, pose, geom, v)
    elif isinstance(stimulus, Pressure):
        pose = _check_point("pressure point", stimulus.point, geom, spec, v)
        _check_force("pressure", stimulus.force, pose, geom, v)
        if stimulus.duration <= 0:
            v.append(Violation("NonPositiveDuration", "pressure duration must be > 0"))
    elif isinstance(stimulus, Encounter):
        _check_point("encounter point", stimulus.point, geom, spec, v)
        if stimulus.hover_height <= 0:
            v.append(Violation("NonPositiveDuration", "hover height must be > 0"))
    elif isinstance(stimulus, SkinStretch):
        if stimulus.direction not in _ANGLES:
            v.append(Violation("UnknownDirection", f"{stimulus.direction!r}"))
        else:
            u = direction_unit(stimulus.direction)
            start = np.asarray(stimulus.start, dtype=float)
            end = start + np.array([u[0], u[1], 0.0]) * stimulus.length
            p_start = _check_point("stretch start", start, geom, spec, v)
            p_end = _check_point("stretch end", end, geom, spec, v)
            pose = p_start if p_start is not None else p_end
            _check_force("stretch", stimulus.normal_force, pose, geom, v)
        if stimulus.length <= 0 or stimulus.speed <= 0:
            v.append(Violation("NonPositiveDuration", "stretch length and speed must be > 0"))
    elif isinstance(stimulus, Vibration):
        if not 0.0 <= stimulus.duty <= 1.0:
            v.append(Violation("DutyOutOfRange", f"duty {stimulus.duty}"))
        if stimulus.duration <= 0:
            v.append(Violation("NonPositiveDuration", "vibration duration must be > 0"))
        if stimulus.envelope not in ("constant", "pulsed"):
            v.append(Violation("UnknownEnvelope", f"{stimulus.envelope!r}"))
    else:
        v.append(Violation("UnknownStimulus", f"{type(stimulus).__name__}"))
    return v


def contact_stimulus(pattern_id: str, layout: PatternLayout, force: float = 1.0) -> Contact:
    pose = contact_point_position(pattern_id, layout)
    return Contact(point=tuple(pose), force=force)


def stretch_stimulus(direction: str, layout: PatternLayout, normal_force: float = 1.0) -> SkinStretch:
    start, _ = stretch_path(direction, layout)
    return SkinStretch(
        direction=direction,
        start=tuple(start),
        length=layout.stretch_length,
        speed=layout.stretch_speed,
        normal_force=normal_force,
    )


def catalog(layout: PatternLayout) -> dict:
    """JSON-ready pattern catalog for UI guides."""
    return {
        "contact": [
            {
                "id": pid,
                "position": [round(c, 6) for c in contact_point_position(pid, layout)],
            }
            for pid in CONTACT_IDS
        ],
        "stretch": [
            {
                "id": d,
                "start": [round(c, 6) for c in stretch_path(d, layout)[0]],
                "end": [round(c, 6) for c in stretch_path(d, layout)[1]],
                "unit": [round(c, 6) for c in direction_unit(d)],
            }
            for d in STRETCH_DIRECTIONS
        ],
        "layout": {
            "ring_radius": layout.ring_radius,
            "stretch_length": layout.stretch_length,
            "stretch_speed": layout.stretch_speed,
            "contact_plane_z": layout.contact_plane_z,
        },
    }
