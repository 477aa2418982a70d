"""Virtual device, finger-pad contact model, and the synthetic responder.

The device is a slew-limited first-order servo surrogate: each commanded
frame is decoded to target angles, which the servos track at no more than
``servo_slew_limit`` deg/s after a configurable command latency. That is
enough to verify protocol, timing, and closed-loop force behavior; true
servo dynamics are out of scope.

Everything here is deterministic: a (seed, frame stream) pair fully fixes
the outputs.
"""

from collections import deque
from dataclasses import dataclass, field
import csv
import json
import math
import random

import numpy as np

from .geometry import DeltaGeometry, forward_kinematics, inverse_kinematics
from .patterns import CONTACT_IDS, STRETCH_DIRECTIONS
from .playback import pulses_for_pose
from .protocol import ServoCalibration, decode_frame, encode_frame, pulse_to_angle
from .trajectory import RenderConfig, Trajectory
from . import transport as transport_mod


@dataclass
class VirtualDevice:
    geometry: DeltaGeometry
    calibration: ServoCalibration = field(default_factory=ServoCalibration)
    servo_slew_limit: float = 600.0  # deg/s
    command_latency: int = 1  # ticks
    current_angles: np.ndarray = None

    def __post_init__(self):
        if self.current_angles is None:
            # park the platform on the device axis mid-travel
            self.current_angles = np.zeros(3)
        self.current_angles = np.asarray(self.current_angles, dtype=float)
        self._pending = deque()
        self._target = self.current_angles.copy()
        self.last_seq = None

    @classmethod
    def at_pose(cls, geometry, pose, calibration=None, **kw):
        cal = calibration or ServoCalibration()
        angles = inverse_kinematics(geometry, pose)
        return cls(geometry=geometry, calibration=cal, current_angles=angles, **kw)

    @property
    def pose(self) -> np.ndarray:
        return forward_kinematics(self.geometry, self.current_angles)


@dataclass(frozen=True)
class DeviceState:
    angles: tuple
    pose: tuple
    seq: int


def step(device: VirtualDevice, frame: bytes, dt: float) -> DeviceState:
    """Consume one frame and advance the servos by one step of dt seconds."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    decoded = decode_frame(frame)
    lo, hi = device.geometry.limits_rad
    target = np.array([
        min(hi, max(lo, pulse_to_angle(p, device.calibration, ch)))
        for ch, p in enumerate(decoded.pulses)
    ])
    device._pending.append(target)
    if len(device._pending) > device.command_latency:
        device._target = device._pending.popleft()
    max_step = math.radians(device.servo_slew_limit) * dt
    delta = np.clip(device._target - device.current_angles, -max_step, max_step)
    device.current_angles = device.current_angles + delta
    device.last_seq = decoded.seq
    return DeviceState(tuple(device.current_angles), tuple(device.pose), decoded.seq)


@dataclass(frozen=True)
class FingerPadModel:
    contact_plane_z: float = 27.0
    stiffness: float = 2.0  # N/mm
    friction_mu: float = 0.5

    def __post_init__(self):
        if self.stiffness <= 0:
            raise ValueError("stiffness must be positive")
        if not 0.0 <= self.friction_mu <= 1.5:
            raise ValueError("friction_mu outside [0, 1.5]")


@dataclass(frozen=True)
class ContactEvent:
    t: float
    position: tuple
    normal_force: float
    shear_force: tuple
    in_contact: bool


def contact_force(pad: FingerPadModel, ee_pose, ee_velocity, t: float = 0.0) -> ContactEvent:
    """Linear spring normal force, Coulomb shear.

    Penetration is height above the contact plane. The logged shear is the
    force exerted on the skin: kinetic friction drags the skin along the
    tactor's tangential velocity (the reaction on the tactor opposes it).
    """
    p = np.asarray(ee_pose, dtype=float)
    v = np.asarray(ee_velocity, dtype=float)
    depth = p[2] - pad.contact_plane_z
    if depth <= 0:
        return ContactEvent(t, tuple(p), 0.0, (0.0, 0.0), False)
    normal = pad.stiffness * depth
    vt = v[:2]
    speed = float(np.linalg.norm(vt))
    if speed < 1e-9:
        shear = (0.0, 0.0)
    else:
        s = pad.friction_mu * normal / speed
        shear = (s * vt[0], s * vt[1])
    return ContactEvent(t, tuple(p), normal, shear, True)


def simulate_trial(traj: Trajectory, device: VirtualDevice, pad: FingerPadModel,
                   cfg: RenderConfig = None) -> list:
    """Play a trajectory through the device at the control tick and log
    contact events. One event per waypoint."""
    cfg = cfg or RenderConfig()
    dt = cfg.dt
    events = []
    prev = device.pose
    for i, wp in enumerate(traj.waypoints):
        pulses = pulses_for_pose(device.geometry, device.calibration, wp.pose)
        frame = encode_frame(pulses, wp.vibration_duty, i % 256, device.calibration)
        state = step(device, frame, dt)
        pose = np.asarray(state.pose)
        vel = (pose - prev) / dt
        prev = pose
        events.append(contact_force(pad, pose, vel, t=wp.t))
    return events


def events_to_csv(events, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "x", "y", "z", "normal", "shear_x", "shear_y", "in_contact"])
        for e in events:
            w.writerow([
                f"{e.t:.6f}", *(f"{c:.6f}" for c in e.position),
                f"{e.normal_force:.6f}", *(f"{c:.6f}" for c in e.shear_force),
                int(e.in_contact),
            ])


class SimTransport(transport_mod.Transport):
    """Loopback transport around a VirtualDevice.

    Each written frame steps the device by one tick and queues an ACK.
    ``drop_acks`` is a set of send indexes (0-based, counting every write)
    whose ACK is swallowed, for exercising the retry path; ``nak_seqs``
    forces NAKs for specific sequence numbers.
    """

    def __init__(self, device: VirtualDevice, dt: float = 0.01,
                 drop_acks=None, nak_seqs=None):
        self.device = device
        self.dt = dt
        self.drop_acks = set(drop_acks or ())
        self.nak_seqs = set(nak_seqs or ())
        self._acks = deque()
        self._writes = 0

    def write_frame(self, frame: bytes) -> None:
        idx = self._writes
        self._writes += 1
        state = step(self.device, frame, self.dt)
        if idx in self.drop_acks:
            return
        from .protocol import encode_ack
        self._acks.append(encode_ack(state.seq, flags=0, nak=state.seq in self.nak_seqs))

    def read_ack(self, deadline: float):
        if self._acks:
            return self._acks.popleft()
        return None  # instant timeout; sim time does not wait

    def tick(self, dt: float) -> None:
        pass


# --- synthetic responder -------------------------------------------------

def _contact_confusion():
    rows = {
        "C":  {"C": .93},
        "U":  {"U": .85, "UL": .03, "UR": .06, "C": .06},
        "D":  {"D": .85, "DL": .05, "DR": .05, "C": .05},
        "L":  {"L": .62, "DL": .20, "UL": .09, "C": .09},
        "R":  {"R": .78, "UR": .20, "DR": .01, "C": .01},
        "UL": {"UL": .59, "U": .20, "L": .105, "C": .105},
        "UR": {"UR": .71, "R": .20, "U": .045, "C": .045},
        "DL": {"DL": .68, "L": .20, "D": .06, "C": .06},
        "DR": {"DR": .74, "R": .20, "D": .03, "C": .03},
    }
    # center confuses uniformly with the whole ring
    for p in CONTACT_IDS:
        if p != "C":
            rows["C"][p] = .07 / 8
    return {k: {p: rows[k].get(p, 0.0) for p in CONTACT_IDS} for k in CONTACT_IDS}


def _stretch_confusion():
    rows = {
        "U":  {"U": .89, "UL": .055, "UR": .055},
        "D":  {"D": .90, "DL": .05, "DR": .05},
        "R":  {"R": .86, "UR": .07, "DR": .07},
        "L":  {"L": .85, "UL": .075, "DL": .075},
        "UR": {"UR": .78, "U": .11, "R": .11},
        "UL": {"UL": .79, "U": .105, "L": .105},
        "DL": {"DL": .84, "D": .08, "L": .08},
        "DR": {"DR": .73, "R": .13, "D": .13, "UR": .005, "DL": .005},
    }
    return {k: {p: rows[k].get(p, 0.0) for p in STRETCH_DIRECTIONS} for k in STRETCH_DIRECTIONS}


@dataclass(frozen=True)
class SyntheticResponder:
    """Participant surrogate.

    ``confusion`` maps each true pattern to a row-stochastic dict of answer
    probabilities. ``subject_spread`` models between-subject ability: a
    subject's ability a in {-1, +1} shifts every diagonal to
    d + a*spread*(0.98 - d) with off-diagonals rescaled, which preserves the
    cohort mean exactly while widening the per-pattern rate distribution.
    """

    patterns: tuple
    confusion: dict
    confidence_mean: float
    confidence_sd: float
    subject_spread: float = 0.0

    def __post_init__(self):
        for p in self.patterns:
            row = self.confusion[p]
            s = sum(row.values())
            if abs(s - 1.0) > 1e-9:
                raise ValueError(f"confusion row {p} sums to {s}")
            if any(v < 0 for v in row.values()):
                raise ValueError(f"confusion row {p} has negative mass")

    def row_for(self, true_pattern: str, ability: int) -> dict:
        row = self.confusion[true_pattern]
        d = row[true_pattern]
        off = 1.0 - d
        if ability == 0 or self.subject_spread == 0.0 or off <= 0.0:
            return row
        d2 = d + ability * self.subject_spread * (0.98 - d)
        scale = (1.0 - d2) / off
        return {k: (d2 if k == true_pattern else v * scale) for k, v in row.items()}


def default_contact_responder() -> SyntheticResponder:
    return SyntheticResponder(
        patterns=CONTACT_IDS,
        confusion=_contact_confusion(),
        confidence_mean=4.4,
        confidence_sd=0.6,
        subject_spread=0.35,
    )


def default_stretch_responder() -> SyntheticResponder:
    return SyntheticResponder(
        patterns=STRETCH_DIRECTIONS,
        confusion=_stretch_confusion(),
        confidence_mean=4.5,
        confidence_sd=0.5,
        subject_spread=0.90,
    )


def perfect_responder(mode: str) -> SyntheticResponder:
    pats = CONTACT_IDS if mode == "contact" else STRETCH_DIRECTIONS
    confusion = {p: {q: (1.0 if q == p else 0.0) for q in pats} for p in pats}
    return SyntheticResponder(pats, confusion, confidence_mean=5.0,
                              confidence_sd=0.0, subject_spread=0.0)


def responder_rng(seed, subject_id: str) -> random.Random:
    """Response stream independent from the sequence shuffle stream."""
    return random.Random(f"responder:{seed}:{subject_id}")


def subject_ability(rng: random.Random) -> int:
    """First draw of a subject's response stream: ability sign."""
    return 1 if rng.random() < 0.5 else -1


def synthetic_response(responder: SyntheticResponder, true_pattern: str,
                       rng: random.Random, ability: int = 0):
    """(answer, confidence 1..5) sampled from the responder model."""
    row = responder.row_for(true_pattern, ability)
    answer = rng.choices(list(responder.patterns),
                         weights=[row[p] for p in responder.patterns])[0]
    raw = rng.gauss(responder.confidence_mean, responder.confidence_sd)
    confidence = int(round(min(5.0, max(1.0, raw))))
    return answer, confidence


def responder_to_json(responder: SyntheticResponder) -> str:
    return json.dumps({
        "patterns": list(responder.patterns),
        "confusion": responder.confusion,
        "confidence_mean": responder.confidence_mean,
        "confidence_sd": responder.confidence_sd,
        "subject_spread": responder.subject_spread,
    }, indent=2)


def responder_from_json(text: str) -> SyntheticResponder:
    data = json.loads(text)
    return SyntheticResponder(
        patterns=tuple(data["patterns"]),
        confusion={k: dict(v) for k, v in data["confusion"].items()},
        confidence_mean=data["confidence_mean"],
        confidence_sd=data["confidence_sd"],
        subject_spread=data.get("subject_spread", 0.0),
    )
