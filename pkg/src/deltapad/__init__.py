"""deltapad: fingertip-scale delta mechanism haptic display toolkit.

Kinematics and force mapping for the 3-DoF inverted delta platform, the
tactile pattern catalog, trajectory rendering, the servo wire protocol, a
deterministic device simulator with synthetic study responders, the
psychophysics session engine, and the nonparametric analysis used on the
study data. The HTTP service lives in deltapad.service (needs fastapi).
"""

from .errors import DeltaPadError
from .geometry import (
    DeltaGeometry,
    WorkspaceSpec,
    forward_kinematics,
    inverse_kinematics,
    jacobian,
    max_normal_force,
    torques_for_force,
    workspace_report,
)
from .patterns import (
    CONTACT_IDS,
    STRETCH_DIRECTIONS,
    PatternLayout,
    catalog,
    contact_stimulus,
    stretch_stimulus,
    validate_stimulus,
)
from .trajectory import (
    RenderConfig,
    Trajectory,
    Waypoint,
    force_to_depth,
    render_contact_trial,
    render_encounter,
    render_stretch_trial,
    sample,
)
from .protocol import (
    ServoCalibration,
    angle_to_pulse,
    crc8,
    decode_ack,
    decode_frame,
    encode_ack,
    encode_frame,
    pulse_to_angle,
    pulse_to_counts,
)
from .transport import SerialTransport, Transport, send_frame
from .playback import pulses_for_pose
from .simulator import (
    FingerPadModel,
    SimTransport,
    SyntheticResponder,
    VirtualDevice,
    contact_force,
    default_contact_responder,
    default_stretch_responder,
    perfect_responder,
    simulate_trial,
)
from .experiment import (
    Session,
    SessionSpec,
    analyze_sessions,
    build_sequence,
    create_session,
    load_session,
    next_stimulus,
    record_response,
    run_cohort,
    run_synthetic_session,
    save_session,
    summarize,
)
from .stats import chi_square_sf, describe, kruskal_wallis, mann_whitney_u
from .config import AppConfig, ServiceConfig, load_config

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
