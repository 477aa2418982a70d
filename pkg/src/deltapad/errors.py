"""Exception hierarchy shared across the stack.

Every error carries a machine-readable ``code`` (its class name) so the
service layer can map engine failures to HTTP error bodies without string
matching.
"""


class DeltaPadError(Exception):
    """Base class for all package errors."""

    @property
    def code(self) -> str:
        return type(self).__name__


# geometry / kinematics

class Unreachable(DeltaPadError):
    """IK discriminant negative: pose outside the mechanism's reach."""


class JointLimit(DeltaPadError):
    """IK solution exists but violates joint angle limits."""


class NoIntersection(DeltaPadError):
    """FK rod spheres do not meet."""


class Singular(DeltaPadError):
    """Degenerate configuration (collinear centers or ill-conditioned Jacobian)."""


class TorqueLimitExceeded(DeltaPadError):
    """Requested force needs more torque than a servo can deliver."""


class GeometryInfeasible(DeltaPadError):
    """Workspace cylinder not fully reachable. Carries the partial report."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class WorkspaceViolation(DeltaPadError):
    """Commanded pose outside the allowed workspace."""


# trajectory rendering

class InfeasibleForce(DeltaPadError):
    """Stimulus force exceeds what the mechanism can exert at that pose."""


class NegativeForce(DeltaPadError):
    pass


class OutOfRange(DeltaPadError):
    """Sample time outside the trajectory's [0, total_duration]."""


# wire protocol / transport

class ProtocolError(DeltaPadError):
    pass


class BadMagic(ProtocolError):
    pass


class ShortFrame(ProtocolError):
    pass


class BadCrc(ProtocolError):
    pass


class PulseOutOfRange(ProtocolError):
    pass


class OutOfPeriod(ProtocolError):
    pass


class DeviceTimeout(DeltaPadError):
    """No valid ACK after the retry budget."""


class NackedFrame(DeltaPadError):
    """Firmware rejected the frame (NAK)."""


# experiment engine

class SessionComplete(DeltaPadError):
    """All trials answered; no further stimulus."""


class ResponsePending(DeltaPadError):
    """next_stimulus called again before the current trial was answered."""


class WrongTrial(DeltaPadError):
    """Response addressed to a trial that is not the pending one."""


class InvalidConfidence(DeltaPadError):
    """Confidence outside the 1..5 scale."""


class AlreadyAnswered(DeltaPadError):
    pass


class MixedModes(DeltaPadError):
    """summarize() given sessions of different modes."""


class IncompleteSession(DeltaPadError):
    pass


# stats

class DegenerateGroups(DeltaPadError):
    pass


class InvalidDf(DeltaPadError):
    pass


class TooFew(DeltaPadError):
    """Not enough samples for the requested statistic."""
