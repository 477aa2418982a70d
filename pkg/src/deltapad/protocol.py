"""Wire protocol: 11-byte command frames, 4-byte ACKs, servo pulse maps.

Frame layout (little-endian):

    offset  size  field
    0       2     magic 0xA5 0x5A
    2       1     seq (u8)
    3       6     pulses, 3 x u16 microseconds
    9       1     vibration duty (0..255 for 0..100%)
    10      1     CRC-8 poly 0x07 init 0x00 over bytes 2..9

ACK layout: 0x06, seq, state flags, CRC-8 over bytes 1..2. A NAK replaces
the leading byte with 0x15.
"""

from dataclasses import dataclass
from typing import NamedTuple
import math
import struct

from .errors import BadCrc, BadMagic, OutOfPeriod, PulseOutOfRange, ShortFrame

MAGIC = b"\xa5\x5a"
FRAME_LEN = 11
ACK_LEN = 4
ACK_BYTE = 0x06
NAK_BYTE = 0x15

PWM_FREQUENCY_HZ = 50.0
PWM_PERIOD_US = 1_000_000.0 / PWM_FREQUENCY_HZ  # 20000
PCA9685_STEPS = 4096


def _make_crc8_table(poly: int = 0x07):
    table = []
    for byte in range(256):
        crc = byte
        for _ in range(8):
            crc = ((crc << 1) ^ poly) & 0xFF if crc & 0x80 else (crc << 1) & 0xFF
        table.append(crc)
    return tuple(table)


_CRC8_TABLE = _make_crc8_table()


def crc8(data: bytes, init: int = 0x00) -> int:
    crc = init
    for b in data:
        crc = _CRC8_TABLE[crc ^ b]
    return crc


@dataclass(frozen=True)
class ServoCalibration:
    """Linear angle-to-pulse map plus per-channel trim offsets (us)."""

    pulse_min: int = 500
    pulse_max: int = 2500
    angle_min: float = -90.0  # deg
    angle_max: float = 90.0
    trim: tuple = (0.0, 0.0, 0.0)

    def __post_init__(self):
        if self.pulse_min >= self.pulse_max:
            raise ValueError("pulse_min must be below pulse_max")
        if self.angle_min >= self.angle_max:
            raise ValueError("angle_min must be below angle_max")


class PulseResult(NamedTuple):
    pulse_us: int
    clamped: bool


def angle_to_pulse(angle: float, cal: ServoCalibration, channel: int = None) -> PulseResult:
    """Map a joint angle (rad) to an integer pulse width.

    Linear over [angle_min, angle_max] -> [pulse_min, pulse_max], nearest-us
    rounding, plus the channel trim. Out-of-range angles clamp to the pulse
    limits and set the flag instead of raising.
    """
    deg = math.degrees(angle)
    span = cal.angle_max - cal.angle_min
    raw = cal.pulse_min + (deg - cal.angle_min) / span * (cal.pulse_max - cal.pulse_min)
    if channel is not None:
        raw += cal.trim[channel]
    pulse = round(raw)
    if pulse < cal.pulse_min:
        return PulseResult(cal.pulse_min, True)
    if pulse > cal.pulse_max:
        return PulseResult(cal.pulse_max, True)
    return PulseResult(pulse, False)


def pulse_to_angle(pulse_us: float, cal: ServoCalibration, channel: int = None) -> float:
    """Inverse of angle_to_pulse (rad), ignoring the rounding."""
    raw = float(pulse_us)
    if channel is not None:
        raw -= cal.trim[channel]
    span = cal.pulse_max - cal.pulse_min
    deg = cal.angle_min + (raw - cal.pulse_min) / span * (cal.angle_max - cal.angle_min)
    return math.radians(deg)


def encode_frame(pulses, duty: float, seq: int, cal: ServoCalibration = None) -> bytes:
    """Pack pulses/duty/seq into the 11-byte frame."""
    cal = cal or ServoCalibration()
    if len(pulses) != 3:
        raise ValueError("need exactly 3 pulses")
    for p in pulses:
        if not (cal.pulse_min <= p <= cal.pulse_max):
            raise PulseOutOfRange(f"pulse {p} us outside [{cal.pulse_min}, {cal.pulse_max}]")
    if not 0.0 <= duty <= 1.0:
        raise ValueError(f"duty {duty} outside [0, 1]")
    if not 0 <= seq <= 255:
        raise ValueError(f"seq {seq} outside u8")
    body = struct.pack("<BHHHB", seq, *(int(p) for p in pulses), round(duty * 255))
    return MAGIC + body + bytes([crc8(body)])


class DecodedFrame(NamedTuple):
    pulses: tuple
    duty: float
    seq: int


def decode_frame(data: bytes) -> DecodedFrame:
    """Validate and unpack a frame. Never silently accepts corruption."""
    if len(data) != FRAME_LEN:
        raise ShortFrame(f"expected {FRAME_LEN} bytes, got {len(data)}")
    if data[:2] != MAGIC:
        raise BadMagic(f"bad magic {data[:2].hex()}")
    body, crc = data[2:10], data[10]
    if crc8(body) != crc:
        raise BadCrc(f"crc mismatch: got {crc:#04x}, want {crc8(body):#04x}")
    seq, p1, p2, p3, duty_byte = struct.unpack("<BHHHB", body)
    return DecodedFrame((p1, p2, p3), duty_byte / 255.0, seq)


def pulse_to_counts(pulse_us: float, pwm_frequency: float = PWM_FREQUENCY_HZ) -> int:
    """12-bit PCA9685 on-counts for a pulse width at the given PWM frequency."""
    period = 1_000_000.0 / pwm_frequency
    if not 0.0 <= pulse_us <= period:
        raise OutOfPeriod(f"pulse {pulse_us} us outside [0, {period}]")
    return min(PCA9685_STEPS - 1, round(pulse_us * PCA9685_STEPS / period))


def encode_ack(seq: int, flags: int = 0, nak: bool = False) -> bytes:
    body = bytes([seq & 0xFF, flags & 0xFF])
    return bytes([NAK_BYTE if nak else ACK_BYTE]) + body + bytes([crc8(body)])


class DecodedAck(NamedTuple):
    seq: int
    flags: int
    nak: bool


def decode_ack(data: bytes) -> DecodedAck:
    if len(data) != ACK_LEN:
        raise ShortFrame(f"expected {ACK_LEN} bytes, got {len(data)}")
    if data[0] not in (ACK_BYTE, NAK_BYTE):
        raise BadMagic(f"bad ack lead byte {data[0]:#04x}")
    if crc8(data[1:3]) != data[3]:
        raise BadCrc("ack crc mismatch")
    return DecodedAck(data[1], data[2], data[0] == NAK_BYTE)
