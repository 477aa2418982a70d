"""Transport contract: ordered, lossy byte streams carrying frames and ACKs.

A transport exposes write_frame()/read_ack(); send_frame() adds the shared
retry policy: wait up to ``timeout`` for a matching ACK, retry the frame
once, then raise DeviceTimeout. A NAK surfaces immediately as NackedFrame.
"""

import os
import select
import termios
import time

from .errors import BadCrc, BadMagic, DeviceTimeout, NackedFrame, ShortFrame
from . import protocol

SEND_TIMEOUT_S = 0.020
RETRIES = 1


class Transport:
    """Interface. tick() advances simulated time for virtual backends."""

    def write_frame(self, frame: bytes) -> None:
        raise NotImplementedError

    def read_ack(self, deadline: float):
        """Return raw 4-byte ACK or None on timeout."""
        raise NotImplementedError

    def tick(self, dt: float) -> None:
        pass

    def close(self) -> None:
        pass


def send_frame(transport: Transport, frame: bytes,
               timeout: float = SEND_TIMEOUT_S, retries: int = RETRIES) -> protocol.DecodedAck:
    """Send with the retry contract; returns the decoded matching ACK."""
    want_seq = frame[2]
    for attempt in range(retries + 1):
        transport.write_frame(frame)
        deadline = time.monotonic() + timeout
        while True:
            raw = transport.read_ack(deadline)
            if raw is None:
                break  # timeout, maybe retry
            try:
                ack = protocol.decode_ack(raw)
            except (BadMagic, BadCrc, ShortFrame):
                continue  # corrupted ack, keep listening until deadline
            if ack.seq != want_seq:
                continue  # stale ack from an earlier frame
            if ack.nak:
                raise NackedFrame(f"device rejected frame seq={want_seq}")
            return ack
    raise DeviceTimeout(f"no ack for seq={want_seq} after {retries + 1} attempts")


class SerialTransport(Transport):
    """115200 8N1 serial port via termios; no external dependency."""

    def __init__(self, path: str, baud: int = 115200):
        self.fd = os.open(path, os.O_RDWR | os.O_NOCTTY | os.O_NONBLOCK)
        try:
            attrs = termios.tcgetattr(self.fd)
            iflag, oflag, cflag, lflag, ispeed, ospeed, cc = attrs
            cflag |= termios.CLOCAL | termios.CREAD
            cflag &= ~termios.PARENB & ~termios.CSTOPB & ~termios.CSIZE
            cflag |= termios.CS8
            lflag = 0
            iflag = 0
            oflag = 0
            speed = getattr(termios, f"B{baud}")
            cc = list(cc)
            cc[termios.VMIN] = 0
            cc[termios.VTIME] = 0
            termios.tcsetattr(self.fd, termios.TCSANOW,
                              [iflag, oflag, cflag, lflag, speed, speed, cc])
        except termios.error:
            # pseudo-terminals reject some attributes; keep going for tests
            pass
        self._buf = b""

    def write_frame(self, frame: bytes) -> None:
        view = memoryview(frame)
        while view:
            n = os.write(self.fd, view)
            view = view[n:]

    def read_ack(self, deadline: float):
        while True:
            # scan buffer for an ack lead byte with 3 bytes behind it
            for i, b in enumerate(self._buf):
                if b in (protocol.ACK_BYTE, protocol.NAK_BYTE) and len(self._buf) >= i + protocol.ACK_LEN:
                    raw = self._buf[i:i + protocol.ACK_LEN]
                    self._buf = self._buf[i + protocol.ACK_LEN:]
                    return raw
            remaining = deadline - time.monotonic()
            if remaining <= 0:
                return None
            r, _, _ = select.select([self.fd], [], [], remaining)
            if not r:
                return None
            chunk = os.read(self.fd, 64)
            if chunk:
                self._buf += chunk

    def close(self) -> None:
        if self.fd is not None:
            os.close(self.fd)
            self.fd = None
