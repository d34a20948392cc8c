"""Memory-less binary symmetric channel simulator and the frame wire format.

Two delivery modes exist. In method 1 the parity frames reach both
recipients error-free (an authenticated public side channel); in method 2
they cross the same noisy channel as the payload stream. The eavesdropper
taps at her own (lower or equal) bit-error rate in either mode.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

MAGIC = b"NKY1"
VERSION = 1
_HEADER = struct.Struct(">4sBBBIBI")

KIND_INFO = 0
KIND_PARITY = 1

GROUP_NONE = 0
GROUP_I = 1
GROUP_II = 2

# Domain separation constants for per-recipient RNG sub-streams.
_RECIPIENT_STREAM = {"bob": 1, "eve": 2}


class FrameParseError(ValueError):
    """Raised when bytes cannot be decoded into a frame."""


@dataclass(frozen=True, eq=False)
class ChannelConfig:
    eve_ber: float
    bob_ber: float
    method: int = 1
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.eve_ber <= 0.5 or not 0.0 <= self.bob_ber <= 0.5:
            raise ValueError("bit-error rates must lie in [0, 1/2]")
        if self.bob_ber < self.eve_ber:
            raise ValueError("the tap point sees the channel at least as cleanly as the receiver")
        if self.method not in (1, 2):
            raise ValueError(f"method must be 1 or 2, got {self.method}")


@dataclass(frozen=True, eq=False)
class Frame:
    method: int
    group: int
    index: int
    kind: int
    payload: np.ndarray     # bit array

    def __eq__(self, other):
        if not isinstance(other, Frame):
            return NotImplemented
        return (
            self.method == other.method
            and self.group == other.group
            and self.index == other.index
            and self.kind == other.kind
            and np.array_equal(self.payload, other.payload)
        )


def bsc_transmit(bits, p: float, rng: np.random.Generator) -> np.ndarray:
    """Flip each bit independently with probability p."""
    if not 0.0 <= p <= 1.0:
        raise ValueError("flip probability must lie in [0, 1]")
    bits = np.asarray(bits, dtype=np.uint8)
    flips = rng.random(len(bits)) < p
    return bits ^ flips.astype(np.uint8)


def _frame_rng(config: ChannelConfig, recipient: str, frame: Frame) -> np.random.Generator:
    seq = np.random.SeedSequence(
        entropy=config.seed,
        spawn_key=(_RECIPIENT_STREAM[recipient], frame.kind, frame.index, frame.group),
    )
    return np.random.default_rng(seq)


def deliver(frame: Frame, config: ChannelConfig, recipient: str, rng: np.random.Generator | None = None) -> Frame:
    """Pass one frame through the channel as seen by `recipient` (bob or eve).

    Parity frames are untouched in method 1 and treated like payload frames
    in method 2. Without an explicit rng the noise comes from a sub-stream
    derived from (seed, recipient, frame identity), so deliveries are
    reproducible and independent per recipient.
    """
    if recipient not in _RECIPIENT_STREAM:
        raise ValueError(f"recipient must be 'bob' or 'eve', got {recipient!r}")
    if frame.kind == KIND_PARITY and config.method == 1:
        return frame
    p = config.bob_ber if recipient == "bob" else config.eve_ber
    if p == 0.0:
        return frame
    if rng is None:
        rng = _frame_rng(config, recipient, frame)
    noisy = bsc_transmit(frame.payload, p, rng)
    return Frame(method=frame.method, group=frame.group, index=frame.index, kind=frame.kind, payload=noisy)


def encode_frame(frame: Frame) -> bytes:
    """Serialize: magic, version, method, group, index, kind, bit length, payload.

    Payload bits are packed MSB first and zero-padded to a byte boundary.
    """
    payload = np.asarray(frame.payload, dtype=np.uint8)
    header = _HEADER.pack(
        MAGIC, VERSION, frame.method, frame.group, frame.index, frame.kind, len(payload)
    )
    return header + np.packbits(payload, bitorder="big").tobytes()


def decode_frame(data: bytes, info_bits: int | None = None, parity_bits: int | None = None) -> Frame:
    """Parse one frame; optionally enforce the expected per-kind payload size."""
    if len(data) < _HEADER.size:
        raise FrameParseError("truncated header")
    magic, version, method, group, index, kind, bitlen = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise FrameParseError(f"bad magic {magic!r}")
    if version != VERSION:
        raise FrameParseError(f"unsupported version {version}")
    if method not in (1, 2):
        raise FrameParseError(f"bad method byte {method}")
    if group not in (GROUP_NONE, GROUP_I, GROUP_II):
        raise FrameParseError(f"bad group byte {group}")
    if kind not in (KIND_INFO, KIND_PARITY):
        raise FrameParseError(f"bad kind byte {kind}")
    nbytes = -(-bitlen // 8)
    if len(data) != _HEADER.size + nbytes:
        raise FrameParseError(f"payload size mismatch: {len(data) - _HEADER.size} bytes for {bitlen} bits")
    expected = info_bits if kind == KIND_INFO else parity_bits
    if expected is not None and bitlen != expected:
        raise FrameParseError(f"kind {kind} expects {expected} payload bits, header says {bitlen}")
    payload = np.unpackbits(
        np.frombuffer(data, dtype=np.uint8, offset=_HEADER.size), bitorder="big"
    )[:bitlen]
    return Frame(method=method, group=group, index=index, kind=kind, payload=payload)


def write_capture(path, frames) -> None:
    """Length-prefixed concatenation of encoded frames."""
    with open(path, "wb") as fh:
        for frame in frames:
            blob = encode_frame(frame)
            fh.write(struct.pack(">I", len(blob)))
            fh.write(blob)


def read_capture(path) -> list[Frame]:
    frames = []
    with open(path, "rb") as fh:
        while True:
            head = fh.read(4)
            if not head:
                break
            if len(head) != 4:
                raise FrameParseError("truncated length prefix")
            (size,) = struct.unpack(">I", head)
            blob = fh.read(size)
            if len(blob) != size:
                raise FrameParseError("truncated frame body")
            frames.append(decode_frame(blob))
    return frames
