"""Bit-exact wire codec for the two-channel sample packets.

Layout (little-endian multi-byte fields):

    offset  size  field
    0       2     magic 0xE5 0x05
    2       1     version (currently 1)
    3       2     node_id (u16)
    5       4     seq (u32)
    9       1     channel_count (2)
    10      1     samples_per_channel (100)
    11      1     flags (bit 0: saturated on encode)
    12      400   payload, interleaved per sample: ch0[i], ch1[i] as i16,
                  1 LSB = 100 uV
    412     2     CRC-16/CCITT-FALSE over bytes 0..411 (big-endian)

Total: 414 bytes.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

MAGIC = b"\xe5\x05"
VERSION = 1
CHANNEL_COUNT = 2
SAMPLES_PER_CHANNEL = 100
LSB_VOLTS = 100e-6
HEADER_BYTES = 12
PACKET_BYTES = HEADER_BYTES + 2 * CHANNEL_COUNT * SAMPLES_PER_CHANNEL + 2  # 414

FLAG_SATURATED = 0x01

_HEADER = struct.Struct("<2sBHIBBB")

SEQ_MODULUS = 1 << 32


class TelemetryError(Exception):
    """Base class for telemetry codec and session errors."""


class FramingError(TelemetryError):
    """Bad magic, impossible length, or truncated buffer."""


class IntegrityError(TelemetryError):
    """CRC mismatch."""


class VersionError(TelemetryError):
    """Valid frame with an unsupported version byte."""


def _crc_table() -> list[int]:
    table = []
    for byte in range(256):
        crc = byte << 8
        for _ in range(8):
            crc = ((crc << 1) ^ 0x1021 if crc & 0x8000 else crc << 1) & 0xFFFF
        table.append(crc)
    return table


_CRC_TABLE = _crc_table()


def crc16_ccitt_false(data: bytes) -> int:
    """CRC-16/CCITT-FALSE: poly 0x1021, init 0xFFFF, no reflection."""
    crc = 0xFFFF
    for byte in data:
        crc = ((crc << 8) & 0xFFFF) ^ _CRC_TABLE[(crc >> 8) ^ byte]
    return crc


@dataclass
class TelemetryPacket:
    """Decoded packet; samples are raw signed 16-bit counts."""

    node_id: int
    seq: int
    ch0: np.ndarray
    ch1: np.ndarray
    version: int = VERSION
    flags: int = 0

    def __eq__(self, other) -> bool:
        if not isinstance(other, TelemetryPacket):
            return NotImplemented
        return (self.node_id == other.node_id and self.seq == other.seq
                and self.version == other.version and self.flags == other.flags
                and np.array_equal(self.ch0, other.ch0)
                and np.array_equal(self.ch1, other.ch1))

    def volts(self, channel: int) -> np.ndarray:
        counts = self.ch0 if channel == 0 else self.ch1
        return counts.astype(np.float64) * LSB_VOLTS


def _quantize(samples, flags: int) -> tuple[np.ndarray, int]:
    counts = np.asarray(samples)
    if counts.dtype == np.int16:
        return counts, flags
    scaled = np.round(np.asarray(counts, dtype=np.float64) / LSB_VOLTS)
    if np.any(scaled > 32767) or np.any(scaled < -32768):
        flags |= FLAG_SATURATED
        scaled = np.clip(scaled, -32768, 32767)
    return scaled.astype(np.int16), flags


def encode_packet(node_id: int, seq: int, ch0, ch1, *,
                  flags: int = 0) -> bytes:
    """Frame 100 samples per channel into one 414-byte packet.

    Float inputs are treated as volts and quantized at 100 uV/LSB;
    values beyond +-3.2767 V saturate-encode and set flag bit 0.
    int16 inputs are taken as raw counts.
    """
    c0, flags = _quantize(ch0, flags)
    c1, flags = _quantize(ch1, flags)
    if c0.size != SAMPLES_PER_CHANNEL or c1.size != SAMPLES_PER_CHANNEL:
        raise ValueError(
            f"each channel must carry exactly {SAMPLES_PER_CHANNEL} samples, "
            f"got {c0.size} and {c1.size}")
    header = _HEADER.pack(MAGIC, VERSION, node_id & 0xFFFF,
                          seq % SEQ_MODULUS, CHANNEL_COUNT,
                          SAMPLES_PER_CHANNEL, flags & 0xFF)
    payload = np.empty(2 * SAMPLES_PER_CHANNEL, dtype="<i2")
    payload[0::2] = c0
    payload[1::2] = c1
    body = header + payload.tobytes()
    return body + crc16_ccitt_false(body).to_bytes(2, "big")


def decode_packet(buf: bytes) -> TelemetryPacket:
    """Validate and decode one packet.

    Raises FramingError on bad magic, truncation, or a length that does
    not match the declared geometry; IntegrityError on CRC mismatch;
    VersionError on an unknown version in an otherwise valid frame.
    """
    if len(buf) < HEADER_BYTES + 2:
        raise FramingError(f"buffer of {len(buf)} bytes is shorter than a header")
    if buf[:2] != MAGIC:
        raise FramingError(f"bad magic {buf[:2].hex()}")
    magic, version, node_id, seq, n_ch, spc, flags = _HEADER.unpack_from(buf)
    expected = HEADER_BYTES + 2 * n_ch * spc + 2
    if len(buf) != expected:
        raise FramingError(
            f"length {len(buf)} does not match declared geometry ({expected})")
    crc_stated = int.from_bytes(buf[-2:], "big")
    crc_actual = crc16_ccitt_false(buf[:-2])
    if crc_stated != crc_actual:
        raise IntegrityError(
            f"CRC mismatch: stated 0x{crc_stated:04x}, actual 0x{crc_actual:04x}")
    if version != VERSION:
        raise VersionError(f"unsupported version {version}")
    if n_ch != CHANNEL_COUNT or spc != SAMPLES_PER_CHANNEL:
        raise FramingError(
            f"unexpected geometry: {n_ch} channels x {spc} samples")
    payload = np.frombuffer(buf, dtype="<i2", count=2 * spc,
                            offset=HEADER_BYTES)
    return TelemetryPacket(node_id=node_id, seq=seq,
                           ch0=payload[0::2].copy(), ch1=payload[1::2].copy(),
                           version=version, flags=flags)


def iter_packets(stream: bytes) -> list[TelemetryPacket]:
    """Split a concatenated byte stream into validated packets."""
    packets = []
    offset = 0
    while offset < len(stream):
        if len(stream) - offset < HEADER_BYTES + 2:
            raise FramingError("trailing bytes shorter than a packet header")
        n_ch = stream[offset + 9]
        spc = stream[offset + 10]
        size = HEADER_BYTES + 2 * n_ch * spc + 2
        packets.append(decode_packet(stream[offset:offset + size]))
        offset += size
    return packets
