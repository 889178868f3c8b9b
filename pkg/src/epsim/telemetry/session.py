"""Session log container and its on-disk format.

File layout: a fixed header (magic ``EPSS``, version, node id, start
timestamp), the received packets verbatim with their base-clock
timestamps, then a footer indexing gap ranges and anomalies.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np

from ..waveform import WaveformBuffer
from .codec import (LSB_VOLTS, SAMPLES_PER_CHANNEL, FramingError,
                    TelemetryPacket, decode_packet, encode_packet)

FILE_MAGIC = b"EPSS"
FILE_VERSION = 1
_GAP_MAGIC = b"GAPS"
_END_MAGIC = b"ENDS"

_FILE_HEADER = struct.Struct("<4sBHdI")
_RECORD_HEADER = struct.Struct("<dQH")
_GAP_ENTRY = struct.Struct("<QQ")


@dataclass
class SessionLog:
    """Decoded packet stream with base timestamps, gaps, and anomalies.

    ``useqs`` are unwrapped sequence numbers (monotone even across the
    32-bit wrap); ``gaps`` are inclusive unwrapped ranges of packets that
    never arrived.
    """

    node_id: int | None = None
    start_time: float = 0.0
    timestamps: list[float] = field(default_factory=list)
    useqs: list[int] = field(default_factory=list)
    packets: list[TelemetryPacket] = field(default_factory=list)
    gaps: list[tuple[int, int]] = field(default_factory=list)
    anomalies: list[str] = field(default_factory=list)

    def append(self, useq: int, ts: float, pkt: TelemetryPacket) -> None:
        if not self.timestamps:
            self.start_time = ts
        elif ts < self.timestamps[-1]:
            ts = self.timestamps[-1]  # base clock is monotone by contract
        self.timestamps.append(ts)
        self.useqs.append(useq)
        self.packets.append(pkt)

    def record_gap(self, first: int, last: int) -> None:
        self.gaps.append((first, last))

    def missing_packets(self) -> int:
        return sum(b - a + 1 for a, b in self.gaps)

    def __eq__(self, other) -> bool:
        if not isinstance(other, SessionLog):
            return NotImplemented
        return (self.node_id == other.node_id
                and self.start_time == other.start_time
                and self.timestamps == other.timestamps
                and self.useqs == other.useqs
                and self.packets == other.packets
                and self.gaps == other.gaps
                and self.anomalies == other.anomalies)


def write_session(log: SessionLog, path) -> None:
    """Persist the session; the same log always produces identical bytes."""
    with open(path, "wb") as fh:
        fh.write(_FILE_HEADER.pack(FILE_MAGIC, FILE_VERSION,
                                   log.node_id or 0, log.start_time,
                                   len(log.packets)))
        for ts, useq, pkt in zip(log.timestamps, log.useqs, log.packets):
            raw = encode_packet(pkt.node_id, pkt.seq, pkt.ch0, pkt.ch1,
                                flags=pkt.flags)
            fh.write(_RECORD_HEADER.pack(ts, useq, len(raw)))
            fh.write(raw)
        fh.write(_GAP_MAGIC)
        fh.write(struct.pack("<I", len(log.gaps)))
        for a, b in log.gaps:
            fh.write(_GAP_ENTRY.pack(a, b))
        fh.write(struct.pack("<I", len(log.anomalies)))
        for text in log.anomalies:
            blob = text.encode("utf-8")
            fh.write(struct.pack("<H", len(blob)))
            fh.write(blob)
        fh.write(_END_MAGIC)


def read_session(path) -> SessionLog:
    with open(path, "rb") as fh:
        data = fh.read()
    try:
        magic, version, node_id, start_time, n_records = _FILE_HEADER.unpack_from(data)
    except struct.error as exc:
        raise FramingError(f"{path}: truncated session header") from exc
    if magic != FILE_MAGIC:
        raise FramingError(f"{path}: bad session magic {magic!r}")
    if version != FILE_VERSION:
        raise FramingError(f"{path}: unsupported session version {version}")
    log = SessionLog(node_id=node_id if n_records else None,
                     start_time=start_time)
    offset = _FILE_HEADER.size
    for _ in range(n_records):
        ts, useq, size = _RECORD_HEADER.unpack_from(data, offset)
        offset += _RECORD_HEADER.size
        pkt = decode_packet(data[offset:offset + size])
        offset += size
        log.timestamps.append(ts)
        log.useqs.append(useq)
        log.packets.append(pkt)
    if data[offset:offset + 4] != _GAP_MAGIC:
        raise FramingError(f"{path}: missing gap index")
    offset += 4
    (n_gaps,) = struct.unpack_from("<I", data, offset)
    offset += 4
    for _ in range(n_gaps):
        a, b = _GAP_ENTRY.unpack_from(data, offset)
        offset += _GAP_ENTRY.size
        log.gaps.append((a, b))
    (n_anom,) = struct.unpack_from("<I", data, offset)
    offset += 4
    for _ in range(n_anom):
        (size,) = struct.unpack_from("<H", data, offset)
        offset += 2
        log.anomalies.append(data[offset:offset + size].decode("utf-8"))
        offset += size
    if data[offset:offset + 4] != _END_MAGIC:
        raise FramingError(f"{path}: missing end marker")
    if log.node_id is None and n_records == 0:
        log.node_id = node_id
    return log


def replay_channels(log: SessionLog, fs: float = 1000.0
                    ) -> tuple[WaveformBuffer, WaveformBuffer]:
    """Reassemble the two channel streams in volts.

    Missing packets are replayed as NaN blocks so gap positions stay
    explicit in the timeline.
    """
    if not log.packets:
        raise FramingError("session contains no packets")
    first, last = log.useqs[0], log.useqs[-1]
    total = (last - first + 1) * SAMPLES_PER_CHANNEL
    ch0 = np.full(total, np.nan)
    ch1 = np.full(total, np.nan)
    for useq, pkt in zip(log.useqs, log.packets):
        base = (useq - first) * SAMPLES_PER_CHANNEL
        ch0[base:base + SAMPLES_PER_CHANNEL] = pkt.ch0 * LSB_VOLTS
        ch1[base:base + SAMPLES_PER_CHANNEL] = pkt.ch1 * LSB_VOLTS
    return (WaveformBuffer(ch0, fs, 0.0, "ch0", allow_gaps=True),
            WaveformBuffer(ch1, fs, 0.0, "ch1", allow_gaps=True))
