"""Streaming node and receiving base endpoint.

The node frames two 1 kS/s channels into 100-sample packets (one per
100 ms of signal time) and pushes them through a transport; the base
timestamps arrivals, reorders within a bounded window, detects gaps,
and records every anomaly without dying.
"""

from __future__ import annotations

import socket
import time
from collections import deque

from ..errors import ContractError
from ..waveform import WaveformBuffer
from .codec import (SAMPLES_PER_CHANNEL, SEQ_MODULUS, FramingError,
                    IntegrityError, TelemetryError, TelemetryPacket,
                    VersionError, decode_packet, encode_packet)
from .session import SessionLog

NODE_SAMPLE_RATE = 1000.0
PACKET_PERIOD_S = SAMPLES_PER_CHANNEL / NODE_SAMPLE_RATE
REORDER_WINDOW = 16


class SessionError(TelemetryError):
    """Unrecoverable transport failure during a streaming session."""


class InMemoryTransport:
    """Loss-less FIFO transport for tests and loopback runs."""

    def __init__(self):
        self._queue: deque[bytes] = deque()
        self.closed = False

    def send(self, data: bytes) -> None:
        self._queue.append(bytes(data))

    def recv(self, timeout: float | None = None) -> bytes | None:
        if self._queue:
            return self._queue.popleft()
        return None

    def close(self) -> None:
        self.closed = True


class UdpTransport:
    """One packet per datagram over UDP."""

    def __init__(self, endpoint: tuple[str, int], *, bind: bool = False):
        self.endpoint = endpoint
        self.sock = socket.socket(socket.AF_INET, socket.SOCK_DGRAM)
        if bind:
            self.sock.bind(endpoint)

    def send(self, data: bytes) -> None:
        self.sock.sendto(data, self.endpoint)

    def recv(self, timeout: float | None = None) -> bytes | None:
        self.sock.settimeout(timeout)
        try:
            data, _ = self.sock.recvfrom(65536)
            return data
        except socket.timeout:
            return None

    def close(self) -> None:
        self.sock.close()


def node_stream(ch0: WaveformBuffer, ch1: WaveformBuffer, transport, *,
                node_id: int = 1, start_seq: int = 0, pace: str = "accelerated",
                max_retries: int = 3, backoff_s: float = 0.05) -> int:
    """Frame the two channels and push packets through the transport.

    Emits one packet per 100 ms of signal time (trailing partial blocks
    are dropped); ``seq`` increments by one per packet and wraps at 2^32.
    ``pace`` is ``"realtime"`` (sleep to the packet schedule) or
    ``"accelerated"`` (send as fast as possible); packet bytes are
    identical either way.  Returns the number of packets sent.

    Raises SessionError after ``max_retries`` failed sends of one packet.
    """
    if ch0.fs != NODE_SAMPLE_RATE or ch1.fs != NODE_SAMPLE_RATE:
        raise ContractError("node channels must be sampled at 1 kS/s")
    if len(ch0) != len(ch1):
        raise ContractError("channels must have equal length")
    if pace not in ("realtime", "accelerated"):
        raise ContractError(f"unknown pace {pace!r}")

    n_packets = len(ch0) // SAMPLES_PER_CHANNEL
    t_start = time.monotonic()
    for k in range(n_packets):
        sl = slice(k * SAMPLES_PER_CHANNEL, (k + 1) * SAMPLES_PER_CHANNEL)
        data = encode_packet(node_id, (start_seq + k) % SEQ_MODULUS,
                             ch0.samples[sl], ch1.samples[sl])
        if pace == "realtime":
            target = t_start + k * PACKET_PERIOD_S
            delay = target - time.monotonic()
            if delay > 0:
                time.sleep(delay)
        for attempt in range(max_retries + 1):
            try:
                transport.send(data)
                break
            except OSError as exc:
                if attempt == max_retries:
                    raise SessionError(
                        f"transport failed after {max_retries} retries: {exc}"
                    ) from exc
                time.sleep(backoff_s * (2 ** attempt))
    return n_packets


def _unwrap(seq: int, last_unwrapped: int) -> int:
    """Unwrapped sequence number closest to the previous one."""
    base = last_unwrapped - (last_unwrapped % SEQ_MODULUS)
    candidates = (base + seq - SEQ_MODULUS, base + seq, base + seq + SEQ_MODULUS)
    return min((c for c in candidates if c >= 0),
               key=lambda c: abs(c - last_unwrapped))


def base_receive(transport, *, idle_timeout: float = 0.5,
                 expect_packets: int | None = None,
                 reorder_window: int = REORDER_WINDOW,
                 clock=time.monotonic) -> SessionLog:
    """Receive, timestamp, reorder, and gap-check a packet stream.

    Packets are reordered within a ``reorder_window``-packet buffer;
    packets older than the emitted front are dropped and logged.  Gap
    ranges use unwrapped sequence arithmetic, so 32-bit wraparound is
    handled.  Reception stops after ``idle_timeout`` with no traffic or
    once ``expect_packets`` packets have been emitted.
    """
    log = SessionLog()
    pending: dict[int, tuple[float, TelemetryPacket]] = {}
    next_expected: int | None = None
    last_unwrapped = 0
    received = 0

    def emit(useq: int, ts: float, pkt: TelemetryPacket) -> None:
        log.append(useq, ts, pkt)

    def flush_through(limit: int | None = None) -> None:
        nonlocal next_expected
        while pending:
            lowest = min(pending)
            if limit is not None and lowest > limit:
                break
            if next_expected is not None and lowest > next_expected:
                log.record_gap(next_expected, lowest - 1)
            ts, pkt = pending.pop(lowest)
            emit(lowest, ts, pkt)
            next_expected = lowest + 1

    while True:
        data = transport.recv(timeout=idle_timeout)
        if data is None:
            break
        ts = clock()
        try:
            pkt = decode_packet(data)
        except (FramingError, IntegrityError, VersionError) as exc:
            log.anomalies.append(f"{type(exc).__name__}: {exc}")
            continue
        if log.node_id is None:
            log.node_id = pkt.node_id
            last_unwrapped = pkt.seq
            next_expected = pkt.seq
        useq = _unwrap(pkt.seq, last_unwrapped)
        last_unwrapped = useq
        if next_expected is not None and useq < next_expected:
            log.anomalies.append(
                f"late packet seq={pkt.seq} dropped (window passed)")
            continue
        if useq in pending:
            log.anomalies.append(f"duplicate packet seq={pkt.seq} dropped")
            continue
        pending[useq] = (ts, pkt)
        received += 1
        # Emit every in-order run; spill the window when it overflows.
        while next_expected in pending:
            ts_e, pkt_e = pending.pop(next_expected)
            emit(next_expected, ts_e, pkt_e)
            next_expected += 1
        if len(pending) > reorder_window:
            flush_through(min(pending))
        if expect_packets is not None and len(log.packets) >= expect_packets:
            break
    flush_through()
    return log
