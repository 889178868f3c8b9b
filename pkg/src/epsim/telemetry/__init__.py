"""Sensor-node to base-station telemetry: wire codec, streaming node,
receiving base endpoint, and session persistence."""

from .codec import (LSB_VOLTS, PACKET_BYTES, SAMPLES_PER_CHANNEL,
                    FramingError, IntegrityError, TelemetryError,
                    TelemetryPacket, VersionError, crc16_ccitt_false,
                    decode_packet, encode_packet, iter_packets)
from .stream import (InMemoryTransport, SessionError, UdpTransport,
                     base_receive, node_stream)
from .session import SessionLog, read_session, replay_channels, write_session

__all__ = [
    "LSB_VOLTS", "PACKET_BYTES", "SAMPLES_PER_CHANNEL",
    "TelemetryError", "FramingError", "IntegrityError", "VersionError",
    "TelemetryPacket", "crc16_ccitt_false", "decode_packet", "encode_packet",
    "iter_packets", "InMemoryTransport", "UdpTransport", "SessionError",
    "node_stream", "base_receive", "SessionLog", "read_session",
    "replay_channels", "write_session",
]
