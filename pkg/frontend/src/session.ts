/**
 * Session-file reader and gap-aware replay.
 *
 * File layout: "EPSS" + u8 version + u16 node_id + f64 start_ts +
 * u32 n_records, then per record f64 timestamp + u64 unwrapped seq +
 * u16 length + packet bytes, then "GAPS" + u32 count + (u64,u64) pairs,
 * u32 anomaly count + length-prefixed UTF-8 strings, and "ENDS".
 */

import { FramingError, SAMPLES_PER_CHANNEL, LSB_VOLTS, decodePacket } from "./packet.js";
import type { TelemetryPacket } from "./packet.js";

export const FILE_VERSION = 1;
const FILE_MAGIC = "EPSS";
const GAP_MAGIC = "GAPS";
const END_MAGIC = "ENDS";

export interface SessionLog {
  nodeId: number;
  startTime: number;
  timestamps: number[];
  useqs: number[];
  packets: TelemetryPacket[];
  /** Inclusive unwrapped-sequence ranges of packets that never arrived. */
  gaps: Array<[number, number]>;
  anomalies: string[];
}

function ascii(buf: Uint8Array, offset: number, length: number): string {
  return String.fromCharCode(...buf.subarray(offset, offset + length));
}

export function readSession(data: Uint8Array): SessionLog {
  const view = new DataView(data.buffer, data.byteOffset, data.byteLength);
  if (data.length < 19 || ascii(data, 0, 4) !== FILE_MAGIC) {
    throw new FramingError("bad session magic");
  }
  const version = view.getUint8(4);
  if (version !== FILE_VERSION) {
    throw new FramingError(`unsupported session version ${version}`);
  }
  const nodeId = view.getUint16(5, true);
  const startTime = view.getFloat64(7, true);
  const nRecords = view.getUint32(15, true);
  let offset = 19;

  const log: SessionLog = {
    nodeId,
    startTime,
    timestamps: [],
    useqs: [],
    packets: [],
    gaps: [],
    anomalies: [],
  };
  for (let i = 0; i < nRecords; i++) {
    if (offset + 18 > data.length) throw new FramingError("truncated record header");
    const ts = view.getFloat64(offset, true);
    const useq = Number(view.getBigUint64(offset + 8, true));
    const size = view.getUint16(offset + 16, true);
    offset += 18;
    if (offset + size > data.length) throw new FramingError("truncated record body");
    log.timestamps.push(ts);
    log.useqs.push(useq);
    log.packets.push(decodePacket(data.subarray(offset, offset + size)));
    offset += size;
  }
  if (ascii(data, offset, 4) !== GAP_MAGIC) throw new FramingError("missing gap index");
  offset += 4;
  const nGaps = view.getUint32(offset, true);
  offset += 4;
  for (let i = 0; i < nGaps; i++) {
    const a = Number(view.getBigUint64(offset, true));
    const b = Number(view.getBigUint64(offset + 8, true));
    log.gaps.push([a, b]);
    offset += 16;
  }
  const nAnomalies = view.getUint32(offset, true);
  offset += 4;
  for (let i = 0; i < nAnomalies; i++) {
    const size = view.getUint16(offset, true);
    offset += 2;
    log.anomalies.push(new TextDecoder().decode(data.subarray(offset, offset + size)));
    offset += size;
  }
  if (ascii(data, offset, 4) !== END_MAGIC) throw new FramingError("missing end marker");
  return log;
}

export interface ReplayedChannels {
  /** Volts; NaN marks samples lost to packet gaps. */
  ch0: Float64Array;
  ch1: Float64Array;
  sampleRate: number;
}

export function replayChannels(log: SessionLog, sampleRate = 1000): ReplayedChannels {
  if (log.packets.length === 0) {
    throw new FramingError("session contains no packets");
  }
  const first = log.useqs[0];
  const last = log.useqs[log.useqs.length - 1];
  const total = (last - first + 1) * SAMPLES_PER_CHANNEL;
  const ch0 = new Float64Array(total).fill(Number.NaN);
  const ch1 = new Float64Array(total).fill(Number.NaN);
  for (let k = 0; k < log.packets.length; k++) {
    const base = (log.useqs[k] - first) * SAMPLES_PER_CHANNEL;
    const pkt = log.packets[k];
    for (let i = 0; i < SAMPLES_PER_CHANNEL; i++) {
      ch0[base + i] = pkt.ch0[i] * LSB_VOLTS;
      ch1[base + i] = pkt.ch1[i] * LSB_VOLTS;
    }
  }
  return { ch0, ch1, sampleRate };
}

/** Count of packets recorded as missing in the gap index. */
export function missingPackets(log: SessionLog): number {
  return log.gaps.reduce((acc, [a, b]) => acc + (b - a + 1), 0);
}
