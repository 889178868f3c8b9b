/**
 * Wire codec for the two-channel sample packets.
 *
 * Layout (little-endian multi-byte fields):
 *   0   2  magic 0xE5 0x05
 *   2   1  version (1)
 *   3   2  node_id u16
 *   5   4  seq u32
 *   9   1  channel_count (2)
 *   10  1  samples_per_channel (100)
 *   11  1  flags (bit 0: saturated on encode)
 *   12 400 payload: per sample ch0[i], ch1[i] as int16, 1 LSB = 100 uV
 *  412   2 CRC-16/CCITT-FALSE over bytes 0..411, big-endian
 */

import { crc16CcittFalse } from "./crc16.js";

export const MAGIC0 = 0xe5;
export const MAGIC1 = 0x05;
export const VERSION = 1;
export const CHANNEL_COUNT = 2;
export const SAMPLES_PER_CHANNEL = 100;
export const HEADER_BYTES = 12;
export const PACKET_BYTES = HEADER_BYTES + 2 * CHANNEL_COUNT * SAMPLES_PER_CHANNEL + 2;
export const LSB_VOLTS = 100e-6;
export const SEQ_MODULUS = 2 ** 32;

export class TelemetryError extends Error {}
/** Bad magic, impossible length, or truncated buffer. */
export class FramingError extends TelemetryError {}
/** CRC mismatch. */
export class IntegrityError extends TelemetryError {}
/** Valid frame with an unsupported version byte. */
export class VersionError extends TelemetryError {}

export interface TelemetryPacket {
  nodeId: number;
  seq: number;
  version: number;
  flags: number;
  /** Raw signed 16-bit counts, 100 per channel. */
  ch0: Int16Array;
  ch1: Int16Array;
}

export function countsToVolts(counts: Int16Array): Float64Array {
  const out = new Float64Array(counts.length);
  for (let i = 0; i < counts.length; i++) out[i] = counts[i] * LSB_VOLTS;
  return out;
}

export function decodePacket(buf: Uint8Array): TelemetryPacket {
  if (buf.length < HEADER_BYTES + 2) {
    throw new FramingError(`buffer of ${buf.length} bytes is shorter than a header`);
  }
  if (buf[0] !== MAGIC0 || buf[1] !== MAGIC1) {
    throw new FramingError(`bad magic 0x${buf[0].toString(16)}${buf[1].toString(16)}`);
  }
  const view = new DataView(buf.buffer, buf.byteOffset, buf.byteLength);
  const version = view.getUint8(2);
  const nodeId = view.getUint16(3, true);
  const seq = view.getUint32(5, true);
  const channels = view.getUint8(9);
  const spc = view.getUint8(10);
  const flags = view.getUint8(11);
  const expected = HEADER_BYTES + 2 * channels * spc + 2;
  if (buf.length !== expected) {
    throw new FramingError(`length ${buf.length} does not match declared geometry (${expected})`);
  }
  const stated = view.getUint16(buf.length - 2, false);
  const actual = crc16CcittFalse(buf.subarray(0, buf.length - 2));
  if (stated !== actual) {
    throw new IntegrityError(
      `CRC mismatch: stated 0x${stated.toString(16)}, actual 0x${actual.toString(16)}`,
    );
  }
  if (version !== VERSION) {
    throw new VersionError(`unsupported version ${version}`);
  }
  if (channels !== CHANNEL_COUNT || spc !== SAMPLES_PER_CHANNEL) {
    throw new FramingError(`unexpected geometry: ${channels} channels x ${spc} samples`);
  }
  const ch0 = new Int16Array(spc);
  const ch1 = new Int16Array(spc);
  for (let i = 0; i < spc; i++) {
    ch0[i] = view.getInt16(HEADER_BYTES + 4 * i, true);
    ch1[i] = view.getInt16(HEADER_BYTES + 4 * i + 2, true);
  }
  return { nodeId, seq, version, flags, ch0, ch1 };
}

export function encodePacket(
  nodeId: number,
  seq: number,
  ch0: Int16Array,
  ch1: Int16Array,
  flags = 0,
): Uint8Array {
  if (ch0.length !== SAMPLES_PER_CHANNEL || ch1.length !== SAMPLES_PER_CHANNEL) {
    throw new RangeError(`each channel must carry exactly ${SAMPLES_PER_CHANNEL} samples`);
  }
  const buf = new Uint8Array(PACKET_BYTES);
  const view = new DataView(buf.buffer);
  buf[0] = MAGIC0;
  buf[1] = MAGIC1;
  view.setUint8(2, VERSION);
  view.setUint16(3, nodeId & 0xffff, true);
  view.setUint32(5, seq >>> 0, true);
  view.setUint8(9, CHANNEL_COUNT);
  view.setUint8(10, SAMPLES_PER_CHANNEL);
  view.setUint8(11, flags & 0xff);
  for (let i = 0; i < SAMPLES_PER_CHANNEL; i++) {
    view.setInt16(HEADER_BYTES + 4 * i, ch0[i], true);
    view.setInt16(HEADER_BYTES + 4 * i + 2, ch1[i], true);
  }
  const crc = crc16CcittFalse(buf.subarray(0, PACKET_BYTES - 2));
  view.setUint16(PACKET_BYTES - 2, crc, false);
  return buf;
}
