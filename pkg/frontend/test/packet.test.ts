import { readFileSync } from "node:fs";
import { describe, expect, it } from "vitest";

import {
  FramingError,
  IntegrityError,
  PACKET_BYTES,
  TelemetryError,
  VersionError,
  decodePacket,
  encodePacket,
} from "../src/packet.js";
import { crc16CcittFalse } from "../src/crc16.js";

const FIXTURE = new Uint8Array(readFileSync(new URL("../fixtures/packet.bin", import.meta.url)));
const EXPECTED = JSON.parse(
  readFileSync(new URL("../fixtures/expected.json", import.meta.url), "utf-8"),
);

function ramp(): { ch0: Int16Array; ch1: Int16Array } {
  const ch0 = new Int16Array(100);
  const ch1 = new Int16Array(100);
  for (let i = 0; i < 100; i++) {
    ch0[i] = i - 50;
    ch1[i] = 3 * i - 150;
  }
  return { ch0, ch1 };
}

describe("decodePacket on the simulator-produced fixture", () => {
  it("decodes every header field and the payload", () => {
    const pkt = decodePacket(FIXTURE);
    expect(FIXTURE.length).toBe(EXPECTED.packet.length);
    expect(pkt.nodeId).toBe(EXPECTED.packet.node_id);
    expect(pkt.seq).toBe(EXPECTED.packet.seq);
    expect(Array.from(pkt.ch0.slice(0, 5))).toEqual(EXPECTED.packet.ch0_first5);
    expect(Array.from(pkt.ch1.slice(-5))).toEqual(EXPECTED.packet.ch1_last5);
  });

  it("agrees with the fixture CRC", () => {
    expect(crc16CcittFalse(FIXTURE.subarray(0, FIXTURE.length - 2))).toBe(EXPECTED.packet.crc);
  });
});

describe("encodePacket", () => {
  it("reproduces the simulator's bytes exactly", () => {
    const { ch0, ch1 } = ramp();
    const encoded = encodePacket(EXPECTED.packet.node_id, EXPECTED.packet.seq, ch0, ch1);
    expect(Array.from(encoded)).toEqual(Array.from(FIXTURE));
  });

  it("round-trips through decodePacket", () => {
    const ch0 = Int16Array.from({ length: 100 }, (_, i) => ((i * 977) % 60001) - 30000);
    const ch1 = Int16Array.from({ length: 100 }, (_, i) => ((i * 331) % 60001) - 30000);
    const pkt = decodePacket(encodePacket(9, 424242, ch0, ch1, 1));
    expect(pkt.nodeId).toBe(9);
    expect(pkt.seq).toBe(424242);
    expect(pkt.flags).toBe(1);
    expect(Array.from(pkt.ch0)).toEqual(Array.from(ch0));
    expect(Array.from(pkt.ch1)).toEqual(Array.from(ch1));
  });

  it("rejects wrong sample counts", () => {
    expect(() => encodePacket(1, 0, new Int16Array(99), new Int16Array(100))).toThrow(RangeError);
  });
});

describe("corruption handling", () => {
  it("detects every single-bit flip", () => {
    for (let byteIdx = 0; byteIdx < FIXTURE.length; byteIdx++) {
      for (let bit = 0; bit < 8; bit++) {
        const corrupted = Uint8Array.from(FIXTURE);
        corrupted[byteIdx] ^= 1 << bit;
        expect(() => decodePacket(corrupted)).toThrow(TelemetryError);
      }
    }
  });

  it("classifies truncation as framing", () => {
    for (const cut of [0, 5, 12, 200, PACKET_BYTES - 1]) {
      expect(() => decodePacket(FIXTURE.subarray(0, cut))).toThrow(FramingError);
    }
  });

  it("classifies a payload flip as integrity", () => {
    const corrupted = Uint8Array.from(FIXTURE);
    corrupted[100] ^= 0x10;
    expect(() => decodePacket(corrupted)).toThrow(IntegrityError);
  });

  it("classifies an unknown version with fixed-up CRC as version error", () => {
    const future = Uint8Array.from(FIXTURE);
    future[2] = 7;
    const crc = crc16CcittFalse(future.subarray(0, future.length - 2));
    new DataView(future.buffer).setUint16(future.length - 2, crc, false);
    expect(() => decodePacket(future)).toThrow(VersionError);
  });

  it("never crashes on random fuzz", () => {
    let state = 0x2f6e2b1 >>> 0;
    const rand = () => {
      state = (1103515245 * state + 12345) % 0x80000000;
      return state;
    };
    for (let trial = 0; trial < 500; trial++) {
      const n = rand() % 600;
      const blob = new Uint8Array(n);
      for (let i = 0; i < n; i++) blob[i] = rand() & 0xff;
      try {
        decodePacket(blob);
      } catch (err) {
        expect(err).toBeInstanceOf(TelemetryError);
      }
    }
  });
});
