import { readFileSync } from "node:fs";
import { describe, expect, it } from "vitest";

import { FramingError, LSB_VOLTS } from "../src/packet.js";
import { missingPackets, readSession, replayChannels } from "../src/session.js";

const FIXTURE = new Uint8Array(readFileSync(new URL("../fixtures/session.bin", import.meta.url)));
const EXPECTED = JSON.parse(
  readFileSync(new URL("../fixtures/expected.json", import.meta.url), "utf-8"),
);

describe("readSession on the simulator-produced fixture", () => {
  it("reads header, packets, timestamps, and the wrapped gap", () => {
    const log = readSession(FIXTURE);
    expect(log.nodeId).toBe(EXPECTED.session.node_id);
    expect(log.packets.length).toBe(EXPECTED.session.packets);
    expect(log.packets.map((p) => p.seq)).toEqual(EXPECTED.session.seqs);
    expect(log.startTime).toBeCloseTo(EXPECTED.session.start_time, 9);
    expect(log.timestamps.slice(0, 2)).toEqual(EXPECTED.session.timestamps_first2);
    const first = log.useqs[0];
    const rel = log.gaps.map(([a, b]) => [a - first, b - first]);
    expect(rel).toEqual(EXPECTED.session.gaps);
    expect(missingPackets(log)).toBe(1);
    expect(Array.from(log.packets[0].ch0.slice(0, 4))).toEqual(
      EXPECTED.session.first_ch0_counts,
    );
  });

  it("replays gaps as NaN sample ranges", () => {
    const log = readSession(FIXTURE);
    const { ch0, ch1 } = replayChannels(log);
    expect(ch0.length).toBe(600);
    const gapStart = EXPECTED.session.gaps[0][0] * 100;
    for (let i = gapStart; i < gapStart + 100; i++) {
      expect(Number.isNaN(ch0[i])).toBe(true);
      expect(Number.isNaN(ch1[i])).toBe(true);
    }
    for (let i = 0; i < gapStart; i++) {
      expect(Number.isNaN(ch0[i])).toBe(false);
    }
    // volts are counts * 100 uV
    expect(ch0[0]).toBeCloseTo(EXPECTED.session.first_ch0_counts[0] * LSB_VOLTS, 12);
  });

  it("rejects corrupted session bytes", () => {
    const bad = Uint8Array.from(FIXTURE);
    bad[0] ^= 0xff;
    expect(() => readSession(bad)).toThrow(FramingError);
    expect(() => readSession(FIXTURE.subarray(0, 40))).toThrow(FramingError);
  });
});
