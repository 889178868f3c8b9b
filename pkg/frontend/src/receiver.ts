/**
 * Base-station packet assembly: timestamping, bounded reordering, gap
 * detection with 32-bit sequence wraparound, anomaly logging.
 */

import {
  FramingError,
  IntegrityError,
  SEQ_MODULUS,
  VersionError,
  decodePacket,
} from "./packet.js";
import type { TelemetryPacket } from "./packet.js";
import type { SessionLog } from "./session.js";

export const REORDER_WINDOW = 16;

export class SessionAssembler {
  readonly log: SessionLog = {
    nodeId: -1,
    startTime: 0,
    timestamps: [],
    useqs: [],
    packets: [],
    gaps: [],
    anomalies: [],
  };

  private pending = new Map<number, { ts: number; pkt: TelemetryPacket }>();
  private nextExpected: number | null = null;
  private lastUnwrapped = 0;

  constructor(
    private readonly reorderWindow = REORDER_WINDOW,
    private readonly clock: () => number = () => Date.now() / 1000,
  ) {}

  /** Feed one datagram; malformed input is logged, never thrown. */
  push(datagram: Uint8Array): void {
    const ts = this.clock();
    let pkt: TelemetryPacket;
    try {
      pkt = decodePacket(datagram);
    } catch (err) {
      if (
        err instanceof FramingError ||
        err instanceof IntegrityError ||
        err instanceof VersionError
      ) {
        this.log.anomalies.push(`${err.constructor.name}: ${err.message}`);
        return;
      }
      throw err;
    }
    if (this.log.nodeId < 0) {
      this.log.nodeId = pkt.nodeId;
      this.lastUnwrapped = pkt.seq;
      this.nextExpected = pkt.seq;
    }
    const useq = this.unwrap(pkt.seq);
    this.lastUnwrapped = useq;
    if (this.nextExpected !== null && useq < this.nextExpected) {
      this.log.anomalies.push(`late packet seq=${pkt.seq} dropped (window passed)`);
      return;
    }
    if (this.pending.has(useq)) {
      this.log.anomalies.push(`duplicate packet seq=${pkt.seq} dropped`);
      return;
    }
    this.pending.set(useq, { ts, pkt });
    this.drainInOrder();
    if (this.pending.size > this.reorderWindow) {
      this.flushThrough(Math.min(...this.pending.keys()));
    }
  }

  /** Emit everything left in the window, recording gaps. */
  finish(): SessionLog {
    this.flushThrough(null);
    return this.log;
  }

  private unwrap(seq: number): number {
    const base = this.lastUnwrapped - (this.lastUnwrapped % SEQ_MODULUS);
    let best = base + seq;
    for (const cand of [base + seq - SEQ_MODULUS, base + seq + SEQ_MODULUS]) {
      if (cand >= 0 && Math.abs(cand - this.lastUnwrapped) < Math.abs(best - this.lastUnwrapped)) {
        best = cand;
      }
    }
    return best;
  }

  private emit(useq: number, ts: number, pkt: TelemetryPacket): void {
    if (this.log.timestamps.length === 0) {
      this.log.startTime = ts;
    } else if (ts < this.log.timestamps[this.log.timestamps.length - 1]) {
      ts = this.log.timestamps[this.log.timestamps.length - 1];
    }
    this.log.timestamps.push(ts);
    this.log.useqs.push(useq);
    this.log.packets.push(pkt);
  }

  private drainInOrder(): void {
    while (this.nextExpected !== null && this.pending.has(this.nextExpected)) {
      const { ts, pkt } = this.pending.get(this.nextExpected)!;
      this.pending.delete(this.nextExpected);
      this.emit(this.nextExpected, ts, pkt);
      this.nextExpected += 1;
    }
  }

  private flushThrough(limit: number | null): void {
    while (this.pending.size > 0) {
      const lowest = Math.min(...this.pending.keys());
      if (limit !== null && lowest > limit) break;
      if (this.nextExpected !== null && lowest > this.nextExpected) {
        this.log.gaps.push([this.nextExpected, lowest - 1]);
      }
      const { ts, pkt } = this.pending.get(lowest)!;
      this.pending.delete(lowest);
      this.emit(lowest, ts, pkt);
      this.nextExpected = lowest + 1;
      this.drainInOrder();
    }
  }
}
