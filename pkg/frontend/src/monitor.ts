/**
 * Live UDP monitor: binds a port, assembles incoming packets, prints a
 * per-frame line (100 samples per frame), and exits after an idle
 * timeout, optionally reporting session totals.
 *
 * Usage: node dist/monitor.js --port 9750 [--idle-ms 2000]
 */

import { createSocket } from "node:dgram";

import { LSB_VOLTS, SAMPLES_PER_CHANNEL } from "./packet.js";
import { SessionAssembler } from "./receiver.js";
import { missingPackets } from "./session.js";

function arg(name: string, fallback: string): string {
  const idx = process.argv.indexOf(`--${name}`);
  return idx >= 0 && idx + 1 < process.argv.length ? process.argv[idx + 1] : fallback;
}

function rms(counts: Int16Array): number {
  let acc = 0;
  for (const c of counts) acc += c * c;
  return Math.sqrt(acc / counts.length) * LSB_VOLTS;
}

export function main(): void {
  const port = Number(arg("port", "9750"));
  const idleMs = Number(arg("idle-ms", "2000"));
  const assembler = new SessionAssembler();
  const socket = createSocket("udp4");
  let timer: NodeJS.Timeout | undefined;

  const finish = () => {
    socket.close();
    const log = assembler.finish();
    console.log(
      `session: ${log.packets.length} packets, ${missingPackets(log)} missing, ` +
        `${log.anomalies.length} anomalies`,
    );
  };
  const rearm = () => {
    if (timer) clearTimeout(timer);
    timer = setTimeout(finish, idleMs);
  };

  socket.on("message", (msg: Buffer) => {
    assembler.push(new Uint8Array(msg));
    const pkts = assembler.log.packets;
    if (pkts.length > 0) {
      const pkt = pkts[pkts.length - 1];
      console.log(
        `node ${pkt.nodeId} seq ${pkt.seq}: ${SAMPLES_PER_CHANNEL} samples/ch, ` +
          `ch0 rms ${(rms(pkt.ch0) * 1e3).toFixed(2)} mV, ` +
          `ch1 rms ${(rms(pkt.ch1) * 1e3).toFixed(2)} mV`,
      );
    }
    rearm();
  });
  socket.bind(port, () => {
    console.log(`listening on udp://0.0.0.0:${port}`);
    rearm();
  });
}

main();
