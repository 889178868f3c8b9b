export { crc16CcittFalse } from "./crc16.js";
export {
  CHANNEL_COUNT,
  FramingError,
  HEADER_BYTES,
  IntegrityError,
  LSB_VOLTS,
  PACKET_BYTES,
  SAMPLES_PER_CHANNEL,
  SEQ_MODULUS,
  TelemetryError,
  VERSION,
  VersionError,
  countsToVolts,
  decodePacket,
  encodePacket,
} from "./packet.js";
export type { TelemetryPacket } from "./packet.js";
export { missingPackets, readSession, replayChannels } from "./session.js";
export type { ReplayedChannels, SessionLog } from "./session.js";
export { REORDER_WINDOW, SessionAssembler } from "./receiver.js";
