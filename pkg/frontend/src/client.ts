import {
  Action,
  ObservationPacket,
  parsePacket,
  validateAction,
} from "./protocol.js";

/** Transport seam: the live app uses a WebSocket, tests use a stub. */
export interface Connection {
  send(msg: string): void;
  close(): void;
}

export type PacketHandler = (pkt: ObservationPacket) => void;
export type ErrorHandler = (msg: string) => void;

/**
 * One in-flight action at a time: submit() refuses while waiting for the
 * next packet, so the UI cannot race the server.
 */
export class SessionClient {
  private conn: Connection | null = null;
  packet: ObservationPacket | null = null;
  inFlight = false;

  constructor(
    private onPacket: PacketHandler,
    private onError: ErrorHandler,
  ) {}

  attach(conn: Connection): void {
    this.conn = conn;
  }

  /** Feed a raw server message (WS onmessage or stub response). */
  receive(raw: string): void {
    let data: unknown;
    try {
      data = JSON.parse(raw);
    } catch {
      this.onError("unparseable server message");
      return;
    }
    const maybeError = data as { error?: string };
    if (maybeError && typeof maybeError.error === "string") {
      this.inFlight = false;
      this.onError(maybeError.error);
      return;
    }
    try {
      this.packet = parsePacket(data);
    } catch (e) {
      this.onError(`bad packet: ${e}`);
      return;
    }
    this.inFlight = false;
    this.onPacket(this.packet);
  }

  /** Validate against the wire schema, then send. Returns false if refused. */
  submit(action: Action): boolean {
    if (!this.conn || this.inFlight) return false;
    if (this.packet && this.packet.status !== "running") return false;
    let checked: Action;
    try {
      checked = validateAction(action);
    } catch (e) {
      this.onError(`refusing off-protocol action: ${e}`);
      return false;
    }
    this.inFlight = true;
    this.conn.send(JSON.stringify(checked));
    return true;
  }
}
