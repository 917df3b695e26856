import { describe, expect, it } from "vitest";

import { SessionClient } from "../src/client.js";
import { ObservationPacket } from "../src/protocol.js";
import { loadPacket, StubServer } from "./stub-server.js";

function makeClient(server: StubServer) {
  const packets: ObservationPacket[] = [];
  const errors: string[] = [];
  const client = new SessionClient(
    (p) => packets.push(p),
    (m) => errors.push(m),
  );
  server.onReply = (raw) => client.receive(raw);
  client.attach(server.connection());
  return { client, packets, errors };
}

describe("SessionClient", () => {
  it("refuses to submit before a connection is attached", () => {
    const client = new SessionClient(
      () => undefined,
      () => undefined,
    );
    expect(client.submit({ type: "skip" })).toBe(false);
  });

  it("allows one action in flight and unlocks on the reply", () => {
    const server = new StubServer();
    server.onReply = null; // hold replies back
    const { client } = makeClient(server);
    server.onReply = null;

    expect(client.submit({ type: "skip" })).toBe(true);
    expect(client.inFlight).toBe(true);
    // second submit while waiting is refused and nothing hits the wire
    expect(client.submit({ type: "skip" })).toBe(false);
    expect(server.received).toHaveLength(1);

    // reply arrives -> unlocked
    client.receive(JSON.stringify(server.packet));
    expect(client.inFlight).toBe(false);
    expect(client.submit({ type: "skip" })).toBe(true);
  });

  it("unlocks after a server error without losing the session", () => {
    const server = new StubServer();
    const { client, errors } = makeClient(server);
    client.receive(JSON.stringify(server.packet));

    server.onReply = null;
    expect(client.submit({ type: "grasp", object_id: 999 })).toBe(true);
    client.receive(JSON.stringify({ error: "unknown object 999" }));
    expect(errors).toContain("unknown object 999");
    expect(client.inFlight).toBe(false);
    expect(client.submit({ type: "skip" })).toBe(true);
  });

  it("refuses off-protocol actions before they reach the wire", () => {
    const server = new StubServer();
    const { client, errors } = makeClient(server);
    const bad = { type: "push", u: 1.5, v: 2, alpha_deg: 0, phi_deg: 90 };
    expect(client.submit(bad as never)).toBe(false);
    expect(server.received).toHaveLength(0);
    expect(errors[0]).toMatch(/off-protocol/);
  });

  it("refuses actions once the session is terminal", () => {
    const server = new StubServer(loadPacket("packet_terminal.json"));
    const { client } = makeClient(server);
    client.receive(JSON.stringify(server.packet));
    expect(client.submit({ type: "skip" })).toBe(false);
    expect(server.received).toHaveLength(0);
  });

  it("surfaces unparseable and malformed server messages", () => {
    const server = new StubServer();
    const { client, errors } = makeClient(server);
    client.receive("{nope");
    client.receive(JSON.stringify({ schema: "x" }));
    expect(errors[0]).toMatch(/unparseable/);
    expect(errors[1]).toMatch(/bad packet/);
  });

  it("plays a scripted session against the stub to the action cap", () => {
    const base = loadPacket("packet_running.json");
    base.action_cap = 3;
    const server = new StubServer(base);
    const { client, packets } = makeClient(server);
    client.receive(JSON.stringify(server.packet));

    const ooi = base.ooi_id!;
    const actions = [
      { type: "push", u: 320, v: 240, alpha_deg: 0, phi_deg: 90 },
      { type: "skip" },
      { type: "grasp", object_id: ooi },
      { type: "grasp", object_id: ooi },
    ] as const;
    for (const a of actions) {
      expect(client.submit(a as never)).toBe(true);
    }
    // skips are uncharged, so the third charged action exhausts the cap
    const lastPkt = packets[packets.length - 1];
    expect(lastPkt.action_count).toBe(3);
    expect(lastPkt.status).toBe("cap_exceeded");
    // terminal: nothing further reaches the wire
    expect(client.submit({ type: "skip" })).toBe(false);
    expect(server.received).toHaveLength(actions.length);
  });
});
