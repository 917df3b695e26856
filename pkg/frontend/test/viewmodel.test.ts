import { describe, expect, it } from "vitest";

import { ObservationPacket } from "../src/protocol.js";
import { buildViewModel, formatQuality } from "../src/viewmodel.js";
import { loadPacket } from "./stub-server.js";

function running(overrides: Partial<ObservationPacket> = {}): ObservationPacket {
  return { ...loadPacket("packet_running.json"), ...overrides };
}

describe("formatQuality", () => {
  it("shows a dash when no value is available", () => {
    expect(formatQuality(null)).toBe("–");
  });
  it("labels the infeasibility sentinel", () => {
    expect(formatQuality(-1)).toBe("infeasible");
  });
  it("formats ordinary values to two decimals", () => {
    expect(formatQuality(0.8351)).toBe("0.84");
    expect(formatQuality(0)).toBe("0.00");
  });
});

describe("buildViewModel", () => {
  it("enables input and shows no banner while running", () => {
    const vm = buildViewModel(running());
    expect(vm.banner).toBeNull();
    expect(vm.inputEnabled).toBe(true);
    expect(vm.budgetUsed).toBe(0);
    expect(vm.budgetCap).toBe(25);
  });

  it("attaches quality badges only to the object under consideration", () => {
    const pkt = running({ q_grasp: 0.9, q_push: -1 });
    const vm = buildViewModel(pkt);
    expect(vm.ranking.map((b) => b.objectId)).toEqual(pkt.ranking);
    for (const badge of vm.ranking) {
      if (badge.objectId === pkt.ooi_id) {
        expect(badge.isOoi).toBe(true);
        expect(badge.qGrasp).toBe("0.90");
        expect(badge.qPush).toBe("infeasible");
      } else {
        expect(badge.isOoi).toBe(false);
        expect(badge.qGrasp).toBe("");
        expect(badge.qPush).toBe("");
      }
    }
    expect(vm.ranking.filter((b) => b.isTarget).length).toBeLessThanOrEqual(1);
  });

  it("disables input and shows an outcome banner on terminal packets", () => {
    const vm = buildViewModel(loadPacket("packet_terminal.json"));
    expect(vm.inputEnabled).toBe(false);
    expect(vm.banner).toMatch(/Target extracted/);
    expect(vm.lastSummary).toBe("grasp: reward 20");
  });

  it("shows banners for the other terminal outcomes", () => {
    expect(buildViewModel(running({ status: "target_lost" })).banner).toMatch(
      /Target lost/,
    );
    expect(buildViewModel(running({ status: "cap_exceeded" })).banner).toMatch(
      /budget exhausted/,
    );
  });

  it("blocks all input on a protocol version mismatch", () => {
    const vm = buildViewModel(running({ schema: "mechsearch.protocol/9" }));
    expect(vm.inputEnabled).toBe(false);
    expect(vm.banner).toMatch(/Protocol mismatch/);
    expect(vm.ranking).toEqual([]);
  });

  it("spells out infeasible-selected conversions in the last summary", () => {
    const vm = buildViewModel(
      running({
        last: {
          executed: "skip",
          requested: "push",
          outcome: "infeasible_selected",
          reward: -10,
          charged: true,
        },
      }),
    );
    expect(vm.lastSummary).toBe("push → skip (infeasible): reward -10");
  });

  it("marks uncharged skips", () => {
    const vm = buildViewModel(
      running({
        last: {
          executed: "skip",
          requested: "skip",
          outcome: "other",
          reward: -1,
          charged: false,
        },
      }),
    );
    expect(vm.lastSummary).toBe("skip: reward -1 (uncharged)");
  });
});
