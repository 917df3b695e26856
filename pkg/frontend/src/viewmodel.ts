import { ObservationPacket, schemaMismatch } from "./protocol.js";

// All display state is derived from the latest server packet; the UI
// never mutates trial state locally.

export interface QualityBadge {
  objectId: number;
  isOoi: boolean;
  isTarget: boolean;
  qGrasp: string; // formatted value or "infeasible"
  qPush: string;
}

export interface ViewModel {
  banner: string | null; // blocking banner text (schema mismatch / outcome)
  inputEnabled: boolean;
  budgetUsed: number;
  budgetCap: number;
  ranking: QualityBadge[];
  lastSummary: string | null;
}

export function formatQuality(q: number | null): string {
  if (q === null) return "–";
  if (q === -1) return "infeasible";
  return q.toFixed(2);
}

const OUTCOME_BANNERS: Record<string, string> = {
  success: "Target extracted — session over",
  target_lost: "Target lost — session over",
  cap_exceeded: "Action budget exhausted — session over",
};

export function buildViewModel(pkt: ObservationPacket): ViewModel {
  if (schemaMismatch(pkt)) {
    return {
      banner: `Protocol mismatch: server speaks ${pkt.schema}`,
      inputEnabled: false,
      budgetUsed: pkt.action_count,
      budgetCap: pkt.action_cap,
      ranking: [],
      lastSummary: null,
    };
  }
  const terminal = pkt.status !== "running";
  const ranking: QualityBadge[] = pkt.ranking.map((oid) => ({
    objectId: oid,
    isOoi: oid === pkt.ooi_id,
    isTarget: oid === pkt.target_id,
    qGrasp: oid === pkt.ooi_id ? formatQuality(pkt.q_grasp) : "",
    qPush: oid === pkt.ooi_id ? formatQuality(pkt.q_push) : "",
  }));
  let lastSummary: string | null = null;
  if (pkt.last) {
    const conv =
      pkt.last.executed === pkt.last.requested
        ? pkt.last.executed
        : `${pkt.last.requested} → ${pkt.last.executed} (infeasible)`;
    lastSummary = `${conv}: reward ${pkt.last.reward}` +
      (pkt.last.charged ? "" : " (uncharged)");
  }
  return {
    banner: terminal ? OUTCOME_BANNERS[pkt.status] : null,
    inputEnabled: !terminal,
    budgetUsed: pkt.action_count,
    budgetCap: pkt.action_cap,
    ranking,
    lastSummary,
  };
}
