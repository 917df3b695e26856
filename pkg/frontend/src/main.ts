import { SessionClient, Connection } from "./client.js";
import { decodeDepthPng } from "./depth.js";
import { clickToGrasp, DragGesture, dragToPush } from "./drag.js";
import { heatmapRgba } from "./heatmap.js";
import { ObservationPacket } from "./protocol.js";
import { buildViewModel } from "./viewmodel.js";

type Tool = "skip" | "grasp" | "push";

const $ = (id: string) => document.getElementById(id)!;

let tool: Tool = "push";
let drag: DragGesture | null = null;
let client: SessionClient;

function warn(msg: string): void {
  const el = $("warning");
  el.textContent = msg;
  el.classList.add("visible");
  setTimeout(() => el.classList.remove("visible"), 2500);
}

async function drawPacket(pkt: ObservationPacket): Promise<void> {
  const canvas = $("view") as HTMLCanvasElement;
  const [w, h] = pkt.image_size;
  canvas.width = w;
  canvas.height = h;
  const ctx = canvas.getContext("2d")!;
  const depth = await decodeDepthPng(pkt.depth_png);
  // copy into an ArrayBuffer-backed view: TS's ImageData signature rejects
  // the ArrayBufferLike-typed buffer returned by heatmapRgba
  const rgba = new Uint8ClampedArray(heatmapRgba(depth));
  ctx.putImageData(new ImageData(rgba, w, h), 0, 0);

  for (const [oid, poly] of Object.entries(pkt.outlines)) {
    const id = Number(oid);
    ctx.beginPath();
    poly.forEach(([u, v], i) => (i ? ctx.lineTo(u, v) : ctx.moveTo(u, v)));
    ctx.closePath();
    ctx.lineWidth = id === pkt.target_id ? 3 : 1.5;
    ctx.strokeStyle =
      id === pkt.target_id ? "#ff3860" : id === pkt.ooi_id ? "#ffdd57" : "#ffffff88";
    ctx.stroke();
  }
}

function renderSidebar(pkt: ObservationPacket): void {
  const vm = buildViewModel(pkt);
  const banner = $("banner");
  banner.textContent = vm.banner ?? "";
  banner.classList.toggle("visible", vm.banner !== null);
  ($("toolbar") as HTMLFieldSetElement).disabled = !vm.inputEnabled;

  const bar = $("budget-fill");
  bar.style.width = `${(100 * vm.budgetUsed) / vm.budgetCap}%`;
  $("budget-text").textContent = `${vm.budgetUsed} / ${vm.budgetCap} actions`;

  const list = $("ranking");
  list.innerHTML = "";
  for (const row of vm.ranking) {
    const li = document.createElement("li");
    li.className = row.isOoi ? "ooi" : "";
    const tags = [row.isTarget ? " [target]" : "", row.isOoi ? " ◀ OOI" : ""];
    li.textContent = `object ${row.objectId}${tags.join("")}`;
    if (row.isOoi) {
      const q = document.createElement("span");
      q.className = "quality";
      for (const [label, val] of [["grasp", row.qGrasp], ["push", row.qPush]]) {
        const badge = document.createElement("em");
        badge.className = val === "infeasible" ? "badge infeasible" : "badge";
        badge.textContent = `${label} ${val}`;
        q.appendChild(badge);
      }
      li.appendChild(q);
    }
    list.appendChild(li);
  }
  $("last").textContent = vm.lastSummary ?? "";
}

function canvasPos(e: MouseEvent): [number, number] {
  const canvas = $("view") as HTMLCanvasElement;
  const r = canvas.getBoundingClientRect();
  return [
    ((e.clientX - r.left) * canvas.width) / r.width,
    ((e.clientY - r.top) * canvas.height) / r.height,
  ];
}

function wireInput(): void {
  const canvas = $("view") as HTMLCanvasElement;
  for (const t of ["skip", "grasp", "push"] as Tool[]) {
    $(`tool-${t}`).addEventListener("click", () => {
      tool = t;
      document.querySelectorAll(".tool").forEach((b) =>
        b.classList.toggle("active", b.id === `tool-${t}`),
      );
      if (t === "skip" && !client.submit({ type: "skip" })) {
        warn("cannot skip right now");
      }
    });
  }

  canvas.addEventListener("mousedown", (e) => {
    if (tool === "push") drag = { start: canvasPos(e), end: canvasPos(e) };
  });
  canvas.addEventListener("mousemove", (e) => {
    if (drag) drag.end = canvasPos(e);
  });
  canvas.addEventListener("mouseup", (e) => {
    const pkt = client.packet;
    if (!pkt) return;
    if (tool === "grasp") {
      const [u, v] = canvasPos(e);
      const action = clickToGrasp(pkt.outlines, pkt.ranking, u, v);
      if (!action) {
        warn("click inside an object outline to grasp");
        return;
      }
      if (!client.submit(action)) warn("action refused");
      return;
    }
    if (tool === "push" && drag) {
      drag.end = canvasPos(e);
      const yaw = Number(($("yaw") as HTMLInputElement).value);
      const action = dragToPush(drag, yaw);
      drag = null;
      if (!action) {
        warn("drag at least 10 px to define a push");
        return;
      }
      if (!client.submit(action)) warn("action refused");
    }
  });
}

async function start(): Promise<void> {
  const seed = Number((new URLSearchParams(location.search)).get("seed") ?? 0);
  const heap = Number((new URLSearchParams(location.search)).get("heap") ?? 6);
  const res = await fetch("/sessions", {
    method: "POST",
    headers: { "content-type": "application/json" },
    body: JSON.stringify({ seed, heap_size: heap }),
  });
  const first = await res.json();

  client = new SessionClient(
    (pkt) => {
      void drawPacket(pkt);
      renderSidebar(pkt);
    },
    (msg) => warn(msg),
  );
  const proto = location.protocol === "https:" ? "wss" : "ws";
  const ws = new WebSocket(
    `${proto}://${location.host}/sessions/${first.session_id}/stream`,
  );
  const conn: Connection = {
    send: (m) => ws.send(m),
    close: () => ws.close(),
  };
  ws.onmessage = (e) => client.receive(String(e.data));
  ws.onopen = () => client.attach(conn);
  ws.onerror = () => warn("websocket error");
}

wireInput();
void start();
