"""Rollout server: live episodes over HTTP + WebSocket JSON.

A session wraps one seeded search episode. The client (operator UI or a
script) plays the role of the action selector — and, for pushes, of the
push policy — while the server enforces the trial rules: the 25-action
cap, skip accounting, and the infeasible-to-Skip conversion with its -10
reward. Human pushes are entered in pixel space and routed through the
same action decoder as the learned policy.
"""
from __future__ import annotations

import base64
import io
import json
import math
import threading
import uuid
from pathlib import Path

import numpy as np
from fastapi import FastAPI, HTTPException, WebSocket, WebSocketDisconnect
from fastapi.responses import PlainTextResponse
from PIL import Image

from .config import BinConfig
from .freespace import asp_reward
from .harness import ACTION_CAP, SearchEpisode
from .agents import FspPushPlanner, LearnedPushPlanner
from .primitives import PushAction6, decode_push_action

SCHEMA_VERSION = "mechsearch.protocol/1"
MAX_SESSIONS = 64
DEPTH_SCALE = 10000.0  # meters -> uint16


def depth_png_b64(depth: np.ndarray) -> str:
    """16-bit grayscale PNG of the depth image, scaled to 0.1 mm units."""
    data = np.clip(np.round(depth * DEPTH_SCALE), 0, 65535).astype(np.uint16)
    img = Image.fromarray(data)  # uint16 -> 16-bit grayscale
    buf = io.BytesIO()
    img.save(buf, format="PNG")
    return base64.b64encode(buf.getvalue()).decode()


class Session:
    def __init__(self, cfg: BinConfig, seed: int, heap_size: int,
                 push_planner, action_cap: int = ACTION_CAP):
        self.id = uuid.uuid4().hex[:12]
        self.cfg = cfg
        self.seed = seed
        self.heap_size = heap_size
        self.action_cap = action_cap
        self.lock = threading.Lock()
        self.episode = SearchEpisode(cfg, push_planner, seed, heap_size)
        self.action_count = 0
        self.rank_idx = 0
        self.status = "running"
        self.log: list[dict] = []
        self.last: dict | None = None

    # -- episode bookkeeping -------------------------------------------------
    def _head_ooi(self) -> int | None:
        ranking = self.episode.ranking
        if not ranking:
            return None
        if self.rank_idx >= len(ranking):
            self.rank_idx = 0
        return ranking[self.rank_idx]

    def _update_status(self) -> None:
        if self.episode.target_delivered:
            self.status = "success"
        elif self.episode.target_lost or not self.episode.ranking:
            self.status = "target_lost"
        elif self.action_count >= self.action_cap:
            self.status = "cap_exceeded"

    def packet(self) -> dict:
        ep = self.episode
        ooi = self._head_ooi()
        q_grasp = q_push = None
        if self.status == "running" and ooi is not None:
            ctx = ep.context(ooi)
            q_grasp, q_push = ctx.q_grasp, ctx.q_push
        cam = ep.cam
        outlines = {}
        for oid in ep.ranking:
            fp = cam.to_pixels(ep.state.get(oid).footprint())
            outlines[str(oid)] = [[float(u), float(v)] for u, v in fp]
        return {
            "schema": SCHEMA_VERSION,
            "session_id": self.id,
            "seed": self.seed,
            "heap_size": self.heap_size,
            "status": self.status,
            "action_count": self.action_count,
            "action_cap": self.action_cap,
            "target_id": ep.target_id,
            "ooi_id": ooi,
            "ranking": list(ep.ranking),
            "q_grasp": q_grasp,
            "q_push": q_push,
            "depth_png": depth_png_b64(ep.depth),
            "image_size": [cam.width, cam.height],
            "outlines": outlines,
            "last": self.last,
        }

    # -- action handling -----------------------------------------------------
    def act(self, action: dict) -> dict:
        with self.lock:
            if self.status != "running":
                raise HTTPException(409, f"session is terminal ({self.status})")
            kind = action.get("type")
            if kind == "skip":
                self._do_skip("skip", "other")
            elif kind == "grasp":
                self._do_grasp(action)
            elif kind == "push":
                self._do_push(action)
            else:
                raise HTTPException(422, f"unknown action type {kind!r}")
            self._update_status()
            self.log.append({"action": action, "result": self.last,
                             "action_count": self.action_count,
                             "status": self.status})
            return self.packet()

    def _charge_if_pass_exhausted(self) -> None:
        if self.rank_idx >= len(self.episode.ranking):
            self.action_count += 1
            self.rank_idx = 0
            self.episode.refresh()

    def _do_skip(self, executed: str, outcome: str) -> None:
        self.rank_idx += 1
        charged = self.rank_idx >= len(self.episode.ranking)
        self._charge_if_pass_exhausted()
        self.last = {"executed": "skip", "requested": executed,
                     "outcome": outcome, "reward": asp_reward(outcome),
                     "charged": charged}

    def _do_grasp(self, action: dict) -> None:
        oid = action.get("object_id")
        if not isinstance(oid, int) or oid not in self.episode.masks:
            raise HTTPException(422, f"grasp needs a visible object_id, got {oid!r}")
        ctx = self.episode.context(oid)
        if ctx.q_grasp < 0.0:
            self._do_skip("grasp", "infeasible_selected")
            return
        outcome = self.episode.execute("Grasp", ctx)
        self.action_count += 1
        self.rank_idx = 0
        self.last = {"executed": "grasp", "requested": "grasp",
                     "outcome": outcome, "reward": asp_reward(outcome),
                     "charged": True, "object_id": oid}

    def _do_push(self, action: dict) -> None:
        try:
            u, v = int(action["u"]), int(action["v"])
            alpha = math.radians(float(action["alpha_deg"]))
            phi = math.radians(float(action["phi_deg"]))
        except (KeyError, TypeError, ValueError):
            raise HTTPException(422, "push needs integer u, v and numeric "
                                     "alpha_deg, phi_deg")
        cam = self.episode.cam
        if not (0 <= u < cam.width and 0 <= v < cam.height):
            raise HTTPException(422, f"push pixel {(u, v)} outside the image")
        # route through the policy's decoder: zero crop offset at (u, v)
        a = PushAction6(0.0, 0.0, math.sin(alpha), math.cos(alpha),
                        math.sin(phi), math.cos(phi))
        cmd = decode_push_action(a, (u, v), self.episode.depth, cam, self.cfg)
        if cmd is None:
            self._do_skip("push", "infeasible_selected")
            return
        ooi = self._head_ooi()
        if ooi is None:
            raise HTTPException(409, "no visible objects to push")
        ctx = self.episode.context(ooi)
        ctx.push_cmd = cmd
        outcome = self.episode.execute("Push", ctx)
        self.action_count += 1
        self.rank_idx = 0
        self.last = {"executed": "push", "requested": "push",
                     "outcome": outcome, "reward": asp_reward(outcome),
                     "charged": True,
                     "command": {"u": u, "v": v,
                                 "alpha_deg": float(action["alpha_deg"]),
                                 "phi_deg": float(action["phi_deg"])}}


def replay_log(cfg: BinConfig, seed: int, heap_size: int, log: list[dict],
               push_planner=None) -> str:
    """Re-apply a session log to a fresh session; returns final state JSON."""
    sess = Session(cfg, seed, heap_size, push_planner or FspPushPlanner())
    for entry in log:
        if sess.status != "running":
            break
        sess.act(entry["action"])
    return sess.episode.state.to_json()


def build_app(cfg: BinConfig | None = None, push_policy=None,
              static_dir: str | Path | None = None) -> FastAPI:
    cfg = cfg or BinConfig()
    planner = (LearnedPushPlanner(push_policy) if push_policy is not None
               else FspPushPlanner())
    app = FastAPI(title="mechsearch rollout server")
    sessions: dict[str, Session] = {}

    @app.post("/sessions")
    def create_session(body: dict):
        if len(sessions) >= MAX_SESSIONS:
            raise HTTPException(429, "session capacity exceeded")
        seed = int(body.get("seed", 0))
        heap_size = int(body.get("heap_size", 6))
        sess = Session(cfg, seed, heap_size, planner)
        sessions[sess.id] = sess
        return sess.packet()

    def _get(sid: str) -> Session:
        if sid not in sessions:
            raise HTTPException(404, f"no session {sid}")
        return sessions[sid]

    @app.get("/sessions/{sid}")
    def get_session(sid: str):
        return _get(sid).packet()

    @app.get("/sessions/{sid}/log", response_class=PlainTextResponse)
    def get_log(sid: str):
        sess = _get(sid)
        head = {"schema": SCHEMA_VERSION, "seed": sess.seed,
                "heap_size": sess.heap_size, "session_id": sess.id}
        lines = [json.dumps(head, sort_keys=True)]
        lines += [json.dumps(e, sort_keys=True) for e in sess.log]
        return "\n".join(lines) + "\n"

    @app.websocket("/sessions/{sid}/stream")
    async def stream(ws: WebSocket, sid: str):
        await ws.accept()
        if sid not in sessions:
            await ws.send_json({"error": f"no session {sid}"})
            await ws.close()
            return
        sess = sessions[sid]
        await ws.send_json(sess.packet())
        try:
            while True:
                action = await ws.receive_json()
                try:
                    packet = sess.act(action)
                except HTTPException as e:
                    packet = {"error": e.detail, "status": sess.status}
                await ws.send_json(packet)
        except WebSocketDisconnect:
            return

    @app.get("/reports/proportions")
    def proportions():
        done = [s for s in sessions.values() if s.status != "running"]
        counts = {"grasp": 0, "push": 0}
        for s in done:
            for e in s.log:
                ex = e["result"]["executed"]
                if ex in counts and e["result"]["charged"]:
                    counts[ex] += 1
        total = counts["grasp"] + counts["push"]
        return {
            "asp": "human",
            "n_sessions": len(done),
            "executed_actions": total,
            "proportions": ({"grasp": counts["grasp"] / total,
                             "push": counts["push"] / total,
                             "suction": None} if total else None),
            "note": "suction not applicable in this simulator",
        }

    static = Path(static_dir) if static_dir else Path(__file__).resolve(
    ).parents[2] / "frontend" / "dist"
    if static.is_dir():
        from fastapi.staticfiles import StaticFiles
        app.mount("/", StaticFiles(directory=static, html=True), name="ui")

    return app
