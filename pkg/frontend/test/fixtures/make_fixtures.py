"""Regenerate the frontend test fixtures from the reference implementation.

Run from the repository root:  python3 frontend/test/fixtures/make_fixtures.py
"""
import io
import json
from pathlib import Path

import numpy as np
from PIL import Image

HERE = Path(__file__).parent


def small_depth_png():
    """40x30 gradient depth image, 0.1 mm units, plus expected decodes."""
    h, w = 30, 40
    vals = (4000 + (np.arange(h * w).reshape(h, w) * 7) % 1200).astype(np.uint16)
    img = Image.fromarray(vals)
    buf = io.BytesIO()
    img.save(buf, format="PNG")
    (HERE / "depth_small.png").write_bytes(buf.getvalue())
    (HERE / "depth_small.u16").write_bytes(vals.astype("<u2").tobytes())

    # reference heatmap under the documented integer colormap
    height_m = 0.5 - vals.astype(np.float64) / 10000.0
    t = np.clip(height_m / 0.12, 0.0, 1.0)
    rgba = np.zeros((h, w, 4), dtype=np.uint8)
    # round half up, matching JS Math.round in the frontend colormap
    rgba[..., 0] = np.floor(255 * t + 0.5)
    rgba[..., 1] = np.floor(200 * t + 30 * (1 - t) + 0.5)
    rgba[..., 2] = np.floor(60 * t + 120 * (1 - t) + 0.5)
    rgba[..., 3] = 255
    (HERE / "heatmap_small.rgba").write_bytes(rgba.tobytes())
    (HERE / "depth_small.json").write_text(json.dumps(
        {"width": w, "height": h}))


def live_packets():
    """Observation packets captured from the rollout server."""
    from fastapi.testclient import TestClient
    from mechsearch.service import build_app

    with TestClient(build_app()) as client:
        pkt = client.post("/sessions",
                          json={"seed": 20, "heap_size": 3}).json()
        (HERE / "packet_running.json").write_text(
            json.dumps(pkt, indent=2, sort_keys=True))

        lone = client.post("/sessions",
                           json={"seed": 1, "heap_size": 1}).json()
        with client.websocket_connect(
                f"/sessions/{lone['session_id']}/stream") as ws:
            ws.receive_json()
            ws.send_json({"type": "grasp", "object_id": lone["ooi_id"]})
            done = ws.receive_json()
        (HERE / "packet_terminal.json").write_text(
            json.dumps(done, indent=2, sort_keys=True))


if __name__ == "__main__":
    small_depth_png()
    live_packets()
    print("fixtures written to", HERE)
