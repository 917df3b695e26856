"""Action primitive planners and heuristic baselines.

Includes the 6-D continuous push action decoder, the analytic parallel-jaw
grasp planner, the free-space push baseline, the threshold-tree action
selector, and visible-area object ranking.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import geometry as geo
from .config import BinConfig
from .freespace import bfs_mask, distance_transform
from .perception import CameraModel, mask_centroid
from .world import GraspCommand, PushCommand, WorldState, grasp_feasible

CROP_HALF = 110  # px, half side of the observation crop


@dataclass(frozen=True)
class PushAction6:
    """Continuous push action: relative start, direction and yaw as sin/cos pairs."""
    x_rel: float
    y_rel: float
    sin_alpha: float
    cos_alpha: float
    sin_phi: float
    cos_phi: float

    def __post_init__(self):
        for name in ("x_rel", "y_rel", "sin_alpha", "cos_alpha", "sin_phi", "cos_phi"):
            v = getattr(self, name)
            object.__setattr__(self, name, float(min(1.0, max(-1.0, v))))

    @classmethod
    def from_array(cls, a) -> "PushAction6":
        return cls(*[float(x) for x in a])


@dataclass(frozen=True)
class ActionQuality:
    q_grasp: float
    q_push: float

    def __post_init__(self):
        for name in ("q_grasp", "q_push"):
            v = getattr(self, name)
            if not (v == -1.0 or 0.0 <= v <= 1.0):
                raise ValueError(f"{name}={v} outside {{-1}} u [0,1]")


@dataclass(frozen=True)
class Thresholds:
    q_grasp_thresh: float = 0.5
    q_push_thresh: float = 0.25

    def __post_init__(self):
        if not (0.0 <= self.q_grasp_thresh <= 1.0 and 0.0 <= self.q_push_thresh <= 1.0):
            raise ValueError("thresholds must lie in [0, 1]")


def _push_height(depth: np.ndarray, u: int, v: int, cam: CameraModel,
                 clearance: float) -> float:
    """Push height from the local depth minimum plus a descent clearance."""
    h, w = depth.shape
    r0, r1 = max(v - 2, 0), min(v + 3, h)
    c0, c1 = max(u - 2, 0), min(u + 3, w)
    min_depth = float(depth[r0:r1, c0:c1].min())
    return max(cam.camera_height - min_depth + clearance, 0.002)


def decode_push_action(a: PushAction6, crop_center: tuple[int, int],
                       depth: np.ndarray, cam: CameraModel,
                       cfg: BinConfig) -> PushCommand | None:
    """Map the 6-D action to a metric push; None when the crop misses the bin."""
    cu, cv = crop_center
    # no-action when the crop window cannot touch the bin
    bw_px = cfg.bin_w / 2 / cam.mpp
    bd_px = cfg.bin_d / 2 / cam.mpp
    if (abs(cu - cam.width / 2) > bw_px + CROP_HALF
            or abs(cv - cam.height / 2) > bd_px + CROP_HALF):
        return None
    u = int(round(cu + a.x_rel * CROP_HALF))
    v = int(round(cv + a.y_rel * CROP_HALF))
    u = min(max(u, 0), cam.width - 1)
    v = min(max(v, 0), cam.height - 1)
    alpha = math.atan2(a.sin_alpha, a.cos_alpha)
    phi = math.atan2(a.sin_phi, a.cos_phi)
    x, y, _ = cam.deproject(u, v, cam.camera_height)
    x = min(max(x, -cfg.bin_w / 2), cfg.bin_w / 2)
    y = min(max(y, -cfg.bin_d / 2), cfg.bin_d / 2)
    z = _push_height(depth, u, v, cam, cfg.push_clearance)
    return PushCommand((x, y), z, alpha, phi, cfg.push_len)


def plan_grasp(state: WorldState, masks: dict[int, np.ndarray], ooi_id: int,
               cam: CameraModel) -> tuple[GraspCommand | None, float]:
    """Sampled analytic grasp: axis angles x centers along the mask principal axis.

    Quality is the normalized jaw clearance margin of the best feasible
    candidate; (None, -1) when nothing is feasible.
    """
    if ooi_id not in masks:
        raise KeyError(f"unknown object {ooi_id}")
    cfg = state.config
    mask = masks[ooi_id]
    rows, cols = np.nonzero(mask)
    if rows.size == 0:
        return None, -1.0
    cu, cv = float(cols.mean()), float(rows.mean())
    du, dv = cols - cu, rows - cv
    cov = np.array([[np.mean(du * du), np.mean(du * dv)],
                    [np.mean(du * dv), np.mean(dv * dv)]])
    evals, evecs = np.linalg.eigh(cov)
    major = evecs[:, int(np.argmax(evals))]
    sigma = math.sqrt(max(float(evals.max()), 1e-9))

    best: tuple[GraspCommand, float] | None = None
    n_ang = cfg.grasp_axis_samples
    n_cen = cfg.grasp_center_samples
    offsets = np.linspace(-1.0, 1.0, n_cen) * sigma
    for k in range(n_ang):
        angle = k * math.pi / n_ang
        for off in offsets:
            u = cu + off * major[0]
            v = cv + off * major[1]
            x, y, _ = cam.deproject(u, v, cam.camera_height)
            obj = state.get(ooi_id)
            width = geo.polygon_width_along(obj.footprint(), angle)
            jaw = min(cfg.jaw_max, width + 0.01)
            cmd = GraspCommand((x, y), angle, jaw, ooi_id)
            ok, margin = grasp_feasible(state, cmd)
            if ok and (best is None or margin > best[1]):
                best = (cmd, margin)
    if best is None:
        return None, -1.0
    return best


def fsp_plan_push(masks: dict[int, np.ndarray], bin_bottom: np.ndarray,
                  depth: np.ndarray, cam: CameraModel, ooi_id: int,
                  cfg: BinConfig) -> tuple[PushCommand | None, float]:
    """Free-space baseline: push the OOI toward the freest bin pixel."""
    if ooi_id not in masks:
        raise KeyError(f"unknown object {ooi_id}")
    cen = mask_centroid(masks[ooi_id])
    if cen is None:
        return None, -1.0
    free = bfs_mask(bin_bottom, masks, ooi_id)
    dt = distance_transform(free)
    goal_flat = int(np.argmax(dt))  # row-major first maximum
    gv, gu = divmod(goal_flat, dt.shape[1])
    dmax = min(cfg.bin_w, cfg.bin_d) / 2 / cam.mpp
    quality = float(min(1.0, dt[gv, gu] / dmax))

    cx, cy, _ = cam.deproject(cen[0], cen[1], cam.camera_height)
    gx, gy, _ = cam.deproject(gu, gv, cam.camera_height)
    vec = np.array([gx - cx, gy - cy])
    norm = float(np.hypot(*vec))
    d = vec / norm if norm > 1e-9 else np.array([1.0, 0.0])
    alpha = math.atan2(d[1], d[0])

    rows, cols = np.nonzero(masks[ooi_id])
    radius = float(np.hypot(cols - cen[0], rows - cen[1]).max()) * cam.mpp
    start = np.array([cx, cy]) - (radius + cfg.pusher_r + 0.005) * d
    if abs(start[0]) > cfg.bin_w / 2 + cfg.pusher_r or abs(start[1]) > cfg.bin_d / 2 + cfg.pusher_r:
        return None, -1.0
    su = int(round(start[0] / cam.mpp + cam.width / 2))
    sv = int(round(start[1] / cam.mpp + cam.height / 2))
    su = min(max(su, 0), cam.width - 1)
    sv = min(max(sv, 0), cam.height - 1)
    for oid, m in masks.items():
        if oid != ooi_id and m[sv, su]:
            return None, -1.0  # start buried in another object
    z = _push_height(depth, su, sv, cam, cfg.push_clearance)
    phi = alpha + math.pi / 2
    return PushCommand((float(start[0]), float(start[1])), z, alpha, phi, cfg.push_len), quality


def heuristic_asp(q: ActionQuality, th: Thresholds) -> str:
    """Threshold tree: grasp first, then push, else skip; -1 never passes."""
    if q.q_grasp >= 0.0 and q.q_grasp >= th.q_grasp_thresh:
        return "Grasp"
    if q.q_push >= 0.0 and q.q_push >= th.q_push_thresh:
        return "Push"
    return "Skip"


def select_object(masks: dict[int, np.ndarray], target_id: int | None,
                  min_visible_px: int = 30) -> list[int]:
    """Rank visible objects: the target first if found, then by visible area."""
    areas = {oid: int(np.count_nonzero(m)) for oid, m in masks.items()}
    visible = [oid for oid, a in areas.items() if a > 0]
    ordered = sorted(visible, key=lambda oid: (-areas[oid], oid))
    if target_id is not None and areas.get(target_id, 0) > min_visible_px:
        ordered = [target_id] + [oid for oid in ordered if oid != target_id]
    return ordered
