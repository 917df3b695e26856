"""Deterministic quasi-static planar bin simulator.

Objects are convex polygon footprints with a height and a stacking layer
(z_base). The bin rectangle is centered at the origin. All randomness is
routed through counter-based rng streams so equal inputs give bit-equal
states.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import geometry as geo
from .config import BinConfig

PUSH_LEN = 0.10
OVERLAP_EPS = 1e-6  # m^2, non-overlap-at-rest tolerance
_Z_EPS = 1e-9


class HeapInitError(RuntimeError):
    """Raised when object placement fails after bounded retries."""


@dataclass(frozen=True)
class Shape:
    vertices: np.ndarray  # (N, 2) CCW, meters, local frame
    height: float

    def __post_init__(self):
        v = np.asarray(self.vertices, dtype=np.float64)
        object.__setattr__(self, "vertices", v)
        if not 3 <= v.shape[0] <= 8:
            raise ValueError("shape needs 3-8 vertices")
        if geo.polygon_area(v) <= 0:
            raise ValueError("vertices must be CCW with positive area")
        if not 0.01 <= self.height <= 0.12:
            raise ValueError("height out of [0.01, 0.12] m")


@dataclass
class ObjectInstance:
    id: int
    shape: Shape
    pose: tuple[float, float, float]  # x, y, theta
    z_base: float = 0.0
    is_target: bool = False

    def footprint(self) -> np.ndarray:
        return geo.transform(self.shape.vertices, self.pose)

    @property
    def z_top(self) -> float:
        return self.z_base + self.shape.height

    def copy(self) -> "ObjectInstance":
        return ObjectInstance(self.id, self.shape, self.pose, self.z_base, self.is_target)


@dataclass
class WorldState:
    objects: list[ObjectInstance]
    config: BinConfig
    secondary_bin_contents: list[int] = field(default_factory=list)
    delivered_target: bool = False
    rng_seed: int = 0
    rng_counter: int = 0

    def copy(self) -> "WorldState":
        return WorldState([o.copy() for o in self.objects], self.config,
                          list(self.secondary_bin_contents), self.delivered_target,
                          self.rng_seed, self.rng_counter)

    def get(self, object_id: int) -> ObjectInstance:
        for o in self.objects:
            if o.id == object_id:
                return o
        raise KeyError(f"no object with id {object_id}")

    @property
    def target(self) -> ObjectInstance | None:
        for o in self.objects:
            if o.is_target:
                return o
        return None

    def to_dict(self) -> dict:
        return {
            "objects": [
                {
                    "id": o.id,
                    "vertices": [[repr(float(x)), repr(float(y))] for x, y in o.shape.vertices],
                    "height": repr(float(o.shape.height)),
                    "pose": [repr(float(p)) for p in o.pose],
                    "z_base": repr(float(o.z_base)),
                    "is_target": o.is_target,
                }
                for o in self.objects
            ],
            "bin": [repr(self.config.bin_w), repr(self.config.bin_d)],
            "secondary_bin_contents": list(self.secondary_bin_contents),
            "delivered_target": self.delivered_target,
            "rng": [self.rng_seed, self.rng_counter],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))


def _next_rng(state: WorldState) -> np.random.Generator:
    rng = np.random.default_rng(
        np.random.SeedSequence([state.rng_seed % (1 << 64), state.rng_counter]))
    state.rng_counter += 1
    return rng


def _in_bin(fp: np.ndarray, cfg: BinConfig, slack: float = 0.0) -> bool:
    hw, hd = cfg.bin_w / 2 + slack, cfg.bin_d / 2 + slack
    return bool(np.all(np.abs(fp[:, 0]) <= hw) and np.all(np.abs(fp[:, 1]) <= hd))


def _z_overlap(a: ObjectInstance, b: ObjectInstance) -> bool:
    return a.z_base < b.z_top - _Z_EPS and b.z_base < a.z_top - _Z_EPS


def _sample_shape(rng: np.random.Generator, cfg: BinConfig) -> Shape:
    """Random convex 3-8 gon: angular-ordered points on an ellipse."""
    n = int(rng.integers(3, 9))
    while True:
        ang = np.sort(rng.uniform(0.0, 2 * math.pi, size=n))
        if np.min(np.diff(ang, append=ang[0] + 2 * math.pi)) > 0.25:
            break
    a = rng.uniform(cfg.obj_min_extent / 2, cfg.obj_max_extent / 2)
    b = rng.uniform(cfg.obj_min_extent / 2, cfg.obj_max_extent / 2)
    verts = np.stack([a * np.cos(ang), b * np.sin(ang)], axis=1)
    h = rng.uniform(cfg.obj_min_height, cfg.obj_max_height)
    return Shape(verts, float(h))


def _drop_z(fp: np.ndarray, others: list[ObjectInstance], cfg: BinConfig) -> float | None:
    """Virtual-drop stacking rule.

    Returns the resting z_base, or None when the object would overlap a
    same-layer neighbor (placement must be retried).
    """
    area = abs(geo.polygon_area(fp))
    support_z = 0.0
    for o in others:
        cov = geo.intersection_area(fp, o.footprint()) / area
        if cov > cfg.support_frac:
            support_z = max(support_z, o.z_top)
    z = support_z
    for o in others:
        if o.z_top <= z + _Z_EPS:
            continue  # at or below the landing layer
        if geo.intersection_area(fp, o.footprint()) > OVERLAP_EPS:
            return None  # would clip a neighbor poking into the landing layer
    return z


def init_heap(config: BinConfig, n_objects: int, seed: int) -> WorldState:
    """Settled heap of n_objects with exactly one target; deterministic in (config, n, seed)."""
    if n_objects < 1:
        raise ValueError("n_objects must be >= 1")
    rng = np.random.default_rng(np.random.SeedSequence([seed % (1 << 64), 0]))
    target_idx = int(rng.integers(n_objects))
    objects: list[ObjectInstance] = []
    for i in range(n_objects):
        placed = False
        for _ in range(300):
            shape = _sample_shape(rng, config)
            circ = float(np.hypot(*shape.vertices.T).max())
            hw = config.bin_w / 2 - circ
            hd = config.bin_d / 2 - circ
            if hw <= 0 or hd <= 0:
                continue
            pose = (float(rng.uniform(-hw, hw)), float(rng.uniform(-hd, hd)),
                    float(rng.uniform(-math.pi, math.pi)))
            fp = geo.transform(shape.vertices, pose)
            z = _drop_z(fp, objects, config)
            if z is None:
                continue
            objects.append(ObjectInstance(i, shape, pose, z, i == target_idx))
            placed = True
            break
        if not placed:
            raise HeapInitError(
                f"could not place object {i} of {n_objects} in a "
                f"{config.bin_w}x{config.bin_d} m bin")
    return WorldState(objects, config, rng_seed=seed, rng_counter=1)


@dataclass(frozen=True)
class PushCommand:
    p_start: tuple[float, float]
    z_push: float
    alpha_push: float
    phi_yaw: float
    length: float = PUSH_LEN


@dataclass(frozen=True)
class GraspCommand:
    center: tuple[float, float]
    axis_angle: float
    jaw_width: float
    object_id: int


def _wall_limit(fp: np.ndarray, d: np.ndarray, cfg: BinConfig) -> float:
    """Max translation of fp along unit d before any vertex exits the bin."""
    hw, hd = cfg.bin_w / 2, cfg.bin_d / 2
    t = math.inf
    if d[0] > 1e-12:
        t = min(t, float((hw - fp[:, 0].max()) / d[0]))
    elif d[0] < -1e-12:
        t = min(t, float((-hw - fp[:, 0].min()) / d[0]))
    if d[1] > 1e-12:
        t = min(t, float((hd - fp[:, 1].max()) / d[1]))
    elif d[1] < -1e-12:
        t = min(t, float((-hd - fp[:, 1].min()) / d[1]))
    return max(t, 0.0)


def _translate(obj: ObjectInstance, delta: np.ndarray) -> None:
    x, y, th = obj.pose
    obj.pose = (x + float(delta[0]), y + float(delta[1]), th)


def _resettle(objects: list[ObjectInstance], cfg: BinConfig) -> None:
    """Drop stacked objects whose support coverage fell below the threshold."""
    for obj in sorted(objects, key=lambda o: (o.z_base, o.id)):
        if obj.z_base <= _Z_EPS:
            continue
        fp = obj.footprint()
        area = abs(geo.polygon_area(fp))
        support = 0.0
        for o in objects:
            if o.id == obj.id or abs(o.z_top - obj.z_base) > 1e-6:
                continue
            support += geo.intersection_area(fp, o.footprint()) / area
        if support >= cfg.support_frac:
            continue
        # falls: land on the highest object below that it overlaps, else floor
        land = 0.0
        for o in objects:
            if o.id == obj.id or o.z_top > obj.z_base + 1e-6:
                continue
            if geo.intersection_area(fp, o.footprint()) > OVERLAP_EPS:
                land = max(land, o.z_top)
        obj.z_base = land


def apply_push(state: WorldState, cmd: PushCommand) -> WorldState:
    """Sweep a disc pusher from p_start along alpha_push; quasi-static contact resolution."""
    cfg = state.config
    if abs(cmd.length - cfg.push_len) > 1e-12:
        raise ValueError(f"push length fixed at {cfg.push_len} m")
    sx, sy = cmd.p_start
    if abs(sx) > cfg.bin_w / 2 + cfg.pusher_r or abs(sy) > cfg.bin_d / 2 + cfg.pusher_r:
        raise ValueError("push start outside bin")
    new = state.copy()
    _next_rng(new)  # push consumes one rng slot so no-contact pushes still advance the stream
    d = np.array([math.cos(cmd.alpha_push), math.sin(cmd.alpha_push)])
    start = np.array([sx, sy])
    k_sub = cfg.substeps

    objs = sorted(new.objects, key=lambda o: o.id)
    fps = {o.id: o.footprint() for o in objs}
    circ = {o.id: float(np.hypot(*o.shape.vertices.T).max()) for o in objs}

    def pushed(obj: ObjectInstance) -> bool:
        return obj.z_base - _Z_EPS <= cmd.z_push <= obj.z_top + _Z_EPS

    def shift(obj: ObjectInstance, t: float) -> None:
        _translate(obj, t * d)
        fps[obj.id] = fps[obj.id] + t * d

    def resolve_pair(a: ObjectInstance, b: ObjectInstance) -> list[ObjectInstance]:
        """Separate overlapping a/b along d; returns objects that moved."""
        fa, fb = fps[a.id], fps[b.id]
        if not geo.polygons_overlap(fa, fb, slack=1e-9):
            return []
        ca = float(geo.polygon_centroid(fa) @ d)
        cb = float(geo.polygon_centroid(fb) @ d)
        down, up = (a, b) if ca > cb or (ca == cb and a.id > b.id) else (b, a)
        t = geo.separation_along(fps[up.id], fps[down.id], d)
        if not math.isfinite(t):
            return []
        moved = []
        step = min(t, _wall_limit(fps[down.id], d, cfg))
        if step > 1e-12:
            shift(down, step)
            moved.append(down)
        if t - step > 1e-12:
            # downstream jammed at the wall: push the upstream object back
            tb = min(t - step, _wall_limit(fps[up.id], -d, cfg))
            if tb > 1e-12:
                _translate(up, -tb * d)
                fps[up.id] = fps[up.id] - tb * d
                moved.append(up)
        return moved

    for k in range(1, k_sub + 1):
        center = start + (k / k_sub) * cmd.length * d
        dirty: list[ObjectInstance] = []
        for obj in objs:
            if not pushed(obj):
                continue
            px, py, _ = obj.pose
            if math.hypot(center[0] - px, center[1] - py) > circ[obj.id] + cfg.pusher_r:
                continue
            fp = fps[obj.id]
            if geo.point_polygon_distance(fp, center) >= cfg.pusher_r:
                continue
            t = min(geo.disc_separation_along(center, cfg.pusher_r, fp, d),
                    _wall_limit(fp, d, cfg))
            if t > 1e-12:
                shift(obj, t)
                dirty.append(obj)
        # propagate contacts from moved objects, bounded fixpoint
        budget = 20 * max(len(objs), 1)
        while dirty and budget > 0:
            budget -= 1
            a = dirty.pop(0)
            for b in objs:
                if b.id == a.id or not _z_overlap(a, b):
                    continue
                ax, ay, _ = a.pose
                bx, by, _ = b.pose
                if math.hypot(ax - bx, ay - by) > circ[a.id] + circ[b.id]:
                    continue
                for m in resolve_pair(a, b):
                    if m not in dirty:
                        dirty.append(m)
    _resettle(new.objects, cfg)
    return new


def _jaw_plates(cmd: GraspCommand, cfg: BinConfig) -> list[np.ndarray]:
    n = np.array([math.cos(cmd.axis_angle), math.sin(cmd.axis_angle)])
    c = np.array(cmd.center)
    off = cmd.jaw_width / 2 + cfg.finger_thickness / 2
    return [
        geo.rectangle(c + s * off * n, cfg.finger_len, cfg.finger_thickness,
                      cmd.axis_angle + math.pi / 2)
        for s in (-1.0, 1.0)
    ]


def grasp_feasible(state: WorldState, cmd: GraspCommand) -> tuple[bool, float]:
    """Check the three clearance conditions without mutating state.

    Returns (feasible, margin) where margin in (0, 1] averages two
    normalized clearances: jaw slack around the object and the free
    distance between the jaw plates and the nearest blocking obstacle or
    wall. An isolated graspable object scores >= 0.5; crowding lowers the
    score, so clearing neighbors away raises it.
    """
    cfg = state.config
    obj = state.get(cmd.object_id)
    if not 0.0 < cmd.jaw_width <= cfg.jaw_max:
        return False, 0.0
    fp = obj.footprint()
    width = geo.polygon_width_along(fp, cmd.axis_angle)
    if width > cmd.jaw_width:
        return False, 0.0
    plates = _jaw_plates(cmd, cfg)
    d_clear = math.inf
    for plate in plates:
        if not _in_bin(plate, cfg):
            return False, 0.0
        d_clear = min(d_clear,
                      cfg.bin_w / 2 - float(np.max(np.abs(plate[:, 0]))),
                      cfg.bin_d / 2 - float(np.max(np.abs(plate[:, 1]))))
        for o in state.objects:
            if o.id == obj.id:
                continue
            blocks_descent = _z_overlap(o, obj) or o.z_base >= obj.z_top - _Z_EPS
            if not blocks_descent:
                continue
            ofp = o.footprint()
            if geo.intersection_area(plate, ofp) > 1e-9:
                return False, 0.0
            d_clear = min(d_clear, geo.polygon_polygon_distance(plate, ofp))
    # nothing stacked on the object itself
    for o in state.objects:
        if o.id != obj.id and o.z_base >= obj.z_top - _Z_EPS:
            if geo.intersection_area(fp, o.footprint()) > OVERLAP_EPS:
                return False, 0.0
    slack = (cfg.jaw_max - width) / cfg.jaw_max
    clearance = min(1.0, max(d_clear, 0.0) / cfg.jaw_max)
    margin = 0.5 * (slack + clearance)
    return True, float(min(max(margin, 1e-6), 1.0))


def apply_grasp(state: WorldState, cmd: GraspCommand) -> tuple[WorldState, str]:
    """Attempt a parallel-jaw grasp. Outcomes: delivered_target | removed_to_secondary | failed."""
    obj = state.get(cmd.object_id)  # raises KeyError for unknown ids
    ok, _ = grasp_feasible(state, cmd)
    new = state.copy()
    if not ok:
        rng = _next_rng(new)
        tgt = new.get(cmd.object_id)
        dx = float(rng.uniform(-1, 1)) * state.config.grasp_jitter_xy
        dy = float(rng.uniform(-1, 1)) * state.config.grasp_jitter_xy
        dth = float(rng.uniform(-1, 1)) * state.config.grasp_jitter_theta
        x, y, th = tgt.pose
        tgt.pose = (x + dx, y + dy, th + dth)
        if not _in_bin(tgt.footprint(), state.config):
            tgt.pose = (x, y, th)  # jitter would exit the bin; keep pose
        _resettle(new.objects, state.config)
        return new, "failed"
    _next_rng(new)  # success consumes the same stream slot as failure
    new.objects = [o for o in new.objects if o.id != cmd.object_id]
    if obj.is_target:
        new.delivered_target = True
    else:
        new.secondary_bin_contents.append(cmd.object_id)
    _resettle(new.objects, state.config)
    return new, "delivered_target" if obj.is_target else "removed_to_secondary"
