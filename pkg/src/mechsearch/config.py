"""Shared configuration for the simulator and policies.

BinConfig is read from a plain-text key-value file, one `key = value` pair
per line, `#` comments allowed. Documented keys:

    bin_w         bin width in meters                (default 0.40)
    bin_d         bin depth in meters                (default 0.40)
    jaw_max       max parallel-jaw opening, meters   (default 0.085)
    pusher_r      pusher disc radius, meters         (default 0.008)
    substeps      push sweep sub-steps               (default 50)
    support_frac  stacking support threshold         (default 0.40)
    seed          default rng seed                   (default 0)

Extra keys tune the planners and reward evaluation; unknown keys are
rejected so typos fail loudly.
"""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from pathlib import Path


@dataclass(frozen=True)
class BinConfig:
    bin_w: float = 0.40
    bin_d: float = 0.40
    jaw_max: float = 0.085
    pusher_r: float = 0.008
    substeps: int = 50
    support_frac: float = 0.40
    seed: int = 0
    # push primitive
    push_len: float = 0.10
    push_clearance: float = 0.005
    # settle / grasp perturbation
    grasp_jitter_xy: float = 0.005
    grasp_jitter_theta: float = 0.05
    # object sampling
    obj_min_extent: float = 0.03
    obj_max_extent: float = 0.10
    obj_min_height: float = 0.02
    obj_max_height: float = 0.06
    # planner knobs
    q_grasp_thresh: float = 0.5
    q_push_thresh: float = 0.25
    min_visible_px: int = 30
    grasp_axis_samples: int = 16
    grasp_center_samples: int = 5
    finger_len: float = 0.04
    finger_thickness: float = 0.01
    # reward evaluation resolution divisor (480x640 / N)
    reward_downscale: int = 2

    def __post_init__(self):
        if self.bin_w <= 0 or self.bin_d <= 0:
            raise ValueError("bin dimensions must be positive")
        if not 0.0 < self.support_frac < 1.0:
            raise ValueError("support_frac must be in (0, 1)")
        if self.substeps < 1:
            raise ValueError("substeps must be >= 1")


_FIELDS = {f.name: f.type for f in dataclasses.fields(BinConfig)}
_INT_KEYS = {"substeps", "seed", "min_visible_px", "grasp_axis_samples",
             "grasp_center_samples", "reward_downscale"}


def load_config(path: str | Path) -> BinConfig:
    values = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{lineno}: expected 'key = value', got {raw!r}")
        key, val = (s.strip() for s in line.split("=", 1))
        if key not in _FIELDS:
            raise ValueError(f"{path}:{lineno}: unknown key {key!r}")
        values[key] = int(val) if key in _INT_KEYS else float(val)
    return BinConfig(**values)


def save_config(cfg: BinConfig, path: str | Path) -> None:
    lines = [f"{f.name} = {getattr(cfg, f.name)}" for f in dataclasses.fields(BinConfig)]
    Path(path).write_text("\n".join(lines) + "\n")
