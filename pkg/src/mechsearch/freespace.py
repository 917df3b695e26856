"""Free-space reward mathematics.

Per-object free space is the mean of the exact Euclidean distance
transform of the bin free space over the object's visible pixels. The
push reward is a weighted sum of per-object free-space changes focused on
the object of interest; the selection reward is the sparse
extract/infeasible/step scheme used by the action-selection policy.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .kernels import edt_squared

ASP_REWARD_EXTRACTED = 20.0
ASP_REWARD_INFEASIBLE = -10.0
ASP_REWARD_STEP = -1.0


def bfs_mask(bin_bottom: np.ndarray, object_masks: dict[int, np.ndarray],
             exclude_id: int) -> np.ndarray:
    """Bin-free-space mask: bin bottom minus all object masks except the excluded one."""
    if exclude_id not in object_masks:
        raise KeyError(f"exclude_id {exclude_id} not among object masks")
    free = bin_bottom.copy()
    for oid, m in object_masks.items():
        if oid != exclude_id:
            free &= ~m
    return free


def distance_transform(free: np.ndarray) -> np.ndarray:
    """Exact Euclidean distance (pixels) to the nearest obstacle pixel.

    Non-free pixels (obstacles and out-of-bin) are distance sources.
    """
    return np.sqrt(edt_squared(free).astype(np.float64))


def free_space(object_mask: np.ndarray, dt: np.ndarray) -> float:
    """Masked mean of the distance field; 0 for an empty (fully occluded) mask."""
    n = int(np.count_nonzero(object_mask))
    if n == 0:
        return 0.0
    return float(dt[object_mask].sum() / n)


@dataclass(frozen=True)
class FreeSpaceReport:
    values: dict[int, float]  # object id -> free-space value (pixels)
    t: int = 0


def measure_free_space(bin_bottom: np.ndarray, object_masks: dict[int, np.ndarray],
                       t: int = 0) -> FreeSpaceReport:
    """Per-object free space, each object excluded from its own obstacle set."""
    values = {}
    for oid, m in object_masks.items():
        free = bfs_mask(bin_bottom, object_masks, oid)
        values[oid] = free_space(m, distance_transform(free))
    return FreeSpaceReport(values, t)


def push_reward(report_prev: FreeSpaceReport, report_cur: FreeSpaceReport,
                ooi_id: int) -> float:
    """Weighted free-space-change reward, focused on the object of interest."""
    ids = set(report_prev.values)
    if ids != set(report_cur.values) or ooi_id not in ids:
        raise ValueError("reports must cover identical id sets containing the OOI")
    n = len(ids)
    delta_ooi = report_cur.values[ooi_id] - report_prev.values[ooi_id]
    rest = sum(report_cur.values[i] - report_prev.values[i] for i in ids if i != ooi_id)
    rest_term = rest / (n - 1) if n > 1 else 0.0
    return (10.0 * delta_ooi + rest_term) / 11.0


def asp_reward(outcome: str) -> float:
    """Sparse action-selection reward: extracted 20, infeasible pick -10, else -1."""
    table = {
        "extracted_target": ASP_REWARD_EXTRACTED,
        "infeasible_selected": ASP_REWARD_INFEASIBLE,
        "other": ASP_REWARD_STEP,
    }
    if outcome not in table:
        raise ValueError(f"unknown outcome {outcome!r}")
    return table[outcome]
