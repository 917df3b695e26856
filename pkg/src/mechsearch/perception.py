"""Top-down orthographic depth rendering, observation crops, deprojection.

Image layout is 480 rows x 640 cols; pixel (u, v) means column u, row v,
with pixel centers on the integer grid. The bin center maps to the image
center, so deprojection is exact.
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import geometry as geo
from .config import BinConfig
from .kernels import convex_mask
from .world import WorldState

IMG_H, IMG_W = 480, 640
CROP_SIDE = 220
CROP_OUT = 40


@dataclass(frozen=True)
class CameraModel:
    mpp: float  # meters per pixel, both axes
    camera_height: float = 0.50
    height: int = IMG_H
    width: int = IMG_W

    @classmethod
    def for_bin(cls, cfg: BinConfig, downscale: int = 1) -> "CameraModel":
        # bin spans ~420 px at full resolution
        return cls(mpp=cfg.bin_w / 420.0 * downscale,
                   height=IMG_H // downscale, width=IMG_W // downscale)

    def project(self, x: float, y: float) -> tuple[float, float]:
        return x / self.mpp + self.width / 2, y / self.mpp + self.height / 2

    def deproject(self, u: float, v: float, depth: float) -> tuple[float, float, float]:
        x = (u - self.width / 2) * self.mpp
        y = (v - self.height / 2) * self.mpp
        return x, y, self.camera_height - depth

    def to_pixels(self, verts_m: np.ndarray) -> np.ndarray:
        out = verts_m / self.mpp
        out[:, 0] += self.width / 2
        out[:, 1] += self.height / 2
        return out


@dataclass
class ObjectMask:
    object_id: int
    mask: np.ndarray  # (H, W) bool


def render(state: WorldState, cam: CameraModel) -> tuple[np.ndarray, list[ObjectMask], np.ndarray]:
    """Z-buffer render: (depth image, per-object visible masks, bin-bottom mask)."""
    top = np.zeros((cam.height, cam.width), dtype=np.float64)
    owner = np.full((cam.height, cam.width), -1, dtype=np.int64)
    for obj in sorted(state.objects, key=lambda o: o.id):
        m = convex_mask(cam.to_pixels(obj.footprint()), cam.height, cam.width)
        win = m & (obj.z_top > top)
        top[win] = obj.z_top
        owner[win] = obj.id
    depth = cam.camera_height - top
    masks = [ObjectMask(o.id, owner == o.id) for o in sorted(state.objects, key=lambda o: o.id)]
    cfg = state.config
    hw, hd = cfg.bin_w / 2, cfg.bin_d / 2
    corners = np.array([[-hw, -hd], [hw, -hd], [hw, hd], [-hw, hd]])
    bin_bottom = convex_mask(cam.to_pixels(corners), cam.height, cam.width)
    return depth, masks, bin_bottom


def masks_by_id(masks: list[ObjectMask]) -> dict[int, np.ndarray]:
    return {m.object_id: m.mask for m in masks}


def _resample_matrix(src: int, dst: int) -> np.ndarray:
    """Exact area-average 1-D resampling matrix (dst x src)."""
    scale = src / dst
    w = np.zeros((dst, src))
    for i in range(dst):
        lo, hi = i * scale, (i + 1) * scale
        k0, k1 = int(np.floor(lo)), int(np.ceil(hi))
        for k in range(k0, min(k1, src)):
            w[i, k] = max(0.0, min(hi, k + 1) - max(lo, k)) / scale
    return w


_W_CROP = _resample_matrix(CROP_SIDE, CROP_OUT)


@dataclass
class ObservationCrop:
    center: tuple[int, int]  # (u, v)
    grid: np.ndarray         # (40, 40) float64
    channel: str             # "depth" | "mask"


def crop_downscale(img: np.ndarray, center: tuple[int, int], channel: str,
                   pad_value: float | None = None) -> ObservationCrop:
    """220x220 window centered at (u, v), padded, area-averaged to 40x40."""
    u, v = int(round(center[0])), int(round(center[1]))
    h, w = img.shape
    if not (0 <= u < w and 0 <= v < h):
        raise ValueError(f"crop center {(u, v)} outside image")
    if pad_value is None:
        pad_value = 0.0 if channel == "mask" else float(img.max())
    half = CROP_SIDE // 2
    window = np.full((CROP_SIDE, CROP_SIDE), pad_value, dtype=np.float64)
    r0, r1 = v - half, v + half
    c0, c1 = u - half, u + half
    sr0, sr1 = max(r0, 0), min(r1, h)
    sc0, sc1 = max(c0, 0), min(c1, w)
    if sr0 < sr1 and sc0 < sc1:
        window[sr0 - r0:sr1 - r0, sc0 - c0:sc1 - c0] = img[sr0:sr1, sc0:sc1]
    grid = _W_CROP @ window @ _W_CROP.T
    return ObservationCrop((u, v), grid, channel)


def visible_area(mask: np.ndarray) -> int:
    return int(np.count_nonzero(mask))


def mask_centroid(mask: np.ndarray) -> tuple[float, float] | None:
    """Visible-pixel centroid as (u, v), or None for an empty mask."""
    rows, cols = np.nonzero(mask)
    if rows.size == 0:
        return None
    return float(cols.mean()), float(rows.mean())


def write_pgm16(depth: np.ndarray, path: str | Path, scale: float = 10000.0) -> None:
    """16-bit big-endian binary PGM; depth meters scaled by `scale`."""
    data = np.clip(np.round(depth * scale), 0, 65535).astype(">u2")
    with open(path, "wb") as f:
        f.write(f"P5\n{depth.shape[1]} {depth.shape[0]}\n65535\n".encode())
        f.write(data.tobytes())


def write_pbm(mask: np.ndarray, path: str | Path) -> None:
    """Binary PBM (P4), 1 = set pixel."""
    with open(path, "wb") as f:
        f.write(f"P4\n{mask.shape[1]} {mask.shape[0]}\n".encode())
        f.write(np.packbits(mask.astype(np.uint8), axis=1).tobytes())
