import numpy as np
import pytest


def brute_edt2(free: np.ndarray) -> np.ndarray:
    """All-pairs squared-distance oracle (chunked, exact integer)."""
    h, w = free.shape
    src = np.argwhere(~np.asarray(free, dtype=bool))
    if src.size == 0:
        raise ValueError("no source pixel")
    pts = np.stack(np.meshgrid(np.arange(h), np.arange(w), indexing="ij"),
                   axis=-1).reshape(-1, 2).astype(np.int64)
    src = src.astype(np.int64)
    out = np.empty(h * w, dtype=np.int64)
    step = max(1, (1 << 22) // max(1, len(src)))
    for i in range(0, len(pts), step):
        d = pts[i:i + step, None, :] - src[None, :, :]
        out[i:i + step] = (d[:, :, 0] ** 2 + d[:, :, 1] ** 2).min(axis=1)
    return out.reshape(h, w)


def random_convex(rng: np.random.Generator, n: int = 6, radius: float = 1.0,
                  center=(0.0, 0.0)) -> np.ndarray:
    """Random convex CCW polygon: points on an ellipse at sorted angles."""
    angles = np.sort(rng.uniform(0, 2 * np.pi, n))
    while np.min(np.diff(np.concatenate([angles, [angles[0] + 2 * np.pi]]))) < 0.2:
        angles = np.sort(rng.uniform(0, 2 * np.pi, n))
    r = radius * rng.uniform(0.5, 1.0, n)
    pts = np.stack([np.cos(angles) * r, np.sin(angles) * r], axis=1)
    return pts + np.asarray(center)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
