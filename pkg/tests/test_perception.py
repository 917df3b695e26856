import numpy as np
import pytest
from PIL import Image

from mechsearch.config import BinConfig
from mechsearch.perception import (
    CROP_OUT,
    CROP_SIDE,
    CameraModel,
    _resample_matrix,
    crop_downscale,
    mask_centroid,
    masks_by_id,
    render,
    visible_area,
    write_pbm,
    write_pgm16,
)
from mechsearch.world import ObjectInstance, init_heap
from tests.test_world import make_state, square

CFG = BinConfig()
CAM = CameraModel.for_bin(CFG)


def test_project_deproject_roundtrip():
    for x, y in [(0.0, 0.0), (0.12, -0.07), (-0.19, 0.19)]:
        u, v = CAM.project(x, y)
        xx, yy, z = CAM.deproject(u, v, 0.46)
        assert (xx, yy) == pytest.approx((x, y), abs=1e-12)
        assert z == pytest.approx(CAM.camera_height - 0.46)
    # bin center lands at the image center
    assert CAM.project(0.0, 0.0) == (CAM.width / 2, CAM.height / 2)


def test_downscaled_camera_consistent():
    half = CameraModel.for_bin(CFG, downscale=2)
    assert half.mpp == pytest.approx(2 * CAM.mpp)
    assert (half.height, half.width) == (CAM.height // 2, CAM.width // 2)
    u, v = CAM.project(0.1, 0.05)
    u2, v2 = half.project(0.1, 0.05)
    # same metric point, half the pixel coordinates (up to center offset)
    assert (u - CAM.width / 2) == pytest.approx(2 * (u2 - half.width / 2))
    assert (v - CAM.height / 2) == pytest.approx(2 * (v2 - half.height / 2))


def test_render_zbuffer_and_depth_values():
    base = ObjectInstance(0, square(0.08), (0.0, 0.0, 0.0), is_target=True)
    top = ObjectInstance(1, square(0.04), (0.0, 0.0, 0.0), z_base=0.04)
    st = make_state([base, top])
    depth, masks, bin_bottom = render(st, CAM)
    md = masks_by_id(masks)
    # the stacked object hides the middle of the base
    assert not (md[0] & md[1]).any()
    cu, cv = CAM.project(0.0, 0.0)
    assert md[1][int(cv), int(cu)]
    assert depth[int(cv), int(cu)] == pytest.approx(CAM.camera_height - 0.08)
    # a point over the base but clear of the top object
    bu, bv = CAM.project(0.03, 0.0)
    assert md[0][int(bv), int(bu)]
    assert depth[int(bv), int(bu)] == pytest.approx(CAM.camera_height - 0.04)
    # empty floor reads the full camera height
    fu, fv = CAM.project(0.15, 0.15)
    assert depth[int(fv), int(fu)] == pytest.approx(CAM.camera_height)
    assert bin_bottom[int(fv), int(fu)]
    assert not bin_bottom[0, 0]  # image corner is outside the bin


def test_render_mask_areas_match_footprints():
    st = init_heap(CFG, 5, seed=4)
    depth, masks, _ = render(st, CAM)
    md = masks_by_id(masks)
    px_area = CAM.mpp ** 2
    # unoccluded top-layer object: pixel area approximates polygon area
    top_obj = max(st.objects, key=lambda o: o.z_top)
    import mechsearch.geometry as geo
    poly_area = abs(geo.polygon_area(top_obj.footprint()))
    assert visible_area(md[top_obj.id]) * px_area == pytest.approx(poly_area, rel=0.05)


def test_resample_matrix_partition_of_unity():
    for src, dst in [(CROP_SIDE, CROP_OUT), (10, 3), (7, 7)]:
        w = _resample_matrix(src, dst)
        assert w.shape == (dst, src)
        assert np.allclose(w.sum(axis=1), 1.0, atol=1e-12)
        assert (w >= 0).all()


def test_crop_conserves_mean():
    rng = np.random.default_rng(0)
    img = rng.random((480, 640))
    crop = crop_downscale(img, (320, 240), "depth")
    # area-average resampling preserves the window mean exactly
    win = img[240 - 110:240 + 110, 320 - 110:320 + 110]
    assert crop.grid.mean() == pytest.approx(win.mean(), abs=1e-12)
    assert crop.grid.shape == (40, 40)


def test_crop_padding_and_bounds():
    img = np.full((480, 640), 0.5)
    edge = crop_downscale(img, (5, 5), "depth", pad_value=0.9)
    assert edge.grid.max() <= 0.9 + 1e-12
    assert edge.grid[-1, -1] == pytest.approx(0.5)  # in-image corner
    assert edge.grid[0, 0] == pytest.approx(0.9)    # fully padded corner
    with pytest.raises(ValueError):
        crop_downscale(img, (-1, 10), "depth")
    with pytest.raises(ValueError):
        crop_downscale(img, (10, 480), "depth")
    # mask channel pads with zeros by default
    m = crop_downscale(np.ones((480, 640)), (0, 0), "mask")
    assert m.grid[0, 0] == 0.0


def test_mask_centroid():
    m = np.zeros((10, 10), dtype=bool)
    assert mask_centroid(m) is None
    m[2, 3] = m[2, 5] = True
    assert mask_centroid(m) == (4.0, 2.0)


def test_pgm16_roundtrip(tmp_path):
    depth = np.linspace(0.3, 0.5, 480 * 640).reshape(480, 640)
    p = tmp_path / "d.pgm"
    write_pgm16(depth, p)
    img = np.asarray(Image.open(p))
    assert img.shape == (480, 640)
    assert img.max() <= 65535 and img.min() >= 0
    expect = np.clip(np.round(depth * 10000.0), 0, 65535)
    assert np.array_equal(img.astype(np.float64), expect)


def test_pbm_roundtrip(tmp_path):
    rng = np.random.default_rng(1)
    mask = rng.random((33, 41)) < 0.4
    p = tmp_path / "m.pbm"
    write_pbm(mask, p)
    img = np.asarray(Image.open(p))
    # Pillow reads P4 as mode "1" with 255 = white; PBM stores 1 = black
    assert np.array_equal(img == 0, mask) or np.array_equal(img != 0, mask)
