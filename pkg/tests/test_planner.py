import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from adares.annotations import BoundingBox, DatasetManifest, ImageRecord
from adares.errors import DegenerateTarget, DimensionMismatch, MissingAltitude, ZeroAltitude
from adares.planner import (
    ReferenceSpec,
    ResizePlan,
    ResizePolicy,
    apply_resize,
    bilinear_resize,
    desired_gsd,
    dump_plans,
    inverse_transform_boxes,
    parse_plans,
    plan_dataset,
    plan_longer_edge,
    plan_resize,
    size_histogram,
    transform_boxes,
)

CAR = ReferenceSpec(0, 4.5, 32)
NO_CLAMP = ResizePolicy(stride=1, max_upscale=1e9, max_long_side_px=10**6, min_long_side_px=1)


def oracle_dims(altitude, source=(1000, 750)):
    """Exact-rational target dims for P0 and the car reference."""
    gsd = Fraction(10) / (Fraction(10) * 1000) * Fraction(altitude)
    scale = gsd / Fraction(45, 320)
    return scale, tuple(math.floor(s * scale + Fraction(1, 2)) for s in source)


@pytest.mark.parametrize(
    "spec, expected",
    [(CAR, 0.140625), (ReferenceSpec(1, 32.0, 32), 1.0), (ReferenceSpec(2, 0.5, 32), 0.015625)],
)
def test_desired_gsd(spec, expected):
    assert desired_gsd(spec) == expected


@pytest.mark.parametrize(
    "altitude, scale, dims",
    [("60", 0.426667, (427, 320)), ("140.625", 1.0, (1000, 750)), ("10", 0.071111, (71, 53))],
)
def test_plan_resize_examples(p0, altitude, scale, dims):
    exact_scale, exact_dims = oracle_dims(Fraction(altitude))
    assert exact_dims == dims
    assert float(exact_scale) == pytest.approx(scale, abs=1e-6)

    plan = plan_resize(p0, float(altitude), (1000, 750), desired_gsd(CAR), NO_CLAMP)
    assert (plan.target_width_px, plan.target_height_px) == dims
    assert plan.scale == pytest.approx(float(exact_scale), rel=1e-12)
    assert not plan.clamped


def test_plan_requires_positive_altitude(p0):
    with pytest.raises(ZeroAltitude):
        plan_resize(p0, 0.0, (1000, 750), 0.14)
    with pytest.raises(MissingAltitude):
        plan_resize(p0, None, (1000, 750), 0.14)


def test_stride_rounding_nearest_multiple(p0):
    # 427 x 320 -> nearest multiples of 32: 416 (427/32 = 13.34) x 320
    plan = plan_resize(p0, 60, (1000, 750), desired_gsd(CAR), ResizePolicy(stride=32))
    assert (plan.target_width_px, plan.target_height_px) == (416, 320)


def test_stride_minimum_one_stride(p0):
    plan = plan_resize(p0, 10, (1000, 750), desired_gsd(CAR), ResizePolicy(stride=128, min_long_side_px=1))
    assert (plan.target_width_px, plan.target_height_px) == (128, 128)


def test_upscale_clamp(p0):
    # native GSD 0.4 at 400 m against 0.140625 wants 2.84x
    plan = plan_resize(p0, 400, (1000, 750), desired_gsd(CAR))
    assert plan.clamped and plan.scale == 2.0
    assert (plan.target_width_px, plan.target_height_px) == (2000, 1500)


def test_max_side_clamp(p0):
    plan = plan_resize(p0, 250, (1000, 750), desired_gsd(CAR), ResizePolicy(max_long_side_px=1200))
    assert plan.clamped
    assert plan.target_long_side <= 1200
    assert (plan.target_width_px, plan.target_height_px) == (1200, 900)


def test_min_side_clamp(p0):
    plan = plan_resize(p0, 2, (1000, 750), desired_gsd(CAR), ResizePolicy(min_long_side_px=64))
    assert plan.clamped
    assert (plan.target_width_px, plan.target_height_px) == (64, 48)


def test_degenerate_target(p0):
    policy = ResizePolicy(stride=64, max_long_side_px=32, min_long_side_px=1)
    with pytest.raises(DegenerateTarget):
        plan_resize(p0, 60, (1000, 750), desired_gsd(CAR), policy)


def test_longer_edge_baseline():
    plan = plan_longer_edge("a", (1024, 768), 2048)
    assert (plan.target_width_px, plan.target_height_px) == (2048, 1536)
    plan = plan_longer_edge("b", (768, 1024), 1024)
    assert (plan.target_width_px, plan.target_height_px) == (768, 1024)


@settings(max_examples=300)
@given(st.floats(5, 200), st.sampled_from([1, 2, 8, 32]))
def test_reference_size_invariance(p0, altitude, stride):
    plan = plan_resize(p0, altitude, (1000, 750), desired_gsd(CAR), ResizePolicy(stride=stride, min_long_side_px=1))
    if plan.clamped:
        return
    from adares.camera import gsd_from_altitude

    source_len = 4.5 / gsd_from_altitude(p0, altitude, 1000)
    for axis_scale in (plan.scale_x, plan.scale_y):
        assert abs(source_len * axis_scale - 32) <= stride + 1


@given(st.floats(5, 139), st.floats(0.01, 60))
def test_scale_monotone_in_altitude(p0, altitude, delta):
    lo = plan_resize(p0, altitude, (1000, 750), desired_gsd(CAR))
    hi = plan_resize(p0, altitude + delta, (1000, 750), desired_gsd(CAR))
    assert hi.scale > lo.scale


def _record(image_id, altitude):
    return ImageRecord(image_id, f"{image_id}.pgm", 1000, 750, altitude, "bev")


def test_plan_dataset_histogram(p0):
    manifest = DatasetManifest(tuple(_record(i, a) for i, a in zip("abc", (10, 60, 140.625))), {0: "car"})
    plans, hist = plan_dataset(manifest, p0, CAR, NO_CLAMP)
    assert [p.image_id for p in plans] == ["a", "b", "c"]
    assert [p.target_long_side for p in plans] == [71, 427, 1000]
    assert hist.bin_width_px == 128
    assert hist.nonzero() == {0: 1, 384: 1, 896: 1}
    assert sum(n for _, n in hist.bins) == hist.total_images == 3


def test_plan_dataset_empty(p0):
    plans, hist = plan_dataset(DatasetManifest(), p0, CAR)
    assert plans == [] and hist.total_images == 0


def test_plan_dataset_identical_records(p0):
    manifest = DatasetManifest(tuple(_record(f"r{i}", 45.0) for i in range(5)))
    plans, hist = plan_dataset(manifest, p0, CAR)
    assert len({(p.target_width_px, p.target_height_px, p.scale) for p in plans}) == 1
    assert len(hist.nonzero()) == 1


def test_plan_dataset_parallel_keeps_order(p0):
    alts = np.linspace(12, 130, 40)
    manifest = DatasetManifest(tuple(_record(f"r{i:02d}", float(a)) for i, a in enumerate(alts[::-1])))
    serial, _ = plan_dataset(manifest, p0, CAR)
    parallel, _ = plan_dataset(manifest, p0, CAR, jobs=4)
    assert serial == parallel


def test_plan_dataset_annotates_errors(p0):
    manifest = DatasetManifest((_record("good", 50.0), _record("bad", 0.0)))
    with pytest.raises(ZeroAltitude) as info:
        plan_dataset(manifest, p0, CAR)
    assert info.value.image_id == "bad"
    assert "bad" in str(info.value)


def test_histogram_csv():
    plans = [ResizePlan(str(i), 1.0, w, 10, w, 10) for i, w in enumerate((5, 130, 131))]
    assert size_histogram(plans).to_csv() == "bin_lower_px,count\n0,1\n128,2\n"


def test_apply_resize_identity_bit_identical():
    rng = np.random.default_rng(0)
    img = rng.integers(0, 256, size=(750, 1000), dtype=np.uint8)
    plan = ResizePlan("x", 1.0, 1000, 750, 1000, 750)
    out = apply_resize(img, plan)
    assert out.dtype == img.dtype and np.array_equal(out, img)


@pytest.mark.parametrize("dims", [(427, 320), (71, 53), (1, 1), (1500, 1125)])
@pytest.mark.parametrize("value", [0.3, 0.7071, 1.0])
def test_apply_resize_preserves_constants(dims, value):
    img = np.full((750, 1000), value)
    out = apply_resize(img, ResizePlan("x", dims[0] / 1000, dims[0], dims[1], 1000, 750))
    assert out.shape == (dims[1], dims[0])
    assert np.all(out == value)


def test_checkerboard_downscale_to_single_pixel():
    # the one output pixel centre maps to the middle of the 2x2 grid: equal weights on all four
    img = np.array([[0.0, 1.0], [1.0, 0.0]])
    oracle = 0.25 * (img[0, 0] + img[0, 1] + img[1, 0] + img[1, 1])
    out = apply_resize(img, ResizePlan("x", 0.5, 1, 1, 2, 2))
    assert out.shape == (1, 1) and out[0, 0] == oracle == 0.5


def test_bilinear_matches_direct_formula():
    rng = np.random.default_rng(3)
    img = rng.random((9, 13))
    out = bilinear_resize(img, 5, 7)

    def direct(j, i):
        # independent per-pixel evaluation of the same half-pixel-centred kernel
        u = min(max((j + 0.5) * 13 / 5 - 0.5, 0), 12)
        v = min(max((i + 0.5) * 9 / 7 - 0.5, 0), 8)
        x0, y0 = int(math.floor(u)), int(math.floor(v))
        x1, y1 = min(x0 + 1, 12), min(y0 + 1, 8)
        a, b = u - x0, v - y0
        return ((1 - a) * (1 - b) * img[y0, x0] + a * (1 - b) * img[y0, x1]
                + (1 - a) * b * img[y1, x0] + a * b * img[y1, x1])

    expected = np.array([[direct(j, i) for j in range(5)] for i in range(7)])
    np.testing.assert_allclose(out, expected, rtol=0, atol=1e-12)


def test_apply_resize_dimension_mismatch():
    with pytest.raises(DimensionMismatch):
        apply_resize(np.zeros((10, 10)), ResizePlan("x", 1.0, 5, 5, 20, 10))


def test_apply_resize_multichannel():
    img = np.zeros((4, 6, 3), dtype=np.uint8)
    img[..., 1] = 200
    out = apply_resize(img, ResizePlan("x", 0.5, 3, 2, 6, 4))
    assert out.shape == (2, 3, 3) and np.all(out[..., 1] == 200) and np.all(out[..., 0] == 0)


A60 = ResizePlan("a60", 0.06 / 0.140625, 427, 320, 1000, 750)


def test_transform_boxes_example():
    (b,) = transform_boxes([BoundingBox(100, 100, 45, 30)], A60)
    assert (b.x_min, b.y_min, b.width, b.height) == pytest.approx((42.7, 42.6667, 19.215, 12.8), abs=1e-4)
    assert b.y_min == pytest.approx(100 * 320 / 750, rel=1e-12)


def test_inverse_transform_example():
    (b,) = inverse_transform_boxes([BoundingBox(42.7, 100 * 320 / 750, 19.215, 12.8)], A60)
    assert (b.x_min, b.y_min, b.width, b.height) == pytest.approx((100, 100, 45, 30), rel=1e-9)


def test_transform_identity_and_empty():
    ident = ResizePlan("i", 1.0, 640, 480, 640, 480)
    boxes = [BoundingBox(1.5, 2.5, 3, 4, 2)]
    assert transform_boxes(boxes, ident) == boxes
    assert transform_boxes([], A60) == []
    assert inverse_transform_boxes([], A60) == []


def test_round_trip_random_boxes():
    rng = np.random.default_rng(11)
    plans = [ResizePlan("p", 0, int(w), int(h), 1024, 768) for w, h in rng.integers(1, 3000, size=(20, 2))]
    for plan in plans:
        raw = rng.uniform([0, 0, 0.1, 0.1], [1000, 700, 300, 300], size=(50, 4))
        boxes = [BoundingBox(*row) for row in raw]
        back = inverse_transform_boxes(transform_boxes(boxes, plan), plan)
        for a, b in zip(boxes, back):
            np.testing.assert_allclose(
                (b.x_min, b.y_min, b.width, b.height), (a.x_min, a.y_min, a.width, a.height), rtol=1e-9
            )


def test_plans_jsonl_round_trip(p0):
    plans = [plan_resize(p0, a, (1000, 750), desired_gsd(CAR), image_id=f"i{a}") for a in (10, 33.3, 60)]
    text = dump_plans(plans)
    assert parse_plans(text) == plans
    assert set(__import__("json").loads(text.splitlines()[0])) == {
        "image_id", "scale", "target_w", "target_h", "source_w", "source_h", "clamped"
    }
