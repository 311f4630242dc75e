import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from occtk.classes import CAR, DRIVEABLE_SURFACE, MANMADE, TRUCK, UNKNOWN
from occtk.grid import Box3D, CameraModel, GridSpec, Pose, PointCloud, VoxelGrid
from occtk.occgen import (
    FlowConfig,
    Frame,
    GenConfig,
    accumulate_background,
    accumulate_foreground,
    annotate_flow,
    densify_from_unlabeled,
    fill_holes,
    generate_scene,
    moving_mask,
    place_objects,
    ray_clear,
    run_generation,
    split_points,
    visibility_mask,
    voxelize_majority,
)

SMALL = GridSpec((0.0, 0.0, 0.0), 1.0, (8, 8, 4))


def cloud(points, labels=None, frame="world"):
    return PointCloud(np.asarray(points, float).reshape(-1, 3), labels, frame=frame)


# --- split / accumulate ---------------------------------------------------------

def test_split_single_point_and_no_boxes():
    box = Box3D([0, 0, 0], [2, 2, 2], track_id="a")
    bg, objs = split_points(cloud([[0.5, 0, 0]], [CAR]), [box])
    assert len(bg) == 0 and len(objs["a"]) == 1
    bg, objs = split_points(cloud([[0.5, 0, 0], [9, 9, 9]], [1, 2]), [])
    assert len(bg) == 2 and objs == {}


def test_split_overlap_nearest_center_then_track_id():
    a = Box3D([0, 0, 0], [4, 4, 4], track_id="b")
    b = Box3D([1, 0, 0], [4, 4, 4], track_id="a")
    _, objs = split_points(cloud([[0.9, 0, 0]]), [a, b])
    assert list(objs) == ["a"]
    c = Box3D([-1, 0, 0], [4, 4, 4], track_id="z")
    _, objs = split_points(cloud([[0.0, 0, 0]]), [c, b])
    assert list(objs) == ["a"]


@settings(max_examples=30)
@given(st.integers(0, 2**31))
def test_split_partitions_points(seed):
    rng = np.random.default_rng(seed)
    pts = rng.uniform(-5, 5, (200, 3))
    boxes = [Box3D(rng.uniform(-3, 3, 3), rng.uniform(0.5, 4, 3), rng.uniform(-3, 3), track_id=str(i))
             for i in range(4)]
    bg, objs = split_points(cloud(pts, np.arange(200) % 200), boxes)
    got = np.concatenate([bg.labels] + [o.labels for o in objs.values()])
    assert len(got) == 200 and len(np.unique(got)) == 200


def _frame(points, t, ego=(0, 0, 0), key=True, labels=None, boxes=()):
    return Frame(cloud(points, labels, "sensor"), Pose(np.asarray(ego, float)), Pose(), boxes, key, (), t)


def test_accumulate_background_examples():
    f = _frame([[1, 2, 3]], 0, labels=[MANMADE])
    bg = accumulate_background([f])
    assert np.array_equal(bg.points, [[1, 2, 3]]) and bg.labels.tolist() == [MANMADE]
    f1 = _frame([[1, 0, 0]], 0, labels=[MANMADE])
    f2 = _frame([[1, 0, 0]], 1, ego=(10, 0, 0), key=False)
    bg = accumulate_background([f1, f2])
    assert np.array_equal(bg.points, [[1, 0, 0], [11, 0, 0]])
    assert bg.labels.tolist() == [MANMADE, UNKNOWN]
    rev = accumulate_background([f2, f1], boxes_per_frame=[(), ()])
    assert sorted(map(tuple, rev.points)) == sorted(map(tuple, bg.points))


def test_accumulate_foreground_body_frame():
    box = Box3D([5, 0, 0], [4, 4, 4], math.pi / 2, label=CAR, track_id="t")
    objs, dropped = accumulate_foreground([_frame([[5, 0.5, 0]], 0, boxes=[box])])
    assert np.allclose(objs["t"].points, [[0.5, 0, 0]]) and dropped == 0
    assert objs["t"].labels.tolist() == [CAR]


def test_accumulate_foreground_motion_compensation():
    k0 = Box3D([0, 0, 0], [2, 2, 2], label=CAR, track_id="t", velocity=(2, 0), timestamp=0)
    k1 = k0.replace(center=[2, 0, 0], timestamp=1_000_000)
    glued = np.array([[0.3, -0.2, 0.1]])
    frames = [
        _frame(glued, 0, boxes=[k0]),
        _frame(glued + [1, 0, 0], 500_000, key=False),
        _frame(glued + [2, 0, 0], 1_000_000, boxes=[k1]),
    ]
    objs, _ = accumulate_foreground(frames)
    assert np.allclose(objs["t"].points, np.repeat(glued, 3, axis=0))


def test_points_outside_track_span_dropped_and_counted():
    k0 = Box3D([0, 0, 0], [2, 2, 2], label=CAR, track_id="t", velocity=(1, 0))
    frames = [
        _frame([[0, 0, 0]], 0, boxes=[k0]),
        _frame([[1.0, 0, 0], [8, 8, 0]], 1_000_000, key=False),
    ]
    objs, dropped = accumulate_foreground(frames)
    assert dropped == 1 and len(objs["t"]) == 1
    bg = accumulate_background(frames)
    assert np.array_equal(bg.points, [[8, 8, 0]])


# --- voxel stages -----------------------------------------------------------------

def test_voxelize_majority_examples():
    g = voxelize_majority(cloud([[0.5, 0.5, 0.5]] * 2 + [[0.2, 0.2, 0.2]], [CAR, CAR, DRIVEABLE_SURFACE]), SMALL)
    assert g.labels[0, 0, 0] == CAR
    g = voxelize_majority(cloud([[0.5, 0.5, 0.5], [0.6, 0.5, 0.5]], [TRUCK, CAR]), SMALL)
    assert g.labels[0, 0, 0] == CAR
    assert g.labels.sum() == CAR
    g = voxelize_majority(cloud([[0.5, 0.5, 0.5]] * 3, [UNKNOWN] * 3), SMALL)
    assert not g.occupied.any()
    g = voxelize_majority(cloud([[0.5, 0.5, 0.5]], [CAR]), SMALL, min_points=2)
    assert not g.occupied.any()


@settings(max_examples=30)
@given(st.integers(0, 2**31))
def test_voxelize_order_independent(seed):
    rng = np.random.default_rng(seed)
    pts = rng.uniform(0, 3, (300, 3))
    lab = rng.integers(1, 5, 300)
    perm = rng.permutation(300)
    a = voxelize_majority(cloud(pts, lab), SMALL)
    b = voxelize_majority(cloud(pts[perm], lab[perm]), SMALL)
    assert a == b


def _car_object(points):
    return {"t": cloud(points, [CAR] * len(points), "object")}


def test_place_objects_shift_and_precedence():
    base = voxelize_majority(cloud([[2.5, 2.5, 0.5]], [DRIVEABLE_SURFACE]), SMALL)
    objs = _car_object([[0, 0, 0]])
    box = Box3D([2.5, 2.5, 0.5], [1, 1, 1], label=CAR, track_id="t")
    g0 = place_objects(base, objs, [box])
    assert g0.labels[2, 2, 0] == CAR and g0.instances[2, 2, 0] == 0
    g1 = place_objects(base, objs, [box.replace(center=[3.5, 2.5, 0.5])])
    assert g1.labels[3, 2, 0] == CAR and g1.labels[2, 2, 0] == DRIVEABLE_SURFACE
    assert np.array_equal(np.argwhere(g1.instances >= 0), np.argwhere(g0.instances >= 0) + [1, 0, 0])


def test_annotate_flow_and_moving_threshold():
    objs = {"a": cloud([[0, 0, 0]], [CAR], "object"), "b": cloud([[0, 0, 0]], [CAR], "object")}
    boxes = [Box3D([0.5, 0.5, 0.5], [1, 1, 1], label=CAR, track_id="a", velocity=(1.0, 0.5)),
             Box3D([4.5, 4.5, 0.5], [1, 1, 1], label=CAR, track_id="b", velocity=(0.1, 0.0))]
    base = voxelize_majority(cloud([[6.5, 6.5, 0.5]], [MANMADE]), SMALL)
    g = annotate_flow(place_objects(base, objs, boxes), boxes, FlowConfig())
    assert g.flow[0, 0, 0].tolist() == [1.0, 0.5]
    assert g.flow[4, 4, 0].tolist() == pytest.approx([0.1, 0.0])
    assert g.flow[6, 6, 0].tolist() == [0.0, 0.0]
    moving = moving_mask(g)
    assert moving[0, 0, 0] and not moving[4, 4, 0] and not moving[6, 6, 0]
    with pytest.raises(ValueError, match="non-finite"):
        annotate_flow(g, [boxes[0].replace(velocity=(np.nan, 0)), boxes[1]])


def test_flow_rotated_into_grid_frame():
    objs = {"a": cloud([[0, 0, 0]], [CAR], "object")}
    box = Box3D([0.5, 0.5, 0.5], [1, 1, 1], label=CAR, track_id="a", velocity=(1.0, 0.0))
    to_grid = Pose.from_yaw(math.pi / 2)
    g = place_objects(VoxelGrid.empty(GridSpec((-4, -4, 0), 1.0, (8, 8, 2))), objs, [box], to_grid)
    g = annotate_flow(g, [box], grid_from_world=to_grid)
    assert np.allclose(g.flow[g.instances >= 0], [[0.0, 1.0]], atol=1e-7)


def test_densify_examples():
    labels = np.zeros(SMALL.dims, np.uint8)
    labels[1, 1, 0] = labels[2, 1, 0] = labels[3, 1, 0] = DRIVEABLE_SURFACE
    grid = VoxelGrid(SMALL, labels)
    pt = cloud([[2.5, 2.5, 0.5]], [UNKNOWN])
    out = densify_from_unlabeled(grid, pt, 1, 1)
    assert out.labels[2, 2, 0] == DRIVEABLE_SURFACE
    far = densify_from_unlabeled(grid, cloud([[6.5, 6.5, 2.5]], [UNKNOWN]), 1, 1)
    assert far == grid
    assert densify_from_unlabeled(grid, pt, 1, 4) == grid


@settings(max_examples=25)
@given(st.integers(0, 2**31))
def test_densify_and_fill_never_touch_labelled(seed):
    rng = np.random.default_rng(seed)
    labels = rng.choice([0, 0, 0, CAR, DRIVEABLE_SURFACE, 13], size=SMALL.dims).astype(np.uint8)
    grid = VoxelGrid(SMALL, labels)
    pts = rng.uniform(0, 8, (100, 3)) * [1, 1, 0.5]
    d = densify_from_unlabeled(grid, cloud(pts, [UNKNOWN] * 100), 1, 1)
    perm = rng.permutation(100)
    assert d == densify_from_unlabeled(grid, cloud(pts[perm], [UNKNOWN] * 100), 1, 1)
    f = fill_holes(grid, min_neighbors=3)
    for out in (d, f):
        assert np.array_equal(out.labels[labels != 0], labels[labels != 0])


def test_fill_holes_examples():
    labels = np.zeros(SMALL.dims, np.uint8)
    labels[1:4, 1:4, 0] = DRIVEABLE_SURFACE
    labels[2, 2, 0] = 0
    out = fill_holes(VoxelGrid(SMALL, labels))
    assert out.labels[2, 2, 0] == DRIVEABLE_SURFACE
    # a free cell outside the plate sees at most 3 neighbours
    assert out.labels[0, 0, 0] == 0 and out.labels[4, 2, 0] == 0
    cars = np.where(labels == DRIVEABLE_SURFACE, CAR, 0).astype(np.uint8)
    assert fill_holes(VoxelGrid(SMALL, cars)) == VoxelGrid(SMALL, cars)


# --- visibility ---------------------------------------------------------------------

def test_ray_clear_occlusion_and_first_hit():
    occ = np.zeros((8, 1, 1), bool)
    occ[3, 0, 0] = occ[5, 0, 0] = True
    g0 = [0.5, 0.5, 0.5]
    assert ray_clear(occ, g0, [[3, 0, 0], [2, 0, 0], [4, 0, 0], [6, 0, 0]]).tolist() == [True, True, False, False]


def test_ray_clear_edge_tie_steps_lowest_axis():
    occ = np.zeros((3, 3, 1), bool)
    occ[1, 0, 0] = True
    # from the center of (0,0) to (1,1) the ray crosses the shared corner exactly
    assert not ray_clear(occ, [0.5, 0.5, 0.5], [[1, 1, 0]])[0]
    occ[:] = False
    occ[0, 1, 0] = True
    assert ray_clear(occ, [0.5, 0.5, 0.5], [[1, 1, 0]])[0]


def test_ray_clear_from_outside_volume():
    occ = np.zeros((4, 4, 4), bool)
    occ[0, 2, 2] = True
    assert not ray_clear(occ, [-5.0, 2.5, 2.5], [[3, 2, 2]])[0]
    assert ray_clear(occ, [-5.0, 2.5, 2.5], [[0, 2, 2]])[0]


def test_visibility_mask_camera_frustum():
    spec = GridSpec((-4, -4, -1), 1.0, (8, 8, 2))
    labels = np.zeros(spec.dims, np.uint8)
    labels[6, 4, 0] = MANMADE
    cam = CameraModel.looking(0.0, (0.0, 0.0, 0.0), fov_deg=90, width=200, height=200)
    vis = visibility_mask(VoxelGrid(spec, labels), [cam]).visibility
    assert vis[6, 4, 0] and not vis[7, 4, 0]
    assert not vis[0, 4, 0]  # behind the camera
    with pytest.raises(ValueError):
        visibility_mask(VoxelGrid(spec, labels), [])


# --- whole scene ----------------------------------------------------------------------

def test_generate_empty_frames_all_free():
    frames = [_frame(np.zeros((0, 3)), t, key=True) for t in (0, 1)]
    grids = generate_scene(frames, GenConfig(grid=SMALL))
    assert len(grids) == 2 and not any(g.occupied.any() for g in grids)


def test_generate_plane_and_moving_cube():
    spec = GridSpec((-4.0, -4.0, -1.0), 0.5, (16, 16, 4))
    rng = np.random.default_rng(0)
    cube = Box3D([-2.0, 0.0, 0.0], [1.0, 1.0, 1.0], label=CAR, track_id="c", velocity=(2.0, 0.0))
    frames = []
    for k, t in enumerate(range(0, 1_000_001, 250_000)):
        key = k % 2 == 0
        box = cube.replace(center=cube.center + [2.0 * t * 1e-6, 0, 0], timestamp=t)
        plane = np.column_stack([rng.uniform(-4, 4, (4000, 2)), np.full(4000, -0.8)])
        body = rng.uniform(-0.49, 0.49, (500, 3))
        pts = np.vstack([plane, box.from_body(body)])
        lab = np.r_[np.full(4000, DRIVEABLE_SURFACE), np.full(500, CAR)]
        frames.append(Frame(cloud(pts, lab if key else None, "sensor"), Pose(), Pose(),
                            [box] if key else (), key, (), t))
    grids = generate_scene(frames, GenConfig(grid=spec, visibility=False))
    for g, f in zip(grids, [f for f in frames if f.is_key_frame]):
        assert (g.labels[:, :, 0] == DRIVEABLE_SURFACE).all()
        b = f.boxes[0]
        cells = np.argwhere(g.labels == CAR)
        lo = np.floor((b.center - 0.5 - spec.origin) / 0.5)
        assert (cells.min(0) == lo).all() and len(cells) == 8
        assert np.allclose(g.flow[g.labels == CAR], [2.0, 0.0])


def test_generate_deterministic_across_workers():
    rng = np.random.default_rng(1)
    frames = []
    for k in range(4):
        pts = rng.uniform([-3, -3, -1], [3, 3, 1], (2000, 3))
        frames.append(_frame(pts, k * 100_000, key=True, labels=rng.integers(1, 17, 2000)))
    spec = GridSpec((-4, -4, -1), 0.5, (16, 16, 4))
    a, _ = run_generation(frames, GenConfig(grid=spec), workers=1)
    b, _ = run_generation(frames, GenConfig(grid=spec), workers=4)
    assert all(x == y for x, y in zip(a, b))


def test_generation_error_names_frame():
    box = Box3D([0, 0, 0], [1, 1, 1], label=CAR, track_id="t", velocity=(np.inf, 0))
    frames = [_frame([[0, 0, 0]], 0, boxes=[box])]
    with pytest.raises(ValueError, match="frame 0"):
        generate_scene(frames, GenConfig(grid=SMALL))
    with pytest.raises(ValueError, match="frame 1"):
        generate_scene([_frame([[0, 0, 0]], 5), _frame([[0, 0, 0]], 5)], GenConfig(grid=SMALL))
