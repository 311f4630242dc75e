"""Occupancy ground truth from labelled lidar sweeps and tracked boxes.

The stages are: split each sweep into background and per-object points,
pool background in the world frame and objects in their body frames,
then per key frame vote voxels, paste objects, attach flow, densify from
unlabelled points, fill road holes and mask what cameras cannot see.
"""

from __future__ import annotations

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from occtk.classes import FREE, NUM_CLASSES, ROAD_CLASSES, UNKNOWN
from occtk.grid.spec import GridSpec, VoxelGrid, points_to_voxels
from occtk.grid.transforms import Box3D, Pose, PointCloud, box_at
from occtk.occgen.config import FlowConfig, Frame, GenConfig
from occtk.occgen.visibility import visibility_mask


class GenerationError(ValueError):
    """A pipeline stage failed; the message carries the frame index."""


# --- splitting and accumulation ---------------------------------------------

def split_points(cloud: PointCloud, boxes) -> tuple[PointCloud, dict[str, PointCloud]]:
    """Separate points inside boxes from the rest.

    ``cloud`` and ``boxes`` must share a frame.  A point inside several boxes
    goes to the one whose center is nearest, ties to the smaller track id.
    """
    boxes = sorted(boxes, key=lambda b: b.track_id)
    n = len(cloud)
    if not boxes or n == 0:
        return cloud, {}
    owner = np.full(n, -1, np.int64)
    best = np.full(n, np.inf)
    for i, box in enumerate(boxes):
        inside = box.contains(cloud.points)
        dist = np.sum((cloud.points - box.center) ** 2, axis=1)
        # strict < keeps the earlier (smaller) track id on equal distance
        take = inside & (dist < best)
        owner[take] = i
        best[take] = dist[take]
    objects = {}
    for i, box in enumerate(boxes):
        mask = owner == i
        if mask.any():
            objects[box.track_id] = cloud.subset(mask)
    return cloud.subset(owner < 0), objects


def build_tracks(frames) -> dict[str, list[Box3D]]:
    """Key-frame boxes grouped by track id, time-sorted."""
    tracks: dict[str, list[Box3D]] = {}
    for f in frames:
        if not f.is_key_frame:
            continue
        for b in f.boxes:
            tracks.setdefault(b.track_id, []).append(b.replace(timestamp=f.timestamp))
    for tid, keys in tracks.items():
        keys.sort(key=lambda b: b.timestamp)
        for a, b in zip(keys, keys[1:]):
            if a.timestamp == b.timestamp:
                raise ValueError(f"track {tid!r} has two boxes at t={a.timestamp}")
    return tracks


def boxes_at(tracks: dict[str, list[Box3D]], timestamp: int, extrapolate: bool = False):
    """World boxes of every track at ``timestamp``.

    Returns ``(in_span, outside)``: interpolated boxes for tracks whose
    key-frame span covers the time, and (when ``extrapolate``) constant-velocity
    extrapolations for the rest, used only to cut their points out.
    """
    inside, outside = {}, {}
    for tid, keys in tracks.items():
        box = box_at(keys, timestamp)
        if box is not None:
            inside[tid] = box
        elif extrapolate:
            ref = keys[0] if timestamp < keys[0].timestamp else keys[-1]
            dt = (timestamp - ref.timestamp) * 1e-6
            shift = np.array([ref.velocity[0] * dt, ref.velocity[1] * dt, 0.0])
            outside[tid] = ref.replace(center=ref.center + shift, timestamp=timestamp)
    return inside, outside


def world_cloud(frame: Frame) -> PointCloud:
    """The frame's points in the world frame, labelled on key frames and 255 otherwise."""
    pc = frame.point_cloud
    pts = frame.sensor_to_world.apply(pc.points)
    if frame.is_key_frame and pc.labels is not None:
        labels = pc.labels
    else:
        labels = np.full(len(pc), UNKNOWN, np.uint8)
    return PointCloud(pts, labels, frame.timestamp, "world", pc.intensity)


@dataclass
class Accumulation:
    background: PointCloud
    objects: dict[str, PointCloud]
    track_labels: dict[str, int]
    dropped_points: int = 0


def accumulate(frames, tracks=None) -> Accumulation:
    """Split every frame once and pool background (world) and objects (body frames)."""
    frames = list(frames)
    if tracks is None:
        tracks = build_tracks(frames)
    bg_parts = []
    obj_parts: dict[str, list[np.ndarray]] = {tid: [] for tid in tracks}
    dropped = 0
    labels = {tid: keys[0].label for tid, keys in tracks.items()}
    for i, f in enumerate(frames):
        try:
            pc = world_cloud(f)
            inside, outside = boxes_at(tracks, f.timestamp, extrapolate=True)
            bg, objs = split_points(pc, list(inside.values()) + list(outside.values()))
        except Exception as exc:
            raise GenerationError(f"frame {i}: {exc}") from exc
        bg_parts.append(bg)
        for tid, cloud in objs.items():
            if tid in inside:
                obj_parts[tid].append(inside[tid].to_body(cloud.points))
            else:
                dropped += len(cloud)
    objects = {}
    for tid, parts in obj_parts.items():
        pts = np.concatenate(parts) if parts else np.zeros((0, 3))
        objects[tid] = PointCloud(pts, np.full(len(pts), labels[tid], np.uint8), frame="object")
    background = _concat(bg_parts)
    return Accumulation(background, objects, labels, dropped)


def _concat(clouds) -> PointCloud:
    clouds = list(clouds)
    if not clouds:
        return PointCloud.empty("world")
    return PointCloud(
        np.concatenate([c.points for c in clouds]),
        np.concatenate([c.labels for c in clouds]),
        frame="world",
    )


def accumulate_background(frames, boxes_per_frame=None) -> PointCloud:
    """Union of every frame's non-object points in world coordinates.

    Key-frame points keep their labels; intermediate-frame points get 255.
    ``boxes_per_frame`` optionally overrides the world boxes cut out of each
    frame (by default interpolated from the key-frame tracks).
    """
    frames = list(frames)
    if boxes_per_frame is None:
        return accumulate(frames).background
    parts = []
    for f, boxes in zip(frames, boxes_per_frame):
        bg, _ = split_points(world_cloud(f), boxes)
        parts.append(bg)
    return _concat(parts)


def accumulate_foreground(frames, tracks=None) -> tuple[dict[str, PointCloud], int]:
    """Object points pooled per track in its body frame.

    Returns the pooled clouds and the number of object points dropped
    because their frame lay outside the track's key-frame span.
    """
    acc = accumulate(frames, tracks)
    return acc.objects, acc.dropped_points


# --- voxel stages -------------------------------------------------------------

def _vote(flat: np.ndarray, votes: np.ndarray, n_options: int):
    """Per cell, the most common vote (ties to the smaller value) and the vote count."""
    keys = flat * n_options + votes
    uniq, counts = np.unique(keys, return_counts=True)
    cell, choice = np.divmod(uniq, n_options)
    order = np.lexsort((choice, -counts, cell))
    cell, choice = cell[order], choice[order]
    first = np.ones(len(cell), bool)
    first[1:] = cell[1:] != cell[:-1]
    totals = np.add.reduceat(counts[order], np.flatnonzero(first))
    return cell[first], choice[first], totals


def voxelize_majority(points: PointCloud, spec: GridSpec, min_points: int = 1) -> VoxelGrid:
    """Label each voxel by the most frequent known label among its points.

    Labels 0 and 255 do not vote.  A voxel with fewer than ``min_points``
    voting points stays free.
    """
    if points.labels is None:
        raise ValueError("voxelize_majority needs labelled points")
    labels = np.zeros(spec.dims, np.uint8)
    idx, valid = points_to_voxels(points.points, spec)
    lab = points.labels.astype(np.int64)
    keep = valid & (lab >= 1) & (lab <= NUM_CLASSES)
    if keep.any():
        flat = np.ravel_multi_index(idx[keep].T, spec.dims)
        cell, choice, totals = _vote(flat, lab[keep], NUM_CLASSES + 1)
        ok = totals >= min_points
        labels.reshape(-1)[cell[ok]] = choice[ok]
    return VoxelGrid(spec, labels)


def place_objects(grid: VoxelGrid, objects: dict[str, PointCloud], boxes, grid_from_world: Pose | None = None,
                  min_points: int = 1) -> VoxelGrid:
    """Paste body-frame object clouds at their boxes and overwrite the grid there.

    ``boxes`` maps track id to the world box at the grid's timestamp (a
    sequence of boxes is accepted too).  Each voxel goes to the track with
    the most points in it, ties to the smaller track id.  The label is the
    box's class, and the owning track is recorded in the instance sidecar.
    """
    if not isinstance(boxes, dict):
        boxes = {b.track_id: b for b in boxes}
    to_grid = grid_from_world or Pose()
    spec = grid.spec
    tracks = tuple(sorted(t for t in boxes if t in objects and len(objects[t])))
    labels = grid.labels.copy()
    instances = np.full(spec.dims, -1, np.int32)
    flats, owners = [], []
    for i, tid in enumerate(tracks):
        world = boxes[tid].from_body(objects[tid].points)
        idx, valid = points_to_voxels(to_grid.apply(world), spec)
        flats.append(np.ravel_multi_index(idx[valid].T, spec.dims))
        owners.append(np.full(int(valid.sum()), i, np.int64))
    if flats and sum(len(f) for f in flats):
        cell, owner, totals = _vote(np.concatenate(flats), np.concatenate(owners), len(tracks))
        ok = totals >= min_points
        cell, owner = cell[ok], owner[ok]
        track_label = np.array([boxes[t].label for t in tracks], np.uint8)
        labels.reshape(-1)[cell] = track_label[owner]
        instances.reshape(-1)[cell] = owner
    return grid.replace(labels=labels, instances=instances, instance_tracks=tracks)


def annotate_flow(grid: VoxelGrid, boxes, cfg: FlowConfig | None = None,
                  grid_from_world: Pose | None = None) -> VoxelGrid:
    """Give every object voxel its box's planar velocity; everything else gets zero.

    Velocities are rotated into the grid frame by ``grid_from_world``.
    ``cfg`` only sets the moving threshold used by :func:`moving_mask`.
    """
    if not isinstance(boxes, dict):
        boxes = {b.track_id: b for b in boxes}
    flow = np.zeros(grid.spec.dims + (2,), np.float32)
    if grid.instances is None or not grid.instance_tracks:
        return grid.replace(flow=flow)
    rot = (grid_from_world or Pose()).matrix[:2, :2]
    vel = np.zeros((len(grid.instance_tracks), 2))
    for i, tid in enumerate(grid.instance_tracks):
        v = boxes[tid].velocity
        if not np.all(np.isfinite(v)):
            raise ValueError(f"track {tid!r}: non-finite box velocity {v.tolist()}")
        vel[i] = rot @ v
    inst = np.where(grid.labels != FREE, grid.instances, -1)
    has = inst >= 0
    flow[has] = vel[inst[has]]
    return grid.replace(flow=flow)


def moving_mask(grid: VoxelGrid, cfg: FlowConfig | None = None) -> np.ndarray:
    """Occupied voxels whose flow speed reaches the moving threshold."""
    cfg = cfg or FlowConfig()
    if grid.flow is None:
        return np.zeros(grid.spec.dims, bool)
    speed = np.hypot(grid.flow[..., 0].astype(float), grid.flow[..., 1].astype(float))
    return grid.occupied & (grid.labels != UNKNOWN) & (speed >= cfg.velocity_threshold)


def _class_counts(labels: np.ndarray, classes, kernel: np.ndarray) -> np.ndarray:
    """Neighbour counts per class, stacked on a new leading axis."""
    out = np.empty((len(classes),) + labels.shape, np.int32)
    for i, c in enumerate(classes):
        out[i] = ndimage.convolve((labels == c).astype(np.int32), kernel, mode="constant", cval=0)
    return out


def densify_from_unlabeled(grid: VoxelGrid, unlabeled: PointCloud, radius: int = 1,
                           min_neighbors: int = 1) -> VoxelGrid:
    """Label free voxels holding unlabelled points from their labelled neighbours.

    Neighbours are the voxels within Chebyshev distance ``radius``.  With at
    least ``min_neighbors`` labelled neighbours the voxel takes their
    majority class (ties to the smaller code); otherwise it stays free and
    its points are treated as noise.
    """
    if radius < 1:
        raise ValueError("radius must be >= 1")
    spec = grid.spec
    idx, valid = points_to_voxels(unlabeled.points, spec)
    target = np.zeros(spec.dims, bool)
    target[tuple(idx[valid].T)] = True
    target &= grid.labels == FREE
    if not target.any():
        return grid
    present = [c for c in range(1, NUM_CLASSES + 1) if np.any(grid.labels == c)]
    if not present:
        return grid
    size = 2 * radius + 1
    kernel = np.ones((size, size, size), np.int32)
    kernel[radius, radius, radius] = 0
    counts = _class_counts(grid.labels, present, kernel)[:, target]
    total = counts.sum(axis=0)
    winner = np.asarray(present, np.uint8)[np.argmax(counts, axis=0)]
    labels = grid.labels.copy()
    labels[target] = np.where(total >= min_neighbors, winner, FREE)
    return grid.replace(labels=labels)


def fill_holes(grid: VoxelGrid, classes=ROAD_CLASSES, min_neighbors: int = 5) -> VoxelGrid:
    """One simultaneous pass filling free voxels ringed by a road-like class.

    A free voxel becomes class L when at least ``min_neighbors`` of its 8
    same-height neighbours carry L.  If several classes qualify the most
    frequent wins, ties to the smaller code.
    """
    classes = sorted(int(c) for c in classes)
    if not classes:
        return grid
    kernel = np.ones((3, 3, 1), np.int32)
    kernel[1, 1, 0] = 0
    counts = _class_counts(grid.labels, classes, kernel)
    best = np.argmax(counts, axis=0)
    best_count = np.take_along_axis(counts, best[None], axis=0)[0]
    fill = (grid.labels == FREE) & (best_count >= min_neighbors)
    if not fill.any():
        return grid
    labels = grid.labels.copy()
    labels[fill] = np.asarray(classes, np.uint8)[best[fill]]
    return grid.replace(labels=labels)


# --- whole scene --------------------------------------------------------------

@dataclass
class GenerationReport:
    config: dict
    key_frames: int
    frames: int
    background_points: int
    object_points: dict
    dropped_points: int
    seconds: float
    per_frame: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "config": self.config,
            "key_frames": self.key_frames,
            "frames": self.frames,
            "background_points": self.background_points,
            "object_points": self.object_points,
            "dropped_points": self.dropped_points,
            "seconds": self.seconds,
            "per_frame": self.per_frame,
        }


def _check_frames(frames) -> None:
    for i, (a, b) in enumerate(zip(frames, frames[1:])):
        if not a.timestamp < b.timestamp:
            raise GenerationError(f"frame {i + 1}: timestamp {b.timestamp} not after {a.timestamp}")


def key_frame_grid(frame: Frame, acc: Accumulation, tracks, config: GenConfig) -> VoxelGrid:
    """Run the per-key-frame stages on pooled points."""
    spec = config.grid
    grid_from_world = frame.ego_pose.inverse()
    bg = acc.background
    local = PointCloud(grid_from_world.apply(bg.points), bg.labels, frame="ego")
    grid = voxelize_majority(local, spec, config.min_points_per_voxel)
    boxes = {b.track_id: b for b in frame.boxes if b.track_id in tracks}
    grid = place_objects(grid, acc.objects, boxes, grid_from_world, config.min_points_per_voxel)
    grid = annotate_flow(grid, boxes, config.flow, grid_from_world)
    unlabeled = local.subset(local.labels == UNKNOWN)
    grid = densify_from_unlabeled(grid, unlabeled, config.densify_neighborhood, config.densify_min_neighbors)
    grid = fill_holes(grid, config.hole_fill_classes, config.hole_fill_min_neighbors)
    if config.visibility and frame.cameras:
        grid = visibility_mask(grid, frame.cameras)
    return grid


def run_generation(frames, config: GenConfig | None = None, workers: int = 1):
    """Generate one grid per key frame; returns ``(grids, report)``.

    Grids are expressed in each key frame's ego frame.  Output does not
    depend on ``workers``.
    """
    config = config or GenConfig()
    frames = list(frames)
    t0 = time.perf_counter()
    _check_frames(frames)
    try:
        tracks = build_tracks(frames)
    except ValueError as exc:
        raise GenerationError(str(exc)) from exc
    acc = accumulate(frames, tracks)
    keys = [i for i, f in enumerate(frames) if f.is_key_frame]

    def one(i):
        try:
            return key_frame_grid(frames[i], acc, tracks, config)
        except GenerationError:
            raise
        except Exception as exc:
            raise GenerationError(f"frame {i}: {exc}") from exc

    if workers > 1 and len(keys) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            grids = list(pool.map(one, keys))
    else:
        grids = [one(i) for i in keys]
    report = GenerationReport(
        config=config.to_dict(),
        key_frames=len(keys),
        frames=len(frames),
        background_points=len(acc.background),
        object_points={tid: len(c) for tid, c in sorted(acc.objects.items())},
        dropped_points=acc.dropped_points,
        seconds=time.perf_counter() - t0,
        per_frame=[
            {"frame": i, "timestamp": frames[i].timestamp, "occupied": int(g.occupied.sum())}
            for i, g in zip(keys, grids)
        ],
    )
    return grids, report


def generate_scene(frames, config: GenConfig | None = None, workers: int = 1) -> list[VoxelGrid]:
    return run_generation(frames, config, workers)[0]
