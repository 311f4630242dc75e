"""Procedural driving scenes with exact boxes and analytic occupancy.

A scene is a flat ground (road, sidewalk and terrain strips), two long
walls, a few poles and bushes, and one to three vehicles driving straight
at constant speed in two opposing lanes.  Lidar sweeps sample every
surface within range around a slowly moving ego vehicle.  Because the
generator knows which surface produced each point, it can say exactly
what a perfect annotator should recover in each key frame.

The analytic ground truth for a key frame, from the noise-free sweeps:

* a voxel holding labelled points that all agree takes that label;
* a voxel holding points of several labels, only unlabelled points, or a
  point within 1e-6 m of one of its faces is unknown (255);
* a voxel crossed by a sampled surface but holding no point is unknown;
* every other voxel is free.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from occtk.classes import (
    BICYCLE,
    BUS,
    CAR,
    CONSTRUCTION_VEHICLE,
    DRIVEABLE_SURFACE,
    MANMADE,
    MOTORCYCLE,
    SIDEWALK,
    TERRAIN,
    TRUCK,
    UNKNOWN,
    VEGETATION,
)
from occtk.grid.spec import GridSpec, VoxelGrid, points_to_voxels
from occtk.grid.transforms import Box3D, CameraModel, Pose, PointCloud
from occtk.occgen.config import Frame
from occtk.occgen.visibility import visibility_mask

GROUND_Z = -1.9
OBJECT_BOTTOM = -1.4  # vehicles hover 0.5 m above ground so no ground point falls in a box
ROAD_HALF_WIDTH = 4.0
SIDEWALK_HALF_WIDTH = 7.0
WALL_Y = 10.0
SHRINK = 0.96  # object points are sampled on a slightly shrunk box, strictly inside the annotation
BOUNDARY_EPS = 1e-6

VEHICLE_SIZES = {
    CAR: (4.2, 1.9, 1.6),
    TRUCK: (7.0, 2.2, 2.8),
    BUS: (10.0, 2.2, 3.0),
    MOTORCYCLE: (2.1, 0.8, 1.4),
    BICYCLE: (1.8, 0.6, 1.3),
}
LANES = (2.0, -2.0)


@dataclass(frozen=True)
class SynthConfig:
    seed: int = 0
    n_objects: int | None = None  # None draws 1..3
    n_key_frames: int = 3
    sweeps_per_key: int = 4
    sweep_dt_us: int = 100_000
    ego_speed: float = 2.0
    density: float = 8.0  # points per square metre per sweep
    sensor_range: float = 24.0
    dropout: float = 0.0
    noise: float = 0.0
    protrusion: bool = False
    grid: GridSpec = field(default_factory=lambda: GridSpec((-16.0, -16.0, -5.0), 0.5, (64, 64, 16)))
    cameras: bool = True

    def __post_init__(self):
        if not 0 <= self.dropout < 1:
            raise ValueError("dropout must be in [0, 1)")
        if self.n_key_frames < 1 or self.sweeps_per_key < 1:
            raise ValueError("need at least one key frame and one sweep per key")
        if self.n_objects is not None and not 0 <= self.n_objects <= 3:
            raise ValueError("n_objects must be in 0..3")


@dataclass(frozen=True)
class SolidBox:
    """An axis-aligned-in-yaw box surface used by the scene geometry."""

    center: np.ndarray
    size: np.ndarray
    yaw: float
    label: int
    track: int = -1  # index into the scene's moving objects, -1 for static
    skip_bottom: bool = False

    def moved(self, shift) -> SolidBox:
        return replace(self, center=self.center + shift)

    def faces(self):
        """(center, u-axis, v-axis, area) per face in world coordinates."""
        c, s = math.cos(self.yaw), math.sin(self.yaw)
        ex = np.array([c, s, 0.0])
        ey = np.array([-s, c, 0.0])
        ez = np.array([0.0, 0.0, 1.0])
        hl, hw, hh = np.asarray(self.size) / 2
        out = []
        for sign in (1, -1):
            out.append((self.center + sign * hl * ex, ey * hw, ez * hh, 4 * hw * hh))
            out.append((self.center + sign * hw * ey, ex * hl, ez * hh, 4 * hl * hh))
            if sign == 1 or not self.skip_bottom:
                out.append((self.center + sign * hh * ez, ex * hl, ey * hw, 4 * hl * hw))
        return out

    def sample(self, rng, density: float) -> np.ndarray:
        parts = []
        for center, u, v, area in self.faces():
            n = rng.poisson(density * area)
            a = rng.uniform(-1, 1, (n, 1))
            b = rng.uniform(-1, 1, (n, 1))
            parts.append(center + a * u + b * v)
        return np.concatenate(parts) if parts else np.zeros((0, 3))

    def lattice(self, step: float) -> np.ndarray:
        """Regular samples over the faces, at most ``step`` apart."""
        parts = []
        for center, u, v, _ in self.faces():
            nu = max(2, int(math.ceil(2 * np.linalg.norm(u) / step)) + 1)
            nv = max(2, int(math.ceil(2 * np.linalg.norm(v) / step)) + 1)
            a, b = np.meshgrid(np.linspace(-1, 1, nu), np.linspace(-1, 1, nv), indexing="ij")
            parts.append(center + a.reshape(-1, 1) * u + b.reshape(-1, 1) * v)
        return np.concatenate(parts)


def ground_label(y: np.ndarray) -> np.ndarray:
    ay = np.abs(y)
    return np.where(ay < ROAD_HALF_WIDTH, DRIVEABLE_SURFACE,
                    np.where(ay < SIDEWALK_HALF_WIDTH, SIDEWALK, TERRAIN)).astype(np.uint8)


@dataclass
class MovingObject:
    box: Box3D  # annotation at time 0
    velocity: np.ndarray

    def box_at(self, t_us: int) -> Box3D:
        shift = np.array([self.velocity[0], self.velocity[1], 0.0]) * (t_us * 1e-6)
        return self.box.replace(center=self.box.center + shift, timestamp=t_us)


@dataclass
class ArmVehicle:
    """A vehicle body with a rigid arm sticking out past its front face.

    ``body`` is the box an annotator would draw around the chassis; the arm
    is a thin box attached on top at the front.  The union is the solid.
    """

    body: Box3D
    arm: Box3D

    @classmethod
    def build(cls, center=(0.0, 0.0, 0.0), yaw: float = 0.0, label: int = CONSTRUCTION_VEHICLE,
              body_size=(4.5, 2.4, 2.6), arm_length: float = 3.0, arm_section=(0.4, 0.4),
              arm_lateral: float = 0.0, track_id: str = "arm") -> ArmVehicle:
        body = Box3D(center, body_size, yaw, label=label, track_id=track_id)
        bl, _, bh = body_size
        aw, ah = arm_section
        local = np.array([bl / 2 + arm_length / 2, arm_lateral, bh / 2 - ah / 2])
        arm_center = body.from_body(local)
        arm = Box3D(arm_center, (arm_length, aw, ah), yaw, label=label, track_id=track_id)
        return cls(body, arm)

    @property
    def label(self) -> int:
        return self.body.label

    def contains(self, points) -> np.ndarray:
        return self.body.contains(points) | self.arm.contains(points)

    def hull(self) -> Box3D:
        """Tightest box (in the body's heading) around body and arm."""
        corners = []
        for part in (self.body, self.arm):
            half = part.size / 2
            signs = np.array(np.meshgrid([-1, 1], [-1, 1], [-1, 1], indexing="ij")).reshape(3, -1).T
            corners.append(self.body.to_body(part.from_body(signs * half)))
        pts = np.concatenate(corners)
        lo, hi = pts.min(axis=0), pts.max(axis=0)
        center = self.body.from_body((lo + hi) / 2)
        return self.body.replace(center=center, size=hi - lo)

    def _outer(self, pts: np.ndarray) -> np.ndarray:
        # face samples buried strictly inside the other part are not on the outer surface
        def buried(box):
            return np.all(np.abs(box.to_body(pts)) < box.size / 2 - 1e-9, axis=1)
        return pts[~(buried(self.body) | buried(self.arm))]

    def shell_samples(self, rng, density: float) -> np.ndarray:
        """Random points over the outer surface, ``density`` per square metre."""
        return self._outer(np.concatenate([_as_solid(b).sample(rng, density) for b in (self.body, self.arm)]))

    def shell_lattice(self, step: float) -> np.ndarray:
        """Regular points over the outer surface, at most ``step`` apart."""
        return self._outer(np.concatenate([_as_solid(b).lattice(step) for b in (self.body, self.arm)]))

    def solid_parts(self):
        return [self.body, self.arm]


def shell_occupancy(vehicle: ArmVehicle, spec: GridSpec, sub: int = 8) -> VoxelGrid:
    """Reference grid: voxels crossed by the outer surface, found on a lattice of step ``resolution / sub``."""
    idx, ok = points_to_voxels(vehicle.shell_lattice(spec.resolution / sub), spec)
    labels = np.zeros(spec.dims, np.uint8)
    labels[tuple(idx[ok].T)] = vehicle.label
    return VoxelGrid(spec, labels)


def irregular_gap(seed: int, resolutions=(0.5, 0.25), arm_length: float = 3.0,
                  points_per_voxel_face: float = 40.0) -> list[dict]:
    """Occupancy labeling vs box voxelization of one protruding-arm vehicle.

    The vehicle gets a random yaw and sub-voxel offset.  Occupancy labels come
    from surface samples voted into voxels; the box path fills the tight box an
    annotator would draw around body and arm.  Both are scored on the
    construction-vehicle class against :func:`shell_occupancy`.
    """
    from occtk.metrics import boxes_to_voxels, confusion_accumulate, miou_subset
    from occtk.occgen.pipeline import voxelize_majority

    rng = np.random.default_rng(seed)
    yaw = rng.uniform(-math.pi, math.pi)
    center = (rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5), 0.1)
    vehicle = ArmVehicle.build(center, yaw, arm_length=arm_length)
    base = GridSpec((-8.0, -8.0, -2.0), 0.5, (32, 32, 8))
    rows = []
    for res in resolutions:
        spec = base.with_resolution(res)
        gt = shell_occupancy(vehicle, spec)
        pts = vehicle.shell_samples(rng, points_per_voxel_face / res**2)
        occ = voxelize_majority(PointCloud(pts, np.full(len(pts), vehicle.label, np.uint8)), spec)
        box = boxes_to_voxels([vehicle.hull()], spec)
        iou_occ = miou_subset(confusion_accumulate(occ, gt), [vehicle.label])
        iou_box = miou_subset(confusion_accumulate(box, gt), [vehicle.label])
        rows.append({"resolution": res, "occupancy_iou": iou_occ, "box_iou": iou_box, "gap": iou_occ - iou_box})
    return rows


# --- scene construction -----------------------------------------------------------

@dataclass
class SynthScene:
    config: SynthConfig
    frames: list
    gt: list  # one VoxelGrid per key frame
    objects: list
    statics: list
    arm: ArmVehicle | None = None
    dropped_points: int = 0

    @property
    def key_frames(self) -> list:
        return [f for f in self.frames if f.is_key_frame]


def _yaw_matrix(yaw: float) -> np.ndarray:
    c, s = math.cos(yaw), math.sin(yaw)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def _static_layout(rng, protrusion: bool):
    statics = []
    for side in (1, -1):
        statics.append(SolidBox(np.array([0.0, side * (WALL_Y + 0.2), GROUND_Z + 1.5]),
                                np.array([70.0, 0.4, 3.0]), 0.0, MANMADE, skip_bottom=True))
    for _ in range(rng.integers(2, 6)):
        side = rng.choice([-1, 1])
        x = rng.uniform(-20, 20)
        y = side * rng.uniform(7.6, 9.0)
        if rng.random() < 0.5:
            statics.append(SolidBox(np.array([x, y, GROUND_Z + 1.25]), np.array([0.3, 0.3, 2.5]),
                                    0.0, MANMADE, skip_bottom=True))
        else:
            statics.append(SolidBox(np.array([x, y, GROUND_Z + 0.5]), np.array([1.2, 1.2, 1.0]),
                                    float(rng.uniform(-1, 1)), VEGETATION, skip_bottom=True))
    arm = None
    if protrusion:
        body = (4.5, 2.4, 2.6)
        center = (float(rng.uniform(4, 9)), LANES[0], OBJECT_BOTTOM + body[2] / 2)
        arm = ArmVehicle.build(center, 0.0, CONSTRUCTION_VEHICLE, body, arm_length=float(rng.uniform(2.0, 3.5)),
                               track_id="arm")
    return statics, arm


def _moving_objects(rng, n: int, skip_lane0: bool):
    objects = []
    lanes = [LANES[1]] if skip_lane0 else list(LANES)
    classes = list(VEHICLE_SIZES)
    for i in range(n):
        lane = lanes[i % len(lanes)]
        label = int(rng.choice(classes))
        size = np.array(VEHICLE_SIZES[label])
        yaw = 0.0 if lane > 0 else math.pi
        speed = float(rng.uniform(0.0, 6.0))
        if i < len(lanes):
            x0 = float(rng.uniform(-10, 10))
            vel = speed * np.array([math.cos(yaw), math.sin(yaw)])
        else:
            # a follower keeps the leader's speed 15 m behind so they never touch
            lead = objects[i - len(lanes)]
            vel = lead.velocity.copy()
            x0 = float(lead.box.center[0] - 15.0 * math.cos(yaw))
            size = np.minimum(size, [10.0, 2.2, 3.0])
        center = np.array([x0, lane, OBJECT_BOTTOM + size[2] / 2])
        box = Box3D(center, size, yaw, vel, label, f"obj{i}", 0)
        objects.append(MovingObject(box, vel))
    return objects


def _cameras():
    return tuple(CameraModel.looking(math.radians(a), (0.0, 0.0, 0.0), 70.0, 320, 180, f"cam{a}")
                 for a in (0, 60, 120, 180, 240, 300))


def _sample_sweep(rng, cfg: SynthConfig, sensor_world: np.ndarray, statics, objects, arm, t_us: int):
    """World-frame points, true labels and track index (-1 static) for one sweep."""
    r = cfg.sensor_range
    pts, labels, tracks = [], [], []
    n = rng.poisson(cfg.density * (2 * r) ** 2)
    xy = sensor_world[:2] + rng.uniform(-r, r, (n, 2))
    g = np.column_stack([xy, np.full(n, GROUND_Z)])
    pts.append(g)
    labels.append(ground_label(g[:, 1]))
    tracks.append(np.full(n, -1))
    for s in statics:
        p = s.sample(rng, cfg.density)
        pts.append(p)
        labels.append(np.full(len(p), s.label, np.uint8))
        tracks.append(np.full(len(p), -1))
    if arm is not None:
        shrunk = replace(_as_solid(arm.body), size=arm.body.size * SHRINK)
        p = shrunk.sample(rng, cfg.density)
        q = _as_solid(arm.arm).sample(rng, cfg.density)
        q = q[~arm.body.contains(q)]
        for part in (p, q):
            pts.append(part)
            labels.append(np.full(len(part), arm.label, np.uint8))
            tracks.append(np.full(len(part), -1))
    for j, obj in enumerate(objects):
        box = obj.box_at(t_us)
        solid = replace(_as_solid(box, j), size=box.size * SHRINK)
        p = solid.sample(rng, cfg.density)
        pts.append(p)
        labels.append(np.full(len(p), box.label, np.uint8))
        tracks.append(np.full(len(p), j))
    pts = np.concatenate(pts)
    labels = np.concatenate(labels)
    tracks = np.concatenate(tracks)
    keep = np.hypot(pts[:, 0] - sensor_world[0], pts[:, 1] - sensor_world[1]) <= r
    return pts[keep], labels[keep], tracks[keep]


def _as_solid(box: Box3D, track: int = -1) -> SolidBox:
    return SolidBox(box.center.copy(), box.size.copy(), box.yaw, box.label, track)


def synth_scene(cfg: SynthConfig | None = None, **overrides) -> SynthScene:
    """Build a scene, its sweeps and the analytic ground truth per key frame.

    The same seed always gives the same scene; dropout and noise use their
    own random streams, so a noisy scene shares geometry and ground truth
    with its clean twin.
    """
    cfg = cfg or SynthConfig()
    if overrides:
        cfg = replace(cfg, **overrides)
    rng = np.random.default_rng(cfg.seed)
    statics, arm = _static_layout(rng, cfg.protrusion)
    n_obj = int(rng.integers(1, 4)) if cfg.n_objects is None else cfg.n_objects
    objects = _moving_objects(rng, n_obj, skip_lane0=arm is not None)
    ego_yaw = float(rng.uniform(-0.2, 0.2))
    sensor = Pose.from_yaw(0.03, (0.3, 0.0, 0.2))
    cameras = _cameras() if cfg.cameras else ()
    drop_rng = np.random.default_rng([cfg.seed, 1])
    noise_rng = np.random.default_rng([cfg.seed, 2])

    n_sweeps = (cfg.n_key_frames - 1) * cfg.sweeps_per_key + 1
    frames, clean = [], []
    dropped = 0
    for i in range(n_sweeps):
        t = i * cfg.sweep_dt_us
        d = cfg.ego_speed * t * 1e-6
        ego_t = np.array([d * math.cos(ego_yaw), d * math.sin(ego_yaw), 0.0])
        ego = Pose.from_yaw(ego_yaw, ego_t, t)
        sensor_world = ego.apply(sensor.translation)
        world, labels, tracks = _sample_sweep(rng, cfg, sensor_world, statics, objects, arm, t)
        # world -> ego -> sensor by explicit matrices
        r_e, r_s = _yaw_matrix(ego_yaw), _yaw_matrix(0.03)
        local = ((world - ego_t) @ r_e - sensor.translation) @ r_s
        local32 = local.astype(np.float32)
        key = i % cfg.sweeps_per_key == 0
        clean.append((local32, labels, tracks, t, key))
        noisy = local
        if cfg.noise > 0:
            noisy = local + noise_rng.normal(0, cfg.noise, local.shape)
        keep = drop_rng.random(len(local)) >= cfg.dropout
        dropped += int((~keep).sum())
        noisy32 = noisy.astype(np.float32)[keep]
        intensity = np.zeros(len(noisy32), np.float32)
        cloud = PointCloud(noisy32.astype(float), labels[keep] if key else None, t, "sensor", intensity)
        boxes = ()
        if key:
            # the arm vehicle is annotated by its chassis only
            boxes = tuple(o.box_at(t) for o in objects)
            boxes += (arm.body.replace(timestamp=t),) if arm is not None else ()
        frames.append(Frame(cloud, ego, sensor, boxes, key, cameras, t))

    gt = [
        analytic_ground_truth(clean, cfg, ego_yaw, objects, statics, arm, k_index, cameras)
        for k_index, c in enumerate(clean) if c[4]
    ]
    return SynthScene(cfg, frames, gt, objects, statics, arm, dropped)


def analytic_ground_truth(clean, cfg: SynthConfig, ego_yaw: float, objects, statics, arm,
                          key_index: int, cameras=()) -> VoxelGrid:
    """Ground truth for sweep ``key_index`` from the noise-free sweeps (see module docstring)."""
    spec = cfg.grid
    t_k = clean[key_index][3]
    r_e, r_s = _yaw_matrix(ego_yaw), _yaw_matrix(0.03)
    sensor_t = np.array([0.3, 0.0, 0.2])

    def ego_translation(t):
        d = cfg.ego_speed * t * 1e-6
        return np.array([d * math.cos(ego_yaw), d * math.sin(ego_yaw), 0.0])

    e_k = ego_translation(t_k)
    origin = np.asarray(spec.origin)
    dims = np.asarray(spec.dims)
    n_cells = spec.size
    votes = np.zeros((n_cells, 17), np.int64)  # column 0 counts unlabelled points
    track_votes = np.zeros((n_cells, len(objects) + 1), np.int64)  # last column: no track
    ambiguous = np.zeros(n_cells, bool)
    for local32, labels, tracks, t_f, key in clean:
        world = (local32.astype(float) @ r_s.T + sensor_t) @ r_e.T + ego_translation(t_f)
        for j, obj in enumerate(objects):
            mine = tracks == j
            if mine.any():
                world[mine, :2] += obj.velocity * ((t_k - t_f) * 1e-6)
        q = (world - e_k) @ r_e
        rel = (q - origin) / spec.resolution
        eps = BOUNDARY_EPS / spec.resolution
        lo = np.floor(rel - eps).astype(np.int64)
        hi = np.floor(rel + eps).astype(np.int64)
        cell = np.floor(rel).astype(np.int64)
        labelled = key | (tracks >= 0)
        lab = np.where(labelled, labels, 0)
        clear = np.all(lo == hi, axis=1)
        inside = np.all((cell >= 0) & (cell < dims), axis=1)
        ok = clear & inside
        flat = np.ravel_multi_index(cell[ok].T, spec.dims)
        np.add.at(votes, (flat, lab[ok].astype(np.int64)), 1)
        np.add.at(track_votes, (flat, np.where(tracks[ok] >= 0, tracks[ok], len(objects))), 1)
        for corner in np.ndindex(2, 2, 2):
            c = np.where(np.array(corner, bool), hi, lo)[~clear]
            valid = np.all((c >= 0) & (c < dims), axis=1)
            ambiguous[np.ravel_multi_index(c[valid].T, spec.dims)] = True

    labelled_counts = votes[:, 1:]
    kinds = (labelled_counts > 0).sum(axis=1)
    unlabelled = votes[:, 0] > 0
    labels = np.zeros(n_cells, np.uint8)
    single = kinds == 1
    labels[single] = np.argmax(labelled_counts[single], axis=1) + 1
    labels[(kinds > 1) | ((kinds == 0) & unlabelled) | ambiguous] = UNKNOWN
    surface = _surface_cells(cfg, objects, statics, arm, t_k, e_k, r_e)
    labels[surface & (votes.sum(axis=1) == 0)] = UNKNOWN
    # flow: the owning object's velocity seen from the ego frame, zero elsewhere
    flow = np.zeros((n_cells, 2), np.float32)
    owner = np.argmax(track_votes, axis=1)
    sole = (track_votes > 0).sum(axis=1) == 1
    for j, obj in enumerate(objects):
        cells = sole & (owner == j) & (labels != UNKNOWN) & (labels != 0)
        flow[cells] = obj.velocity @ r_e[:2, :2]
    grid = VoxelGrid(spec, labels.reshape(spec.dims), flow.reshape(spec.dims + (2,)))
    if cameras:
        grid = visibility_mask(grid, cameras)
    return grid


def _surface_cells(cfg: SynthConfig, objects, statics, arm, t_k, e_k, r_e) -> np.ndarray:
    """Cells crossed by any sampled surface at time ``t_k``, found on a fine lattice."""
    spec = cfg.grid
    step = spec.resolution / 4
    # ground: a horizontal plane filling its layer across the whole grid
    centers_z = spec.origin[2] + (np.arange(spec.dims[2]) + 0.5) * spec.resolution
    out = np.zeros(spec.dims, bool)
    layer = np.flatnonzero(np.abs(centers_z - GROUND_Z) <= spec.resolution / 2)
    out[:, :, layer] = True
    parts = [s.lattice(step) for s in statics]
    if arm is not None:
        parts.append(replace(_as_solid(arm.body), size=arm.body.size * SHRINK).lattice(step))
        parts.append(_as_solid(arm.arm).lattice(step))
    for j, obj in enumerate(objects):
        box = obj.box_at(t_k)
        parts.append(replace(_as_solid(box, j), size=box.size * SHRINK).lattice(step))
    pts = (np.concatenate(parts) - e_k) @ r_e
    rel = np.floor((pts - np.asarray(spec.origin)) / spec.resolution).astype(np.int64)
    ok = np.all((rel >= 0) & (rel < np.asarray(spec.dims)), axis=1)
    out[tuple(rel[ok].T)] = True
    return out.reshape(-1)


def write_scene(scene: SynthScene, out_dir) -> Path:
    """Write manifest, sweeps, ground-truth OCC1 files and ``generation.json``
    (generation settings matching the scene grid); returns the manifest path."""
    import json

    from occtk.io.manifest import write_manifest
    from occtk.io.occ1 import write_occ
    from occtk.occgen.config import GenConfig

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    manifest = out / "manifest.json"
    write_manifest(manifest, scene.frames)
    gt_dir = out / "gt"
    gt_dir.mkdir(exist_ok=True)
    for f, g in zip(scene.key_frames, scene.gt):
        write_occ(gt_dir / f"{f.timestamp:012d}.occ", g)
    gen = GenConfig(grid=scene.config.grid, visibility=scene.config.cameras)
    (out / "generation.json").write_text(json.dumps(gen.to_dict(), indent=2))
    return manifest
