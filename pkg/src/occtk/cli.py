"""Command-line entry point: ``occtk <subcommand> ...``.

Every subcommand prints a JSON run report (config echo, versions, timings,
results) to stdout, or writes it to ``--report``.  Failures exit 1 with a
JSON error object on stderr; argparse usage errors exit 2.
"""

from __future__ import annotations

import argparse
import json
import os
import platform
import sys
import time
from pathlib import Path

import numpy as np

import occtk
from occtk.classes import CLASS_NAMES, FREE, NUM_CLASSES, PLANNING_CLASSES, UNKNOWN

THREADS_ENV = "OCCTK_THREADS"


class CliError(Exception):
    pass


# --- helpers --------------------------------------------------------------------

def _versions() -> dict:
    import numba
    import scipy

    return {"occtk": occtk.__version__, "python": platform.python_version(), "numpy": np.__version__,
            "scipy": scipy.__version__, "numba": numba.__version__}


def _default_threads() -> int:
    raw = os.environ.get(THREADS_ENV)
    if raw is None:
        return 1
    try:
        n = int(raw)
    except ValueError:
        raise CliError(f"{THREADS_ENV}={raw!r} is not an integer") from None
    if n < 1:
        raise CliError(f"{THREADS_ENV} must be >= 1")
    return n


def _occ_files(path) -> list[Path]:
    p = Path(path)
    if p.is_dir():
        files = sorted(p.glob("*.occ"))
        if not files:
            raise CliError(f"no .occ files in {p}")
        return files
    if not p.exists():
        raise CliError(f"{p} does not exist")
    return [p]


def _load_json(path) -> object:
    try:
        return json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise CliError(f"{path}: invalid JSON ({exc})") from None


def _load_boxes(path):
    from occtk.io.manifest import _box

    doc = _load_json(path)
    items = doc["boxes"] if isinstance(doc, dict) else doc
    return [_box(d, f"boxes[{i}]", 0) for i, d in enumerate(items)]


def _load_trajectory(path):
    from occtk.planner import Trajectory

    doc = _load_json(path)
    if isinstance(doc, dict) and "trajectory" in doc:
        doc = doc["trajectory"]
    try:
        return Trajectory.from_dict(doc)
    except (KeyError, TypeError) as exc:
        raise CliError(f"{path}: not a trajectory ({exc})") from None


def _write_json(path, obj) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    Path(path).write_text(json.dumps(obj, indent=2, allow_nan=False))


def _finite(obj):
    """Replace NaN/inf floats by None so reports stay strict JSON."""
    if isinstance(obj, float):
        return obj if np.isfinite(obj) else None
    if isinstance(obj, dict):
        return {k: _finite(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_finite(v) for v in obj]
    return obj


def _bev_for(args):
    """BEV map from --occ / --boxes (boxes rasterized on --like's grid or the benchmark grid)."""
    from occtk.grid.spec import GridSpec
    from occtk.io import read_occ
    from occtk.planner import to_bev

    keep = range(1, NUM_CLASSES + 1) if getattr(args, "all_classes", False) else PLANNING_CLASSES
    if getattr(args, "occ", None):
        return to_bev(read_occ(args.occ), keep)
    if getattr(args, "boxes", None):
        spec = read_occ(args.like).spec if getattr(args, "like", None) else GridSpec.benchmark()
        return to_bev(_load_boxes(args.boxes), bev_spec=spec.bev())
    return None


# --- subcommands ----------------------------------------------------------------

def cmd_generate(args) -> dict:
    from occtk.io import read_manifest, write_occ
    from occtk.occgen import GenConfig, run_generation

    gen = GenConfig()
    if args.gen_config:
        gen = GenConfig.from_dict(_load_json(args.gen_config))
    frames = read_manifest(args.manifest)
    grids, report = run_generation(frames, gen, workers=args.threads)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    keys = [f for f in frames if f.is_key_frame]
    written = []
    for f, g in zip(keys, grids):
        path = out / f"{f.timestamp:012d}.occ"
        write_occ(path, g)
        written.append(str(path))
    meta = report.to_dict()
    _write_json(out / "generation_meta.json", meta)
    return {"outputs": written, "generation": meta}


def cmd_eval_occ(args) -> dict:
    from occtk.io import read_occ
    from occtk.metrics import ConfusionMatrix, EvalMask, confusion_accumulate

    preds, gts = _occ_files(args.pred), _occ_files(args.gt)
    if len(gts) > 1 or len(preds) > 1:
        by_name = {p.name: p for p in preds}
        missing = [g.name for g in gts if g.name not in by_name]
        if missing:
            raise CliError(f"no prediction for ground truth {missing[0]}")
        pairs = [(by_name[g.name], g) for g in gts]
    else:
        pairs = [(preds[0], gts[0])]
    # the headline numbers follow the requested policy; both policies are reported alongside
    visible, everything = ConfusionMatrix(), ConfusionMatrix()
    have_visibility = True
    for p, g in pairs:
        gt, pred = read_occ(g), read_occ(p)
        everything = everything + confusion_accumulate(pred, gt, EvalMask("all"))
        if gt.visibility is None:
            have_visibility = False
        else:
            visible = visible + confusion_accumulate(pred, gt, EvalMask("visible_only"))
    use_visible = have_visibility and not args.eval_all
    out = {"pairs": len(pairs), "mask_policy": "visible_only" if use_visible else "all",
           "metrics": (visible if use_visible else everything).to_dict(),
           "by_policy": {"all": everything.to_dict()}}
    if have_visibility:
        out["by_policy"]["visible_only"] = visible.to_dict()
    return out


def cmd_eval_seg(args) -> dict:
    from occtk.io import read_manifest, read_occ, read_points
    from occtk.metrics import ConfusionMatrix, lidar_seg_transfer, point_confusion

    total = ConfusionMatrix()
    frames_done = 0
    if args.manifest:
        pred_dir = Path(args.pred)
        for f in read_manifest(args.manifest):
            if not f.is_key_frame:
                continue
            if f.point_cloud.labels is None:
                raise CliError(f"key frame {f.timestamp} has no point labels")
            grid = read_occ(pred_dir / f"{f.timestamp:012d}.occ")
            pts = f.sensor_pose.apply(f.point_cloud.points)
            total = total + point_confusion(lidar_seg_transfer(pts, grid), f.point_cloud.labels)
            frames_done += 1
    else:
        if not (args.points and args.labels):
            raise CliError("eval-seg needs --manifest or both --points and --labels")
        cloud = read_points(args.points, args.labels)
        grid = read_occ(args.pred)
        total = point_confusion(lidar_seg_transfer(cloud.points, grid), cloud.labels)
        frames_done = 1
    return {"frames": frames_done, "metrics": total.to_dict()}


def cmd_plan(args) -> dict:
    from occtk.planner import CostWeights, SamplerConfig, plan_from_grid

    bev = _bev_for(args)
    if bev is None:
        raise CliError("plan needs --occ or --boxes")
    sampler = SamplerConfig(count=args.candidates, horizon=args.horizon, dt=args.dt, seed=args.seed)
    weights = CostWeights(args.w_safety, args.w_comfort, args.w_progress)
    traj, report = plan_from_grid(bev, args.command, sampler, weights, workers=args.threads)
    result = {"trajectory": traj.to_dict(), "cost_report": report.to_dict()}
    if args.out:
        _write_json(args.out, result)
    return result


def cmd_eval_plan(args) -> dict:
    from occtk.metrics import collision_rate, planning_l2

    if len(args.pred) != len(args.gt):
        raise CliError(f"{len(args.pred)} predictions but {len(args.gt)} ground-truth trajectories")
    preds = [_load_trajectory(p) for p in args.pred]
    gts = [_load_trajectory(g) for g in args.gt]
    horizons = tuple(args.horizons)
    l2 = np.mean([planning_l2(p, g, horizons) for p, g in zip(preds, gts)], axis=0)
    out = {"horizons": list(horizons), "l2": [float(v) for v in l2]}
    bev = _bev_for(args)
    if bev is not None:
        out["collision_rate"] = [float(v) for v in collision_rate(preds, bev, horizons=horizons)]
        out["bev_source"] = bev.source
    return out


def cmd_raster(args) -> dict:
    bev = _bev_for(args)
    if bev is None:
        raise CliError("raster needs --occ or --boxes")
    np.save(args.out, bev.cells)
    return {"output": str(args.out), "source": bev.source, "dims": list(bev.spec.dims),
            "resolution": bev.spec.resolution, "occupied_cells": bev.occupied_count}


def cmd_stats(args) -> dict:
    from occtk.io import read_occ

    counts = np.zeros(NUM_CLASSES + 1, np.int64)
    moving = np.zeros(NUM_CLASSES + 1, np.int64)
    free = unknown = total = 0
    has_flow = False
    files = _occ_files(args.occ)
    for path in files:
        g = read_occ(path)
        lab = g.labels
        total += lab.size
        free += int(np.sum(lab == FREE))
        unknown += int(np.sum(lab == UNKNOWN))
        known = lab[(lab != FREE) & (lab != UNKNOWN)]
        counts += np.bincount(known, minlength=NUM_CLASSES + 1)[: NUM_CLASSES + 1]
        if g.flow is not None:
            has_flow = True
            fast = np.hypot(g.flow[..., 0], g.flow[..., 1]) > args.velocity_threshold
            sel = fast & (lab != FREE) & (lab != UNKNOWN)
            moving += np.bincount(lab[sel], minlength=NUM_CLASSES + 1)[: NUM_CLASSES + 1]
    occupied = int(counts.sum())
    per_class = {}
    for code, name in enumerate(CLASS_NAMES, start=1):
        n = int(counts[code])
        per_class[name] = {
            "voxels": n,
            "fraction_of_occupied": n / occupied if occupied else 0.0,
            "moving_fraction": (int(moving[code]) / n if n else 0.0) if has_flow else None,
        }
    return {"files": len(files), "voxels": total, "free": free, "unknown": unknown, "occupied": occupied,
            "velocity_threshold": args.velocity_threshold, "per_class": per_class}


def cmd_kernels_selftest(args) -> dict:
    from occtk.kernels.selftest import run_selftest

    checks = run_selftest(seed=args.seed, quick=args.quick)
    for c in checks:
        print(c.line(), file=sys.stderr)
    result = {"passed": all(c.passed for c in checks),
              "checks": [{"name": c.name, "passed": c.passed, "value": c.value, "tolerance": c.tolerance,
                          "seconds": c.seconds} for c in checks]}
    if not result["passed"]:
        failed = [c.name for c in checks if not c.passed]
        raise CliError(f"kernel self-test failed: {', '.join(failed)}", result)
    return result


def cmd_synth(args) -> dict:
    from occtk.io import SynthConfig, synth_scene, write_scene

    cfg = SynthConfig(seed=args.seed, n_objects=args.objects, n_key_frames=args.key_frames,
                      sweeps_per_key=args.sweeps_per_key, dropout=args.dropout, noise=args.noise,
                      protrusion=args.protrusion, cameras=not args.no_cameras)
    scene = synth_scene(cfg)
    manifest = write_scene(scene, args.out)
    return {"manifest": str(manifest), "key_frames": len(scene.key_frames), "frames": len(scene.frames),
            "gt_dir": str(Path(args.out) / "gt"), "generation_config": str(Path(args.out) / "generation.json")}


# --- parser ---------------------------------------------------------------------

def _positive_int(s: str) -> int:
    v = int(s)
    if v < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return v


def _add_bev_source(p):
    p.add_argument("--occ", help="OCC1 grid to squeeze into a BEV map")
    p.add_argument("--boxes", help="JSON list of boxes (manifest box schema)")
    p.add_argument("--like", help="OCC1 file whose grid layout is used to rasterize --boxes")
    p.add_argument("--all-classes", action="store_true", help="treat every class as an obstacle")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON file of flag values; explicit flags win")
    common.add_argument("--threads", type=_positive_int, default=None,
                        help=f"worker threads (default from ${THREADS_ENV}, else 1)")
    common.add_argument("--report", help="write the run report here instead of stdout")

    parser = argparse.ArgumentParser(prog="occtk", description=occtk.__doc__)
    parser.add_argument("--version", action="version", version=f"occtk {occtk.__version__}")
    sub = parser.add_subparsers(dest="subcommand", required=True, metavar="SUBCOMMAND")
    parser.subcommands = sub.choices

    p = sub.add_parser("generate", parents=[common], help="build occupancy grids from a scene manifest")
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", required=True, help="output directory for <timestamp>.occ files")
    p.add_argument("--gen-config", help="JSON generation settings (grid, thresholds)")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("eval-occ", parents=[common], help="mIoU / IoU_geo of predicted grids")
    p.add_argument("--pred", required=True, help="OCC1 file or directory")
    p.add_argument("--gt", required=True, help="OCC1 file or directory (matched by file name)")
    p.add_argument("--eval-all", action="store_true", help="also score voxels the cameras cannot see")
    p.set_defaults(func=cmd_eval_occ)

    p = sub.add_parser("eval-seg", parents=[common], help="lidar segmentation scores via voxel label transfer")
    p.add_argument("--pred", required=True, help="OCC1 file, or a directory when --manifest is given")
    p.add_argument("--manifest", help="score every key frame; points are moved into the grid frame")
    p.add_argument("--points", help="points file already in the grid frame")
    p.add_argument("--labels", help="u8 label sidecar for --points")
    p.set_defaults(func=cmd_eval_seg)

    p = sub.add_parser("plan", parents=[common], help="select a trajectory on a BEV map")
    _add_bev_source(p)
    p.add_argument("--command", default="forward", choices=["forward", "left", "right"])
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--candidates", type=_positive_int, default=64)
    p.add_argument("--horizon", type=float, default=3.0)
    p.add_argument("--dt", type=float, default=0.5)
    p.add_argument("--w-safety", type=float, default=100.0)
    p.add_argument("--w-comfort", type=float, default=0.01)
    p.add_argument("--w-progress", type=float, default=1.0)
    p.add_argument("--out", help="also write trajectory and cost report to this JSON file")
    p.set_defaults(func=cmd_plan)

    p = sub.add_parser("eval-plan", parents=[common], help="L2 error and collision rate of trajectories")
    p.add_argument("--pred", nargs="+", required=True, help="trajectory JSON files")
    p.add_argument("--gt", nargs="+", required=True, help="ground-truth trajectory JSON files, same order")
    p.add_argument("--horizons", nargs="+", type=float, default=[1.0, 2.0, 3.0])
    _add_bev_source(p)
    p.set_defaults(func=cmd_eval_plan)

    p = sub.add_parser("raster", parents=[common], help="write a BEV map as a .npy array")
    _add_bev_source(p)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_raster)

    p = sub.add_parser("stats", parents=[common], help="per-class voxel fractions and moving fractions")
    p.add_argument("--occ", required=True, help="OCC1 file or directory")
    p.add_argument("--velocity-threshold", type=float, default=0.2)
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("kernels-selftest", parents=[common], help="run kernel oracle and gradient checks")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--quick", action="store_true")
    p.set_defaults(func=cmd_kernels_selftest)

    p = sub.add_parser("synth", parents=[common], help="write a synthetic scene with analytic ground truth")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--objects", type=int, default=None)
    p.add_argument("--key-frames", type=_positive_int, default=3)
    p.add_argument("--sweeps-per-key", type=_positive_int, default=4)
    p.add_argument("--dropout", type=float, default=0.0)
    p.add_argument("--noise", type=float, default=0.0)
    p.add_argument("--protrusion", action="store_true")
    p.add_argument("--no-cameras", action="store_true")
    p.set_defaults(func=cmd_synth)
    return parser


def _apply_config(parser, argv) -> argparse.Namespace:
    args = parser.parse_args(argv)
    if not args.config:
        return args
    doc = _load_json(args.config)
    if not isinstance(doc, dict):
        raise CliError(f"{args.config}: expected a JSON object")
    known = vars(args)
    values = {}
    for key, value in doc.items():
        dest = key.replace("-", "_")
        if dest not in known or dest in ("func", "subcommand", "config"):
            raise CliError(f"{args.config}: unknown option {key!r} for {args.subcommand}")
        values[dest] = value
    # config values act as defaults, so anything given on the command line still wins
    parser.subcommands[args.subcommand].set_defaults(**values)
    return parser.parse_args(argv)


def main(argv=None) -> int:
    parser = build_parser()
    argv = sys.argv[1:] if argv is None else list(argv)
    command = None
    try:
        args = _apply_config(parser, argv)
        command = args.subcommand
        if args.threads is None:
            args.threads = _default_threads()
        echo = {k: v for k, v in vars(args).items() if k != "func"}
        t0 = time.perf_counter()
        result = args.func(args)
        report = _finite({"command": command, "config": echo, "versions": _versions(),
                          "seconds": time.perf_counter() - t0, "result": result})
        text = json.dumps(report, indent=2, allow_nan=False)
        if args.report:
            Path(args.report).write_text(text)
        else:
            print(text)
        return 0
    except (CliError, ValueError, OSError, KeyError) as exc:
        err = {"error": type(exc).__name__, "message": str(exc.args[0]) if exc.args else str(exc),
               "command": command}
        if isinstance(exc, CliError) and len(exc.args) > 1:
            err["details"] = _finite(exc.args[1])
        print(json.dumps(err), file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
