"""Batch entry point: straighten, skeleton, synth, eval, serve, bend."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .errors import UnbendError
from .pipeline import (
    DEFAULT_TAU,
    DEFAULT_VERTEX_BUDGET,
    PipelineParams,
    extract_rig,
)
from .rig import DEFAULT_PRISM_RADIUS_VOXELS, DeformationRig
from .session import Session, VolumeRef, load_session, save_session
from .skeleton import DEFAULT_LEVEL_SETS, DEFAULT_SMOOTH_ITERS, export_skeleton_json
from .synth import CylinderSpec, make_bent_cylinder, normalized_l2
from .volume import ScalarVolume, export_volume, load_volume
from .warp import StraightVolumeSpec, bend, default_spec, straighten


def _load_endpoints(path) -> np.ndarray:
    with open(path) as f:
        payload = json.load(f)
    return np.asarray(payload["points"], dtype=np.float64)


def _add_pipeline_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--tau", type=float, default=DEFAULT_TAU,
                   help="occupancy threshold in [0,1)")
    p.add_argument("--k", type=int, default=DEFAULT_LEVEL_SETS,
                   help="number of level sets")
    p.add_argument("--s", type=int, default=DEFAULT_SMOOTH_ITERS,
                   help="smoothing iterations")
    p.add_argument("--r", type=float, default=DEFAULT_PRISM_RADIUS_VOXELS,
                   help="prism radius in voxel widths")
    p.add_argument("--budget", type=int, default=DEFAULT_VERTEX_BUDGET,
                   help="mesh vertex budget")
    p.add_argument("--seed", type=int, default=0,
                   help="reserved; the pipeline is deterministic")


def _params(args) -> PipelineParams:
    return PipelineParams(
        tau=args.tau,
        num_level_sets=args.k,
        smooth_iterations=args.s,
        prism_radius_voxels=args.r,
        vertex_budget=args.budget,
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="unbend",
        description="Straighten tubular specimens in volumetric scans.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("straighten", help="full pipeline to a straight volume")
    p.add_argument("data", help="raw volume file")
    p.add_argument("meta", help="JSON sidecar")
    p.add_argument("endpoints", help="JSON file {'points': [[x,y,z],...]}")
    _add_pipeline_flags(p)
    p.add_argument("--out-spacing", type=float, nargs=3, metavar=("SX", "SY", "SZ"),
                   default=None, help="output voxel spacing (default: input)")
    p.add_argument("--out", required=True, help="output directory")

    p = sub.add_parser("skeleton", help="extract the framed skeleton only")
    p.add_argument("data")
    p.add_argument("meta")
    p.add_argument("endpoints")
    _add_pipeline_flags(p)
    p.add_argument("--out", required=True, help="output skeleton JSON path")

    p = sub.add_parser("synth", help="generate the synthetic benchmark")
    p.add_argument("--dims", type=int, nargs="+", default=[128],
                   help="grid size, one or three ints")
    p.add_argument("--radius", type=float, default=8.0)
    p.add_argument("--amplitude", type=float, default=20.0)
    p.add_argument("--periods", type=float, default=1.5)
    p.add_argument("--length", type=float, default=None,
                   help="axial span of the sinusoid (default: derived)")
    p.add_argument("--out", required=True, help="output directory")

    p = sub.add_parser("eval", help="normalized L2 between two volumes")
    p.add_argument("data_a")
    p.add_argument("meta_a")
    p.add_argument("data_b", help="ground truth raw file")
    p.add_argument("meta_b", help="ground truth sidecar")

    p = sub.add_parser("serve", help="run the editing service on a session")
    p.add_argument("session")
    p.add_argument("--bind", default="127.0.0.1:8000")

    p = sub.add_parser("bend", help="forward-warp a straight volume along a rig")
    p.add_argument("data")
    p.add_argument("meta")
    p.add_argument("rig", help="rig JSON file")
    p.add_argument("--out", required=True, help="output directory")

    return parser


def _cmd_straighten(args) -> int:
    vol = load_volume(args.data, args.meta)
    endpoints = _load_endpoints(args.endpoints)
    result = extract_rig(vol, endpoints, _params(args))
    spacing = tuple(args.out_spacing) if args.out_spacing else vol.spacing
    spec = default_spec(result.rig, spacing)
    straight = straighten(result.rig, vol, spec)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    export_volume(straight, out / "straight.raw", out / "straight.json")
    session = Session(
        VolumeRef.for_files(args.data, args.meta),
        [list(map(float, p)) for p in endpoints],
        result.rig,
    )
    save_session(session, out / "session.json")
    print(json.dumps({
        "straight": str(out / "straight.raw"),
        "session": str(out / "session.json"),
        "keyframes": len(result.rig.keyframes),
        "arclength": result.rig.total_arclength,
    }))
    return 0


def _cmd_skeleton(args) -> int:
    vol = load_volume(args.data, args.meta)
    endpoints = _load_endpoints(args.endpoints)
    result = extract_rig(vol, endpoints, _params(args))
    export_skeleton_json(result.skeleton, args.out)
    print(json.dumps({"skeleton": args.out,
                      "vertices": len(result.skeleton.vertices)}))
    return 0


def _cmd_synth(args) -> int:
    dims = args.dims if len(args.dims) == 3 else args.dims * 3
    if len(dims) != 3:
        print("--dims takes one or three integers", file=sys.stderr)
        return 2
    spec = CylinderSpec(
        radius=args.radius,
        amplitude=args.amplitude,
        periods=args.periods,
        dims=tuple(dims),
        length=args.length,
    )
    bent, straight, rig = make_bent_cylinder(spec)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    export_volume(bent, out / "bent.raw", out / "bent.json")
    export_volume(straight, out / "straight.raw", out / "straight.json")
    with open(out / "rig.json", "w") as f:
        json.dump(rig.to_dict(), f)
    head = rig.keyframes[0].position
    tail = rig.keyframes[-1].position
    with open(out / "endpoints.json", "w") as f:
        json.dump({"points": [head.tolist(), tail.tolist()]}, f)
    print(json.dumps({
        "bent": str(out / "bent.raw"),
        "straight": str(out / "straight.raw"),
        "rig": str(out / "rig.json"),
        "endpoints": str(out / "endpoints.json"),
        "arclength": rig.total_arclength,
    }))
    return 0


def _cmd_eval(args) -> int:
    a = load_volume(args.data_a, args.meta_a)
    b = load_volume(args.data_b, args.meta_b)
    print(json.dumps({"normalized_l2": normalized_l2(a, b)}))
    return 0


def _cmd_serve(args) -> int:
    from .service import serve

    session = load_session(args.session)
    serve(session, args.bind)
    return 0


def _cmd_bend(args) -> int:
    vol = load_volume(args.data, args.meta)
    with open(args.rig) as f:
        rig = DeformationRig.from_dict(json.load(f))
    bent = bend(rig, vol)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    export_volume(bent, out / "bent.raw", out / "bent.json")
    print(json.dumps({"bent": str(out / "bent.raw")}))
    return 0


_COMMANDS = {
    "straighten": _cmd_straighten,
    "skeleton": _cmd_skeleton,
    "synth": _cmd_synth,
    "eval": _cmd_eval,
    "serve": _cmd_serve,
    "bend": _cmd_bend,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except UnbendError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
