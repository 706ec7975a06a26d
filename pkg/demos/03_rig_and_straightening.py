"""Reduce a skeleton to keyframes, straighten, and bend back.

Run:

    python demos/03_rig_and_straightening.py
"""

from pathlib import Path

import numpy as np

from unbend import (
    CylinderSpec,
    StraightVolumeSpec,
    bend,
    export_volume,
    extract_rig,
    make_bent_cylinder,
    normalized_l2,
    reduce_keyframes,
    straighten,
)

out_dir = Path(__file__).parent / "output"
out_dir.mkdir(exist_ok=True)

spec = CylinderSpec(radius=4.0, amplitude=6.0, periods=1.0, dims=(64, 64, 64))
bent, straight, true_rig = make_bent_cylinder(spec)

# --- automated pipeline: clicks at the tube ends -> rig ------------------
endpoints = np.array(
    [true_rig.keyframes[0].position, true_rig.keyframes[-1].position]
)
result = extract_rig(bent, endpoints)
print(f"reduced rig: {len(result.rig.keyframes)} keyframes, "
      f"arclength {result.rig.total_arclength:.1f}")

# --- evaluate curve and frames anywhere along the arclength -------------
t = 0.5 * result.rig.total_arclength
c = result.rig.eval_curve(t)
frame = result.rig.eval_frame(t)
print(f"c({t:.1f}) = {np.round(c, 2)}  n = {np.round(frame[2], 3)}")

# --- straighten onto the ground-truth grid and score --------------------
gt_grid = StraightVolumeSpec(straight.dims, straight.spacing)
for radius, label in ((64.0, "chord rig"), (8.0, "subdivided rig")):
    rig = reduce_keyframes(result.skeleton, radius)
    err = normalized_l2(straighten(rig, bent, gt_grid), straight)
    print(f"{label:>14} (r={radius:>4.0f}): {len(rig.keyframes)} keyframes, "
          f"normalized L2 = {err:.3f}")

auto = straighten(result.rig, bent, gt_grid)
print(f"  default rig (r=  10): {len(result.rig.keyframes)} keyframes, "
      f"normalized L2 = {normalized_l2(auto, straight):.3f}")
print(f"     true rig (oracle): 64 keyframes, normalized L2 = "
      f"{normalized_l2(straighten(true_rig, bent, gt_grid), straight):.3f}")

export_volume(auto, out_dir / "straightened.raw", out_dir / "straightened.json")

# --- the forward direction: pose a straight scan along a curve ----------
reposed = bend(true_rig, straight, out_dims=spec.dims,
               out_spacing=spec.spacing, out_origin=bent.origin)
print(f"forward bend occupancy: {(reposed.data > 0.5).sum()} voxels "
      f"(original bent: {(bent.data > 0.5).sum()})")
