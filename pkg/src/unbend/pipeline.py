"""End-to-end orchestration from a raw volume and clicked endpoints to a rig.

This wires the stages together the way the batch CLI and the editing
service consume them: threshold, optional pooling to a mesh vertex
budget, per-component skeleton extraction between consecutive endpoint
pairs, merging, and keyframe reduction.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .errors import EmptyMask
from .rig import DEFAULT_PRISM_RADIUS_VOXELS, DeformationRig, reduce_keyframes
from .skeleton import (
    DEFAULT_LEVEL_SETS,
    DEFAULT_SMOOTH_ITERS,
    FramedPolyline,
    extract_component_skeleton,
    merge_component_skeletons,
)
from .volume import (
    CONNECTIVITY,
    OccupancyMask,
    ScalarVolume,
    dilate_until_connected,
    downsample,
    threshold_occupancy,
)

DEFAULT_TAU = 0.5
DEFAULT_VERTEX_BUDGET = 400_000


@dataclass(frozen=True)
class PipelineParams:
    tau: float = DEFAULT_TAU
    num_level_sets: int = DEFAULT_LEVEL_SETS
    smooth_iterations: int = DEFAULT_SMOOTH_ITERS
    prism_radius_voxels: float = DEFAULT_PRISM_RADIUS_VOXELS
    vertex_budget: int = DEFAULT_VERTEX_BUDGET


@dataclass(frozen=True)
class PipelineResult:
    rig: DeformationRig
    skeleton: FramedPolyline
    mask: OccupancyMask
    work_volume: ScalarVolume  # possibly pooled copy actually meshed


def _corner_count(bits: np.ndarray) -> int:
    nx, ny, nz = bits.shape
    corners = np.zeros((nx + 1, ny + 1, nz + 1), dtype=bool)
    for dx in (0, 1):
        for dy in (0, 1):
            for dz in (0, 1):
                corners[dx : dx + nx, dy : dy + ny, dz : dz + nz] |= bits
    return int(corners.sum())


def _fit_budget(
    vol: ScalarVolume, tau: float, budget: int
) -> tuple[ScalarVolume, OccupancyMask]:
    """Pool the volume until the mask's corner lattice fits the budget."""
    work = vol
    mask = threshold_occupancy(work, tau)
    while _corner_count(mask.bits) > budget:
        target = int(np.prod(work.dims)) // 2
        work = downsample(work, max(target, 8))
        mask = threshold_occupancy(work, tau)
    return work, mask


def _component_mask(
    labels: np.ndarray, endpoint_pair: np.ndarray, vol: ScalarVolume
) -> OccupancyMask:
    """Mask of the component(s) hit by one endpoint pair, made connected."""
    ids = []
    occupied = np.argwhere(labels > 0)
    centers = vol.extent_lo + (occupied + 0.5) * np.asarray(vol.spacing)
    for p in endpoint_pair:
        nearest = occupied[np.argmin(np.sum((centers - p) ** 2, axis=1))]
        ids.append(labels[tuple(nearest)])
    bits = np.isin(labels, ids)
    mask, _ = dilate_until_connected(OccupancyMask(bits))
    return mask


def extract_rig(
    vol: ScalarVolume,
    endpoints,
    params: PipelineParams = PipelineParams(),
) -> PipelineResult:
    """Run threshold -> mesh -> harmonic -> skeleton -> reduce.

    `endpoints` is a (2c, 3) array of ordered world points, one
    head/tail pair per connected component. With a single pair, the
    whole mask is dilated until connected; with several, each pair's
    component is processed separately and the skeletons are joined in
    order.
    """
    endpoints = np.asarray(endpoints, dtype=np.float64)
    if endpoints.ndim != 2 or endpoints.shape[1] != 3 or len(endpoints) % 2:
        raise ValueError("endpoints must be a (2c, 3) array of world points")
    work, mask = _fit_budget(vol, params.tau, params.vertex_budget)

    pairs = endpoints.reshape(-1, 2, 3)
    if len(pairs) == 1:
        component, _ = dilate_until_connected(mask)
        parts = [
            extract_component_skeleton(
                work,
                component,
                pairs[0],
                params.num_level_sets,
                params.smooth_iterations,
            )
        ]
    else:
        labels, n = ndimage.label(mask.bits, structure=CONNECTIVITY)
        if n == 0:
            raise EmptyMask("mask vanished before component extraction")
        parts = [
            extract_component_skeleton(
                work,
                _component_mask(labels, pair, work),
                pair,
                params.num_level_sets,
                params.smooth_iterations,
            )
            for pair in pairs
        ]
    skeleton = merge_component_skeletons(parts)
    radius = params.prism_radius_voxels * float(np.mean(work.spacing))
    rig = reduce_keyframes(skeleton, radius)
    return PipelineResult(rig, skeleton, mask, work)
