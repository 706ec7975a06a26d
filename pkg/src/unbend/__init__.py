"""Straighten deformed tubular specimens in volumetric scans.

Pipeline: threshold a scalar volume, mesh the occupied region, solve a
harmonic guide field between two clicked endpoints, trace its level-set
centroids into a framed skeleton, reduce that to a keyframed cylindrical
deformation rig, and resample the volume into a straight pose. Sessions
persist the rig and edit history; an HTTP service exposes slices and
edits to interactive clients.
"""

from .errors import UnbendError
from .pipeline import PipelineParams, PipelineResult, extract_rig
from .rig import (
    DEFAULT_PRISM_RADIUS_VOXELS,
    DeformationRig,
    InsertAt,
    Keyframe,
    Remove,
    Rotate,
    SetCenter,
    SetExtent,
    apply_edit,
    reduce_keyframes,
)
from .session import Session, VolumeRef, load_session, replay_edits, save_session
from .skeleton import (
    DEFAULT_LEVEL_SETS,
    DEFAULT_SMOOTH_ITERS,
    FramedPolyline,
    Polyline,
    compute_frames,
    extract_component_skeleton,
    level_set_centroids,
    merge_component_skeletons,
    resample_uniform,
    smooth,
)
from .synth import CylinderSpec, analytic_bent_cylinder, make_bent_cylinder, normalized_l2
from .tetmesh import HarmonicField, TetMesh, solve_harmonic, tetrahedralize
from .volume import (
    OccupancyMask,
    ScalarVolume,
    dilate_until_connected,
    downsample,
    export_volume,
    load_volume,
    threshold_occupancy,
    trilinear_sample,
)
from .warp import (
    StraightVolumeSpec,
    bend,
    cross_section,
    default_spec,
    eval_deformation,
    identity_rig,
    straighten,
)

__version__ = "0.1.0"

__all__ = [
    "CylinderSpec",
    "DEFAULT_LEVEL_SETS",
    "DEFAULT_PRISM_RADIUS_VOXELS",
    "DEFAULT_SMOOTH_ITERS",
    "DeformationRig",
    "FramedPolyline",
    "HarmonicField",
    "InsertAt",
    "Keyframe",
    "OccupancyMask",
    "PipelineParams",
    "PipelineResult",
    "Polyline",
    "Remove",
    "Rotate",
    "ScalarVolume",
    "Session",
    "SetCenter",
    "SetExtent",
    "StraightVolumeSpec",
    "TetMesh",
    "UnbendError",
    "VolumeRef",
    "analytic_bent_cylinder",
    "apply_edit",
    "bend",
    "compute_frames",
    "cross_section",
    "default_spec",
    "dilate_until_connected",
    "downsample",
    "eval_deformation",
    "export_volume",
    "extract_component_skeleton",
    "extract_rig",
    "identity_rig",
    "level_set_centroids",
    "load_session",
    "load_volume",
    "make_bent_cylinder",
    "merge_component_skeletons",
    "normalized_l2",
    "reduce_keyframes",
    "replay_edits",
    "resample_uniform",
    "save_session",
    "smooth",
    "solve_harmonic",
    "straighten",
    "tetrahedralize",
    "threshold_occupancy",
    "trilinear_sample",
]
