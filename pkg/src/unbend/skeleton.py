"""From harmonic field to a smooth, uniformly sampled, framed skeleton.

The raw curve is the sequence of level-set centroids of the guide field,
ordered head to tail. It is densified to uniform arclength spacing,
relaxed by neighbor averaging with fixed endpoints, resampled again, and
finally equipped with orthonormal frames from axis projection.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateField, DegenerateTangent, EmptyInput
from .tetmesh import HarmonicField, TetMesh, solve_harmonic, tetrahedralize
from .volume import OccupancyMask, ScalarVolume

DEFAULT_LEVEL_SETS = 100
DEFAULT_SMOOTH_ITERS = 50

_MIN_SEGMENT = 1e-9


@dataclass(frozen=True)
class Polyline:
    """Ordered world points; consecutive vertices are distinct."""

    vertices: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.vertices, dtype=np.float64)
        object.__setattr__(self, "vertices", v)
        if len(v) < 2:
            raise ValueError("polyline needs at least 2 vertices")
        seg = np.linalg.norm(np.diff(v, axis=0), axis=1)
        if np.any(seg <= _MIN_SEGMENT):
            raise ValueError("polyline has a degenerate segment")

    def segment_lengths(self) -> np.ndarray:
        return np.linalg.norm(np.diff(self.vertices, axis=0), axis=1)

    def total_length(self) -> float:
        return float(self.segment_lengths().sum())


@dataclass(frozen=True)
class FramedPolyline:
    """Polyline vertices plus right-handed orthonormal frames.

    frames[i] has rows (u_i, v_i, n_i); n_i points head to tail.
    """

    vertices: np.ndarray
    frames: np.ndarray

    def __post_init__(self):
        object.__setattr__(
            self, "vertices", np.asarray(self.vertices, dtype=np.float64)
        )
        object.__setattr__(
            self, "frames", np.asarray(self.frames, dtype=np.float64)
        )
        if len(self.vertices) != len(self.frames):
            raise ValueError("one frame per vertex required")

    def total_length(self) -> float:
        return float(
            np.linalg.norm(np.diff(self.vertices, axis=0), axis=1).sum()
        )


def level_set_centroids(
    mesh: TetMesh, field: HarmonicField, k: int
) -> Polyline:
    """Centroids of k level sets of the field, head first.

    Isovalues are spread uniformly over (-1, 1) at cell centers,
    1 - (2j+1)/k. Each centroid is the unweighted mean of the points
    where mesh edges cross the isovalue; isovalues with no crossings
    are skipped.
    """
    if k < 2:
        raise ValueError("need at least 2 level sets")
    edges = mesh.edges()
    ua = field.values[edges[:, 0]]
    ub = field.values[edges[:, 1]]
    lo = np.minimum(ua, ub)
    hi = np.maximum(ua, ub)

    isos = 1.0 - (2.0 * np.arange(k) + 1.0) / k  # descending, head first
    isos_asc = isos[::-1].copy()

    # for each edge, the ascending isovalue indices it strictly straddles
    j_lo = np.searchsorted(isos_asc, lo, side="right")
    j_hi = np.searchsorted(isos_asc, hi, side="left")
    counts = np.maximum(j_hi - j_lo, 0)
    total = int(counts.sum())
    if total == 0:
        raise DegenerateField("no level-set crossings found")

    edge_rep = np.repeat(np.arange(len(edges)), counts)
    offsets = np.cumsum(counts) - counts
    within = np.arange(total) - np.repeat(offsets, counts)
    iso_idx = np.repeat(j_lo, counts) + within
    iso_vals = isos_asc[iso_idx]

    pa = mesh.vertices[edges[edge_rep, 0]]
    pb = mesh.vertices[edges[edge_rep, 1]]
    va = field.values[edges[edge_rep, 0]]
    vb = field.values[edges[edge_rep, 1]]
    w = (iso_vals - va) / (vb - va)
    pts = pa + w[:, None] * (pb - pa)

    sums = np.zeros((k, 3))
    for c in range(3):
        sums[:, c] = np.bincount(iso_idx, weights=pts[:, c], minlength=k)
    n_per = np.bincount(iso_idx, minlength=k)
    present = n_per > 0
    if present.sum() < 2:
        raise DegenerateField("fewer than 2 isovalues produced crossings")
    centroids = sums[present] / n_per[present, None]
    centroids = centroids[::-1]  # ascending isovalue -> descending (head first)
    return Polyline(_drop_duplicate_vertices(centroids))


def _drop_duplicate_vertices(verts: np.ndarray) -> np.ndarray:
    keep = [0]
    for i in range(1, len(verts)):
        if np.linalg.norm(verts[i] - verts[keep[-1]]) > _MIN_SEGMENT:
            keep.append(i)
    return verts[keep]


def smooth(line: Polyline, iterations: int) -> Polyline:
    """Neighbor-averaging relaxation; endpoints stay fixed."""
    v = line.vertices.copy()
    for _ in range(iterations):
        v[1:-1] = 0.5 * (v[:-2] + v[2:])
    return Polyline(_drop_duplicate_vertices(v))


def resample_uniform(line: Polyline) -> Polyline:
    """Resample at equal arclength steps of half the smallest segment.

    The step is floored at 1e-3 of the total length so a single tiny
    segment cannot explode the vertex count. First and last vertices are
    preserved exactly.
    """
    seg = line.segment_lengths()
    total = float(seg.sum())
    h = max(0.5 * float(seg.min()), 1e-3 * total)
    ts = np.arange(0.0, total, h)
    if total - ts[-1] > _MIN_SEGMENT:
        ts = np.append(ts, total)
    else:
        ts[-1] = total
    cum = np.concatenate([[0.0], np.cumsum(seg)])
    out = np.column_stack(
        [np.interp(ts, cum, line.vertices[:, c]) for c in range(3)]
    )
    out[0] = line.vertices[0]
    out[-1] = line.vertices[-1]
    return Polyline(out)


_AXIS_PAIRS = (
    (np.array([1.0, 0, 0]), np.array([0, 1.0, 0])),  # (x, y)
    (np.array([1.0, 0, 0]), np.array([0, 0, 1.0])),  # (x, z)
    (np.array([0, 1.0, 0]), np.array([0, 0, 1.0])),  # (y, z)
)

_PROJ_EPS = 1e-6


def _frame_from_normal(n: np.ndarray) -> np.ndarray:
    """Build (u, v, n) rows by projecting global axis pairs onto n's plane."""
    for a1, a2 in _AXIS_PAIRS:
        u = a1 - (a1 @ n) * n
        v = a2 - (a2 @ n) * n
        if np.linalg.norm(u) < _PROJ_EPS or np.linalg.norm(v) < _PROJ_EPS:
            continue
        u = u / np.linalg.norm(u)
        v = v - (v @ u) * u
        nv = np.linalg.norm(v)
        if nv < _PROJ_EPS:
            continue
        v = v / nv
        if np.dot(np.cross(u, v), n) < 0:
            v = -v
        return np.array([u, v, n])
    raise DegenerateTangent("no axis pair projects onto the normal plane")


def compute_frames(line: Polyline) -> FramedPolyline:
    """Frames from central-difference tangents and axis projection.

    Tangents use central differences on the interior and one-sided
    differences at the ends. u/v come from projecting the global (x, y)
    axes onto the plane orthogonal to the tangent, falling back to
    (x, z) then (y, z) when a projection degenerates; v is flipped if
    needed so that (u, v, n) is right-handed.
    """
    v = line.vertices
    if len(v) < 3:
        raise ValueError("need at least 3 vertices to compute frames")
    tangents = np.empty_like(v)
    tangents[1:-1] = v[2:] - v[:-2]
    tangents[0] = v[1] - v[0]
    tangents[-1] = v[-1] - v[-2]
    norms = np.linalg.norm(tangents, axis=1)
    if np.any(norms <= _MIN_SEGMENT):
        raise DegenerateTangent("zero-length tangent")
    tangents /= norms[:, None]
    frames = np.stack([_frame_from_normal(n) for n in tangents])
    return FramedPolyline(v, frames)


def extract_component_skeleton(
    vol: ScalarVolume,
    mask: OccupancyMask,
    endpoints,
    num_level_sets: int = DEFAULT_LEVEL_SETS,
    smooth_iterations: int = DEFAULT_SMOOTH_ITERS,
) -> FramedPolyline:
    """Full single-component pipeline: mesh, field, centroids, frames.

    `endpoints` is a (2, 3) array of world points; head/tail are mapped
    to the nearest mesh vertices. The centroid curve is densified to
    uniform spacing before relaxation so that averaging removes noise
    without flattening genuine bends, then resampled once more.
    """
    endpoints = np.asarray(endpoints, dtype=np.float64)
    if endpoints.shape != (2, 3):
        raise ValueError("expected exactly two endpoint world points")
    mesh = tetrahedralize(mask, vol.spacing, vol.origin)
    head = mesh.nearest_vertex(endpoints[0])
    tail = mesh.nearest_vertex(endpoints[1])
    field = solve_harmonic(mesh, head, tail)
    raw = level_set_centroids(mesh, field, num_level_sets)
    dense = resample_uniform(raw)
    relaxed = smooth(dense, smooth_iterations)
    uniform = resample_uniform(relaxed)
    return compute_frames(uniform)


def merge_component_skeletons(parts: list[FramedPolyline]) -> FramedPolyline:
    """Concatenate per-component skeletons head-to-tail.

    A straight bridge segment implicitly joins each part's tail to the
    next part's head; the bridge endpoints keep the adjoining frames.
    """
    if not parts:
        raise EmptyInput("no skeleton parts to merge")
    if len(parts) == 1:
        return parts[0]
    verts = [parts[0].vertices]
    frames = [parts[0].frames]
    for part in parts[1:]:
        gap = np.linalg.norm(part.vertices[0] - verts[-1][-1])
        if gap <= _MIN_SEGMENT:
            verts.append(part.vertices[1:])
            frames.append(part.frames[1:])
        else:
            verts.append(part.vertices)
            frames.append(part.frames)
    return FramedPolyline(np.concatenate(verts), np.concatenate(frames))


def skeleton_to_dict(skel: FramedPolyline) -> dict:
    return {
        "vertices": skel.vertices.tolist(),
        "frames": skel.frames.tolist(),
    }


def export_skeleton_json(skel: FramedPolyline, path) -> None:
    with open(path, "w") as f:
        json.dump(skeleton_to_dict(skel), f)
