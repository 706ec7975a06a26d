"""Apply the cylindrical warp: straightened volumes, slices, forward bends.

The warp maps rig-local coordinates (x, y, t) to world space as
c(t) + x*u(t) + y*v(t). Straightening resamples a scanned volume onto a
regular grid of rig-local coordinates; bending does the inverse, pushing
a straight volume out along the curve.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import OutOfRange
from .rig import DeformationRig, Keyframe
from .volume import ScalarVolume, export_volume, trilinear_sample

__all__ = [
    "StraightVolumeSpec",
    "default_spec",
    "eval_deformation",
    "straighten",
    "cross_section",
    "bend",
    "identity_rig",
    "export_volume",
]

_CHUNK_POINTS = 2_000_000


def _worker_count() -> int:
    env = os.environ.get("UNBEND_THREADS", "")
    if env.strip():
        return max(1, int(env))
    return min(4, os.cpu_count() or 1)


@dataclass(frozen=True)
class StraightVolumeSpec:
    """Output grid for straightening: dims and spacing of the result."""

    out_dims: tuple[int, int, int]
    out_spacing: tuple[float, float, float]

    def __post_init__(self):
        if any(d < 1 for d in self.out_dims):
            raise ValueError("out_dims must be positive")
        if any(s <= 0 for s in self.out_spacing):
            raise ValueError("out_spacing must be positive")


def default_spec(rig: DeformationRig, spacing) -> StraightVolumeSpec:
    """Grid derived from the rig: depth covers the arclength, width and
    height cover the maximum keyframe extents at the input spacing."""
    sx, sy, sz = (float(s) for s in spacing)
    ext = np.array([k.extent for k in rig.keyframes])
    rx, ry = float(ext[:, 0].max()), float(ext[:, 1].max())
    nx = max(1, int(round(2.0 * rx / sx)))
    ny = max(1, int(round(2.0 * ry / sy)))
    nz = max(1, int(round(rig.total_arclength / sz)))
    return StraightVolumeSpec((nx, ny, nz), (sx, sy, sz))


def eval_deformation(rig: DeformationRig, x: float, y: float, z: float):
    """World point c(z) + x*u(z) + y*v(z); raises OutOfRange on z."""
    c = rig.eval_curve(z)
    frame = rig.eval_frame(z)
    return c + x * frame[0] + y * frame[1]


def _parallel_slabs(n_slabs: int, work) -> None:
    threads = _worker_count()
    if threads <= 1 or n_slabs <= 1:
        for i in range(n_slabs):
            work(i)
        return
    with ThreadPoolExecutor(max_workers=threads) as pool:
        list(pool.map(work, range(n_slabs)))


def straighten(
    rig: DeformationRig,
    vol: ScalarVolume,
    spec: StraightVolumeSpec | None = None,
) -> ScalarVolume:
    """Resample the volume into the rig's straight pose.

    Output voxel (i, j, k) samples the input at the warp of local
    coordinates centered on the rig axis; x/y columns beyond the
    interpolated extent (the cage) and t beyond the curve are 0.
    """
    if spec is None:
        spec = default_spec(rig, vol.spacing)
    nx, ny, nz = spec.out_dims
    sx, sy, sz = spec.out_spacing
    xs = (np.arange(nx) + 0.5) * sx - nx * sx / 2.0
    ys = (np.arange(ny) + 0.5) * sy - ny * sy / 2.0
    ts = (np.arange(nz) + 0.5) * sz
    total = rig.total_arclength

    out = np.zeros((nx, ny, nz), dtype=np.float32)
    slab = max(1, _CHUNK_POINTS // (nx * ny))
    n_slabs = (nz + slab - 1) // slab

    def fill(idx: int) -> None:
        k0, k1 = idx * slab, min((idx + 1) * slab, nz)
        tk = ts[k0:k1]
        in_curve = (tk >= 0.0) & (tk <= total)
        if not in_curve.any():
            return
        tq = np.clip(tk, 0.0, total)
        centers, frames, extents = rig.eval_many(tq)
        # world points: c + x*u + y*v for the whole slab
        pts = (
            centers[None, None, :, :]
            + xs[:, None, None, None] * frames[None, None, :, 0, :]
            + ys[None, :, None, None] * frames[None, None, :, 1, :]
        )
        vals = trilinear_sample(vol, pts.reshape(-1, 3)).reshape(
            nx, ny, len(tk)
        )
        in_cage = (
            (np.abs(xs[:, None, None]) <= extents[None, None, :, 0])
            & (np.abs(ys[None, :, None]) <= extents[None, None, :, 1])
            & in_curve[None, None, :]
        )
        out[:, :, k0:k1] = np.where(in_cage, vals, 0.0).astype(np.float32)

    _parallel_slabs(n_slabs, fill)
    origin = (xs[0], ys[0], ts[0])
    return ScalarVolume(out, (sx, sy, sz), origin)


def cross_section(
    rig: DeformationRig,
    vol: ScalarVolume,
    t: float,
    resolution: tuple[int, int] = (256, 256),
) -> np.ndarray:
    """Sample the plane orthogonal to n(t) over the extent rectangle.

    Returns an (h, w) float array; row j corresponds to the v direction,
    column i to u, and the center maps to (x, y) = (0, 0).
    """
    w, h = int(resolution[0]), int(resolution[1])
    if w < 1 or h < 1:
        raise ValueError("resolution must be positive")
    c = rig.eval_curve(float(t))
    frame = rig.eval_frame(float(t))
    rx, ry = rig.extent_at(float(t))
    xs = (np.arange(w) + 0.5) * (2.0 * rx / w) - rx
    ys = (np.arange(h) + 0.5) * (2.0 * ry / h) - ry
    pts = (
        c[None, None, :]
        + ys[:, None, None] * frame[1][None, None, :]
        + xs[None, :, None] * frame[0][None, None, :]
    )
    return trilinear_sample(vol, pts.reshape(-1, 3)).reshape(h, w)


def _project_to_curve(
    rig: DeformationRig, pts: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Nearest arclength parameter on the piecewise-linear curve.

    Ties break toward the smaller parameter. Returns (t, distance^2).
    """
    positions = rig._positions
    d = rig.cum_arclength
    best_d2 = np.full(len(pts), np.inf)
    best_t = np.zeros(len(pts))
    for k in range(len(positions) - 1):
        e0 = positions[k]
        seg = positions[k + 1] - e0
        len2 = float(seg @ seg)
        tau = np.clip((pts - e0) @ seg / len2, 0.0, 1.0)
        q = e0 + tau[:, None] * seg
        d2 = np.sum((pts - q) ** 2, axis=1)
        better = d2 < best_d2 - 1e-12
        best_d2[better] = d2[better]
        best_t[better] = d[k] + tau[better] * np.sqrt(len2)
    return best_t, best_d2


def bend(
    rig: DeformationRig,
    straight_vol: ScalarVolume,
    out_dims: tuple[int, int, int] | None = None,
    out_spacing: tuple[float, float, float] | None = None,
    out_origin: tuple[float, float, float] | None = None,
) -> ScalarVolume:
    """Forward-warp a straight volume along the rig's curve.

    Every output voxel is projected to its nearest curve point; the
    residual is decomposed in that point's frame to find rig-local
    coordinates, which index into the straight volume (axis centered in
    x/y, t measured from the start of its z extent). Voxels outside the
    cage come out 0. Unless an output grid is given, it covers the
    deformed cage's bounding box at the straight volume's spacing.
    """
    if out_spacing is None:
        out_spacing = straight_vol.spacing
    if out_dims is None or out_origin is None:
        ext = np.array([k.extent for k in rig.keyframes])
        margin = float(ext.max()) + float(max(out_spacing))
        lo = rig._positions.min(axis=0) - margin
        hi = rig._positions.max(axis=0) + margin
        dims = np.maximum(np.ceil((hi - lo) / out_spacing).astype(int), 1)
        out_dims = tuple(int(v) for v in dims) if out_dims is None else out_dims
        if out_origin is None:
            out_origin = tuple(lo + 0.5 * np.asarray(out_spacing))

    lo_s = straight_vol.extent_lo
    hi_s = straight_vol.extent_hi
    axis_xy = 0.5 * (lo_s[:2] + hi_s[:2])
    z0 = lo_s[2]

    nx, ny, nz = out_dims
    sx, sy, sz = out_spacing
    ox, oy, oz = out_origin
    xs = ox + np.arange(nx) * sx
    ys = oy + np.arange(ny) * sy
    zs = oz + np.arange(nz) * sz

    out = np.zeros((nx, ny, nz), dtype=np.float32)
    slab = max(1, _CHUNK_POINTS // (nx * ny))
    n_slabs = (nz + slab - 1) // slab

    def fill(idx: int) -> None:
        k0, k1 = idx * slab, min((idx + 1) * slab, nz)
        gx, gy, gz = np.meshgrid(xs, ys, zs[k0:k1], indexing="ij")
        pts = np.column_stack([gx.ravel(), gy.ravel(), gz.ravel()])
        t_star, _ = _project_to_curve(rig, pts)
        centers, frames, extents = rig.eval_many(t_star)
        rel = pts - centers
        lx = np.sum(rel * frames[:, 0, :], axis=1)
        ly = np.sum(rel * frames[:, 1, :], axis=1)
        ln = np.sum(rel * frames[:, 2, :], axis=1)
        in_cage = (np.abs(lx) <= extents[:, 0]) & (np.abs(ly) <= extents[:, 1])
        sample_pts = np.column_stack(
            [axis_xy[0] + lx, axis_xy[1] + ly, z0 + t_star + ln]
        )
        vals = trilinear_sample(straight_vol, sample_pts)
        vals[~in_cage] = 0.0
        out[:, :, k0:k1] = vals.reshape(nx, ny, k1 - k0).astype(np.float32)

    _parallel_slabs(n_slabs, fill)
    return ScalarVolume(out, tuple(out_spacing), tuple(out_origin))


def identity_rig(vol: ScalarVolume, extent: tuple[float, float] | None = None) -> DeformationRig:
    """Two-keyframe rig along the volume's central z axis.

    With default extents (half the volume's x/y widths) straightening
    reproduces the volume exactly on interior voxels.
    """
    lo = vol.extent_lo
    hi = vol.extent_hi
    cx, cy = 0.5 * (lo[0] + hi[0]), 0.5 * (lo[1] + hi[1])
    if extent is None:
        extent = ((hi[0] - lo[0]) / 2.0, (hi[1] - lo[1]) / 2.0)
    frame = np.eye(3)
    return DeformationRig(
        [
            Keyframe(np.array([cx, cy, lo[2]]), frame, extent),
            Keyframe(np.array([cx, cy, hi[2]]), frame, extent),
        ]
    )
