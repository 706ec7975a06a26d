"""Analytic ground-truth volumes: sine-bent cylinders and the L2 metric.

The generator builds a straight cylinder with a one-voxel linear falloff
at its boundary, a dense keyframe rig whose curve follows a sinusoid
centered in the target box, and the bent volume produced by forward
warping the straight cylinder along that rig.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimsMismatch, DoesNotFit
from .rig import DeformationRig, Keyframe
from .skeleton import _frame_from_normal
from .volume import ScalarVolume
from .warp import bend

_RIG_SAMPLES = 64
_DENSE_SAMPLES = 8192


@dataclass(frozen=True)
class CylinderSpec:
    """Parameters of the synthetic bent cylinder.

    radius, amplitude and length are world units; `length` is the axial
    span of the sinusoid inside the box and defaults to the box depth
    minus end margins. `dims` is the bent volume's grid.
    """

    radius: float
    amplitude: float
    periods: float
    dims: tuple[int, int, int]
    length: float | None = None
    spacing: tuple[float, float, float] = (1.0, 1.0, 1.0)

    def __post_init__(self):
        if self.radius <= 0:
            raise ValueError("radius must be positive")
        if self.amplitude < 0:
            raise ValueError("amplitude must be nonnegative")
        if self.periods <= 0:
            raise ValueError("periods must be positive")

    @property
    def axial_span(self) -> float:
        if self.length is not None:
            return float(self.length)
        margin = self.radius + 3.0 * max(self.spacing)
        return self.dims[2] * self.spacing[2] - 2.0 * margin

    def curve_points(self, z_coords: np.ndarray) -> np.ndarray:
        """Sinusoid points for box z coordinates (world units)."""
        z0 = self._z_start
        omega = 2.0 * np.pi * self.periods / self.axial_span
        cx = self.dims[0] * self.spacing[0] / 2.0
        cy = self.dims[1] * self.spacing[1] / 2.0
        x = cx + self.amplitude * np.sin(omega * (z_coords - z0))
        y = np.full_like(z_coords, cy)
        return np.column_stack([x, y, z_coords])

    def curve_tangents(self, z_coords: np.ndarray) -> np.ndarray:
        z0 = self._z_start
        omega = 2.0 * np.pi * self.periods / self.axial_span
        dx = self.amplitude * omega * np.cos(omega * (z_coords - z0))
        t = np.column_stack([dx, np.zeros_like(z_coords), np.ones_like(z_coords)])
        return t / np.linalg.norm(t, axis=1, keepdims=True)

    @property
    def _z_start(self) -> float:
        return (self.dims[2] * self.spacing[2] - self.axial_span) / 2.0


def _dense_curve(spec: CylinderSpec):
    z0 = spec._z_start
    zs = np.linspace(z0, z0 + spec.axial_span, _DENSE_SAMPLES + 1)
    pts = spec.curve_points(zs)
    seg = np.linalg.norm(np.diff(pts, axis=0), axis=1)
    arc = np.concatenate([[0.0], np.cumsum(seg)])
    return zs, pts, arc


def _check_fit(spec: CylinderSpec, pts: np.ndarray) -> None:
    spacing = np.asarray(spec.spacing)
    extent = np.asarray(spec.dims) * spacing
    reach = spec.radius + float(spacing.max())  # surface plus falloff
    lo_ok = np.all(pts - reach >= 2.0 * spacing, axis=None)
    hi_ok = np.all(pts + reach <= extent - 2.0 * spacing, axis=None)
    if not (lo_ok and hi_ok):
        raise DoesNotFit("bent cylinder violates the 2-voxel box margin")


def _voxelize_straight(spec: CylinderSpec, arc_length: float) -> ScalarVolume:
    """Axis-aligned cylinder of length `arc_length`, 1-voxel boundary falloff.

    The z spacing is adjusted so the volume's physical depth equals the
    arclength exactly, keeping the grid mirror-symmetric in z.
    """
    nx, ny = spec.dims[0], spec.dims[1]
    sx, sy = spec.spacing[0], spec.spacing[1]
    nz = max(1, int(round(arc_length / spec.spacing[2])))
    sz = arc_length / nz
    w = float(max(spec.spacing))  # falloff width: one voxel

    xs = (np.arange(nx) + 0.5) * sx - nx * sx / 2.0
    ys = (np.arange(ny) + 0.5) * sy - ny * sy / 2.0
    zs = (np.arange(nz) + 0.5) * sz
    rho = np.sqrt(xs[:, None] ** 2 + ys[None, :] ** 2)
    radial = rho - spec.radius
    axial = np.maximum(-zs, zs - arc_length)
    sdf = np.maximum(radial[:, :, None], axial[None, None, :])
    vals = np.clip(0.5 - sdf / w, 0.0, 1.0)
    origin = (0.5 * sx, 0.5 * sy, 0.5 * sz)
    return ScalarVolume(vals, (sx, sy, sz), origin)


def _true_rig(spec: CylinderSpec) -> DeformationRig:
    zs, pts, arc = _dense_curve(spec)
    targets = np.linspace(0.0, arc[-1], _RIG_SAMPLES)
    z_samples = np.interp(targets, arc, zs)
    positions = spec.curve_points(z_samples)
    tangents = spec.curve_tangents(z_samples)
    extent = (spec.radius + 2.0 * max(spec.spacing),) * 2
    kfs = [
        Keyframe(p, _frame_from_normal(t), extent)
        for p, t in zip(positions, tangents)
    ]
    return DeformationRig(kfs)


def make_bent_cylinder(
    spec: CylinderSpec,
) -> tuple[ScalarVolume, ScalarVolume, DeformationRig]:
    """Build (bent, straight, true_rig) for the synthetic benchmark.

    The straight volume's depth equals the sinusoid's arclength; the
    bent volume is the forward warp of the straight one through the
    dense ground-truth rig, on the grid given by ``spec.dims``.
    """
    if spec.axial_span <= 0:
        raise DoesNotFit("axial span is not positive; dims too small")
    zs, pts, arc = _dense_curve(spec)
    _check_fit(spec, pts)
    straight = _voxelize_straight(spec, float(arc[-1]))
    rig = _true_rig(spec)
    bent = bend(
        rig,
        straight,
        out_dims=spec.dims,
        out_spacing=spec.spacing,
        out_origin=tuple(0.5 * s for s in spec.spacing),
    )
    return bent, straight, rig


def analytic_bent_cylinder(spec: CylinderSpec) -> ScalarVolume:
    """Closed-form voxelization of the bent tube, independent of bend().

    Distance to the sinusoid is computed against a densely sampled
    polyline; the capped-solid falloff matches the straight voxelizer.
    Intended as a test oracle.
    """
    from scipy.spatial import cKDTree

    zs, pts, arc = _dense_curve(spec)
    tree = cKDTree(pts)
    nx, ny, nz = spec.dims
    sx, sy, sz = spec.spacing
    w = float(max(spec.spacing))
    gx = (np.arange(nx) + 0.5) * sx
    gy = (np.arange(ny) + 0.5) * sy
    gz = (np.arange(nz) + 0.5) * sz
    grid = np.stack(np.meshgrid(gx, gy, gz, indexing="ij"), axis=-1).reshape(-1, 3)
    dist, idx = tree.query(grid, workers=-1)
    t_at = arc[idx]
    # residual along the tube axis relative to the caps
    tang = np.zeros_like(pts)
    tang[:-1] = np.diff(pts, axis=0)
    tang[-1] = tang[-2]
    tang /= np.linalg.norm(tang, axis=1, keepdims=True)
    ln = np.sum((grid - pts[idx]) * tang[idx], axis=1)
    t_proj = t_at + ln
    radial = np.sqrt(np.maximum(dist**2 - ln**2, 0.0)) - spec.radius
    axial = np.maximum(-t_proj, t_proj - arc[-1])
    vals = np.clip(0.5 - np.maximum(radial, axial) / w, 0.0, 1.0)
    return ScalarVolume(
        vals.reshape(nx, ny, nz),
        spec.spacing,
        tuple(0.5 * s for s in spec.spacing),
    )


def normalized_l2(a: ScalarVolume, b: ScalarVolume) -> float:
    """Euclidean voxel difference divided by the ground truth's axial length.

    `b` is the ground truth; its physical z extent is the normalizer.
    """
    if a.dims != b.dims:
        raise DimsMismatch(f"dims {a.dims} vs {b.dims}")
    diff = a.data.astype(np.float64) - b.data.astype(np.float64)
    length = b.dims[2] * b.spacing[2]
    return float(np.linalg.norm(diff.ravel()) / length)
