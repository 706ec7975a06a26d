"""Scalar volumes: raw I/O, trilinear sampling, pooling and morphology.

A volume is a dense 3D grid of densities normalized to [0, 1].  Data is
stored as a float32 array indexed ``data[ix, iy, iz]``; on disk the same
values live in a raw little-endian file in x-fastest order next to a JSON
sidecar describing dims, spacing, origin and dtype.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import ndimage

from .errors import (
    DilationBudgetExceeded,
    EmptyMask,
    IoFailure,
    MetadataMissing,
    SizeMismatch,
    UnsupportedScalarType,
)

# 6-connectivity: face neighbors only.
CONNECTIVITY = ndimage.generate_binary_structure(3, 1)

_DTYPES = {
    "u8": (np.uint8, 255.0),
    "u16": (np.dtype("<u2"), 65535.0),
    "f32": (np.dtype("<f4"), None),
}


@dataclass(frozen=True)
class ScalarVolume:
    """Immutable 3D scalar grid with physical spacing.

    Attributes
    ----------
    data : np.ndarray
        float32 array of shape ``dims``, indexed ``[ix, iy, iz]``, values
        in [0, 1].
    spacing : tuple of float
        World units per voxel along each axis; strictly positive.
    origin : tuple of float
        World position of the center of voxel (0, 0, 0).
    """

    data: np.ndarray
    spacing: tuple[float, float, float] = (1.0, 1.0, 1.0)
    origin: tuple[float, float, float] = (0.0, 0.0, 0.0)

    def __post_init__(self):
        data = np.ascontiguousarray(self.data, dtype=np.float32)
        data.flags.writeable = False
        object.__setattr__(self, "data", data)
        if data.ndim != 3:
            raise ValueError("volume data must be a 3D array")
        if any(s <= 0 for s in self.spacing):
            raise ValueError("spacing components must be positive")

    @property
    def dims(self) -> tuple[int, int, int]:
        return self.data.shape

    @property
    def extent_lo(self) -> np.ndarray:
        """World coordinates of the low corner of the physical box."""
        return np.asarray(self.origin) - 0.5 * np.asarray(self.spacing)

    @property
    def extent_hi(self) -> np.ndarray:
        return self.extent_lo + np.asarray(self.dims) * np.asarray(self.spacing)


@dataclass
class OccupancyMask:
    """Boolean voxel mask with a cached 6-connected component count."""

    bits: np.ndarray
    component_count: int = field(default=-1)

    def __post_init__(self):
        self.bits = np.asarray(self.bits, dtype=bool)
        if self.component_count < 0:
            self.component_count = count_components(self.bits)

    @property
    def dims(self) -> tuple[int, int, int]:
        return self.bits.shape


def count_components(bits: np.ndarray) -> int:
    _, n = ndimage.label(bits, structure=CONNECTIVITY)
    return int(n)


def load_volume(data_path, meta_path) -> ScalarVolume:
    """Load a raw voxel file plus JSON sidecar, normalizing values to [0, 1].

    u8/u16 data is divided by the type's full range; f32 is clamped.
    """
    meta_path = Path(meta_path)
    if not meta_path.is_file():
        raise MetadataMissing(f"sidecar not found: {meta_path}")
    with open(meta_path) as f:
        meta = json.load(f)
    for key in ("dims", "spacing", "dtype"):
        if key not in meta:
            raise MetadataMissing(f"sidecar missing key {key!r}")
    dims = tuple(int(d) for d in meta["dims"])
    spacing = tuple(float(s) for s in meta["spacing"])
    origin = tuple(float(o) for o in meta.get("origin", (0.0, 0.0, 0.0)))
    if meta["dtype"] not in _DTYPES:
        raise UnsupportedScalarType(f"dtype {meta['dtype']!r} not supported")
    dtype, full_range = _DTYPES[meta["dtype"]]

    n_voxels = int(np.prod(dims))
    expected = n_voxels * np.dtype(dtype).itemsize
    try:
        raw = np.fromfile(data_path, dtype=dtype)
    except OSError as exc:
        raise IoFailure(str(exc)) from exc
    if raw.size * raw.itemsize != expected:
        raise SizeMismatch(
            f"expected {expected} bytes for dims {dims}, "
            f"got {raw.size * raw.itemsize}"
        )

    values = raw.astype(np.float32)
    if full_range is not None:
        values /= full_range
    else:
        values = np.clip(np.nan_to_num(values), 0.0, 1.0)
    # raw files are x-fastest, i.e. Fortran order for an (nx, ny, nz) array
    data = values.reshape(dims, order="F")
    return ScalarVolume(data, spacing, origin)


def export_volume(vol: ScalarVolume, data_path, meta_path) -> None:
    """Write a volume as f32 little-endian raw plus JSON sidecar.

    f32 round-trips bit-exactly through load_volume.
    """
    meta = {
        "dims": list(vol.dims),
        "spacing": list(vol.spacing),
        "origin": list(vol.origin),
        "dtype": "f32",
    }
    try:
        vol.data.astype("<f4").reshape(-1, order="F").tofile(data_path)
        with open(meta_path, "w") as f:
            json.dump(meta, f)
    except OSError as exc:
        raise IoFailure(str(exc)) from exc


def trilinear_sample(vol: ScalarVolume, points) -> np.ndarray:
    """Trilinearly interpolate the volume at world points.

    Points outside the voxel-center lattice return 0 (background).
    `points` has shape (..., 3); the result drops the last axis.
    """
    pts = np.asarray(points, dtype=np.float64)
    scalar_input = pts.ndim == 1
    pts = np.atleast_2d(pts)
    g = (pts - np.asarray(vol.origin)) / np.asarray(vol.spacing)

    nx, ny, nz = vol.dims
    hi = np.array([nx - 1, ny - 1, nz - 1], dtype=np.float64)
    inside = np.all((g >= 0.0) & (g <= hi), axis=-1)

    gc = np.clip(g, 0.0, hi)
    i0 = np.minimum(gc.astype(np.int64), np.maximum(hi.astype(np.int64) - 1, 0))
    f = gc - i0
    ix, iy, iz = i0[..., 0], i0[..., 1], i0[..., 2]
    fx, fy, fz = f[..., 0], f[..., 1], f[..., 2]

    data = vol.data
    # guard against 1-thick axes where i0+1 would overflow
    sx = 1 if nx > 1 else 0
    sy = 1 if ny > 1 else 0
    sz = 1 if nz > 1 else 0

    c000 = data[ix, iy, iz]
    c100 = data[ix + sx, iy, iz]
    c010 = data[ix, iy + sy, iz]
    c110 = data[ix + sx, iy + sy, iz]
    c001 = data[ix, iy, iz + sz]
    c101 = data[ix + sx, iy, iz + sz]
    c011 = data[ix, iy + sy, iz + sz]
    c111 = data[ix + sx, iy + sy, iz + sz]

    c00 = c000 * (1 - fx) + c100 * fx
    c10 = c010 * (1 - fx) + c110 * fx
    c01 = c001 * (1 - fx) + c101 * fx
    c11 = c011 * (1 - fx) + c111 * fx
    c0 = c00 * (1 - fy) + c10 * fy
    c1 = c01 * (1 - fy) + c11 * fy
    out = c0 * (1 - fz) + c1 * fz
    out = np.where(inside, out, 0.0)
    return float(out[0]) if scalar_input else out


def _pool_axis(arr: np.ndarray, factor: int, axis: int) -> np.ndarray:
    n = arr.shape[axis]
    starts = np.arange(0, n, factor)
    sums = np.add.reduceat(arr, starts, axis=axis)
    counts = np.diff(np.append(starts, n))
    shape = [1, 1, 1]
    shape[axis] = len(counts)
    return sums / counts.reshape(shape)


def downsample(vol: ScalarVolume, voxel_budget: int) -> ScalarVolume:
    """Mean-pool with the smallest uniform integer factor fitting the budget.

    Returns the input unchanged when it is already within budget.
    """
    if voxel_budget < 8:
        raise ValueError("voxel_budget must be at least 8")
    dims = np.asarray(vol.dims)
    if int(np.prod(dims)) <= voxel_budget:
        return vol
    factor = 2
    while np.prod(np.ceil(dims / factor)) > voxel_budget:
        factor += 1
    pooled = vol.data.astype(np.float64)
    for axis in range(3):
        pooled = _pool_axis(pooled, factor, axis)
    spacing = tuple(s * factor for s in vol.spacing)
    # new voxel 0 covers old voxels [0, factor): its center shifts accordingly
    origin = tuple(
        o + 0.5 * (factor - 1) * s for o, s in zip(vol.origin, vol.spacing)
    )
    return ScalarVolume(pooled, spacing, origin)


def threshold_occupancy(vol: ScalarVolume, tau: float) -> OccupancyMask:
    """Mark voxels with value strictly greater than tau as occupied."""
    bits = vol.data > tau
    if not bits.any():
        raise EmptyMask(f"no voxel exceeds tau={tau}")
    return OccupancyMask(bits)


def dilate_until_connected(mask: OccupancyMask) -> tuple[OccupancyMask, int]:
    """Dilate with the 6-neighborhood until a single component remains.

    Returns the (possibly unchanged) mask and the number of dilation
    rounds applied.
    """
    if not mask.bits.any():
        raise EmptyMask("cannot dilate an empty mask")
    bits = mask.bits
    count = 0
    budget = max(mask.dims)
    n_comp = mask.component_count
    while n_comp > 1:
        if count >= budget:
            raise DilationBudgetExceeded(
                f"still {n_comp} components after {count} dilations"
            )
        bits = ndimage.binary_dilation(bits, structure=CONNECTIVITY)
        count += 1
        n_comp = count_components(bits)
    if count == 0:
        return mask, 0
    return OccupancyMask(bits, component_count=1), count
