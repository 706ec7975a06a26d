"""Keyframed cylindrical deformation rig: reduction, evaluation, editing.

A rig is an ordered list of keyframes, each a position e_i, a
right-handed orthonormal frame R_i = (u_i, v_i, n_i) and a cross-section
extent (rx, ry). The curve c(t) linearly interpolates positions by
cumulative arclength; the frame field R(t) spherically interpolates the
normal direction and carries u/v along by the same minimal rotation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    AntipodalNormals,
    LastTwoKeyframes,
    NonConvergence,
    OutOfRange,
    SchemaInvalid,
)
from .skeleton import FramedPolyline

DEFAULT_PRISM_RADIUS_VOXELS = 10.0

_ORTHO_TOL = 1e-6
_T_EPS = 1e-9


@dataclass(frozen=True)
class Keyframe:
    """One editable station on the curve.

    position : (3,) world point e_i
    frame : (3, 3) rows (u_i, v_i, n_i), orthonormal, det +1
    extent : (rx, ry) cross-section half-widths, positive
    """

    position: np.ndarray
    frame: np.ndarray
    extent: tuple[float, float]

    def __post_init__(self):
        object.__setattr__(
            self, "position", np.asarray(self.position, dtype=np.float64)
        )
        object.__setattr__(
            self, "frame", np.asarray(self.frame, dtype=np.float64)
        )
        object.__setattr__(
            self, "extent", (float(self.extent[0]), float(self.extent[1]))
        )


def _check_frame(frame: np.ndarray) -> bool:
    if frame.shape != (3, 3):
        return False
    if np.max(np.abs(frame @ frame.T - np.eye(3))) > _ORTHO_TOL:
        return False
    return np.linalg.det(frame) > 0


class DeformationRig:
    """Immutable keyframe list with cached cumulative arclengths.

    Edits return new rigs (copy-on-edit), so readers can keep evaluating
    a previous version while an editor produces the next one.
    """

    def __init__(self, keyframes: list[Keyframe]):
        if len(keyframes) < 2:
            raise SchemaInvalid("a rig needs at least 2 keyframes")
        self.keyframes = list(keyframes)
        positions = np.stack([k.position for k in keyframes])
        seg = np.linalg.norm(np.diff(positions, axis=0), axis=1)
        if np.any(seg <= _T_EPS):
            raise SchemaInvalid("consecutive keyframes coincide")
        for k in keyframes:
            if not _check_frame(k.frame):
                raise SchemaInvalid("keyframe frame not orthonormal/right-handed")
            if k.extent[0] <= 0 or k.extent[1] <= 0:
                raise SchemaInvalid("keyframe extent must be positive")
        normals = np.stack([k.frame[2] for k in keyframes])
        dots = np.sum(normals[:-1] * normals[1:], axis=1)
        if np.any(dots <= -1.0 + 1e-6):
            raise AntipodalNormals("consecutive keyframe normals are opposite")

        self._positions = positions
        self._frames = np.stack([k.frame for k in keyframes])
        self._extents = np.array([k.extent for k in keyframes])
        self.cum_arclength = np.concatenate([[0.0], np.cumsum(seg)])

        # per-segment slerp data: rotation axis and full angle n_k -> n_k+1
        cross = np.cross(normals[:-1], normals[1:])
        sin = np.linalg.norm(cross, axis=1)
        cos = np.clip(dots, -1.0, 1.0)
        self._seg_angle = np.arctan2(sin, cos)
        axes = np.zeros_like(cross)
        ok = sin > 1e-12
        axes[ok] = cross[ok] / sin[ok, None]
        self._seg_axis = axes

    # ------------------------------------------------------------------
    # evaluation

    @property
    def total_arclength(self) -> float:
        return float(self.cum_arclength[-1])

    def _check_t(self, t: np.ndarray) -> np.ndarray:
        t = np.asarray(t, dtype=np.float64)
        total = self.total_arclength
        if np.any(t < -_T_EPS) or np.any(t > total + max(_T_EPS, _T_EPS * total)):
            raise OutOfRange(
                f"t outside [0, {total}]: {t[(t < -_T_EPS) | (t > total + _T_EPS)]}"
            )
        return np.clip(t, 0.0, total)

    def segment_lookup(self, t: float) -> tuple[int, float]:
        """Segment index k and local weight lambda in [0, 1] for t.

        k is the greatest index with d(e_k) <= t, except t = total
        arclength which maps to the last segment with lambda = 1.
        """
        ts = self._check_t(np.atleast_1d(t))
        k, lam = self._lookup_many(ts)
        return int(k[0]), float(lam[0])

    def _lookup_many(self, ts: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        d = self.cum_arclength
        k = np.searchsorted(d, ts, side="right") - 1
        k = np.clip(k, 0, len(d) - 2)
        lam = (ts - d[k]) / (d[k + 1] - d[k])
        return k, np.clip(lam, 0.0, 1.0)

    def eval_curve(self, t):
        """Point c(t) on the piecewise linear curve; vectorized over t."""
        ts = self._check_t(np.atleast_1d(t))
        k, lam = self._lookup_many(ts)
        p = (1.0 - lam)[:, None] * self._positions[k] + lam[:, None] * self._positions[k + 1]
        return p[0] if np.isscalar(t) or np.ndim(t) == 0 else p

    def eval_frame(self, t):
        """Frame R(t); rows (u, v, n). Vectorized over t.

        n is spherically interpolated between the segment's keyframe
        normals; the minimal rotation taking n_k there is applied to the
        whole start frame, so R(d(e_i)) reproduces R_i exactly.
        """
        ts = self._check_t(np.atleast_1d(t))
        k, lam = self._lookup_many(ts)
        frames = self._rotate_frames(k, lam)
        return frames[0] if np.isscalar(t) or np.ndim(t) == 0 else frames

    def _rotate_frames(self, k: np.ndarray, lam: np.ndarray) -> np.ndarray:
        base = self._frames[k]  # (m, 3, 3)
        # lam hits 1.0 exactly only at t = total arclength; the end keyframe
        # owns its parameter, like lam = 0 does at every other keyframe
        at_end = lam >= 1.0
        if np.any(at_end):
            base = base.copy()
            base[at_end] = self._frames[k[at_end] + 1]
            lam = np.where(at_end, 0.0, lam)
        phi = lam * self._seg_angle[k]
        axis = self._seg_axis[k]
        cos = np.cos(phi)[:, None, None]
        sin = np.sin(phi)[:, None, None]
        ax = axis[:, None, :]
        crossed = np.cross(np.broadcast_to(ax, base.shape), base)
        dot = np.sum(base * ax, axis=2, keepdims=True)
        return base * cos + crossed * sin + ax * dot * (1.0 - cos)

    def extent_at(self, t):
        """Cross-section half-widths (rx, ry), linearly interpolated."""
        ts = self._check_t(np.atleast_1d(t))
        k, lam = self._lookup_many(ts)
        e = (1.0 - lam)[:, None] * self._extents[k] + lam[:, None] * self._extents[k + 1]
        return e[0] if np.isscalar(t) or np.ndim(t) == 0 else e

    def eval_many(self, ts: np.ndarray):
        """(points, frames, extents) for an array of parameters."""
        ts = self._check_t(np.asarray(ts, dtype=np.float64))
        k, lam = self._lookup_many(ts)
        pts = (1.0 - lam)[:, None] * self._positions[k] + lam[:, None] * self._positions[k + 1]
        frames = self._rotate_frames(k, lam)
        ext = (1.0 - lam)[:, None] * self._extents[k] + lam[:, None] * self._extents[k + 1]
        return pts, frames, ext

    # ------------------------------------------------------------------
    # serialization

    def to_dict(self) -> dict:
        return {
            "keyframes": [
                {
                    "e": kf.position.tolist(),
                    "R": kf.frame.tolist(),
                    "extent": list(kf.extent),
                }
                for kf in self.keyframes
            ]
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "DeformationRig":
        try:
            kfs = [
                Keyframe(
                    np.asarray(item["e"], dtype=np.float64),
                    np.asarray(item["R"], dtype=np.float64),
                    tuple(item["extent"]),
                )
                for item in payload["keyframes"]
            ]
        except (KeyError, TypeError, ValueError, IndexError) as exc:
            raise SchemaInvalid(f"malformed rig payload: {exc}") from exc
        return cls(kfs)


# ----------------------------------------------------------------------
# keyframe reduction by prism subdivision


def _prism_violations(
    verts: np.ndarray, frames: np.ndarray, a: int, b: int, radius: float
) -> np.ndarray:
    """Indices in (a, b) of vertices outside the prism spanning a..b.

    Containment is tested in the prism's local frame: axial coordinate
    along the chord within [0, 1] and lateral offsets along the start
    base's u/v within +-radius, all with tolerance 1e-6 * radius.
    """
    if b - a < 2:
        return np.empty(0, dtype=np.int64)
    pa, pb = verts[a], verts[b]
    chord = pb - pa
    len2 = float(chord @ chord)
    interior = verts[a + 1 : b]
    rel = interior - pa
    if len2 <= _T_EPS:
        lateral = rel
        ax_ok = np.ones(len(interior), dtype=bool)
    else:
        tpar = rel @ chord / len2
        ax_ok = (tpar >= -1e-6) & (tpar <= 1.0 + 1e-6)
        lateral = rel - tpar[:, None] * chord
    u, v = frames[a][0], frames[a][1]
    tol = radius * (1.0 + 1e-6)
    inside = (
        ax_ok
        & (np.abs(lateral @ u) <= tol)
        & (np.abs(lateral @ v) <= tol)
    )
    return np.flatnonzero(~inside) + a + 1


def reduce_keyframes(skel: FramedPolyline, radius: float) -> DeformationRig:
    """Greedy prism subdivision to a minimal keyframe set.

    Starts with one prism whose square bases (side 2*radius) sit on the
    first and last skeleton vertices. While any skeleton vertex escapes
    its prism, that prism is split at the midpoint-index vertex, which
    becomes a keyframe with its skeleton frame. Extents start at
    (radius, radius).
    """
    if radius <= 0:
        raise ValueError("radius must be positive")
    verts = skel.vertices
    frames = skel.frames
    n = len(verts)
    if n < 2:
        raise ValueError("skeleton needs at least 2 vertices")

    segments = [(0, n - 1)]
    while True:
        if len(segments) + 1 > n:
            raise NonConvergence("subdivision exceeded skeleton vertex count")
        split_at = None
        for idx, (a, b) in enumerate(segments):
            if len(_prism_violations(verts, frames, a, b, radius)) > 0:
                split_at = idx
                break
        if split_at is None:
            break
        a, b = segments[split_at]
        mid = (a + b) // 2
        if mid in (a, b):
            raise NonConvergence("cannot split a unit prism")
        segments[split_at : split_at + 1] = [(a, mid), (mid, b)]

    indices = [a for a, _ in segments] + [n - 1]
    kfs = [
        Keyframe(verts[i], frames[i], (radius, radius)) for i in indices
    ]
    return DeformationRig(kfs)


# ----------------------------------------------------------------------
# edits


@dataclass(frozen=True)
class InsertAt:
    t: float


@dataclass(frozen=True)
class Remove:
    index: int


@dataclass(frozen=True)
class Rotate:
    index: int
    angle: float


@dataclass(frozen=True)
class SetCenter:
    index: int
    du: float
    dv: float


@dataclass(frozen=True)
class SetExtent:
    index: int
    rx: float
    ry: float


Edit = InsertAt | Remove | Rotate | SetCenter | SetExtent

_EDIT_OPS = {
    "insert_at": InsertAt,
    "remove": Remove,
    "rotate": Rotate,
    "set_center": SetCenter,
    "set_extent": SetExtent,
}


def edit_to_dict(edit: Edit) -> dict:
    for name, cls in _EDIT_OPS.items():
        if isinstance(edit, cls):
            payload = {"op": name}
            payload.update(edit.__dict__)
            return payload
    raise ValueError(f"unknown edit type {type(edit)!r}")


def edit_from_dict(payload: dict) -> Edit:
    try:
        op = payload["op"]
        cls = _EDIT_OPS[op]
        kwargs = {k: v for k, v in payload.items() if k not in ("op", "timestamp")}
        return cls(**kwargs)
    except (KeyError, TypeError) as exc:
        raise SchemaInvalid(f"malformed edit payload: {exc}") from exc


def _check_index(rig: DeformationRig, index: int) -> int:
    index = int(index)
    if not 0 <= index < len(rig.keyframes):
        raise OutOfRange(f"keyframe index {index} out of range")
    return index


def apply_edit(rig: DeformationRig, edit: Edit) -> DeformationRig:
    """Apply one edit and return a new rig; the input is untouched.

    insert_at adds a keyframe sampled from the current curve, which
    changes neither c(t) nor R(t) anywhere (refinement invariance).
    """
    kfs = list(rig.keyframes)
    if isinstance(edit, InsertAt):
        t = float(edit.t)
        rig._check_t(np.atleast_1d(t))
        d = rig.cum_arclength
        if np.any(np.abs(d - t) <= max(_T_EPS, _T_EPS * rig.total_arclength)):
            return rig  # already a keyframe here
        k, lam = rig.segment_lookup(t)
        position = rig.eval_curve(t)
        frame = rig.eval_frame(t)
        ext = rig.extent_at(t)
        kfs.insert(k + 1, Keyframe(position, frame, (ext[0], ext[1])))
        return DeformationRig(kfs)
    if isinstance(edit, Remove):
        i = _check_index(rig, edit.index)
        if len(kfs) < 3:
            raise LastTwoKeyframes("cannot remove below 2 keyframes")
        del kfs[i]
        return DeformationRig(kfs)
    if isinstance(edit, Rotate):
        i = _check_index(rig, edit.index)
        kf = kfs[i]
        u, v, n = kf.frame
        cos, sin = np.cos(edit.angle), np.sin(edit.angle)
        u2 = cos * u + sin * v
        v2 = cos * v - sin * u
        u2 = u2 - (u2 @ n) * n
        u2 /= np.linalg.norm(u2)
        v2 = v2 - (v2 @ n) * n - (v2 @ u2) * u2
        v2 /= np.linalg.norm(v2)
        if np.dot(np.cross(u2, v2), n) < 0:
            v2 = -v2
        kfs[i] = Keyframe(kf.position, np.array([u2, v2, n]), kf.extent)
        return DeformationRig(kfs)
    if isinstance(edit, SetCenter):
        i = _check_index(rig, edit.index)
        kf = kfs[i]
        delta = float(edit.du) * kf.frame[0] + float(edit.dv) * kf.frame[1]
        kfs[i] = Keyframe(kf.position + delta, kf.frame, kf.extent)
        return DeformationRig(kfs)
    if isinstance(edit, SetExtent):
        i = _check_index(rig, edit.index)
        if edit.rx <= 0 or edit.ry <= 0:
            raise SchemaInvalid("extent must be positive")
        kf = kfs[i]
        kfs[i] = Keyframe(kf.position, kf.frame, (float(edit.rx), float(edit.ry)))
        return DeformationRig(kfs)
    raise ValueError(f"unknown edit {edit!r}")
