"""Editing sessions: provenance-carrying, canonically serialized state.

A session records which volume was edited (paths plus content hashes),
the endpoint clicks, the current rig and the ordered edit log. Files are
canonical JSON (sorted keys, 17-significant-digit floats) so that equal
sessions are byte-identical and rigs round-trip exactly.
"""

from __future__ import annotations

import hashlib
import json
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import IoFailure, SchemaInvalid, VersionUnsupported
from .rig import DeformationRig, apply_edit, edit_from_dict

FORMAT_VERSION = 1


@dataclass
class VolumeRef:
    data_path: str
    meta_path: str
    data_sha256: str = ""
    meta_sha256: str = ""

    @classmethod
    def for_files(cls, data_path, meta_path) -> "VolumeRef":
        return cls(
            str(data_path),
            str(meta_path),
            _sha256(data_path),
            _sha256(meta_path),
        )

    def to_dict(self) -> dict:
        return {
            "data_path": self.data_path,
            "meta_path": self.meta_path,
            "data_sha256": self.data_sha256,
            "meta_sha256": self.meta_sha256,
        }


@dataclass
class Session:
    volume_ref: VolumeRef
    endpoints: list  # ordered world points, 2 per component
    rig: DeformationRig
    edit_log: list = field(default_factory=list)
    format_version: int = FORMAT_VERSION

    def log_edit(self, payload: dict, timestamp: str) -> None:
        entry = dict(payload)
        entry["timestamp"] = timestamp
        self.edit_log.append(entry)

    def to_dict(self) -> dict:
        return {
            "format_version": self.format_version,
            "volume_ref": self.volume_ref.to_dict(),
            "endpoints": {"points": [list(map(float, p)) for p in self.endpoints]},
            "rig": self.rig.to_dict(),
            "edit_log": self.edit_log,
        }


def _sha256(path) -> str:
    h = hashlib.sha256()
    try:
        with open(path, "rb") as f:
            for chunk in iter(lambda: f.read(1 << 20), b""):
                h.update(chunk)
    except OSError:
        return ""
    return h.hexdigest()


def canonical_json(obj) -> str:
    """Deterministic JSON: sorted keys, floats at 17 significant digits."""
    return _canonical(obj)


def _canonical(obj) -> str:
    if isinstance(obj, dict):
        items = sorted(obj.items())
        inner = ",".join(f"{json.dumps(k)}:{_canonical(v)}" for k, v in items)
        return "{" + inner + "}"
    if isinstance(obj, (list, tuple)):
        return "[" + ",".join(_canonical(v) for v in obj) + "]"
    if isinstance(obj, bool) or obj is None:
        return json.dumps(obj)
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return format(float(obj), ".17g")
    if isinstance(obj, str):
        return json.dumps(obj)
    raise TypeError(f"cannot canonicalize {type(obj)!r}")


def save_session(session: Session, path) -> None:
    try:
        Path(path).write_text(_canonical(session.to_dict()) + "\n")
    except OSError as exc:
        raise IoFailure(str(exc)) from exc


def load_session(path) -> Session:
    """Read and validate a session file.

    Hash mismatches against the referenced volume files produce a
    provenance warning, not a failure; schema or invariant violations
    raise SchemaInvalid.
    """
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise IoFailure(str(exc)) from exc
    try:
        payload = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaInvalid(f"not valid JSON: {exc}") from exc
    if not isinstance(payload, dict):
        raise SchemaInvalid("session file must hold a JSON object")
    version = payload.get("format_version")
    if version != FORMAT_VERSION:
        raise VersionUnsupported(f"format_version {version!r} unsupported")
    try:
        ref = VolumeRef(**payload["volume_ref"])
        endpoints = [list(map(float, p)) for p in payload["endpoints"]["points"]]
        rig = DeformationRig.from_dict(payload["rig"])
        edit_log = list(payload["edit_log"])
    except (KeyError, TypeError, ValueError) as exc:
        raise SchemaInvalid(f"malformed session: {exc}") from exc

    for p, stored in (
        (ref.data_path, ref.data_sha256),
        (ref.meta_path, ref.meta_sha256),
    ):
        if stored and Path(p).is_file() and _sha256(p) != stored:
            warnings.warn(
                f"provenance: content of {p} no longer matches the session hash",
                stacklevel=2,
            )
    return Session(ref, endpoints, rig, edit_log, version)


def replay_edits(initial_rig: DeformationRig, edit_log: list) -> DeformationRig:
    """Re-apply a session's rig edits onto its initial rig.

    Entries that are not plain rig edits (e.g. endpoint re-extractions)
    cannot be replayed without the volume and raise SchemaInvalid.
    """
    rig = initial_rig
    for entry in edit_log:
        rig = apply_edit(rig, edit_from_dict(entry))
    return rig
