"""HTTP editing service over a session: slices, previews, keyframe edits.

One writer, many readers: every mutation is serialized under a lock,
bumps the rig version, and is appended to the session's edit log.
Readers evaluate against a consistent rig snapshot; image responses
carry the version they were computed from.
"""

from __future__ import annotations

import base64
import io
import threading
import time
from dataclasses import dataclass, field

import numpy as np
from fastapi import Body, FastAPI, Response
from fastapi.responses import JSONResponse
from PIL import Image

from . import pipeline as pipeline_mod
from .errors import UnbendError
from .rig import (
    DeformationRig,
    InsertAt,
    Remove,
    Rotate,
    SetCenter,
    SetExtent,
    apply_edit,
    edit_to_dict,
)
from .session import Session, save_session
from .skeleton import FramedPolyline, skeleton_to_dict
from .volume import ScalarVolume, export_volume, load_volume
from .warp import StraightVolumeSpec, cross_section, default_spec, straighten

PREVIEW_VOXEL_BUDGET = 2_000_000


def _to_png_bytes(img: np.ndarray) -> bytes:
    arr = np.clip(np.asarray(img), 0.0, 1.0)
    quant = np.round(arr * 255.0).astype(np.uint8)
    buf = io.BytesIO()
    Image.fromarray(quant, mode="L").save(buf, format="PNG")
    return buf.getvalue()


@dataclass
class ServiceState:
    session: Session
    volume: ScalarVolume | None = None
    skeleton: FramedPolyline | None = None
    params: pipeline_mod.PipelineParams = field(
        default_factory=pipeline_mod.PipelineParams
    )
    version: int = 0
    lock: threading.Lock = field(default_factory=threading.Lock)

    def snapshot(self) -> tuple[DeformationRig, int]:
        with self.lock:
            return self.session.rig, self.version

    def require_volume(self) -> ScalarVolume:
        if self.volume is None:
            ref = self.session.volume_ref
            self.volume = load_volume(ref.data_path, ref.meta_path)
        return self.volume

    def mutate(self, edit) -> int:
        """Apply one rig edit, log it, and return the new version."""
        with self.lock:
            self.session.rig = apply_edit(self.session.rig, edit)
            self.session.log_edit(edit_to_dict(edit), _now())
            self.version += 1
            return self.version


def _now() -> str:
    return time.strftime("%Y-%m-%dT%H:%M:%S", time.gmtime())


def _preview_spec(rig: DeformationRig, spacing) -> StraightVolumeSpec:
    spec = default_spec(rig, spacing)
    n = int(np.prod(spec.out_dims))
    if n <= PREVIEW_VOXEL_BUDGET:
        return spec
    scale = (n / PREVIEW_VOXEL_BUDGET) ** (1.0 / 3.0)
    return default_spec(rig, tuple(s * scale for s in spacing))


def make_app(state: ServiceState) -> FastAPI:
    app = FastAPI(title="unbend session service")

    @app.exception_handler(UnbendError)
    async def _unbend_error(_, exc: UnbendError):
        return JSONResponse(
            status_code=400,
            content={"error": type(exc).__name__, "detail": str(exc)},
        )

    @app.get("/rig")
    def get_rig():
        rig, version = state.snapshot()
        return {
            "rig": rig.to_dict(),
            "version": version,
            "total_arclength": rig.total_arclength,
        }

    @app.get("/curve")
    def get_curve():
        rig, version = state.snapshot()
        skeleton = (
            skeleton_to_dict(state.skeleton) if state.skeleton is not None else None
        )
        return {
            "keyframes": rig.to_dict()["keyframes"],
            "skeleton": skeleton,
            "version": version,
        }

    @app.get("/slice")
    def get_slice(t: float, w: int = 256, h: int = 256):
        rig, version = state.snapshot()
        vol = state.require_volume()
        img = cross_section(rig, vol, t, (w, h))
        return Response(
            content=_to_png_bytes(img),
            media_type="image/png",
            headers={"X-Rig-Version": str(version)},
        )

    @app.get("/preview")
    def get_preview():
        rig, version = state.snapshot()
        vol = state.require_volume()
        spec = _preview_spec(rig, vol.spacing)
        straight = straighten(rig, vol, spec)
        mips = {
            "x": straight.data.max(axis=0),
            "y": straight.data.max(axis=1),
            "z": straight.data.max(axis=2),
        }
        payload = {
            axis: base64.b64encode(_to_png_bytes(img)).decode("ascii")
            for axis, img in mips.items()
        }
        payload["version"] = version
        return payload

    @app.post("/keyframe/insert")
    def post_insert(payload: dict = Body(...)):
        version = state.mutate(InsertAt(float(payload["t"])))
        return {"version": version}

    @app.post("/keyframe/remove")
    def post_remove(payload: dict = Body(...)):
        version = state.mutate(Remove(int(payload["i"])))
        return {"version": version}

    @app.post("/keyframe/rotate")
    def post_rotate(payload: dict = Body(...)):
        version = state.mutate(
            Rotate(int(payload["i"]), float(payload["angle"]))
        )
        return {"version": version}

    @app.post("/keyframe/center")
    def post_center(payload: dict = Body(...)):
        version = state.mutate(
            SetCenter(
                int(payload["i"]), float(payload["dx"]), float(payload["dy"])
            )
        )
        return {"version": version}

    @app.post("/keyframe/extent")
    def post_extent(payload: dict = Body(...)):
        version = state.mutate(
            SetExtent(int(payload["i"]), float(payload["rx"]), float(payload["ry"]))
        )
        return {"version": version}

    @app.post("/endpoints")
    def post_endpoints(payload: dict = Body(...)):
        points = np.asarray(payload["points"], dtype=np.float64)
        vol = state.require_volume()
        result = pipeline_mod.extract_rig(vol, points, state.params)
        with state.lock:
            state.session.rig = result.rig
            state.session.endpoints = [list(map(float, p)) for p in points]
            state.skeleton = result.skeleton
            state.session.log_edit(
                {"op": "endpoints", "points": points.tolist()}, _now()
            )
            state.version += 1
            version = state.version
        return {"version": version}

    @app.post("/save")
    def post_save(payload: dict = Body(...)):
        with state.lock:
            save_session(state.session, payload["path"])
        return {"saved": payload["path"]}

    @app.get("/export")
    def get_export(path: str):
        rig, version = state.snapshot()
        vol = state.require_volume()
        straight = straighten(rig, vol)
        data_path, meta_path = path + ".raw", path + ".json"
        export_volume(straight, data_path, meta_path)
        return {
            "data_path": data_path,
            "meta_path": meta_path,
            "version": version,
        }

    return app


def serve(session: Session, bind: str = "127.0.0.1:8000") -> None:
    """Run the editing service until interrupted."""
    import uvicorn

    host, _, port = bind.rpartition(":")
    state = ServiceState(session)
    app = make_app(state)
    uvicorn.run(app, host=host or "127.0.0.1", port=int(port), log_level="warning")
