"""Drive the editing service API in-process: slices, previews, edits.

The same endpoints back the browser client in frontend/. Run:

    python demos/05_service_api.py
"""

import base64
from pathlib import Path

import numpy as np
from fastapi.testclient import TestClient

from unbend import (
    CylinderSpec,
    Session,
    VolumeRef,
    export_volume,
    extract_rig,
    make_bent_cylinder,
)
from unbend.service import ServiceState, make_app

out_dir = Path(__file__).parent / "output"
out_dir.mkdir(exist_ok=True)

spec = CylinderSpec(radius=3.0, amplitude=4.0, periods=1.0, dims=(40, 40, 40))
bent, straight, true_rig = make_bent_cylinder(spec)
export_volume(bent, out_dir / "svc_vol.raw", out_dir / "svc_vol.json")

endpoints = [
    true_rig.keyframes[0].position.tolist(),
    true_rig.keyframes[-1].position.tolist(),
]
rig = extract_rig(bent, np.asarray(endpoints)).rig
session = Session(
    VolumeRef.for_files(out_dir / "svc_vol.raw", out_dir / "svc_vol.json"),
    endpoints,
    rig,
)

client = TestClient(make_app(ServiceState(session)))

info = client.get("/rig").json()
total = info["total_arclength"]
print(f"rig over HTTP: {len(info['rig']['keyframes'])} keyframes, "
      f"arclength {total:.1f}, version {info['version']}")

# --- scrub a cross-section and save it as PNG ----------------------------
r = client.get("/slice", params={"t": 0.5 * total, "w": 96, "h": 96})
(out_dir / "slice.png").write_bytes(r.content)
print(f"slice at mid-curve -> {out_dir/'slice.png'} "
      f"(version header {r.headers['x-rig-version']})")

# --- edits are serialized, versioned, and logged -------------------------
v1 = client.post("/keyframe/insert", json={"t": 0.25 * total}).json()["version"]
v2 = client.post("/keyframe/rotate", json={"i": 1, "angle": 0.3}).json()["version"]
print(f"insert -> version {v1}, rotate -> version {v2}")

# --- preview returns three maximum-intensity projections ------------------
preview = client.get("/preview").json()
for axis in ("x", "y", "z"):
    png = base64.b64decode(preview[axis])
    (out_dir / f"preview_{axis}.png").write_bytes(png)
print("previews written:", ", ".join(f"preview_{a}.png" for a in "xyz"))

# --- persistence round trip ----------------------------------------------
client.post("/save", json={"path": str(out_dir / "svc_session.json")})
exported = client.get("/export", params={"path": str(out_dir / "svc_straight")}).json()
print("exported straight volume:", exported["data_path"])
