"""Build a small synthetic editing session for the client tests.

Usage: python make_session.py <output-dir>
Writes bent.raw/bent.json and session.json into the directory and prints
the session path.
"""

import sys
from pathlib import Path

import numpy as np

from unbend import (
    CylinderSpec,
    Session,
    VolumeRef,
    export_volume,
    extract_rig,
    make_bent_cylinder,
    save_session,
)

out = Path(sys.argv[1])
out.mkdir(parents=True, exist_ok=True)

spec = CylinderSpec(radius=3.0, amplitude=4.0, periods=1.0, dims=(32, 32, 32))
bent, straight, true_rig = make_bent_cylinder(spec)
export_volume(bent, out / "bent.raw", out / "bent.json")

endpoints = np.array(
    [true_rig.keyframes[0].position, true_rig.keyframes[-1].position]
)
result = extract_rig(bent, endpoints)
session = Session(
    VolumeRef.for_files(out / "bent.raw", out / "bent.json"),
    [p.tolist() for p in endpoints],
    result.rig,
)
save_session(session, out / "session.json")
print(out / "session.json")
