import numpy as np
import pytest

import unbend


@pytest.fixture(scope="session")
def small_sine():
    """Gentle 48^3 bent cylinder shared by the slower integration tests."""
    spec = unbend.CylinderSpec(
        radius=4.0, amplitude=5.0, periods=1.0, dims=(48, 48, 48)
    )
    bent, straight, true_rig = unbend.make_bent_cylinder(spec)
    return spec, bent, straight, true_rig


@pytest.fixture(scope="session")
def small_pipeline(small_sine):
    """Automated extraction on the small bent cylinder."""
    spec, bent, straight, true_rig = small_sine
    head = true_rig.keyframes[0].position
    tail = true_rig.keyframes[-1].position
    result = unbend.extract_rig(bent, np.array([head, tail]))
    return spec, bent, straight, true_rig, result


def random_rig(rng, n_keyframes=6, twist=True):
    """Random smooth rig: a jittered helix with frames from its tangents."""
    ts = np.linspace(0.0, 2.0, n_keyframes)
    pts = np.column_stack(
        [
            4.0 * np.cos(ts) + rng.normal(0, 0.1, n_keyframes),
            4.0 * np.sin(ts) + rng.normal(0, 0.1, n_keyframes),
            6.0 * ts,
        ]
    )
    line = unbend.Polyline(pts)
    framed = unbend.compute_frames(line)
    kfs = []
    for i in range(n_keyframes):
        kf = unbend.Keyframe(framed.vertices[i], framed.frames[i], (2.0, 3.0))
        kfs.append(kf)
    rig = unbend.DeformationRig(kfs)
    if twist:
        for i in range(n_keyframes):
            rig = unbend.apply_edit(
                rig, unbend.Rotate(i, rng.uniform(-0.5, 0.5))
            )
    return rig
