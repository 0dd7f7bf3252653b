"""Scripted skeleton scenes: 14 scatterers with sinusoidal limb motion.

Scripts are pure functions of the frame index, so any frame can be
synthesized independently and integral-period motions repeat bitwise.
The camera ground truth is an orthographic projection of the 3 m x 3 m
frontal workspace onto the 256 x 256 image plane.
"""

from __future__ import annotations

from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .radar import ScatterScene, Target
from .skeleton import CAMERA_SIZE, Skeleton2D

__all__ = [
    "SCRIPT_NAMES",
    "skeleton_scene",
    "make_scene",
    "apply_motion_script",
    "project_to_camera",
]

SCRIPT_NAMES = ("static_pose", "wave_one_hand", "wave_two_hands", "walk_wave")

# (x, z) offsets in meters from the body center; y offsets are zero at rest.
# the figure is kept small enough that every keypoint stays inside the
# +-15 degree elevation field of view across all scripted motions
_RIG = np.array(
    [
        (0.00, 0.59),  # head
        (0.00, 0.44),  # neck
        (-0.18, 0.40),  # r_shoulder
        (0.18, 0.40),  # l_shoulder
        (-0.21, 0.16),  # r_elbow
        (0.21, 0.16),  # l_elbow
        (-0.22, -0.06),  # r_wrist
        (0.22, -0.06),  # l_wrist
        (-0.11, 0.05),  # r_hip
        (0.11, 0.05),  # l_hip
        (-0.12, -0.28),  # r_knee
        (0.12, -0.28),  # l_knee
        (-0.13, -0.59),  # r_ankle
        (0.13, -0.59),  # l_ankle
    ]
)

# torso returns are stronger than limb returns, so the fast-moving edge
# keypoints are the hard targets
_REFLECTIVITY = np.array([2.0, 2.0, 2.0, 2.0, 1.0, 1.0, 1.0, 1.0, 2.0, 2.0, 1.0, 1.0, 1.0, 1.0])

_WORKSPACE = 3.0  # meters mapped onto the camera plane

R_ELBOW, L_ELBOW, R_WRIST, L_WRIST = 4, 5, 6, 7
R_KNEE, L_KNEE, R_ANKLE, L_ANKLE = 10, 11, 12, 13


def _defaults(script: str, params: Optional[dict]) -> dict:
    base = {
        "center_x": 0.0,
        "center_y": 2.8,
        "wave_period": 2.0,
        "wave_amp_y": 0.30,
        "wave_amp_z": 0.15,
        "hand": "right",
        "walk_period": 4.0,
        "walk_amp": 0.35,
        "sway_amp": 0.10,
        "step_amp": 0.08,
    }
    if script not in SCRIPT_NAMES:
        raise ValueError(f"unknown motion script {script!r}; expected one of {SCRIPT_NAMES}")
    if params:
        unknown = set(params) - set(base)
        if unknown:
            raise ValueError(f"unknown motion parameters {sorted(unknown)}")
        base.update(params)
    return base


def _cycle_phase(frame: int, period: float, fps: float) -> float:
    """Phase in [0, 2pi); reduces by whole cycles when one cycle is an
    integral number of frames so that the motion repeats bitwise."""
    frames_per_cycle = period * fps
    p_int = round(frames_per_cycle)
    if p_int > 0 and abs(frames_per_cycle - p_int) < 1e-9:
        return 2.0 * np.pi * ((frame % p_int) / frames_per_cycle)
    return 2.0 * np.pi * frame / frames_per_cycle


def skeleton_positions(
    script: str, params: Optional[dict], frame: int, fps: float
) -> Tuple[np.ndarray, np.ndarray]:
    """Positions (14, 3) and analytic velocities (14, 3) at a frame."""
    p = _defaults(script, params)
    pos = np.zeros((14, 3))
    pos[:, 0] = p["center_x"] + _RIG[:, 0]
    pos[:, 1] = p["center_y"]
    pos[:, 2] = _RIG[:, 1]
    vel = np.zeros((14, 3))

    def wave(side: str) -> None:
        wrist, elbow = (R_WRIST, R_ELBOW) if side == "right" else (L_WRIST, L_ELBOW)
        ph = _cycle_phase(frame, p["wave_period"], fps)
        w = 2.0 * np.pi / p["wave_period"]
        for idx, scale in ((wrist, 1.0), (elbow, 0.5)):
            pos[idx, 1] += -scale * p["wave_amp_y"] * np.sin(ph)
            pos[idx, 2] += scale * p["wave_amp_z"] * np.sin(ph)
            vel[idx, 1] += -scale * p["wave_amp_y"] * w * np.cos(ph)
            vel[idx, 2] += scale * p["wave_amp_z"] * w * np.cos(ph)

    if script == "wave_one_hand":
        wave(p["hand"])
    elif script == "wave_two_hands":
        wave("right")
        wave("left")
    elif script == "walk_wave":
        ph = _cycle_phase(frame, p["walk_period"], fps)
        w = 2.0 * np.pi / p["walk_period"]
        pos[:, 1] += p["walk_amp"] * np.sin(ph)
        vel[:, 1] += p["walk_amp"] * w * np.cos(ph)
        pos[:, 0] += p["sway_amp"] * np.cos(ph)
        vel[:, 0] += -p["sway_amp"] * w * np.sin(ph)
        # legs alternate at twice the stride rate
        ph2, w2 = 2.0 * ph, 2.0 * w
        for idx, sign in ((R_KNEE, 1.0), (R_ANKLE, 1.0), (L_KNEE, -1.0), (L_ANKLE, -1.0)):
            pos[idx, 1] += sign * p["step_amp"] * np.sin(ph2)
            vel[idx, 1] += sign * p["step_amp"] * w2 * np.cos(ph2)
        wave(p["hand"])
    return pos, vel


def _targets_from(pos: np.ndarray, vel: np.ndarray) -> List[Target]:
    return [Target(pos[i], vel[i], _REFLECTIVITY[i]) for i in range(14)]


def apply_motion_script(scene: ScatterScene, frame: int, fps: float) -> List[Target]:
    """Instantaneous targets of an animated scene (used by the simulator)."""
    pos, vel = skeleton_positions(scene.motion_script, scene.motion_params, frame, fps)
    return _targets_from(pos, vel)


def project_to_camera(pos: np.ndarray) -> Skeleton2D:
    """Orthographic projection of (14, 3) world points to camera pixels."""
    half = _WORKSPACE / 2.0
    scale = CAMERA_SIZE / _WORKSPACE
    u = (pos[:, 0] + half) * scale
    v = (half - pos[:, 2]) * scale
    coords = np.stack([u, v], axis=1)
    coords = np.clip(coords, 0.0, np.nextafter(float(CAMERA_SIZE), 0.0))
    return Skeleton2D(coords)


def make_scene(script: str, duration: float, params: Optional[dict] = None) -> ScatterScene:
    """An animated scene whose targets are derived per frame from the script."""
    pos, vel = skeleton_positions(script, params, 0, 10.0)
    return ScatterScene(
        targets=_targets_from(pos, vel),
        duration=duration,
        motion_script=script,
        motion_params=dict(params or {}),
    )


def skeleton_scene(
    script: str,
    duration: float,
    fps: float = 10.0,
    params: Optional[dict] = None,
) -> Tuple[List[ScatterScene], List[Skeleton2D]]:
    """Per-frame scene snapshots and projected 2D ground truth.

    Args:
        script: one of ``SCRIPT_NAMES``.
        duration: scene length in seconds (must be positive).
        fps: frame rate.
        params: optional script parameter overrides.

    Returns:
        (snapshots, skeletons): one static ScatterScene and one Skeleton2D
        per frame.
    """
    if duration <= 0:
        raise ValueError("duration must be positive")
    n_frames = int(round(duration * fps))
    snapshots: List[ScatterScene] = []
    skeletons: List[Skeleton2D] = []
    for frame in range(n_frames):
        pos, vel = skeleton_positions(script, params, frame, fps)
        snapshots.append(ScatterScene(targets=_targets_from(pos, vel), duration=1.0 / fps))
        skeletons.append(project_to_camera(pos))
    return snapshots, skeletons
