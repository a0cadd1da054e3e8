"""Arm model, forward kinematics and trajectory documents.

The default arm is a 6-dof chain: shoulder yaw (about world z), shoulder
pitch, elbow pitch, then a roll-pitch-yaw wrist.  Link lengths are upper arm
0.35 m, forearm 0.30 m and a 0.10 m hand offset.  At the zero configuration
the arm points along +x from the shoulder.

A trajectory is a fixed-length sequence of joint configurations (waypoints).
The grasp is rigid: the manipulated object's pose at a waypoint is the
end-effector pose composed with the context's grasp transform.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, InvariantError, SchemaError
from .world import Context, Pose

TRAJECTORY_SCHEMA_VERSION = "trajectory.v1"

MIN_WAYPOINTS = 9


def _rx(a):
    c, s = np.cos(a), np.sin(a)
    return np.array([[1, 0, 0], [0, c, -s], [0, s, c]])


def _ry(a):
    c, s = np.cos(a), np.sin(a)
    return np.array([[c, 0, s], [0, 1, 0], [-s, 0, c]])


def _rz(a):
    c, s = np.cos(a), np.sin(a)
    return np.array([[c, -s, 0], [s, c, 0], [0, 0, 1]])


@dataclass
class ArmModel:
    """Kinematic parameters of the arm."""

    shoulder: np.ndarray = field(default_factory=lambda: np.zeros(3))
    upper_arm: float = 0.35
    forearm: float = 0.30
    hand: float = 0.10
    joint_limits: np.ndarray = field(
        default_factory=lambda: np.array(
            [
                [-np.pi, np.pi],  # shoulder yaw
                [-2.0, 2.0],  # shoulder pitch
                [-2.5, 2.5],  # elbow pitch
                [-np.pi, np.pi],  # wrist roll
                [-2.0, 2.0],  # wrist pitch
                [-np.pi, np.pi],  # wrist yaw
            ]
        )
    )

    @property
    def dof(self) -> int:
        return len(self.joint_limits)

    def check_limits(self, q):
        q = np.asarray(q, dtype=float)
        if q.shape != (self.dof,):
            raise DomainError(f"config has {q.shape} entries, arm has {self.dof} joints")
        lo, hi = self.joint_limits[:, 0], self.joint_limits[:, 1]
        if np.any(q < lo - 1e-9) or np.any(q > hi + 1e-9):
            bad = int(np.argmax((q < lo - 1e-9) | (q > hi + 1e-9)))
            raise DomainError(
                f"joint {bad} value {q[bad]:.4f} outside [{lo[bad]:.4f}, {hi[bad]:.4f}]"
            )
        return q


# the stock arm stands on a 0.75 m base so tables sit between floor and shoulder
DEFAULT_ARM = ArmModel(shoulder=np.array([0.0, 0.0, 0.75]))

FRAME_NAMES = ("shoulder", "elbow", "wrist", "end_effector")


def fk(arm: ArmModel, q, validate: bool = True):
    """Forward kinematics.

    Returns ``(points, rotation)`` where ``points`` is a (4, 3) array of the
    shoulder, elbow, wrist and end-effector positions and ``rotation`` the
    end-effector orientation.
    """
    if validate:
        q = arm.check_limits(q)
    else:
        q = np.asarray(q, dtype=float)
    r_upper = _rz(q[0]) @ _ry(-q[1])
    elbow = arm.shoulder + r_upper @ np.array([arm.upper_arm, 0.0, 0.0])
    r_fore = r_upper @ _ry(-q[2])
    wrist = elbow + r_fore @ np.array([arm.forearm, 0.0, 0.0])
    r_hand = r_fore @ _rx(q[3]) @ _ry(-q[4]) @ _rz(q[5])
    ee = wrist + r_hand @ np.array([arm.hand, 0.0, 0.0])
    return np.stack([arm.shoulder, elbow, wrist, ee]), r_hand


def ee_pose(arm: ArmModel, q, validate: bool = True) -> Pose:
    points, rotation = fk(arm, q, validate=validate)
    return Pose(points[3], rotation)


def object_pose(arm: ArmModel, q, grasp: Pose, validate: bool = True) -> Pose:
    """Pose of a rigidly grasped object for one configuration."""
    return ee_pose(arm, q, validate=validate).compose(grasp)


def cylindrical(arm: ArmModel, p):
    """Cylindrical coordinates (r, theta, z) of a point, shoulder-relative.

    theta is the azimuth about the world z axis through the shoulder and is
    0 by convention on the axis itself (r = 0).
    """
    d = np.asarray(p, dtype=float) - arm.shoulder
    r = np.hypot(d[0], d[1])
    theta = 0.0 if r < 1e-12 else np.arctan2(d[1], d[0])
    return np.array([r, theta, d[2]])


@dataclass
class Trajectory:
    """A joint-space path for one context, at least MIN_WAYPOINTS long."""

    context_id: str
    waypoints: np.ndarray  # (N, D)
    id: str | None = None

    def __post_init__(self):
        self.waypoints = np.asarray(self.waypoints, dtype=float)
        if self.waypoints.ndim != 2:
            raise InvariantError("trajectory waypoints must be a 2-d array")
        if len(self.waypoints) < MIN_WAYPOINTS:
            raise InvariantError(
                f"trajectory has {len(self.waypoints)} waypoints, needs >= {MIN_WAYPOINTS}"
            )

    def __len__(self):
        return len(self.waypoints)


def check_trajectory(traj: Trajectory, ctx: Context, arm: ArmModel = DEFAULT_ARM):
    """Validate a trajectory against its context; raises on violation."""
    if traj.context_id != ctx.id:
        raise InvariantError(f"trajectory is for context {traj.context_id!r}, not {ctx.id!r}")
    if traj.waypoints.shape[1] != arm.dof:
        raise InvariantError(
            f"waypoints have {traj.waypoints.shape[1]} joints, arm has {arm.dof}"
        )
    for q in traj.waypoints:
        arm.check_limits(q)
    if np.max(np.abs(traj.waypoints[0] - ctx.start_config)) > 1e-9:
        raise InvariantError("trajectory does not start at the context start config")
    if np.max(np.abs(traj.waypoints[-1] - ctx.goal_config)) > 1e-9:
        raise InvariantError("trajectory does not end at the context goal config")


def object_poses(arm: ArmModel, traj: Trajectory, ctx: Context):
    """Manipulated-object pose at every waypoint."""
    return [object_pose(arm, q, ctx.grasp_transform, validate=False) for q in traj.waypoints]


def arm_points(arm: ArmModel, traj: Trajectory):
    """(N, 4, 3) array of shoulder/elbow/wrist/end-effector positions."""
    return np.stack([fk(arm, q, validate=False)[0] for q in traj.waypoints])


def arc_length(traj: Trajectory) -> float:
    """Total joint-space path length."""
    return float(np.linalg.norm(np.diff(traj.waypoints, axis=0), axis=1).sum())


def trajectory_from_json(doc) -> Trajectory:
    if doc.get("schema") != TRAJECTORY_SCHEMA_VERSION:
        raise SchemaError(f"trajectory document: schema: expected {TRAJECTORY_SCHEMA_VERSION}")
    for key in ("context_id", "waypoints"):
        if key not in doc:
            raise SchemaError(f"trajectory document: missing {key}")
    try:
        waypoints = np.asarray(doc["waypoints"], dtype=float)
    except (TypeError, ValueError) as exc:
        raise SchemaError(f"trajectory document: waypoints: {exc}") from exc
    return Trajectory(context_id=doc["context_id"], waypoints=waypoints, id=doc.get("id"))


def trajectory_to_json(traj: Trajectory) -> dict:
    doc = {
        "schema": TRAJECTORY_SCHEMA_VERSION,
        "context_id": traj.context_id,
        "waypoints": [[float(v) for v in q] for q in traj.waypoints],
    }
    if traj.id is not None:
        doc["id"] = traj.id
    return doc


def load_trajectory(path) -> Trajectory:
    with open(path) as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"{path}: not valid JSON: {exc}") from exc
    return trajectory_from_json(doc)


def save_trajectory(traj: Trajectory, path):
    with open(path, "w") as fh:
        json.dump(trajectory_to_json(traj), fh)
        fh.write("\n")
