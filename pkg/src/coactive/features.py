"""Feature maps turning (context, trajectory) pairs into score vectors.

Two blocks feed the linear score.  The object-interaction block couples the
property labels of the manipulated object with those of each environment
object it passes close to.  The environment block describes the motion
itself: clearances to surfaces, the object's tilt and spectral signature,
and where the arm travels in shoulder-centered cylindrical coordinates.

Frozen layouts (index order within each vector):

object_interaction_features, dimension 4*M*M for M property names.  Edges of
the interaction graph are (waypoint j, environment object k) pairs where the
placed objects come within ``tau`` meters or object k lies below the held
object.  Each edge contributes into block (p, q) at offset 4*(p*M + q) the
4-vector [dx, dy, dz, below] scaled by label_k[p] * label_held[q], where
(dx, dy, dz) is the minimum-distance vector from object k to the held object
and ``below`` is the indicator.

environment_features, dimension 75, concatenated as
  [0:20]   object-environment clearances
  [20:48]  held-object motion
  [48:75]  arm motion
with the sub-layouts:

object-environment (20): for each time third the minima of four per-waypoint
signals [vertical drop to the supporting surface below, horizontal distance
to the nearest surface edge, distance to the table, distance to the goal
position] (12 values), then the whole-trajectory means of the vertical and
horizontal signals (2), then a 3x2 spectrogram of the vertical signal: per
third the low and high band mean power (6).

held-object motion (28): per third [cos of the largest tilt from the goal
orientation, then low/high band power for the object's x, y, z and tilt
signals] (9 each), followed by the global cos of the largest tilt (1).

arm motion (27): per third, over the union of elbow and wrist samples in
cylindrical coordinates, [max r, min r, max theta, min theta, max z, min z]
plus the elbow's (r, theta, z) sampled where the end effector attains its
max r, max theta and max z in that third (9 per third).  Azimuths are
unwrapped within a third and the wrist series is aligned to the elbow's
branch so a path crossing the +-pi seam stays contiguous.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .kinematics import DEFAULT_ARM, ArmModel, Trajectory, fk
from .world import Context, min_collision_distance, place_shape

TAU_DEFAULT = 0.15

ENV_BLOCK_DIM = 20
OBJECT_BLOCK_DIM = 28
ROBOT_BLOCK_DIM = 27
ENVIRONMENT_DIM = ENV_BLOCK_DIM + OBJECT_BLOCK_DIM + ROBOT_BLOCK_DIM

_RESAMPLE_N = 32
_LOW_BAND = slice(1, 9)
_HIGH_BAND = slice(9, 17)


@dataclass
class FeatureVector:
    """Score features for one (context, trajectory) pair."""

    object_interactions: np.ndarray  # (4 * M * M,)
    environment: np.ndarray  # (ENVIRONMENT_DIM,)

    def concatenated(self):
        return np.concatenate([self.object_interactions, self.environment])


def object_interaction_dim(ctx: Context) -> int:
    m = len(ctx.properties)
    return 4 * m * m


# ---------------------------------------------------------------------------
# spectral helper


def psd_band(signal, n_resample: int = _RESAMPLE_N):
    """Low and high band mean power of a uniformly resampled signal.

    The signal is linearly resampled onto ``n_resample`` points spanning the
    window as one period (the grid excludes t=1, which would duplicate t=0
    of the next period), mean-removed, and transformed with a DFT.  Low band
    is the mean squared magnitude over bins 1..8, high band over bins 9..16.
    """
    x = np.asarray(signal, dtype=float)
    if x.ndim != 1 or len(x) < 2:
        raise DomainError("psd_band needs a 1-d signal with at least 2 samples")
    if not np.all(np.isfinite(x)):
        raise DomainError("psd_band requires finite samples")
    t_in = np.linspace(0.0, 1.0, len(x))
    t_out = np.arange(n_resample) / n_resample
    resampled = np.interp(t_out, t_in, x)
    resampled = resampled - resampled.mean()
    power = np.abs(np.fft.rfft(resampled)) ** 2
    return float(power[_LOW_BAND].mean()), float(power[_HIGH_BAND].mean())


def _thirds(n):
    return np.array_split(np.arange(n), 3)


# ---------------------------------------------------------------------------
# interaction graph


def _object_bodies(ctx, traj, arm):
    """Held-object body at every waypoint (poses come from the grasp)."""
    bodies = []
    shape = ctx.manipulated.shape
    for q in traj.waypoints:
        points, rotation = fk(arm, q, validate=False)
        pos = points[3] + rotation @ ctx.grasp_transform.position
        rot = rotation @ ctx.grasp_transform.rotation
        bodies.append(place_shape(shape, _PoseView(pos, rot)))
    return bodies


class _PoseView:
    __slots__ = ("position", "rotation")

    def __init__(self, position, rotation):
        self.position = position
        self.rotation = rotation


def interaction_edges(ctx: Context, traj: Trajectory, arm: ArmModel = DEFAULT_ARM, tau: float = TAU_DEFAULT):
    """Edges (waypoint_index, env_object_index, distance_vector, below_flag).

    An edge exists when the held object passes within ``tau`` of an
    environment object or that object lies below it.  The distance vector
    points from the environment object toward the held object.
    """
    env_objects = ctx.environment_objects()
    env_bodies = [o.body() for o in env_objects]
    env_radii = [b.bounding_radius() for b in env_bodies]
    edges = []
    for j, held in enumerate(_object_bodies(ctx, traj, arm)):
        held_radius = held.bounding_radius()
        held_horiz = held.horizontal_bounding_radius()
        held_bottom = held.bottom_z()
        for k, body in enumerate(env_bodies):
            gap_bound = (
                float(np.linalg.norm(body.center - held.center)) - env_radii[k] - held_radius
            )
            below = False
            if (
                np.hypot(*(held.center - body.center)[:2])
                < body.horizontal_bounding_radius() + held_horiz
            ):
                below = body.top_z() <= held_bottom + 1e-9
            if gap_bound >= tau and not below:
                continue
            dist, vec = min_collision_distance(body, held)
            if dist < tau or below:
                edges.append((j, k, vec, below))
    return edges


def object_interaction_features(
    ctx: Context, traj: Trajectory, arm: ArmModel = DEFAULT_ARM, tau: float = TAU_DEFAULT
):
    """Label-coupled interaction features, dimension 4*M*M."""
    m = len(ctx.properties)
    env_objects = ctx.environment_objects()
    held_labels = ctx.manipulated.labels
    out = np.zeros((m, m, 4))
    for _, k, vec, below in interaction_edges(ctx, traj, arm, tau):
        contrib = np.array([vec[0], vec[1], vec[2], 1.0 if below else 0.0])
        out += np.einsum("p,q->pq", env_objects[k].labels, held_labels)[:, :, None] * contrib
    return out.reshape(-1)


# ---------------------------------------------------------------------------
# environment block


def _surface_signals(ctx, bodies):
    """Per-waypoint vertical / horizontal / table / goal distance signals."""
    table = ctx.table
    table_body = table.body()
    goal_pos = ctx.goal_pose.position
    n = len(bodies)
    vert = np.empty(n)
    horiz = np.empty(n)
    table_d = np.empty(n)
    goal_d = np.empty(n)
    for j, held in enumerate(bodies):
        c = held.center
        bottom = held.bottom_z()
        support_z = 0.0  # the floor backstops every drop
        h_best = np.inf
        for s in ctx.surfaces:
            dx = c[0] - s.center[0]
            dy = c[1] - s.center[1]
            hx, hy = s.half_extents
            inside = abs(dx) <= hx and abs(dy) <= hy
            if inside and s.center[2] <= bottom + 1e-9 and s.center[2] > support_z:
                support_z = s.center[2]
            if inside:
                edge = min(hx - abs(dx), hy - abs(dy))
            else:
                edge = np.hypot(max(abs(dx) - hx, 0.0), max(abs(dy) - hy, 0.0))
            h_best = min(h_best, edge)
        vert[j] = max(bottom - support_z, 0.0)
        horiz[j] = h_best
        table_d[j], _ = min_collision_distance(held, table_body)
        goal_d[j] = float(np.linalg.norm(c - goal_pos))
    return vert, horiz, table_d, goal_d


def object_environment_features(ctx: Context, traj: Trajectory, arm: ArmModel = DEFAULT_ARM):
    """Clearance block, dimension 20; see the module docstring for layout."""
    bodies = _object_bodies(ctx, traj, arm)
    vert, horiz, table_d, goal_d = _surface_signals(ctx, bodies)
    out = []
    for idx in _thirds(len(bodies)):
        out.extend(
            [vert[idx].min(), horiz[idx].min(), table_d[idx].min(), goal_d[idx].min()]
        )
    out.extend([vert.mean(), horiz.mean()])
    for idx in _thirds(len(bodies)):
        low, high = psd_band(vert[idx])
        out.extend([low, high])
    return np.array(out)


def object_motion_features(ctx: Context, traj: Trajectory, arm: ArmModel = DEFAULT_ARM):
    """Held-object motion block, dimension 28."""
    positions = []
    tilts = []
    goal_axis = ctx.goal_pose.rotation[:, 2]
    for q in traj.waypoints:
        points, rotation = fk(arm, q, validate=False)
        pos = points[3] + rotation @ ctx.grasp_transform.position
        axis = (rotation @ ctx.grasp_transform.rotation)[:, 2]
        positions.append(pos)
        tilts.append(np.arccos(np.clip(float(axis @ goal_axis), -1.0, 1.0)))
    positions = np.array(positions)
    tilts = np.array(tilts)
    out = []
    for idx in _thirds(len(tilts)):
        out.append(np.cos(tilts[idx].max()))
        for signal in (positions[idx, 0], positions[idx, 1], positions[idx, 2], tilts[idx]):
            low, high = psd_band(signal)
            out.extend([low, high])
    out.append(np.cos(tilts.max()))
    return np.array(out)


def _aligned_azimuths(theta_ref, theta_other):
    """Unwrap two azimuth series and put the second on the first's branch."""
    ref = np.unwrap(theta_ref)
    other = np.unwrap(theta_other)
    shift = round((other[0] - ref[0]) / (2 * np.pi))
    return ref, other - 2 * np.pi * shift


def robot_motion_features(traj: Trajectory, arm: ArmModel = DEFAULT_ARM):
    """Arm motion block, dimension 27."""
    shoulder = arm.shoulder
    elbow = np.empty((len(traj), 3))
    wrist = np.empty((len(traj), 3))
    ee = np.empty((len(traj), 3))
    for j, q in enumerate(traj.waypoints):
        points, _ = fk(arm, q, validate=False)
        elbow[j] = points[1]
        wrist[j] = points[2]
        ee[j] = points[3]

    def cyl(p):
        d = p - shoulder
        r = np.hypot(d[:, 0], d[:, 1])
        theta = np.where(r < 1e-12, 0.0, np.arctan2(d[:, 1], d[:, 0]))
        return r, theta, d[:, 2]

    e_r, e_t, e_z = cyl(elbow)
    w_r, w_t, w_z = cyl(wrist)
    x_r, x_t, x_z = cyl(ee)
    out = []
    for idx in _thirds(len(traj)):
        et, wt = _aligned_azimuths(e_t[idx], w_t[idx])
        both_r = np.concatenate([e_r[idx], w_r[idx]])
        both_t = np.concatenate([et, wt])
        both_z = np.concatenate([e_z[idx], w_z[idx]])
        xt = np.unwrap(x_t[idx])
        j_r = int(np.argmax(x_r[idx]))
        j_t = int(np.argmax(xt))
        j_z = int(np.argmax(x_z[idx]))
        out.extend(
            [
                both_r.max(),
                both_r.min(),
                both_t.max(),
                both_t.min(),
                both_z.max(),
                both_z.min(),
                e_r[idx][j_r],
                et[j_t],
                e_z[idx][j_z],
            ]
        )
    return np.array(out)


def environment_features(ctx: Context, traj: Trajectory, arm: ArmModel = DEFAULT_ARM):
    """Concatenated environment block, dimension 75."""
    return np.concatenate(
        [
            object_environment_features(ctx, traj, arm),
            object_motion_features(ctx, traj, arm),
            robot_motion_features(traj, arm),
        ]
    )


def features(
    ctx: Context, traj: Trajectory, arm: ArmModel = DEFAULT_ARM, tau: float = TAU_DEFAULT
) -> FeatureVector:
    return FeatureVector(
        object_interactions=object_interaction_features(ctx, traj, arm, tau),
        environment=environment_features(ctx, traj, arm),
    )
