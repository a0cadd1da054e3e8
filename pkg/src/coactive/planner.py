"""Joint-space trajectory sampling.

Candidates come from a bidirectional RRT (RRT-Connect style) run per sample
with a derived seed, followed by randomized shortcutting and arc-length
resampling to a fixed waypoint count.  Randomized shortcut acceptance keeps
the candidate set diverse instead of collapsing every sample onto the same
shortest path; exact duplicates are rejected and re-planned with a fresh
derived seed.

Collision checking treats the three arm links as capsules and the held
object as its solid shape at the grasped pose.  Surfaces are exempt only
when the arm is exactly at the start or goal configuration, where the object
may rest on its support.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, PlannerError
from .kinematics import DEFAULT_ARM, MIN_WAYPOINTS, ArmModel, Trajectory, fk
from .world import Body, Context, capsule, min_collision_distance, place_shape


@dataclass
class PlannerConfig:
    n_samples: int = 100
    waypoint_count: int = 12
    step_size: float = 0.35
    collision_resolution: float = 0.18
    max_iterations: int = 2000
    shortcut_passes: int = 30
    shortcut_accept: float = 0.7
    link_radius: float = 0.04
    style: str = "birrt"
    max_attempts: int = 10

    def __post_init__(self):
        if self.waypoint_count < MIN_WAYPOINTS:
            raise ConfigError(f"waypoint_count must be >= {MIN_WAYPOINTS}")
        if self.style not in ("birrt", "rrt"):
            raise ConfigError(f"unknown planner style {self.style!r}")
        if self.n_samples < 1:
            raise ConfigError("n_samples must be positive")


class CollisionChecker:
    """Static-scene collision queries for one context."""

    def __init__(self, ctx: Context, arm: ArmModel = DEFAULT_ARM, link_radius: float = 0.04):
        self.ctx = ctx
        self.arm = arm
        self.link_radius = float(link_radius)
        self.object_shape = ctx.manipulated.shape
        self.grasp = ctx.grasp_transform
        obstacles = [o.body() for o in ctx.environment_objects()]
        humans = [h.body() for h in ctx.human_regions]
        self.solids = obstacles + humans
        self.surfaces = [(s.body(), float(s.center[2])) for s in ctx.surfaces]
        self._centers = np.array([b.center for b in self.solids]).reshape(-1, 3)
        self._radii = np.array([b.bounding_radius() for b in self.solids])
        self._start = np.asarray(ctx.start_config, dtype=float)
        self._goal = np.asarray(ctx.goal_config, dtype=float)

    def _moving_bodies(self, q):
        points, rotation = fk(self.arm, q, validate=False)
        obj_pose_pos = points[3] + rotation @ self.grasp.position
        obj_rot = rotation @ self.grasp.rotation
        obj = place_shape(self.object_shape, _FastPose(obj_pose_pos, obj_rot))
        return (
            capsule(points[0], points[1], self.link_radius),
            capsule(points[1], points[2], self.link_radius),
            capsule(points[2], points[3], self.link_radius),
            obj,
        )

    def is_free(self, q) -> bool:
        """True iff arm links and held object clear every relevant body."""
        q = np.asarray(q, dtype=float)
        at_endpoint = (
            np.max(np.abs(q - self._start)) < 1e-9 or np.max(np.abs(q - self._goal)) < 1e-9
        )
        moving = self._moving_bodies(q)
        if self.solids:
            for body in moving:
                r = body.bounding_radius()
                gaps = np.linalg.norm(self._centers - body.center, axis=1) - self._radii - r
                for idx in np.nonzero(gaps <= 0.0)[0]:
                    dist, _ = min_collision_distance(body, self.solids[idx])
                    if dist <= 0.0:
                        return False
        if not at_endpoint:
            for body in moving:
                z_lo, z_hi = body.z_range()
                for rect, sz in self.surfaces:
                    if z_lo > sz or z_hi < sz:
                        continue  # the body clears the surface plane entirely
                    dist, _ = min_collision_distance(body, rect)
                    if dist <= 0.0:
                        return False
        return True


class _FastPose:
    """Position+rotation pair satisfying the Pose interface used by place_shape."""

    __slots__ = ("position", "rotation")

    def __init__(self, position, rotation):
        self.position = position
        self.rotation = rotation


def is_collision_free(q, ctx: Context, arm: ArmModel = DEFAULT_ARM, link_radius: float = 0.04) -> bool:
    return CollisionChecker(ctx, arm, link_radius).is_free(q)


def _edge_free(checker, qa, qb, resolution):
    delta = qb - qa
    dist = float(np.linalg.norm(delta))
    n = max(int(np.ceil(dist / resolution)), 1)
    for k in range(1, n + 1):
        if not checker.is_free(qa + delta * (k / n)):
            return False
    return True


def _extend(tree, parents, q_target, checker, cfg):
    nodes = np.array(tree)
    idx = int(np.argmin(np.linalg.norm(nodes - q_target, axis=1)))
    q_near = tree[idx]
    delta = q_target - q_near
    dist = float(np.linalg.norm(delta))
    if dist < 1e-12:
        return "reached", idx
    q_new = q_target if dist <= cfg.step_size else q_near + delta * (cfg.step_size / dist)
    if not _edge_free(checker, q_near, q_new, cfg.collision_resolution):
        return "trapped", idx
    tree.append(q_new)
    parents.append(idx)
    return ("reached" if dist <= cfg.step_size else "advanced"), len(tree) - 1


def _connect(tree, parents, q_target, checker, cfg):
    status = "advanced"
    idx = -1
    while status == "advanced":
        status, idx = _extend(tree, parents, q_target, checker, cfg)
    return status, idx


def _walk(tree, parents, idx):
    path = []
    while idx >= 0:
        path.append(tree[idx])
        idx = parents[idx]
    path.reverse()
    return path


def _plan_birrt(checker, start, goal, rng, cfg, lo, hi):
    tree_a, parents_a = [start], [-1]
    tree_b, parents_b = [goal], [-1]
    a_is_start = True
    for _ in range(cfg.max_iterations):
        q_rand = rng.uniform(lo, hi)
        status, new_idx = _extend(tree_a, parents_a, q_rand, checker, cfg)
        if status != "trapped":
            status, reach_idx = _connect(tree_b, parents_b, tree_a[new_idx], checker, cfg)
            if status == "reached":
                path_a = _walk(tree_a, parents_a, new_idx)
                path_b = _walk(tree_b, parents_b, reach_idx)
                if a_is_start:
                    return path_a + path_b[::-1]
                return path_b + path_a[::-1]
        tree_a, tree_b = tree_b, tree_a
        parents_a, parents_b = parents_b, parents_a
        a_is_start = not a_is_start
    return None


def _plan_rrt(checker, start, goal, rng, cfg, lo, hi):
    tree, parents = [start], [-1]
    for _ in range(cfg.max_iterations):
        q_rand = goal if rng.random() < 0.1 else rng.uniform(lo, hi)
        status, new_idx = _extend(tree, parents, q_rand, checker, cfg)
        if status == "trapped":
            continue
        q_new = tree[new_idx]
        if np.linalg.norm(q_new - goal) < 1e-12:
            return _walk(tree, parents, new_idx)
        if np.linalg.norm(q_new - goal) <= cfg.step_size and _edge_free(
            checker, q_new, goal, cfg.collision_resolution
        ):
            tree.append(goal)
            parents.append(new_idx)
            return _walk(tree, parents, len(tree) - 1)
    return None


def _shortcut(checker, path, rng, cfg):
    for _ in range(cfg.shortcut_passes):
        if len(path) < 4:
            break
        i = int(rng.integers(0, len(path) - 2))
        j = int(rng.integers(i + 2, len(path)))
        if i == 0 and j == len(path) - 1:
            continue  # keep at least one interior node for candidate diversity
        if rng.random() > cfg.shortcut_accept:
            continue
        if _edge_free(checker, path[i], path[j], cfg.collision_resolution):
            path = path[: i + 1] + path[j:]
    return path


def _resample(path, n, start, goal):
    pts = np.asarray(path)
    seg = np.linalg.norm(np.diff(pts, axis=0), axis=1)
    cum = np.concatenate([[0.0], np.cumsum(seg)])
    total = cum[-1]
    if total < 1e-12:
        out = np.tile(start, (n, 1)).astype(float)
    else:
        stations = np.linspace(0.0, total, n)
        out = np.empty((n, pts.shape[1]))
        for d in range(pts.shape[1]):
            out[:, d] = np.interp(stations, cum, pts[:, d])
    out[0] = start
    out[-1] = goal
    return out


def sample_trajectories(
    ctx: Context,
    config: PlannerConfig | None = None,
    seed: int = 0,
    arm: ArmModel = DEFAULT_ARM,
) -> list[Trajectory]:
    """Plan ``config.n_samples`` distinct collision-free trajectories.

    Deterministic for a given seed. Raises PlannerError naming the failing
    sample when a collision-free path cannot be found.
    """
    cfg = config if config is not None else PlannerConfig()
    checker = CollisionChecker(ctx, arm, cfg.link_radius)
    start = arm.check_limits(ctx.start_config)
    goal = arm.check_limits(ctx.goal_config)
    if not checker.is_free(start):
        raise PlannerError(f"context {ctx.id}: start config is in collision")
    if not checker.is_free(goal):
        raise PlannerError(f"context {ctx.id}: goal config is in collision")
    lo, hi = arm.joint_limits[:, 0], arm.joint_limits[:, 1]
    plan = _plan_birrt if cfg.style == "birrt" else _plan_rrt
    degenerate = np.linalg.norm(goal - start) < 1e-12
    seen = set()
    out = []
    for i in range(cfg.n_samples):
        produced = None
        for attempt in range(cfg.max_attempts):
            rng = np.random.default_rng(np.random.SeedSequence([seed, i, attempt]))
            path = plan(checker, start, goal, rng, cfg, lo, hi)
            if path is None:
                continue
            path = _shortcut(checker, path, rng, cfg)
            waypoints = _resample(path, cfg.waypoint_count, start, goal)
            if not all(checker.is_free(q) for q in waypoints):
                continue
            key = waypoints.round(9).tobytes()
            if not degenerate and key in seen:
                continue
            seen.add(key)
            produced = waypoints
            break
        if produced is None:
            raise PlannerError(
                f"context {ctx.id}: sample {i}: no collision-free path in "
                f"{cfg.max_attempts} attempts of {cfg.max_iterations} iterations"
            )
        out.append(Trajectory(context_id=ctx.id, waypoints=produced, id=f"{ctx.id}/t{i:03d}"))
    return out
