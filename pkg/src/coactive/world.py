"""Scene model for tabletop manipulation worlds.

Conventions used throughout the package:

* lengths are meters, angles are radians
* world frame has +z up; the floor is the plane z = 0
* orientations serialize as unit quaternions ``[w, x, y, z]`` and are kept
  in memory as 3x3 rotation matrices
* an object's upright direction is its body +z axis
* surfaces are axis-aligned horizontal rectangles (normal +z) with zero
  thickness, e.g. table tops, counters and shelf boards

Distance queries work on :class:`Body` values, a placed convex solid built
from a :class:`Shape` and a :class:`Pose` (or directly, for the capsules that
model arm links).  ``min_collision_distance`` is exact for all supported
pairs: spheres and capsules are handled as point/segment cores with a radial
margin, boxes and cylinders through a GJK iteration on their support
functions.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources

import numpy as np

from .errors import InvariantError, SchemaError, UnknownIdError

DEFAULT_PROPERTIES = ("heavy", "fragile", "sharp", "hot", "liquid", "electronic")

CONTEXT_SCHEMA_VERSION = "context.v1"

_EPS = 1e-12


# ---------------------------------------------------------------------------
# rotations


def quat_to_matrix(q):
    """Rotation matrix for a unit quaternion ``[w, x, y, z]``."""
    q = np.asarray(q, dtype=float)
    n = np.linalg.norm(q)
    if n < 1e-9:
        raise SchemaError("orientation: quaternion has zero norm")
    w, x, y, z = q / n
    return np.array(
        [
            [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
            [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
            [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
        ]
    )


def matrix_to_quat(R):
    """Unit quaternion ``[w, x, y, z]`` for a rotation matrix (w >= 0)."""
    R = np.asarray(R, dtype=float)
    t = np.trace(R)
    if t > 0:
        s = np.sqrt(t + 1.0) * 2
        q = np.array(
            [0.25 * s, (R[2, 1] - R[1, 2]) / s, (R[0, 2] - R[2, 0]) / s, (R[1, 0] - R[0, 1]) / s]
        )
    else:
        i = int(np.argmax(np.diag(R)))
        j, k = (i + 1) % 3, (i + 2) % 3
        s = np.sqrt(max(R[i, i] - R[j, j] - R[k, k] + 1.0, 0.0)) * 2
        q = np.empty(4)
        q[0] = (R[k, j] - R[j, k]) / s
        q[1 + i] = 0.25 * s
        q[1 + j] = (R[j, i] + R[i, j]) / s
        q[1 + k] = (R[k, i] + R[i, k]) / s
    if q[0] < 0:
        q = -q
    return q / np.linalg.norm(q)


@dataclass
class Pose:
    """Rigid transform: ``position`` (3,) and ``rotation`` (3,3)."""

    position: np.ndarray
    rotation: np.ndarray

    @staticmethod
    def identity():
        return Pose(np.zeros(3), np.eye(3))

    @staticmethod
    def from_json(doc, where="pose"):
        try:
            pos = np.asarray(doc["position"], dtype=float)
            quat = np.asarray(doc["orientation"], dtype=float)
        except (KeyError, TypeError, ValueError) as exc:
            raise SchemaError(f"{where}: expected position/orientation, got {doc!r}") from exc
        if pos.shape != (3,):
            raise SchemaError(f"{where}.position: expected 3 numbers")
        if quat.shape != (4,):
            raise SchemaError(f"{where}.orientation: expected quaternion [w, x, y, z]")
        if abs(np.linalg.norm(quat) - 1.0) > 1e-6:
            raise SchemaError(f"{where}.orientation: quaternion is not unit length")
        return Pose(pos, quat_to_matrix(quat))

    def to_json(self):
        return {
            "position": [float(v) for v in self.position],
            "orientation": [float(v) for v in matrix_to_quat(self.rotation)],
        }

    def compose(self, other: "Pose") -> "Pose":
        """self applied first, then ``other`` in self's frame (self @ other)."""
        return Pose(self.position + self.rotation @ other.position, self.rotation @ other.rotation)

    def transform_point(self, p):
        return self.position + self.rotation @ np.asarray(p, dtype=float)


# ---------------------------------------------------------------------------
# shapes and scene elements


@dataclass
class Shape:
    """Convex solid in its body frame.

    kind 'sphere' uses ``radius``; 'box' uses ``half_extents`` (3,);
    'cylinder' uses ``radius`` and ``half_height`` with its axis along body z.
    """

    kind: str
    radius: float = 0.0
    half_extents: np.ndarray | None = None
    half_height: float = 0.0

    def __post_init__(self):
        if self.kind == "sphere":
            if self.radius <= 0:
                raise SchemaError("shape.radius: must be positive")
        elif self.kind == "box":
            self.half_extents = np.asarray(self.half_extents, dtype=float)
            if self.half_extents.shape != (3,) or np.any(self.half_extents <= 0):
                raise SchemaError("shape.half_extents: expected 3 positive numbers")
        elif self.kind == "cylinder":
            if self.radius <= 0 or self.half_height <= 0:
                raise SchemaError("shape.radius/half_height: must be positive")
        else:
            raise SchemaError(f"shape.kind: unknown kind {self.kind!r}")

    @staticmethod
    def from_json(doc, where="shape"):
        kind = doc.get("kind")
        if kind == "sphere":
            return Shape("sphere", radius=float(doc.get("radius", 0.0)))
        if kind == "box":
            return Shape("box", half_extents=doc.get("half_extents"))
        if kind == "cylinder":
            return Shape(
                "cylinder",
                radius=float(doc.get("radius", 0.0)),
                half_height=float(doc.get("half_height", 0.0)),
            )
        raise SchemaError(f"{where}.kind: unknown kind {kind!r}")

    def to_json(self):
        if self.kind == "sphere":
            return {"kind": "sphere", "radius": float(self.radius)}
        if self.kind == "box":
            return {"kind": "box", "half_extents": [float(v) for v in self.half_extents]}
        return {
            "kind": "cylinder",
            "radius": float(self.radius),
            "half_height": float(self.half_height),
        }


@dataclass
class ObjectInstance:
    """A rigid object with binary property labels over the context's names."""

    id: str
    shape: Shape
    pose: Pose
    labels: np.ndarray

    def body(self, pose: Pose | None = None) -> "Body":
        return place_shape(self.shape, pose if pose is not None else self.pose)


@dataclass
class Surface:
    """Horizontal rectangle: axis-aligned, centered at ``center``, normal +z."""

    id: str
    kind: str
    center: np.ndarray
    half_extents: np.ndarray  # (hx, hy)

    def body(self) -> "Body":
        he = np.array([self.half_extents[0], self.half_extents[1], 0.0])
        return Body("box", np.asarray(self.center, dtype=float), np.eye(3), box_half_extents=he)


@dataclass
class HumanRegion:
    """Spherical keep-out region around a person."""

    id: str
    center: np.ndarray
    radius: float

    def body(self) -> "Body":
        return Body(
            "point",
            np.asarray(self.center, dtype=float),
            np.eye(3),
            margin=float(self.radius),
        )


@dataclass
class Context:
    """One manipulation task: scene, manipulated object, start and goal."""

    id: str
    properties: tuple
    objects: list
    surfaces: list
    human_regions: list
    manipulated_id: str
    start_config: np.ndarray
    goal_config: np.ndarray
    goal_pose: Pose
    grasp_transform: Pose
    _by_id: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        self._by_id = {o.id: o for o in self.objects}
        if len(self._by_id) != len(self.objects):
            raise InvariantError(f"context {self.id}: duplicate object ids")
        if self.manipulated_id not in self._by_id:
            raise UnknownIdError(
                f"context {self.id}: manipulated_id {self.manipulated_id!r} not among objects"
            )
        tables = [s for s in self.surfaces if s.kind == "table"]
        if len(tables) != 1:
            raise InvariantError(f"context {self.id}: expected exactly one table surface")
        m = len(self.properties)
        for obj in self.objects:
            obj.labels = np.asarray(obj.labels, dtype=float)
            if obj.labels.shape != (m,) or not np.all(np.isin(obj.labels, (0.0, 1.0))):
                raise InvariantError(
                    f"context {self.id}: object {obj.id}: labels must be {m} binary values"
                )
        if self.start_config.shape != self.goal_config.shape:
            raise InvariantError(f"context {self.id}: start/goal config lengths differ")

    @property
    def manipulated(self) -> ObjectInstance:
        return self._by_id[self.manipulated_id]

    @property
    def table(self) -> Surface:
        return next(s for s in self.surfaces if s.kind == "table")

    def object_by_id(self, oid: str) -> ObjectInstance:
        try:
            return self._by_id[oid]
        except KeyError:
            raise UnknownIdError(f"context {self.id}: unknown object id {oid!r}") from None

    def environment_objects(self):
        """All objects except the manipulated one, in declaration order."""
        return [o for o in self.objects if o.id != self.manipulated_id]


# ---------------------------------------------------------------------------
# placed bodies and support functions


class Body:
    """A convex solid placed in the world, as core shape plus radial margin.

    Cores are 'point', 'segment', 'box' or 'cylinder'.  A sphere is a point
    core with margin, a capsule a segment core with margin.  All distance
    queries run on cores and subtract margins afterwards.
    """

    __slots__ = ("kind", "center", "rotation", "margin", "points", "box_half_extents", "cyl")

    def __init__(self, kind, center, rotation, margin=0.0, points=None, box_half_extents=None, cyl=None):
        self.kind = kind
        self.center = np.asarray(center, dtype=float)
        self.rotation = rotation
        self.margin = float(margin)
        self.points = points  # (2, 3) endpoints for segment cores
        self.box_half_extents = box_half_extents
        self.cyl = cyl  # (radius, half_height)

    def support(self, direction):
        """World-frame support point of the core along ``direction``."""
        if self.kind == "point":
            return self.center
        if self.kind == "segment":
            a, b = self.points
            return a if np.dot(a, direction) >= np.dot(b, direction) else b
        d_local = self.rotation.T @ direction
        if self.kind == "box":
            local = np.where(d_local >= 0, self.box_half_extents, -self.box_half_extents)
        else:  # cylinder
            r, hh = self.cyl
            radial = np.hypot(d_local[0], d_local[1])
            if radial > _EPS:
                local = np.array(
                    [r * d_local[0] / radial, r * d_local[1] / radial, np.sign(d_local[2]) * hh]
                )
            else:
                local = np.array([0.0, 0.0, np.sign(d_local[2]) * hh if d_local[2] != 0 else hh])
        return self.center + self.rotation @ local

    def extent_along(self, direction):
        """Support extent of the full solid (margin included) along a unit direction."""
        core = float(np.dot(self.support(direction) - self.center, direction))
        return core + self.margin

    def top_z(self):
        return self.center[2] + self.extent_along(np.array([0.0, 0.0, 1.0]))

    def bottom_z(self):
        return self.center[2] - self.extent_along(np.array([0.0, 0.0, -1.0]))

    def z_range(self):
        """(lowest, highest) world z touched by the solid, margin included."""
        if self.kind == "point":
            ext = 0.0
            cz = self.center[2]
        elif self.kind == "segment":
            z0, z1 = self.points[0][2], self.points[1][2]
            return min(z0, z1) - self.margin, max(z0, z1) + self.margin
        elif self.kind == "box":
            row = self.rotation[2]
            he = self.box_half_extents
            ext = abs(row[0]) * he[0] + abs(row[1]) * he[1] + abs(row[2]) * he[2]
            cz = self.center[2]
        else:
            r, hh = self.cyl
            az = self.rotation[2, 2]
            ext = abs(az) * hh + r * np.sqrt(max(1.0 - az * az, 0.0))
            cz = self.center[2]
        return cz - ext - self.margin, cz + ext + self.margin

    def bounding_radius(self):
        """Radius of the smallest sphere around ``center`` containing the solid."""
        if self.kind == "point":
            core = 0.0
        elif self.kind == "segment":
            core = max(np.linalg.norm(self.points[0] - self.center), np.linalg.norm(self.points[1] - self.center))
        elif self.kind == "box":
            core = float(np.linalg.norm(self.box_half_extents))
        else:
            r, hh = self.cyl
            core = float(np.hypot(r, hh))
        return core + self.margin

    def horizontal_bounding_radius(self):
        """Radius of the smallest vertical cylinder around ``center`` containing the solid."""
        if self.kind == "point":
            core = 0.0
        elif self.kind == "segment":
            core = max(
                np.hypot(*(self.points[0] - self.center)[:2]),
                np.hypot(*(self.points[1] - self.center)[:2]),
            )
        elif self.kind == "box":
            corners = self.box_half_extents * _CORNER_SIGNS
            core = float(np.max(np.hypot(*(corners @ self.rotation.T).T[:2])))
        else:
            r, hh = self.cyl
            axis = self.rotation[:, 2]
            s = min(np.hypot(axis[0], axis[1]), 1.0)
            c_star = hh / np.hypot(hh, r)
            if s >= c_star:
                core = float(np.hypot(hh, r))
            else:
                core = float(hh * s + r * np.sqrt(max(1.0 - s * s, 0.0)))
        return core + self.margin


_CORNER_SIGNS = np.array(
    [[sx, sy, sz] for sx in (-1, 1) for sy in (-1, 1) for sz in (-1, 1)], dtype=float
)


def place_shape(shape: Shape, pose: Pose) -> Body:
    """Place a shape in the world; spheres become point cores with margin."""
    if shape.kind == "sphere":
        return Body("point", pose.position, np.eye(3), margin=shape.radius)
    if shape.kind == "box":
        return Body("box", pose.position, pose.rotation, box_half_extents=shape.half_extents)
    return Body(
        "cylinder", pose.position, pose.rotation, cyl=(float(shape.radius), float(shape.half_height))
    )


def capsule(p0, p1, radius) -> Body:
    """Capsule body from two world-frame endpoints and a radius."""
    p0 = np.asarray(p0, dtype=float)
    p1 = np.asarray(p1, dtype=float)
    return Body(
        "segment",
        0.5 * (p0 + p1),
        np.eye(3),
        margin=float(radius),
        points=np.stack([p0, p1]),
    )


def point_body(p) -> Body:
    return Body("point", np.asarray(p, dtype=float), np.eye(3))


# ---------------------------------------------------------------------------
# closest-point queries between cores


def _closest_point_segment(p, a, b):
    ab = b - a
    denom = float(np.dot(ab, ab))
    t = 0.0 if denom < _EPS else float(np.clip(np.dot(p - a, ab) / denom, 0.0, 1.0))
    return a + t * ab


def _closest_segment_segment(p1, q1, p2, q2):
    """Closest points between segments p1q1 and p2q2 (Ericson, ch. 5)."""
    d1 = q1 - p1
    d2 = q2 - p2
    r = p1 - p2
    a = float(np.dot(d1, d1))
    e = float(np.dot(d2, d2))
    f = float(np.dot(d2, r))
    if a < _EPS and e < _EPS:
        return p1, p2
    if a < _EPS:
        t = np.clip(f / e, 0.0, 1.0)
        return p1, p2 + t * d2
    c = float(np.dot(d1, r))
    if e < _EPS:
        s = np.clip(-c / a, 0.0, 1.0)
        return p1 + s * d1, p2
    b = float(np.dot(d1, d2))
    denom = a * e - b * b
    s = np.clip((b * f - c * e) / denom, 0.0, 1.0) if denom > _EPS else 0.0
    t = (b * s + f) / e
    if t < 0.0:
        t = 0.0
        s = np.clip(-c / a, 0.0, 1.0)
    elif t > 1.0:
        t = 1.0
        s = np.clip((b - c) / a, 0.0, 1.0)
    return p1 + s * d1, p2 + t * d2


def _closest_point_box(p, body):
    local = body.rotation.T @ (p - body.center)
    clamped = np.clip(local, -body.box_half_extents, body.box_half_extents)
    return body.center + body.rotation @ clamped


def _closest_segment_box(p0, p1, body):
    """Exact closest points between a segment and an oriented box.

    Works in the box frame.  The squared distance along the segment is
    piecewise quadratic with breakpoints where a coordinate crosses a face
    plane, so the global minimum is found by solving each piece analytically.
    """
    R = body.rotation
    a = R.T @ (p0 - body.center)
    b = R.T @ (p1 - body.center)
    he = body.box_half_extents
    d = b - a
    ts = {0.0, 1.0}
    for i in range(3):
        if abs(d[i]) > 1e-14:
            for bound in (-he[i], he[i]):
                t = (bound - a[i]) / d[i]
                if 0.0 < t < 1.0:
                    ts.add(float(t))
    ts = sorted(ts)
    best_q = np.inf
    best_t = 0.0
    for k in range(len(ts) - 1):
        lo, hi = ts[k], ts[k + 1]
        mid = 0.5 * (lo + hi)
        coeffs = []
        for i in range(3):
            x = a[i] + mid * d[i]
            if x < -he[i]:
                coeffs.append((d[i], a[i] + he[i]))
            elif x > he[i]:
                coeffs.append((d[i], a[i] - he[i]))
        if not coeffs:
            best_q, best_t = 0.0, mid
            break
        alpha = sum(di * di for di, _ in coeffs)
        beta = 2.0 * sum(di * ci for di, ci in coeffs)
        cands = [lo, hi]
        if alpha > 1e-14:
            t_star = -beta / (2.0 * alpha)
            if lo < t_star < hi:
                cands.append(t_star)
        for t in cands:
            q = sum((di * t + ci) ** 2 for di, ci in coeffs)
            if q < best_q:
                best_q, best_t = q, t
    local = a + best_t * d
    p_seg = p0 + best_t * (p1 - p0)
    p_box = body.center + R @ np.clip(local, -he, he)
    return float(np.sqrt(max(best_q, 0.0))), p_seg, p_box


def _closest_point_cylinder(p, body):
    r, hh = body.cyl
    local = body.rotation.T @ (p - body.center)
    radial = np.hypot(local[0], local[1])
    z = np.clip(local[2], -hh, hh)
    if radial <= r:
        if abs(local[2]) <= hh:
            return p  # interior
        closest = np.array([local[0], local[1], z])
    else:
        scale = r / radial
        closest = np.array([local[0] * scale, local[1] * scale, z])
    return body.center + body.rotation @ closest


def _closest_on_simplex(points):
    """Closest point to the origin on a simplex of 1..4 points.

    Returns (v, kept_indices, lambdas); ``v`` is the closest point, expressed
    as the convex combination of ``points[kept_indices]`` with ``lambdas``.
    """
    n = len(points)
    if n == 1:
        return points[0], [0], [1.0]
    if n == 2:
        a, b = points
        ab = b - a
        denom = float(np.dot(ab, ab))
        if denom < _EPS:
            return a, [0], [1.0]
        t = float(np.clip(-np.dot(a, ab) / denom, 0.0, 1.0))
        if t <= 0.0:
            return a, [0], [1.0]
        if t >= 1.0:
            return b, [1], [1.0]
        return a + t * ab, [0, 1], [1.0 - t, t]
    if n == 3:
        v, idx, lam = _closest_on_triangle(points[0], points[1], points[2])
        return v, idx, lam
    return _closest_on_tetrahedron(points)


def _closest_on_triangle(a, b, c):
    """Closest point to the origin on triangle abc with barycentric output."""
    ab = b - a
    ac = c - a
    ap = -a
    d1 = float(np.dot(ab, ap))
    d2 = float(np.dot(ac, ap))
    if d1 <= 0.0 and d2 <= 0.0:
        return a, [0], [1.0]
    bp = -b
    d3 = float(np.dot(ab, bp))
    d4 = float(np.dot(ac, bp))
    if d3 >= 0.0 and d4 <= d3:
        return b, [1], [1.0]
    vc = d1 * d4 - d3 * d2
    if vc <= 0.0 and d1 >= 0.0 and d3 <= 0.0:
        denom = d1 - d3
        t = d1 / denom if abs(denom) > _EPS else 0.0
        return a + t * ab, [0, 1], [1.0 - t, t]
    cp = -c
    d5 = float(np.dot(ab, cp))
    d6 = float(np.dot(ac, cp))
    if d6 >= 0.0 and d5 <= d6:
        return c, [2], [1.0]
    vb = d5 * d2 - d1 * d6
    if vb <= 0.0 and d2 >= 0.0 and d6 <= 0.0:
        denom = d2 - d6
        t = d2 / denom if abs(denom) > _EPS else 0.0
        return a + t * ac, [0, 2], [1.0 - t, t]
    va = d3 * d6 - d5 * d4
    if va <= 0.0 and (d4 - d3) >= 0.0 and (d5 - d6) >= 0.0:
        denom = (d4 - d3) + (d5 - d6)
        t = (d4 - d3) / denom if abs(denom) > _EPS else 0.0
        return b + t * (c - b), [1, 2], [1.0 - t, t]
    denom = va + vb + vc
    if abs(denom) < _EPS:
        # degenerate triangle: fall back to best edge
        best = None
        for i, j in ((0, 1), (0, 2), (1, 2)):
            pts = (a, b, c)
            v, idx, lam = _closest_on_simplex([pts[i], pts[j]])
            if best is None or np.dot(v, v) < np.dot(best[0], best[0]):
                best = (v, [(i, j)[k] for k in idx], lam)
        return best
    lam = [va / denom, vb / denom, vc / denom]
    return a * lam[0] + b * lam[1] + c * lam[2], [0, 1, 2], lam


def _closest_on_tetrahedron(points):
    a, b, c, d = points

    def _outside(p0, p1, p2, p3):
        ux, uy, uz = p1[0] - p0[0], p1[1] - p0[1], p1[2] - p0[2]
        vx, vy, vz = p2[0] - p0[0], p2[1] - p0[1], p2[2] - p0[2]
        nx, ny, nz = uy * vz - uz * vy, uz * vx - ux * vz, ux * vy - uy * vx
        side_origin = -(nx * p0[0] + ny * p0[1] + nz * p0[2])
        side_apex = nx * (p3[0] - p0[0]) + ny * (p3[1] - p0[1]) + nz * (p3[2] - p0[2])
        return side_origin * side_apex < 0

    inside = not (
        _outside(a, b, c, d) or _outside(a, c, d, b) or _outside(a, d, b, c) or _outside(b, d, c, a)
    )
    if inside:
        system = np.vstack([np.stack(points, axis=1), np.ones(4)])
        try:
            lam = np.linalg.solve(system, np.array([0.0, 0.0, 0.0, 1.0]))
        except np.linalg.LinAlgError:
            lam = None
        if lam is not None and np.all(lam >= -1e-9):
            return np.zeros(3), [0, 1, 2, 3], list(lam)
    best = None
    for tri in ((0, 1, 2), (0, 2, 3), (0, 3, 1), (1, 3, 2)):
        v, idx, lam = _closest_on_triangle(points[tri[0]], points[tri[1]], points[tri[2]])
        if best is None or np.dot(v, v) < np.dot(best[0], best[0]):
            best = (v, [tri[k] for k in idx], lam)
    return best


def _gjk(body_a, body_b, max_iter=200, tol=1e-12):
    """GJK distance between cores; returns (distance, point_on_a, point_on_b).

    Distance 0 with coincident points signals intersecting cores.
    """
    d0 = body_b.center - body_a.center
    if np.dot(d0, d0) < _EPS:
        d0 = np.array([1.0, 0.0, 0.0])
    pa = body_a.support(d0)
    pb = body_b.support(-d0)
    w = pa - pb
    simplex = [(w, pa, pb)]
    v = w
    lambdas = [1.0]
    for _ in range(max_iter):
        vv = float(np.dot(v, v))
        if vv < tol:
            return 0.0, None, None
        pa = body_a.support(-v)
        pb = body_b.support(v)
        w = pa - pb
        # converged when the new support cannot get meaningfully closer
        if vv - float(np.dot(v, w)) <= max(tol * vv, 1e-16):
            break
        if any(np.dot(w - s[0], w - s[0]) < 1e-24 for s in simplex):
            break
        simplex.append((w, pa, pb))
        pts = [s[0] for s in simplex]
        v, kept, lambdas = _closest_on_simplex(pts)
        simplex = [simplex[i] for i in kept]
        if len(simplex) == 4:
            return 0.0, None, None
    dist = float(np.linalg.norm(v))
    if dist < 1e-12:
        return 0.0, None, None
    point_a = sum(l * s[1] for l, s in zip(lambdas, simplex))
    point_b = sum(l * s[2] for l, s in zip(lambdas, simplex))
    return dist, point_a, point_b


def _closest_cores(body_a, body_b):
    """Exact closest points between two cores; (distance, pa, pb)."""
    ka, kb = body_a.kind, body_b.kind
    if ka == "point" and kb == "point":
        pa, pb = body_a.center, body_b.center
    elif ka == "point" and kb == "segment":
        pa = body_a.center
        pb = _closest_point_segment(pa, body_b.points[0], body_b.points[1])
    elif ka == "segment" and kb == "point":
        pb = body_b.center
        pa = _closest_point_segment(pb, body_a.points[0], body_a.points[1])
    elif ka == "segment" and kb == "segment":
        pa, pb = _closest_segment_segment(
            body_a.points[0], body_a.points[1], body_b.points[0], body_b.points[1]
        )
    elif ka == "point" and kb == "box":
        pa = body_a.center
        pb = _closest_point_box(pa, body_b)
    elif ka == "box" and kb == "point":
        pb = body_b.center
        pa = _closest_point_box(pb, body_a)
    elif ka == "point" and kb == "cylinder":
        pa = body_a.center
        pb = _closest_point_cylinder(pa, body_b)
    elif ka == "cylinder" and kb == "point":
        pb = body_b.center
        pa = _closest_point_cylinder(pb, body_a)
    elif ka == "segment" and kb == "box":
        return _closest_segment_box(body_a.points[0], body_a.points[1], body_b)
    elif ka == "box" and kb == "segment":
        dist, pb, pa = _closest_segment_box(body_b.points[0], body_b.points[1], body_a)
        return dist, pa, pb
    else:
        return _gjk(body_a, body_b)
    return float(np.linalg.norm(pb - pa)), pa, pb


def min_collision_distance(body_a: Body, body_b: Body):
    """Minimum distance between two placed solids and its direction.

    Returns ``(distance, vector)`` with ``vector`` pointing from the closest
    point on ``body_a``'s surface to the closest point on ``body_b``'s.
    Intersecting or touching solids give ``(0.0, zeros(3))``.  The query is
    symmetric in the distance and antisymmetric in the vector.
    """
    core_dist, pa, pb = _closest_cores(body_a, body_b)
    dist = core_dist - body_a.margin - body_b.margin
    if dist <= 0.0 or pa is None:
        return 0.0, np.zeros(3)
    u = (pb - pa) / core_dist
    return dist, u * dist


def min_distance_between(shape_a: Shape, pose_a: Pose, shape_b: Shape, pose_b: Pose):
    """Convenience wrapper over :func:`min_collision_distance` for shapes."""
    return min_collision_distance(place_shape(shape_a, pose_a), place_shape(shape_b, pose_b))


def is_below(lower: Body, upper: Body) -> bool:
    """True when ``lower`` sits underneath ``upper``.

    Holds when the horizontal center distance is less than the sum of the
    two solids' horizontal bounding radii and the top of ``lower`` is at or
    under the bottom of ``upper`` (small slack for resting contact).
    """
    dx = upper.center[0] - lower.center[0]
    dy = upper.center[1] - lower.center[1]
    if np.hypot(dx, dy) >= lower.horizontal_bounding_radius() + upper.horizontal_bounding_radius():
        return False
    return lower.top_z() <= upper.bottom_z() + 1e-9


# ---------------------------------------------------------------------------
# context serialization


def _schema():
    if _schema._cached is None:
        with resources.files("coactive.data").joinpath("context.v1.schema.json").open() as fh:
            _schema._cached = json.load(fh)
    return _schema._cached


_schema._cached = None


def context_from_json(doc) -> Context:
    """Build a validated :class:`Context` from a parsed JSON document."""
    import jsonschema

    try:
        jsonschema.validate(doc, _schema())
    except jsonschema.ValidationError as exc:
        path = ".".join(str(p) for p in exc.absolute_path) or "<root>"
        raise SchemaError(f"context document: {path}: {exc.message}") from exc
    if doc["schema"] != CONTEXT_SCHEMA_VERSION:
        raise SchemaError(f"context document: schema: expected {CONTEXT_SCHEMA_VERSION}")
    objects = [
        ObjectInstance(
            id=o["id"],
            shape=Shape.from_json(o["shape"], where=f"objects[{i}].shape"),
            pose=Pose.from_json(o["pose"], where=f"objects[{i}].pose"),
            labels=np.asarray(o["labels"], dtype=float),
        )
        for i, o in enumerate(doc["objects"])
    ]
    surfaces = [
        Surface(
            id=s["id"],
            kind=s["kind"],
            center=np.asarray(s["center"], dtype=float),
            half_extents=np.asarray(s["half_extents"], dtype=float),
        )
        for s in doc["surfaces"]
    ]
    humans = [
        HumanRegion(id=h["id"], center=np.asarray(h["center"], dtype=float), radius=float(h["radius"]))
        for h in doc.get("human_regions", [])
    ]
    return Context(
        id=doc["id"],
        properties=tuple(doc["properties"]),
        objects=objects,
        surfaces=surfaces,
        human_regions=humans,
        manipulated_id=doc["manipulated_id"],
        start_config=np.asarray(doc["start_config"], dtype=float),
        goal_config=np.asarray(doc["goal_config"], dtype=float),
        goal_pose=Pose.from_json(doc["goal_pose"], where="goal_pose"),
        grasp_transform=Pose.from_json(doc["grasp_transform"], where="grasp_transform"),
    )


def context_to_json(ctx: Context) -> dict:
    return {
        "schema": CONTEXT_SCHEMA_VERSION,
        "id": ctx.id,
        "properties": list(ctx.properties),
        "objects": [
            {
                "id": o.id,
                "labels": [int(v) for v in o.labels],
                "shape": o.shape.to_json(),
                "pose": o.pose.to_json(),
            }
            for o in ctx.objects
        ],
        "surfaces": [
            {
                "id": s.id,
                "kind": s.kind,
                "center": [float(v) for v in s.center],
                "half_extents": [float(v) for v in s.half_extents],
            }
            for s in ctx.surfaces
        ],
        "human_regions": [
            {"id": h.id, "center": [float(v) for v in h.center], "radius": float(h.radius)}
            for h in ctx.human_regions
        ],
        "manipulated_id": ctx.manipulated_id,
        "start_config": [float(v) for v in ctx.start_config],
        "goal_config": [float(v) for v in ctx.goal_config],
        "goal_pose": ctx.goal_pose.to_json(),
        "grasp_transform": ctx.grasp_transform.to_json(),
    }


def load_context(path) -> Context:
    """Load and validate a context.v1 JSON file."""
    with open(path) as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"{path}: not valid JSON: {exc}") from exc
    return context_from_json(doc)


def save_context(ctx: Context, path):
    with open(path, "w") as fh:
        json.dump(context_to_json(ctx), fh, indent=2)
        fh.write("\n")
