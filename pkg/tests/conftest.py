"""Shared builders for test scenes.

Contexts are constructed around forward kinematics: pick start/goal joint
configurations first, then place the table and obstacles relative to where
the held object actually travels.  This keeps every fixture feasible without
inverse kinematics.
"""

from __future__ import annotations

import numpy as np

from coactive import kinematics as kin
from coactive import world as w


def make_context(
    ctx_id="ctx-test",
    obstacle=False,
    human=False,
    extra_objects=(),
    start_config=None,
    goal_config=None,
    labels=None,
    table_clearance=0.02,
    table_center_xy=None,
    table_half_extents=(0.25, 0.75),
    arm=None,
):
    """A small tabletop scene that is feasible by construction.

    ``extra_objects`` is a sequence of (id, shape, position, labels) placed
    as environment objects.  ``labels`` are the manipulated object's labels.
    """
    arm = arm if arm is not None else kin.DEFAULT_ARM
    m = len(w.DEFAULT_PROPERTIES)
    # shoulder stays above the table plane: reach slightly downward
    start = np.array([-0.9, -0.25, 0.55, 0.0, 0.0, 0.0]) if start_config is None else np.asarray(start_config, float)
    goal = np.array([0.9, -0.25, 0.55, 0.0, 0.0, 0.0]) if goal_config is None else np.asarray(goal_config, float)
    grasp = w.Pose(np.array([0.0, 0.0, -0.06]), np.eye(3))
    shape = w.Shape("cylinder", radius=0.035, half_height=0.08)
    start_pose = kin.object_pose(arm, start, grasp)
    goal_pose = kin.object_pose(arm, goal, grasp)
    if labels is None:
        labels = np.zeros(m)
        labels[4] = 1  # liquid
    bottom = min(
        w.place_shape(shape, start_pose).bottom_z(), w.place_shape(shape, goal_pose).bottom_z()
    )
    table_z = bottom - table_clearance
    mid_xy = 0.5 * (start_pose.position[:2] + goal_pose.position[:2])
    objects = [
        w.ObjectInstance(id="carried", shape=shape, pose=start_pose, labels=np.asarray(labels, float))
    ]
    if obstacle:
        # a box straddling the straight-line object path
        direct = 0.5 * (start_pose.position + goal_pose.position)
        objects.append(
            w.ObjectInstance(
                id="blocker",
                shape=w.Shape("box", half_extents=np.array([0.06, 0.06, 0.1])),
                pose=w.Pose(np.array([direct[0], direct[1], direct[2]]), np.eye(3)),
                labels=np.eye(m)[0],  # heavy
            )
        )
    for oid, oshape, pos, olabels in extra_objects:
        objects.append(
            w.ObjectInstance(
                id=oid,
                shape=oshape,
                pose=w.Pose(np.asarray(pos, float), np.eye(3)),
                labels=np.asarray(olabels, float),
            )
        )
    humans = []
    if human:
        humans.append(
            w.HumanRegion(
                id="person",
                center=np.array([0.55, 0.30, goal_pose.position[2] + 0.08]),
                radius=0.15,
            )
        )
    if table_center_xy is None:
        table_center_xy = (max(mid_xy[0], 0.45), mid_xy[1])
    ctx = w.Context(
        id=ctx_id,
        properties=w.DEFAULT_PROPERTIES,
        objects=objects,
        surfaces=[
            w.Surface(
                id="table",
                kind="table",
                center=np.array([table_center_xy[0], table_center_xy[1], table_z]),
                half_extents=np.asarray(table_half_extents, float),
            )
        ],
        human_regions=humans,
        manipulated_id="carried",
        start_config=start,
        goal_config=goal,
        goal_pose=goal_pose,
        grasp_transform=grasp,
    )
    return ctx
