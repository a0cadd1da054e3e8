"""Bundled household tasks used for evaluation, pretraining and the demo UI.

Tasks come in three families that stress different parts of the cost
structure: ``manipulation`` tasks hinge on how the held object itself is
moved (upright carries, gentle handling), ``environment`` tasks hinge on
what the arm travels over (laptops, papers, other people's dishes), and
``human`` tasks put a person inside the workspace.  Each family has one
target task used for evaluation plus two sibling tasks used to pretrain
weights for transfer runs, and each family has its own expert scoring
constants so that no single fixed rule set is right everywhere.

Scenes are constructed the same way the test fixtures are: start and goal
joint configurations come first, then the table and clutter are placed
relative to where the held object actually travels, which keeps every task
feasible without inverse kinematics.
"""

from __future__ import annotations

import copy
import importlib.resources
import json

import numpy as np

from . import world
from .errors import DomainError, UnknownIdError
from .kinematics import DEFAULT_ARM, object_pose
from .world import Context, HumanRegion, ObjectInstance, Pose, Shape, Surface

FAMILIES = ("manipulation", "environment", "human")
VARIANTS = ("new_object", "new_environment", "both")

# Per-family constants for the scripted expert (see feedback.RulesExpert).
# Each family is dominated by a different rule, so the one-size-fits-all
# manual baseline is reasonable everywhere but right nowhere: manipulation
# users want fragile cargo hugging the desk where it cannot fall far, office
# (environment) users want hot liquids carried high, clear of keyboards and
# papers (hence the negative low-carry constant), and with a person in the
# workspace everything is about blade clearance.
RULE_CONSTANTS = {
    "manipulation": {
        "upright": 0.1,
        "sharp_clearance": 0.2,
        "fragile_low": 4.0,
        "contortion": 0.05,
        "clearance_cap": 0.6,
    },
    "environment": {
        "upright": 0.6,
        "sharp_clearance": 0.2,
        "fragile_low": -3.0,
        "contortion": 0.15,
        "clearance_cap": 0.5,
    },
    "human": {
        "upright": 0.4,
        "sharp_clearance": 3.0,
        "fragile_low": 0.3,
        "contortion": 0.3,
        "clearance_cap": 0.4,
    },
}

_TABLE_CLEARANCE = 0.02
_TABLE_MARGIN = 0.12
_GRASP = (0.0, 0.0, -0.06)


def _labels(*names):
    vec = np.zeros(len(world.DEFAULT_PROPERTIES))
    for name in names:
        vec[world.DEFAULT_PROPERTIES.index(name)] = 1.0
    return vec


def _drop_half_height(shape):
    """Vertical half extent of a shape placed with identity rotation."""
    if shape.kind == "sphere":
        return shape.radius
    if shape.kind == "box":
        return float(shape.half_extents[2])
    return shape.half_height


def _build_scene(
    ctx_id,
    *,
    held_shape,
    held_labels,
    start,
    goal,
    extras=(),
    humans=(),
    margin=_TABLE_MARGIN,
    clearance=_TABLE_CLEARANCE,
    arm=None,
):
    """Materialize one task context from its placement recipe.

    ``extras`` entries are (id, shape, label names, path fraction, mode,
    value): mode ``below`` drops the object so its top sits ``value`` under
    the held object's swept position at that fraction, mode ``offset``
    shifts it by a 3-vector from that position, and mode ``standing`` rests
    it on the table under that point, nudged sideways by an optional (x, y)
    value.  A standing obstacle taller than ``clearance`` blocks the direct
    route, which is how the blocked tasks force a detour.  ``humans``
    entries are (id, path fraction, offset 3-vector, radius).  ``margin``
    widens the table beyond the swept footprint (scalar or (x, y) pair) and
    ``clearance`` sets how far beneath the nominal sweep the tabletop sits.
    """
    arm = arm if arm is not None else DEFAULT_ARM
    start = np.asarray(start, float)
    goal = np.asarray(goal, float)
    grasp = Pose(np.array(_GRASP), np.eye(3))
    held_shape = copy.deepcopy(held_shape)

    # sample the straight joint-space sweep to learn where the object goes
    fractions = np.linspace(0.0, 1.0, 12)
    sweep = [object_pose(arm, (1 - f) * start + f * goal, grasp) for f in fractions]
    positions = np.array([p.position for p in sweep])
    bottoms = np.array(
        [world.place_shape(held_shape, p).bottom_z() for p in sweep]
    )

    # table: axis-aligned cover of the swept footprint, just below the
    # lowest point the held object reaches on the nominal sweep
    margin_xy = np.broadcast_to(np.asarray(margin, float), (2,))
    lo = positions[:, :2].min(axis=0) - margin_xy
    hi = positions[:, :2].max(axis=0) + margin_xy
    center_xy = 0.5 * (lo + hi)
    table_z = bottoms.min() - clearance
    table = Surface(
        id="table",
        kind="table",
        center=np.array([center_xy[0], center_xy[1], table_z]),
        half_extents=0.5 * (hi - lo),
    )

    def at_fraction(f):
        qs = (1 - f) * start + f * goal
        pose = object_pose(arm, qs, grasp)
        bottom = world.place_shape(held_shape, pose).bottom_z()
        return pose.position, bottom

    objects = [
        ObjectInstance(
            id="held",
            shape=held_shape,
            pose=sweep[0],
            labels=np.asarray(held_labels, float),
        )
    ]
    for oid, shape, names, fraction, mode, value in extras:
        anchor, anchor_bottom = at_fraction(fraction)
        if mode == "below":
            center = np.array(
                [
                    anchor[0],
                    anchor[1],
                    anchor_bottom - value - _drop_half_height(shape),
                ]
            )
        elif mode == "offset":
            center = anchor + np.asarray(value, float)
        elif mode == "standing":
            dxy = np.zeros(2) if value is None else np.asarray(value, float)
            center = np.array(
                [anchor[0] + dxy[0], anchor[1] + dxy[1], table_z + _drop_half_height(shape)]
            )
        else:
            raise DomainError(f"scenario {ctx_id}: unknown placement mode {mode!r}")
        objects.append(
            ObjectInstance(
                id=oid, shape=copy.deepcopy(shape), pose=Pose(center, np.eye(3)), labels=_labels(*names)
            )
        )

    human_regions = []
    for hid, fraction, offset, radius in humans:
        anchor, _ = at_fraction(fraction)
        human_regions.append(
            HumanRegion(id=hid, center=anchor + np.asarray(offset, float), radius=radius)
        )

    return Context(
        id=ctx_id,
        properties=world.DEFAULT_PROPERTIES,
        objects=objects,
        surfaces=[table],
        human_regions=human_regions,
        manipulated_id="held",
        start_config=start,
        goal_config=goal,
        goal_pose=sweep[-1],
        grasp_transform=grasp,
    )


# ---------------------------------------------------------------------------
# task recipes

_CUP = Shape("cylinder", radius=0.035, half_height=0.08)
_EGG_CARTON = Shape("box", half_extents=(0.065, 0.045, 0.035))
_PITCHER = Shape("cylinder", radius=0.05, half_height=0.11)
_KETTLE = Shape("cylinder", radius=0.055, half_height=0.09)
_TRAY = Shape("box", half_extents=(0.1, 0.07, 0.015))
_BOTTLE = Shape("cylinder", radius=0.032, half_height=0.1)
_KNIFE = Shape("box", half_extents=(0.012, 0.02, 0.11))
_MUG = Shape("cylinder", radius=0.04, half_height=0.05)
_SCISSORS = Shape("box", half_extents=(0.01, 0.025, 0.085))

_LAPTOP = Shape("box", half_extents=(0.12, 0.09, 0.012))
_BOWL = Shape("cylinder", radius=0.07, half_height=0.03)
_PLATE = Shape("cylinder", radius=0.09, half_height=0.012)
_BOOK = Shape("box", half_extents=(0.08, 0.055, 0.02))
_MONITOR = Shape("box", half_extents=(0.14, 0.02, 0.1))
_GLASS = Shape("cylinder", radius=0.03, half_height=0.06)
_KEYBOARD = Shape("box", half_extents=(0.15, 0.06, 0.01))
_CEREAL = Shape("box", half_extents=(0.05, 0.025, 0.095))
_TOMATO = Shape("sphere", radius=0.035)
_MILK = Shape("cylinder", radius=0.035, half_height=0.095)

# Target tasks put one tall object right on the straight line between the
# start and goal sweeps, so every feasible motion either climbs over it or
# swings around it; that choice is where user preferences bite.  The
# environment targets also use start and goal configurations whose shoulder
# and elbow pitches cancel, holding the object dead level at rest, so any
# vertical dodge shows up as tilt.
_TASKS = {
    "manip-cup": dict(
        family="manipulation",
        title="Carry a full cup across the desk",
        recipe=dict(
            held_shape=_CUP,
            held_labels=_labels("liquid", "fragile"),
            start=(-0.9, -0.25, 0.55, 0.0, 0.0, 0.0),
            goal=(0.9, -0.25, 0.55, 0.0, 0.0, 0.0),
            extras=(
                ("bowl", _BOWL, ("fragile",), 0.35, "standing", None),
                ("lamp", Shape("cylinder", radius=0.055, half_height=0.2), ("electronic",), 0.5, "standing", None),
                ("laptop", _LAPTOP, ("electronic",), 0.72, "standing", None),
            ),
            margin=(0.12, 0.32),
            clearance=0.18,
        ),
    ),
    "manip-eggs": dict(
        family="manipulation",
        title="Move an egg carton to the counter",
        recipe=dict(
            held_shape=_EGG_CARTON,
            held_labels=_labels("fragile",),
            start=(-0.7, -0.2, 0.5, 0.0, 0.0, 0.0),
            goal=(1.0, -0.2, 0.5, 0.0, 0.0, 0.0),
            extras=(
                ("plate", _PLATE, ("fragile",), 0.5, "standing", None),
                ("book", _BOOK, ("heavy",), 0.25, "standing", (0.0, -0.18)),
            ),
            margin=(0.12, 0.26),
            clearance=0.16,
        ),
    ),
    "manip-pitcher": dict(
        family="manipulation",
        title="Bring the water pitcher over",
        recipe=dict(
            held_shape=_PITCHER,
            held_labels=_labels("liquid", "fragile"),
            start=(-1.1, -0.22, 0.5, 0.0, 0.0, 0.0),
            goal=(0.6, -0.22, 0.5, 0.0, 0.0, 0.0),
            extras=(
                ("mug", _MUG, ("fragile",), 0.4, "standing", None),
                ("phone", Shape("box", half_extents=(0.04, 0.075, 0.005)), ("electronic",), 0.75, "standing", None),
            ),
            margin=(0.12, 0.26),
            clearance=0.16,
        ),
    ),
    "env-kettle": dict(
        family="environment",
        title="Carry a hot kettle over office clutter",
        recipe=dict(
            held_shape=_KETTLE,
            held_labels=_labels("hot", "liquid", "fragile"),
            start=(-0.9, -0.5, 0.5, 0.0, 0.0, 0.0),
            goal=(0.9, -0.5, 0.5, 0.0, 0.0, 0.0),
            extras=(
                ("mug", _MUG, (), 0.2, "standing", (0.0, -0.2)),
                ("laptop", _LAPTOP, ("electronic",), 0.3, "standing", None),
                ("binders", Shape("box", half_extents=(0.05, 0.05, 0.2)), ("heavy",), 0.5, "standing", None),
                ("papers", Shape("box", half_extents=(0.1, 0.14, 0.005)), ("fragile",), 0.75, "standing", None),
            ),
            margin=(0.12, 0.32),
            clearance=0.18,
        ),
    ),
    "env-tray": dict(
        family="environment",
        title="Slide a loaded tray past the workstation",
        recipe=dict(
            held_shape=_TRAY,
            held_labels=_labels("heavy", "fragile"),
            start=(-0.8, -0.5, 0.5, 0.0, 0.0, 0.0),
            goal=(0.95, -0.5, 0.5, 0.0, 0.0, 0.0),
            extras=(
                ("monitor", _MONITOR, ("electronic",), 0.55, "standing", (0.0, -0.24)),
                ("glass", _GLASS, ("fragile",), 0.35, "standing", None),
            ),
            margin=(0.12, 0.26),
            clearance=0.16,
        ),
    ),
    "env-bottle": dict(
        family="environment",
        title="Fetch an open bottle across the desk",
        recipe=dict(
            held_shape=_BOTTLE,
            held_labels=_labels("liquid", "fragile"),
            start=(-1.0, -0.5, 0.5, 0.0, 0.0, 0.0),
            goal=(0.7, -0.5, 0.5, 0.0, 0.0, 0.0),
            extras=(
                ("keyboard", _KEYBOARD, ("electronic",), 0.5, "standing", None),
                ("bowl", _BOWL, ("fragile",), 0.8, "standing", None),
            ),
            margin=(0.12, 0.26),
            clearance=0.16,
        ),
    ),
    "human-knife": dict(
        family="human",
        title="Hand groceries with a knife on board",
        recipe=dict(
            held_shape=_KNIFE,
            held_labels=_labels("sharp",),
            start=(-0.9, -0.25, 0.55, 0.0, 0.0, 0.0),
            goal=(0.9, -0.25, 0.55, 0.0, 0.0, 0.0),
            extras=(
                ("cereal", _CEREAL, (), 0.3, "standing", (0.0, -0.22)),
                ("tomato", _TOMATO, ("fragile",), 0.55, "standing", None),
                ("milk", _MILK, ("liquid",), 0.75, "standing", (0.0, -0.2)),
            ),
            humans=(("person", 0.5, (0.0, 0.22, 0.05), 0.15),),
            margin=(0.12, 0.3),
            clearance=0.16,
        ),
    ),
    "human-peeler": dict(
        family="human",
        title="Pass the vegetable peeler around a coworker",
        recipe=dict(
            held_shape=Shape("box", half_extents=(0.01, 0.02, 0.075)),
            held_labels=_labels("sharp",),
            start=(-0.8, -0.22, 0.52, 0.0, 0.0, 0.0),
            goal=(0.85, -0.22, 0.52, 0.0, 0.0, 0.0),
            extras=(
                ("laptop", _LAPTOP, ("electronic",), 0.5, "standing", None),
            ),
            humans=(("coworker", 0.5, (0.0, 0.24, 0.0), 0.16),),
            margin=(0.12, 0.3),
            clearance=0.16,
        ),
    ),
    "human-scissors": dict(
        family="human",
        title="Return scissors while someone is seated nearby",
        recipe=dict(
            held_shape=_SCISSORS,
            held_labels=_labels("sharp",),
            start=(-1.0, -0.2, 0.5, 0.0, 0.0, 0.0),
            goal=(0.75, -0.2, 0.5, 0.0, 0.0, 0.0),
            extras=(
                ("book", _BOOK, (), 0.45, "standing", None),
                ("glass", _GLASS, ("fragile",), 0.7, "standing", (0.0, -0.2)),
            ),
            humans=(("person", 0.55, (0.0, 0.2, 0.08), 0.14),),
            margin=(0.12, 0.3),
            clearance=0.16,
        ),
    ),
}

# replacement held object per family for the new_object variant; bottoms
# never extend further down than the original so tables stay collision free
_ALT_HELD = {
    "manipulation": (Shape("cylinder", radius=0.03, half_height=0.07), ("fragile",)),
    "environment": (Shape("box", half_extents=(0.045, 0.045, 0.055)), ("electronic", "fragile")),
    "human": (Shape("box", half_extents=(0.012, 0.03, 0.09)), ("sharp", "electronic")),
}

_FAMILY_TARGET = {
    "manipulation": "manip-cup",
    "environment": "env-kettle",
    "human": "human-knife",
}


def list_tasks():
    """Registry entries for every bundled task, sorted by id."""
    return [
        {"id": tid, "family": spec["family"], "title": spec["title"]}
        for tid, spec in sorted(_TASKS.items())
    ]


def family_of(task_id):
    return _spec(task_id)["family"]


def target_task(family):
    """The designated evaluation task of a family."""
    if family not in _FAMILY_TARGET:
        raise UnknownIdError(f"unknown scenario family {family!r}")
    return _FAMILY_TARGET[family]


def pretrain_tasks(family):
    """Sibling tasks used to train weights before transfer runs."""
    target = target_task(family)
    return [tid for tid, spec in sorted(_TASKS.items()) if spec["family"] == family and tid != target]


def rules_constants(family):
    if family not in RULE_CONSTANTS:
        raise UnknownIdError(f"unknown scenario family {family!r}")
    return dict(RULE_CONSTANTS[family])


def _spec(task_id):
    try:
        return _TASKS[task_id]
    except KeyError:
        raise UnknownIdError(f"unknown task id {task_id!r}") from None


def get_task(task_id) -> Context:
    spec = _spec(task_id)
    return _build_scene(task_id, **spec["recipe"])


def get_variant(task_id, which) -> Context:
    """A perturbed copy of a task for generalization runs.

    ``new_object`` swaps the held object for the family's alternate,
    ``new_environment`` rearranges the clutter and shifts the start,
    ``both`` applies the two together.
    """
    if which not in VARIANTS:
        raise DomainError(f"unknown variant {which!r}, expected one of {VARIANTS}")
    spec = _spec(task_id)
    recipe = copy.deepcopy(spec["recipe"])
    if which in ("new_object", "both"):
        shape, names = _ALT_HELD[spec["family"]]
        recipe["held_shape"] = shape
        recipe["held_labels"] = _labels(*names)
    if which in ("new_environment", "both"):
        start = np.asarray(recipe["start"], float).copy()
        start[0] -= 0.15
        recipe["start"] = start
        moved = []
        for oid, shape, names, fraction, mode, value in recipe.get("extras", ()):
            fraction = min(fraction + 0.12, 0.85)
            if mode == "below":
                value = value + 0.03
            elif mode == "standing":
                if value is not None:
                    value = np.asarray(value, float) * np.array([1.0, -1.0])
            else:
                value = np.asarray(value, float) * np.array([1.0, -1.0, 1.0])
            moved.append((oid, shape, names, fraction, mode, value))
        recipe["extras"] = tuple(moved)
        recipe["humans"] = tuple(
            (hid, fraction, np.asarray(off, float) * np.array([1.0, -1.0, 1.0]), radius)
            for hid, fraction, off, radius in recipe.get("humans", ())
        )
    return _build_scene(f"{task_id}+{which}", **recipe)


def dataset_contexts():
    """The fixed batch of contexts behind the labeled ratings dataset.

    Nine bundled tasks plus four generalization variants, thirteen in all,
    so a hundred rated trajectories per context gives the full table.
    """
    contexts = [get_task(tid) for tid, _ in sorted(_TASKS.items())]
    contexts.append(get_variant("manip-cup", "new_object"))
    contexts.append(get_variant("manip-cup", "new_environment"))
    contexts.append(get_variant("env-kettle", "new_environment"))
    contexts.append(get_variant("human-knife", "both"))
    return contexts


def load_bundled(name) -> Context:
    """Load one of the JSON context files shipped inside the package."""
    root = importlib.resources.files("coactive").joinpath("data", "contexts")
    path = root.joinpath(f"{name}.json")
    if not path.is_file():
        raise UnknownIdError(f"no bundled context named {name!r}")
    return world.context_from_json(json.loads(path.read_text()))
