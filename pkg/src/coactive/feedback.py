"""Simulated users closing the learning loop without a human present.

Two expert families stand in for the user's hidden scoring function: a
linear expert over the same standardized features the learners see, and a
rules expert reusing the hand-coded rule family with its own constants so
the learners face a score they cannot represent exactly.

The simulators produce the two feedback kinds the loop supports: picking a
better trajectory from the presented ranking, and locally improving a single
waypoint.  Every simulator is deterministic under a fixed random generator.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import ContractError, DomainError, SchemaError
from .kinematics import DEFAULT_ARM, ArmModel, Trajectory
from .learning import RankedList, rule_score
from .planner import CollisionChecker
from .world import Context

FEEDBACK_EVENT_SCHEMA_VERSION = "feedback.v1"

RERANK_STRATEGIES = ("rerank_top", "rerank_top5", "approx_argmax", "alpha_fraction")


# ---------------------------------------------------------------------------
# expert models


@dataclass
class LinearExpert:
    """Hidden linear scorer over the standardized feature vectors."""

    weights: np.ndarray

    def score_candidates(self, ctx, trajs, phis, arm=DEFAULT_ARM):
        phis = np.asarray(phis, dtype=float)
        if phis.shape[-1] != len(self.weights):
            raise ContractError(
                f"feature dim {phis.shape[-1]} does not match expert dim {len(self.weights)}"
            )
        return np.array([float(self.weights @ row) for row in phis])


@dataclass
class RulesExpert:
    """Hidden rule-family scorer; constants differ per scenario family."""

    constants: dict

    def score_candidates(self, ctx, trajs, phis, arm=DEFAULT_ARM):
        return np.array([rule_score(ctx, tr, self.constants, arm) for tr in trajs])


# ---------------------------------------------------------------------------
# re-rank style feedback


def simulate_rerank(
    ranked: RankedList,
    star: dict,
    strategy: str,
    alpha: float | None = None,
    rng: np.random.Generator | None = None,
) -> str:
    """Pick the improvement a simulated user would click in the ranking.

    ``star`` maps trajectory id to the expert's hidden score.  Every strategy
    returns the current top when it cannot find anything better, so the
    choice never scores below the presented top.
    """
    if len(ranked) == 0:
        raise ContractError("cannot give feedback on an empty ranking")
    top = ranked.top
    s_top = star[top]
    if strategy == "rerank_top":
        for tid in ranked.ids[1:]:
            if star[tid] > s_top:
                return tid
        return top
    if strategy == "rerank_top5":
        best = top
        for tid in ranked.ids[:5]:
            if star[tid] > star[best]:
                best = tid
        return best
    if strategy == "approx_argmax":
        if rng is None:
            raise ContractError("approx_argmax needs a random generator")
        picks = rng.choice(len(ranked.ids), size=min(5, len(ranked.ids)), replace=False)
        best = top
        for i in picks:
            tid = ranked.ids[int(i)]
            if star[tid] > star[best]:
                best = tid
        return best
    if strategy == "alpha_fraction":
        if alpha is None or not 0.0 < alpha <= 1.0:
            raise ContractError("alpha_fraction needs alpha in (0, 1]")
        s_best = max(star[tid] for tid in ranked.ids)
        target = s_top + alpha * (s_best - s_top)
        best, best_err = top, abs(s_top - target)
        for tid in ranked.ids[1:]:
            if star[tid] < s_top:
                continue
            err = abs(star[tid] - target)
            if err < best_err - 1e-15:
                best, best_err = tid, err
        return best
    raise DomainError(f"unknown re-rank strategy {strategy!r}; use one of {RERANK_STRATEGIES}")


# ---------------------------------------------------------------------------
# waypoint correction feedback


@dataclass
class ZeroGConfig:
    perturbations: int = 8  # candidate joint draws per interior waypoint
    sigma: float = 0.25  # radians

    def __post_init__(self):
        if self.perturbations < 0:
            raise ContractError("perturbation count must be non-negative")
        if self.sigma < 0:
            raise ContractError("sigma must be non-negative")


def simulate_zero_g(
    ctx: Context,
    traj: Trajectory,
    score_one,
    cfg: ZeroGConfig | None = None,
    rng: np.random.Generator | None = None,
    arm: ArmModel = DEFAULT_ARM,
    new_id: str | None = None,
) -> tuple[Trajectory, int | None]:
    """Best single-waypoint correction a simulated user would hand back.

    Draws ``cfg.perturbations`` Gaussian joint perturbations per interior
    waypoint, keeps the in-limit collision-free ones, and returns the
    modification with the highest ``score_one`` value, provided it strictly
    improves on the input; otherwise the input comes back unchanged.  The
    second return value is the modified waypoint index, or None.
    """
    cfg = cfg or ZeroGConfig()
    rng = rng if rng is not None else np.random.default_rng(0)
    checker = CollisionChecker(ctx, arm)
    lo = arm.joint_limits[:, 0]
    hi = arm.joint_limits[:, 1]
    base_score = score_one(traj)
    best_traj, best_score, best_j = traj, base_score, None
    for j in range(1, len(traj) - 1):
        draws = rng.normal(0.0, cfg.sigma, size=(cfg.perturbations, traj.waypoints.shape[1]))
        for delta in draws:
            q = traj.waypoints[j] + delta
            if np.any(q < lo) or np.any(q > hi):
                continue
            if not checker.is_free(q):
                continue
            waypoints = traj.waypoints.copy()
            waypoints[j] = q
            candidate = Trajectory(
                context_id=traj.context_id,
                waypoints=waypoints,
                id=new_id if new_id is not None else f"{traj.id}/zg",
            )
            s = score_one(candidate)
            if s > best_score:
                best_traj, best_score, best_j = candidate, s, j
    return best_traj, best_j


# ---------------------------------------------------------------------------
# informativeness accounting


def informativeness(s_top: float, s_fb: float, s_best: float, alpha: float):
    """Realized improvement fraction and the slack left against alpha.

    The fraction is defined against the gap to the best candidate available
    this round; with no gap there is nothing to improve and the feedback
    counts as fully informative.
    """
    gap = s_best - s_top
    improvement = s_fb - s_top
    realized = improvement / gap if gap > 0 else 1.0
    xi = max(0.0, alpha * gap - improvement)
    return realized, xi


# ---------------------------------------------------------------------------
# event log


@dataclass
class FeedbackEvent:
    """One feedback round, as persisted to the JSONL log."""

    round: int
    context_id: str
    presented: str
    improved: str
    kind: str
    realized_alpha: float
    xi: float
    extra: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        doc = {
            "schema": FEEDBACK_EVENT_SCHEMA_VERSION,
            "round": int(self.round),
            "context_id": self.context_id,
            "presented": self.presented,
            "improved": self.improved,
            "kind": self.kind,
            "realized_alpha": float(self.realized_alpha),
            "xi": float(self.xi),
        }
        if self.extra:
            doc["extra"] = self.extra
        return doc

    @classmethod
    def from_json(cls, doc) -> "FeedbackEvent":
        if not isinstance(doc, dict) or doc.get("schema") != FEEDBACK_EVENT_SCHEMA_VERSION:
            raise SchemaError(f"feedback event: schema: expected {FEEDBACK_EVENT_SCHEMA_VERSION}")
        for key in ("round", "context_id", "presented", "improved", "kind", "realized_alpha", "xi"):
            if key not in doc:
                raise SchemaError(f"feedback event: missing {key}")
        return cls(
            round=int(doc["round"]),
            context_id=doc["context_id"],
            presented=doc["presented"],
            improved=doc["improved"],
            kind=doc["kind"],
            realized_alpha=float(doc["realized_alpha"]),
            xi=float(doc["xi"]),
            extra=doc.get("extra", {}),
        )


def append_events(path, events):
    with open(path, "a") as fh:
        for event in events:
            fh.write(json.dumps(event.to_json()))
            fh.write("\n")


def read_events(path):
    events = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                doc = json.loads(line)
            except json.JSONDecodeError as exc:
                raise SchemaError(f"{path}:{lineno}: not valid JSON: {exc}") from exc
            events.append(FeedbackEvent.from_json(doc))
    return events
