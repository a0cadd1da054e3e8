"""Preference learning on trajectory features.

The main learner keeps two weight blocks, one over the object-interaction
features and one over the environment features, and updates them with the
raw feature difference between the user's improvement and the trajectory
that was presented.  There is no learning rate; feature standardization
(per-dimension scale constants fit once on a calibration sample) does the
magnitude balancing instead, identically for every learner.

Baselines for comparison: an online max-margin learner that treats each
feedback as an optimal demonstration, a batch pairwise ranker trained on
expert ratings, a hand-coded rule score, and a task-independent geometric
planner that ignores preferences entirely.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from importlib import resources

import numpy as np

from .errors import ConfigError, ContractError, InvariantError, SchemaError, TrainingError
from .features import ENVIRONMENT_DIM, features
from .kinematics import DEFAULT_ARM, ArmModel, Trajectory, object_poses
from .world import Context

WEIGHTS_SCHEMA_VERSION = "weights.v1"


# ---------------------------------------------------------------------------
# standardization


@dataclass
class Standardizer:
    """Per-dimension positive divisors bringing features to comparable scale.

    Scale only, no shift: a zero feature stays zero, so trajectories with an
    empty interaction block contribute nothing there no matter how the
    calibration sample looked.  Dimensions that are constant in the sample
    keep scale 1 rather than exploding.
    """

    scale: np.ndarray

    def __post_init__(self):
        self.scale = np.asarray(self.scale, dtype=float)
        if self.scale.ndim != 1 or not np.all(self.scale > 0):
            raise ContractError("standardization scales must be a 1-d positive vector")

    @classmethod
    def identity(cls, dim: int):
        return cls(scale=np.ones(dim))

    @classmethod
    def fit(cls, rows):
        rows = np.asarray(rows, dtype=float)
        if rows.ndim != 2 or len(rows) < 2:
            raise ContractError("calibration needs a 2-d sample with at least 2 rows")
        std = rows.std(axis=0)
        return cls(scale=np.where(std > 1e-8, std, 1.0))

    def apply(self, phi):
        phi = np.asarray(phi, dtype=float)
        if phi.shape[-1] != len(self.scale):
            raise ContractError(
                f"feature dim {phi.shape[-1]} does not match standardizer dim {len(self.scale)}"
            )
        return phi / self.scale


# ---------------------------------------------------------------------------
# weights


@dataclass(frozen=True)
class WeightState:
    """Two-block linear weights plus the feedback-round counter."""

    m: int
    w_object: np.ndarray
    w_env: np.ndarray
    t: int = 1

    def __post_init__(self):
        object.__setattr__(self, "w_object", np.asarray(self.w_object, dtype=float))
        object.__setattr__(self, "w_env", np.asarray(self.w_env, dtype=float))
        if self.w_object.shape != (4 * self.m * self.m,):
            raise InvariantError(
                f"object weights have shape {self.w_object.shape}, expected (4*{self.m}^2,)"
            )
        if self.w_env.shape != (ENVIRONMENT_DIM,):
            raise InvariantError(
                f"environment weights have shape {self.w_env.shape}, expected ({ENVIRONMENT_DIM},)"
            )
        if not (np.all(np.isfinite(self.w_object)) and np.all(np.isfinite(self.w_env))):
            raise InvariantError("weights must be finite")
        if self.t < 1:
            raise InvariantError(f"iteration count must be >= 1, got {self.t}")

    @classmethod
    def zeros(cls, m: int):
        return cls(m=m, w_object=np.zeros(4 * m * m), w_env=np.zeros(ENVIRONMENT_DIM))

    @property
    def dim(self) -> int:
        return 4 * self.m * self.m + ENVIRONMENT_DIM

    def vector(self) -> np.ndarray:
        return np.concatenate([self.w_object, self.w_env])


def weights_to_json(w: WeightState, standardizer: Standardizer | None = None) -> dict:
    scale = standardizer.scale if standardizer is not None else np.ones(w.dim)
    if len(scale) != w.dim:
        raise ContractError("standardizer dim does not match weight dim")
    return {
        "schema": WEIGHTS_SCHEMA_VERSION,
        "M": w.m,
        "w_O": [float(v) for v in w.w_object],
        "w_E": [float(v) for v in w.w_env],
        "t": int(w.t),
        "standardization": [float(v) for v in scale],
    }


def weights_from_json(doc) -> tuple[WeightState, Standardizer]:
    if not isinstance(doc, dict) or doc.get("schema") != WEIGHTS_SCHEMA_VERSION:
        raise SchemaError(f"weight checkpoint: schema: expected {WEIGHTS_SCHEMA_VERSION}")
    for key in ("M", "w_O", "w_E", "t", "standardization"):
        if key not in doc:
            raise SchemaError(f"weight checkpoint: missing {key}")
    m = int(doc["M"])
    try:
        state = WeightState(
            m=m,
            w_object=np.asarray(doc["w_O"], dtype=float),
            w_env=np.asarray(doc["w_E"], dtype=float),
            t=int(doc["t"]),
        )
    except InvariantError as exc:
        raise SchemaError(f"weight checkpoint: {exc}") from exc
    scale = np.asarray(doc["standardization"], dtype=float)
    if scale.shape != (state.dim,):
        raise SchemaError(
            f"weight checkpoint: standardization has dim {scale.shape}, expected ({state.dim},)"
        )
    return state, Standardizer(scale=scale)


# ---------------------------------------------------------------------------
# scoring and ranking


def score_vector(w: WeightState, phi) -> float:
    phi = np.asarray(phi, dtype=float)
    if phi.shape != (w.dim,):
        raise ContractError(f"feature vector has shape {phi.shape}, weights expect ({w.dim},)")
    return float(w.vector() @ phi)


def score(
    ctx: Context,
    traj: Trajectory,
    w: WeightState,
    arm: ArmModel = DEFAULT_ARM,
    standardizer: Standardizer | None = None,
) -> float:
    phi = features(ctx, traj, arm).concatenated()
    if standardizer is not None:
        phi = standardizer.apply(phi)
    return score_vector(w, phi)


@dataclass
class RankedList:
    """Trajectory ids in descending score order; ties broken by ascending id."""

    ids: list
    scores: np.ndarray

    def __post_init__(self):
        self.scores = np.asarray(self.scores, dtype=float)
        if len(self.ids) != len(self.scores):
            raise InvariantError("ranked ids and scores differ in length")
        if np.any(np.diff(self.scores) > 1e-12):
            raise InvariantError("ranked scores must be non-increasing")

    def __len__(self):
        return len(self.ids)

    @property
    def top(self):
        return self.ids[0]


def rank_vectors(ids, phis, w: WeightState) -> RankedList:
    """Sort precomputed feature vectors by score; the harness's fast path."""
    if len(ids) == 0:
        raise ContractError("cannot rank an empty candidate set")
    phis = np.asarray(phis, dtype=float)
    if phis.shape != (len(ids), w.dim):
        raise ContractError(f"feature matrix has shape {phis.shape}, expected ({len(ids)}, {w.dim})")
    # row-by-row dots, not one matvec: batched BLAS may reduce different rows
    # in different orders, and identical candidates must tie bit-exactly
    wv = w.vector()
    scores = np.array([float(wv @ row) for row in phis])
    order = sorted(range(len(ids)), key=lambda i: (-scores[i], ids[i]))
    return RankedList(ids=[ids[i] for i in order], scores=scores[order])


def rank(
    candidates,
    ctx: Context,
    w: WeightState,
    arm: ArmModel = DEFAULT_ARM,
    standardizer: Standardizer | None = None,
) -> RankedList:
    candidates = list(candidates)
    if not candidates:
        raise ContractError("cannot rank an empty candidate set")
    ids = []
    for traj in candidates:
        if traj.id is None:
            raise ContractError("ranking requires every trajectory to carry an id")
        ids.append(traj.id)
    phis = np.stack([features(ctx, tr, arm).concatenated() for tr in candidates])
    if standardizer is not None:
        phis = standardizer.apply(phis)
    return rank_vectors(ids, phis, w)


# ---------------------------------------------------------------------------
# perceptron update


def tpp_update_vector(w: WeightState, phi_top, phi_fb) -> WeightState:
    """Add the feature difference (improvement minus presented); bump t."""
    phi_top = np.asarray(phi_top, dtype=float)
    phi_fb = np.asarray(phi_fb, dtype=float)
    if phi_top.shape != (w.dim,) or phi_fb.shape != (w.dim,):
        raise ContractError("update features must match the weight dimension")
    delta = phi_fb - phi_top
    n_obj = 4 * w.m * w.m
    return replace(
        w,
        w_object=w.w_object + delta[:n_obj],
        w_env=w.w_env + delta[n_obj:],
        t=w.t + 1,
    )


def tpp_update(
    w: WeightState,
    ctx: Context,
    y_top: Trajectory,
    y_fb: Trajectory,
    arm: ArmModel = DEFAULT_ARM,
    standardizer: Standardizer | None = None,
) -> WeightState:
    if y_top.context_id != ctx.id or y_fb.context_id != ctx.id:
        raise ContractError("update trajectories must belong to the given context")
    phi_top = features(ctx, y_top, arm).concatenated()
    phi_fb = features(ctx, y_fb, arm).concatenated()
    if standardizer is not None:
        phi_top = standardizer.apply(phi_top)
        phi_fb = standardizer.apply(phi_fb)
    return tpp_update_vector(w, phi_top, phi_fb)


# ---------------------------------------------------------------------------
# max-margin baseline (feedback treated as an optimal demonstration)


@dataclass
class MMPConfig:
    c: float = 1.0
    epochs: int = 50
    step: float = 0.05

    def __post_init__(self):
        if self.c <= 0:
            raise ConfigError(f"regularization c must be positive, got {self.c}")
        if self.epochs < 1:
            raise ConfigError(f"epochs must be >= 1, got {self.epochs}")
        if self.step <= 0:
            raise ConfigError(f"step must be positive, got {self.step}")


class MMPOnline:
    """Margin ranker retrained from scratch on every feedback seen so far.

    Each stored example demands that the fed-back trajectory beat every other
    candidate of its round by the l2 distance between their feature vectors.
    Training is plain subgradient descent with a constant step; contradictory
    examples therefore keep the iterate bouncing instead of settling, which
    is the behavior this baseline is meant to exhibit.
    """

    def __init__(self, dim: int, config: MMPConfig | None = None):
        self.dim = dim
        self.config = config or MMPConfig()
        self.examples = []
        self.weights = np.zeros(dim)
        self._last_deltas = []

    def observe(self, phis, fb_index: int):
        phis = np.asarray(phis, dtype=float)
        if phis.ndim != 2 or phis.shape[1] != self.dim:
            raise ContractError(f"candidate features must be (n, {self.dim})")
        if not 0 <= fb_index < len(phis):
            raise ContractError(f"feedback index {fb_index} out of range")
        diffs = phis - phis[fb_index]
        margins = np.linalg.norm(diffs, axis=1)
        self.examples.append((diffs, margins))
        self._retrain()

    def last_step_deltas(self):
        """Per-update weight movement in the final epoch of the last retrain."""
        return self._last_deltas

    def _retrain(self):
        cfg = self.config
        lam = (1.0 / cfg.c) / len(self.examples)
        w = np.zeros(self.dim)
        deltas = []
        for epoch in range(cfg.epochs):
            if epoch == cfg.epochs - 1:
                deltas = []
            for diffs, margins in self.examples:
                slack = margins + diffs @ w
                worst = int(np.argmax(slack))
                g = 2.0 * lam * w
                if slack[worst] > 0:
                    g = g + diffs[worst]
                step = cfg.step * g
                w = w - step
                deltas.append(float(np.linalg.norm(step)))
        self.weights = w
        self._last_deltas = deltas

    def objective(self) -> float:
        lam = (1.0 / self.config.c) / max(len(self.examples), 1)
        total = lam * float(self.weights @ self.weights) * len(self.examples)
        for diffs, margins in self.examples:
            total += float(np.max(margins + diffs @ self.weights))
        return total

    def scores(self, phis):
        return np.asarray(phis, dtype=float) @ self.weights


# ---------------------------------------------------------------------------
# batch pairwise ranker trained on expert ratings


def ranking_pairs(ctx_keys, ratings):
    """Index pairs (i, j) with rating_i > rating_j within the same context."""
    pairs = []
    by_ctx = {}
    for idx, key in enumerate(ctx_keys):
        by_ctx.setdefault(key, []).append(idx)
    for members in by_ctx.values():
        for a in members:
            for b in members:
                if ratings[a] > ratings[b]:
                    pairs.append((a, b))
    return pairs


def train_oracle_rank(phis, ratings, ctx_keys=None, c: float = 1.0, epochs: int = 200):
    """Fit one weight vector to expert ratings by pairwise hinge descent.

    The result is frozen: callers score new candidates with it but never
    update it again.
    """
    phis = np.asarray(phis, dtype=float)
    ratings = np.asarray(ratings)
    if phis.ndim != 2 or len(phis) != len(ratings):
        raise ContractError("need one feature row per rating")
    if ctx_keys is None:
        ctx_keys = ["all"] * len(ratings)
    if len(set(int(r) for r in ratings)) < 2:
        raise TrainingError("all ratings identical; there is nothing to rank")
    pairs = ranking_pairs(ctx_keys, ratings)
    if not pairs:
        raise TrainingError("no orderable rating pairs within any context")
    ii = np.fromiter((a for a, _ in pairs), dtype=int)
    jj = np.fromiter((b for _, b in pairs), dtype=int)
    diffs = phis[ii] - phis[jj]
    lam = (1.0 / c) / len(pairs)
    w = np.zeros(phis.shape[1])
    for epoch in range(epochs):
        margins = diffs @ w
        violated = margins < 1.0
        g = 2.0 * lam * w
        if np.any(violated):
            g = g - diffs[violated].sum(axis=0) / len(pairs)
        w = w - (0.5 / np.sqrt(epoch + 1.0)) * g
    return w


# ---------------------------------------------------------------------------
# hand-coded baseline and the preference-blind planner


def _manual_rules():
    if _manual_rules._cached is None:
        with resources.files("coactive.data").joinpath("manual_rules.json").open() as fh:
            _manual_rules._cached = json.load(fh)
    return _manual_rules._cached


_manual_rules._cached = None


def rule_score(ctx: Context, traj: Trajectory, constants: dict, arm: ArmModel = DEFAULT_ARM) -> float:
    """Evaluate the fixed rule family under the given constants.

    Rules: keep the object upright, keep sharp objects away from people,
    carry fragile objects close to a supporting surface, avoid twisting the
    wrist.  Constants weight the rules; they are never learned.
    """
    poses = object_poses(arm, traj, ctx)
    upright = float(np.mean([p.rotation[2, 2] for p in poses]))
    total = constants["upright"] * upright

    labels = {name: bool(flag) for name, flag in zip(ctx.properties, ctx.manipulated.labels)}
    cap = constants["clearance_cap"]
    if labels.get("sharp") and ctx.human_regions:
        gaps = []
        for p in poses:
            nearest = min(
                float(np.linalg.norm(p.position - h.center)) - h.radius
                for h in ctx.human_regions
            )
            gaps.append(min(max(nearest, 0.0), cap))
        total += constants["sharp_clearance"] * float(np.mean(gaps))
    if labels.get("fragile"):
        from .features import _object_bodies, _surface_signals

        vert, _, _, _ = _surface_signals(ctx, _object_bodies(ctx, traj, arm))
        total += constants["fragile_low"] * (cap - min(float(vert.mean()), cap))

    contortion = float(np.mean(np.linalg.norm(traj.waypoints[:, 3:], axis=1)))
    total -= constants["contortion"] * contortion
    return total


def manual_score(ctx: Context, traj: Trajectory, arm: ArmModel = DEFAULT_ARM) -> float:
    """The hand-coded baseline: rule_score with the bundled constants.

    The constants live in data/manual_rules.json and are never learned.
    """
    return rule_score(ctx, traj, _manual_rules(), arm)


def geometric_plan(ctx: Context, config=None, seed: int = 0, arm: ArmModel = DEFAULT_ARM):
    """First feasible trajectory from the sampling planner, preferences ignored."""
    from .planner import PlannerConfig, sample_trajectories

    cfg = replace(config or PlannerConfig(), n_samples=1)
    return sample_trajectories(ctx, cfg, seed, arm)[0]
