"""Ranking metrics and the offline experiment harness.

The harness mirrors the interactive loop: every round it draws a fresh
candidate set, presents a ranking, obtains simulated feedback and applies
the learner's update. Ratings exist only on the metrics side; online
learners never see them.
"""

from __future__ import annotations

import csv
import hashlib
import json
import os
from dataclasses import dataclass, field, replace

import numpy as np

from . import scenarios, world
from .errors import ConfigError, ContractError, DomainError, SchemaError, UnknownIdError
from .features import features
from .feedback import (
    FeedbackEvent,
    RulesExpert,
    ZeroGConfig,
    append_events,
    informativeness,
    read_events,
    simulate_rerank,
    simulate_zero_g,
)
from .kinematics import DEFAULT_ARM, Trajectory
from .learning import (
    MMPConfig,
    MMPOnline,
    RankedList,
    Standardizer,
    WeightState,
    manual_score,
    tpp_update_vector,
    train_oracle_rank,
    weights_from_json,
    weights_to_json,
)
from .planner import PlannerConfig, sample_trajectories
from .world import Context

EXPERIMENT_SCHEMA_VERSION = "experiment.v1"
METRICS_COLUMNS = ("round", "seed", "scenario", "algo", "ndcg1", "ndcg3", "regret", "realized_alpha", "xi")
NDCG_GAIN = "exponential"  # gain(r) = 2**r - 1, recorded in every metrics header

ALGORITHMS = ("tpp", "mmp_online", "oracle_svm", "geometric", "manual")
SETTINGS = ("untrained", "pretrained")
FEEDBACK_KINDS = ("rerank_top", "rerank_top5", "approx_argmax", "alpha_fraction", "zero_g")


# ---------------------------------------------------------------------------
# ratings and nDCG


@dataclass(frozen=True)
class LikertLabel:
    """A 1-to-5 rating attached to one trajectory."""

    rating: int

    def __post_init__(self):
        if not 1 <= int(self.rating) <= 5:
            raise DomainError(f"rating must be in 1..5, got {self.rating}")


def _rating_of(label) -> int:
    if isinstance(label, LikertLabel):
        return int(label.rating)
    return int(LikertLabel(int(label)).rating)


def ndcg_at_k(ranked: RankedList, labels, k: int) -> float:
    """Normalized discounted cumulative gain of a ranking at cutoff ``k``.

    ``labels`` maps every ranked id to a Likert rating; the ideal ordering
    is computed from those same labels, so a single-item ranking is always
    1.0. Gains are exponential, (2**rating - 1) / log2(position + 1).
    """
    if k < 1:
        raise ContractError(f"ndcg cutoff must be >= 1, got {k}")
    if len(ranked) == 0:
        raise ContractError("cannot score an empty ranking")
    try:
        ratings = np.array([_rating_of(labels[tid]) for tid in ranked.ids], dtype=float)
    except KeyError as exc:
        raise ContractError(f"ranked id {exc.args[0]!r} has no label") from None
    gains = 2.0 ** ratings - 1.0
    discounts = 1.0 / np.log2(np.arange(2, len(gains) + 2))
    kk = min(k, len(gains))
    dcg = float((gains[:kk] * discounts[:kk]).sum())
    ideal = np.sort(gains)[::-1]
    idcg = float((ideal[:kk] * discounts[:kk]).sum())
    return dcg / idcg if idcg > 0 else 1.0


def likert_from_scores(scores) -> np.ndarray:
    """Within-context quintile binning of raw expert scores onto 1..5.

    Equal fifths by rank order (each bucket holds 20% of the items, give or
    take one on uneven splits). A context where every candidate scores the
    same collapses to the median rating 3.
    """
    scores = np.asarray(scores, dtype=float)
    if scores.ndim != 1 or len(scores) == 0:
        raise ContractError("scores must be a non-empty 1-d array")
    if np.allclose(scores, scores[0]):
        return np.full(len(scores), 3, dtype=int)
    ratings = np.empty(len(scores), dtype=int)
    order = np.argsort(scores, kind="stable")
    for bucket, idx in enumerate(np.array_split(order, 5)):
        ratings[idx] = bucket + 1
    return ratings


# ---------------------------------------------------------------------------
# regret


@dataclass
class RegretCurve:
    """Instantaneous regrets per round plus their running average."""

    instantaneous: np.ndarray

    def __post_init__(self):
        self.instantaneous = np.asarray(self.instantaneous, dtype=float)
        if self.instantaneous.ndim != 1:
            raise ContractError("instantaneous regrets must be 1-d")
        if np.any(self.instantaneous < -1e-12):
            raise ContractError("instantaneous regret cannot be negative")

    def running(self) -> np.ndarray:
        """REG_T for every T, the mean of the first T entries."""
        n = len(self.instantaneous)
        return np.cumsum(self.instantaneous) / np.arange(1, n + 1)

    def __len__(self):
        return len(self.instantaneous)


def regret_curve(events, expert, candidate_sets, arm=DEFAULT_ARM) -> RegretCurve:
    """Recompute the regret curve of a feedback log against its candidate sets.

    ``candidate_sets[t]`` holds round t's (context, trajectories) pair, with
    an optional third element carrying precomputed feature rows for experts
    that score features rather than trajectories. The round's optimum is the
    expert argmax over exactly that set.
    """
    if len(events) != len(candidate_sets):
        raise ContractError(
            f"{len(events)} events but {len(candidate_sets)} candidate sets"
        )
    inst = []
    for event, entry in zip(events, candidate_sets):
        ctx, trajs = entry[0], entry[1]
        phis = entry[2] if len(entry) > 2 else None
        scores = np.asarray(expert.score_candidates(ctx, trajs, phis, arm=arm), dtype=float)
        by_id = {tr.id: s for tr, s in zip(trajs, scores)}
        if event.presented not in by_id:
            raise ContractError(
                f"round {event.round}: presented {event.presented!r} not in candidate set"
            )
        inst.append(float(scores.max() - by_id[event.presented]))
    return RegretCurve(np.array(inst))


def linear_regret_probe(dim=30, candidates=100, T=500, alpha=1.0, seed=0):
    """Regret trace of the preference update in a realizable linear world.

    Every round draws fresh standard-normal candidate features; the hidden
    utility is a fixed unit vector. Feedback hands back the candidate whose
    hidden score lies closest to a fraction ``alpha`` of the way from the
    presented top to the round optimum, never below the top. Returns the
    curve together with the bookkeeping the regret bound needs: per-round
    slack xi, the largest update norm seen, and the hidden weight norm.
    """
    if not 0.0 < alpha <= 1.0:
        raise DomainError(f"alpha must be in (0, 1], got {alpha}")
    rng = np.random.default_rng(np.random.SeedSequence([seed, 0x1EA2]))
    w_star = rng.normal(size=dim)
    w_star /= np.linalg.norm(w_star)
    w = np.zeros(dim)
    inst, xis, r_max = [], [], 0.0
    for _ in range(T):
        phis = rng.normal(size=(candidates, dim))
        star = phis @ w_star
        top = int(np.argmax(phis @ w))
        gap = float(star.max() - star[top])
        inst.append(gap)
        if gap <= 0.0:
            xis.append(0.0)
            continue
        target = star[top] + alpha * gap
        betters = np.flatnonzero(star >= star[top])
        fb = int(betters[np.argmin(np.abs(star[betters] - target))])
        _, xi = informativeness(float(star[top]), float(star[fb]), float(star.max()), alpha)
        xis.append(xi)
        if fb != top:
            delta = phis[fb] - phis[top]
            r_max = max(r_max, float(np.linalg.norm(delta)))
            w = w + delta
    return {
        "curve": RegretCurve(np.array(inst)),
        "xi": np.array(xis),
        "r_max": r_max,
        "w_star_norm": 1.0,
    }


# ---------------------------------------------------------------------------
# labeled dataset


def scenario_expert(context_id: str) -> RulesExpert:
    """The hidden rules expert for a bundled task or one of its variants."""
    base = context_id.split("+", 1)[0]
    return RulesExpert(scenarios.rules_constants(scenarios.family_of(base)))


@dataclass
class LabeledDataset:
    """Rated trajectories grouped by context, for offline training and audits."""

    context_ids: list
    trajectory_ids: list
    ratings: np.ndarray
    scores: np.ndarray
    phis: np.ndarray

    def __len__(self):
        return len(self.trajectory_ids)

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            fh.write(f"# schema=dataset.v1 ndcg_gain={NDCG_GAIN} rows={len(self)}\n")
            writer = csv.writer(fh)
            writer.writerow(["context", "trajectory", "rating", "expert_score"])
            for ctx_id, tid, rating, score in zip(
                self.context_ids, self.trajectory_ids, self.ratings, self.scores
            ):
                writer.writerow([ctx_id, tid, int(rating), f"{score:.12g}"])


def generate_labeled_dataset(
    contexts=None,
    planner_config: PlannerConfig | None = None,
    expert=None,
    per_context: int = 100,
    seed: int = 0,
    out_path=None,
    cache_dir=None,
    arm=DEFAULT_ARM,
) -> LabeledDataset:
    """Sample and rate ``per_context`` trajectories for every context.

    Ratings are within-context quintile bins of the expert's scores. They
    feed offline training and metrics only; the online loop in
    run_experiment never reads them. Defaults cover the bundled contexts,
    whose thirteen scenes at one hundred samples each give 1300 rows.
    """
    if contexts is None:
        contexts = scenarios.dataset_contexts()
    cfg = replace(planner_config or PlannerConfig(), n_samples=per_context)
    ctx_ids, traj_ids, all_ratings, all_scores, all_phis = [], [], [], [], []
    for ctx in contexts:
        scorer = expert if expert is not None else scenario_expert(ctx.id)
        trajs, phis = master_pool(ctx, cfg, seed, cache_dir=cache_dir, arm=arm)
        scores = np.asarray(scorer.score_candidates(ctx, trajs, phis, arm=arm), dtype=float)
        ratings = likert_from_scores(scores)
        ctx_ids.extend([ctx.id] * len(trajs))
        traj_ids.extend([tr.id for tr in trajs])
        all_ratings.append(ratings)
        all_scores.append(scores)
        all_phis.append(phis)
    dataset = LabeledDataset(
        context_ids=ctx_ids,
        trajectory_ids=traj_ids,
        ratings=np.concatenate(all_ratings),
        scores=np.concatenate(all_scores),
        phis=np.vstack(all_phis),
    )
    if out_path is not None:
        dataset.to_csv(out_path)
    return dataset


# ---------------------------------------------------------------------------
# candidate pools

# Per-round candidate sets are drawn from a larger master pool planned once
# per (context, seed). Statistically this stands in for calling the planner
# every round while keeping the sampling cost amortized; the draw itself is
# still per round and never repeats a round's set deterministically.
MASTER_POOL_SIZE = 150
CANDIDATES_PER_ROUND = 25


def _pool_key(ctx: Context, cfg: PlannerConfig, seed: int) -> str:
    doc = json.dumps(world.context_to_json(ctx), sort_keys=True) + repr(cfg) + str(seed)
    return hashlib.sha1(doc.encode()).hexdigest()[:16]


def master_pool(ctx: Context, planner_config: PlannerConfig, seed: int, cache_dir=None, arm=DEFAULT_ARM):
    """Plan the per-seed master pool, reusing a cache directory when given.

    Returns (trajectories, raw feature matrix). Cached pools are keyed by
    the full context document and planner configuration, so editing either
    invalidates the entry.
    """
    if cache_dir is not None:
        os.makedirs(cache_dir, exist_ok=True)
        key = _pool_key(ctx, planner_config, seed)
        path = os.path.join(cache_dir, f"{ctx.id.replace('+', '_')}-{seed}-{key}.npz")
        if os.path.exists(path):
            data = np.load(path, allow_pickle=False)
            trajs = [
                Trajectory(context_id=ctx.id, waypoints=wp, id=str(tid))
                for wp, tid in zip(data["waypoints"], data["ids"])
            ]
            return trajs, data["phis"]
    trajs = sample_trajectories(ctx, planner_config, seed=seed, arm=arm)
    phis = np.array([features(ctx, tr, arm=arm).concatenated() for tr in trajs])
    if cache_dir is not None:
        np.savez(
            path,
            waypoints=np.array([tr.waypoints for tr in trajs]),
            ids=np.array([tr.id for tr in trajs]),
            phis=phis,
        )
    return trajs, phis


# ---------------------------------------------------------------------------
# experiment configuration


@dataclass
class ExperimentConfig:
    """Validated contents of an experiment.v1 document."""

    algorithm: str
    scenario: str
    feedback: str = "rerank_top5"
    setting: str = "untrained"
    alpha: float = 0.5
    T: int = 20
    seeds: tuple = tuple(range(10))
    candidates_per_round: int = CANDIDATES_PER_ROUND
    master_pool_size: int = MASTER_POOL_SIZE
    planner: PlannerConfig = field(default_factory=lambda: PlannerConfig(shortcut_passes=8))
    checkpoint: str | None = None
    cache_dir: str | None = None
    out_dir: str | None = None
    mmp: MMPConfig = field(default_factory=MMPConfig)
    zero_g: ZeroGConfig = field(default_factory=ZeroGConfig)

    def __post_init__(self):
        if self.algorithm not in ALGORITHMS:
            raise ConfigError(f"unknown algorithm {self.algorithm!r}, expected one of {ALGORITHMS}")
        if self.setting not in SETTINGS:
            raise ConfigError(f"unknown setting {self.setting!r}, expected one of {SETTINGS}")
        if self.feedback not in FEEDBACK_KINDS:
            raise ConfigError(f"unknown feedback {self.feedback!r}, expected one of {FEEDBACK_KINDS}")
        if self.algorithm == "oracle_svm" and self.setting == "untrained":
            raise ConfigError("oracle_svm has no untrained form; it only runs pretrained")
        if self.setting == "pretrained" and self.algorithm not in ("tpp", "oracle_svm"):
            raise ConfigError(f"{self.algorithm} cannot consume a weight checkpoint")
        if not 0.0 < self.alpha <= 1.0:
            raise ConfigError(f"alpha must be in (0, 1], got {self.alpha}")
        if self.T < 1:
            raise ConfigError(f"T must be >= 1, got {self.T}")
        self.seeds = tuple(int(s) for s in self.seeds)
        if not self.seeds:
            raise ConfigError("seeds must be non-empty")
        if not 1 <= self.candidates_per_round <= self.master_pool_size:
            raise ConfigError(
                f"candidates_per_round {self.candidates_per_round} must fit the master pool "
                f"size {self.master_pool_size}"
            )
        self._scenario_ids()  # validates the name

    def _scenario_ids(self):
        """Resolve the scenario field to concrete (context id, variant) pairs."""
        name = self.scenario
        if name in scenarios.FAMILIES:
            return [(scenarios.target_task(name), None)]
        base, variant = name.split("+", 1) if "+" in name else (name, None)
        if variant is not None and variant not in scenarios.VARIANTS:
            raise ConfigError(f"unknown scenario variant {variant!r}")
        try:
            scenarios.family_of(base)
        except UnknownIdError as exc:
            raise ConfigError(str(exc)) from None
        return [(base, variant)]


def _coerce_planner(doc) -> PlannerConfig:
    if doc is None:
        return PlannerConfig(shortcut_passes=8)
    if not isinstance(doc, dict):
        raise ConfigError("planner section must be a table of PlannerConfig fields")
    try:
        return PlannerConfig(**doc)
    except TypeError as exc:
        raise ConfigError(f"bad planner section: {exc}") from None


def load_experiment_config(path) -> ExperimentConfig:
    """Parse an experiment.v1 file, TOML or JSON by suffix."""
    text = open(path, "rb").read()
    if str(path).endswith(".json"):
        doc = json.loads(text.decode())
    else:
        import tomli

        doc = tomli.loads(text.decode())
    if not isinstance(doc, dict):
        raise SchemaError("experiment config: document must be a table")
    if doc.get("schema") != EXPERIMENT_SCHEMA_VERSION:
        raise SchemaError(
            f"experiment config: schema: expected {EXPERIMENT_SCHEMA_VERSION}, got {doc.get('schema')!r}"
        )
    known = {
        "algorithm", "scenario", "feedback", "setting", "T", "seeds",
        "alpha", "candidates_per_round", "master_pool_size", "planner", "checkpoint",
        "cache_dir", "out_dir", "mmp", "zero_g",
    }
    unknown = set(doc) - known - {"schema"}
    if unknown:
        raise ConfigError(f"unknown experiment fields: {sorted(unknown)}")
    kwargs = {k: v for k, v in doc.items() if k in known}
    kwargs["planner"] = _coerce_planner(doc.get("planner"))
    if "mmp" in doc:
        if not isinstance(doc["mmp"], dict):
            raise ConfigError("mmp section must be a table of MMPConfig fields")
        kwargs["mmp"] = MMPConfig(**doc["mmp"])
    if "zero_g" in doc:
        if not isinstance(doc["zero_g"], dict):
            raise ConfigError("zero_g section must be a table of ZeroGConfig fields")
        try:
            kwargs["zero_g"] = ZeroGConfig(**doc["zero_g"])
        except TypeError as exc:
            raise ConfigError(f"bad zero_g section: {exc}") from None
    if "seeds" in kwargs:
        kwargs["seeds"] = tuple(kwargs["seeds"])
    try:
        return ExperimentConfig(**kwargs)
    except TypeError as exc:
        raise ConfigError(f"bad experiment config: {exc}") from None


# ---------------------------------------------------------------------------
# the online loop


class _TppRunner:
    def __init__(self, weights=None):
        self.w = weights if weights is not None else WeightState.zeros(len(world.DEFAULT_PROPERTIES))

    def scores(self, zphis):
        return zphis @ self.w.vector()

    def update(self, z_top, z_fb):
        self.w = tpp_update_vector(self.w, z_top, z_fb)


def _presented_ranking(algo, runner, ids, zphis, man, frozen_scores):
    if algo == "manual":
        scores = man
    elif algo == "geometric":
        scores = -np.arange(len(ids), dtype=float)  # planner emission order
    elif algo == "oracle_svm":
        scores = frozen_scores
    else:
        scores = runner.scores(zphis)
    order = np.argsort(-np.asarray(scores, dtype=float), kind="stable")
    return RankedList([ids[i] for i in order], np.asarray(scores, float)[order])


def _run_seed(cfg: ExperimentConfig, ctx: Context, expert, seed: int, checkpoint=None, arm=DEFAULT_ARM):
    """One (scenario, seed) run. Returns (metric rows, events, final weights).

    The final element is the learned WeightState with the run's standardizer
    for perceptron runs, or None for learners without a persistable weight
    vector.
    """
    trajs, phis = master_pool(
        ctx, replace(cfg.planner, n_samples=cfg.master_pool_size), seed,
        cache_dir=cfg.cache_dir, arm=arm,
    )
    if checkpoint is not None:
        weights, std = checkpoint
    else:
        weights, std = None, Standardizer.fit(phis)
    zphis = np.array([std.apply(p) for p in phis])
    star_all = np.asarray(expert.score_candidates(ctx, trajs, phis, arm=arm), dtype=float)
    man_all = np.array([manual_score(ctx, tr, arm=arm) for tr in trajs])

    runner = None
    frozen_all = None
    if cfg.algorithm == "tpp":
        runner = _TppRunner(weights)
    elif cfg.algorithm == "mmp_online":
        runner = MMPOnline(zphis.shape[1], cfg.mmp)
    elif cfg.algorithm == "oracle_svm":
        if weights is None:
            raise ConfigError("oracle_svm needs a checkpoint")
        frozen_all = zphis @ weights.vector()

    draw_rng = np.random.default_rng(np.random.SeedSequence([seed, 0xC0AC]))
    fb_rng = np.random.default_rng(np.random.SeedSequence([seed, 0xFEED]))
    rows, events = [], []
    for t in range(1, cfg.T + 1):
        sel = draw_rng.choice(len(trajs), size=cfg.candidates_per_round, replace=False)
        sel.sort()
        ids = [trajs[i].id for i in sel]
        sub_z, sub_star, sub_man = zphis[sel], star_all[sel], man_all[sel]
        frozen_scores = frozen_all[sel] if frozen_all is not None else None
        ranked = _presented_ranking(cfg.algorithm, runner, ids, sub_z, sub_man, frozen_scores)
        ratings = likert_from_scores(sub_star)
        labels = {ids[i]: int(ratings[i]) for i in range(len(ids))}
        ndcg1 = ndcg_at_k(ranked, labels, 1)
        ndcg3 = ndcg_at_k(ranked, labels, 3)
        idx_of = {tid: i for i, tid in enumerate(ids)}
        top_i = idx_of[ranked.top]
        regret = float(sub_star.max() - sub_star[top_i])

        star_by_id = {ids[i]: float(sub_star[i]) for i in range(len(ids))}
        learns = cfg.algorithm in ("tpp", "mmp_online")
        extra = {}
        if not learns:
            # Static rankers take no corrections; the event records the
            # presented top handed straight back.
            fb_id, improved = ranked.top, None
            s_fb = star_by_id[fb_id]
        elif cfg.feedback == "zero_g":
            top_traj = trajs[sel[top_i]]
            improved, moved = simulate_zero_g(
                ctx, top_traj,
                lambda tr: float(expert.score_candidates(ctx, [tr], None, arm=arm)[0]),
                cfg=cfg.zero_g, rng=fb_rng, arm=arm,
            )
            fb_id = improved.id if moved is not None else ranked.top
            s_fb = float(expert.score_candidates(ctx, [improved], None, arm=arm)[0])
            if moved is not None:
                # Corrections are new trajectories outside the master pool, so
                # the log embeds their geometry to stay replayable on its own.
                extra = {"waypoints": improved.waypoints.tolist()}
        else:
            fb_id = simulate_rerank(ranked, star_by_id, cfg.feedback, alpha=cfg.alpha, rng=fb_rng)
            s_fb = star_by_id[fb_id]

        realized, xi = informativeness(float(sub_star[top_i]), s_fb, float(sub_star.max()), alpha=cfg.alpha)
        rows.append({
            "round": t, "seed": seed, "scenario": ctx.id, "algo": cfg.algorithm,
            "ndcg1": ndcg1, "ndcg3": ndcg3, "regret": regret,
            "realized_alpha": realized, "xi": xi,
        })
        events.append(FeedbackEvent(
            round=t, context_id=ctx.id, presented=ranked.top, improved=fb_id,
            kind=cfg.feedback, realized_alpha=realized, xi=xi, extra=extra,
        ))

        if fb_id != ranked.top:
            if cfg.feedback == "zero_g":
                z_fb = std.apply(features(ctx, improved, arm=arm).concatenated())
            else:
                z_fb = sub_z[idx_of[fb_id]]
            if cfg.algorithm == "tpp":
                runner.update(sub_z[top_i], z_fb)
            elif cfg.algorithm == "mmp_online":
                if cfg.feedback == "zero_g":
                    runner.observe(np.vstack([sub_z, z_fb[None, :]]), len(sub_z))
                else:
                    runner.observe(sub_z, idx_of[fb_id])
    final = (runner.w, std) if cfg.algorithm == "tpp" else None
    return rows, events, final


def write_metrics_csv(path, rows, candidates_per_round):
    with open(path, "w", newline="") as fh:
        fh.write(
            f"# schema=metrics.v1 candidates_per_round={candidates_per_round} ndcg_gain={NDCG_GAIN}\n"
        )
        writer = csv.DictWriter(fh, fieldnames=list(METRICS_COLUMNS))
        writer.writeheader()
        for row in rows:
            writer.writerow({k: row[k] for k in METRICS_COLUMNS})


def read_metrics_csv(path):
    rows = []
    with open(path) as fh:
        header = fh.readline()
        if not header.startswith("# schema=metrics.v1"):
            raise SchemaError("metrics file: missing metrics.v1 header comment")
        for row in csv.DictReader(fh):
            rows.append({
                "round": int(row["round"]), "seed": int(row["seed"]),
                "scenario": row["scenario"], "algo": row["algo"],
                "ndcg1": float(row["ndcg1"]), "ndcg3": float(row["ndcg3"]),
                "regret": float(row["regret"]),
                "realized_alpha": float(row["realized_alpha"]), "xi": float(row["xi"]),
            })
    return rows


def run_experiment(config: ExperimentConfig, arm=DEFAULT_ARM, expert=None):
    """Run the configured loop over every (scenario, seed) and collect metrics.

    Returns the per-round metric rows, sorted by (scenario, seed, round) so
    aggregation cannot depend on execution order. When ``config.out_dir`` is
    set, writes metrics.csv, one feedback log per run and, for perceptron
    runs, the final weights. ``expert`` replaces the scenario's hidden rules
    scorer, which realizable-world checks use to plant a linear truth.
    """
    checkpoint = None
    if config.setting == "pretrained" or config.algorithm == "oracle_svm":
        if config.checkpoint is None:
            raise ConfigError(f"{config.algorithm} + {config.setting} needs a checkpoint path")
        with open(config.checkpoint) as fh:
            checkpoint = weights_from_json(json.load(fh))
    all_rows = []
    for base, variant in config._scenario_ids():
        ctx = scenarios.get_task(base) if variant is None else scenarios.get_variant(base, variant)
        scorer = expert if expert is not None else scenario_expert(ctx.id)
        for seed in config.seeds:
            rows, events, final = _run_seed(config, ctx, scorer, seed, checkpoint=checkpoint, arm=arm)
            all_rows.extend(rows)
            if config.out_dir is not None:
                os.makedirs(config.out_dir, exist_ok=True)
                stem = f"{ctx.id.replace('+', '_')}-{config.algorithm}-{seed}"
                log = os.path.join(config.out_dir, f"events-{stem}.jsonl")
                if os.path.exists(log):
                    os.remove(log)
                append_events(log, events)
                if final is not None:
                    with open(os.path.join(config.out_dir, f"weights-{stem}.json"), "w") as fh:
                        json.dump(weights_to_json(*final), fh, indent=2, sort_keys=True)
                        fh.write("\n")
    all_rows.sort(key=lambda r: (r["scenario"], r["seed"], r["round"]))
    if config.out_dir is not None:
        os.makedirs(config.out_dir, exist_ok=True)
        write_metrics_csv(
            os.path.join(config.out_dir, "metrics.csv"), all_rows, config.candidates_per_round
        )
    return all_rows


def summarize(rows, metric="ndcg3"):
    """Per (scenario, algo, seed) mean of a metric over rounds."""
    keyed = {}
    for row in rows:
        keyed.setdefault((row["scenario"], row["algo"], row["seed"]), []).append(row[metric])
    return {k: float(np.mean(v)) for k, v in sorted(keyed.items())}


def replay_experiment_log(events, config: ExperimentConfig, seed: int, arm=DEFAULT_ARM) -> WeightState:
    """Recompute the final perceptron weights of one logged run.

    ``events`` is a log path or an event list. The master pool and its
    standardizer are rebuilt exactly as the run built them, the weight
    vector starts at zero and one update is applied per logged improvement,
    so the result matches an untrained run's saved weights bit for bit.
    Corrections outside the pool must embed their waypoints in the event
    extra; the run loop records them that way.
    """
    if isinstance(events, (str, os.PathLike)):
        events = read_events(events)
    [(base, variant)] = config._scenario_ids()
    ctx = scenarios.get_task(base) if variant is None else scenarios.get_variant(base, variant)
    trajs, phis = master_pool(
        ctx, replace(config.planner, n_samples=config.master_pool_size), seed,
        cache_dir=config.cache_dir, arm=arm,
    )
    std = Standardizer.fit(phis)
    z_by_id = {tr.id: std.apply(p) for tr, p in zip(trajs, phis)}
    w = WeightState.zeros(len(world.DEFAULT_PROPERTIES))
    for event in events:
        if event.context_id != ctx.id:
            raise ContractError(
                f"round {event.round}: event belongs to {event.context_id!r}, not {ctx.id!r}"
            )
        if event.improved == event.presented:
            continue
        if event.presented not in z_by_id:
            raise ContractError(
                f"round {event.round}: presented {event.presented!r} is not in the master pool"
            )
        if event.improved in z_by_id:
            z_fb = z_by_id[event.improved]
        elif "waypoints" in event.extra:
            corrected = Trajectory(
                context_id=ctx.id,
                waypoints=np.asarray(event.extra["waypoints"], dtype=float),
                id=event.improved,
            )
            z_fb = std.apply(features(ctx, corrected, arm=arm).concatenated())
        else:
            raise ContractError(
                f"round {event.round}: correction {event.improved!r} is not in the pool "
                "and carries no geometry"
            )
        w = tpp_update_vector(w, z_by_id[event.presented], z_fb)
    return w


# ---------------------------------------------------------------------------
# checkpoints


def pretrain_checkpoint(family: str, out_path, config: ExperimentConfig | None = None, arm=DEFAULT_ARM):
    """Train weights on the family's source tasks and save a weights.v1 file.

    Runs the same loop as run_experiment on each sibling task in turn,
    carrying the weight vector across tasks. The standardizer is fit on the
    pooled source features and embedded in the checkpoint so transfer runs
    score in the same units.
    """
    cfg = config or ExperimentConfig(algorithm="tpp", scenario=family, feedback="rerank_top5")
    source = scenarios.pretrain_tasks(family)
    pools = []
    for tid in source:
        ctx = scenarios.get_task(tid)
        for seed in cfg.seeds[:1]:
            trajs, phis = master_pool(
                ctx, replace(cfg.planner, n_samples=cfg.master_pool_size), seed,
                cache_dir=cfg.cache_dir, arm=arm,
            )
            pools.append((ctx, trajs, phis))
    std = Standardizer.fit(np.vstack([p for _, _, p in pools]))
    w = WeightState.zeros(len(world.DEFAULT_PROPERTIES))
    for ctx, trajs, phis in pools:
        expert = scenario_expert(ctx.id)
        zphis = np.array([std.apply(p) for p in phis])
        star = np.asarray(expert.score_candidates(ctx, trajs, phis, arm=arm), dtype=float)
        draw_rng = np.random.default_rng(np.random.SeedSequence([cfg.seeds[0], 0xC0AC]))
        fb_rng = np.random.default_rng(np.random.SeedSequence([cfg.seeds[0], 0xFEED]))
        ids = [tr.id for tr in trajs]
        for t in range(cfg.T):
            sel = draw_rng.choice(len(trajs), size=cfg.candidates_per_round, replace=False)
            sel.sort()
            sub_ids = [ids[i] for i in sel]
            sub_z, sub_star = zphis[sel], star[sel]
            scores = sub_z @ w.vector()
            order = np.argsort(-scores, kind="stable")
            ranked = RankedList([sub_ids[i] for i in order], scores[order])
            star_by_id = {sub_ids[i]: float(sub_star[i]) for i in range(len(sub_ids))}
            fb = simulate_rerank(ranked, star_by_id, cfg.feedback, alpha=cfg.alpha, rng=fb_rng)
            if fb != ranked.top:
                idx_of = {tid: i for i, tid in enumerate(sub_ids)}
                w = tpp_update_vector(w, sub_z[idx_of[ranked.top]], sub_z[idx_of[fb]])
    doc = weights_to_json(w, std)
    with open(out_path, "w") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return w, std


def oracle_checkpoint(dataset: LabeledDataset, out_path, c: float = 1.0):
    """Train the frozen ranker on the labeled dataset and save weights.v1.

    The standardizer is fit on the dataset's own features; the ranker is a
    pairwise margin trainer over same-context rating pairs.
    """
    std = Standardizer.fit(dataset.phis)
    zphis = np.array([std.apply(p) for p in dataset.phis])
    w = train_oracle_rank(zphis, dataset.ratings, ctx_keys=dataset.context_ids, c=c)
    doc = weights_to_json(w, std)
    with open(out_path, "w") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return w, std
