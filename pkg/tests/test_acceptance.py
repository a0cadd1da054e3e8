"""Acceptance checks, one test per headline requirement.

Every test prints exactly one ``ACCEPTANCE <name>: PASS|FAIL`` line straight
to the unbuffered stdout so the verdicts survive pytest's capture and can be
scraped from any run log. Tolerances and budgets are pinned as literals next
to the assertions they guard.

The experiment-scale tests plan their candidate pools through a shared
on-disk cache (``COACTIVE_POOL_CACHE`` or a fixed temp-dir location), so the
first run pays the planning cost once and later runs reuse it.
"""

import contextlib
import json
import os
import sys
import tempfile
import time

import numpy as np
import pytest

from coactive import scenarios
from coactive.eval import (
    ExperimentConfig,
    generate_labeled_dataset,
    linear_regret_probe,
    ndcg_at_k,
    oracle_checkpoint,
    pretrain_checkpoint,
    replay_experiment_log,
    run_experiment,
    summarize,
)
from coactive.features import (
    environment_features,
    features,
    interaction_edges,
    object_environment_features,
    object_interaction_features,
    object_motion_features,
    robot_motion_features,
)
from coactive.feedback import LinearExpert
from coactive.learning import RankedList, weights_from_json
from coactive.planner import PlannerConfig, sample_trajectories

POOL_CACHE = os.environ.get("COACTIVE_POOL_CACHE") or os.path.join(
    tempfile.gettempdir(), "coactive-pool-cache"
)

FAMILIES = ("manipulation", "environment", "human")
SEEDS = tuple(range(10))

# Shared protocol for the comparison-scale runs: 20 feedback rounds over
# 25-candidate menus drawn from 150-trajectory pools, simulated corrections
# reaching about 30% of the way to each round's optimum.
PROTOCOL = dict(
    feedback="alpha_fraction",
    alpha=0.3,
    T=20,
    candidates_per_round=25,
    master_pool_size=150,
    seeds=SEEDS,
    cache_dir=POOL_CACHE,
)


@contextlib.contextmanager
def verdict(name):
    try:
        yield
    except BaseException:
        print(f"ACCEPTANCE {name}: FAIL", file=sys.__stdout__, flush=True)
        raise
    print(f"ACCEPTANCE {name}: PASS", file=sys.__stdout__, flush=True)


def _per_seed_mean(rows, algo):
    means = {k[-1]: v for k, v in summarize(rows, "ndcg3").items() if k[1] == algo}
    assert sorted(means) == sorted(SEEDS)
    return means


def _round_means(rows):
    by_round = {}
    for r in rows:
        by_round.setdefault(r["round"], []).append(r["ndcg3"])
    return {t: float(np.mean(v)) for t, v in sorted(by_round.items())}


# ---------------------------------------------------------------------------
# feature layout


def test_feature_blocks_have_pinned_sizes():
    with verdict("dimensionality"):
        for ctx in scenarios.dataset_contexts():
            m = len(ctx.properties)
            trajs = sample_trajectories(
                ctx, PlannerConfig(n_samples=2, shortcut_passes=2), seed=11
            )
            for tr in trajs:
                assert object_environment_features(ctx, tr).shape == (20,)
                assert object_motion_features(ctx, tr).shape == (28,)
                assert robot_motion_features(tr).shape == (27,)
                assert environment_features(ctx, tr).shape == (75,)
                assert object_interaction_features(ctx, tr).shape == (4 * m * m,)
                assert features(ctx, tr).concatenated().shape == (4 * m * m + 75,)


def _explicit_pair_sum(ctx, traj, w_object):
    """Interaction score summed one edge and one property pair at a time."""
    m = len(ctx.properties)
    w = w_object.reshape(m, m, 4)
    env_objects = ctx.environment_objects()
    held = ctx.manipulated.labels
    total = 0.0
    for _, k, vec, below in interaction_edges(ctx, traj):
        edge = (float(vec[0]), float(vec[1]), float(vec[2]), 1.0 if below else 0.0)
        for p in range(m):
            for q in range(m):
                coupling = float(env_objects[k].labels[p]) * float(held[q])
                total += coupling * sum(wc * ec for wc, ec in zip(w[p, q], edge))
    return total


def test_object_block_score_equals_explicit_double_sum():
    with verdict("pairwise-score-equivalence"):
        rng = np.random.default_rng(7)
        checked = 0
        for tid in ("manip-cup", "manip-eggs", "env-kettle", "human-knife"):
            ctx = scenarios.get_task(tid)
            m = len(ctx.properties)
            trajs = sample_trajectories(
                ctx, PlannerConfig(n_samples=5, shortcut_passes=2), seed=3
            )
            for tr in trajs:
                phi = object_interaction_features(ctx, tr)
                for _ in range(5):
                    w_object = rng.normal(size=4 * m * m)
                    packed = float(w_object @ phi)
                    explicit = _explicit_pair_sum(ctx, tr, w_object)
                    assert abs(packed - explicit) <= 1e-9
                    checked += 1
        assert checked == 100


# ---------------------------------------------------------------------------
# regret


def test_regret_rate_decays_like_inverse_sqrt():
    with verdict("regret-decay"):
        t0 = time.time()
        steep_enough = 0
        for seed in SEEDS:
            probe = linear_regret_probe(candidates=100, T=500, alpha=1.0, seed=seed)
            running = probe["curve"].running()
            horizon = np.arange(10, 501)
            slope = np.polyfit(np.log(horizon), np.log(running[9:500]), 1)[0]
            if slope <= -0.4:
                steep_enough += 1
        assert steep_enough >= 8
        assert time.time() - t0 < 600.0


def test_regret_stays_under_informativeness_bound():
    with verdict("regret-bound"):
        t0 = time.time()
        alpha = 0.5
        for seed in SEEDS:
            probe = linear_regret_probe(candidates=100, T=500, alpha=alpha, seed=seed)
            running = probe["curve"].running()
            horizon = np.arange(1, len(running) + 1)
            bound = (
                2.0 * probe["r_max"] * probe["w_star_norm"] / (alpha * np.sqrt(horizon))
                + np.cumsum(probe["xi"]) / (alpha * horizon)
            )
            assert np.all(running <= bound + 1e-12)
        assert time.time() - t0 < 600.0


# ---------------------------------------------------------------------------
# algorithm comparison


@pytest.mark.slow
def test_perceptron_outranks_baselines_per_family():
    with verdict("algorithm-ordering"):
        t0 = time.time()
        for family in FAMILIES:
            per_algo = {}
            alphas = None
            for algo in ("tpp", "mmp_online", "manual", "geometric"):
                rows = run_experiment(ExperimentConfig(algorithm=algo, scenario=family, **PROTOCOL))
                per_algo[algo] = _per_seed_mean(rows, algo)
                if algo == "tpp":
                    alphas = [r["realized_alpha"] for r in rows]
            assert 0.2 <= float(np.mean(alphas)) <= 0.5
            tpp = per_algo["tpp"]
            for baseline in ("mmp_online", "manual", "geometric"):
                base = per_algo[baseline]
                wins = sum(1 for s in SEEDS if tpp[s] > base[s])
                assert wins >= 8, f"{family}: tpp beat {baseline} on only {wins}/10 seeds"
        assert time.time() - t0 < 1800.0


@pytest.mark.slow
def test_pretraining_lifts_early_rounds_then_washes_out(tmp_path):
    with verdict("generalization-shape"):
        for family in FAMILIES:
            checkpoint = tmp_path / f"pretrained-{family}.json"
            pretrain_checkpoint(
                family,
                checkpoint,
                config=ExperimentConfig(algorithm="tpp", scenario=family, **PROTOCOL),
            )
            untrained = run_experiment(
                ExperimentConfig(algorithm="tpp", scenario=family, **PROTOCOL)
            )
            pretrained = run_experiment(
                ExperimentConfig(
                    algorithm="tpp", scenario=family, setting="pretrained",
                    checkpoint=str(checkpoint), **PROTOCOL,
                )
            )
            un_first = {r["seed"]: r["ndcg3"] for r in untrained if r["round"] == 1}
            pre_first = {r["seed"]: r["ndcg3"] for r in pretrained if r["round"] == 1}
            wins = sum(1 for s in SEEDS if pre_first[s] > un_first[s])
            assert wins >= 8, f"{family}: pretraining helped round 1 on only {wins}/10 seeds"
            un_curve = _round_means(untrained)
            pre_curve = _round_means(pretrained)
            gap_first = pre_curve[1] - un_curve[1]
            gap_last = pre_curve[20] - un_curve[20]
            assert gap_first > 0.0
            assert gap_last < 0.25 * gap_first, (
                f"{family}: round-20 gap {gap_last:.4f} is not under a quarter "
                f"of the round-1 gap {gap_first:.4f}"
            )


@pytest.mark.slow
def test_frozen_oracle_plateaus_and_is_overtaken(tmp_path):
    with verdict("oracle-freeze"):
        rng = np.random.default_rng(41)
        hidden = LinearExpert(rng.normal(size=219))
        dataset = generate_labeled_dataset(
            contexts=[scenarios.get_task(t["id"]) for t in scenarios.list_tasks()],
            planner_config=PlannerConfig(shortcut_passes=8),
            expert=hidden,
            per_context=150,
            seed=0,
            cache_dir=POOL_CACHE,
        )
        checkpoint = tmp_path / "oracle.json"
        oracle_checkpoint(dataset, checkpoint)

        # Every round draws the whole pool, so a frozen ranker must repeat
        # the same ranking and the same score, round after round.
        protocol = dict(
            scenario="manipulation", feedback="alpha_fraction", alpha=1.0,
            T=10, seeds=SEEDS, candidates_per_round=150, master_pool_size=150,
            cache_dir=POOL_CACHE,
        )
        oracle_rows = run_experiment(
            ExperimentConfig(
                algorithm="oracle_svm", setting="pretrained",
                checkpoint=str(checkpoint), **protocol,
            ),
            expert=hidden,
        )
        tpp_rows = run_experiment(
            ExperimentConfig(algorithm="tpp", **protocol), expert=hidden
        )

        per_seed_oracle = {}
        for seed in SEEDS:
            values = [r["ndcg3"] for r in oracle_rows if r["seed"] == seed]
            assert max(values) - min(values) == 0.0, f"oracle moved on seed {seed}"
            per_seed_oracle[seed] = values[0]
        overtaken = 0
        for seed in SEEDS:
            curve = {r["round"]: r["ndcg3"] for r in tpp_rows if r["seed"] == seed}
            if any(curve[t] > per_seed_oracle[seed] for t in range(1, 11)):
                overtaken += 1
        assert overtaken >= 8, f"tpp overtook the frozen ranker on only {overtaken}/10 seeds"


# ---------------------------------------------------------------------------
# ranking metric


_NDCG_FIXTURES = [
    ([3, 5, 4], 3, 0.7746989345664829),
    ([5], 1, 1.0),
    ([1], 3, 1.0),
    ([5, 4, 3, 2, 1], 3, 1.0),
    ([1, 2, 3, 4, 5], 3, 0.14540981413661197),
    ([3, 3, 3, 3], 2, 1.0),
    ([1, 5], 1, 0.03225806451612903),
    ([5, 1], 1, 1.0),
    ([2, 2, 5, 1], 3, 0.5929379296958712),
    ([4, 4, 4, 5], 1, 0.4838709677419355),
    ([3, 1], 2, 1.0),
    ([2, 4, 1, 1, 3, 2, 5], 3, 0.29487676593123774),
    ([3, 3, 4, 3, 4, 2, 4, 4, 3], 1, 0.4666666666666667),
    ([2, 5, 2, 5, 3, 4, 4], 2, 0.4461896323408763),
    ([4, 3, 2, 2, 1, 1], 4, 1.0),
    ([1, 5, 3, 5], 2, 0.40663174893665316),
    ([1, 2, 4, 1], 1, 0.06666666666666667),
    ([2, 3, 5], 3, 0.6207658672453381),
    ([2, 1, 4, 1, 5, 2], 5, 0.5397001979852599),
    ([4, 2, 1, 2, 3], 5, 0.9467766597249472),
]


def test_ndcg_matches_frozen_reference_values():
    with verdict("ndcg-oracle"):
        assert len(_NDCG_FIXTURES) == 20
        for ratings, k, expected in _NDCG_FIXTURES:
            ids = [f"t{i}" for i in range(len(ratings))]
            ranked = RankedList(ids, -np.arange(len(ratings), dtype=float))
            assert abs(ndcg_at_k(ranked, dict(zip(ids, ratings)), k) - expected) <= 1e-9


# ---------------------------------------------------------------------------
# replay


def test_event_logs_replay_to_identical_weights(tmp_path):
    with verdict("replay-determinism"):
        from fastapi.testclient import TestClient

        from coactive.service import create_app, replay_weights

        data_dir = tmp_path / "sessions"
        client = TestClient(create_app(str(data_dir)))
        created = client.post(
            "/api/sessions", json={"task_id": "manip-eggs", "seed": 5, "n_candidates": 6}
        )
        assert created.status_code == 201
        sid = created.json()["id"]
        page = client.get(f"/api/sessions/{sid}/candidates", params={"k": 6}).json()
        worst = page["candidates"][-1]["id"]
        top = page["candidates"][0]
        assert client.post(
            f"/api/sessions/{sid}/feedback",
            json={"kind": "rerank_top", "selected": worst},
        ).status_code == 200
        assert client.post(
            f"/api/sessions/{sid}/feedback",
            json={
                "kind": "zero_g",
                "trajectory": top["id"],
                "waypoint": 1,
                "joints": top["waypoints"][1],
            },
        ).status_code == 200
        with open(data_dir / f"session-{sid}.json") as fh:
            doc = json.load(fh)
        stored, _ = weights_from_json(doc["weights"])
        assert np.array_equal(replay_weights(doc).vector(), stored.vector())

        for feedback in ("approx_argmax", "zero_g"):
            out = tmp_path / f"run-{feedback}"
            cfg = ExperimentConfig(
                algorithm="tpp", scenario="manip-eggs", feedback=feedback,
                T=8, seeds=(0,), candidates_per_round=10, master_pool_size=40,
                planner=PlannerConfig(shortcut_passes=2),
                cache_dir=POOL_CACHE, out_dir=str(out),
            )
            run_experiment(cfg)
            with open(out / "weights-manip-eggs-tpp-0.json") as fh:
                saved, _ = weights_from_json(json.load(fh))
            replayed = replay_experiment_log(
                str(out / "events-manip-eggs-tpp-0.jsonl"), cfg, 0
            )
            assert np.array_equal(saved.vector(), replayed.vector())
            assert saved.t == replayed.t
