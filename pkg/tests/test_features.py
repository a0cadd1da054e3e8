"""Feature maps, checked against hand-rolled oracles.

The spectral block is compared with an explicit DFT sum, the interaction
block with a literal double loop over property pairs, and the arm block
with a plain-Python reimplementation of the cylindrical statistics.
"""

import cmath
import math

import numpy as np
import pytest

from coactive import features as ft
from coactive import kinematics as kin
from coactive import world as w
from coactive.errors import DomainError

from conftest import make_context

ARM = kin.DEFAULT_ARM


def straight_trajectory(ctx, n=12, tid="t"):
    wps = np.linspace(ctx.start_config, ctx.goal_config, n)
    return kin.Trajectory(context_id=ctx.id, waypoints=wps, id=tid)


def wiggle_trajectory(ctx, n=14, seed=3, tid="t-wiggle"):
    """Straight line plus per-joint sinusoids, endpoints untouched."""
    rng = np.random.default_rng(seed)
    wps = np.linspace(ctx.start_config, ctx.goal_config, n)
    s = np.linspace(0.0, 1.0, n)
    for d in range(wps.shape[1]):
        amp = rng.uniform(0.05, 0.25)
        cycles = rng.integers(1, 4)
        phase = rng.uniform(0, 2 * np.pi)
        wps[:, d] += amp * np.sin(np.pi * s) * np.sin(2 * np.pi * cycles * s + phase)
    wps[0] = ctx.start_config
    wps[-1] = ctx.goal_config
    return kin.Trajectory(context_id=ctx.id, waypoints=wps, id=tid)


# ---------------------------------------------------------------------------
# dimensions and layout


def test_block_dimensions_default_properties():
    ctx = make_context(obstacle=True, human=True)
    traj = straight_trajectory(ctx)
    fv = ft.features(ctx, traj, ARM)
    assert ft.object_environment_features(ctx, traj, ARM).shape == (20,)
    assert ft.object_motion_features(ctx, traj, ARM).shape == (28,)
    assert ft.robot_motion_features(traj, ARM).shape == (27,)
    assert fv.environment.shape == (75,)
    assert fv.object_interactions.shape == (4 * 6 * 6,)
    assert fv.concatenated().shape == (144 + 75,)


def test_object_block_scales_with_property_count():
    """A context with three property names gets a 4*3*3 interaction block."""
    grasp = w.Pose(np.array([0.0, 0.0, -0.06]), np.eye(3))
    shape = w.Shape("cylinder", radius=0.035, half_height=0.08)
    start = np.array([-0.9, -0.25, 0.55, 0.0, 0.0, 0.0])
    goal = np.array([0.9, -0.25, 0.55, 0.0, 0.0, 0.0])
    ctx = w.Context(
        id="ctx-narrow",
        properties=("heavy", "fragile", "liquid"),
        objects=[
            w.ObjectInstance(
                id="cup",
                shape=shape,
                pose=kin.object_pose(ARM, start, grasp),
                labels=np.array([0.0, 1.0, 1.0]),
            )
        ],
        surfaces=[
            w.Surface(
                id="table",
                kind="table",
                center=np.array([0.45, -0.2, 0.5]),
                half_extents=np.array([0.3, 0.6]),
            )
        ],
        human_regions=[],
        manipulated_id="cup",
        start_config=start,
        goal_config=goal,
        goal_pose=kin.object_pose(ARM, goal, grasp),
        grasp_transform=grasp,
    )
    traj = straight_trajectory(ctx)
    assert ft.object_interaction_dim(ctx) == 36
    assert ft.object_interaction_features(ctx, traj, ARM).shape == (36,)
    assert ft.features(ctx, traj, ARM).concatenated().shape == (36 + 75,)


def test_concatenation_order_is_object_then_environment():
    ctx = make_context(obstacle=True)
    traj = straight_trajectory(ctx)
    fv = ft.features(ctx, traj, ARM)
    full = fv.concatenated()
    np.testing.assert_array_equal(full[:144], fv.object_interactions)
    np.testing.assert_array_equal(full[144:], fv.environment)
    np.testing.assert_array_equal(
        fv.environment[:20], ft.object_environment_features(ctx, traj, ARM)
    )
    np.testing.assert_array_equal(
        fv.environment[20:48], ft.object_motion_features(ctx, traj, ARM)
    )
    np.testing.assert_array_equal(fv.environment[48:], ft.robot_motion_features(traj, ARM))


# ---------------------------------------------------------------------------
# spectral helper


def oracle_psd_band(signal, n=32):
    """Explicit-sum DFT on the same periodic resampling grid."""
    signal = list(map(float, signal))
    t_in = [i / (len(signal) - 1) for i in range(len(signal))]
    resampled = []
    for k in range(n):
        t = k / n
        # locate the segment and interpolate by hand
        j = 0
        while j + 2 < len(t_in) and t_in[j + 1] < t:
            j += 1
        t0, t1 = t_in[j], t_in[j + 1]
        lam = 0.0 if t1 == t0 else (t - t0) / (t1 - t0)
        resampled.append((1 - lam) * signal[j] + lam * signal[j + 1])
    mean = sum(resampled) / n
    resampled = [v - mean for v in resampled]
    power = []
    for f in range(n // 2 + 1):
        acc = sum(resampled[k] * cmath.exp(-2j * cmath.pi * f * k / n) for k in range(n))
        power.append(abs(acc) ** 2)
    low = sum(power[1:9]) / 8
    high = sum(power[9:17]) / 8
    return low, high


def test_psd_band_matches_explicit_dft():
    rng = np.random.default_rng(11)
    for _ in range(30):
        n = int(rng.integers(5, 64))
        signal = rng.normal(0, rng.uniform(0.1, 5.0), size=n)
        low, high = ft.psd_band(signal)
        low_o, high_o = oracle_psd_band(signal)
        assert low == pytest.approx(low_o, rel=1e-9, abs=1e-12)
        assert high == pytest.approx(high_o, rel=1e-9, abs=1e-12)


def test_psd_band_constant_signal_is_silent():
    low, high = ft.psd_band(np.full(17, 3.25))
    assert low == pytest.approx(0.0, abs=1e-12)
    assert high == pytest.approx(0.0, abs=1e-12)


def test_psd_band_separates_pure_tones():
    # sampled at 33 points so the length-32 periodic grid hits exact samples
    t = np.linspace(0.0, 1.0, 33)
    slow = np.sin(2 * np.pi * 2 * t)
    fast = np.sin(2 * np.pi * 12 * t)
    low_s, high_s = ft.psd_band(slow)
    low_f, high_f = ft.psd_band(fast)
    assert low_s > 1.0 and high_s < 1e-9
    assert high_f > 1.0 and low_f < 1e-9


def test_psd_band_white_noise_is_flat_on_average():
    # 33 and 65 inclusive samples land exactly on the periodic analysis grid,
    # so the bands see the noise unfiltered by interpolation
    rng = np.random.default_rng(5)
    for length in (33, 65):
        lows, highs = [], []
        for _ in range(1000):
            low, high = ft.psd_band(rng.normal(size=length))
            lows.append(low)
            highs.append(high)
        assert np.mean(lows) == pytest.approx(np.mean(highs), rel=0.10)


def test_psd_band_rejects_bad_input():
    with pytest.raises(DomainError):
        ft.psd_band(np.zeros((4, 4)))
    with pytest.raises(DomainError):
        ft.psd_band([1.0])
    with pytest.raises(DomainError):
        ft.psd_band([1.0, np.nan, 2.0])


# ---------------------------------------------------------------------------
# interaction graph


def box_under_waypoint(ctx, traj, j, gap, half=0.12):
    """An axis-aligned box whose top face sits ``gap`` below waypoint j's object."""
    pose = kin.object_pose(ARM, traj.waypoints[j], ctx.grasp_transform, validate=False)
    body = w.place_shape(ctx.manipulated.shape, pose)
    center = np.array([pose.position[0], pose.position[1], body.bottom_z() - gap - half])
    return w.Shape("box", half_extents=np.array([half, half, half])), center


def test_edge_for_object_passing_above():
    base = make_context()
    traj = straight_trajectory(base, n=11)
    shape, center = box_under_waypoint(base, traj, 5, gap=0.05)
    labels = np.eye(6)[1]  # fragile
    ctx = make_context(extra_objects=[("boxed", shape, center, labels)])
    traj = straight_trajectory(ctx, n=11)
    k = [o.id for o in ctx.environment_objects()].index("boxed")
    hits = {j: (vec, below) for j, kk, vec, below in ft.interaction_edges(ctx, traj, ARM) if kk == k}
    assert 5 in hits
    vec, below = hits[5]
    assert below
    np.testing.assert_allclose(vec, [0.0, 0.0, 0.05], atol=1e-6)


def test_below_alone_makes_an_edge():
    """An object far below the path still registers while directly underneath."""
    base = make_context()
    traj = straight_trajectory(base, n=11)
    shape, center = box_under_waypoint(base, traj, 5, gap=0.30)
    ctx = make_context(extra_objects=[("bin", shape, center, np.eye(6)[0])])
    traj = straight_trajectory(ctx, n=11)
    k = [o.id for o in ctx.environment_objects()].index("bin")
    hits = {j: (vec, below) for j, kk, vec, below in ft.interaction_edges(ctx, traj, ARM) if kk == k}
    assert 5 in hits
    vec, below = hits[5]
    assert below
    assert vec[2] == pytest.approx(0.30, abs=1e-6)
    # 0.30 m exceeds the default proximity threshold, so this edge exists
    # purely through the below rule
    assert np.linalg.norm(vec) > ft.TAU_DEFAULT


def test_proximity_threshold_is_sharp():
    """Side-by-side placement: just inside tau makes an edge, just outside does not."""
    base = make_context()
    traj = straight_trajectory(base, n=11)
    pose = kin.object_pose(ARM, traj.waypoints[5], base.grasp_transform, validate=False)
    held = w.place_shape(base.manipulated.shape, pose)
    shape = w.Shape("box", half_extents=np.array([0.05, 0.05, 0.05]))
    for target, expect_edge in ((ft.TAU_DEFAULT - 0.01, True), (ft.TAU_DEFAULT + 0.01, False)):
        # first guess, then correct the placement by the measured error
        center = pose.position + np.array([0.0, -(0.25 + target), 0.0])
        probe = w.Body("box", center, np.eye(3), box_half_extents=shape.half_extents)
        dist, _ = w.min_collision_distance(probe, held)
        center[1] -= target - dist
        probe = w.Body("box", center, np.eye(3), box_half_extents=shape.half_extents)
        dist, _ = w.min_collision_distance(probe, held)
        assert dist == pytest.approx(target, abs=1e-6)
        ctx = make_context(extra_objects=[("probe", shape, center, np.eye(6)[2])])
        t2 = straight_trajectory(ctx, n=11)
        k = [o.id for o in ctx.environment_objects()].index("probe")
        js = [j for j, kk, _, _ in ft.interaction_edges(ctx, t2, ARM) if kk == k]
        assert (5 in js) == expect_edge


def test_clear_scene_has_zero_interaction_features():
    ctx = make_context()  # no environment objects at all
    traj = straight_trajectory(ctx)
    assert ft.interaction_edges(ctx, traj, ARM) == []
    np.testing.assert_array_equal(
        ft.object_interaction_features(ctx, traj, ARM), np.zeros(144)
    )


def test_object_features_match_label_double_sum():
    rng = np.random.default_rng(23)
    base = make_context()
    probe_traj = straight_trajectory(base, n=11)
    extras = []
    for i, j in enumerate((3, 5, 7)):
        shape, center = box_under_waypoint(base, probe_traj, j, gap=0.04 + 0.03 * i, half=0.08)
        extras.append((f"obj{i}", shape, center, (rng.random(6) < 0.5).astype(float)))
    held_labels = (rng.random(6) < 0.5).astype(float)
    held_labels[2] = 1.0  # keep at least one property set
    ctx = make_context(extra_objects=extras, labels=held_labels)
    traj = wiggle_trajectory(ctx, n=13, seed=7)
    edges = ft.interaction_edges(ctx, traj, ARM)
    assert len(edges) >= 3
    phi = ft.object_interaction_features(ctx, traj, ARM)
    weights = rng.normal(size=phi.shape)
    env = ctx.environment_objects()
    m = 6
    total = 0.0
    for j, k, vec, below in edges:
        phi_oo = np.array([vec[0], vec[1], vec[2], 1.0 if below else 0.0])
        for p in range(m):
            for q in range(m):
                block = weights[4 * (p * m + q) : 4 * (p * m + q) + 4]
                total += env[k].labels[p] * ctx.manipulated.labels[q] * float(block @ phi_oo)
    assert float(weights @ phi) == pytest.approx(total, rel=1e-9, abs=1e-9)


def test_object_feature_layout_offsets():
    """One-hot labels land the edge vector exactly at offset 4*(p*M + q)."""
    base = make_context(labels=np.eye(6)[3])  # held object: hot (q = 3)
    traj = straight_trajectory(base, n=11)
    shape, center = box_under_waypoint(base, traj, 5, gap=0.05)
    ctx = make_context(labels=np.eye(6)[3], extra_objects=[("boxed", shape, center, np.eye(6)[1])])
    traj = straight_trajectory(ctx, n=11)
    phi = ft.object_interaction_features(ctx, traj, ARM)
    block = slice(4 * (1 * 6 + 3), 4 * (1 * 6 + 3) + 4)
    outside = np.concatenate([phi[: block.start], phi[block.stop :]])
    np.testing.assert_array_equal(outside, 0.0)
    assert phi[block][3] >= 1.0  # at least the j=5 below edge


# ---------------------------------------------------------------------------
# environment block


def covering_table(ctx, n=12, upto=None, margin=0.1):
    """Table placement that contains the object's path (or its first part)."""
    traj = straight_trajectory(ctx, n=n)
    xy = np.array([p.position[:2] for p in kin.object_poses(ARM, traj, ctx)])
    if upto is not None:
        xy = xy[:upto]
    lo, hi = xy.min(axis=0), xy.max(axis=0)
    return dict(
        table_center_xy=tuple(0.5 * (lo + hi)),
        table_half_extents=tuple(0.5 * (hi - lo) + margin),
    )


def test_vertical_clearance_over_a_level_table():
    """A yaw-only sweep keeps the object at constant height over the table."""
    ctx = make_context(table_clearance=0.02, **covering_table(make_context()))
    traj = straight_trajectory(ctx, n=12)
    env = ft.object_environment_features(ctx, traj, ARM)
    # per-third minima of the vertical signal all equal the build clearance
    assert env[0] == pytest.approx(0.02, abs=1e-9)
    assert env[4] == pytest.approx(0.02, abs=1e-9)
    assert env[8] == pytest.approx(0.02, abs=1e-9)
    # whole-run vertical mean matches too, and the goal is reached at the end
    assert env[12] == pytest.approx(0.02, abs=1e-9)
    assert env[11] == pytest.approx(0.0, abs=1e-9)  # goal distance, last third
    # a constant vertical signal is spectrally silent
    np.testing.assert_allclose(env[14:20], 0.0, atol=1e-9)


def test_table_distance_tracks_vertical_gap_inside_footprint():
    ctx = make_context(table_clearance=0.05, **covering_table(make_context()))
    traj = straight_trajectory(ctx, n=12)
    env = ft.object_environment_features(ctx, traj, ARM)
    assert env[2] == pytest.approx(0.05, abs=1e-9)
    assert env[6] == pytest.approx(0.05, abs=1e-9)
    assert env[10] == pytest.approx(0.05, abs=1e-9)


def test_environment_features_are_translation_invariant():
    ctx = make_context(obstacle=True, human=True)
    traj = straight_trajectory(ctx, n=12)
    shift = np.array([0.7, -0.4, 0.0])

    arm2 = kin.ArmModel(shoulder=ARM.shoulder + shift)
    objects = [
        w.ObjectInstance(o.id, o.shape, w.Pose(o.pose.position + shift, o.pose.rotation), o.labels)
        for o in ctx.objects
    ]
    surfaces = [
        w.Surface(s.id, s.kind, s.center + shift, s.half_extents) for s in ctx.surfaces
    ]
    humans = [w.HumanRegion(h.id, h.center + shift, h.radius) for h in ctx.human_regions]
    moved = w.Context(
        id=ctx.id,
        properties=ctx.properties,
        objects=objects,
        surfaces=surfaces,
        human_regions=humans,
        manipulated_id=ctx.manipulated_id,
        start_config=ctx.start_config,
        goal_config=ctx.goal_config,
        goal_pose=w.Pose(ctx.goal_pose.position + shift, ctx.goal_pose.rotation),
        grasp_transform=ctx.grasp_transform,
    )
    traj2 = kin.Trajectory(context_id=moved.id, waypoints=traj.waypoints, id=traj.id)
    a = ft.features(ctx, traj, ARM)
    b = ft.features(moved, traj2, arm2)
    np.testing.assert_allclose(b.object_interactions, a.object_interactions, atol=1e-9)
    np.testing.assert_allclose(b.environment, a.environment, atol=1e-9)


def test_final_waypoint_matches_goal_orientation():
    ctx = make_context()
    traj = wiggle_trajectory(ctx, n=12, seed=9)
    last = kin.object_poses(ARM, traj, ctx)[-1]
    axis = last.rotation[:, 2]
    goal_axis = ctx.goal_pose.rotation[:, 2]
    assert float(axis @ goal_axis) == pytest.approx(1.0, abs=1e-12)


def test_edge_graze_has_more_high_band_energy():
    """Dropping off the table edge mid-path spikes the vertical spectrum."""
    base = make_context()
    smooth = make_context(ctx_id="ctx-smooth", **covering_table(base))
    # cover only the first stretch of the sweep so the object sails past the edge
    graze = make_context(ctx_id="ctx-graze", **covering_table(base, upto=5, margin=0.05))
    t_smooth = straight_trajectory(smooth, n=12)
    t_graze = straight_trajectory(graze, n=12)
    high_idx = [15, 17, 19]
    env_smooth = ft.object_environment_features(smooth, t_smooth, ARM)
    env_graze = ft.object_environment_features(graze, t_graze, ARM)
    assert env_graze[high_idx].sum() > 10 * env_smooth[high_idx].sum()
    assert env_graze[high_idx].sum() > 1e-4


# ---------------------------------------------------------------------------
# robot block


def _split_thirds(n):
    base, rem = divmod(n, 3)
    sizes = [base + 1] * rem + [base] * (3 - rem)
    out, start = [], 0
    for s in sizes:
        out.append(list(range(start, start + s)))
        start += s
    return out


def _unwrap_list(vals):
    out = [vals[0]]
    for v in vals[1:]:
        d = v - out[-1]
        while d > math.pi:
            d -= 2 * math.pi
        while d < -math.pi:
            d += 2 * math.pi
        out.append(out[-1] + d)
    return out


def oracle_robot_features(traj, arm):
    pts = [kin.fk(arm, q, validate=False)[0] for q in traj.waypoints]

    def cyl(p):
        d = p - arm.shoulder
        r = math.hypot(d[0], d[1])
        theta = math.atan2(d[1], d[0]) if r >= 1e-12 else 0.0
        return r, theta, d[2]

    elbow = [cyl(p[1]) for p in pts]
    wrist = [cyl(p[2]) for p in pts]
    hand = [cyl(p[3]) for p in pts]
    feats = []
    for idx in _split_thirds(len(pts)):
        et = _unwrap_list([elbow[i][1] for i in idx])
        wt = _unwrap_list([wrist[i][1] for i in idx])
        shift = round((wt[0] - et[0]) / (2 * math.pi))
        wt = [v - 2 * math.pi * shift for v in wt]
        rs = [elbow[i][0] for i in idx] + [wrist[i][0] for i in idx]
        ts = et + wt
        zs = [elbow[i][2] for i in idx] + [wrist[i][2] for i in idx]
        xr = [hand[i][0] for i in idx]
        xt = _unwrap_list([hand[i][1] for i in idx])
        xz = [hand[i][2] for i in idx]
        feats.extend(
            [
                max(rs),
                min(rs),
                max(ts),
                min(ts),
                max(zs),
                min(zs),
                [elbow[i][0] for i in idx][xr.index(max(xr))],
                et[xt.index(max(xt))],
                [elbow[i][2] for i in idx][xz.index(max(xz))],
            ]
        )
    return np.array(feats)


def seam_trajectory(ctx_id="ctx-test", n=9):
    """Wrist yaw sweep that walks the end effector across the +-pi azimuth seam."""
    wps = np.zeros((n, 6))
    wps[:, 0] = 3.05
    wps[:, 1] = np.linspace(0.3, 0.5, n)
    wps[:, 2] = 0.55
    wps[:, 5] = np.linspace(0.0, 1.2, n)
    return kin.Trajectory(context_id=ctx_id, waypoints=wps, id="t-seam")


def test_robot_features_match_hand_loop():
    ctx = make_context()
    cases = [
        straight_trajectory(ctx, n=12),
        wiggle_trajectory(ctx, n=14, seed=3),
        wiggle_trajectory(ctx, n=11, seed=41),
        seam_trajectory(),
    ]
    for traj in cases:
        got = ft.robot_motion_features(traj, ARM)
        want = oracle_robot_features(traj, ARM)
        np.testing.assert_allclose(got, want, atol=1e-9)


def test_seam_crossing_keeps_azimuth_span_contiguous():
    traj = seam_trajectory()
    feats = ft.robot_motion_features(traj, ARM)
    for third in range(3):
        span = feats[9 * third + 2] - feats[9 * third + 3]
        assert 0.0 <= span < 1.0  # raw atan2 would report nearly 2*pi
