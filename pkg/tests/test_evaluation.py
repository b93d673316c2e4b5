"""Metric definitions checked against brute-force re-implementations."""

import csv
import math

import numpy as np
import pytest

from csg.data import FOLD_NAMES, SpeedScaler, straight_track
from csg.evaluation import (
    DEFAULT_COLLISION_THRESHOLD,
    DEFAULT_FOLD_CONDITIONS,
    ade,
    best_of_k,
    collision_rate,
    extrapolation_report,
    fde,
    format_table,
    speed_compliance,
    write_rows_csv,
)
from csg.model import Batch, generator_forward, init_generator
from model_helpers import grid_offset, grid_walk, scene_from_positions, tiny_config, zero_params


def euclid(p, q):
    dx = p[0] - q[0]
    dy = p[1] - q[1]
    return math.sqrt(dx * dx + dy * dy)


def ade_oracle(truth, pred):
    total = 0.0
    for t, p in zip(truth, pred):
        total += euclid(t, p)
    return total / len(truth)


def collision_oracle(scenes, threshold):
    """Independent pair enumeration, same accumulation order as the metric."""
    per_scene = []
    for pos in scenes:
        frame_fractions = []
        for frame in pos:
            a = len(frame)
            pairs = a * (a - 1) // 2
            if pairs == 0:
                frame_fractions.append(0.0)
                continue
            hits = 0
            for i in range(a):
                for j in range(i + 1, a):
                    if euclid(frame[i], frame[j]) < threshold:
                        hits += 1
            frame_fractions.append(hits / pairs)
        per_scene.append(sum(frame_fractions) / len(frame_fractions))
    return 100.0 * sum(per_scene) / len(per_scene)


def rotate(points, angle):
    c, s = math.cos(angle), math.sin(angle)
    rot = np.array([[c, -s], [s, c]])
    return np.asarray(points, dtype=np.float64) @ rot.T


# ---------------------------------------------------------------- ade / fde


def test_ade_hand_case():
    truth = np.array([(0.0, 0.0), (1.0, 0.0)])
    pred = np.array([(0.0, 1.0), (1.0, 1.0)])
    assert ade(truth, pred) == 1.0


def test_ade_identity_is_zero():
    path = grid_walk(np.random.default_rng(0), 5, 1)[:, 0]
    assert ade(path, path.copy()) == 0.0


def test_single_step_ade_equals_fde():
    truth = np.array([(2.0, -1.0)])
    pred = np.array([(5.0, 3.0)])
    assert ade(truth, pred) == fde(truth, pred) == 5.0


def test_fde_pythagorean_case():
    truth = np.array([(9.0, 9.0), (0.0, 0.0)])
    pred = np.array([(1.0, 2.0), (3.0, 4.0)])
    assert fde(truth, pred) == 5.0


def test_fde_identical_finals():
    truth = np.array([(1.0, 1.0), (2.0, 2.0)])
    pred = np.array([(0.0, 5.0), (2.0, 2.0)])
    assert fde(truth, pred) == 0.0


def test_fde_ignores_non_final_steps():
    rng = np.random.default_rng(1)
    truth = rng.normal(size=(6, 2))
    pred = rng.normal(size=(6, 2))
    scrambled = pred.copy()
    scrambled[:-1] = rng.normal(size=(5, 2))
    assert fde(truth, pred) == fde(truth, scrambled)


def test_ade_fde_match_brute_force_exactly():
    rng = np.random.default_rng(2)
    for _ in range(200):
        steps = int(rng.integers(1, 9))
        truth = rng.normal(size=(steps, 2))
        pred = rng.normal(size=(steps, 2))
        assert ade(truth, pred) == ade_oracle(truth, pred)
        assert fde(truth, pred) == euclid(truth[-1], pred[-1])


def test_ade_fde_translation_invariant():
    rng = np.random.default_rng(3)
    truth = grid_walk(rng, 6, 1)[:, 0]
    pred = grid_walk(rng, 6, 1)[:, 0]
    shift = grid_offset(rng)
    assert ade(truth + shift, pred + shift) == ade(truth, pred)
    assert fde(truth + shift, pred + shift) == fde(truth, pred)


def test_ade_fde_rotation_invariant():
    rng = np.random.default_rng(4)
    truth = rng.normal(size=(7, 2))
    pred = rng.normal(size=(7, 2))
    for angle in (0.3, 1.1, 2.9):
        assert math.isclose(ade(rotate(truth, angle), rotate(pred, angle)), ade(truth, pred), abs_tol=1e-9)
        assert math.isclose(fde(rotate(truth, angle), rotate(pred, angle)), fde(truth, pred), abs_tol=1e-9)


def test_ade_fde_reject_bad_shapes():
    good = np.zeros((3, 2))
    with pytest.raises(ValueError, match="matching"):
        ade(good, np.zeros((4, 2)))
    with pytest.raises(ValueError, match="matching"):
        ade(np.zeros((0, 2)), np.zeros((0, 2)))
    with pytest.raises(ValueError, match="matching"):
        fde(np.zeros((3, 3)), np.zeros((3, 3)))
    with pytest.raises(ValueError, match="matching"):
        fde(np.zeros((0, 2)), np.zeros((0, 2)))


# ---------------------------------------------------------------- collisions


def two_agent_frames(distance, frames=4):
    pos = np.zeros((frames, 2, 2))
    pos[:, 1, 0] = distance
    return pos


def test_collision_constant_near_pair_is_100():
    assert collision_rate([two_agent_frames(0.05)]) == 100.0


def test_collision_far_pairs_is_zero():
    assert collision_rate([two_agent_frames(0.10)]) == 0.0
    assert collision_rate([two_agent_frames(3.0)]) == 0.0


def test_collision_three_agents_half_frames():
    # one colliding pair out of three in the first of two frames
    pos = np.zeros((2, 3, 2))
    pos[:, 1, 0] = 1.0
    pos[:, 2, 1] = 1.0
    pos[0, 1, 0] = 0.05
    expected = 100.0 * (((1 / 3) + (0 / 3)) / 2)
    result = collision_rate([pos])
    assert result == expected
    assert round(result, 2) == 16.67


def test_collision_threshold_boundary():
    assert collision_rate([two_agent_frames(0.099)]) == 100.0
    assert collision_rate([two_agent_frames(0.101)]) == 0.0


def test_collision_threshold_parameter():
    scene = two_agent_frames(0.15)
    assert collision_rate([scene]) == 0.0
    assert collision_rate([scene], threshold=0.2) == 100.0
    assert collision_rate([scene], threshold=0.05) == 0.0


def test_collision_single_agent_is_zero():
    assert collision_rate([np.zeros((4, 1, 2))]) == 0.0


def test_collision_matches_brute_force_exactly():
    rng = np.random.default_rng(5)
    scenes = []
    for _ in range(200):
        frames = int(rng.integers(1, 6))
        agents = int(rng.integers(1, 5))
        scale = float(rng.choice([0.05, 0.2, 1.0]))
        scenes.append(rng.normal(0.0, scale, size=(frames, agents, 2)))
    assert collision_rate(scenes) == collision_oracle(scenes, DEFAULT_COLLISION_THRESHOLD)
    # single-scene calls agree too
    for pos in scenes[:20]:
        assert collision_rate([pos]) == collision_oracle([pos], DEFAULT_COLLISION_THRESHOLD)


def test_collision_translation_invariant():
    rng = np.random.default_rng(6)
    scenes = [grid_walk(rng, 5, 3, step_range=64) for _ in range(10)]
    shift = grid_offset(rng)
    assert collision_rate([p + shift for p in scenes]) == collision_rate(scenes)


def test_collision_rotation_invariant():
    rng = np.random.default_rng(7)
    scenes = [rng.normal(0.0, 0.2, size=(4, 3, 2)) for _ in range(10)]
    rotated = [rotate(p.reshape(-1, 2), 0.7).reshape(p.shape) for p in scenes]
    assert math.isclose(collision_rate(rotated), collision_rate(scenes), abs_tol=1e-9)


def test_collision_input_validation():
    with pytest.raises(ValueError, match="at least one scene"):
        collision_rate([])
    with pytest.raises(ValueError, match="frames, agents, 2"):
        collision_rate([np.zeros((4, 2))])
    with pytest.raises(ValueError, match="frames, agents, 2"):
        collision_rate([np.zeros((0, 3, 2))])


def test_default_threshold_and_fold_conditions():
    assert DEFAULT_COLLISION_THRESHOLD == 0.10
    assert DEFAULT_FOLD_CONDITIONS == {"slow": 0.165, "medium": 0.495, "fast": 0.83}


# ---------------------------------------------------------------- compliance


def test_compliance_zero_at_exact_match():
    # dyadic conditions so the length->scale->compare chain stays exact
    conds = np.array([[0.25, 0.5, 0.75], [0.125, 0.5, 1.0]])
    disp = np.zeros((3, 2, 2))
    for r in range(2):
        for t in range(3):
            disp[t, r, 0] = 2.0 * conds[r, t]
    assert speed_compliance(disp, conds, SpeedScaler(0.0, 2.0)) == 0.0


def test_compliance_hand_oracle():
    rng = np.random.default_rng(8)
    disp = rng.normal(0.0, 0.8, size=(4, 3, 2))
    conds = rng.uniform(0.0, 1.0, size=(3, 4))
    scaler = SpeedScaler(0.3, 1.7)
    vals = []
    for t in range(4):
        for r in range(3):
            length = euclid(disp[t, r], (0.0, 0.0))
            scaled = min(max((length - 0.3) / 1.4, 0.0), 1.0)
            vals.append(abs(scaled - conds[r, t]))
    assert math.isclose(
        speed_compliance(disp, conds, scaler), sum(vals) / len(vals), rel_tol=1e-12
    )


def test_compliance_clamps_out_of_range_lengths():
    disp = np.zeros((1, 1, 2))
    disp[0, 0, 0] = 5.0  # far beyond the fitted range
    conds = np.ones((1, 1))
    assert speed_compliance(disp, conds, SpeedScaler(0.0, 1.0)) == 0.0


def test_compliance_frozen_decoder_closed_form():
    cfg = tiny_config()
    gen = init_generator(cfg, np.random.default_rng(9))
    zero_params(gen.dec_out.named("dec_out"))
    scaler = SpeedScaler(-1.0, 3.0)
    pos = grid_walk(np.random.default_rng(10), cfg.obs_len + cfg.pred_len, 2)
    scene = scene_from_positions(pos, cfg.obs_len, cfg.pred_len)
    batch = Batch.from_scenes([scene], scaler)
    rollout = generator_forward(gen, batch, "simulate", np.random.default_rng(11), conditions=0.5)
    np.testing.assert_array_equal(rollout.displacements(), 0.0)
    conds = np.full((batch.n_agents, cfg.pred_len), 0.5)
    scaled_zero = float(scaler.apply(np.zeros(1))[0])
    assert scaled_zero == 0.25
    assert speed_compliance(rollout.displacements(), conds, scaler) == 0.5 - scaled_zero


def test_compliance_translation_invariant():
    cfg = tiny_config()
    gen = init_generator(cfg, np.random.default_rng(12))
    scaler = SpeedScaler(0.0, 2.0)
    rng = np.random.default_rng(13)
    pos = grid_walk(rng, cfg.obs_len + cfg.pred_len, 3)
    shift = grid_offset(rng)
    conds = np.full((3, cfg.pred_len), 0.75)
    results = []
    for offset in (0.0, shift):
        scene = scene_from_positions(pos + offset, cfg.obs_len, cfg.pred_len)
        batch = Batch.from_scenes([scene], scaler)
        rollout = generator_forward(
            gen, batch, "simulate", np.random.default_rng(14), conditions=0.75
        )
        results.append(speed_compliance(rollout.displacements(), conds, scaler))
    assert results[0] == results[1]


def test_compliance_shape_validation():
    with pytest.raises(ValueError, match="pred, R, 2"):
        speed_compliance(np.zeros((3, 2)), np.zeros((2, 3)), SpeedScaler(0.0, 1.0))
    with pytest.raises(ValueError, match="conditions must be"):
        speed_compliance(np.zeros((3, 2, 2)), np.zeros((3, 2)), SpeedScaler(0.0, 1.0))


# ---------------------------------------------------------------- best of K


def eval_single_rollout(gen, scene, scaler, seed):
    cfg = gen.config
    batch = Batch.from_scenes([scene], scaler, cfg.label_vocabulary, cfg.dtype)
    rollout = generator_forward(gen, batch, "predict", np.random.default_rng(seed))
    pred = rollout.positions(batch)
    truth = batch.future_positions()
    scene_ade = 0.0
    scene_fde = 0.0
    for a in range(batch.n_agents):
        scene_ade += ade(truth[:, a], pred[:, a])
        scene_fde += fde(truth[:, a], pred[:, a])
    return scene_ade / batch.n_agents, scene_fde / batch.n_agents, pred


@pytest.fixture(scope="module")
def bok_setup():
    cfg = tiny_config()
    gen = init_generator(cfg, np.random.default_rng(15))
    scene = scene_from_positions(
        grid_walk(np.random.default_rng(16), cfg.obs_len + cfg.pred_len, 3),
        cfg.obs_len,
        cfg.pred_len,
    )
    return gen, scene, SpeedScaler(0.0, 2.0)


def test_best_of_one_equals_single_rollout(bok_setup):
    gen, scene, scaler = bok_setup
    bok = best_of_k(gen, scene, scaler, 1, np.random.default_rng(123))
    want_ade, want_fde, want_pred = eval_single_rollout(gen, scene, scaler, 123)
    assert bok.ade == want_ade
    assert bok.fde == want_fde
    np.testing.assert_array_equal(bok.positions, want_pred)
    assert bok.sample_index == 0
    assert bok.k == 1
    assert bok.ades == [want_ade]


def test_best_of_k_non_increasing_over_nested_seeds(bok_setup):
    gen, scene, scaler = bok_setup
    results = [best_of_k(gen, scene, scaler, k, np.random.default_rng(99)) for k in (1, 3, 6)]
    assert results[0].ade >= results[1].ade >= results[2].ade
    # sequential draws: a larger K extends the smaller K's sample list
    assert results[2].ades[:3] == results[1].ades
    assert results[1].ades[:1] == results[0].ades


def test_best_of_k_internal_consistency(bok_setup):
    gen, scene, scaler = bok_setup
    bok = best_of_k(gen, scene, scaler, 6, np.random.default_rng(17))
    assert len(bok.ades) == 6
    assert bok.ade == min(bok.ades)
    assert bok.ades[bok.sample_index] == bok.ade
    assert len(set(bok.ades)) > 1  # the noise draws actually differ
    # the reported FDE belongs to the returned sample
    batch = Batch.from_scenes([scene], scaler)
    truth = batch.future_positions()
    want_fde = 0.0
    for a in range(batch.n_agents):
        want_fde += fde(truth[:, a], bok.positions[:, a])
    assert bok.fde == want_fde / batch.n_agents


def test_best_of_k_reproducible_bit_exact(bok_setup):
    gen, scene, scaler = bok_setup
    a = best_of_k(gen, scene, scaler, 4, np.random.default_rng(7))
    b = best_of_k(gen, scene, scaler, 4, np.random.default_rng(7))
    assert a.ade == b.ade and a.fde == b.fde
    assert a.sample_index == b.sample_index
    assert a.ades == b.ades
    np.testing.assert_array_equal(a.positions, b.positions)


def test_best_of_k_rejects_k_below_one(bok_setup):
    gen, scene, scaler = bok_setup
    with pytest.raises(ValueError, match="at least 1"):
        best_of_k(gen, scene, scaler, 0, np.random.default_rng(0))


# ---------------------------------------------------------------- fold report


def regime_scene(speed, y_gap, obs=3, pred=3):
    length = obs + pred
    a = straight_track((0.0, 0.0), 0.0, speed, length)
    b = straight_track((0.0, y_gap), 0.0, speed, length)
    return scene_from_positions(np.stack([a, b], axis=1), obs, pred)


@pytest.fixture(scope="module")
def report_setup():
    cfg = tiny_config()
    gen = init_generator(cfg, np.random.default_rng(18))
    # slow agents run 0.05m apart (always colliding), the rest far apart
    scenes = (
        [regime_scene(0.2, 0.05), regime_scene(0.25, 0.05)]
        + [regime_scene(0.5, 5.0), regime_scene(0.55, 5.0), regime_scene(0.45, 5.0)]
        + [regime_scene(0.9, 5.0), regime_scene(0.8, 5.0)]
    )
    return gen, scenes, SpeedScaler(0.0, 1.0)


def test_report_row_structure(report_setup):
    gen, scenes, scaler = report_setup
    rows = extrapolation_report(gen, scenes, scaler, "fast", np.random.default_rng(19))
    assert [r.fold for r in rows] == list(FOLD_NAMES)
    assert [r.held_out for r in rows] == [False, False, True]
    assert [r.n_scenes for r in rows] == [2, 3, 2]
    assert all(r.condition == DEFAULT_FOLD_CONDITIONS["fast"] for r in rows)
    for r in rows:
        assert r.compliance is not None and r.compliance >= 0.0
        assert r.collision_pct is not None and 0.0 <= r.collision_pct <= 100.0
        assert r.ground_truth_collision_pct is not None


def test_report_ground_truth_collisions_match_raw_scenes(report_setup):
    gen, scenes, scaler = report_setup
    rows = extrapolation_report(gen, scenes, scaler, "medium", np.random.default_rng(20))
    futures = [Batch.from_scenes([s], scaler).future_positions() for s in scenes]
    groups = {"slow": futures[:2], "medium": futures[2:5], "fast": futures[5:]}
    for row in rows:
        assert row.ground_truth_collision_pct == collision_rate(groups[row.fold])
    assert rows[0].ground_truth_collision_pct == 100.0
    assert rows[1].ground_truth_collision_pct == 0.0
    assert rows[2].ground_truth_collision_pct == 0.0


def test_report_empty_fold_yields_blank_row(report_setup):
    gen, scenes, scaler = report_setup
    no_medium = scenes[:2] + scenes[5:]
    rows = extrapolation_report(gen, no_medium, scaler, "slow", np.random.default_rng(21))
    medium = rows[1]
    assert medium.fold == "medium"
    assert medium.n_scenes == 0
    assert medium.compliance is None
    assert medium.collision_pct is None
    assert medium.ground_truth_collision_pct is None
    assert medium.condition == DEFAULT_FOLD_CONDITIONS["slow"]


def test_report_condition_override(report_setup):
    gen, scenes, scaler = report_setup
    rows = extrapolation_report(
        gen, scenes, scaler, "fast", np.random.default_rng(22), fold_conditions={"fast": 0.9}
    )
    assert all(r.condition == 0.9 for r in rows)


def test_report_deterministic_under_seed(report_setup):
    gen, scenes, scaler = report_setup
    a = extrapolation_report(gen, scenes, scaler, "slow", np.random.default_rng(23))
    b = extrapolation_report(gen, scenes, scaler, "slow", np.random.default_rng(23))
    assert [r.to_dict() for r in a] == [r.to_dict() for r in b]


def test_report_frozen_decoder_compliance_closed_form(report_setup):
    _, scenes, scaler = report_setup
    cfg = tiny_config()
    gen = init_generator(cfg, np.random.default_rng(24))
    zero_params(gen.dec_out.named("dec_out"))
    rows = extrapolation_report(
        gen,
        scenes,
        scaler,
        "medium",
        np.random.default_rng(25),
        fold_conditions={"medium": 0.5},
    )
    for row in rows:
        # zero steps scale to 0, so the deviation is the condition itself;
        # agents frozen at their last observed spots keep their ground gap
        assert row.compliance == 0.5
        expected_pct = 100.0 if row.fold == "slow" else 0.0
        assert row.collision_pct == expected_pct


def test_report_input_validation(report_setup):
    gen, scenes, scaler = report_setup
    with pytest.raises(ValueError, match="held_out must be one of"):
        extrapolation_report(gen, scenes, scaler, "walking", np.random.default_rng(0))
    with pytest.raises(ValueError, match="at least one scene"):
        extrapolation_report(gen, [], scaler, "slow", np.random.default_rng(0))


# ---------------------------------------------------------------- rendering


def test_format_table_layout():
    rows = [
        {"fold": "slow", "missing": None, "value": 1.5},
        {"fold": "medium", "missing": 2, "value": 0.25},
    ]
    lines = format_table(rows).splitlines()
    assert len(lines) == 4
    assert lines[0].split() == ["fold", "missing", "value"]
    assert set(lines[1]) <= {"-", " "}
    assert lines[2].split() == ["slow", "-", "1.5000"]
    assert lines[3].split() == ["medium", "2", "0.2500"]
    # columns line up
    assert lines[0].index("missing") == lines[2].index("-")
    assert lines[0].index("value") == lines[3].index("0.2500")


def test_format_table_empty():
    assert format_table([]) == "(empty)"


def test_write_rows_csv_roundtrip(tmp_path):
    rows = [
        {"fold": "slow", "compliance": 0.125, "collision_pct": None},
        {"fold": "fast", "compliance": 0.5, "collision_pct": 12.5},
    ]
    path = tmp_path / "report.csv"
    write_rows_csv(str(path), rows)
    with open(path, newline="") as fh:
        back = list(csv.DictReader(fh))
    assert [r["fold"] for r in back] == ["slow", "fast"]
    assert back[0]["compliance"] == "0.125"
    assert back[0]["collision_pct"] == ""  # None serializes empty
    assert float(back[1]["collision_pct"]) == 12.5


def test_write_rows_csv_rejects_empty(tmp_path):
    with pytest.raises(ValueError, match="empty report"):
        write_rows_csv(str(tmp_path / "x.csv"), [])
