import numpy as np
import pytest

from balancekit.env import GameEvent
from balancekit.games.jungle import (
    GAP_SEPARATION,
    GAP_WIDTH,
    JungleConfig,
    JungleEnv,
    JungleMetrics,
    MIN_LANDING_SPAN,
    PLATFORM_SPACING,
    PLAYER_WIDTH,
    SCREEN_WIDTH,
    VERSION_IDS,
    _standable_spans,
    compute_reward,
    reachable,
    scroll_speed,
    score,
    version_config,
)
from balancekit.rng import Rng

# -- version table and formulas ---------------------------------------------


def test_version_table():
    assert VERSION_IDS == (1, 2, 3)
    assert version_config(1) == JungleConfig(1, 1)
    assert version_config(2) == JungleConfig(2, 1)
    assert version_config(3) == JungleConfig(2, 2)
    with pytest.raises(ValueError):
        version_config(4)


def test_score_formula():
    assert score(JungleMetrics(max_points=240, max_correct_jumps=9)) == 1140
    assert score(JungleMetrics()) == 0
    assert score(JungleMetrics(max_points=0, max_correct_jumps=1)) == 100


def test_scroll_speed_hand_values():
    assert scroll_speed(1, 0.0) == pytest.approx(0.5)
    assert scroll_speed(1, 120.0) == pytest.approx(1.5)
    assert scroll_speed(2, 60.0) == pytest.approx(2.0)


def test_scroll_speed_monotone():
    xs = [scroll_speed(2, t / 10) for t in range(0, 1800)]
    assert all(a <= b for a, b in zip(xs, xs[1:]))


def test_reward_below_threshold_term():
    # 1 s elapsed, score still zero: 5 * 1 / 60 per tick
    assert compute_reward(0, [], 1.0) == pytest.approx(5.0 / 60.0)
    assert compute_reward(0, [], 2.0) == pytest.approx(10.0 / 60.0)
    assert compute_reward(3, [], 2.0) == 0.0


def test_reward_score_point_and_death():
    ev = [GameEvent("SCORE_POINT", 0)]
    assert compute_reward(5, ev, 2.0) == pytest.approx(1.0)
    dv = [GameEvent("DEATH", 0)]
    assert compute_reward(5, dv, 2.0) == 0.0
    assert compute_reward(5, dv, 2.0, death_penalty=-10.0) == pytest.approx(-10.0)


def test_reward_btr_weight():
    assert compute_reward(0, [], 6.0, btr_weight=-1.0) == pytest.approx(-0.5)


# -- reachability ------------------------------------------------------------


def test_reachable_solid_floor_below():
    assert reachable([], [(100.0, 180.0)])


def test_gap_directly_above_gap_is_unreachable():
    # support is lost exactly where the upper gap is passable
    assert not reachable([(30.0, 110.0)], [(30.0, 110.0)])
    # nearly aligned: landing span shrinks below the minimum
    assert not reachable([(30.0, 110.0)], [(35.0, 115.0)])


def test_offset_gap_is_reachable():
    assert reachable([(30.0, 110.0)], [(40.0, 120.0)])  # 10-unit offset
    assert reachable([(30.0, 110.0)], [(200.0, 280.0)])


@pytest.mark.parametrize("version", VERSION_IDS)
def test_generated_platforms_always_reachable(version):
    """Layout generator property: every consecutive pair stays climbable."""
    cfg = version_config(version)
    env = JungleEnv(version)
    checked = 0
    seed = 0
    while checked < 10_000:
        env.reset(seed)
        # force generation far above the start window
        env.state.y = 90 * PLATFORM_SPACING
        env._ensure_platforms()
        for i in sorted(env.platforms):
            p = env.platforms[i]
            assert 1 <= len(p.gaps) <= cfg.max_gaps
            for s, e in p.gaps:
                assert e - s == pytest.approx(GAP_WIDTH)
                assert 0.0 <= s and e <= SCREEN_WIDTH
                assert GAP_WIDTH > PLAYER_WIDTH
            for (s1, e1), (s2, e2) in zip(p.gaps, p.gaps[1:]):
                assert s2 >= e1 + GAP_SEPARATION
            below = env.platforms[i - 1].gaps if i - 1 in env.platforms else []
            assert reachable(below, p.gaps)
            checked += 1
        seed += 1


# -- scripted climbing (versions with a single gap per platform) -------------


def landing_spot(lower_gaps, upper_gap):
    """Standable x on the lower platform inside the upper gap's passable span."""
    half = PLAYER_WIDTH / 2
    lo_p, hi_p = upper_gap[0] + half, upper_gap[1] - half
    best = None
    for a, b in _standable_spans(lower_gaps):
        lo, hi = max(a, lo_p), min(b, hi_p)
        if hi - lo >= MIN_LANDING_SPAN and (best is None or hi - lo > best[1] - best[0]):
            best = (lo, hi)
    assert best is not None, "generator guaranteed a landing span"
    return (best[0] + best[1]) / 2


def walk_to(env, target_x, max_ticks=400):
    for _ in range(max_ticks):
        dx = target_x - env.state.x
        if abs(dx) <= 2.5:
            return
        env.step("RIGHT" if dx > 0 else "LEFT")
    raise AssertionError("walk did not converge")


def climb_one(env):
    """Jump through the overhead gap, drifting in flight so the landing hits
    solid footing on the next platform. Returns the event kinds seen."""
    st = env.state
    index = (st.standing_index or 0) + 1
    plat = env.platforms[index]
    below = env.platforms[index - 1].gaps if index > 1 else []
    gap = min(plat.gaps, key=lambda g: abs((g[0] + g[1]) / 2 - st.x))
    center = (gap[0] + gap[1]) / 2
    # aim the landing at solid ground adjacent to the gap, on the side where
    # the platform above this one is then takeoff-compatible when possible
    target = landing_spot(plat.gaps, env.platforms.get(index + 1).gaps[0]) if (
        index + 1 in env.platforms and len(plat.gaps) == 1
    ) else None
    if target is None or abs(target - center) > 70.0:
        # fall back to the nearer solid side of the gap
        target = gap[0] - 15.0 if gap[0] > 30.0 else gap[1] + 15.0
    walk_to(env, center)
    kinds = []
    r = env.step("JUMP")
    kinds.extend(e.kind for e in r.events)
    for _ in range(200):
        if env.state.on_ground:
            break
        above_line = env.state.y > plat.y + 0.5
        if above_line and abs(target - env.state.x) > 2.5:
            act = "RIGHT" if target > env.state.x else "LEFT"
        else:
            act = "NOOP"
        r = env.step(act)
        kinds.extend(e.kind for e in r.events)
    assert env.state.on_ground
    return kinds


def climbed_env(version, seed, platforms):
    env = JungleEnv(version)
    env.reset(seed)
    for _ in range(platforms):
        climb_one(env)
    return env


def test_correct_jump_emitted_on_higher_landing():
    env = JungleEnv(1)
    env.reset(2)
    kinds = climb_one(env)
    assert env.state.standing_index == 1
    assert kinds.count("CORRECT_JUMP") == 1
    assert env.metrics.correct_jumps == 1


def test_bonk_on_solid_underside_no_correct_jump():
    env = JungleEnv(1)
    env.reset(2)
    gap = env.platforms[1].gaps[0]
    solid_x = gap[1] + 120.0 if gap[1] + 140.0 < SCREEN_WIDTH else gap[0] - 120.0
    walk_to(env, solid_x)
    before = env.metrics.correct_jumps
    env.step("JUMP")
    peak = 0.0
    for _ in range(100):
        if env.state.on_ground:
            break
        peak = max(peak, env.state.y)
        env.step("NOOP")
    assert env.state.on_ground
    assert env.state.standing_index == 0
    assert peak < PLATFORM_SPACING  # stopped by the underside
    assert env.metrics.correct_jumps == before


def test_walking_off_into_gap_is_not_a_correct_jump():
    env = climbed_env(1, 2, 1)
    assert env.state.standing_index == 1
    gap = env.platforms[1].gaps[0]
    center = (gap[0] + gap[1]) / 2
    before = env.metrics.correct_jumps
    walk_to(env, center)  # walks into the opening and falls through
    for _ in range(100):
        if env.state.on_ground:
            break
        env.step("NOOP")
    assert env.state.standing_index == 0
    assert env.metrics.correct_jumps == before


def test_scroll_activates_after_second_platform():
    env = JungleEnv(1)
    env.reset(2)
    assert not env.state.scrolling_active
    climb_one(env)
    assert not env.state.scrolling_active  # platform 1 is below the threshold
    climb_one(env)
    assert env.state.standing_index == 2
    assert env.state.scrolling_active
    r = env.step("NOOP")
    assert any(e.kind == "SCORE_POINT" for e in r.events)


def test_no_score_points_before_activation():
    env = JungleEnv(1)
    env.reset(3)
    rng = Rng.for_purpose(3, "policy")
    for _ in range(400):
        acts = env.action_list()
        r = env.step(acts[rng.randrange(len(acts))])
        if env.state.scrolling_active:
            break
        assert all(e.kind != "SCORE_POINT" for e in r.events)
        assert env.metrics.points == 0


def test_scroll_speed_nondecreasing_within_life():
    env = climbed_env(2, 2, 2)
    speeds = []
    for _ in range(300):
        r = env.step("NOOP")
        speeds.append(env.state.scroll_speed)
        if r.done:
            break
    assert speeds == sorted(speeds)
    assert speeds[0] > 0.0


def test_death_when_carried_below_window():
    env = climbed_env(2, 2, 2)
    done = False
    for _ in range(3000):
        r = env.step("NOOP")  # stand still, let the scroll catch up
        if r.done:
            assert any(e.kind == "DEATH" for e in r.events)
            done = True
            break
    assert done
    assert env.state.y < env.state.scroll_offset


def test_points_accrue_per_surviving_tick():
    env = climbed_env(1, 2, 2)
    start_points = env.metrics.points
    survived = 0
    for _ in range(120):
        r = env.step("NOOP")
        if r.done:
            break
        survived += 1
    assert env.metrics.points - start_points == survived


def test_session_metrics_take_maxima_over_lives():
    env = JungleEnv(1)
    kinds = (
        ["SCORE_POINT"] * 3
        + ["CORRECT_JUMP"]
        + ["DEATH"]
        + ["SCORE_POINT"] * 2
        + ["CORRECT_JUMP"] * 4
        + ["DEATH"]
        + ["SCORE_POINT"] * 5
    )
    m = env.session_metrics(kinds)
    assert m["max_points"] == 5
    assert m["max_correct_jumps"] == 4
    assert env.session_score(m) == 5 + 400


def test_observation_gap_centered_reads_zero_offset():
    env = JungleEnv(1)
    env.reset(2)
    gap = env.platforms[1].gaps[0]
    center = (gap[0] + gap[1]) / 2
    walk_to(env, center)
    r = env.step("NOOP")
    obs = r.observation
    # entry 5: first overhead platform's relative height; entry 6: gap offset
    assert obs[5] == pytest.approx(
        (PLATFORM_SPACING - env.state.y) / (2 * PLATFORM_SPACING)
    )
    assert abs(obs[6]) <= 2.5 / SCREEN_WIDTH + 1e-9
    assert obs[7] == pytest.approx(GAP_WIDTH / SCREEN_WIDTH)


def test_max_episode_ticks_caps_episode():
    env = JungleEnv(1, max_episode_ticks=50)
    env.reset(4)
    for _ in range(50):
        r = env.step("NOOP")
    assert r.done
    assert all(e.kind != "DEATH" for e in r.events)
