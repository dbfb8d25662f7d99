"""Jungle Climb: an infinite vertical climber, headless.

Evenly spaced platforms with randomly placed gaps stack upward forever. The
player climbs by jumping through gaps. Once the second platform has been
passed, the visible window starts scrolling up, accelerating over time;
being carried below the bottom edge of the window kills the current life.
One survival point is scored for every tick while the scroll is active, and
each jump that lands on a strictly higher platform counts as a correct
jump. Session score is ``max_points + 100 * max_correct_jumps`` where the
maxima run over all lives in the session.

Coordinates: x in [0, 600] grows rightward, y grows upward, the ground is
solid at y = 0, and platform i sits at y = 120 * i.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..env import GameEnv, GameEvent, StepResult, TICKS_PER_SECOND
from ..rng import Rng

# Event kinds
SCORE_POINT = "SCORE_POINT"
CORRECT_JUMP = "CORRECT_JUMP"
DEATH = "DEATH"

ACTIONS = ("NOOP", "LEFT", "RIGHT", "JUMP")

# World geometry
SCREEN_WIDTH = 600.0
SCREEN_HEIGHT = 800.0
PLATFORM_SPACING = 120.0
GAP_WIDTH = 80.0
PLAYER_WIDTH = 40.0
PLAYER_SPEED = 5.0
JUMP_VELOCITY = 13.0
GRAVITY = 0.6  # apex ~141 units, comfortably one platform spacing
GAP_SEPARATION = 20.0  # minimum solid run between two gaps
MIN_LANDING_SPAN = 8.0  # narrowest takeoff spot generation may demand
SCROLL_ACTIVATION_INDEX = 2

# Observation: player pose and scroll state, then for each of the next two
# platforms above: relative height plus (offset, width) for up to two gaps
# sorted by proximity. Sized for the largest version so checkpoints
# transfer between versions.
MAX_GAP_SLOTS = 2
OBSERVATION_LENGTH = 5 + 2 * (1 + 2 * MAX_GAP_SLOTS)

REWARD_SCORE_POINT = 1.0
# Shaping applied each tick while the current life's score is still zero:
# weight * (5 * elapsed seconds), scaled by the tick duration.
BELOW_THRESHOLD_RATE = 5.0


@dataclass(frozen=True)
class JungleConfig:
    shift_speed: int
    max_gaps: int

    def __post_init__(self) -> None:
        if self.shift_speed < 1 or self.max_gaps < 1:
            raise ValueError(f"invalid config: {self}")


_VERSIONS: dict[int, JungleConfig] = {
    1: JungleConfig(shift_speed=1, max_gaps=1),
    2: JungleConfig(shift_speed=2, max_gaps=1),
    3: JungleConfig(shift_speed=2, max_gaps=2),
}


def version_config(version: int) -> JungleConfig:
    try:
        return _VERSIONS[version]
    except KeyError:
        raise ValueError(f"unknown jungle version {version!r}") from None


VERSION_IDS = tuple(sorted(_VERSIONS))


@dataclass
class Platform:
    y: float
    gaps: list[tuple[float, float]]  # disjoint (start, end) openings


@dataclass
class ClimberState:
    x: float = SCREEN_WIDTH / 2
    y: float = 0.0
    vy: float = 0.0
    on_ground: bool = True
    standing_index: int | None = 0  # 0 is the solid ground floor
    scroll_offset: float = 0.0
    scrolling_active: bool = False
    scroll_speed: float = 0.0  # units/tick, last applied
    life_tick: int = 0
    takeoff_y: float = 0.0
    takeoff_was_jump: bool = False


@dataclass
class JungleMetrics:
    points: int = 0
    max_points: int = 0
    correct_jumps: int = 0
    max_correct_jumps: int = 0

    def as_dict(self) -> dict:
        return {
            "points": self.points,
            "max_points": self.max_points,
            "correct_jumps": self.correct_jumps,
            "max_correct_jumps": self.max_correct_jumps,
        }


def score(metrics: JungleMetrics) -> int:
    """Session score: best life's survival points plus 100 per correct jump."""
    return metrics.max_points + 100 * metrics.max_correct_jumps


def scroll_speed(shift_speed: int, elapsed_s: float) -> float:
    """Upward window speed in units/tick; grows linearly within a life."""
    return shift_speed * (0.5 + elapsed_s / 120.0)


def compute_reward(
    prev_points: int,
    events: list[GameEvent],
    elapsed_s: float,
    btr_weight: float = 1.0,
    death_penalty: float = 0.0,
    correct_jump_bonus: float = 0.0,
) -> float:
    """Per-tick shaping: below-threshold term while the life score is zero,
    +1 per survival point, and optional death/correct-jump terms (default 0)."""
    reward = 0.0
    if prev_points == 0:
        reward += btr_weight * BELOW_THRESHOLD_RATE * elapsed_s / TICKS_PER_SECOND
    for ev in events:
        if ev.kind == SCORE_POINT:
            reward += REWARD_SCORE_POINT
        elif ev.kind == DEATH:
            reward += death_penalty
        elif ev.kind == CORRECT_JUMP:
            reward += correct_jump_bonus
    return reward


def _passable(x: float, gaps: list[tuple[float, float]]) -> bool:
    """True when the whole player body fits inside one gap at center x."""
    half = PLAYER_WIDTH / 2
    return any(s <= x - half and x + half <= e for s, e in gaps)


def _standable_spans(gaps: list[tuple[float, float]]) -> list[tuple[float, float]]:
    """Sub-intervals of [0, W] where the platform still supports the player."""
    half = PLAYER_WIDTH / 2
    spans = [(0.0, SCREEN_WIDTH)]
    for s, e in gaps:
        hole = (s + half, e - half)  # support is lost only fully inside a gap
        nxt = []
        for a, b in spans:
            lo, hi = max(a, hole[0]), min(b, hole[1])
            if lo >= hi:
                nxt.append((a, b))
            else:
                if a < lo:
                    nxt.append((a, lo))
                if hi < b:
                    nxt.append((hi, b))
        spans = nxt
    return spans


def reachable(lower_gaps: list[tuple[float, float]], upper_gaps: list[tuple[float, float]]) -> bool:
    """A platform is reachable when some x offers support below and passage
    through a gap above (vertical spacing is always within one jump)."""
    half = PLAYER_WIDTH / 2
    stands = _standable_spans(lower_gaps)
    for s, e in upper_gaps:
        lo, hi = s + half, e - half
        for a, b in stands:
            if min(b, hi) - max(a, lo) >= MIN_LANDING_SPAN:
                return True
    return False


class JungleEnv(GameEnv):
    """Headless jungle-climb environment. Episodes end on death (or at the
    optional training tick cap)."""

    game_id = "jungle"
    actions = ACTIONS
    observation_length = OBSERVATION_LENGTH

    def __init__(
        self,
        version: int,
        max_episode_ticks: int | None = None,
        btr_weight: float = 1.0,
        death_penalty: float = 0.0,
        correct_jump_bonus: float = 0.0,
        climb_weight: float = 0.0,
    ):
        super().__init__()
        self.version = version
        self.config = version_config(version)
        self.max_episode_ticks = max_episode_ticks
        self.btr_weight = btr_weight
        self.death_penalty = death_penalty
        self.correct_jump_bonus = correct_jump_bonus
        self.climb_weight = climb_weight
        self.state = ClimberState()
        self.metrics = JungleMetrics()
        self.platforms: dict[int, Platform] = {}
        self._layout_rng = Rng(0)
        self._just_landed = False

    # -- lifecycle ----------------------------------------------------------

    def _do_reset(self, seed: int) -> np.ndarray:
        self._layout_rng = Rng.for_purpose(seed, "layout")
        self.state = ClimberState()
        self.metrics = JungleMetrics()
        self.platforms = {}
        self._just_landed = False
        self._ensure_platforms()
        return observe(self.state, self.platforms)

    def _ensure_platforms(self) -> None:
        """Generate rows lazily up to view top plus margin; prune far below."""
        top_needed = max(
            self.state.scroll_offset + SCREEN_HEIGHT, self.state.y
        ) + 3 * PLATFORM_SPACING
        index = max(self.platforms) + 1 if self.platforms else 1
        while index * PLATFORM_SPACING <= top_needed:
            below = self.platforms.get(index - 1)
            lower_gaps = below.gaps if below is not None else []
            self.platforms[index] = Platform(
                y=index * PLATFORM_SPACING,
                gaps=self._generate_gaps(lower_gaps),
            )
            index += 1
        floor = self.state.scroll_offset - 2 * PLATFORM_SPACING
        for i in [i for i, p in self.platforms.items() if p.y < floor]:
            del self.platforms[i]

    def _generate_gaps(self, lower_gaps: list[tuple[float, float]]) -> list[tuple[float, float]]:
        """1..max_gaps disjoint gaps, resampled until the row stays reachable
        from the one below; falls back to a deterministic scan."""
        n_gaps = 1 + self._layout_rng.randrange(self.config.max_gaps)
        span = int(SCREEN_WIDTH - GAP_WIDTH)
        for _ in range(100):
            starts = sorted(
                float(self._layout_rng.randrange(span + 1)) for _ in range(n_gaps)
            )
            gaps = [(s, s + GAP_WIDTH) for s in starts]
            disjoint = all(
                gaps[i + 1][0] >= gaps[i][1] + GAP_SEPARATION
                for i in range(len(gaps) - 1)
            )
            if disjoint and reachable(lower_gaps, gaps):
                return gaps
        for s in range(0, span + 1, 8):  # deterministic fallback
            gaps = [(float(s), float(s) + GAP_WIDTH)]
            if reachable(lower_gaps, gaps):
                return gaps
        raise AssertionError("no reachable gap placement exists")

    # -- dynamics -----------------------------------------------------------

    def _do_step(self, action: str) -> StepResult:
        st = self.state
        st.life_tick += 1
        elapsed_s = st.life_tick / TICKS_PER_SECOND
        prev_points = self.metrics.points
        events: list[GameEvent] = []

        if action == "LEFT":
            st.x = max(PLAYER_WIDTH / 2, st.x - PLAYER_SPEED)
        elif action == "RIGHT":
            st.x = min(SCREEN_WIDTH - PLAYER_WIDTH / 2, st.x + PLAYER_SPEED)

        if st.on_ground and st.standing_index is not None and st.standing_index > 0:
            plat = self.platforms[st.standing_index]
            if _passable(st.x, plat.gaps):
                self._leave_ground(was_jump=False)

        if action == "JUMP" and st.on_ground:
            self._leave_ground(was_jump=True)
            st.vy = JUMP_VELOCITY

        if not st.on_ground:
            st.vy -= GRAVITY
            self._move_vertically(events)

        if (
            st.on_ground
            and st.standing_index is not None
            and st.standing_index >= SCROLL_ACTIVATION_INDEX
        ):
            st.scrolling_active = True
        if st.scrolling_active:
            st.scroll_speed = scroll_speed(self.config.shift_speed, elapsed_s)
            st.scroll_offset += st.scroll_speed

        self._ensure_platforms()

        done = False
        if st.y < st.scroll_offset:
            events.append(GameEvent(DEATH, self.tick))
            done = True
        elif st.scrolling_active:
            events.append(GameEvent(SCORE_POINT, self.tick))
            self.metrics.points += 1
            self.metrics.max_points = max(self.metrics.max_points, self.metrics.points)

        if (
            not done
            and self.max_episode_ticks is not None
            and self.tick + 1 >= self.max_episode_ticks
        ):
            done = True

        reward = compute_reward(
            prev_points,
            events,
            elapsed_s,
            self.btr_weight,
            self.death_penalty,
            self.correct_jump_bonus,
        )
        # optional landing shaping: platforms gained or lost since takeoff,
        # paid only on touchdown so airborne height cannot be farmed
        if self.climb_weight and st.on_ground and self._just_landed:
            gained = (st.y - st.takeoff_y) / PLATFORM_SPACING
            reward += self.climb_weight * gained
        self._just_landed = False
        cj = sum(1 for e in events if e.kind == CORRECT_JUMP)
        points = sum(1 for e in events if e.kind == SCORE_POINT)
        return StepResult(
            observation=observe(st, self.platforms),
            reward=reward,
            done=done,
            events=events,
            score_delta=points + 100 * cj,
        )

    def _leave_ground(self, was_jump: bool) -> None:
        st = self.state
        st.takeoff_y = st.y
        st.takeoff_was_jump = was_jump
        st.on_ground = False
        st.standing_index = None
        st.vy = 0.0

    def _move_vertically(self, events: list[GameEvent]) -> None:
        """Advance y by vy, handling one platform line crossing per tick
        (|vy| stays well under the 120-unit spacing)."""
        st = self.state
        new_y = st.y + st.vy
        if st.vy > 0:
            line = self._line_between(st.y, new_y, ascending=True)
            if line is not None and not _passable(st.x, self.platforms[line].gaps):
                st.y = line * PLATFORM_SPACING - 1e-6  # head bonk: stop under it
                st.vy = 0.0
                return
        elif st.vy < 0:
            line = self._line_between(new_y, st.y, ascending=False)
            if line is not None:
                solid = line == 0 or not _passable(st.x, self.platforms[line].gaps)
                if solid:
                    self._land(line, events)
                    return
        st.y = new_y

    def _line_between(self, lo: float, hi: float, ascending: bool) -> int | None:
        """Index of the platform line crossed in (lo, hi], if any."""
        first = int(np.floor(lo / PLATFORM_SPACING)) + 1
        last = int(np.floor(hi / PLATFORM_SPACING))
        if first > last:
            return None
        return first if ascending else last

    def _land(self, index: int, events: list[GameEvent]) -> None:
        st = self.state
        st.y = index * PLATFORM_SPACING
        st.vy = 0.0
        st.on_ground = True
        st.standing_index = index
        self._just_landed = True
        if st.takeoff_was_jump and st.y > st.takeoff_y:
            events.append(GameEvent(CORRECT_JUMP, self.tick))
            self.metrics.correct_jumps += 1
            self.metrics.max_correct_jumps = max(
                self.metrics.max_correct_jumps, self.metrics.correct_jumps
            )

    # -- session helpers -----------------------------------------------------

    def session_metrics(self, event_kinds) -> dict:
        lives: list[list[str]] = [[]]
        for kind in event_kinds:
            lives[-1].append(kind)
            if kind == DEATH:
                lives.append([])
        m = JungleMetrics()
        for life in lives:
            pts = sum(1 for k in life if k == SCORE_POINT)
            cj = sum(1 for k in life if k == CORRECT_JUMP)
            m.max_points = max(m.max_points, pts)
            m.max_correct_jumps = max(m.max_correct_jumps, cj)
        m.points = sum(1 for k in lives[-1] if k == SCORE_POINT)
        m.correct_jumps = sum(1 for k in lives[-1] if k == CORRECT_JUMP)
        return m.as_dict()

    def session_score(self, metrics: dict) -> int:
        return int(metrics["max_points"]) + 100 * int(metrics["max_correct_jumps"])

    def entities(self) -> list[dict]:
        st = self.state
        out = [
            {
                "id": 0,
                "kind": "player",
                "x": st.x - PLAYER_WIDTH / 2,
                "y": st.y - st.scroll_offset,
                "w": PLAYER_WIDTH,
                "h": 50.0,
                "facing": 1,
            }
        ]
        eid = 1
        view_lo = st.scroll_offset - 40.0
        view_hi = st.scroll_offset + SCREEN_HEIGHT + 40.0
        rows: list[tuple[float, list[tuple[float, float]]]] = []
        if view_lo <= 0.0 <= view_hi:
            rows.append((0.0, []))
        rows.extend(
            (p.y, p.gaps)
            for p in self.platforms.values()
            if view_lo <= p.y <= view_hi
        )
        for y, gaps in rows:
            edges = [0.0]
            for s, e in sorted(gaps):
                edges.extend((s, e))
            edges.append(SCREEN_WIDTH)
            for i in range(0, len(edges), 2):
                a, b = edges[i], edges[i + 1]
                if b - a > 1e-9:
                    out.append(
                        {
                            "id": eid,
                            "kind": "platform",
                            "x": a,
                            "y": y - st.scroll_offset,
                            "w": b - a,
                            "h": 14.0,
                            "facing": 1,
                        }
                    )
                    eid += 1
        return out


def observe(state: ClimberState, platforms: dict[int, Platform]) -> np.ndarray:
    """Encode state as a fixed 15-vector with every entry in [-1, 1].

    Layout: x, height above the window bottom, vertical velocity, on-ground
    flag, scroll speed fraction, then for each of the next two platforms
    above the player: relative height and two (gap offset, gap width) slots
    sorted by horizontal distance, zero-padded.
    """
    out = np.zeros(OBSERVATION_LENGTH, dtype=np.float64)
    out[0] = (state.x - SCREEN_WIDTH / 2) / (SCREEN_WIDTH / 2)
    out[1] = (state.y - state.scroll_offset) / (SCREEN_HEIGHT / 2) - 1.0
    out[2] = state.vy / JUMP_VELOCITY
    out[3] = 1.0 if state.on_ground else 0.0
    out[4] = state.scroll_speed / 4.0  # top speed ~4 units/tick by 180 s
    base_index = int(np.floor(state.y / PLATFORM_SPACING)) + 1
    for row in range(2):
        p = platforms.get(base_index + row)
        base = 5 + row * (1 + 2 * MAX_GAP_SLOTS)
        if p is None:
            continue
        out[base] = (p.y - state.y) / (2 * PLATFORM_SPACING)
        by_distance = sorted(
            p.gaps, key=lambda g: abs((g[0] + g[1]) / 2 - state.x)
        )
        for slot, (s, e) in enumerate(by_distance[:MAX_GAP_SLOTS]):
            off = base + 1 + 2 * slot
            out[off] = ((s + e) / 2 - state.x) / SCREEN_WIDTH
            out[off + 1] = (e - s) / SCREEN_WIDTH
    return np.clip(out, -1.0, 1.0)
