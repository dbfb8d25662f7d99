"""Batkill: a single-screen action game, headless.

The player stands in a 1-D arena while bats fly in from the screen edges.
Killing a bat scores +1, taking a hit scores -1 and removes the bat; bats
respawn faster as kills accumulate. Session score is
``bats_killed - hits_taken``.

Five versions tune bat count, bat speed, attack cooldown, and whether the
jump ability exists. World geometry (arena width, speeds, reach) is fixed
across versions and documented as constants below.

Coordinate/unit conventions: x grows rightward in [0, 800]; one tick is
1/60 s; facing is +1 (right) or -1 (left).
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from ..env import GameEnv, GameEvent, StepResult
from ..rng import Rng

# Event kinds
BAT_KILLED = "BAT_KILLED"
HIT_TAKEN = "HIT_TAKEN"

# Actions (NOOP lets a policy express "stand still")
ACTIONS = ("NOOP", "LEFT", "RIGHT", "ATTACK", "JUMP")

# World geometry (fixed across versions)
ARENA_WIDTH = 800.0
PLAYER_SPEED = 4.0
PLAYER_MARGIN = 15.0  # half the 30-unit hitbox, keeps the sprite on screen
HIT_DISTANCE = 30.0
ATTACK_REACH = 60.0
ATTACK_ACTIVE_TICKS = 6
JUMP_VELOCITY = 9.0
GRAVITY = 0.5  # 35 ticks of airtime, apex ~76 units
JUMP_CLEAR_HEIGHT = 30.0  # airborne above this, bats pass underneath
BAT_SPAWN_OFFSET = 30.0  # bats enter from just outside the visible edge
BAT_EXIT_MARGIN = 40.0

# Spawn schedule: delay (ticks) before a replacement bat appears, shrinking
# with cumulative kills down to a floor so the pace stays finite.
SPAWN_DELAY_BASE = 90
SPAWN_DELAY_PER_KILL = 6
SPAWN_DELAY_FLOOR = 12

# Episode boundary used for training; sessions run many episodes back to back.
EPISODE_TICKS = 600

# Observation layout is sized for the largest version (3 bats) so one
# network can play every version.
MAX_BAT_SLOTS = 3
OBSERVATION_LENGTH = 5 + 3 * MAX_BAT_SLOTS

# Reward constants
REWARD_BAT_KILLED = 5.0
REWARD_HIT_TAKEN = -5.0
REWARD_ATTACK = -0.1
REWARD_JUMP = -0.2
REWARD_MOVING_TOWARDS = 0.1
REWARD_FACING_NEAREST = 0.2


@dataclass(frozen=True)
class BatkillConfig:
    bats: int
    bat_speed: int
    attack_cooldown: int
    jump: bool

    def __post_init__(self) -> None:
        if self.bats < 1 or self.bat_speed < 1 or self.attack_cooldown < 0:
            raise ValueError(f"invalid config: {self}")


# Version table. Versions 2 and 3 differ in exactly one knob each: v2 adds
# a bat, v3 doubles bat speed, v4 slows the attack, v5 enables jumping.
_VERSIONS: dict[int, BatkillConfig] = {
    1: BatkillConfig(bats=2, bat_speed=3, attack_cooldown=10, jump=False),
    2: BatkillConfig(bats=3, bat_speed=3, attack_cooldown=10, jump=False),
    3: BatkillConfig(bats=3, bat_speed=6, attack_cooldown=10, jump=False),
    4: BatkillConfig(bats=3, bat_speed=6, attack_cooldown=15, jump=False),
    5: BatkillConfig(bats=3, bat_speed=6, attack_cooldown=15, jump=True),
}


def version_config(version: int) -> BatkillConfig:
    """Config for one of the five published versions."""
    try:
        return _VERSIONS[version]
    except KeyError:
        raise ValueError(f"unknown batkill version {version!r}") from None


VERSION_IDS = tuple(sorted(_VERSIONS))


@dataclass
class PlayerState:
    x: float = ARENA_WIDTH / 2
    facing: int = 1  # +1 right, -1 left
    height: float = 0.0
    vy: float = 0.0
    airborne: bool = False
    cooldown_remaining: int = 0
    attack_ticks_remaining: int = 0

    @property
    def attacking(self) -> bool:
        return self.attack_ticks_remaining > 0


@dataclass
class Bat:
    x: float
    direction: int  # +1 flying right, -1 flying left
    speed: int
    lane: int  # visual row only; no effect on dynamics
    alive: bool = True


@dataclass
class BatkillState:
    player: PlayerState
    bats: list[Bat] = field(default_factory=list)


@dataclass
class BatkillMetrics:
    bats_killed: int = 0
    hits_taken: int = 0

    def as_dict(self) -> dict:
        return {"bats_killed": self.bats_killed, "hits_taken": self.hits_taken}


def score(metrics: BatkillMetrics) -> int:
    """Session score: kills minus hits (negative means hit-dominated play)."""
    return metrics.bats_killed - metrics.hits_taken


def spawn_delay(kills: int) -> int:
    """Ticks until a replacement bat spawns, after `kills` cumulative kills."""
    return max(SPAWN_DELAY_FLOOR, SPAWN_DELAY_BASE - SPAWN_DELAY_PER_KILL * kills)


def nearest_bat(state: BatkillState) -> Bat | None:
    """Closest living bat to the player (ties break on list order)."""
    best = None
    best_dist = None
    for bat in state.bats:
        if not bat.alive:
            continue
        d = abs(bat.x - state.player.x)
        if best_dist is None or d < best_dist:
            best, best_dist = bat, d
    return best


def compute_reward(prev_state: BatkillState, action: str, events: list[GameEvent]) -> float:
    """Shaped per-tick reward.

    Event terms: +5 per kill, -5 per hit. Action costs: -0.1 attack,
    -0.2 jump. Shaping uses the nearest living bat of the pre-step state:
    +0.1 for moving toward it, +0.2 when facing it after the action is
    applied (a move action also turns the player, unless mid-swing).
    """
    reward = 0.0
    for ev in events:
        if ev.kind == BAT_KILLED:
            reward += REWARD_BAT_KILLED
        elif ev.kind == HIT_TAKEN:
            reward += REWARD_HIT_TAKEN
    if action == "ATTACK":
        reward += REWARD_ATTACK
    elif action == "JUMP":
        reward += REWARD_JUMP

    target = nearest_bat(prev_state)
    if target is not None:
        dx = target.x - prev_state.player.x
        if (action == "LEFT" and dx < 0) or (action == "RIGHT" and dx > 0):
            reward += REWARD_MOVING_TOWARDS
        # facing commits for the swing; swing state during the action phase
        # is the pre-step timer after its start-of-tick decrement
        locked = prev_state.player.attack_ticks_remaining > 1
        if locked:
            facing_after = prev_state.player.facing
        else:
            facing_after = {"LEFT": -1, "RIGHT": 1}.get(action, prev_state.player.facing)
        if dx == 0 or (dx > 0) == (facing_after > 0):
            reward += REWARD_FACING_NEAREST
    return reward


def observe(state: BatkillState, config: BatkillConfig) -> np.ndarray:
    """Encode state as a fixed 14-vector with every entry in [-1, 1].

    Layout: player x, facing, cooldown fraction, airborne flag, jump height,
    then 3 bat slots (nearest first): relative x, direction, alive flag.
    Dead/absent slots are zero.
    """
    p = state.player
    out = np.zeros(OBSERVATION_LENGTH, dtype=np.float64)
    out[0] = (p.x - ARENA_WIDTH / 2) / (ARENA_WIDTH / 2)
    out[1] = float(p.facing)
    out[2] = p.cooldown_remaining / max(1, config.attack_cooldown)
    out[3] = 1.0 if p.airborne else 0.0
    out[4] = min(1.0, p.height / 45.0)
    alive = sorted(
        (b for b in state.bats if b.alive), key=lambda b: abs(b.x - p.x)
    )
    for slot, bat in enumerate(alive[:MAX_BAT_SLOTS]):
        base = 5 + 3 * slot
        out[base] = (bat.x - p.x) / ARENA_WIDTH
        out[base + 1] = float(bat.direction)
        out[base + 2] = 1.0
    return np.clip(out, -1.0, 1.0)


class BatkillEnv(GameEnv):
    """Headless batkill environment with 600-tick training episodes."""

    game_id = "batkill"
    actions = ACTIONS
    observation_length = OBSERVATION_LENGTH

    def __init__(self, version: int, max_episode_ticks: int | None = EPISODE_TICKS):
        super().__init__()
        self.version = version
        self.config = version_config(version)
        self.max_episode_ticks = max_episode_ticks
        self.state = BatkillState(player=PlayerState())
        self.metrics = BatkillMetrics()
        self._spawn_rng = Rng(0)
        self._pending_spawns: list[int] = []

    def _do_reset(self, seed: int) -> np.ndarray:
        self._spawn_rng = Rng.for_purpose(seed, "spawn")
        self.state = BatkillState(player=PlayerState())
        self.metrics = BatkillMetrics()
        self._pending_spawns = []
        for _ in range(self.config.bats):
            self.state.bats.append(self._spawn_bat())
        return observe(self.state, self.config)

    def _spawn_bat(self) -> Bat:
        side = self._spawn_rng.randrange(2)  # 0 = left edge, 1 = right edge
        lane = self._spawn_rng.randrange(3)
        if side == 0:
            return Bat(x=-BAT_SPAWN_OFFSET, direction=1, speed=self.config.bat_speed, lane=lane)
        return Bat(
            x=ARENA_WIDTH + BAT_SPAWN_OFFSET,
            direction=-1,
            speed=self.config.bat_speed,
            lane=lane,
        )

    def _do_step(self, action: str) -> StepResult:
        prev_state = BatkillState(
            player=replace(self.state.player),
            bats=[replace(b) for b in self.state.bats],
        )
        events = self._advance(action)
        reward = compute_reward(prev_state, action, events)
        kills = sum(1 for e in events if e.kind == BAT_KILLED)
        hits = sum(1 for e in events if e.kind == HIT_TAKEN)
        done = (
            self.max_episode_ticks is not None
            and self.tick + 1 >= self.max_episode_ticks
        )
        return StepResult(
            observation=observe(self.state, self.config),
            reward=reward,
            done=done,
            events=events,
            score_delta=kills - hits,
        )

    def _advance(self, action: str) -> list[GameEvent]:
        """One tick of dynamics. Order: timers, action, physics, bat motion,
        attack kills, collisions, exits, respawns."""
        p = self.state.player
        cfg = self.config
        events: list[GameEvent] = []

        if p.attack_ticks_remaining > 0:
            p.attack_ticks_remaining -= 1
            if p.attack_ticks_remaining == 0:
                p.cooldown_remaining = cfg.attack_cooldown  # rearm after the swing
        elif p.cooldown_remaining > 0:
            p.cooldown_remaining -= 1

        if action == "LEFT":
            p.x = max(PLAYER_MARGIN, p.x - PLAYER_SPEED)
            if not p.attacking:
                p.facing = -1  # facing commits for the swing duration
        elif action == "RIGHT":
            p.x = min(ARENA_WIDTH - PLAYER_MARGIN, p.x + PLAYER_SPEED)
            if not p.attacking:
                p.facing = 1
        elif action == "JUMP":
            if cfg.jump and not p.airborne:
                p.airborne = True
                p.vy = JUMP_VELOCITY
        elif action == "ATTACK":
            if p.cooldown_remaining == 0 and p.attack_ticks_remaining == 0:
                p.attack_ticks_remaining = ATTACK_ACTIVE_TICKS

        if p.airborne:
            p.vy -= GRAVITY
            p.height += p.vy
            if p.height <= 0.0:
                p.height = 0.0
                p.vy = 0.0
                p.airborne = False

        for bat in self.state.bats:
            if bat.alive:
                bat.x += bat.direction * bat.speed

        if p.attacking:
            # The swing strikes the nearest bat in reach on the facing side,
            # then ends; the cooldown starts immediately.
            struck = None
            for bat in self.state.bats:
                if not bat.alive:
                    continue
                dx = bat.x - p.x
                if abs(dx) <= ATTACK_REACH and dx != 0 and (dx > 0) == (p.facing > 0):
                    if struck is None or abs(dx) < abs(struck.x - p.x):
                        struck = bat
            if struck is not None:
                struck.alive = False
                self.metrics.bats_killed += 1
                events.append(GameEvent(BAT_KILLED, self.tick))
                self._schedule_spawn()
                p.attack_ticks_remaining = 0
                p.cooldown_remaining = cfg.attack_cooldown

        vulnerable = p.height < JUMP_CLEAR_HEIGHT
        if vulnerable:
            for bat in self.state.bats:
                if bat.alive and abs(bat.x - p.x) <= HIT_DISTANCE:
                    bat.alive = False
                    self.metrics.hits_taken += 1
                    events.append(GameEvent(HIT_TAKEN, self.tick))
                    self._schedule_spawn()

        for bat in self.state.bats:
            if bat.alive and not (
                -BAT_EXIT_MARGIN <= bat.x <= ARENA_WIDTH + BAT_EXIT_MARGIN
            ):
                bat.alive = False
                self._schedule_spawn()

        self.state.bats = [b for b in self.state.bats if b.alive]
        due = [t for t in self._pending_spawns if t <= self.tick]
        self._pending_spawns = [t for t in self._pending_spawns if t > self.tick]
        for _ in due:
            if len(self.state.bats) < cfg.bats:
                self.state.bats.append(self._spawn_bat())
        return events

    def _schedule_spawn(self) -> None:
        self._pending_spawns.append(self.tick + spawn_delay(self.metrics.bats_killed))

    # -- session helpers -----------------------------------------------------

    def session_metrics(self, event_kinds) -> dict:
        m = BatkillMetrics(
            bats_killed=sum(1 for k in event_kinds if k == BAT_KILLED),
            hits_taken=sum(1 for k in event_kinds if k == HIT_TAKEN),
        )
        return m.as_dict()

    def session_score(self, metrics: dict) -> int:
        return int(metrics["bats_killed"]) - int(metrics["hits_taken"])

    def entities(self) -> list[dict]:
        p = self.state.player
        out = [
            {
                "id": 0,
                "kind": "player",
                "x": p.x - 15.0,
                "y": p.height,
                "w": 30.0,
                "h": 40.0,
                "facing": p.facing,
            }
        ]
        for i, bat in enumerate(self.state.bats):
            if bat.alive:
                out.append(
                    {
                        "id": i + 1,
                        "kind": "bat",
                        "x": bat.x - 12.0,
                        "y": 4.0 + 12.0 * bat.lane,
                        "w": 24.0,
                        "h": 16.0,
                        "facing": bat.direction,
                    }
                )
        return out
