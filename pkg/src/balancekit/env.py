"""Environment contract shared by every game in the harness.

A game is a deterministic fixed-timestep MDP: ``reset(seed)`` puts it in its
initial state, ``step(action)`` advances exactly one tick and returns a
:class:`StepResult`. Observations are fixed-length float vectors normalized
to [-1, 1]. All randomness flows through named sub-streams of the reset seed
(see :mod:`balancekit.rng`), so a seed plus an action sequence fully
determines the run.

Sessions (timed play periods) are longer than episodes: when ``done`` comes
back true the session runner resets the environment with a derived sub-seed
and keeps going until the tick budget is spent. The environment itself never
knows about sessions.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Protocol, Sequence

import numpy as np

TICKS_PER_SECOND = 60


class EnvContractError(Exception):
    """A caller violated the environment contract."""


class UnknownActionError(EnvContractError):
    """Action is not in the environment's action set."""


class ResetRequiredError(EnvContractError):
    """step() was called after done=True without an intervening reset()."""


@dataclass(frozen=True)
class GameEvent:
    """A discrete occurrence inside one tick (kill, hit, death, ...)."""

    kind: str
    tick: int


@dataclass
class StepResult:
    observation: np.ndarray
    reward: float
    done: bool
    events: list[GameEvent] = field(default_factory=list)
    score_delta: int = 0


class Observer(Protocol):
    """Instrumentation hook invoked synchronously from the game loop."""

    def on_step(self, tick: int, action: str, result: StepResult) -> None: ...

    def on_session_end(self, metrics: dict) -> None: ...


class GameEnv:
    """Base class wiring actions, the tick clock, and observer broadcast.

    Subclasses implement ``_do_reset(seed)`` and ``_do_step(action)`` and
    expose ``actions`` (ordered, fixed), ``observation_length``, plus the
    game-specific metric helpers used by the session layer.
    """

    game_id: str = ""
    actions: tuple[str, ...] = ()
    observation_length: int = 0

    def __init__(self) -> None:
        self.tick = 0
        self._needs_reset = True
        self._observers: list[Observer] = []

    # -- contract ----------------------------------------------------------

    def reset(self, seed: int) -> np.ndarray:
        """Reset to the initial state for this seed; tick returns to 0."""
        self.tick = 0
        self._needs_reset = False
        obs = self._do_reset(seed)
        return obs

    def step(self, action: str) -> StepResult:
        """Advance exactly one tick. Raises on unknown action or missed reset."""
        if self._needs_reset:
            raise ResetRequiredError(
                f"{self.game_id}: step() after done=True requires reset()"
            )
        if action not in self.actions:
            raise UnknownActionError(f"{self.game_id}: unknown action {action!r}")
        result = self._do_step(action)
        self.tick += 1
        if result.done:
            self._needs_reset = True
        for obs in self._observers:
            obs.on_step(self.tick - 1, action, result)
        return result

    def action_list(self) -> tuple[str, ...]:
        return self.actions

    def action_index(self, action: str) -> int:
        return self.actions.index(action)

    def attach_observer(self, observer: Observer) -> None:
        """Observers are invoked in attachment order and must not mutate state."""
        self._observers.append(observer)

    def notify_session_end(self, metrics: dict) -> None:
        for obs in self._observers:
            obs.on_session_end(metrics)

    # -- game-specific hooks -------------------------------------------------

    def _do_reset(self, seed: int) -> np.ndarray:
        raise NotImplementedError

    def _do_step(self, action: str) -> StepResult:
        raise NotImplementedError

    def session_metrics(self, event_kinds: Sequence[str]) -> dict:
        """Aggregate a full session's event stream into the game's metrics."""
        raise NotImplementedError

    def session_score(self, metrics: dict) -> int:
        """Apply the game's score formula to aggregated metrics."""
        raise NotImplementedError

    def entities(self) -> list[dict]:
        """Renderable entities for the play server (world coordinates)."""
        raise NotImplementedError


class CountingObserver:
    """Tiny observer used in tests and smoke checks."""

    def __init__(self) -> None:
        self.steps = 0
        self.session_ends = 0

    def on_step(self, tick: int, action: str, result: StepResult) -> None:
        self.steps += 1

    def on_session_end(self, metrics: dict) -> None:
        self.session_ends += 1
