"""Game environments and the factory the rest of the toolkit goes through."""

from __future__ import annotations

from ..env import GameEnv
from . import batkill, jungle
from .batkill import BatkillEnv
from .jungle import JungleEnv

GAME_IDS = ("batkill", "jungle")


def game_versions(game: str) -> tuple[int, ...]:
    if game == "batkill":
        return batkill.VERSION_IDS
    if game == "jungle":
        return jungle.VERSION_IDS
    raise ValueError(f"unknown game {game!r}")


def make_env(game: str, version: int, **overrides) -> GameEnv:
    """Build an environment by id. Overrides feed the env constructor
    (training knobs like max_episode_ticks; they do not alter the version)."""
    if game == "batkill":
        return BatkillEnv(version, **overrides)
    if game == "jungle":
        return JungleEnv(version, **overrides)
    raise ValueError(f"unknown game {game!r}")


__all__ = [
    "GAME_IDS",
    "BatkillEnv",
    "JungleEnv",
    "batkill",
    "game_versions",
    "jungle",
    "make_env",
]
