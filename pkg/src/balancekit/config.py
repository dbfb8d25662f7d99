"""Harness configuration: one JSON document that drives a whole run.

The file names the game, the versions under test, per-agent training
overrides, evaluation parameters, analyzer thresholds, the output
directory, and the play-server port, so a full pipeline is reproducible
from the config plus the seeds recorded in its outputs.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from pathlib import Path

from .evaluate import TestParams
from .games import GAME_IDS, game_versions
from .trainers import MODELS, SKILLS, TrainConfig, desk_train_config

SCHEMA_VERSION = 1

# Shaping weights used during training only; evaluation always runs the
# plain scoring rules.  The climbing game never learns from raw score at
# these budgets, so it trains against jump shaping plus landing progress.
TRAIN_ENV_PROFILES: dict[str, dict] = {
    "batkill": {},
    "jungle": {
        "btr_weight": 0.0,
        "correct_jump_bonus": 10.0,
        "climb_weight": 5.0,
        "max_episode_ticks": 3600,
    },
}


class ConfigError(ValueError):
    pass


def agent_key(model: str, skill: str) -> str:
    return f"{model}-{skill}"


def checkpoint_name(game: str, version: int, model: str, skill: str) -> str:
    return f"{game}-v{version}-{model}-{skill}.json"


@dataclass
class HarnessConfig:
    game: str = "batkill"
    versions: list[int] = field(default_factory=lambda: [1])
    seed: int = 0
    out_dir: str = "runs"
    port: int = 8765
    full_scale: bool = False
    spike_threshold: float = 0.15
    chance_threshold: float = 0.5
    test: TestParams = field(default_factory=TestParams)
    # agent_key -> TrainConfig; every (model, skill) pair gets a default.
    train: dict[str, TrainConfig] = field(default_factory=dict)
    train_env: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.game not in GAME_IDS:
            raise ConfigError(f"unknown game {self.game!r}")
        known = game_versions(self.game)
        if not self.versions:
            raise ConfigError("versions must not be empty")
        for v in self.versions:
            if v not in known:
                raise ConfigError(f"{self.game} has no version {v}")
        if len(set(self.versions)) != len(self.versions):
            raise ConfigError("duplicate versions")
        if not 0 < self.port < 65536:
            raise ConfigError(f"port {self.port} out of range")
        if not 0 < self.spike_threshold:
            raise ConfigError("spike_threshold must be positive")
        if not 0 < self.chance_threshold <= 1:
            raise ConfigError("chance_threshold must be in (0, 1]")
        for model in MODELS:
            for skill in SKILLS:
                key = agent_key(model, skill)
                if key not in self.train:
                    self.train[key] = desk_train_config(
                        model, skill, seed=self.seed, full_scale=self.full_scale
                    )
        for key in self.train:
            model, _, skill = key.partition("-")
            if model not in MODELS or skill not in SKILLS:
                raise ConfigError(f"bad train key {key!r}")
        if not self.train_env:
            self.train_env = dict(TRAIN_ENV_PROFILES[self.game])

    @property
    def out_path(self) -> Path:
        return Path(self.out_dir)

    def checkpoint_path(self, version: int, model: str, skill: str) -> Path:
        name = checkpoint_name(self.game, version, model, skill)
        return self.out_path / "checkpoints" / name

    def to_json(self) -> str:
        doc = {
            "schema_version": SCHEMA_VERSION,
            "game": self.game,
            "versions": self.versions,
            "seed": self.seed,
            "out_dir": self.out_dir,
            "port": self.port,
            "full_scale": self.full_scale,
            "spike_threshold": self.spike_threshold,
            "chance_threshold": self.chance_threshold,
            "test": dataclasses.asdict(self.test),
            "train": {k: dataclasses.asdict(v) for k, v in sorted(self.train.items())},
            "train_env": self.train_env,
        }
        return json.dumps(doc, indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "HarnessConfig":
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}") from exc
        if not isinstance(doc, dict):
            raise ConfigError("config must be a JSON object")
        version = doc.get("schema_version")
        if version != SCHEMA_VERSION:
            raise ConfigError(
                f"unsupported schema_version {version!r}, expected {SCHEMA_VERSION}"
            )
        known = {f.name for f in dataclasses.fields(cls)}
        extra = set(doc) - known - {"schema_version"}
        if extra:
            raise ConfigError(f"unknown config keys: {sorted(extra)}")
        kwargs = {k: v for k, v in doc.items() if k != "schema_version"}
        if "test" in kwargs:
            try:
                kwargs["test"] = TestParams(**kwargs["test"])
            except TypeError as exc:
                raise ConfigError(f"bad test section: {exc}") from exc
        if "train" in kwargs:
            try:
                kwargs["train"] = {
                    k: TrainConfig(**v) for k, v in kwargs["train"].items()
                }
            except TypeError as exc:
                raise ConfigError(f"bad train section: {exc}") from exc
        try:
            return cls(**kwargs)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc

    def save(self, path) -> Path:
        path = Path(path)
        path.write_text(self.to_json() + "\n", encoding="utf-8")
        return path

    @classmethod
    def load(cls, path) -> "HarnessConfig":
        return cls.from_json(Path(path).read_text(encoding="utf-8"))
