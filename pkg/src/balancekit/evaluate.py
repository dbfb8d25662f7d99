"""Timed play sessions and the median-score matrix.

A session is a fixed wall-clock budget of simulated play (default 180 s at
60 Hz): the policy acts every tick and the environment auto-resets whenever
an episode ends, so one session can span many lives. Each player column's
cell in the report is the median score over its runs. Human sessions are
recorded by the play server and imported here after a replay check; they are
never simulated.
"""

from __future__ import annotations

import csv
import io
import json
import statistics
from dataclasses import dataclass, replace
from pathlib import Path

from . import __version__ as SIM_VERSION
from .env import TICKS_PER_SECOND
from .games import make_env
from .nn import load_checkpoint
from .rng import derive_seed
from .trainers import AgentPolicy, random_policy

SESSION_KINDS = ("human", "ai-play", "random")
SKILLS = ("novice", "professional")

# fixed column order of the report matrix
COLUMNS = (
    "Human-Pro",
    "Human-Novice",
    "PPO-Pro",
    "PPO-Novice",
    "A2C-Pro",
    "A2C-Novice",
    "Random",
)

SCHEMA_VERSION = 1


class SessionError(ValueError):
    """A session log failed validation."""


class ReplayMismatch(SessionError):
    """Re-simulating a session log did not reproduce it."""

    def __init__(self, message: str, tick: int | None = None):
        super().__init__(message)
        self.tick = tick


@dataclass
class TestParams:
    __test__ = False  # despite the name, not a pytest class

    version: int = 1
    time_s: int = 180
    runs: int = 2
    session_kind: str = "ai-play"
    skill: str | None = None
    seed: int = 0

    def __post_init__(self) -> None:
        if self.time_s <= 0:
            raise ValueError("time_s must be positive")
        if self.runs < 1:
            raise ValueError("runs must be at least 1")
        if self.session_kind not in SESSION_KINDS:
            raise ValueError(f"unknown session kind {self.session_kind!r}")
        if self.skill is not None and self.skill not in SKILLS:
            raise ValueError(f"unknown skill {self.skill!r}")


@dataclass
class SessionRecord:
    header: dict
    steps: list[dict]
    metrics: dict
    score: int

    def lines(self):
        yield json.dumps(self.header, sort_keys=True, separators=(",", ":"))
        for step in self.steps:
            yield json.dumps(step, sort_keys=True, separators=(",", ":"))
        trailer = {"metrics": self.metrics, "score": self.score}
        yield json.dumps(trailer, sort_keys=True, separators=(",", ":"))

    def write(self, path) -> None:
        Path(path).write_text("\n".join(self.lines()) + "\n")

    @classmethod
    def from_lines(cls, lines) -> "SessionRecord":
        rows = [json.loads(line) for line in lines if line.strip()]
        if len(rows) < 2:
            raise SessionError("session log needs a header and a trailer")
        header, trailer = rows[0], rows[-1]
        for key in ("game", "version", "seed", "ticks_per_second", "player_id"):
            if key not in header:
                raise SessionError(f"header missing {key!r}")
        if "score" not in trailer or "metrics" not in trailer:
            raise SessionError("trailer missing score/metrics")
        return cls(
            header=header, steps=rows[1:-1], metrics=trailer["metrics"],
            score=trailer["score"],
        )

    @classmethod
    def read(cls, path) -> "SessionRecord":
        return cls.from_lines(Path(path).read_text().splitlines())


def median(values) -> float:
    """Median with mean-of-middles for even counts (two runs -> their mean)."""
    values = list(values)
    if not values:
        raise ValueError("median of empty list")
    return statistics.median(values)


def _policy_action_count(policy) -> int | None:
    if hasattr(policy, "action_count"):
        return policy.action_count
    if hasattr(policy, "mlp"):
        return policy.mlp.n_actions
    return None


class SessionDriver:
    """One timed session advanced a tick at a time.

    Both simulated sessions (a policy picks every action) and interactive
    play-server sessions (the held keys pick every action) drive this, so
    their records share one schema and one replay semantics: episode
    auto-reset on terminals with sub-seeds derived from the session seed.
    """

    def __init__(
        self, game: str, version: int, params: TestParams, player_id: str
    ):
        self.env = make_env(game, version)
        self.params = params
        self.total_ticks = params.time_s * TICKS_PER_SECOND
        self.header = {
            "game": game,
            "version": version,
            "player_id": player_id,
            "session_kind": params.session_kind,
            "skill": params.skill,
            "seed": params.seed,
            "ticks_per_second": TICKS_PER_SECOND,
            "time_s": params.time_s,
            "sim": SIM_VERSION,
        }
        self.steps: list[dict] = []
        self.kinds: list[str] = []
        self._episode = 0
        self.obs = self.env.reset(derive_seed(params.seed, "episode", 0))

    @property
    def tick(self) -> int:
        return len(self.steps)

    @property
    def finished(self) -> bool:
        return len(self.steps) >= self.total_ticks

    def step(self, action: str):
        if self.finished:
            raise SessionError("session already ran its full time budget")
        result = self.env.step(action)
        self.kinds.extend(ev.kind for ev in result.events)
        self.steps.append(
            {
                "tick": len(self.steps),
                "action": action,
                "reward": result.reward,
                "score_delta": result.score_delta,
                "events": [ev.kind for ev in result.events],
                "done": result.done,
            }
        )
        if result.done:
            self._episode += 1
            self.obs = self.env.reset(
                derive_seed(self.params.seed, "episode", self._episode)
            )
        else:
            self.obs = result.observation
        return result

    def partial_score(self) -> int:
        """Score the session would settle at if it ended now."""
        return self.env.session_score(self.env.session_metrics(self.kinds))

    def finish(self) -> SessionRecord:
        if not self.finished:
            raise SessionError(
                f"session ended early: {self.tick} of {self.total_ticks} ticks"
            )
        metrics = self.env.session_metrics(self.kinds)
        return SessionRecord(
            header=self.header,
            steps=self.steps,
            metrics=metrics,
            score=self.env.session_score(metrics),
        )


def run_session(
    game: str,
    version: int,
    policy,
    params: TestParams,
    player_id: str = "agent",
) -> SessionRecord:
    """Play one timed session under a policy."""
    driver = SessionDriver(game, version, params, player_id)
    declared = _policy_action_count(policy)
    if declared is not None and declared != len(driver.env.actions):
        raise ValueError(
            f"policy has {declared} actions but {game} has "
            f"{len(driver.env.actions)}"
        )
    while not driver.finished:
        driver.step(driver.env.actions[policy.act(driver.obs)])
    return driver.finish()


def replay_session(record: SessionRecord) -> None:
    """Re-simulate a session from its logged actions and seed; raises
    ReplayMismatch at the first tick whose logged outcome differs."""
    h = record.header
    env = make_env(h["game"], h["version"])
    logged_sim = h.get("sim", SIM_VERSION)
    if logged_sim != SIM_VERSION:
        raise ReplayMismatch(
            f"log was written by sim {logged_sim} but this engine is "
            f"{SIM_VERSION}; outcomes are only comparable within one version"
        )
    if h.get("ticks_per_second") != TICKS_PER_SECOND:
        raise ReplayMismatch(
            f"log claims {h.get('ticks_per_second')} ticks/s, engine runs "
            f"{TICKS_PER_SECOND}"
        )
    expected_ticks = h.get("time_s", 180) * TICKS_PER_SECOND
    if len(record.steps) != expected_ticks:
        raise SessionError(
            f"incomplete session: {len(record.steps)} of {expected_ticks} ticks"
        )
    kinds: list[str] = []
    episode = 0
    env.reset(derive_seed(h["seed"], "episode", episode))
    for step in record.steps:
        result = env.step(step["action"])
        kinds.extend(ev.kind for ev in result.events)
        got = {
            "reward": result.reward,
            "score_delta": result.score_delta,
            "events": [ev.kind for ev in result.events],
            "done": result.done,
        }
        for key, value in got.items():
            if step.get(key) != value:
                raise ReplayMismatch(
                    f"tick {step['tick']}: logged {key}={step.get(key)!r}, "
                    f"replay produced {value!r}",
                    tick=step["tick"],
                )
        if result.done:
            episode += 1
            env.reset(derive_seed(h["seed"], "episode", episode))
    metrics = env.session_metrics(kinds)
    if metrics != record.metrics:
        raise ReplayMismatch(f"metrics mismatch: logged {record.metrics}, replay {metrics}")
    score = env.session_score(metrics)
    if score != record.score:
        raise ReplayMismatch(f"score mismatch: logged {record.score}, replay {score}")


def import_human_session(source) -> SessionRecord:
    """Load and validate a play-server session log (path, lines, or record)."""
    if isinstance(source, SessionRecord):
        record = source
    elif isinstance(source, (str, Path)):
        record = SessionRecord.read(source)
    else:
        record = SessionRecord.from_lines(source)
    if record.header.get("session_kind") != "human":
        raise SessionError("not a human session log")
    replay_session(record)
    return record


# -- the report matrix ---------------------------------------------------------


class PlayerSpec:
    """One column of the report: a trained agent, the random baseline, or a
    set of imported human sessions.

    ``checkpoint`` may be a fixed path or a callable mapping a version to a
    path, since each version is normally played by the agent trained on it.
    """

    def __init__(self, column: str, kind: str, checkpoint=None, sessions=None):
        self.column = column
        self.kind = kind  # "agent" | "random" | "human"
        self.checkpoint = checkpoint
        self.sessions: list[SessionRecord] = (
            list(sessions) if sessions is not None else []
        )
        if self.kind not in ("agent", "random", "human"):
            raise ValueError(f"unknown player kind {self.kind!r}")

    def checkpoint_for(self, version: int):
        if callable(self.checkpoint):
            return self.checkpoint(version)
        return self.checkpoint


def agent_player(column: str, checkpoint) -> PlayerSpec:
    return PlayerSpec(column=column, kind="agent", checkpoint=checkpoint)


def human_player(column: str, sessions) -> PlayerSpec:
    return PlayerSpec(column=column, kind="human", sessions=list(sessions))


def random_player(column: str = "Random") -> PlayerSpec:
    return PlayerSpec(column=column, kind="random")


@dataclass
class EvaluationReport:
    game: str
    columns: tuple
    versions: tuple
    cells: dict  # (version, column) -> float | None
    runs: int
    seed: int

    def row(self, version: int) -> dict:
        return {c: self.cells.get((version, c)) for c in self.columns}

    def matrix(self) -> list[list[float | None]]:
        return [[self.cells.get((v, c)) for c in self.columns] for v in self.versions]

    def to_json(self) -> str:
        payload = {
            "schema_version": SCHEMA_VERSION,
            "game": self.game,
            "columns": list(self.columns),
            "versions": list(self.versions),
            "runs": self.runs,
            "seed": self.seed,
            "medians": {
                str(v): {c: self.cells.get((v, c)) for c in self.columns}
                for v in self.versions
            },
        }
        return json.dumps(payload, sort_keys=True, separators=(",", ":")) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "EvaluationReport":
        data = json.loads(text)
        cells = {}
        for v_str, row in data["medians"].items():
            for col, value in row.items():
                cells[(int(v_str), col)] = value
        return cls(
            game=data["game"],
            columns=tuple(data["columns"]),
            versions=tuple(data["versions"]),
            cells=cells,
            runs=data["runs"],
            seed=data["seed"],
        )

    def to_csv(self) -> str:
        lines = ["version," + ",".join(self.columns)]
        for v in self.versions:
            row = [
                "" if self.cells.get((v, c)) is None else _num(self.cells[(v, c)])
                for c in self.columns
            ]
            lines.append(f"{v}," + ",".join(row))
        return "\n".join(lines) + "\n"

    @classmethod
    def from_csv(
        cls, text: str, game: str = "scores", runs: int = 0, seed: int = 0
    ) -> "EvaluationReport":
        """Parse a score table: header ``version,<player columns>``, one row
        per version, blank cells for missing medians."""
        rows = [r for r in csv.reader(io.StringIO(text)) if any(x.strip() for x in r)]
        if not rows or rows[0][0].strip().lower() != "version":
            raise SessionError("score CSV needs a leading 'version' column")
        columns = tuple(name.strip() for name in rows[0][1:])
        unknown = [c for c in columns if c not in COLUMNS]
        if unknown:
            raise SessionError(
                f"unknown player columns {unknown}; expected names from {COLUMNS}"
            )
        versions: list[int] = []
        cells: dict = {}
        for raw in rows[1:]:
            if len(raw) != len(columns) + 1:
                raise SessionError(
                    f"row {raw!r} has {len(raw) - 1} cells for {len(columns)} columns"
                )
            try:
                version = int(raw[0])
            except ValueError as exc:
                raise SessionError(f"bad version {raw[0]!r}") from exc
            if version in versions:
                raise SessionError(f"duplicate version {version}")
            versions.append(version)
            for col, cell in zip(columns, raw[1:]):
                cell = cell.strip()
                try:
                    cells[(version, col)] = None if cell == "" else float(cell)
                except ValueError as exc:
                    raise SessionError(
                        f"bad score {cell!r} for v{version} {col}"
                    ) from exc
        return cls(
            game=game, columns=columns, versions=tuple(versions), cells=cells,
            runs=runs, seed=seed,
        )


def _num(x: float) -> str:
    return str(int(x)) if float(x).is_integer() else repr(float(x))


def _cell_policy(spec: PlayerSpec, version: int, game: str, action_count: int, seed: int):
    if spec.kind == "random":
        return random_policy(action_count, derive_seed(seed, "policy"))
    checkpoint = spec.checkpoint_for(version)
    mlp, _, meta = load_checkpoint(checkpoint)
    if meta.get("game") not in (None, game):
        raise ValueError(
            f"checkpoint {checkpoint} was trained on {meta.get('game')!r}, "
            f"not {game!r}"
        )
    return AgentPolicy(mlp, derive_seed(seed, "policy"), mode="sample")


def _skill_of(column: str) -> str | None:
    if column.endswith("-Pro"):
        return "professional"
    if column.endswith("-Novice"):
        return "novice"
    return None


def run_evaluation(
    game: str,
    versions,
    players: list[PlayerSpec],
    params: TestParams,
    out_dir: str | Path | None = None,
    progress=None,
) -> EvaluationReport:
    """Fill the median-score matrix cell by cell in fixed order.

    Missing material (absent checkpoint, no human sessions for a version)
    marks the cell as missing rather than aborting the run. Session logs are
    persisted when out_dir is given.
    """
    versions = tuple(versions)
    cells: dict = {}
    out = Path(out_dir) if out_dir is not None else None
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
    for version in versions:
        for spec in players:
            key = (version, spec.column)
            if spec.kind == "human":
                scores = [
                    r.score
                    for r in spec.sessions
                    if r.header.get("version") == version
                    and r.header.get("game") == game
                ]
                cells[key] = median(scores) if scores else None
                continue
            if spec.kind == "agent":
                checkpoint = spec.checkpoint_for(version)
                if checkpoint is None or not Path(checkpoint).exists():
                    cells[key] = None
                    continue
            scores = []
            for run in range(params.runs):
                cell_seed = derive_seed(params.seed, game, version, spec.column, run)
                run_params = replace(
                    params,
                    version=version,
                    seed=cell_seed,
                    session_kind="random" if spec.kind == "random" else "ai-play",
                    skill=_skill_of(spec.column),
                )
                env_probe = make_env(game, version)
                policy = _cell_policy(
                    spec, version, game, len(env_probe.actions), cell_seed
                )
                record = run_session(
                    game, version, policy, run_params, player_id=spec.column
                )
                scores.append(record.score)
                if out is not None:
                    name = f"{game}-v{version}-{spec.column}-run{run}.jsonl"
                    record.write(out / name)
                if progress is not None:
                    progress(version, spec.column, run, record.score)
            cells[key] = median(scores)
    return EvaluationReport(
        game=game,
        columns=tuple(s.column for s in players),
        versions=versions,
        cells=cells,
        runs=params.runs,
        seed=params.seed,
    )
