"""Command line for the full pipeline: train, evaluate, analyze, play.

Every command is reproducible from its flags plus the seeds it records in
its outputs. ``analyze`` and ``report`` render difficulty figures next to
the delimited files they write.
"""

from __future__ import annotations

import json
import math
import sys
from pathlib import Path

import click

from . import __version__
from .analyze import CHANCE_THRESHOLD, SPIKE_THRESHOLD, balance_report
from .config import (
    TRAIN_ENV_PROFILES,
    ConfigError,
    HarnessConfig,
    agent_key,
    checkpoint_name,
)
from .evaluate import (
    COLUMNS,
    EvaluationReport,
    ReplayMismatch,
    SessionError,
    SessionRecord,
    TestParams,
    agent_player,
    human_player,
    import_human_session,
    random_player,
    replay_session,
    run_evaluation,
)
from .figures import render_figures
from .games import GAME_IDS, game_versions
from .server import PlayServer
from .trainers import MODELS, SKILLS, desk_train_config, train

GAME_CHOICE = click.Choice(sorted(GAME_IDS))
SKILL_CHOICE = click.Choice(list(SKILLS))


@click.group()
@click.version_option(version=__version__, prog_name="balancekit")
def main():
    """Game balance testing: train agents, score versions, flag findings."""


def _check_version(game: str, version: int) -> None:
    known = game_versions(game)
    if version not in known:
        raise click.ClickException(f"{game} has versions {sorted(known)}, not {version}")


# -- train ---------------------------------------------------------------------


@main.command(name="train")
@click.option("--game", type=GAME_CHOICE, required=True)
@click.option("--version", type=int, required=True)
@click.option("--model", type=click.Choice(list(MODELS)), default="ppo", show_default=True)
@click.option("--skill", type=SKILL_CHOICE, default="novice", show_default=True)
@click.option("--full-scale", is_flag=True, help="Full-scale step budgets instead of desk-scale.")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--steps", type=int, default=None, help="Override the step budget.")
@click.option("--out", type=click.Path(path_type=Path), default=Path("runs"), show_default=True)
def cmd_train(game, version, model, skill, full_scale, seed, steps, out):
    """Train one agent and save its checkpoint under OUT/checkpoints."""
    _check_version(game, version)
    config = desk_train_config(model, skill, seed=seed, full_scale=full_scale)
    if steps is not None:
        if steps <= 0:
            raise click.ClickException("--steps must be positive")
        config.total_steps = steps
    env_overrides = TRAIN_ENV_PROFILES[game] or None

    def watch(entry: dict) -> None:
        for key, value in entry.items():
            if isinstance(value, float) and not math.isfinite(value):
                raise FloatingPointError(
                    f"{key} became {value} at update {entry['update']} "
                    f"({entry['steps']} steps)"
                )
        reward = entry["mean_episode_reward"]
        shown = "n/a" if reward is None else f"{reward:.2f}"
        click.echo(
            f"update {entry['update']:>4}  steps {entry['steps']:>8}  "
            f"mean episode reward {shown}"
        )

    try:
        agent, log = train(game, version, config, env_overrides, progress=watch)
    except FloatingPointError as exc:
        raise click.ClickException(f"training diverged, no checkpoint written: {exc}")
    path = out / "checkpoints" / checkpoint_name(game, version, model, skill)
    path.parent.mkdir(parents=True, exist_ok=True)
    agent.save(path)
    log_path = out / "logs" / (path.stem + ".jsonl")
    log_path.parent.mkdir(parents=True, exist_ok=True)
    log_path.write_text("".join(json.dumps(row) + "\n" for row in log))
    click.echo(f"saved {path} ({agent.train_steps} steps, model {model}, skill {skill})")


# -- evaluate --------------------------------------------------------------------


def _load_human_sessions(config: HarnessConfig):
    """Replay-check every session log under OUT/human and bucket by skill."""
    by_skill = {"professional": [], "novice": []}
    human_dir = config.out_path / "human"
    if not human_dir.is_dir():
        return by_skill
    for path in sorted(human_dir.glob("*.jsonl")):
        try:
            record = import_human_session(path)
        except SessionError as exc:
            click.echo(f"skipping {path.name}: {exc}", err=True)
            continue
        skill = record.header.get("skill")
        if skill in by_skill:
            by_skill[skill].append(record)
        else:
            click.echo(f"skipping {path.name}: no skill tag", err=True)
    return by_skill


@main.command(name="evaluate")
@click.option(
    "--config", "config_path", type=click.Path(exists=True, path_type=Path),
    required=True,
)
def cmd_evaluate(config_path):
    """Score every version/player cell and write the median matrix."""
    try:
        config = HarnessConfig.load(config_path)
    except ConfigError as exc:
        raise click.ClickException(str(exc))
    humans = _load_human_sessions(config)
    players = []
    for column in COLUMNS:
        if column == "Random":
            players.append(random_player())
        elif column.startswith("Human-"):
            skill = "professional" if column.endswith("-Pro") else "novice"
            players.append(human_player(column, humans[skill]))
        else:
            family, _, tag = column.partition("-")
            model = family.lower()
            skill = "professional" if tag == "Pro" else "novice"
            players.append(
                agent_player(
                    column,
                    lambda v, m=model, s=skill: config.checkpoint_path(v, m, s),
                )
            )

    def note(version, column, run, score):
        click.echo(f"v{version} {column} run {run}: score {score}", err=True)

    report = run_evaluation(
        config.game, config.versions, players, config.test,
        out_dir=config.out_path / "sessions", progress=note,
    )
    config.out_path.mkdir(parents=True, exist_ok=True)
    (config.out_path / "report.json").write_text(report.to_json())
    (config.out_path / "report.csv").write_text(report.to_csv())
    click.echo(_matrix_text(report), nl=False)
    missing = sorted(
        f"v{v} {c}" for (v, c), value in report.cells.items() if value is None
    )
    if missing:
        click.echo(f"missing cells (no checkpoint or sessions): {', '.join(missing)}")
    click.echo(f"wrote {config.out_path / 'report.json'}")


# -- analyze ---------------------------------------------------------------------


def load_score_table(path: Path, game: str | None = None) -> EvaluationReport:
    """Accept either a report JSON or a plain score CSV."""
    text = Path(path).read_text(encoding="utf-8")
    if text.lstrip().startswith("{"):
        report = EvaluationReport.from_json(text)
        if game:
            report = EvaluationReport(
                game=game, columns=report.columns, versions=report.versions,
                cells=report.cells, runs=report.runs, seed=report.seed,
            )
        return report
    return EvaluationReport.from_csv(text, game=game or Path(path).stem)


@main.command(name="analyze")
@click.option(
    "--report", "report_path", type=click.Path(exists=True, path_type=Path),
    required=True, help="Median-score matrix: report JSON or score CSV.",
)
@click.option("--spike-threshold", type=float, default=SPIKE_THRESHOLD, show_default=True)
@click.option("--chance-threshold", type=float, default=CHANCE_THRESHOLD, show_default=True)
@click.option("--game", default=None, help="Name used in outputs for CSV input.")
@click.option("--out", type=click.Path(path_type=Path), default=None,
              help="Output directory (default: next to the input file).")
def cmd_analyze(report_path, spike_threshold, chance_threshold, game, out):
    """Flag difficulty spikes and chance-dominated versions."""
    try:
        table = load_score_table(report_path, game)
        findings = balance_report(
            table, spike_threshold=spike_threshold, chance_threshold=chance_threshold
        )
    except (SessionError, ValueError, KeyError) as exc:
        raise click.ClickException(f"cannot analyze {report_path}: {exc}")
    out_dir = out if out is not None else report_path.parent
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / f"{findings.game}-balance.json").write_text(findings.to_json())
    (out_dir / f"{findings.game}-balance.txt").write_text(findings.to_text())
    figures = render_figures(findings, out_dir)
    click.echo(findings.to_text(), nl=False)
    for path in figures:
        click.echo(f"figure: {path}")


# -- report ----------------------------------------------------------------------


@main.command(name="report")
@click.option(
    "--report", "report_path", type=click.Path(exists=True, path_type=Path),
    required=True,
)
@click.option("--format", "fmt", type=click.Choice(["json", "csv", "text"]),
              default="text", show_default=True)
@click.option("--game", default=None)
@click.option("--out", type=click.Path(path_type=Path), default=None,
              help="Output directory (default: next to the input file).")
def cmd_report(report_path, fmt, game, out):
    """Render a score matrix with its findings; figures go next to it."""
    try:
        table = load_score_table(report_path, game)
        findings = balance_report(table)
    except (SessionError, ValueError, KeyError) as exc:
        raise click.ClickException(f"cannot report on {report_path}: {exc}")
    out_dir = out if out is not None else report_path.parent
    out_dir.mkdir(parents=True, exist_ok=True)
    if fmt == "json":
        body = json.dumps(
            {
                "report": json.loads(table.to_json()),
                "balance": json.loads(findings.to_json()),
            },
            indent=2,
            sort_keys=True,
        ) + "\n"
        suffix = "json"
    elif fmt == "csv":
        body = table.to_csv()
        suffix = "csv"
    else:
        body = _matrix_text(table) + "\n" + findings.to_text()
        suffix = "txt"
    (out_dir / f"{table.game}-report.{suffix}").write_text(body)
    render_figures(findings, out_dir)
    click.echo(body, nl=False)


def _matrix_text(table: EvaluationReport) -> str:
    width = max(len(c) for c in table.columns) + 2
    lines = ["median scores (" + table.game + ")"]
    lines.append("version".ljust(9) + "".join(c.rjust(width) for c in table.columns))
    for v in table.versions:
        row = table.row(v)
        cells = "".join(
            ("" if row[c] is None else f"{row[c]:g}").rjust(width)
            for c in table.columns
        )
        lines.append(f"v{v}".ljust(9) + cells)
    return "\n".join(lines) + "\n"


# -- serve -----------------------------------------------------------------------


@main.command(name="serve")
@click.option("--game", type=GAME_CHOICE, required=True)
@click.option("--version", type=int, required=True)
@click.option("--port", type=int, default=8765, show_default=True)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--skill-tag", type=SKILL_CHOICE, required=True,
              help="Skill column the recorded sessions belong to.")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--time-s", type=int, default=180, show_default=True)
@click.option("--out", type=click.Path(path_type=Path), default=Path("runs/human"),
              show_default=True, help="Directory for completed session logs.")
@click.option("--static", type=click.Path(exists=True, file_okay=False, path_type=Path),
              default=None, help="Serve a play client from this directory.")
def cmd_serve(game, version, port, host, skill_tag, seed, time_s, out, static):
    """Run the authoritative play server until interrupted."""
    _check_version(game, version)
    server = PlayServer(
        game, version, port=port, host=host, skill=skill_tag, seed=seed,
        time_s=time_s, out_dir=out, static_dir=static,
    )
    click.echo(
        f"serving {game} v{version} on ws://{host}:{server.port} "
        f"(skill tag {skill_tag}, sessions -> {out})"
    )
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        click.echo("stopped")


# -- replay ----------------------------------------------------------------------


@main.command(name="replay")
@click.option("--log", "log_path", type=click.Path(exists=True, path_type=Path),
              required=True)
def cmd_replay(log_path):
    """Re-simulate a session log and verify it tick for tick."""
    try:
        record = SessionRecord.read(log_path)
    except (SessionError, json.JSONDecodeError) as exc:
        raise click.ClickException(f"unreadable log: {exc}")
    try:
        replay_session(record)
    except ReplayMismatch as exc:
        where = f" (first divergence at tick {exc.tick})" if exc.tick is not None else ""
        click.echo(f"mismatch{where}: {exc}")
        sys.exit(1)
    except SessionError as exc:
        raise click.ClickException(str(exc))
    click.echo(
        f"match: {len(record.steps)} ticks, score {record.score} "
        f"({record.header['game']} v{record.header['version']})"
    )


if __name__ == "__main__":
    main()
