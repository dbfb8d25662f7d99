"""Balance findings from a median-score matrix.

Three lenses: a difficulty curve (per-version mean over the skill-bearing
columns), difficulty spikes (normalized jumps between consecutive versions),
and a chance index per version measuring how far the random baseline sits
below the best trained agent. A Spearman similarity table compares player
families' score patterns across versions.

Thresholds are calibrated defaults, recorded in every output so findings are
reproducible.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass

from .evaluate import EvaluationReport

SPIKE_THRESHOLD = 0.15
CHANCE_THRESHOLD = 0.5

HUMAN_COLUMNS = ("Human-Pro", "Human-Novice")
AGENT_COLUMNS = ("PPO-Pro", "PPO-Novice", "A2C-Pro", "A2C-Novice")
SKILL_COLUMNS = HUMAN_COLUMNS + AGENT_COLUMNS

FAMILIES = {
    "Human": HUMAN_COLUMNS,
    "PPO": ("PPO-Pro", "PPO-Novice"),
    "A2C": ("A2C-Pro", "A2C-Novice"),
    "Random": ("Random",),
}

SCHEMA_VERSION = 1


@dataclass
class DifficultyCurve:
    versions: tuple
    means: tuple  # per-version mean over present skill-bearing cells
    score_range: float  # max - min over those cells across all versions
    columns_used: tuple

    def as_dict(self) -> dict:
        return {
            "versions": list(self.versions),
            "means": list(self.means),
            "score_range": self.score_range,
            "columns_used": list(self.columns_used),
        }

    def to_csv(self) -> str:
        lines = ["version,mean"]
        lines += [f"{v},{m!r}" for v, m in zip(self.versions, self.means)]
        return "\n".join(lines) + "\n"


@dataclass
class SpikeFinding:
    version: int  # the version introducing the jump
    direction: str  # "harder" | "easier"
    magnitude: float  # |delta| / score_range

    def as_dict(self) -> dict:
        return {
            "version": self.version,
            "direction": self.direction,
            "magnitude": self.magnitude,
        }


@dataclass
class ChanceFinding:
    version: int
    chance_index: float
    classification: str  # "skill" | "chance"

    def as_dict(self) -> dict:
        return {
            "version": self.version,
            "chance_index": self.chance_index,
            "classification": self.classification,
        }


def _skill_cells(report: EvaluationReport, version: int) -> dict:
    return {
        c: report.cells[(version, c)]
        for c in report.columns
        if c in SKILL_COLUMNS and report.cells.get((version, c)) is not None
    }


def difficulty_curve(report: EvaluationReport) -> DifficultyCurve:
    """Per-version mean score over humans and trained agents; the random
    column is the chance probe and stays out of the difficulty lens."""
    if len(report.versions) < 2:
        raise ValueError("difficulty curve needs at least two versions")
    means = []
    all_cells = []
    used = set()
    for v in report.versions:
        cells = _skill_cells(report, v)
        if not cells:
            raise ValueError(f"version {v} has no skill-bearing scores")
        means.append(sum(cells.values()) / len(cells))
        all_cells.extend(cells.values())
        used.update(cells)
    return DifficultyCurve(
        versions=tuple(report.versions),
        means=tuple(means),
        score_range=max(all_cells) - min(all_cells),
        columns_used=tuple(c for c in SKILL_COLUMNS if c in used),
    )


def detect_spikes(curve: DifficultyCurve, threshold: float = SPIKE_THRESHOLD):
    """Consecutive-version jumps of at least threshold of the global range.

    A drop in mean score reads as the game getting harder.
    """
    if curve.score_range <= 0:
        return []
    findings = []
    for prev_m, v, m in zip(curve.means, curve.versions[1:], curve.means[1:]):
        delta = m - prev_m
        magnitude = abs(delta) / curve.score_range
        if magnitude >= threshold:
            findings.append(
                SpikeFinding(
                    version=v,
                    direction="harder" if delta < 0 else "easier",
                    magnitude=magnitude,
                )
            )
    return findings


def chance_index(report: EvaluationReport, version: int) -> float:
    """Where the random baseline falls between the best trained agent and
    the overall worst player, on a 0 (random is best: pure chance) to 1
    (random is worst: skill matters) scale."""
    random_score = report.cells.get((version, "Random"))
    if random_score is None:
        raise ValueError(f"version {version} has no random baseline")
    agents = [
        report.cells[(version, c)]
        for c in AGENT_COLUMNS
        if report.cells.get((version, c)) is not None
    ]
    if not agents:
        raise ValueError(f"version {version} has no trained-agent scores")
    everyone = [
        report.cells[(version, c)]
        for c in report.columns
        if report.cells.get((version, c)) is not None
    ]
    best = max(agents)
    worst = min(everyone)
    if best == worst:
        return 0.0  # degenerate row: indistinguishable from chance
    index = (best - random_score) / (best - worst)
    return min(1.0, max(0.0, index))


def classify_chance(index: float, threshold: float = CHANCE_THRESHOLD) -> str:
    return "chance" if index < threshold else "skill"


def _average_ranks(values) -> list[float]:
    order = sorted(range(len(values)), key=lambda i: values[i])
    ranks = [0.0] * len(values)
    i = 0
    while i < len(order):
        j = i
        while j + 1 < len(order) and values[order[j + 1]] == values[order[i]]:
            j += 1
        rank = (i + j) / 2 + 1  # average rank for the tie group
        for k in range(i, j + 1):
            ranks[order[k]] = rank
        i = j + 1
    return ranks


def _family_scores(report: EvaluationReport, name: str) -> list[float]:
    columns = FAMILIES.get(name, (name,))
    out = []
    for v in report.versions:
        cells = [report.cells.get((v, c)) for c in columns]
        if any(c is None for c in cells):
            raise ValueError(f"column {name!r} incomplete at version {v}")
        out.append(sum(cells) / len(cells))
    return out


def similarity(report: EvaluationReport, col_a: str, col_b: str) -> float | None:
    """Spearman rank correlation of two players' per-version scores.

    Family names (Human, PPO, A2C) average their skill levels first. Returns
    None when fewer than three versions or a constant column makes the
    correlation undefined.
    """
    if len(report.versions) < 3:
        return None
    a = _average_ranks(_family_scores(report, col_a))
    b = _average_ranks(_family_scores(report, col_b))
    n = len(a)
    mean_a = sum(a) / n
    mean_b = sum(b) / n
    cov = sum((x - mean_a) * (y - mean_b) for x, y in zip(a, b))
    var_a = sum((x - mean_a) ** 2 for x in a)
    var_b = sum((y - mean_b) ** 2 for y in b)
    if var_a == 0 or var_b == 0:
        return None
    return cov / (var_a * var_b) ** 0.5


@dataclass
class BalanceReport:
    game: str
    curve: DifficultyCurve
    spikes: list[SpikeFinding]
    chances: list[ChanceFinding]
    similarities: dict  # "A|B" -> rho or None
    spike_threshold: float
    chance_threshold: float
    source_id: str

    def to_json(self) -> str:
        payload = {
            "schema_version": SCHEMA_VERSION,
            "game": self.game,
            "source_id": self.source_id,
            "thresholds": {
                "spike": self.spike_threshold,
                "chance": self.chance_threshold,
            },
            "difficulty_curve": self.curve.as_dict(),
            "spikes": [s.as_dict() for s in self.spikes],
            "chance": [c.as_dict() for c in self.chances],
            "similarity": self.similarities,
        }
        return json.dumps(payload, sort_keys=True, separators=(",", ":")) + "\n"

    def to_text(self) -> str:
        lines = [f"Balance summary for {self.game}"]
        lines.append(
            "  difficulty curve: "
            + ", ".join(
                f"v{v}={m:.2f}" for v, m in zip(self.curve.versions, self.curve.means)
            )
        )
        if self.spikes:
            for s in self.spikes:
                lines.append(
                    f"  difficulty spike at v{s.version}: {s.direction}"
                    f" (magnitude {s.magnitude:.3f})"
                )
        else:
            lines.append("  no difficulty spikes")
        chance_versions = [c for c in self.chances if c.classification == "chance"]
        if chance_versions:
            for c in chance_versions:
                lines.append(
                    f"  v{c.version} depends more on chance than skill"
                    f" (index {c.chance_index:.3f})"
                )
        else:
            lines.append("  every version rewards skill over chance")
        defined = {k: v for k, v in self.similarities.items() if v is not None}
        if defined:
            closest = max(defined, key=defined.get)
            lines.append(
                "  similarity to human play: "
                + ", ".join(f"{k.split('|')[1]}={v:.2f}" for k, v in defined.items())
                + f" (closest: {closest.split('|')[1]})"
            )
        lines.append(
            f"  thresholds: spike={self.spike_threshold},"
            f" chance={self.chance_threshold}"
        )
        return "\n".join(lines) + "\n"


def balance_report(
    report: EvaluationReport,
    spike_threshold: float = SPIKE_THRESHOLD,
    chance_threshold: float = CHANCE_THRESHOLD,
) -> BalanceReport:
    if not report.versions or all(v is None for v in report.cells.values()):
        raise ValueError("evaluation report is empty")
    curve = difficulty_curve(report)
    spikes = detect_spikes(curve, spike_threshold)
    chances = []
    for v in report.versions:
        try:
            idx = chance_index(report, v)
        except ValueError:
            continue
        chances.append(
            ChanceFinding(
                version=v,
                chance_index=idx,
                classification=classify_chance(idx, chance_threshold),
            )
        )
    sims = {}
    for family in ("PPO", "A2C", "Random"):
        try:
            sims[f"Human|{family}"] = similarity(report, "Human", family)
        except ValueError:
            sims[f"Human|{family}"] = None
    source = hashlib.sha256(report.to_json().encode()).hexdigest()[:16]
    return BalanceReport(
        game=report.game,
        curve=curve,
        spikes=spikes,
        chances=chances,
        similarities=sims,
        spike_threshold=spike_threshold,
        chance_threshold=chance_threshold,
        source_id=source,
    )
