"""Run-file and qrels ingestion, pipeline configuration, report formats.

Run files are standard TREC format, one result per line::

    qid Q0 docid rank score tag

Per query, the rank column must be 1..k without gaps and docids must be
unique. Each ranker declares its score polarity: distance scores d are
converted to similarities 1 / (1 + d) at parse time, so "most similar" sorts
first everywhere downstream.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping

from .errors import ConfigError, DuplicateDoc, MissingRank, ParseError, RankGap
from .evaluation import EvalReport, Qrels
from .model import CollectionRankIndex, ItemId, RankSet, ScoredEntry, ScoredRank
from .retrieval import FusedRank

POLARITY_SIMILARITY = "similarity"
POLARITY_DISTANCE = "distance"
POLARITIES = (POLARITY_SIMILARITY, POLARITY_DISTANCE)


def parse_run_file(
    path: str | Path,
    ranker: str,
    polarity: str = POLARITY_SIMILARITY,
    depth: int | None = None,
) -> dict[ItemId, ScoredRank]:
    """Parse one ranker's TREC run file into per-query ScoredRanks.

    Entries are ordered by the rank column and cut to ``depth`` when given.
    Scores must be finite and non-negative (the model's score codomain).
    """
    path = Path(path)
    if polarity not in POLARITIES:
        raise ConfigError(f"unknown polarity {polarity!r}, expected one of {POLARITIES}")
    rows: dict[ItemId, list[tuple[int, ItemId, float]]] = {}
    seen: dict[ItemId, set[ItemId]] = {}
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            fields = line.split()
            if len(fields) != 6:
                raise ParseError(
                    str(path), line_no, f"expected 6 fields, got {len(fields)}"
                )
            qid, _q0, docid, rank_str, score_str, _tag = fields
            try:
                rank_pos = int(rank_str)
            except ValueError:
                raise ParseError(str(path), line_no, f"bad rank {rank_str!r}") from None
            if rank_pos < 1:
                raise ParseError(str(path), line_no, f"rank must be >= 1, got {rank_pos}")
            try:
                score = float(score_str)
            except ValueError:
                raise ParseError(str(path), line_no, f"bad score {score_str!r}") from None
            if not math.isfinite(score) or score < 0:
                raise ParseError(
                    str(path), line_no, f"score must be finite and >= 0, got {score_str}"
                )
            if polarity == POLARITY_DISTANCE:
                score = 1.0 / (1.0 + score)
            if docid in seen.setdefault(qid, set()):
                raise DuplicateDoc(qid, docid)
            seen[qid].add(docid)
            rows.setdefault(qid, []).append((rank_pos, docid, score))

    runs: dict[ItemId, ScoredRank] = {}
    for qid, entries in rows.items():
        entries.sort(key=lambda row: row[0])
        positions = [row[0] for row in entries]
        if positions != list(range(1, len(entries) + 1)):
            raise RankGap(qid, f"positions {positions[:8]}...")
        scored = tuple(ScoredEntry(docid, score) for _, docid, score in entries)
        if depth is not None:
            scored = scored[:depth]
        runs[qid] = ScoredRank(qid, ranker, scored, depth if depth is not None else len(scored))
    return runs


def write_run_file(
    path: str | Path,
    runs: Mapping[ItemId, FusedRank | ScoredRank],
    tag: str,
) -> None:
    """Write runs as TREC lines, sorted by query then rank position.

    Scores are written in full-precision decimal; fused distance lists are
    emitted as 1 - distance so the score column descends, as TREC consumers
    expect.
    """
    with open(path, "w", encoding="utf-8") as fh:
        for qid in sorted(runs):
            rank = runs[qid]
            if isinstance(rank, FusedRank):
                pairs = [
                    (item, value if rank.higher_is_better else 1.0 - value)
                    for item, value in rank.entries
                ]
            else:
                pairs = [(entry.item, entry.score) for entry in rank.entries]
            for pos, (docid, score) in enumerate(pairs, start=1):
                fh.write(f"{qid} Q0 {docid} {pos} {score!r} {tag}\n")


def parse_qrels(path: str | Path) -> Qrels:
    """Parse whitespace-separated ``qid 0 docid rel`` judgment lines."""
    path = Path(path)
    grades: dict[ItemId, dict[ItemId, int]] = {}
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            fields = line.split()
            if len(fields) != 4:
                raise ParseError(str(path), line_no, f"expected 4 fields, got {len(fields)}")
            qid, _iter, docid, rel_str = fields
            try:
                rel = int(rel_str)
            except ValueError:
                raise ParseError(str(path), line_no, f"bad relevance {rel_str!r}") from None
            if rel < 0:
                raise ParseError(str(path), line_no, f"negative relevance {rel}")
            grades.setdefault(qid, {})[docid] = rel
    if not grades:
        raise ParseError(str(path), 0, "qrels file is empty")
    return Qrels.from_grades(grades)


def parse_class_labels(path: str | Path) -> Qrels:
    """Parse ``docid classlabel`` lines; relevance is same-class membership."""
    path = Path(path)
    labels: dict[ItemId, str] = {}
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            fields = line.split()
            if len(fields) != 2:
                raise ParseError(str(path), line_no, f"expected 2 fields, got {len(fields)}")
            docid, label = fields
            if docid in labels:
                raise ParseError(str(path), line_no, f"duplicate label for {docid!r}")
            labels[docid] = label
    if not labels:
        raise ParseError(str(path), 0, "class-label file is empty")
    return Qrels.from_class_labels(labels)


def write_per_query_metrics(path: str | Path, report: EvalReport) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for qid in sorted(report.per_query):
            fh.write(f"{qid}\t{report.per_query[qid]!r}\n")


def parse_per_query_metrics(path: str | Path) -> dict[ItemId, float]:
    """Parse ``qid value`` lines as written by the eval command."""
    path = Path(path)
    values: dict[ItemId, float] = {}
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            fields = line.split()
            if len(fields) != 2:
                raise ParseError(str(path), line_no, f"expected 2 fields, got {len(fields)}")
            qid, value_str = fields
            try:
                values[qid] = float(value_str)
            except ValueError:
                raise ParseError(str(path), line_no, f"bad value {value_str!r}") from None
    if not values:
        raise ParseError(str(path), 0, "per-query metric file is empty")
    return values


def parse_effectiveness_table(
    path: str | Path,
) -> dict[tuple[str, str], dict[str, float]]:
    """Parse ``dataset config method value`` lines into the winners table."""
    path = Path(path)
    table: dict[tuple[str, str], dict[str, float]] = {}
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            fields = line.split()
            if len(fields) != 4:
                raise ParseError(str(path), line_no, f"expected 4 fields, got {len(fields)}")
            dataset, config, method, value_str = fields
            try:
                value = float(value_str)
            except ValueError:
                raise ParseError(str(path), line_no, f"bad value {value_str!r}") from None
            table.setdefault((dataset, config), {})[method] = value
    if not table:
        raise ParseError(str(path), 0, "effectiveness table is empty")
    return table


def parse_ranker_effectiveness(path: str | Path) -> dict[str, float]:
    """Parse ``ranker value`` lines (per-ranker effectiveness for selection)."""
    path = Path(path)
    values: dict[str, float] = {}
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            fields = line.split()
            if len(fields) != 2:
                raise ParseError(str(path), line_no, f"expected 2 fields, got {len(fields)}")
            ranker, value_str = fields
            try:
                values[ranker] = float(value_str)
            except ValueError:
                raise ParseError(str(path), line_no, f"bad value {value_str!r}") from None
    if not values:
        raise ParseError(str(path), 0, "effectiveness file is empty")
    return values


def write_correlation_matrix(
    path: str | Path, names: list[str], matrix: Mapping[str, Mapping[str, float]]
) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("ranker\t" + "\t".join(names) + "\n")
        for row in names:
            values = "\t".join(f"{matrix[row][col]:.6f}" for col in names)
            fh.write(f"{row}\t{values}\n")


def parse_correlation_matrix(path: str | Path) -> dict[str, dict[str, float]]:
    """Parse the TSV matrix written by the correlate command."""
    path = Path(path)
    with open(path, encoding="utf-8") as fh:
        lines = [line.rstrip("\n") for line in fh if line.strip()]
    if not lines:
        raise ParseError(str(path), 0, "correlation matrix is empty")
    header = lines[0].split("\t")
    if len(header) < 2:
        raise ParseError(str(path), 1, "matrix header needs at least one ranker column")
    names = header[1:]
    matrix: dict[str, dict[str, float]] = {}
    for line_no, line in enumerate(lines[1:], start=2):
        fields = line.split("\t")
        if len(fields) != len(names) + 1:
            raise ParseError(
                str(path), line_no, f"expected {len(names) + 1} fields, got {len(fields)}"
            )
        row = fields[0]
        try:
            matrix[row] = {col: float(v) for col, v in zip(names, fields[1:])}
        except ValueError:
            raise ParseError(str(path), line_no, "bad matrix value") from None
    return matrix


@dataclass(frozen=True)
class RankerSpec:
    name: str
    run: str
    polarity: str = POLARITY_SIMILARITY

    def __post_init__(self):
        if not self.name:
            raise ConfigError("ranker name must be non-empty")
        if self.polarity not in POLARITIES:
            raise ConfigError(
                f"ranker {self.name!r}: polarity must be one of {POLARITIES}, "
                f"got {self.polarity!r}"
            )


@dataclass(frozen=True)
class PipelineConfig:
    """Everything the pipeline commands need; loaded from a JSON file.

    Schema (see README for the full description)::

        {
          "rankers": [{"name": ..., "run": ..., "polarity": "similarity"}, ...],
          "depth": 10,
          "comparator": "WGU",
          "strict": false,
          "exclude_self": false
        }
    """

    rankers: tuple[RankerSpec, ...]
    depth: int = 10
    comparator: str = "WGU"
    strict: bool = False
    exclude_self: bool = False
    selection_strategy: str | None = None

    def __post_init__(self):
        if not self.rankers:
            raise ConfigError("config must declare at least one ranker")
        if self.depth < 1:
            raise ConfigError(f"depth must be >= 1, got {self.depth}")
        if self.comparator not in ("MCS", "WGU"):
            raise ConfigError(f"comparator must be MCS or WGU, got {self.comparator!r}")
        names = [spec.name for spec in self.rankers]
        if len(set(names)) != len(names):
            raise ConfigError("ranker names must be unique")

    @property
    def ranker_names(self) -> tuple[str, ...]:
        return tuple(spec.name for spec in self.rankers)


def load_config(path: str | Path) -> PipelineConfig:
    path = Path(path)
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError("config root must be a JSON object")
    raw_rankers = data.get("rankers")
    if not isinstance(raw_rankers, list):
        raise ConfigError("config needs a 'rankers' list")
    rankers = []
    base = path.parent
    for entry in raw_rankers:
        if not isinstance(entry, dict) or "name" not in entry or "run" not in entry:
            raise ConfigError("each ranker needs 'name' and 'run' fields")
        run_path = entry["run"]
        if not Path(run_path).is_absolute():
            run_path = str(base / run_path)
        rankers.append(
            RankerSpec(
                name=str(entry["name"]),
                run=run_path,
                polarity=str(entry.get("polarity", POLARITY_SIMILARITY)),
            )
        )
    try:
        return PipelineConfig(
            rankers=tuple(rankers),
            depth=int(data.get("depth", 10)),
            comparator=str(data.get("comparator", "WGU")),
            strict=bool(data.get("strict", False)),
            exclude_self=bool(data.get("exclude_self", False)),
            selection_strategy=data.get("selection_strategy"),
        )
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad config value: {exc}") from exc


def load_runs(config: PipelineConfig) -> dict[str, dict[ItemId, ScoredRank]]:
    """Parse every ranker's run file at the configured depth."""
    return {
        spec.name: parse_run_file(spec.run, spec.name, spec.polarity, config.depth)
        for spec in config.rankers
    }


def build_collection_index(config: PipelineConfig) -> CollectionRankIndex:
    return CollectionRankIndex(load_runs(config))


def rank_sets_from_runs(
    runs: Mapping[str, Mapping[ItemId, ScoredRank]],
    ranker_names: tuple[str, ...],
    strict: bool = True,
) -> dict[ItemId, RankSet]:
    """Group per-ranker runs into one RankSet per query.

    In strict mode every ranker must cover every query; in lenient mode a
    query's rank set holds whichever ranks exist (queries with none are
    dropped).
    """
    queries: set[ItemId] = set()
    for name in ranker_names:
        queries.update(runs.get(name, {}))
    out: dict[ItemId, RankSet] = {}
    for qid in sorted(queries):
        ranks = []
        for name in ranker_names:
            rank = runs.get(name, {}).get(qid)
            if rank is None:
                if strict:
                    raise MissingRank(name, qid)
                continue
            ranks.append(rank)
        if ranks:
            out[qid] = RankSet(qid, tuple(ranks))
    return out
