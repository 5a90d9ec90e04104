"""Datasets, IKG preparation, Hits@1 scoring and ratio sweeps."""
from __future__ import annotations

import json
import logging
import re
import string
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from os import PathLike
from typing import Callable, Iterable, Sequence

from .config import RunConfig
from .errors import DatasetError
from .kg.store import KnowledgeGraph, Triple, remove_crucial_triples
from .kg_agent import EntityNameIndex
from .llm.ledger import ledger_report
from .llm.providers import Provider
from .pipeline import build_engine
from .records import TopicRef
from .textindex import Corpus
from .trace import Clock, Recorder, frozen_clock

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class DatasetExample:
    id: str
    question: str
    answers: tuple[str, ...]
    topic_entities: tuple[TopicRef, ...] = ()
    gold_path_triples: tuple[Triple, ...] = ()


def _example(obj, where: str) -> DatasetExample:
    if not isinstance(obj, dict):
        raise DatasetError(f"{where}: record must be a JSON object")
    ex_id = obj.get("id")
    where = f"{where} (id {ex_id!r})"
    if not isinstance(ex_id, (str, int)) or str(ex_id) == "":
        raise DatasetError(f"{where}: missing id")
    question = obj.get("question")
    if not isinstance(question, str) or not question.strip():
        raise DatasetError(f"{where}: missing or empty question")
    answers = obj.get("answers")
    if not isinstance(answers, list) or not answers or not all(isinstance(a, str) and a.strip() for a in answers):
        raise DatasetError(f"{where}: answers must be a non-empty list of strings")
    topics = []
    for te in obj.get("topic_entities", []) or []:
        if not isinstance(te, dict) or not isinstance(te.get("name", ""), str):
            raise DatasetError(f"{where}: topic_entities entries need mid/name")
        mid = te.get("mid")
        name = te.get("name") or mid
        if not name:
            raise DatasetError(f"{where}: topic entity without mid or name")
        topics.append(TopicRef(str(name), str(mid) if mid else None))
    gold = []
    for t in obj.get("gold_path_triples", []) or []:
        if not isinstance(t, list) or len(t) != 3 or not all(isinstance(x, str) and x for x in t):
            raise DatasetError(f"{where}: gold_path_triples entries must be [head, relation, tail]")
        gold.append(Triple(*t))
    return DatasetExample(str(ex_id), question, tuple(answers), tuple(topics), tuple(gold))


def load_dataset(path: str | PathLike) -> list[DatasetExample]:
    examples = []
    seen = set()
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except ValueError as exc:
                raise DatasetError(f"{path}:{line_no}: invalid JSON ({exc})") from exc
            ex = _example(obj, f"{path}:{line_no}")
            if ex.id in seen:
                raise DatasetError(f"{path}:{line_no}: duplicate id {ex.id!r}")
            seen.add(ex.id)
            examples.append(ex)
    return examples


def gold_union(dataset: Iterable[DatasetExample]) -> list[Triple]:
    return sorted({t for ex in dataset for t in ex.gold_path_triples})


def prepare_ikg(
    g: KnowledgeGraph, dataset: Sequence[DatasetExample], ratio: float, seed: int
) -> tuple[KnowledgeGraph, list[Triple]]:
    """Remove ``ratio`` of the dataset-wide gold-path union from ``g`` in one pass."""
    return remove_crucial_triples(g, gold_union(dataset), ratio, seed)


# -- scoring -------------------------------------------------------------------------

_STRIP = string.punctuation + string.whitespace + "“”‘’"


def normalize_answer(text: str) -> str:
    return re.sub(r"\s+", " ", text.lower()).strip(_STRIP)


def hits_at_1(predicted: str, golds: Iterable[str], containment: bool = False) -> bool:
    pred = normalize_answer(predicted)
    for gold in golds:
        g = normalize_answer(gold)
        if pred == g or (containment and g and g in pred):
            return True
    return False


# -- batch runs ------------------------------------------------------------------------

@dataclass
class ExampleVerdict:
    ratio: float
    id: str
    prediction: str
    correct: bool
    mode: str | None
    iterations: int
    calls: int
    tokens: int
    flags: list[str] = field(default_factory=list)
    error: str | None = None


@dataclass
class LevelRow:
    ratio: float
    hits_at_1: float
    total: int
    correct: int
    tokens: int
    wall_time: float
    calls: int
    removed: int


@dataclass
class EvalReport:
    levels: list[LevelRow]
    examples: list[ExampleVerdict]
    config: dict
    seed: int
    traces: list[tuple[float, str, Recorder]] = field(default_factory=list, repr=False)

    @property
    def hits_at_1(self) -> float:
        total = sum(r.total for r in self.levels)
        return sum(r.correct for r in self.levels) / total if total else 0.0

    def to_dict(self) -> dict:
        return {
            "seed": self.seed,
            "config": self.config,
            "levels": [asdict(r) for r in self.levels],
            "examples": [asdict(v) for v in self.examples],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True, ensure_ascii=False) + "\n"

    def write_traces(self, fh) -> None:
        for ratio, ex_id, rec in self.traces:
            rec.write_jsonl(fh, {"ratio": ratio, "example": ex_id})


ProviderFactory = Callable[[DatasetExample, float], Provider]


def run_eval(
    dataset: Sequence[DatasetExample],
    kg: KnowledgeGraph,
    corpus: Corpus,
    config: RunConfig,
    ratios: Sequence[float],
    seed: int,
    provider_factory: ProviderFactory,
    *,
    jobs: int = 1,
    clock: Clock = frozen_clock,
    keep_traces: bool = True,
) -> EvalReport:
    """Degrade the KG afresh for each ratio and run every example against it.

    Pipeline exceptions mark the example incorrect instead of aborting.
    """
    levels, verdicts, traces = [], [], []
    for ratio in ratios:
        degraded, removed = prepare_ikg(kg, dataset, ratio, seed)
        names = EntityNameIndex(degraded, corpus.embedder)

        def one(ex: DatasetExample, ratio=ratio, degraded=degraded, names=names):
            recorder = Recorder(clock=clock)
            try:
                engine = build_engine(config, degraded, corpus, provider_factory(ex, ratio), name_index=names)
                result = engine.run(ex.question, ex.topic_entities or None, recorder)
            except Exception as exc:  # a single broken example must not sink the sweep
                log.warning("example %s failed at ratio %s: %s", ex.id, ratio, exc)
                rep = ledger_report(recorder.ledger)
                return ExampleVerdict(ratio, ex.id, "", False, None, 0, rep["total_calls"],
                                      rep["total_tokens"], error=f"{type(exc).__name__}: {exc}"), recorder
            rep = ledger_report(recorder.ledger)
            final = result.final
            return ExampleVerdict(
                ratio, ex.id, final.text, hits_at_1(final.text, ex.answers, config.containment),
                final.mode, final.iterations_used, rep["total_calls"], rep["total_tokens"], list(final.flags),
            ), recorder

        if jobs > 1:
            with ThreadPoolExecutor(max_workers=jobs) as pool:
                outcomes = list(pool.map(one, dataset))
        else:
            outcomes = [one(ex) for ex in dataset]
        correct = sum(v.correct for v, _ in outcomes)
        levels.append(LevelRow(
            ratio=ratio,
            hits_at_1=correct / len(outcomes) if outcomes else 0.0,
            total=len(outcomes),
            correct=correct,
            tokens=sum(v.tokens for v, _ in outcomes),
            wall_time=sum(rec.ledger.wall_time for _, rec in outcomes),
            calls=sum(v.calls for v, _ in outcomes),
            removed=len(removed),
        ))
        verdicts.extend(v for v, _ in outcomes)
        if keep_traces:
            traces.extend((ratio, v.id, rec) for v, rec in outcomes)
    return EvalReport(levels, verdicts, config.to_dict(), seed, traces)
