"""Structured-knowledge agent: entity linking and bounded iterative exploration."""
from __future__ import annotations

import logging
import threading
from dataclasses import dataclass, field
from typing import Protocol, Sequence

from .errors import BackendError, EntityNotFound, ProviderError, SchemaError
from .kg.store import RelationNeighborhood, Triple, is_literal
from .llm.gateway import LlmGateway
from .llm.schemas import EntityChoice, FormatError, KgStep, LlmRole, RelationChoice
from .records import MemoryRecord, TopicRef, render_lines, render_memory
from .textindex import Embedder, SimilarityIndex

log = logging.getLogger(__name__)

CALLER = "kg"


class KgBackend(Protocol):
    def one_hop_relations(self, entity: str) -> RelationNeighborhood: ...

    def triples_for(self, entity: str, relations) -> list[Triple]: ...

    def has_entity(self, entity: str) -> bool: ...

    def name_of(self, node: str) -> str: ...

    def entity_names(self) -> list[tuple[str, str]]: ...


@dataclass(frozen=True)
class LinkCandidate:
    entity: str
    name: str
    similarity: float
    description: str


@dataclass
class KgEvidence:
    """Triples gathered for one sub-question, grouped by the topic entity they grew from."""

    paths: dict[str, list[Triple]] = field(default_factory=dict)

    def add(self, root: str, triples: Sequence[Triple]) -> int:
        seen = set(self.triples())
        path = self.paths.setdefault(root, [])
        added = 0
        for t in triples:
            if t not in seen:
                seen.add(t)
                path.append(t)
                added += 1
        return added

    def triples(self) -> list[Triple]:
        out: dict[Triple, None] = {}
        for path in self.paths.values():
            out.update(dict.fromkeys(path))
        return list(out)

    def nodes(self) -> list[str]:
        out: dict[str, None] = {}
        for t in self.triples():
            out[t.head] = None
            if not is_literal(t.tail):
                out[t.tail] = None
        return list(out)

    def root_of(self, entity: str) -> str:
        for root, path in self.paths.items():
            if any(entity in (t.head, t.tail) for t in path):
                return root
        return entity

    def __len__(self) -> int:
        return len(self.triples())

    def __bool__(self) -> bool:
        return any(self.paths.values())


@dataclass(frozen=True)
class KgAgentAnswer:
    answer_text: str
    source: str                         # "kg" | "cot_fallback"
    evidence: KgEvidence
    steps_used: int = 0
    flags: tuple[str, ...] = ()


class EntityNameIndex:
    """Embedding index over entity display names, built on first use and shareable."""

    def __init__(self, backend: KgBackend, embedder: Embedder | None = None):
        self.backend = backend
        self.embedder = embedder
        self._index: SimilarityIndex | None = None
        self._ids: list[str] = []
        self._lock = threading.Lock()

    def _built(self) -> SimilarityIndex:
        with self._lock:
            if self._index is None:
                pairs = self.backend.entity_names()
                self._ids = [e for e, _ in pairs]
                self._index = SimilarityIndex([n for _, n in pairs], self.embedder)
            return self._index

    def search(self, mention: str, k: int) -> list[tuple[str, str, float]]:
        index = self._built()
        if not len(index):
            return []
        return [(self._ids[i], index.candidates[i], score) for i, score in index.search(mention, k)]


def render_triple(t: Triple, name_of) -> str:
    return f"{name_of(t.head)} ({t.head}) —{t.relation}→ {name_of(t.tail)}" + (
        "" if is_literal(t.tail) else f" ({t.tail})"
    )


class KgAgent:
    def __init__(
        self,
        backend: KgBackend,
        gateway: LlmGateway,
        *,
        embedder: Embedder | None = None,
        W: int = 3,
        top_k: int = 3,
        link_k: int = 3,
        describe_limit: int = 5,
        name_index: "EntityNameIndex | None" = None,
    ):
        if W < 1 or top_k < 1 or link_k < 1:
            raise ValueError("W, top_k and link_k must be >= 1")
        self.backend = backend
        self.gateway = gateway
        self.embedder = embedder
        self.W = W
        self.top_k = top_k
        self.link_k = link_k
        self.describe_limit = describe_limit
        self.name_index = name_index or EntityNameIndex(backend, embedder)

    def _render(self, t: Triple) -> str:
        return render_triple(t, self.backend.name_of)

    # -- entity linking -------------------------------------------------------------
    def describe(self, entity: str) -> str:
        hood = self.backend.one_hop_relations(entity)
        facts = self.backend.triples_for(entity, hood.marked())[: self.describe_limit]
        return "; ".join(
            f"{self.backend.name_of(t.head)} —{t.relation}→ {self.backend.name_of(t.tail)}" for t in facts
        ) or "no known facts"

    def candidates(self, mention: str, k: int | None = None) -> list[LinkCandidate]:
        return [
            LinkCandidate(entity, name, score, self.describe(entity))
            for entity, name, score in self.name_index.search(mention, k or self.link_k)
        ]

    def link_entity(self, mention: str, question: str, recorder) -> str | None:
        """Ground ``mention`` to an entity id, or None if the KG has no suitable entity."""
        if not mention.strip():
            raise ValueError("mention must be non-empty")
        cands = self.candidates(mention)
        if not cands:
            recorder.emit(CALLER, "link", {"mention": mention, "candidates": [], "entity": None})
            return None
        by_key = {c.entity: c.entity for c in cands}
        by_key.update({c.entity.lower(): c.entity for c in cands})
        by_key.update({c.name.lower(): c.entity for c in cands})

        def check(choice: EntityChoice) -> None:
            if choice.entity is not None and choice.entity not in by_key and choice.entity.lower() not in by_key:
                raise FormatError(f"{choice.entity!r} is not one of the candidate ids")

        choice = self.gateway.call(
            LlmRole.ENTITY_SELECT,
            {
                "mention": mention,
                "question": question,
                "candidates": "\n".join(f"- {c.entity} | {c.name} | {c.description}" for c in cands),
            },
            recorder,
            caller=CALLER,
            validate=check,
        )
        entity = None
        if choice.entity is not None:
            entity = by_key.get(choice.entity) or by_key[choice.entity.lower()]
        recorder.emit(CALLER, "link", {
            "mention": mention,
            "candidates": [[c.entity, c.name, round(c.similarity, 6)] for c in cands],
            "entity": entity,
        })
        return entity

    # -- exploration ---------------------------------------------------------------------
    def select_relations(self, question: str, entity: str, hood: RelationNeighborhood, recorder) -> list[str]:
        presented = hood.marked()
        if len(presented) <= 1:
            return presented
        allowed = set(presented)

        def check(choice: RelationChoice) -> None:
            if not choice.relations:
                raise FormatError("no relation selected")
            bad = [r for r in choice.relations if r not in allowed]
            if bad:
                raise FormatError(f"relations not offered: {bad}")

        try:
            choice = self.gateway.call(
                LlmRole.RELATION_SELECT,
                {
                    "question": question,
                    "entity": f"{self.backend.name_of(entity)} ({entity})",
                    "relations": "\n".join(f"- {r}" for r in presented),
                    "k": self.top_k,
                },
                recorder,
                caller=CALLER,
                validate=check,
            )
        except SchemaError:
            chosen = sorted(presented)[: self.top_k]
            recorder.emit(CALLER, "flag", {"flag": "relation_fallback", "entity": entity, "relations": chosen})
            return chosen
        return list(dict.fromkeys(choice.relations))[: self.top_k]

    def _resolve_next(self, raw: str, evidence: KgEvidence) -> str | None:
        nodes = evidence.nodes()
        if raw in nodes:
            return raw
        lowered = raw.lower()
        for node in nodes:
            if node.lower() == lowered or self.backend.name_of(node).lower() == lowered:
                return node
        return None

    def explore(self, question: str, topics: Sequence[str], memory: Sequence[MemoryRecord], recorder) -> KgAgentAnswer:
        """Iterate relation selection and triple retrieval from ``topics`` for at most W steps.

        Every topic entity is expanded on the first step and the evidence is
        unioned before a single sufficiency check; later steps follow the one
        entity the model names from the evidence.
        """
        evidence = KgEvidence()
        frontier = [(e, e) for e in dict.fromkeys(topics)]
        memory_text = render_memory(memory)
        for step in range(1, self.W + 1):
            for entity, root in frontier:
                hood = self.backend.one_hop_relations(entity)
                relations = self.select_relations(question, entity, hood, recorder)
                found = self.backend.triples_for(entity, relations) if relations else []
                evidence.paths.setdefault(root, [])
                added = evidence.add(root, found)
                recorder.emit(CALLER, "kg_expand", {
                    "step": step, "entity": entity, "relations": relations, "triples": len(found), "added": added,
                })
            if not evidence:
                return self._fallback(question, memory, recorder, evidence, step, ["no_evidence"])

            def check(out: KgStep) -> None:
                if not out.sufficient and self._resolve_next(out.next_entity or "", evidence) is None:
                    raise FormatError(f"NEXT_ENTITY {out.next_entity!r} does not appear in the facts")

            current = ", ".join(f"{self.backend.name_of(e)} ({e})" for e, _ in frontier)
            try:
                out = self.gateway.call(
                    LlmRole.KG_INFERENCE,
                    {
                        "question": question,
                        "entity": current,
                        "evidence": render_lines(self._render(t) for t in evidence.triples()),
                        "memory": memory_text,
                    },
                    recorder,
                    caller=CALLER,
                    validate=check,
                )
            except SchemaError:
                return self._fallback(question, memory, recorder, evidence, step, ["next_entity_invalid"])
            if out.sufficient:
                recorder.emit(CALLER, "kg_answer", {"step": step, "answer": out.answer})
                return KgAgentAnswer(out.answer, "kg", evidence, step)
            nxt = self._resolve_next(out.next_entity, evidence)
            recorder.emit(CALLER, "kg_next", {"step": step, "entity": nxt})
            frontier = [(nxt, evidence.root_of(nxt))]
        return self._fallback(question, memory, recorder, evidence, self.W, ["depth_exhausted"])

    def _fallback(self, question, memory, recorder, evidence, steps, flags) -> KgAgentAnswer:
        flags = list(flags)
        for f in flags:
            recorder.emit(CALLER, "flag", {"flag": f})
        try:
            out = self.gateway.call(
                LlmRole.COT, {"question": question, "memory": render_memory(memory)}, recorder, caller=CALLER
            )
            answer = out.answer
        except (ProviderError, SchemaError) as exc:
            recorder.emit(CALLER, "flag", {"flag": "cot_failed", "error": str(exc)})
            flags.append("cot_failed")
            answer = ""
        return KgAgentAnswer(answer, "cot_fallback", evidence, steps, tuple(flags))

    def answer_subquestion(
        self, question: str, topics: Sequence[TopicRef | str], memory: Sequence[MemoryRecord], recorder
    ) -> KgAgentAnswer:
        """Link the topic mentions and explore; every failure degrades to CoT."""
        linked: list[str] = []
        try:
            for topic in topics:
                ref = topic if isinstance(topic, TopicRef) else TopicRef(str(topic))
                if ref.mid and self.backend.has_entity(ref.mid):
                    entity = ref.mid
                elif ref.name.strip():
                    entity = self.link_entity(ref.name, question, recorder)
                else:
                    entity = None
                if entity is not None and entity not in linked:
                    linked.append(entity)
            if not linked:
                return self._fallback(question, memory, recorder, KgEvidence(), 0, ["entity_missing"])
            return self.explore(question, linked, memory, recorder)
        except SchemaError as exc:
            recorder.emit(CALLER, "error", {"error": str(exc)})
            return self._fallback(question, memory, recorder, KgEvidence(), 0, ["link_schema_error"])
        except (BackendError, EntityNotFound) as exc:
            recorder.emit(CALLER, "error", {"error": str(exc)})
            return self._fallback(question, memory, recorder, KgEvidence(), 0, ["backend_error"])
