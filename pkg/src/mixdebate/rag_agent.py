"""Unstructured-knowledge agent: retrieve articles by topic, rank chunks, answer."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

from .errors import BackendError, ProviderError, SchemaError
from .llm.gateway import LlmGateway
from .llm.schemas import LlmRole
from .records import MemoryRecord, TopicRef, render_memory
from .textindex import Chunk, Corpus, SimilarityIndex, chunk

CALLER = "rag"


@dataclass(frozen=True)
class ChunkSet:
    scored: list[tuple[Chunk, float]] = field(default_factory=list)
    selected: list[Chunk] = field(default_factory=list)

    def __bool__(self) -> bool:
        return bool(self.selected)


@dataclass(frozen=True)
class RagAgentAnswer:
    answer_text: str
    source: str                         # "rag" | "cot_fallback"
    context: ChunkSet
    flags: tuple[str, ...] = ()


def _mention(topic: TopicRef | str) -> str:
    return topic.name if isinstance(topic, TopicRef) else str(topic)


class RagAgent:
    def __init__(
        self,
        corpus: Corpus,
        gateway: LlmGateway,
        *,
        k_docs: int = 3,
        chunk_size: int = 500,
        k_chunks: int = 3,
    ):
        self.corpus = corpus
        self.gateway = gateway
        self.k_docs = k_docs
        self.chunk_size = chunk_size
        self.k_chunks = k_chunks

    def gather_context(self, topics: Sequence[TopicRef | str] | str, question: str) -> ChunkSet:
        """Pool the chunks of each topic's best-matching articles, keep the top ``k_chunks``."""
        if isinstance(topics, str):
            topics = [topics]
        docs = {}
        for topic in topics:
            name = _mention(topic)
            if name.strip():
                for doc in self.corpus.retrieve_documents(name, self.k_docs):
                    docs.setdefault(doc.doc_id, doc)
        pool = [c for doc in docs.values() for c in chunk(doc, self.chunk_size)]
        if not pool:
            return ChunkSet()
        ranked = SimilarityIndex([c.text for c in pool], self.corpus.embedder).search(question, len(pool))
        scored = [(pool[i], score) for i, score in ranked]
        return ChunkSet(scored, [c for c, _ in scored[: self.k_chunks]])

    def _fallback(self, question, memory, recorder, context, flags) -> RagAgentAnswer:
        flags = list(flags)
        for f in flags:
            recorder.emit(CALLER, "flag", {"flag": f})
        try:
            answer = self.gateway.call(
                LlmRole.COT, {"question": question, "memory": render_memory(memory)}, recorder, caller=CALLER
            ).answer
        except (ProviderError, SchemaError) as exc:
            recorder.emit(CALLER, "flag", {"flag": "cot_failed", "error": str(exc)})
            flags.append("cot_failed")
            answer = ""
        return RagAgentAnswer(answer, "cot_fallback", context, tuple(flags))

    def answer_subquestion(
        self, question: str, topics: Sequence[TopicRef | str], memory: Sequence[MemoryRecord], recorder
    ) -> RagAgentAnswer:
        try:
            context = self.gather_context(topics, question)
        except BackendError as exc:
            recorder.emit(CALLER, "error", {"error": str(exc)})
            return self._fallback(question, memory, recorder, ChunkSet(), ["backend_error"])
        recorder.emit(CALLER, "rag_context", {
            "selected": [[c.doc_id, c.ordinal] for c in context.selected],
            "scores": [round(s, 6) for _, s in context.scored[: len(context.selected)]],
        })
        if not context:
            return self._fallback(question, memory, recorder, context, ["no_context"])
        passages = "\n\n".join(f"[{c.doc_id}#{c.ordinal}] {c.text}" for c in context.selected)
        try:
            out = self.gateway.call(
                LlmRole.RAG_INFERENCE,
                {"question": question, "context": passages, "memory": render_memory(memory)},
                recorder,
                caller=CALLER,
            )
        except SchemaError:
            return self._fallback(question, memory, recorder, context, ["rag_schema_error"])
        except ProviderError as exc:
            recorder.emit(CALLER, "error", {"error": str(exc)})
            return self._fallback(question, memory, recorder, context, ["provider_error"])
        if not out.sufficient:
            return self._fallback(question, memory, recorder, context, ["insufficient_context"])
        recorder.emit(CALLER, "rag_answer", {"answer": out.answer})
        return RagAgentAnswer(out.answer, "rag", context)
