"""Types shared by the agents and the orchestrator, and their prompt renderings."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Iterable, Sequence

if TYPE_CHECKING:
    from .kg_agent import KgAgentAnswer
    from .rag_agent import RagAgentAnswer

NO_MEMORY = "(none)"


@dataclass(frozen=True)
class TopicRef:
    """A topic entity mention; ``mid`` is set only when it is already grounded."""

    name: str
    mid: str | None = None


@dataclass(frozen=True)
class MemoryRecord:
    subquestion: str
    kg_answer: "KgAgentAnswer | None"
    rag_answer: "RagAgentAnswer | None"
    judged_answer: str
    topic_entities_out: tuple[str, ...] = field(default_factory=tuple)

    def as_tuple(self) -> list[str | None]:
        return [
            self.subquestion,
            self.kg_answer.answer_text if self.kg_answer else None,
            self.rag_answer.answer_text if self.rag_answer else None,
            self.judged_answer,
        ]


def memory_as_tuples(memory: Sequence[MemoryRecord]) -> list[list[str | None]]:
    """Memory in its ``[[q_i, kg answer, rag answer, judged answer], ...]`` form."""
    return [rec.as_tuple() for rec in memory]


def render_memory(memory: Sequence[MemoryRecord]) -> str:
    if not memory:
        return NO_MEMORY
    blocks = []
    for i, rec in enumerate(memory, start=1):
        q, kg, rag, judged = rec.as_tuple()
        lines = [f"[{i}] Sub-question: {q}"]
        if kg is not None:
            lines.append(f"    Knowledge-graph agent: {kg}")
        if rag is not None:
            lines.append(f"    Text agent: {rag}")
        lines.append(f"    Judged answer: {judged}")
        blocks.append("\n".join(lines))
    return "\n".join(blocks)


def render_lines(lines: Iterable[str], empty: str = NO_MEMORY) -> str:
    lines = list(lines)
    return "\n".join(lines) if lines else empty
