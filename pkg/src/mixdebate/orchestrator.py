"""Plan, debate per sub-question, and finalize from memory."""
from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

from .config import RunConfig
from .errors import ProviderError, SchemaError
from .kg_agent import KgAgent, KgAgentAnswer
from .llm.gateway import LlmGateway
from .llm.ledger import CostLedger
from .llm.schemas import JudgeVerdict, LlmRole
from .rag_agent import RagAgent, RagAgentAnswer
from .records import NO_MEMORY, MemoryRecord, TopicRef, memory_as_tuples, render_lines, render_memory
from .trace import Recorder

log = logging.getLogger(__name__)

CALLER = "orchestrator"
PENDING, ANSWERED, REVISED = "pending", "answered", "revised"


@dataclass
class SubQuestion:
    text: str
    status: str = PENDING


@dataclass
class QuestionPlan:
    original: str
    subquestions: list[SubQuestion] = field(default_factory=list)
    entities: list[str] = field(default_factory=list)

    def texts(self) -> list[str]:
        return [s.text for s in self.subquestions]


@dataclass(frozen=True)
class FinalAnswer:
    text: str
    mode: str                           # "verified" | "cot"
    iterations_used: int
    flags: tuple[str, ...] = ()

    @property
    def failed(self) -> bool:
        return "cot_failed" in self.flags


@dataclass
class RunResult:
    final: FinalAnswer
    memory: list[MemoryRecord]
    plan: QuestionPlan
    recorder: Recorder

    @property
    def ledger(self) -> CostLedger:
        return self.recorder.ledger

    def memory_tuples(self) -> list[list[str | None]]:
        return memory_as_tuples(self.memory)


def _kg_summary(ans: KgAgentAnswer | None, name_of) -> str:
    if ans is None:
        return NO_MEMORY
    from .kg_agent import render_triple

    return render_lines(render_triple(t, name_of) for t in ans.evidence.triples())


def _rag_summary(ans: RagAgentAnswer | None) -> str:
    if ans is None:
        return NO_MEMORY
    return render_lines(f"[{c.doc_id}#{c.ordinal}] {c.text}" for c in ans.context.selected)


class DebateEngine:
    def __init__(
        self,
        kg_agent: KgAgent | None,
        rag_agent: RagAgent | None,
        gateway: LlmGateway,
        config: RunConfig | None = None,
    ):
        self.config = config or RunConfig()
        mode = self.config.agents
        if mode in ("dual", "kg") and kg_agent is None:
            raise ValueError(f"agents={mode!r} needs a KG agent")
        if mode in ("dual", "rag") and rag_agent is None:
            raise ValueError(f"agents={mode!r} needs a RAG agent")
        self.kg_agent = kg_agent if mode in ("dual", "kg") else None
        self.rag_agent = rag_agent if mode in ("dual", "rag") else None
        self.gateway = gateway

    # -- phase 1 ---------------------------------------------------------------------
    def plan(self, question: str, recorder: Recorder) -> QuestionPlan:
        if not question.strip():
            raise ValueError("question must be non-empty")
        flags = []
        try:
            out = self.gateway.call(LlmRole.PLAN, {"question": question}, recorder, caller=CALLER)
            subs, entities = out.subquestions, out.entities
        except (SchemaError, ProviderError) as exc:
            subs, entities = [], []
            flags.append("plan_failed")
            recorder.emit(CALLER, "flag", {"flag": "plan_failed", "error": str(exc)})
        if not subs:
            subs = [question]
        if len(subs) > self.config.I:
            recorder.emit(CALLER, "flag", {"flag": "plan_truncated", "planned": len(subs)})
            subs = subs[: self.config.I]
        plan = QuestionPlan(question, [SubQuestion(s) for s in subs], entities)
        recorder.emit(CALLER, "plan", {"subquestions": plan.texts(), "entities": entities})
        return plan

    # -- phase 2 ---------------------------------------------------------------------
    def _run_agents(self, sub: str, topics, memory, recorder):
        kg_rec, rag_rec = recorder.child(), recorder.child()
        jobs = []
        if self.kg_agent is not None:
            jobs.append((self.kg_agent, kg_rec))
        if self.rag_agent is not None:
            jobs.append((self.rag_agent, rag_rec))
        snapshot = list(memory)
        if self.config.parallel_agents and len(jobs) > 1:
            with ThreadPoolExecutor(max_workers=len(jobs)) as pool:
                futures = [pool.submit(a.answer_subquestion, sub, topics, snapshot, r) for a, r in jobs]
                answers = [f.result() for f in futures]
        else:
            answers = [a.answer_subquestion(sub, topics, snapshot, r) for a, r in jobs]
        recorder.merge(kg_rec)
        recorder.merge(rag_rec)
        kg_ans = answers[0] if self.kg_agent is not None else None
        rag_ans = answers[-1] if self.rag_agent is not None else None
        return kg_ans, rag_ans

    def judge(
        self,
        question: str,
        subquestion: str,
        next_subquestion: str | None,
        kg_ans: KgAgentAnswer | None,
        rag_ans: RagAgentAnswer | None,
        memory: Sequence[MemoryRecord],
        recorder: Recorder,
    ) -> JudgeVerdict:
        """Arbitrate the two agent answers; single-agent modes pass the answer through."""
        if kg_ans is None or rag_ans is None:
            only = kg_ans or rag_ans
            return JudgeVerdict(only.answer_text if only else "", [], None, next_subquestion is None)
        name_of = self.kg_agent.backend.name_of
        try:
            return self.gateway.call(
                LlmRole.JUDGE,
                {
                    "question": question,
                    "subquestion": subquestion,
                    "next_subquestion": next_subquestion or "none",
                    "kg_answer": kg_ans.answer_text,
                    "kg_source": "from graph facts" if kg_ans.source == "kg" else "from model knowledge",
                    "kg_evidence": _kg_summary(kg_ans, name_of),
                    "rag_answer": rag_ans.answer_text,
                    "rag_source": "from passages" if rag_ans.source == "rag" else "from model knowledge",
                    "rag_evidence": _rag_summary(rag_ans),
                    "memory": render_memory(memory),
                },
                recorder,
                caller=CALLER,
            )
        except (SchemaError, ProviderError) as exc:
            recorder.emit(CALLER, "flag", {"flag": "judge_failed", "error": str(exc)})
            answer = kg_ans.answer_text if kg_ans.source == "kg" else rag_ans.answer_text
            return JudgeVerdict(answer, [], None, next_subquestion is None)

    # -- phase 3 ---------------------------------------------------------------------
    def finalize(self, question: str, memory: Sequence[MemoryRecord], recorder: Recorder) -> FinalAnswer:
        flags = []
        iterations = len(memory)
        try:
            verdict = self.gateway.call(
                LlmRole.VERIFIER, {"question": question, "memory": render_memory(memory)},
                recorder, caller="final", final=True,
            )
            if verdict.sufficient:
                recorder.emit(CALLER, "final", {"mode": "verified", "answer": verdict.answer})
                return FinalAnswer(verdict.answer, "verified", iterations)
        except (SchemaError, ProviderError) as exc:
            flags.append("verifier_failed")
            recorder.emit(CALLER, "flag", {"flag": "verifier_failed", "error": str(exc)})
        try:
            text = self.gateway.call(
                LlmRole.COT, {"question": question, "memory": NO_MEMORY},
                recorder, caller="final", final=True,
            ).answer
        except (SchemaError, ProviderError) as exc:
            flags.append("cot_failed")
            recorder.emit(CALLER, "flag", {"flag": "cot_failed", "error": str(exc)})
            text = ""
        recorder.emit(CALLER, "final", {"mode": "cot", "answer": text})
        return FinalAnswer(text, "cot", iterations, tuple(flags))

    # -- driver ------------------------------------------------------------------------
    def run(
        self,
        question: str,
        topic_entities: Sequence[TopicRef] | None = None,
        recorder: Recorder | None = None,
    ) -> RunResult:
        recorder = recorder or Recorder()
        recorder.iteration = 0
        plan = self.plan(question, recorder)
        topics = list(topic_entities) if topic_entities else [TopicRef(n) for n in plan.entities]
        memory: list[MemoryRecord] = []
        limit = self.config.I
        i = 0
        while i < limit and i < len(plan.subquestions):
            recorder.iteration = i + 1
            sub = plan.subquestions[i]
            recorder.emit(CALLER, "iteration", {"subquestion": sub.text, "topics": [t.name for t in topics]})
            kg_ans, rag_ans = self._run_agents(sub.text, topics, memory, recorder)
            nxt = plan.subquestions[i + 1] if i + 1 < len(plan.subquestions) else None
            verdict = self.judge(question, sub.text, nxt.text if nxt else None, kg_ans, rag_ans, memory, recorder)
            sub.status = ANSWERED
            if not verdict.done and verdict.next_subquestion:
                if nxt is not None:
                    if verdict.next_subquestion != nxt.text:
                        nxt.text, nxt.status = verdict.next_subquestion, REVISED
                elif len(plan.subquestions) < limit:
                    plan.subquestions.append(SubQuestion(verdict.next_subquestion))
            entities_out = tuple(verdict.entities) or ((verdict.answer,) if verdict.answer else ())
            memory.append(MemoryRecord(sub.text, kg_ans, rag_ans, verdict.answer, entities_out))
            recorder.emit(CALLER, "judge", {
                "answer": verdict.answer,
                "entities": list(entities_out),
                "next_subquestion": verdict.next_subquestion,
                "done": verdict.done,
                "kg_source": kg_ans.source if kg_ans else None,
                "rag_source": rag_ans.source if rag_ans else None,
            })
            topics = [TopicRef(n) for n in entities_out]
            i += 1
            if verdict.done:
                break
        recorder.iteration = None
        final = self.finalize(question, memory, recorder)
        return RunResult(final, memory, plan, recorder)
