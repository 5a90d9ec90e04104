"""Line-tagged output formats for each LLM role and their parsers.

Every reply is scanned for ``TAG: value`` lines; anything else (reasoning,
prose) is ignored. A parser raises :class:`FormatError` when a required tag
is missing or malformed, which triggers the gateway's single reprompt.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from enum import Enum


class LlmRole(str, Enum):
    PLAN = "plan"
    ENTITY_SELECT = "entity_select"
    RELATION_SELECT = "relation_select"
    KG_INFERENCE = "kg_inference"
    RAG_INFERENCE = "rag_inference"
    JUDGE = "judge"
    VERIFIER = "verifier"
    COT = "cot"


class FormatError(ValueError):
    pass


_TAG = re.compile(r"^\s*[*#>\-]*\s*([A-Za-z_]+)(?:\s+\d+)?\s*[*]*\s*:\s*(.*?)\s*$")
NONE_WORDS = {"", "none", "null", "n/a", "-"}


def parse_tags(text: str) -> dict[str, list[str]]:
    tags: dict[str, list[str]] = {}
    for line in text.splitlines():
        m = _TAG.match(line)
        if m:
            tags.setdefault(m.group(1).upper(), []).append(m.group(2).strip("*").strip())
    return tags


def _one(tags: dict[str, list[str]], tag: str) -> str:
    values = tags.get(tag)
    if not values:
        raise FormatError(f"missing {tag}: line")
    return values[-1]


def _flag(tags: dict[str, list[str]], tag: str, default: bool | None = None) -> bool:
    if tag not in tags:
        if default is None:
            raise FormatError(f"missing {tag}: line")
        return default
    word = _one(tags, tag).lower().split(" ")[0].rstrip(".,")
    if word in ("yes", "true", "y"):
        return True
    if word in ("no", "false", "n"):
        return False
    raise FormatError(f"{tag} must be yes or no, got {_one(tags, tag)!r}")


def _answer(tags: dict[str, list[str]]) -> str:
    value = _one(tags, "ANSWER")
    if not value:
        raise FormatError("empty ANSWER: line")
    return value


def split_list(value: str) -> list[str]:
    items = [v.strip().strip('"').strip() for v in value.split(",")]
    return [v for v in items if v.lower() not in NONE_WORDS]


@dataclass(frozen=True)
class PlanOutput:
    subquestions: list[str]
    entities: list[str] = field(default_factory=list)


@dataclass(frozen=True)
class EntityChoice:
    entity: str | None


@dataclass(frozen=True)
class RelationChoice:
    relations: list[str]


@dataclass(frozen=True)
class KgStep:
    sufficient: bool
    answer: str | None = None
    next_entity: str | None = None


@dataclass(frozen=True)
class Sufficiency:
    sufficient: bool
    answer: str | None = None


@dataclass(frozen=True)
class JudgeVerdict:
    answer: str
    entities: list[str] = field(default_factory=list)
    next_subquestion: str | None = None
    done: bool = False

    def __post_init__(self):
        if self.done and self.next_subquestion is not None:
            object.__setattr__(self, "next_subquestion", None)


@dataclass(frozen=True)
class CotAnswer:
    answer: str


def parse_plan(text: str) -> PlanOutput:
    tags = parse_tags(text)
    subs = [s for s in tags.get("SUBQUESTION", []) if s.lower() not in NONE_WORDS]
    entities = split_list(tags["ENTITIES"][-1]) if "ENTITIES" in tags else []
    return PlanOutput(subs, entities)


def parse_entity_select(text: str) -> EntityChoice:
    value = _one(parse_tags(text), "ENTITY").strip("<>").strip()
    return EntityChoice(None if value.lower() in NONE_WORDS | {"none suitable"} else value)


def parse_relation_select(text: str) -> RelationChoice:
    return RelationChoice(split_list(_one(parse_tags(text), "RELATIONS")))


def parse_kg_inference(text: str) -> KgStep:
    tags = parse_tags(text)
    if _flag(tags, "SUFFICIENT"):
        return KgStep(True, answer=_answer(tags))
    nxt = _one(tags, "NEXT_ENTITY").strip("<>").strip()
    if nxt.lower() in NONE_WORDS:
        raise FormatError("NEXT_ENTITY must name an entity when SUFFICIENT is no")
    return KgStep(False, next_entity=nxt)


def parse_sufficiency(text: str) -> Sufficiency:
    tags = parse_tags(text)
    if _flag(tags, "SUFFICIENT"):
        return Sufficiency(True, _answer(tags))
    return Sufficiency(False)


def parse_judge(text: str) -> JudgeVerdict:
    tags = parse_tags(text)
    nxt = tags.get("NEXT_SUBQUESTION", [""])[-1]
    return JudgeVerdict(
        answer=_answer(tags),
        entities=split_list(tags["ENTITIES"][-1]) if "ENTITIES" in tags else [],
        next_subquestion=None if nxt.lower() in NONE_WORDS else nxt,
        done=_flag(tags, "DONE", default=False),
    )


def parse_cot(text: str) -> CotAnswer:
    return CotAnswer(_answer(parse_tags(text)))


PARSERS = {
    LlmRole.PLAN: parse_plan,
    LlmRole.ENTITY_SELECT: parse_entity_select,
    LlmRole.RELATION_SELECT: parse_relation_select,
    LlmRole.KG_INFERENCE: parse_kg_inference,
    LlmRole.RAG_INFERENCE: parse_sufficiency,
    LlmRole.JUDGE: parse_judge,
    LlmRole.VERIFIER: parse_sufficiency,
    LlmRole.COT: parse_cot,
}

FORMAT_HINTS = {
    LlmRole.PLAN: "SUBQUESTION: <sub-question> (one line each), optionally ENTITIES: <a>, <b>",
    LlmRole.ENTITY_SELECT: "ENTITY: <candidate id or none>",
    LlmRole.RELATION_SELECT: "RELATIONS: <relation>, <relation> using only listed names",
    LlmRole.KG_INFERENCE: "SUFFICIENT: yes + ANSWER: <answer>, or SUFFICIENT: no + NEXT_ENTITY: <id from the facts>",
    LlmRole.RAG_INFERENCE: "SUFFICIENT: yes + ANSWER: <answer>, or SUFFICIENT: no",
    LlmRole.JUDGE: "ANSWER:, ENTITIES:, NEXT_SUBQUESTION:, DONE: yes|no",
    LlmRole.VERIFIER: "SUFFICIENT: yes + ANSWER: <answer>, or SUFFICIENT: no",
    LlmRole.COT: "ANSWER: <answer>",
}
