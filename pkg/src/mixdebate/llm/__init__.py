from .ledger import CallRecord, CostLedger, ledger_report
from .schemas import (
    CotAnswer,
    EntityChoice,
    FormatError,
    JudgeVerdict,
    KgStep,
    LlmRole,
    PlanOutput,
    RelationChoice,
    Sufficiency,
    parse_tags,
)
from .providers import Completion, HttpProvider, LlmRequest, Provider, ScriptedProvider
from .gateway import LlmGateway, load_templates

__all__ = [
    "CallRecord",
    "Completion",
    "CostLedger",
    "CotAnswer",
    "EntityChoice",
    "FormatError",
    "HttpProvider",
    "JudgeVerdict",
    "KgStep",
    "LlmGateway",
    "LlmRequest",
    "LlmRole",
    "PlanOutput",
    "Provider",
    "RelationChoice",
    "ScriptedProvider",
    "Sufficiency",
    "ledger_report",
    "load_templates",
    "parse_tags",
]
