"""Mixed-knowledge debate QA over incomplete knowledge graphs.

A KG agent and a text-retrieval agent answer each sub-question in parallel;
a judge reconciles them, and a verifier produces the final answer from the
accumulated memory.
"""
from .config import RunConfig, load_config
from .errors import (
    BackendError,
    ConfigError,
    DatasetError,
    EntityNotFound,
    IntegrityError,
    KgParseError,
    ProviderError,
    SchemaError,
    ScriptExhausted,
)
from .evaluation import DatasetExample, EvalReport, hits_at_1, load_dataset, prepare_ikg, run_eval
from .kg import KnowledgeGraph, RelationNeighborhood, SparqlBackend, Triple, load_kg, remove_crucial_triples
from .kg_agent import KgAgent, KgAgentAnswer, KgEvidence, LinkCandidate
from .llm import CostLedger, HttpProvider, LlmGateway, LlmRole, ScriptedProvider, ledger_report
from .orchestrator import DebateEngine, FinalAnswer, QuestionPlan, RunResult, SubQuestion
from .pipeline import build_engine
from .rag_agent import ChunkSet, RagAgent, RagAgentAnswer
from .records import MemoryRecord, TopicRef, memory_as_tuples
from .textindex import Chunk, Corpus, Document, HashingEmbedder, chunk, load_corpus, top_k_similar
from .trace import Recorder, TraceEvent

__version__ = "0.1.0"

__all__ = [
    "BackendError",
    "build_engine",
    "Chunk",
    "chunk",
    "ChunkSet",
    "ConfigError",
    "Corpus",
    "CostLedger",
    "DatasetError",
    "DatasetExample",
    "DebateEngine",
    "Document",
    "EntityNotFound",
    "EvalReport",
    "FinalAnswer",
    "HashingEmbedder",
    "hits_at_1",
    "HttpProvider",
    "IntegrityError",
    "KgAgent",
    "KgAgentAnswer",
    "KgEvidence",
    "KgParseError",
    "KnowledgeGraph",
    "ledger_report",
    "LinkCandidate",
    "LlmGateway",
    "LlmRole",
    "load_config",
    "load_corpus",
    "load_dataset",
    "load_kg",
    "memory_as_tuples",
    "MemoryRecord",
    "prepare_ikg",
    "ProviderError",
    "QuestionPlan",
    "RagAgent",
    "RagAgentAnswer",
    "Recorder",
    "RelationNeighborhood",
    "remove_crucial_triples",
    "run_eval",
    "RunConfig",
    "RunResult",
    "SchemaError",
    "ScriptedProvider",
    "ScriptExhausted",
    "SparqlBackend",
    "SubQuestion",
    "top_k_similar",
    "TopicRef",
    "TraceEvent",
    "Triple",
]

