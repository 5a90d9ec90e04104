"""Wire a RunConfig to concrete backends, providers and the debate engine."""
from __future__ import annotations

from typing import Any, Mapping

from .config import RunConfig
from .errors import ConfigError
from .kg_agent import EntityNameIndex, KgAgent, KgBackend
from .llm.gateway import LlmGateway
from .llm.providers import HttpProvider, Provider, ScriptedProvider
from .orchestrator import DebateEngine
from .rag_agent import RagAgent
from .textindex import Corpus, Embedder, HashingEmbedder, RemoteEmbedder


def make_embedder(spec: Mapping[str, Any] | None) -> Embedder:
    spec = dict(spec or {})
    kind = spec.pop("kind", "hashing")
    if kind == "hashing":
        return HashingEmbedder(int(spec.get("dim", 256)))
    if kind == "remote":
        try:
            return RemoteEmbedder(spec["base_url"], spec["model"], spec.get("api_key_env", "DOM_API_KEY"))
        except KeyError as exc:
            raise ConfigError(f"remote embedder needs {exc}") from exc
    raise ConfigError(f"unknown embedder kind {kind!r}")


def make_provider(spec: Mapping[str, Any] | None) -> Provider:
    spec = dict(spec or {})
    kind = spec.get("kind", "http")
    if kind == "http":
        return HttpProvider(spec.get("base_url"), spec.get("model", "deepseek-chat"),
                            spec.get("api_key_env", "DOM_API_KEY"), timeout=float(spec.get("timeout", 60)))
    if kind == "scripted":
        if "script" in spec:
            return ScriptedProvider(spec["script"])
        return ScriptedProvider.from_file(spec["path"])
    raise ConfigError(f"unknown provider kind {kind!r}")


def make_gateway(provider: Provider, config: RunConfig) -> LlmGateway:
    return LlmGateway(
        provider,
        max_tokens=config.max_tokens,
        exploration_temperature=config.exploration_temperature,
        final_temperature=config.final_temperature,
        cot_inference_temperature=config.cot_inference_temperature,
        attempts=config.llm_attempts,
        retry_delay=config.retry_delay,
    )


def build_engine(
    config: RunConfig,
    kg: KgBackend,
    corpus: Corpus,
    provider: Provider,
    *,
    name_index: EntityNameIndex | None = None,
) -> DebateEngine:
    gateway = make_gateway(provider, config)
    kg_agent = KgAgent(
        kg, gateway, embedder=corpus.embedder, W=config.W, top_k=config.top_k,
        link_k=config.links, describe_limit=config.describe_limit, name_index=name_index,
    )
    rag_agent = RagAgent(corpus, gateway, k_docs=config.docs, chunk_size=config.chunk_size, k_chunks=config.chunks)
    return DebateEngine(kg_agent, rag_agent, gateway, config)
