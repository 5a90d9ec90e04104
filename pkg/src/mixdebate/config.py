"""Run configuration with the published parameter defaults."""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields
from os import PathLike
from typing import Any

from .errors import ConfigError

AGENT_MODES = ("dual", "kg", "rag")


@dataclass
class RunConfig:
    W: int = 3                  # KG exploration depth per sub-question
    I: int = 6                  # sub-question iterations
    top_k: int = 3
    chunk_size: int = 500
    max_tokens: int = 512
    exploration_temperature: float = 0.4
    final_temperature: float = 0.0
    cot_inference_temperature: float = 0.4
    link_k: int | None = None   # entity-linking candidates; None -> top_k
    k_docs: int | None = None
    k_chunks: int | None = None
    describe_limit: int = 5
    agents: str = "dual"
    parallel_agents: bool = True
    llm_attempts: int = 3
    retry_delay: float = 0.0
    containment: bool = False
    seed: int = 0
    provider: dict[str, Any] = field(default_factory=dict)
    embedder: dict[str, Any] = field(default_factory=lambda: {"kind": "hashing", "dim": 256})
    sparql: dict[str, Any] | None = None

    def __post_init__(self):
        self.validate()

    @property
    def links(self) -> int:
        return self.link_k or self.top_k

    @property
    def docs(self) -> int:
        return self.k_docs or self.top_k

    @property
    def chunks(self) -> int:
        return self.k_chunks or self.top_k

    def validate(self) -> None:
        for name in ("W", "I", "top_k", "chunk_size", "max_tokens", "describe_limit", "llm_attempts"):
            value = getattr(self, name)
            if not isinstance(value, int) or isinstance(value, bool) or value < 1:
                raise ConfigError(f"{name} must be an integer >= 1, got {value!r}")
        for name in ("link_k", "k_docs", "k_chunks"):
            value = getattr(self, name)
            if value is not None and (not isinstance(value, int) or value < 1):
                raise ConfigError(f"{name} must be an integer >= 1, got {value!r}")
        for name in ("exploration_temperature", "final_temperature", "cot_inference_temperature"):
            value = getattr(self, name)
            if not isinstance(value, (int, float)) or not 0 <= value <= 2:
                raise ConfigError(f"{name} must lie in [0, 2], got {value!r}")
        if self.agents not in AGENT_MODES:
            raise ConfigError(f"agents must be one of {AGENT_MODES}, got {self.agents!r}")

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "RunConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        try:
            return cls(**data)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc


def load_config(path: str | PathLike | None) -> RunConfig:
    if path is None:
        return RunConfig()
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except (OSError, ValueError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError("config file must hold a JSON object")
    return RunConfig.from_dict(data)
