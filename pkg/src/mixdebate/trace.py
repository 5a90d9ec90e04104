"""Run trace and the recorder that pairs LLM-call events with ledger records.

Agents that run concurrently write into child recorders; the orchestrator
merges children in a fixed order so sequence numbers, and therefore the whole
trace, do not depend on thread scheduling.
"""
from __future__ import annotations

import json
import threading
import time
from dataclasses import asdict, dataclass, field, replace
from typing import Any, Callable, TextIO

from .llm.ledger import CallRecord, CostLedger

Clock = Callable[[], float]


def frozen_clock() -> float:
    """Clock for replayable runs: every reading is 0.0."""
    return 0.0


@dataclass(frozen=True)
class TraceEvent:
    seq: int
    timestamp: float
    iteration: int | None
    module: str
    kind: str
    payload: dict[str, Any] = field(default_factory=dict)

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True, ensure_ascii=False)


@dataclass
class _Pending:
    timestamp: float
    iteration: int | None
    module: str
    kind: str
    payload: dict[str, Any]
    record: CallRecord | None


class Recorder:
    def __init__(self, ledger: CostLedger | None = None, clock: Clock = time.perf_counter):
        self.ledger = ledger if ledger is not None else CostLedger()
        self.clock = clock
        self.iteration: int | None = None
        self.events: list[TraceEvent] = []
        self._lock = threading.Lock()
        self._buffer: list[_Pending] | None = None

    def child(self) -> "Recorder":
        """A buffered recorder whose events land here only on ``merge``."""
        sub = Recorder(self.ledger, self.clock)
        sub.iteration = self.iteration
        sub._buffer = []
        return sub

    def emit(self, module: str, kind: str, payload: dict[str, Any] | None = None,
             record: CallRecord | None = None) -> None:
        item = _Pending(self.clock(), self.iteration, module, kind, dict(payload or {}), record)
        if self._buffer is not None:
            self._buffer.append(item)
        else:
            self._commit([item])

    def merge(self, child: "Recorder") -> None:
        pending, child._buffer = child._buffer or [], []
        self._commit(pending)

    def _commit(self, items: list[_Pending]) -> None:
        with self._lock:
            for item in items:
                seq = len(self.events)
                payload = item.payload
                if item.record is not None:
                    record = replace(item.record, call_id=seq)
                    self.ledger.append(record)
                    payload = {**payload, "call_id": seq}
                self.events.append(
                    TraceEvent(seq, item.timestamp, item.iteration, item.module, item.kind, payload)
                )

    def write_jsonl(self, fh: TextIO, extra: dict[str, Any] | None = None) -> None:
        for ev in self.events:
            if extra:
                fh.write(json.dumps({**extra, **asdict(ev)}, sort_keys=True, ensure_ascii=False) + "\n")
            else:
                fh.write(ev.to_json() + "\n")

    def flags(self) -> list[str]:
        return [ev.payload.get("flag") for ev in self.events if ev.kind == "flag"]
