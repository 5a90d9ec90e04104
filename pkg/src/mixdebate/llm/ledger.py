"""Append-only record of every LLM call and its token/time cost."""
from __future__ import annotations

import threading
from dataclasses import dataclass


@dataclass(frozen=True)
class CallRecord:
    role: str
    caller: str
    prompt_tokens: int
    completion_tokens: int
    wall_time: float
    estimated: bool = False
    call_id: int = -1

    @property
    def total_tokens(self) -> int:
        return self.prompt_tokens + self.completion_tokens


class CostLedger:
    def __init__(self):
        self._records: list[CallRecord] = []
        self._lock = threading.Lock()

    def append(self, record: CallRecord) -> None:
        with self._lock:
            self._records.append(record)

    @property
    def records(self) -> tuple[CallRecord, ...]:
        with self._lock:
            return tuple(self._records)

    def __len__(self) -> int:
        return len(self._records)

    @property
    def prompt_tokens(self) -> int:
        return sum(r.prompt_tokens for r in self.records)

    @property
    def completion_tokens(self) -> int:
        return sum(r.completion_tokens for r in self.records)

    @property
    def total_tokens(self) -> int:
        return self.prompt_tokens + self.completion_tokens

    @property
    def wall_time(self) -> float:
        return sum(r.wall_time for r in self.records)

    def calls_by_role(self) -> dict[str, int]:
        counts: dict[str, int] = {}
        for r in self.records:
            counts[r.role] = counts.get(r.role, 0) + 1
        return counts


def ledger_report(ledger: CostLedger) -> dict:
    """Totals plus a per-role breakdown sorted by token count (largest first)."""
    records = ledger.records
    roles: dict[str, dict] = {}
    for r in records:
        row = roles.setdefault(
            r.role, {"role": r.role, "calls": 0, "prompt_tokens": 0, "completion_tokens": 0,
                     "total_tokens": 0, "wall_time": 0.0}
        )
        row["calls"] += 1
        row["prompt_tokens"] += r.prompt_tokens
        row["completion_tokens"] += r.completion_tokens
        row["total_tokens"] += r.total_tokens
        row["wall_time"] += r.wall_time
    return {
        "total_calls": len(records),
        "prompt_tokens": sum(r.prompt_tokens for r in records),
        "completion_tokens": sum(r.completion_tokens for r in records),
        "total_tokens": sum(r.total_tokens for r in records),
        "wall_time": sum(r.wall_time for r in records),
        "estimated_calls": sum(1 for r in records if r.estimated),
        "by_role": sorted(roles.values(), key=lambda row: (-row["total_tokens"], row["role"])),
    }
