"""Single entry point for every LLM role: render, sample, parse, account."""
from __future__ import annotations

import logging
import string
import time
from dataclasses import replace
from importlib import resources
from typing import Any, Callable, Mapping

from ..errors import ProviderError, SchemaError
from .ledger import CallRecord
from .providers import Completion, LlmRequest, Provider
from .schemas import FORMAT_HINTS, PARSERS, FormatError, LlmRole

log = logging.getLogger(__name__)

Validator = Callable[[Any], None]


def load_templates() -> dict[LlmRole, str]:
    root = resources.files("mixdebate.llm") / "prompts"
    out = {}
    for role in LlmRole:
        text = (root / f"{role.value}.txt").read_text(encoding="utf-8")
        lines = text.splitlines()
        while lines and lines[0].startswith("# version:"):
            lines.pop(0)
        out[role] = "\n".join(lines).strip() + "\n"
    return out


def template_fields(template: str) -> set[str]:
    return {name for _, name, _, _ in string.Formatter().parse(template) if name}


class LlmGateway:
    """Wraps a provider with per-role sampling, retries, parsing and cost records.

    Exploration-stage roles sample at ``exploration_temperature``; the
    verifier and the final-answer CoT call use ``final_temperature``. CoT calls
    made while answering sub-questions use ``cot_inference_temperature``.
    """

    def __init__(
        self,
        provider: Provider,
        *,
        max_tokens: int = 512,
        exploration_temperature: float = 0.4,
        final_temperature: float = 0.0,
        cot_inference_temperature: float | None = None,
        attempts: int = 3,
        retry_delay: float = 0.0,
        templates: Mapping[LlmRole, str] | None = None,
    ):
        self.provider = provider
        self.max_tokens = max_tokens
        self.exploration_temperature = exploration_temperature
        self.final_temperature = final_temperature
        self.cot_inference_temperature = (
            exploration_temperature if cot_inference_temperature is None else cot_inference_temperature
        )
        self.attempts = max(1, attempts)
        self.retry_delay = retry_delay
        self.templates = dict(templates or load_templates())
        missing = [r.value for r in LlmRole if r not in self.templates]
        if missing:
            raise ValueError(f"no prompt template for roles: {missing}")

    def temperature_for(self, role: LlmRole, final: bool = False) -> float:
        if role is LlmRole.VERIFIER:
            return self.final_temperature
        if role is LlmRole.COT:
            return self.final_temperature if final else self.cot_inference_temperature
        return self.exploration_temperature

    def render(self, role: LlmRole, template_vars: Mapping[str, Any]) -> str:
        template = self.templates[role]
        missing = template_fields(template) - set(template_vars)
        if missing:
            raise KeyError(f"{role.value} prompt needs variables {sorted(missing)}")
        return template.format_map({k: str(v) for k, v in template_vars.items()})

    def request(self, role: LlmRole | str, template_vars: Mapping[str, Any], final: bool = False) -> LlmRequest:
        role = LlmRole(role)
        return LlmRequest(role, self.render(role, template_vars), self.temperature_for(role, final),
                          self.max_tokens, final)

    def _complete(self, req: LlmRequest, recorder, caller: str, attempt_kind: str) -> str:
        last: ProviderError | None = None
        for attempt in range(1, self.attempts + 1):
            start = recorder.clock()
            try:
                out: Completion = self.provider.complete(req, caller)
            except ProviderError as exc:
                last = exc
                recorder.emit("llm", "llm_error", {
                    "role": req.role.value, "caller": caller, "attempt": attempt, "error": str(exc),
                })
                if not exc.retriable:
                    break
                if attempt < self.attempts and self.retry_delay:
                    time.sleep(self.retry_delay * attempt)
                continue
            record = CallRecord(req.role.value, caller, out.prompt_tokens, out.completion_tokens,
                                recorder.clock() - start, out.estimated)
            recorder.emit("llm", "llm_call", {
                "role": req.role.value,
                "caller": caller,
                "kind": attempt_kind,
                "temperature": req.temperature,
                "max_tokens": req.max_tokens,
                "prompt": req.rendered_prompt,
                "response": out.text,
                "prompt_tokens": out.prompt_tokens,
                "completion_tokens": out.completion_tokens,
                "estimated": out.estimated,
            }, record=record)
            return out.text
        assert last is not None
        raise ProviderError(f"{req.role.value}: {last}", status=last.status, retriable=False) from last

    def call(
        self,
        role: LlmRole | str,
        template_vars: Mapping[str, Any],
        recorder,
        *,
        caller: str = "",
        final: bool = False,
        validate: Validator | None = None,
    ):
        """Invoke ``role`` and return its parsed output.

        Provider failures are retried up to ``attempts`` times. Output that
        fails to parse or validate earns one reprompt with a format reminder;
        a second failure raises :class:`SchemaError`.
        """
        req = self.request(role, template_vars, final)
        parser = PARSERS[req.role]
        raw = self._complete(req, recorder, caller, "initial")
        try:
            parsed = parser(raw)
            if validate:
                validate(parsed)
            return parsed
        except FormatError as exc:
            reason = str(exc)
        recorder.emit("llm", "parse_failure", {"role": req.role.value, "caller": caller, "reason": reason})
        reminder = (
            f"\n\nYour previous reply could not be used ({reason}). "
            f"Reply again using exactly this format: {FORMAT_HINTS[req.role]}\n"
        )
        raw = self._complete(replace(req, rendered_prompt=req.rendered_prompt + reminder),
                             recorder, caller, "reprompt")
        try:
            parsed = parser(raw)
            if validate:
                validate(parsed)
            return parsed
        except FormatError as exc:
            recorder.emit("llm", "schema_error", {"role": req.role.value, "caller": caller, "reason": str(exc)})
            raise SchemaError(req.role.value, str(exc), raw) from exc
