"""Language model clients.

ScriptedLlm is an offline stand-in driven by a rule file: a two-column
CSV mapping a regular expression over the inquiry text to a fixed
completion. It recognizes answer prompts by their instruction header
and echoes the context block back, which keeps every downstream
behavior testable without a network.

RemoteLlm talks to an HTTP chat endpoint. Credentials come in via the
constructor; the service layer reads them from an environment variable
named in its config file, never from the config value itself.
"""

from __future__ import annotations

import csv
import io
import re
from dataclasses import dataclass
from pathlib import Path
from typing import IO, Protocol

import requests

from .errors import CsvParseError, LlmUnavailableError
from .prompts import ANSWER_INSTRUCTION, CONTEXT_HEADER, QUESTION_HEADER

MOCK_SCRIPT_HEADER = ("pattern", "completion")


class LlmClient(Protocol):
    kind: str

    def complete(self, prompt: str) -> str: ...


@dataclass(frozen=True)
class ScriptRule:
    pattern: re.Pattern
    completion: str


def load_script_rules(source: str | Path | IO[str]) -> tuple[ScriptRule, ...]:
    """Load mock rules from a pattern,completion CSV."""
    if isinstance(source, (str, Path)):
        handle: IO[str] = open(source, "r", encoding="utf-8", newline="")
        close = True
    else:
        handle = source
        close = False
    try:
        rows = csv.reader(handle)
        try:
            header = next(iter(rows))
        except StopIteration:
            raise CsvParseError("missing header row", 0) from None
        if tuple(cell.strip() for cell in header) != MOCK_SCRIPT_HEADER:
            raise CsvParseError("header must be exactly pattern,completion", 0)
        rules = []
        for index, row in enumerate(rows, start=1):
            if not row or all(not cell.strip() for cell in row):
                continue
            if len(row) != 2:
                raise CsvParseError(f"expected 2 columns, got {len(row)}", index)
            try:
                pattern = re.compile(row[0])
            except re.error as exc:
                raise CsvParseError(f"bad pattern {row[0]!r}: {exc}", index) from None
            rules.append(ScriptRule(pattern=pattern, completion=row[1]))
        return tuple(rules)
    finally:
        if close:
            handle.close()


class ScriptedLlm:
    """Deterministic scripted client. Records every prompt it sees."""

    kind = "scripted"

    def __init__(self, rules: tuple[ScriptRule, ...] = ()):
        self.rules = tuple(rules)
        self.calls: list[str] = []

    @classmethod
    def from_file(cls, path: str | Path) -> "ScriptedLlm":
        return cls(load_script_rules(path))

    @classmethod
    def from_text(cls, text: str) -> "ScriptedLlm":
        return cls(load_script_rules(io.StringIO(text)))

    def complete(self, prompt: str) -> str:
        self.calls.append(prompt)
        if prompt.startswith(ANSWER_INSTRUCTION):
            return "Based on the context: " + _context_block(prompt)
        # Query-generation and judge prompts end with the inquiry; rules
        # match against that section only, so schema text can never trip
        # a question pattern.
        marker = f"\n{QUESTION_HEADER}"
        position = prompt.rfind(marker)
        target = prompt[position + len(marker):] if position >= 0 else prompt
        for rule in self.rules:
            if rule.pattern.search(target):
                return rule.completion
        return "NONE"


def _context_block(prompt: str) -> str:
    start = prompt.find(f"{CONTEXT_HEADER}\n")
    end = prompt.rfind(f"\n\n{QUESTION_HEADER}")
    if start < 0 or end < 0 or end <= start:
        return ""
    return prompt[start + len(CONTEXT_HEADER) + 1 : end]


class RemoteLlm:
    """HTTP chat-completion client.

    POSTs {model, messages} and accepts either {"content": "..."} or the
    common {"choices": [{"message": {"content": "..."}}]} response shape.
    """

    kind = "remote"

    def __init__(
        self,
        endpoint: str,
        model: str | None = None,
        api_key: str | None = None,
        timeout: float = 60.0,
    ):
        self.endpoint = endpoint
        self.model = model
        self.timeout = timeout
        self._headers = {"Content-Type": "application/json"}
        if api_key:
            self._headers["Authorization"] = f"Bearer {api_key}"

    def complete(self, prompt: str) -> str:
        try:
            response = requests.post(
                self.endpoint,
                json={
                    "model": self.model,
                    "messages": [{"role": "user", "content": prompt}],
                },
                headers=self._headers,
                timeout=self.timeout,
            )
        except requests.RequestException as exc:
            raise LlmUnavailableError(f"model endpoint unreachable: {exc}") from exc
        if response.status_code != 200:
            raise LlmUnavailableError(
                f"model endpoint returned {response.status_code}: {response.text[:200]}"
            )
        try:
            body = response.json()
        except ValueError as exc:
            raise LlmUnavailableError("model endpoint returned non-JSON body") from exc
        if isinstance(body, dict):
            if isinstance(body.get("content"), str):
                return body["content"]
            choices = body.get("choices")
            if isinstance(choices, list) and choices:
                message = choices[0].get("message", {})
                if isinstance(message.get("content"), str):
                    return message["content"]
        raise LlmUnavailableError("model endpoint response has no completion text")
