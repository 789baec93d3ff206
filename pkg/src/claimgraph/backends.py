"""Model backends: a chat-completion HTTP client and a scripted mock.

The mock reads a JSON script mapping (role, prompt-substring) rules to canned
response strings, so whole pipeline runs are deterministic and replayable in
tests. Unmatched requests either fall back to the script's default response or
fail hard (test mode).
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Protocol

import requests

from .prompts import PromptRole


class BackendError(RuntimeError):
    """Transport-level failure talking to a backend."""


class MockScriptError(BackendError):
    """A mock request had no matching rule and no default."""


@dataclass(frozen=True)
class BackendRequest:
    prompt_role: PromptRole
    rendered_prompt: str
    max_output_tokens: int = 1024

    def __post_init__(self) -> None:
        if not self.rendered_prompt:
            raise ValueError("rendered_prompt must be non-empty")
        if self.max_output_tokens < 1:
            raise ValueError("max_output_tokens must be positive")


class Backend(Protocol):
    def complete(self, request: BackendRequest) -> str: ...


class HttpChatBackend:
    """Client for a chat-completion endpoint (messages in, text out).
    Temperature defaults to 0 so runs are as repeatable as the model allows."""

    def __init__(
        self,
        url: str,
        model: str,
        timeout_s: float = 120.0,
        temperature: float = 0.0,
        api_key: Optional[str] = None,
    ) -> None:
        self.url = url
        self.model = model
        self.timeout_s = timeout_s
        self.temperature = temperature
        self.api_key = api_key

    def complete(self, request: BackendRequest) -> str:
        headers = {"Content-Type": "application/json"}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        payload = {
            "model": self.model,
            "messages": [{"role": "user", "content": request.rendered_prompt}],
            "temperature": self.temperature,
            "max_tokens": request.max_output_tokens,
        }
        try:
            resp = requests.post(self.url, json=payload, headers=headers, timeout=self.timeout_s)
            resp.raise_for_status()
            body = resp.json()
            return body["choices"][0]["message"]["content"]
        except (requests.RequestException, KeyError, IndexError, ValueError) as exc:
            raise BackendError(f"backend request failed: {exc}") from exc


@dataclass(frozen=True)
class MockRule:
    role: PromptRole
    match: str
    response: str


class MockBackend:
    """Deterministic scripted backend.

    Script file: {"version": 1, "default": str|null, "rules": [
        {"role": "<PromptRole value>", "match": "<substring>", "response": "..."}
    ]}. The first rule whose role equals the request's role and whose match
    string occurs in the rendered prompt wins; an empty match matches any
    prompt of that role.
    """

    def __init__(self, rules: list[MockRule], default: Optional[str] = None) -> None:
        self.rules = rules
        self.default = default
        self.calls: list[BackendRequest] = []

    @classmethod
    def from_script(cls, script_path: Path) -> "MockBackend":
        payload = json.loads(Path(script_path).read_text(encoding="utf-8"))
        if payload.get("version") != 1:
            raise BackendError(f"{script_path}: unsupported mock script version")
        rules = [
            MockRule(
                role=PromptRole(rule["role"]),
                match=rule.get("match", ""),
                response=rule["response"],
            )
            for rule in payload.get("rules", [])
        ]
        return cls(rules, default=payload.get("default"))

    def complete(self, request: BackendRequest) -> str:
        self.calls.append(request)
        for rule in self.rules:
            if rule.role is request.prompt_role and rule.match in request.rendered_prompt:
                return rule.response
        if self.default is not None:
            return self.default
        raise MockScriptError(
            f"no mock rule for role {request.prompt_role.value}; "
            f"prompt starts: {request.rendered_prompt[:120]!r}"
        )
