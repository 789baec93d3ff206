"""Run configuration: defaults, optional TOML/JSON config file, CLI overrides.

Precedence is overrides > file > defaults. Unknown keys in either source are
hard errors, as is configuring both a remote backend and a mock script; the
two are alternatives. The factories at the bottom turn a validated Config
into live components.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Any, Mapping, Optional

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .backends import Backend, HttpChatBackend, MockBackend
from .gateway import Gateway
from .retrieval import HttpReranker, RetrievalBudget, RetrievalIndex, Retriever


class ConfigError(ValueError):
    """Unusable configuration input."""


@dataclass
class Config:
    backend_url: Optional[str] = None
    backend_model: Optional[str] = None
    api_key: Optional[str] = None
    mock_script: Optional[Path] = None
    max_iterations: int = 5
    retries: int = 2
    max_output_tokens: int = 1024
    temperature: float = 0.0
    top_k: int = 50
    max_docs: int = 15
    max_tokens: int = 6000
    min_score: Optional[float] = None
    reranker_url: Optional[str] = None
    rerank_fallback: bool = True
    seed: int = 42
    timeout_s: Optional[float] = 300.0
    workers: int = 1
    exhaustive: bool = False

    def __post_init__(self) -> None:
        if self.mock_script is not None:
            self.mock_script = Path(self.mock_script)
        self.validate()

    def validate(self) -> None:
        _check_int("max_iterations", self.max_iterations, minimum=1)
        _check_int("retries", self.retries, minimum=0)
        _check_int("max_output_tokens", self.max_output_tokens, minimum=1)
        _check_int("top_k", self.top_k, minimum=1)
        _check_int("max_docs", self.max_docs, minimum=1)
        _check_int("max_tokens", self.max_tokens, minimum=1)
        _check_int("workers", self.workers, minimum=1)
        _check_int("seed", self.seed, minimum=-(2**63))
        _check_number("temperature", self.temperature, minimum=0.0)
        if self.timeout_s is not None:
            _check_number("timeout_s", self.timeout_s, minimum=0.0)
            if self.timeout_s == 0:
                raise ConfigError("timeout_s must be positive (or null to disable)")
        if self.min_score is not None:
            _check_number("min_score", self.min_score)
        if not isinstance(self.rerank_fallback, bool):
            raise ConfigError("rerank_fallback must be a boolean")
        if not isinstance(self.exhaustive, bool):
            raise ConfigError("exhaustive must be a boolean")
        if self.backend_url is not None and self.mock_script is not None:
            raise ConfigError(
                "configure either the remote backend or the mock script, not both"
            )
        if self.backend_url is not None and self.backend_model is None:
            raise ConfigError("backend_url requires backend_model")
        if self.backend_url is None and self.backend_model is not None:
            raise ConfigError("backend_model requires backend_url")
        if self.api_key is not None and self.backend_url is None:
            raise ConfigError("api_key requires backend_url")

    def backend_configured(self) -> bool:
        return self.backend_url is not None or self.mock_script is not None

    def require_backend(self) -> None:
        if not self.backend_configured():
            raise ConfigError(
                "no backend configured: set backend_url and backend_model, "
                "or mock_script"
            )


def _check_int(name: str, value: Any, minimum: int) -> None:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"{name} must be an integer")
    if value < minimum:
        raise ConfigError(f"{name} must be >= {minimum}")


def _check_number(name: str, value: Any, minimum: Optional[float] = None) -> None:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{name} must be a number")
    if minimum is not None and value < minimum:
        raise ConfigError(f"{name} must be >= {minimum}")


def load_config_file(path: Path) -> dict[str, Any]:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    if path.suffix == ".toml":
        with open(path, "rb") as fh:
            try:
                return tomllib.load(fh)
            except tomllib.TOMLDecodeError as exc:
                raise ConfigError(f"{path}: invalid TOML: {exc}") from exc
    if path.suffix == ".json":
        try:
            data = json.loads(path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError(f"{path}: config must be a JSON object")
        return data
    raise ConfigError(f"{path}: unsupported config format (use .toml or .json)")


def parse_config(
    path: Optional[Path] = None,
    overrides: Optional[Mapping[str, Any]] = None,
) -> Config:
    """Defaults, then file values, then non-None overrides. Unknown keys from
    either source are errors, not warnings."""
    data: dict[str, Any] = {}
    if path is not None:
        data.update(load_config_file(path))
    if overrides:
        data.update({k: v for k, v in overrides.items() if v is not None})
    known = {f.name for f in fields(Config)}
    unknown = sorted(set(data) - known)
    if unknown:
        raise ConfigError(f"unknown config keys: {unknown}")
    return Config(**data)


def make_backend(config: Config) -> Backend:
    config.require_backend()
    if config.mock_script is not None:
        return MockBackend.from_script(config.mock_script)
    return HttpChatBackend(
        url=config.backend_url,
        model=config.backend_model,
        temperature=config.temperature,
        api_key=config.api_key,
    )


def make_gateway(config: Config, backend: Backend) -> Gateway:
    return Gateway(
        backend,
        retries=config.retries,
        max_output_tokens=config.max_output_tokens,
    )


def make_retriever(config: Config, index: RetrievalIndex) -> Retriever:
    reranker = HttpReranker(config.reranker_url) if config.reranker_url else None
    return Retriever(
        index=index,
        top_k=config.top_k,
        budget=RetrievalBudget(max_docs=config.max_docs, max_tokens=config.max_tokens),
        reranker=reranker,
        min_score=config.min_score,
        rerank_fallback=config.rerank_fallback,
    )
