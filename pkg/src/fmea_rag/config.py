"""Service configuration and client factories.

Config files are JSON. Credentials never appear in config values; remote
settings name an environment variable and the factory reads it at build
time.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from pathlib import Path

from .embedding import DEFAULT_DIMENSION, DEFAULT_SEED, Embedder, HashingEmbedder, RemoteEmbedder
from .errors import ConfigError
from .fixtures import mock_llm_rules_path
from .llm import LlmClient, RemoteLlm, ScriptedLlm
from .retrieval import DEFAULT_QUERY_ROW_CAP, DEFAULT_TOP_K

EMBEDDER_KINDS = ("local", "remote")
LLM_KINDS = ("scripted", "remote")


@dataclass(frozen=True)
class EmbedderSettings:
    kind: str = "local"
    dimension: int = DEFAULT_DIMENSION
    seed: int = DEFAULT_SEED
    endpoint: str | None = None
    model: str | None = None
    credential_env: str | None = None
    timeout: float = 30.0

    def __post_init__(self) -> None:
        _check_kind("embedder", self.kind, EMBEDDER_KINDS, self.endpoint, self.credential_env)


@dataclass(frozen=True)
class LlmSettings:
    kind: str = "scripted"
    endpoint: str | None = None
    model: str | None = None
    credential_env: str | None = None
    timeout: float = 60.0
    script_path: str | None = None

    def __post_init__(self) -> None:
        _check_kind("llm", self.kind, LLM_KINDS, self.endpoint, self.credential_env)


@dataclass(frozen=True)
class RetrievalSettings:
    top_k: int = DEFAULT_TOP_K
    query_row_cap: int = DEFAULT_QUERY_ROW_CAP

    def __post_init__(self) -> None:
        if self.top_k < 1:
            raise ConfigError("retrieval.top_k must be at least 1")
        if self.query_row_cap < 1:
            raise ConfigError("retrieval.query_row_cap must be at least 1")


@dataclass(frozen=True)
class ServiceConfig:
    listen_host: str = "127.0.0.1"
    listen_port: int = 8077
    data_dir: str = "fmea_data"
    embedder: EmbedderSettings = field(default_factory=EmbedderSettings)
    llm: LlmSettings = field(default_factory=LlmSettings)
    retrieval: RetrievalSettings = field(default_factory=RetrievalSettings)
    embed_workers: int = 1

    def __post_init__(self) -> None:
        if not (0 < self.listen_port < 65536):
            raise ConfigError(f"listen_port out of range: {self.listen_port}")
        if self.embed_workers < 1:
            raise ConfigError("embed_workers must be at least 1")


def _check_kind(
    which: str, kind: str, allowed: tuple[str, ...], endpoint: str | None, credential_env: str | None
) -> None:
    if kind not in allowed:
        raise ConfigError(f"unknown {which} kind {kind!r}; expected one of {allowed}")
    if kind == "remote":
        if not endpoint:
            raise ConfigError(f"remote {which} requires an endpoint")
        if not credential_env:
            raise ConfigError(f"remote {which} requires credential_env naming an environment variable")
    else:
        # Mock kinds must stay runnable with zero secrets configured.
        if credential_env:
            raise ConfigError(f"{which} kind {kind!r} takes no credentials")


def _build_section(cls, raw, where: str):
    if not isinstance(raw, dict):
        raise ConfigError(f"{where} section must be an object")
    names = {f for f in cls.__dataclass_fields__}
    unknown = set(raw) - names
    if unknown:
        raise ConfigError(f"unknown {where} keys: {sorted(unknown)}")
    try:
        return cls(**raw)
    except TypeError as exc:
        raise ConfigError(f"bad {where} section: {exc}") from exc


def parse_config(text: str) -> ServiceConfig:
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError("config root must be an object")
    known = {f for f in ServiceConfig.__dataclass_fields__}
    unknown = set(raw) - known
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    kwargs = dict(raw)
    if "embedder" in kwargs:
        kwargs["embedder"] = _build_section(EmbedderSettings, kwargs["embedder"], "embedder")
    if "llm" in kwargs:
        kwargs["llm"] = _build_section(LlmSettings, kwargs["llm"], "llm")
    if "retrieval" in kwargs:
        kwargs["retrieval"] = _build_section(RetrievalSettings, kwargs["retrieval"], "retrieval")
    try:
        return ServiceConfig(**kwargs)
    except TypeError as exc:
        raise ConfigError(f"bad config: {exc}") from exc


def load_config(path: str | Path) -> ServiceConfig:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    return parse_config(text)


def _credential(env_name: str, which: str) -> str:
    value = os.environ.get(env_name)
    if not value:
        raise ConfigError(f"{which} credential environment variable {env_name} is not set")
    return value


def build_embedder(settings: EmbedderSettings) -> Embedder:
    if settings.kind == "local":
        return HashingEmbedder(dimension=settings.dimension, seed=settings.seed)
    assert settings.endpoint is not None and settings.credential_env is not None
    return RemoteEmbedder(
        settings.endpoint,
        settings.dimension,
        model=settings.model,
        api_key=_credential(settings.credential_env, "embedder"),
        timeout=settings.timeout,
    )


def build_llm(settings: LlmSettings) -> LlmClient:
    if settings.kind == "scripted":
        path = Path(settings.script_path) if settings.script_path else mock_llm_rules_path()
        return ScriptedLlm.from_file(path)
    assert settings.endpoint is not None and settings.credential_env is not None
    return RemoteLlm(
        settings.endpoint,
        model=settings.model,
        api_key=_credential(settings.credential_env, "llm"),
        timeout=settings.timeout,
    )
