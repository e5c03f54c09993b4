"""Run configuration: defaults < config file < environment < command-line flags."""

from __future__ import annotations

import json
import os
from dataclasses import asdict, dataclass, fields
from pathlib import Path
from typing import Any, Dict, Mapping, Optional, Union

from chaincheck.align import MAX_CHAIN_LENGTH
from chaincheck.backends.base import Backends
from chaincheck.backends.mock import MOCK_EMBEDDING_DIM, MockEmbedder, MockLinker, MockLLM
from chaincheck.backends.remote import RemoteEmbedder, RemoteLinker, RemoteLLM
from chaincheck.editstore import METRICS, STYLES
from chaincheck.errors import ConfigError
from chaincheck.typelib import (
    TemplateLibrary,
    build_library,
    default_template_labels,
    read_template_labels,
)

ENV_ENDPOINT = "CHAINCHECK_ENDPOINT"
ENV_API_KEY = "CHAINCHECK_API_KEY"


@dataclass
class RunConfig:
    backend: str = "mock"
    endpoint: Optional[str] = None
    model: Optional[str] = None
    api_key: Optional[str] = None
    api: str = "completions"
    timeout: float = 30.0
    max_retries: int = 2
    embedding_endpoint: Optional[str] = None
    embedding_model: Optional[str] = None
    embedding_dim: int = MOCK_EMBEDDING_DIM
    linker_endpoint: Optional[str] = None
    mock_scripts: Optional[str] = None
    alias_table: Optional[str] = None
    tau: float = 0.8
    metric: str = "cosine"
    embedding_style: str = "sr"
    template_library_path: Optional[str] = None
    anchor_entity_type: bool = False
    max_chain_length: int = MAX_CHAIN_LENGTH
    workers: int = 1
    out: str = "out"

    def validate(self) -> "RunConfig":
        if self.backend not in ("mock", "remote"):
            raise ConfigError(f"backend must be 'mock' or 'remote', got {self.backend!r}")
        if self.metric not in METRICS:
            raise ConfigError(f"metric must be one of {METRICS}, got {self.metric!r}")
        if self.embedding_style not in STYLES:
            raise ConfigError(f"embedding_style must be one of {STYLES}, got {self.embedding_style!r}")
        if self.metric == "cosine" and not 0.0 < self.tau <= 1.0:
            raise ConfigError(f"cosine tau must lie in (0, 1], got {self.tau}")
        if self.metric == "dot" and not self.tau > 0.0:
            raise ConfigError(f"dot tau must be positive, got {self.tau}")
        if not 1 <= self.max_chain_length <= MAX_CHAIN_LENGTH:
            raise ConfigError(f"max_chain_length must lie in [1, {MAX_CHAIN_LENGTH}]")
        if self.workers < 1:
            raise ConfigError("workers must be at least 1")
        if self.embedding_dim < 1:
            raise ConfigError("embedding_dim must be positive")
        if self.backend == "remote" and not (self.endpoint and self.model):
            raise ConfigError("remote backend needs endpoint and model")
        return self

    def to_dict(self) -> Dict[str, Any]:
        out = asdict(self)
        if out.get("api_key"):
            out["api_key"] = "***"
        return out


def load_config(
    path: Optional[Union[str, Path]] = None,
    overrides: Optional[Mapping[str, Any]] = None,
    environ: Optional[Mapping[str, str]] = None,
) -> RunConfig:
    environ = os.environ if environ is None else environ
    values: Dict[str, Any] = {}
    if path is not None:
        p = Path(path)
        if not p.is_file():
            raise ConfigError(f"config file not found: {p}")
        try:
            data = json.loads(p.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config file {p} is not valid JSON: {exc.msg}") from exc
        if not isinstance(data, dict):
            raise ConfigError(f"config file {p} must hold a JSON object")
        values.update(data)
    if environ.get(ENV_ENDPOINT):
        values["endpoint"] = environ[ENV_ENDPOINT]
    if environ.get(ENV_API_KEY):
        values["api_key"] = environ[ENV_API_KEY]
    values.update({k: v for k, v in (overrides or {}).items() if v is not None})
    known = {f.name for f in fields(RunConfig)}
    unknown = sorted(set(values) - known)
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
    try:
        cfg = RunConfig(**values)
        cfg.tau = float(cfg.tau)
        cfg.max_chain_length = int(cfg.max_chain_length)
        cfg.workers = int(cfg.workers)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc
    return cfg.validate()


def make_backends(cfg: RunConfig) -> Backends:
    if cfg.backend == "remote":
        common = dict(api_key=cfg.api_key, timeout=cfg.timeout, max_retries=cfg.max_retries)
        llm = RemoteLLM(cfg.endpoint, cfg.model, api=cfg.api, **common)
        embedder = RemoteEmbedder(
            cfg.embedding_endpoint or cfg.endpoint,
            cfg.embedding_model or cfg.model,
            dim=cfg.embedding_dim,
            **common,
        )
        linker = RemoteLinker(cfg.linker_endpoint or cfg.endpoint, **common)
        return Backends(llm, embedder, linker)
    llm = MockLLM.load(cfg.mock_scripts) if cfg.mock_scripts else MockLLM()
    linker = MockLinker.load(cfg.alias_table) if cfg.alias_table else MockLinker()
    return Backends(llm, MockEmbedder(cfg.embedding_dim), linker)


def load_library(cfg: RunConfig, backends: Backends) -> TemplateLibrary:
    path = cfg.template_library_path
    if path and path.endswith(".json"):
        return TemplateLibrary.load(path)
    labels = read_template_labels(path) if path else default_template_labels()
    return build_library(labels, backends.embedder)
