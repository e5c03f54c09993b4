"""Backend contracts: language model completion, text embedding, entity linking."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Protocol, Tuple, runtime_checkable

import numpy as np

from chaincheck.errors import InvalidArgumentError

MAX_NEW_TOKENS = 50


@dataclass(frozen=True)
class CompletionRequest:
    prompt: str
    temperature: float = 0.0
    max_new_tokens: int = MAX_NEW_TOKENS
    stop_sequences: Tuple[str, ...] = field(default_factory=tuple)

    def __post_init__(self) -> None:
        if not 0.0 <= self.temperature <= 1.0:
            raise InvalidArgumentError(f"temperature {self.temperature} outside [0, 1]")
        if self.max_new_tokens < 1:
            raise InvalidArgumentError("max_new_tokens must be positive")
        object.__setattr__(self, "stop_sequences", tuple(self.stop_sequences))


@dataclass(frozen=True)
class LinkResult:
    canonical_name: str
    is_person: bool = False
    confidence: float = 0.0

    def __post_init__(self) -> None:
        if self.confidence > 0 and not self.canonical_name.strip():
            raise InvalidArgumentError("canonical_name required when confidence > 0")


@dataclass(frozen=True)
class Mention:
    text: str
    start: int
    link: LinkResult


@runtime_checkable
class LanguageModel(Protocol):
    thread_safe: bool

    def complete(self, req: CompletionRequest) -> str: ...


@runtime_checkable
class Embedder(Protocol):
    thread_safe: bool

    def embed(self, text: str) -> np.ndarray: ...


@runtime_checkable
class EntityLinker(Protocol):
    thread_safe: bool

    def link(self, mention: str) -> LinkResult: ...

    def find_mentions(self, text: str) -> List[Mention]: ...


@dataclass(frozen=True)
class Backends:
    llm: LanguageModel
    embedder: Embedder
    linker: EntityLinker


def unit(vec) -> np.ndarray:
    v = np.asarray(vec, dtype=np.float64)
    norm = float(np.linalg.norm(v))
    if norm == 0.0:
        raise InvalidArgumentError("cannot normalize a zero vector")
    return v / norm
