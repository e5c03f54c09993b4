from chaincheck.backends.base import (
    MAX_NEW_TOKENS,
    Backends,
    CompletionRequest,
    Embedder,
    EntityLinker,
    LanguageModel,
    LinkResult,
    Mention,
    unit,
)
from chaincheck.backends.mock import MockEmbedder, MockLinker, MockLLM, ScriptEntry
from chaincheck.backends.remote import RemoteEmbedder, RemoteLinker, RemoteLLM

__all__ = [
    "MAX_NEW_TOKENS",
    "Backends",
    "CompletionRequest",
    "Embedder",
    "EntityLinker",
    "LanguageModel",
    "LinkResult",
    "Mention",
    "MockEmbedder",
    "MockLinker",
    "MockLLM",
    "RemoteEmbedder",
    "RemoteLinker",
    "RemoteLLM",
    "ScriptEntry",
    "unit",
]
