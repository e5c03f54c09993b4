"""Deterministic in-process backends for tests, fixtures and offline runs."""

from __future__ import annotations

import csv
import hashlib
import json
import re
import threading
from dataclasses import asdict, dataclass
from functools import lru_cache
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Tuple, Union

import numpy as np

from chaincheck.backends.base import CompletionRequest, LinkResult, Mention, unit
from chaincheck.errors import FixtureError, InvalidArgumentError, UnscriptedPromptError
from chaincheck.types import normalize

MOCK_EMBEDDING_DIM = 64

_TOKEN_RE = re.compile(r"\w+")


@dataclass(frozen=True)
class ScriptEntry:
    prompt: str
    response: str
    temperature: Optional[float] = None
    match: str = "exact"  # or "prefix"

    def __post_init__(self) -> None:
        if self.match not in ("exact", "prefix"):
            raise FixtureError(f"unknown match mode {self.match!r}")

    def matches(self, prompt: str, temperature: float) -> bool:
        if self.temperature is not None and abs(self.temperature - temperature) > 1e-9:
            return False
        if self.match == "exact":
            return prompt == self.prompt
        return prompt.startswith(self.prompt)


class MockLLM:
    """Scripted language model: each (prompt, temperature) must match exactly one entry."""

    thread_safe = True

    def __init__(self, entries: Iterable[ScriptEntry] = ()):
        self._exact: Dict[str, List[ScriptEntry]] = {}
        self._prefix: List[ScriptEntry] = []
        self.entries: List[ScriptEntry] = []
        self.calls: List[CompletionRequest] = []
        self._lock = threading.Lock()
        for entry in entries:
            self.add(entry)

    def add(self, entry: ScriptEntry) -> None:
        self.entries.append(entry)
        if entry.match == "exact":
            self._exact.setdefault(entry.prompt, []).append(entry)
        else:
            self._prefix.append(entry)

    def script(self, prompt: str, response: str, temperature: Optional[float] = None) -> None:
        self.add(ScriptEntry(prompt, response, temperature))

    def complete(self, req: CompletionRequest) -> str:
        with self._lock:
            self.calls.append(req)
        hits = [e for e in self._exact.get(req.prompt, ()) if e.matches(req.prompt, req.temperature)]
        hits += [e for e in self._prefix if e.matches(req.prompt, req.temperature)]
        if not hits:
            tail = req.prompt[-120:].replace("\n", "\\n")
            raise UnscriptedPromptError(
                f"no script entry for prompt ending {tail!r} at temperature {req.temperature}"
            )
        if len(hits) > 1:
            raise FixtureError(
                f"{len(hits)} script entries match one prompt at temperature {req.temperature}"
            )
        return hits[0].response

    @classmethod
    def load(cls, path: Union[str, Path]) -> "MockLLM":
        data = json.loads(Path(path).read_text(encoding="utf-8"))
        if isinstance(data, dict):
            data = data.get("entries", [])
        return cls(ScriptEntry(**item) for item in data)

    def dump(self, path: Union[str, Path]) -> None:
        write_scripts(self.entries, path)


def write_scripts(entries: Iterable[ScriptEntry], path: Union[str, Path]) -> None:
    payload = {"entries": [asdict(e) for e in entries]}
    Path(path).write_text(
        json.dumps(payload, indent=1, sort_keys=True, ensure_ascii=False) + "\n", encoding="utf-8"
    )


@lru_cache(maxsize=65536)
def _token_vector(token: str, dim: int) -> Tuple[float, ...]:
    seed = int.from_bytes(hashlib.sha256(token.encode("utf-8")).digest()[:8], "little")
    vec = np.random.default_rng(seed).standard_normal(dim)
    return tuple(vec / np.linalg.norm(vec))


class MockEmbedder:
    """Bag-of-tokens embedding: each lower-cased token hashes to a fixed random direction."""

    thread_safe = True

    def __init__(self, dim: int = MOCK_EMBEDDING_DIM):
        if dim < 1:
            raise InvalidArgumentError("embedding dimension must be positive")
        self.dim = dim

    def embed(self, text: str) -> np.ndarray:
        if not text or not text.strip():
            raise InvalidArgumentError("cannot embed empty text")
        tokens = _TOKEN_RE.findall(text.lower()) or [text.strip()]
        total = np.zeros(self.dim)
        for tok in tokens:
            total += np.asarray(_token_vector(tok, self.dim))
        return unit(total)


def _truthy(flag: str) -> bool:
    return flag.strip().casefold() in ("1", "true", "yes", "y", "person")


class MockLinker:
    """Alias-table entity linker. Unknown mentions link to themselves with confidence 0."""

    thread_safe = True

    def __init__(self, aliases: Optional[Dict[str, Tuple[str, bool]]] = None):
        self._table: Dict[str, Tuple[str, str, bool]] = {}
        for alias, (canonical, is_person) in (aliases or {}).items():
            self.add(alias, canonical, is_person)

    def add(self, alias: str, canonical: str, is_person: bool = False) -> None:
        self._table[normalize(alias)] = (alias.strip(), canonical.strip(), bool(is_person))

    def link(self, mention: str) -> LinkResult:
        hit = self._table.get(normalize(mention))
        if hit is None:
            return LinkResult(mention.strip(), False, 0.0)
        return LinkResult(hit[1], hit[2], 1.0)

    def find_mentions(self, text: str) -> List[Mention]:
        found = []
        folded = text.casefold()
        for key, (_, canonical, is_person) in self._table.items():
            for m in re.finditer(r"(?<!\w)" + re.escape(key) + r"(?!\w)", folded):
                surface = text[m.start() : m.end()]
                found.append(Mention(surface, m.start(), LinkResult(canonical, is_person, 1.0)))
        found.sort(key=lambda mn: (mn.start, -len(mn.text)))
        return found

    @classmethod
    def load(cls, path: Union[str, Path]) -> "MockLinker":
        linker = cls()
        with open(path, encoding="utf-8", newline="") as fh:
            for row in csv.reader(fh, delimiter="\t"):
                if not row or row[0].startswith("#"):
                    continue
                if len(row) != 3:
                    raise FixtureError(f"alias table row needs 3 fields, got {row!r}")
                linker.add(row[0], row[1], _truthy(row[2]))
        return linker

    def rows(self) -> List[Tuple[str, str, bool]]:
        return sorted(self._table.values(), key=lambda r: normalize(r[0]))

    def dump(self, path: Union[str, Path]) -> None:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            for alias, canonical, is_person in self.rows():
                fh.write(f"{alias}\t{canonical}\t{int(is_person)}\n")
