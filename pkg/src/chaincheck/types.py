"""Shared vocabulary: entity types, relation chains, edits and permutations."""

from __future__ import annotations

import enum
import unicodedata
from dataclasses import dataclass
from typing import Iterable, List, Optional, Sequence, Tuple, TypeVar

from chaincheck.errors import InvalidArgumentError

T = TypeVar("T")


def normalize(text: str) -> str:
    """Equality key for entity and relation strings (NFC, trimmed, case-folded)."""
    return unicodedata.normalize("NFC", text).strip().casefold()


class EntityType(str, enum.Enum):
    PERSON = "Person"
    PLACE = "Place"
    THING = "Thing"

    @property
    def bit(self) -> int:
        return _TYPE_BITS[self]

    @classmethod
    def parse(cls, text: str) -> "EntityType":
        key = text.strip().casefold()
        for member in cls:
            if member.value.casefold() == key:
                return member
        raise InvalidArgumentError(f"unknown entity type {text!r}")


_TYPE_BITS = {EntityType.PERSON: 1, EntityType.PLACE: 2, EntityType.THING: 4}
_TYPE_ORDER = (EntityType.PERSON, EntityType.PLACE, EntityType.THING)


@dataclass(frozen=True)
class TypeSet:
    members: frozenset

    def __post_init__(self) -> None:
        members = frozenset(self.members)
        if not members:
            raise InvalidArgumentError("TypeSet must be non-empty")
        if not all(isinstance(m, EntityType) for m in members):
            raise InvalidArgumentError(f"TypeSet members must be EntityType, got {members!r}")
        object.__setattr__(self, "members", members)

    @classmethod
    def of(cls, *types: EntityType) -> "TypeSet":
        return cls(frozenset(types))

    @classmethod
    def parse(cls, text: str) -> "TypeSet":
        """Parse a comma-joined list such as ``"Place,Thing"``."""
        parts = [p for p in text.split(",") if p.strip()]
        return cls(frozenset(EntityType.parse(p) for p in parts))

    @classmethod
    def from_mask(cls, mask: int) -> "TypeSet":
        return cls(frozenset(t for t in _TYPE_ORDER if mask & t.bit))

    @property
    def mask(self) -> int:
        out = 0
        for m in self.members:
            out |= m.bit
        return out

    def overlaps(self, other: "TypeSet") -> bool:
        return bool(self.members & other.members)

    def __contains__(self, item: object) -> bool:
        return item in self.members

    def __iter__(self):
        return (t for t in _TYPE_ORDER if t in self.members)

    def __len__(self) -> int:
        return len(self.members)

    def __str__(self) -> str:
        return ",".join(t.value for t in self)


@dataclass(frozen=True)
class EditTriple:
    subject: str
    relation: str
    object: str
    canonical_subject: Optional[str] = None

    def __post_init__(self) -> None:
        for name in ("subject", "relation", "object"):
            value = getattr(self, name)
            if not isinstance(value, str) or not value.strip():
                raise InvalidArgumentError(f"edit triple {name} must be a non-empty string")

    @property
    def key_subject(self) -> str:
        return self.canonical_subject or self.subject


@dataclass(frozen=True)
class RelationChain:
    """Relations in execution order: ``relations[0]`` is applied to the initial entity."""

    relations: Tuple[str, ...]
    surface_order_raw: str = ""

    def __post_init__(self) -> None:
        rels = tuple(self.relations)
        if not rels:
            raise InvalidArgumentError("relation chain must contain at least one relation")
        if any(not isinstance(r, str) or not r.strip() for r in rels):
            raise InvalidArgumentError("relation chain entries must be non-empty strings")
        object.__setattr__(self, "relations", rels)

    def __len__(self) -> int:
        return len(self.relations)

    def __iter__(self):
        return iter(self.relations)

    def __getitem__(self, i):
        return self.relations[i]


@dataclass(frozen=True)
class TypeChain:
    pairs: Tuple[Tuple[TypeSet, TypeSet], ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "pairs", tuple((p[0], p[1]) for p in self.pairs))

    @classmethod
    def from_masks(cls, masks: Iterable[Tuple[int, int]]) -> "TypeChain":
        return cls(tuple((TypeSet.from_mask(i), TypeSet.from_mask(o)) for i, o in masks))

    def __len__(self) -> int:
        return len(self.pairs)

    def __iter__(self):
        return iter(self.pairs)

    def __getitem__(self, i):
        return self.pairs[i]


@dataclass(frozen=True)
class Permutation:
    """``mapping[k]`` is the source index of the element placed at position ``k``."""

    mapping: Tuple[int, ...]

    def __post_init__(self) -> None:
        mapping = tuple(int(i) for i in self.mapping)
        if sorted(mapping) != list(range(len(mapping))):
            raise InvalidArgumentError(f"not a permutation of 0..{len(mapping) - 1}: {mapping}")
        object.__setattr__(self, "mapping", mapping)

    @classmethod
    def identity(cls, n: int) -> "Permutation":
        return cls(tuple(range(n)))

    def __len__(self) -> int:
        return len(self.mapping)

    def inverse(self) -> "Permutation":
        inv = [0] * len(self.mapping)
        for k, src in enumerate(self.mapping):
            inv[src] = k
        return Permutation(tuple(inv))

    def is_identity(self) -> bool:
        return all(k == src for k, src in enumerate(self.mapping))

    def matrix(self) -> List[List[int]]:
        """Dense 0/1 matrix P with ``P @ xs == apply_permutation(self, xs)``."""
        n = len(self.mapping)
        rows = [[0] * n for _ in range(n)]
        for k, src in enumerate(self.mapping):
            rows[k][src] = 1
        return rows


def apply_permutation(p: Permutation, xs: Sequence[T]) -> List[T]:
    if len(xs) != len(p.mapping):
        raise InvalidArgumentError(
            f"permutation of size {len(p.mapping)} applied to sequence of length {len(xs)}"
        )
    return [xs[src] for src in p.mapping]


@dataclass(frozen=True)
class MultiHopQuestion:
    text: str
    initial_entity: Optional[str] = None

    def __post_init__(self) -> None:
        if not isinstance(self.text, str) or not self.text.strip():
            raise InvalidArgumentError("question text must be non-empty")
