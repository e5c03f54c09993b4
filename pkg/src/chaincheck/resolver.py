"""Hop-by-hop traversal of a decomposed question against the edit store."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Tuple

from chaincheck import prompts
from chaincheck.align import MAX_CHAIN_LENGTH
from chaincheck.backends.base import Backends, CompletionRequest
from chaincheck.decompose import DecompositionResult, decompose
from chaincheck.editstore import EditStore
from chaincheck.errors import ChainCheckError, HopResolutionError, InvalidArgumentError, ResolutionError
from chaincheck.typelib import TemplateLibrary
from chaincheck.types import MultiHopQuestion, TypeSet

_TRAILING_PUNCT = ".,;:!?\"' "


@dataclass(frozen=True)
class HopRecord:
    entity_in: str
    relation: str
    entity_out: str
    source: str  # "edit" or "llm"
    similarity: Optional[float] = None
    generated_question: Optional[str] = None
    expected_type: Optional[TypeSet] = None

    def to_dict(self) -> Dict[str, Any]:
        return {
            "entity_in": self.entity_in,
            "relation": self.relation,
            "entity_out": self.entity_out,
            "source": self.source,
            "similarity": self.similarity,
            "generated_question": self.generated_question,
            "expected_type": str(self.expected_type) if self.expected_type else None,
        }


@dataclass(frozen=True)
class ResolutionTrace:
    question: MultiHopQuestion
    decomposition: Optional[DecompositionResult]
    hops: Tuple[HopRecord, ...] = field(default_factory=tuple)
    answer: str = ""

    def to_dict(self) -> Dict[str, Any]:
        return {
            "question": self.question.text,
            "decomposition": decomposition_dict(self.decomposition),
            "hops": [h.to_dict() for h in self.hops],
            "answer": self.answer,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, ensure_ascii=False)


def decomposition_dict(d: Optional[DecompositionResult]) -> Optional[Dict[str, Any]]:
    if d is None:
        return None
    return {
        "initial_entity": d.initial_entity,
        "entity_type": d.entity_type.value,
        "chain": list(d.chain.relations),
        "extracted": list(d.extracted.relations),
        "surface_order_raw": d.extracted.surface_order_raw,
        "type_chain": [[str(i), str(o)] for i, o in d.type_chain.pairs],
        "permutation": list(d.repair.permutation.mapping),
        "penalty": d.repair.penalty,
        "cost": d.repair.cost,
        "fully_aligned": d.repair.fully_aligned,
        "final_temperature": d.final_temperature,
        "chain_temperature": d.chain_temperature,
        "attempts": d.attempts,
    }


def clean_answer(text: str) -> str:
    """Single entity from an answer completion: text after ``Answer:`` if present, first line."""
    if "Answer:" in text:
        text = text.split("Answer:", 1)[1]
    line = next((ln.strip() for ln in text.splitlines() if ln.strip()), "")
    return line.rstrip(_TRAILING_PUNCT).strip()


def _first_line(text: str) -> str:
    return next((ln.strip() for ln in text.splitlines() if ln.strip()), "")


def resolve_hop(
    entity: str,
    relation: str,
    store: Optional[EditStore],
    backends: Backends,
    expected_type: Optional[TypeSet] = None,
) -> HopRecord:
    if not entity.strip() or not relation.strip():
        raise InvalidArgumentError("hop entity and relation must be non-empty")
    if store is not None:
        hit = store.retrieve(entity, relation, backends.linker, backends.embedder)
        if hit is not None:
            return HopRecord(entity, relation, hit.object, "edit", hit.similarity, None, expected_type)

    llm = backends.llm
    question = _first_line(llm.complete(CompletionRequest(prompts.question_gen(entity, relation))))
    if not question:
        raise HopResolutionError(f"model produced no question for ({entity!r}, {relation!r})")
    req = CompletionRequest(prompts.answer(question))
    answer = clean_answer(llm.complete(req))
    if not answer:
        answer = clean_answer(llm.complete(req))
    if not answer:
        raise HopResolutionError(f"model gave no answer to {question!r}")
    return HopRecord(entity, relation, answer, "llm", None, question, expected_type)


def answer(
    q: MultiHopQuestion,
    store: Optional[EditStore],
    library: TemplateLibrary,
    backends: Backends,
    *,
    anchor: bool = False,
    max_chain_length: int = MAX_CHAIN_LENGTH,
) -> ResolutionTrace:
    """Decompose ``q`` and walk its chain from the initial entity, one hop per relation."""
    try:
        d = decompose(q, library, backends, anchor=anchor, max_chain_length=max_chain_length)
    except ChainCheckError as exc:
        raise ResolutionError(f"decomposition failed: {exc}", ResolutionTrace(q, None)) from exc

    hops: List[HopRecord] = []
    entity = d.initial_entity
    for relation, (_, out_types) in zip(d.chain, d.type_chain):
        try:
            hop = resolve_hop(entity, relation, store, backends, out_types)
        except ChainCheckError as exc:
            partial = ResolutionTrace(q, d, tuple(hops), "")
            raise ResolutionError(f"hop ({entity!r}, {relation!r}) failed: {exc}", partial) from exc
        hops.append(hop)
        entity = hop.entity_out
    return ResolutionTrace(q, d, tuple(hops), entity)
