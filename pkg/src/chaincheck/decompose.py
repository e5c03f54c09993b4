"""Question decomposition: relation-chain extraction, type checking and temperature escalation."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

from chaincheck import prompts
from chaincheck.align import MAX_CHAIN_LENGTH, RepairResult, identity_repair, repair_chain
from chaincheck.backends.base import Backends, CompletionRequest, EntityLinker, LanguageModel
from chaincheck.errors import (
    ChainTooLongError,
    DecompositionError,
    ExtractionError,
    InvalidArgumentError,
    NoEntityError,
)
from chaincheck.typelib import TemplateLibrary, classify_entity, lookup_relation_types
from chaincheck.types import EntityType, MultiHopQuestion, RelationChain, TypeChain

log = logging.getLogger(__name__)

TEMPERATURES: Tuple[float, ...] = tuple(round(0.1 * i, 1) for i in range(11))


@dataclass(frozen=True)
class Attempt:
    temperature: float
    raw: str = ""
    penalty: Optional[int] = None
    error: Optional[str] = None


@dataclass(frozen=True)
class DecompositionResult:
    chain: RelationChain
    initial_entity: str
    entity_type: EntityType
    type_chain: TypeChain
    repair: RepairResult
    final_temperature: float
    attempts: int
    chain_temperature: float
    extracted: RelationChain
    attempt_log: Tuple[Attempt, ...] = field(default_factory=tuple)

    @property
    def fully_aligned(self) -> bool:
        return self.repair.fully_aligned


def parse_sro(response: str) -> Tuple[str, List[str]]:
    """Split the first non-empty response line on ``|``; returns (line, relations in surface order)."""
    line = next((ln.strip() for ln in response.splitlines() if ln.strip()), "")
    if "|" not in line:
        raise ExtractionError(f"no pipe-delimited relations in response {response!r}", response)
    relations = [part.strip() for part in line.split("|") if part.strip()]
    if not relations:
        raise ExtractionError(f"empty relation chain in response {response!r}", response)
    return line, relations


def extract_chain(q: MultiHopQuestion, temperature: float, llm: LanguageModel) -> RelationChain:
    if not 0.0 <= temperature <= 1.0:
        raise InvalidArgumentError(f"temperature {temperature} outside [0, 1]")
    response = llm.complete(CompletionRequest(prompts.extract_chain(q.text), temperature=temperature))
    line, surface = parse_sro(response)
    # the model lists the outermost relation first; execution starts from the innermost
    return RelationChain(tuple(reversed(surface)), line)


def extract_initial_entity(q: MultiHopQuestion, linker: EntityLinker) -> str:
    if q.initial_entity and q.initial_entity.strip():
        return q.initial_entity.strip()
    mentions = linker.find_mentions(q.text)
    if not mentions:
        raise NoEntityError(f"no entity mention found in {q.text!r}")
    best = max(mentions, key=lambda m: (m.link.confidence, len(m.text), -m.start))
    return best.text


def decompose(
    q: MultiHopQuestion,
    library: TemplateLibrary,
    backends: Backends,
    *,
    anchor: bool = False,
    max_chain_length: int = MAX_CHAIN_LENGTH,
    temperatures: Sequence[float] = TEMPERATURES,
) -> DecompositionResult:
    """Extract, type-check and repair the chain, raising the temperature until one aligns.

    When no temperature yields an aligned chain, the repaired candidate with
    the smallest penalty across all attempts is returned (earliest wins ties).
    """
    if len(library) == 0:
        raise InvalidArgumentError("template library is empty")
    entity = extract_initial_entity(q, backends.linker)
    etype = classify_entity(entity, backends.linker, backends.llm)

    log_entries: List[Attempt] = []
    errors: List[Exception] = []
    best = None
    overlong = None

    def result(cand, attempts: int, final_t: float) -> DecompositionResult:
        chain_t, extracted, repair = cand
        return DecompositionResult(
            chain=repair.repaired_relations,
            initial_entity=entity,
            entity_type=etype,
            type_chain=repair.repaired_types,
            repair=repair,
            final_temperature=final_t,
            attempts=attempts,
            chain_temperature=chain_t,
            extracted=extracted,
            attempt_log=tuple(log_entries),
        )

    for i, t in enumerate(temperatures):
        try:
            chain = extract_chain(q, t, backends.llm)
        except ExtractionError as exc:
            errors.append(exc)
            log_entries.append(Attempt(t, exc.raw_response, None, str(exc)))
            continue
        types = TypeChain(tuple(lookup_relation_types(library, r, backends.embedder) for r in chain))
        try:
            repair = repair_chain(
                types, chain, anchor=etype if anchor else None, max_length=max_chain_length
            )
        except ChainTooLongError as exc:
            errors.append(exc)
            log_entries.append(Attempt(t, chain.surface_order_raw, None, str(exc)))
            if overlong is None:
                overlong = (t, chain, identity_repair(types, chain))
            continue
        log_entries.append(Attempt(t, chain.surface_order_raw, repair.penalty))
        if repair.fully_aligned and repair.anchor_satisfied:
            return result((t, chain, repair), i + 1, t)
        key = (repair.penalty, not repair.anchor_satisfied)
        if best is None or key < best[0]:
            best = (key, (t, chain, repair))

    if best is not None:
        return result(best[1], len(temperatures), temperatures[-1])
    if overlong is not None:
        log.warning("every extracted chain exceeded %d relations; keeping extracted order", max_chain_length)
        return result(overlong, len(temperatures), temperatures[-1])
    raise DecompositionError(
        f"chain extraction failed at all {len(temperatures)} temperatures for {q.text!r}", errors
    )
