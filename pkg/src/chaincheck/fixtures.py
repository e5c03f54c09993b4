"""Synthetic MQuAKE-shaped benchmark with matching mock-backend scripts.

Each case is a small typed world: a relation chain from a fresh initial
entity, the unedited path through it, and counterfactual edits that divert
the path. The mock language model only knows the unedited world, so a
question can be answered correctly only through edit-store hits.
"""

from __future__ import annotations

import itertools
import json
import random
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from chaincheck import prompts
from chaincheck.align import alignment_penalty
from chaincheck.backends.base import Backends
from chaincheck.backends.mock import MockEmbedder, MockLinker, MockLLM, ScriptEntry, write_scripts
from chaincheck.editstore import render
from chaincheck.errors import FixtureError
from chaincheck.typelib import (
    LabeledTemplate,
    TemplateLibrary,
    build_library,
    default_template_labels,
    write_template_labels,
)
from chaincheck.types import EntityType, TypeChain

DEFAULT_HOPS = {2: 0.5, 3: 0.3, 4: 0.2}
DEFAULT_EDITS = {1: 1.0}

_SYLLABLES = (
    "ka lo mi ra ven tor sel dri qua zen bor fa ne lu sha gri mon pel ris tu vo xa yel dro "
    "ki ba rin sol mer tas hal ore nim pra sku tem vil wen zor cav dun elk fyr gon"
).split()

_PARAPHRASES = (
    "What is {}?",
    "Can you name {}?",
    "Which entity is {}?",
)

# Fifty "John" variants and ten relations for the embedding separation study.
STUDY_SUBJECTS = tuple(
    f"{first} {last}"
    for first, last in zip(
        itertools.cycle(["John", "Jon", "Johnny", "Jonathan", "Johan"]),
        (
            "Adams Hamm Smith Smyth Brown Green White Black Gray Stone Wood Lake Hill Ford Lee "
            "King Young Hall Allen Wright Scott Baker Nelson Carter Mitchell Perez Roberts Turner "
            "Phillips Campbell Parker Evans Edwards Collins Stewart Morris Rogers Reed Cook Morgan "
            "Bell Murphy Bailey Rivera Cooper Richardson Cox Howard Ward Torres"
        ).split(),
    )
)
STUDY_RELATIONS = (
    "born in",
    "spouse of",
    "country of citizenship",
    "employer of",
    "place of birth",
    "father of",
    "educated at",
    "member of",
    "author of",
    "head of state",
)


@dataclass
class SyntheticCase:
    record: dict
    mode: str  # "plain", "repair" or "escalate"
    chain: Tuple[str, ...]
    original_path: Tuple[str, ...]
    edited_path: Tuple[str, ...]


@dataclass
class SyntheticSuite:
    cases: List[SyntheticCase]
    scripts: List[ScriptEntry]
    templates: List[LabeledTemplate]
    aliases: List[Tuple[str, str, bool]]
    embedding_dim: int = 64
    files: Dict[str, Path] = field(default_factory=dict)

    @property
    def records(self) -> List[dict]:
        return [c.record for c in self.cases]

    def linker(self) -> MockLinker:
        linker = MockLinker()
        for alias, canonical, is_person in self.aliases:
            linker.add(alias, canonical, is_person)
        return linker

    def backends(self) -> Backends:
        return Backends(MockLLM(self.scripts), MockEmbedder(self.embedding_dim), self.linker())

    def library(self, backends: Optional[Backends] = None) -> TemplateLibrary:
        embedder = backends.embedder if backends else MockEmbedder(self.embedding_dim)
        return build_library(self.templates, embedder)

    def write(self, directory: Union[str, Path]) -> Dict[str, Path]:
        out = Path(directory)
        out.mkdir(parents=True, exist_ok=True)
        files = {
            "dataset": out / "dataset.json",
            "scripts": out / "scripts.json",
            "templates": out / "templates.tsv",
            "aliases": out / "aliases.tsv",
        }
        files["dataset"].write_text(
            json.dumps(self.records, indent=1, sort_keys=True, ensure_ascii=False) + "\n",
            encoding="utf-8",
        )
        write_scripts(self.scripts, files["scripts"])
        write_template_labels(self.templates, files["templates"])
        self.linker().dump(files["aliases"])
        self.files = files
        return files


def _check_distribution(dist: Dict[int, float], name: str) -> None:
    if not dist:
        raise FixtureError(f"{name} is empty")
    if any(int(k) < 1 or v < 0 for k, v in dist.items()):
        raise FixtureError(f"{name} needs positive integer keys and non-negative weights")
    if abs(sum(dist.values()) - 1.0) > 1e-9:
        raise FixtureError(f"{name} weights sum to {sum(dist.values())}, expected 1")


def _allocate(n: int, dist: Dict[int, float], rng: random.Random) -> List[int]:
    """Largest-remainder allocation of ``n`` draws, shuffled."""
    keys = sorted(dist)
    raw = [n * dist[k] for k in keys]
    counts = [int(x) for x in raw]
    order = sorted(range(len(keys)), key=lambda i: (-(raw[i] - counts[i]), keys[i]))
    for i in order[: n - sum(counts)]:
        counts[i] += 1
    out = [k for k, c in zip(keys, counts) for _ in range(c)]
    rng.shuffle(out)
    return out


def zero_penalty_orderings(types: TypeChain) -> List[Tuple[int, ...]]:
    pairs = types.pairs
    return [
        p
        for p in itertools.permutations(range(len(pairs)))
        if alignment_penalty(TypeChain(tuple(pairs[i] for i in p))) == 0
    ]


class _Names:
    def __init__(self, rng: random.Random, reserved: Sequence[str]):
        self.rng = rng
        self.used = {w.lower() for w in reserved}

    def word(self) -> str:
        while True:
            w = "".join(self.rng.choice(_SYLLABLES) for _ in range(self.rng.choice((2, 3))))
            if w not in self.used:
                self.used.add(w)
                return w.capitalize()

    def entity(self, etype: EntityType) -> str:
        if etype is EntityType.PERSON:
            return f"{self.word()} {self.word()}"
        return self.word()


def generate_synthetic_suite(
    n_cases: int,
    hop_distribution: Optional[Dict[int, float]] = None,
    edit_distribution: Optional[Dict[int, float]] = None,
    seed: int = 0,
    *,
    misalignment: bool = False,
    full_edit: bool = False,
    distractors: int = 0,
    max_similar: float = 0.75,
    embedding_dim: int = 64,
    templates: Optional[List[LabeledTemplate]] = None,
) -> SyntheticSuite:
    """Build ``n_cases`` solvable cases with three paraphrased questions each.

    ``misalignment`` makes every case start from a bad chain at temperature
    0.0: even-numbered cases need permutation repair, odd-numbered ones an
    unrepairable chain until temperature 0.2. ``full_edit`` edits every hop;
    ``distractors`` adds off-path edits. Every non-matching query/edit pair is
    kept at or below ``max_similar`` under the mock embedder.
    """
    if n_cases < 1:
        raise FixtureError("n_cases must be at least 1")
    hop_distribution = dict(hop_distribution or DEFAULT_HOPS)
    edit_distribution = dict(edit_distribution or DEFAULT_EDITS)
    _check_distribution(hop_distribution, "hop_distribution")
    _check_distribution(edit_distribution, "edit_distribution")
    if misalignment and min(hop_distribution) < 2:
        raise FixtureError("misalignment injection needs chains of at least 2 hops")

    rng = random.Random(seed)
    labels = list(templates or default_template_labels())
    simple = [(p, next(iter(i)), next(iter(o))) for p, i, o in labels if len(i) == 1 and len(o) == 1]
    broken = [r for r in simple if r[1] is not r[2]]
    if not simple or not broken:
        raise FixtureError("template labels need single-typed relations")
    reserved = [tok for p, _, _ in labels for tok in p.split()]
    names = _Names(rng, reserved)
    embedder = MockEmbedder(embedding_dim)

    hop_counts = _allocate(n_cases, hop_distribution, rng)
    cases: List[SyntheticCase] = []
    scripts: List[ScriptEntry] = []
    aliases: List[Tuple[str, str, bool]] = []

    for i, h in enumerate(hop_counts):
        allowed = {k: v for k, v in edit_distribution.items() if k <= h}
        if not allowed:
            raise FixtureError(f"no edit count in {sorted(edit_distribution)} fits a {h}-hop case")
        m = h if full_edit else rng.choices(sorted(allowed), [allowed[k] for k in sorted(allowed)])[0]
        mode = "plain" if not misalignment else ("repair" if i % 2 == 0 else "escalate")
        case, case_scripts, case_aliases = _build_case(
            i + 1, h, m, mode, simple, broken, names, rng, embedder, distractors, max_similar
        )
        cases.append(case)
        scripts.extend(case_scripts)
        aliases.extend(case_aliases)

    return SyntheticSuite(cases, scripts, labels, aliases, embedding_dim)


def _sample_chain(h, simple, rng) -> List[Tuple[str, EntityType, EntityType]]:
    for _ in range(1000):
        chain = [rng.choice(simple)]
        while len(chain) < h:
            options = [r for r in simple if r[1] is chain[-1][2] and r not in chain]
            if not options:
                break
            chain.append(rng.choice(options))
        if len(chain) < h:
            continue
        types = TypeChain.from_masks((r[1].bit, r[2].bit) for r in chain)
        if len(zero_penalty_orderings(types)) == 1:
            return chain
    raise FixtureError(f"could not sample a uniquely aligned {h}-hop chain")


def _of(relation: str, subject: str) -> str:
    """``"the <relation> of <subject>"`` without doubling a trailing "of" in the label."""
    if relation.endswith(" of"):
        return f"the {relation} {subject}"
    return f"the {relation} of {subject}"


def _surface_line(execution_order: Sequence[str]) -> str:
    return " | " + " | ".join(reversed(execution_order)) + " |\n"


def _build_case(case_id, h, m, mode, simple, broken, names, rng, embedder, n_distractors, max_similar):
    for _ in range(500):
        chain = _sample_chain(h, simple, rng)
        rels = [r[0] for r in chain]
        orig = [names.entity(chain[0][1])]
        for r in chain:
            orig.append(names.entity(r[2]))
        edit_pos = sorted(rng.sample(range(h), m))
        new = [orig[0]]
        old_objects: Dict[int, str] = {}
        facts: Dict[Tuple[str, str], str] = {(orig[k], rels[k]): orig[k + 1] for k in range(h)}
        for k in range(h):
            on_path = new[k] == orig[k]
            if k in edit_pos:
                new.append(names.entity(chain[k][2]))
                old = orig[k + 1] if on_path else names.entity(chain[k][2])
                old_objects[k] = old
                facts[(new[k], rels[k])] = old
            else:
                nxt = orig[k + 1] if on_path else names.entity(chain[k][2])
                new.append(nxt)
                facts[(new[k], rels[k])] = nxt
        edits = [(new[k], rels[k], new[k + 1]) for k in edit_pos]
        types_of = {orig[0]: chain[0][1]}
        for k, r in enumerate(chain):
            types_of.setdefault(orig[k + 1], r[2])
            types_of.setdefault(new[k + 1], r[2])
        for k, old in old_objects.items():
            types_of.setdefault(old, chain[k][2])

        slots = [
            (new[k], r)
            for k in range(h)
            for r in simple
            if r[1] is types_of[new[k]] and r[0] not in rels
        ]
        if n_distractors and len(slots) < n_distractors:
            raise FixtureError(f"case {case_id}: not enough relations for {n_distractors} distractors")
        extra = []
        for subj, r in rng.sample(slots, n_distractors):
            obj = names.entity(r[2])
            types_of[obj] = r[2]
            extra.append((subj, r[0], obj))
        if len({(s, r) for s, r, _ in edits + extra}) != len(edits) + len(extra):
            continue
        if _similarity_ok(new, rels, edit_pos, edits + extra, embedder, max_similar):
            break
    else:
        raise FixtureError(f"case {case_id}: could not satisfy similarity bound {max_similar}")

    nested = orig[0]
    for r in rels:
        nested = _of(r, nested)
    questions = [p.format(nested) for p in _PARAPHRASES]

    scripts: List[ScriptEntry] = []
    correct = _surface_line(rels)
    for q in questions:
        prompt = prompts.extract_chain(q)
        if mode == "plain":
            scripts.append(ScriptEntry(prompt, correct, 0.0))
            continue
        if mode == "repair":
            order = list(range(h))
            while order == list(range(h)):
                rng.shuffle(order)
            bad = {0.0: _surface_line([rels[j] for j in order]), 0.1: _surface_line([rels[j] for j in order])}
        else:
            bad_rel = rng.choice(broken)[0]
            bad = {0.0: _surface_line([bad_rel] * h), 0.1: _surface_line([bad_rel] * h)}
        for step in range(11):
            t = round(0.1 * step, 1)
            scripts.append(ScriptEntry(prompt, bad.get(t, correct), t))

    if chain[0][1] is not EntityType.PERSON:
        scripts.append(
            ScriptEntry(prompts.entity_type(orig[0]), f" {chain[0][1].value.lower()}\n", 0.0)
        )
    for (x, r), y in sorted(facts.items()):
        gq = f"What is {_of(r, x)}?"
        scripts.append(ScriptEntry(prompts.question_gen(x, r), f" {gq}\n", 0.0))
        scripts.append(ScriptEntry(prompts.answer(gq), f" {y}\n", 0.0))

    aliases = sorted((e, e, t is EntityType.PERSON) for e, t in types_of.items())

    def hop(subject, relation, obj):
        return {
            "question": f"What is {_of(relation, subject)}?",
            "cloze": "T" + _of(relation, subject)[1:] + " is",
            "answer": obj,
        }

    rewrites = []
    for s, r, o in edits:
        k = rels.index(r)
        rewrites.append(
            {
                "subject": s,
                "prompt": "T" + _of(r, "{}")[1:] + " is",
                "target_new": {"str": o},
                "target_true": {"str": old_objects[k]},
                "question": f"What is {_of(r, s)}?",
            }
        )
    for s, r, o in extra:
        rewrites.append(
            {
                "subject": s,
                "relation": r,
                "prompt": "T" + _of(r, "{}")[1:] + " is",
                "target_new": {"str": o},
                "target_true": {"str": o},
                "question": f"What is {_of(r, s)}?",
            }
        )
    record = {
        "case_id": case_id,
        "requested_rewrite": rewrites,
        "questions": questions,
        "answer": orig[-1],
        "answer_alias": [],
        "new_answer": new[-1],
        "new_answer_alias": [],
        "single_hops": [hop(orig[k], rels[k], orig[k + 1]) for k in range(h)],
        "new_single_hops": [hop(new[k], rels[k], new[k + 1]) for k in range(h)],
        "orig": {
            "triples_labeled": [[orig[k], rels[k], orig[k + 1]] for k in range(h)],
            "new_triples_labeled": [[new[k], rels[k], new[k + 1]] for k in range(h)],
        },
    }
    case = SyntheticCase(record, mode, tuple(rels), tuple(orig), tuple(new))
    return case, scripts, aliases


def _similarity_ok(path, rels, edit_pos, edits, embedder, bound) -> bool:
    edit_vecs = np.vstack([embedder.embed(render(s, r)) for s, r, _ in edits])
    for k, rel in enumerate(rels):
        sims = edit_vecs @ embedder.embed(render(path[k], rel))
        for j, (s, r, _) in enumerate(edits):
            exact = k in edit_pos and (s, r) == (path[k], rel)
            if not exact and sims[j] > bound:
                return False
    return True
