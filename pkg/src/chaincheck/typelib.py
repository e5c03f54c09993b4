"""Entity typing and the relation template library."""

from __future__ import annotations

import csv
import json
import re
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Iterable, List, Sequence, Tuple, Union

import numpy as np

from chaincheck import prompts
from chaincheck.backends.base import CompletionRequest, Embedder, EntityLinker, LanguageModel, unit
from chaincheck.errors import ClassificationError, InvalidArgumentError, LibraryBuildError
from chaincheck.types import EntityType, TypeSet, normalize

LabeledTemplate = Tuple[str, TypeSet, TypeSet]

_KIND_RE = re.compile(r"place|thing", re.IGNORECASE)


@dataclass(frozen=True)
class RelationTemplate:
    phrase: str
    input_types: TypeSet
    output_types: TypeSet
    embedding: np.ndarray


@dataclass(frozen=True)
class TemplateLibrary:
    templates: Tuple[RelationTemplate, ...]
    embedding_dim: int

    def __post_init__(self) -> None:
        matrix = np.vstack([t.embedding for t in self.templates])
        matrix.setflags(write=False)
        object.__setattr__(self, "_matrix", matrix)

    def __len__(self) -> int:
        return len(self.templates)

    @property
    def matrix(self) -> np.ndarray:
        return self._matrix  # type: ignore[attr-defined]

    def labels(self) -> List[LabeledTemplate]:
        return [(t.phrase, t.input_types, t.output_types) for t in self.templates]

    def save(self, path: Union[str, Path]) -> None:
        payload = {
            "embedding_dim": self.embedding_dim,
            "templates": [
                {
                    "phrase": t.phrase,
                    "input_types": str(t.input_types),
                    "output_types": str(t.output_types),
                    "embedding": [float(x) for x in t.embedding],
                }
                for t in self.templates
            ],
        }
        Path(path).write_text(json.dumps(payload) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path: Union[str, Path]) -> "TemplateLibrary":
        payload = json.loads(Path(path).read_text(encoding="utf-8"))
        templates = tuple(
            RelationTemplate(
                t["phrase"],
                TypeSet.parse(t["input_types"]),
                TypeSet.parse(t["output_types"]),
                np.asarray(t["embedding"], dtype=np.float64),
            )
            for t in payload["templates"]
        )
        return cls(templates, int(payload["embedding_dim"]))


def build_library(labeled_templates: Sequence[LabeledTemplate], embedder: Embedder) -> TemplateLibrary:
    if not labeled_templates:
        raise LibraryBuildError("template library needs at least one labeled relation")
    seen = set()
    templates = []
    dim = None
    for phrase, t_in, t_out in labeled_templates:
        key = normalize(phrase)
        if not key:
            raise LibraryBuildError("template phrase must be non-empty")
        if key in seen:
            raise LibraryBuildError(f"duplicate template phrase {phrase!r}")
        seen.add(key)
        vec = unit(embedder.embed(phrase))
        if dim is None:
            dim = vec.shape[0]
        elif vec.shape[0] != dim:
            raise LibraryBuildError(
                f"embedding for {phrase!r} has dimension {vec.shape[0]}, expected {dim}"
            )
        vec.setflags(write=False)
        templates.append(RelationTemplate(phrase.strip(), t_in, t_out, vec))
    return TemplateLibrary(tuple(templates), int(dim))


def lookup_relation_types(
    library: TemplateLibrary, relation: str, embedder: Embedder
) -> Tuple[TypeSet, TypeSet]:
    """Types of the most cosine-similar template; the earliest template wins ties."""
    if len(library) == 0:
        raise InvalidArgumentError("template library is empty")
    sims = library.matrix @ unit(embedder.embed(relation))
    best = library.templates[int(np.argmax(sims))]
    return best.input_types, best.output_types


def read_template_labels(path: Union[str, Path]) -> List[LabeledTemplate]:
    """Read ``phrase<TAB>input types<TAB>output types`` rows; types are comma-joined."""
    with open(path, encoding="utf-8", newline="") as fh:
        return _parse_label_rows(fh, str(path))


def default_template_labels() -> List[LabeledTemplate]:
    text = resources.files("chaincheck").joinpath("data/templates.tsv").read_text(encoding="utf-8")
    return _parse_label_rows(text.splitlines(), "templates.tsv")


def _parse_label_rows(lines: Iterable[str], source: str) -> List[LabeledTemplate]:
    rows = []
    for lineno, row in enumerate(csv.reader(lines, delimiter="\t"), start=1):
        if not row or not row[0].strip() or row[0].startswith("#"):
            continue
        if len(row) != 3:
            raise LibraryBuildError(f"{source}:{lineno}: expected 3 tab-separated fields")
        try:
            rows.append((row[0].strip(), TypeSet.parse(row[1]), TypeSet.parse(row[2])))
        except InvalidArgumentError as exc:
            raise LibraryBuildError(f"{source}:{lineno}: {exc}") from exc
    return rows


def write_template_labels(labels: Iterable[LabeledTemplate], path: Union[str, Path]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        for phrase, t_in, t_out in labels:
            fh.write(f"{phrase}\t{t_in}\t{t_out}\n")


def parse_place_or_thing(response: str) -> EntityType:
    m = _KIND_RE.search(response)
    if m is None:
        raise ClassificationError(f"no 'place' or 'thing' in response {response!r}", response)
    return EntityType.PLACE if m.group(0).lower() == "place" else EntityType.THING


def classify_entity(entity: str, linker: EntityLinker, llm: LanguageModel) -> EntityType:
    """Person if the linker says so, otherwise ask the model to pick place or thing."""
    if not entity or not entity.strip():
        raise InvalidArgumentError("entity must be non-empty")
    if linker.link(entity).is_person:
        return EntityType.PERSON
    req = CompletionRequest(prompts.entity_type(entity), temperature=0.0)
    response = llm.complete(req)
    try:
        return parse_place_or_thing(response)
    except ClassificationError:
        response = llm.complete(req)
        return parse_place_or_thing(response)
