"""Edit memory: subject-relation embeddings of edit triples with thresholded retrieval."""

from __future__ import annotations

import csv
import json
import logging
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Dict, List, Optional, Union

import numpy as np

from chaincheck.backends.base import Embedder, EntityLinker, unit
from chaincheck.errors import DatasetError, InvalidArgumentError
from chaincheck.types import EditTriple, normalize

log = logging.getLogger(__name__)

DEFAULT_TAU = 0.8
METRICS = ("cosine", "dot")
STYLES = ("sr", "cloze")
_SNAP_EPS = 1e-12


def sr_string(subject: str, relation: str) -> str:
    if not subject.strip() or not relation.strip():
        raise InvalidArgumentError("subject and relation must be non-empty")
    return f"{subject}, {relation}"


def split_sr(text: str):
    subject, _, relation = text.rpartition(", ")
    return subject, relation


def cloze_string(subject: str, relation: str) -> str:
    if not subject.strip() or not relation.strip():
        raise InvalidArgumentError("subject and relation must be non-empty")
    return f"The {relation} of {subject} is"


def render(subject: str, relation: str, style: str = "sr") -> str:
    return sr_string(subject, relation) if style == "sr" else cloze_string(subject, relation)


def similarity(a, b, metric: str = "cosine") -> float:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise InvalidArgumentError(f"dimension mismatch {a.shape} vs {b.shape}")
    if metric == "dot":
        return float(a @ b)
    if metric != "cosine":
        raise InvalidArgumentError(f"unknown metric {metric!r}")
    na, nb = float(np.linalg.norm(a)), float(np.linalg.norm(b))
    if na == 0.0 or nb == 0.0:
        raise InvalidArgumentError("cosine similarity is undefined for a zero vector")
    return float(snap_cosine(np.array((a @ b) / (na * nb))))


def snap_cosine(scores: np.ndarray) -> np.ndarray:
    """Clip cosines to [-1, 1] and round values within rounding noise of +-1 onto it.

    A unit vector dotted with itself can come out one ulp below 1.0; identical
    texts must score exactly 1.0 so that ``tau=1.0`` rejects them under the
    strict ``>`` rule.
    """
    scores = np.clip(scores, -1.0, 1.0)
    return np.where(np.abs(scores) > 1.0 - _SNAP_EPS, np.sign(scores), scores)


@dataclass(frozen=True)
class StoredEdit:
    triple: EditTriple
    sr_text: str
    embedding: np.ndarray


@dataclass(frozen=True)
class EditHit:
    object: str
    similarity: float
    index: int


class EditStore:
    """Edits keyed by the embedding of their (canonical subject, relation) text.

    Built by repeated :meth:`ingest` calls, then :meth:`freeze` makes it
    read-only so retrieval can run from many threads.
    """

    def __init__(self, tau: float = DEFAULT_TAU, metric: str = "cosine", style: str = "sr"):
        if metric not in METRICS:
            raise InvalidArgumentError(f"metric must be one of {METRICS}, got {metric!r}")
        if style not in STYLES:
            raise InvalidArgumentError(f"embedding style must be one of {STYLES}, got {style!r}")
        if metric == "cosine" and not 0.0 <= tau <= 1.0:
            raise InvalidArgumentError(f"cosine threshold {tau} outside [0, 1]")
        if metric == "dot" and tau < 0.0:
            raise InvalidArgumentError(f"dot threshold {tau} must be non-negative")
        self.tau = float(tau)
        self.metric = metric
        self.style = style
        self.edits: List[StoredEdit] = []
        self.subject_index: Dict[str, List[int]] = {}
        self.warnings: List[str] = []
        self._frozen = False
        self._matrix: Optional[np.ndarray] = None

    def __len__(self) -> int:
        return len(self.edits)

    @property
    def frozen(self) -> bool:
        return self._frozen

    def freeze(self) -> "EditStore":
        self._frozen = True
        self._build_matrix()
        return self

    def with_tau(self, tau: float) -> "EditStore":
        """Frozen copy sharing the stored embeddings but judged against another threshold."""
        clone = EditStore(tau, self.metric, self.style)
        clone.edits = self.edits
        clone.subject_index = self.subject_index
        clone.warnings = list(self.warnings)
        return clone.freeze()

    def _build_matrix(self) -> np.ndarray:
        if self._matrix is None:
            if self.edits:
                self._matrix = np.vstack([e.embedding for e in self.edits])
            else:
                self._matrix = np.zeros((0, 0))
        return self._matrix

    def ingest(self, t: EditTriple, linker: EntityLinker, embedder: Embedder) -> "EditStore":
        if self._frozen:
            raise InvalidArgumentError("edit store is frozen")
        canonical = linker.link(t.subject).canonical_name or t.subject.strip()
        triple = replace(t, canonical_subject=canonical)
        text = render(canonical, triple.relation, self.style)
        stored = StoredEdit(triple, text, unit(embedder.embed(text)))
        key = normalize(canonical)
        relation_key = normalize(triple.relation)
        for idx in self.subject_index.get(key, []):
            if normalize(self.edits[idx].triple.relation) == relation_key:
                msg = (
                    f"duplicate edit for ({canonical!r}, {triple.relation!r}): "
                    f"{self.edits[idx].triple.object!r} replaced by {triple.object!r}"
                )
                log.warning(msg)
                self.warnings.append(msg)
                self.edits[idx] = stored
                break
        else:
            self.subject_index.setdefault(key, []).append(len(self.edits))
            self.edits.append(stored)
        self._matrix = None
        return self

    def ingest_all(self, triples, linker: EntityLinker, embedder: Embedder) -> "EditStore":
        for t in triples:
            self.ingest(t, linker, embedder)
        return self

    def _scores(self, query: np.ndarray) -> np.ndarray:
        scores = self._build_matrix() @ query
        if self.metric == "cosine":
            # rows and query are unit vectors, so the product is already the cosine
            scores = snap_cosine(scores)
        return scores

    def _query(self, entity: str, relation: str, linker: EntityLinker, embedder: Embedder) -> np.ndarray:
        link = linker.link(entity)
        canonical = link.canonical_name if link.confidence > 0 else entity.strip()
        return self._scores(unit(embedder.embed(render(canonical, relation, self.style))))

    def retrieve(
        self, entity: str, relation: str, linker: EntityLinker, embedder: Embedder
    ) -> Optional[EditHit]:
        """Best edit for a hop if its similarity strictly exceeds ``tau``.

        Every stored edit is scored against the linked (subject, relation)
        text. Restricting the search to the subject's own edits could only
        return the same edit or a lower-scoring one, so there is no separate
        narrowed pass; a linker miss can never hide an edit.
        """
        if not self.edits:
            return None
        scores = self._query(entity, relation, linker, embedder)
        idx = int(np.argmax(scores))
        if scores[idx] > self.tau:
            return EditHit(self.edits[idx].triple.object, float(scores[idx]), idx)
        return None

    def retrieve_exhaustive(
        self, entity: str, relation: str, linker: EntityLinker, embedder: Embedder
    ) -> Optional[EditHit]:
        """Reference full scan in plain Python, used to cross-check :meth:`retrieve`."""
        if not self.edits:
            return None
        scores = self._query(entity, relation, linker, embedder)
        best = None
        for idx, score in enumerate(scores):
            if score > self.tau and (best is None or score > scores[best]):
                best = idx
        if best is None:
            return None
        return EditHit(self.edits[best].triple.object, float(scores[best]), best)

    def save(self, path: Union[str, Path]) -> None:
        payload = {
            "tau": self.tau,
            "metric": self.metric,
            "style": self.style,
            "edits": [
                {
                    "subject": e.triple.subject,
                    "relation": e.triple.relation,
                    "object": e.triple.object,
                    "canonical_subject": e.triple.canonical_subject,
                    "text": e.sr_text,
                    "embedding": [float(x) for x in e.embedding],
                }
                for e in self.edits
            ],
        }
        Path(path).write_text(json.dumps(payload, ensure_ascii=False) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path: Union[str, Path]) -> "EditStore":
        payload = json.loads(Path(path).read_text(encoding="utf-8"))
        store = cls(payload["tau"], payload["metric"], payload["style"])
        for item in payload["edits"]:
            triple = EditTriple(
                item["subject"], item["relation"], item["object"], item["canonical_subject"]
            )
            store.subject_index.setdefault(normalize(triple.key_subject), []).append(len(store.edits))
            store.edits.append(
                StoredEdit(triple, item["text"], np.asarray(item["embedding"], dtype=np.float64))
            )
        return store.freeze()


def ingest_edit(store: EditStore, t: EditTriple, linker: EntityLinker, embedder: Embedder) -> EditStore:
    return store.ingest(t, linker, embedder)


def retrieve(
    store: EditStore, entity: str, relation: str, linker: EntityLinker, embedder: Embedder
) -> Optional[EditHit]:
    return store.retrieve(entity, relation, linker, embedder)


def read_edits(path: Union[str, Path]) -> List[EditTriple]:
    """Read ``subject<TAB>relation<TAB>object`` lines; blank lines and ``#`` comments are skipped."""
    edits = []
    with open(path, encoding="utf-8", newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh, delimiter="\t"), start=1):
            if not row or not "".join(row).strip() or row[0].startswith("#"):
                continue
            if len(row) != 3:
                raise DatasetError(f"{path}:{lineno}: expected subject, relation, object")
            try:
                edits.append(EditTriple(row[0].strip(), row[1].strip(), row[2].strip()))
            except InvalidArgumentError as exc:
                raise DatasetError(f"{path}:{lineno}: {exc}") from exc
    return edits


def write_edits(edits, path: Union[str, Path]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        for t in edits:
            fh.write(f"{t.subject}\t{t.relation}\t{t.object}\n")
