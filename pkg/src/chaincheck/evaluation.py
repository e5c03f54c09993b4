"""Evaluation harness over MQuAKE-format edit cases.

Dataset fields read per record (anything else is ignored):

* ``case_id``
* ``requested_rewrite[*]``: ``subject``, ``target_new.str`` and the relation
  phrase, taken from ``relation`` when present, else from the matching
  ``orig.new_triples_labeled`` triple, else from ``prompt`` minus ``{}``
* ``questions`` (exactly three paraphrases)
* ``new_answer`` and ``new_answer_alias``
* hop count from ``new_single_hops`` (falling back to ``single_hops`` or
  ``orig.new_triples_labeled``)
"""

from __future__ import annotations

import json
import logging
import unicodedata
from collections import defaultdict
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from chaincheck.align import MAX_CHAIN_LENGTH
from chaincheck.backends.base import Backends, Embedder, unit
from chaincheck.editstore import DEFAULT_TAU, EditStore, render, snap_cosine
from chaincheck.errors import ChainCheckError, DatasetError, InvalidArgumentError, ResolutionError
from chaincheck.resolver import answer as answer_question
from chaincheck.typelib import TemplateLibrary
from chaincheck.types import EditTriple, MultiHopQuestion

log = logging.getLogger(__name__)

_PUNCT = ".,;:!?\"'"


@dataclass(frozen=True)
class EditCase:
    case_id: Any
    edits: Tuple[EditTriple, ...]
    questions: Tuple[str, ...]
    expected_answer: str
    answer_aliases: Tuple[str, ...] = ()
    hop_count: int = 1
    edit_count: int = 1

    def __post_init__(self) -> None:
        if len(self.questions) != 3:
            raise InvalidArgumentError(f"expected 3 questions, got {len(self.questions)}")
        if self.edit_count != len(self.edits) or self.edit_count < 1:
            raise InvalidArgumentError(f"edit_count {self.edit_count} does not match {len(self.edits)} edits")
        if self.hop_count < 1:
            raise InvalidArgumentError("hop_count must be positive")


def _relation_for(rewrite: dict, record: dict) -> str:
    if rewrite.get("relation"):
        return str(rewrite["relation"])
    subject = rewrite["subject"]
    target = rewrite["target_new"]["str"]
    for triple in record.get("orig", {}).get("new_triples_labeled", []):
        if len(triple) == 3 and triple[0] == subject and triple[2] == target:
            return str(triple[1])
    prompt = str(rewrite.get("prompt", ""))
    relation = prompt.replace("{}", " ").strip().strip(_PUNCT).strip()
    if not relation:
        raise KeyError("relation")
    return " ".join(relation.split())


def parse_case(record: dict) -> EditCase:
    edits = tuple(
        EditTriple(str(rw["subject"]), _relation_for(rw, record), str(rw["target_new"]["str"]))
        for rw in record["requested_rewrite"]
    )
    questions = tuple(str(q) for q in record["questions"])
    if len(questions) != 3:
        raise InvalidArgumentError(f"expected 3 questions, got {len(questions)}")
    hops = record.get("new_single_hops") or record.get("single_hops")
    if not hops:
        hops = record.get("orig", {}).get("new_triples_labeled")
    if not hops:
        raise KeyError("new_single_hops")
    return EditCase(
        case_id=record.get("case_id"),
        edits=edits,
        questions=questions,
        expected_answer=str(record["new_answer"]),
        answer_aliases=tuple(str(a) for a in record.get("new_answer_alias", [])),
        hop_count=len(hops),
        edit_count=len(edits),
    )


def load_dataset(path: Union[str, Path]) -> List[EditCase]:
    text = Path(path).read_text(encoding="utf-8")
    if not text.strip():
        return []
    try:
        data = json.loads(text)
    except json.JSONDecodeError:
        data = []
        for lineno, line in enumerate(text.splitlines(), start=1):
            if not line.strip():
                continue
            try:
                data.append(json.loads(line))
            except json.JSONDecodeError as exc:
                raise DatasetError(f"{path}:{lineno}: invalid JSON ({exc.msg})") from exc
    if not isinstance(data, list):
        raise DatasetError(f"{path}: expected a list of case records")
    cases = []
    for i, record in enumerate(data):
        try:
            cases.append(parse_case(record))
        except InvalidArgumentError as exc:
            raise DatasetError(str(exc), case_index=i) from exc
        except (KeyError, TypeError, IndexError) as exc:
            raise DatasetError(f"malformed record (missing or bad field {exc})", case_index=i) from exc
    return cases


def _norm_answer(text: str) -> str:
    return unicodedata.normalize("NFC", text).strip().casefold().rstrip(_PUNCT).strip()


def judge(answer: str, expected: str, aliases: Sequence[str] = ()) -> bool:
    got = _norm_answer(answer)
    return any(got == _norm_answer(a) for a in (expected, *aliases))


@dataclass
class Pipeline:
    library: TemplateLibrary
    backends: Backends
    tau: float = DEFAULT_TAU
    metric: str = "cosine"
    style: str = "sr"
    anchor: bool = False
    max_chain_length: int = MAX_CHAIN_LENGTH
    use_edits: bool = True

    def build_store(self, edits: Sequence[EditTriple], tau: Optional[float] = None) -> EditStore:
        store = EditStore(self.tau if tau is None else tau, self.metric, self.style)
        if self.use_edits:
            store.ingest_all(edits, self.backends.linker, self.backends.embedder)
        return store.freeze()


@dataclass(frozen=True)
class QuestionResult:
    case_id: Any
    index: int
    question: str
    answer: str
    correct: bool
    hop_count: int
    edit_count: int
    trace: Optional[Dict[str, Any]]
    error: Optional[str] = None

    def to_dict(self) -> Dict[str, Any]:
        return {
            "case_id": self.case_id,
            "index": self.index,
            "question": self.question,
            "answer": self.answer,
            "correct": self.correct,
            "hop_count": self.hop_count,
            "edit_count": self.edit_count,
            "error": self.error,
            "trace": self.trace,
        }


@dataclass
class EvalReport:
    per_case_accuracy: float
    per_question_accuracy: float
    n_cases: int
    n_questions: int
    by_hops: Dict[int, Tuple[float, float]] = field(default_factory=dict)
    by_edits: Dict[int, Tuple[float, float]] = field(default_factory=dict)
    by_temperature: Dict[float, Tuple[int, float]] = field(default_factory=dict)
    chain_length_stats: Dict[str, int] = field(default_factory=dict)
    traces: str = "traces.jsonl"

    def to_dict(self) -> Dict[str, Any]:
        return {
            "per_case_accuracy": self.per_case_accuracy,
            "per_question_accuracy": self.per_question_accuracy,
            "n_cases": self.n_cases,
            "n_questions": self.n_questions,
            "by_hops": {str(k): list(v) for k, v in sorted(self.by_hops.items())},
            "by_edits": {str(k): list(v) for k, v in sorted(self.by_edits.items())},
            "by_temperature": {f"{k:.1f}": list(v) for k, v in sorted(self.by_temperature.items())},
            "chain_length_stats": dict(self.chain_length_stats),
            "traces": self.traces,
        }


def _run_case(case: EditCase, pipeline: Pipeline, tau: Optional[float]) -> List[QuestionResult]:
    store = pipeline.build_store(case.edits, tau)
    results = []
    for i, text in enumerate(case.questions):
        q = MultiHopQuestion(text)
        try:
            trace = answer_question(
                q,
                store,
                pipeline.library,
                pipeline.backends,
                anchor=pipeline.anchor,
                max_chain_length=pipeline.max_chain_length,
            )
        except ResolutionError as exc:
            partial = exc.partial_trace.to_dict() if exc.partial_trace is not None else None
            results.append(
                QuestionResult(case.case_id, i, text, "", False, case.hop_count, case.edit_count, partial, str(exc))
            )
            continue
        except ChainCheckError as exc:
            results.append(
                QuestionResult(case.case_id, i, text, "", False, case.hop_count, case.edit_count, None, str(exc))
            )
            continue
        ok = judge(trace.answer, case.expected_answer, case.answer_aliases)
        results.append(
            QuestionResult(case.case_id, i, text, trace.answer, ok, case.hop_count, case.edit_count, trace.to_dict())
        )
    return results


def run_questions(
    cases: Sequence[EditCase], pipeline: Pipeline, *, workers: int = 1, tau: Optional[float] = None
) -> List[List[QuestionResult]]:
    if workers <= 1:
        return [_run_case(c, pipeline, tau) for c in cases]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda c: _run_case(c, pipeline, tau), cases))


def _accuracy(hits: int, total: int) -> float:
    return hits / total if total else 0.0


def summarize(cases: Sequence[EditCase], per_case: Sequence[Sequence[QuestionResult]]) -> EvalReport:
    n = len(cases)
    case_ok = [any(r.correct for r in rs) for rs in per_case]
    flat = [r for rs in per_case for r in rs]
    report = EvalReport(
        per_case_accuracy=_accuracy(sum(case_ok), n),
        per_question_accuracy=_accuracy(sum(r.correct for r in flat), len(flat)),
        n_cases=n,
        n_questions=len(flat),
    )

    for attr, target in (("hop_count", report.by_hops), ("edit_count", report.by_edits)):
        groups: Dict[int, List[int]] = defaultdict(list)
        for idx, case in enumerate(cases):
            groups[getattr(case, attr)].append(idx)
        for key, idxs in sorted(groups.items()):
            qs = [r for i in idxs for r in per_case[i]]
            target[key] = (
                _accuracy(sum(case_ok[i] for i in idxs), len(idxs)),
                _accuracy(sum(r.correct for r in qs), len(qs)),
            )

    temps: Dict[float, List[bool]] = defaultdict(list)
    lengths = {"under": 0, "correct": 0, "over": 0}
    for r in flat:
        d = (r.trace or {}).get("decomposition")
        if not d:
            continue
        # chains still misaligned after the last temperature land in the 1.0 bin
        temps[d["final_temperature"] if d["fully_aligned"] else 1.0].append(r.correct)
        n_rel = len(d["chain"])
        lengths["under" if n_rel < r.hop_count else "over" if n_rel > r.hop_count else "correct"] += 1
    report.by_temperature = {t: (len(v), _accuracy(sum(v), len(v))) for t, v in sorted(temps.items())}
    report.chain_length_stats = lengths
    return report


def evaluate(
    cases: Sequence[EditCase], pipeline: Pipeline, *, workers: int = 1
) -> Tuple[EvalReport, List[QuestionResult]]:
    """Answer all three paraphrases of every case against a per-case edit store."""
    per_case = run_questions(cases, pipeline, workers=workers)
    return summarize(cases, per_case), [r for rs in per_case for r in rs]


def format_table(report: EvalReport, dataset: str = "dataset", method: str = "chaincheck") -> str:
    width = max(len(method), 8)
    lines = [
        f"{'Dataset':<{width}} || {dataset}",
        f"{'Accuracy':<{width}} || {'Case':>8} | {'Question':>8}",
        f"{method:<{width}} || {100 * report.per_case_accuracy:8.2f} | {100 * report.per_question_accuracy:8.2f}",
    ]
    return "\n".join(lines) + "\n"


def write_report(
    report: EvalReport,
    results: Sequence[QuestionResult],
    out_dir: Union[str, Path],
    dataset: str = "dataset",
) -> Dict[str, Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {"report": out / "report.json", "table": out / "table.txt", "traces": out / report.traces}
    paths["report"].write_text(json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n", encoding="utf-8")
    paths["table"].write_text(format_table(report, dataset), encoding="utf-8")
    with open(paths["traces"], "w", encoding="utf-8") as fh:
        for r in results:
            fh.write(json.dumps(r.to_dict(), sort_keys=True, ensure_ascii=False) + "\n")
    return paths


def _grid(start: float, stop: float, step: float = 0.05) -> List[float]:
    n = int(round((stop - start) / step))
    return [round(start + i * step, 2) for i in range(n + 1)]


def cosine_grid() -> List[float]:
    return _grid(0.0, 1.0)


def dot_grid() -> List[float]:
    return _grid(1.0, 2.0)


def ablate_threshold(
    cases: Sequence[EditCase],
    pipeline: Pipeline,
    metric: str,
    thresholds: Sequence[float],
    *,
    workers: int = 1,
) -> List[Tuple[float, float]]:
    """Per-case accuracy of the full pipeline at each similarity threshold."""
    if list(thresholds) != sorted(thresholds):
        raise InvalidArgumentError("thresholds must be sorted ascending")
    swept = Pipeline(**{**pipeline.__dict__, "metric": metric})
    rows = []
    for tau in thresholds:
        per_case = run_questions(cases, swept, workers=workers, tau=tau)
        rows.append((float(tau), summarize(cases, per_case).per_case_accuracy))
    return rows


def format_ablation(rows: Sequence[Tuple[float, float]], metric: str) -> str:
    lines = [f"threshold\tper_case_accuracy\tmetric"]
    lines += [f"{tau:.2f}\t{acc:.6f}\t{metric}" for tau, acc in rows]
    return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class SeparationStudy:
    exact: np.ndarray
    similar: np.ndarray
    bin_width: float
    histogram: Dict[float, Tuple[int, int]]

    @property
    def n_pairs(self) -> int:
        return int(self.exact.shape[0])

    def overlapping_bins(self) -> List[float]:
        return [b for b, (e, s) in self.histogram.items() if e and s]

    def to_tsv(self) -> str:
        lines = ["bin\texact\tsimilar"]
        lines += [f"{b:.2f}\t{e}\t{s}" for b, (e, s) in sorted(self.histogram.items())]
        return "\n".join(lines) + "\n"


def embedding_separation_study(
    subjects: Sequence[str],
    relations: Sequence[str],
    embedder: Embedder,
    style: str = "sr",
    metric: str = "cosine",
    bin_width: float = 0.05,
) -> SeparationStudy:
    """Similarity of every subject-relation embedding against itself and all others.

    Values are binned to the nearest multiple of ``bin_width``.
    """
    if not subjects or not relations:
        raise InvalidArgumentError("subjects and relations must be non-empty")
    vecs = np.vstack([embedder.embed(render(s, r, style)) for s in subjects for r in relations])
    if metric == "cosine":
        vecs = np.vstack([unit(v) for v in vecs])
    elif metric != "dot":
        raise InvalidArgumentError(f"unknown metric {metric!r}")
    sims = vecs @ vecs.T
    if metric == "cosine":
        sims = snap_cosine(sims)
    n = sims.shape[0]
    mask = ~np.eye(n, dtype=bool)
    exact = np.diag(sims).copy()
    similar = sims[mask]
    hist: Dict[float, List[int]] = defaultdict(lambda: [0, 0])
    for col, values in ((0, exact), (1, similar)):
        centers, counts = np.unique(np.round(values / bin_width).astype(int), return_counts=True)
        for c, k in zip(centers, counts):
            hist[round(float(c) * bin_width, 10)][col] += int(k)
    return SeparationStudy(exact, similar, bin_width, {b: (v[0], v[1]) for b, v in sorted(hist.items())})
