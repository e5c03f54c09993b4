"""Command-line entry point (``chaincheck``)."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Dict, List, Optional, Sequence

from chaincheck.backends.mock import MockEmbedder
from chaincheck.config import RunConfig, load_config, load_library, make_backends
from chaincheck.editstore import EditStore, read_edits
from chaincheck.errors import ChainCheckError, ConfigError
from chaincheck.evaluation import (
    Pipeline,
    ablate_threshold,
    cosine_grid,
    dot_grid,
    embedding_separation_study,
    evaluate,
    format_ablation,
    load_dataset,
    write_report,
)
from chaincheck.fixtures import STUDY_RELATIONS, STUDY_SUBJECTS, generate_synthetic_suite
from chaincheck.resolver import ResolutionTrace, answer
from chaincheck.typelib import build_library, default_template_labels, read_template_labels
from chaincheck.types import MultiHopQuestion

log = logging.getLogger("chaincheck")


def _common(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("configuration")
    g.add_argument("--config", help="JSON config file")
    g.add_argument("--backend", choices=("mock", "remote"))
    g.add_argument("--endpoint", help="completion service base URL")
    g.add_argument("--model")
    g.add_argument("--scripts", dest="mock_scripts", help="mock LLM script file")
    g.add_argument("--aliases", dest="alias_table", help="mock linker alias table (TSV)")
    g.add_argument("--templates", dest="template_library_path", help="template labels TSV or built library JSON")
    g.add_argument("--tau", type=float)
    g.add_argument("--metric", choices=("cosine", "dot"))
    g.add_argument("--embedding-style", dest="embedding_style", choices=("sr", "cloze"))
    g.add_argument("--anchor", dest="anchor_entity_type", action="store_const", const=True, default=None)
    g.add_argument("--max-chain-length", dest="max_chain_length", type=int)
    g.add_argument("--workers", type=int)
    g.add_argument("--out", help="output path (file or directory depending on command)")
    g.add_argument("-v", "--verbose", action="store_true")


_CONFIG_KEYS = (
    "backend endpoint model mock_scripts alias_table template_library_path tau metric "
    "embedding_style anchor_entity_type max_chain_length workers out"
).split()


def _config(args: argparse.Namespace) -> RunConfig:
    return load_config(args.config, {k: getattr(args, k, None) for k in _CONFIG_KEYS})


def _pipeline(cfg: RunConfig, **extra) -> Pipeline:
    backends = make_backends(cfg)
    return Pipeline(
        library=load_library(cfg, backends),
        backends=backends,
        tau=cfg.tau,
        metric=cfg.metric,
        style=cfg.embedding_style,
        anchor=cfg.anchor_entity_type,
        max_chain_length=cfg.max_chain_length,
        **extra,
    )


def _require_file(path: Optional[str], what: str) -> Path:
    if not path:
        raise ConfigError(f"{what} path is required")
    p = Path(path)
    if not p.is_file():
        raise FileNotFoundError(f"{what} not found: {p}")
    return p


def _parse_thresholds(text: str, metric: str) -> List[float]:
    if text in ("grid", "cosine", "dot"):
        return cosine_grid() if (text == "cosine" or (text == "grid" and metric == "cosine")) else dot_grid()
    return [float(x) for x in text.split(",") if x.strip()]


def _parse_dist(text: str) -> Dict[int, float]:
    out = {}
    for item in text.split(","):
        k, _, v = item.partition(":")
        out[int(k)] = float(v)
    return out


def cmd_build_typelib(args, cfg: RunConfig) -> int:
    backends = make_backends(cfg)
    labels = read_template_labels(_require_file(args.labels, "template labels")) if args.labels else default_template_labels()
    lib = build_library(labels, backends.embedder)
    out = Path(cfg.out if cfg.out != "out" else "typelib.json")
    lib.save(out)
    print(f"{len(lib)} templates (dim {lib.embedding_dim}) -> {out}")
    return 0


def cmd_ingest_edits(args, cfg: RunConfig) -> int:
    edits = read_edits(_require_file(args.edits, "edits file"))
    backends = make_backends(cfg)
    store = EditStore(cfg.tau, cfg.metric, cfg.embedding_style)
    store.ingest_all(edits, backends.linker, backends.embedder).freeze()
    out = Path(cfg.out if cfg.out != "out" else "store.json")
    store.save(out)
    print(f"{len(store)} edits -> {out}")
    for w in store.warnings:
        print(f"warning: {w}", file=sys.stderr)
    return 0


def _hop_summary(trace: ResolutionTrace) -> str:
    lines = []
    for k, h in enumerate(trace.hops, start=1):
        tag = f"edit {h.similarity:.3f}" if h.source == "edit" else "llm"
        lines.append(f"  hop {k}: ({h.entity_in}, {h.relation}) -> {h.entity_out}  [{tag}]")
    return "\n".join(lines)


def cmd_answer(args, cfg: RunConfig) -> int:
    if args.store:
        store = EditStore.load(_require_file(args.store, "edit store"))
        store = store.with_tau(cfg.tau) if store.metric == cfg.metric else store
    else:
        edits = read_edits(_require_file(args.edits, "edits file"))
        store = None
    pipeline = _pipeline(cfg)
    b = pipeline.backends
    if store is None:
        store = EditStore(cfg.tau, cfg.metric, cfg.embedding_style).ingest_all(edits, b.linker, b.embedder).freeze()
    trace = answer(
        MultiHopQuestion(args.question, args.entity),
        store,
        pipeline.library,
        b,
        anchor=cfg.anchor_entity_type,
        max_chain_length=cfg.max_chain_length,
    )
    trace_path = Path(args.trace) if args.trace else Path(cfg.out) / "trace.jsonl"
    trace_path.parent.mkdir(parents=True, exist_ok=True)
    trace_path.write_text(trace.to_json() + "\n", encoding="utf-8")
    print(trace.answer)
    print(_hop_summary(trace))
    return 0


def _write_ablation(rows, metric: str, out_dir: Path) -> Path:
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / f"ablation_{metric}.tsv"
    path.write_text(format_ablation(rows, metric), encoding="utf-8")
    return path


def cmd_evaluate(args, cfg: RunConfig) -> int:
    cases = load_dataset(_require_file(args.dataset, "dataset"))
    pipeline = _pipeline(cfg, use_edits=not args.no_edits)
    out_dir = Path(cfg.out)
    if args.thresholds:
        return _ablate(cases, pipeline, cfg, args.thresholds, out_dir)
    report, results = evaluate(cases, pipeline, workers=cfg.workers)
    write_report(report, results, out_dir, dataset=Path(args.dataset).stem)
    print(f"per-case {report.per_case_accuracy:.3f} / per-question {report.per_question_accuracy:.3f}")
    return 0


def _ablate(cases, pipeline, cfg: RunConfig, thresholds_arg: str, out_dir: Path) -> int:
    thresholds = _parse_thresholds(thresholds_arg, cfg.metric)
    rows = ablate_threshold(cases, pipeline, cfg.metric, thresholds, workers=cfg.workers)
    path = _write_ablation(rows, cfg.metric, out_dir)
    for tau, acc in rows:
        print(f"{tau:.2f}\t{acc:.3f}")
    print(f"{len(rows)} rows -> {path}")
    return 0


def cmd_ablate(args, cfg: RunConfig) -> int:
    cases = load_dataset(_require_file(args.dataset, "dataset"))
    return _ablate(cases, _pipeline(cfg), cfg, args.thresholds or "grid", Path(cfg.out))


def _read_lines(path: Optional[str], default) -> List[str]:
    if not path:
        return list(default)
    return [ln.strip() for ln in _require_file(path, "list file").read_text(encoding="utf-8").splitlines() if ln.strip()]


def cmd_separation_study(args, cfg: RunConfig) -> int:
    subjects = _read_lines(args.subjects, STUDY_SUBJECTS)
    relations = _read_lines(args.relations, STUDY_RELATIONS)
    embedder = make_backends(cfg).embedder if cfg.backend == "remote" else MockEmbedder(cfg.embedding_dim)
    study = embedding_separation_study(subjects, relations, embedder, cfg.embedding_style, cfg.metric, args.bin_width)
    out_dir = Path(cfg.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / f"separation_{cfg.embedding_style}_{cfg.metric}.tsv"
    path.write_text(study.to_tsv(), encoding="utf-8")
    print(
        f"{study.n_pairs} pairs; exact min {study.exact.min():.4f}; similar max {study.similar.max():.4f}; "
        f"overlapping bins: {len(study.overlapping_bins())} -> {path}"
    )
    return 0


def cmd_generate_suite(args, cfg: RunConfig) -> int:
    suite = generate_synthetic_suite(
        args.cases,
        _parse_dist(args.hops),
        _parse_dist(args.edit_counts),
        args.seed,
        misalignment=args.misalignment,
        full_edit=args.full_edit,
        distractors=args.distractors,
        embedding_dim=cfg.embedding_dim,
    )
    files = suite.write(cfg.out)
    print(json.dumps({k: str(v) for k, v in files.items()}, indent=1, sort_keys=True))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="chaincheck", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("build-typelib", help="embed labeled relation templates into a library file")
    p.add_argument("--labels", help="template labels TSV (default: packaged labels)")
    p.set_defaults(func=cmd_build_typelib)

    p = sub.add_parser("ingest-edits", help="link and embed an edits TSV into a store file")
    p.add_argument("edits")
    p.set_defaults(func=cmd_ingest_edits)

    p = sub.add_parser("answer", help="answer one multi-hop question")
    p.add_argument("question")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--edits", help="edits TSV")
    src.add_argument("--store", help="store file from ingest-edits")
    p.add_argument("--entity", help="initial entity, skipping mention detection")
    p.add_argument("--trace", help="trace output file (default: OUT/trace.jsonl)")
    p.set_defaults(func=cmd_answer)

    p = sub.add_parser("evaluate", help="run a MQuAKE-format dataset and write report files")
    p.add_argument("dataset")
    p.add_argument("--thresholds", help="comma list, or grid/cosine/dot, to run an ablation instead")
    p.add_argument("--no-edits", action="store_true", help="evaluate with an empty edit store")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("ablate", help="similarity threshold sweep")
    p.add_argument("dataset")
    p.add_argument("--thresholds", help="comma list, or grid/cosine/dot (default: grid for --metric)")
    p.set_defaults(func=cmd_ablate)

    p = sub.add_parser("separation-study", help="exact vs. similar embedding similarity histogram")
    p.add_argument("--subjects", help="file with one subject per line")
    p.add_argument("--relations", help="file with one relation per line")
    p.add_argument("--bin-width", type=float, default=0.05)
    p.set_defaults(func=cmd_separation_study)

    p = sub.add_parser("generate-suite", help="write a synthetic benchmark with mock scripts")
    p.add_argument("--cases", type=int, default=20)
    p.add_argument("--hops", default="2:0.5,3:0.3,4:0.2")
    p.add_argument("--edit-counts", default="1:1.0")
    p.add_argument("--seed", type=int, default=7)
    p.add_argument("--misalignment", action="store_true")
    p.add_argument("--full-edit", action="store_true")
    p.add_argument("--distractors", type=int, default=0)
    p.set_defaults(func=cmd_generate_suite)

    for action in sub.choices.values():
        _common(action)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = _config(args)
        return args.func(args, cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except ChainCheckError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
