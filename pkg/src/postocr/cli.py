"""Command-line pipeline: synth, filter, segment, correct, evaluate, length-sweep, boundary-eval, tune.

Each subcommand writes into ``<output_dir>/<command>/``.  Artifacts are
deterministic for fixed inputs, config and seeds; wall-clock times go only
to the ``run.log`` sidecar in the same directory.

Exit codes: 0 success, 1 usage/config error, 2 data error, 3 endpoint error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace
from datetime import datetime, timezone
from pathlib import Path
from typing import Sequence

from . import report
from .boundary import correct_document, evaluate_boundary_effect
from .config import PipelineConfig
from .corpus import (
    PagePair,
    corpus_stats,
    filter_corpus,
    filtered_record,
    load_corpus,
    verdict_counts,
    Verdict,
)
from .corrector.engine import CorrectionRecord, correct_segments
from .corrector.factory import make_corrector
from .corrector.mocks import gt_lookup
from .errors import ConfigError, DataError, EmptyCorpus, EndpointError, NoEligiblePages, PageTooShort, PostOCRError
from .metrics import SCORE_COLUMNS, Side, aggregate, score_pair
from .segmenter import Segment, SegmentConfig, segment_by_word_index, segment_page, strided_pairs, word_spans
from .synth import clean_texts, synth_corpus
from .tuner import run_search, select_params, top_trials

log = logging.getLogger("postocr")


class RunLog:
    """Timestamped sidecar log; the only place wall-clock data is written."""

    def __init__(self, directory: Path, command: str):
        directory.mkdir(parents=True, exist_ok=True)
        self.path = directory / "run.log"
        self._fh = open(self.path, "a", encoding="utf-8")
        self._t0 = time.perf_counter()
        self.event("start", command=command)

    def event(self, kind: str, **fields) -> None:
        stamp = datetime.now(timezone.utc).isoformat(timespec="milliseconds")
        self._fh.write(json.dumps({"time": stamp, "event": kind, **fields}, ensure_ascii=False) + "\n")

    def timings(self, records: Sequence[CorrectionRecord]) -> None:
        for r in records:
            self.event("latency", segment_id=r.segment_id, seconds=round(r.latency, 6))

    def close(self) -> None:
        self.event("finish", seconds=round(time.perf_counter() - self._t0, 3))
        self._fh.close()


def _out(cfg: PipelineConfig, command: str) -> Path:
    d = cfg.output_dir / command
    d.mkdir(parents=True, exist_ok=True)
    return d


def _load_pages(cfg: PipelineConfig) -> list[PagePair]:
    if not cfg.raw["corpus"]:
        raise ConfigError("no corpus given (config key 'corpus' or --corpus)")
    pages = load_corpus(cfg.path(cfg.raw["corpus"]))
    if not pages:
        raise EmptyCorpus(f"corpus {cfg.raw['corpus']} has no pages")
    return pages


def _load_segments(cfg: PipelineConfig) -> list[Segment]:
    path = cfg.path(cfg.raw["segments"]) if cfg.raw["segments"] else cfg.output_dir / "segment" / "segments.jsonl"
    if not path.exists():
        raise ConfigError(f"segments file {path} not found; run 'segment' first or pass --segments")
    segs = [Segment.from_record(json.loads(ln)) for ln in path.read_text(encoding="utf-8").splitlines() if ln.strip()]
    if not segs:
        raise DataError(f"segments file {path} is empty")
    return segs


def _segments_for(page: PagePair, cfg: PipelineConfig, seg_cfg: SegmentConfig | None = None) -> list[Segment]:
    seg_cfg = seg_cfg or cfg.segment_cfg
    if cfg.word_aligned:
        return segment_by_word_index(page, seg_cfg)
    return segment_page(page, None, seg_cfg, cfg.align_cfg("filter"))


def _parallel(fn, items, workers):
    if workers <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


# -- commands ------------------------------------------------------------------

def _seed_texts(cfg: PipelineConfig) -> list[str]:
    s = cfg.raw["synth"]
    if s["seed_texts"]:
        path = cfg.path(s["seed_texts"])
        if path.is_dir():
            return [p.read_text(encoding="utf-8") for p in sorted(path.glob("*.txt"))]
        texts = []
        for line in path.read_text(encoding="utf-8").splitlines():
            if line.strip():
                rec = json.loads(line)
                texts.append(rec.get("text") or rec["gt_text"])
        return texts
    wpp = s["words_per_page"]
    wpp = tuple(wpp) if isinstance(wpp, list) else int(wpp)
    return clean_texts(int(s["n_pages"]), wpp, int(s["seed"]), cfg.language)


def cmd_synth(cfg: PipelineConfig) -> dict:
    out = _out(cfg, "synth")
    runlog = RunLog(out, "synth")
    s = cfg.raw["synth"]
    texts = _seed_texts(cfg)
    if not texts:
        raise EmptyCorpus("no seed texts")
    pages, noise, measured = synth_corpus(texts, float(s["target_cer"]), int(s["seed"]), cfg.language)
    report.write_jsonl(out / "corpus.jsonl", (p.to_record() for p in pages), cfg.hash)
    stats = corpus_stats(pages, cfg.policy)
    summary = {"noise": noise.to_dict(), "measured_cer": measured, "stats": stats.to_dict()}
    report.write_json(out / "summary.json", summary, cfg.hash)
    runlog.close()
    return summary


def cmd_filter(cfg: PipelineConfig) -> dict:
    pages = _load_pages(cfg)
    out = _out(cfg, "filter")
    runlog = RunLog(out, "filter")
    outcomes = filter_corpus(pages, cfg.filter_cfg, cfg.workers)
    kept = [filtered_record(p, o) for p, o in zip(pages, outcomes) if o.verdict is Verdict.KEPT]
    rejected = [filtered_record(p, o) for p, o in zip(pages, outcomes) if o.verdict is not Verdict.KEPT]
    report.write_jsonl(out / "kept.jsonl", kept, cfg.hash)
    report.write_jsonl(out / "rejected.jsonl", rejected, cfg.hash)
    counts = verdict_counts(outcomes)
    total = len(pages)
    rows = [(v, n, 100.0 * n / total) for v, n in counts.items()]
    report.write_csv(out / "counts.csv", ("verdict", "pages", "percent"), rows, cfg.hash)
    report.write_markdown(
        out / "summary.md", "Page filtering",
        [("Verdicts", report.markdown_table(("verdict", "pages", "percent"), rows))],
        cfg.hash,
    )
    runlog.close()
    return counts


def cmd_segment(cfg: PipelineConfig) -> list[Segment]:
    pages = _load_pages(cfg)
    out = _out(cfg, "segment")
    runlog = RunLog(out, "segment")

    def one(page):
        try:
            return _segments_for(page, cfg)
        except PageTooShort as exc:
            runlog.event("skipped", page_id=page.id, reason=str(exc))
            return []

    segments = [s for segs in _parallel(one, pages, cfg.workers) for s in segs]
    report.write_jsonl(out / "segments.jsonl", (s.to_record() for s in segments), cfg.hash)
    runlog.close()
    return segments


def _corrector(cfg: PipelineConfig, items):
    return make_corrector(cfg.endpoint(), gt_lookup(items))


def _correct_all(cfg, segments, corrector) -> list[CorrectionRecord]:
    strategy = cfg.strategy()
    templates = cfg.templates()
    by_page: dict[str, list[Segment]] = {}
    for s in segments:
        by_page.setdefault(s.page_id, []).append(s)
    docs = _parallel(
        lambda pid: correct_document(pid, by_page[pid], strategy, templates, cfg.params, corrector, workers=1),
        list(by_page), cfg.workers,
    )
    return [r for d in docs for r in d.records]


def cmd_correct(cfg: PipelineConfig) -> list[CorrectionRecord]:
    segments = _load_segments(cfg)
    out = _out(cfg, "correct")
    runlog = RunLog(out, "correct")
    corrector = _corrector(cfg, segments)
    records = _correct_all(cfg, segments, corrector)
    runlog.timings(records)
    report.write_jsonl(out / "corrections.jsonl", (r.to_record() for r in records), cfg.hash)
    failed = sum(r.failed for r in records)
    runlog.event("summary", segments=len(records), failed=failed, endpoint=cfg.endpoint().name)
    runlog.close()
    if records and failed == len(records):
        raise EndpointError(f"every request failed; first error: {records[0].error}")
    return records


def _load_corrections(cfg: PipelineConfig) -> dict[str, CorrectionRecord]:
    path = (
        cfg.path(cfg.raw["corrections"]) if cfg.raw["corrections"]
        else cfg.output_dir / "correct" / "corrections.jsonl"
    )
    if not path.exists():
        raise ConfigError(f"corrections file {path} not found; run 'correct' first or pass --corrections")
    recs = [CorrectionRecord.from_record(json.loads(ln)) for ln in path.read_text(encoding="utf-8").splitlines() if ln.strip()]
    return {r.segment_id: r for r in recs}


def cmd_evaluate(cfg: PipelineConfig) -> dict:
    segments = _load_segments(cfg)
    corrections = _load_corrections(cfg)
    out = _out(cfg, "evaluate")
    runlog = RunLog(out, "evaluate")
    scores = []
    for seg in segments:
        rec = corrections.get(seg.id)
        if rec is None:
            raise DataError(f"no correction for segment {seg.id}")
        scores.append(score_pair(seg.gt_text, seg.ocr_text, rec.trimmed_output, cfg.policy, seg.id))
    agg = aggregate(scores)
    recs = list(corrections.values())
    summary = {
        **agg.to_dict(),
        "endpoint": cfg.endpoint().name,
        "n_failed": sum(r.failed for r in recs),
        "n_no_trim": sum(r.no_trim for r in recs),
    }
    report.write_csv(out / "scores.csv", SCORE_COLUMNS, (list(s.row().values()) for s in scores), cfg.hash)
    report.write_jsonl(out / "scores.jsonl", (s.row() for s in scores), cfg.hash)
    report.write_csv(
        out / "scatter.csv", ("example_id", "cer_orig", "cer_post"),
        ((s.example_id, s.cer_orig, s.cer_post) for s in scores), cfg.hash,
    )
    report.write_json(out / "report.json", summary, cfg.hash)
    table = report.markdown_table(
        ("model", "CER%", "WER%", "examples"),
        [(summary["endpoint"], agg.weighted_cer_pct, agg.weighted_wer_pct, agg.n_examples)],
    )
    report.write_markdown(out / "summary.md", "Correction results", [("Overall", table)], cfg.hash)
    if cfg.raw["plots"]:
        report.plot_before_after(
            out / "cer_before_after.png", [s.cer_orig for s in scores], [s.cer_post for s in scores],
            summary["endpoint"],
        )
    runlog.close()
    return summary


def _book_of(page: PagePair) -> str:
    return page.metadata.get("book") or page.source or page.id


def _eligible(pages, min_words: int, per_book: int | None) -> list[PagePair]:
    taken: Counter = Counter()
    chosen = []
    for p in pages:
        if len(word_spans(p.ocr_text)) < min_words:
            continue
        book = _book_of(p)
        if per_book is not None and taken[book] >= per_book:
            continue
        taken[book] += 1
        chosen.append(p)
    return chosen


def cmd_length_sweep(cfg: PipelineConfig, lengths: Sequence[int] | None = None) -> list[tuple]:
    sw = cfg.raw["sweep"]
    lengths = list(lengths or sw["lengths"])
    pages = _eligible(_load_pages(cfg), int(sw["min_words"]), sw["max_pages_per_book"])
    if not pages:
        raise NoEligiblePages(f"no page has at least {sw['min_words']} OCR words")
    out = _out(cfg, "length-sweep")
    runlog = RunLog(out, "length-sweep")
    per_length = {}
    for n in lengths:
        seg_cfg = replace(cfg.segment_cfg, target_ocr_words=int(n), allow_short_page=True)
        per_length[n] = [s for p in pages for s in _segments_for(p, cfg, seg_cfg)]
    corrector = _corrector(cfg, [s for segs in per_length.values() for s in segs])
    rows = []
    for n in lengths:
        segs = per_length[n]
        records = correct_segments(segs, cfg.templates().plain, cfg.params, corrector, cfg.workers)
        runlog.timings(records)
        agg = aggregate(
            score_pair(s.gt_text, s.ocr_text, r.trimmed_output, cfg.policy, s.id) for s, r in zip(segs, records)
        )
        rows.append((n, len(segs), agg.weighted_cer_pct, agg.weighted_wer_pct))
    header = ("segment_words", "n_segments", "weighted_cer_pct", "weighted_wer_pct")
    report.write_csv(out / "length_sweep.csv", header, rows, cfg.hash)
    report.write_markdown(
        out / "summary.md", "Segment length sweep",
        [(f"{len(pages)} pages, endpoint {cfg.endpoint().name}", report.markdown_table(header, rows))],
        cfg.hash,
    )
    if cfg.raw["plots"]:
        report.plot_length_sweep(out / "length_sweep.png", lengths, [r[2] for r in rows], cfg.endpoint().name)
    runlog.close()
    return rows


def cmd_boundary_eval(cfg: PipelineConfig) -> dict:
    b = cfg.raw["boundary"]
    pages = _eligible(_load_pages(cfg), int(b["min_words"]), None)
    pairs = [
        pair for p in pages
        for pair in strided_pairs(p, None, int(b["seg_words"]), int(b["stride"]),
                                  cfg.segment_cfg.reliability_window, cfg.align_cfg("filter"))
    ]
    if not pairs:
        raise NoEligiblePages("no page yields a segment pair")
    out = _out(cfg, "boundary-eval")
    runlog = RunLog(out, "boundary-eval")
    corrector = _corrector(cfg, [seg for pair in pairs for seg in (pair.left, pair.right)])
    overall_rows, seam_rows = [], []
    for strategy in cfg.strategies():
        ev = evaluate_boundary_effect(
            pairs, strategy, cfg.templates(), cfg.params, corrector, cfg.policy,
            int(b["window_words"]), cfg.workers,
        )
        runlog.timings([r for d in ev.documents for r in d.records])
        name = strategy.kind.value
        overall_rows.append((name, len(pairs), ev.overall_cer_pct(), ev.overall_wer_pct(),
                             ev.mean_coverage(), ev.no_trim_count()))
        for side in (Side.LEFT, Side.RIGHT):
            seam_rows.append((name, side.value, ev.side_cer_pct(side)))
    h5 = ("strategy", "n_pairs", "weighted_cer_pct", "weighted_wer_pct", "mean_trim_coverage", "no_trim")
    h6 = ("strategy", "side", "weighted_cer_pct")
    report.write_csv(out / "overall.csv", h5, overall_rows, cfg.hash)
    report.write_csv(out / "boundary_cer.csv", h6, seam_rows, cfg.hash)
    report.write_markdown(
        out / "summary.md", "Segment boundary strategies",
        [("Whole pairs", report.markdown_table(h5, overall_rows)),
         (f"±{b['window_words']} words around the boundary", report.markdown_table(h6, seam_rows))],
        cfg.hash,
    )
    if cfg.raw["plots"]:
        report.plot_boundary(out / "boundary_cer.png", seam_rows)
    runlog.close()
    return {"overall": overall_rows, "boundary": seam_rows}


def cmd_tune(cfg: PipelineConfig) -> dict:
    t = cfg.raw["tune"]
    dev = _load_segments(cfg)
    out = _out(cfg, "tune")
    runlog = RunLog(out, "tune")
    corrector = _corrector(cfg, dev)
    trials = run_search(
        cfg.search_space(), dev, corrector, cfg.templates().plain,
        n_trials=int(t["n_trials"]), sampler_seed=int(t["sampler_seed"]), policy=cfg.policy,
        base=cfg.params, log_path=out / "trials.jsonl", workers=cfg.workers,
        record_extra={"config_hash": cfg.hash},
    )
    selected = select_params(trials, int(t["top_n"]))
    best = top_trials(trials, int(t["top_n"]))
    summary = {
        "selected": selected.to_dict(),
        "n_trials": len(trials),
        "n_failed": sum(not tr.ok for tr in trials),
        "top": [tr.trial_index for tr in best],
    }
    report.write_json(out / "selected.json", summary, cfg.hash)
    rows = [(tr.trial_index, tr.params.temperature, tr.params.top_k, tr.params.top_p, tr.weighted_cer_pct) for tr in best]
    report.write_markdown(
        out / "summary.md", "Parameter search",
        [("Selected", f"temperature {selected.temperature}, top_k {selected.top_k}, top_p {selected.top_p}"),
         ("Best trials", report.markdown_table(("trial", "temperature", "top_k", "top_p", "CER%"), rows))],
        cfg.hash,
    )
    runlog.close()
    return summary


COMMANDS = {
    "synth": cmd_synth,
    "filter": cmd_filter,
    "segment": cmd_segment,
    "correct": cmd_correct,
    "evaluate": cmd_evaluate,
    "length-sweep": cmd_length_sweep,
    "boundary-eval": cmd_boundary_eval,
    "tune": cmd_tune,
}

# flag -> config key
_FLAG_KEYS = {
    "corpus": "corpus",
    "segments": "segments",
    "corrections": "corrections",
    "out": "output_dir",
    "language": "language",
    "endpoint": "endpoint",
    "strategy": "strategy",
    "workers": "workers",
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="postocr", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("-c", "--config", help="JSON pipeline config")
        p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                       help="override a config key (dotted path, JSON value)")
        p.add_argument("--corpus")
        p.add_argument("--segments")
        p.add_argument("--corrections")
        p.add_argument("--out", help="output directory")
        p.add_argument("--language")
        p.add_argument("--endpoint", help="name of the configured endpoint to use")
        p.add_argument("--strategy", choices=["Baseline", "LCC", "LUC"])
        p.add_argument("--workers", type=int)
        p.add_argument("--no-plots", action="store_true")
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.WARNING - 10 * min(args.verbose, 2),
        format="%(levelname)s %(name)s: %(message)s",
    )
    overrides = list(args.set)
    for flag, key in _FLAG_KEYS.items():
        value = getattr(args, flag)
        if value is not None:
            overrides.append(f"{key}={json.dumps(value)}")
    if args.no_plots:
        overrides.append("plots=false")
    try:
        cfg = PipelineConfig.load(args.config, overrides)
        result = COMMANDS[args.command](cfg)
    except PostOCRError as exc:
        print(f"postocr {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return exc.exit_code
    if isinstance(result, dict):
        print(json.dumps(result, indent=2, default=str))
    elif isinstance(result, list):
        print(f"{len(result)} items written to {cfg.output_dir / args.command}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
