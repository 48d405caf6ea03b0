"""Page-pair corpus: JSONL I/O, page filtering, dataset statistics."""

from __future__ import annotations

import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Iterable

from rapidfuzz.distance import Levenshtein

from .align import FILTER_ALIGN, AlignConfig, align_texts, window_match_ratios
from .errors import DuplicateId, EmptyCorpus, MalformedRecord, SizeLimit
from .textnorm import NormalizationPolicy, collapse_whitespace, normalize_for_eval

log = logging.getLogger(__name__)

_REQUIRED = ("id", "ocr_text", "gt_text")


@dataclass(frozen=True)
class PagePair:
    id: str
    language: str
    ocr_text: str
    gt_text: str
    source: str = ""
    metadata: dict = field(default_factory=dict)

    def to_record(self) -> dict:
        return {
            "id": self.id,
            "language": self.language,
            "ocr_text": self.ocr_text,
            "gt_text": self.gt_text,
            "source": self.source,
            "metadata": dict(self.metadata),
        }


def _parse_record(obj, line_no: int) -> PagePair:
    if not isinstance(obj, dict):
        raise MalformedRecord(line_no, "not a JSON object")
    for key in _REQUIRED:
        if not isinstance(obj.get(key), str):
            raise MalformedRecord(line_no, f"missing or non-string {key!r}")
    metadata = obj.get("metadata") or {}
    if not isinstance(metadata, dict):
        raise MalformedRecord(line_no, "metadata must be an object")
    return PagePair(
        id=obj["id"],
        language=str(obj.get("language", "other")),
        ocr_text=obj["ocr_text"],
        gt_text=obj["gt_text"],
        source=str(obj.get("source", "")),
        metadata={str(k): str(v) for k, v in metadata.items()},
    )


def parse_corpus(lines: Iterable[str]) -> list[PagePair]:
    pages, seen = [], set()
    for line_no, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise MalformedRecord(line_no, str(exc)) from None
        page = _parse_record(obj, line_no)
        if page.id in seen:
            raise DuplicateId(page.id)
        seen.add(page.id)
        pages.append(page)
    return pages


def load_corpus(path: str | Path) -> list[PagePair]:
    with open(path, encoding="utf-8") as fh:
        return parse_corpus(fh)


def dump_jsonl(records: Iterable[dict]) -> str:
    return "".join(json.dumps(r, ensure_ascii=False) + "\n" for r in records)


def write_corpus(pages: Iterable[PagePair], path: str | Path) -> None:
    Path(path).write_text(dump_jsonl(p.to_record() for p in pages), encoding="utf-8")


# -- filtering ---------------------------------------------------------------------

class Verdict(str, Enum):
    KEPT = "Kept"
    BLANK = "Blank"
    TOO_SHORT = "TooShort"
    MISALIGNED = "Misaligned"
    OVERSIZE = "OversizePage"


@dataclass(frozen=True)
class FilterConfig:
    min_non_ws_chars: int = 150
    window: int = 100
    min_match_ratio: float = 0.10
    align_cfg: AlignConfig = FILTER_ALIGN

    def __post_init__(self):
        if not 0 < self.min_match_ratio < 1:
            raise ValueError("min_match_ratio must lie in (0, 1)")
        if self.window < 1:
            raise ValueError("window must be >= 1")


@dataclass(frozen=True)
class FilterOutcome:
    page_id: str
    verdict: Verdict
    min_window_ratio: float | None = None


def _non_ws_count(text: str) -> int:
    return sum(1 for ch in text if not ch.isspace())


def filter_page(page: PagePair, cfg: FilterConfig = FilterConfig()) -> FilterOutcome:
    """Blank, then too short, then misaligned; the first failing stage decides."""
    if not collapse_whitespace(page.ocr_text) or not collapse_whitespace(page.gt_text):
        return FilterOutcome(page.id, Verdict.BLANK)
    if min(_non_ws_count(page.ocr_text), _non_ws_count(page.gt_text)) < cfg.min_non_ws_chars:
        return FilterOutcome(page.id, Verdict.TOO_SHORT)
    try:
        aligned = align_texts(page.ocr_text, page.gt_text, cfg.align_cfg)
    except SizeLimit as exc:
        log.warning("page %s not aligned: %s", page.id, exc)
        return FilterOutcome(page.id, Verdict.OVERSIZE)
    worst = min(window_match_ratios(aligned.result, cfg.window))
    verdict = Verdict.MISALIGNED if worst < cfg.min_match_ratio else Verdict.KEPT
    return FilterOutcome(page.id, verdict, worst)


def filter_corpus(
    pages: list[PagePair], cfg: FilterConfig = FilterConfig(), workers: int = 4
) -> list[FilterOutcome]:
    """Filter pages concurrently; outcomes come back in input order."""
    if workers <= 1:
        return [filter_page(p, cfg) for p in pages]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda p: filter_page(p, cfg), pages))


def verdict_counts(outcomes: Iterable[FilterOutcome]) -> dict[str, int]:
    counts = {v.value: 0 for v in Verdict}
    for o in outcomes:
        counts[o.verdict.value] += 1
    return counts


def filtered_record(page: PagePair, outcome: FilterOutcome) -> dict:
    record = page.to_record()
    record["filter_verdict"] = outcome.verdict.value
    record["min_window_ratio"] = outcome.min_window_ratio
    return record


# -- statistics ----------------------------------------------------------------------

@dataclass(frozen=True)
class CorpusStats:
    pages: int
    ocr_words: int
    gt_words: int
    ocr_words_per_page: float
    weighted_cer: float
    weighted_wer: float

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def corpus_stats(pages: list[PagePair], policy: NormalizationPolicy | None = None) -> CorpusStats:
    """Dataset summary with page-length weighted error rates.

    CER is weighted by normalized GT character count and WER by GT word
    count, so both reduce to total edits over total reference length.
    """
    if not pages:
        raise EmptyCorpus("no pages")
    char_edits = char_len = word_edits = 0
    ocr_words = gt_words = 0
    for page in pages:
        pol = policy or NormalizationPolicy.for_language(page.language)
        gt = normalize_for_eval(page.gt_text, pol)
        ocr = normalize_for_eval(page.ocr_text, pol)
        gt_tokens, ocr_tokens = gt.split(), ocr.split()
        char_edits += Levenshtein.distance(gt, ocr)
        char_len += len(gt)
        word_edits += Levenshtein.distance(gt_tokens, ocr_tokens)
        gt_words += len(gt_tokens)
        ocr_words += len(ocr_tokens)
    return CorpusStats(
        pages=len(pages),
        ocr_words=ocr_words,
        gt_words=gt_words,
        ocr_words_per_page=ocr_words / len(pages),
        weighted_cer=char_edits / char_len if char_len else 0.0,
        weighted_wer=word_edits / gt_words if gt_words else 0.0,
    )
