"""Correcting long documents segment by segment.

Three strategies for the segment seams:

* Baseline: every segment corrected on its own.
* LCC: the previous segment's corrected output is given as context, so
  segments are corrected strictly left to right.
* LUC: the previous segment's raw OCR is given as context; segments stay
  independent and can run in parallel.

Outputs are trimmed against their own segment's OCR (which also drops any
echoed context) and joined with single spaces.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from typing import Sequence

from .corpus import PagePair
from .corrector.client import GenerationParams
from .corrector.engine import CorrectionRecord, Corrector, correct_segment
from .corrector.prompts import PromptTemplate
from .errors import ConfigError
from .metrics import PairScore, Side, aggregate, score_boundary_window, score_pair
from .segmenter import Segment, SegmentPair
from .textnorm import NormalizationPolicy


class StrategyKind(str, Enum):
    BASELINE = "Baseline"
    LCC = "LCC"
    LUC = "LUC"


@dataclass(frozen=True)
class BoundaryStrategy:
    kind: StrategyKind = StrategyKind.BASELINE
    # None means the whole left segment
    context_words: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "kind", StrategyKind(self.kind))
        if self.context_words is not None and self.context_words < 1:
            raise ValueError("context_words must be >= 1")

    def clip_context(self, text: str) -> str:
        if self.context_words is None:
            return text
        return " ".join(text.split()[-self.context_words:])


@dataclass(frozen=True)
class TemplateSet:
    plain: PromptTemplate
    with_context: PromptTemplate

    def __post_init__(self):
        if self.plain.requires_context or not self.with_context.requires_context:
            raise ConfigError("need one plain and one context-carrying template")


@dataclass
class DocumentCorrection:
    page_id: str
    strategy: BoundaryStrategy
    records: list[CorrectionRecord]
    stitched_text: str

    @property
    def partial(self) -> bool:
        return any(r.failed for r in self.records)


def stitch(records: Sequence[CorrectionRecord]) -> str:
    return " ".join(r.trimmed_output.strip() for r in records)


def correct_document(
    page: PagePair | str,
    segments: Sequence[Segment],
    strategy: BoundaryStrategy,
    templates: TemplateSet,
    params: GenerationParams,
    corrector: Corrector,
    workers: int = 4,
) -> DocumentCorrection:
    page_id = page if isinstance(page, str) else page.id
    segments = sorted(segments, key=lambda s: s.index)
    kind = strategy.kind

    if kind is StrategyKind.LCC:
        records: list[CorrectionRecord] = []
        for k, seg in enumerate(segments):
            if k == 0:
                records.append(correct_segment(seg, templates.plain, params, corrector))
            else:
                context = strategy.clip_context(records[-1].trimmed_output)
                records.append(correct_segment(seg, templates.with_context, params, corrector, context))
        return DocumentCorrection(page_id, strategy, records, stitch(records))

    def task(k: int) -> CorrectionRecord:
        seg = segments[k]
        if kind is StrategyKind.BASELINE or k == 0:
            return correct_segment(seg, templates.plain, params, corrector)
        context = strategy.clip_context(segments[k - 1].ocr_text)
        return correct_segment(seg, templates.with_context, params, corrector, context)

    if workers <= 1 or len(segments) <= 1:
        records = [task(k) for k in range(len(segments))]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            records = list(pool.map(task, range(len(segments))))
    return DocumentCorrection(page_id, strategy, records, stitch(records))


@dataclass
class BoundaryEvaluation:
    strategy: BoundaryStrategy
    overall: list[PairScore] = field(default_factory=list)
    left: list[PairScore] = field(default_factory=list)
    right: list[PairScore] = field(default_factory=list)
    documents: list[DocumentCorrection] = field(default_factory=list)

    def side_cer_pct(self, side: Side | str) -> float:
        scores = self.left if Side(side) is Side.LEFT else self.right
        return aggregate(scores).weighted_cer_pct

    def overall_cer_pct(self) -> float:
        return aggregate(self.overall).weighted_cer_pct

    def overall_wer_pct(self) -> float:
        return aggregate(self.overall).weighted_wer_pct

    def mean_coverage(self) -> float:
        recs = [r for d in self.documents for r in d.records]
        return sum(r.coverage for r in recs) / len(recs) if recs else 0.0

    def no_trim_count(self) -> int:
        return sum(r.no_trim for d in self.documents for r in d.records)


def evaluate_boundary_effect(
    pairs: Sequence[SegmentPair],
    strategy: BoundaryStrategy,
    templates: TemplateSet,
    params: GenerationParams,
    corrector: Corrector,
    policy: NormalizationPolicy | None = None,
    window_words: int = 10,
    workers: int = 4,
) -> BoundaryEvaluation:
    """Correct each neighbouring segment pair and score the seam windows."""
    policy = policy or NormalizationPolicy()

    def one(pair: SegmentPair) -> DocumentCorrection:
        return correct_document(
            pair.left.page_id, [pair.left, pair.right], strategy, templates, params, corrector, workers=1
        )

    if workers <= 1:
        docs = [one(p) for p in pairs]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            docs = list(pool.map(one, pairs))

    result = BoundaryEvaluation(strategy)
    for pair, doc in zip(pairs, docs):
        ex_id = f"{pair.left.id}+{pair.right.index}"
        gt, ocr = pair.gt_text, pair.ocr_text
        result.documents.append(doc)
        result.overall.append(score_pair(gt, ocr, doc.stitched_text, policy, ex_id))
        for side, bucket in ((Side.LEFT, result.left), (Side.RIGHT, result.right)):
            bucket.append(score_boundary_window(
                gt, ocr, doc.stitched_text, pair.local_boundary, side, policy, window_words, ex_id
            ))
    return result
