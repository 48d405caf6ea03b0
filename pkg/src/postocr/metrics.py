"""CER/WER, relative improvement, and length-weighted aggregation."""

from __future__ import annotations

import csv
import io
import json
from dataclasses import asdict, dataclass, field
from enum import Enum
from typing import Iterable, Sequence

import numpy as np
from rapidfuzz.distance import Levenshtein

from .align import FILTER_ALIGN, AlignConfig, align_texts
from .errors import EmptyInput, EmptyReference, WindowOutOfRange
from .textnorm import NormalizationPolicy, normalize_for_eval

SCORE_COLUMNS = (
    "example_id", "cer_orig", "cer_post", "cer_pct",
    "wer_orig", "wer_post", "wer_pct", "ocr_char_len",
)


def cer(gt: str, hyp: str) -> float:
    if not gt:
        raise EmptyReference("ground truth is empty")
    return Levenshtein.distance(gt, hyp) / len(gt)


def wer(gt: str, hyp: str) -> float:
    ref = gt.split()
    if not ref:
        raise EmptyReference("ground truth has no words")
    return Levenshtein.distance(ref, hyp.split()) / len(ref)


def relative_improvement(orig: float, post: float) -> float:
    """Relative error reduction in percent, floored at -100.

    With a perfect input (``orig == 0``) there is nothing to improve: no
    change scores 0 and any damage scores -100.
    """
    if orig < 0 or post < 0:
        raise ValueError("error rates must be non-negative")
    if orig == 0:
        return 0.0 if post == 0 else -100.0
    return max(-100.0, (orig - post) / orig * 100.0)


@dataclass(frozen=True)
class PairScore:
    example_id: str
    cer_orig: float
    cer_post: float
    cer_pct: float
    wer_orig: float
    wer_post: float
    wer_pct: float
    ocr_char_len: int
    gt_char_len: int = 0

    def row(self) -> dict:
        return {k: getattr(self, k) for k in SCORE_COLUMNS}


def score_pair(
    gt: str,
    ocr: str,
    corrected: str,
    policy: NormalizationPolicy,
    example_id: str = "",
) -> PairScore:
    gt_n = normalize_for_eval(gt, policy)
    ocr_n = normalize_for_eval(ocr, policy)
    post_n = normalize_for_eval(corrected, policy)
    c0, c1 = cer(gt_n, ocr_n), cer(gt_n, post_n)
    w0, w1 = wer(gt_n, ocr_n), wer(gt_n, post_n)
    return PairScore(
        example_id=example_id,
        cer_orig=c0,
        cer_post=c1,
        cer_pct=relative_improvement(c0, c1),
        wer_orig=w0,
        wer_post=w1,
        wer_pct=relative_improvement(w0, w1),
        ocr_char_len=len(ocr_n),
        gt_char_len=len(gt_n),
    )


@dataclass(frozen=True)
class AggregateReport:
    n_examples: int
    weighted_cer_pct: float
    weighted_wer_pct: float
    mean_cer_orig: float
    mean_cer_post: float
    mean_wer_orig: float
    mean_wer_post: float
    cer_orig_quantiles: dict = field(default_factory=dict)
    cer_post_quantiles: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)


QUANTILES = (0.0, 0.25, 0.5, 0.75, 1.0)


def _quantiles(values: Sequence[float]) -> dict:
    qs = np.quantile(np.asarray(values, dtype=float), QUANTILES)
    return {f"q{int(q * 100)}": float(v) for q, v in zip(QUANTILES, qs)}


def weighted_mean(values: Sequence[float], weights: Sequence[float]) -> float:
    total = float(sum(weights))
    if total <= 0:
        return float(np.mean(values))
    return sum(v * w for v, w in zip(values, weights)) / total


def aggregate(scores: Iterable[PairScore]) -> AggregateReport:
    """Length-weighted summary; weights are normalized OCR character counts.

    Examples with zero error both before and after correction get weight 0
    in the relative-improvement averages.
    """
    scores = list(scores)
    if not scores:
        raise EmptyInput("no scores to aggregate")
    # an example that was error-free before and after has no defined
    # improvement (0/0), so it carries no weight in the percentages
    cer_w = [0 if s.cer_orig == 0 and s.cer_post == 0 else s.ocr_char_len for s in scores]
    wer_w = [0 if s.wer_orig == 0 and s.wer_post == 0 else s.ocr_char_len for s in scores]
    return AggregateReport(
        n_examples=len(scores),
        weighted_cer_pct=weighted_mean([s.cer_pct for s in scores], cer_w),
        weighted_wer_pct=weighted_mean([s.wer_pct for s in scores], wer_w),
        mean_cer_orig=float(np.mean([s.cer_orig for s in scores])),
        mean_cer_post=float(np.mean([s.cer_post for s in scores])),
        mean_wer_orig=float(np.mean([s.wer_orig for s in scores])),
        mean_wer_post=float(np.mean([s.wer_post for s in scores])),
        cer_orig_quantiles=_quantiles([s.cer_orig for s in scores]),
        cer_post_quantiles=_quantiles([s.cer_post for s in scores]),
    )


# -- boundary windows ----------------------------------------------------------

class Side(str, Enum):
    LEFT = "L"
    RIGHT = "R"


@dataclass(frozen=True)
class WindowText:
    gt: str
    hyp: str
    cer: float


def _word_spans(text: str) -> list[tuple[int, int]]:
    spans, start = [], None
    for i, ch in enumerate(text):
        if ch.isspace():
            if start is not None:
                spans.append((start, i))
                start = None
        elif start is None:
            start = i
    if start is not None:
        spans.append((start, len(text)))
    return spans


def locate_window(
    gt: str, hyp: str, gt_start: int, gt_end: int, cfg: AlignConfig = FILTER_ALIGN
) -> str:
    """Text of ``hyp`` aligned to ``gt[gt_start:gt_end]`` under a global alignment.

    Inserted hyp characters that fall between aligned window characters
    belong to the window; insertions on its outer edges do not.
    """
    aligned = align_texts(gt, hyp, cfg)
    cols = aligned.result.columns
    inside = [
        k for k, c in enumerate(cols)
        if c.a is not None and gt_start <= aligned.a_map[c.a] < gt_end
    ]
    if not inside:
        return ""
    b_idx = [c.b for c in cols[inside[0]:inside[-1] + 1] if c.b is not None]
    if not b_idx:
        return ""
    return hyp[aligned.b_map[b_idx[0]]:aligned.b_map[b_idx[-1]] + 1]


def boundary_window_cer(
    gt: str,
    hyp: str,
    boundary_gt_word_index: int,
    window_words: int = 10,
    side: Side | str = Side.LEFT,
) -> WindowText:
    """CER within ``window_words`` GT words on one side of a word boundary.

    ``boundary_gt_word_index`` is the index of the first GT word right of the
    boundary.  Both texts should already be normalized.
    """
    side = Side(side)
    words = _word_spans(gt)
    if side is Side.LEFT:
        lo, hi = boundary_gt_word_index - window_words, boundary_gt_word_index
    else:
        lo, hi = boundary_gt_word_index, boundary_gt_word_index + window_words
    if lo < 0 or hi > len(words) or window_words < 1:
        raise WindowOutOfRange(
            f"window [{lo}, {hi}) outside the {len(words)} GT words"
        )
    gt_start, gt_end = words[lo][0], words[hi - 1][1]
    gt_window = gt[gt_start:gt_end]
    hyp_window = locate_window(gt, hyp, gt_start, gt_end)
    return WindowText(gt_window, hyp_window, cer(gt_window, hyp_window))


def score_boundary_window(
    gt: str,
    ocr: str,
    corrected: str,
    boundary_gt_word_index: int,
    side: Side | str,
    policy: NormalizationPolicy,
    window_words: int = 10,
    example_id: str = "",
) -> PairScore:
    """PairScore restricted to the GT window on one side of a boundary."""
    gt_n = normalize_for_eval(gt, policy)
    ocr_n = normalize_for_eval(ocr, policy)
    post_n = normalize_for_eval(corrected, policy)
    before = boundary_window_cer(gt_n, ocr_n, boundary_gt_word_index, window_words, side)
    after = boundary_window_cer(gt_n, post_n, boundary_gt_word_index, window_words, side)
    w0, w1 = wer(before.gt, before.hyp), wer(after.gt, after.hyp)
    return PairScore(
        example_id=example_id,
        cer_orig=before.cer,
        cer_post=after.cer,
        cer_pct=relative_improvement(before.cer, after.cer),
        wer_orig=w0,
        wer_post=w1,
        wer_pct=relative_improvement(w0, w1),
        ocr_char_len=max(len(before.hyp), 1),
        gt_char_len=len(before.gt),
    )


# -- serialization ---------------------------------------------------------------

def _fmt(value) -> str:
    if isinstance(value, float):
        return f"{value:.6f}"
    return str(value)


def scores_to_csv(scores: Iterable[PairScore]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(SCORE_COLUMNS)
    for s in scores:
        writer.writerow([_fmt(v) for v in s.row().values()])
    return buf.getvalue()


def scores_to_jsonl(scores: Iterable[PairScore]) -> str:
    return "".join(json.dumps(s.row(), ensure_ascii=False) + "\n" for s in scores)
