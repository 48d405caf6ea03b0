"""Split page pairs into word-count segments with matching GT spans.

OCR words are counted directly; the GT side of each cut is found by
projecting the cut through the character alignment of the page.  A cut
that lands in a badly aligned stretch is moved forward to the next
reliable word: the first OCR word whose first character is aligned as a
match and opens a run of at least ``reliability_window`` match columns.
"""

from __future__ import annotations

import bisect
import re
from dataclasses import dataclass

from .align import FILTER_ALIGN, AlignConfig, AlignedTexts, Op, align_texts
from .corpus import PagePair
from .errors import DataError, PageTooShort

_WORD = re.compile(r"\S+")


def word_spans(text: str) -> list[tuple[int, int]]:
    return [m.span() for m in _WORD.finditer(text)]


@dataclass(frozen=True)
class SegmentConfig:
    target_ocr_words: int = 200
    reliability_window: int = 3
    allow_short_page: bool = False

    def __post_init__(self):
        if self.target_ocr_words < 1:
            raise ValueError("target_ocr_words must be >= 1")
        if self.reliability_window < 1:
            raise ValueError("reliability_window must be >= 1")

    @classmethod
    def for_language(cls, language: str, **kwargs) -> "SegmentConfig":
        words = 100 if language.lower().startswith("fi") else 200
        return cls(target_ocr_words=words, **kwargs)


@dataclass(frozen=True)
class Segment:
    page_id: str
    index: int
    ocr_span: tuple[int, int]
    gt_span: tuple[int, int]
    ocr_word_count: int
    ocr_text: str
    gt_text: str
    ocr_word_start: int = 0
    gt_word_start: int = 0

    @property
    def id(self) -> str:
        return f"{self.page_id}#{self.index}"

    def to_record(self) -> dict:
        return {
            "page_id": self.page_id,
            "index": self.index,
            "ocr_text": self.ocr_text,
            "gt_text": self.gt_text,
            "ocr_word_count": self.ocr_word_count,
        }

    @classmethod
    def from_record(cls, rec: dict) -> "Segment":
        return cls(
            page_id=rec["page_id"],
            index=int(rec["index"]),
            ocr_span=(0, len(rec["ocr_text"])),
            gt_span=(0, len(rec["gt_text"])),
            ocr_word_count=int(rec["ocr_word_count"]),
            ocr_text=rec["ocr_text"],
            gt_text=rec["gt_text"],
        )


@dataclass(frozen=True)
class SegmentPair:
    left: Segment
    right: Segment
    boundary_gt_word_index: int

    @property
    def local_boundary(self) -> int:
        """Boundary as a word index into ``left.gt_text + " " + right.gt_text``."""
        return self.boundary_gt_word_index - self.left.gt_word_start

    @property
    def gt_text(self) -> str:
        return self.left.gt_text + " " + self.right.gt_text

    @property
    def ocr_text(self) -> str:
        return self.left.ocr_text + " " + self.right.ocr_text


class BoundaryProjector:
    """Maps OCR word indices to GT word indices through a page alignment."""

    def __init__(self, page: PagePair, aligned: AlignedTexts, reliability_window: int = 3):
        self.page = page
        self.ocr_words = word_spans(page.ocr_text)
        self.gt_words = word_spans(page.gt_text)
        self._gt_starts = [s for s, _ in self.gt_words]
        self._window = reliability_window
        cols = aligned.result.columns
        self._cols = cols
        a_orig = list(aligned.a_map)
        a_col = {c.a: k for k, c in enumerate(cols) if c.a is not None}
        # column of each OCR word's first character
        self._word_col = [a_col[bisect.bisect_left(a_orig, s)] for s, _ in self.ocr_words]
        self._b_map = aligned.b_map

    def reliable(self, k: int) -> bool:
        col = self._word_col[k]
        run = self._cols[col:col + self._window]
        return len(run) == self._window and all(c.op is Op.MATCH for c in run)

    def gt_word(self, k: int) -> int:
        """GT word containing the character aligned to OCR word ``k``'s first character."""
        col = self._cols[self._word_col[k]]
        pos = self._b_map[col.b]
        return bisect.bisect_right(self._gt_starts, pos) - 1

    def next_cut(self, k: int, after_gt: int) -> tuple[int, int] | None:
        """First reliable OCR word at or after ``k`` projecting past GT word ``after_gt``."""
        for j in range(k, len(self.ocr_words)):
            if self.reliable(j):
                g = self.gt_word(j)
                if g > after_gt:
                    return j, g
        return None


def _make_segment(page, index, ocr_words, gt_words, o0, o1, g0, g1) -> Segment:
    ocr_span = (ocr_words[o0][0], ocr_words[o1 - 1][1]) if o1 > o0 else (0, 0)
    gt_span = (gt_words[g0][0], gt_words[g1 - 1][1]) if g1 > g0 else (0, 0)
    return Segment(
        page_id=page.id,
        index=index,
        ocr_span=ocr_span,
        gt_span=gt_span,
        ocr_word_count=o1 - o0,
        ocr_text=page.ocr_text[ocr_span[0]:ocr_span[1]],
        gt_text=page.gt_text[gt_span[0]:gt_span[1]],
        ocr_word_start=o0,
        gt_word_start=g0,
    )


def _build(page, ocr_words, gt_words, cuts) -> list[Segment]:
    bounds = [(0, 0)] + cuts + [(len(ocr_words), len(gt_words))]
    return [
        _make_segment(page, i, ocr_words, gt_words, o0, o1, g0, g1)
        for i, ((o0, g0), (o1, g1)) in enumerate(zip(bounds, bounds[1:]))
    ]


def segment_page(
    page: PagePair,
    aligned: AlignedTexts | None = None,
    cfg: SegmentConfig = SegmentConfig(),
    align_cfg: AlignConfig = FILTER_ALIGN,
) -> list[Segment]:
    """Cut a page every ``cfg.target_ocr_words`` OCR words; the last segment takes the rest."""
    ocr_words = word_spans(page.ocr_text)
    if len(ocr_words) < cfg.target_ocr_words and not cfg.allow_short_page:
        raise PageTooShort(
            f"page {page.id} has {len(ocr_words)} OCR words, fewer than {cfg.target_ocr_words}"
        )
    if not ocr_words or not word_spans(page.gt_text):
        raise DataError(f"page {page.id} has an empty side")
    if aligned is None:
        aligned = align_texts(page.ocr_text, page.gt_text, align_cfg)
    proj = BoundaryProjector(page, aligned, cfg.reliability_window)
    cuts: list[tuple[int, int]] = []
    pos, prev_gt = 0, 0
    while pos + cfg.target_ocr_words < len(ocr_words):
        cut = proj.next_cut(pos + cfg.target_ocr_words, prev_gt)
        if cut is None:
            break
        cuts.append(cut)
        pos, prev_gt = cut
    return _build(page, ocr_words, proj.gt_words, cuts)


def segment_by_word_index(page: PagePair, cfg: SegmentConfig = SegmentConfig(100)) -> list[Segment]:
    """Splitter for word-aligned data: OCR word i corresponds to GT word i."""
    ocr_words = word_spans(page.ocr_text)
    gt_words = word_spans(page.gt_text)
    if len(ocr_words) != len(gt_words):
        raise DataError(
            f"page {page.id} is not word-aligned ({len(ocr_words)} OCR vs {len(gt_words)} GT words)"
        )
    if len(ocr_words) < cfg.target_ocr_words and not cfg.allow_short_page:
        raise PageTooShort(f"page {page.id} has {len(ocr_words)} OCR words")
    step = cfg.target_ocr_words
    cuts = [(k, k) for k in range(step, len(ocr_words), step)]
    return _build(page, ocr_words, gt_words, cuts)


def strided_pairs(
    page: PagePair,
    aligned: AlignedTexts | None = None,
    seg_words: int = 200,
    stride: int = 100,
    reliability_window: int = 3,
    align_cfg: AlignConfig = FILTER_ALIGN,
) -> list[SegmentPair]:
    """Adjacent ``seg_words`` + ``seg_words`` segment pairs at every ``stride`` offset."""
    ocr_words = word_spans(page.ocr_text)
    n = len(ocr_words)
    if n < 2 * seg_words:
        return []
    if aligned is None:
        aligned = align_texts(page.ocr_text, page.gt_text, align_cfg)
    proj = BoundaryProjector(page, aligned, reliability_window)
    n_gt = len(proj.gt_words)
    pairs = []
    for offset in range(0, n - 2 * seg_words + 1, stride):
        if offset == 0:
            start = (0, 0)
        else:
            start = proj.next_cut(offset, -1)
        if start is None:
            continue
        mid = proj.next_cut(offset + seg_words, start[1])
        if mid is None:
            continue
        end_word = offset + 2 * seg_words
        end = (n, n_gt) if end_word >= n else proj.next_cut(end_word, mid[1])
        if end is None:
            end = (n, n_gt)
        left = _make_segment(page, len(pairs) * 2, ocr_words, proj.gt_words, start[0], mid[0], start[1], mid[1])
        right = _make_segment(page, len(pairs) * 2 + 1, ocr_words, proj.gt_words, mid[0], end[0], mid[1], end[1])
        pairs.append(SegmentPair(left, right, mid[1]))
    return pairs
