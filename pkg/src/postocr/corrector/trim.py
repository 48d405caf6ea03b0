"""Alignment-based removal of text a model adds around its correction."""

from __future__ import annotations

import re
from dataclasses import dataclass

from ..align import TRIM_ALIGN, AlignConfig, align_local, aligned_region, strip_and_map


@dataclass(frozen=True)
class TrimResult:
    trimmed: str
    span: tuple[int, int]
    no_trim: bool = False


# Unrelated prose scores about 0.15-0.22 per character against an OCR text;
# a genuine correction of even 50%-noisy OCR scores above 0.4.
MIN_SCORE_RATIO = 0.3

_WORD_BEFORE = re.compile(r"(\S+)\s+\Z")
_WORD_AFTER = re.compile(r"\s+(\S+)")


def trim_overgeneration(
    ocr_text: str,
    raw_output: str,
    cfg: AlignConfig = TRIM_ALIGN,
    min_score_ratio: float = MIN_SCORE_RATIO,
) -> TrimResult:
    """Keep the part of ``raw_output`` between its first and last characters aligned to the OCR.

    The span is then grown at its edges to recover words the alignment
    missed (see ``_is_leftover``, ``_widen`` and ``_take_edge_words``).
    Whitespace and '-' are ignored for the alignment but kept inside the
    returned span.  If the best local alignment is empty or scores below
    ``min_score_ratio`` per OCR character (a refusal or unrelated answer), the
    output is returned untouched with ``no_trim`` set.
    """
    raw_stripped, raw_map = strip_and_map(raw_output, cfg.ignore_chars)
    ocr_stripped, _ = strip_and_map(ocr_text, cfg.ignore_chars)
    result = align_local(raw_stripped, ocr_stripped, cfg)
    if result.empty or result.score_value < min_score_ratio * len(ocr_stripped):
        return TrimResult(raw_output, (0, len(raw_output)), no_trim=True)
    start, end = aligned_region(result, raw_map, raw_output)
    a0, a1 = result.a_span
    b0, b1 = result.b_span
    if _is_leftover(raw_stripped[:a0], ocr_stripped[:b0]):
        start = len(raw_output) - len(raw_output.lstrip())
    if _is_leftover(raw_stripped[a1:], ocr_stripped[b1:]):
        end = len(raw_output.rstrip())
    start, end = _widen(raw_output, start, end, b0, len(ocr_stripped) - b1)
    start, end = _take_edge_words(raw_output, start, end, ocr_stripped[:b0], ocr_stripped[b1:])
    return TrimResult(raw_output[start:end], (start, end))


def _is_leftover(raw_rest: str, ocr_rest: str) -> bool:
    """Whether everything the output has beyond the aligned region belongs to the answer.

    True when that remainder is no more than one character longer than the
    OCR left unaligned on the same side: the edge of a correction whose
    OCR edge was too garbled to align.  With no unaligned OCR on that side
    nothing is taken, so a closing period after a fully aligned answer
    stays outside.
    """
    return bool(raw_rest) and bool(ocr_rest) and len(raw_rest) <= len(ocr_rest) + 1


def _widen(text: str, start: int, end: int, left_slack: int, right_slack: int) -> tuple[int, int]:
    """Grow the span so it never splits a word.

    A noisy or missing first/last OCR character leaves the local alignment
    one character short of the word edge.  Letters and digits touching the
    span are always taken; other non-space characters are taken only while
    the OCR still has unaligned characters on that side.
    """
    while start > 0 and not text[start - 1].isspace():
        if not text[start - 1].isalnum():
            if left_slack <= 0:
                break
            left_slack -= 1
        start -= 1
    while end < len(text) and not text[end].isspace():
        if not text[end].isalnum():
            if right_slack <= 0:
                break
            right_slack -= 1
        end += 1
    return start, end


def _take_edge_words(text: str, start: int, end: int, ocr_head: str, ocr_tail: str) -> tuple[int, int]:
    """Recover edge words whose OCR was too garbled to align at all.

    While OCR characters remain unaligned on a side, the neighbouring output
    word is taken if it shares a character with the nearest of them (the
    word's length plus two) and is at most two characters longer than what
    is left.  Junk around the answer rarely passes that test.
    """
    head = ocr_head.casefold()
    while head:
        m = _WORD_BEFORE.search(text, 0, start)
        if m is None or not _resembles(m.group(1), head[-len(m.group(1)) - 2:]):
            break
        word = m.group(1)
        head = head[:-len(word)] if len(word) < len(head) else ""
        start = m.start(1)
    tail = ocr_tail.casefold()
    while tail:
        m = _WORD_AFTER.match(text, end)
        if m is None or not _resembles(m.group(1), tail[:len(m.group(1)) + 2]):
            break
        word = m.group(1)
        tail = tail[len(word):]
        end = m.end(1)
    return start, end


def _resembles(word: str, ocr_part: str) -> bool:
    # ocr_part is the leftover OCR next to the word, up to two characters past its length
    return len(word) <= len(ocr_part) + 2 and bool(set(word.casefold()) & set(ocr_part))
