"""Offline stand-ins for a correction model.

Every mock answers ``complete(request, params)`` like ``HttpCorrector``.
Mocks that need the ground truth look it up by the request's OCR text.
"""

from __future__ import annotations

import bisect
from enum import Enum
from typing import Callable, Iterable, Mapping

from ..align import FILTER_ALIGN, align_texts
from ..errors import ConfigError
from ..segmenter import word_spans
from .client import GenerationParams
from .engine import CorrectionRequest


class MockKind(str, Enum):
    IDENTITY = "Identity"
    ORACLE = "Oracle"
    ORACLE_WITH_CHATTER = "OracleWithChatter"
    DESTRUCTIVE = "Destructive"
    CONTEXT_SENSITIVE = "ContextSensitive"
    PARAMETER_RESPONSIVE = "ParameterResponsive"


def wrap_in_chatter(answer: str) -> str:
    """Frame an answer the way chatty instruction-tuned models do."""
    return (
        f"Here is the corrected text: {answer}\n"
        "I corrected the following errors:\n"
        '* "pi&ure" -> "picture"\n'
        "* \"it's\" -> \"its\"  (multiple instances)\n"
        '* "gneralfcope" -> "general scope"\n'
        "..."
    )


def splice_at_word(ocr: str, gt: str, k: int, head: str = "ocr") -> str:
    """Join one text's first ``k`` OCR-words' worth with the other text's remainder.

    The GT position corresponding to OCR word ``k`` comes from a global
    character alignment, snapped to the start of the GT word containing it.
    ``head="ocr"`` keeps the OCR head and the GT tail; ``head="gt"`` the reverse.
    """
    ocr_words, gt_words = word_spans(ocr), word_spans(gt)
    if k <= 0:
        return gt if head == "ocr" else ocr
    if k >= len(ocr_words):
        return ocr if head == "ocr" else gt
    ocr_cut = ocr_words[k][0]
    if len(ocr_words) == len(gt_words):
        gt_cut = gt_words[k][0]
    else:
        aligned = align_texts(ocr, gt, FILTER_ALIGN)
        a_pos = bisect.bisect_left(list(aligned.a_map), ocr_cut)
        gt_cut = len(gt)
        seen = False
        for c in aligned.result.columns:
            if c.a == a_pos:
                seen = True
            if seen and c.b is not None:
                gt_cut = aligned.b_map[c.b]
                break
        starts = [s for s, _ in gt_words]
        idx = bisect.bisect_right(starts, gt_cut) - 1
        gt_cut = starts[max(idx, 0)]
    if head == "ocr":
        return (ocr[:ocr_cut].rstrip() + " " + gt[gt_cut:].lstrip()).strip()
    return (gt[:gt_cut].rstrip() + " " + ocr[ocr_cut:].lstrip()).strip()


class _LookupMock:
    def __init__(self, gt_lookup: Mapping[str, str], name: str):
        self._lookup = dict(gt_lookup)
        self.name = name

    def gt_for(self, request: CorrectionRequest) -> str:
        try:
            return self._lookup[request.ocr_text]
        except KeyError:
            raise ConfigError(f"mock {self.name} has no ground truth for segment {request.segment_id!r}") from None


class IdentityMock:
    name = "mock-identity"

    def complete(self, request: CorrectionRequest, params: GenerationParams) -> str:
        return request.ocr_text


class OracleMock(_LookupMock):
    def __init__(self, gt_lookup, name="mock-oracle"):
        super().__init__(gt_lookup, name)

    def complete(self, request, params):
        return self.gt_for(request)


class OracleWithChatterMock(_LookupMock):
    def __init__(self, gt_lookup, name="mock-oracle-chatter"):
        super().__init__(gt_lookup, name)

    def complete(self, request, params):
        return wrap_in_chatter(self.gt_for(request))


class DestructiveMock:
    name = "mock-destructive"

    def complete(self, request: CorrectionRequest, params: GenerationParams) -> str:
        # nothing in here can align with real text
        return "▓" * max(1, len(request.ocr_text) // 2)


class ContextSensitiveMock(_LookupMock):
    """Correct everything, except the first ``n_words`` when no left context is given."""

    def __init__(self, gt_lookup, n_words: int = 10, name="mock-context-sensitive"):
        super().__init__(gt_lookup, name)
        self.n_words = n_words

    def complete(self, request, params):
        gt = self.gt_for(request)
        if request.left_context:
            return gt
        return splice_at_word(request.ocr_text, gt, self.n_words, head="ocr")


class ParameterResponsiveMock(_LookupMock):
    """Correct a leading fraction of the words given by ``quality(params)`` in [0, 1]."""

    def __init__(self, gt_lookup, quality: Callable[[GenerationParams], float], name="mock-parametric"):
        super().__init__(gt_lookup, name)
        self.quality = quality

    def complete(self, request, params):
        gt = self.gt_for(request)
        q = min(max(self.quality(params), 0.0), 1.0)
        k = round(q * len(word_spans(request.ocr_text)))
        return splice_at_word(request.ocr_text, gt, k, head="gt")


def peaked_quality(center: float = 0.3, width: float = 0.7) -> Callable[[GenerationParams], float]:
    """Unimodal quality in temperature: 1 at ``center``, falling linearly to 0."""
    def quality(params: GenerationParams) -> float:
        return max(0.0, 1.0 - abs(params.temperature - center) / width)
    return quality


def gt_lookup(pairs: Iterable) -> dict[str, str]:
    """OCR-text to GT-text lookup from segments or page pairs."""
    return {p.ocr_text: p.gt_text for p in pairs}


def mock_corrector(kind: MockKind | str, lookup: Mapping[str, str] | None = None, **options):
    kind = MockKind(kind)
    if kind is MockKind.IDENTITY:
        return IdentityMock()
    if kind is MockKind.DESTRUCTIVE:
        return DestructiveMock()
    if lookup is None:
        raise ConfigError(f"mock {kind.value} needs a ground-truth lookup")
    if kind is MockKind.ORACLE:
        return OracleMock(lookup)
    if kind is MockKind.ORACLE_WITH_CHATTER:
        return OracleWithChatterMock(lookup)
    if kind is MockKind.CONTEXT_SENSITIVE:
        return ContextSensitiveMock(lookup, int(options.get("n_words", 10)))
    return ParameterResponsiveMock(
        lookup,
        peaked_quality(float(options.get("center", 0.3)), float(options.get("width", 0.7))),
    )
