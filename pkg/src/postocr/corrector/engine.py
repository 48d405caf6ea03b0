"""Segment correction: render, call the model, trim, record."""

from __future__ import annotations

import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Protocol, Sequence

import httpx

from ..errors import EndpointError
from ..segmenter import Segment
from .client import GenerationParams, ModelEndpoint, correct_raw
from .prompts import PromptTemplate, render_prompt
from .trim import trim_overgeneration

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class CorrectionRequest:
    messages: list
    ocr_text: str
    left_context: str | None = None
    segment_id: str = ""


class Corrector(Protocol):
    name: str

    def complete(self, request: CorrectionRequest, params: GenerationParams) -> str: ...


class HttpCorrector:
    """Corrector backed by a chat-completions server; one pooled client per instance."""

    def __init__(self, endpoint: ModelEndpoint, client: httpx.Client | None = None):
        self.endpoint = endpoint
        self.name = endpoint.name
        self._client = client or httpx.Client(timeout=endpoint.request_timeout)

    def complete(self, request: CorrectionRequest, params: GenerationParams) -> str:
        return correct_raw(request.messages, params, self.endpoint, client=self._client)

    def close(self) -> None:
        self._client.close()


@dataclass
class CorrectionRecord:
    segment_id: str
    page_id: str
    index: int
    raw_output: str
    trimmed_output: str
    params: GenerationParams
    endpoint: str
    trim_span: tuple[int, int]
    no_trim: bool = False
    error: str | None = None
    latency: float = field(default=0.0, compare=False)

    @property
    def failed(self) -> bool:
        return self.error is not None

    @property
    def coverage(self) -> float:
        """Fraction of the raw output kept by trimming."""
        return (self.trim_span[1] - self.trim_span[0]) / len(self.raw_output) if self.raw_output else 0.0

    def to_record(self) -> dict:
        # latency is deliberately absent: records must be reproducible byte for byte
        return {
            "segment_id": self.segment_id,
            "page_id": self.page_id,
            "index": self.index,
            "raw_output": self.raw_output,
            "trimmed_output": self.trimmed_output,
            "trim_span": list(self.trim_span),
            "no_trim": self.no_trim,
            "params": self.params.to_dict(),
            "endpoint": self.endpoint,
            "error": self.error,
        }

    @classmethod
    def from_record(cls, rec: dict) -> "CorrectionRecord":
        return cls(
            segment_id=rec["segment_id"],
            page_id=rec["page_id"],
            index=int(rec["index"]),
            raw_output=rec["raw_output"],
            trimmed_output=rec["trimmed_output"],
            params=GenerationParams.from_dict(rec["params"]),
            endpoint=rec["endpoint"],
            trim_span=tuple(rec["trim_span"]),
            no_trim=bool(rec.get("no_trim", False)),
            error=rec.get("error"),
        )


def correct_segment(
    segment: Segment,
    template: PromptTemplate,
    params: GenerationParams,
    corrector: Corrector,
    left_context: str | None = None,
) -> CorrectionRecord:
    """Correct one segment.  Endpoint failures are recorded on the record, not raised."""
    messages = render_prompt(template, segment.ocr_text, left_context)
    request = CorrectionRequest(messages, segment.ocr_text, left_context, segment.id)
    t0 = time.perf_counter()
    try:
        raw = corrector.complete(request, params)
    except EndpointError as exc:
        log.warning("segment %s failed: %s", segment.id, exc)
        return CorrectionRecord(
            segment.id, segment.page_id, segment.index, "", segment.ocr_text, params,
            corrector.name, (0, 0), no_trim=True, error=f"{type(exc).__name__}: {exc}",
            latency=time.perf_counter() - t0,
        )
    latency = time.perf_counter() - t0
    trim = trim_overgeneration(segment.ocr_text, raw)
    return CorrectionRecord(
        segment.id, segment.page_id, segment.index, raw, trim.trimmed, params,
        corrector.name, trim.span, trim.no_trim, latency=latency,
    )


def correct_segments(
    segments: Sequence[Segment],
    template: PromptTemplate,
    params: GenerationParams,
    corrector: Corrector,
    workers: int = 4,
    contexts: Sequence[str | None] | None = None,
) -> list[CorrectionRecord]:
    """Correct independent segments with at most ``workers`` requests in flight.

    Records come back in input order whatever the completion order.
    """
    contexts = contexts or [None] * len(segments)

    def one(k: int) -> CorrectionRecord:
        return correct_segment(segments[k], template, params, corrector, contexts[k])

    if workers <= 1 or len(segments) <= 1:
        return [one(k) for k in range(len(segments))]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(one, range(len(segments))))
