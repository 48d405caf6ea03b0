"""HTTP chat-completions client.

Speaks the widely implemented ``POST {base_url}/chat/completions`` wire
format, so any OpenAI-compatible inference server (vLLM, Ollama, llama.cpp
server, hosted APIs) can serve as the correction model.
"""

from __future__ import annotations

import logging
import os
import time
from dataclasses import asdict, dataclass, field
from typing import Callable

import httpx

from ..errors import ApiError, ConfigError, EndpointTimeout, EndpointUnreachable

log = logging.getLogger(__name__)

_RETRY_STATUS = {429, 500, 502, 503, 504}


@dataclass(frozen=True)
class GenerationParams:
    temperature: float = 0.26
    top_k: int = 65
    top_p: float = 0.66
    max_output_tokens: int = 2048
    seed: int | None = None

    def __post_init__(self):
        if self.temperature < 0:
            raise ValueError("temperature must be >= 0")
        if self.top_k < 1:
            raise ValueError("top_k must be >= 1")
        if not 0 < self.top_p <= 1:
            raise ValueError("top_p must lie in (0, 1]")
        if self.max_output_tokens < 1:
            raise ValueError("max_output_tokens must be >= 1")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "GenerationParams":
        return cls(**data)


# Per-language settings selected by parameter search.
ENGLISH_PARAMS = GenerationParams(temperature=0.26, top_k=65, top_p=0.66)
FINNISH_PARAMS = GenerationParams(temperature=0.14, top_k=30, top_p=0.60)


def params_for_language(language: str) -> GenerationParams:
    return FINNISH_PARAMS if language.lower().startswith("fi") else ENGLISH_PARAMS


@dataclass(frozen=True)
class ModelEndpoint:
    name: str
    base_url: str = ""
    model_name: str = ""
    api_style: str = "chat_completions"
    auth_env: str | None = None
    request_timeout: float = 120.0
    max_retries: int = 3
    supports_top_k: bool = True
    backoff_base: float = 0.5
    # "http" for a real server, otherwise the kind of test double to build
    kind: str = "http"
    options: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.max_retries < 0:
            raise ValueError("max_retries must be >= 0")
        if self.api_style != "chat_completions":
            raise ConfigError(f"unsupported api_style {self.api_style!r}")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "ModelEndpoint":
        return cls(**data)


def build_payload(messages: list[dict], params: GenerationParams, endpoint: ModelEndpoint) -> dict:
    payload = {
        "model": endpoint.model_name,
        "messages": messages,
        "temperature": params.temperature,
        "top_p": params.top_p,
        "max_tokens": params.max_output_tokens,
    }
    if endpoint.supports_top_k:
        payload["top_k"] = params.top_k
    else:
        log.warning("endpoint %s takes no top_k; dropping top_k=%d", endpoint.name, params.top_k)
    if params.seed is not None:
        payload["seed"] = params.seed
    return payload


def _headers(endpoint: ModelEndpoint) -> dict:
    headers = {"Content-Type": "application/json"}
    if endpoint.auth_env:
        token = os.environ.get(endpoint.auth_env)
        if not token:
            raise ConfigError(f"environment variable {endpoint.auth_env} is not set")
        headers["Authorization"] = f"Bearer {token}"
    return headers


def correct_raw(
    messages: list[dict],
    params: GenerationParams,
    endpoint: ModelEndpoint,
    client: httpx.Client | None = None,
    sleep: Callable[[float], None] = time.sleep,
) -> str:
    """Send one chat request and return the assistant message verbatim.

    Transport errors, timeouts, 429 and 5xx responses are retried with
    exponential backoff up to ``endpoint.max_retries`` times.
    """
    url = endpoint.base_url.rstrip("/") + "/chat/completions"
    payload = build_payload(messages, params, endpoint)
    headers = _headers(endpoint)
    own_client = client is None
    if own_client:
        client = httpx.Client(timeout=endpoint.request_timeout)
    try:
        last_error: Exception | None = None
        for attempt in range(endpoint.max_retries + 1):
            if attempt:
                sleep(endpoint.backoff_base * 2 ** (attempt - 1))
            try:
                resp = client.post(url, json=payload, headers=headers, timeout=endpoint.request_timeout)
            except httpx.TimeoutException as exc:
                last_error = EndpointTimeout(f"{url}: {exc}")
                continue
            except httpx.TransportError as exc:
                last_error = EndpointUnreachable(f"{url}: {exc}")
                continue
            if resp.status_code in _RETRY_STATUS:
                last_error = ApiError(resp.status_code, resp.text)
                log.info("retryable HTTP %d from %s (attempt %d)", resp.status_code, url, attempt + 1)
                continue
            if resp.status_code >= 400:
                raise ApiError(resp.status_code, resp.text)
            try:
                return resp.json()["choices"][0]["message"]["content"] or ""
            except (ValueError, KeyError, IndexError, TypeError):
                raise ApiError(resp.status_code, f"unexpected response body: {resp.text[:200]}") from None
        raise last_error
    finally:
        if own_client:
            client.close()
