"""Build a corrector from an endpoint description."""

from __future__ import annotations

from typing import Mapping

from ..errors import ConfigError
from .client import ModelEndpoint
from .engine import HttpCorrector
from .mocks import MockKind, mock_corrector


def make_corrector(endpoint: ModelEndpoint, lookup: Mapping[str, str] | None = None):
    """``kind="http"`` talks to a server; any mock kind builds the matching test double."""
    if endpoint.kind == "http":
        if not endpoint.base_url:
            raise ConfigError(f"endpoint {endpoint.name!r} has no base_url")
        return HttpCorrector(endpoint)
    try:
        kind = MockKind(endpoint.kind)
    except ValueError:
        raise ConfigError(f"endpoint {endpoint.name!r}: unknown kind {endpoint.kind!r}") from None
    mock = mock_corrector(kind, lookup, **endpoint.options)
    mock.name = endpoint.name
    return mock
