"""Exception hierarchy.

Every error carries an ``exit_code`` so the CLI can map failures to
process exit statuses without a lookup table.
"""

from __future__ import annotations


class PostOCRError(Exception):
    exit_code = 2


class ConfigError(PostOCRError):
    exit_code = 1


class DataError(PostOCRError):
    exit_code = 2


class EndpointError(PostOCRError):
    exit_code = 3


# -- alignment ---------------------------------------------------------------

class SizeLimit(DataError):
    def __init__(self, length: int, cap: int):
        super().__init__(f"input of {length} chars exceeds alignment cap {cap}")
        self.length = length
        self.cap = cap


class NoAlignedRegion(DataError):
    pass


# -- corpus / segmentation -----------------------------------------------------

class MalformedRecord(DataError):
    def __init__(self, line: int, reason: str = ""):
        super().__init__(f"malformed record on line {line}" + (f": {reason}" if reason else ""))
        self.line = line


class DuplicateId(DataError):
    def __init__(self, page_id: str):
        super().__init__(f"duplicate page id {page_id!r}")
        self.page_id = page_id


class EmptyCorpus(DataError):
    pass


class PageTooShort(DataError):
    pass


class NoEligiblePages(DataError):
    pass


# -- metrics -----------------------------------------------------------------

class EmptyReference(DataError):
    pass


class EmptyInput(DataError):
    pass


class WindowOutOfRange(DataError):
    pass


# -- prompts / endpoints -----------------------------------------------------------

class MissingContext(ConfigError):
    pass


class UnknownPlaceholder(ConfigError):
    pass


class EndpointUnreachable(EndpointError):
    pass


class EndpointTimeout(EndpointError):
    pass


class ApiError(EndpointError):
    def __init__(self, status: int, body: str):
        super().__init__(f"HTTP {status}: {body[:200]}")
        self.status = status
        self.body = body


# -- tuning ------------------------------------------------------------------

class NotEnoughTrials(DataError):
    pass


class SearchExhausted(DataError):
    pass
