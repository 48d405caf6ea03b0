"""Text normalization applied to every text before scoring.

Three rules, applied in a fixed order: whitespace collapse, Unicode NFKC
(which also folds the long s into a plain ``s``), and for Finnish a
``w``/``v`` merge.  Raw texts are never modified in place; callers keep the
originals and normalize copies.
"""

from __future__ import annotations

import re
import unicodedata
from dataclasses import dataclass
from enum import Enum

_WS_RUN = re.compile(r"\s+")
_W_TO_V = str.maketrans({"w": "v", "W": "V"})


class Language(str, Enum):
    ENGLISH = "en"
    FINNISH = "fi"
    OTHER = "other"

    @classmethod
    def parse(cls, code: str) -> "Language":
        code = (code or "").strip().lower()
        if code in ("en", "eng", "english"):
            return cls.ENGLISH
        if code in ("fi", "fin", "finnish"):
            return cls.FINNISH
        return cls.OTHER


@dataclass(frozen=True)
class NormalizationPolicy:
    collapse_whitespace: bool = True
    apply_nfkc: bool = True
    finnish_w_to_v: bool = False
    language: Language = Language.ENGLISH

    def __post_init__(self):
        if self.finnish_w_to_v and self.language is not Language.FINNISH:
            raise ValueError("finnish_w_to_v requires language=Finnish")

    @classmethod
    def for_language(cls, language: Language | str) -> "NormalizationPolicy":
        if not isinstance(language, Language):
            language = Language.parse(language)
        return cls(finnish_w_to_v=language is Language.FINNISH, language=language)

    def to_dict(self) -> dict:
        return {
            "collapse_whitespace": self.collapse_whitespace,
            "apply_nfkc": self.apply_nfkc,
            "finnish_w_to_v": self.finnish_w_to_v,
            "language": self.language.value,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "NormalizationPolicy":
        data = dict(data)
        if "language" in data:
            data["language"] = Language.parse(data["language"])
        return cls(**data)


def collapse_whitespace(text: str) -> str:
    """Replace each run of Unicode whitespace with one space and strip the ends."""
    return _WS_RUN.sub(" ", text).strip()


def apply_nfkc(text: str) -> str:
    return unicodedata.normalize("NFKC", text)


def finnish_w_to_v(text: str) -> str:
    return text.translate(_W_TO_V)


def normalize_for_eval(text: str, policy: NormalizationPolicy) -> str:
    if policy.collapse_whitespace:
        text = collapse_whitespace(text)
    if policy.apply_nfkc:
        text = apply_nfkc(text)
        # NFKC can emit new whitespace (e.g. U+2002 -> U+0020)
        if policy.collapse_whitespace:
            text = collapse_whitespace(text)
    if policy.finnish_w_to_v:
        text = finnish_w_to_v(text)
        # v + combining mark may compose where w + mark did not
        if policy.apply_nfkc:
            text = apply_nfkc(text)
    return text
