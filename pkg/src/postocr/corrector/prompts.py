"""Prompt templates and rendering.

A template file holds the system text, a line containing only ``---``, and
the user template.  Without a separator the whole file is the user template.
"""

from __future__ import annotations

import string
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from ..errors import ConfigError, MissingContext, UnknownPlaceholder

PLACEHOLDERS = frozenset({"ocr_text", "left_context"})


def _fields(template: str) -> set[str]:
    return {name for _, name, _, _ in string.Formatter().parse(template) if name is not None}


@dataclass(frozen=True)
class PromptTemplate:
    name: str
    system_text: str
    user_template: str
    requires_context: bool = False

    def __post_init__(self):
        fields = _fields(self.user_template)
        if "ocr_text" not in fields:
            raise ConfigError(f"template {self.name!r} lacks {{ocr_text}}")
        if ("left_context" in fields) != self.requires_context:
            raise ConfigError(
                f"template {self.name!r}: {{left_context}} must appear iff requires_context"
            )

    @classmethod
    def from_text(cls, name: str, text: str) -> "PromptTemplate":
        lines = text.splitlines()
        if "---" in lines:
            cut = lines.index("---")
            system, user = "\n".join(lines[:cut]).strip(), "\n".join(lines[cut + 1:]).strip()
        else:
            system, user = "", text.strip()
        return cls(name, system, user, "left_context" in _fields(user))

    @classmethod
    def load(cls, path: str | Path) -> "PromptTemplate":
        path = Path(path)
        return cls.from_text(path.stem, path.read_text(encoding="utf-8"))


def builtin_template(name: str) -> PromptTemplate:
    text = resources.files("postocr").joinpath("templates", f"{name}.txt").read_text(encoding="utf-8")
    return PromptTemplate.from_text(name, text)


def default_templates() -> tuple[PromptTemplate, PromptTemplate]:
    """The plain and the context-carrying default templates."""
    return builtin_template("correct"), builtin_template("correct_with_context")


def render_prompt(
    template: PromptTemplate, ocr_text: str, left_context: str | None = None
) -> list[dict]:
    unknown = _fields(template.user_template) - PLACEHOLDERS
    if unknown:
        raise UnknownPlaceholder(f"unknown placeholder(s) {sorted(unknown)} in {template.name!r}")
    if template.requires_context and left_context is None:
        raise MissingContext(f"template {template.name!r} needs left_context")
    if not template.requires_context and left_context is not None:
        raise MissingContext(f"template {template.name!r} takes no left_context")
    values = {"ocr_text": ocr_text, "left_context": left_context or ""}
    messages = []
    if template.system_text:
        messages.append({"role": "system", "content": template.system_text})
    messages.append({"role": "user", "content": template.user_template.format(**values)})
    return messages
