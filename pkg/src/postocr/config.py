"""Pipeline configuration: a JSON file plus ``--set key=value`` overrides."""

from __future__ import annotations

import copy
import hashlib
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Any

from .align import FILTER_ALIGN, TRIM_ALIGN, AlignConfig
from .boundary import BoundaryStrategy, TemplateSet
from .corpus import FilterConfig
from .corrector.client import GenerationParams, ModelEndpoint, params_for_language
from .corrector.prompts import PromptTemplate, builtin_template
from .errors import ConfigError
from .segmenter import SegmentConfig
from .textnorm import NormalizationPolicy
from .tuner import SearchSpace

DEFAULTS: dict[str, Any] = {
    "corpus": None,
    "segments": None,
    "corrections": None,
    "output_dir": "postocr-out",
    "language": "en",
    "normalization": None,
    "filter": {"min_non_ws_chars": 150, "window": 100, "min_match_ratio": 0.10},
    "segment": {"target_ocr_words": None, "reliability_window": 3, "allow_short_page": True, "word_aligned": False},
    "align": {"filter": {}, "trim": {}},
    "endpoints": [{"name": "mock-identity", "kind": "Identity"}],
    "endpoint": None,
    "templates": {"plain": None, "context": None},
    "generation": None,
    "strategy": "Baseline",
    "boundary": {
        "strategies": ["Baseline", "LCC", "LUC"],
        "context_words": None,
        "seg_words": 200,
        "stride": 100,
        "window_words": 10,
        "min_words": 600,
    },
    "tune": {
        "n_trials": 100,
        "top_n": 10,
        "sampler_seed": 0,
        "space": {"temperature": [0.0, 1.0], "top_k": [1, 100], "top_p": [0.05, 1.0]},
    },
    "sweep": {"lengths": [50, 100, 200, 300], "min_words": 600, "max_pages_per_book": 2},
    "synth": {
        "n_pages": 20,
        "words_per_page": [250, 700],
        "target_cer": 0.10,
        "seed": 0,
        "seed_texts": None,
    },
    "workers": 4,
    "plots": True,
}

_PATH_KEYS = ("corpus", "segments", "corrections", "templates.plain", "templates.context", "synth.seed_texts")


def _check_keys(data: dict, defaults: dict, prefix: str = "") -> None:
    for key, value in data.items():
        if key not in defaults:
            raise ConfigError(f"unknown config key {prefix + key!r}")
        if isinstance(defaults[key], dict) and defaults[key] and isinstance(value, dict) and key != "align":
            _check_keys(value, defaults[key], prefix + key + ".")


def _merge(base: dict, over: dict) -> dict:
    out = copy.deepcopy(base)
    for key, value in over.items():
        if isinstance(value, dict) and isinstance(out.get(key), dict):
            out[key] = _merge(out[key], value)
        else:
            out[key] = value
    return out


def parse_override(item: str) -> tuple[list[str], Any]:
    if "=" not in item:
        raise ConfigError(f"--set expects key=value, got {item!r}")
    key, raw = item.split("=", 1)
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    return key.strip().split("."), value


def apply_overrides(data: dict, overrides: list[str]) -> dict:
    data = copy.deepcopy(data)
    for item in overrides:
        path, value = parse_override(item)
        node = data
        for part in path[:-1]:
            node = node.setdefault(part, {})
            if not isinstance(node, dict):
                raise ConfigError(f"cannot set {'.'.join(path)}: {part} is not an object")
        node[path[-1]] = value
    return data


def _get(data: dict, dotted: str):
    node = data
    for part in dotted.split("."):
        if not isinstance(node, dict):
            return None
        node = node.get(part)
    return node


@dataclass
class PipelineConfig:
    raw: dict
    base_dir: Path

    @classmethod
    def from_dict(cls, data: dict, base_dir: str | Path = ".", check_paths: bool = True) -> "PipelineConfig":
        _check_keys(data, DEFAULTS)
        cfg = cls(_merge(DEFAULTS, data), Path(base_dir))
        if check_paths:
            for key in _PATH_KEYS:
                value = _get(cfg.raw, key)
                if value and not cfg.path(value).exists():
                    raise ConfigError(f"{key}: file {value!r} does not exist")
        cfg.validate()
        return cfg

    @classmethod
    def load(cls, path: str | Path | None, overrides: list[str] = ()) -> "PipelineConfig":
        data, base = {}, Path(".")
        if path:
            path = Path(path)
            try:
                data = json.loads(path.read_text(encoding="utf-8"))
            except (OSError, json.JSONDecodeError) as exc:
                raise ConfigError(f"cannot read config {path}: {exc}") from None
        return cls.from_dict(apply_overrides(data, list(overrides)), base)

    def validate(self) -> None:
        # build every typed view once so bad values fail at load time
        try:
            self.policy, self.filter_cfg, self.segment_cfg, self.params
            self.strategy(), self.strategies(), self.search_space(), self.endpoint()
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from None

    def path(self, value: str) -> Path:
        p = Path(value)
        return p if p.is_absolute() else self.base_dir / p

    @property
    def hash(self) -> str:
        canon = json.dumps(self.raw, sort_keys=True, ensure_ascii=False, separators=(",", ":"))
        return hashlib.sha256(canon.encode("utf-8")).hexdigest()[:12]

    @property
    def language(self) -> str:
        return str(self.raw["language"])

    @property
    def workers(self) -> int:
        return int(self.raw["workers"])

    @property
    def output_dir(self) -> Path:
        return self.path(self.raw["output_dir"])

    @property
    def policy(self) -> NormalizationPolicy:
        if self.raw["normalization"]:
            return NormalizationPolicy.from_dict(self.raw["normalization"])
        return NormalizationPolicy.for_language(self.language)

    def align_cfg(self, which: str) -> AlignConfig:
        base = FILTER_ALIGN if which == "filter" else TRIM_ALIGN
        over = self.raw["align"].get(which) or {}
        return base.with_overrides(**over) if over else base

    @property
    def filter_cfg(self) -> FilterConfig:
        return FilterConfig(**self.raw["filter"], align_cfg=self.align_cfg("filter"))

    @property
    def segment_cfg(self) -> SegmentConfig:
        seg = dict(self.raw["segment"])
        seg.pop("word_aligned", None)
        target = seg.pop("target_ocr_words", None)
        base = SegmentConfig.for_language(self.language, **seg)
        return SegmentConfig(target or base.target_ocr_words, base.reliability_window, base.allow_short_page)

    @property
    def word_aligned(self) -> bool:
        return bool(self.raw["segment"].get("word_aligned"))

    @property
    def params(self) -> GenerationParams:
        base = params_for_language(self.language)
        over = self.raw["generation"] or {}
        return GenerationParams(**{**base.to_dict(), **over})

    def endpoint(self) -> ModelEndpoint:
        endpoints = [ModelEndpoint.from_dict(e) for e in self.raw["endpoints"]]
        if not endpoints:
            raise ConfigError("no endpoints configured")
        wanted = self.raw["endpoint"]
        if wanted is None:
            return endpoints[0]
        for e in endpoints:
            if e.name == wanted:
                return e
        raise ConfigError(f"endpoint {wanted!r} not among configured endpoints")

    def templates(self) -> TemplateSet:
        t = self.raw["templates"]
        plain = PromptTemplate.load(self.path(t["plain"])) if t.get("plain") else builtin_template("correct")
        ctx = (
            PromptTemplate.load(self.path(t["context"])) if t.get("context")
            else builtin_template("correct_with_context")
        )
        return TemplateSet(plain, ctx)

    def strategy(self) -> BoundaryStrategy:
        return BoundaryStrategy(self.raw["strategy"], self.raw["boundary"]["context_words"])

    def strategies(self) -> list[BoundaryStrategy]:
        b = self.raw["boundary"]
        return [BoundaryStrategy(kind, b["context_words"]) for kind in b["strategies"]]

    def search_space(self) -> SearchSpace:
        return SearchSpace.from_dict(self.raw["tune"]["space"])
