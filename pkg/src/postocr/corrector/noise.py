"""Synthetic OCR noise for desk-scale experiments.

Noise touches only non-whitespace characters and never deletes the sole
character of a word, so the whitespace-delimited word count of the input is
preserved.  That keeps word-indexed test doubles simple.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field, replace
from typing import Iterable, Sequence

from rapidfuzz.distance import Levenshtein

from ..textnorm import NormalizationPolicy, normalize_for_eval

# Common historical-print confusions: long s, f/s, c/e, rn/m-like shapes,
# Fraktur umlaut loss.
DEFAULT_CONFUSIONS: dict[str, dict[str, float]] = {
    "s": {"ſ": 3.0, "f": 2.0},
    "f": {"ſ": 2.0, "t": 1.0},
    "c": {"e": 2.0, "o": 1.0},
    "e": {"c": 2.0, "o": 1.0},
    "n": {"u": 2.0, "r": 1.0},
    "u": {"n": 2.0, "a": 1.0},
    "m": {"n": 2.0},
    "h": {"b": 2.0, "k": 1.0},
    "b": {"h": 2.0},
    "i": {"l": 2.0, "1": 1.0, "ı": 1.0},
    "l": {"1": 2.0, "i": 1.0, "I": 1.0},
    "a": {"o": 2.0, "e": 1.0},
    "o": {"0": 1.0, "c": 1.0, "a": 1.0},
    "r": {"t": 1.0, "n": 1.0},
    "t": {"r": 1.0, "f": 1.0},
    "v": {"y": 1.0, "w": 1.0},
    "w": {"v": 2.0},
    "ä": {"a": 3.0},
    "ö": {"o": 3.0},
}

_FILLER = "abcdefghijklmnopqrstuvwxyz.,;'"


@dataclass(frozen=True)
class NoiseConfig:
    substitution_rate: float = 0.0
    deletion_rate: float = 0.0
    insertion_rate: float = 0.0
    confusion_table: dict = field(default_factory=lambda: DEFAULT_CONFUSIONS, repr=False)
    seed: int = 0

    def __post_init__(self):
        rates = (self.substitution_rate, self.deletion_rate, self.insertion_rate)
        if any(not 0.0 <= r <= 1.0 for r in rates):
            raise ValueError("noise rates must lie in [0, 1]")
        if sum(rates) > 1.0 + 1e-12:
            raise ValueError("noise rates must sum to at most 1")

    @property
    def total_rate(self) -> float:
        return self.substitution_rate + self.deletion_rate + self.insertion_rate

    def scaled(self, total: float) -> "NoiseConfig":
        """Same mix of event types at a different overall rate."""
        current = self.total_rate
        if current == 0:
            return replace(self, substitution_rate=min(total, 1.0))
        k = min(total, 1.0) / current
        return replace(
            self,
            substitution_rate=self.substitution_rate * k,
            deletion_rate=self.deletion_rate * k,
            insertion_rate=self.insertion_rate * k,
        )

    def to_dict(self) -> dict:
        return {
            "substitution_rate": self.substitution_rate,
            "deletion_rate": self.deletion_rate,
            "insertion_rate": self.insertion_rate,
            "seed": self.seed,
        }


def _substitute(ch: str, table: dict, rng: random.Random) -> str:
    options = table.get(ch) or table.get(ch.lower())
    if options:
        chars, weights = zip(*options.items())
        out = rng.choices(chars, weights)[0]
        if out != ch:
            return out
    while True:
        out = rng.choice(_FILLER)
        if out != ch:
            return out


def inject_noise(text: str, cfg: NoiseConfig) -> str:
    if cfg.total_rate == 0:
        return text
    rng = random.Random(cfg.seed)
    sub_cut = cfg.substitution_rate
    del_cut = sub_cut + cfg.deletion_rate
    ins_cut = del_cut + cfg.insertion_rate
    out = []
    n = len(text)
    kept_in_word = 0
    for i, ch in enumerate(text):
        if ch.isspace():
            out.append(ch)
            kept_in_word = 0
            continue
        u = rng.random()
        if u < sub_cut:
            out.append(_substitute(ch, cfg.confusion_table, rng))
        elif u < del_cut:
            last_of_word = i + 1 == n or text[i + 1].isspace()
            if last_of_word and kept_in_word == 0:
                out.append(ch)
            else:
                continue
        elif u < ins_cut:
            out.append(ch)
            out.append(rng.choice(_FILLER))
        else:
            out.append(ch)
        kept_in_word += 1
    return "".join(out)


def measured_cer(
    clean: Sequence[str], noisy: Sequence[str], policy: NormalizationPolicy | None = None
) -> float:
    """Length-weighted CER of noisy texts against their clean originals."""
    policy = policy or NormalizationPolicy()
    edits = length = 0
    for c, n in zip(clean, noisy):
        c, n = normalize_for_eval(c, policy), normalize_for_eval(n, policy)
        edits += Levenshtein.distance(c, n)
        length += len(c)
    return edits / length if length else 0.0


def noisy_corpus(texts: Iterable[str], cfg: NoiseConfig) -> list[str]:
    """Noise each text with its own derived seed (``cfg.seed + index``)."""
    return [inject_noise(t, replace(cfg, seed=cfg.seed + k)) for k, t in enumerate(texts)]


def calibrate_noise(
    texts: Sequence[str],
    target_cer: float,
    base: NoiseConfig | None = None,
    policy: NormalizationPolicy | None = None,
    iterations: int = 6,
) -> tuple[NoiseConfig, float]:
    """Scale ``base``'s event rates until the measured CER approaches ``target_cer``.

    Returns the calibrated config and the CER it achieves on ``texts``.
    """
    base = base or NoiseConfig(0.7, 0.15, 0.15)
    if target_cer <= 0:
        cfg = base.scaled(0.0)
        return cfg, 0.0
    non_ws = sum(sum(1 for ch in t if not ch.isspace()) for t in texts)
    total = sum(len(t) for t in texts)
    rate = target_cer * total / max(non_ws, 1)
    cfg = base.scaled(rate)
    best = (float("inf"), cfg, 0.0)
    for _ in range(iterations):
        got = measured_cer(texts, noisy_corpus(texts, cfg), policy)
        if abs(got - target_cer) < best[0]:
            best = (abs(got - target_cer), cfg, got)
        if got == 0 or abs(got - target_cer) < target_cer * 0.01:
            break
        cfg = cfg.scaled(min(cfg.total_rate * target_cer / got, 1.0))
    return best[1], best[2]
