"""Generation-parameter search: sample trials, keep the median of the best ten."""

from __future__ import annotations

import json
import logging
import math
import statistics
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Protocol, Sequence

import numpy as np

from .corrector.client import GenerationParams
from .corrector.engine import Corrector, correct_segments
from .corrector.prompts import PromptTemplate
from .errors import NotEnoughTrials, SearchExhausted
from .metrics import aggregate, score_pair
from .segmenter import Segment
from .textnorm import NormalizationPolicy

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class SearchSpace:
    temperature: tuple[float, float] = (0.0, 1.0)
    top_k: tuple[int, int] = (1, 100)
    top_p: tuple[float, float] = (0.05, 1.0)

    def __post_init__(self):
        t, k, p = self.temperature, self.top_k, self.top_p
        if not (0 <= t[0] <= t[1]):
            raise ValueError("bad temperature range")
        if not (1 <= k[0] <= k[1]):
            raise ValueError("bad top_k range")
        if not (0 < p[0] <= p[1] <= 1):
            raise ValueError("bad top_p range")

    def contains(self, params: GenerationParams) -> bool:
        return (
            self.temperature[0] <= params.temperature <= self.temperature[1]
            and self.top_k[0] <= params.top_k <= self.top_k[1]
            and self.top_p[0] <= params.top_p <= self.top_p[1]
        )

    def to_dict(self) -> dict:
        return {"temperature": list(self.temperature), "top_k": list(self.top_k), "top_p": list(self.top_p)}

    @classmethod
    def from_dict(cls, data: dict) -> "SearchSpace":
        return cls(**{k: tuple(v) for k, v in data.items()})


class Sampler(Protocol):
    def sample(self, space: SearchSpace, rng: np.random.Generator) -> tuple[float, int, float]: ...


class UniformSampler:
    def sample(self, space, rng):
        t = float(rng.uniform(*space.temperature))
        k = int(rng.integers(space.top_k[0], space.top_k[1] + 1))
        p = float(rng.uniform(*space.top_p))
        # top_p must stay strictly positive
        return t, k, max(p, space.top_p[0])


@dataclass(frozen=True)
class Trial:
    trial_index: int
    params: GenerationParams
    weighted_cer_pct: float | None
    seed: int
    status: str = "ok"
    error: str | None = None

    @property
    def ok(self) -> bool:
        return self.status == "ok"

    def to_record(self) -> dict:
        return {
            "trial_index": self.trial_index,
            "seed": self.seed,
            "params": self.params.to_dict(),
            "weighted_cer_pct": self.weighted_cer_pct,
            "status": self.status,
            "error": self.error,
        }

    @classmethod
    def from_record(cls, rec: dict) -> "Trial":
        return cls(
            trial_index=int(rec["trial_index"]),
            params=GenerationParams.from_dict(rec["params"]),
            weighted_cer_pct=rec.get("weighted_cer_pct"),
            seed=int(rec["seed"]),
            status=rec.get("status", "ok"),
            error=rec.get("error"),
        )


def load_trials(path: str | Path) -> list[Trial]:
    path = Path(path)
    if not path.exists():
        return []
    return [Trial.from_record(json.loads(line)) for line in path.read_text(encoding="utf-8").splitlines() if line.strip()]


def plan_trials(
    space: SearchSpace,
    n_trials: int,
    sampler_seed: int,
    base: GenerationParams = GenerationParams(),
    sampler: Sampler | None = None,
) -> list[tuple[GenerationParams, int]]:
    """All trial points and their generation seeds, drawn up front so a resumed search sees the same plan."""
    sampler = sampler or UniformSampler()
    rng = np.random.default_rng(sampler_seed)
    plan = []
    for _ in range(n_trials):
        t, k, p = sampler.sample(space, rng)
        seed = int(rng.integers(0, 2**31 - 1))
        plan.append((replace(base, temperature=t, top_k=k, top_p=p, seed=seed), seed))
    return plan


def evaluate_params(
    params: GenerationParams,
    dev_set: Sequence[Segment],
    corrector: Corrector,
    template: PromptTemplate,
    policy: NormalizationPolicy,
    workers: int = 4,
) -> float:
    records = correct_segments(dev_set, template, params, corrector, workers)
    failed = [r for r in records if r.failed]
    if failed:
        raise RuntimeError(failed[0].error)
    scores = [
        score_pair(seg.gt_text, seg.ocr_text, rec.trimmed_output, policy, seg.id)
        for seg, rec in zip(dev_set, records)
    ]
    return aggregate(scores).weighted_cer_pct


def run_search(
    space: SearchSpace,
    dev_set: Sequence[Segment],
    corrector: Corrector,
    template: PromptTemplate,
    n_trials: int = 100,
    sampler_seed: int = 0,
    policy: NormalizationPolicy | None = None,
    base: GenerationParams = GenerationParams(),
    sampler: Sampler | None = None,
    log_path: str | Path | None = None,
    workers: int = 4,
    record_extra: dict | None = None,
) -> list[Trial]:
    """Evaluate ``n_trials`` sampled parameter points on ``dev_set``.

    With ``log_path`` every finished trial is appended as a JSON line, and
    trials already present there (same index and seed) are not re-run.
    ``record_extra`` fields are added to every logged record.
    """
    if not dev_set:
        raise ValueError("dev set is empty")
    policy = policy or NormalizationPolicy()
    plan = plan_trials(space, n_trials, sampler_seed, base, sampler)
    done = {(t.trial_index, t.seed): t for t in load_trials(log_path)} if log_path else {}
    trials = []
    for index, (params, seed) in enumerate(plan):
        if (index, seed) in done:
            trials.append(done[(index, seed)])
            continue
        assert space.contains(params)
        try:
            score = evaluate_params(params, dev_set, corrector, template, policy, workers)
            trial = Trial(index, params, score, seed)
        except Exception as exc:  # any failure only sinks this trial
            log.warning("trial %d failed: %s", index, exc)
            trial = Trial(index, params, None, seed, status="failed", error=str(exc))
        trials.append(trial)
        if log_path:
            with open(log_path, "a", encoding="utf-8") as fh:
                fh.write(json.dumps({**trial.to_record(), **(record_extra or {})}) + "\n")
    if not any(t.ok for t in trials):
        raise SearchExhausted("every trial failed")
    return trials


def _round_half_down(x: float) -> int:
    return math.ceil(x - 0.5)


def select_params(trials: Sequence[Trial], top_n: int = 10) -> GenerationParams:
    """Per-dimension median over the ``top_n`` best successful trials.

    Even counts take the mean of the middle pair; top_k is rounded to the
    nearest integer with halves going down.
    """
    best = top_trials(trials, top_n)
    if len(best) < top_n or top_n < 1:
        raise NotEnoughTrials(f"{len(best)} successful trials, need {top_n}")
    template = best[0].params
    return replace(
        template,
        temperature=round(statistics.median(t.params.temperature for t in best), 9),
        top_k=_round_half_down(statistics.median(t.params.top_k for t in best)),
        top_p=round(statistics.median(t.params.top_p for t in best), 9),
        seed=None,
    )


def top_trials(trials: Sequence[Trial], top_n: int = 10) -> list[Trial]:
    good = [t for t in trials if t.ok and t.weighted_cer_pct is not None]
    return sorted(good, key=lambda t: (-t.weighted_cer_pct, t.trial_index))[:top_n]
