"""Character-level pairwise alignment with affine gaps.

Global (Needleman-Wunsch) and local (Smith-Waterman) alignment share one
three-state Gotoh kernel.  Scores are integers at ``SCALE`` times the
nominal value so a -0.5 gap extension is exact.

Column ops follow the convention that ``GAP_IN_B`` consumes a character of
``a`` against a gap and ``GAP_IN_A`` consumes a character of ``b``.  A run of
k gap columns of the same kind costs ``gap_open + (k - 1) * gap_extend``;
switching directly from one gap kind to the other opens a new gap.

On equal scores the traceback prefers match/substitute, then GAP_IN_B, then
GAP_IN_A.  In local mode ties resolve to the tightest region: a path whose
score has fallen to zero is restarted rather than continued, and among
equal-scoring end cells the first in row-major order wins, so zero-score
substitutions are never added at either edge.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, NamedTuple, Sequence

import numpy as np
from numba import njit

from .errors import NoAlignedRegion, SizeLimit

SCALE = 2
DEFAULT_MAX_LEN = 50_000

# Pseudo-member of an ignore set meaning "every character with str.isspace()".
WHITESPACE = "<whitespace>"

_NEG = -(1 << 40)


class Mode(str, Enum):
    GLOBAL = "global"
    LOCAL = "local"


class Op(str, Enum):
    MATCH = "match"
    SUBSTITUTE = "substitute"
    GAP_IN_B = "gap_in_b"
    GAP_IN_A = "gap_in_a"


_OPS = (Op.MATCH, Op.SUBSTITUTE, Op.GAP_IN_B, Op.GAP_IN_A)


def _scaled(value: float) -> int:
    scaled = value * SCALE
    if scaled != int(scaled):
        raise ValueError(f"score {value} is not representable at scale {SCALE}")
    return int(scaled)


@dataclass(frozen=True)
class AlignConfig:
    """Scoring for one alignment.  Integer fields are already scaled by ``SCALE``."""

    mode: Mode = Mode.GLOBAL
    match_score: int = 2
    mismatch_score: int = -2
    gap_open: int = -2
    gap_extend: int = -1
    ignore_chars: frozenset = field(default_factory=frozenset)
    max_len: int = DEFAULT_MAX_LEN

    def __post_init__(self):
        if self.gap_open > 0 or self.gap_extend > 0:
            raise ValueError("gap scores must be <= 0")
        if self.match_score <= self.mismatch_score:
            raise ValueError("match_score must exceed mismatch_score")
        object.__setattr__(self, "mode", Mode(self.mode))
        object.__setattr__(self, "ignore_chars", frozenset(self.ignore_chars))

    @classmethod
    def from_scores(
        cls,
        mode: Mode | str = Mode.GLOBAL,
        match: float = 1.0,
        mismatch: float = -1.0,
        gap_open: float = -1.0,
        gap_extend: float = -0.5,
        ignore: Iterable[str] = (),
        max_len: int = DEFAULT_MAX_LEN,
    ) -> "AlignConfig":
        return cls(
            mode=Mode(mode),
            match_score=_scaled(match),
            mismatch_score=_scaled(mismatch),
            gap_open=_scaled(gap_open),
            gap_extend=_scaled(gap_extend),
            ignore_chars=frozenset(ignore),
            max_len=max_len,
        )

    def to_dict(self) -> dict:
        return {
            "mode": self.mode.value,
            "match": self.match_score / SCALE,
            "mismatch": self.mismatch_score / SCALE,
            "gap_open": self.gap_open / SCALE,
            "gap_extend": self.gap_extend / SCALE,
            "ignore": sorted(self.ignore_chars),
            "max_len": self.max_len,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "AlignConfig":
        return cls.from_scores(**data)

    def with_overrides(self, **kwargs) -> "AlignConfig":
        merged = self.to_dict()
        merged.update(kwargs)
        return AlignConfig.from_dict(merged)


# Page filtering: mismatches cost as much as gaps so junk blocks depress match ratios.
FILTER_ALIGN = AlignConfig.from_scores(Mode.GLOBAL, 1.0, -1.0, -1.0, -0.5, ignore={WHITESPACE})
# Overgeneration trimming: toolkit-default match/mismatch with the fixed gap scores.
TRIM_ALIGN = AlignConfig.from_scores(Mode.LOCAL, 1.0, 0.0, -1.0, -0.5, ignore={WHITESPACE, "-"})


class Column(NamedTuple):
    op: Op
    a: int | None
    b: int | None


@dataclass(frozen=True)
class IndexMap:
    """Monotone map from positions in a stripped string to the original."""

    stripped_to_original: tuple[int, ...]

    def __len__(self) -> int:
        return len(self.stripped_to_original)

    def __getitem__(self, pos: int) -> int:
        return self.stripped_to_original[pos]

    def __iter__(self):
        return iter(self.stripped_to_original)


@dataclass(frozen=True)
class AlignmentResult:
    columns: tuple[Column, ...]
    score: int
    a_span: tuple[int, int]
    b_span: tuple[int, int]
    mode: Mode = Mode.GLOBAL

    @property
    def empty(self) -> bool:
        return not self.columns

    @property
    def score_value(self) -> float:
        return self.score / SCALE

    def ops(self) -> list[Op]:
        return [c.op for c in self.columns]

    def a_columns(self) -> dict[int, int]:
        """Map each aligned ``a`` position to its column index."""
        return {c.a: k for k, c in enumerate(self.columns) if c.a is not None}

    def b_columns(self) -> dict[int, int]:
        return {c.b: k for k, c in enumerate(self.columns) if c.b is not None}


def _is_ignored(ch: str, ignore: frozenset) -> bool:
    return ch in ignore or (WHITESPACE in ignore and ch.isspace())


def strip_and_map(text: str, ignore: Iterable[str] = ()) -> tuple[str, IndexMap]:
    """Drop ignored characters, remembering where each kept one came from.

    ``ignore`` may contain the ``WHITESPACE`` marker to drop all Unicode
    whitespace.
    """
    ignore = frozenset(ignore)
    kept = [(i, ch) for i, ch in enumerate(text) if not _is_ignored(ch, ignore)]
    return "".join(ch for _, ch in kept), IndexMap(tuple(i for i, _ in kept))


@njit(cache=True, nogil=True)
def _fill(a, b, match, mismatch, gopen, gext, local):
    n = a.shape[0]
    m = b.shape[0]
    neg = np.int64(_NEG)
    # per cell: bits 0-1 M source, 2-3 X source, 4-5 Y source (0=M 1=X 2=Y 3=start)
    tb = np.zeros((n + 1, m + 1), np.uint8)
    Mp = np.full(m + 1, neg, np.int64)
    Xp = np.full(m + 1, neg, np.int64)
    Yp = np.full(m + 1, neg, np.int64)
    Mc = np.full(m + 1, neg, np.int64)
    Xc = np.full(m + 1, neg, np.int64)
    Yc = np.full(m + 1, neg, np.int64)
    if not local:
        Mp[0] = 0
        for j in range(1, m + 1):
            Yp[j] = gopen + (j - 1) * gext
            if j > 1:
                tb[0, j] = 2 << 4
    best = np.int64(0)
    bi = 0
    bj = 0
    for i in range(1, n + 1):
        Mc[0] = neg
        Yc[0] = neg
        Xc[0] = neg
        if not local:
            Xc[0] = gopen + (i - 1) * gext
            if i > 1:
                tb[i, 0] = 1 << 2
        ai = a[i - 1]
        for j in range(1, m + 1):
            s = match if ai == b[j - 1] else mismatch
            v = Mp[j - 1]
            msrc = 0
            if Xp[j - 1] > v:
                v = Xp[j - 1]
                msrc = 1
            if Yp[j - 1] > v:
                v = Yp[j - 1]
                msrc = 2
            if local and v <= 0:
                v = 0
                msrc = 3
            mv = v + s
            Mc[j] = mv

            v = Mp[j] + gopen
            xsrc = 0
            if Xp[j] + gext > v:
                v = Xp[j] + gext
                xsrc = 1
            if Yp[j] + gopen > v:
                v = Yp[j] + gopen
                xsrc = 2
            Xc[j] = v if v > neg else neg

            v = Mc[j - 1] + gopen
            ysrc = 0
            if Xc[j - 1] + gopen > v:
                v = Xc[j - 1] + gopen
                ysrc = 1
            if Yc[j - 1] + gext > v:
                v = Yc[j - 1] + gext
                ysrc = 2
            Yc[j] = v if v > neg else neg

            tb[i, j] = msrc | (xsrc << 2) | (ysrc << 4)
            if local and mv > best:
                best = mv
                bi = i
                bj = j
        for j in range(m + 1):
            Mp[j] = Mc[j]
            Xp[j] = Xc[j]
            Yp[j] = Yc[j]
    if local:
        return tb, best, bi, bj, 0
    state = 0
    v = Mp[m]
    if Xp[m] > v:
        v = Xp[m]
        state = 1
    if Yp[m] > v:
        v = Yp[m]
        state = 2
    if n == 0 and m == 0:
        v = np.int64(0)
    return tb, v, n, m, state


@njit(cache=True, nogil=True)
def _traceback(tb, a, b, i, j, state, local):
    n_max = i + j
    ops = np.empty(n_max, np.int8)
    ai = np.empty(n_max, np.int64)
    bi = np.empty(n_max, np.int64)
    k = 0
    while i > 0 or j > 0:
        cell = tb[i, j]
        if state == 0:
            ops[k] = 0 if a[i - 1] == b[j - 1] else 1
            ai[k] = i - 1
            bi[k] = j - 1
            k += 1
            src = cell & 3
            i -= 1
            j -= 1
            if src == 3:
                break
            state = src
        elif state == 1:
            ops[k] = 2
            ai[k] = i - 1
            bi[k] = -1
            k += 1
            state = (cell >> 2) & 3
            i -= 1
        else:
            ops[k] = 3
            ai[k] = -1
            bi[k] = j - 1
            k += 1
            state = (cell >> 4) & 3
            j -= 1
    return ops[:k][::-1], ai[:k][::-1], bi[:k][::-1]


def _codes(text: str) -> np.ndarray:
    return np.fromiter((ord(c) for c in text), dtype=np.int32, count=len(text))


def _check_size(a: str, b: str, cfg: AlignConfig) -> None:
    for s in (a, b):
        if len(s) > cfg.max_len:
            raise SizeLimit(len(s), cfg.max_len)


def _run(a: str, b: str, cfg: AlignConfig, local: bool) -> AlignmentResult:
    _check_size(a, b, cfg)
    ca, cb = _codes(a), _codes(b)
    tb, score, i, j, state = _fill(
        ca, cb, cfg.match_score, cfg.mismatch_score, cfg.gap_open, cfg.gap_extend, local
    )
    mode = Mode.LOCAL if local else Mode.GLOBAL
    if local and score <= 0:
        return AlignmentResult((), 0, (0, 0), (0, 0), mode)
    ops, ai, bi = _traceback(tb, ca, cb, i, j, state, local)
    columns = tuple(
        Column(_OPS[o], None if x < 0 else int(x), None if y < 0 else int(y))
        for o, x, y in zip(ops.tolist(), ai.tolist(), bi.tolist())
    )
    if local:
        a_idx = [c.a for c in columns if c.a is not None]
        b_idx = [c.b for c in columns if c.b is not None]
        a_span = (a_idx[0], a_idx[-1] + 1)
        b_span = (b_idx[0], b_idx[-1] + 1)
    else:
        a_span, b_span = (0, len(a)), (0, len(b))
    return AlignmentResult(columns, int(score), a_span, b_span, mode)


def align_global(a: str, b: str, cfg: AlignConfig = FILTER_ALIGN) -> AlignmentResult:
    return _run(a, b, cfg, local=False)


def align_local(a: str, b: str, cfg: AlignConfig = TRIM_ALIGN) -> AlignmentResult:
    """Best-scoring local alignment; an empty result means nothing scored above zero."""
    return _run(a, b, cfg, local=True)


def align(a: str, b: str, cfg: AlignConfig) -> AlignmentResult:
    return align_local(a, b, cfg) if cfg.mode is Mode.LOCAL else align_global(a, b, cfg)


@dataclass(frozen=True)
class AlignedTexts:
    """An alignment of two stripped texts plus the maps back to the originals."""

    result: AlignmentResult
    a_text: str
    b_text: str
    a_map: IndexMap
    b_map: IndexMap


def align_texts(a_text: str, b_text: str, cfg: AlignConfig) -> AlignedTexts:
    a_stripped, a_map = strip_and_map(a_text, cfg.ignore_chars)
    b_stripped, b_map = strip_and_map(b_text, cfg.ignore_chars)
    return AlignedTexts(align(a_stripped, b_stripped, cfg), a_text, b_text, a_map, b_map)


def window_match_ratios(alignment: AlignmentResult, window: int = 100) -> list[float]:
    """Fraction of MATCH columns in every run of ``window`` consecutive columns."""
    if window < 1:
        raise ValueError("window must be >= 1")
    is_match = np.array([c.op is Op.MATCH for c in alignment.columns], dtype=np.int64)
    if is_match.size == 0:
        return []
    if is_match.size < window:
        return [float(is_match.mean())]
    csum = np.concatenate(([0], np.cumsum(is_match)))
    return ((csum[window:] - csum[:-window]) / window).tolist()


def aligned_region(
    alignment: AlignmentResult, map_a: IndexMap | Sequence[int], original_a: str
) -> tuple[int, int]:
    """Span of ``original_a`` from the first to the last aligned ``a`` character."""
    a_idx = [c.a for c in alignment.columns if c.a is not None]
    if not a_idx:
        raise NoAlignedRegion("alignment has no aligned characters")
    start, end = map_a[a_idx[0]], map_a[a_idx[-1]] + 1
    assert 0 <= start < end <= len(original_a)
    return start, end
