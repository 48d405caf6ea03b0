import json
import random

import pytest

import oracles
from postocr.corpus import (
    FilterConfig,
    PagePair,
    Verdict,
    corpus_stats,
    filter_corpus,
    filter_page,
    filtered_record,
    load_corpus,
    parse_corpus,
    verdict_counts,
    write_corpus,
)
from postocr.errors import DuplicateId, EmptyCorpus, MalformedRecord
from postocr.synth import clean_texts
from postocr.textnorm import NormalizationPolicy


def _page(pid, ocr, gt, lang="en"):
    return PagePair(pid, lang, ocr, gt)


def _line(**kw):
    rec = {"id": "p1", "language": "en", "ocr_text": "a", "gt_text": "a", "source": "s", "metadata": {}}
    rec.update(kw)
    return json.dumps(rec)


TEXT = clean_texts(1, 120, seed=3)[0]


class TestLoad:
    def test_two_lines(self, tmp_path):
        path = tmp_path / "c.jsonl"
        path.write_text(_line(id="a") + "\n" + _line(id="b") + "\n")
        pages = load_corpus(path)
        assert [p.id for p in pages] == ["a", "b"]

    def test_missing_gt_reports_line(self):
        bad = json.loads(_line(id="b"))
        del bad["gt_text"]
        with pytest.raises(MalformedRecord) as err:
            parse_corpus([_line(id="a"), json.dumps(bad)])
        assert err.value.line == 2

    def test_not_json(self):
        with pytest.raises(MalformedRecord):
            parse_corpus(["{nope"])

    def test_duplicate_id(self):
        with pytest.raises(DuplicateId) as err:
            parse_corpus([_line(), _line()])
        assert "p1" in str(err.value)

    def test_extra_keys_ignored_and_round_trip(self, tmp_path):
        pages = parse_corpus([_line(id="x", extra=1, metadata={"book": "b1"})])
        assert pages[0].metadata == {"book": "b1"}
        path = tmp_path / "out.jsonl"
        write_corpus(pages, path)
        assert load_corpus(path) == pages

    def test_blank_lines_skipped(self):
        assert len(parse_corpus([_line(), "", "  "])) == 1


class TestFilter:
    def test_identical_pages_kept_with_full_ratio(self):
        out = filter_page(_page("p", TEXT, TEXT))
        assert out.verdict is Verdict.KEPT
        assert out.min_window_ratio == 1.0

    def test_blank(self):
        assert filter_page(_page("p", "  \n ", TEXT)).verdict is Verdict.BLANK
        assert filter_page(_page("p", TEXT, "")).verdict is Verdict.BLANK

    def test_too_short_at_100_chars(self):
        ocr = "abcd " * 25  # 100 non-whitespace characters
        out = filter_page(_page("p", ocr, TEXT))
        assert out.verdict is Verdict.TOO_SHORT
        assert out.min_window_ratio is None

    def test_threshold_is_inclusive_at_150(self):
        text = "abcde " * 30  # 150 non-whitespace characters
        assert filter_page(_page("p", text, text)).verdict is Verdict.KEPT

    @pytest.mark.parametrize("block", [120, 300])
    def test_symbol_block_is_misaligned(self, block):
        start = 200
        ocr = TEXT[:start] + "#" * block + TEXT[start + block:]
        out = filter_page(_page("p", ocr, TEXT))
        assert out.verdict is Verdict.MISALIGNED
        assert out.min_window_ratio < 0.10

    def test_short_garbled_block_stays_kept(self):
        ocr = TEXT[:200] + "#" * 40 + TEXT[240:]
        assert filter_page(_page("p", ocr, TEXT)).verdict is Verdict.KEPT

    def test_oversize_page(self):
        cfg = FilterConfig(align_cfg=FilterConfig().align_cfg.with_overrides(max_len=200))
        assert filter_page(_page("p", TEXT, TEXT), cfg).verdict is Verdict.OVERSIZE

    def test_counts_sum_and_order_independent(self):
        rng = random.Random(0)
        pages = [_page("k%d" % i, TEXT, TEXT) for i in range(4)]
        pages += [_page("s%d" % i, "abc", TEXT) for i in range(2)]
        pages += [_page("m", TEXT[:100] + "#" * 150 + TEXT[250:], TEXT)]
        outcomes = filter_corpus(pages, workers=3)
        counts = verdict_counts(outcomes)
        assert sum(counts.values()) == len(pages)
        assert counts["Kept"] == 4 and counts["TooShort"] == 2 and counts["Misaligned"] == 1
        shuffled = pages[:]
        rng.shuffle(shuffled)
        again = {o.page_id: o for o in filter_corpus(shuffled, workers=1)}
        assert all(again[o.page_id] == o for o in outcomes)

    def test_filtered_record_schema(self):
        page = _page("p", TEXT, TEXT)
        rec = filtered_record(page, filter_page(page))
        assert rec["filter_verdict"] == "Kept"
        assert rec["min_window_ratio"] == 1.0
        assert set(rec) >= {"id", "language", "ocr_text", "gt_text", "source", "metadata"}


class TestStats:
    def test_identical_single_page(self):
        stats = corpus_stats([_page("p", "a b c", "a b c")])
        assert stats.weighted_cer == 0 and stats.weighted_wer == 0
        assert stats.pages == 1 and stats.ocr_words == 3

    def test_weighting_by_gt_length(self):
        # cer 0.10 on a 100-char page and 0.20 on a 300-char page
        gt1, gt2 = "a" * 100, "b" * 300
        ocr1 = "x" * 10 + "a" * 90
        ocr2 = "x" * 60 + "b" * 240
        stats = corpus_stats([_page("1", ocr1, gt1), _page("2", ocr2, gt2)])
        assert stats.weighted_cer == pytest.approx(0.175)

    def test_toy_corpus_against_oracle(self):
        pol = NormalizationPolicy.for_language("en")
        pages = [
            _page("1", "Tlie cat sat", "The cat sat"),
            _page("2", "on tbe  mat today", "on the mat today"),
            _page("3", "Congrefs met", "Congreſs met"),
        ]
        stats = corpus_stats(pages, pol)
        gts = ["The cat sat", "on the mat today", "Congress met"]
        ocrs = ["Tlie cat sat", "on tbe mat today", "Congrefs met"]
        lens = [len(g) for g in gts]
        cers = [oracles.cer(g, o) for g, o in zip(gts, ocrs)]
        words = [len(g.split()) for g in gts]
        wers = [oracles.wer(g, o) for g, o in zip(gts, ocrs)]
        assert stats.weighted_cer == pytest.approx(sum(c * n for c, n in zip(cers, lens)) / sum(lens))
        assert stats.weighted_wer == pytest.approx(sum(w * n for w, n in zip(wers, words)) / sum(words))
        assert stats.pages == 3 and stats.ocr_words == 9 and stats.gt_words == 9
        assert stats.ocr_words_per_page == 3.0

    def test_empty(self):
        with pytest.raises(EmptyCorpus):
            corpus_stats([])
