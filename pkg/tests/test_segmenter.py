import pytest

from postocr.corpus import PagePair
from postocr.errors import DataError, PageTooShort
from postocr.segmenter import (
    Segment,
    SegmentConfig,
    segment_by_word_index,
    segment_page,
    strided_pairs,
    word_spans,
)
from postocr.synth import clean_texts, synth_corpus
from postocr.textnorm import collapse_whitespace


def _clean_page(n_words, seed=0, pid="p"):
    text = clean_texts(1, n_words, seed=seed)[0]
    return PagePair(pid, "en", text, text)


def _words(text):
    return text.split()


class TestConfig:
    def test_language_defaults(self):
        assert SegmentConfig.for_language("en").target_ocr_words == 200
        assert SegmentConfig.for_language("fi").target_ocr_words == 100

    def test_rejects_zero(self):
        with pytest.raises(ValueError):
            SegmentConfig(0)


class TestSegmentPage:
    def test_450_clean_words(self):
        segs = segment_page(_clean_page(450))
        assert [s.ocr_word_count for s in segs] == [200, 200, 50]
        assert [s.index for s in segs] == [0, 1, 2]
        for s in segs:
            assert len(_words(s.gt_text)) == s.ocr_word_count

    def test_exactly_200_words_single_segment(self):
        segs = segment_page(_clean_page(200))
        assert len(segs) == 1 and segs[0].ocr_word_count == 200

    def test_short_page(self):
        page = _clean_page(50)
        with pytest.raises(PageTooShort):
            segment_page(page)
        segs = segment_page(page, cfg=SegmentConfig(200, allow_short_page=True))
        assert len(segs) == 1 and segs[0].ocr_text == page.ocr_text

    def test_empty_side(self):
        page = PagePair("p", "en", "a b c", "")
        with pytest.raises(DataError):
            segment_page(page, cfg=SegmentConfig(2))

    def test_boundary_in_garbled_region_moves_forward(self):
        gt = clean_texts(1, 450, seed=1)[0]
        words = gt.split()
        # OCR words 196..205 are garbage that cannot match anything
        garbled = words[:196] + ["#" * len(w) for w in words[196:206]] + words[206:]
        page = PagePair("g", "en", " ".join(garbled), " ".join(words))
        segs = segment_page(page)
        first = segs[0]
        assert first.ocr_word_count == 206
        # the GT side is cut at the same word, since only the content was garbled
        assert len(first.gt_text.split()) == 206
        assert segs[1].ocr_text.split()[0] == words[206]
        assert segs[1].gt_text.split()[0] == words[206]

    def test_gt_boundaries_on_word_boundaries(self):
        pages, _, _ = synth_corpus(clean_texts(5, 500, seed=2), 0.15, seed=2)
        for page in pages:
            segs = segment_page(page)
            prev_end = 0
            for s in segs:
                g0, g1 = s.gt_span
                assert g0 >= prev_end
                assert g0 == 0 or page.gt_text[g0 - 1].isspace()
                assert g1 == len(page.gt_text) or page.gt_text[g1].isspace()
                prev_end = g1

    def test_round_trip_on_noisy_pages(self):
        pages, _, _ = synth_corpus(clean_texts(20, (150, 700), seed=4), 0.10, seed=4)
        for page in pages:
            segs = segment_page(page, cfg=SegmentConfig(120, allow_short_page=True))
            joined = collapse_whitespace(" ".join(s.ocr_text for s in segs))
            assert joined == collapse_whitespace(page.ocr_text)
            gt_joined = collapse_whitespace(" ".join(s.gt_text for s in segs))
            assert gt_joined == collapse_whitespace(page.gt_text)

    def test_record_round_trip(self):
        seg = segment_page(_clean_page(250))[1]
        back = Segment.from_record(seg.to_record())
        assert (back.id, back.ocr_text, back.gt_text, back.ocr_word_count) == (
            seg.id, seg.ocr_text, seg.gt_text, seg.ocr_word_count
        )
        assert set(seg.to_record()) == {"page_id", "index", "ocr_text", "gt_text", "ocr_word_count"}


class TestWordIndexSplitter:
    def test_same_records_as_alignment_path_on_clean_page(self):
        page = _clean_page(330)
        cfg = SegmentConfig(100)
        a = [s.to_record() for s in segment_by_word_index(page, cfg)]
        b = [s.to_record() for s in segment_page(page, cfg=cfg)]
        assert a == b

    def test_requires_word_alignment(self):
        with pytest.raises(DataError):
            segment_by_word_index(PagePair("p", "fi", "a b", "a b c"), SegmentConfig(1))


class TestStridedPairs:
    @pytest.mark.parametrize("n_words, expected", [(600, 3), (500, 2), (399, 0), (400, 1)])
    def test_pair_counts(self, n_words, expected):
        assert len(strided_pairs(_clean_page(n_words))) == expected

    def test_offsets_and_adjacency(self):
        page = _clean_page(600)
        words = page.ocr_text.split()
        pairs = strided_pairs(page)
        for k, pair in enumerate(pairs):
            assert pair.left.ocr_text.split() == words[100 * k:100 * k + 200]
            assert pair.right.ocr_text.split() == words[100 * k + 200:100 * k + 400]
            assert pair.left.ocr_span[1] < pair.right.ocr_span[0]
            # the boundary indexes the first word of the right segment in the pair's GT
            assert pair.gt_text.split()[pair.local_boundary] == pair.right.gt_text.split()[0]

    def test_word_spans(self):
        assert word_spans(" ab  c\nd ") == [(1, 3), (5, 6), (7, 8)]
