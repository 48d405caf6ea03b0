import json
from pathlib import Path

import pytest

from postocr import cli
from postocr.config import PipelineConfig
from postocr.corpus import PagePair, load_corpus, write_corpus
from postocr.errors import ConfigError
from postocr.report import read_csv
from postocr.synth import clean_texts

ENDPOINTS = [
    {"name": "oracle", "kind": "Oracle"},
    {"name": "identity", "kind": "Identity"},
    {"name": "destructive", "kind": "Destructive"},
    {"name": "context", "kind": "ContextSensitive", "options": {"n_words": 10}},
    {"name": "parametric", "kind": "ParameterResponsive"},
    {"name": "down", "base_url": "http://127.0.0.1:9/v1", "model_name": "m", "max_retries": 0,
     "request_timeout": 2},
]


@pytest.fixture
def workdir(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    (tmp_path / "cfg.json").write_text(json.dumps({
        "endpoints": ENDPOINTS,
        "synth": {"n_pages": 6, "words_per_page": [620, 700]},
        "tune": {"n_trials": 12, "top_n": 5},
        "workers": 2,
    }))
    return tmp_path


def run(*argv):
    return cli.main(list(argv))


def _synth_and_segment():
    assert run("synth", "-c", "cfg.json") == 0
    assert run("segment", "-c", "cfg.json", "--corpus", "postocr-out/synth/corpus.jsonl") == 0


def _evaluate(endpoint):
    assert run("correct", "-c", "cfg.json", "--endpoint", endpoint) == 0
    assert run("evaluate", "-c", "cfg.json", "--endpoint", endpoint) == 0
    return json.loads(Path("postocr-out/evaluate/report.json").read_text())


class TestConfig:
    def test_unknown_key_rejected(self, workdir):
        with pytest.raises(ConfigError):
            PipelineConfig.from_dict({"bogus": 1})
        with pytest.raises(ConfigError):
            PipelineConfig.from_dict({"filter": {"window_size": 3}})

    def test_missing_file_rejected(self, workdir):
        with pytest.raises(ConfigError):
            PipelineConfig.from_dict({"corpus": "nope.jsonl"})

    def test_overrides_and_hash(self, workdir):
        a = PipelineConfig.load("cfg.json", ["filter.window=50", "language=\"fi\""])
        assert a.filter_cfg.window == 50 and a.policy.finnish_w_to_v
        assert a.params.temperature == 0.14 and a.segment_cfg.target_ocr_words == 100
        b = PipelineConfig.load("cfg.json")
        assert a.hash != b.hash and len(b.hash) == 12
        assert b.hash == PipelineConfig.load("cfg.json").hash

    def test_bad_value(self, workdir):
        with pytest.raises(ConfigError):
            PipelineConfig.from_dict({"generation": {"top_p": 2}})
        with pytest.raises(ConfigError):
            PipelineConfig.from_dict({"endpoint": "missing"})
        with pytest.raises(ConfigError):
            PipelineConfig.from_dict({"strategy": "Sideways"})


class TestExitCodes:
    def test_usage_error(self, workdir, capsys):
        with pytest.raises(SystemExit) as err:
            cli.main(["frobnicate"])
        assert err.value.code == 1

    def test_config_error(self, workdir, capsys):
        assert run("synth", "-c", "cfg.json", "--set", "synth.bogus=1") == 1
        assert "unknown config key" in capsys.readouterr().err
        assert run("filter", "-c", "missing.json") == 1
        assert run("filter", "-c", "cfg.json") == 1  # no corpus given

    def test_data_errors(self, workdir):
        (workdir / "empty.jsonl").write_text("")
        assert run("filter", "-c", "cfg.json", "--corpus", "empty.jsonl") == 2
        (workdir / "bad.jsonl").write_text('{"id": "x"}\n')
        assert run("filter", "-c", "cfg.json", "--corpus", "bad.jsonl") == 2

    def test_endpoint_error(self, workdir):
        _synth_and_segment()
        assert run("correct", "-c", "cfg.json", "--endpoint", "down") == 3
        recs = [json.loads(x) for x in open("postocr-out/correct/corrections.jsonl")]
        assert recs and all(r["error"] for r in recs)


class TestCommands:
    def test_synth(self, workdir):
        assert run("synth", "-c", "cfg.json", "--set", "synth.target_cer=0.04") == 0
        summary = json.loads((workdir / "postocr-out/synth/summary.json").read_text())
        assert abs(summary["measured_cer"] - 0.04) <= 0.01
        assert abs(summary["stats"]["weighted_cer"] - 0.04) <= 0.01
        assert len(load_corpus(workdir / "postocr-out/synth/corpus.jsonl")) == 6

    def test_synth_zero_noise(self, workdir):
        assert run("synth", "-c", "cfg.json", "--set", "synth.target_cer=0") == 0
        pages = load_corpus(workdir / "postocr-out/synth/corpus.jsonl")
        assert all(p.ocr_text == p.gt_text for p in pages)

    def test_synth_from_seed_texts(self, workdir):
        seeds = workdir / "seeds"
        seeds.mkdir()
        for k, text in enumerate(clean_texts(3, 200, seed=1)):
            (seeds / f"{k}.txt").write_text(text)
        assert run("synth", "-c", "cfg.json", "--set", "synth.seed_texts=\"seeds\"") == 0
        pages = load_corpus(workdir / "postocr-out/synth/corpus.jsonl")
        assert [p.gt_text for p in pages] == clean_texts(3, 200, seed=1)

    def test_filter_counts(self, workdir):
        texts = clean_texts(10, 80, seed=2)
        pages = [PagePair(f"p{k}", "en", t, t) for k, t in enumerate(texts)]
        pages[3] = PagePair("p3", "en", "too short", texts[3])
        pages[5] = PagePair("p5", "en", texts[5][:120], texts[5])
        garbled = texts[7][:100] + "#" * 150 + texts[7][250:]
        pages[7] = PagePair("p7", "en", garbled, texts[7])
        write_corpus(pages, workdir / "c.jsonl")
        assert run("filter", "-c", "cfg.json", "--corpus", "c.jsonl") == 0
        counts = {r["verdict"]: int(r["pages"]) for r in read_csv(workdir / "postocr-out/filter/counts.csv")}
        assert counts == {"Kept": 7, "Blank": 0, "TooShort": 2, "Misaligned": 1, "OversizePage": 0}
        kept = load_corpus(workdir / "postocr-out/filter/kept.jsonl")
        assert [p.id for p in kept] == ["p0", "p1", "p2", "p4", "p6", "p8", "p9"]
        rejected = [json.loads(x) for x in open(workdir / "postocr-out/filter/rejected.jsonl")]
        assert {r["id"]: r["filter_verdict"] for r in rejected} == {
            "p3": "TooShort", "p5": "TooShort", "p7": "Misaligned"}
        assert (workdir / "postocr-out/filter/summary.md").read_text().startswith("<!-- config_hash: ")

    def test_filter_all_clean(self, workdir):
        run("synth", "-c", "cfg.json")
        assert run("filter", "-c", "cfg.json", "--corpus", "postocr-out/synth/corpus.jsonl") == 0
        rows = read_csv(workdir / "postocr-out/filter/counts.csv")
        assert [float(r["percent"]) for r in rows if r["verdict"] == "Kept"] == [100.0]

    @pytest.mark.parametrize("endpoint, expected", [("oracle", 100.0), ("identity", 0.0), ("destructive", -100.0)])
    def test_evaluate_with_mocks(self, workdir, endpoint, expected):
        _synth_and_segment()
        report = _evaluate(endpoint)
        assert report["weighted_cer_pct"] == expected
        assert report["endpoint"] == endpoint
        out = workdir / "postocr-out/evaluate"
        for name in ("scores.csv", "scores.jsonl", "scatter.csv", "summary.md", "cer_before_after.png"):
            assert (out / name).exists()
        rows = read_csv(out / "scatter.csv")
        assert rows and set(rows[0]) == {"example_id", "cer_orig", "cer_post"}

    def test_correct_strategies(self, workdir):
        _synth_and_segment()
        assert run("correct", "-c", "cfg.json", "--endpoint", "context", "--strategy", "LUC") == 0
        luc = _evaluate_existing()
        assert run("correct", "-c", "cfg.json", "--endpoint", "context", "--strategy", "Baseline") == 0
        base = _evaluate_existing()
        assert luc > base

    def test_length_sweep(self, workdir):
        run("synth", "-c", "cfg.json")
        assert run("length-sweep", "-c", "cfg.json", "--corpus", "postocr-out/synth/corpus.jsonl") == 0
        rows = read_csv(workdir / "postocr-out/length-sweep/length_sweep.csv")
        assert [int(r["segment_words"]) for r in rows] == [50, 100, 200, 300]
        # Trimming cannot tell a dropped final period in the OCR from a period
        # the model appended, so the oracle may lose one at a segment edge.
        assert all(float(r["weighted_cer_pct"]) >= 99.9 for r in rows)
        assert (workdir / "postocr-out/length-sweep/length_sweep.png").exists()

    def test_length_sweep_short_segments_hurt(self, workdir):
        run("synth", "-c", "cfg.json")
        assert run("length-sweep", "-c", "cfg.json", "--corpus", "postocr-out/synth/corpus.jsonl",
                   "--endpoint", "context") == 0
        cer = [float(r["weighted_cer_pct"]) for r in read_csv(workdir / "postocr-out/length-sweep/length_sweep.csv")]
        assert cer == sorted(cer) and cer[0] < cer[-1]

    def test_length_sweep_book_cap_and_no_pages(self, workdir):
        run("synth", "-c", "cfg.json")
        assert run("length-sweep", "-c", "cfg.json", "--corpus", "postocr-out/synth/corpus.jsonl",
                   "--set", "sweep.min_words=5000") == 2
        pages = [PagePair(f"p{k}", "en", t, t, "same-book") for k, t in enumerate(clean_texts(4, 610, seed=0))]
        write_corpus(pages, workdir / "one_book.jsonl")
        cfg = PipelineConfig.load("cfg.json", ['corpus="one_book.jsonl"'])
        assert [p.id for p in cli._eligible(cli._load_pages(cfg), 600, 2)] == ["p0", "p1"]

    def test_boundary_eval(self, workdir):
        run("synth", "-c", "cfg.json")
        assert run("boundary-eval", "-c", "cfg.json", "--corpus", "postocr-out/synth/corpus.jsonl",
                   "--endpoint", "context") == 0
        out = workdir / "postocr-out/boundary-eval"
        seam = {(r["strategy"], r["side"]): float(r["weighted_cer_pct"]) for r in read_csv(out / "boundary_cer.csv")}
        assert seam[("LCC", "R")] > seam[("Baseline", "R")]
        assert seam[("LUC", "R")] > seam[("Baseline", "R")]
        overall = read_csv(out / "overall.csv")
        assert [r["strategy"] for r in overall] == ["Baseline", "LCC", "LUC"]
        assert (out / "boundary_cer.png").exists()

    def test_tune_resumes(self, workdir):
        _synth_and_segment()
        assert run("tune", "-c", "cfg.json", "--endpoint", "parametric") == 0
        log = workdir / "postocr-out/tune/trials.jsonl"
        first = log.read_text()
        assert len(first.splitlines()) == 12
        assert run("tune", "-c", "cfg.json", "--endpoint", "parametric") == 0
        assert log.read_text() == first
        selected = json.loads((workdir / "postocr-out/tune/selected.json").read_text())
        assert selected["n_trials"] == 12 and len(selected["top"]) == 5
        assert 0 <= selected["selected"]["temperature"] <= 1


def _evaluate_existing():
    assert run("evaluate", "-c", "cfg.json") == 0
    return json.loads(Path("postocr-out/evaluate/report.json").read_text())["weighted_cer_pct"]


def test_every_artifact_carries_config_hash(workdir):
    _synth_and_segment()
    _evaluate("oracle")
    h = PipelineConfig.load("cfg.json", ["endpoint=\"oracle\""]).hash
    out = workdir / "postocr-out/evaluate"
    assert read_first(out / "scores.csv") == f"# config_hash: {h}"
    assert all(json.loads(x)["config_hash"] == h for x in open(out / "scores.jsonl"))
    assert json.loads((out / "report.json").read_text())["config_hash"] == h
    assert h in read_first(out / "summary.md")
    line = (workdir / "postocr-out/synth/corpus.jsonl").read_text().splitlines()[0]
    assert "config_hash" in json.loads(line)


def read_first(path):
    return path.read_text().splitlines()[0]
