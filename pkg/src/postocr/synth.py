"""Synthetic page pairs: clean pseudo-prose plus injected OCR noise."""

from __future__ import annotations

import random
from dataclasses import replace
from typing import Sequence

from .corpus import PagePair
from .corrector.noise import NoiseConfig, calibrate_noise, inject_noise, measured_cer
from .textnorm import NormalizationPolicy

ENGLISH_WORDS = """
the of and to in that is was he for it with as his on be at by which this had not
are but from or have an they were her all she there would their we him been has when
who will more no if out so said what up its about into than them can only other new
some could time these two may then do first any my now such like our over man me even
most made after also did many before must through back years where much your way well
down should because each just those people how too little state good very make world
still own see men work long get here between both life being under never day same
another know while last might us great old year off come since against go came right
used take three states himself few house use during without again place around however
home small found thought went say part once general high upon school every nature lord
majesty parliament kingdom church letter honour esteem person reason virtue whole
present publick manner observe cause character obliged answer subject several receive
""".split()

FINNISH_WORDS = """
ja on ei se että hän oli niin kun mutta jo nyt sen ovat vaan kuin myös tämä joka
wanha waimo wäki walta wuosi wesi woima weli kaupunki maa kansa kirja sana talo mies
suuri pieni hywä paha päivä yö kaikki moni koko aika työ laki kirkko koulu seurakunta
isä äiti lapsi poika tyttö hallitus keisari sanomalehti uutinen kylä pelto metsä järwi
tulee menee sanoo näkee tekee antaa ottaa pitää saada olla tietää lukea kirjoittaa
""".split()


def synthetic_text(n_words: int, rng: random.Random, language: str = "en") -> str:
    vocab = FINNISH_WORDS if language.lower().startswith("fi") else ENGLISH_WORDS
    out, sentence_left, line_len = [], 0, 0
    for _ in range(n_words):
        word = rng.choice(vocab)
        if sentence_left == 0:
            word = word.capitalize()
            sentence_left = rng.randint(6, 16)
        sentence_left -= 1
        if sentence_left == 0:
            word += "."
        elif rng.random() < 0.06:
            word += ","
        line_len += len(word) + 1
        if line_len > 60:
            out.append("\n")
            line_len = 0
        elif out:
            out.append(" ")
        out.append(word)
    return "".join(out)


def clean_texts(
    n_pages: int, words_per_page: int | tuple[int, int], seed: int = 0, language: str = "en"
) -> list[str]:
    rng = random.Random(seed)
    texts = []
    for _ in range(n_pages):
        if isinstance(words_per_page, tuple):
            n = rng.randint(*words_per_page)
        else:
            n = words_per_page
        texts.append(synthetic_text(n, rng, language))
    return texts


def make_corpus(
    texts: Sequence[str],
    noise: NoiseConfig,
    language: str = "en",
    prefix: str = "syn",
    source: str = "synthetic",
) -> list[PagePair]:
    """One page pair per clean text; page k is noised with seed ``noise.seed + k``."""
    pages = []
    for k, text in enumerate(texts):
        noisy = inject_noise(text, replace(noise, seed=noise.seed + k))
        pages.append(PagePair(
            id=f"{prefix}-{k:05d}",
            language=language,
            ocr_text=noisy,
            gt_text=text,
            source=f"{source}/{k // 2:04d}",
            metadata={"noise_seed": str(noise.seed + k)},
        ))
    return pages


def synth_corpus(
    texts: Sequence[str],
    target_cer: float,
    seed: int = 0,
    language: str = "en",
    prefix: str = "syn",
) -> tuple[list[PagePair], NoiseConfig, float]:
    """Calibrate noise to ``target_cer`` on ``texts`` and build the corpus.

    Returns the pages, the noise config used, and the measured weighted CER
    under the language's evaluation normalization.
    """
    policy = NormalizationPolicy.for_language(language)
    base = NoiseConfig(0.7, 0.15, 0.15, seed=seed)
    cfg, _ = calibrate_noise(texts, target_cer, base, policy)
    pages = make_corpus(texts, cfg, language, prefix)
    got = measured_cer([p.gt_text for p in pages], [p.ocr_text for p in pages], policy)
    return pages, cfg, got
