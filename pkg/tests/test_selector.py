import pytest
from hypothesis import given, strategies as st

from phraseforge.aligner import CandidatePair, align_candidates
from phraseforge.corpus import ParallelCorpus, build_vocabulary
from phraseforge.errors import CorpusAlignmentError, ParseError
from phraseforge.selector import (Inventory, SelectionConfig, filter_candidates,
                                  load_selection_report, load_stop_words, mine_training_pairs,
                                  resolve_overlaps, select_phrase_pairs, write_selection_report)
from phraseforge.stats import count_ngrams

from oracles import BruteEntropy, brute_select
from synthetic import diagonal_alignment, make_corpus, make_grammar, make_phrase_table


def S(text):
    return tuple(text.split())


def cand(ss, sl, ts, tl, src, tgt):
    return CandidatePair(ss, sl, ts, tl, src[ss:ss + sl], tgt[ts:ts + tl], frozenset({"alignment"}))


def compound_side(p="p", q="q", z="z", y="y", a="a", b="b"):
    return ([(z, p)] * 100 + [(q, y)] * 100
            + [(f"{a}{i}", p, q, f"{b}{i}") for i in range(8)])


@pytest.fixture(scope="module")
def compound():
    src, tgt = compound_side(), compound_side("r", "s", "zz", "yy", "c", "d")
    return {
        "src": src, "tgt": tgt,
        "stats_src": count_ngrams(src, 3), "stats_tgt": count_ngrams(tgt, 3),
        "brute_src": BruteEntropy(src, 3), "brute_tgt": BruteEntropy(tgt, 3),
        # p is out of vocabulary, q and the whole target side are in it
        "vocab_src": build_vocabulary([S("z y q a0 b0")], 10),
        "vocab_tgt": build_vocabulary([S("zz yy r s c0 d0")], 10),
    }


def _select(compound, candidate, **cfg):
    return filter_candidates([candidate], compound["stats_src"], compound["stats_tgt"],
                             compound["vocab_src"], compound["vocab_tgt"], SelectionConfig(**cfg))


def test_compound_selected_at_bound_1_5(compound):
    src, tgt = S("a0 p q b0"), S("c0 r s d0")
    c = cand(1, 2, 1, 2, src, tgt)
    for side in ("src", "tgt"):
        phrase = c.source if side == "src" else c.target
        assert compound[f"brute_{side}"].boundary(phrase, 1.5)
    (pair,) = _select(compound, c, entropy_lower_bound=1.5)
    assert pair.candidate == c and pair.contains_oov
    assert (pair.h_left_src, pair.h_right_src, pair.h_left_tgt, pair.h_right_tgt) == (3.0,) * 4


def test_compound_rejected_above_its_entropy(compound):
    c = cand(1, 2, 1, 2, S("a0 p q b0"), S("c0 r s d0"))
    assert _select(compound, c, entropy_lower_bound=3.0) == []
    assert _select(compound, c, entropy_lower_bound=3.5) == []


def test_in_vocabulary_pair_rejected(compound):
    c = cand(1, 2, 1, 2, S("a0 p q b0"), S("c0 r s d0"))
    with_p = dict(compound, vocab_src=build_vocabulary([S("p q")], 5))
    assert _select(with_p, c, entropy_lower_bound=1.5) == []


def test_target_side_oov_suffices(compound):
    c = cand(1, 2, 1, 2, S("a0 p q b0"), S("c0 r s d0"))
    swapped = dict(compound, vocab_src=build_vocabulary([S("p q")], 5),
                   vocab_tgt=build_vocabulary([S("r")], 5))
    assert len(_select(swapped, c, entropy_lower_bound=1.5)) == 1


@pytest.mark.parametrize("stops", [{"stop_words_src": {"q"}}, {"stop_words_tgt": {"r"}}])
def test_stop_word_rejected(compound, stops):
    c = cand(1, 2, 1, 2, S("a0 p q b0"), S("c0 r s d0"))
    assert _select(compound, c, entropy_lower_bound=1.5, **stops) == []


def test_substring_over_bound_rejected(compound):
    # "p q" itself clears 0.5 bits, but its part p (0.603 bits left) does too
    c = cand(1, 2, 1, 2, S("a0 p q b0"), S("c0 r s d0"))
    assert compound["stats_src"].entropy_left(S("p q")) > 0.5
    assert compound["stats_src"].entropy_left(S("p")) > 0.5
    assert not compound["brute_src"].boundary(c.source, 0.5)
    assert _select(compound, c, entropy_lower_bound=0.5) == []


def test_low_entropy_phrase_rejected(compound):
    c = cand(0, 3, 0, 3, S("a0 p q b0"), S("c0 r s d0"))
    assert _select(compound, c, entropy_lower_bound=0.0) == []


def test_too_long_candidate_rejected(compound):
    c = cand(1, 2, 1, 2, S("a0 p q b0"), S("c0 r s d0"))
    assert _select(compound, c, entropy_lower_bound=1.5, max_phrase_len=1) == []


def test_unseen_phrase_dropped_with_diagnostic(compound):
    c = cand(0, 2, 0, 2, S("p novel"), S("r s"))
    notes = []
    assert filter_candidates([c], compound["stats_src"], compound["stats_tgt"],
                             compound["vocab_src"], compound["vocab_tgt"],
                             SelectionConfig(entropy_lower_bound=1.5), notes) == []
    assert len(notes) == 1 and "novel" in notes[0]


def test_config_validation():
    with pytest.raises(ValueError):
        SelectionConfig(max_phrase_len=0)
    with pytest.raises(ValueError):
        SelectionConfig(entropy_lower_bound=-1)
    with pytest.raises(ValueError):
        SelectionConfig(substring_check="outer")


def test_resolve_overlaps_prefers_longer_then_leftmost():
    src, tgt = S("a b c d e"), S("v w x y z")
    long_ = cand(1, 3, 1, 3, src, tgt)
    left = cand(0, 1, 0, 1, src, tgt)
    short = cand(3, 1, 3, 1, src, tgt)
    right = cand(4, 1, 4, 1, src, tgt)
    tgt_clash = cand(4, 1, 2, 1, src, tgt)
    kept = resolve_overlaps([short, right, tgt_clash, left, long_])
    assert kept == [left, long_, right]


def test_resolve_overlaps_same_source_longer_target_wins():
    src, tgt = S("a b"), S("x y z")
    a, b = cand(0, 1, 0, 1, src, tgt), cand(0, 1, 0, 2, src, tgt)
    assert resolve_overlaps([a, b]) == [b]


def test_stop_words_file(tmp_path):
    (tmp_path / "sw").write_text("the\nof\n\n")
    assert load_stop_words(tmp_path / "sw") == {"the", "of"}


# -- mining over a synthetic corpus ---------------------------------------------

GRAMMAR = make_grammar(n_function=4, n_nouns=20, n_verbs=5, n_terms=40, n_compounds=10)


def _setup(n=200, seed=3):
    g = GRAMMAR
    corpus = make_corpus(g, n, seed)
    vocab_src = build_vocabulary(corpus.source, len(g.common))
    vocab_tgt = build_vocabulary(corpus.target, len(g.common))
    cfg = SelectionConfig(max_phrase_len=3, entropy_lower_bound=1.0,
                          stop_words_src=vocab_src.top(4), stop_words_tgt=vocab_tgt.top(4))
    return dict(
        corpus=corpus, table=make_phrase_table(g),
        alignments=[diagonal_alignment(p) for p in corpus],
        stats_src=count_ngrams(corpus.source, 3), stats_tgt=count_ngrams(corpus.target, 3),
        vocab_src=vocab_src, vocab_tgt=vocab_tgt, cfg=cfg,
    )


@pytest.fixture(scope="module")
def mined():
    s = _setup()
    selections, inventory = mine_training_pairs(**s)
    return s, selections, inventory


def test_mining_matches_independent_pass(mined):
    s, selections, inventory = mined
    corpus, cfg = s["corpus"], s["cfg"]
    brute_src, brute_tgt = BruteEntropy(corpus.source, 3), BruteEntropy(corpus.target, 3)
    triples = list(s["table"].triples())
    expected = []
    for (src, tgt), links in zip(corpus, s["alignments"]):
        expected.append(brute_select(src, tgt, triples, links, brute_src, brute_tgt,
                                     s["vocab_src"], s["vocab_tgt"], cfg.stop_words_src,
                                     cfg.stop_words_tgt, cfg.entropy_lower_bound, 3))
    assert [[p.candidate.spans for p in sel] for sel in selections] == expected
    pairs = [(src[i:i + n], tgt[j:j + m]) for (src, tgt), sel in zip(corpus, expected)
             for i, n, j, m in sel]
    assert inventory == Inventory(len(pairs), len(set(pairs)), len({a for a, _ in pairs}),
                                  len({b for _, b in pairs}))
    assert inventory.occurrences > 20


def test_selected_pairs_satisfy_every_condition(mined):
    s, selections, _ = mined
    cfg = s["cfg"]
    for sel in selections:
        for p in sel:
            assert any(t not in s["vocab_src"] for t in p.source) or \
                any(t not in s["vocab_tgt"] for t in p.target)
            assert not set(p.source) & cfg.stop_words_src
            assert not set(p.target) & cfg.stop_words_tgt
            assert min(p.h_left_src, p.h_right_src, p.h_left_tgt, p.h_right_tgt) > 1.0
        for a in sel:
            for b in sel:
                if a is not b:
                    assert a.src_start + a.src_len <= b.src_start or b.src_start + b.src_len <= a.src_start
                    assert a.tgt_start + a.tgt_len <= b.tgt_start or b.tgt_start + b.tgt_len <= a.tgt_start


def test_jobs_do_not_change_result(mined):
    s, selections, inventory = mined
    assert mine_training_pairs(**s, jobs=3) == (selections, inventory)


def test_table_only_mining(mined):
    s, _, _ = mined
    selections, inv = mine_training_pairs(**dict(s, alignments=None))
    assert all("phrase-table" in p.candidate.provenance for sel in selections for p in sel)
    assert inv.occurrences > 0


def test_empty_corpus(mined):
    s, _, _ = mined
    empty = ParallelCorpus((), "sx", "tx")
    assert mine_training_pairs(**dict(s, corpus=empty, alignments=[])) == ([], Inventory())


def test_alignment_count_mismatch(mined):
    s, _, _ = mined
    with pytest.raises(CorpusAlignmentError):
        mine_training_pairs(**dict(s, alignments=s["alignments"][:-1]))


@given(st.sets(st.sampled_from(sorted(GRAMMAR.lexicon)), max_size=30))
def test_more_stop_words_never_add_pairs(extra):
    s = _SMALL
    base = s["cfg"]
    bigger = SelectionConfig(base.max_phrase_len, base.entropy_lower_bound,
                             base.stop_words_src | extra,
                             base.stop_words_tgt | {GRAMMAR.lexicon[w] for w in extra})
    for pair, links in zip(s["corpus"], s["alignments"]):
        cands = align_candidates(pair, s["table"], links, 3)
        args = (s["stats_src"], s["stats_tgt"], s["vocab_src"], s["vocab_tgt"])
        before = {p.candidate for p in filter_candidates(cands, *args, base)}
        after = {p.candidate for p in filter_candidates(cands, *args, bigger)}
        assert after <= before


@given(st.floats(0.0, 4.0), st.floats(0.0, 4.0))
def test_raising_bound_adds_no_low_entropy_pair(b1, b2):
    lo, hi = sorted((b1, b2))
    s = _SMALL
    args = (s["stats_src"], s["stats_tgt"], s["vocab_src"], s["vocab_tgt"])
    for pair, links in zip(s["corpus"], s["alignments"]):
        cands = align_candidates(pair, s["table"], links, 3)
        before = {p.candidate for p in filter_candidates(cands, *args, _with_bound(s["cfg"], lo))}
        for p in filter_candidates(cands, *args, _with_bound(s["cfg"], hi)):
            assert p.candidate in before or min(p.h_left_src, p.h_right_src,
                                                p.h_left_tgt, p.h_right_tgt) > hi


def _with_bound(cfg, bound):
    return SelectionConfig(cfg.max_phrase_len, bound, cfg.stop_words_src, cfg.stop_words_tgt)


_SMALL = _setup(n=40, seed=9)


def test_report_roundtrip(tmp_path, mined):
    s, selections, _ = mined
    write_selection_report(selections, tmp_path / "rep")
    again = load_selection_report(tmp_path / "rep", s["corpus"])
    assert again == selections
    lines = (tmp_path / "rep").read_text().splitlines()
    assert lines[0] == "#phraseforge-selection 1"
    assert len(lines) == 2 + sum(map(len, selections))


def test_report_span_mismatch(tmp_path, mined):
    s, selections, _ = mined
    write_selection_report(selections, tmp_path / "rep")
    lines = (tmp_path / "rep").read_text().splitlines()
    fields = lines[2].split("\t")
    fields[5] = "bogus"
    lines[2] = "\t".join(fields)
    (tmp_path / "rep").write_text("\n".join(lines) + "\n")
    with pytest.raises(ParseError) as err:
        load_selection_report(tmp_path / "rep", s["corpus"])
    assert err.value.line == 3


def test_select_phrase_pairs_orders_by_source(mined):
    s, _, _ = mined
    for pair, links in zip(s["corpus"], s["alignments"]):
        cands = align_candidates(pair, s["table"], links, 3)
        out = select_phrase_pairs(pair, cands, s["stats_src"], s["stats_tgt"],
                                  s["vocab_src"], s["vocab_tgt"], s["cfg"])
        assert [p.src_start for p in out] == sorted(p.src_start for p in out)
