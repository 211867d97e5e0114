import sys
import threading

import pytest

from phraseforge.aligner import PhraseTable
from phraseforge.corpus import build_vocabulary
from phraseforge.errors import ParseError, PhraseforgeError
from phraseforge.translators import (ClosedVocabularyTranslator, DictionaryTranslator,
                                     IdentityTranslator, PhraseGreedyTranslator,
                                     SubprocessTranslator, builtin_translators, load_lexicon,
                                     make_translator)


def S(text):
    return tuple(text.split())


def test_builtin_names():
    assert {"identity", "dictionary", "phrase-greedy"} <= set(builtin_translators())


def test_identity():
    assert IdentityTranslator().translate(S("a b")) == S("a b")
    assert IdentityTranslator().translate_batch([S("a"), ()]) == [S("a"), ()]


def test_phrase_greedy_longest_match():
    table = PhraseTable.from_triples([(S("a b"), S("x"), 1.0), (S("b"), S("y"), 1.0)])
    out, links = PhraseGreedyTranslator(table).translate_aligned(S("a b b"))
    assert out == S("x y")
    assert links == {(0, 0), (1, 0), (2, 1)}


def test_phrase_greedy_copies_uncovered_and_uses_best():
    table = PhraseTable.from_triples([(S("a"), S("x"), 0.2), (S("a"), S("z"), 0.9)])
    assert PhraseGreedyTranslator(table).translate(S("q a")) == S("q z")
    assert PhraseGreedyTranslator(PhraseTable()).translate(S("q a")) == S("q a")


def test_dictionary_empty_is_identity():
    assert DictionaryTranslator({}).translate(S("a b c")) == S("a b c")


def test_dictionary_first_target_wins(tmp_path):
    (tmp_path / "lex").write_text("a\tx\na\ty\nb\tz\n")
    assert load_lexicon(tmp_path / "lex") == {"a": ["x", "y"], "b": ["z"]}
    assert DictionaryTranslator.from_file(tmp_path / "lex").translate(S("a b c")) == S("x z c")


def test_lexicon_parse_error(tmp_path):
    (tmp_path / "lex").write_text("a\tx\nb\n")
    with pytest.raises(ParseError) as err:
        load_lexicon(tmp_path / "lex")
    assert err.value.line == 2


def test_closed_vocabulary():
    vocab = build_vocabulary([S("a b")], 2)
    nmt = ClosedVocabularyTranslator({"a": ["x"]}, vocab)
    assert nmt.translate(S("a b <T1> c")) == S("x b <T1> <unk>")


def test_subprocess_line_protocol():
    with SubprocessTranslator([sys.executable, "-u", "-c",
                               "import sys\nfor l in sys.stdin: print(l.strip().upper(), flush=True)"]) as t:
        assert not t.thread_safe
        assert t.translate(S("a b")) == S("A B")
        assert t.translate(()) == ()
        assert t.translate_batch([S("c"), S("d e")]) == [S("C"), S("D E")]


def test_subprocess_serializes_concurrent_callers():
    results = {}
    with make_translator("command:cat") as t:
        def work(i):
            results[i] = t.translate((f"s{i}", "x"))
        threads = [threading.Thread(target=work, args=(i,)) for i in range(8)]
        for th in threads:
            th.start()
        for th in threads:
            th.join()
    assert results == {i: (f"s{i}", "x") for i in range(8)}


def test_subprocess_exit_is_reported():
    t = SubprocessTranslator("true")
    with pytest.raises(PhraseforgeError):
        t.translate(S("a"))
    t.close()


def test_make_translator(tmp_path):
    (tmp_path / "lex").write_text("a\tx\n")
    assert isinstance(make_translator("identity"), IdentityTranslator)
    assert make_translator(f"dictionary:{tmp_path / 'lex'}").translate(S("a")) == S("x")
    table = PhraseTable.from_triples([(S("a"), S("y"), 1.0)])
    assert make_translator("phrase-greedy", table=table).translate(S("a")) == S("y")
    nmt = make_translator(f"closed-vocab:{tmp_path / 'lex'}", vocab=build_vocabulary([S("a")], 1))
    assert nmt.translate(S("a b")) == S("x <unk>")
    for bad in ("nope", "dictionary", "phrase-greedy", f"closed-vocab:{tmp_path / 'lex'}"):
        with pytest.raises(PhraseforgeError):
            make_translator(bad)
