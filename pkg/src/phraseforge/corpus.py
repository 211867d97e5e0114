"""Parallel corpus loading, length filtering and capped vocabularies.

Sentences are tuples of surface tokens. Input is pre-tokenized: one sentence
per line, tokens separated by a single ASCII space.
"""

import re
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Sequence, Tuple

from ._io import atomic_write_text, join_lines, read_lines
from .errors import CorpusAlignmentError, MalformedCorpusError

Sentence = Tuple[str, ...]

BOS = "<s>"
EOS = "</s>"
DEFAULT_TOKEN_TEMPLATE = "<T{}>"

# Characters used as field separators by the on-disk formats (reports, token maps).
FORBIDDEN_CHARS = ("\t", "\x1f", "\n", "\r", " ")
PHRASE_TABLE_SEPARATOR = "|||"


def placeholder_pattern(template=DEFAULT_TOKEN_TEMPLATE):
    """Compile a regex matching the literals produced by ``template``.

    The template must contain exactly one ``{}``; the match group holds the
    positive integer index.
    """
    if template.count("{}") != 1:
        raise ValueError(f"token template must contain exactly one '{{}}': {template!r}")
    head, tail = template.split("{}")
    return re.compile(re.escape(head) + r"([1-9][0-9]*)" + re.escape(tail))


_DEFAULT_PLACEHOLDER = placeholder_pattern()


def check_token(token, allow_placeholders=False, placeholder_re=_DEFAULT_PLACEHOLDER):
    """Return an error message for an invalid token, or None."""
    if not token:
        return "empty token"
    if token in (BOS, EOS):
        return f"reserved sentinel {token!r}"
    if token == PHRASE_TABLE_SEPARATOR:
        return f"reserved separator {token!r}"
    for ch in FORBIDDEN_CHARS:
        if ch in token:
            return f"token {token!r} contains separator {ch!r}"
    if not allow_placeholders and placeholder_re.fullmatch(token):
        return f"token {token!r} collides with the placeholder literal format"
    return None


def parse_sentence(line, allow_placeholders=False, path=None, lineno=None):
    if line == "":
        raise MalformedCorpusError("empty line", path=path, line=lineno)
    tokens = tuple(line.split(" "))
    for tok in tokens:
        problem = check_token(tok, allow_placeholders=allow_placeholders)
        if problem:
            raise MalformedCorpusError(problem, path=path, line=lineno)
    return tokens


def read_sentences(path, allow_placeholders=False):
    return [
        parse_sentence(line, allow_placeholders, path, i)
        for i, line in enumerate(read_lines(path), 1)
    ]


def write_sentences(path, sentences):
    atomic_write_text(path, join_lines(" ".join(s) for s in sentences))


@dataclass(frozen=True)
class ParallelCorpus:
    pairs: Tuple[Tuple[Sentence, Sentence], ...]
    source_lang: str = "src"
    target_lang: str = "tgt"

    def __post_init__(self):
        object.__setattr__(self, "pairs", tuple((tuple(s), tuple(t)) for s, t in self.pairs))
        for i, (s, t) in enumerate(self.pairs):
            if not s or not t:
                raise MalformedCorpusError(f"pair {i} has an empty side")

    def __len__(self):
        return len(self.pairs)

    def __iter__(self):
        return iter(self.pairs)

    def __getitem__(self, i):
        return self.pairs[i]

    @property
    def source(self):
        return [s for s, _ in self.pairs]

    @property
    def target(self):
        return [t for _, t in self.pairs]

    def with_pairs(self, pairs):
        return ParallelCorpus(tuple(pairs), self.source_lang, self.target_lang)


def load_parallel_corpus(source_path, target_path, source_lang="src", target_lang="tgt",
                         allow_placeholders=False):
    """Load two line-aligned files into a :class:`ParallelCorpus`.

    ``allow_placeholders`` admits token literals such as ``<T1>``; it is used
    when reloading corpora that were already rewritten.
    """
    src_lines = read_lines(source_path)
    tgt_lines = read_lines(target_path)
    if len(src_lines) != len(tgt_lines):
        raise CorpusAlignmentError(len(src_lines), len(tgt_lines), source_path, target_path)
    pairs = []
    for i, (s, t) in enumerate(zip(src_lines, tgt_lines), 1):
        pairs.append((
            parse_sentence(s, allow_placeholders, source_path, i),
            parse_sentence(t, allow_placeholders, target_path, i),
        ))
    return ParallelCorpus(tuple(pairs), source_lang, target_lang)


def write_parallel_corpus(corpus, source_path, target_path):
    write_sentences(source_path, corpus.source)
    write_sentences(target_path, corpus.target)


def filter_by_length(corpus, max_tokens):
    """Keep pairs whose sides both have strictly fewer than ``max_tokens`` tokens."""
    if max_tokens < 1:
        raise ValueError("max_tokens must be >= 1")
    return corpus.with_pairs(
        (s, t) for s, t in corpus.pairs if len(s) < max_tokens and len(t) < max_tokens
    )


@dataclass(frozen=True)
class Vocabulary:
    """The ``cap`` most frequent tokens of one corpus side, in rank order."""

    tokens: Tuple[str, ...]
    cap: int
    _ranks: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "tokens", tuple(self.tokens))
        if len(self.tokens) > self.cap:
            raise ValueError(f"{len(self.tokens)} entries exceed cap {self.cap}")
        ranks = {tok: i for i, tok in enumerate(self.tokens, 1)}
        if len(ranks) != len(self.tokens):
            raise ValueError("duplicate vocabulary entries")
        object.__setattr__(self, "_ranks", ranks)

    def __contains__(self, token):
        return token in self._ranks

    def __len__(self):
        return len(self.tokens)

    def __iter__(self):
        return iter(self.tokens)

    def rank(self, token):
        """1-based rank of ``token``; raises KeyError when absent."""
        return self._ranks[token]

    def top(self, n):
        """The ``n`` highest-ranked tokens, e.g. for use as stop words."""
        return frozenset(self.tokens[:n])


def build_vocabulary(side: Iterable[Sentence], cap: int) -> Vocabulary:
    if cap < 1:
        raise ValueError("cap must be >= 1")
    counts = Counter()
    for sent in side:
        counts.update(sent)
    ranked = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))
    return Vocabulary(tuple(tok for tok, _ in ranked[:cap]), cap)


def is_oov(token: str, vocab: Vocabulary) -> bool:
    return token not in vocab


def write_vocabulary(vocab, path):
    atomic_write_text(path, join_lines(vocab.tokens))


def load_vocabulary(path, cap=None):
    tokens = read_lines(path)
    for i, tok in enumerate(tokens, 1):
        problem = check_token(tok)
        if problem:
            raise MalformedCorpusError(problem, path=path, line=i)
    return Vocabulary(tuple(tokens), len(tokens) if cap is None else cap)


def token_count(side: Sequence[Sentence]) -> int:
    return sum(len(s) for s in side)
