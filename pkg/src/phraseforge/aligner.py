"""Phrase tables, word alignments and candidate phrase-pair proposal."""

from collections import defaultdict
from dataclasses import dataclass
from typing import Dict, FrozenSet, Iterable, Optional, Tuple

from ._io import atomic_write_text, join_lines, read_lines
from .errors import ParseError

FIELD_SEP = " ||| "

PHRASE_TABLE = "phrase-table"
ALIGNMENT = "alignment"

Phrase = Tuple[str, ...]


class PhraseTable:
    """Source phrase -> target phrases ranked by descending score.

    Ties in score are ordered by target phrase so that the ranking does not
    depend on input line order. A repeated (source, target) pair keeps its
    highest score.
    """

    def __init__(self, entries: Optional[Dict[Phrase, Iterable[Tuple[Phrase, float]]]] = None):
        best: Dict[Phrase, Dict[Phrase, float]] = defaultdict(dict)
        for src, options in (entries or {}).items():
            for tgt, score in options:
                self._add(best, tuple(src), tuple(tgt), float(score))
        self._entries = self._rank(best)

    @staticmethod
    def _add(best, src, tgt, score):
        if not src or not tgt:
            raise ValueError("phrase table entries must be non-empty")
        slot = best[src]
        if tgt not in slot or score > slot[tgt]:
            slot[tgt] = score

    @staticmethod
    def _rank(best):
        return {
            src: tuple(sorted(opts.items(), key=lambda kv: (-kv[1], kv[0])))
            for src, opts in best.items()
        }

    @classmethod
    def from_triples(cls, triples):
        table = cls()
        best = defaultdict(dict)
        for src, tgt, score in triples:
            cls._add(best, tuple(src), tuple(tgt), float(score))
        table._entries = cls._rank(best)
        return table

    def __contains__(self, src):
        return tuple(src) in self._entries

    def __len__(self):
        return len(self._entries)

    def __eq__(self, other):
        return isinstance(other, PhraseTable) and self._entries == other._entries

    def get(self, src):
        return self._entries.get(tuple(src), ())

    def best(self, src):
        """Highest-scoring target phrase for ``src``, or None."""
        opts = self._entries.get(tuple(src))
        return opts[0][0] if opts else None

    def items(self):
        return self._entries.items()

    @property
    def entries(self):
        return dict(self._entries)

    @property
    def max_source_len(self):
        return max((len(s) for s in self._entries), default=0)

    def triples(self):
        for src in sorted(self._entries):
            for tgt, score in self._entries[src]:
                yield src, tgt, score


def load_phrase_table(path):
    """Parse a ``src ||| tgt ||| scores ...`` file; the first score ranks."""
    best = defaultdict(dict)
    for lineno, line in enumerate(read_lines(path), 1):
        fields = line.split(FIELD_SEP)
        if len(fields) < 3:
            raise ParseError(f"expected at least 3 '|||' fields, got {len(fields)}", path, lineno)
        src, tgt, scores = fields[0].strip(), fields[1].strip(), fields[2].split()
        if not src or not tgt:
            raise ParseError("empty phrase", path, lineno)
        if not scores:
            raise ParseError("missing score", path, lineno)
        try:
            score = float(scores[0])
        except ValueError:
            raise ParseError("non-numeric score", path, lineno, scores[0]) from None
        src_toks, tgt_toks = tuple(src.split(" ")), tuple(tgt.split(" "))
        if "" in src_toks or "" in tgt_toks:
            raise ParseError("empty token in phrase", path, lineno)
        PhraseTable._add(best, src_toks, tgt_toks, score)
    table = PhraseTable()
    table._entries = PhraseTable._rank(best)
    return table


def write_phrase_table(table, path):
    atomic_write_text(path, join_lines(
        f"{' '.join(src)}{FIELD_SEP}{' '.join(tgt)}{FIELD_SEP}{score!r}"
        for src, tgt, score in table.triples()
    ))


WordAlignment = FrozenSet[Tuple[int, int]]


def parse_alignment_line(line, path=None, lineno=None) -> WordAlignment:
    links = set()
    for tok in line.split():
        i, sep, j = tok.partition("-")
        if not sep or not i.isdigit() or not j.isdigit():
            raise ParseError("bad alignment link", path, lineno, tok)
        links.add((int(i), int(j)))
    return frozenset(links)


def format_alignment(links):
    return " ".join(f"{i}-{j}" for i, j in sorted(links))


def load_word_alignment(path):
    return [parse_alignment_line(line, path, n) for n, line in enumerate(read_lines(path), 1)]


def write_word_alignment(alignments, path):
    atomic_write_text(path, join_lines(format_alignment(a) for a in alignments))


def check_alignment_bounds(links, src_len, tgt_len):
    for i, j in links:
        if not (0 <= i < src_len and 0 <= j < tgt_len):
            raise ParseError(f"alignment link {i}-{j} outside a {src_len}x{tgt_len} sentence pair")


@dataclass(frozen=True)
class CandidatePair:
    src_start: int
    src_len: int
    tgt_start: int
    tgt_len: int
    source: Phrase
    target: Phrase
    provenance: FrozenSet[str]

    @property
    def src_end(self):
        return self.src_start + self.src_len

    @property
    def tgt_end(self):
        return self.tgt_start + self.tgt_len

    @property
    def spans(self):
        return (self.src_start, self.src_len, self.tgt_start, self.tgt_len)

    @property
    def provenance_label(self):
        return "+".join(sorted(self.provenance))


def _ngram_positions(tokens, max_len):
    index = defaultdict(list)
    for i in range(len(tokens)):
        for n in range(1, min(max_len, len(tokens) - i) + 1):
            index[tuple(tokens[i:i + n])].append(i)
    return index


def consistent_span_pairs(links, src_len, tgt_len, max_len):
    """Yield ``(src_start, src_len, tgt_start, tgt_len)`` for alignment-consistent
    span pairs: at least one link inside, none crossing the rectangle edge."""
    if not links:
        return
    by_src = defaultdict(list)
    tgt_aligned = [False] * tgt_len
    src_of_tgt = defaultdict(list)
    for i, j in links:
        by_src[i].append(j)
        src_of_tgt[j].append(i)
        tgt_aligned[j] = True
    for s0 in range(src_len):
        tmin, tmax = tgt_len, -1
        for s1 in range(s0, min(src_len, s0 + max_len)):
            for j in by_src.get(s1, ()):
                tmin = min(tmin, j)
                tmax = max(tmax, j)
            if tmax < 0 or tmax - tmin + 1 > max_len:
                continue
            if any(not (s0 <= i <= s1) for j in range(tmin, tmax + 1) for i in src_of_tgt.get(j, ())):
                continue
            lo = tmin
            while lo > 0 and not tgt_aligned[lo - 1] and tmax - (lo - 1) + 1 <= max_len:
                lo -= 1
            for ts in range(tmin, lo - 1, -1):
                te = tmax
                while True:
                    if te - ts + 1 > max_len:
                        break
                    yield s0, s1 - s0 + 1, ts, te - ts + 1
                    if te + 1 >= tgt_len or tgt_aligned[te + 1]:
                        break
                    te += 1


def align_candidates(pair, table, alignment=None, max_len=7):
    """Propose aligned span pairs for one sentence pair.

    A span pair qualifies when its phrases form a phrase-table entry, or when
    ``alignment`` is given and the pair is alignment-consistent. Output is
    ordered by (source start, source length, target start, target length).
    """
    if max_len < 1:
        raise ValueError("max_len must be >= 1")
    src, tgt = tuple(pair[0]), tuple(pair[1])
    found = defaultdict(set)

    if table is not None and len(table):
        tgt_index = _ngram_positions(tgt, max_len)
        for i in range(len(src)):
            for n in range(1, min(max_len, len(src) - i) + 1):
                for tgt_phrase, _ in table.get(src[i:i + n]):
                    if len(tgt_phrase) > max_len:
                        continue
                    for j in tgt_index.get(tgt_phrase, ()):
                        found[(i, n, j, len(tgt_phrase))].add(PHRASE_TABLE)

    if alignment is not None:
        check_alignment_bounds(alignment, len(src), len(tgt))
        for spans in consistent_span_pairs(alignment, len(src), len(tgt), max_len):
            found[spans].add(ALIGNMENT)

    return [
        CandidatePair(i, n, j, m, src[i:i + n], tgt[j:j + m], frozenset(prov))
        for (i, n, j, m), prov in sorted(found.items())
    ]
