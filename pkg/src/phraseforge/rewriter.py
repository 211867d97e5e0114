"""Replace selected phrase pairs with numbered placeholder tokens and back.

Placeholders are numbered 1..k by the position of their source phrase, and
the same literals (``<T1>``, ``<T2>``, ...) are reused in every sentence pair.
"""

import logging
from dataclasses import dataclass
from typing import Dict, Optional, Sequence, Tuple

from ._io import atomic_write_text, join_lines, read_lines
from .corpus import DEFAULT_TOKEN_TEMPLATE, placeholder_pattern
from .errors import MissingTranslationError, OverlapError, ParseError, TokenCollisionError

log = logging.getLogger(__name__)

TOKENMAP_HEADER = "#phraseforge-tokenmap 1"
UNIT_SEP = "\x1f"


@dataclass(frozen=True)
class TokenEntry:
    index: int
    source: Tuple[str, ...]
    target: Tuple[str, ...]


@dataclass(frozen=True)
class TokenMap:
    entries: Tuple[TokenEntry, ...] = ()
    template: str = DEFAULT_TOKEN_TEMPLATE

    def __post_init__(self):
        object.__setattr__(self, "entries", tuple(self.entries))
        if [e.index for e in self.entries] != list(range(1, len(self.entries) + 1)):
            raise ValueError("token indices must run 1..k in order")

    def __len__(self):
        return len(self.entries)

    def literal(self, index):
        return self.template.format(index)

    def translations(self) -> Dict[int, Tuple[str, ...]]:
        return {e.index: e.target for e in self.entries}


def _spans_of(item):
    cand = getattr(item, "candidate", item)
    return cand.src_start, cand.src_len, cand.tgt_start, cand.tgt_len


def _check_disjoint(spans, side, length):
    spans = sorted(spans)
    for start, n in spans:
        if start < 0 or n < 1 or start + n > length:
            raise OverlapError(f"{side} span ({start},{n}) outside sentence of length {length}")
    for (a, an), (b, _) in zip(spans, spans[1:]):
        if b < a + an:
            raise OverlapError(f"overlapping {side} spans at positions {a} and {b}")


def find_placeholders(sentence, template=DEFAULT_TOKEN_TEMPLATE):
    """Indices of the placeholder literals in ``sentence``, in order."""
    pattern = placeholder_pattern(template)
    out = []
    for tok in sentence:
        m = pattern.fullmatch(tok)
        if m:
            out.append(int(m.group(1)))
    return out


def replace_with_tokens(pair, selected, template=DEFAULT_TOKEN_TEMPLATE):
    """Substitute each selected source/target span with its placeholder.

    Returns ``((new_source, new_target), token_map)``.
    """
    src, tgt = tuple(pair[0]), tuple(pair[1])
    pattern = placeholder_pattern(template)
    for side, sent in (("source", src), ("target", tgt)):
        hits = [t for t in sent if pattern.fullmatch(t)]
        if hits:
            raise TokenCollisionError(f"{side} sentence already contains placeholder {hits[0]!r}")
    spans = [_spans_of(p) for p in selected]
    _check_disjoint([(s, n) for s, n, _, _ in spans], "source", len(src))
    _check_disjoint([(t, m) for _, _, t, m in spans], "target", len(tgt))

    spans.sort()
    entries = []
    src_at, tgt_at = {}, {}
    for index, (s, n, t, m) in enumerate(spans, 1):
        entries.append(TokenEntry(index, src[s:s + n], tgt[t:t + m]))
        src_at[s] = (index, n)
        tgt_at[t] = (index, m)

    def rewrite(sent, at):
        out, i = [], 0
        while i < len(sent):
            if i in at:
                index, n = at[i]
                out.append(template.format(index))
                i += n
            else:
                out.append(sent[i])
                i += 1
        return tuple(out)

    return (rewrite(src, src_at), rewrite(tgt, tgt_at)), TokenMap(tuple(entries), template)


def restore_tokens(translated, token_map, translations: Optional[Dict[int, Sequence[str]]] = None):
    """Expand placeholders in ``translated`` into phrase translations.

    ``translations`` defaults to the target phrases recorded in ``token_map``.
    Raises :class:`MissingTranslationError` for placeholders without an entry.
    """
    if translations is None:
        translations = token_map.translations()
    pattern = placeholder_pattern(token_map.template)
    out, used, missing = [], set(), set()
    for tok in translated:
        m = pattern.fullmatch(tok)
        if m is None:
            out.append(tok)
            continue
        index = int(m.group(1))
        if index not in translations:
            missing.add(index)
            continue
        used.add(index)
        out.extend(translations[index])
    if missing:
        raise MissingTranslationError(missing)
    unused = sorted(set(translations) - used)
    if unused:
        log.warning("translations never used for token indices %s", unused)
    return tuple(out)


def prepare_training_corpus(corpus, selections, template=DEFAULT_TOKEN_TEMPLATE):
    """Apply :func:`replace_with_tokens` to every pair of ``corpus``."""
    if len(selections) != len(corpus):
        raise ValueError(f"{len(selections)} selections for {len(corpus)} sentence pairs")
    pairs, maps = [], []
    for i, (pair, sel) in enumerate(zip(corpus, selections)):
        try:
            new_pair, tmap = replace_with_tokens(pair, sel, template)
        except (OverlapError, TokenCollisionError) as exc:
            raise type(exc)(f"sentence {i}: {exc}") from exc
        pairs.append(new_pair)
        maps.append(tmap)
    return corpus.with_pairs(pairs), maps


def format_token_map(token_map):
    return UNIT_SEP.join(
        f"{e.index}\t{' '.join(e.source)}\t{' '.join(e.target)}" for e in token_map.entries
    )


def write_token_maps(maps, path):
    atomic_write_text(path, join_lines([TOKENMAP_HEADER] + [format_token_map(m) for m in maps]))


def load_token_maps(path, template=DEFAULT_TOKEN_TEMPLATE):
    lines = read_lines(path)
    if not lines or lines[0] != TOKENMAP_HEADER:
        raise ParseError("missing token map header", path, 1)
    maps = []
    for lineno, line in enumerate(lines[1:], 2):
        entries = []
        for chunk in line.split(UNIT_SEP) if line else []:
            fields = chunk.split("\t")
            if len(fields) != 3 or not fields[0].isdigit():
                raise ParseError("bad token map entry", path, lineno, chunk)
            entries.append(TokenEntry(int(fields[0]), tuple(fields[1].split(" ")),
                                      tuple(fields[2].split(" "))))
        try:
            maps.append(TokenMap(tuple(entries), template))
        except ValueError as exc:
            raise ParseError(str(exc), path, lineno) from None
    return maps
