"""N-gram frequencies, adjacency contexts and branching entropy.

Counting works on integer-encoded tokens. Token ids are assigned in sorted
string order (after the two sentinels), so the result does not depend on the
order of sentences. An n-gram is identified by the id of its (n-1)-prefix and
its last token; one ``np.unique`` per length turns those composite keys into
dense phrase ids, and two more produce the left/right context tables.
"""

import logging
import math
from collections import defaultdict

import numpy as np

from ._io import atomic_write_text
from .corpus import BOS, EOS
from .errors import MalformedCorpusError, ParseError, PhraseNotFound

log = logging.getLogger(__name__)

FORMAT_NAME = "phraseforge-ngram-stats"
FORMAT_VERSION = 1

BOS_ID = 0
EOS_ID = 1

SUBSTRING_POLICIES = ("all", "inner")

# Entropies closer than this (bits) compare as equal. Identical context
# distributions can otherwise differ in the last ulp depending on summation
# order, which would make "greater than the bound" flip on exact ties.
TIE_TOLERANCE = 1e-9


def exceeds(h, bound):
    """``h > bound`` with ties up to :data:`TIE_TOLERANCE` counted as equal."""
    return h > bound + TIE_TOLERANCE


class _Level:
    """Tables for all phrases of one length.

    ``keys`` is sorted; the position of a key is the phrase id. Context keys
    are ``phrase_id * width + context_token_id``, sorted, so each phrase owns a
    contiguous slice delimited by ``*_start``.
    """

    __slots__ = ("keys", "freq", "left_keys", "left_counts", "left_start",
                 "right_keys", "right_counts", "right_start", "_h_left", "_h_right")

    def __init__(self, keys, freq, left_keys, left_counts, right_keys, right_counts, width):
        self.keys = keys
        self.freq = freq
        bounds = np.arange(len(keys) + 1, dtype=np.int64) * width
        self.left_keys = left_keys
        self.left_counts = left_counts
        self.left_start = np.searchsorted(left_keys, bounds)
        self.right_keys = right_keys
        self.right_counts = right_counts
        self.right_start = np.searchsorted(right_keys, bounds)
        self._h_left = None
        self._h_right = None


def _entropy_table(ctx_keys, ctx_counts, freq, width):
    phrase = ctx_keys // width
    p = ctx_counts / freq[phrase]
    h = np.bincount(phrase, weights=-p * np.log2(p), minlength=len(freq))
    n_ctx = np.bincount(phrase, minlength=len(freq))
    h[n_ctx == 1] = 0.0
    return h


class NgramStatistics:
    """Phrase frequencies and left/right context counts up to ``max_len`` tokens.

    Sentence edges contribute the sentinel contexts ``<s>`` (left) and
    ``</s>`` (right), so the context counts of every phrase sum to its
    frequency. Instances are immutable once built.
    """

    sentinel_policy = "bos-eos"

    def __init__(self, max_len, vocab, levels, num_sentences=0, num_tokens=0):
        self.max_len = max_len
        self._id_to_token = list(vocab)
        self._token_to_id = {tok: i for i, tok in enumerate(self._id_to_token)}
        self._width = len(self._id_to_token)
        self._levels = levels
        self.num_sentences = num_sentences
        self.num_tokens = num_tokens
        self._id_cache = {}

    # -- lookup -------------------------------------------------------------

    def _phrase_id(self, phrase):
        phrase = tuple(phrase)
        cached = self._id_cache.get(phrase)
        if cached is not None:
            return cached
        pid = -1
        n = len(phrase)
        if 1 <= n <= self.max_len and n <= len(self._levels):
            pid = 0
            for depth, tok in enumerate(phrase):
                tid = self._token_to_id.get(tok)
                if tid is None or tid < 2:
                    pid = -1
                    break
                key = tid if depth == 0 else pid * self._width + tid
                keys = self._levels[depth].keys
                idx = int(np.searchsorted(keys, key))
                if idx == len(keys) or keys[idx] != key:
                    pid = -1
                    break
                pid = idx
        self._id_cache[phrase] = pid
        return pid

    def _locate(self, phrase):
        pid = self._phrase_id(phrase)
        if pid < 0:
            raise PhraseNotFound(phrase)
        return self._levels[len(phrase) - 1], pid

    def __contains__(self, phrase):
        return self._phrase_id(phrase) >= 0

    def frequency(self, phrase):
        level, pid = self._locate(phrase)
        return int(level.freq[pid])

    def _contexts(self, keys, counts, start, pid):
        lo, hi = start[pid], start[pid + 1]
        ids = keys[lo:hi] - pid * self._width
        return {self._id_to_token[int(i)]: int(c) for i, c in zip(ids, counts[lo:hi])}

    def left_contexts(self, phrase):
        """Mapping left-neighbour token -> count for ``phrase``."""
        level, pid = self._locate(phrase)
        return self._contexts(level.left_keys, level.left_counts, level.left_start, pid)

    def right_contexts(self, phrase):
        level, pid = self._locate(phrase)
        return self._contexts(level.right_keys, level.right_counts, level.right_start, pid)

    def entropy_left(self, phrase):
        level, pid = self._locate(phrase)
        if level._h_left is None:
            level._h_left = _entropy_table(level.left_keys, level.left_counts,
                                           level.freq, self._width)
        return float(level._h_left[pid])

    def entropy_right(self, phrase):
        level, pid = self._locate(phrase)
        if level._h_right is None:
            level._h_right = _entropy_table(level.right_keys, level.right_counts,
                                            level.freq, self._width)
        return float(level._h_right[pid])

    # -- enumeration --------------------------------------------------------

    def _token_matrices(self):
        mats = []
        for depth, level in enumerate(self._levels):
            if depth == 0:
                mats.append(level.keys.reshape(-1, 1))
            else:
                prefix = level.keys // self._width
                last = level.keys % self._width
                mats.append(np.hstack([mats[-1][prefix], last.reshape(-1, 1)]))
        return mats

    def phrases(self, length=None):
        """Yield every counted phrase (as a token tuple), shortest first."""
        names = self._id_to_token
        for depth, mat in enumerate(self._token_matrices()):
            if length is not None and depth + 1 != length:
                continue
            for row in mat.tolist():
                yield tuple(names[i] for i in row)

    def __len__(self):
        return sum(len(level.keys) for level in self._levels)

    def __iter__(self):
        return self.phrases()

    @property
    def phrase_freq(self):
        """Materialized ``phrase -> count`` dict; intended for small corpora."""
        out = {}
        for depth, phrases in enumerate(self._grouped_phrases()):
            for phrase, f in zip(phrases, self._levels[depth].freq.tolist()):
                out[phrase] = f
        return out

    @property
    def left_ctx(self):
        return {p: self.left_contexts(p) for p in self.phrases()}

    @property
    def right_ctx(self):
        return {p: self.right_contexts(p) for p in self.phrases()}

    def _grouped_phrases(self):
        names = self._id_to_token
        return [[tuple(names[i] for i in row) for row in mat.tolist()]
                for mat in self._token_matrices()]

    def records(self):
        """Yield ``(phrase, freq, left_contexts, right_contexts)`` in a stable order."""
        for depth, phrases in enumerate(self._grouped_phrases()):
            level = self._levels[depth]
            for pid, phrase in enumerate(phrases):
                yield (
                    phrase,
                    int(level.freq[pid]),
                    self._contexts(level.left_keys, level.left_counts, level.left_start, pid),
                    self._contexts(level.right_keys, level.right_counts, level.right_start, pid),
                )


def _encode(side):
    index = defaultdict()
    index.default_factory = index.__len__
    ids = []
    lengths = []
    lookup = index.__getitem__
    for sent in side:
        lengths.append(len(sent))
        ids.extend(map(lookup, sent))
    for sentinel in (BOS, EOS):
        if sentinel in index:
            raise MalformedCorpusError(f"reserved sentinel {sentinel!r} used as a token")
    tokens = sorted(index)
    remap = np.empty(len(tokens), dtype=np.int64)
    for new, tok in enumerate(tokens, 2):
        remap[index[tok]] = new
    flat = remap[np.asarray(ids, dtype=np.int64)] if ids else np.zeros(0, dtype=np.int64)
    return [BOS, EOS] + tokens, flat, np.asarray(lengths, dtype=np.int64)


def count_ngrams(side, max_len):
    """Count every contiguous phrase of 1..``max_len`` tokens in ``side``.

    Overlapping occurrences are all counted. Each occurrence also tallies its
    left and right neighbour, using ``<s>``/``</s>`` at sentence edges.
    """
    if max_len < 1:
        raise ValueError("max_len must be >= 1")
    vocab, toks, lengths = _encode(side)
    width = len(vocab)
    total = len(toks)
    ends = np.cumsum(lengths)
    starts = ends - lengths
    send = np.repeat(ends, lengths)
    sstart = np.repeat(starts, lengths)
    pos = np.arange(total, dtype=np.int64)
    left = np.where(pos == sstart, BOS_ID, toks[pos - 1] if total else pos)

    levels = []
    vpos = pos
    prev = None
    for n in range(1, max_len + 1):
        if n == 1:
            key = toks
        else:
            keep = vpos + n <= send[vpos]
            vpos = vpos[keep]
            key = prev[keep] * width + toks[vpos + n - 1]
        if len(key) == 0:
            break
        keys, pid, freq = np.unique(key, return_inverse=True, return_counts=True)
        pid = pid.reshape(-1)
        lkeys, lcounts = np.unique(pid * width + left[vpos], return_counts=True)
        rpos = vpos + n
        rtok = np.where(rpos < send[vpos], toks[np.minimum(rpos, total - 1)], EOS_ID)
        rkeys, rcounts = np.unique(pid * width + rtok, return_counts=True)
        levels.append(_Level(keys, freq, lkeys, lcounts, rkeys, rcounts, width))
        prev = pid
    log.debug("counted %d tokens, %d phrase types", total, sum(len(lv.keys) for lv in levels))
    return NgramStatistics(max_len, vocab, levels, len(lengths), total)


def branching_entropy_left(stats, phrase):
    """Entropy in bits of the left-neighbour distribution of ``phrase``."""
    return stats.entropy_left(phrase)


def branching_entropy_right(stats, phrase):
    """Entropy in bits of the right-neighbour distribution of ``phrase``."""
    return stats.entropy_right(phrase)


def proper_substrings(phrase):
    """Yield ``(start, end)`` for every proper contiguous substring."""
    n = len(phrase)
    for length in range(1, n):
        for start in range(n - length + 1):
            yield start, start + length


def is_entropy_boundary(stats, phrase, lower_bound, substrings="all"):
    """Whether ``phrase`` has both entropies above ``lower_bound`` while its
    proper substrings stay at or below it.

    With ``substrings="all"`` every proper substring must have both its left
    and right entropy <= the bound. ``"inner"`` only checks the sides of a
    substring that face the inside of ``phrase``.
    """
    if substrings not in SUBSTRING_POLICIES:
        raise ValueError(f"unknown substring policy {substrings!r}")
    phrase = tuple(phrase)
    if not (exceeds(stats.entropy_left(phrase), lower_bound)
            and exceeds(stats.entropy_right(phrase), lower_bound)):
        return False
    n = len(phrase)
    for i, j in proper_substrings(phrase):
        sub = phrase[i:j]
        check_left = substrings == "all" or i > 0
        check_right = substrings == "all" or j < n
        if check_left and exceeds(stats.entropy_left(sub), lower_bound):
            return False
        if check_right and exceeds(stats.entropy_right(sub), lower_bound):
            return False
    return True


def entropy_direct(counts):
    """Reference entropy (bits) of a count mapping, summed term by term."""
    total = sum(counts.values())
    if len(counts) <= 1:
        return 0.0
    return -sum((c / total) * math.log2(c / total) for c in counts.values())


# -- serialization -----------------------------------------------------------

def _format_contexts(ctx):
    return " ".join(f"{tok} {count}" for tok, count in ctx.items())


def dump_statistics(stats, path):
    """Write ``stats`` as a versioned, line-oriented text file.

    Layout::

        #phraseforge-ngram-stats 1
        #max_len <n>
        #sentinels <s> </s>
        #sentences <count>
        #tokens <count>
        <phrase>\\t<freq>\\t<left: tok count ...>\\t<right: tok count ...>

    Records are ordered by phrase length, then by token id sequence.
    """
    lines = [
        f"#{FORMAT_NAME} {FORMAT_VERSION}",
        f"#max_len {stats.max_len}",
        f"#sentinels {BOS} {EOS}",
        f"#sentences {stats.num_sentences}",
        f"#tokens {stats.num_tokens}",
    ]
    for phrase, freq, lctx, rctx in stats.records():
        lines.append("\t".join((" ".join(phrase), str(freq),
                                _format_contexts(lctx), _format_contexts(rctx))))
    atomic_write_text(path, "\n".join(lines) + "\n")


def _parse_contexts(field, path, lineno):
    parts = field.split(" ") if field else []
    if len(parts) % 2:
        raise ParseError("odd number of context fields", path, lineno)
    try:
        return [(parts[i], int(parts[i + 1])) for i in range(0, len(parts), 2)]
    except ValueError as exc:
        raise ParseError(f"bad context count: {exc}", path, lineno) from None


def load_statistics(path):
    with open(path, encoding="utf-8") as fh:
        lines = fh.read().split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    header = {}
    body_start = 0
    for i, line in enumerate(lines):
        if not line.startswith("#"):
            body_start = i
            break
        name, _, value = line[1:].partition(" ")
        header[name] = value
    else:
        body_start = len(lines)
    if header.get(FORMAT_NAME) != str(FORMAT_VERSION):
        raise ParseError(f"not a {FORMAT_NAME} v{FORMAT_VERSION} file", path, 1)
    if header.get("sentinels") != f"{BOS} {EOS}":
        raise ParseError("unsupported sentinel policy", path)
    max_len = int(header["max_len"])

    records = []
    tokens = set()
    for lineno, line in enumerate(lines[body_start:], body_start + 1):
        fields = line.split("\t")
        if len(fields) != 4:
            raise ParseError(f"expected 4 fields, got {len(fields)}", path, lineno)
        phrase = tuple(fields[0].split(" "))
        try:
            freq = int(fields[1])
        except ValueError:
            raise ParseError("bad frequency", path, lineno, fields[1]) from None
        lctx = _parse_contexts(fields[2], path, lineno)
        rctx = _parse_contexts(fields[3], path, lineno)
        if len(phrase) == 1:
            tokens.add(phrase[0])
        records.append((phrase, freq, lctx, rctx))

    vocab = [BOS, EOS] + sorted(tokens)
    tid = {tok: i for i, tok in enumerate(vocab)}
    width = len(vocab)
    by_len = defaultdict(list)
    for rec in records:
        by_len[len(rec[0])].append(rec)

    levels = []
    prev_ids = {}
    for n in range(1, max(by_len, default=0) + 1):
        recs = by_len.get(n)
        if not recs:
            break
        keyed = []
        for rec in recs:
            phrase = rec[0]
            try:
                last = tid[phrase[-1]]
                key = last if n == 1 else prev_ids[phrase[:-1]] * width + last
            except KeyError:
                raise ParseError("phrase without counted prefix", path, token=" ".join(phrase)) from None
            keyed.append((key, rec))
        keyed.sort(key=lambda kr: kr[0])
        ids = {}
        keys, freq, lk, lc, rk, rc = [], [], [], [], [], []
        for pid, (key, (phrase, f, lctx, rctx)) in enumerate(keyed):
            ids[phrase] = pid
            keys.append(key)
            freq.append(f)
            for tok, c in lctx:
                lk.append(pid * width + tid[tok])
                lc.append(c)
            for tok, c in rctx:
                rk.append(pid * width + tid[tok])
                rc.append(c)
        lk, lc = np.asarray(lk, dtype=np.int64), np.asarray(lc, dtype=np.int64)
        rk, rc = np.asarray(rk, dtype=np.int64), np.asarray(rc, dtype=np.int64)
        lo, ro = np.argsort(lk, kind="stable"), np.argsort(rk, kind="stable")
        levels.append(_Level(np.asarray(keys, dtype=np.int64), np.asarray(freq, dtype=np.int64),
                             lk[lo], lc[lo], rk[ro], rc[ro], width))
        prev_ids = ids
    return NgramStatistics(max_len, vocab, levels,
                           int(header.get("sentences", 0)), int(header.get("tokens", 0)))
