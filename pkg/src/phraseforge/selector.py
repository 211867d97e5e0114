"""Phrase-pair selection with the OOV, stop-word and branching-entropy tests."""

import logging
import multiprocessing
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import FrozenSet, List, Optional, Sequence

from ._io import atomic_write_text, read_lines
from .aligner import CandidatePair, align_candidates
from .corpus import is_oov
from .errors import CorpusAlignmentError, ParseError, PhraseNotFound
from .stats import SUBSTRING_POLICIES, is_entropy_boundary

log = logging.getLogger(__name__)

REPORT_HEADER = "#phraseforge-selection 1"
REPORT_COLUMNS = ("sentence", "src_start", "src_len", "tgt_start", "tgt_len",
                  "source", "target", "h_left_src", "h_right_src",
                  "h_left_tgt", "h_right_tgt", "provenance")


@dataclass(frozen=True)
class SelectionConfig:
    max_phrase_len: int = 7
    entropy_lower_bound: float = 5.0
    stop_words_src: FrozenSet[str] = frozenset()
    stop_words_tgt: FrozenSet[str] = frozenset()
    substring_check: str = "all"

    def __post_init__(self):
        if self.max_phrase_len < 1:
            raise ValueError("max_phrase_len must be >= 1")
        if self.entropy_lower_bound < 0:
            raise ValueError("entropy_lower_bound must be >= 0")
        if self.substring_check not in SUBSTRING_POLICIES:
            raise ValueError(f"substring_check must be one of {SUBSTRING_POLICIES}")
        object.__setattr__(self, "stop_words_src", frozenset(self.stop_words_src))
        object.__setattr__(self, "stop_words_tgt", frozenset(self.stop_words_tgt))


@dataclass(frozen=True)
class PhrasePair:
    candidate: CandidatePair
    h_left_src: float
    h_right_src: float
    h_left_tgt: float
    h_right_tgt: float
    contains_oov: bool = True

    @property
    def source(self):
        return self.candidate.source

    @property
    def target(self):
        return self.candidate.target

    @property
    def src_start(self):
        return self.candidate.src_start

    @property
    def src_len(self):
        return self.candidate.src_len

    @property
    def tgt_start(self):
        return self.candidate.tgt_start

    @property
    def tgt_len(self):
        return self.candidate.tgt_len


def load_stop_words(path):
    return frozenset(tok for tok in read_lines(path) if tok)


def _overlaps(a_start, a_len, b_start, b_len):
    return a_start < b_start + b_len and b_start < a_start + a_len


def resolve_overlaps(pairs):
    """Greedy overlap removal: longer source span, then leftmost, then longer
    target span wins. Survivors come back ordered by source start."""
    ranked = sorted(pairs, key=lambda p: (-p.src_len, p.src_start, -p.tgt_len, p.tgt_start))
    kept = []
    for p in ranked:
        if any(_overlaps(p.src_start, p.src_len, q.src_start, q.src_len)
               or _overlaps(p.tgt_start, p.tgt_len, q.tgt_start, q.tgt_len) for q in kept):
            continue
        kept.append(p)
    kept.sort(key=lambda p: (p.src_start, p.tgt_start))
    return kept


def filter_candidates(candidates, stats_src, stats_tgt, vocab_src, vocab_tgt, cfg,
                      diagnostics: Optional[list] = None) -> List[PhrasePair]:
    """Candidates passing the OOV, stop-word and entropy-boundary tests.

    Candidates whose phrases were never counted in the statistics cannot pass
    the entropy test; they are skipped and noted in ``diagnostics``.
    """
    bound = cfg.entropy_lower_bound
    chosen = []
    for cand in candidates:
        if cand.src_len > cfg.max_phrase_len or cand.tgt_len > cfg.max_phrase_len:
            continue
        if not (any(is_oov(t, vocab_src) for t in cand.source)
                or any(is_oov(t, vocab_tgt) for t in cand.target)):
            continue
        if (any(t in cfg.stop_words_src for t in cand.source)
                or any(t in cfg.stop_words_tgt for t in cand.target)):
            continue
        try:
            if not (is_entropy_boundary(stats_src, cand.source, bound, cfg.substring_check)
                    and is_entropy_boundary(stats_tgt, cand.target, bound, cfg.substring_check)):
                continue
        except PhraseNotFound as exc:
            msg = f"dropped candidate {cand.spans}: {exc}"
            log.debug(msg)
            if diagnostics is not None:
                diagnostics.append(msg)
            continue
        chosen.append(PhrasePair(
            cand,
            stats_src.entropy_left(cand.source), stats_src.entropy_right(cand.source),
            stats_tgt.entropy_left(cand.target), stats_tgt.entropy_right(cand.target),
        ))
    return chosen


def select_phrase_pairs(pair, candidates, stats_src, stats_tgt, vocab_src, vocab_tgt, cfg,
                        diagnostics: Optional[list] = None) -> List[PhrasePair]:
    """Selected, non-overlapping phrase pairs of one sentence pair, by source position."""
    return resolve_overlaps(filter_candidates(candidates, stats_src, stats_tgt,
                                              vocab_src, vocab_tgt, cfg, diagnostics))


@dataclass(frozen=True)
class Inventory:
    """Occurrence and type counts of selected phrase pairs."""

    occurrences: int = 0
    pair_types: int = 0
    source_types: int = 0
    target_types: int = 0

    @classmethod
    def from_selections(cls, selections):
        pairs = [(p.source, p.target) for sel in selections for p in sel]
        return cls(
            occurrences=len(pairs),
            pair_types=len(set(pairs)),
            source_types=len({s for s, _ in pairs}),
            target_types=len({t for _, t in pairs}),
        )

    def as_dict(self):
        return {
            "occurrences": self.occurrences,
            "pair_types": self.pair_types,
            "source_types": self.source_types,
            "target_types": self.target_types,
        }


@dataclass
class _MiningContext:
    corpus: object
    table: object
    alignments: Optional[Sequence]
    stats_src: object
    stats_tgt: object
    vocab_src: object
    vocab_tgt: object
    cfg: SelectionConfig
    diagnostics: list = field(default_factory=list)

    def select(self, index):
        pair = self.corpus[index]
        alignment = self.alignments[index] if self.alignments is not None else None
        cands = align_candidates(pair, self.table, alignment, self.cfg.max_phrase_len)
        return select_phrase_pairs(pair, cands, self.stats_src, self.stats_tgt,
                                   self.vocab_src, self.vocab_tgt, self.cfg, self.diagnostics)


_worker_ctx = None


def _mine_range(bounds):
    lo, hi = bounds
    return [_worker_ctx.select(i) for i in range(lo, hi)]


def _chunks(n, jobs):
    size = max(1, -(-n // (jobs * 4)))
    return [(lo, min(n, lo + size)) for lo in range(0, n, size)]


def mine_training_pairs(corpus, table, alignments, stats_src, stats_tgt, vocab_src, vocab_tgt,
                        cfg, jobs=1):
    """Select phrase pairs in every sentence pair of ``corpus``.

    Returns ``(selections, inventory)`` where ``selections[i]`` lists the
    pairs chosen in sentence pair ``i``. ``alignments`` may be None, in which
    case only the phrase table proposes candidates.
    """
    global _worker_ctx
    if alignments is not None and len(alignments) != len(corpus):
        raise CorpusAlignmentError(len(corpus), len(alignments))
    ctx = _MiningContext(corpus, table, alignments, stats_src, stats_tgt,
                         vocab_src, vocab_tgt, cfg)
    n = len(corpus)
    if jobs > 1 and n > 1 and "fork" in multiprocessing.get_all_start_methods():
        _worker_ctx = ctx
        try:
            with ProcessPoolExecutor(jobs, mp_context=multiprocessing.get_context("fork")) as pool:
                selections = [sel for part in pool.map(_mine_range, _chunks(n, jobs)) for sel in part]
        finally:
            _worker_ctx = None
    else:
        selections = [ctx.select(i) for i in range(n)]
    return selections, Inventory.from_selections(selections)


def _fmt(x):
    return repr(float(x))


def format_selection_report(selections):
    lines = [REPORT_HEADER, "\t".join(REPORT_COLUMNS)]
    for idx, sel in enumerate(selections):
        for p in sel:
            lines.append("\t".join((
                str(idx), str(p.src_start), str(p.src_len), str(p.tgt_start), str(p.tgt_len),
                " ".join(p.source), " ".join(p.target),
                _fmt(p.h_left_src), _fmt(p.h_right_src), _fmt(p.h_left_tgt), _fmt(p.h_right_tgt),
                p.candidate.provenance_label,
            )))
    return "\n".join(lines) + "\n"


def write_selection_report(selections, path):
    atomic_write_text(path, format_selection_report(selections))


def load_selection_report(path, corpus):
    """Rebuild per-pair selections from a report, checking spans against ``corpus``."""
    lines = read_lines(path)
    if len(lines) < 2 or lines[0] != REPORT_HEADER or tuple(lines[1].split("\t")) != REPORT_COLUMNS:
        raise ParseError("not a selection report", path, 1)
    selections = [[] for _ in range(len(corpus))]
    for lineno, line in enumerate(lines[2:], 3):
        f = line.split("\t")
        if len(f) != len(REPORT_COLUMNS):
            raise ParseError(f"expected {len(REPORT_COLUMNS)} fields", path, lineno)
        try:
            idx, ss, sl, ts, tl = (int(x) for x in f[:5])
            hs = [float(x) for x in f[7:11]]
        except ValueError:
            raise ParseError("bad numeric field", path, lineno) from None
        if not 0 <= idx < len(corpus):
            raise ParseError(f"sentence index {idx} out of range", path, lineno)
        src, tgt = corpus[idx]
        source, target = src[ss:ss + sl], tgt[ts:ts + tl]
        if " ".join(source) != f[5] or " ".join(target) != f[6] or ss < 0 or ts < 0:
            raise ParseError("span does not match corpus text", path, lineno)
        cand = CandidatePair(ss, sl, ts, tl, source, target, frozenset(f[11].split("+")))
        selections[idx].append(PhrasePair(cand, *hs))
    return selections
